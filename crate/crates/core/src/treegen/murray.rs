use crate::error::{Error, Result};
use crate::scalar::Real;

/// Splits `parent_radius` into two child radii carrying flow fractions `u`
/// and `1 - u` under the generalized Murray law `r1^γ + r2^γ = r^γ`.
pub fn sample_bifurcation<T: Real>(parent_radius: T, u: T, gamma: T) -> Result<(T, T)> {
    if !(u > T::zero() && u < T::one()) {
        return Err(Error::Domain(format!("flow split {u} is not in (0, 1)")));
    }
    if !(parent_radius > T::zero()) {
        return Err(Error::Domain(format!("parent radius {parent_radius} is not positive")));
    }
    if !(gamma > T::zero()) {
        return Err(Error::Domain(format!("murray exponent {gamma} is not positive")));
    }
    let inv = gamma.recip();
    Ok((
        parent_radius * u.powf(inv),
        parent_radius * (T::one() - u).powf(inv),
    ))
}

/// Relative deviation `|r1^γ + r2^γ - r^γ| / r^γ`.
pub fn murray_residual<T: Real>(parent_radius: T, r1: T, r2: T, gamma: T) -> T {
    let p = parent_radius.powf(gamma);
    ((r1.powf(gamma) + r2.powf(gamma)) - p).abs() / p
}

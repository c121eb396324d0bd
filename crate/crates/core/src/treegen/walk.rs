//! Biased random-walk segment trajectories.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{random_perpendicular, uniform, Vec3};
use crate::scalar::Real;
use crate::treegen::params::{GrowthParams, TURN_CAP_DEGREES};

/// A candidate centerline and the heading at its last point.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposedPath<T> {
    pub points: Vec<Vec3<T>>,
    pub end_direction: Vec3<T>,
}

/// Samples a length in `segment_length_range` and walks it from `tip`.
pub fn propose_segment<T: Real, R: Rng + ?Sized>(
    tip: Vec3<T>,
    direction: Vec3<T>,
    params: &GrowthParams<T>,
    rng: &mut R,
) -> ProposedPath<T> {
    let [lo, hi] = params.segment_length_range;
    let length = uniform(rng, lo, hi);
    walk_path(tip, direction, length, params, rng)
}

/// Walks `length` voxels from `tip` in sub-steps of `step_length`.
///
/// Before every sub-step the heading turns by `θ ~ U[0, τ·30°]` about an
/// axis perpendicular to it. The axis is a persistence-weighted blend of the
/// previous axis (projected back onto the plane normal to the heading) and
/// a fresh uniform draw, so turns accumulate into curvature instead of
/// cancelling out. Consecutive points are exactly `step_length` apart
/// except for a shorter final step.
pub fn walk_path<T: Real, R: Rng + ?Sized>(
    tip: Vec3<T>,
    direction: Vec3<T>,
    length: T,
    params: &GrowthParams<T>,
    rng: &mut R,
) -> ProposedPath<T> {
    let step = params.step_length;
    let kappa = params.persistence;
    let max_turn = params.tortuosity * T::lit(TURN_CAP_DEGREES.to_radians());

    let full_steps = (length / step).floor().to_usize().unwrap_or(0);
    let remainder = length - step * T::lit(full_steps as f64);
    let tail = remainder > step * T::lit(1e-9);
    let n_steps = full_steps + usize::from(tail);

    let mut points = Vec::with_capacity(n_steps + 1);
    points.push(tip);
    let mut d = direction.normalized();
    let mut p = tip;
    let mut prev_axis: Option<Vec3<T>> = None;
    for i in 0..n_steps {
        let fresh = random_perpendicular(rng, d);
        let axis = match prev_axis {
            Some(a) => (a.reject_from(d) * kappa + fresh * (T::one() - kappa))
                .try_normalize()
                .unwrap_or(fresh),
            None => fresh,
        };
        let theta = uniform(rng, T::zero(), max_turn);
        d = d.rotate_about(axis, theta).normalized();
        let h = if i < full_steps { step } else { remainder };
        p += d * h;
        points.push(p);
        prev_axis = Some(axis);
    }
    ProposedPath {
        points,
        end_direction: d,
    }
}

pub fn arc_length<T: Real>(polyline: &[Vec3<T>]) -> T {
    polyline
        .windows(2)
        .fold(T::zero(), |acc, w| acc + w[0].distance(w[1]))
}

/// Arc length over endpoint chord length.
pub fn measure_tortuosity<T: Real>(polyline: &[Vec3<T>]) -> Result<T> {
    if polyline.len() < 2 {
        return Err(Error::Domain("tortuosity needs at least two points".into()));
    }
    let chord = polyline[0].distance(polyline[polyline.len() - 1]);
    if !(chord > T::epsilon()) {
        return Err(Error::Domain("coincident endpoints: chord length is zero".into()));
    }
    Ok(arc_length(polyline) / chord)
}

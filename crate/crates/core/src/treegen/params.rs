use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Stochastic parameterization of tree growth. Lengths and radii are in
/// voxels, angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct GrowthParams<T> {
    pub domain_dims: [usize; 3],
    pub root_radius_range: [T; 2],
    /// Tips thinner than this stop growing.
    pub min_radius: T,
    pub segment_length_range: [T; 2],
    /// Random-walk sub-step.
    pub step_length: T,
    /// Scales the per-step turn cap; 0 gives straight segments.
    pub tortuosity: T,
    /// Weight of the previous turn axis when drawing the next one.
    pub persistence: T,
    pub branch_prob_base: T,
    /// Per-depth multiplier on the branching probability.
    pub branch_prob_decay: T,
    pub branch_angle_range: [T; 2],
    pub murray_exponent: T,
    pub flow_split_range: [T; 2],
    pub max_depth: u32,
    pub max_attempts: u32,
    pub collision_margin: T,
    /// Hard cap on committed segments; bounds non-branching random walks.
    pub max_segments: usize,
}

/// Turn cap per random-walk step at tortuosity 1.
pub const TURN_CAP_DEGREES: f64 = 30.0;

/// Widest heading deflection tried when re-drawing a rejected path.
pub const RETRY_CONE_DEGREES: f64 = 90.0;

/// Maximum deviation of the root direction from the inward face normal.
pub const ROOT_CONE_DEGREES: f64 = 15.0;

impl<T: Real> Default for GrowthParams<T> {
    fn default() -> Self {
        Self {
            domain_dims: [160, 160, 160],
            root_radius_range: [T::lit(3.0), T::lit(6.0)],
            min_radius: T::lit(0.5),
            segment_length_range: [T::lit(8.0), T::lit(24.0)],
            step_length: T::one(),
            tortuosity: T::zero(),
            persistence: T::lit(0.5),
            branch_prob_base: T::lit(0.9),
            branch_prob_decay: T::lit(0.85),
            branch_angle_range: [T::lit(20.0), T::lit(60.0)],
            murray_exponent: T::lit(3.0),
            flow_split_range: [T::lit(0.35), T::lit(0.65)],
            max_depth: 12,
            max_attempts: 10,
            collision_margin: T::lit(0.5),
            max_segments: 20_000,
        }
    }
}

fn ordered<T: Real>(name: &'static str, r: [T; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite()) || r[0] > r[1] {
        return Err(Error::param(name, format!("range [{}, {}] is not ordered", r[0], r[1])));
    }
    Ok(())
}

fn unit<T: Real>(name: &'static str, v: T) -> Result<()> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(Error::param(name, format!("{v} is outside [0, 1]")));
    }
    Ok(())
}

impl<T: Real> GrowthParams<T> {
    /// Defaults with the high-tortuosity walk.
    pub fn high_tortuosity() -> Self {
        Self {
            tortuosity: T::lit(0.6),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.domain_dims.iter().any(|&d| d == 0) {
            return Err(Error::param("domain_dims", "all dimensions must be positive"));
        }
        ordered("root_radius_range", self.root_radius_range)?;
        ordered("segment_length_range", self.segment_length_range)?;
        ordered("branch_angle_range", self.branch_angle_range)?;
        ordered("flow_split_range", self.flow_split_range)?;
        if !(self.root_radius_range[0] > T::zero()) {
            return Err(Error::param("root_radius_range", "radii must be positive"));
        }
        if !(self.segment_length_range[0] > T::zero()) {
            return Err(Error::param("segment_length_range", "lengths must be positive"));
        }
        if !(self.step_length > T::zero()) {
            return Err(Error::param("step_length", "must be positive"));
        }
        if !(self.min_radius >= T::zero()) {
            return Err(Error::param("min_radius", "must be non-negative"));
        }
        unit("tortuosity", self.tortuosity)?;
        unit("persistence", self.persistence)?;
        unit("branch_prob_base", self.branch_prob_base)?;
        unit("branch_prob_decay", self.branch_prob_decay)?;
        if self.branch_prob_decay == T::zero() {
            return Err(Error::param("branch_prob_decay", "must be in (0, 1]"));
        }
        if !(self.murray_exponent > T::zero()) {
            return Err(Error::param("murray_exponent", "must be positive"));
        }
        let [u_lo, u_hi] = self.flow_split_range;
        if !(u_lo > T::zero() && u_hi < T::one()) {
            return Err(Error::param("flow_split_range", "must lie inside (0, 1)"));
        }
        let [a_lo, a_hi] = self.branch_angle_range;
        if a_lo < T::zero() || a_hi > T::lit(180.0) {
            return Err(Error::param("branch_angle_range", "angles must lie in [0, 180]"));
        }
        if self.max_attempts == 0 {
            return Err(Error::param("max_attempts", "must be at least 1"));
        }
        if !(self.collision_margin >= T::zero()) {
            return Err(Error::param("collision_margin", "must be non-negative"));
        }
        Ok(())
    }

    /// Branching probability at bifurcation depth `depth`.
    pub fn branch_probability(&self, depth: u32) -> T {
        self.branch_prob_base * self.branch_prob_decay.powi(depth as i32)
    }
}

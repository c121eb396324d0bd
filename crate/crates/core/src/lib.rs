//! Procedural vascular tree synthesis and labeled angiography patch
//! generation.
//!
//! Geometry is generic over the scalar type through [`scalar::Real`]; the
//! aliases below fix it to `f64`, which is what the pipeline uses.

pub mod appearance;
pub mod components;
pub mod error;
pub mod geom;
pub mod manifest;
pub mod metrics;
pub mod nifti;
pub mod patchqc;
pub mod pipeline;
pub mod raster;
pub mod rng;
pub mod scalar;
pub mod treegen;
pub mod volume;

pub use error::{Error, Result};

pub type Vec3f = geom::Vec3<f64>;
pub type Params = treegen::GrowthParams<f64>;
pub type Tree = treegen::VesselTree<f64>;
pub type Index = treegen::OccupancyIndex<f64>;
pub type IntensityVolume = volume::Volume<f32>;
pub use volume::{Dims, MaskVolume};

/// Single-precision variants.
pub mod f32 {
    pub type Vec3f = crate::geom::Vec3<f32>;
    pub type Params = crate::treegen::GrowthParams<f32>;
    pub type Tree = crate::treegen::VesselTree<f32>;
}

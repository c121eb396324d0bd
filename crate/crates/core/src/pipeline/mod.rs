//! Dataset generation, evaluation and previews.

mod config;
mod evaluate;
mod generate;
mod preview;

pub use config::{dataset_growth, ClassCounts, DatasetConfig, FULL_TRAIN, FULL_VAL};
pub use evaluate::{evaluate, CaseReport, EvalReport, Summary};
pub use generate::{
    background_seed, generate_dataset, generate_single, patch_seed, render_background_sample,
    render_vessel_sample, sample_id, sample_index, tree_seed, ClassStats, GenerationStats, Sample,
    StageSeconds,
};
pub use preview::{mip, mip_image, preview_mip, Axis};

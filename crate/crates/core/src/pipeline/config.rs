use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::appearance::{AppearanceParams, CutoutParams, SkullParams};
use crate::error::{Error, Result};
use crate::manifest::{sha256_hex, SampleClass};
use crate::patchqc::ExtractParams;
use crate::treegen::GrowthParams;

/// Requested samples per class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassCounts {
    pub low_tort: usize,
    pub high_tort: usize,
    pub skull: usize,
    pub background: usize,
}

impl ClassCounts {
    pub const fn new(low_tort: usize, high_tort: usize, skull: usize, background: usize) -> Self {
        Self {
            low_tort,
            high_tort,
            skull,
            background,
        }
    }

    pub fn get(&self, class: SampleClass) -> usize {
        match class {
            SampleClass::LowTort => self.low_tort,
            SampleClass::HighTort => self.high_tort,
            SampleClass::Skull => self.skull,
            SampleClass::Background => self.background,
        }
    }

    pub fn total(&self) -> usize {
        self.low_tort + self.high_tort + self.skull + self.background
    }

    /// Divides by `divisor`, rounding the total to nearest and handing
    /// leftover units to the largest remainders (ties in class order).
    pub fn scaled_down(&self, divisor: usize) -> Self {
        assert!(divisor > 0, "divisor must be positive");
        let raw: Vec<usize> = SampleClass::ALL.iter().map(|&c| self.get(c)).collect();
        let target = (self.total() + divisor / 2) / divisor;
        let mut out: Vec<usize> = raw.iter().map(|v| v / divisor).collect();
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| (raw[b] % divisor).cmp(&(raw[a] % divisor)).then(a.cmp(&b)));
        let mut left = target.saturating_sub(out.iter().sum());
        for &i in order.iter().cycle().take(4 * left.max(1)) {
            if left == 0 {
                break;
            }
            out[i] += 1;
            left -= 1;
        }
        Self::new(out[0], out[1], out[2], out[3])
    }
}

pub const FULL_TRAIN: ClassCounts = ClassCounts::new(5000, 5000, 2500, 2500);
pub const FULL_VAL: ClassCounts = ClassCounts::new(500, 500, 250, 250);

/// Growth settings used for dataset trees. Denser than
/// [`GrowthParams::default`] so that 96³ crops reach the occupancy floor.
pub fn dataset_growth(tortuosity: f64) -> GrowthParams<f64> {
    GrowthParams {
        root_radius_range: [5.0, 9.0],
        min_radius: 0.3,
        segment_length_range: [8.0, 20.0],
        tortuosity,
        branch_prob_decay: 0.9,
        branch_angle_range: [30.0, 70.0],
        max_attempts: 20,
        ..GrowthParams::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub master_seed: u64,
    pub train: ClassCounts,
    pub val: ClassCounts,
    /// Tortuosity is forced to zero for this class.
    pub low_tort_growth: GrowthParams<f64>,
    /// Also used for the skull class.
    pub high_tort_growth: GrowthParams<f64>,
    pub appearance: AppearanceParams,
    pub skull: SkullParams,
    /// When present every sample also gets a corrupted copy.
    pub cutout: Option<CutoutParams>,
    pub patches: ExtractParams,
    /// Trees allowed per class are `tree_budget_factor * requested count`.
    pub tree_budget_factor: usize,
    pub out_dir: Option<PathBuf>,
    /// Worker threads; 0 picks the available parallelism.
    pub workers: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl DatasetConfig {
    /// Full-size class mix: 15,000 training and 1,500 validation samples.
    pub fn full() -> Self {
        Self {
            master_seed: 42,
            train: FULL_TRAIN,
            val: FULL_VAL,
            low_tort_growth: dataset_growth(0.0),
            high_tort_growth: dataset_growth(0.6),
            appearance: AppearanceParams::default(),
            skull: SkullParams::default(),
            cutout: None,
            patches: ExtractParams::default(),
            tree_budget_factor: 20,
            out_dir: None,
            workers: 0,
        }
    }

    /// The full mix scaled by 1/100.
    pub fn desk() -> Self {
        let p = Self::full();
        Self {
            train: p.train.scaled_down(100),
            val: p.val.scaled_down(100),
            ..p
        }
    }

    pub fn counts(&self, stream: crate::rng::Stream) -> ClassCounts {
        match stream {
            crate::rng::Stream::Train => self.train,
            crate::rng::Stream::Val => self.val,
        }
    }

    /// Growth parameters for a vessel class.
    pub fn growth_for(&self, class: SampleClass) -> GrowthParams<f64> {
        match class {
            SampleClass::LowTort => GrowthParams {
                tortuosity: 0.0,
                ..self.low_tort_growth.clone()
            },
            _ => self.high_tort_growth.clone(),
        }
    }

    /// Appearance parameters for a class; the skull class adds the shell.
    pub fn appearance_for(&self, class: SampleClass) -> AppearanceParams {
        let mut a = self.appearance.clone();
        if class == SampleClass::Skull {
            a.skull = Some(self.skull.clone());
        }
        a
    }

    pub fn validate(&self) -> Result<()> {
        self.low_tort_growth.validate()?;
        self.high_tort_growth.validate()?;
        self.appearance.validate()?;
        self.skull.validate()?;
        if let Some(c) = &self.cutout {
            c.validate()?;
        }
        let size = self.patches.patch_size;
        for g in [&self.low_tort_growth, &self.high_tort_growth] {
            if g.domain_dims.iter().any(|&d| d < size) {
                return Err(Error::param("patches.patch_size", "patch larger than growth domain"));
            }
        }
        if size == 0 {
            return Err(Error::param("patches.patch_size", "must be positive"));
        }
        if self.tree_budget_factor == 0 {
            return Err(Error::param("tree_budget_factor", "must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the settings that determine the output; `out_dir` and
    /// `workers` are excluded.
    pub fn params_hash(&self) -> Result<String> {
        let canonical = Self {
            out_dir: None,
            workers: 0,
            ..self.clone()
        };
        Ok(sha256_hex(serde_json::to_string(&canonical)?.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_counts() {
        let d = DatasetConfig::desk();
        assert_eq!(d.train, ClassCounts::new(50, 50, 25, 25));
        assert_eq!(d.val, ClassCounts::new(5, 5, 3, 2));
    }

    #[test]
    fn scaling_keeps_exact_multiples() {
        assert_eq!(ClassCounts::new(400, 0, 8, 4).scaled_down(4), ClassCounts::new(100, 0, 2, 1));
        assert_eq!(ClassCounts::default().scaled_down(7), ClassCounts::default());
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = DatasetConfig::desk();
        let b = DatasetConfig {
            workers: 8,
            out_dir: Some("/tmp/x".into()),
            ..a.clone()
        };
        assert_eq!(a.params_hash().unwrap(), b.params_hash().unwrap());
        let c = DatasetConfig {
            master_seed: 1,
            ..a.clone()
        };
        assert_ne!(a.params_hash().unwrap(), c.params_hash().unwrap());
    }

    #[test]
    fn low_tort_forces_zero_tortuosity() {
        let mut c = DatasetConfig::desk();
        c.low_tort_growth.tortuosity = 0.4;
        assert_eq!(c.growth_for(SampleClass::LowTort).tortuosity, 0.0);
        assert_eq!(c.growth_for(SampleClass::Skull), c.high_tort_growth);
    }
}

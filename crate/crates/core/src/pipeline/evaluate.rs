use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate_pair, remove_small_components, MetricsReport};
use crate::nifti::read_mask;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub metrics: MetricsReport,
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, sd: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cases: Vec<CaseReport>,
    pub dice: Summary,
    pub cl_dice: Summary,
    pub cb_dice: Summary,
    pub postprocess: bool,
    pub min_volume: usize,
}

fn volume_files(dir: &Path) -> Result<BTreeMap<String, std::path::PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".nii") || name.ends_with(".nii.gz") {
            out.insert(name, entry.path());
        }
    }
    Ok(out)
}

/// Scores every prediction against the ground truth of the same file name.
pub fn evaluate(
    pred_dir: impl AsRef<Path>,
    gt_dir: impl AsRef<Path>,
    postprocess: bool,
    min_volume: usize,
) -> Result<EvalReport> {
    let preds = volume_files(pred_dir.as_ref())?;
    let gts = volume_files(gt_dir.as_ref())?;
    let unmatched: Vec<&String> = preds
        .keys()
        .filter(|k| !gts.contains_key(*k))
        .chain(gts.keys().filter(|k| !preds.contains_key(*k)))
        .collect();
    if !unmatched.is_empty() {
        return Err(Error::Evaluation(format!("unmatched files: {unmatched:?}")));
    }
    if preds.is_empty() {
        return Err(Error::Evaluation("no volumes found".into()));
    }
    let cases: Vec<Result<CaseReport>> = preds
        .par_iter()
        .map(|(name, p)| {
            let mut pred = read_mask(p)?;
            let gt = read_mask(&gts[name])?;
            if postprocess {
                pred = remove_small_components(&pred, min_volume);
            }
            Ok(CaseReport {
                name: name.clone(),
                metrics: evaluate_pair(&pred, &gt)?,
            })
        })
        .collect();
    let cases = cases.into_iter().collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&MetricsReport) -> f64| -> Vec<f64> { cases.iter().map(|c| f(&c.metrics)).collect() };
    Ok(EvalReport {
        dice: Summary::of(&pick(|m| m.dice)),
        cl_dice: Summary::of(&pick(|m| m.cl_dice)),
        cb_dice: Summary::of(&pick(|m| m.cb_dice)),
        cases,
        postprocess,
        min_volume,
    })
}

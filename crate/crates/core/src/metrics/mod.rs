//! Overlap and topology metrics on binary masks, plus small-component
//! removal.

mod edt;
mod skeleton;

use serde::{Deserialize, Serialize};

use crate::components::{connected_components, Connectivity};
use crate::error::Result;
use crate::volume::MaskVolume;

pub use edt::{distance_to_background, squared_distance_to_background};
pub use skeleton::{dilate, erode, opening, skeletonize, DEFAULT_SKELETON_ITERATIONS};

pub const DEFAULT_MIN_VOLUME: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dice: f64,
    pub cl_dice: f64,
    pub cb_dice: f64,
    pub pred_components: usize,
    pub gt_components: usize,
}

/// `2|P ∩ G| / (|P| + |G|)`; 1 when both are empty.
pub fn dice(pred: &MaskVolume, gt: &MaskVolume) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    let (mut both, mut p, mut g) = (0usize, 0usize, 0usize);
    for (&a, &b) in pred.data().iter().zip(gt.data()) {
        let (a, b) = (a != 0, b != 0);
        p += usize::from(a);
        g += usize::from(b);
        both += usize::from(a && b);
    }
    if p + g == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (p + g) as f64)
}

fn overlap(a: &MaskVolume, b: &MaskVolume) -> usize {
    a.data()
        .iter()
        .zip(b.data())
        .filter(|(&x, &y)| x != 0 && y != 0)
        .count()
}

/// Shared empty-input conventions; `None` means compute normally.
fn empty_convention(pred: &MaskVolume, gt: &MaskVolume, sp: &MaskVolume, sg: &MaskVolume) -> Option<f64> {
    if pred.count_ones() == 0 && gt.count_ones() == 0 {
        return Some(1.0);
    }
    if sp.count_ones() == 0 || sg.count_ones() == 0 {
        return Some(0.0);
    }
    None
}

pub fn cl_dice_with(pred: &MaskVolume, gt: &MaskVolume, iterations: usize) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    let sp = skeletonize(pred, iterations);
    let sg = skeletonize(gt, iterations);
    if let Some(v) = empty_convention(pred, gt, &sp, &sg) {
        return Ok(v);
    }
    let tprec = overlap(&sp, gt) as f64 / sp.count_ones() as f64;
    let tsens = overlap(&sg, pred) as f64 / sg.count_ones() as f64;
    if tprec + tsens == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * tprec * tsens / (tprec + tsens))
}

pub fn cl_dice(pred: &MaskVolume, gt: &MaskVolume) -> Result<f64> {
    cl_dice_with(pred, gt, DEFAULT_SKELETON_ITERATIONS)
}

/// Radius-normalized credit of `a`'s skeleton voxels inside `b`.
fn credit_sum(skel_a: &MaskVolume, dist_a: &[f64], dist_b: &[f64]) -> f64 {
    skel_a
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s != 0)
        .map(|(i, _)| {
            let (da, db) = (dist_a[i], dist_b[i]);
            if db.is_infinite() {
                1.0
            } else {
                (db / da.max(1.0)).min(1.0)
            }
        })
        .sum()
}

pub fn cb_dice_with(pred: &MaskVolume, gt: &MaskVolume, iterations: usize) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    let sp = skeletonize(pred, iterations);
    let sg = skeletonize(gt, iterations);
    if let Some(v) = empty_convention(pred, gt, &sp, &sg) {
        return Ok(v);
    }
    let dp = distance_to_background(pred);
    let dg = distance_to_background(gt);
    let num = credit_sum(&sp, &dp, &dg) + credit_sum(&sg, &dg, &dp);
    Ok(num / (sp.count_ones() + sg.count_ones()) as f64)
}

pub fn cb_dice(pred: &MaskVolume, gt: &MaskVolume) -> Result<f64> {
    cb_dice_with(pred, gt, DEFAULT_SKELETON_ITERATIONS)
}

/// Deletes 26-connected components smaller than `min_volume`.
pub fn remove_small_components(mask: &MaskVolume, min_volume: usize) -> MaskVolume {
    let comps = connected_components(mask, Connectivity::TwentySix);
    let mut out = mask.clone();
    for (v, &l) in out.data_mut().iter_mut().zip(&comps.labels) {
        *v = u8::from(l != 0 && comps.sizes[l as usize - 1] >= min_volume);
    }
    out
}

pub fn evaluate_pair(pred: &MaskVolume, gt: &MaskVolume) -> Result<MetricsReport> {
    Ok(MetricsReport {
        dice: dice(pred, gt)?,
        cl_dice: cl_dice(pred, gt)?,
        cb_dice: cb_dice(pred, gt)?,
        pred_components: connected_components(pred, Connectivity::TwentySix).count(),
        gt_components: connected_components(gt, Connectivity::TwentySix).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Dims;

    fn line(dims: Dims, y: usize) -> MaskVolume {
        let mut m = MaskVolume::zeros(dims);
        for x in 0..dims.x() {
            m.set(x, y, 4, 1);
        }
        m
    }

    #[test]
    fn dice_half_overlap() {
        let dims = Dims::new(12, 1, 1);
        let mut p = MaskVolume::zeros(dims);
        let mut g = MaskVolume::zeros(dims);
        for x in 0..8 {
            p.set(x, 0, 0, 1);
            g.set(x + 4, 0, 0, 1);
        }
        assert_eq!(dice(&p, &g).unwrap(), 0.5);
    }

    #[test]
    fn empty_conventions() {
        let e = MaskVolume::zeros(Dims::cube(8));
        let t = line(Dims::cube(8), 3);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert_eq!(cl_dice(&e, &e).unwrap(), 1.0);
        assert_eq!(cb_dice(&e, &e).unwrap(), 1.0);
        assert_eq!(cl_dice(&e, &t).unwrap(), 0.0);
        assert_eq!(cb_dice(&e, &t).unwrap(), 0.0);
        assert_eq!(dice(&e, &t).unwrap(), 0.0);
    }

    #[test]
    fn offset_lines_have_zero_cl_dice() {
        let dims = Dims::cube(8);
        assert_eq!(cl_dice(&line(dims, 2), &line(dims, 4)).unwrap(), 0.0);
    }

    #[test]
    fn dims_mismatch_errors() {
        let a = MaskVolume::zeros(Dims::cube(4));
        let b = MaskVolume::zeros(Dims::cube(5));
        assert!(dice(&a, &b).is_err());
        assert!(cl_dice(&a, &b).is_err());
        assert!(cb_dice(&a, &b).is_err());
    }

    #[test]
    fn isolated_voxels_removed() {
        let mut m = MaskVolume::zeros(Dims::cube(6));
        m.set(0, 0, 0, 1);
        m.set(3, 3, 3, 1);
        assert_eq!(remove_small_components(&m, 2).count_ones(), 0);
        assert_eq!(remove_small_components(&m, 1), m);
    }
}

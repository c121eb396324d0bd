//! Tree to voxel mask conversion.
//!
//! Voxel `(i, j, k)` covers `[i, i+1) x [j, j+1) x [k, k+1)` and is tested at
//! its center. A voxel is set when its center lies inside any sub-step
//! capsule, and every voxel containing a centerline point is set regardless
//! of radius so thin vessels never vanish.

use crate::error::{Error, Result};
use crate::geom::{point_segment_dist_sq, Vec3};
use crate::scalar::Real;
use crate::treegen::{Capsule, VesselTree};
use crate::volume::{Dims, MaskVolume};

#[derive(Clone, Debug, PartialEq)]
pub struct RasterOutput {
    pub mask: MaskVolume,
    /// Voxels containing centerline points; always a subset of `mask`.
    pub centerline: MaskVolume,
}

/// Voxel containing `p`; points on the upper domain face map to the last
/// voxel. `None` outside `[0, dims]`.
pub fn containing_voxel<T: Real>(p: Vec3<T>, dims: Dims) -> Option<[usize; 3]> {
    let mut out = [0usize; 3];
    for a in 0..3 {
        let v = p[a];
        let extent = T::lit(dims.0[a] as f64);
        if !(v >= T::zero() && v <= extent) {
            return None;
        }
        out[a] = v.floor().to_usize()?.min(dims.0[a] - 1);
    }
    Some(out)
}

/// Sets every voxel whose center lies within the capsule.
pub fn fill_capsule<T: Real>(mask: &mut MaskVolume, c: &Capsule<T>) {
    let dims = mask.dims();
    let half = T::lit(0.5);
    let pad = c.radius.ceil();
    let lo = c.a.component_min(c.b);
    let hi = c.a.component_max(c.b);
    let mut range = [(0usize, 0usize); 3];
    for a in 0..3 {
        let from = (lo[a] - pad).floor().max(T::zero());
        let to = (hi[a] + pad).ceil().min(T::lit(dims.0[a] as f64) - T::one());
        if from > to {
            return;
        }
        range[a] = (from.to_usize().unwrap_or(0), to.to_usize().unwrap_or(0));
    }
    let r_sq = c.radius * c.radius;
    let data = mask.data_mut();
    for z in range[2].0..=range[2].1 {
        let cz = T::lit(z as f64) + half;
        for y in range[1].0..=range[1].1 {
            let cy = T::lit(y as f64) + half;
            let row = dims.index(0, y, z);
            for x in range[0].0..=range[0].1 {
                let center = Vec3::new(T::lit(x as f64) + half, cy, cz);
                if point_segment_dist_sq(center, c.a, c.b) <= r_sq {
                    data[row + x] = 1;
                }
            }
        }
    }
}

pub fn rasterize_tree<T: Real>(tree: &VesselTree<T>, dims: Dims) -> Result<RasterOutput> {
    let mut mask = MaskVolume::zeros(dims);
    let mut centerline = MaskVolume::zeros(dims);
    for (i, seg) in tree.segments.iter().enumerate() {
        for p in &seg.centerline {
            let Some([x, y, z]) = containing_voxel(*p, dims) else {
                return Err(Error::Domain(format!(
                    "segment {i} point {:?} lies outside the {:?} grid",
                    p.to_array(),
                    dims.0
                )));
            };
            centerline.set(x, y, z, 1);
        }
        for c in seg.capsules() {
            fill_capsule(&mut mask, &c);
        }
    }
    for (m, c) in mask.data_mut().iter_mut().zip(centerline.data()) {
        *m |= *c;
    }
    Ok(RasterOutput { mask, centerline })
}

/// Fraction of set voxels.
pub fn occupancy_fraction(mask: &MaskVolume) -> f64 {
    if mask.data().is_empty() {
        return 0.0;
    }
    mask.count_ones() as f64 / mask.data().len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treegen::{Node, Segment};

    fn single_segment(points: Vec<Vec3<f64>>, r: f64) -> VesselTree<f64> {
        let first = points[0];
        let last = *points.last().unwrap();
        VesselTree {
            nodes: vec![
                Node { position: first, radius: r, depth: 0 },
                Node { position: last, radius: r, depth: 0 },
            ],
            segments: vec![Segment {
                parent: 0,
                child: 1,
                centerline: points,
                radius_start: r,
                radius_end: r,
            }],
            root: 0,
        }
    }

    #[test]
    fn empty_tree_gives_empty_mask() {
        let out = rasterize_tree(&VesselTree::<f64>::empty(), Dims::cube(8)).unwrap();
        assert_eq!(out.mask.count_ones(), 0);
    }

    #[test]
    fn vertical_segment_matches_exhaustive_count() {
        let pts: Vec<_> = (2..=12).map(|z| Vec3::new(5.0, 5.0, z as f64)).collect();
        let tree = single_segment(pts, 1.6);
        let out = rasterize_tree(&tree, Dims::cube(16)).unwrap();
        // every voxel center within 1.6 of the axis (5,5,2)-(5,5,12)
        let mut expected = 0;
        for z in 0..16 {
            for y in 0..16 {
                for x in 0..16 {
                    let (cx, cy, cz) = (x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5);
                    let dz = if cz < 2.0 { 2.0 - cz } else if cz > 12.0 { cz - 12.0 } else { 0.0 };
                    let d2 = (cx - 5.0).powi(2) + (cy - 5.0).powi(2) + dz * dz;
                    if d2 <= 1.6 * 1.6 {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(out.mask.count_ones(), expected);
    }

    #[test]
    fn zero_radius_point_sets_containing_voxel() {
        let tree = single_segment(vec![Vec3::new(3.2, 4.7, 1.1)], 0.0);
        let out = rasterize_tree(&tree, Dims::cube(8)).unwrap();
        assert_eq!(out.mask.count_ones(), 1);
        assert_eq!(out.mask.get(3, 4, 1), 1);
        assert_eq!(out.centerline, out.mask);
    }

    #[test]
    fn outside_grid_is_an_error() {
        let tree = single_segment(vec![Vec3::new(3.0, 4.0, 9.5)], 0.5);
        assert!(rasterize_tree(&tree, Dims::cube(8)).is_err());
    }

    #[test]
    fn occupancy_threshold_arithmetic() {
        let dims = Dims::cube(96);
        let mut m = MaskVolume::zeros(dims);
        for v in m.data_mut().iter_mut().take(44_237) {
            *v = 1;
        }
        let f = occupancy_fraction(&m);
        assert!((0.05..0.050002).contains(&f), "{f}");
        assert_eq!(occupancy_fraction(&MaskVolume::zeros(dims)), 0.0);
        assert_eq!(occupancy_fraction(&MaskVolume::filled(dims, 1)), 1.0);
    }
}

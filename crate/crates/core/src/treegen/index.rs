//! Uniform spatial hash over committed capsules and the path validator.

use std::collections::HashMap;

use crate::geom::{segment_box_dist_sq, segment_segment_dist_sq, Vec3};
use crate::scalar::Real;
use crate::treegen::params::GrowthParams;

/// Line segment swept by a sphere of constant radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capsule<T> {
    pub a: Vec3<T>,
    pub b: Vec3<T>,
    pub radius: T,
}

impl<T: Real> Capsule<T> {
    pub fn new(a: Vec3<T>, b: Vec3<T>, radius: T) -> Self {
        Self { a, b, radius }
    }

    /// Distance between the two axes.
    pub fn axis_distance(&self, other: &Self) -> T {
        segment_segment_dist_sq(self.a, self.b, other.a, other.b).sqrt()
    }

    /// Surface-to-surface gap; negative when overlapping.
    pub fn gap(&self, other: &Self) -> T {
        self.axis_distance(other) - self.radius - other.radius
    }
}

/// Capsules of a polyline with per-point radii; each sub-step takes the
/// larger radius of its two end points.
pub fn chain_capsules<T: Real>(points: &[Vec3<T>], radii: &[T]) -> Vec<Capsule<T>> {
    assert_eq!(points.len(), radii.len(), "one radius per polyline point");
    match points.len() {
        0 => Vec::new(),
        1 => vec![Capsule::new(points[0], points[0], radii[0])],
        _ => points
            .windows(2)
            .zip(radii.windows(2))
            .map(|(p, r)| Capsule::new(p[0], p[1], r[0].max(r[1])))
            .collect(),
    }
}

type CellKey = [i32; 3];

/// Spatial hash from cell index to the capsules overlapping that cell.
#[derive(Clone, Debug)]
pub struct OccupancyIndex<T> {
    cell_size: T,
    cells: HashMap<CellKey, Vec<u32>>,
    capsules: Vec<(usize, Capsule<T>)>,
}

impl<T: Real> OccupancyIndex<T> {
    pub fn new(cell_size: T) -> Self {
        assert!(cell_size > T::zero(), "cell size must be positive");
        Self {
            cell_size,
            cells: HashMap::new(),
            capsules: Vec::new(),
        }
    }

    pub fn cell_size(&self) -> T {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.capsules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capsules.is_empty()
    }

    fn cell_of(&self, v: T) -> i32 {
        (v / self.cell_size).floor().to_i32().unwrap_or(i32::MAX)
    }

    fn cell_range(&self, lo: Vec3<T>, hi: Vec3<T>) -> ([i32; 3], [i32; 3]) {
        (
            [self.cell_of(lo.x), self.cell_of(lo.y), self.cell_of(lo.z)],
            [self.cell_of(hi.x), self.cell_of(hi.y), self.cell_of(hi.z)],
        )
    }

    pub fn cell_bounds(&self, key: CellKey) -> (Vec3<T>, Vec3<T>) {
        let lo = Vec3::new(
            T::lit(key[0] as f64) * self.cell_size,
            T::lit(key[1] as f64) * self.cell_size,
            T::lit(key[2] as f64) * self.cell_size,
        );
        let s = self.cell_size;
        (lo, lo + Vec3::new(s, s, s))
    }

    /// Cells whose box lies within `capsule.radius` of the capsule axis.
    pub fn overlapping_cells(&self, capsule: &Capsule<T>) -> Vec<CellKey> {
        let r = capsule.radius;
        let pad = Vec3::new(r, r, r);
        let (lo, hi) = self.cell_range(
            capsule.a.component_min(capsule.b) - pad,
            capsule.a.component_max(capsule.b) + pad,
        );
        let tol = T::lit(1e-9);
        let mut out = Vec::new();
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let key = [i, j, k];
                    let (blo, bhi) = self.cell_bounds(key);
                    if segment_box_dist_sq(capsule.a, capsule.b, blo, bhi).sqrt() <= r + tol {
                        out.push(key);
                    }
                }
            }
        }
        out
    }

    pub fn insert(&mut self, segment: usize, capsule: Capsule<T>) {
        let id = self.capsules.len() as u32;
        for key in self.overlapping_cells(&capsule) {
            self.cells.entry(key).or_default().push(id);
        }
        self.capsules.push((segment, capsule));
    }

    /// Registered `(segment, capsule)` entries.
    pub fn entries(&self) -> &[(usize, Capsule<T>)] {
        &self.capsules
    }

    /// Cells a stored capsule is registered in.
    pub fn cells_of(&self, capsule_id: usize) -> Vec<CellKey> {
        let mut keys: Vec<CellKey> = self
            .cells
            .iter()
            .filter(|(_, ids)| ids.contains(&(capsule_id as u32)))
            .map(|(k, _)| *k)
            .collect();
        keys.sort_unstable();
        keys
    }

    /// Stored capsules registered in any cell meeting the box `[lo, hi]`,
    /// sorted and deduplicated.
    pub fn query_box(&self, lo: Vec3<T>, hi: Vec3<T>) -> Vec<u32> {
        let (clo, chi) = self.cell_range(lo, hi);
        let mut found = Vec::new();
        for k in clo[2]..=chi[2] {
            for j in clo[1]..=chi[1] {
                for i in clo[0]..=chi[0] {
                    if let Some(ids) = self.cells.get(&[i, j, k]) {
                        found.extend_from_slice(ids);
                    }
                }
            }
        }
        found.sort_unstable();
        found.dedup();
        found
    }

    /// True when `capsule` comes within `margin` of any stored capsule whose
    /// segment is not in `exempt`.
    pub fn collides(&self, capsule: &Capsule<T>, margin: T, exempt: &[usize]) -> bool {
        let reach = capsule.radius + margin;
        let pad = Vec3::new(reach, reach, reach);
        let lo = capsule.a.component_min(capsule.b) - pad;
        let hi = capsule.a.component_max(capsule.b) + pad;
        let (clo, chi) = self.cell_range(lo, hi);
        for k in clo[2]..=chi[2] {
            for j in clo[1]..=chi[1] {
                for i in clo[0]..=chi[0] {
                    let Some(ids) = self.cells.get(&[i, j, k]) else {
                        continue;
                    };
                    for &id in ids {
                        let (seg, other) = &self.capsules[id as usize];
                        if exempt.contains(seg) {
                            continue;
                        }
                        if capsule.axis_distance(other) <= capsule.radius + other.radius + margin {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// Whether `point` keeps a clearance of `radius` to every domain face.
pub fn inside_domain<T: Real>(point: Vec3<T>, radius: T, dims: [usize; 3]) -> bool {
    (0..3).all(|a| {
        let v = point[a];
        v >= radius && v <= T::lit(dims[a] as f64) - radius
    })
}

/// Accepts a candidate centerline iff every point keeps `radius` clearance
/// to the domain faces and no sub-step capsule comes within
/// `r_candidate + r_committed + collision_margin` of a committed capsule
/// belonging to a segment outside `exempt`.
pub fn validate_path<T: Real>(
    polyline: &[Vec3<T>],
    radii: &[T],
    index: &OccupancyIndex<T>,
    params: &GrowthParams<T>,
    exempt: &[usize],
) -> bool {
    if polyline.is_empty() {
        return false;
    }
    if !polyline
        .iter()
        .zip(radii)
        .all(|(p, r)| inside_domain(*p, *r, params.domain_dims))
    {
        return false;
    }
    chain_capsules(polyline, radii)
        .iter()
        .all(|c| !index.collides(c, params.collision_margin, exempt))
}

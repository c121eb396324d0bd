//! Quality control and random extraction of sub-volumes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::components::{connected_components, Connectivity};
use crate::error::{Error, Result};
use crate::raster::occupancy_fraction;
use crate::volume::{Dims, MaskVolume};

pub const DEFAULT_OCC_THRESHOLD: f64 = 0.05;
pub const DEFAULT_PATCH_SIZE: usize = 96;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QCReport {
    pub occupancy: f64,
    pub component_count: usize,
    /// Components touching no patch face.
    pub floating_islands: usize,
    /// Some component touches at least two faces.
    pub continuity_ok: bool,
    pub passed: bool,
}

impl QCReport {
    /// Report for a patch with no vessel at all.
    pub fn empty() -> Self {
        Self {
            occupancy: 0.0,
            component_count: 0,
            floating_islands: 0,
            continuity_ok: false,
            passed: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub origin: [usize; 3],
    pub size: Dims,
}

impl PatchSpec {
    pub fn fits(&self, parent: Dims) -> bool {
        (0..3).all(|a| self.origin[a] + self.size.0[a] <= parent.0[a])
    }
}

pub fn qc_patch(patch: &MaskVolume, occ_threshold: f64) -> QCReport {
    let occupancy = occupancy_fraction(patch);
    let comps = connected_components(patch, Connectivity::TwentySix);
    let faces = comps.faces_touched();
    let floating_islands = faces.iter().filter(|&&f| f == 0).count();
    let continuity_ok = faces.iter().any(|f| f.count_ones() >= 2);
    QCReport {
        occupancy,
        component_count: comps.count(),
        floating_islands,
        continuity_ok,
        passed: occupancy >= occ_threshold && floating_islands == 0 && continuity_ok,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractParams {
    pub max_accepted: usize,
    pub max_attempts: usize,
    pub patch_size: usize,
    pub occ_threshold: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            max_accepted: 50,
            max_attempts: 200,
            patch_size: DEFAULT_PATCH_SIZE,
            occ_threshold: DEFAULT_OCC_THRESHOLD,
        }
    }
}

/// Rejected draws by first failing criterion, checked in the order
/// occupancy, islands, continuity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub low_occupancy: usize,
    pub floating_islands: usize,
    pub no_continuity: usize,
}

impl RejectionCounts {
    pub fn total(&self) -> usize {
        self.low_occupancy + self.floating_islands + self.no_continuity
    }

    pub fn add(&mut self, other: &Self) {
        self.low_occupancy += other.low_occupancy;
        self.floating_islands += other.floating_islands;
        self.no_continuity += other.no_continuity;
    }

    fn record(&mut self, r: &QCReport, occ_threshold: f64) {
        if r.occupancy < occ_threshold {
            self.low_occupancy += 1;
        } else if r.floating_islands > 0 {
            self.floating_islands += 1;
        } else {
            self.no_continuity += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub accepted: Vec<(PatchSpec, QCReport)>,
    pub attempts: usize,
    pub rejections: RejectionCounts,
}

/// Summed-volume table with a zero border: `at(x, y, z)` counts set voxels
/// in `[0, x) x [0, y) x [0, z)`.
struct PrefixSum {
    n: [usize; 3],
    table: Vec<u32>,
}

impl PrefixSum {
    fn new(mask: &MaskVolume) -> Self {
        let d = mask.dims().0;
        let n = [d[0] + 1, d[1] + 1, d[2] + 1];
        let mut table = vec![0u32; n[0] * n[1] * n[2]];
        let idx = |x: usize, y: usize, z: usize| x + n[0] * (y + n[1] * z);
        for z in 1..n[2] {
            for y in 1..n[1] {
                let mut row = 0u32;
                for x in 1..n[0] {
                    row += u32::from(mask.get(x - 1, y - 1, z - 1) != 0);
                    table[idx(x, y, z)] = row + table[idx(x, y - 1, z)] + table[idx(x, y, z - 1)]
                        - table[idx(x, y - 1, z - 1)];
                }
            }
        }
        Self { n, table }
    }

    fn at(&self, x: usize, y: usize, z: usize) -> i64 {
        i64::from(self.table[x + self.n[0] * (y + self.n[1] * z)])
    }

    fn box_count(&self, o: [usize; 3], s: [usize; 3]) -> usize {
        let (x0, y0, z0) = (o[0], o[1], o[2]);
        let (x1, y1, z1) = (o[0] + s[0], o[1] + s[1], o[2] + s[2]);
        let v = self.at(x1, y1, z1) - self.at(x0, y1, z1) - self.at(x1, y0, z1) - self.at(x1, y1, z0)
            + self.at(x0, y0, z1)
            + self.at(x0, y1, z0)
            + self.at(x1, y0, z0)
            - self.at(x0, y0, z0);
        v as usize
    }
}

/// Draws patch origins uniformly over the valid corner lattice and keeps
/// those passing QC, in draw order.
pub fn extract_patches<R: Rng + ?Sized>(
    mask: &MaskVolume,
    params: &ExtractParams,
    rng: &mut R,
) -> Result<Extraction> {
    let parent = mask.dims();
    let s = params.patch_size;
    if s == 0 || parent.0.iter().any(|&d| d < s) {
        return Err(Error::param(
            "patch_size",
            format!("{s} does not fit in parent {:?}", parent.0),
        ));
    }
    let size = Dims::cube(s);
    let voxels = size.len() as f64;
    let sums = PrefixSum::new(mask);
    let mut out = Extraction {
        accepted: Vec::new(),
        attempts: 0,
        rejections: RejectionCounts::default(),
    };
    while out.accepted.len() < params.max_accepted && out.attempts < params.max_attempts {
        out.attempts += 1;
        let origin = [
            rng.random_range(0..=parent.0[0] - s),
            rng.random_range(0..=parent.0[1] - s),
            rng.random_range(0..=parent.0[2] - s),
        ];
        let occupancy = sums.box_count(origin, size.0) as f64 / voxels;
        if occupancy < params.occ_threshold {
            out.rejections.low_occupancy += 1;
            continue;
        }
        let report = qc_patch(&mask.crop(origin, size)?, params.occ_threshold);
        if report.passed {
            out.accepted.push((PatchSpec { origin, size }, report));
        } else {
            out.rejections.record(&report, params.occ_threshold);
        }
    }
    Ok(out)
}

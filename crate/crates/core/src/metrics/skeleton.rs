//! Binary morphological skeleton with the 6-neighborhood cross.

use crate::volume::MaskVolume;

pub const DEFAULT_SKELETON_ITERATIONS: usize = 8;

const CROSS: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// Keeps voxels whose whole cross neighborhood is set; outside counts as 0.
pub fn erode(mask: &MaskVolume) -> MaskVolume {
    let dims = mask.dims();
    let mut out = MaskVolume::zeros(dims);
    for z in 0..dims.z() {
        for y in 0..dims.y() {
            for x in 0..dims.x() {
                if mask.get(x, y, z) == 0 {
                    continue;
                }
                let keep = CROSS.iter().all(|o| {
                    let q = [x as i64 + o[0], y as i64 + o[1], z as i64 + o[2]];
                    dims.contains(q) && mask.get(q[0] as usize, q[1] as usize, q[2] as usize) != 0
                });
                if keep {
                    out.set(x, y, z, 1);
                }
            }
        }
    }
    out
}

/// Sets every voxel whose cross neighborhood touches a set voxel.
pub fn dilate(mask: &MaskVolume) -> MaskVolume {
    let dims = mask.dims();
    let mut out = mask.clone();
    for z in 0..dims.z() {
        for y in 0..dims.y() {
            for x in 0..dims.x() {
                if mask.get(x, y, z) == 0 {
                    continue;
                }
                for o in &CROSS {
                    let q = [x as i64 + o[0], y as i64 + o[1], z as i64 + o[2]];
                    if dims.contains(q) {
                        out.set(q[0] as usize, q[1] as usize, q[2] as usize, 1);
                    }
                }
            }
        }
    }
    out
}

pub fn opening(mask: &MaskVolume) -> MaskVolume {
    dilate(&erode(mask))
}

/// Repeats `skel |= mask - opening(mask); mask = erode(mask)`.
pub fn skeletonize(mask: &MaskVolume, iterations: usize) -> MaskVolume {
    let mut current = mask.clone();
    let mut skel = MaskVolume::zeros(mask.dims());
    for _ in 0..iterations.max(1) {
        if current.count_ones() == 0 {
            break;
        }
        let eroded = erode(&current);
        let opened = dilate(&eroded);
        for ((s, &c), &o) in skel.data_mut().iter_mut().zip(current.data()).zip(opened.data()) {
            if c != 0 && o == 0 {
                *s = 1;
            }
        }
        current = eroded;
    }
    skel
}

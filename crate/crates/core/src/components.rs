//! Connected-component labeling of binary masks.

use serde::{Deserialize, Serialize};

use crate::volume::{Dims, MaskVolume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    /// Face neighbors only.
    Six,
    /// Face, edge and corner neighbors.
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Self::Six),
            26 => Some(Self::TwentySix),
            _ => None,
        }
    }

    /// Neighbor offsets preceding the origin in x-fastest scan order.
    fn backward_offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let order = dz * 9 + dy * 3 + dx;
                    if order >= 0 {
                        continue;
                    }
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    if self == Self::Six && manhattan != 1 {
                        continue;
                    }
                    out.push([dx, dy, dz]);
                }
            }
        }
        out
    }
}

/// Component labels of a mask. Label 0 is background; label `k` belongs
/// to the `k`-th largest component, ties going to the component whose
/// first voxel in linear order comes earlier.
#[derive(Clone, Debug, PartialEq)]
pub struct Components {
    pub dims: Dims,
    pub labels: Vec<u32>,
    /// `sizes[k - 1]` is the voxel count of label `k`.
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn label(&self, x: usize, y: usize, z: usize) -> u32 {
        self.labels[self.dims.index(x, y, z)]
    }

    /// Per-label bit set of touched faces: bit `2a` for the low face of
    /// axis `a`, bit `2a + 1` for the high face.
    pub fn faces_touched(&self) -> Vec<u8> {
        let mut faces = vec![0u8; self.sizes.len()];
        let d = self.dims.0;
        for z in 0..d[2] {
            for y in 0..d[1] {
                for x in 0..d[0] {
                    let l = self.labels[self.dims.index(x, y, z)];
                    if l == 0 {
                        continue;
                    }
                    let mut bits = 0u8;
                    for (a, c) in [x, y, z].into_iter().enumerate() {
                        if c == 0 {
                            bits |= 1 << (2 * a);
                        }
                        if c + 1 == d[a] {
                            bits |= 1 << (2 * a + 1);
                        }
                    }
                    faces[l as usize - 1] |= bits;
                }
            }
        }
        faces
    }
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let next = parent[i as usize];
        parent[i as usize] = parent[next as usize];
        i = next;
    }
    i
}

pub fn connected_components(mask: &MaskVolume, connectivity: Connectivity) -> Components {
    let dims = mask.dims();
    let data = mask.data();
    let offsets = connectivity.backward_offsets();
    let [nx, ny, nz] = dims.0;

    // provisional labels with union-find over them
    let mut prov = vec![u32::MAX; data.len()];
    let mut parent: Vec<u32> = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = dims.index(x, y, z);
                if data[i] == 0 {
                    continue;
                }
                let mut mine = u32::MAX;
                for o in &offsets {
                    let (qx, qy, qz) = (x as i64 + o[0], y as i64 + o[1], z as i64 + o[2]);
                    if !dims.contains([qx, qy, qz]) {
                        continue;
                    }
                    let q = prov[dims.index(qx as usize, qy as usize, qz as usize)];
                    if q == u32::MAX {
                        continue;
                    }
                    if mine == u32::MAX {
                        mine = find(&mut parent, q);
                    } else {
                        let (a, b) = (find(&mut parent, mine), find(&mut parent, q));
                        if a != b {
                            let (lo, hi) = (a.min(b), a.max(b));
                            parent[hi as usize] = lo;
                            mine = lo;
                        }
                    }
                }
                if mine == u32::MAX {
                    mine = parent.len() as u32;
                    parent.push(mine);
                }
                prov[i] = mine;
            }
        }
    }

    // roots are numbered by first appearance in scan order
    let mut root_slot = vec![u32::MAX; parent.len()];
    let mut sizes: Vec<usize> = Vec::new();
    let mut first: Vec<usize> = Vec::new();
    for (i, p) in prov.iter_mut().enumerate() {
        if *p == u32::MAX {
            continue;
        }
        let r = find(&mut parent, *p) as usize;
        if root_slot[r] == u32::MAX {
            root_slot[r] = sizes.len() as u32;
            sizes.push(0);
            first.push(i);
        }
        let s = root_slot[r];
        sizes[s as usize] += 1;
        *p = s;
    }

    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(first[a].cmp(&first[b])));
    let mut rank = vec![0u32; sizes.len()];
    for (k, &slot) in order.iter().enumerate() {
        rank[slot] = k as u32 + 1;
    }
    let labels = prov
        .into_iter()
        .map(|p| if p == u32::MAX { 0 } else { rank[p as usize] })
        .collect();
    let sizes = order.iter().map(|&s| sizes[s]).collect();
    Components {
        dims,
        labels,
        sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask_has_no_components() {
        let c = connected_components(&MaskVolume::zeros(Dims::cube(4)), Connectivity::TwentySix);
        assert_eq!(c.count(), 0);
        assert!(c.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn gap_separates_voxels() {
        let mut m = MaskVolume::zeros(Dims::cube(4));
        m.set(0, 0, 0, 1);
        m.set(2, 0, 0, 1);
        let c = connected_components(&m, Connectivity::TwentySix);
        assert_eq!(c.sizes, vec![1, 1]);
        assert_eq!(c.label(0, 0, 0), 1);
        assert_eq!(c.label(2, 0, 0), 2);
    }

    #[test]
    fn diagonal_joins_only_under_26() {
        let mut m = MaskVolume::zeros(Dims::cube(3));
        m.set(0, 0, 0, 1);
        m.set(1, 1, 1, 1);
        assert_eq!(connected_components(&m, Connectivity::TwentySix).count(), 1);
        assert_eq!(connected_components(&m, Connectivity::Six).count(), 2);
    }

    #[test]
    fn labels_ordered_by_size_then_position() {
        let mut m = MaskVolume::zeros(Dims::new(8, 1, 1));
        m.set(0, 0, 0, 1);
        m.set(2, 0, 0, 1);
        m.set(3, 0, 0, 1);
        m.set(5, 0, 0, 1);
        let c = connected_components(&m, Connectivity::Six);
        assert_eq!(c.sizes, vec![2, 1, 1]);
        assert_eq!(c.label(2, 0, 0), 1);
        assert_eq!(c.label(0, 0, 0), 2);
        assert_eq!(c.label(5, 0, 0), 3);
    }

    #[test]
    fn u_shape_merges_late() {
        // two arms joined only at the far end of the scan
        let mut m = MaskVolume::zeros(Dims::new(3, 3, 1));
        for y in 0..3 {
            m.set(0, y, 0, 1);
            m.set(2, y, 0, 1);
        }
        m.set(1, 2, 0, 1);
        let c = connected_components(&m, Connectivity::Six);
        assert_eq!(c.sizes, vec![7]);
    }

    #[test]
    fn faces_of_a_through_line() {
        let mut m = MaskVolume::zeros(Dims::cube(4));
        for x in 0..4 {
            m.set(x, 1, 1, 1);
        }
        let c = connected_components(&m, Connectivity::TwentySix);
        assert_eq!(c.faces_touched(), vec![0b11]);
    }
}

//! Independent reference implementations used as test oracles. None of
//! these call into the crate's geometry or labeling code.
#![allow(dead_code)]

use std::collections::VecDeque;

use angiosynth::geom::Vec3;
use angiosynth::treegen::{GrowthParams, Node, Segment, VesselTree};
use angiosynth::volume::{Dims, MaskVolume};

pub type P = [f64; 3];

pub fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot(a: P, b: P) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: P) -> f64 {
    dot(a, a).sqrt()
}

pub fn lerp(a: P, b: P, t: f64) -> P {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

pub fn point_seg(p: P, a: P, b: P) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    };
    norm(sub(p, lerp(a, b, t)))
}

/// Minimum over the unclamped interior stationary point and the four
/// endpoint-to-segment distances.
pub fn seg_seg(a: P, b: P, c: P, d: P) -> f64 {
    let mut best = point_seg(a, c, d)
        .min(point_seg(b, c, d))
        .min(point_seg(c, a, b))
        .min(point_seg(d, a, b));
    let u = sub(b, a);
    let v = sub(d, c);
    let w = sub(a, c);
    let (uu, uv, vv, uw, vw) = (dot(u, u), dot(u, v), dot(v, v), dot(u, w), dot(v, w));
    let det = uu * vv - uv * uv;
    if det > 1e-12 * uu.max(1.0) * vv.max(1.0) {
        let s = (uv * vw - vv * uw) / det;
        let t = (uu * vw - uv * uw) / det;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            best = best.min(norm(sub(lerp(a, b, s), lerp(c, d, t))));
        }
    }
    best
}

pub fn arr(v: angiosynth::geom::Vec3<f64>) -> P {
    v.to_array()
}

/// Capsules `(a, b, r)` of a segment, one per sub-step.
pub fn capsules(tree: &VesselTree<f64>, s: usize) -> Vec<(P, P, f64)> {
    tree.segments[s]
        .capsules()
        .iter()
        .map(|c| (arr(c.a), arr(c.b), c.radius))
        .collect()
}

/// Segment pairs within two hops in the graph whose vertices are segments
/// and whose edges join segments sharing a node.
pub fn two_hop_adjacent(tree: &VesselTree<f64>, i: usize, j: usize) -> bool {
    let ends = |s: usize| [tree.segments[s].parent, tree.segments[s].child];
    let share = |x: usize, y: usize| ends(x).iter().any(|n| ends(y).contains(n));
    if i == j || share(i, j) {
        return true;
    }
    (0..tree.segments.len()).any(|k| share(i, k) && share(k, j))
}

/// All non-adjacent capsule pairs whose surface gap is not above `margin`.
pub fn collision_violations(tree: &VesselTree<f64>, margin: f64) -> Vec<(usize, usize, f64)> {
    let n = tree.segments.len();
    let caps: Vec<_> = (0..n).map(|s| capsules(tree, s)).collect();
    let boxes: Vec<(P, P)> = caps
        .iter()
        .map(|cs| {
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for (a, b, r) in cs {
                for k in 0..3 {
                    lo[k] = lo[k].min(a[k] - r).min(b[k] - r);
                    hi[k] = hi[k].max(a[k] + r).max(b[k] + r);
                }
            }
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (li, hi) = boxes[i];
            let (lj, hj) = boxes[j];
            if (0..3).any(|k| li[k] > hj[k] + margin || lj[k] > hi[k] + margin) {
                continue;
            }
            if two_hop_adjacent(tree, i, j) {
                continue;
            }
            for &(a, b, ra) in &caps[i] {
                for &(c, d, rc) in &caps[j] {
                    let gap = seg_seg(a, b, c, d) - ra - rc;
                    if gap <= margin {
                        out.push((i, j, gap));
                    }
                }
            }
        }
    }
    out
}

/// Structural invariants of a grown tree; returns human-readable failures.
pub fn tree_violations(tree: &VesselTree<f64>, params: &GrowthParams<f64>) -> Vec<String> {
    let mut errs = Vec::new();
    let nn = tree.nodes.len();
    if tree.segments.len() + 1 != nn {
        errs.push(format!("{} segments for {} nodes", tree.segments.len(), nn));
        return errs;
    }
    let mut parent_of = vec![None; nn];
    for (i, s) in tree.segments.iter().enumerate() {
        if parent_of[s.child].is_some() {
            errs.push(format!("node {} has two parents", s.child));
        }
        parent_of[s.child] = Some(i);
    }
    if parent_of[tree.root].is_some() {
        errs.push("root has a parent".into());
    }
    // reachability from the root
    let mut children = vec![Vec::new(); nn];
    for (i, s) in tree.segments.iter().enumerate() {
        children[s.parent].push(i);
    }
    let mut seen = vec![false; nn];
    let mut queue = VecDeque::from([tree.root]);
    seen[tree.root] = true;
    while let Some(n) = queue.pop_front() {
        for &s in &children[n] {
            let c = tree.segments[s].child;
            if seen[c] {
                errs.push(format!("cycle through node {c}"));
                return errs;
            }
            seen[c] = true;
            queue.push_back(c);
        }
    }
    if seen.iter().any(|s| !s) {
        errs.push("unreachable nodes".into());
    }
    let g = params.murray_exponent;
    for (n, kids) in children.iter().enumerate() {
        let r_in = parent_of[n].map_or(tree.nodes[n].radius, |s| tree.segments[s].radius_end);
        let d_in = tree.nodes[n].depth;
        for &k in kids {
            let s = &tree.segments[k];
            if s.radius_start > r_in * (1.0 + 1e-12) {
                errs.push(format!("radius grows at node {n}"));
            }
            if s.radius_end > s.radius_start {
                errs.push(format!("radius grows along segment {k}"));
            }
        }
        match kids.len() {
            0 | 1 => {
                for &k in kids {
                    let d = tree.nodes[tree.segments[k].child].depth;
                    if d != d_in && d != d_in + 1 {
                        errs.push(format!("depth jump at node {n}"));
                    }
                    if d == d_in && tree.segments[k].radius_start != r_in {
                        errs.push(format!("continuation changes radius at node {n}"));
                    }
                }
            }
            2 => {
                let (a, b) = (tree.segments[kids[0]].radius_start, tree.segments[kids[1]].radius_start);
                let rel = ((a.powf(g) + b.powf(g)) - r_in.powf(g)).abs() / r_in.powf(g);
                if rel > 1e-9 {
                    errs.push(format!("murray residual {rel:e} at node {n}"));
                }
                for &k in kids {
                    if tree.nodes[tree.segments[k].child].depth != d_in + 1 {
                        errs.push(format!("bifurcation at node {n} does not add one depth level"));
                    }
                }
            }
            m => errs.push(format!("node {n} has {m} children")),
        }
    }
    let dims = params.domain_dims;
    for (k, s) in tree.segments.iter().enumerate() {
        for (p, r) in s.centerline.iter().zip(s.point_radii()) {
            for a in 0..3 {
                if p[a] < r || p[a] > dims[a] as f64 - r {
                    errs.push(format!("segment {k} point {:?} lacks clearance {r}", p.to_array()));
                }
            }
        }
    }
    errs
}

/// Breadth-first flood fill labeling; labels in first-visit order.
pub fn flood_fill_labels(mask: &MaskVolume, diag: bool) -> Vec<u32> {
    let d = mask.dims();
    let mut labels = vec![0u32; d.len()];
    let mut next = 0;
    let mut offsets = Vec::new();
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let m = dx.abs() + dy.abs() + dz.abs();
                if m == 0 || (!diag && m != 1) {
                    continue;
                }
                offsets.push([dx, dy, dz]);
            }
        }
    }
    for start in 0..d.len() {
        if mask.data()[start] == 0 || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let [x, y, z] = d.coords(i);
            for o in &offsets {
                let q = [x as i64 + o[0], y as i64 + o[1], z as i64 + o[2]];
                if !(0..3).all(|a| q[a] >= 0 && (q[a] as usize) < d.0[a]) {
                    continue;
                }
                let j = d.index(q[0] as usize, q[1] as usize, q[2] as usize);
                if mask.data()[j] != 0 && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    labels
}

/// Whether two labelings induce the same partition.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    use std::collections::HashMap;
    let mut ab = HashMap::new();
    let mut ba = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x == 0) != (y == 0) {
            return false;
        }
        if *ab.entry(x).or_insert(y) != y || *ba.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

pub fn random_mask(dims: Dims, density: f64, rng: &mut impl rand::Rng) -> MaskVolume {
    let data = (0..dims.len())
        .map(|_| u8::from(rng.random_bool(density)))
        .collect();
    MaskVolume::from_vec(dims, data).unwrap()
}

pub fn point_seg_sq(p: P, a: P, b: P) -> f64 {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    let t = if l2 > 0.0 { (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + ab[0] * t - p[0], a[1] + ab[1] * t - p[1], a[2] + ab[2] * t - p[2]];
    dot(q, q)
}

pub fn single_segment(points: Vec<[f64; 3]>, r: f64) -> VesselTree<f64> {
    let first = points[0];
    let last = *points.last().unwrap();
    VesselTree {
        nodes: vec![
            Node { position: Vec3::from_array(first), radius: r, depth: 0 },
            Node { position: Vec3::from_array(last), radius: r, depth: 0 },
        ],
        segments: vec![Segment {
            parent: 0,
            child: 1,
            centerline: points.into_iter().map(Vec3::from_array).collect(),
            radius_start: r,
            radius_end: r,
        }],
        root: 0,
    }
}

/// Every voxel center tested against every polyline piece, plus the voxels
/// holding centerline points.
pub fn exhaustive_raster(points: &[[f64; 3]], r: f64, n: usize) -> MaskVolume {
    let dims = Dims::cube(n);
    let mut m = MaskVolume::zeros(dims);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let c = [x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5];
                let hit = if points.len() == 1 {
                    point_seg_sq(c, points[0], points[0]) <= r * r
                } else {
                    points.windows(2).any(|w| point_seg_sq(c, w[0], w[1]) <= r * r)
                };
                if hit {
                    m.set(x, y, z, 1);
                }
            }
        }
    }
    for p in points {
        let v = p.map(|c| (c.floor() as usize).min(n - 1));
        m.set(v[0], v[1], v[2], 1);
    }
    m
}

//! Breadth-first stochastic growth of bifurcating vessel trees.
//!
//! Tips are processed FIFO across the whole frontier. A tip either
//! bifurcates (probability `p0 * rho^depth`, child radii from the Murray
//! split) or continues with its radius unchanged. Every new segment is a
//! biased random walk that must pass [`validate_path`] within
//! `max_attempts` draws; otherwise that branch ends.

mod index;
mod murray;
mod params;
mod walk;

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{random_perpendicular, uniform, Vec3};
use crate::rng::rng_from_seed;
use crate::scalar::Real;

pub use index::{chain_capsules, inside_domain, validate_path, Capsule, OccupancyIndex};
pub use murray::{murray_residual, sample_bifurcation};
pub use params::{GrowthParams, RETRY_CONE_DEGREES, ROOT_CONE_DEGREES, TURN_CAP_DEGREES};
pub use walk::{arc_length, measure_tortuosity, propose_segment, walk_path, ProposedPath};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Node<T> {
    pub position: Vec3<T>,
    pub radius: T,
    pub depth: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Segment<T> {
    pub parent: usize,
    pub child: usize,
    pub centerline: Vec<Vec3<T>>,
    pub radius_start: T,
    pub radius_end: T,
}

impl<T: Real> Segment<T> {
    /// Radius at each centerline point, linear in arc length.
    pub fn point_radii(&self) -> Vec<T> {
        let total = arc_length(&self.centerline);
        if self.radius_start == self.radius_end || total <= T::zero() {
            return vec![self.radius_start; self.centerline.len()];
        }
        let mut s = T::zero();
        let mut out = Vec::with_capacity(self.centerline.len());
        for (i, p) in self.centerline.iter().enumerate() {
            if i > 0 {
                s += self.centerline[i - 1].distance(*p);
            }
            let f = s / total;
            out.push(self.radius_start + (self.radius_end - self.radius_start) * f);
        }
        out
    }

    /// Sub-step capsules. Radius is constant within a sub-step and taken at
    /// the sub-step midpoint.
    pub fn capsules(&self) -> Vec<Capsule<T>> {
        let pts = &self.centerline;
        if pts.len() == 1 {
            return vec![Capsule::new(pts[0], pts[0], self.radius_start.max(self.radius_end))];
        }
        let total = arc_length(pts);
        let two = T::lit(2.0);
        let mut s = T::zero();
        pts.windows(2)
            .map(|w| {
                let len = w[0].distance(w[1]);
                let f = if total > T::zero() {
                    (s + len / two) / total
                } else {
                    T::zero()
                };
                s += len;
                let r = self.radius_start + (self.radius_end - self.radius_start) * f;
                Capsule::new(w[0], w[1], r)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct VesselTree<T> {
    pub nodes: Vec<Node<T>>,
    pub segments: Vec<Segment<T>>,
    #[serde(rename = "root_idx")]
    pub root: usize,
}

/// A bifurcation node with the radius feeding it and its two children.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bifurcation<T> {
    pub node: usize,
    pub parent_radius: T,
    pub child_radii: [T; 2],
}

impl<T: Real> VesselTree<T> {
    pub fn empty() -> Self {
        Self {
            nodes: Vec::new(),
            segments: Vec::new(),
            root: 0,
        }
    }

    /// Outgoing segment ids per node.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, s) in self.segments.iter().enumerate() {
            out[s.parent].push(i);
        }
        out
    }

    /// Incoming segment id per node (`None` for the root).
    pub fn incoming(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.nodes.len()];
        for (i, s) in self.segments.iter().enumerate() {
            out[s.child] = Some(i);
        }
        out
    }

    pub fn bifurcations(&self) -> Vec<Bifurcation<T>> {
        let incoming = self.incoming();
        self.children()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.len() == 2)
            .map(|(n, c)| Bifurcation {
                node: n,
                parent_radius: incoming[n]
                    .map(|s| self.segments[s].radius_end)
                    .unwrap_or(self.nodes[n].radius),
                child_radii: [
                    self.segments[c[0]].radius_start,
                    self.segments[c[1]].radius_start,
                ],
            })
            .collect()
    }

    /// Whether two segments are within two hops of each other in the
    /// segment adjacency graph (they share a node, or both share a node with
    /// a third segment). Such pairs are exempt from collision checks.
    pub fn segments_adjacent(&self, i: usize, j: usize, incident: &[Vec<usize>]) -> bool {
        let ends = |s: usize| [self.segments[s].parent, self.segments[s].child];
        let (ei, ej) = (ends(i), ends(j));
        if ei.iter().any(|n| ej.contains(n)) {
            return true;
        }
        ei.iter().any(|&n| {
            incident[n].iter().any(|&k| {
                let ek = ends(k);
                ek.iter().any(|m| ej.contains(m))
            })
        })
    }

    /// Segment ids touching each node.
    pub fn incident(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, s) in self.segments.iter().enumerate() {
            out[s.parent].push(i);
            out[s.child].push(i);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Branch decisions and termination causes recorded while growing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthLog {
    /// `[decisions, bifurcations]` per tip depth.
    pub branch_decisions: Vec<[u64; 2]>,
    pub terminated_radius: u64,
    pub terminated_depth: u64,
    /// Branches abandoned after `max_attempts` rejected paths.
    pub terminated_blocked: u64,
    pub rejected_paths: u64,
    /// Rejections caused by domain clearance (the rest are collisions).
    pub rejected_out_of_domain: u64,
    pub hit_segment_cap: bool,
}

impl GrowthLog {
    fn record_decision(&mut self, depth: u32, branched: bool) {
        let d = depth as usize;
        if self.branch_decisions.len() <= d {
            self.branch_decisions.resize(d + 1, [0, 0]);
        }
        self.branch_decisions[d][0] += 1;
        self.branch_decisions[d][1] += u64::from(branched);
    }
}

struct Tip<T> {
    node: usize,
    direction: Vec3<T>,
    radius: T,
    depth: u32,
    /// Start node of the segment that ended at this tip.
    upstream: Option<usize>,
}

struct Grower<'a, T: Real> {
    params: &'a GrowthParams<T>,
    tree: VesselTree<T>,
    index: OccupancyIndex<T>,
    incident: Vec<Vec<usize>>,
    log: GrowthLog,
}

impl<'a, T: Real> Grower<'a, T> {
    fn add_node(&mut self, position: Vec3<T>, radius: T, depth: u32) -> usize {
        self.tree.nodes.push(Node {
            position,
            radius,
            depth,
        });
        self.incident.push(Vec::new());
        self.tree.nodes.len() - 1
    }

    fn commit(&mut self, from: usize, path: Vec<Vec3<T>>, radius: T, depth: u32) -> usize {
        let end = *path.last().expect("non-empty path");
        let child = self.add_node(end, radius, depth);
        let seg_id = self.tree.segments.len();
        let seg = Segment {
            parent: from,
            child,
            centerline: path,
            radius_start: radius,
            radius_end: radius,
        };
        for c in seg.capsules() {
            self.index.insert(seg_id, c);
        }
        self.tree.segments.push(seg);
        self.incident[from].push(seg_id);
        self.incident[child].push(seg_id);
        child
    }

    fn exempt_for(&self, tip: &Tip<T>) -> Vec<usize> {
        let mut ex = self.incident[tip.node].clone();
        if let Some(up) = tip.upstream {
            ex.extend_from_slice(&self.incident[up]);
        }
        ex.sort_unstable();
        ex.dedup();
        ex
    }

    /// Up to `max_attempts` walks from `tip`; commits the first valid one.
    fn extend<R: Rng + ?Sized>(
        &mut self,
        tip: &Tip<T>,
        direction: Vec3<T>,
        radius: T,
        depth: u32,
        rng: &mut R,
    ) -> Option<Tip<T>> {
        if self.tree.segments.len() >= self.params.max_segments {
            self.log.hit_segment_cap = true;
            return None;
        }
        let exempt = self.exempt_for(tip);
        let start = self.tree.nodes[tip.node].position;
        let attempts = self.params.max_attempts;
        for attempt in 0..attempts {
            let heading = retry_heading(direction, attempt, attempts, rng);
            let path = propose_segment(start, heading, self.params, rng);
            let radii = vec![radius; path.points.len()];
            if validate_path(&path.points, &radii, &self.index, self.params, &exempt) {
                let node = self.commit(tip.node, path.points, radius, depth);
                return Some(Tip {
                    node,
                    direction: path.end_direction,
                    radius,
                    depth,
                    upstream: Some(tip.node),
                });
            }
            self.log.rejected_paths += 1;
            if !path
                .points
                .iter()
                .all(|q| inside_domain(*q, radius, self.params.domain_dims))
            {
                self.log.rejected_out_of_domain += 1;
            }
        }
        self.log.terminated_blocked += 1;
        None
    }

    fn place_root<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Tip<T>> {
        let p = self.params;
        let dims = p.domain_dims;
        let cone = T::lit(ROOT_CONE_DEGREES.to_radians());
        for _ in 0..p.max_attempts {
            let face = rng.random_range(0..6u32) as usize;
            let (axis, high_side) = (face / 2, face % 2 == 1);
            let r0 = uniform(rng, p.root_radius_range[0], p.root_radius_range[1]);
            let mut pos = [T::zero(); 3];
            for (a, v) in pos.iter_mut().enumerate() {
                let extent = T::lit(dims[a] as f64);
                *v = if a == axis {
                    if high_side {
                        extent - r0
                    } else {
                        r0
                    }
                } else {
                    uniform(rng, r0, extent - r0)
                };
            }
            let inward = Vec3::axis(axis, if high_side { -T::one() } else { T::one() });
            let tilt_axis = random_perpendicular(rng, inward);
            let tilt = uniform(rng, T::zero(), cone);
            let direction = inward.rotate_about(tilt_axis, tilt).normalized();
            let position = Vec3::from_array(pos);
            if !inside_domain(position, r0, dims) {
                continue;
            }
            let path = propose_segment(position, direction, p, rng);
            let radii = vec![r0; path.points.len()];
            if !validate_path(&path.points, &radii, &self.index, p, &[]) {
                continue;
            }
            let root = self.add_node(position, r0, 0);
            self.tree.root = root;
            let node = self.commit(root, path.points, r0, 0);
            return Ok(Tip {
                node,
                direction: path.end_direction,
                radius: r0,
                depth: 0,
                upstream: Some(root),
            });
        }
        Err(Error::DomainTooSmall)
    }

    fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let p = self.params;
        let first = self.place_root(rng)?;
        let mut frontier = VecDeque::from([first]);
        while let Some(tip) = frontier.pop_front() {
            if tip.radius < p.min_radius {
                self.log.terminated_radius += 1;
                continue;
            }
            if tip.depth > p.max_depth {
                self.log.terminated_depth += 1;
                continue;
            }
            let u: f64 = rng.random();
            let branch = T::lit(u) < p.branch_probability(tip.depth);
            self.log.record_decision(tip.depth, branch);
            if branch {
                let split = uniform(rng, p.flow_split_range[0], p.flow_split_range[1]);
                let (r1, r2) = sample_bifurcation(tip.radius, split, p.murray_exponent)?;
                let a1 = uniform(rng, p.branch_angle_range[0], p.branch_angle_range[1]);
                let a2 = uniform(rng, p.branch_angle_range[0], p.branch_angle_range[1]);
                let (small, large) = (a1.min(a2).to_radians(), a1.max(a2).to_radians());
                // The thicker child deviates less from the parent heading.
                let (angle1, angle2) = if r1 >= r2 { (small, large) } else { (large, small) };
                let plane_normal = random_perpendicular(rng, tip.direction);
                let d1 = tip.direction.rotate_about(plane_normal, angle1).normalized();
                let d2 = tip.direction.rotate_about(plane_normal, -angle2).normalized();
                let depth = tip.depth + 1;
                if let Some(t) = self.extend(&tip, d1, r1, depth, rng) {
                    frontier.push_back(t);
                }
                if let Some(t) = self.extend(&tip, d2, r2, depth, rng) {
                    frontier.push_back(t);
                }
            } else if let Some(t) = self.extend(&tip, tip.direction, tip.radius, tip.depth, rng) {
                frontier.push_back(t);
            }
        }
        Ok(())
    }
}

/// Heading for the `attempt`-th path try: the requested direction first,
/// then deflections drawn from a cone that widens linearly up to
/// [`RETRY_CONE_DEGREES`] on the last attempt.
fn retry_heading<T: Real, R: Rng + ?Sized>(
    direction: Vec3<T>,
    attempt: u32,
    attempts: u32,
    rng: &mut R,
) -> Vec3<T> {
    if attempt == 0 {
        return direction;
    }
    let frac = T::lit(attempt as f64 / (attempts.max(2) - 1) as f64);
    let cone = T::lit(RETRY_CONE_DEGREES.to_radians()) * frac;
    let axis = random_perpendicular(rng, direction);
    let angle = uniform(rng, T::zero(), cone);
    direction.rotate_about(axis, angle).normalized()
}

/// Grows one tree. A pure function of `(params, seed)`.
pub fn grow_tree<T: Real>(params: &GrowthParams<T>, seed: u64) -> Result<VesselTree<T>> {
    grow_tree_logged(params, seed).map(|(t, _)| t)
}

/// [`grow_tree`] that also returns the growth log.
pub fn grow_tree_logged<T: Real>(
    params: &GrowthParams<T>,
    seed: u64,
) -> Result<(VesselTree<T>, GrowthLog)> {
    params.validate()?;
    let mut rng = rng_from_seed(seed);
    let cell = T::lit(2.0) * params.root_radius_range[1];
    let mut grower = Grower {
        params,
        tree: VesselTree::empty(),
        index: OccupancyIndex::new(cell.max(T::one())),
        incident: Vec::new(),
        log: GrowthLog::default(),
    };
    grower.run(&mut rng)?;
    Ok((grower.tree, grower.log))
}

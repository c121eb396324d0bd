mod common;

use angiosynth::geom::Vec3;
use angiosynth::pipeline::dataset_growth;
use angiosynth::rng::rng_from_seed;
use angiosynth::treegen::{
    chain_capsules, grow_tree, grow_tree_logged, measure_tortuosity, murray_residual,
    propose_segment, sample_bifurcation, validate_path, walk_path, Capsule, GrowthParams,
    OccupancyIndex, VesselTree,
};
use common::{arr, collision_violations, point_seg, seg_seg, tree_violations, two_hop_adjacent};
use proptest::prelude::*;
use rand::Rng;
use rayon::prelude::*;

fn small_params() -> GrowthParams<f64> {
    GrowthParams {
        domain_dims: [64, 64, 64],
        root_radius_range: [2.0, 4.0],
        segment_length_range: [6.0, 14.0],
        ..GrowthParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grown_trees_satisfy_structural_invariants(
        seed in any::<u64>(),
        tau in 0.0f64..=1.0,
        kappa in 0.0f64..=1.0,
        p0 in 0.0f64..=1.0,
    ) {
        let params = GrowthParams {
            tortuosity: tau,
            persistence: kappa,
            branch_prob_base: p0,
            ..small_params()
        };
        let tree = grow_tree(&params, seed).unwrap();
        let errs = tree_violations(&tree, &params);
        prop_assert!(errs.is_empty(), "{:?}", errs);
        for n in &tree.nodes {
            prop_assert!(n.depth <= params.max_depth + 1);
        }
    }

    #[test]
    fn bifurcation_conserves_cubed_radius(r in 0.1f64..20.0, u in 0.01f64..0.99, gamma in 1.5f64..4.0) {
        let (a, b) = sample_bifurcation(r, u, gamma).unwrap();
        let rel = (a.powf(gamma) + b.powf(gamma) - r.powf(gamma)).abs() / r.powf(gamma);
        prop_assert!(rel < 1e-12);
        prop_assert!(murray_residual(r, a, b, gamma) < 1e-12);
        prop_assert!(a < r && b < r);
    }

    #[test]
    fn walk_points_are_step_spaced(seed in any::<u64>(), tau in 0.0f64..=1.0, len in 1.0f64..40.0) {
        let params = GrowthParams { tortuosity: tau, ..GrowthParams::default() };
        let mut rng = rng_from_seed(seed);
        let start = Vec3::new(80.0, 80.0, 80.0);
        let path = walk_path(start, Vec3::new(0.0, 0.0, 1.0), len, &params, &mut rng);
        let gaps: Vec<f64> = path.points.windows(2).map(|w| w[0].distance(w[1])).collect();
        for (i, g) in gaps.iter().enumerate() {
            prop_assert!(*g <= params.step_length + 1e-9);
            if i + 1 < gaps.len() {
                prop_assert!((g - params.step_length).abs() < 1e-9);
            }
        }
        prop_assert!((gaps.iter().sum::<f64>() - len).abs() < 1e-9);
    }
}

#[test]
fn seed_fully_determines_tree() {
    let params = GrowthParams::<f64>::high_tortuosity();
    for seed in [0, 1, u64::MAX] {
        assert_eq!(grow_tree(&params, seed).unwrap(), grow_tree(&params, seed).unwrap());
    }
    assert_ne!(grow_tree(&params, 1).unwrap(), grow_tree(&params, 2).unwrap());
}

#[test]
fn growth_is_independent_of_thread_count() {
    let params = dataset_growth(0.6);
    let grow_all = |threads: usize| -> Vec<VesselTree<f64>> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (0..8u64).into_par_iter().map(|s| grow_tree(&params, s).unwrap()).collect())
    };
    assert_eq!(grow_all(1), grow_all(8));
}

#[test]
fn json_round_trip_is_lossless() {
    let tree = grow_tree(&small_params(), 9).unwrap();
    let back = VesselTree::<f64>::from_json(&tree.to_json().unwrap()).unwrap();
    assert_eq!(tree, back);
}

#[test]
fn dense_and_tortuous_trees_have_no_collisions() {
    for (params, seeds) in [(dataset_growth(0.6), 0..2u64), (GrowthParams::high_tortuosity(), 0..4)] {
        for seed in seeds {
            let tree = grow_tree(&params, seed).unwrap();
            assert!(tree_violations(&tree, &params).is_empty());
            let v = collision_violations(&tree, params.collision_margin);
            assert!(v.is_empty(), "seed {seed}: {} violations, first {:?}", v.len(), v[0]);
        }
    }
}

#[test]
fn adjacency_helper_matches_two_hop_oracle() {
    let tree = grow_tree(&small_params(), 3).unwrap();
    let incident = tree.incident();
    let n = tree.segments.len();
    assert!(n > 5);
    for i in 0..n {
        for j in 0..n {
            assert_eq!(tree.segments_adjacent(i, j, &incident), two_hop_adjacent(&tree, i, j), "{i} {j}");
        }
    }
}

#[test]
fn branch_frequency_follows_depth_decay() {
    let params = GrowthParams::<f64>::default();
    let mut totals = [[0u64; 2]; 6];
    for seed in 0..500 {
        let (_, log) = grow_tree_logged(&params, seed).unwrap();
        for (k, d) in log.branch_decisions.iter().take(6).enumerate() {
            totals[k][0] += d[0];
            totals[k][1] += d[1];
        }
    }
    for (k, [n, b]) in totals.iter().enumerate() {
        let expected = params.branch_probability(k as u32);
        assert!(*n >= 200, "depth {k}: only {n} decisions");
        let observed = *b as f64 / *n as f64;
        assert!((observed - expected).abs() <= 0.05, "depth {k}: {observed} vs {expected}");
    }
}

#[test]
fn zero_branch_probability_gives_a_path() {
    let params = GrowthParams { branch_prob_base: 0.0, ..small_params() };
    for seed in 0..10 {
        let tree = grow_tree(&params, seed).unwrap();
        let children = tree.children();
        assert!(children.iter().all(|c| c.len() <= 1));
        assert!(tree.nodes.iter().all(|n| n.depth == 0));
        assert!(tree.bifurcations().is_empty());
    }
}

#[test]
fn proposed_segments_respect_length_range() {
    let params = GrowthParams::<f64>::high_tortuosity();
    let [lo, hi] = params.segment_length_range;
    let mut rng = rng_from_seed(11);
    for _ in 0..10_000 {
        let p = propose_segment(Vec3::new(80.0, 80.0, 80.0), Vec3::new(1.0, 0.0, 0.0), &params, &mut rng);
        let gaps: Vec<f64> = p.points.windows(2).map(|w| w[0].distance(w[1])).collect();
        let arc: f64 = gaps.iter().sum();
        assert!(arc >= lo - 1e-9 && arc <= hi + params.step_length);
        assert!(gaps.iter().all(|g| *g <= params.step_length + 1e-9));
        assert!((p.end_direction.norm() - 1.0).abs() < 1e-9);
    }
}

fn mean_tortuosity(tau: f64, n: usize, seed: u64) -> f64 {
    let params = GrowthParams { tortuosity: tau, ..GrowthParams::default() };
    let mut rng = rng_from_seed(seed);
    let total: f64 = (0..n)
        .map(|_| {
            let p = propose_segment(Vec3::new(80.0, 80.0, 80.0), Vec3::new(0.0, 1.0, 0.0), &params, &mut rng);
            measure_tortuosity(&p.points).unwrap()
        })
        .sum();
    total / n as f64
}

#[test]
fn straight_walk_has_unit_tortuosity() {
    let m = mean_tortuosity(0.0, 500, 3);
    assert!((m - 1.0).abs() < 1e-6, "{m}");
}

#[test]
fn tortuosity_increases_with_tau() {
    let means: Vec<f64> = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0].iter().map(|&t| mean_tortuosity(t, 2000, 5)).collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
}

#[test]
fn tortuosity_of_known_polylines() {
    let l = |v: &[[f64; 3]]| v.iter().map(|a| Vec3::from_array(*a)).collect::<Vec<_>>();
    let straight = l(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
    assert_eq!(measure_tortuosity(&straight).unwrap(), 1.0);
    let corner = l(&[[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [3.0, 4.0, 0.0]]);
    assert!((measure_tortuosity(&corner).unwrap() - 7.0 / 5.0).abs() < 1e-12);
    let closed = l(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    assert!(measure_tortuosity(&closed).is_err());
    assert!(measure_tortuosity(&l(&[[0.0, 0.0, 0.0]])).is_err());
}

fn random_unit(rng: &mut impl Rng) -> Vec3<f64> {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() > 0.1 && v.norm() <= 1.0 {
            return v.normalized();
        }
    }
}

#[test]
fn path_validation_matches_brute_force() {
    let params = GrowthParams::<f64> { tortuosity: 0.6, ..GrowthParams::default() };
    let tree = grow_tree(&dataset_growth(0.6), 4).unwrap();
    let mut index = OccupancyIndex::new(2.0 * params.root_radius_range[1]);
    for (s, seg) in tree.segments.iter().enumerate() {
        for c in seg.capsules() {
            index.insert(s, c);
        }
    }
    let committed: Vec<(usize, [f64; 3], [f64; 3], f64)> =
        index.entries().iter().map(|(s, c)| (*s, arr(c.a), arr(c.b), c.radius)).collect();
    let mut rng = rng_from_seed(77);
    let (mut accepted, mut rejected) = (0, 0);
    for _ in 0..1000 {
        let start = Vec3::new(
            rng.random_range(0.0..160.0),
            rng.random_range(0.0..160.0),
            rng.random_range(0.0..160.0),
        );
        let r = rng.random_range(0.5..4.0);
        let path = propose_segment(start, random_unit(&mut rng), &params, &mut rng);
        let radii = vec![r; path.points.len()];
        let exempt: Vec<usize> = (0..rng.random_range(0..4)).map(|_| rng.random_range(0..tree.segments.len())).collect();
        let pts: Vec<[f64; 3]> = path.points.iter().map(|p| arr(*p)).collect();
        let in_domain = pts.iter().all(|p| (0..3).all(|a| p[a] >= r && p[a] <= 160.0 - r));
        let clear = pts.windows(2).all(|w| {
            committed
                .iter()
                .filter(|(s, ..)| !exempt.contains(s))
                .all(|(_, a, b, rc)| seg_seg(w[0], w[1], *a, *b) > r + rc + params.collision_margin)
        });
        let expected = in_domain && clear;
        assert_eq!(validate_path(&path.points, &radii, &index, &params, &exempt), expected);
        if expected {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    assert!(accepted > 50 && rejected > 50, "{accepted} / {rejected}");
}

#[test]
fn capsule_gap_matches_oracle() {
    let mut rng = rng_from_seed(8);
    for _ in 0..10_000 {
        let mut p = || {
            let s = rng.random_range(0.0..1.0) < 0.2;
            let v = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            if s { v.map(|c: f64| c.round()) } else { v }
        };
        let (a, b, c, d) = (p(), p(), p(), p());
        let c1 = Capsule::new(a, b, 0.5);
        let c2 = Capsule::new(c, d, 1.0);
        let oracle = seg_seg(arr(a), arr(b), arr(c), arr(d));
        assert!((c1.axis_distance(&c2) - oracle).abs() < 1e-9, "{a:?} {b:?} {c:?} {d:?}");
        assert!((c1.gap(&c2) - (oracle - 1.5)).abs() < 1e-9);
    }
}

#[test]
fn occupancy_index_registration_is_sound_and_complete() {
    let mut rng = rng_from_seed(21);
    let mut index = OccupancyIndex::new(6.0);
    for s in 0..200 {
        let a = Vec3::new(rng.random_range(0.0..60.0), rng.random_range(0.0..60.0), rng.random_range(0.0..60.0));
        let b = a + random_unit(&mut rng) * rng.random_range(0.0..8.0);
        index.insert(s, Capsule::new(a, b, rng.random_range(0.2..3.0)));
    }
    let cell = index.cell_size();
    for (id, (_, c)) in index.entries().iter().enumerate() {
        let cells = index.cells_of(id);
        // every registered cell meets the capsule
        for key in &cells {
            let lo = [key[0] as f64 * cell, key[1] as f64 * cell, key[2] as f64 * cell];
            let near = (0..=2000).any(|i| {
                let q = common::lerp(arr(c.a), arr(c.b), i as f64 / 2000.0);
                let clamped = [0, 1, 2].map(|k| q[k].clamp(lo[k], lo[k] + cell));
                common::norm(common::sub(q, clamped)) <= c.radius + 1e-2
            });
            assert!(near, "capsule {id} registered in distant cell {key:?}");
        }
        // every point of the capsule lies in a registered cell
        for _ in 0..200 {
            let t = rng.random_range(0.0..=1.0);
            let axis_pt = common::lerp(arr(c.a), arr(c.b), t);
            let off = random_unit(&mut rng) * (c.radius * rng.random_range(0.0..1.0f64).cbrt());
            let p = [axis_pt[0] + off.x, axis_pt[1] + off.y, axis_pt[2] + off.z];
            assert!(point_seg(p, arr(c.a), arr(c.b)) <= c.radius + 1e-12);
            let key = p.map(|v| (v / cell).floor() as i32);
            assert!(cells.contains(&key), "capsule {id} misses cell {key:?}");
        }
    }
}

#[test]
fn chained_capsules_follow_the_polyline() {
    let pts: Vec<Vec3<f64>> = (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
    let radii = [3.0, 2.5, 2.0, 1.5, 1.0];
    let caps = chain_capsules(&pts, &radii);
    assert_eq!(caps.len(), 4);
    for (i, c) in caps.iter().enumerate() {
        assert_eq!(c.a, pts[i]);
        assert_eq!(c.b, pts[i + 1]);
        assert!(c.radius >= radii[i + 1] && c.radius <= radii[i]);
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let bad = [
        GrowthParams { root_radius_range: [6.0, 3.0], ..GrowthParams::<f64>::default() },
        GrowthParams { step_length: 0.0, ..GrowthParams::default() },
        GrowthParams { tortuosity: 1.5, ..GrowthParams::default() },
        GrowthParams { branch_prob_base: -0.1, ..GrowthParams::default() },
        GrowthParams { flow_split_range: [0.0, 0.5], ..GrowthParams::default() },
        GrowthParams { domain_dims: [4, 4, 4], ..GrowthParams::default() },
    ];
    for p in &bad {
        assert!(grow_tree(p, 0).is_err(), "{p:?}");
    }
}

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use icenav_core::field::{Floe, IceField};
use icenav_core::geometry::Vec2;
use icenav_core::lattice::Pose;
use icenav_core::occupancy::{rasterize, OccupancyGrid};
use icenav_core::planner::{
    enumerate_paths, evaluate_path, optimal_oracle, plan_predictive, plan_predictive_reference, plan_static_lattice, plan_straight,
    plan_with_rollout, EnumeratedPath, PathResult,
};
use icenav_core::predictor::RolloutPredictor;
use icenav_core::NavContext;

mod common;

/// Shortest lattice distance to the goal line by plain Dijkstra.
fn dijkstra_distance(ctx: &NavContext, start: Pose, y_goal: f64) -> f64 {
    let mut best: HashMap<Pose, f64> = HashMap::from([(start, 0.0)]);
    let mut heap = BinaryHeap::from([Reverse((0f64.to_bits(), start))]);
    while let Some(Reverse((bits, pose))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > best[&pose] {
            continue;
        }
        if ctx.y(&pose) >= y_goal {
            return d;
        }
        for (p, next) in ctx.successors(&pose) {
            let nd = d + p.arc_length;
            if best.get(&next).is_none_or(|&old| nd < old) {
                best.insert(next, nd);
                heap.push(Reverse((nd.to_bits(), next)));
            }
        }
    }
    f64::INFINITY
}

fn check_decomposition(r: &PathResult) {
    let d: f64 = r.edges.iter().map(|e| e.distance).sum();
    let c: f64 = r.edges.iter().map(|e| e.collision).sum();
    assert!((r.distance - d).abs() < 1e-9);
    assert!((r.collision_cost - c).abs() < 1e-12);
    assert!((r.total_cost - (r.distance + r.alpha * r.collision_cost)).abs() < 1e-9);
    for e in &r.edges {
        assert!(e.distance <= e.cost && e.cost <= e.distance + r.alpha);
    }
}

#[test]
fn empty_channel_gives_the_straight_path() {
    let ctx = common::small_context();
    let empty = IceField::empty(ctx.channel);
    let opts = common::options(&ctx, 50.0);
    let r = plan_with_rollout(&opts, &empty).unwrap();
    let straight = plan_straight(&opts, &empty).unwrap();
    assert_eq!(r.collision_cost, 0.0);
    assert_eq!(r.distance, straight.distance);
    assert_eq!(straight.distance, ((opts.y_goal - ctx.y(&opts.start)) / 0.5).ceil() * 0.5);
    assert!(r.path.poses.iter().all(|p| p.ix == opts.start.ix && p.heading == 4));
    let oracle = optimal_oracle(&opts, &empty, 100_000).unwrap();
    assert_eq!(oracle.total_cost, oracle.distance);
    assert_eq!(oracle.total_cost, r.total_cost);
    let lattice = plan_static_lattice(&opts, &OccupancyGrid::zeros(ctx.spec)).unwrap();
    assert_eq!((lattice.distance, lattice.predictions_made), (r.distance, 0));
}

#[test]
fn zero_alpha_matches_dijkstra() {
    let ctx = common::small_context();
    for seed in 0..6u64 {
        let f = common::field(&ctx, 0.2 + 0.1 * (seed % 4) as f64, seed);
        let opts = common::options(&ctx, 0.0);
        let r = plan_with_rollout(&opts, &f).unwrap();
        assert_eq!(r.distance, dijkstra_distance(&ctx, opts.start, opts.y_goal), "seed {seed}");
        assert_eq!(r.total_cost, r.distance);
    }
}

#[test]
fn planners_keep_their_cost_decomposition() {
    let ctx = common::small_context();
    for seed in 0..4u64 {
        let f = common::field(&ctx, 0.4, 40 + seed);
        let opts = common::options(&ctx, 100.0);
        check_decomposition(&plan_with_rollout(&opts, &f).unwrap());
        check_decomposition(&plan_straight(&opts, &f).unwrap());
        let lattice = plan_static_lattice(&opts, &rasterize(&f, &ctx.spec)).unwrap();
        assert_eq!(lattice.predictions_made, 0);
        for e in &lattice.edges {
            assert!(e.distance <= e.cost && e.cost <= e.distance + 100.0);
        }
    }
}

#[test]
fn static_lattice_steers_around_a_full_cell() {
    let ctx = common::small_context();
    let opts = common::options(&ctx, 1000.0);
    let mut grid = OccupancyGrid::zeros(ctx.spec);
    let p = ctx.position(&opts.start);
    let (r, c) = ctx.spec.cell_of(p + Vec2::new(0.0, 2.5));
    grid.set(r as usize, c as usize, 1.0);
    let blocked = plan_static_lattice(&opts, &grid).unwrap();
    assert!(blocked.path.poses.iter().any(|q| q.ix != opts.start.ix));
    assert!(blocked.distance > plan_static_lattice(&opts, &OccupancyGrid::zeros(ctx.spec)).unwrap().distance);
    assert_eq!(blocked.collision_cost, 0.0);
}

fn square(id: u32, centre: Vec2, half: f64) -> Floe {
    let v = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].map(|(x, y)| centre + Vec2::new(x * half, y * half));
    Floe::new(id, v.to_vec(), 900.0, 0.012).unwrap()
}

#[test]
fn floe_left_of_the_route_is_avoided_on_the_right() {
    let ctx = common::small_context();
    let start = ctx.start_pose();
    let p = ctx.position(&start);
    let floe = square(0, p + Vec2::new(-0.2, 2.0), 0.3);
    let f = IceField::new(ctx.channel, vec![floe]).unwrap();
    let opts = icenav_core::planner::SearchOptions::new(&ctx, start, ctx.y(&start) + 3.0, 1000.0);

    let mut argmin: Option<EnumeratedPath> = None;
    let n = enumerate_paths(&opts, &f, 100_000, |e| {
        if argmin.as_ref().is_none_or(|b| e.cost() < b.cost()) {
            argmin = Some(e.clone());
        }
    })
    .unwrap();
    assert!(n > 1);
    let argmin = argmin.unwrap();
    let planned = plan_with_rollout(&opts, &f).unwrap();
    assert_eq!(planned.path.primitives, argmin.primitives);
    assert_eq!(planned.total_cost, argmin.cost());
    assert_eq!(planned.collision_cost, 0.0);
    assert!(planned.path.poses.iter().any(|q| q.ix > start.ix));
    assert!(planned.path.poses.iter().all(|q| q.ix >= start.ix));

    // with no collision weight the floe is simply pushed aside
    let blunt = plan_with_rollout(&icenav_core::planner::SearchOptions { alpha: 0.0, ..opts }, &f).unwrap();
    assert!(blunt.path.poses.iter().all(|q| q.ix == start.ix));
}

/// Searches for a prefix of the optimal path that is not the cheapest way to
/// reach its own end pose.
fn prefix_beaten(paths: &[EnumeratedPath]) -> Option<(usize, f64, f64)> {
    let best = paths.iter().min_by(|a, b| a.cost().total_cmp(&b.cost()))?;
    let mut cheapest: HashMap<Pose, f64> = HashMap::new();
    for p in paths {
        for (k, &c) in p.prefix_costs.iter().enumerate() {
            let e = cheapest.entry(p.poses[k + 1]).or_insert(f64::INFINITY);
            *e = e.min(c);
        }
    }
    best.prefix_costs.iter().enumerate().find_map(|(k, &c)| {
        let other = cheapest[&best.poses[k + 1]];
        (other < c - 1e-9).then_some((k, c, other))
    })
}

#[test]
fn optimal_paths_need_not_have_optimal_prefixes() {
    let ctx = common::small_context();
    let mut found = None;
    for seed in 0..40u64 {
        let Ok(f) = common::try_field(&ctx, [0.3, 0.4, 0.5][seed as usize % 3], 500 + seed) else { continue };
        let mut paths = Vec::new();
        enumerate_paths(&common::options(&ctx, 100.0), &f, 100_000, |p| paths.push(p.clone())).unwrap();
        if let Some(hit) = prefix_beaten(&paths) {
            found = Some((seed, hit));
            break;
        }
    }
    let (seed, (k, prefix, other)) = found.expect("no instance without optimal substructure among 40 seeds");
    assert!(other < prefix, "seed {seed}, edge {k}");
}

#[test]
fn memo_matches_replay_from_the_root() {
    let ctx = common::small_context();
    for (k, c) in [0.2, 0.3, 0.4, 0.5].into_iter().enumerate() {
        let f = common::field(&ctx, c, 70 + k as u64);
        let opts = common::options(&ctx, 100.0);
        let global = rasterize(&f, &ctx.spec);
        let state = Arc::new(f.clone());
        let memo = plan_predictive(&opts, &global, &RolloutPredictor::default(), state.clone()).unwrap();
        let replay = plan_predictive_reference(&opts, &global, &RolloutPredictor::default(), state).unwrap();
        assert_eq!(memo.path.primitives, replay.path.primitives);
        assert!((memo.total_cost - replay.total_cost).abs() <= 1e-9);
        assert_eq!(memo.nodes_expanded, replay.nodes_expanded);
        assert!(replay.predictions_made >= memo.predictions_made);
    }
}

#[test]
fn search_cost_is_bounded_by_the_oracle() {
    let ctx = common::small_context();
    let alpha = 100.0;
    let bound = 1.0 + alpha / ctx.control_set.l_min();
    for seed in 0..8u64 {
        let f = common::field(&ctx, [0.2, 0.3, 0.4, 0.5][seed as usize % 4], 900 + seed);
        let opts = common::options(&ctx, alpha);
        let alg = plan_with_rollout(&opts, &f).unwrap();
        let opt = optimal_oracle(&opts, &f, 100_000).unwrap();
        let replayed = evaluate_path(&ctx, &f, &alg.path, alpha).unwrap();
        assert_eq!(replayed.total_cost, alg.total_cost, "seed {seed}");
        assert!(opt.total_cost <= alg.total_cost + 1e-9);
        assert!(alg.total_cost <= bound * opt.total_cost);
    }
}

#[test]
fn oracle_refuses_large_instances() {
    let ctx = NavContext::with_defaults(icenav_core::field::Channel::default()).unwrap();
    let f = IceField::empty(ctx.channel);
    let opts = icenav_core::planner::SearchOptions::new(&ctx, ctx.start_pose(), 60.0, 1.0);
    assert!(matches!(optimal_oracle(&opts, &f, 1000), Err(icenav_core::Error::InstanceTooLarge { limit: 1000 })));
}

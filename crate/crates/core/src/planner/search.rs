use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use super::{evaluate_path, EdgeRecord, PathResult, TiledGrid};
use crate::context::NavContext;
use crate::error::{Error, Result};
use crate::field::IceField;
use crate::lattice::{concat_path, swath_cells, MotionPrimitive, Pose};
use crate::occupancy::{crop, diff_mse, stitch_into, window_at, OccupancyGrid, Window};
use crate::predictor::{OccupancyPredictor, PredictionQuery};

/// What to plan: start, goal line, collision weight and an expansion cap.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions<'a> {
    pub ctx: &'a NavContext,
    pub start: Pose,
    pub y_goal: f64,
    pub alpha: f64,
    /// Give up with [`Error::NoPath`] after this many expansions.
    pub max_expansions: Option<usize>,
}

impl<'a> SearchOptions<'a> {
    pub fn new(ctx: &'a NavContext, start: Pose, y_goal: f64, alpha: f64) -> Self {
        Self { ctx, start, y_goal, alpha, max_expansions: None }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha {}", self.alpha)));
        }
        if !(self.y_goal > 0.0 && self.y_goal <= self.ctx.channel.length) {
            return Err(Error::InvalidParameter(format!("goal line {} outside channel", self.y_goal)));
        }
        let p = self.ctx.position(&self.start);
        if p.x < 0.0 || p.x > self.ctx.channel.width || p.y < 0.0 || p.y > self.ctx.channel.length {
            return Err(Error::InvalidParameter(format!("start {:?} outside channel", self.start)));
        }
        if self.start.heading as usize >= self.ctx.control_set.headings() {
            return Err(Error::InvalidParameter(format!("heading {}", self.start.heading)));
        }
        Ok(())
    }
}

struct Node<M> {
    pose: Pose,
    g: f64,
    /// Parent node, primitive id, charged collision term and edge cost.
    parent: Option<(usize, usize, f64, f64)>,
    memo: Option<M>,
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    f: f64,
    g: f64,
    seq: u64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // BinaryHeap pops the greatest: smallest f, then largest g, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Per-successor outcome of an expansion: collision term and whatever is
/// needed to build the successor's memo should it be enqueued.
type Expanded<P> = Vec<(f64, P)>;

struct Counters {
    expanded: usize,
    predictions: usize,
}

/// A* shared by all lattice planners. `expand` charges every successor of a
/// node; `finish` turns the parent's memo and a pending result into the
/// successor's memo.
fn astar<M, P, E, F>(opts: &SearchOptions<'_>, label: &str, root: M, mut expand: E, mut finish: F) -> Result<PathResult>
where
    E: FnMut(usize, &[Node<M>], Option<&M>, &[(&MotionPrimitive, Pose)], &mut Counters) -> Result<Expanded<P>>,
    F: FnMut(Option<&M>, P) -> Result<M>,
{
    opts.validate()?;
    let ctx = opts.ctx;
    let mut nodes: Vec<Node<M>> = vec![Node { pose: opts.start, g: 0.0, parent: None, memo: Some(root) }];
    let mut index: HashMap<Pose, usize> = HashMap::from([(opts.start, 0)]);
    let mut closed: HashSet<Pose> = HashSet::new();
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    open.push(Entry { f: ctx.heuristic(&opts.start, opts.y_goal), g: 0.0, seq, node: 0 });
    let mut counters = Counters { expanded: 0, predictions: 0 };

    while let Some(entry) = open.pop() {
        let n = entry.node;
        let pose = nodes[n].pose;
        if closed.contains(&pose) || entry.g != nodes[n].g {
            continue;
        }
        if ctx.goal_reached(&pose, opts.y_goal) {
            return Ok(reconstruct(opts, label, &nodes, n, &counters));
        }
        if opts.max_expansions.is_some_and(|m| counters.expanded >= m) {
            break;
        }
        closed.insert(pose);
        counters.expanded += 1;
        let memo = nodes[n].memo.take();
        let succ: Vec<_> = ctx.successors(&pose).into_iter().filter(|(_, p)| !closed.contains(p)).collect();
        if succ.is_empty() {
            continue;
        }
        let results = expand(n, &nodes, memo.as_ref(), &succ, &mut counters)?;
        let g = nodes[n].g;
        for ((prim, next), (collision, pending)) in succ.into_iter().zip(results) {
            let cost = prim.arc_length + opts.alpha * collision;
            debug_assert!(cost >= prim.arc_length && cost <= prim.arc_length + opts.alpha, "edge weight outside bounds");
            let g_next = g + cost;
            let target = match index.get(&next) {
                Some(&i) if g_next >= nodes[i].g => continue,
                Some(&i) => i,
                None => {
                    nodes.push(Node { pose: next, g: f64::INFINITY, parent: None, memo: None });
                    index.insert(next, nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            nodes[target].g = g_next;
            nodes[target].parent = Some((n, prim.id, collision, cost));
            nodes[target].memo = Some(finish(memo.as_ref(), pending)?);
            seq += 1;
            open.push(Entry { f: g_next + ctx.heuristic(&next, opts.y_goal), g: g_next, seq, node: target });
        }
    }
    Err(Error::NoPath { expanded: counters.expanded })
}

fn chain<M>(nodes: &[Node<M>], mut n: usize) -> Vec<usize> {
    let mut out = vec![n];
    while let Some((p, ..)) = nodes[n].parent {
        out.push(p);
        n = p;
    }
    out.reverse();
    out
}

fn reconstruct<M>(opts: &SearchOptions<'_>, label: &str, nodes: &[Node<M>], goal: usize, counters: &Counters) -> PathResult {
    let ids = chain(nodes, goal);
    let mut prims = Vec::with_capacity(ids.len());
    let mut edges = Vec::with_capacity(ids.len());
    for w in ids.windows(2) {
        let (_, prim, collision, cost) = nodes[w[1]].parent.expect("non-root node has a parent");
        prims.push(prim);
        edges.push(EdgeRecord {
            primitive: prim,
            from: nodes[w[0]].pose,
            to: nodes[w[1]].pose,
            distance: opts.ctx.control_set.primitive(prim).arc_length,
            collision,
            cost,
        });
    }
    let path = concat_path(&opts.ctx.control_set, &prims, opts.start).expect("search only follows chained primitives");
    PathResult::from_edges(label, opts.alpha, path, edges, counters.expanded, counters.predictions)
}

/// Checks a predictor output against its query window and clamps it.
fn checked_output(window: &Window, occupancy: OccupancyGrid) -> Result<OccupancyGrid> {
    if occupancy.dims() != (window.rows, window.cols) {
        return Err(Error::DimensionMismatch { expected: (window.rows, window.cols), found: occupancy.dims() });
    }
    if occupancy.values().iter().all(|v| (0.0..=1.0).contains(v)) {
        Ok(occupancy)
    } else {
        OccupancyGrid::from_values_clamped(*occupancy.spec(), occupancy.values().to_vec())
    }
}

/// Predicts all successors of a node from its window and grid.
fn predict_successors<S: Clone + Send + Sync, P: OccupancyPredictor<State = S>>(
    ctx: &NavContext,
    predictor: &P,
    pose: &Pose,
    local: &OccupancyGrid,
    window: Window,
    state: &S,
    succ: &[(&MotionPrimitive, Pose)],
) -> Result<Vec<(f64, (OccupancyGrid, S))>> {
    let queries: Vec<_> = succ.iter().map(|(p, _)| PredictionQuery { occupancy: local, window, pose: *pose, primitive: p }).collect();
    let preds = predictor.predict_batch(ctx, state, &queries)?;
    if preds.len() != queries.len() {
        return Err(Error::InvalidParameter(format!("predictor returned {} of {} predictions", preds.len(), queries.len())));
    }
    preds
        .into_iter()
        .map(|p| {
            let occ = checked_output(&window, p.occupancy)?;
            Ok((diff_mse(local, &occ)?, (occ, p.state)))
        })
        .collect()
}

/// Memoised A* with occupancy prediction. `initial` is the predictor state
/// matching `global` (the ice field for the rollout predictor).
pub fn plan_predictive<P: OccupancyPredictor>(
    opts: &SearchOptions<'_>,
    global: &OccupancyGrid,
    predictor: &P,
    initial: P::State,
) -> Result<PathResult> {
    let ctx = opts.ctx;
    let root = (TiledGrid::from_grid(global), initial);
    astar(
        opts,
        predictor.name(),
        root,
        |n, nodes, memo, succ, counters| {
            let (grid, state) = memo.expect("open nodes carry a memo");
            let pose = nodes[n].pose;
            let window = window_at(&ctx.spec, ctx.position(&pose), ctx.extent)?;
            let local = grid.crop(&window);
            counters.predictions += succ.len();
            let out = predict_successors(ctx, predictor, &pose, &local, window, state, succ)?;
            Ok(out.into_iter().map(|(c, (occ, s))| (c, (occ, s, window))).collect())
        },
        |memo, (occ, state, window)| {
            let mut grid = memo.expect("parent memo present").0.clone();
            grid.stitch(&occ, &window)?;
            Ok((grid, state))
        },
    )
}

/// Same search as [`plan_predictive`] but without memoisation: the occupancy
/// and predictor state of every expanded node are rebuilt by replaying its
/// parent chain from the start.
pub fn plan_predictive_reference<P: OccupancyPredictor>(
    opts: &SearchOptions<'_>,
    global: &OccupancyGrid,
    predictor: &P,
    initial: P::State,
) -> Result<PathResult> {
    let ctx = opts.ctx;
    astar(
        opts,
        predictor.name(),
        (),
        |n, nodes, _, succ, counters| {
            let mut grid = global.clone();
            let mut state = initial.clone();
            let ids = chain(nodes, n);
            for w in ids.windows(2) {
                let from = nodes[w[0]].pose;
                let (_, prim, ..) = nodes[w[1]].parent.expect("non-root node has a parent");
                let window = window_at(&ctx.spec, ctx.position(&from), ctx.extent)?;
                let local = crop(&grid, &window);
                let primitive = ctx.control_set.primitive(prim);
                let mut out = predict_successors(ctx, predictor, &from, &local, window, &state, &[(primitive, nodes[w[1]].pose)])?;
                counters.predictions += 1;
                let (_, (occ, s)) = out.pop().expect("one prediction per query");
                stitch_into(&mut grid, &occ, &window)?;
                state = s;
            }
            let pose = nodes[n].pose;
            let window = window_at(&ctx.spec, ctx.position(&pose), ctx.extent)?;
            let local = crop(&grid, &window);
            counters.predictions += succ.len();
            let out = predict_successors(ctx, predictor, &pose, &local, window, &state, succ)?;
            Ok(out.into_iter().map(|(c, _)| (c, ())).collect())
        },
        |_, ()| Ok(()),
    )
}

/// Lattice A* treating the ice as static: an edge is charged the mean
/// occupancy of the unchanged grid under its swath. Never predicts.
pub fn plan_static_lattice(opts: &SearchOptions<'_>, global: &OccupancyGrid) -> Result<PathResult> {
    let ctx = opts.ctx;
    astar(
        opts,
        "static_lattice",
        (),
        |n, nodes, _, succ, _| {
            let pose = nodes[n].pose;
            Ok(succ
                .iter()
                .map(|(p, _)| {
                    let cells = swath_cells(&pose, p, &ctx.ship, &ctx.control_set, &ctx.spec);
                    let total: f64 = cells.cells().iter().map(|&(r, c)| global.get(r as usize, c as usize)).sum();
                    let mean = if cells.is_empty() { 0.0 } else { total / cells.len() as f64 };
                    (mean, ())
                })
                .collect())
        },
        |_, ()| Ok(()),
    )
}

/// Straight ahead until the goal line, charged afterwards by simulating the
/// path on `field`.
pub fn plan_straight(opts: &SearchOptions<'_>, field: &IceField) -> Result<PathResult> {
    opts.validate()?;
    let ctx = opts.ctx;
    let mut pose = opts.start;
    let mut prims = Vec::new();
    while !ctx.goal_reached(&pose, opts.y_goal) {
        let p = ctx.control_set.straight_from(pose.heading).ok_or(Error::NoPath { expanded: prims.len() })?;
        if !ctx.primitive_in_channel(&pose, p) {
            return Err(Error::NoPath { expanded: prims.len() });
        }
        prims.push(p.id);
        pose = ctx.control_set.apply(&pose, p);
    }
    let path = concat_path(&ctx.control_set, &prims, opts.start)?;
    let mut result = evaluate_path(ctx, field, &path, opts.alpha)?;
    result.planner = "straight".into();
    Ok(result)
}

/// Convenience: predictive search with the rollout predictor on a known field.
pub fn plan_with_rollout(opts: &SearchOptions<'_>, field: &IceField) -> Result<PathResult> {
    let global = crate::occupancy::rasterize(field, &opts.ctx.spec);
    plan_predictive(opts, &global, &crate::predictor::RolloutPredictor::default(), Arc::new(field.clone()))
}

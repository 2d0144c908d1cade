//! Path costing by simulation and exhaustive search over primitive sequences.
//!
//! Costs here follow exactly the rules the predictive planner applies with
//! the rollout predictor: per edge, the window around the current pose is
//! cropped from the believed global occupancy, the primitive is simulated on
//! the true field, and the squared difference between the window before and
//! after is charged. For any path the search returns, its cost here equals
//! the search's own cost bit for bit.

use std::collections::HashMap;
use std::sync::Arc;

use super::{EdgeRecord, PathResult, SearchOptions, TiledGrid};
use crate::context::NavContext;
use crate::error::{Error, Result};
use crate::field::IceField;
use crate::lattice::{concat_path, MotionPrimitive, Path, Pose};
use crate::occupancy::{diff_mse, rasterize, window_at};
use crate::predictor::{OccupancyPredictor, PredictionQuery, RolloutPredictor};

struct Walker<'a> {
    ctx: &'a NavContext,
    alpha: f64,
    predictor: RolloutPredictor,
}

/// Occupancy belief and true field after some prefix of primitives.
#[derive(Clone)]
struct WalkState {
    grid: TiledGrid,
    field: Arc<IceField>,
}

impl Walker<'_> {
    /// Charges every candidate primitive from `pose`; returns per candidate
    /// the collision term, edge cost and successor state.
    fn step(&self, state: &WalkState, pose: &Pose, prims: &[&MotionPrimitive]) -> Result<Vec<(f64, f64, WalkState)>> {
        let window = window_at(&self.ctx.spec, self.ctx.position(pose), self.ctx.extent)?;
        let local = state.grid.crop(&window);
        let queries: Vec<_> = prims.iter().map(|p| PredictionQuery { occupancy: &local, window, pose: *pose, primitive: p }).collect();
        let preds = self.predictor.predict_batch(self.ctx, &state.field, &queries)?;
        prims
            .iter()
            .zip(preds)
            .map(|(p, pred)| {
                let collision = diff_mse(&local, &pred.occupancy)?;
                let cost = p.arc_length + self.alpha * collision;
                let mut grid = state.grid.clone();
                grid.stitch(&pred.occupancy, &window)?;
                Ok((collision, cost, WalkState { grid, field: pred.state }))
            })
            .collect()
    }
}

/// Costs `path` on `field` by simulation.
pub fn evaluate_path(ctx: &NavContext, field: &IceField, path: &Path, alpha: f64) -> Result<PathResult> {
    let walker = Walker { ctx, alpha, predictor: RolloutPredictor::default() };
    let mut state = WalkState { grid: TiledGrid::from_grid(&rasterize(field, &ctx.spec)), field: Arc::new(field.clone()) };
    let mut edges = Vec::with_capacity(path.len());
    for (k, &id) in path.primitives.iter().enumerate() {
        let prim = ctx.control_set.primitive(id);
        let (collision, cost, next) = walker.step(&state, &path.poses[k], &[prim])?.pop().expect("one result per primitive");
        edges.push(EdgeRecord { primitive: id, from: path.poses[k], to: path.poses[k + 1], distance: prim.arc_length, collision, cost });
        state = next;
    }
    Ok(PathResult::from_edges("evaluated", alpha, path.clone(), edges, 0, path.len()))
}

/// A complete primitive sequence found by [`enumerate_paths`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedPath {
    pub primitives: Vec<usize>,
    /// Poses visited, the start first.
    pub poses: Vec<Pose>,
    /// Cost accumulated after each edge; the last entry is the path cost.
    pub prefix_costs: Vec<f64>,
}

impl EnumeratedPath {
    pub fn cost(&self) -> f64 {
        self.prefix_costs.last().copied().unwrap_or(0.0)
    }
}

/// Number of nodes in the search tree of all primitive sequences from
/// `start`, capped just above `limit`.
fn tree_size(ctx: &NavContext, start: &Pose, y_goal: f64, limit: usize) -> usize {
    fn count(ctx: &NavContext, pose: &Pose, y_goal: f64, cap: usize, memo: &mut HashMap<Pose, usize>) -> usize {
        if let Some(&n) = memo.get(pose) {
            return n;
        }
        let mut n = 1usize;
        if !ctx.goal_reached(pose, y_goal) {
            for (_, next) in ctx.successors(pose) {
                n = n.saturating_add(count(ctx, &next, y_goal, cap, memo)).min(cap);
            }
        }
        memo.insert(*pose, n);
        n
    }
    count(ctx, start, y_goal, limit.saturating_add(1), &mut HashMap::new())
}

struct Dfs<'a, F> {
    walker: Walker<'a>,
    y_goal: f64,
    prune: bool,
    best: f64,
    prims: Vec<usize>,
    poses: Vec<Pose>,
    costs: Vec<f64>,
    visit: F,
}

impl<F: FnMut(&EnumeratedPath)> Dfs<'_, F> {
    fn run(&mut self, state: &WalkState, g: f64) -> Result<()> {
        let ctx = self.walker.ctx;
        let pose = *self.poses.last().expect("start pose present");
        if ctx.goal_reached(&pose, self.y_goal) {
            let found = EnumeratedPath { primitives: self.prims.clone(), poses: self.poses.clone(), prefix_costs: self.costs.clone() };
            self.best = self.best.min(g);
            (self.visit)(&found);
            return Ok(());
        }
        let succ = ctx.successors(&pose);
        if succ.is_empty() {
            return Ok(());
        }
        let prims: Vec<&MotionPrimitive> = succ.iter().map(|(p, _)| *p).collect();
        for ((prim, next), (_, cost, child)) in succ.iter().zip(self.walker.step(state, &pose, &prims)?) {
            let g_next = g + cost;
            if self.prune && g_next + ctx.heuristic(next, self.y_goal) > self.best {
                continue;
            }
            self.prims.push(prim.id);
            self.poses.push(*next);
            self.costs.push(g_next);
            self.run(&child, g_next)?;
            self.prims.pop();
            self.poses.pop();
            self.costs.pop();
        }
        Ok(())
    }
}

fn search<F: FnMut(&EnumeratedPath)>(opts: &SearchOptions<'_>, field: &IceField, max_nodes: usize, prune: bool, visit: F) -> Result<f64> {
    opts.validate()?;
    let ctx = opts.ctx;
    if tree_size(ctx, &opts.start, opts.y_goal, max_nodes) > max_nodes {
        return Err(Error::InstanceTooLarge { limit: max_nodes });
    }
    let state = WalkState { grid: TiledGrid::from_grid(&rasterize(field, &ctx.spec)), field: Arc::new(field.clone()) };
    let mut dfs = Dfs {
        walker: Walker { ctx, alpha: opts.alpha, predictor: RolloutPredictor::default() },
        y_goal: opts.y_goal,
        prune,
        best: f64::INFINITY,
        prims: Vec::new(),
        poses: vec![opts.start],
        costs: Vec::new(),
        visit,
    };
    dfs.run(&state, 0.0)?;
    Ok(dfs.best)
}

/// Calls `visit` for every primitive sequence from the start that reaches
/// the goal line, each fully simulated from the initial field. Fails if the
/// search tree has more than `max_nodes` nodes.
pub fn enumerate_paths<F: FnMut(&EnumeratedPath)>(opts: &SearchOptions<'_>, field: &IceField, max_nodes: usize, visit: F) -> Result<usize> {
    let mut n = 0;
    let mut visit = visit;
    search(opts, field, max_nodes, false, |p| {
        n += 1;
        visit(p);
    })?;
    Ok(n)
}

/// Minimum-cost path over all primitive sequences, every one simulated with
/// its own history. Branches whose cost plus remaining distance already
/// exceeds the best complete path are cut, which cannot remove a minimiser
/// since every edge costs at least its forward progress.
pub fn optimal_oracle(opts: &SearchOptions<'_>, field: &IceField, max_nodes: usize) -> Result<PathResult> {
    let mut best: Option<EnumeratedPath> = None;
    search(opts, field, max_nodes, true, |p| {
        if best.as_ref().is_none_or(|b| p.cost() < b.cost()) {
            best = Some(p.clone());
        }
    })?;
    let best = best.ok_or(Error::NoPath { expanded: 0 })?;
    let path = concat_path(&opts.ctx.control_set, &best.primitives, opts.start)?;
    let mut result = evaluate_path(opts.ctx, field, &path, opts.alpha)?;
    result.planner = "oracle".into();
    Ok(result)
}

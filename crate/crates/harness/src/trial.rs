//! One navigation trial: plan, execute on the ground-truth dynamics, repeat.

use std::collections::VecDeque;
use std::time::Instant;

use icenav_core::dynamics::{step_in_place, TrialMetrics};
use icenav_core::field::{generate_scenario_with, IceField, ScenarioParams};
use icenav_core::lattice::Pose;
use icenav_core::occupancy::{diff_mse, rasterize, rasterize_window, window_at};
use icenav_core::planner::{plan_static_lattice, plan_straight, plan_with_rollout, PathResult, SearchOptions};
use icenav_core::predictor::start_clearance;
use icenav_core::NavContext;
use serde::{Deserialize, Serialize};

use crate::config::PlannerKind;

/// Field for a trial, kept clear around the start pose.
pub fn scenario_field(ctx: &NavContext, concentration: f64, seed: u64) -> icenav_core::Result<IceField> {
    let mut params = ScenarioParams::new(concentration);
    params.keep_out = Some(start_clearance(ctx));
    generate_scenario_with(&params, ctx.channel, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSettings {
    pub alpha: f64,
    pub replan: bool,
    pub max_expansions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub planner: PlannerKind,
    pub alpha: f64,
    pub concentration: f64,
    pub seed: u64,
    pub reached_goal: bool,
    /// Why the trial stopped early, if it did.
    pub error: Option<String>,
    pub metrics: TrialMetrics,
    /// Executed occupancy change, summed over primitives.
    pub collision_cost: f64,
    /// `distance + alpha * collision_cost`, accumulated per primitive.
    pub total_cost: f64,
    pub searches: usize,
    pub nodes_expanded: usize,
    pub predictions_made: usize,
    pub wall_time_s: f64,
}

impl TrialRecord {
    fn new(planner: PlannerKind, alpha: f64, concentration: f64, seed: u64) -> Self {
        Self {
            planner,
            alpha,
            concentration,
            seed,
            reached_goal: false,
            error: None,
            metrics: TrialMetrics::default(),
            collision_cost: 0.0,
            total_cost: 0.0,
            searches: 0,
            nodes_expanded: 0,
            predictions_made: 0,
            wall_time_s: 0.0,
        }
    }

    /// Record for a trial whose scenario could not be built.
    pub fn failed(planner: PlannerKind, alpha: f64, concentration: f64, seed: u64, error: String) -> Self {
        Self { error: Some(error), ..Self::new(planner, alpha, concentration, seed) }
    }

    pub fn ok(&self) -> bool {
        self.reached_goal && self.error.is_none()
    }

    /// Ordering key used for every report.
    pub fn key(&self) -> (PlannerKind, u64, u64, u64) {
        (self.planner, self.alpha.to_bits(), self.concentration.to_bits(), self.seed)
    }
}

pub fn plan(planner: PlannerKind, opts: &SearchOptions<'_>, field: &IceField) -> icenav_core::Result<PathResult> {
    match planner {
        PlannerKind::Predictive => plan_with_rollout(opts, field),
        PlannerKind::Straight => plan_straight(opts, field),
        PlannerKind::StaticLattice => plan_static_lattice(opts, &rasterize(field, &opts.ctx.spec)),
    }
}

/// Navigates from the start pose to the channel's goal line on `field`.
/// Planner failures end the trial and are reported in the record.
pub fn run_trial(ctx: &NavContext, settings: &TrialSettings, planner: PlannerKind, field: &IceField, concentration: f64, seed: u64) -> TrialRecord {
    let clock = Instant::now();
    let mut rec = TrialRecord::new(planner, settings.alpha, concentration, seed);
    let mut field = field.clone();
    let mut pose = ctx.start_pose();
    let y_goal = ctx.channel.goal_y;
    let max_steps = 4 * (ctx.channel.length / ctx.control_set.l_min()).ceil() as usize;
    let mut queue: VecDeque<usize> = VecDeque::new();

    while !ctx.goal_reached(&pose, y_goal) {
        if rec.metrics.steps >= max_steps {
            rec.error = Some(format!("no goal after {max_steps} primitives"));
            break;
        }
        if queue.is_empty() || settings.replan {
            let mut opts = SearchOptions::new(ctx, pose, y_goal, settings.alpha);
            opts.max_expansions = settings.max_expansions;
            match plan(planner, &opts, &field) {
                Ok(r) if !r.path.is_empty() => {
                    rec.searches += 1;
                    rec.nodes_expanded += r.nodes_expanded;
                    rec.predictions_made += r.predictions_made;
                    queue = r.path.primitives.into_iter().collect();
                }
                Ok(_) => {
                    rec.error = Some("planner returned an empty path short of the goal".into());
                    break;
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    break;
                }
            }
        }
        let id = queue.pop_front().expect("queue refilled above");
        if let Err(e) = execute(ctx, &mut field, &mut pose, id, settings.alpha, &mut rec) {
            rec.error = Some(e.to_string());
            break;
        }
    }
    rec.reached_goal = rec.error.is_none() && ctx.goal_reached(&pose, y_goal);
    rec.wall_time_s = clock.elapsed().as_secs_f64();
    rec
}

fn execute(ctx: &NavContext, field: &mut IceField, pose: &mut Pose, id: usize, alpha: f64, rec: &mut TrialRecord) -> icenav_core::Result<()> {
    let prim = ctx.control_set.primitive(id);
    let window = window_at(&ctx.spec, ctx.position(pose), ctx.extent)?;
    let before = rasterize_window(field, &ctx.spec, &window);
    let m = step_in_place(field, pose, prim, ctx);
    let after = rasterize_window(field, &ctx.spec, &window);
    let c = diff_mse(&before, &after)?;
    rec.metrics.add_step(prim.arc_length, &m);
    rec.collision_cost += c;
    rec.total_cost += prim.arc_length + alpha * c;
    *pose = ctx.control_set.apply(pose, prim);
    Ok(())
}

#![allow(dead_code)]

use icenav_core::field::{generate_scenario_with, Channel, IceField, ScenarioParams};
use icenav_core::planner::SearchOptions;
use icenav_core::predictor::start_clearance;
use icenav_core::NavContext;

/// 8 m x 12 m channel, small enough to enumerate every path to a goal line
/// five metres ahead of the start.
pub fn small_context() -> NavContext {
    NavContext::with_defaults(Channel::new(8.0, 12.0, 12.0).unwrap()).unwrap()
}

pub fn small_goal(ctx: &NavContext) -> f64 {
    ctx.y(&ctx.start_pose()) + 5.0
}

pub fn options(ctx: &NavContext, alpha: f64) -> SearchOptions<'_> {
    SearchOptions::new(ctx, ctx.start_pose(), small_goal(ctx), alpha)
}

pub fn field(ctx: &NavContext, concentration: f64, seed: u64) -> IceField {
    try_field(ctx, concentration, seed).unwrap()
}

pub fn try_field(ctx: &NavContext, concentration: f64, seed: u64) -> icenav_core::Result<IceField> {
    let mut params = ScenarioParams::new(concentration);
    params.keep_out = Some(start_clearance(ctx));
    generate_scenario_with(&params, ctx.channel, seed)
}

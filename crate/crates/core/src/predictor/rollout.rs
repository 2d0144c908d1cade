use std::sync::Arc;

use super::{OccupancyPredictor, Prediction, PredictionInput, PredictionQuery};
use crate::context::NavContext;
use crate::dynamics::step_primitive;
use crate::error::{Error, Result};
use crate::field::IceField;
use crate::lattice::{MotionPrimitive, Pose};
use crate::occupancy::{rasterize_window, OccupancyGrid, Window};

/// Largest per-cell disagreement tolerated between a field and the occupancy
/// it is claimed to produce.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-6;

fn check_consistent(ctx: &NavContext, field: &IceField, occupancy: &OccupancyGrid, window: &Window) -> Result<()> {
    let truth = rasterize_window(field, &ctx.spec, window);
    truth.ensure_same_dims(occupancy)?;
    let max_error = truth.values().iter().zip(occupancy.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if max_error > CONSISTENCY_TOLERANCE {
        return Err(Error::InconsistentInput { max_error });
    }
    Ok(())
}

/// Ground-truth prediction: simulate the primitive on `field` and rasterise
/// the input window of the result.
pub fn rollout_predict(
    ctx: &NavContext,
    input: &PredictionInput,
    field: &IceField,
    pose: &Pose,
    primitive: &MotionPrimitive,
) -> Result<OccupancyGrid> {
    check_consistent(ctx, field, &input.occupancy, &input.window)?;
    let after = step_primitive(field, pose, primitive, ctx).field_after;
    Ok(rasterize_window(&after, &ctx.spec, &input.window))
}

/// Perfect predictor backed by the simulator. Its state is the full ice field.
#[derive(Debug, Clone, Copy, Default)]
pub struct RolloutPredictor {
    /// Verify every query's occupancy against the carried field.
    pub check_consistency: bool,
}

impl RolloutPredictor {
    pub fn checked() -> Self {
        Self { check_consistency: true }
    }
}

impl OccupancyPredictor for RolloutPredictor {
    type State = Arc<IceField>;

    fn predict_batch(&self, ctx: &NavContext, state: &Self::State, queries: &[PredictionQuery<'_>]) -> Result<Vec<Prediction<Self::State>>> {
        queries
            .iter()
            .map(|q| {
                if self.check_consistency {
                    check_consistent(ctx, state, q.occupancy, &q.window)?;
                }
                let after = step_primitive(state, &q.pose, q.primitive, ctx).field_after;
                let occupancy = rasterize_window(&after, &ctx.spec, &q.window);
                Ok(Prediction { occupancy, state: Arc::new(after) })
            })
            .collect()
    }

    fn name(&self) -> &'static str {
        "rollout"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{generate_scenario, Channel};
    use crate::occupancy::{crop, rasterize};
    use crate::predictor::assemble_input;

    #[test]
    fn open_water_prediction_is_identity() {
        let ctx = NavContext::with_defaults(Channel::new(8.0, 20.0, 16.0).unwrap()).unwrap();
        let field = IceField::empty(ctx.channel);
        let pose = ctx.start_pose();
        let global = rasterize(&field, &ctx.spec);
        for p in ctx.control_set.from_heading(pose.heading) {
            let input = assemble_input(&ctx, &global, &pose, p).unwrap();
            assert_eq!(rollout_predict(&ctx, &input, &field, &pose, p).unwrap(), input.occupancy);
        }
    }

    #[test]
    fn stale_input_is_rejected() {
        let ctx = NavContext::with_defaults(Channel::new(8.0, 20.0, 16.0).unwrap()).unwrap();
        let field = generate_scenario(0.4, ctx.channel, 3).unwrap();
        let pose = ctx.start_pose();
        let p = ctx.control_set.straight_from(pose.heading).unwrap();
        let empty = rasterize(&IceField::empty(ctx.channel), &ctx.spec);
        let input = assemble_input(&ctx, &empty, &pose, p).unwrap();
        assert!(matches!(rollout_predict(&ctx, &input, &field, &pose, p), Err(Error::InconsistentInput { .. })));
    }

    #[test]
    fn batch_matches_direct_composition() {
        let ctx = NavContext::with_defaults(Channel::new(8.0, 20.0, 16.0).unwrap()).unwrap();
        let field = generate_scenario(0.4, ctx.channel, 11).unwrap();
        let pose = ctx.start_pose();
        let global = rasterize(&field, &ctx.spec);
        let state = Arc::new(field.clone());
        let inputs: Vec<_> = ctx.control_set.from_heading(pose.heading).map(|p| (p, assemble_input(&ctx, &global, &pose, p).unwrap())).collect();
        let queries: Vec<_> = inputs
            .iter()
            .map(|(p, i)| PredictionQuery { occupancy: &i.occupancy, window: i.window, pose, primitive: p })
            .collect();
        let out = RolloutPredictor::checked().predict_batch(&ctx, &state, &queries).unwrap();
        for ((p, input), pred) in inputs.iter().zip(&out) {
            let direct = crop(&rasterize(&step_primitive(&field, &pose, p, &ctx).field_after, &ctx.spec), &input.window);
            assert_eq!(pred.occupancy, direct);
        }
    }
}

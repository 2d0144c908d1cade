//! A* over the state lattice with predicted occupancy changes as collision
//! cost, plus the baselines and the exhaustive oracle used to check it.
//!
//! The predictive search keys CLOSED on the lattice pose alone, although the
//! real state of a node also includes the ice it has pushed. Each node
//! memoises the global occupancy (and predictor state) along its current best
//! parent chain, so expanding it needs one batched prediction and no replay.
//! Because two parents reaching the same pose can leave the ice differently,
//! the search is not guaranteed optimal; its cost is bounded relative to the
//! optimum instead.

mod cow;
mod oracle;
mod search;

pub use cow::TiledGrid;
pub use oracle::{enumerate_paths, evaluate_path, optimal_oracle, EnumeratedPath};
pub use search::{
    plan_predictive, plan_predictive_reference, plan_static_lattice, plan_straight, plan_with_rollout, SearchOptions,
};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{MotionPrimitive, Path, Pose};
use crate::occupancy::{diff_mse, OccupancyGrid};

/// `d(π) + α · diff_mse(before, after)`.
pub fn edge_cost(before: &OccupancyGrid, after: &OccupancyGrid, primitive: &MotionPrimitive, alpha: f64) -> Result<f64> {
    Ok(primitive.arc_length + alpha * diff_mse(before, after)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub primitive: usize,
    pub from: Pose,
    pub to: Pose,
    pub distance: f64,
    /// Occupancy difference charged for this edge.
    pub collision: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub planner: String,
    pub alpha: f64,
    pub path: Path,
    pub edges: Vec<EdgeRecord>,
    /// Edge costs summed in path order.
    pub total_cost: f64,
    pub distance: f64,
    pub collision_cost: f64,
    pub nodes_expanded: usize,
    pub predictions_made: usize,
}

impl PathResult {
    pub(crate) fn from_edges(planner: &str, alpha: f64, path: Path, edges: Vec<EdgeRecord>, expanded: usize, predictions: usize) -> Self {
        let mut total = 0.0;
        let mut collision = 0.0;
        for e in &edges {
            total += e.cost;
            collision += e.collision;
        }
        let distance = path.distance;
        Self {
            planner: planner.to_string(),
            alpha,
            path,
            edges,
            total_cost: total,
            distance,
            collision_cost: collision,
            nodes_expanded: expanded,
            predictions_made: predictions,
        }
    }

    pub fn primitives(&self) -> &[usize] {
        &self.path.primitives
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::lattice::generate_control_set;
    use crate::occupancy::GridSpec;

    #[test]
    fn edge_cost_bounds() {
        let cs = generate_control_set(0.5, 16, 2.0).unwrap();
        let p = cs.straight_from(4).unwrap();
        let spec = GridSpec::new(0.125, 11, 11, Vec2::ZERO).unwrap();
        let zeros = OccupancyGrid::zeros(spec);
        let ones = OccupancyGrid::filled(spec, 1.0);
        assert_eq!(edge_cost(&ones, &ones, p, 3.0).unwrap(), p.arc_length);
        assert_eq!(edge_cost(&zeros, &ones, p, 3.0).unwrap(), p.arc_length + 3.0);
        assert_eq!(edge_cost(&zeros, &ones, p, 0.0).unwrap(), p.arc_length);
    }
}

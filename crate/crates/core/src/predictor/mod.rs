//! One-step occupancy prediction.
//!
//! A predictor maps the occupancy inside the ship's window, together with the
//! ship footprint and the swath of a candidate primitive, to the occupancy of
//! the same window after the primitive is executed. Predictors may carry
//! per-node state through a search: the physics rollout keeps the full ice
//! field, a learned model keeps nothing.

mod dataset;
mod kernel;
mod loss;
mod rollout;

pub use dataset::{
    collect_dataset, episode_field, random_walk, read_dataset, start_clearance, DatasetEntry, DatasetHeader, WalkParams, WalkStep, DATASET_MAGIC,
};
pub use kernel::{KernelModel, KernelPredictor};
pub use loss::{
    combined_loss, conservation_loss, huber_mean, huber_occupancy_loss, write_loss_csv, LossRecord, DEFAULT_DELTA, DEFAULT_LAMBDA,
};
pub use rollout::{rollout_predict, RolloutPredictor, CONSISTENCY_TOLERANCE};

use crate::context::NavContext;
use crate::error::{Error, Result};
use crate::lattice::{footprint_cells, swath_cells, CellSet, MotionPrimitive, Pose};
use crate::occupancy::{crop, window_at, OccupancyGrid, Window};

/// Binary H x W layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self { rows, cols, bits: vec![false; rows * cols] }
    }

    /// Cells of `set` (global indices) that fall inside `window`, in window
    /// coordinates. Also returns how many cells fell outside.
    pub fn from_cells(set: &CellSet, window: &Window) -> (Self, usize) {
        let mut m = Self::empty(window.rows, window.cols);
        let mut outside = 0;
        for &(r, c) in set.cells() {
            let (r, c) = (r as usize, c as usize);
            if window.contains(r, c) {
                m.bits[(r - window.row) * window.cols + (c - window.col)] = true;
            } else {
                outside += 1;
            }
        }
        (m, outside)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.bits[row * self.cols + col] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_subset(&self, other: &Mask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }
}

/// The three aligned layers a predictor consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionInput {
    pub occupancy: OccupancyGrid,
    pub footprint: Mask,
    pub swath: Mask,
    pub window: Window,
}

/// Footprint and swath masks for a ship at `pose` about to run `primitive`.
pub fn masks_for(ctx: &NavContext, window: &Window, pose: &Pose, primitive: &MotionPrimitive) -> Result<(Mask, Mask)> {
    let (footprint, _) = Mask::from_cells(&footprint_cells(pose, &ctx.ship, &ctx.control_set, &ctx.spec), window);
    let (swath, outside) = Mask::from_cells(&swath_cells(pose, primitive, &ctx.ship, &ctx.control_set, &ctx.spec), window);
    if outside > 0 {
        return Err(Error::WindowTooSmall { primitive: primitive.id, rows: window.rows, cols: window.cols });
    }
    Ok((footprint, swath))
}

/// Crops the window around `pose` from `global` and adds the ship masks.
pub fn assemble_input(ctx: &NavContext, global: &OccupancyGrid, pose: &Pose, primitive: &MotionPrimitive) -> Result<PredictionInput> {
    let window = window_at(&ctx.spec, ctx.position(pose), ctx.extent)?;
    let (footprint, swath) = masks_for(ctx, &window, pose, primitive)?;
    Ok(PredictionInput { occupancy: crop(global, &window), footprint, swath, window })
}

/// One candidate edge handed to a predictor.
#[derive(Debug, Clone)]
pub struct PredictionQuery<'a> {
    /// Occupancy currently believed inside `window`.
    pub occupancy: &'a OccupancyGrid,
    pub window: Window,
    pub pose: Pose,
    pub primitive: &'a MotionPrimitive,
}

#[derive(Debug, Clone)]
pub struct Prediction<S> {
    /// Predicted occupancy of the query window, values in `[0, 1]`.
    pub occupancy: OccupancyGrid,
    /// State after the primitive, to be used when expanding the successor.
    pub state: S,
}

/// Batched one-step occupancy prediction.
pub trait OccupancyPredictor: Send + Sync {
    type State: Clone + Send + Sync;

    /// Predicts every query from the same `state`; output order follows input.
    fn predict_batch(&self, ctx: &NavContext, state: &Self::State, queries: &[PredictionQuery<'_>]) -> Result<Vec<Prediction<Self::State>>>;

    /// Short label used in reports.
    fn name(&self) -> &'static str;
}

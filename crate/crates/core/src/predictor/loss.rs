use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::occupancy::{grid_sum, OccupancyGrid};

pub const DEFAULT_DELTA: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Mean per-cell Huber loss.
pub fn huber_occupancy_loss(predicted: &OccupancyGrid, target: &OccupancyGrid, delta: f64) -> Result<f64> {
    predicted.ensure_same_dims(target)?;
    huber_mean(predicted.values(), target.values(), delta)
}

/// Mean Huber loss over paired values of any magnitude.
pub fn huber_mean(predicted: &[f64], target: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("huber delta {delta}")));
    }
    if predicted.len() != target.len() || predicted.is_empty() {
        return Err(Error::InvalidParameter(format!("huber inputs of length {} and {}", predicted.len(), target.len())));
    }
    let total: f64 = predicted
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let e = (p - t).abs();
            if e <= delta {
                0.5 * e * e
            } else {
                delta * (e - 0.5 * delta)
            }
        })
        .sum();
    Ok(total / predicted.len() as f64)
}

/// Squared difference of total occupancy.
pub fn conservation_loss(input: &OccupancyGrid, predicted: &OccupancyGrid) -> f64 {
    let d = grid_sum(input) - grid_sum(predicted);
    d * d
}

pub fn combined_loss(input: &OccupancyGrid, predicted: &OccupancyGrid, target: &OccupancyGrid, delta: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda {lambda}")));
    }
    input.ensure_same_dims(predicted)?;
    Ok(huber_occupancy_loss(predicted, target, delta)? + lambda * conservation_loss(input, predicted))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub entry: u64,
    pub huber: f64,
    pub conservation: f64,
    pub combined: f64,
}

pub fn write_loss_csv<W: Write>(records: &[LossRecord], mut out: W) -> Result<()> {
    writeln!(out, "entry,huber,conservation,combined")?;
    for r in records {
        writeln!(out, "{},{},{},{}", r.entry, r.huber, r.conservation, r.combined)?;
    }
    Ok(())
}

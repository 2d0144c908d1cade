use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{masks_for, OccupancyPredictor, Prediction, PredictionQuery};
use crate::context::NavContext;
use crate::error::{Error, Result};
use crate::occupancy::OccupancyGrid;

/// A single convolution over the three input layers, stored as JSON. This is
/// the loading side for externally trained models; nothing here trains one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub version: u32,
    /// Odd kernel side length.
    pub size: usize,
    /// Row-major `size * size` weights for the occupancy, footprint and swath
    /// layers, in that order.
    pub weights: [Vec<f64>; 3],
    pub bias: f64,
}

impl KernelModel {
    /// Copies the occupancy layer through unchanged.
    pub fn identity(size: usize) -> Self {
        let mut occ = vec![0.0; size * size];
        occ[size * size / 2] = 1.0;
        Self { version: 1, size, weights: [occ, vec![0.0; size * size], vec![0.0; size * size]], bias: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::Format(format!("unsupported kernel model version {}", self.version)));
        }
        if self.size % 2 == 0 {
            return Err(Error::Format(format!("kernel size {} must be odd", self.size)));
        }
        if self.weights.iter().any(|w| w.len() != self.size * self.size) || !self.bias.is_finite() {
            return Err(Error::Format("kernel weights do not match size".into()));
        }
        if self.weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::Format("non-finite kernel weight".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Zero-padded same-size convolution, clamped to `[0, 1]`.
    pub fn apply(&self, occupancy: &OccupancyGrid, footprint: &[bool], swath: &[bool]) -> Result<OccupancyGrid> {
        let (rows, cols) = occupancy.dims();
        let layers: [Vec<f64>; 3] = [
            occupancy.values().to_vec(),
            footprint.iter().map(|&b| b as u8 as f64).collect(),
            swath.iter().map(|&b| b as u8 as f64).collect(),
        ];
        let k = self.size as i64;
        let half = k / 2;
        let mut out = vec![self.bias; rows * cols];
        for (layer, w) in layers.iter().zip(&self.weights) {
            for r in 0..rows as i64 {
                for c in 0..cols as i64 {
                    let mut acc = 0.0;
                    for i in 0..k {
                        let rr = r + i - half;
                        if rr < 0 || rr >= rows as i64 {
                            continue;
                        }
                        for j in 0..k {
                            let cc = c + j - half;
                            if cc < 0 || cc >= cols as i64 {
                                continue;
                            }
                            acc += w[(i * k + j) as usize] * layer[(rr * cols as i64 + cc) as usize];
                        }
                    }
                    out[(r * cols as i64 + c) as usize] += acc;
                }
            }
        }
        OccupancyGrid::from_values_clamped(*occupancy.spec(), out)
    }
}

/// Predictor evaluating a [`KernelModel`] on each query's window.
#[derive(Debug, Clone)]
pub struct KernelPredictor {
    model: KernelModel,
}

impl KernelPredictor {
    pub fn new(model: KernelModel) -> Result<Self> {
        model.validate()?;
        Ok(Self { model })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::new(KernelModel::load(path)?)
    }

    pub fn model(&self) -> &KernelModel {
        &self.model
    }
}

impl OccupancyPredictor for KernelPredictor {
    type State = ();

    fn predict_batch(&self, ctx: &NavContext, _state: &(), queries: &[PredictionQuery<'_>]) -> Result<Vec<Prediction<()>>> {
        queries
            .iter()
            .map(|q| {
                let (footprint, swath) = masks_for(ctx, &q.window, &q.pose, q.primitive)?;
                let occupancy = self.model.apply(q.occupancy, footprint.bits(), swath.bits())?;
                Ok(Prediction { occupancy, state: () })
            })
            .collect()
    }

    fn name(&self) -> &'static str {
        "kernel"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::occupancy::GridSpec;

    fn grid() -> OccupancyGrid {
        let spec = GridSpec::new(0.5, 4, 5, Vec2::ZERO).unwrap();
        let values = (0..20).map(|i| (i % 7) as f64 / 6.0).collect();
        OccupancyGrid::from_values(spec, values).unwrap()
    }

    #[test]
    fn identity_kernel_copies() {
        let g = grid();
        let m = KernelModel::identity(3);
        assert_eq!(m.apply(&g, &[false; 20], &[true; 20]).unwrap(), g);
    }

    #[test]
    fn output_is_clamped() {
        let mut m = KernelModel::identity(3);
        m.weights[2] = vec![5.0; 9];
        m.bias = -0.5;
        let out = m.apply(&grid(), &[false; 20], &[true; 20]).unwrap();
        assert!(out.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(out.values().contains(&1.0));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let m = KernelModel::identity(5);
        assert_eq!(KernelModel::from_json(&m.to_json().unwrap()).unwrap(), m);
        let mut bad = m.clone();
        bad.size = 4;
        assert!(KernelModel::from_json(&serde_json::to_string(&bad).unwrap()).is_err());
    }
}

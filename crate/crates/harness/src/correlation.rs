//! How well occupancy-change measures track physical collision metrics under
//! random-policy navigation.

use std::io::Write;

use icenav_core::occupancy::{diff_emd, diff_mse, diff_neg_ssim};
use icenav_core::predictor::{random_walk, WalkParams};
use icenav_core::NavContext;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::stats::pearson;

pub const DIFF_NAMES: [&str; 3] = ["diff_mse", "diff_neg_ssim", "diff_emd"];
pub const METRIC_NAMES: [&str; 3] = ["ke_loss", "impulse", "w_approx"];

/// Published correlations of each difference measure (rows, in
/// [`DIFF_NAMES`] order) with KE loss, impulse and work (columns).
pub const PUBLISHED: [[f64; 3]; 3] = [[0.77, 0.95, 0.96], [0.70, 0.88, 0.90], [0.66, 0.88, 0.89]];

/// One executed primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSample {
    pub concentration: f64,
    pub index: usize,
    pub episode: u64,
    pub diff_mse: f64,
    pub diff_neg_ssim: f64,
    pub diff_emd: f64,
    pub ke_loss: f64,
    pub impulse: f64,
    pub w_approx: f64,
    pub collided: bool,
}

impl CorrelationSample {
    pub fn values(&self) -> [f64; 6] {
        [self.diff_mse, self.diff_neg_ssim, self.diff_emd, self.ke_loss, self.impulse, self.w_approx]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub samples: Vec<CorrelationSample>,
    /// Row and column order: the three differences, then the three metrics.
    /// `None` marks an undefined coefficient (a constant column).
    pub matrix: [[Option<f64>; 6]; 6],
}

pub fn column_names() -> [&'static str; 6] {
    [DIFF_NAMES[0], DIFF_NAMES[1], DIFF_NAMES[2], METRIC_NAMES[0], METRIC_NAMES[1], METRIC_NAMES[2]]
}

impl CorrelationTable {
    pub fn from_samples(samples: Vec<CorrelationSample>) -> Self {
        let cols: Vec<Vec<f64>> = (0..6).map(|k| samples.iter().map(|s| s.values()[k]).collect()).collect();
        let mut matrix = [[None; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                matrix[i][j] = if i == j {
                    pearson(&cols[i], &cols[i]).map(|_| 1.0)
                } else {
                    pearson(&cols[i], &cols[j])
                };
            }
        }
        Self { samples, matrix }
    }

    pub fn collisions(&self) -> usize {
        self.samples.iter().filter(|s| s.collided).count()
    }

    /// Coefficient between two named columns.
    pub fn get(&self, diff: &str, metric: &str) -> Option<f64> {
        let names = column_names();
        let i = names.iter().position(|n| *n == diff)?;
        let j = names.iter().position(|n| *n == metric)?;
        self.matrix[i][j]
    }

    pub fn write_matrix_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let names = column_names();
        let mut header = vec!["measure"];
        header.extend(names);
        w.write_record(&header)?;
        for (i, row) in self.matrix.iter().enumerate() {
            let mut rec = vec![names[i].to_string()];
            rec.extend(row.iter().map(|v| cell(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Differences against metrics, next to the published values.
    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["measure", "ke_loss", "impulse", "w_approx", "published_ke_loss", "published_impulse", "published_w_approx"])?;
        for (i, d) in DIFF_NAMES.iter().enumerate() {
            let mut rec = vec![d.to_string()];
            rec.extend(METRIC_NAMES.iter().map(|m| cell(self.get(d, m))));
            rec.extend(PUBLISHED[i].iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_samples_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Text table for the terminal.
    pub fn render_text(&self) -> String {
        let mut s = format!("{:<14} {:>9} {:>9} {:>9}   published\n", "", "ke_loss", "impulse", "w_approx");
        for (i, d) in DIFF_NAMES.iter().enumerate() {
            s.push_str(&format!("{d:<14}"));
            for m in METRIC_NAMES {
                s.push_str(&format!(" {:>9}", self.get(d, m).map_or("undefined".to_string(), |v| format!("{v:.3}"))));
            }
            let p = PUBLISHED[i];
            s.push_str(&format!("   {:.2} {:.2} {:.2}\n", p[0], p[1], p[2]));
        }
        s
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

/// Random walks of `steps` primitives at one concentration.
pub fn correlation_samples(ctx: &NavContext, concentration: f64, seed: u64, steps: usize) -> icenav_core::Result<Vec<CorrelationSample>> {
    let mut out = Vec::with_capacity(steps);
    random_walk(ctx, &WalkParams { concentration, seed, steps }, |step| {
        let (a, b) = (&step.input.occupancy, &step.target);
        out.push(CorrelationSample {
            concentration,
            index: step.index,
            episode: step.episode,
            diff_mse: diff_mse(a, b)?,
            diff_neg_ssim: diff_neg_ssim(a, b)?,
            diff_emd: diff_emd(a, b)?,
            ke_loss: step.metrics.ke_loss,
            impulse: step.metrics.impulse,
            w_approx: step.metrics.w_approx,
            collided: step.metrics.collided(),
        });
        Ok(())
    })?;
    Ok(out)
}

/// Runs the random-policy walks for every configured concentration. Each
/// concentration uses walk seed `seed_base + index`.
pub fn correlation_study(config: &ExperimentConfig, ctx: &NavContext) -> Result<CorrelationTable> {
    let steps = config.correlation.steps_per_concentration;
    let parts = config
        .concentrations
        .par_iter()
        .enumerate()
        .map(|(k, &c)| {
            log::info!("correlation walk at concentration {c}");
            correlation_samples(ctx, c, config.seed_base.wrapping_add(k as u64), steps)
        })
        .collect::<icenav_core::Result<Vec<_>>>()?;
    Ok(CorrelationTable::from_samples(parts.into_iter().flatten().collect()))
}

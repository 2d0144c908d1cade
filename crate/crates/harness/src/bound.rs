//! Predictive search cost against the exhaustive optimum on small instances.

use std::io::Write;

use icenav_core::planner::{optimal_oracle, plan_with_rollout, SearchOptions};
use icenav_core::{Error, NavContext};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::stats::Summary;
use crate::trial::scenario_field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInstance {
    pub alpha: f64,
    pub concentration: f64,
    pub seed: u64,
    pub u_alg: f64,
    pub u_opt: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub alpha: f64,
    /// `1 + alpha / l_min`.
    pub bound: f64,
    pub evaluated: usize,
    /// Instances whose oracle search exceeded the node limit.
    pub skipped_too_large: usize,
    pub min_ratio: f64,
    pub median_ratio: f64,
    pub p90_ratio: f64,
    pub max_ratio: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub instances: Vec<BoundInstance>,
    pub summaries: Vec<BoundSummary>,
    /// Seeds passed over because no field could be generated.
    pub generation_failures: usize,
}

impl BoundReport {
    pub fn write_instances_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for i in &self.instances {
            w.serialize(i)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.summaries {
            w.serialize(s)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

enum Outcome {
    Done(BoundInstance),
    TooLarge,
}

/// Plans each small instance once with the rollout predictor and compares
/// its cost with the enumerated optimum, for every configured alpha.
///
/// Seeds are taken in order from `seed_base`, cycling through the configured
/// concentrations; seeds whose field cannot be generated are passed over
/// until `bound.instances` fields exist (or ten times that many were tried).
pub fn bound_check(config: &ExperimentConfig) -> Result<BoundReport> {
    let (ctx, goal) = bound_setup(config)?;
    let want = config.bound.instances;
    let mut fields = Vec::with_capacity(want);
    let mut generation_failures = 0;
    let mut k = 0u64;
    while fields.len() < want && k < 10 * want as u64 {
        let c = config.concentrations[k as usize % config.concentrations.len()];
        let seed = config.seed_base.wrapping_add(k);
        match scenario_field(&ctx, c, seed) {
            Ok(f) => fields.push((c, seed, f)),
            Err(Error::ConcentrationInfeasible { .. }) => generation_failures += 1,
            Err(e) => return Err(e.into()),
        }
        k += 1;
    }

    let jobs: Vec<_> = config.alphas.iter().flat_map(|&a| fields.iter().map(move |f| (a, f))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(alpha, (c, seed, field))| -> Result<Outcome> {
            let opts = SearchOptions::new(&ctx, ctx.start_pose(), goal, alpha);
            let opt = match optimal_oracle(&opts, field, config.bound.node_limit) {
                Ok(r) => r,
                Err(Error::InstanceTooLarge { .. }) => return Ok(Outcome::TooLarge),
                Err(e) => return Err(e.into()),
            };
            let alg = plan_with_rollout(&opts, field)?;
            Ok(Outcome::Done(BoundInstance {
                alpha,
                concentration: *c,
                seed: *seed,
                u_alg: alg.total_cost,
                u_opt: opt.total_cost,
                ratio: alg.total_cost / opt.total_cost,
            }))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut instances = Vec::new();
    let mut summaries = Vec::new();
    for &alpha in &config.alphas {
        let bound = 1.0 + alpha / ctx.control_set.l_min();
        let mut skipped = 0;
        let mut ratios = Vec::new();
        for (job, outcome) in jobs.iter().zip(&outcomes) {
            if job.0.to_bits() != alpha.to_bits() {
                continue;
            }
            match outcome {
                Outcome::Done(i) => {
                    ratios.push(i.ratio);
                    instances.push(i.clone());
                }
                Outcome::TooLarge => skipped += 1,
            }
        }
        let s = Summary::of(&ratios);
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        summaries.push(BoundSummary {
            alpha,
            bound,
            evaluated: ratios.len(),
            skipped_too_large: skipped,
            min_ratio: s.map_or(f64::NAN, |s| s.min),
            median_ratio: s.map_or(f64::NAN, |s| s.median),
            p90_ratio: crate::stats::quantile_sorted(&sorted, 0.9).unwrap_or(f64::NAN),
            max_ratio: s.map_or(f64::NAN, |s| s.max),
            violations: ratios.iter().filter(|&&r| r > bound).count(),
        });
    }
    Ok(BoundReport { instances, summaries, generation_failures })
}

/// Context and goal line of the bound instances, for callers that want to
/// rebuild one.
pub fn bound_setup(config: &ExperimentConfig) -> Result<(NavContext, f64)> {
    let ctx = config.bound_context()?;
    let goal = ctx.y(&ctx.start_pose()) + config.bound.goal_advance;
    Ok((ctx, goal))
}

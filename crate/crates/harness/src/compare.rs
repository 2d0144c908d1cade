//! Planner comparison campaign: every planner, alpha, concentration and seed.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use icenav_core::field::IceField;
use icenav_core::NavContext;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, PlannerKind};
use crate::error::{HarnessError, Result};
use crate::stats::Summary;
use crate::svg::box_plot_svg;
use crate::trial::{run_trial, scenario_field, TrialRecord, TrialSettings};

pub const SUMMARY_METRICS: [&str; 6] = ["distance", "ke_loss", "impulse", "w_approx", "collision_cost", "total_cost"];

fn metric(r: &TrialRecord, name: &str) -> f64 {
    match name {
        "distance" => r.metrics.distance,
        "ke_loss" => r.metrics.ke_loss,
        "impulse" => r.metrics.impulse,
        "w_approx" => r.metrics.w_approx,
        "collision_cost" => r.collision_cost,
        "total_cost" => r.total_cost,
        _ => unreachable!("unknown metric {name}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub planner: PlannerKind,
    pub alpha: f64,
    pub concentration: f64,
    pub metric: &'static str,
    pub n: usize,
    pub failed: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub iqr: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

type PlannerTrials<'a> = (PlannerKind, Vec<&'a TrialRecord>);

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    /// Sorted by planner, alpha, concentration, seed.
    pub records: Vec<TrialRecord>,
}

/// Flat CSV form of a [`TrialRecord`], without the wall time.
#[derive(Serialize)]
struct TrialRow<'a> {
    planner: PlannerKind,
    alpha: f64,
    concentration: f64,
    seed: u64,
    reached_goal: bool,
    error: &'a str,
    distance: f64,
    ke_loss: f64,
    impulse: f64,
    w_approx: f64,
    steps: usize,
    collisions: usize,
    max_residual_overlap: f64,
    collision_cost: f64,
    total_cost: f64,
    searches: usize,
    nodes_expanded: usize,
    predictions_made: usize,
}

impl Campaign {
    pub fn groups(&self) -> BTreeMap<(PlannerKind, u64, u64), Vec<&TrialRecord>> {
        let mut g: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for r in &self.records {
            g.entry((r.planner, r.alpha.to_bits(), r.concentration.to_bits())).or_default().push(r);
        }
        g
    }

    /// Median of `metric` over the successful trials of one group.
    pub fn median(&self, planner: PlannerKind, alpha: f64, concentration: f64, metric_name: &str) -> Option<f64> {
        let values: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.ok() && r.planner == planner && r.alpha == alpha && r.concentration == concentration)
            .map(|r| metric(r, metric_name))
            .collect();
        Summary::of(&values).map(|s| s.median)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for ((planner, alpha, conc), recs) in self.groups() {
            let ok: Vec<_> = recs.iter().filter(|r| r.ok()).collect();
            for name in SUMMARY_METRICS {
                let values: Vec<f64> = ok.iter().map(|r| metric(r, name)).collect();
                let s = Summary::of(&values);
                rows.push(SummaryRow {
                    planner,
                    alpha: f64::from_bits(alpha),
                    concentration: f64::from_bits(conc),
                    metric: name,
                    n: ok.len(),
                    failed: recs.len() - ok.len(),
                    median: s.map(|s| s.median),
                    q1: s.map(|s| s.q1),
                    q3: s.map(|s| s.q3),
                    iqr: s.map(|s| s.iqr()),
                    min: s.map(|s| s.min),
                    max: s.map(|s| s.max),
                });
            }
        }
        rows
    }

    pub fn write_trials_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(TrialRow {
                planner: r.planner,
                alpha: r.alpha,
                concentration: r.concentration,
                seed: r.seed,
                reached_goal: r.reached_goal,
                error: r.error.as_deref().unwrap_or(""),
                distance: r.metrics.distance,
                ke_loss: r.metrics.ke_loss,
                impulse: r.metrics.impulse,
                w_approx: r.metrics.w_approx,
                steps: r.metrics.steps,
                collisions: r.metrics.collisions,
                max_residual_overlap: r.metrics.max_residual_overlap,
                collision_cost: r.collision_cost,
                total_cost: r.total_cost,
                searches: r.searches,
                nodes_expanded: r.nodes_expanded,
                predictions_made: r.predictions_made,
            })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.summary() {
            w.serialize(row)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Wall-clock times, kept apart from the deterministic outputs.
    pub fn write_timings_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["planner", "alpha", "concentration", "seed", "wall_time_s"])?;
        for r in &self.records {
            w.write_record([r.planner.id().to_string(), r.alpha.to_string(), r.concentration.to_string(), r.seed.to_string(), format!("{:.6}", r.wall_time_s)])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// One box-plot document per (alpha, concentration), keyed by file name.
    pub fn box_plots(&self) -> Vec<(String, String)> {
        let mut by_setting: BTreeMap<(u64, u64), Vec<PlannerTrials>> = BTreeMap::new();
        for ((planner, alpha, conc), recs) in self.groups() {
            by_setting.entry((alpha, conc)).or_default().push((planner, recs));
        }
        let mut out = Vec::new();
        for ((alpha, conc), planners) in by_setting {
            let (alpha, conc) = (f64::from_bits(alpha), f64::from_bits(conc));
            let panels: Vec<(String, Vec<(String, Summary)>)> = ["distance", "ke_loss", "impulse", "w_approx"]
                .iter()
                .map(|name| {
                    let groups = planners
                        .iter()
                        .filter_map(|(p, recs)| {
                            let v: Vec<f64> = recs.iter().filter(|r| r.ok()).map(|r| metric(r, name)).collect();
                            Summary::of(&v).map(|s| (p.id().to_string(), s))
                        })
                        .collect();
                    (name.to_string(), groups)
                })
                .collect();
            let title = format!("alpha {alpha}, concentration {conc}");
            out.push((format!("boxplot_a{alpha}_c{conc}.svg"), box_plot_svg(&title, &panels)));
        }
        out
    }

    /// Writes `trials.csv`, `summary.csv`, `timings.csv` and the box plots.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
        self.write_trials_csv(create(&dir.join("trials.csv"))?)?;
        self.write_summary_csv(create(&dir.join("summary.csv"))?)?;
        self.write_timings_csv(create(&dir.join("timings.csv"))?)?;
        for (name, doc) in self.box_plots() {
            let p = dir.join(name);
            fs::write(&p, doc).map_err(HarnessError::io(p))?;
        }
        Ok(())
    }
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(HarnessError::io(path))?))
}

/// Runs every (planner, alpha, concentration, seed) trial. Seeds are
/// `seed_base .. seed_base + trials_per_concentration`; all planners see the
/// same field for a given (concentration, seed).
pub fn compare_planners(config: &ExperimentConfig, ctx: &NavContext) -> Result<Campaign> {
    let scenarios: Vec<(f64, u64)> = config
        .concentrations
        .iter()
        .flat_map(|&c| (0..config.trials_per_concentration as u64).map(move |k| (c, config.seed_base.wrapping_add(k))))
        .collect();
    let fields: Vec<icenav_core::Result<IceField>> = scenarios.par_iter().map(|&(c, seed)| scenario_field(ctx, c, seed)).collect();

    let mut jobs = Vec::new();
    for &planner in &config.planners {
        for &alpha in &config.alphas {
            for (i, &(c, seed)) in scenarios.iter().enumerate() {
                jobs.push((planner, alpha, c, seed, i));
            }
        }
    }
    let mut records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(planner, alpha, c, seed, i)| {
            let settings = TrialSettings { alpha, replan: config.replan, max_expansions: config.max_expansions };
            let rec = match &fields[i] {
                Ok(field) => run_trial(ctx, &settings, planner, field, c, seed),
                Err(e) => TrialRecord::failed(planner, alpha, c, seed, e.to_string()),
            };
            log::info!("{planner} alpha={alpha} c={c} seed={seed}: goal={} w={:.3} in {:.2}s", rec.reached_goal, rec.metrics.w_approx, rec.wall_time_s);
            rec
        })
        .collect();
    records.sort_by_key(|r| r.key());
    Ok(Campaign { records })
}

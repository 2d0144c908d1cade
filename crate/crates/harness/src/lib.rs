//! Experiment campaigns, reports and plots for the icenav planners.

pub mod bound;
pub mod compare;
pub mod config;
pub mod correlation;
pub mod error;
pub mod stats;
pub mod svg;
pub mod trial;

use std::fs;
use std::path::Path;

pub use bound::{bound_check, BoundReport};
pub use compare::{compare_planners, Campaign};
pub use config::{ExperimentConfig, PlannerKind};
pub use correlation::{correlation_study, CorrelationTable};
pub use error::{HarnessError, Result};
pub use svg::render_svg;
pub use trial::{run_trial, TrialRecord, TrialSettings};

use compare::create;

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Writes `correlation.csv`, `table.csv` and `samples.csv`.
pub fn write_correlation(table: &CorrelationTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    table.write_matrix_csv(create(&dir.join("correlation.csv"))?)?;
    table.write_table_csv(create(&dir.join("table.csv"))?)?;
    table.write_samples_csv(create(&dir.join("samples.csv"))?)?;
    Ok(())
}

/// Writes `bound_instances.csv` and `bound_summary.csv`.
pub fn write_bound(report: &BoundReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    report.write_instances_csv(create(&dir.join("bound_instances.csv"))?)?;
    report.write_summary_csv(create(&dir.join("bound_summary.csv"))?)?;
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use icenav_core::field::IceField;
use icenav_core::planner::{PathResult, SearchOptions};
use icenav_core::predictor::collect_dataset;
use icenav_harness::compare::SUMMARY_METRICS;
use icenav_harness::trial::{plan, scenario_field};
use icenav_harness::{
    bound_check, compare_planners, correlation_study, render_svg, with_workers, write_bound, write_correlation, ExperimentConfig, HarnessError,
    PlannerKind, Result,
};

#[derive(Parser)]
#[command(name = "icenav", version, about = "Ice-channel planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replaces the configured alpha list with this single value.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Replaces the configured concentration list with this single value.
    #[arg(long, global = true)]
    concentration: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, overrides_with = "no_replan")]
    replan: bool,
    #[arg(long, global = true)]
    no_replan: bool,
    /// Output directory, or output file for gen, collect and render.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an ice field and write it as JSON.
    Gen,
    /// Plan one instance; writes path.json and plan.svg.
    Plan {
        #[arg(long, default_value = "predictive")]
        planner: String,
    },
    /// Planner comparison campaign.
    Run,
    /// Correlation of occupancy differences with collision metrics.
    Correlate,
    /// Search cost against the exhaustive optimum on small instances.
    BoundCheck,
    /// Export a random-walk prediction dataset.
    Collect {
        #[arg(long, default_value_t = 1000)]
        entries: usize,
    },
    /// Render a field (and optionally a planned path) as SVG.
    Render {
        #[arg(long)]
        field: PathBuf,
        /// PathResult JSON written by `plan`.
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long)]
        overlay: bool,
    },
}

fn resolve(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed_base = s;
    }
    if let Some(a) = common.alpha {
        cfg.alphas = vec![a];
    }
    if let Some(c) = common.concentration {
        cfg.concentrations = vec![c];
    }
    if let Some(t) = common.trials {
        cfg.trials_per_concentration = t;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if common.replan {
        cfg.replan = true;
    }
    if common.no_replan {
        cfg.replan = false;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    fs::write(path, contents).map_err(HarnessError::io(path))
}

fn file_out(common: &Common, cfg: &ExperimentConfig, default_name: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| cfg.out_dir.join(default_name))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve(&cli.common)?;
    let ctx = cfg.context()?;
    match cli.command {
        Command::Gen => {
            let field = scenario_field(&ctx, cfg.concentrations[0], cfg.seed_base)?;
            let out = file_out(&cli.common, &cfg, "field.json");
            write_file(&out, field.to_json()?.as_bytes())?;
            println!("{} floes at concentration {:.4} -> {}", field.floes().len(), field.concentration(), out.display());
        }
        Command::Plan { planner } => {
            let kind = PlannerKind::parse(&planner).ok_or_else(|| HarnessError::Config(format!("unknown planner {planner:?}")))?;
            let field = scenario_field(&ctx, cfg.concentrations[0], cfg.seed_base)?;
            let mut opts = SearchOptions::new(&ctx, ctx.start_pose(), ctx.channel.goal_y, cfg.alphas[0]);
            opts.max_expansions = cfg.max_expansions;
            let result = plan(kind, &opts, &field)?;
            write_file(&cfg.out_dir.join("path.json"), result.to_json()?.as_bytes())?;
            write_file(&cfg.out_dir.join("plan.svg"), render_svg(&ctx, &field, Some(&result.path), false).as_bytes())?;
            println!(
                "{}: {} primitives, distance {:.3} m, collision {:.6}, cost {:.3}, {} expansions",
                kind,
                result.path.len(),
                result.distance,
                result.collision_cost,
                result.total_cost,
                result.nodes_expanded
            );
        }
        Command::Run => {
            let campaign = with_workers(cfg.workers, || compare_planners(&cfg, &ctx))??;
            campaign.write_all(&cfg.out_dir)?;
            write_file(&cfg.out_dir.join("config.json"), cfg.to_json()?.as_bytes())?;
            for row in campaign.summary().iter().filter(|r| r.metric == SUMMARY_METRICS[3]) {
                println!(
                    "{:<15} alpha {:<7} c {:<4} median w_approx {:>10} ({} ok, {} failed)",
                    row.planner.id(),
                    row.alpha,
                    row.concentration,
                    row.median.map_or("-".into(), |m| format!("{m:.3}")),
                    row.n,
                    row.failed
                );
            }
        }
        Command::Correlate => {
            let table = with_workers(cfg.workers, || correlation_study(&cfg, &ctx))??;
            write_correlation(&table, &cfg.out_dir)?;
            println!("{} primitives, {} with collisions", table.samples.len(), table.collisions());
            print!("{}", table.render_text());
        }
        Command::BoundCheck => {
            let report = with_workers(cfg.workers, || bound_check(&cfg))??;
            write_bound(&report, &cfg.out_dir)?;
            for s in &report.summaries {
                println!(
                    "alpha {}: {} instances ({} too large), ratio min {:.6} median {:.6} max {:.6}, bound {:.1}, {} violations",
                    s.alpha, s.evaluated, s.skipped_too_large, s.min_ratio, s.median_ratio, s.max_ratio, s.bound, s.violations
                );
            }
        }
        Command::Collect { entries } => {
            let out = file_out(&cli.common, &cfg, "dataset.bin");
            let mut buf = Vec::new();
            let n = collect_dataset(&ctx, cfg.concentrations[0], entries, cfg.seed_base, &mut buf)?;
            write_file(&out, &buf)?;
            println!("{n} entries -> {}", out.display());
        }
        Command::Render { field, path, overlay } => {
            let text = fs::read_to_string(&field).map_err(|e| HarnessError::Config(format!("{}: {e}", field.display())))?;
            let field = IceField::from_json(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", field.display())))?;
            let result = match &path {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
                    Some(serde_json::from_str::<PathResult>(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?)
                }
                None => None,
            };
            let ctx = icenav_core::NavContext::new(*field.channel(), &cfg.context).map_err(|e| HarnessError::Config(e.to_string()))?;
            let out = file_out(&cli.common, &cfg, "render.svg");
            write_file(&out, render_svg(&ctx, &field, result.as_ref().map(|r| &r.path), overlay).as_bytes())?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Experiment configuration: one versioned JSON document, with every CLI flag
//! able to override a key.

use std::fmt;
use std::path::{Path, PathBuf};

use icenav_core::context::ContextParams;
use icenav_core::field::{Channel, MAX_CONCENTRATION};
use icenav_core::NavContext;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    /// Memoised A* with the rollout predictor.
    Predictive,
    Straight,
    /// Lattice A* charging the unchanged occupancy under each swath.
    StaticLattice,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 3] = [PlannerKind::Predictive, PlannerKind::Straight, PlannerKind::StaticLattice];

    pub fn id(self) -> &'static str {
        match self {
            PlannerKind::Predictive => "predictive",
            PlannerKind::Straight => "straight",
            PlannerKind::StaticLattice => "static_lattice",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.id() == s)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationConfig {
    /// Random-policy primitives executed per concentration.
    pub steps_per_concentration: usize,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self { steps_per_concentration: 1000 }
    }
}

/// Small instances for comparing the search against exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    pub instances: usize,
    pub channel: Channel,
    /// Goal line distance ahead of the start pose, metres.
    pub goal_advance: f64,
    /// Oracle search-node limit; larger instances are skipped.
    pub node_limit: usize,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { instances: 100, channel: Channel { width: 8.0, length: 12.0, goal_y: 12.0 }, goal_advance: 5.0, node_limit: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub concentrations: Vec<f64>,
    pub trials_per_concentration: usize,
    /// Collision weights; campaigns run once per value.
    pub alphas: Vec<f64>,
    pub seed_base: u64,
    pub planners: Vec<PlannerKind>,
    /// Replan after every executed primitive instead of following one plan.
    pub replan: bool,
    pub channel: Channel,
    pub context: ContextParams,
    /// Per-search expansion cap; `None` searches until OPEN is empty.
    pub max_expansions: Option<usize>,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub correlation: CorrelationConfig,
    pub bound: BoundConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            concentrations: vec![0.2, 0.3, 0.4, 0.5],
            trials_per_concentration: 50,
            alphas: vec![10.0, 100.0, 1000.0],
            seed_base: 0,
            planners: PlannerKind::ALL.to_vec(),
            replan: true,
            channel: Channel::default(),
            context: ContextParams::default(),
            max_expansions: None,
            workers: 1,
            out_dir: PathBuf::from("out"),
            correlation: CorrelationConfig::default(),
            bound: BoundConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(format!("schema version {} (expected {CONFIG_VERSION})", self.version)));
        }
        if self.concentrations.is_empty() {
            return Err(invalid("no concentrations"));
        }
        for &c in &self.concentrations {
            if !(0.0..=MAX_CONCENTRATION).contains(&c) {
                return Err(invalid(format!("concentration {c} outside [0, {MAX_CONCENTRATION}]")));
            }
        }
        if self.trials_per_concentration == 0 {
            return Err(invalid("trials_per_concentration must be at least 1"));
        }
        if self.alphas.is_empty() {
            return Err(invalid("no alpha values"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(invalid(format!("alpha {a} must be finite and non-negative")));
        }
        if self.planners.is_empty() {
            return Err(invalid("no planners"));
        }
        let mut sorted = self.planners.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.planners.len() {
            return Err(invalid("planner listed twice"));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if self.max_expansions == Some(0) {
            return Err(invalid("max_expansions must be at least 1"));
        }
        if self.correlation.steps_per_concentration == 0 {
            return Err(invalid("correlation.steps_per_concentration must be at least 1"));
        }
        if self.bound.instances == 0 || self.bound.node_limit == 0 {
            return Err(invalid("bound.instances and bound.node_limit must be at least 1"));
        }
        let ctx = self.context()?;
        if ctx.y(&ctx.start_pose()) >= self.channel.goal_y {
            return Err(invalid(format!("start pose already past the goal line {}", self.channel.goal_y)));
        }
        let bctx = self.bound_context()?;
        let goal = bctx.y(&bctx.start_pose()) + self.bound.goal_advance;
        if !(self.bound.goal_advance > 0.0 && goal <= self.bound.channel.goal_y) {
            return Err(invalid(format!("bound goal line {goal} must lie ahead of the start and within the channel")));
        }
        Ok(())
    }

    pub fn context(&self) -> Result<NavContext> {
        NavContext::new(self.channel, &self.context).map_err(|e| invalid(e.to_string()))
    }

    pub fn bound_context(&self) -> Result<NavContext> {
        NavContext::new(self.bound.channel, &self.context).map_err(|e| invalid(format!("bound channel: {e}")))
    }
}

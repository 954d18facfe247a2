//! Estimation of the depth center: the empirical Karcher mean, i.e. the
//! event vector minimizing `SSD(t) = Σ_i d_{K,2}(t, S_i)²`.
//!
//! Three estimators share one objective:
//! * [`rjmcmc_anneal`] searches across dimensions by reversible-jump annealing,
//! * [`line_search`] runs gradient descent separately in each dimension,
//! * [`combined_center`] pre-trains with annealing to pick the `d_r` most
//!   promising dimensions and their starting states, then refines them
//!   with line search.

mod anneal;
mod line_search;
mod objective;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use anneal::{
    rjmcmc_anneal, AcceptanceStats, AnnealOutcome, AnnealSchedule, Cooling, DimensionBest,
    ProposalMix, DEFAULT_COOLING_FRACTION,
};
pub use line_search::{line_search, DimensionResult, LineSearchConfig, LineSearchOutcome};
pub use objective::{DimensionBound, SsdObjective};

use crate::error::{Error, Result};
use crate::process::PointProcess;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterMethod {
    Rjmcmc,
    LineSearch,
    Combined,
}

impl FromStr for CenterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rjmcmc" | "anneal" | "annealing" => Ok(CenterMethod::Rjmcmc),
            "line" | "line_search" | "sgd" => Ok(CenterMethod::LineSearch),
            "combined" => Ok(CenterMethod::Combined),
            other => Err(Error::arg(format!("unknown center method `{other}`"))),
        }
    }
}

impl fmt::Display for CenterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CenterMethod::Rjmcmc => "rjmcmc",
            CenterMethod::LineSearch => "line_search",
            CenterMethod::Combined => "combined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub stage: String,
    pub iteration: usize,
    pub dimension: usize,
    pub ssd: f64,
    pub best_ssd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub dimension: usize,
    pub ssd: f64,
}

/// Relative SSD gap under which two dimensions count as a near tie.
pub const NEAR_TIE_RTOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterEstimate {
    pub events: PointProcess,
    pub ssd: f64,
    pub dimension_bound: usize,
    pub method: CenterMethod,
    pub seed: u64,
    pub converged: bool,
    /// Best SSD found in each dimension that was examined.
    pub per_dimension: Vec<DimensionSummary>,
    /// Other dimensions whose best SSD is within [`NEAR_TIE_RTOL`] of the winner.
    pub near_ties: Vec<usize>,
    /// Best-so-far SSD over the run; non-increasing.
    pub trace: Vec<TracePoint>,
}

impl CenterEstimate {
    pub fn dimension(&self) -> usize {
        self.events.len()
    }
}

/// Settings for all three estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterConfig {
    pub n_max: usize,
    /// Cooling constant `c`; scaled to `SSD(∅)` when unset.
    pub anneal_c: Option<f64>,
    pub mix: ProposalMix,
    pub move_sd: Option<f64>,
    pub d_r: usize,
    pub line: LineSearchConfig,
}

impl Default for CenterConfig {
    fn default() -> Self {
        Self {
            n_max: 20_000,
            anneal_c: None,
            mix: ProposalMix::default(),
            move_sd: None,
            d_r: 3,
            line: LineSearchConfig::default(),
        }
    }
}

impl CenterConfig {
    pub fn schedule(&self, obj: &SsdObjective) -> AnnealSchedule {
        let mut s = AnnealSchedule::for_objective(obj, self.n_max);
        if let Some(c) = self.anneal_c {
            s.cooling = Cooling::Logarithmic { c };
        }
        s.mix = self.mix;
        s.move_sd = self.move_sd;
        s
    }
}

fn near_ties(per_dimension: &[DimensionSummary], winner: usize, best: f64) -> Vec<usize> {
    let ties: Vec<usize> = per_dimension
        .iter()
        .filter(|d| d.dimension != winner && d.ssd <= best * (1.0 + NEAR_TIE_RTOL))
        .map(|d| d.dimension)
        .collect();
    if !ties.is_empty() {
        log::warn!("center: dimensions {ties:?} are within 0.1% of the best SSD {best}");
    }
    ties
}

fn make_process(obj: &SsdObjective, events: Vec<f64>) -> Result<PointProcess> {
    Ok(PointProcess::new(events, obj.horizon())?.with_id("center"))
}

/// Starting state for annealing: quantile init at the rounded mean count.
pub fn default_start(obj: &SsdObjective, max_dim: usize) -> Vec<f64> {
    let k = (obj.mean_count().round() as usize).min(max_dim);
    obj.quantile_init(k)
}

/// Annealing only; the estimate is the lowest-SSD state visited.
pub fn anneal_center(obj: &SsdObjective, cfg: &CenterConfig, seed: u64) -> Result<CenterEstimate> {
    let bound = obj.dimension_bound().proven;
    let out = rjmcmc_anneal(obj, &cfg.schedule(obj), &default_start(obj, bound), bound, seed)?;
    let best = out.best().clone();
    let per_dimension: Vec<DimensionSummary> = out
        .by_dimension
        .iter()
        .map(|d| DimensionSummary {
            dimension: d.dimension,
            ssd: d.ssd,
        })
        .collect();
    Ok(CenterEstimate {
        near_ties: near_ties(&per_dimension, best.dimension, best.ssd),
        events: make_process(obj, best.events)?,
        ssd: best.ssd,
        dimension_bound: bound,
        method: CenterMethod::Rjmcmc,
        seed,
        converged: true,
        per_dimension,
        trace: out.trace,
    })
}

/// Line search over every dimension `0..=D`.
pub fn line_search_center(
    obj: &SsdObjective,
    cfg: &CenterConfig,
    seed: u64,
) -> Result<CenterEstimate> {
    let bound = obj.dimension_bound().proven;
    let dims: Vec<usize> = (0..=bound).collect();
    let out = line_search(obj, &dims, None, &cfg.line, seed)?;
    finish_line_search(obj, out, bound, CenterMethod::LineSearch, seed, Vec::new())
}

fn finish_line_search(
    obj: &SsdObjective,
    out: LineSearchOutcome,
    bound: usize,
    method: CenterMethod,
    seed: u64,
    mut trace: Vec<TracePoint>,
) -> Result<CenterEstimate> {
    let best = out.best().clone();
    let per_dimension: Vec<DimensionSummary> = out
        .per_dimension
        .iter()
        .map(|d| DimensionSummary {
            dimension: d.dimension,
            ssd: d.ssd,
        })
        .collect();
    let converged = out.per_dimension.iter().all(|d| d.converged);
    if !converged {
        log::warn!("center: line search hit the epoch limit before converging");
    }
    let carried = trace.last().map_or(f64::INFINITY, |t| t.best_ssd);
    let offset = trace.last().map_or(0, |t| t.iteration + 1);
    trace.extend(out.trace.into_iter().map(|mut t| {
        t.iteration += offset;
        t.best_ssd = t.best_ssd.min(carried);
        t
    }));
    Ok(CenterEstimate {
        near_ties: near_ties(&per_dimension, best.dimension, best.ssd),
        events: make_process(obj, best.events)?,
        ssd: best.ssd,
        dimension_bound: bound,
        method,
        seed,
        converged,
        per_dimension,
        trace,
    })
}

/// Annealing pre-train followed by line search on the `d_r` best
/// dimensions, each started from its best annealing state.
pub fn combined_center(obj: &SsdObjective, cfg: &CenterConfig, seed: u64) -> Result<CenterEstimate> {
    if cfg.d_r == 0 {
        return Err(Error::arg("d_r must be at least 1"));
    }
    let bound = obj.dimension_bound().proven;
    let pre = rjmcmc_anneal(obj, &cfg.schedule(obj), &default_start(obj, bound), bound, seed)?;
    let top = pre.top(cfg.d_r);
    let dims: Vec<usize> = top.iter().map(|d| d.dimension).collect();
    let inits: Vec<Vec<f64>> = top.iter().map(|d| d.events.clone()).collect();
    let out = line_search(obj, &dims, Some(&inits), &cfg.line, seed)?;
    finish_line_search(obj, out, bound, CenterMethod::Combined, seed, pre.trace)
}

/// Dispatches on `method`.
pub fn estimate_center(
    obj: &SsdObjective,
    method: CenterMethod,
    cfg: &CenterConfig,
    seed: u64,
) -> Result<CenterEstimate> {
    match method {
        CenterMethod::Rjmcmc => anneal_center(obj, cfg, seed),
        CenterMethod::LineSearch => line_search_center(obj, cfg, seed),
        CenterMethod::Combined => combined_center(obj, cfg, seed),
    }
}

//! Depth functions on smoothed point processes.
//!
//! * h-depth: `D(s) = (1/N) Σ_i G_h(‖f_s − f_{S_i}‖)` with
//!   `G_h(t) = exp(−t² / (2h))`.
//! * modified (center-based) h-depth: `G_h(‖f_s − f_c‖)` for a fixed center.
//! * modified band depth (two-curve bands) on grid-sampled curves, kept as
//!   a baseline.
//!
//! Ranking is done on log-depth so that observations whose depth underflows
//! `f64` still order correctly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::numeric::{fmt_num, linspace};
use crate::par;
use crate::process::PointProcess;
use crate::smooth::{curve_value, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMethod {
    HDepth,
    ModifiedHDepth,
    ModifiedBandDepth,
}

impl FromStr for DepthMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "h_depth" | "h" | "hd" => Ok(DepthMethod::HDepth),
            "modified_h_depth" | "modified" | "mhd" => Ok(DepthMethod::ModifiedHDepth),
            "modified_band_depth" | "mbd" | "band" => Ok(DepthMethod::ModifiedBandDepth),
            other => Err(Error::arg(format!("unknown depth method `{other}`"))),
        }
    }
}

impl fmt::Display for DepthMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DepthMethod::HDepth => "h_depth",
            DepthMethod::ModifiedHDepth => "modified_h_depth",
            DepthMethod::ModifiedBandDepth => "modified_band_depth",
        })
    }
}

/// How the bandwidth `h` is chosen. `ProportionalToHorizon(C)` gives
/// `h = C·T`, which keeps depth invariant under `t ↦ a·t + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum HRule {
    Fixed(f64),
    ProportionalToHorizon(f64),
}

impl HRule {
    pub fn resolve(&self, horizon: f64) -> f64 {
        match *self {
            HRule::Fixed(h) => h,
            HRule::ProportionalToHorizon(c) => c * horizon,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            HRule::Fixed(h) => h,
            HRule::ProportionalToHorizon(c) => c,
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::arg(format!("bandwidth constant must be positive, got {v}")))
        }
    }
}

pub const DEFAULT_BAND_GRID: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthConfig {
    pub h_rule: HRule,
    pub p: f64,
    pub method: DepthMethod,
    /// Exclude an observation from its own reference sample when ranking.
    pub leave_one_out: bool,
    pub band_grid_size: usize,
}

impl Default for DepthConfig {
    fn default() -> Self {
        Self {
            h_rule: HRule::ProportionalToHorizon(1.0),
            p: 2.0,
            method: DepthMethod::HDepth,
            leave_one_out: false,
            band_grid_size: DEFAULT_BAND_GRID,
        }
    }
}

impl DepthConfig {
    pub fn with_method(method: DepthMethod) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.h_rule.validate()?;
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::arg(format!("p must be >= 1, got {}", self.p)));
        }
        if self.band_grid_size < 2 {
            return Err(Error::arg("band depth grid needs at least 2 points"));
        }
        Ok(())
    }

    pub fn h(&self, horizon: f64) -> f64 {
        self.h_rule.resolve(horizon)
    }

    pub fn metric(&self, spec: &KernelSpec) -> Result<Metric> {
        self.validate()?;
        Metric::preferred(*spec, self.p)
    }
}

fn check_domain(spec: &KernelSpec, processes: &[&PointProcess]) -> Result<()> {
    for p in processes {
        if p.horizon() != spec.horizon {
            return Err(Error::DomainMismatch(format!(
                "process horizon {} differs from kernel horizon {}",
                p.horizon(),
                spec.horizon
            )));
        }
    }
    Ok(())
}

/// `ln((1/N) Σ exp(x_i))` without overflow or underflow.
fn log_mean_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + (sum / xs.len() as f64).ln()
}

fn log_h_depth_from_sq(sq_distances: &[f64], h: f64) -> f64 {
    let exps: Vec<f64> = sq_distances.iter().map(|d2| -d2 / (2.0 * h)).collect();
    log_mean_exp(&exps)
}

/// Empirical h-depth of `s` with respect to `sample`.
pub fn h_depth(
    s: &PointProcess,
    sample: &[PointProcess],
    cfg: &DepthConfig,
    spec: &KernelSpec,
) -> Result<f64> {
    Ok(log_h_depth(s, sample, cfg, spec)?.exp())
}

pub fn log_h_depth(
    s: &PointProcess,
    sample: &[PointProcess],
    cfg: &DepthConfig,
    spec: &KernelSpec,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::arg("h-depth needs a non-empty sample"));
    }
    let metric = cfg.metric(spec)?;
    check_domain(spec, &[s])?;
    check_domain(spec, &sample.iter().collect::<Vec<_>>())?;
    let sq: Vec<f64> = sample
        .iter()
        .map(|x| metric.squared_distance(s.events(), x.events()))
        .collect();
    Ok(log_h_depth_from_sq(&sq, cfg.h(spec.horizon)))
}

/// Center-based h-depth `exp(−‖f_s − f_c‖² / (2h))`.
pub fn modified_h_depth(
    s: &PointProcess,
    center: &PointProcess,
    cfg: &DepthConfig,
    spec: &KernelSpec,
) -> Result<f64> {
    let metric = cfg.metric(spec)?;
    check_domain(spec, &[s, center])?;
    let d2 = metric.squared_distance(s.events(), center.events());
    Ok((-d2 / (2.0 * cfg.h(spec.horizon))).exp())
}

/// Sample curves on a fixed grid with per-grid-point sorted columns, for
/// repeated band-depth queries.
struct BandTable {
    grid: Vec<f64>,
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl BandTable {
    fn new(sample: &[PointProcess], spec: &KernelSpec, grid_size: usize) -> Self {
        let grid = linspace(0.0, spec.horizon, grid_size);
        let columns = grid
            .iter()
            .map(|&t| {
                let mut col: Vec<f64> = sample
                    .iter()
                    .map(|p| curve_value(spec, p.events(), t))
                    .collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Self {
            grid,
            columns,
            n: sample.len(),
        }
    }

    fn depth(&self, spec: &KernelSpec, events: &[f64]) -> f64 {
        let pairs = |k: usize| (k * k.saturating_sub(1) / 2) as f64;
        let all = pairs(self.n);
        let mut total = 0.0;
        for (g, col) in self.grid.iter().zip(&self.columns) {
            let x = curve_value(spec, events, *g);
            let below = col.partition_point(|&v| v < x);
            let above = col.len() - col.partition_point(|&v| v <= x);
            total += (all - pairs(below) - pairs(above)) / all;
        }
        total / self.grid.len() as f64
    }
}

/// Modified band depth (bands spanned by pairs of curves): the average over
/// pairs of the fraction of grid points where `f_s` lies inside the band.
pub fn modified_band_depth(
    s: &PointProcess,
    sample: &[PointProcess],
    spec: &KernelSpec,
    grid_size: usize,
) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::arg("modified band depth needs at least 2 sample curves"));
    }
    if grid_size < 2 {
        return Err(Error::arg("band depth grid needs at least 2 points"));
    }
    check_domain(spec, &[s])?;
    check_domain(spec, &sample.iter().collect::<Vec<_>>())?;
    Ok(BandTable::new(sample, spec, grid_size).depth(spec, s.events()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEntry {
    pub id: String,
    pub depth: f64,
    pub log_depth: f64,
    pub rank: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    /// In input order.
    pub entries: Vec<DepthEntry>,
    pub config: DepthConfig,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<PointProcess>,
}

impl DepthReport {
    /// Indices into `entries` ordered by rank.
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        idx.sort_by_key(|&i| self.entries[i].rank);
        idx
    }

    pub fn top_k(&self, k: usize) -> Vec<&DepthEntry> {
        self.order().into_iter().take(k).map(|i| &self.entries[i]).collect()
    }

    pub fn bottom_k(&self, k: usize) -> Vec<&DepthEntry> {
        let order = self.order();
        let skip = order.len().saturating_sub(k);
        order.into_iter().skip(skip).map(|i| &self.entries[i]).collect()
    }

    /// `id,depth,rank` rows in rank order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,depth,log_depth,rank,count\n");
        for i in self.order() {
            let e = &self.entries[i];
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.id,
                fmt_num(e.depth),
                fmt_num(e.log_depth),
                e.rank,
                e.count
            ));
        }
        out
    }
}

/// Depths of `queries` against `sample`. Queries are not part of the sample
/// unless the caller passes them in both places.
pub fn depths_against(
    queries: &[PointProcess],
    sample: &[PointProcess],
    cfg: &DepthConfig,
    spec: &KernelSpec,
    center: Option<&PointProcess>,
) -> Result<Vec<f64>> {
    Ok(log_depths(queries, sample, cfg, spec, center, false)?
        .into_iter()
        .map(f64::exp)
        .collect())
}

fn log_depths(
    queries: &[PointProcess],
    sample: &[PointProcess],
    cfg: &DepthConfig,
    spec: &KernelSpec,
    center: Option<&PointProcess>,
    leave_self_out: bool,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_domain(spec, &queries.iter().collect::<Vec<_>>())?;
    check_domain(spec, &sample.iter().collect::<Vec<_>>())?;
    let h = cfg.h(spec.horizon);
    match cfg.method {
        DepthMethod::HDepth => {
            let min = if leave_self_out { 2 } else { 1 };
            if sample.len() < min {
                return Err(Error::arg("h-depth needs a non-empty reference sample"));
            }
            let metric = cfg.metric(spec)?;
            Ok(par::map_indexed(queries.len(), |i| {
                let sq: Vec<f64> = sample
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| !(leave_self_out && *j == i))
                    .map(|(_, x)| metric.squared_distance(queries[i].events(), x.events()))
                    .collect();
                log_h_depth_from_sq(&sq, h)
            }))
        }
        DepthMethod::ModifiedHDepth => {
            let center = center.ok_or_else(|| {
                Error::arg("modified h-depth needs a center process")
            })?;
            check_domain(spec, &[center])?;
            let metric = cfg.metric(spec)?;
            Ok(par::map_indexed(queries.len(), |i| {
                -metric.squared_distance(queries[i].events(), center.events()) / (2.0 * h)
            }))
        }
        DepthMethod::ModifiedBandDepth => {
            if leave_self_out {
                if sample.len() < 3 {
                    return Err(Error::arg("leave-one-out band depth needs at least 3 curves"));
                }
                Ok(par::map_indexed(queries.len(), |i| {
                    let rest: Vec<PointProcess> = sample
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, p)| p.clone())
                        .collect();
                    BandTable::new(&rest, spec, cfg.band_grid_size)
                        .depth(spec, queries[i].events())
                        .ln()
                }))
            } else {
                if sample.len() < 2 {
                    return Err(Error::arg("modified band depth needs at least 2 sample curves"));
                }
                let table = BandTable::new(sample, spec, cfg.band_grid_size);
                Ok(par::map_indexed(queries.len(), |i| {
                    table.depth(spec, queries[i].events()).ln()
                }))
            }
        }
    }
}

/// Depth of every sample member against the whole sample, with ranks
/// (1 = deepest). Ties in depth are broken by id.
pub fn rank(
    sample: &[PointProcess],
    cfg: &DepthConfig,
    spec: &KernelSpec,
    center: Option<&PointProcess>,
) -> Result<DepthReport> {
    if sample.is_empty() {
        return Err(Error::arg("cannot rank an empty sample"));
    }
    let logs = log_depths(sample, sample, cfg, spec, center, cfg.leave_one_out)?;
    Ok(build_report(sample, logs, cfg, spec, center))
}

/// Depths of `queries` against `sample`, ranked among the queries.
pub fn query_report(
    queries: &[PointProcess],
    sample: &[PointProcess],
    cfg: &DepthConfig,
    spec: &KernelSpec,
    center: Option<&PointProcess>,
) -> Result<DepthReport> {
    let logs = log_depths(queries, sample, cfg, spec, center, false)?;
    Ok(build_report(queries, logs, cfg, spec, center))
}

fn build_report(
    processes: &[PointProcess],
    logs: Vec<f64>,
    cfg: &DepthConfig,
    spec: &KernelSpec,
    center: Option<&PointProcess>,
) -> DepthReport {
    let ids: Vec<String> = processes
        .iter()
        .enumerate()
        .map(|(i, p)| p.display_id(i))
        .collect();
    let mut order: Vec<usize> = (0..processes.len()).collect();
    order.sort_by(|&a, &b| match logs[b].total_cmp(&logs[a]) {
        Ordering::Equal => ids[a].cmp(&ids[b]),
        o => o,
    });
    let mut ranks = vec![0usize; processes.len()];
    for (r, &i) in order.iter().enumerate() {
        ranks[i] = r + 1;
    }
    let entries = (0..processes.len())
        .map(|i| DepthEntry {
            id: ids[i].clone(),
            depth: logs[i].exp(),
            log_depth: logs[i],
            rank: ranks[i],
            count: processes[i].len(),
        })
        .collect();
    DepthReport {
        entries,
        config: *cfg,
        h: cfg.h(spec.horizon),
        center: match cfg.method {
            DepthMethod::ModifiedHDepth => center.cloned(),
            _ => None,
        },
    }
}

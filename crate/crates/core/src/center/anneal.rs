//! Reversible-jump simulated annealing over event vectors of varying length.
//!
//! The chain targets `π_i(t) ∝ exp(−SSD(t)/T_i)` on sorted event vectors
//! with `0 ≤ |t| ≤ D`. Proposals are birth (new uniform event), death
//! (remove a uniformly chosen event) and move (Gaussian step on one event,
//! reflected into `[0, T]`).

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::objective::{AttractionTable, SsdObjective};
use super::TracePoint;
use crate::error::{Error, Result};
use crate::process::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Cooling {
    /// `T_i = c / ln(1 + i)`.
    Logarithmic { c: f64 },
    /// Fixed temperature; for diagnostics.
    Constant { temperature: f64 },
}

impl Cooling {
    pub fn temperature(&self, iteration: usize) -> f64 {
        match *self {
            Cooling::Logarithmic { c } => c / (1.0 + iteration as f64).ln(),
            Cooling::Constant { temperature } => temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalMix {
    pub birth: f64,
    pub death: f64,
    pub moves: f64,
}

impl Default for ProposalMix {
    fn default() -> Self {
        Self {
            birth: 0.25,
            death: 0.25,
            moves: 0.5,
        }
    }
}

impl ProposalMix {
    fn validate(&self) -> Result<()> {
        let total = self.birth + self.death + self.moves;
        if [self.birth, self.death, self.moves]
            .iter()
            .any(|p| !(p.is_finite() && *p > 0.0))
            || (total - 1.0).abs() > 1e-9
        {
            return Err(Error::arg(format!(
                "proposal probabilities must be positive and sum to 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Probabilities (birth, death, move) available at dimension `k` under cap `max_dim`.
    fn at(&self, k: usize, max_dim: usize) -> (f64, f64, f64) {
        let b = if k < max_dim { self.birth } else { 0.0 };
        let d = if k > 0 { self.death } else { 0.0 };
        let m = if k > 0 { self.moves } else { 0.0 };
        let total = b + d + m;
        (b / total, d / total, m / total)
    }
}

/// Fraction of the empty-candidate SSD used as the default cooling constant.
pub const DEFAULT_COOLING_FRACTION: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub cooling: Cooling,
    pub n_max: usize,
    pub mix: ProposalMix,
    /// Move step standard deviation; `T/20` when unset.
    pub move_sd: Option<f64>,
}

impl AnnealSchedule {
    /// Logarithmic cooling with `c` scaled to the objective.
    pub fn for_objective(obj: &SsdObjective, n_max: usize) -> Self {
        Self {
            cooling: Cooling::Logarithmic {
                c: DEFAULT_COOLING_FRACTION * obj.empty_ssd().max(f64::MIN_POSITIVE),
            },
            n_max,
            mix: ProposalMix::default(),
            move_sd: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mix.validate()?;
        let c = match self.cooling {
            Cooling::Logarithmic { c } => c,
            Cooling::Constant { temperature } => temperature,
        };
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::arg(format!("cooling constant must be positive, got {c}")));
        }
        if let Some(sd) = self.move_sd {
            if !(sd.is_finite() && sd > 0.0) {
                return Err(Error::arg(format!("move step must be positive, got {sd}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionBest {
    pub dimension: usize,
    pub ssd: f64,
    pub events: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub births_proposed: usize,
    pub births_accepted: usize,
    pub deaths_proposed: usize,
    pub deaths_accepted: usize,
    pub moves_proposed: usize,
    pub moves_accepted: usize,
}

impl AcceptanceStats {
    pub fn move_rate(&self) -> f64 {
        self.moves_accepted as f64 / self.moves_proposed.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealOutcome {
    /// Lowest-SSD state seen in every visited dimension, best first.
    pub by_dimension: Vec<DimensionBest>,
    pub trace: Vec<TracePoint>,
    pub stats: AcceptanceStats,
    pub max_dimension: usize,
}

impl AnnealOutcome {
    pub fn best(&self) -> &DimensionBest {
        &self.by_dimension[0]
    }

    /// The `d_r` best dimensions with their best states.
    pub fn top(&self, d_r: usize) -> &[DimensionBest] {
        &self.by_dimension[..d_r.min(self.by_dimension.len())]
    }
}

/// Chain state with per-event attraction cached. Attractions come from the
/// interpolation table, so single-event proposals cost `O(|t|)`; the
/// running SSD is resynchronized exactly every [`RESYNC_EVERY`] steps.
struct ChainState {
    events: Vec<f64>,
    attraction: Vec<f64>,
    ssd: f64,
}

impl ChainState {
    fn new(table: &AttractionTable, obj: &SsdObjective, events: Vec<f64>) -> Self {
        let attraction = events.iter().map(|&x| table.eval(x)).collect();
        let ssd = obj.ssd_events(&events);
        Self {
            events,
            attraction,
            ssd,
        }
    }

    fn interaction(&self, obj: &SsdObjective, x: f64, skip: Option<usize>) -> f64 {
        let spec = obj.spec();
        self.events
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, &y)| spec.cross_integral(x, y))
            .sum()
    }

    fn insert(&mut self, x: f64, attraction: f64, delta: f64) {
        let pos = self.events.partition_point(|&e| e <= x);
        self.events.insert(pos, x);
        self.attraction.insert(pos, attraction);
        self.ssd += delta;
    }

    fn remove(&mut self, j: usize, delta: f64) {
        self.events.remove(j);
        self.attraction.remove(j);
        self.ssd += delta;
    }

    fn resync(&mut self, obj: &SsdObjective) {
        self.ssd = obj.ssd_events(&self.events);
    }
}

fn reflect(mut y: f64, horizon: f64) -> f64 {
    loop {
        if y < 0.0 {
            y = -y;
        } else if y > horizon {
            y = 2.0 * horizon - y;
        } else {
            return y;
        }
    }
}

const RESYNC_EVERY: usize = 500;

/// Runs the annealing chain from `x0` with dimensions capped at `max_dim`.
pub fn rjmcmc_anneal(
    obj: &SsdObjective,
    schedule: &AnnealSchedule,
    x0: &[f64],
    max_dim: usize,
    seed: u64,
) -> Result<AnnealOutcome> {
    schedule.validate()?;
    let horizon = obj.horizon();
    if x0.len() > max_dim {
        return Err(Error::arg(format!(
            "initial state has {} events, above the dimension cap {max_dim}",
            x0.len()
        )));
    }
    if x0.iter().any(|x| !(x.is_finite() && *x >= 0.0 && *x <= horizon)) {
        return Err(Error::arg("initial state has events outside [0, T]"));
    }
    let mut start = x0.to_vec();
    start.sort_by(f64::total_cmp);

    let spec = *obj.spec();
    let n = obj.sample_size() as f64;
    let move_sd = schedule.move_sd.unwrap_or(horizon / 20.0);
    let mut rng = stream_rng(seed, u64::MAX);
    let table = AttractionTable::new(obj);
    let mut state = ChainState::new(&table, obj, start);
    let mut best: BTreeMap<usize, (f64, Vec<f64>)> = BTreeMap::new();
    best.insert(state.events.len(), (state.ssd, state.events.clone()));
    let mut best_overall = state.ssd;
    let mut stats = AcceptanceStats::default();
    let stride = (schedule.n_max / 1000).max(1);
    let mut trace = vec![TracePoint {
        stage: "anneal".into(),
        iteration: 0,
        dimension: state.events.len(),
        ssd: state.ssd,
        best_ssd: best_overall,
    }];

    for i in 1..=schedule.n_max {
        let temp = schedule.cooling.temperature(i);
        let k = state.events.len();
        if max_dim == 0 {
            break;
        }
        let (pb, pd, _) = schedule.mix.at(k, max_dim);
        let u: f64 = rng.random();
        if u < pb {
            stats.births_proposed += 1;
            let x = rng.random_range(0.0..=horizon);
            let attraction = table.eval(x);
            let delta = n * (spec.cross_integral(x, x) + 2.0 * state.interaction(obj, x, None))
                - 2.0 * attraction;
            let (_, pd_next, _) = schedule.mix.at(k + 1, max_dim);
            let log_ratio = -delta / temp + (pd_next / (k + 1) as f64).ln() - (pb / horizon).ln();
            if rng.random::<f64>().ln() < log_ratio {
                state.insert(x, attraction, delta);
                stats.births_accepted += 1;
            }
        } else if u < pb + pd {
            stats.deaths_proposed += 1;
            let j = rng.random_range(0..k);
            let x = state.events[j];
            let delta = -n * (spec.cross_integral(x, x) + 2.0 * state.interaction(obj, x, Some(j)))
                + 2.0 * state.attraction[j];
            let (pb_prev, _, _) = schedule.mix.at(k - 1, max_dim);
            let log_ratio = -delta / temp + (pb_prev / horizon).ln() - (pd / k as f64).ln();
            if rng.random::<f64>().ln() < log_ratio {
                state.remove(j, delta);
                stats.deaths_accepted += 1;
            }
        } else {
            stats.moves_proposed += 1;
            let j = rng.random_range(0..k);
            let x = state.events[j];
            let step: f64 = StandardNormal.sample(&mut rng);
            let y = reflect(x + move_sd * step, horizon);
            let attraction = table.eval(y);
            let delta = n
                * (spec.cross_integral(y, y) - spec.cross_integral(x, x)
                    + 2.0 * (state.interaction(obj, y, Some(j)) - state.interaction(obj, x, Some(j))))
                - 2.0 * (attraction - state.attraction[j]);
            if rng.random::<f64>().ln() < -delta / temp {
                state.remove(j, 0.0);
                state.insert(y, attraction, delta);
                stats.moves_accepted += 1;
            }
        }

        if i % RESYNC_EVERY == 0 {
            state.resync(obj);
        }
        if !state.ssd.is_finite() {
            return Err(Error::Numerical(format!("SSD became non-finite at iteration {i}")));
        }

        let dim = state.events.len();
        let improves = best.get(&dim).map_or(true, |(b, _)| state.ssd < *b);
        if improves {
            // price the candidate exactly before recording it
            let exact = obj.ssd_events(&state.events);
            state.ssd = exact;
            if best.get(&dim).map_or(true, |(b, _)| exact < *b) {
                best.insert(dim, (exact, state.events.clone()));
                best_overall = best_overall.min(exact);
            }
        }
        if i % stride == 0 || i == schedule.n_max {
            trace.push(TracePoint {
                stage: "anneal".into(),
                iteration: i,
                dimension: dim,
                ssd: state.ssd,
                best_ssd: best_overall,
            });
        }
    }

    let mut by_dimension: Vec<DimensionBest> = best
        .into_iter()
        .map(|(dimension, (ssd, events))| DimensionBest {
            dimension,
            ssd,
            events,
        })
        .collect();
    by_dimension.sort_by(|a, b| a.ssd.total_cmp(&b.ssd).then(a.dimension.cmp(&b.dimension)));
    Ok(AnnealOutcome {
        by_dimension,
        trace,
        stats,
        max_dimension: max_dim,
    })
}

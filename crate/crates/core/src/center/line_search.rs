//! Minibatch gradient descent on SSD within fixed dimensions.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::objective::SsdObjective;
use super::TracePoint;
use crate::error::{Error, Result};
use crate::par;
use crate::process::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    /// Minibatch size `B`; `min(16, N)` when unset.
    pub batch: Option<usize>,
    /// Learning rate `r`. Defaults to 1 with preconditioning and to the
    /// inverse curvature scale without.
    pub rate: Option<f64>,
    /// Scale each minibatch gradient by the inverse Gauss–Newton matrix.
    pub precondition: bool,
    pub epochs: usize,
    /// Convergence threshold on epoch-over-epoch improvement;
    /// `1e-6 · SSD(∅)` when unset.
    pub tolerance: Option<f64>,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            batch: None,
            rate: None,
            precondition: true,
            epochs: 200,
            tolerance: None,
        }
    }
}

/// Halvings of the learning rate after which a dimension counts as settled.
const MAX_HALVINGS: u32 = 30;
/// Learning-rate growth after an epoch that lowered SSD.
const RATE_GROWTH: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionResult {
    pub dimension: usize,
    pub ssd: f64,
    pub events: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
    /// SSD at the end of each accepted epoch, starting with the initial value.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSearchOutcome {
    /// One entry per requested dimension, in request order.
    pub per_dimension: Vec<DimensionResult>,
    pub best: usize,
    pub trace: Vec<TracePoint>,
}

impl LineSearchOutcome {
    pub fn best(&self) -> &DimensionResult {
        &self.per_dimension[self.best]
    }
}

struct Resolved {
    precondition: bool,
    batch: usize,
    rate: f64,
    epochs: usize,
    tolerance: f64,
}

fn resolve(obj: &SsdObjective, cfg: &LineSearchConfig) -> Result<Resolved> {
    let n = obj.sample_size();
    let batch = cfg.batch.unwrap_or(16).min(n);
    if batch == 0 {
        return Err(Error::arg("batch size must be positive"));
    }
    let rate = cfg.rate.unwrap_or_else(|| {
        if cfg.precondition {
            1.0
        } else {
            1.0 / obj.curvature_scale()
        }
    });
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::arg(format!("learning rate must be positive, got {rate}")));
    }
    let tolerance = cfg.tolerance.unwrap_or(1e-6 * obj.empty_ssd());
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::arg("tolerance must be non-negative"));
    }
    Ok(Resolved {
        precondition: cfg.precondition,
        batch,
        rate,
        epochs: cfg.epochs,
        tolerance,
    })
}

fn project(t: &mut [f64], horizon: f64) {
    for x in t.iter_mut() {
        *x = x.clamp(0.0, horizon);
    }
    t.sort_by(f64::total_cmp);
}

/// Relative diagonal damping added before solving with the Gauss–Newton matrix.
const DAMPING: f64 = 1e-8;

fn precondition(obj: &SsdObjective, t: &[f64], grad: Vec<f64>) -> Vec<f64> {
    let mut h = obj.gauss_newton(t);
    let scale = h.diagonal().max().max(f64::MIN_POSITIVE);
    for i in 0..t.len() {
        h[(i, i)] += DAMPING * scale;
    }
    let g = DVector::from_vec(grad);
    match h.cholesky() {
        Some(chol) => chol.solve(&g).iter().copied().collect(),
        None => (g / scale).iter().copied().collect(),
    }
}

fn descend(obj: &SsdObjective, init: Vec<f64>, cfg: &Resolved, seed: u64) -> Result<DimensionResult> {
    let dimension = init.len();
    let horizon = obj.horizon();
    let mut current = init;
    project(&mut current, horizon);
    let mut current_ssd = obj.ssd_events(&current);
    let mut history = vec![current_ssd];
    if dimension == 0 {
        return Ok(DimensionResult {
            dimension,
            ssd: current_ssd,
            events: current,
            epochs: 0,
            converged: true,
            history,
        });
    }
    let mut rng = stream_rng(seed, dimension as u64);
    let mut order: Vec<usize> = (0..obj.sample_size()).collect();
    let mut rate = cfg.rate;
    let mut halvings = 0;
    let mut converged = false;
    let mut epochs = 0;
    while epochs < cfg.epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let mut trial = current.clone();
        for batch in order.chunks(cfg.batch) {
            let mut grad = obj.batch_gradient_events(&trial, batch);
            if cfg.precondition {
                grad = precondition(obj, &trial, grad);
            }
            for (x, g) in trial.iter_mut().zip(&grad) {
                *x -= rate * g;
            }
            project(&mut trial, horizon);
        }
        let trial_ssd = obj.ssd_events(&trial);
        if !trial_ssd.is_finite() {
            return Err(Error::Numerical(format!(
                "SSD became non-finite in dimension {dimension}"
            )));
        }
        if trial_ssd > current_ssd {
            rate *= 0.5;
            halvings += 1;
            if halvings >= MAX_HALVINGS {
                converged = true;
                break;
            }
            continue;
        }
        let improvement = current_ssd - trial_ssd;
        rate *= RATE_GROWTH;
        current = trial;
        current_ssd = trial_ssd;
        history.push(current_ssd);
        if improvement < cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok(DimensionResult {
        dimension,
        ssd: current_ssd,
        events: current,
        epochs,
        converged,
        history,
    })
}

/// Optimizes SSD separately in each requested dimension and reports the best.
///
/// `inits[i]`, when given, seeds dimension `dimensions[i]` and must have
/// that many events; otherwise the pooled-sample quantiles are used.
pub fn line_search(
    obj: &SsdObjective,
    dimensions: &[usize],
    inits: Option<&[Vec<f64>]>,
    cfg: &LineSearchConfig,
    seed: u64,
) -> Result<LineSearchOutcome> {
    if dimensions.is_empty() {
        return Err(Error::arg("line search needs at least one dimension"));
    }
    if let Some(inits) = inits {
        if inits.len() != dimensions.len() {
            return Err(Error::arg("one initial state per dimension is required"));
        }
        if let Some((d, i)) = dimensions.iter().zip(inits).find(|(d, i)| **d != i.len()) {
            return Err(Error::arg(format!(
                "initial state has {} events for dimension {d}",
                i.len()
            )));
        }
    }
    let resolved = resolve(obj, cfg)?;
    let results = par::map_indexed(dimensions.len(), |i| {
        let init = match inits {
            Some(inits) => inits[i].clone(),
            None => obj.quantile_init(dimensions[i]),
        };
        descend(obj, init, &resolved, seed)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let best = (0..results.len())
        .min_by(|&a, &b| {
            results[a]
                .ssd
                .total_cmp(&results[b].ssd)
                .then(results[a].dimension.cmp(&results[b].dimension))
        })
        .expect("non-empty");

    let mut trace = Vec::new();
    let mut best_so_far = f64::INFINITY;
    let mut iteration = 0;
    for r in &results {
        for &v in &r.history {
            best_so_far = best_so_far.min(v);
            trace.push(TracePoint {
                stage: "line_search".into(),
                iteration,
                dimension: r.dimension,
                ssd: v,
                best_ssd: best_so_far,
            });
            iteration += 1;
        }
    }
    Ok(LineSearchOutcome {
        per_dimension: results,
        best,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::process::PointProcess;

    fn spec() -> KernelSpec {
        KernelSpec::gaussian(1.0, 10.0, 100.0).unwrap()
    }

    fn pp(events: &[f64]) -> PointProcess {
        PointProcess::new(events.to_vec(), 100.0).unwrap()
    }

    #[test]
    fn converges_to_the_single_member() {
        let s = pp(&[15.0, 45.0, 85.0]);
        let obj = SsdObjective::new(&[s.clone()], &spec()).unwrap();
        let cfg = LineSearchConfig::default();
        let out = line_search(&obj, &[3], None, &cfg, 0).unwrap();
        let tol = 1e-6 * obj.empty_ssd();
        assert!(out.best().ssd < tol, "{:?}", out.best());
        for (a, b) in out.best().events.iter().zip(s.events()) {
            assert!((a - b).abs() < 0.5);
        }
    }

    #[test]
    fn empty_dimension_list_is_rejected() {
        let obj = SsdObjective::new(&[pp(&[1.0])], &spec()).unwrap();
        assert!(line_search(&obj, &[], None, &LineSearchConfig::default(), 0).is_err());
    }

    #[test]
    fn zero_dimension_is_evaluated_directly() {
        let obj = SsdObjective::new(&[pp(&[1.0]), pp(&[])], &spec()).unwrap();
        let out = line_search(&obj, &[0], None, &LineSearchConfig::default(), 0).unwrap();
        assert_eq!(out.best().ssd, obj.empty_ssd());
        assert!(out.best().events.is_empty());
    }

    #[test]
    fn history_never_increases() {
        let sample = vec![pp(&[10.0, 60.0]), pp(&[33.0]), pp(&[5.0, 50.0, 95.0]), pp(&[70.0])];
        let obj = SsdObjective::new(&sample, &spec()).unwrap();
        let out = line_search(&obj, &[1, 2, 3], None, &LineSearchConfig::default(), 4).unwrap();
        for r in &out.per_dimension {
            assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        }
        assert!(out.trace.windows(2).all(|w| w[1].best_ssd <= w[0].best_ssd));
    }

    #[test]
    fn mismatched_init_is_rejected() {
        let obj = SsdObjective::new(&[pp(&[1.0])], &spec()).unwrap();
        let inits = vec![vec![1.0, 2.0]];
        assert!(line_search(&obj, &[1], Some(&inits), &LineSearchConfig::default(), 0).is_err());
    }
}

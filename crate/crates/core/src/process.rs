//! Point-process observations on `[0, T]` and Poisson simulators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{normal_cdf_diff, normal_pdf};
use crate::par;

/// A sorted event-time vector on `[0, T]`. An empty vector is the empty
/// process; events at exactly `0` or `T` are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointProcess {
    events: Vec<f64>,
    horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl PointProcess {
    /// Validates sortedness and range.
    pub fn new(events: Vec<f64>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if let Some(i) = events.windows(2).position(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidProcess(format!(
                "events not sorted at position {}",
                i + 1
            )));
        }
        check_range(&events, horizon)?;
        Ok(Self {
            events,
            horizon,
            id: None,
            label: None,
        })
    }

    /// Sorts the events first; still rejects out-of-range or non-finite values.
    pub fn from_unsorted(mut events: Vec<f64>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        check_range(&events, horizon)?;
        events.sort_by(f64::total_cmp);
        Self::new(events, horizon)
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    /// Events of `source` that fall in `[start, end)` (or `[start, end]` when
    /// `end` is the source horizon), shifted so the window starts at 0.
    pub fn window(source: &PointProcess, start: f64, end: f64) -> Result<Self> {
        if !(start >= 0.0 && end > start && end <= source.horizon) {
            return Err(Error::arg(format!(
                "window [{start}, {end}) does not fit in [0, {}]",
                source.horizon
            )));
        }
        let closed = end == source.horizon;
        let length = end - start;
        let events = source
            .events
            .iter()
            .filter(|&&e| e >= start && (e < end || (closed && e == end)))
            .map(|&e| (e - start).clamp(0.0, length))
            .collect();
        let mut p = Self::new(events, length)?;
        p.id = source.id.clone();
        p.label = source.label.clone();
        Ok(p)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn events(&self) -> &[f64] {
        &self.events
    }

    pub fn into_events(self) -> Vec<f64> {
        self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `|s|`
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Id if present, otherwise a positional fallback.
    pub fn display_id(&self, index: usize) -> String {
        self.id.clone().unwrap_or_else(|| format!("p{index:05}"))
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidProcess(format!(
            "horizon must be finite and positive, got {horizon}"
        )))
    }
}

fn check_range(events: &[f64], horizon: f64) -> Result<()> {
    match events
        .iter()
        .position(|e| !(e.is_finite() && *e >= 0.0 && *e <= horizon))
    {
        Some(i) => Err(Error::InvalidProcess(format!(
            "event {} at position {i} lies outside [0, {horizon}]",
            events[i]
        ))),
        None => Ok(()),
    }
}

/// One weighted normal density `w · φ(t; μ, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntensityKind {
    Constant { rate: f64 },
    GaussianMixture { components: Vec<MixtureComponent> },
}

/// Intensity function `λ(t)` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySpec {
    pub kind: IntensityKind,
    pub horizon: f64,
}

impl IntensitySpec {
    pub fn constant(rate: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::arg(format!("rate must be positive, got {rate}")));
        }
        Ok(Self {
            kind: IntensityKind::Constant { rate },
            horizon,
        })
    }

    pub fn mixture(components: Vec<MixtureComponent>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if components.is_empty() {
            return Err(Error::arg("mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(Error::arg(format!("mixture weight must be > 0, got {}", c.weight)));
            }
            if !(c.sd.is_finite() && c.sd > 0.0) {
                return Err(Error::arg(format!("mixture sd must be > 0, got {}", c.sd)));
            }
            if !c.mean.is_finite() {
                return Err(Error::arg("mixture mean must be finite"));
            }
        }
        Ok(Self {
            kind: IntensityKind::GaussianMixture { components },
            horizon,
        })
    }

    /// Parses `"w:mu:sigma[,w:mu:sigma…]"`.
    pub fn parse_mixture(text: &str, horizon: f64) -> Result<Self> {
        let mut components = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let fields: Vec<&str> = part.split(':').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::arg(format!("mixture term `{part}` is not w:mu:sigma")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::arg(format!("bad number `{s}` in mixture term `{part}`")))
            };
            components.push(MixtureComponent {
                weight: num(fields[0])?,
                mean: num(fields[1])?,
                sd: num(fields[2])?,
            });
        }
        Self::mixture(components, horizon)
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        match &self.kind {
            IntensityKind::Constant { rate } => *rate,
            IntensityKind::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * normal_pdf(t, c.mean, c.sd))
                .sum(),
        }
    }

    /// An upper bound on `λ` over `[0, T]`, used as the thinning envelope.
    pub fn upper_bound(&self) -> f64 {
        match &self.kind {
            IntensityKind::Constant { rate } => *rate,
            IntensityKind::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight / (c.sd * (2.0 * std::f64::consts::PI).sqrt()))
                .sum(),
        }
    }

    /// `∫_0^T λ(t) dt`, the expected count.
    pub fn expected_count(&self) -> f64 {
        match &self.kind {
            IntensityKind::Constant { rate } => rate * self.horizon,
            IntensityKind::GaussianMixture { components } => components
                .iter()
                .map(|c| c.weight * normal_cdf_diff(-c.mean / c.sd, (self.horizon - c.mean) / c.sd))
                .sum(),
        }
    }
}

/// Independent RNG stream for realization `index`. Streams depend only on
/// `(seed, index)`, so output does not depend on how work is partitioned.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn uniform_events<R: Rng>(rng: &mut R, rate: f64, horizon: f64) -> Result<Vec<f64>> {
    let mean = rate * horizon;
    let poisson = Poisson::new(mean)
        .map_err(|e| Error::arg(format!("cannot sample Poisson({mean}): {e}")))?;
    let count = poisson.sample(rng) as usize;
    Ok((0..count).map(|_| rng.random_range(0.0..=horizon)).collect())
}

fn finish(mut events: Vec<f64>, horizon: f64, index: usize) -> Result<PointProcess> {
    events.sort_by(f64::total_cmp);
    Ok(PointProcess::new(events, horizon)?.with_id(format!("p{index:05}")))
}

/// `n` homogeneous Poisson realizations with rate `lambda` on `[0, T]`.
pub fn simulate_hpp(lambda: f64, horizon: f64, n: usize, seed: u64) -> Result<Vec<PointProcess>> {
    IntensitySpec::constant(lambda, horizon)?;
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    par::map_indexed(n, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let events = uniform_events(&mut rng, lambda, horizon)?;
        finish(events, horizon, i)
    })
    .into_iter()
    .collect()
}

/// `n` inhomogeneous Poisson realizations by thinning a homogeneous
/// process at rate [`IntensitySpec::upper_bound`].
pub fn simulate_ipp(intensity: &IntensitySpec, n: usize, seed: u64) -> Result<Vec<PointProcess>> {
    let bound = intensity.upper_bound();
    if !(bound.is_finite() && bound > 0.0) {
        return Err(Error::arg(format!("intensity bound must be positive, got {bound}")));
    }
    if n == 0 {
        return Err(Error::arg("n must be at least 1"));
    }
    let horizon = intensity.horizon;
    par::map_indexed(n, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let candidates = uniform_events(&mut rng, bound, horizon)?;
        let events = candidates
            .into_iter()
            .filter(|&u| rng.random::<f64>() * bound < intensity.rate_at(u))
            .collect();
        finish(events, horizon, i)
    })
    .into_iter()
    .collect()
}

/// Simulates from either a constant or mixture intensity.
pub fn simulate(intensity: &IntensitySpec, n: usize, seed: u64) -> Result<Vec<PointProcess>> {
    match intensity.kind {
        IntensityKind::Constant { rate } => simulate_hpp(rate, intensity.horizon, n, seed),
        IntensityKind::GaussianMixture { .. } => simulate_ipp(intensity, n, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_and_out_of_range() {
        assert!(PointProcess::new(vec![2.0, 1.0], 10.0).is_err());
        assert!(PointProcess::new(vec![1.0, 11.0], 10.0).is_err());
        assert!(PointProcess::new(vec![-0.1], 10.0).is_err());
        assert!(PointProcess::new(vec![f64::NAN], 10.0).is_err());
        assert!(PointProcess::new(vec![0.0, 10.0], 10.0).is_ok());
        assert!(PointProcess::new(vec![], 0.0).is_err());
    }

    #[test]
    fn from_unsorted_sorts() {
        let p = PointProcess::from_unsorted(vec![3.0, 1.0, 2.0], 10.0).unwrap();
        assert_eq!(p.events(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn window_shifts_to_origin() {
        let p = PointProcess::new(vec![1.0, 4.9, 5.0, 7.5, 10.0], 10.0).unwrap();
        let first = PointProcess::window(&p, 0.0, 5.0).unwrap();
        let second = PointProcess::window(&p, 5.0, 10.0).unwrap();
        assert_eq!(first.events(), &[1.0, 4.9]);
        assert_eq!(second.events(), &[0.0, 2.5, 5.0]);
        assert_eq!(second.horizon(), 5.0);
    }

    #[test]
    fn same_seed_same_output() {
        let a = simulate_hpp(0.3, 50.0, 2, 11).unwrap();
        let b = simulate_hpp(0.3, 50.0, 2, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate_hpp(0.3, 50.0, 2, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn streams_are_partition_invariant() {
        let big = simulate_hpp(0.1, 100.0, 20, 5).unwrap();
        let small = simulate_hpp(0.1, 100.0, 5, 5).unwrap();
        assert_eq!(&big[..5], &small[..]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(simulate_hpp(0.0, 100.0, 5, 0).is_err());
        assert!(simulate_hpp(1.0, -1.0, 5, 0).is_err());
        assert!(simulate_hpp(1.0, 1.0, 0, 0).is_err());
        assert!(IntensitySpec::parse_mixture("0:25:10", 100.0).is_err());
        assert!(IntensitySpec::parse_mixture("3:25:0", 100.0).is_err());
        assert!(IntensitySpec::parse_mixture("3:25", 100.0).is_err());
    }

    #[test]
    fn parses_mixture() {
        let spec = IntensitySpec::parse_mixture("3:25:10, 2:75:10", 100.0).unwrap();
        match &spec.kind {
            IntensityKind::GaussianMixture { components } => {
                assert_eq!(components.len(), 2);
                assert_eq!(components[1].weight, 2.0);
                assert_eq!(components[1].mean, 75.0);
            }
            _ => panic!("expected mixture"),
        }
        assert!(spec.upper_bound() >= spec.rate_at(25.0));
    }

    #[test]
    fn expected_count_of_dual_peak_intensity() {
        let spec = IntensitySpec::parse_mixture("3:25:10,2:75:10", 100.0).unwrap();
        // 5 · (Φ(7.5) − Φ(−2.5))
        let expected = 5.0 * (crate::numeric::normal_cdf(7.5) - crate::numeric::normal_cdf(-2.5));
        assert!((spec.expected_count() - expected).abs() < 1e-12);
    }
}

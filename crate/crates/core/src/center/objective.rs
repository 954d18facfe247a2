use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::numeric::{linspace, CompensatedSum};
use crate::process::PointProcess;
use crate::smooth::self_energy;

/// `SSD(t) = Σ_i ‖f_t − f_{S_i}‖_2²` over a fixed sample, with the
/// sample-only terms precomputed.
///
/// Expanding the squares gives
/// `SSD(t) = N·Σ_{j,k} I(t_j, t_k) − 2·Σ_j c(t_j) + Σ_i ‖f_{S_i}‖²`, where
/// `c(x) = Σ_i Σ_l I(x, S_{i,l})` only depends on one candidate event. The
/// annealer relies on this to price single-event changes in `O(|pooled|)`.
#[derive(Debug, Clone)]
pub struct SsdObjective {
    spec: KernelSpec,
    members: Vec<Vec<f64>>,
    pooled: Vec<f64>,
    member_energy: Vec<f64>,
    constant: f64,
}

/// Cap on the event count of any SSD minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionBound {
    /// Any `t` with more events than this has `SSD(t) > SSD(∅)`.
    pub proven: usize,
    /// `max(proven, 2·max_i |S_i|)`; a search hint only.
    pub search_hint: usize,
}

impl SsdObjective {
    pub fn new(sample: &[PointProcess], spec: &KernelSpec) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::arg("SSD needs a non-empty sample"));
        }
        if let Some(p) = sample.iter().find(|p| p.horizon() != spec.horizon) {
            return Err(Error::DomainMismatch(format!(
                "process horizon {} differs from kernel horizon {}",
                p.horizon(),
                spec.horizon
            )));
        }
        let members: Vec<Vec<f64>> = sample.iter().map(|p| p.events().to_vec()).collect();
        let pooled = members.iter().flatten().copied().collect();
        let member_energy: Vec<f64> = members.iter().map(|m| self_energy(spec, m)).collect();
        let constant = member_energy.iter().copied().collect::<CompensatedSum>().value();
        Ok(Self {
            spec: *spec,
            members,
            pooled,
            member_energy,
            constant,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn horizon(&self) -> f64 {
        self.spec.horizon
    }

    /// Sample size `N`.
    pub fn sample_size(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    /// All sample events, concatenated in sample order.
    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }

    /// `SSD(∅) = Σ_i ‖f_{S_i}‖²`.
    pub fn empty_ssd(&self) -> f64 {
        self.constant
    }

    pub fn mean_count(&self) -> f64 {
        self.pooled.len() as f64 / self.members.len() as f64
    }

    pub fn max_count(&self) -> usize {
        self.members.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `c(x) = Σ_i Σ_l I(x, S_{i,l})`.
    pub fn attraction(&self, x: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for &p in &self.pooled {
            acc.add(self.spec.cross_integral(x, p));
        }
        acc.value()
    }

    /// `c'(x) = (2c1²c2/T²)·Σ g(x, p)` over pooled events.
    pub fn attraction_slope(&self, x: f64) -> f64 {
        let s = &self.spec;
        let mut acc = CompensatedSum::new();
        for &p in &self.pooled {
            acc.add(s.gradient_term(x, p));
        }
        2.0 * s.c1 * s.c1 * s.c2 / (s.horizon * s.horizon) * acc.value()
    }

    /// `SSD(t)` for a raw event vector. Order of `t` does not matter.
    pub fn ssd_events(&self, t: &[f64]) -> f64 {
        let n = self.members.len() as f64;
        let mut acc = CompensatedSum::new();
        acc.add(self.constant);
        acc.add(n * self_energy(&self.spec, t));
        for &x in t {
            acc.add(-2.0 * self.attraction(x));
        }
        acc.value().max(0.0)
    }

    pub fn ssd(&self, t: &PointProcess) -> Result<f64> {
        self.check(t)?;
        Ok(self.ssd_events(t.events()))
    }

    pub(crate) fn check(&self, t: &PointProcess) -> Result<()> {
        if t.horizon() != self.spec.horizon {
            return Err(Error::DomainMismatch(format!(
                "candidate horizon {} differs from sample horizon {}",
                t.horizon(),
                self.spec.horizon
            )));
        }
        Ok(())
    }

    fn require_gradient(&self) -> Result<()> {
        match self.spec.family {
            KernelFamily::Gaussian => Ok(()),
        }
    }

    /// `∂SSD/∂t` by the closed form
    /// `(4c1²c2/T²)·[N·Σ_j g(t_k, t_j) − Σ_i Σ_l g(t_k, S_{i,l})]`.
    pub fn gradient(&self, t: &PointProcess) -> Result<Vec<f64>> {
        self.check(t)?;
        self.require_gradient()?;
        if t.is_empty() {
            return Err(Error::arg("gradient is undefined for the empty process"));
        }
        Ok(self.gradient_events(t.events()))
    }

    pub fn gradient_events(&self, t: &[f64]) -> Vec<f64> {
        let n = self.members.len() as f64;
        let scale = self.spec.gradient_scale();
        t.iter()
            .map(|&x| {
                let mut acc = CompensatedSum::new();
                for &y in t {
                    acc.add(n * self.spec.gradient_term(x, y));
                }
                for &p in &self.pooled {
                    acc.add(-self.spec.gradient_term(x, p));
                }
                scale * acc.value()
            })
            .collect()
    }

    /// Unbiased minibatch estimate of the gradient: the data term is summed
    /// over `batch` members and scaled by `N / |batch|`.
    pub fn batch_gradient_events(&self, t: &[f64], batch: &[usize]) -> Vec<f64> {
        let n = self.members.len() as f64;
        let weight = n / batch.len() as f64;
        let scale = self.spec.gradient_scale();
        t.iter()
            .map(|&x| {
                let mut model = CompensatedSum::new();
                for &y in t {
                    model.add(self.spec.gradient_term(x, y));
                }
                let mut data = CompensatedSum::new();
                for &i in batch {
                    for &p in &self.members[i] {
                        data.add(self.spec.gradient_term(x, p));
                    }
                }
                scale * (n * model.value() - weight * data.value())
            })
            .collect()
    }

    /// Gauss–Newton approximation `2N·[J(t_j, t_k)]` of the SSD Hessian,
    /// exact at a zero-residual minimum.
    pub fn gauss_newton(&self, t: &[f64]) -> DMatrix<f64> {
        let n = self.members.len() as f64;
        DMatrix::from_fn(t.len(), t.len(), |j, k| {
            2.0 * n * self.spec.derivative_cross_integral(t[j], t[k])
        })
    }

    /// Rough diagonal curvature `2N·∫K'²` of SSD in one event coordinate;
    /// its inverse is the default step size.
    pub fn curvature_scale(&self) -> f64 {
        let s = &self.spec;
        let n = self.members.len() as f64;
        2.0 * n * s.c1 * s.c1 * (std::f64::consts::PI * s.c2 / 2.0).sqrt() / s.horizon
    }

    /// Event-count cap for SSD minimizers.
    ///
    /// With `m1 = min_x ∫_0^T K(u − x) du`, every `t` has
    /// `‖f_t‖_2 ≥ ‖f_t‖_1 / √T ≥ |t|·m1/√T`. By the reverse triangle
    /// inequality `‖f_t − f_{S_i}‖ ≥ ‖f_t‖ − ‖f_{S_i}‖`, which exceeds
    /// `‖f_{S_i}‖` for every `i` as soon as `‖f_t‖ > 2·max_i ‖f_{S_i}‖`.
    /// Then `SSD(t) > SSD(∅)`, so `|t| > 2√T·max_i‖f_{S_i}‖/m1` rules `t` out.
    pub fn dimension_bound(&self) -> DimensionBound {
        let t = self.spec.horizon;
        let m1 = self.min_kernel_mass();
        let max_norm = self
            .member_energy
            .iter()
            .map(|e| e.max(0.0).sqrt())
            .fold(0.0, f64::max);
        let proven = (2.0 * t.sqrt() * max_norm / m1).ceil() as usize;
        DimensionBound {
            proven,
            search_hint: proven.max(2 * self.max_count()),
        }
    }

    /// `min_{x ∈ [0,T]} ∫_0^T K(u − x) du`.
    pub fn min_kernel_mass(&self) -> f64 {
        let t = self.spec.horizon;
        linspace(0.0, t, 257)
            .into_iter()
            .map(|x| self.spec.mass(0.0, t, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Initial event vector of size `k`: the `j/(k+1)` quantiles of the pooled
    /// sample events, or an even grid if the sample has no events.
    pub fn quantile_init(&self, k: usize) -> Vec<f64> {
        let t = self.spec.horizon;
        if self.pooled.is_empty() {
            return (1..=k).map(|j| t * j as f64 / (k + 1) as f64).collect();
        }
        let mut sorted = self.pooled.clone();
        sorted.sort_by(f64::total_cmp);
        let last = (sorted.len() - 1) as f64;
        (1..=k)
            .map(|j| {
                let pos = last * j as f64 / (k + 1) as f64;
                let lo = pos.floor() as usize;
                let hi = pos.ceil() as usize;
                let frac = pos - lo as f64;
                sorted[lo] + frac * (sorted[hi] - sorted[lo])
            })
            .collect()
    }

    pub fn member_energies(&self) -> &[f64] {
        &self.member_energy
    }
}

/// Grid cells per kernel-product width `T/√c2` in [`AttractionTable`].
const CELLS_PER_WIDTH: f64 = 64.0;

/// Piecewise cubic Hermite interpolant of `c(x)` on `[0, T]` from exact
/// values and slopes. The relative error is about `3·(h/w)⁴/384` for
/// cell width `h` and product width `w`, below 1e−9 at the default density.
#[derive(Debug, Clone)]
pub(crate) struct AttractionTable {
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl AttractionTable {
    pub(crate) fn new(obj: &SsdObjective) -> Self {
        let t = obj.horizon();
        let width = t / obj.spec.c2.sqrt();
        let cells = ((CELLS_PER_WIDTH * t / width).ceil() as usize).max(16);
        let step = t / cells as f64;
        let grid = linspace(0.0, t, cells + 1);
        Self {
            step,
            values: grid.iter().map(|&x| obj.attraction(x)).collect(),
            slopes: grid.iter().map(|&x| obj.attraction_slope(x)).collect(),
        }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let cells = self.values.len() - 1;
        let i = ((x / self.step) as usize).min(cells - 1);
        let u = (x / self.step - i as f64).clamp(0.0, 1.0);
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.values[i]
            + h10 * self.step * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * self.step * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> KernelSpec {
        KernelSpec::gaussian(1.0, 10.0, 100.0).unwrap()
    }

    fn pp(events: &[f64]) -> PointProcess {
        PointProcess::new(events.to_vec(), 100.0).unwrap()
    }

    #[test]
    fn ssd_at_sample_member_is_zero() {
        let s = pp(&[12.0, 40.0, 41.0, 95.0]);
        let obj = SsdObjective::new(&[s.clone()], &spec()).unwrap();
        assert!(obj.ssd(&s).unwrap() < 1e-9);
    }

    #[test]
    fn ssd_of_empty_candidate_is_sum_of_energies() {
        let sample = vec![pp(&[10.0]), pp(&[20.0, 30.0]), pp(&[])];
        let obj = SsdObjective::new(&sample, &spec()).unwrap();
        let expected: f64 = sample
            .iter()
            .map(|p| self_energy(&spec(), p.events()))
            .sum();
        assert!((obj.ssd(&pp(&[])).unwrap() - expected).abs() < 1e-9);
        assert_eq!(obj.empty_ssd(), obj.ssd_events(&[]));
    }

    #[test]
    fn g_on_the_diagonal_keeps_only_the_edge_term() {
        let k = spec();
        for &x in &[0.0, 13.0, 50.0, 99.0] {
            let t2 = 100.0f64 * 100.0;
            let edge = t2 / 40.0
                * ((-20.0 / t2 * x * x).exp() - (-20.0 / t2 * (100.0 - x) * (100.0 - x)).exp());
            assert!((k.gradient_term(x, x) - edge).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_at_the_single_member() {
        let s = pp(&[20.0, 45.0, 70.0]);
        let obj = SsdObjective::new(&[s.clone()], &spec()).unwrap();
        let g = obj.gradient(&s).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-10), "{g:?}");
    }

    #[test]
    fn gradient_rejects_empty_candidate() {
        let obj = SsdObjective::new(&[pp(&[1.0])], &spec()).unwrap();
        assert!(obj.gradient(&pp(&[])).is_err());
    }

    #[test]
    fn full_batch_equals_gradient() {
        let sample = vec![pp(&[10.0, 60.0]), pp(&[33.0]), pp(&[5.0, 50.0, 95.0])];
        let obj = SsdObjective::new(&sample, &spec()).unwrap();
        let t = [25.0, 70.0];
        let full = obj.gradient_events(&t);
        let batch = obj.batch_gradient_events(&t, &[0, 1, 2]);
        for (a, b) in full.iter().zip(&batch) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn attraction_slope_matches_finite_differences() {
        let sample = vec![pp(&[10.0, 60.0]), pp(&[33.0]), pp(&[0.0, 50.0, 100.0])];
        let obj = SsdObjective::new(&sample, &spec()).unwrap();
        for &x in &[0.5, 20.0, 49.0, 77.7, 99.5] {
            let h = 1e-4;
            let fd = (obj.attraction(x + h) - obj.attraction(x - h)) / (2.0 * h);
            assert!((obj.attraction_slope(x) - fd).abs() < 1e-7, "{x}");
        }
    }

    #[test]
    fn attraction_table_tracks_exact_values() {
        for c2 in [10.0, 100.0, 1000.0] {
            let k = KernelSpec::gaussian(1.0, c2, 100.0).unwrap();
            let sample = vec![pp(&[3.0, 47.5, 52.0]), pp(&[25.0, 99.0])];
            let obj = SsdObjective::new(&sample, &k).unwrap();
            let table = AttractionTable::new(&obj);
            let scale = obj.attraction(50.0).max(obj.attraction(25.0));
            for x in linspace(0.0, 100.0, 997) {
                let err = (table.eval(x) - obj.attraction(x)).abs();
                assert!(err < 1e-9 * scale, "c2={c2} x={x} err={err}");
            }
        }
    }

    #[test]
    fn bound_is_zero_for_empty_sample() {
        let obj = SsdObjective::new(&[pp(&[])], &spec()).unwrap();
        assert_eq!(obj.dimension_bound().proven, 0);
    }

    #[test]
    fn bound_scales_with_duplication() {
        let base = vec![pp(&[10.0, 50.0]), pp(&[30.0, 60.0, 90.0])];
        let doubled: Vec<PointProcess> = base
            .iter()
            .map(|p| {
                let mut e = p.events().to_vec();
                e.extend_from_slice(p.events());
                PointProcess::from_unsorted(e, 100.0).unwrap()
            })
            .collect();
        let a = SsdObjective::new(&base, &spec()).unwrap();
        let b = SsdObjective::new(&doubled, &spec()).unwrap();
        let (ba, bb) = (a.dimension_bound().proven, b.dimension_bound().proven);
        assert!(bb >= 2 * ba - 1 && bb <= 2 * ba, "{ba} {bb}");
    }

    #[test]
    fn quantile_init_is_sorted_and_inside() {
        let obj = SsdObjective::new(&[pp(&[10.0, 20.0]), pp(&[80.0])], &spec()).unwrap();
        let q = obj.quantile_init(4);
        assert_eq!(q.len(), 4);
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
        assert!(q.iter().all(|&x| (10.0..=80.0).contains(&x)));
    }
}

//! Smoothing kernels `K(·; T)` and numerical checks of kernel properness.
//!
//! A proper kernel is continuous and non-negative, positive at zero, has
//! linearly independent shifts, and is scale invariant:
//! `K(αx; αT) = K(x; T)` for every `α > 0`. The modified Gaussian kernel
//! `c1 · exp(−c2 x² / T²)` satisfies all four.
//!
//! The family is a closed enum so that every kernel keeps closed-form
//! integrals available to the metric and gradient code. New families go
//! here together with their `cross_integral` and `gradient_term`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{linspace, normal_cdf_diff, simpson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Gaussian => f.write_str("gaussian"),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelFamily::Gaussian),
            other => Err(Error::InvalidKernel(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// Kernel family plus its constants. `horizon` is the observation length `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub c1: f64,
    pub c2: f64,
    pub horizon: f64,
}

impl KernelSpec {
    pub fn gaussian(c1: f64, c2: f64, horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, c1, c2, horizon)
    }

    pub fn new(family: KernelFamily, c1: f64, c2: f64, horizon: f64) -> Result<Self> {
        for (name, v) in [("c1", c1), ("c2", c2), ("T", horizon)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidKernel(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(Self {
            family,
            c1,
            c2,
            horizon,
        })
    }

    /// Builds a spec without validation. Only useful for exercising the
    /// properness checks on kernels that are known to be broken.
    pub fn new_unchecked(family: KernelFamily, c1: f64, c2: f64, horizon: f64) -> Self {
        Self {
            family,
            c1,
            c2,
            horizon,
        }
    }

    /// Same constants on a horizon scaled by `alpha`.
    pub fn rescaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.family, self.c1, self.c2, self.horizon * alpha)
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.family, self.c1, self.c2, horizon)
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let z = x / self.horizon;
                self.c1 * (-self.c2 * z * z).exp()
            }
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                -2.0 * self.c2 * x / (self.horizon * self.horizon) * self.evaluate(x)
            }
        }
    }

    /// `sup |K'|`, attained at `x = T / sqrt(2 c2)`.
    pub fn lipschitz_constant(&self) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                self.c1 * (2.0 * self.c2).sqrt() * (-0.5f64).exp() / self.horizon
            }
        }
    }

    /// `∫_a^b K(u − center) du`.
    pub fn mass(&self, a: f64, b: f64, center: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let scale = (2.0 * self.c2).sqrt() / self.horizon;
                self.c1
                    * self.horizon
                    * (PI / self.c2).sqrt()
                    * normal_cdf_diff(scale * (a - center), scale * (b - center))
            }
        }
    }

    /// `I(u, v) = ∫_0^T K(t − u) K(t − v) dt`.
    #[inline]
    pub fn cross_integral(&self, u: f64, v: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let t = self.horizon;
                let c2 = self.c2;
                let diff = u - v;
                let mid = 0.5 * (u + v);
                let root = 2.0 * c2.sqrt() / t;
                self.c1
                    * self.c1
                    * (-c2 * diff * diff / (2.0 * t * t)).exp()
                    * t
                    * (PI / (2.0 * c2)).sqrt()
                    * normal_cdf_diff(-root * mid, root * (t - mid))
            }
        }
    }

    /// The pairwise term `g(x, y) = ∫_0^T (u − x) e^{−c2((u−x)² + (u−y)²)/T²} du`
    /// of the SSD gradient, in the closed form built from Gaussian CDFs.
    #[inline]
    pub fn gradient_term(&self, x: f64, y: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let t = self.horizon;
                let t2 = t * t;
                let c2 = self.c2;
                let diff = x - y;
                let mid = 0.5 * (x + y);
                let envelope = (-c2 / (2.0 * t2) * diff * diff).exp();
                let edge = t2 / (4.0 * c2)
                    * ((-2.0 * c2 / t2 * mid * mid).exp()
                        - (-2.0 * c2 / t2 * (t - mid) * (t - mid)).exp());
                let body = (PI / (8.0 * c2)).sqrt()
                    * t
                    * diff
                    * normal_cdf_diff(-c2.sqrt() * (x + y) / t, 2.0 * c2.sqrt() / t * (t - mid));
                envelope * (edge - body)
            }
        }
    }

    /// `J(a, b) = ∫_0^T K'(u − a) K'(u − b) du`, the Gauss–Newton block of
    /// the SSD Hessian.
    pub fn derivative_cross_integral(&self, a: f64, b: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let t = self.horizon;
                let t2 = t * t;
                let c2 = self.c2;
                let delta = a - b;
                let mid = 0.5 * (a + b);
                let alpha = 2.0 * c2 / t2;
                let (w0, w1) = (-mid, t - mid);
                let root = (2.0 * alpha).sqrt();
                let a0 = (PI / alpha).sqrt() * normal_cdf_diff(root * w0, root * w1);
                let a2 = (w0 * (-alpha * w0 * w0).exp() - w1 * (-alpha * w1 * w1).exp()
                    + a0)
                    / (2.0 * alpha);
                4.0 * c2 * c2 / (t2 * t2)
                    * self.c1
                    * self.c1
                    * (-c2 * delta * delta / (2.0 * t2)).exp()
                    * (a2 - 0.25 * delta * delta * a0)
            }
        }
    }

    /// Prefactor `4 c1² c2 / T²` multiplying the `g` sums in the gradient.
    pub fn gradient_scale(&self) -> f64 {
        4.0 * self.c1 * self.c1 * self.c2 / (self.horizon * self.horizon)
    }

    pub fn check_properness(
        &self,
        n_shift_points: usize,
        grid_size: usize,
        seed: u64,
    ) -> Result<PropernessReport> {
        check_properness(self, n_shift_points, grid_size, seed)
    }
}

/// Singular values below this floor count as a singular Gram matrix.
pub const GRAM_SINGULAR_FLOOR: f64 = 1e-10;
/// Relative tolerance for the scale-invariance check.
pub const SCALE_INVARIANCE_RTOL: f64 = 1e-12;
/// Multiplier on `sup |K'| · step` allowed between adjacent grid values.
pub const CONTINUITY_SAFETY: f64 = 10.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub passed: bool,
    pub evidence: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropernessReport {
    pub spec: KernelSpec,
    pub conditions: Vec<ConditionResult>,
    pub shifts: Vec<f64>,
    pub gram_min_singular_value: f64,
}

impl PropernessReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn condition(&self, index: usize) -> &ConditionResult {
        &self.conditions[index - 1]
    }
}

/// Numerically checks the four properness conditions. Failures are
/// reported in the returned report, never raised.
///
/// Linear independence of shifts is infinite dimensional; it is checked
/// through a surrogate: the quadrature Gram matrix of `n_shift_points`
/// jittered distinct shifts, row normalized, must have its smallest
/// singular value above [`GRAM_SINGULAR_FLOOR`].
pub fn check_properness(
    spec: &KernelSpec,
    n_shift_points: usize,
    grid_size: usize,
    seed: u64,
) -> Result<PropernessReport> {
    if n_shift_points < 2 {
        return Err(Error::arg("need at least 2 shift points"));
    }
    if grid_size < 16 {
        return Err(Error::arg("grid size must be at least 16"));
    }
    let t = spec.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // 1. continuity and non-negativity over [-2T, 2T]
    let grid = linspace(-2.0 * t, 2.0 * t, grid_size + 1);
    let values: Vec<f64> = grid.iter().map(|&x| spec.evaluate(x)).collect();
    let min_value = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let finite = values.iter().all(|v| v.is_finite());
    let max_jump = values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let step = 4.0 * t / grid_size as f64;
    let jump_bound = CONTINUITY_SAFETY * spec.lipschitz_constant() * step;
    let cond1 = ConditionResult {
        name: "continuous and non-negative".into(),
        passed: finite && min_value >= 0.0 && max_jump <= jump_bound,
        evidence: format!("min={min_value:e} max_jump={max_jump:e} bound={jump_bound:e}"),
    };

    // 2. positive at zero
    let at_zero = spec.evaluate(0.0);
    let cond2 = ConditionResult {
        name: "positive at zero".into(),
        passed: at_zero > 0.0,
        evidence: format!("K(0)={at_zero:e}"),
    };

    // 3. linear independence surrogate
    let shifts: Vec<f64> = (0..n_shift_points)
        .map(|i| {
            let width = t / n_shift_points as f64;
            width * (i as f64 + rng.random_range(0.1..0.9))
        })
        .collect();
    let intervals = grid_size + grid_size % 2;
    let gram = gram_matrix_quadrature(spec, &shifts, intervals);
    let sigma_min = min_singular_value_row_normalized(&gram);
    let cond3 = ConditionResult {
        name: "linearly independent shifts".into(),
        passed: sigma_min.is_finite() && sigma_min > GRAM_SINGULAR_FLOOR,
        evidence: format!(
            "smallest singular value {sigma_min:e} (floor {GRAM_SINGULAR_FLOOR:e}) over {n_shift_points} shifts"
        ),
    };

    // 4. scale invariance
    let mut worst = 0.0f64;
    let mut alphas = vec![0.5, 2.0, 10.0];
    alphas.push(rng.random_range(0.05..20.0));
    for &alpha in &alphas {
        let scaled = KernelSpec::new_unchecked(spec.family, spec.c1, spec.c2, t * alpha);
        for _ in 0..100 {
            let x = rng.random_range(-t..t);
            let base = spec.evaluate(x);
            let other = scaled.evaluate(alpha * x);
            let denom = base.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((other - base).abs() / denom);
        }
    }
    let cond4 = ConditionResult {
        name: "scale invariant".into(),
        passed: worst <= SCALE_INVARIANCE_RTOL,
        evidence: format!("max relative deviation {worst:e} over alphas {alphas:?}"),
    };

    Ok(PropernessReport {
        spec: *spec,
        conditions: vec![cond1, cond2, cond3, cond4],
        shifts,
        gram_min_singular_value: sigma_min,
    })
}

/// Gram matrix `G[i][j] = ∫_0^T K(u − s_i) K(u − s_j) du` by Simpson quadrature.
pub fn gram_matrix_quadrature(spec: &KernelSpec, shifts: &[f64], intervals: usize) -> DMatrix<f64> {
    let n = shifts.len();
    DMatrix::from_fn(n, n, |i, j| {
        simpson(
            |u| spec.evaluate(u - shifts[i]) * spec.evaluate(u - shifts[j]),
            0.0,
            spec.horizon,
            intervals,
        )
    })
}

pub fn min_singular_value_row_normalized(matrix: &DMatrix<f64>) -> f64 {
    let mut m = matrix.clone();
    for mut row in m.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    m.singular_values().min()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> KernelSpec {
        KernelSpec::gaussian(1.0, 10.0, 100.0).unwrap()
    }

    #[test]
    fn evaluates_closed_form() {
        let k = reference();
        assert_eq!(k.evaluate(0.0), 1.0);
        assert!((k.evaluate(100.0) - (-10.0f64).exp()).abs() < 1e-18);
        assert!((k.evaluate(100.0) - 4.5400e-5).abs() < 1e-8);
    }

    #[test]
    fn scale_invariance_example() {
        let k = reference();
        let wide = KernelSpec::gaussian(1.0, 10.0, 200.0).unwrap();
        assert_eq!(k.evaluate(7.0), wide.evaluate(14.0));
    }

    #[test]
    fn rejects_non_positive_constants() {
        assert!(KernelSpec::gaussian(0.0, 10.0, 100.0).is_err());
        assert!(KernelSpec::gaussian(1.0, -1.0, 100.0).is_err());
        assert!(KernelSpec::gaussian(1.0, 10.0, 0.0).is_err());
        assert!(KernelSpec::gaussian(1.0, f64::NAN, 100.0).is_err());
    }

    #[test]
    fn family_parses() {
        assert_eq!("Gaussian".parse::<KernelFamily>().unwrap(), KernelFamily::Gaussian);
        assert!("epanechnikov".parse::<KernelFamily>().is_err());
    }

    #[test]
    fn reference_kernel_is_proper() {
        let report = reference().check_properness(5, 512, 1).unwrap();
        assert!(report.all_passed(), "{report:#?}");
    }

    #[test]
    fn zero_amplitude_fails_positivity() {
        let broken = KernelSpec::new_unchecked(KernelFamily::Gaussian, 0.0, 10.0, 100.0);
        let report = broken.check_properness(5, 512, 1).unwrap();
        assert!(!report.condition(2).passed);
    }

    #[test]
    fn properness_rejects_bad_arguments() {
        assert!(reference().check_properness(1, 512, 0).is_err());
        assert!(reference().check_properness(5, 8, 0).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let k = reference();
        for &x in &[-40.0, -3.0, 0.0, 12.5, 77.0] {
            let h = 1e-5;
            let fd = (k.evaluate(x + h) - k.evaluate(x - h)) / (2.0 * h);
            assert!((fd - k.derivative(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn mass_matches_quadrature() {
        let k = reference();
        for &c in &[0.0, 13.0, 50.0, 100.0] {
            let q = simpson(|u| k.evaluate(u - c), 0.0, 100.0, 4096);
            assert!((k.mass(0.0, 100.0, c) - q).abs() / q < 1e-10);
        }
    }

    #[test]
    fn derivative_cross_integral_matches_quadrature() {
        let k = reference();
        for &(a, b) in &[(50.0, 50.0), (10.0, 35.0), (0.0, 100.0), (99.0, 97.5), (3.0, 3.0)] {
            let q = simpson(|u| k.derivative(u - a) * k.derivative(u - b), 0.0, 100.0, 8192);
            let c = k.derivative_cross_integral(a, b);
            assert!((c - q).abs() <= 1e-10 * q.abs().max(1e-6), "{a} {b}: {c} vs {q}");
        }
    }

    #[test]
    fn gram_of_even_shifts_is_well_conditioned() {
        let k = reference();
        let shifts = [20.0, 40.0, 60.0, 80.0];
        let quad = gram_matrix_quadrature(&k, &shifts, 8192);
        let closed = DMatrix::from_fn(4, 4, |i, j| k.cross_integral(shifts[i], shifts[j]));
        let s_quad = min_singular_value_row_normalized(&quad);
        let s_closed = min_singular_value_row_normalized(&closed);
        // Frozen from the quadrature/SVD oracle.
        assert!((s_quad - 0.005_861_087_602_6).abs() < 1e-10, "{s_quad}");
        assert!((s_quad - s_closed).abs() < 1e-9);
    }
}

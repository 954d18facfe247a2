//! Small numerical helpers shared across modules: compensated summation,
//! the standard normal CDF and composite Simpson quadrature.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Neumaier compensated accumulator. Summation order is fixed by the caller,
/// so results are reproducible bit-for-bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `Φ(b) − Φ(a)` without cancellation when both arguments sit in the same tail.
pub fn normal_cdf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        0.5 * (libm::erfc(a * FRAC_1_SQRT_2) - libm::erfc(b * FRAC_1_SQRT_2))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b * FRAC_1_SQRT_2) - libm::erfc(-a * FRAC_1_SQRT_2))
    } else {
        0.5 * (libm::erf(b * FRAC_1_SQRT_2) - libm::erf(a * FRAC_1_SQRT_2))
    }
}

pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// Composite Simpson rule over `intervals` equal sub-intervals of `[a, b]`.
/// `intervals` must be even and positive.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(
        intervals > 0 && intervals % 2 == 0,
        "Simpson rule needs an even, positive interval count"
    );
    let step = (b - a) / intervals as f64;
    let mut acc = CompensatedSum::new();
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add(w * f(a + step * i as f64));
    }
    acc.value() * step / 3.0
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Uniform grid of `points` values spanning `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (points - 1) as f64;
            (0..points)
                .map(|i| if i + 1 == points { b } else { a + step * i as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut values = vec![1e16, 1.0, -1e16];
        values.extend(std::iter::repeat(1.0).take(10));
        assert_eq!(compensated_sum(values), 11.0);
    }

    #[test]
    fn cdf_diff_matches_naive_in_the_body() {
        for &(a, b) in &[(-1.0, 1.0), (-0.3, 2.2), (0.5, 0.7), (-3.0, -0.1)] {
            let naive = normal_cdf(b) - normal_cdf(a);
            assert!((normal_cdf_diff(a, b) - naive).abs() < 1e-15);
        }
    }

    #[test]
    fn cdf_diff_keeps_tail_precision() {
        // Φ(9) − Φ(8) is ~6.2e−16; the naive difference rounds to 0 or one ulp of 1.
        let d = normal_cdf_diff(8.0, 9.0);
        assert!(d > 6.0e-16 && d < 6.3e-16, "{d}");
        assert_eq!(normal_cdf_diff(-9.0, -8.0), d);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 2);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn linspace_hits_both_ends() {
        let g = linspace(0.0, 100.0, 5);
        assert_eq!(g, vec![0.0, 25.0, 50.0, 75.0, 100.0]);
    }
}

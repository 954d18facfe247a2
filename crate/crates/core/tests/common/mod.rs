#![allow(dead_code)]

use ppdepth::process::stream_rng;
use ppdepth::{KernelSpec, PointProcess};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const T: f64 = 100.0;

pub fn spec() -> KernelSpec {
    KernelSpec::gaussian(1.0, 10.0, T).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0)
}

pub fn random_process(rng: &mut ChaCha8Rng, max_len: usize, horizon: f64) -> PointProcess {
    let n = rng.random_range(0..=max_len);
    let events = (0..n).map(|_| rng.random_range(0.0..=horizon)).collect();
    PointProcess::from_unsorted(events, horizon).unwrap()
}

pub fn pp(events: &[f64]) -> PointProcess {
    PointProcess::from_unsorted(events.to_vec(), T).unwrap()
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn curve(spec: &KernelSpec, events: &[f64], t: f64) -> f64 {
    events.iter().map(|&x| spec.c1 * (-spec.c2 * (t - x).powi(2) / (spec.horizon * spec.horizon)).exp()).sum()
}

pub fn quad_sq_distance(spec: &KernelSpec, a: &[f64], b: &[f64], n: usize) -> f64 {
    simpson(|t| (curve(spec, a, t) - curve(spec, b, t)).powi(2), 0.0, spec.horizon, n)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

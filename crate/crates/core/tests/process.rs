mod common;

use common::*;
use ppdepth::io::{read_processes, write_processes, Dataset, Format};
use ppdepth::process::{simulate, simulate_hpp, IntensitySpec};
use ppdepth::PointProcess;
use proptest::prelude::*;
use rand_distr::{Distribution, Poisson};

const MIXTURE: &str = "3:25:10,2:75:10";

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    let p = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum::<f64>()
        .clamp(0.0, 1.0);
    (d, p)
}

#[test]
fn expected_count_of_the_mixture_matches_frozen_integral() {
    let ipp = IntensitySpec::parse_mixture(MIXTURE, T).unwrap();
    assert!(rel_err(ipp.expected_count(), 4.96895167337096) < 1e-12);
}

#[test]
fn thinning_counts_are_poisson_with_the_integrated_rate() {
    let ipp = IntensitySpec::parse_mixture(MIXTURE, T).unwrap();
    let sample = simulate(&ipp, 2000, 21).unwrap();
    let counts: Vec<f64> = sample.iter().map(|p| p.len() as f64).collect();
    let mut r = rng(22);
    let poisson = Poisson::new(ipp.expected_count()).unwrap();
    let reference: Vec<f64> = (0..2000).map(|_| poisson.sample(&mut r)).collect();
    let (_, p) = ks_two_sample(&counts, &reference);
    assert!(p > 0.01, "p = {p}");
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    assert!((mean - 4.96895167337096).abs() < 4.0 * (4.969f64 / 2000.0).sqrt(), "{mean}");
}

#[test]
fn mixture_events_are_bimodal_with_the_heavier_peak_first() {
    let ipp = IntensitySpec::parse_mixture(MIXTURE, T).unwrap();
    let sample = simulate(&ipp, 2000, 3).unwrap();
    let mut bins = [0usize; 10];
    for p in &sample {
        for &e in p.events() {
            bins[((e / 10.0) as usize).min(9)] += 1;
        }
    }
    let (early, trough, late) = (bins[2], bins[5], bins[7]);
    assert!(early > late && late > trough, "{bins:?}");
    let ratio = early as f64 / late as f64;
    assert!((ratio - 1.5).abs() < 0.15, "{ratio}");
}

#[test]
fn homogeneous_count_variance_equals_the_mean() {
    let sample = simulate_hpp(0.045, T, 10_000, 8).unwrap();
    let counts: Vec<f64> = sample.iter().map(|p| p.len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
    assert!((var - 4.5).abs() < 0.05 * 4.5, "{var}");
    assert!(sample.iter().all(|p| p.events().iter().all(|&e| (0.0..=T).contains(&e))));
}

#[test]
fn simulation_is_reproducible_per_seed() {
    let a = simulate_hpp(0.045, T, 50, 4).unwrap();
    let b = simulate_hpp(0.045, T, 50, 4).unwrap();
    let c = simulate_hpp(0.045, T, 50, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn window_rebases_events_to_the_origin() {
    let p = pp(&[5.0, 12.5, 30.0, 99.0]);
    let w = PointProcess::window(&p, 10.0, 40.0).unwrap();
    assert_eq!(w.horizon(), 30.0);
    assert_eq!(w.events(), &[2.5, 20.0]);
}

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(prop::collection::vec(0.0..=50.0f64, 0..12), 1..100).prop_map(|rows| {
        let processes = rows
            .into_iter()
            .enumerate()
            .map(|(i, ev)| PointProcess::from_unsorted(ev, 50.0).unwrap().with_id(format!("s{i}")))
            .collect();
        Dataset::new(50.0, processes).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jsonl_round_trip_is_exact(data in dataset_strategy()) {
        let mut buf = Vec::new();
        write_processes(&data, &mut buf, Format::Jsonl).unwrap();
        let back = read_processes(buf.as_slice(), Format::Jsonl, None).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn text_round_trip_keeps_events(data in dataset_strategy()) {
        let mut buf = Vec::new();
        write_processes(&data, &mut buf, Format::Text).unwrap();
        let back = read_processes(buf.as_slice(), Format::Text, None).unwrap();
        prop_assert_eq!(back.horizon, data.horizon);
        prop_assert_eq!(back.len(), data.len());
        for (a, b) in back.processes.iter().zip(&data.processes) {
            prop_assert_eq!(a.events(), b.events());
        }
    }
}

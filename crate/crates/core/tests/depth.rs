mod common;

use common::*;
use ppdepth::center::{estimate_center, SsdObjective};
use ppdepth::depth::{h_depth, modified_band_depth, modified_h_depth, rank};
use ppdepth::process::simulate_hpp;
use ppdepth::{CenterConfig, CenterMethod, DepthConfig, DepthMethod, HRule, Metric, PointProcess};

fn hpp_sample(n: usize, seed: u64) -> Vec<PointProcess> {
    simulate_hpp(0.045, T, n, seed).unwrap()
}

fn hpp_center() -> PointProcess {
    let sample = hpp_sample(100, 1);
    let obj = SsdObjective::new(&sample, &spec()).unwrap();
    estimate_center(&obj, CenterMethod::Combined, &CenterConfig::default(), 0)
        .unwrap()
        .events
}

fn modified() -> DepthConfig {
    DepthConfig::with_method(DepthMethod::ModifiedHDepth)
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(x: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let mut r = vec![0.0; x.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn huge_bandwidth_makes_everything_deep() {
    let sample = hpp_sample(50, 2);
    let cfg = DepthConfig {
        h_rule: HRule::Fixed(1e9),
        ..DepthConfig::default()
    };
    let d = h_depth(&pp(&[10.0, 90.0]), &sample, &cfg, &spec()).unwrap();
    assert!(d > 0.999, "{d}");
}

#[test]
fn crowded_process_is_shallower_than_a_typical_one() {
    let sample = hpp_sample(100, 3);
    let cfg = DepthConfig::default();
    let typical = pp(&[15.0, 40.0, 62.0, 85.0]);
    let crowded = pp(&(0..60).map(|i| i as f64 * 100.0 / 60.0).collect::<Vec<_>>());
    let a = h_depth(&typical, &sample, &cfg, &spec()).unwrap();
    let b = h_depth(&crowded, &sample, &cfg, &spec()).unwrap();
    assert!(b < a, "{b} >= {a}");
}

#[test]
fn center_has_depth_one_and_everything_else_less() {
    let c = hpp_center();
    let cfg = modified();
    assert_eq!(modified_h_depth(&c, &c, &cfg, &spec()).unwrap(), 1.0);
    let mut r = rng(1);
    for _ in 0..100 {
        let s = random_process(&mut r, 8, T);
        if s.events() != c.events() {
            assert!(modified_h_depth(&s, &c, &cfg, &spec()).unwrap() < 1.0);
        }
    }
}

#[test]
fn depth_order_is_reverse_distance_order() {
    let c = hpp_center();
    let cfg = modified();
    let m = Metric::l2(spec());
    let mut r = rng(2);
    let procs: Vec<PointProcess> = (0..200).map(|_| random_process(&mut r, 8, T)).collect();
    let mut by_depth: Vec<usize> = (0..procs.len()).collect();
    let mut by_dist = by_depth.clone();
    let depth: Vec<f64> = procs.iter().map(|p| modified_h_depth(p, &c, &cfg, &spec()).unwrap()).collect();
    let dist: Vec<f64> = procs.iter().map(|p| m.distance(p.events(), c.events())).collect();
    by_depth.sort_by(|&a, &b| depth[b].total_cmp(&depth[a]).then(a.cmp(&b)));
    by_dist.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    assert_eq!(by_depth, by_dist);
}

#[test]
fn depth_is_continuous_under_small_perturbations() {
    let c = hpp_center();
    let cfg = modified();
    let s = pp(&[12.0, 33.0, 58.0, 81.0]);
    let base = modified_h_depth(&s, &c, &cfg, &spec()).unwrap();
    let mut last = f64::INFINITY;
    for k in 1..=6 {
        let eps = 10f64.powi(-k);
        let moved = pp(&s.events().iter().map(|x| x + eps).collect::<Vec<_>>());
        let diff = (modified_h_depth(&moved, &c, &cfg, &spec()).unwrap() - base).abs();
        assert!(diff <= last);
        last = diff;
    }
    assert!(last < 1e-6);
}

#[test]
fn depth_is_invariant_under_affine_time_maps() {
    let c = hpp_center();
    let cfg = modified();
    let mut r = rng(4);
    for &(a, b) in &[(2.0, 0.0), (0.5, 13.0), (3.0, 7.5)] {
        let horizon = a * T;
        let s2 = spec().rescaled(a).unwrap();
        let map = |p: &PointProcess| {
            let shifted: Vec<f64> = p.events().iter().map(|x| a * x + b).collect();
            let outer = PointProcess::from_unsorted(shifted, horizon + b + 1.0).unwrap();
            PointProcess::window(&outer, b, b + horizon).unwrap()
        };
        let c2 = map(&c);
        for _ in 0..20 {
            let s = random_process(&mut r, 8, T);
            let d1 = modified_h_depth(&s, &c, &cfg, &spec()).unwrap();
            let d2 = modified_h_depth(&map(&s), &c2, &cfg, &s2).unwrap();
            assert!((d1 - d2).abs() < 1e-10, "a={a} b={b}: {d1} vs {d2}");
        }
    }
}

#[test]
fn far_from_center_depth_vanishes() {
    let c = hpp_center();
    let s = pp(&(0..50).map(|i| 1.0 + i as f64 * 98.0 / 49.0).collect::<Vec<_>>());
    let d = modified_h_depth(&s, &c, &modified(), &spec()).unwrap();
    assert!(d < 1e-3, "{d}");
}

#[test]
fn modified_ranking_does_not_depend_on_bandwidth() {
    let sample = hpp_sample(60, 5);
    let c = hpp_center();
    let ids = |h: f64| {
        let cfg = DepthConfig {
            h_rule: HRule::Fixed(h),
            ..modified()
        };
        let report = rank(&sample, &cfg, &spec(), Some(&c)).unwrap();
        report.order().into_iter().map(|i| report.entries[i].id.clone()).collect::<Vec<_>>()
    };
    assert_eq!(ids(100.0), ids(200.0));
}

#[test]
fn band_depth_broadly_agrees_with_h_depth() {
    let sample = hpp_sample(80, 6);
    let h: Vec<f64> = sample
        .iter()
        .map(|s| h_depth(s, &sample, &DepthConfig::default(), &spec()).unwrap())
        .collect();
    let band: Vec<f64> = sample
        .iter()
        .map(|s| modified_band_depth(s, &sample, &spec(), 1024).unwrap())
        .collect();
    let rho = spearman(&h, &band);
    assert!(rho > 0.5, "{rho}");
}

#[test]
fn empirical_h_depth_converges_at_root_n() {
    let s = pp(&[20.0, 45.0, 70.0]);
    let cfg = DepthConfig::default();
    let sizes = [100usize, 400, 1600, 6400];
    let sds: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = (0..20)
                .map(|r| h_depth(&s, &hpp_sample(n, 1000 + r), &cfg, &spec()).unwrap())
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
        })
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = sds.iter().map(|s| s.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}, sds {sds:?}");
}

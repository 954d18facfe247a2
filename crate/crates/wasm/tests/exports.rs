use ppdepth_wasm::{center_json, rank_simulated_json, smooth_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn ranking_returns_curves_in_rank_order() {
    let v = parse(&rank_simulated_json("hpp", 0.045, 20, 100.0, 10.0, "modified_h_depth", 3, 51).unwrap());
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 20);
    assert_eq!(v["grid"].as_array().unwrap().len(), 51);
    let ranks: Vec<u64> = curves.iter().map(|c| c["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, (1..=20).collect::<Vec<_>>());
    assert_eq!(curves[0]["values"].as_array().unwrap().len(), 51);
    assert!(v["center"]["ssd"].as_f64().unwrap() <= v["center"]["empty_ssd"].as_f64().unwrap());
}

#[test]
fn ranking_accepts_a_mixture_and_rejects_bad_methods() {
    let v = parse(&rank_simulated_json("3:25:10,2:75:10", 0.0, 15, 100.0, 25.0, "h_depth", 1, 11).unwrap());
    assert_eq!(v["method"], "h_depth");
    assert!(rank_simulated_json("hpp", 0.045, 15, 100.0, 10.0, "tukey", 1, 11).is_err());
}

#[test]
fn smoothing_reports_symmetric_distances() {
    let v = parse(&smooth_json("10 20\n\n50\n", 100.0, 10.0, 21).unwrap());
    let d = v["distances"].as_array().unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d[0][0].as_f64().unwrap(), 0.0);
    assert_eq!(d[0][2], d[2][0]);
    assert!(v["curves"][1]["values"].as_array().unwrap().iter().all(|x| x.as_f64() == Some(0.0)));
}

#[test]
fn bad_input_is_reported_not_panicked() {
    assert!(smooth_json("10 abc\n", 100.0, 10.0, 21).unwrap_err().contains("line 1"));
    assert!(smooth_json("150\n", 100.0, 10.0, 21).is_err());
    assert!(smooth_json("", 100.0, 10.0, 21).is_err());
}

#[test]
fn center_of_identical_processes_is_that_process() {
    let v = parse(&center_json("30 70\n30 70\n30 70\n", 100.0, 10.0, "combined", 0, 11).unwrap());
    let ev: Vec<f64> = v["events"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(ev.len(), 2);
    assert!((ev[0] - 30.0).abs() < 1e-3 && (ev[1] - 70.0).abs() < 1e-3, "{ev:?}");
}

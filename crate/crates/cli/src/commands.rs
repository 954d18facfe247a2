use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};

use ppdepth::analysis::{
    cross_validate, parse_segments, run_ranking_experiment, shuffle_labels, ClassifierConfig,
    RankingExperiment,
};
use ppdepth::center::{estimate_center, CenterEstimate};
use ppdepth::depth::{query_report, rank, DepthReport};
use ppdepth::io::{load_processes, write_processes, Dataset, Format};
use ppdepth::numeric::{fmt_num, linspace};
use ppdepth::process::{simulate, simulate_hpp};
use ppdepth::smooth::{curve_value, distance_matrix, DEFAULT_GRID_SIZE};
use ppdepth::{
    CenterConfig, CenterMethod, DepthConfig, DepthMethod, DistanceMethod, HRule, IntensitySpec,
    KernelFamily, KernelSpec, Metric, PointProcess, SsdObjective,
};

use crate::config::Config;
use crate::fail::{Numerical, Usage};
use crate::manifest::RunRecord;
use crate::{
    CenterArgs, CenterCmdArgs, CheckArgs, ClassifyArgs, Cli, Command, DepthArgs, DepthCmdArgs,
    DistanceArgs, ExperimentArgs, InputArgs, KernelArgs, Model, RankArgs, SimulateArgs, SmoothArgs,
};

const DEFAULT_MIXTURE: &str = "3:25:10,2:75:10";
const DEFAULT_LAMBDA: f64 = 0.045;

struct Ctx {
    cfg: Config,
    out_dir: PathBuf,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn parse_flag<T>(value: Option<&str>, what: &str) -> Result<Option<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    value
        .map(|v| v.parse::<T>().map_err(|e| usage(format!("--{what}: {e}"))))
        .transpose()
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let out_dir = match &cli.out_dir {
        Some(d) => d.clone(),
        None => match cfg.raw("out_dir") {
            Some(d) => PathBuf::from(d),
            None => std::env::var_os("PPDEPTH_OUT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        },
    };
    if let Some(threads) = cfg.pick_opt(cli.threads, "threads")? {
        if threads == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| anyhow!("cannot size the worker pool: {e}"))?;
        log::debug!("using {threads} worker threads");
    }
    let ctx = Ctx { cfg, out_dir };
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Smooth(a) => cmd_smooth(&ctx, a),
        Command::Distance(a) => cmd_distance(&ctx, a),
        Command::Depth(a) => cmd_depth(&ctx, a),
        Command::Rank(a) => cmd_rank(&ctx, a),
        Command::Center(a) => cmd_center(&ctx, a),
        Command::Classify(a) => cmd_classify(&ctx, a),
        Command::Experiment(a) => cmd_experiment(&ctx, a),
        Command::Check(a) => cmd_check(&ctx, a),
    }
}

impl Ctx {
    fn default_path(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }

    fn seed(&self, flag: Option<u64>, rec: &mut RunRecord) -> Result<u64> {
        let seed = self.cfg.pick(flag, "seed", 0)?;
        log::info!("seed {seed}");
        rec.seed = Some(seed);
        Ok(seed)
    }

    fn kernel(&self, args: &KernelArgs, horizon: f64, default_c2: f64, rec: &mut RunRecord) -> Result<KernelSpec> {
        let family: KernelFamily = match self.cfg.pick_opt(args.kernel.clone(), "kernel.family")? {
            Some(f) => f.parse().map_err(|e| usage(format!("--kernel: {e}")))?,
            None => KernelFamily::Gaussian,
        };
        let c1 = self.cfg.pick(args.c1, "kernel.c1", 1.0)?;
        let c2 = self.cfg.pick(args.c2, "kernel.c2", default_c2)?;
        let spec = KernelSpec::new(family, c1, c2, horizon)?;
        rec.set("kernel.family", family);
        rec.set("kernel.c1", fmt_num(c1));
        rec.set("kernel.c2", fmt_num(c2));
        rec.set("T", fmt_num(horizon));
        Ok(spec)
    }

    fn load(&self, input: &InputArgs, rec: &mut RunRecord) -> Result<Dataset> {
        self.load_path(&input.data, input.format.as_deref(), input.horizon, rec)
    }

    fn load_path(&self, path: &Path, format: Option<&str>, horizon: Option<f64>, rec: &mut RunRecord) -> Result<Dataset> {
        let format = match parse_flag::<Format>(format, "format")? {
            Some(f) => f,
            None => Format::from_path(path),
        };
        let ds = load_processes(path, format, horizon)
            .with_context(|| format!("cannot load {}", path.display()))?;
        rec.input(path);
        log::info!("loaded {} processes from {} (T = {})", ds.len(), path.display(), ds.horizon);
        Ok(ds)
    }

    fn depth_config(&self, args: &DepthArgs, rec: &mut RunRecord) -> Result<DepthConfig> {
        let method: DepthMethod = match self.cfg.pick_opt(args.method.clone(), "depth.method")? {
            Some(m) => m.parse().map_err(|e| usage(format!("--method: {e}")))?,
            None => DepthMethod::HDepth,
        };
        let h_rule = self.h_rule(args.h, args.h_rule.as_deref())?;
        let cfg = DepthConfig {
            h_rule,
            p: self.cfg.pick(args.p, "depth.p", 2.0)?,
            method,
            leave_one_out: args.leave_one_out,
            band_grid_size: self.cfg.pick(args.band_grid, "depth.band_grid", ppdepth::depth::DEFAULT_BAND_GRID)?,
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        record_depth(&cfg, rec);
        Ok(cfg)
    }

    fn h_rule(&self, h: Option<f64>, rule: Option<&str>) -> Result<HRule> {
        let h = self.cfg.pick_opt(h, "depth.h")?;
        let rule = self.cfg.pick_opt(rule.map(str::to_string), "depth.h_rule")?;
        Ok(match (rule.as_deref(), h) {
            (None, None) => HRule::ProportionalToHorizon(1.0),
            (None | Some("fixed"), Some(h)) => HRule::Fixed(h),
            (Some("proportional"), h) => HRule::ProportionalToHorizon(h.unwrap_or(1.0)),
            (Some("fixed"), None) => return Err(usage("--h-rule fixed needs --h")),
            (Some(other), _) => {
                return Err(usage(format!("--h-rule must be fixed or proportional, got `{other}`")))
            }
        })
    }

    fn center_config(&self, args: &CenterArgs, rec: &mut RunRecord) -> Result<CenterConfig> {
        let mut c = CenterConfig::default();
        c.n_max = self.cfg.pick(args.n_max, "center.n_max", c.n_max)?;
        c.anneal_c = self.cfg.pick_opt(args.anneal_c, "center.anneal_c")?;
        c.move_sd = self.cfg.pick_opt(args.move_sd, "center.move_sd")?;
        c.d_r = self.cfg.pick(args.dr, "center.d_r", c.d_r)?;
        c.line.batch = self.cfg.pick_opt(args.batch, "sgd.batch")?;
        c.line.rate = self.cfg.pick_opt(args.rate, "sgd.rate")?;
        c.line.epochs = self.cfg.pick(args.epochs, "sgd.epochs", c.line.epochs)?;
        c.line.tolerance = self.cfg.pick_opt(args.eps, "sgd.eps")?;
        c.line.precondition = !args.no_precondition;
        if c.d_r == 0 {
            return Err(usage("--dr must be at least 1"));
        }
        rec.set("center.n_max", c.n_max);
        rec.set("center.d_r", c.d_r);
        if let Some(v) = c.anneal_c {
            rec.set("center.anneal_c", fmt_num(v));
        }
        if let Some(v) = c.move_sd {
            rec.set("center.move_sd", fmt_num(v));
        }
        if let Some(v) = c.line.batch {
            rec.set("sgd.batch", v);
        }
        if let Some(v) = c.line.rate {
            rec.set("sgd.rate", fmt_num(v));
        }
        if let Some(v) = c.line.tolerance {
            rec.set("sgd.eps", fmt_num(v));
        }
        rec.set("sgd.epochs", c.line.epochs);
        rec.set("sgd.precondition", c.line.precondition);
        Ok(c)
    }

    fn center_method(&self, flag: Option<&str>, rec: &mut RunRecord) -> Result<CenterMethod> {
        let m: CenterMethod = match self.cfg.pick_opt(flag.map(str::to_string), "center.method")? {
            Some(m) => m.parse().map_err(|e| usage(format!("center method: {e}")))?,
            None => CenterMethod::Combined,
        };
        rec.set("center.method", m);
        Ok(m)
    }

    fn model(&self, model: Option<Model>, lambda: Option<f64>, mixture: Option<&str>, horizon: f64, rec: &mut RunRecord) -> Result<IntensitySpec> {
        let mixture = self.cfg.pick_opt(mixture.map(str::to_string), "simulate.mixture")?;
        let model = match model {
            Some(m) => m,
            None => match self.cfg.raw("simulate.model") {
                Some("hpp") => Model::Hpp,
                Some("ipp") => Model::Ipp,
                Some(other) => return Err(usage(format!("simulate.model must be hpp or ipp, got `{other}`"))),
                None if mixture.is_some() => Model::Ipp,
                None => Model::Hpp,
            },
        };
        let spec = match model {
            Model::Hpp => {
                if mixture.is_some() {
                    return Err(usage("--mixture only applies to the ipp model"));
                }
                let lambda = self.cfg.pick(lambda, "simulate.lambda", DEFAULT_LAMBDA)?;
                rec.set("model", "hpp");
                rec.set("lambda", fmt_num(lambda));
                IntensitySpec::constant(lambda, horizon)?
            }
            Model::Ipp => {
                if lambda.is_some() {
                    return Err(usage("--lambda only applies to the hpp model"));
                }
                let text = mixture.unwrap_or_else(|| DEFAULT_MIXTURE.to_string());
                rec.set("model", "ipp");
                rec.set("mixture", &text);
                IntensitySpec::parse_mixture(&text, horizon)?
            }
        };
        Ok(spec)
    }
}

fn record_depth(cfg: &DepthConfig, rec: &mut RunRecord) {
    rec.set("depth.method", cfg.method);
    match cfg.h_rule {
        HRule::Fixed(h) => rec.set("depth.h", format!("fixed {}", fmt_num(h))),
        HRule::ProportionalToHorizon(c) => rec.set("depth.h", format!("{}*T", fmt_num(c))),
    }
    rec.set("depth.p", fmt_num(cfg.p));
    rec.set("depth.leave_one_out", cfg.leave_one_out);
    if cfg.method == DepthMethod::ModifiedBandDepth {
        rec.set("depth.band_grid", cfg.band_grid_size);
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
fn emit(path: Option<&Path>, text: &str, rec: &mut RunRecord) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?;
            rec.output(p);
            log::info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

/// Writes `<first output>.manifest.json` when the run produced files.
fn finish(rec: &RunRecord, primary: Option<&Path>) -> Result<()> {
    if let (true, Some(p)) = (rec.has_outputs(), primary) {
        let mut name = p.as_os_str().to_owned();
        name.push(".manifest.json");
        rec.write(Path::new(&name))?;
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn cmd_simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let mut rec = RunRecord::new("simulate");
    let horizon = ctx.cfg.pick(a.horizon, "simulate.T", 100.0)?;
    let n = ctx.cfg.pick(a.n, "simulate.n", 100)?;
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let model = ctx.model(a.model, a.lambda, a.mixture.as_deref(), horizon, &mut rec)?;
    let seed = ctx.seed(a.seed, &mut rec)?;
    rec.set("n", n);
    let sample = simulate(&model, n, seed)?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => ctx.default_path("samples.jsonl")?,
    };
    let format = match parse_flag::<Format>(a.format.as_deref(), "format")? {
        Some(f) => f,
        None => Format::from_path(&out),
    };
    let mut buf = Vec::new();
    write_processes(&Dataset::new(horizon, sample)?, &mut buf, format)?;
    emit(Some(&out), &String::from_utf8(buf)?, &mut rec)?;
    finish(&rec, Some(&out))
}

fn cmd_smooth(ctx: &Ctx, a: &SmoothArgs) -> Result<()> {
    let mut rec = RunRecord::new("smooth");
    let ds = ctx.load(&a.input, &mut rec)?;
    let spec = ctx.kernel(&a.kernel, ds.horizon, 10.0, &mut rec)?;
    if a.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    rec.set("points", a.points);
    let grid = linspace(0.0, ds.horizon, a.points);
    let mut out = String::from("t,value,id\n");
    for (i, p) in ds.processes.iter().enumerate() {
        let id = p.display_id(i);
        for &t in &grid {
            let _ = writeln!(out, "{},{},{id}", fmt_num(t), fmt_num(curve_value(&spec, p.events(), t)));
        }
    }
    emit(a.out.as_deref(), &out, &mut rec)?;
    finish(&rec, a.out.as_deref())
}

fn cmd_distance(ctx: &Ctx, a: &DistanceArgs) -> Result<()> {
    let mut rec = RunRecord::new("distance");
    let rows = ctx.load_path(&a.a, None, a.horizon, &mut rec)?;
    let cols = match &a.b {
        Some(b) => ctx.load_path(b, None, a.horizon, &mut rec)?,
        None => rows.clone(),
    };
    if rows.horizon != cols.horizon {
        return Err(ppdepth::Error::DomainMismatch(format!(
            "datasets have horizons {} and {}",
            rows.horizon, cols.horizon
        ))
        .into());
    }
    let spec = ctx.kernel(&a.kernel, rows.horizon, 10.0, &mut rec)?;
    let p = ctx.cfg.pick(a.p, "depth.p", 2.0)?;
    let method = match ctx.cfg.pick_opt(a.method.clone(), "distance.method")? {
        Some(m) => Some(m.parse::<DistanceMethod>().map_err(|e| usage(format!("--method: {e}")))?),
        None => None,
    };
    let grid = ctx.cfg.pick(a.grid, "distance.grid", DEFAULT_GRID_SIZE)?;
    let metric = match method {
        Some(m) => Metric::new(spec, p, m, grid),
        None => Metric::preferred(spec, p),
    }
    .map_err(|e| usage(e.to_string()))?;
    rec.set("p", fmt_num(p));
    rec.set("distance.method", metric.method);
    let m = distance_matrix(&metric, &rows.processes, &cols.processes)?;
    let col_ids: Vec<String> = cols.processes.iter().enumerate().map(|(i, p)| p.display_id(i)).collect();
    let mut out = String::from("id");
    for id in &col_ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, (p, row)) in rows.processes.iter().zip(&m).enumerate() {
        out.push_str(&p.display_id(i));
        for d in row {
            out.push(',');
            out.push_str(&fmt_num(*d));
        }
        out.push('\n');
    }
    emit(a.out.as_deref(), &out, &mut rec)?;
    finish(&rec, a.out.as_deref())
}

fn load_center(ctx: &Ctx, args: &DepthArgs, cfg: &DepthConfig, horizon: f64, rec: &mut RunRecord) -> Result<Option<PointProcess>> {
    match (&args.center_file, cfg.method) {
        (Some(path), _) => {
            // Either the JSON written by `center` or any dataset (first process).
            if let Some(est) = fs::read_to_string(path)
                .ok()
                .and_then(|text| serde_json::from_str::<CenterEstimate>(&text).ok())
            {
                rec.input(path);
                let events = est.events.events().to_vec();
                let c = PointProcess::new(events, est.events.horizon())
                    .with_context(|| format!("invalid center in {}", path.display()))?;
                if c.horizon() != horizon {
                    return Err(anyhow!(
                        "center horizon {} differs from data horizon {horizon}",
                        c.horizon()
                    ));
                }
                return Ok(Some(c.with_id("center")));
            }
            let ds = ctx.load_path(path, None, Some(horizon), rec)?;
            let c = ds
                .processes
                .into_iter()
                .next()
                .ok_or_else(|| anyhow!("center file {} has no process", path.display()))?;
            Ok(Some(c))
        }
        (None, DepthMethod::ModifiedHDepth) => Err(usage(
            "modified_h_depth needs --center-file (estimate one with `ppdepth center`)",
        )),
        (None, _) => Ok(None),
    }
}

fn cmd_depth(ctx: &Ctx, a: &DepthCmdArgs) -> Result<()> {
    let mut rec = RunRecord::new("depth");
    let sample = ctx.load(&a.input, &mut rec)?;
    let spec = ctx.kernel(&a.kernel, sample.horizon, 10.0, &mut rec)?;
    let cfg = ctx.depth_config(&a.depth, &mut rec)?;
    let center = load_center(ctx, &a.depth, &cfg, sample.horizon, &mut rec)?;
    let report = match &a.query {
        Some(q) => {
            let queries = ctx.load_path(q, None, Some(sample.horizon), &mut rec)?;
            query_report(&queries.processes, &sample.processes, &cfg, &spec, center.as_ref())?
        }
        None => rank(&sample.processes, &cfg, &spec, center.as_ref())?,
    };
    emit(a.out.as_deref(), &report.to_csv(), &mut rec)?;
    finish(&rec, a.out.as_deref())
}

fn selected_csv(report: &DepthReport, top: Option<usize>, bottom: Option<usize>) -> String {
    if top.is_none() && bottom.is_none() {
        return report.to_csv();
    }
    let mut out = String::from("id,depth,log_depth,rank,count\n");
    let mut rows = Vec::new();
    if let Some(k) = top {
        rows.extend(report.top_k(k));
    }
    if let Some(k) = bottom {
        for e in report.bottom_k(k) {
            if !rows.iter().any(|r| r.id == e.id) {
                rows.push(e);
            }
        }
    }
    for e in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.id,
            fmt_num(e.depth),
            fmt_num(e.log_depth),
            e.rank,
            e.count
        );
    }
    out
}

fn cmd_rank(ctx: &Ctx, a: &RankArgs) -> Result<()> {
    let mut rec = RunRecord::new("rank");
    let sample = ctx.load(&a.input, &mut rec)?;
    let spec = ctx.kernel(&a.kernel, sample.horizon, 10.0, &mut rec)?;
    let cfg = ctx.depth_config(&a.depth, &mut rec)?;
    let center = load_center(ctx, &a.depth, &cfg, sample.horizon, &mut rec)?;
    let report = rank(&sample.processes, &cfg, &spec, center.as_ref())?;
    emit(a.out.as_deref(), &selected_csv(&report, a.top_k, a.bottom_k), &mut rec)?;
    finish(&rec, a.out.as_deref())
}

fn fmt_events(events: &[f64]) -> String {
    let parts: Vec<String> = events.iter().map(|e| format!("{e:.2}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_center(ctx: &Ctx, a: &CenterCmdArgs) -> Result<()> {
    let mut rec = RunRecord::new("center");
    let ds = ctx.load(&a.input, &mut rec)?;
    let spec = ctx.kernel(&a.kernel, ds.horizon, 10.0, &mut rec)?;
    let method = ctx.center_method(a.method.as_deref(), &mut rec)?;
    let cfg = ctx.center_config(&a.center, &mut rec)?;
    let seed = ctx.seed(a.seed, &mut rec)?;
    let obj = SsdObjective::new(&ds.processes, &spec)?;
    let bound = obj.dimension_bound();
    log::info!(
        "dimension bound {} (search hint {}), SSD(empty) = {}",
        bound.proven,
        bound.search_hint,
        fmt_num(obj.empty_ssd())
    );

    let estimate = if a.report {
        let mut table = format!("{:<12} {:>5} {:>16} {:>10}  center\n", "method", "dim", "SSD", "time[s]");
        for events in &a.compare {
            let values: Vec<f64> = events
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| usage(format!("--compare: bad number `{s}`"))))
                .collect::<Result<_>>()?;
            let p = PointProcess::from_unsorted(values, ds.horizon)?;
            let _ = writeln!(
                table,
                "{:<12} {:>5} {:>16.4} {:>10}  {}",
                "given",
                p.len(),
                obj.ssd(&p)?,
                "-",
                fmt_events(p.events())
            );
        }
        let mut chosen = None;
        for m in [CenterMethod::Rjmcmc, CenterMethod::LineSearch, CenterMethod::Combined] {
            let start = Instant::now();
            let est = estimate_center(&obj, m, &cfg, seed)?;
            let secs = start.elapsed().as_secs_f64();
            let _ = writeln!(
                table,
                "{:<12} {:>5} {:>16.4} {:>10.3}  {}",
                m.to_string(),
                est.dimension(),
                est.ssd,
                secs,
                fmt_events(est.events.events())
            );
            if m == method {
                chosen = Some(est);
            }
        }
        print!("{table}");
        chosen.expect("all methods run")
    } else {
        let start = Instant::now();
        let est = estimate_center(&obj, method, &cfg, seed)?;
        log::info!(
            "{method}: {} events, SSD {} in {:.3}s",
            est.dimension(),
            fmt_num(est.ssd),
            start.elapsed().as_secs_f64()
        );
        est
    };
    check_estimate(&estimate)?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => ctx.default_path("center.json")?,
    };
    emit(Some(&out), &to_json(&estimate)?, &mut rec)?;
    finish(&rec, Some(&out))?;
    if a.strict && !estimate.converged {
        return Err(Numerical("line search did not converge within the epoch limit".into()).into());
    }
    Ok(())
}

fn check_estimate(est: &CenterEstimate) -> Result<()> {
    if !est.ssd.is_finite() {
        return Err(Numerical(format!("center SSD is {}", est.ssd)).into());
    }
    if !est.converged {
        log::warn!("center estimate did not converge; pass --strict to treat this as a failure");
    }
    Ok(())
}

fn cmd_classify(ctx: &Ctx, a: &ClassifyArgs) -> Result<()> {
    let mut rec = RunRecord::new("classify");
    let ds = ctx.load(&a.input, &mut rec)?;
    let base = ctx.kernel(&a.kernel, ds.horizon, 10.0, &mut rec)?;
    let method: DepthMethod = match ctx.cfg.pick_opt(a.method.clone(), "depth.method")? {
        Some(m) => m.parse().map_err(|e| usage(format!("--method: {e}")))?,
        None => DepthMethod::ModifiedHDepth,
    };
    let mut cfg = ClassifierConfig::new(method, base);
    if let Some(text) = ctx.cfg.pick_opt(a.segment.clone(), "classify.segments")? {
        cfg.segments = parse_segments(&text, &base, ds.horizon).map_err(|e| usage(e.to_string()))?;
        rec.set("segments", &text);
    }
    cfg.depth.h_rule = ctx.h_rule(a.h, a.h_rule.as_deref())?;
    cfg.folds = ctx.cfg.pick(a.folds, "classify.folds", 4)?;
    cfg.center = ctx.center_config(&a.center, &mut rec)?;
    cfg.center_method = ctx.center_method(a.center_method.as_deref(), &mut rec)?;
    cfg.seed = ctx.seed(a.seed, &mut rec)?;
    record_depth(&cfg.depth, &mut rec);
    rec.set("folds", cfg.folds);
    rec.set("shuffle_labels", a.shuffle_labels);
    let data = if a.shuffle_labels {
        shuffle_labels(&ds.processes, cfg.seed)
    } else {
        ds.processes
    };
    let cv = cross_validate(&data, &cfg)?;
    let exposed: usize = cv.segments.iter().flat_map(|s| &s.folds).map(|f| f.exposed_test_ids).sum();
    if exposed > 0 {
        return Err(anyhow!("{exposed} test observations were seen during fitting"));
    }
    print!("{}", cv.table());
    let out = match &a.out {
        Some(p) => p.clone(),
        None => ctx.default_path("classification.json")?,
    };
    emit(Some(&out), &to_json(&cv)?, &mut rec)?;
    finish(&rec, Some(&out))
}

fn cmd_experiment(ctx: &Ctx, a: &ExperimentArgs) -> Result<()> {
    let name = match a.model {
        Model::Hpp => "hpp",
        Model::Ipp => "ipp",
    };
    let mut rec = RunRecord::new(&format!("experiment {name}"));
    let horizon = ctx.cfg.pick(a.horizon, "simulate.T", 100.0)?;
    let n = ctx.cfg.pick(a.n, "simulate.n", 100)?;
    let model = ctx.model(Some(a.model), a.lambda, a.mixture.as_deref(), horizon, &mut rec)?;
    let default_c2 = match a.model {
        Model::Hpp => 10.0,
        Model::Ipp => 25.0,
    };
    let spec = ctx.kernel(&a.kernel, horizon, default_c2, &mut rec)?;
    let seed = ctx.seed(a.seed, &mut rec)?;
    let mut exp = RankingExperiment::new(model, n, spec, seed);
    exp.depth.h_rule = ctx.h_rule(a.h, a.h_rule.as_deref())?;
    exp.center = ctx.center_config(&a.center, &mut rec)?;
    exp.center_method = ctx.center_method(a.center_method.as_deref(), &mut rec)?;
    exp.top_k = a.top_k;
    exp.curve_points = a.curve_points;
    rec.set("n", n);
    rec.set("top_k", a.top_k);
    rec.set("curve_points", a.curve_points);
    record_depth(&exp.depth, &mut rec);

    let start = Instant::now();
    let out = run_ranking_experiment(&exp)?;
    let secs = start.elapsed().as_secs_f64();
    check_estimate(&out.center)?;

    let dir = ctx.default_path("")?;
    let samples = dir.join("samples.jsonl");
    let mut buf = Vec::new();
    write_processes(&Dataset::new(horizon, out.sample.clone())?, &mut buf, Format::Jsonl)?;
    emit(Some(&samples), &String::from_utf8(buf)?, &mut rec)?;
    emit(Some(&dir.join("center.json")), &to_json(&out.center)?, &mut rec)?;
    let mut summary = format!(
        "{name}: n = {n}, seed = {seed}\ncenter ({}): {} events, SSD {:.4}, {:.3}s\n  {}\n",
        exp.center_method,
        out.center.dimension(),
        out.center.ssd,
        secs,
        fmt_events(out.center.events.events())
    );
    for report in &out.rankings {
        let m = report.config.method;
        emit(Some(&dir.join(format!("rank_{m}.csv"))), &report.to_csv(), &mut rec)?;
        emit(Some(&dir.join(format!("extremes_{m}.csv"))), &out.extremes_csv(report, exp.top_k), &mut rec)?;
        emit(
            Some(&dir.join(format!("curves_{m}.csv"))),
            &out.curves_csv(report, &spec, exp.curve_points),
            &mut rec,
        )?;
        let top: Vec<String> = report
            .top_k(exp.top_k)
            .iter()
            .map(|e| format!("{}({})", e.id, e.count))
            .collect();
        let _ = writeln!(summary, "{m}: top {} = {}", exp.top_k, top.join(" "));
    }
    rec.write(&dir.join("manifest.json"))?;
    print!("{summary}");
    Ok(())
}

fn cmd_check(ctx: &Ctx, a: &CheckArgs) -> Result<()> {
    let mut rec = RunRecord::new("check");
    let spec = ctx.kernel(&a.kernel, a.horizon, 10.0, &mut rec)?;
    let seed = ctx.seed(a.seed, &mut rec)?;
    if a.shifts < 2 || a.grid < 16 {
        return Err(usage("--shifts must be >= 2 and --grid >= 16"));
    }
    let report = spec.check_properness(a.shifts, a.grid, seed)?;
    let mut ok = report.all_passed();
    for (i, c) in report.conditions.iter().enumerate() {
        println!(
            "condition {} {:<24} {}  {}",
            i + 1,
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.evidence
        );
    }

    let metric = Metric::preferred(spec, 2.0)?;
    let pool = simulate_hpp(6.0 / a.horizon, a.horizon, 3 * a.triples.max(1), seed)?;
    let (mut neg, mut asym, mut tri, mut ident) = (0, 0, 0, 0);
    let mut worst_slack = f64::INFINITY;
    for t in pool.chunks_exact(3) {
        let (x, y, z) = (t[0].events(), t[1].events(), t[2].events());
        let (dxy, dyx, dyz, dxz) = (
            metric.distance(x, y),
            metric.distance(y, x),
            metric.distance(y, z),
            metric.distance(x, z),
        );
        neg += (dxy < 0.0 || dyz < 0.0 || dxz < 0.0) as usize;
        asym += ((dxy - dyx).abs() > 1e-12 * dxy.max(1.0)) as usize;
        let slack = dxy + dyz - dxz;
        worst_slack = worst_slack.min(slack);
        tri += (slack < -1e-10) as usize;
        ident += (metric.distance(x, x) != 0.0) as usize;
    }
    let axioms = [
        ("non-negativity", neg),
        ("symmetry", asym),
        ("triangle inequality", tri),
        ("identity d(s,s)=0", ident),
    ];
    for (name, failures) in axioms {
        println!(
            "metric    {:<24} {}  {failures} of {} triples violate",
            name,
            if failures == 0 { "PASS" } else { "FAIL" },
            a.triples
        );
        ok &= failures == 0;
    }
    println!("metric    worst triangle slack {}", fmt_num(worst_slack));
    if ok {
        println!("all checks passed");
        Ok(())
    } else {
        Err(anyhow!("one or more checks failed"))
    }
}

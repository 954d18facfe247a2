//! Depth-based classification with stratified k-fold cross-validation, and
//! the end-to-end ranking experiment on simulated Poisson samples.
//!
//! A trial can be cut into time windows (segments), each smoothed with its
//! own kernel. Every segment is classified independently and gets its own
//! report; segments are not fused.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::center::{estimate_center, CenterConfig, CenterEstimate, CenterMethod, SsdObjective};
use crate::depth::{depths_against, rank, DepthConfig, DepthMethod, DepthReport};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::numeric::{fmt_num, linspace};
use crate::par;
use crate::process::{simulate, stream_rng, IntensitySpec, MixtureComponent, PointProcess};
use crate::smooth::curve_value;

/// Reshuffles tried before giving up on a stratified split.
pub const MAX_FOLD_ATTEMPTS: u64 = 10;

/// A time window `[start, end)` with its own kernel. The kernel horizon is
/// the window length; events are shifted to start at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub spec: KernelSpec,
}

impl Segment {
    pub fn whole(spec: KernelSpec) -> Self {
        Self {
            start: 0.0,
            end: spec.horizon,
            spec,
        }
    }

    pub fn name(&self) -> String {
        format!("{}-{}", fmt_num(self.start), fmt_num(self.end))
    }

    pub fn cut(&self, p: &PointProcess) -> Result<PointProcess> {
        PointProcess::window(p, self.start, self.end)
    }
}

/// Parses `start:end[:c1=x][:c2=y],...`. Unset constants come from `base`.
/// The windows must tile `[0, horizon]` in order.
pub fn parse_segments(text: &str, base: &KernelSpec, horizon: f64) -> Result<Vec<Segment>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let fields: Vec<&str> = part.split(':').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::arg(format!("segment `{part}` needs start:end")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::arg(format!("bad number `{s}` in segment `{part}`")))
        };
        let (start, end) = (num(fields[0])?, num(fields[1])?);
        let (mut c1, mut c2) = (base.c1, base.c2);
        for kv in &fields[2..] {
            match kv.split_once('=') {
                Some(("c1", v)) => c1 = num(v)?,
                Some(("c2", v)) => c2 = num(v)?,
                _ => return Err(Error::arg(format!("unknown segment option `{kv}`"))),
            }
        }
        if !(end > start) {
            return Err(Error::arg(format!("segment `{part}` is empty")));
        }
        out.push(Segment {
            start,
            end,
            spec: KernelSpec::new(base.family, c1, c2, end - start)?,
        });
    }
    check_partition(&out, horizon)?;
    Ok(out)
}

fn check_partition(segments: &[Segment], horizon: f64) -> Result<()> {
    if segments.is_empty() {
        return Err(Error::arg("at least one segment is required"));
    }
    let mut at = 0.0;
    for s in segments {
        if s.start != at {
            return Err(Error::arg(format!(
                "segments must tile [0, {horizon}] in order; gap or overlap at {at}"
            )));
        }
        at = s.end;
    }
    if at != horizon {
        return Err(Error::arg(format!("segments end at {at}, not at {horizon}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub depth: DepthConfig,
    pub segments: Vec<Segment>,
    pub folds: usize,
    pub seed: u64,
    /// Center settings for the modified method, before the fold reduction.
    pub center: CenterConfig,
    pub center_method: CenterMethod,
    /// Divides the annealing budget inside cross-validation.
    pub cv_budget_divisor: usize,
}

impl ClassifierConfig {
    pub fn new(method: DepthMethod, spec: KernelSpec) -> Self {
        Self {
            depth: DepthConfig::with_method(method),
            segments: vec![Segment::whole(spec)],
            folds: 4,
            seed: 0,
            center: CenterConfig::default(),
            center_method: CenterMethod::Combined,
            cv_budget_divisor: 4,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    fn validate(&self) -> Result<()> {
        self.depth.validate()?;
        check_partition(&self.segments, self.horizon())?;
        if self.cv_budget_divisor == 0 {
            return Err(Error::arg("cv budget divisor must be positive"));
        }
        Ok(())
    }
}

/// Training members of one label within one segment, with the center
/// when the method needs it.
#[derive(Debug, Clone)]
struct GroupModel {
    label: String,
    members: Vec<PointProcess>,
    center: Option<PointProcess>,
}

/// Per-label depth models for one segment.
#[derive(Debug, Clone)]
pub struct DepthClassifier {
    segment: Segment,
    depth: DepthConfig,
    groups: Vec<GroupModel>,
    fitted_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    /// Depth of the query in each group, in label order.
    pub depths: Vec<(String, f64)>,
    pub tie: bool,
}

impl DepthClassifier {
    /// Fits one model per label. Every training process needs a label and an
    /// id; ids are recorded so callers can audit what the model has seen.
    pub fn fit(
        training: &[PointProcess],
        segment: &Segment,
        depth: &DepthConfig,
        center: &CenterConfig,
        center_method: CenterMethod,
        seed: u64,
    ) -> Result<Self> {
        depth.validate()?;
        let mut by_label: BTreeMap<String, Vec<PointProcess>> = BTreeMap::new();
        let mut fitted_ids = BTreeSet::new();
        for (i, p) in training.iter().enumerate() {
            let label = p
                .label
                .clone()
                .ok_or_else(|| Error::arg(format!("training process {i} has no label")))?;
            fitted_ids.insert(p.display_id(i));
            by_label.entry(label).or_default().push(segment.cut(p)?);
        }
        if by_label.is_empty() {
            return Err(Error::arg("classifier needs at least one labeled group"));
        }
        let groups = by_label
            .into_iter()
            .enumerate()
            .map(|(g, (label, members))| {
                let center = match depth.method {
                    DepthMethod::ModifiedHDepth => {
                        let obj = SsdObjective::new(&members, &segment.spec)?;
                        let est = estimate_center(&obj, center_method, center, seed.wrapping_add(g as u64))?;
                        Some(est.events)
                    }
                    _ => None,
                };
                Ok(GroupModel {
                    label,
                    members,
                    center,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(g) = groups.iter().find(|g| {
            depth.method == DepthMethod::ModifiedBandDepth && g.members.len() < 2
        }) {
            return Err(Error::arg(format!(
                "band depth needs at least 2 members in group `{}`",
                g.label
            )));
        }
        Ok(Self {
            segment: *segment,
            depth: *depth,
            groups,
            fitted_ids,
        })
    }

    pub fn labels(&self) -> Vec<&str> {
        self.groups.iter().map(|g| g.label.as_str()).collect()
    }

    /// Ids of every process used for fitting.
    pub fn fitted_ids(&self) -> &BTreeSet<String> {
        &self.fitted_ids
    }

    pub fn center(&self, label: &str) -> Option<&PointProcess> {
        self.groups
            .iter()
            .find(|g| g.label == label)
            .and_then(|g| g.center.as_ref())
    }

    /// Argmax of the per-group depth; exact ties go to the smaller label.
    pub fn predict(&self, query: &PointProcess) -> Result<Prediction> {
        let q = [self.segment.cut(query)?];
        let mut depths = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            let d = depths_against(&q, &g.members, &self.depth, &self.segment.spec, g.center.as_ref())?;
            depths.push((g.label.clone(), d[0]));
        }
        // Labels are already sorted, so the first maximum is the smallest label.
        let best = depths
            .iter()
            .map(|(_, d)| *d)
            .fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<&String> = depths
            .iter()
            .filter(|(_, d)| *d == best)
            .map(|(l, _)| l)
            .collect();
        let tie = winners.len() > 1;
        if tie {
            log::warn!(
                "depth tie between labels {winners:?} for {}; choosing `{}`",
                query.id.as_deref().unwrap_or("query"),
                winners[0]
            );
        }
        Ok(Prediction {
            label: winners[0].clone(),
            depths,
            tie,
        })
    }
}

/// Fits on `groups` (label, members) and classifies `test` in one segment.
pub fn classify_by_depth(
    test: &PointProcess,
    groups: &[(String, Vec<PointProcess>)],
    cfg: &ClassifierConfig,
    segment: usize,
) -> Result<Prediction> {
    cfg.validate()?;
    let seg = cfg
        .segments
        .get(segment)
        .ok_or_else(|| Error::arg(format!("no segment {segment}")))?;
    if let Some((label, _)) = groups.iter().find(|(_, m)| m.is_empty()) {
        return Err(Error::arg(format!("group `{label}` is empty")));
    }
    let training: Vec<PointProcess> = groups
        .iter()
        .flat_map(|(label, members)| {
            members
                .iter()
                .enumerate()
                .map(move |(i, p)| {
                    let id = p.id.clone().unwrap_or_else(|| format!("{label}/{i}"));
                    p.clone().with_label(label.clone()).with_id(id)
                })
        })
        .collect();
    DepthClassifier::fit(&training, seg, &cfg.depth, &cfg.center, cfg.center_method, cfg.seed)?
        .predict(test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub seed: u64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Test ids found among the processes the fold's models were fit on.
    pub exposed_test_ids: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub segment: Segment,
    pub labels: Vec<String>,
    pub accuracy: f64,
    pub classes: Vec<ClassMetrics>,
    /// `confusion[true][predicted]`, indexed like `labels`.
    pub confusion: Vec<Vec<usize>>,
    pub folds: Vec<FoldReport>,
    /// Seed of the split actually used (after any reshuffles).
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub config: ClassifierConfig,
    pub segments: Vec<EvalReport>,
}

impl CrossValidation {
    /// Plain-text table: one row per segment, accuracy then per-class F1.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let labels = self.segments.first().map(|s| s.labels.clone()).unwrap_or_default();
        let _ = write!(out, "{:<12} {:<20} {:>9}", "segment", "method", "accuracy");
        for l in &labels {
            let _ = write!(out, " {:>12}", format!("F1[{l}]"));
        }
        out.push('\n');
        for s in &self.segments {
            let _ = write!(
                out,
                "{:<12} {:<20} {:>8.2}%",
                s.segment.name(),
                self.config.depth.method.to_string(),
                100.0 * s.accuracy
            );
            for c in &s.classes {
                let _ = write!(out, " {:>12.4}", c.f1);
            }
            out.push('\n');
        }
        out
    }
}

/// Precision, recall and F1 from a confusion matrix. Undefined ratios
/// (no predictions or no support) are reported as 0.
pub fn class_metrics(labels: &[String], confusion: &[Vec<usize>]) -> Vec<ClassMetrics> {
    (0..labels.len())
        .map(|c| {
            let tp = confusion[c][c] as f64;
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let support: usize = confusion[c].iter().sum();
            let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
            let recall = if support == 0 { 0.0 } else { tp / support as f64 };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label: labels[c].clone(),
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect()
}

/// Stratified fold index for each observation. Each class is shuffled and
/// dealt round-robin from a random offset.
fn stratified_folds(labels: &[String], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, 0);
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_label.entry(l).or_default().push(i);
    }
    let mut fold = vec![0; labels.len()];
    let mut offset = 0;
    for idx in by_label.values_mut() {
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            fold[i] = (offset + j) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    fold
}

fn folds_cover_classes(labels: &[String], fold: &[usize], k: usize) -> bool {
    let classes: BTreeSet<&String> = labels.iter().collect();
    (0..k).all(|f| {
        let test: BTreeSet<&String> = labels.iter().zip(fold).filter(|(_, &g)| g == f).map(|(l, _)| l).collect();
        let train: BTreeSet<&String> = labels.iter().zip(fold).filter(|(_, &g)| g != f).map(|(l, _)| l).collect();
        test == classes && train == classes
    })
}

/// Ids for every process: given ids if all present and unique, else
/// positional ones.
fn assign_ids(data: &[PointProcess]) -> Result<Vec<PointProcess>> {
    let ids: Vec<String> = data.iter().enumerate().map(|(i, p)| p.display_id(i)).collect();
    let unique: BTreeSet<&String> = ids.iter().collect();
    if unique.len() != ids.len() {
        return Err(Error::arg("process ids must be unique for cross-validation"));
    }
    Ok(data
        .iter()
        .zip(ids)
        .map(|(p, id)| p.clone().with_id(id))
        .collect())
}

/// Stratified k-fold evaluation. Models are fit on each fold's training
/// part only. Every segment is evaluated on the same split.
pub fn cross_validate(data: &[PointProcess], cfg: &ClassifierConfig) -> Result<CrossValidation> {
    cfg.validate()?;
    let horizon = cfg.horizon();
    if let Some(p) = data.iter().find(|p| p.horizon() != horizon) {
        return Err(Error::DomainMismatch(format!(
            "process horizon {} differs from segment end {horizon}",
            p.horizon()
        )));
    }
    let data = assign_ids(data)?;
    let labels: Vec<String> = data
        .iter()
        .map(|p| {
            p.label
                .clone()
                .ok_or_else(|| Error::arg(format!("process `{}` has no label", p.display_id(0))))
        })
        .collect::<Result<_>>()?;
    let k = cfg.folds;
    if k < 2 || k > data.len() {
        return Err(Error::arg(format!(
            "folds must be between 2 and {} (the number of labeled processes), got {k}",
            data.len()
        )));
    }
    let mut split = None;
    for attempt in 0..MAX_FOLD_ATTEMPTS {
        let seed = cfg.seed.wrapping_add(attempt);
        let fold = stratified_folds(&labels, k, seed);
        if folds_cover_classes(&labels, &fold, k) {
            split = Some((seed, fold));
            break;
        }
        log::warn!("fold split with seed {seed} leaves a class out of a fold; reshuffling");
    }
    let (split_seed, fold) = split.ok_or_else(|| {
        Error::arg(format!(
            "no stratified {k}-fold split found in {MAX_FOLD_ATTEMPTS} attempts; \
             every class needs at least {k} members"
        ))
    })?;
    log::info!("cross-validation split seed {split_seed}");

    let class_list: Vec<String> = labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut center = cfg.center;
    center.n_max = (center.n_max / cfg.cv_budget_divisor).max(1);

    let mut segments = Vec::with_capacity(cfg.segments.len());
    for segment in &cfg.segments {
        let folds = par::map_indexed(k, |f| {
            run_fold(&data, &labels, &fold, f, split_seed, segment, cfg, &center)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let mut confusion = vec![vec![0usize; class_list.len()]; class_list.len()];
        let pos = |l: &str| class_list.iter().position(|c| c == l).expect("known label");
        let mut reports = Vec::with_capacity(k);
        for (report, pairs) in folds {
            for (truth, pred) in pairs {
                confusion[pos(&truth)][pos(&pred)] += 1;
            }
            reports.push(report);
        }
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..class_list.len()).map(|c| confusion[c][c]).sum();
        segments.push(EvalReport {
            segment: *segment,
            labels: class_list.clone(),
            accuracy: correct as f64 / total as f64,
            classes: class_metrics(&class_list, &confusion),
            confusion,
            folds: reports,
            split_seed,
        });
    }
    Ok(CrossValidation {
        config: cfg.clone(),
        segments,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    data: &[PointProcess],
    labels: &[String],
    fold: &[usize],
    f: usize,
    split_seed: u64,
    segment: &Segment,
    cfg: &ClassifierConfig,
    center: &CenterConfig,
) -> Result<(FoldReport, Vec<(String, String)>)> {
    let train: Vec<PointProcess> = data
        .iter()
        .zip(fold)
        .filter(|(_, &g)| g != f)
        .map(|(p, _)| p.clone())
        .collect();
    let test: Vec<(&PointProcess, &String)> = data
        .iter()
        .zip(labels)
        .zip(fold)
        .filter(|(_, &g)| g == f)
        .map(|(pl, _)| pl)
        .collect();
    let seed = split_seed.wrapping_add(1 + f as u64);
    let model = DepthClassifier::fit(&train, segment, &cfg.depth, center, cfg.center_method, seed)?;
    let test_ids: Vec<String> = test.iter().map(|(p, _)| p.display_id(0)).collect();
    let exposed = test_ids.iter().filter(|id| model.fitted_ids().contains(*id)).count();
    let mut pairs = Vec::with_capacity(test.len());
    let mut ties = 0;
    for (p, truth) in &test {
        let pred = model.predict(p)?;
        ties += pred.tie as usize;
        pairs.push(((*truth).clone(), pred.label));
    }
    let correct = pairs.iter().filter(|(t, p)| t == p).count();
    Ok((
        FoldReport {
            fold: f,
            seed,
            train_ids: train.iter().map(|p| p.display_id(0)).collect(),
            test_ids,
            exposed_test_ids: exposed,
            correct,
            total: pairs.len(),
            accuracy: correct as f64 / pairs.len() as f64,
            ties,
        },
        pairs,
    ))
}

/// Same processes with labels randomly permuted; a chance-level baseline.
pub fn shuffle_labels(data: &[PointProcess], seed: u64) -> Vec<PointProcess> {
    let mut labels: Vec<Option<String>> = data.iter().map(|p| p.label.clone()).collect();
    labels.shuffle(&mut stream_rng(seed, 0));
    data.iter()
        .zip(labels)
        .map(|(p, l)| {
            let mut q = p.clone();
            q.label = l;
            q
        })
        .collect()
}

/// Two-class synthetic task: class `early` has most of its intensity
/// around `T/4`, class `late` around `3T/4`. Ids are `early-000`, ….
pub fn two_peak_task(per_class: usize, horizon: f64, seed: u64) -> Result<Vec<PointProcess>> {
    let sd = horizon / 10.0;
    let make = |major: f64, minor: f64| {
        IntensitySpec::mixture(
            vec![
                MixtureComponent {
                    weight: 4.0,
                    mean: major,
                    sd,
                },
                MixtureComponent {
                    weight: 1.0,
                    mean: minor,
                    sd,
                },
            ],
            horizon,
        )
    };
    let (a, b) = (0.25 * horizon, 0.75 * horizon);
    let mut out = Vec::with_capacity(2 * per_class);
    for (label, intensity, stream) in [("early", make(a, b)?, 0u64), ("late", make(b, a)?, 1)] {
        let sims = simulate(&intensity, per_class, seed.wrapping_mul(2).wrapping_add(stream))?;
        out.extend(
            sims.into_iter()
                .enumerate()
                .map(|(i, p)| p.with_id(format!("{label}-{i:03}")).with_label(label)),
        );
    }
    Ok(out)
}

/// Settings for the simulate → center → rank pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingExperiment {
    pub model: IntensitySpec,
    pub n: usize,
    pub spec: KernelSpec,
    pub depth: DepthConfig,
    /// Every method here gets its own ranking.
    pub methods: Vec<DepthMethod>,
    pub center: CenterConfig,
    pub center_method: CenterMethod,
    pub seed: u64,
    pub top_k: usize,
    pub curve_points: usize,
}

impl RankingExperiment {
    pub fn new(model: IntensitySpec, n: usize, spec: KernelSpec, seed: u64) -> Self {
        Self {
            model,
            n,
            spec,
            depth: DepthConfig::default(),
            methods: vec![
                DepthMethod::HDepth,
                DepthMethod::ModifiedHDepth,
                DepthMethod::ModifiedBandDepth,
            ],
            center: CenterConfig::default(),
            center_method: CenterMethod::Combined,
            seed,
            top_k: 5,
            curve_points: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub sample: Vec<PointProcess>,
    pub center: CenterEstimate,
    pub rankings: Vec<DepthReport>,
}

impl ExperimentOutcome {
    /// `rank,id,depth,count,events` for the top and bottom `k`.
    pub fn extremes_csv(&self, report: &DepthReport, k: usize) -> String {
        let mut out = String::from("group,rank,id,depth,count,events\n");
        let events = |id: &str| {
            self.sample
                .iter()
                .enumerate()
                .find(|(i, p)| p.display_id(*i) == id)
                .map(|(_, p)| p.events().iter().map(|&e| fmt_num(e)).collect::<Vec<_>>().join(" "))
                .unwrap_or_default()
        };
        for (group, entries) in [("top", report.top_k(k)), ("bottom", report.bottom_k(k))] {
            for e in entries {
                let _ = writeln!(
                    out,
                    "{group},{},{},{},{},{}",
                    e.rank,
                    e.id,
                    fmt_num(e.depth),
                    e.count,
                    events(&e.id)
                );
            }
        }
        out
    }

    /// Long-format smoothed curves with each curve's depth and rank attached,
    /// plus the center as id `center`.
    pub fn curves_csv(&self, report: &DepthReport, spec: &KernelSpec, points: usize) -> String {
        let grid = linspace(0.0, spec.horizon, points.max(2));
        let mut out = String::from("id,rank,depth,t,value\n");
        for i in report.order() {
            let e = &report.entries[i];
            let p = &self.sample[i];
            for &t in &grid {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    e.id,
                    e.rank,
                    fmt_num(e.depth),
                    fmt_num(t),
                    fmt_num(curve_value(spec, p.events(), t))
                );
            }
        }
        for &t in &grid {
            let _ = writeln!(
                out,
                "center,0,1,{},{}",
                fmt_num(t),
                fmt_num(curve_value(spec, self.center.events.events(), t))
            );
        }
        out
    }
}

/// Simulates `n` processes, estimates the center, and ranks the sample
/// under every configured method.
pub fn run_ranking_experiment(cfg: &RankingExperiment) -> Result<ExperimentOutcome> {
    if cfg.n < 10 {
        return Err(Error::arg(format!("experiment needs n >= 10, got {}", cfg.n)));
    }
    if cfg.model.horizon != cfg.spec.horizon {
        return Err(Error::DomainMismatch(format!(
            "intensity horizon {} differs from kernel horizon {}",
            cfg.model.horizon, cfg.spec.horizon
        )));
    }
    if cfg.methods.is_empty() {
        return Err(Error::arg("experiment needs at least one depth method"));
    }
    let sample = simulate(&cfg.model, cfg.n, cfg.seed)?;
    let obj = SsdObjective::new(&sample, &cfg.spec)?;
    let center = estimate_center(&obj, cfg.center_method, &cfg.center, cfg.seed)?;
    let rankings = cfg
        .methods
        .iter()
        .map(|&method| {
            let depth = DepthConfig {
                method,
                ..cfg.depth
            };
            rank(&sample, &depth, &cfg.spec, Some(&center.events))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentOutcome {
        sample,
        center,
        rankings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> KernelSpec {
        KernelSpec::gaussian(1.0, 10.0, 100.0).unwrap()
    }

    fn labeled(events: &[f64], label: &str, id: &str) -> PointProcess {
        PointProcess::from_unsorted(events.to_vec(), 100.0)
            .unwrap()
            .with_label(label)
            .with_id(id)
    }

    #[test]
    fn segments_parse_and_tile() {
        let base = KernelSpec::gaussian(1.0, 10.0, 10.0).unwrap();
        let s = parse_segments("0:5:c2=100,5:10:c2=50", &base, 10.0).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].spec.c2, s[0].spec.horizon), (100.0, 5.0));
        assert_eq!((s[1].start, s[1].spec.c2, s[1].spec.c1), (5.0, 50.0, 1.0));
        assert!(parse_segments("0:4,5:10", &base, 10.0).is_err());
        assert!(parse_segments("0:5", &base, 10.0).is_err());
        assert!(parse_segments("0:10:c3=1", &base, 10.0).is_err());
    }

    #[test]
    fn f1_matches_precision_and_recall() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let m = class_metrics(&labels, &[vec![7, 3], vec![2, 8]]);
        assert_eq!(m[0].precision, 7.0 / 9.0);
        assert_eq!(m[0].recall, 0.7);
        let (p, r) = (m[1].precision, m[1].recall);
        assert_eq!(m[1].f1, 2.0 * p * r / (p + r));
        assert_eq!(m[1].support, 10);
    }

    #[test]
    fn copy_of_training_member_gets_its_label() {
        let groups = vec![
            ("a".to_string(), vec![labeled(&[10.0, 20.0], "a", "a0"), labeled(&[12.0], "a", "a1")]),
            ("b".to_string(), vec![labeled(&[80.0, 90.0, 95.0], "b", "b0"), labeled(&[85.0], "b", "b1")]),
        ];
        let cfg = ClassifierConfig::new(DepthMethod::HDepth, spec());
        let pred = classify_by_depth(&groups[1].1[0].clone().with_id("q"), &groups, &cfg, 0).unwrap();
        assert_eq!(pred.label, "b");
        assert!(!pred.tie);
    }

    #[test]
    fn identical_groups_tie_to_smaller_label() {
        let members = vec![labeled(&[30.0], "x", "1"), labeled(&[60.0], "x", "2")];
        let groups = vec![("zeta".to_string(), members.clone()), ("alpha".to_string(), members)];
        let cfg = ClassifierConfig::new(DepthMethod::HDepth, spec());
        let pred = classify_by_depth(&labeled(&[45.0], "?", "q"), &groups, &cfg, 0).unwrap();
        assert!(pred.tie);
        assert_eq!(pred.label, "alpha");
    }

    #[test]
    fn empty_group_is_rejected() {
        let groups = vec![("a".to_string(), vec![])];
        let cfg = ClassifierConfig::new(DepthMethod::HDepth, spec());
        assert!(classify_by_depth(&labeled(&[1.0], "a", "q"), &groups, &cfg, 0).is_err());
    }

    #[test]
    fn stratified_split_keeps_every_class_in_every_fold() {
        let labels: Vec<String> = (0..23).map(|i| if i % 3 == 0 { "a" } else { "b" }.to_string()).collect();
        let fold = stratified_folds(&labels, 4, 9);
        assert!(folds_cover_classes(&labels, &fold, 4));
        let sizes: Vec<usize> = (0..4).map(|f| fold.iter().filter(|&&g| g == f).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "{sizes:?}");
    }

    #[test]
    fn too_small_class_fails_after_retries() {
        let mut data: Vec<PointProcess> = (0..8).map(|i| labeled(&[i as f64], "a", &format!("a{i}"))).collect();
        data.push(labeled(&[50.0], "b", "b0"));
        let cfg = ClassifierConfig::new(DepthMethod::HDepth, spec());
        assert!(cross_validate(&data, &cfg).is_err());
    }

    #[test]
    fn separated_classes_are_classified_perfectly() {
        let mut data = Vec::new();
        for i in 0..8 {
            let x = i as f64;
            data.push(labeled(&[5.0 + x, 15.0 + x], "early", &format!("e{i}")));
            data.push(labeled(&[80.0 + x, 90.0 - x, 95.0], "late", &format!("l{i}")));
        }
        let cfg = ClassifierConfig::new(DepthMethod::HDepth, spec());
        let cv = cross_validate(&data, &cfg).unwrap();
        let seg = &cv.segments[0];
        assert_eq!(seg.accuracy, 1.0);
        assert!(seg.folds.iter().all(|f| f.exposed_test_ids == 0));
        let tested: usize = seg.folds.iter().map(|f| f.total).sum();
        assert_eq!(tested, data.len());
    }

    #[test]
    fn shuffling_permutes_labels() {
        let data = two_peak_task(10, 100.0, 1).unwrap();
        let shuffled = shuffle_labels(&data, 3);
        let count = |d: &[PointProcess], l: &str| d.iter().filter(|p| p.label.as_deref() == Some(l)).count();
        assert_eq!(count(&shuffled, "early"), 10);
        assert!(data.iter().zip(&shuffled).any(|(a, b)| a.label != b.label));
    }

    #[test]
    fn small_experiment_runs_all_methods() {
        let model = IntensitySpec::constant(0.045, 100.0).unwrap();
        let mut cfg = RankingExperiment::new(model, 12, spec(), 5);
        cfg.center.n_max = 2000;
        let out = run_ranking_experiment(&cfg).unwrap();
        assert_eq!(out.rankings.len(), 3);
        let csv = out.curves_csv(&out.rankings[0], &spec(), 11);
        assert_eq!(csv.lines().count(), 1 + 13 * 11);
        let ext = out.extremes_csv(&out.rankings[1], 5);
        assert_eq!(ext.lines().count(), 11);
    }
}

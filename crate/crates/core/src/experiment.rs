//! Configuration-driven experiment harness: sweeps over C and the
//! modification ratio, repeated seeded trials, timing of the region
//! tests against full retraining, and tabular/CSV/JSON output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data_io::{
    apply_modification, augment_bias, plan_modification, read_libsvm, Dataset, Modification,
    ModificationPlan,
};
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::regions::{
    half_space_closed_form, half_space_exact, modification_gradients, segment_region,
    sphere_region, feasible_point, HalfSpaceMode, SegmentRegion, SphereRegion,
};
use crate::synth::{generate, SynthConfig};
use crate::tasks::{
    certified_agreement, coefficient_sensitivity, label_sensitivity, LabelTag, Region,
};
use crate::trainer::{retrain_oracle, train, TrainConfig, TrainedModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Coefficients,
    Labels,
    Both,
}

impl TaskKind {
    pub fn coefficients(&self) -> bool {
        matches!(self, TaskKind::Coefficients | TaskKind::Both)
    }

    pub fn labels(&self) -> bool {
        matches!(self, TaskKind::Labels | TaskKind::Both)
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coefficients" | "coeff" => Ok(TaskKind::Coefficients),
            "labels" => Ok(TaskKind::Labels),
            "both" => Ok(TaskKind::Both),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    pub loss: LossKind,
    pub c_grid: Vec<f64>,
    pub p_up_grid: Vec<f64>,
    pub trials: u32,
    pub seed: u64,
    pub half_space_mode: HalfSpaceMode,
    pub bias: bool,
    pub task: TaskKind,
    pub add_fraction: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub synth: SynthConfig,
    /// When false, time_ms is recorded as 0 so output bytes are
    /// reproducible across runs.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train_path: None,
            test_path: None,
            loss: LossKind::Logistic,
            c_grid: vec![0.2, 0.5, 1.0],
            p_up_grid: vec![0.001, 0.01, 0.1],
            trials: 5,
            seed: 0,
            half_space_mode: HalfSpaceMode::Exact,
            bias: true,
            task: TaskKind::Both,
            add_fraction: 0.5,
            grad_tol: 1e-10,
            max_iters: 10_000,
            synth: SynthConfig::default(),
            timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() || self.p_up_grid.is_empty() {
            return Err(Error::Config("C and p_up grids must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.c_grid.iter().any(|c| *c <= 0.0) {
            return Err(Error::Config("C must be positive".into()));
        }
        if self.p_up_grid.iter().any(|p| *p < 0.0) {
            return Err(Error::Config("p_up must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.add_fraction) {
            return Err(Error::Config("add_fraction must be in [0,1]".into()));
        }
        if self.task.labels() && self.train_path.is_some() && self.test_path.is_none() {
            return Err(Error::Config(
                "labels task over file data needs --test".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Sphere,
    Segment,
    Retrain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub loss: LossKind,
    pub c: f64,
    pub p_up: f64,
    pub trial: u32,
    pub method: Method,
    pub mean_tightness: Option<f64>,
    pub error_ratio: Option<f64>,
    pub time_ms: f64,
    pub containment_violations: u32,
}

#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<ExperimentRecord>,
    pub skipped_trials: usize,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn total_containment_violations(&self) -> u64 {
        self.records
            .iter()
            .map(|r| r.containment_violations as u64)
            .sum()
    }
}

/// Per-cell trial seed: each (C, p_up, trial) cell is independently
/// reproducible.
pub fn trial_seed(seed: u64, c_idx: usize, p_idx: usize, trial: u32) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(1 + c_idx as u64))
        .wrapping_add(0xBF58_476D_1CE4_E5B9u64.wrapping_mul(1 + p_idx as u64))
        .wrapping_add(0x94D0_49BB_1331_11EBu64.wrapping_mul(1 + trial as u64));
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn dedupe(d: Dataset) -> Dataset {
    let mut seen = std::collections::HashSet::new();
    let instances: Vec<_> = d
        .instances
        .into_iter()
        .filter(|inst| {
            let key: (i8, Vec<(u32, u64)>) = (
                inst.label,
                inst.features.iter().map(|&(i, v)| (i, v.to_bits())).collect(),
            );
            seen.insert(key)
        })
        .collect();
    Dataset {
        instances,
        dim: d.dim,
    }
}

/// Base, addition pool, and test datasets, bias-augmented when asked.
/// File-backed runs dedupe the training file and split it 80/20 into
/// base and pool; synthetic runs generate all three parts.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset, Option<Dataset>)> {
    let (base, pool, test) = match &cfg.train_path {
        Some(path) => {
            let train = dedupe(read_libsvm(path)?);
            let test = cfg.test_path.as_deref().map(read_libsvm).transpose()?;
            let dim = train.dim.max(test.as_ref().map_or(0, |t| t.dim));
            let train = train.with_dim(dim);
            let test = test.map(|t| t.with_dim(dim));
            let n_base = (train.len() * 4) / 5;
            let mut instances = train.instances;
            let pool_instances = instances.split_off(n_base);
            (
                Dataset { instances, dim },
                Dataset {
                    instances: pool_instances,
                    dim,
                },
                test,
            )
        }
        None => {
            let (base, pool, test) = generate(&cfg.synth);
            (base, pool, Some(test))
        }
    };
    if base.is_empty() || pool.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.bias {
        Ok((
            augment_bias(&base),
            augment_bias(&pool),
            test.as_ref().map(augment_bias),
        ))
    } else {
        Ok((base, pool, test))
    }
}

enum BuiltRegion {
    Segment(SegmentRegion),
    /// Degenerate half space: the sphere alone is the region.
    SphereOnly(SphereRegion),
}

fn build_segment(
    cfg: &ExperimentConfig,
    base: &Dataset,
    m: &Modification,
    w0: &TrainedModel,
) -> Result<BuiltRegion> {
    let g = modification_gradients(cfg.loss, w0.c_reg, &w0.w, base, m)?;
    let sphere = sphere_region(&g, &w0.w)?;
    let plane = match cfg.half_space_mode {
        HalfSpaceMode::Exact => {
            let updated = apply_modification(base, m)?;
            let w_c = feasible_point(&g, &w0.w);
            half_space_exact(cfg.loss, w0.c_reg, &updated, &w_c)
        }
        HalfSpaceMode::PaperClosedForm => half_space_closed_form(&g, &w0.w),
    };
    match plane {
        Ok(plane) => match segment_region(&sphere, &plane) {
            Ok(seg) => Ok(BuiltRegion::Segment(seg)),
            // only reachable in closed-form mode: the approximate plane
            // missed the sphere, so fall back to the sphere bound
            Err(Error::RegionInconsistent { .. }) => Ok(BuiltRegion::SphereOnly(sphere)),
            Err(e) => Err(e),
        },
        Err(Error::HalfSpaceDegenerate) => Ok(BuiltRegion::SphereOnly(sphere)),
        Err(e) => Err(e),
    }
}

struct TrialMetrics {
    mean_tightness: Option<f64>,
    error_ratio: Option<f64>,
    time_ms: f64,
}

fn run_tasks(
    cfg: &ExperimentConfig,
    region: Region<'_>,
    dim: usize,
    test: Option<&Dataset>,
) -> Result<(TrialMetrics, Option<Vec<crate::regions::BoundInterval>>, Option<Vec<LabelTag>>)> {
    let mut mean_tightness = None;
    let mut error_ratio = None;
    let mut coeff_intervals = None;
    let mut label_tags = None;
    if cfg.task.coefficients() {
        let b = coefficient_sensitivity(region, dim)?;
        mean_tightness = Some(b.mean_tightness);
        coeff_intervals = Some(b.per_coordinate);
    }
    if cfg.task.labels() {
        let test = test.ok_or_else(|| Error::Config("labels task needs a test set".into()))?;
        let rep = label_sensitivity(region, test)?;
        error_ratio = Some(rep.error_ratio);
        label_tags = Some(rep.decisions.iter().map(|d| d.tag).collect());
    }
    Ok((
        TrialMetrics {
            mean_tightness,
            error_ratio,
            time_ms: 0.0,
        },
        coeff_intervals,
        label_tags,
    ))
}

fn count_violations(
    coeff_intervals: &Option<Vec<crate::regions::BoundInterval>>,
    label_tags: &Option<Vec<LabelTag>>,
    w1: &[f64],
    test: Option<&Dataset>,
) -> u32 {
    let mut violations = 0u32;
    if let Some(ivs) = coeff_intervals {
        for (iv, &wj) in ivs.iter().zip(w1) {
            if !iv.contains(wj, 1e-8 * (1.0 + wj.abs())) {
                violations += 1;
            }
        }
    }
    if let (Some(tags), Some(test)) = (label_tags, test) {
        for (tag, x) in tags.iter().zip(&test.instances) {
            let truth = if x.dot(w1) >= 0.0 { 1i8 } else { -1 };
            let bad = match tag {
                LabelTag::CertifiedPositive => truth != 1,
                LabelTag::CertifiedNegative => truth != -1,
                LabelTag::Unknown => false,
            };
            if bad {
                violations += 1;
            }
        }
    }
    violations
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (base, pool, test) = prepare_data(cfg)?;
    let test_ref = test.as_ref();
    let dim = base.dim;

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut skipped = 0usize;

    for (c_idx, &c_reg) in cfg.c_grid.iter().enumerate() {
        let tcfg = TrainConfig {
            c_reg,
            grad_tol: cfg.grad_tol,
            max_iters: cfg.max_iters,
        };
        let w0 = match train(cfg.loss, &base, &tcfg) {
            Ok(m) => m,
            Err(e) => {
                warnings.push(format!("C={c_reg}: base training failed: {e}"));
                skipped += (cfg.p_up_grid.len() * cfg.trials as usize) as usize;
                continue;
            }
        };

        for (p_idx, &p_up) in cfg.p_up_grid.iter().enumerate() {
            for trial in 0..cfg.trials {
                let plan = ModificationPlan {
                    p_up,
                    add_fraction: cfg.add_fraction,
                    seed: trial_seed(cfg.seed, c_idx, p_idx, trial),
                };
                let m = plan_modification(&base, &pool, &plan)?;

                // sphere method, timed end to end
                let t0 = Instant::now();
                let g = modification_gradients(cfg.loss, c_reg, &w0.w, &base, &m)?;
                let sphere = sphere_region(&g, &w0.w)?;
                let (mut sphere_metrics, sphere_ivs, sphere_tags) =
                    run_tasks(cfg, Region::Sphere(&sphere), dim, test_ref)?;
                sphere_metrics.time_ms = elapsed_ms(cfg, t0);

                // segment method, timed end to end (recomputes the shared
                // aggregates so the comparison stays honest)
                let t0 = Instant::now();
                let built = build_segment(cfg, &base, &m, &w0)?;
                let region = match &built {
                    BuiltRegion::Segment(seg) => Region::Segment(seg),
                    BuiltRegion::SphereOnly(s) => Region::Sphere(s),
                };
                let (mut seg_metrics, seg_ivs, seg_tags) = run_tasks(cfg, region, dim, test_ref)?;
                seg_metrics.time_ms = elapsed_ms(cfg, t0);

                // ground truth
                let t0 = Instant::now();
                let w1 = match retrain_oracle(cfg.loss, &base, &m, &tcfg) {
                    Ok(m) => m,
                    Err(e) => {
                        warnings.push(format!(
                            "C={c_reg} p_up={p_up} trial={trial}: retrain failed: {e}"
                        ));
                        skipped += 1;
                        continue;
                    }
                };
                let retrain_ms = elapsed_ms(cfg, t0);

                let sphere_viol = count_violations(&sphere_ivs, &sphere_tags, &w1.w, test_ref);
                let seg_viol = count_violations(&seg_ivs, &seg_tags, &w1.w, test_ref);

                let mk = |method, metrics: &TrialMetrics, violations| ExperimentRecord {
                    loss: cfg.loss,
                    c: c_reg,
                    p_up,
                    trial,
                    method,
                    mean_tightness: metrics.mean_tightness,
                    error_ratio: metrics.error_ratio,
                    time_ms: metrics.time_ms,
                    containment_violations: violations,
                };
                records.push(mk(Method::Sphere, &sphere_metrics, sphere_viol));
                records.push(mk(Method::Segment, &seg_metrics, seg_viol));
                records.push(ExperimentRecord {
                    loss: cfg.loss,
                    c: c_reg,
                    p_up,
                    trial,
                    method: Method::Retrain,
                    mean_tightness: None,
                    error_ratio: None,
                    time_ms: retrain_ms,
                    containment_violations: 0,
                });
            }
        }
    }
    Ok(RunOutput {
        records,
        skipped_trials: skipped,
        warnings,
    })
}

fn elapsed_ms(cfg: &ExperimentConfig, t0: Instant) -> f64 {
    if cfg.timing {
        t0.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// Sanity report used by the acceptance gate and the CLI: checks
/// per-trial dominance of the segment test and the certified-agreement
/// soundness contract on file-free runs.
pub fn certified_agreement_for_region(
    region: Region<'_>,
    test: &Dataset,
    w1: &[f64],
) -> Result<Option<f64>> {
    let rep = label_sensitivity(region, test)?;
    let oracle: Vec<i8> = test
        .instances
        .iter()
        .map(|x| if x.dot(w1) >= 0.0 { 1 } else { -1 })
        .collect();
    Ok(certified_agreement(&rep, &oracle))
}

// --- serialization -------------------------------------------------------

pub const CSV_HEADER: &str =
    "loss,C,p_up,trial,method,mean_tightness,error_ratio,time_ms,containment_violations";

fn fmt_f64(v: f64) -> String {
    format!("{v:.8e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn csv_string(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{:?},{},{},{},{}\n",
            r.loss,
            fmt_f64(r.c),
            fmt_f64(r.p_up),
            r.trial,
            r.method,
            fmt_opt(r.mean_tightness),
            fmt_opt(r.error_ratio),
            fmt_f64(r.time_ms),
            r.containment_violations
        ));
    }
    out
}

pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(csv_string(records).as_bytes())?;
    Ok(())
}

pub fn emit_json(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(f, records)
        .map_err(|e| Error::NumericalFailure(format!("json serialization: {e}")))?;
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ExperimentRecord>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header `{header}`")));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected 9 columns, got {}", cols.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: format!("bad float `{s}`"),
            })
        };
        let opt_f = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f(s).map(Some)
            }
        };
        records.push(ExperimentRecord {
            loss: cols[0].parse()?,
            c: parse_f(cols[1])?,
            p_up: parse_f(cols[2])?,
            trial: cols[3].parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: "bad trial".into(),
            })?,
            method: match cols[4] {
                "Sphere" => Method::Sphere,
                "Segment" => Method::Segment,
                "Retrain" => Method::Retrain,
                other => {
                    return Err(Error::Parse {
                        line: i + 2,
                        msg: format!("bad method `{other}`"),
                    })
                }
            },
            mean_tightness: opt_f(cols[5])?,
            error_ratio: opt_f(cols[6])?,
            time_ms: parse_f(cols[7])?,
            containment_violations: cols[8].parse().map_err(|_| Error::Parse {
                line: i + 2,
                msg: "bad violation count".into(),
            })?,
        });
    }
    Ok(records)
}

// --- summary -------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct CellSummary {
    pub trials: usize,
    pub mean_tightness: Option<f64>,
    pub mean_error_ratio: Option<f64>,
    pub mean_time_ms: f64,
    /// Fraction of trials with zero containment violations.
    pub containment_rate: f64,
}

type CellKey = (String, u64, u64, Method);

fn key_of(r: &ExperimentRecord) -> CellKey {
    (r.loss.to_string(), r.c.to_bits(), r.p_up.to_bits(), r.method)
}

/// Mean over trials for every (loss, C, p_up, method) cell.
pub fn summarize_cells(records: &[ExperimentRecord]) -> BTreeMap<CellKey, CellSummary> {
    let mut cells: BTreeMap<CellKey, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        cells.entry(key_of(r)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|(k, rs)| {
            let n = rs.len() as f64;
            let mean_of = |f: &dyn Fn(&ExperimentRecord) -> Option<f64>| {
                let vals: Vec<f64> = rs.iter().filter_map(|r| f(r)).collect();
                if vals.is_empty() {
                    None
                } else {
                    Some(vals.iter().sum::<f64>() / vals.len() as f64)
                }
            };
            let summary = CellSummary {
                trials: rs.len(),
                mean_tightness: mean_of(&|r| r.mean_tightness),
                mean_error_ratio: mean_of(&|r| r.error_ratio),
                mean_time_ms: rs.iter().map(|r| r.time_ms).sum::<f64>() / n,
                containment_rate: rs
                    .iter()
                    .filter(|r| r.containment_violations == 0)
                    .count() as f64
                    / n,
            };
            (k, summary)
        })
        .collect()
}

/// Aligned text table: one block per (loss, C) with p_up columns and
/// method/metric rows, mirroring the usual benchmark layout.
pub fn summarize(records: &[ExperimentRecord]) -> String {
    if records.is_empty() {
        return "no records\n".to_string();
    }
    let cells = summarize_cells(records);
    let mut blocks: BTreeMap<(String, u64), Vec<u64>> = BTreeMap::new();
    for (loss, c, p, _) in cells.keys() {
        let entry = blocks.entry((loss.clone(), *c)).or_default();
        if !entry.contains(p) {
            entry.push(*p);
        }
    }

    let mut out = String::new();
    for ((loss, c_bits), p_ups) in &blocks {
        let c = f64::from_bits(*c_bits);
        out.push_str(&format!("loss = {loss}, C = {c}\n"));
        out.push_str(&format!("{:<28}", "P_up"));
        for p in p_ups {
            out.push_str(&format!("{:>12}", trim_num(f64::from_bits(*p))));
        }
        out.push('\n');

        let mut row = |label: &str, f: &dyn Fn(&CellSummary) -> Option<f64>| {
            let mut any = false;
            let mut line = format!("{label:<28}");
            for p in p_ups {
                let key = (loss.clone(), *c_bits, *p, method_of_label(label));
                match cells.get(&key).and_then(|s| f(s)) {
                    Some(v) => {
                        any = true;
                        line.push_str(&format!("{:>12}", format!("{v:.3e}")));
                    }
                    None => line.push_str(&format!("{:>12}", "-")),
                }
            }
            line.push('\n');
            if any {
                out.push_str(&line);
            }
        };

        row("Retrain  Time(ms)", &|s| Some(s.mean_time_ms));
        for m in ["Sphere", "Segment"] {
            row(&format!("{m:<8} Time(ms)"), &|s| Some(s.mean_time_ms));
            row(&format!("{m:<8} Tightness"), &|s| s.mean_tightness);
            row(&format!("{m:<8} ErrorRatio"), &|s| s.mean_error_ratio);
            row(&format!("{m:<8} ContainRate"), &|s| Some(s.containment_rate));
        }
        out.push('\n');
    }
    out
}

fn method_of_label(label: &str) -> Method {
    if label.starts_with("Sphere") {
        Method::Sphere
    } else if label.starts_with("Segment") {
        Method::Segment
    } else {
        Method::Retrain
    }
}

fn trim_num(v: f64) -> String {
    let s = format!("{v}");
    s
}

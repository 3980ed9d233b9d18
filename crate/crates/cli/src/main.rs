//! `segbound` — sweep losses, regularization, and modification ratios,
//! bound the updated classifier with the sphere and segment tests,
//! compare against full retraining, and emit per-trial records.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use segbound_core::experiment::{emit_csv, emit_json, run_experiment, summarize};
use segbound_core::regions::HalfSpaceMode;
use segbound_core::synth::SynthConfig;
use segbound_core::{ExperimentConfig, LossKind, TaskKind};

#[derive(Parser, Debug)]
#[command(name = "segbound", version, about)]
struct Cli {
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training data (LIBSVM format); omitted = synthetic data
    #[arg(long)]
    train: Option<PathBuf>,
    /// Test data for the label task (LIBSVM format)
    #[arg(long)]
    test: Option<PathBuf>,
    /// Loss: squared_hinge | logistic
    #[arg(long)]
    loss: Option<String>,
    /// Comma-separated regularization grid, e.g. 0.2,0.5,1
    #[arg(long)]
    c: Option<String>,
    /// Comma-separated modification-ratio grid, e.g. 0.001,0.01,0.1
    #[arg(long)]
    pup: Option<String>,
    /// Repetitions per (C, p_up) cell
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Half-space mode: exact | closed_form
    #[arg(long)]
    mode: Option<String>,
    /// Task: coefficients | labels | both
    #[arg(long)]
    task: Option<String>,
    /// Write per-trial records here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json
    #[arg(long)]
    format: Option<String>,
}

fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad grid value `{v}`: {e}")))
        .collect()
}

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value, got `{line}`", lineno + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn build_config(cli: &Cli) -> Result<(ExperimentConfig, Option<PathBuf>, String), String> {
    let file = match &cli.config {
        Some(p) => parse_config_file(p)?,
        None => HashMap::new(),
    };
    let get = |key: &str| file.get(key).map(String::as_str);

    let mut cfg = ExperimentConfig::default();
    let mut synth = SynthConfig::default();

    // file entries first, then flag overrides
    if let Some(v) = get("train") {
        cfg.train_path = Some(v.into());
    }
    if let Some(v) = get("test") {
        cfg.test_path = Some(v.into());
    }
    if let Some(v) = get("loss") {
        cfg.loss = v.parse::<LossKind>().map_err(|e| e.to_string())?;
    }
    if let Some(v) = get("c") {
        cfg.c_grid = parse_grid(v)?;
    }
    if let Some(v) = get("pup") {
        cfg.p_up_grid = parse_grid(v)?;
    }
    if let Some(v) = get("trials") {
        cfg.trials = v.parse().map_err(|e| format!("bad trials: {e}"))?;
    }
    if let Some(v) = get("seed") {
        cfg.seed = v.parse().map_err(|e| format!("bad seed: {e}"))?;
    }
    if let Some(v) = get("mode") {
        cfg.half_space_mode = v.parse::<HalfSpaceMode>().map_err(|e| e.to_string())?;
    }
    if let Some(v) = get("task") {
        cfg.task = v.parse::<TaskKind>().map_err(|e| e.to_string())?;
    }
    if let Some(v) = get("bias") {
        cfg.bias = v.parse().map_err(|e| format!("bad bias: {e}"))?;
    }
    if let Some(v) = get("add_fraction") {
        cfg.add_fraction = v.parse().map_err(|e| format!("bad add_fraction: {e}"))?;
    }
    if let Some(v) = get("timing") {
        cfg.timing = v.parse().map_err(|e| format!("bad timing: {e}"))?;
    }
    for (key, field) in [
        ("synth_n_base", &mut synth.n_base as &mut usize),
        ("synth_n_pool", &mut synth.n_pool),
        ("synth_n_test", &mut synth.n_test),
        ("synth_dim", &mut synth.dim),
    ] {
        if let Some(v) = get(key) {
            *field = v.parse().map_err(|e| format!("bad {key}: {e}"))?;
        }
    }
    if let Some(v) = get("synth_separation") {
        synth.separation = v.parse().map_err(|e| format!("bad synth_separation: {e}"))?;
    }
    cfg.synth = synth;
    cfg.synth.seed = cfg.seed;

    let mut out = get("out").map(PathBuf::from);
    let mut format = get("format").unwrap_or("csv").to_string();

    if let Some(v) = &cli.train {
        cfg.train_path = Some(v.clone());
    }
    if let Some(v) = &cli.test {
        cfg.test_path = Some(v.clone());
    }
    if let Some(v) = &cli.loss {
        cfg.loss = v.parse::<LossKind>().map_err(|e| e.to_string())?;
    }
    if let Some(v) = &cli.c {
        cfg.c_grid = parse_grid(v)?;
    }
    if let Some(v) = &cli.pup {
        cfg.p_up_grid = parse_grid(v)?;
    }
    if let Some(v) = cli.trials {
        cfg.trials = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
        cfg.synth.seed = v;
    }
    if let Some(v) = &cli.mode {
        cfg.half_space_mode = v.parse::<HalfSpaceMode>().map_err(|e| e.to_string())?;
    }
    if let Some(v) = &cli.task {
        cfg.task = v.parse::<TaskKind>().map_err(|e| e.to_string())?;
    }
    if let Some(v) = &cli.out {
        out = Some(v.clone());
    }
    if let Some(v) = &cli.format {
        format = v.clone();
    }
    if format != "csv" && format != "json" {
        return Err(format!("unknown format `{format}` (expected csv or json)"));
    }

    cfg.validate().map_err(|e| e.to_string())?;
    Ok((cfg, out, format))
}

fn main() -> ExitCode {
    // clap's default usage-error exit code (2) is reserved here for
    // containment violations, so remap argument errors to 1
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (cfg, out, format) = match build_config(&cli) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(1);
        }
    };

    let result = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };

    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", summarize(&result.records));

    if let Some(path) = out {
        let written = match format.as_str() {
            "json" => emit_json(&result.records, &path),
            _ => emit_csv(&result.records, &path),
        };
        if let Err(e) = written {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
        println!("wrote {} records to {}", result.records.len(), path.display());
    }

    let violations = result.total_containment_violations();
    if violations > 0 {
        eprintln!("containment violations: {violations}");
        if cfg.half_space_mode == HalfSpaceMode::Exact {
            return ExitCode::from(2);
        }
    }
    ExitCode::SUCCESS
}

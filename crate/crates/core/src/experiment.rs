//! File-level drivers behind the command-line tool: configuration loading,
//! run directories, sweeps, robustness batteries, decoding and simulation.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::coevo::{AggregationKind, CoevoConfig, CoevoError, GenLogRow, RunState};
use crate::cppn::Genome;
use crate::decoder::{build_morphology, decode_controller, ControllerMap, Morphology};
use crate::robustness::{evaluate_robustness, generate_scenarios, RobustnessReport};
use crate::sim::{displacement, simulate, SimParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// Bad input: unreadable or invalid configuration, genome or morphology.
    #[error("{0}")]
    Config(String),
    /// Failure while running or writing results.
    #[error("{0}")]
    Runtime(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Runtime(_) => 2,
        }
    }
}

impl From<CoevoError> for ExperimentError {
    fn from(e: CoevoError) -> Self {
        match e {
            CoevoError::InvalidConfig(_) | CoevoError::NoWeightRow(_) => ExperimentError::Config(e.to_string()),
            _ => ExperimentError::Runtime(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

fn io_err(path: &Path, e: io::Error) -> ExperimentError {
    ExperimentError::Runtime(format!("{}: {e}", path.display()))
}

/// Shared output behaviour.
#[derive(Debug, Clone, Copy, Default)]
pub struct OutputOptions {
    /// Suppress the timestamp comment line in CSV outputs.
    pub deterministic: bool,
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(contents).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Prefixes CSV text with a timestamp comment unless deterministic.
fn csv_document(body: Vec<u8>, opts: OutputOptions) -> Vec<u8> {
    if opts.deterministic {
        return body;
    }
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut out = format!("# generated_at_unix={now}\n").into_bytes();
    out.extend(body);
    out
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    }
    w.into_inner().map_err(|e| ExperimentError::Runtime(e.to_string()))
}

/// CSV reader that skips `#` comment lines.
pub fn csv_reader<R: io::Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

/// Sets `path` (dot-separated) inside `root` to `raw`, parsed as JSON when
/// possible and as a string otherwise. Intermediate objects are created.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ExperimentError::Config(format!("bad override key {path:?}")));
    }
    for (depth, key) in keys.iter().enumerate() {
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ExperimentError::Config(format!("{path}: {} is not an object", keys[..depth].join("."))))?;
        if depth + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert(Value::Null);
    }
    unreachable!("keys is non-empty")
}

/// Parses `KEY=VALUE`.
pub fn parse_set(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    Ok((k.trim().to_string(), v.to_string()))
}

/// Loads a JSON document (or `{}` when no path is given), applies
/// overrides and deserialises it.
pub fn load_config<T: DeserializeOwned>(path: Option<&Path>, sets: &[(String, String)]) -> Result<T> {
    let mut value: Value = match path {
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?,
        None => Value::Object(Default::default()),
    };
    for (k, v) in sets {
        apply_override(&mut value, k, v)?;
    }
    serde_json::from_value(value).map_err(|e| ExperimentError::Config(format!("configuration: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: CoevoConfig,
    pub n_values: Vec<usize>,
    pub aggregations: Vec<AggregationKind>,
    pub trials: usize,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.n_values.is_empty() || self.aggregations.is_empty() {
            return Err(ExperimentError::Config("sweep needs trials, n_values and aggregations".into()));
        }
        for (n, agg) in self.configurations() {
            CoevoConfig { n_collaborators: n, aggregation: agg, ..self.base.clone() }.validate()?;
        }
        Ok(())
    }

    pub fn configurations(&self) -> Vec<(usize, AggregationKind)> {
        self.n_values
            .iter()
            .flat_map(|&n| self.aggregations.iter().map(move |&a| (n, a)))
            .collect()
    }
}

/// Either a single run configuration or a sweep whose `base` is used.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigDocument {
    Run(CoevoConfig),
    Sweep(SweepSpec),
}

impl ConfigDocument {
    pub fn load(path: Option<&Path>, sets: &[(String, String)]) -> Result<ConfigDocument> {
        let raw: Value = load_config(path, &[])?;
        let is_sweep = raw.get("base").is_some();
        if is_sweep {
            load_config(path, sets).map(ConfigDocument::Sweep)
        } else {
            load_config(path, sets).map(ConfigDocument::Run)
        }
    }

    pub fn run_config(self) -> CoevoConfig {
        match self {
            ConfigDocument::Run(c) => c,
            ConfigDocument::Sweep(s) => s.base,
        }
    }

    pub fn sweep_spec(self) -> Result<SweepSpec> {
        match self {
            ConfigDocument::Sweep(s) => Ok(s),
            ConfigDocument::Run(_) => Err(ExperimentError::Config("expected a sweep spec with a `base` key".into())),
        }
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed of trial `t` of configuration `(n, agg)`:
/// `base_seed + fnv1a64("n={n}/agg={AGG}/trial={t}")`, wrapping.
pub fn trial_seed(base_seed: u64, n: usize, agg: AggregationKind, trial: usize) -> u64 {
    base_seed.wrapping_add(fnv1a64(format!("n={n}/agg={agg}/trial={trial}").as_bytes()))
}

pub fn configuration_label(n: usize, agg: AggregationKind) -> String {
    format!("n{n}_{agg}")
}

fn to_json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

pub const CONFIG_FILE: &str = "config.json";
pub const GEN_LOG_FILE: &str = "gen_log.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CHAMPION_SAM_FILE: &str = "champion_sam.json";
pub const CHAMPION_CTRL_FILE: &str = "champion_ctrl.json";
pub const CHAMPION_MORPHOLOGY_FILE: &str = "champion_morphology.json";
pub const CHAMPION_PHASES_FILE: &str = "champion_phases.json";

fn write_run_outputs(state: &RunState, out: &Path, opts: OutputOptions) -> Result<()> {
    write_atomic(&out.join(GEN_LOG_FILE), &csv_document(csv_bytes(&state.log)?, opts))?;
    if let Some(champ) = &state.champion {
        let mut sam = champ.sam.clone();
        sam.fitness = Some(champ.aptitude);
        write_atomic(&out.join(CHAMPION_SAM_FILE), sam.to_json().as_bytes())?;
        write_atomic(&out.join(CHAMPION_CTRL_FILE), champ.controller.to_json().as_bytes())?;
        let cfg = &state.config;
        if let Ok(morph) = build_morphology(&champ.sam, cfg.canvas, cfg.enclosure) {
            write_atomic(&out.join(CHAMPION_MORPHOLOGY_FILE), morph.to_json().as_bytes())?;
            if let Ok(ctrl) = decode_controller(&champ.controller, &morph) {
                write_atomic(&out.join(CHAMPION_PHASES_FILE), ctrl.to_json().as_bytes())?;
            }
        }
    }
    write_atomic(&out.join(CHECKPOINT_FILE), state.to_checkpoint_json().as_bytes())
}

/// Result of [`run_evolve`].
#[derive(Debug)]
pub enum EvolveOutcome {
    Completed(Box<RunState>),
    /// `--resume` on a run that had already finished; nothing was written.
    AlreadyFinished(Box<RunState>),
}

impl EvolveOutcome {
    pub fn state(&self) -> &RunState {
        match self {
            EvolveOutcome::Completed(s) | EvolveOutcome::AlreadyFinished(s) => s,
        }
    }
}

/// Runs (or resumes) a coevolution into `out`, checkpointing after every
/// generation.
pub fn run_evolve(
    config: &CoevoConfig,
    out: &Path,
    resume: bool,
    opts: OutputOptions,
    mut progress: impl FnMut(&GenLogRow),
) -> Result<EvolveOutcome> {
    config.validate()?;
    let resolved = config.resolved();
    let checkpoint = out.join(CHECKPOINT_FILE);
    let mut state = if resume && checkpoint.exists() {
        let text = fs::read_to_string(&checkpoint).map_err(|e| io_err(&checkpoint, e))?;
        let mut state = RunState::from_checkpoint_json(&text)?;
        let mut saved = state.config.clone();
        saved.generations = resolved.generations;
        if saved != resolved {
            return Err(ExperimentError::Config(format!(
                "{} was written with a different configuration",
                checkpoint.display()
            )));
        }
        state.config.generations = resolved.generations;
        if state.is_finished() {
            return Ok(EvolveOutcome::AlreadyFinished(Box::new(state)));
        }
        state
    } else {
        fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        write_atomic(&out.join(CONFIG_FILE), &to_json_bytes(&resolved))?;
        let state = RunState::initialize(&resolved)?;
        write_run_outputs(&state, out, opts)?;
        state
    };
    state.run_with(|s| {
        progress(s.log.last().expect("one row per generation"));
        write_run_outputs(s, out, opts)
    })?;
    Ok(EvolveOutcome::Completed(Box::new(state)))
}

pub fn read_gen_log(path: &Path) -> Result<Vec<GenLogRow>> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    csv_reader(file)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| ExperimentError::Runtime(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub configuration: String,
    pub generation: usize,
    pub mean_best: f64,
    pub ci95: f64,
    pub trials: usize,
}

/// Mean and normal-approximation 95% half-width of `xs`.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * var.sqrt() / n.sqrt())
}

/// Aggregates champion aptitude per generation across trial logs.
pub fn summarize_trials(configuration: &str, logs: &[Vec<GenLogRow>]) -> Vec<SummaryRow> {
    let generations = logs.iter().map(Vec::len).min().unwrap_or(0);
    (0..generations)
        .map(|g| {
            let xs: Vec<f64> = logs.iter().map(|l| l[g].champion_aptitude).collect();
            let (mean_best, ci95) = mean_ci95(&xs);
            SummaryRow { configuration: configuration.to_string(), generation: g, mean_best, ci95, trials: xs.len() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedTrial {
    pub configuration: String,
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub run_dirs: Vec<PathBuf>,
    pub excluded: Vec<ExcludedTrial>,
}

pub fn trial_dir(out: &Path, n: usize, agg: AggregationKind, trial: usize) -> PathBuf {
    out.join(configuration_label(n, agg)).join(format!("trial_{trial:02}"))
}

/// Runs every configuration and trial of `spec` and writes `summary.csv`
/// and `sweep_report.json`. A failing trial is reported and left out of
/// the summary.
pub fn run_sweep(
    spec: &SweepSpec,
    out: &Path,
    resume: bool,
    opts: OutputOptions,
    mut progress: impl FnMut(&str, usize, &GenLogRow),
) -> Result<SweepReport> {
    spec.validate()?;
    let mut rows = Vec::new();
    let mut report = SweepReport { run_dirs: Vec::new(), excluded: Vec::new() };
    for (n, agg) in spec.configurations() {
        let label = configuration_label(n, agg);
        let mut logs = Vec::new();
        for t in 0..spec.trials {
            let seed = trial_seed(spec.base_seed, n, agg, t);
            let cfg = CoevoConfig { n_collaborators: n, aggregation: agg, seed, ..spec.base.clone() };
            let dir = trial_dir(out, n, agg, t);
            report.run_dirs.push(dir.clone());
            match run_evolve(&cfg, &dir, resume, opts, |row| progress(&label, t, row)) {
                Ok(outcome) => logs.push(outcome.state().log.clone()),
                Err(e) => report.excluded.push(ExcludedTrial {
                    configuration: label.clone(),
                    trial: t,
                    seed,
                    error: e.to_string(),
                }),
            }
        }
        rows.extend(summarize_trials(&label, &logs));
    }
    write_atomic(&out.join("summary.csv"), &csv_document(csv_bytes(&rows)?, opts))?;
    write_atomic(&out.join("sweep_report.json"), &to_json_bytes(&report))?;
    Ok(report)
}

pub fn load_morphology(path: &Path) -> Result<Morphology> {
    Morphology::from_json(&read_text(path)?).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

pub fn load_controller(path: &Path) -> Result<ControllerMap> {
    ControllerMap::from_json(&read_text(path)?)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

pub fn load_genome(path: &Path) -> Result<Genome> {
    Genome::from_json(&read_text(path)?).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
}

/// Writes `robustness.csv` and `summary.json` into `out`.
pub fn run_robustness(
    morph_path: &Path,
    count: usize,
    seed: u64,
    params: &SimParams,
    out: &Path,
    opts: OutputOptions,
) -> Result<RobustnessReport> {
    if count == 0 {
        return Err(ExperimentError::Config("count must be at least 1".into()));
    }
    params.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
    let morph = load_morphology(morph_path)?;
    let scenarios = generate_scenarios(&morph, count, seed);
    let label = morph_path.file_stem().and_then(|s| s.to_str()).unwrap_or("morphology");
    let report = evaluate_robustness(label, &morph, &scenarios, params)
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    write_atomic(&out.join("robustness.csv"), &csv_document(csv, opts))?;
    let mut summary = report.summary_json();
    summary.push('\n');
    write_atomic(&out.join("summary.json"), summary.as_bytes())?;
    Ok(report)
}

/// Decodes a SAM genome to morphology JSON.
pub fn run_decode_sam(genome: &Genome, config: &CoevoConfig, out: &Path) -> Result<Morphology> {
    let morph = build_morphology(genome, config.canvas, config.enclosure)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    write_atomic(out, morph.to_json().as_bytes())?;
    Ok(morph)
}

/// Decodes a controller genome against `morph` to phase-map JSON.
pub fn run_decode_controller(genome: &Genome, morph: &Morphology, out: &Path) -> Result<ControllerMap> {
    let ctrl = decode_controller(genome, morph).map_err(|e| ExperimentError::Config(e.to_string()))?;
    write_atomic(out, ctrl.to_json().as_bytes())?;
    Ok(ctrl)
}

/// Simulates a morphology/controller pair, writes the trace CSV and returns δ.
pub fn run_simulate(
    morph: &Morphology,
    ctrl: &ControllerMap,
    params: &SimParams,
    trace_out: &Path,
    opts: OutputOptions,
) -> Result<f64> {
    params.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
    let trace = simulate(morph, ctrl, params).map_err(|e| match e {
        crate::sim::SimError::DomainMismatch { .. } => ExperimentError::Config(e.to_string()),
        _ => ExperimentError::Runtime(e.to_string()),
    })?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    write_atomic(trace_out, &csv_document(csv, opts))?;
    Ok(displacement(&trace, params.sim.displacement_mode))
}

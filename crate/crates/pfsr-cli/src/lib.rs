//! Experiment driver behind the `pfsr` binary: versioned TOML configs, a
//! deterministic work-unit pool, CSV/manifest emission, dry-run validation,
//! and post-hoc threshold reports. All physics lives in the `pfsr` crate;
//! this one only orchestrates it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use pfsr::experiment::{
    default_basis, importance_rows, mode_name, parse_channel, parse_method, parse_mode,
    result_row, run_curve, ExperimentKind, CSV_HEADER,
};
use pfsr::montecarlo::{
    allocate_shots, enumerate_faults, estimate_threshold, run_importance_sampling,
    zero_block_floor, ExperimentResult, Method, RunSpec, ShotPlan, ThresholdEstimate,
    MIN_SHOTS_PER_K,
};
use pfsr::noise::Channel;
use pfsr::oracle::run_oracle_suite;
use pfsr::surface::{
    build_code, circuit_level_schedule, phenomenological_schedule, Mode, ScheduleStep, StepKind,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Worst acceptable dense-oracle overlap before a suite run counts as failed.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Errors split by exit code: configuration problems exit 2, everything that
/// goes wrong while executing a valid config exits 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Config(msg.into()))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Extra knobs for fixed-fault-count runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportanceConfig {
    pub k_min: usize,
    pub k_max: usize,
}

/// Truncation cutoffs swept by `truncation_sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub epsilons: Vec<f64>,
}

/// Size of the dense-equivalence suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub circuits: usize,
    pub max_qubits: usize,
    pub max_depth: usize,
}

/// One experiment, fully specified; the manifest embeds this verbatim so a
/// run can be replayed from its output directory alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: String,
    #[serde(default)]
    pub distances: Vec<usize>,
    #[serde(default)]
    pub grid: Vec<f64>,
    #[serde(default = "default_channel")]
    pub channel: String,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    pub master_seed: u64,
    /// 0 means one worker per available core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<ImportanceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

fn default_channel() -> String {
    "depolarizing".into()
}

fn default_mode() -> String {
    "phenomenological".into()
}

fn default_method() -> String {
    "exact".into()
}

fn default_out() -> String {
    "results".into()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Semantic checks beyond TOML shape; messages carry the field path.
    pub fn check(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return config_err(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        let kind = ExperimentKind::parse(&self.kind)
            .map_err(|e| CliError::Config(format!("kind: {e}")))?;
        let channel = parse_channel(&self.channel, 0.0)
            .map_err(|e| CliError::Config(format!("channel: {e}")))?;
        parse_mode(&self.mode).map_err(|e| CliError::Config(format!("mode: {e}")))?;
        parse_method(&self.method).map_err(|e| CliError::Config(format!("method: {e}")))?;
        if self.epsilon < 0.0 || !self.epsilon.is_finite() {
            return config_err(format!("epsilon: must be >= 0, got {}", self.epsilon));
        }
        if self.shots == Some(0) {
            return config_err("shots: must be >= 1");
        }
        if self.budget == Some(0) {
            return config_err("budget: must be >= 1");
        }
        for (i, &d) in self.distances.iter().enumerate() {
            if d < 3 || d % 2 == 0 {
                return config_err(format!("distances[{i}]: must be odd and >= 3, got {d}"));
            }
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return config_err("grid: must be strictly increasing");
        }
        for (i, &v) in self.grid.iter().enumerate() {
            channel
                .with_strength(v)
                .map_err(|e| CliError::Config(format!("grid[{i}]: {e}")))?;
        }
        if kind == ExperimentKind::OracleSuite {
            let o = self
                .oracle
                .as_ref()
                .ok_or_else(|| CliError::Config("oracle: section required".into()))?;
            if o.circuits == 0 || o.max_qubits < 2 || o.max_depth == 0 {
                return config_err(
                    "oracle: needs circuits >= 1, max_qubits >= 2, max_depth >= 1",
                );
            }
            return Ok(());
        }
        if self.distances.is_empty() {
            return config_err("distances: at least one required");
        }
        if self.grid.is_empty() {
            return config_err("grid: at least one point required");
        }
        if self.shots.is_none() && self.budget.is_none() {
            return config_err("shots: either shots or budget required");
        }
        match kind {
            ExperimentKind::ImportanceSampling => {
                let imp = self
                    .importance
                    .as_ref()
                    .ok_or_else(|| CliError::Config("importance: section required".into()))?;
                if imp.k_min == 0 || imp.k_min > imp.k_max {
                    return config_err("importance: needs 1 <= k_min <= k_max");
                }
                if matches!(channel, Channel::CoherentZ(_)) {
                    return config_err(
                        "channel: coherent rotations have no discrete fault events to count",
                    );
                }
            }
            ExperimentKind::TruncationSweep => {
                let tr = self
                    .truncation
                    .as_ref()
                    .ok_or_else(|| CliError::Config("truncation: section required".into()))?;
                if tr.epsilons.is_empty() {
                    return config_err("truncation.epsilons: at least one cutoff");
                }
                if tr.epsilons.iter().any(|&e| e < 0.0 || !e.is_finite()) {
                    return config_err("truncation.epsilons: cutoffs must be >= 0");
                }
                if self.shots.is_none() {
                    return config_err("shots: truncation_sweep needs explicit shots");
                }
            }
            _ => {
                if self.shots.is_none() {
                    return config_err(format!("shots: {} needs explicit shots", self.kind));
                }
            }
        }
        Ok(())
    }

    fn kind(&self) -> ExperimentKind {
        ExperimentKind::parse(&self.kind).expect("checked")
    }

    fn channel_family(&self) -> Channel {
        parse_channel(&self.channel, 0.0).expect("checked")
    }

    fn mode_enum(&self) -> Mode {
        parse_mode(&self.mode).expect("checked")
    }

    fn method_enum(&self) -> Method {
        parse_method(&self.method).expect("checked")
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub shots: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(n) = self.shots {
            cfg.shots = Some(n);
        }
    }
}

/// Run manifest written next to the CSV; embedding the effective config makes
/// the pair self-describing and replayable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub csv: String,
    pub config: ExperimentConfig,
}

/// Paths produced by a run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub csv_path: std::path::PathBuf,
    pub manifest_path: std::path::PathBuf,
    pub rows: usize,
    /// Oracle-suite worst overlap when that kind ran, for exit decisions.
    pub worst_overlap: Option<f64>,
}

// ---------------------------------------------------------------------------
// Work-unit pool
// ---------------------------------------------------------------------------

/// Run `count` independent units on up to `workers` threads and return their
/// outputs in unit order. Units pull indices from a shared counter, so the
/// thread count never influences which unit gets which index.
fn run_units<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    let workers = if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        workers
    }
    .min(count.max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T, CliError>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    return;
                }
                let out = f(i);
                slots.lock().expect("pool lock").as_mut_slice()[i] = Some(out);
            });
        }
    });
    let mut out = Vec::with_capacity(count);
    for slot in slots.into_inner().expect("pool lock") {
        out.push(slot.expect("every unit visited")?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn base_id(cfg: &ExperimentConfig) -> String {
    format!("{}:{}", cfg.kind, cfg.method)
}

/// Execute `cfg` and write `results.csv` plus `manifest.json` under `out`.
pub fn run_config(cfg: &ExperimentConfig, out: &Path) -> Result<RunArtifacts, CliError> {
    cfg.check()?;
    let kind = cfg.kind();
    let family = cfg.channel_family();
    let mode = cfg.mode_enum();
    let method = cfg.method_enum();
    let seed = cfg.master_seed;
    let mut worst_overlap = None;

    let unit_rows: Vec<Vec<String>> = match kind {
        ExperimentKind::MemoryThreshold => {
            let id = base_id(cfg);
            let units = cfg.distances.len() * cfg.grid.len();
            run_units(units, cfg.workers, |u| {
                let d = cfg.distances[u / cfg.grid.len()];
                let pi = u % cfg.grid.len();
                let point = &cfg.grid[pi..=pi];
                let shots = cfg.shots.expect("checked");
                let curve = run_curve(d, &family, point, mode, method, cfg.epsilon, shots, seed)
                    .map_err(runtime)?;
                let ch = family.with_strength(point[0]).map_err(runtime)?;
                Ok(curve.iter().map(|r| result_row(&id, mode, &ch, r)).collect())
            })?
        }
        ExperimentKind::TruncationSweep => {
            let eps = &cfg.truncation.as_ref().expect("checked").epsilons;
            let per_eps = cfg.distances.len() * cfg.grid.len();
            run_units(eps.len() * per_eps, cfg.workers, |u| {
                let e = eps[u / per_eps];
                let rest = u % per_eps;
                let d = cfg.distances[rest / cfg.grid.len()];
                let pi = rest % cfg.grid.len();
                let point = &cfg.grid[pi..=pi];
                let id = format!("{}/eps={e}", base_id(cfg));
                let shots = cfg.shots.expect("checked");
                let curve = run_curve(d, &family, point, mode, method, e, shots, seed)
                    .map_err(runtime)?;
                let ch = family.with_strength(point[0]).map_err(runtime)?;
                Ok(curve.iter().map(|r| result_row(&id, mode, &ch, r)).collect())
            })?
        }
        ExperimentKind::ScheduleCompare => {
            let modes = [Mode::CircuitParallel, Mode::CircuitLayered];
            let per_mode = cfg.distances.len() * cfg.grid.len();
            run_units(modes.len() * per_mode, cfg.workers, |u| {
                let m = modes[u / per_mode];
                let rest = u % per_mode;
                let d = cfg.distances[rest / cfg.grid.len()];
                let pi = rest % cfg.grid.len();
                let point = &cfg.grid[pi..=pi];
                let id = format!("{}/{}", base_id(cfg), mode_name(m));
                let shots = cfg.shots.expect("checked");
                let curve = run_curve(d, &family, point, m, method, cfg.epsilon, shots, seed)
                    .map_err(runtime)?;
                let ch = family.with_strength(point[0]).map_err(runtime)?;
                Ok(curve.iter().map(|r| result_row(&id, m, &ch, r)).collect())
            })?
        }
        ExperimentKind::ImportanceSampling => {
            let imp = cfg.importance.as_ref().expect("checked");
            let ks: Vec<usize> = (imp.k_min..=imp.k_max).collect();
            let id = base_id(cfg);
            run_units(cfg.distances.len(), cfg.workers, |u| {
                let d = cfg.distances[u];
                let code = build_code(d).map_err(runtime)?;
                let strength = *cfg.grid.last().expect("checked");
                let channel = family.with_strength(strength).map_err(runtime)?;
                let spec = RunSpec {
                    code: &code,
                    basis: default_basis(&channel),
                    channel,
                    mode,
                    epsilon: cfg.epsilon,
                    method,
                };
                let plan = match (cfg.shots, cfg.budget) {
                    (Some(s), _) => ShotPlan {
                        k_values: ks.clone(),
                        shots: vec![s; ks.len()],
                    },
                    (None, Some(b)) => {
                        let each = (b / (10 * ks.len() as u64)).max(MIN_SHOTS_PER_K);
                        let pilot = run_importance_sampling(
                            &spec,
                            &ks,
                            &vec![each; ks.len()],
                            &cfg.grid,
                            seed,
                            0,
                        )
                        .map_err(runtime)?;
                        allocate_shots(&pilot, &cfg.grid, b)
                    }
                    (None, None) => unreachable!("checked"),
                };
                let est = run_importance_sampling(
                    &spec,
                    &plan.k_values,
                    &plan.shots,
                    &cfg.grid,
                    seed,
                    1,
                )
                .map_err(runtime)?;
                Ok(importance_rows(&id, mode, &spec.channel, d, &est))
            })?
        }
        ExperimentKind::OracleSuite => {
            let o = cfg.oracle.as_ref().expect("checked");
            let report = run_oracle_suite(o.circuits, o.max_qubits, o.max_depth, seed)
                .map_err(runtime)?;
            worst_overlap = Some(report.worst_overlap);
            vec![vec![format!(
                "{},{},oracle,mixed,{},total,{},{},0,{},{}",
                base_id(cfg),
                o.max_qubits,
                report.worst_overlap,
                o.circuits,
                u64::from(report.worst_overlap < 1.0 - ORACLE_TOLERANCE),
                report.mean_overlap,
                report.worst_prob_gap,
            )]]
        }
    };

    fs::create_dir_all(out).map_err(runtime)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut rows = 0usize;
    for unit in &unit_rows {
        for row in unit {
            csv.push_str(row);
            csv.push('\n');
            rows += 1;
        }
    }
    let csv_path = out.join("results.csv");
    fs::write(&csv_path, csv).map_err(runtime)?;

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "pfsr".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        csv: "results.csv".into(),
        config: cfg.clone(),
    };
    let manifest_path = out.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest).map_err(runtime)?;
    fs::write(&manifest_path, body).map_err(runtime)?;

    if let Some(w) = worst_overlap {
        if w < 1.0 - ORACLE_TOLERANCE {
            return Err(CliError::Runtime(format!(
                "oracle suite below tolerance: worst overlap {w}"
            )));
        }
    }
    Ok(RunArtifacts {
        csv_path,
        manifest_path,
        rows,
        worst_overlap,
    })
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn schedule_sane(steps: &[ScheduleStep], n: usize, stabs: usize) -> Result<(), String> {
    if steps.is_empty() {
        return Err("schedule is empty".into());
    }
    for s in steps {
        match &s.kind {
            StepKind::NoiseOn(qs) => {
                if qs.iter().any(|&q| q >= n) {
                    return Err(format!("round {}: noise off the register", s.round));
                }
            }
            StepKind::MeasureStabilizer(i) | StepKind::AncillaCycle(i) => {
                if *i >= stabs {
                    return Err(format!("round {}: stabilizer {i} out of range", s.round));
                }
            }
            StepKind::GateLayer(gates) => {
                let mut touched = vec![false; n];
                for g in gates {
                    let (a, b) = g.qubits();
                    for q in std::iter::once(a).chain(b) {
                        if q >= n {
                            return Err(format!("round {}: gate off the register", s.round));
                        }
                        if std::mem::replace(&mut touched[q], true) {
                            return Err(format!(
                                "round {}: qubit {q} used twice in one layer",
                                s.round
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Dry-run report: never fails, lists PASS/WARN/FAIL per check.
pub fn validate_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    match cfg.check() {
        Ok(()) => line("PASS config fields".into()),
        Err(e) => {
            line(format!("FAIL config fields: {}", e.message()));
        }
    }
    for &d in &cfg.distances {
        match build_code(d) {
            Ok(code) => {
                line(format!(
                    "PASS d={d}: {} data qubits, {} stabilizers, {} physical qubits",
                    code.num_data_qubits(),
                    code.num_stabilizers(),
                    code.num_physical_qubits()
                ));
                let n = code.num_physical_qubits();
                let stabs = code.num_stabilizers();
                let schedules: Vec<(&str, Vec<ScheduleStep>)> = match parse_mode(&cfg.mode) {
                    Ok(Mode::Phenomenological) => {
                        vec![("phenomenological", phenomenological_schedule(&code))]
                    }
                    Ok(Mode::CircuitLayered) => {
                        vec![("circuit_layered", circuit_level_schedule(&code, true))]
                    }
                    Ok(Mode::CircuitParallel) => {
                        vec![("circuit_parallel", circuit_level_schedule(&code, false))]
                    }
                    Err(_) => vec![],
                };
                for (name, steps) in schedules {
                    match schedule_sane(&steps, n, stabs) {
                        Ok(()) => line(format!(
                            "PASS d={d}: {name} schedule, {} steps per pass",
                            steps.len()
                        )),
                        Err(e) => line(format!("FAIL d={d}: {name} schedule: {e}")),
                    }
                }
                if let (Ok(channel), Ok(mode), Ok(method)) = (
                    cfg.grid
                        .last()
                        .ok_or(())
                        .and_then(|&v| cfg.channel_family_checked(v)),
                    parse_mode(&cfg.mode),
                    parse_method(&cfg.method),
                ) {
                    let spec = RunSpec {
                        code: &code,
                        basis: default_basis(&channel),
                        channel,
                        mode,
                        epsilon: cfg.epsilon,
                        method,
                    };
                    match enumerate_faults(&spec) {
                        Ok(model) => line(format!(
                            "PASS d={d}: {} fault locations ({} channel, {} flip)",
                            model.num_locations(),
                            model.num_channel_sites(),
                            model.num_flip_sites()
                        )),
                        Err(e) => line(format!("FAIL d={d}: fault enumeration: {e}")),
                    }
                }
                // Worst-case sparse growth is 2^d entries; each entry holds a
                // complex amplitude plus label and history bit rows.
                let words = n.div_ceil(64);
                let entry_bytes = 16 + 3 * 8 * words + 48;
                let mib = (entry_bytes as f64) * (2.0f64).powi(d as i32) / (1024.0 * 1024.0);
                line(format!(
                    "INFO d={d}: worst-case sparse map 2^{d} entries, about {mib:.2} MiB"
                ));
            }
            Err(e) => line(format!("FAIL d={d}: {e}")),
        }
    }
    if let (Ok(ExperimentKind::ImportanceSampling), Some(imp)) =
        (ExperimentKind::parse(&cfg.kind), cfg.importance.as_ref())
    {
        for &d in &cfg.distances {
            if !(imp.k_min..=imp.k_max).contains(&d) {
                line(format!(
                    "WARN d={d}: importance window [{}, {}] excludes k={d}; \
                     counts below {} contribute nothing",
                    imp.k_min,
                    imp.k_max,
                    zero_block_floor(d)
                ));
            }
        }
    }
    out
}

impl ExperimentConfig {
    fn channel_family_checked(&self, v: f64) -> Result<Channel, ()> {
        parse_channel(&self.channel, 0.0)
            .and_then(|c| c.with_strength(v))
            .map_err(|_| ())
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct CsvRow {
    id: String,
    d: usize,
    param: f64,
    k_or_total: String,
    shots: u64,
    failures: u64,
    discards: u64,
    rate: f64,
    stderr: f64,
}

fn parse_csv(text: &str, path: &Path) -> Result<Vec<CsvRow>, CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Runtime(format!("{}: empty file", path.display())))?;
    if header != CSV_HEADER {
        return Err(CliError::Runtime(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(CliError::Runtime(format!(
                "{}:{}: expected 11 columns, got {}",
                path.display(),
                ln + 2,
                f.len()
            )));
        }
        let bad = |what: &str| {
            CliError::Runtime(format!("{}:{}: bad {what}", path.display(), ln + 2))
        };
        rows.push(CsvRow {
            id: f[0].to_string(),
            d: f[1].parse().map_err(|_| bad("d"))?,
            param: f[4].parse().map_err(|_| bad("param"))?,
            k_or_total: f[5].to_string(),
            shots: f[6].parse().map_err(|_| bad("shots"))?,
            failures: f[7].parse().map_err(|_| bad("failures"))?,
            discards: f[8].parse().map_err(|_| bad("discards"))?,
            rate: f[9].parse().map_err(|_| bad("rate"))?,
            stderr: f[10].parse().map_err(|_| bad("stderr"))?,
        });
    }
    Ok(rows)
}

/// Threshold crossings and curve tables from result CSVs; also returns the
/// plot-ready long-format CSV body.
pub struct Report {
    pub summary: String,
    pub long_csv: String,
    pub thresholds: Vec<(String, ThresholdEstimate)>,
}

pub fn report_files(paths: &[std::path::PathBuf], seed: u64) -> Result<Report, CliError> {
    let mut rows = Vec::new();
    for p in paths {
        let text = fs::read_to_string(p)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
        rows.extend(parse_csv(&text, p)?);
    }
    // Curve points are total rows; per-k importance rows pass through to the
    // long CSV but carry no curve.
    let mut ids: Vec<String> = rows.iter().map(|r| r.id.clone()).collect();
    ids.sort();
    ids.dedup();

    let mut summary = String::new();
    let mut long_csv = String::from("experiment_id,d,param,rate,stderr\n");
    let mut thresholds = Vec::new();
    for id in &ids {
        let mut curve_rows: Vec<&CsvRow> = rows
            .iter()
            .filter(|r| &r.id == id && r.k_or_total == "total")
            .collect();
        curve_rows.sort_by(|a, b| a.d.cmp(&b.d).then(a.param.total_cmp(&b.param)));
        let mut ds: Vec<usize> = curve_rows.iter().map(|r| r.d).collect();
        ds.dedup();
        let _ = writeln!(summary, "{id}");
        for &d in &ds {
            let _ = writeln!(summary, "  d={d}  param -> rate (stderr)");
            for r in curve_rows.iter().filter(|r| r.d == d) {
                let _ = writeln!(summary, "    {:<12} {:.6} ({:.6})", r.param, r.rate, r.stderr);
                let _ = writeln!(long_csv, "{id},{d},{},{},{}", r.param, r.rate, r.stderr);
            }
        }
        if ds.len() < 2 {
            let _ = writeln!(summary, "  threshold: skipped (needs two distances)");
            continue;
        }
        let curves: Vec<Vec<ExperimentResult>> = ds
            .iter()
            .map(|&d| {
                curve_rows
                    .iter()
                    .filter(|r| r.d == d && r.shots > 0)
                    .map(|r| ExperimentResult {
                        param: r.param,
                        d: r.d,
                        shots: r.shots,
                        failures: r.failures,
                        discards: r.discards,
                        rate: r.rate,
                        stderr: r.stderr,
                        max_entries: 0,
                        mean_ln_entries: 0.0,
                        truncation_fallbacks: 0,
                    })
                    .collect()
            })
            .collect();
        match estimate_threshold(&curves, seed) {
            Ok(t) => {
                let _ = writeln!(
                    summary,
                    "  threshold: {:.6} [{:.6}, {:.6}]",
                    t.threshold, t.ci_low, t.ci_high
                );
                thresholds.push((id.clone(), t));
            }
            Err(e) => {
                let _ = writeln!(summary, "  threshold: unavailable ({e})");
            }
        }
    }
    for i in 0..thresholds.len() {
        for j in i + 1..thresholds.len() {
            let (a, ta) = &thresholds[i];
            let (b, tb) = &thresholds[j];
            let _ = writeln!(
                summary,
                "ratio {b} / {a}: {:.3}",
                tb.threshold / ta.threshold
            );
        }
    }
    Ok(Report {
        summary,
        long_csv,
        thresholds,
    })
}

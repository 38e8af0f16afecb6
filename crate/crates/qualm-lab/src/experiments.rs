//! Experiment harness behind the `qualm-lab` binary: JSON configs, seeded
//! trial fan-out, CSV results and run manifests.
//!
//! Every command is a pure function of its config. Trials are indexed, their
//! seeds come from [`derive_seed`], and parallel results are merged in trial
//! order, so CSV output does not depend on the thread count. Wall-clock times
//! go to the manifest only.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{bias, bound_quantities, exact_pk, exact_qk_correlated, exact_qk_sm, tvd, wilson};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityMatrix, C64};
use crate::protocols::{swap_rule, swap_test_program, symmetry_distinguish, symmetry_plus_probability};
use crate::protocols::{parallel_sm_policy, SymmetryStage, VerdictLabel};
use crate::qualm::{execute_coherent, make_oracle, EchoPolicy, OracleKind, OracleOptions, SmPolicy};
use crate::qualm::MAX_LAB_QUBITS;
use crate::sampling::{derive_seed, sample_haar_orthogonal, sample_haar_symplectic, sample_haar_unitary};
use crate::sampling::SeededStream;
use crate::weingarten::moments::{
    orthogonal_fourth_closed, pairing_moment, second_moment_closed, symplectic_fourth_published,
    symplectic_mixed_moment, unitary_fourth_closed, unitary_moment,
};
use crate::weingarten::{
    ascending_double_closed_form, descending_double_closed_form, falling_sum_closed_form,
    half_argument_double_closed_form, verify_inverse_identity, wg_bound_check, wg_table, wg_table_cached,
    bound_regime, gram_pseudo_inverse, Group, WgTable,
};

/// Fixed CSV header shared by every command.
pub const CSV_HEADER: [&str; 8] = ["experiment", "ell", "k", "seed", "metric", "value", "ci_low", "ci_high"];

/// Normal quantile for the reported confidence intervals.
pub const CI_Z: f64 = 1.96;

/// Standard deviations allowed between a Monte Carlo moment and its closed form.
pub const MOMENT_Z: f64 = 5.0;

/// Largest lab register for the moment check (fourth-moment tuples grow as `min(D,3)^8`).
pub const MAX_MOMENT_ELL: usize = 4;

/// Largest lab register for commands built on exact distributions or the
/// `2ℓ+1`-qubit SWAP test.
pub const MAX_EXACT_ELL: usize = 5;

/// Largest `k` for the exact-distribution commands.
pub const MAX_SCAN_K: usize = 3;

/// Envelope for the per-step shrink factor of the incoherent distance.
pub const DECAY_ENVELOPE: (f64, f64) = (0.3, 0.7);

/// Lower bound on the coherent SWAP-test bias.
pub const COHERENT_BIAS_FLOOR: f64 = 0.4;

const TRIAL_CHUNK: u64 = 256;
const RANDOM_BASES: u64 = 3;
const ANALYTIC_PROBES: u64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Moments,
    Wg,
    SwapLoqLop,
    Symmetry,
    TvdScan,
    IncoherentVsCoherent,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Moments => "moments",
            Experiment::Wg => "wg",
            Experiment::SwapLoqLop => "swap_loq_lop",
            Experiment::Symmetry => "symmetry",
            Experiment::TvdScan => "tvd_scan",
            Experiment::IncoherentVsCoherent => "incoherent_vs_coherent",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Moments,
    Wg,
    Distinguish,
    TvdScan,
    IncoherentVsCoherent,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Command::Moments, Command::Wg, Command::Distinguish, Command::TvdScan, Command::IncoherentVsCoherent];

    pub fn name(self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::Wg => "wg",
            Command::Distinguish => "distinguish",
            Command::TvdScan => "tvd-scan",
            Command::IncoherentVsCoherent => "incoherent-vs-coherent",
        }
    }

    pub fn accepts(self, e: Experiment) -> bool {
        matches!(
            (self, e),
            (Command::Moments, Experiment::Moments)
                | (Command::Wg, Experiment::Wg)
                | (Command::Distinguish, Experiment::SwapLoqLop | Experiment::Symmetry)
                | (Command::TvdScan, Experiment::TvdScan)
                | (Command::IncoherentVsCoherent, Experiment::IncoherentVsCoherent)
        )
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s || c.name().replace('-', "_") == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    /// Seed for the Haar rotations `R_2, …, R_k` of a correlated ensemble;
    /// `R_1` is the identity.
    #[serde(default)]
    pub rotation_seed: Option<u64>,
}

fn default_kind() -> String {
    "LOQ".into()
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { kind: default_kind(), rotation_seed: None }
    }
}

impl OracleConfig {
    pub fn kind(&self) -> Result<OracleKind> {
        self.kind.parse()
    }

    /// Oracle options for `k` calls on `ell` qubits.
    pub fn options(&self, ell: usize, k: usize) -> Result<OracleOptions> {
        let mut options = OracleOptions::default();
        if self.kind()? == OracleKind::Correlated {
            let d = 1usize << ell;
            let mut rng = SeededStream::new(self.rotation_seed.unwrap_or(0), 0);
            options.rotations.push(ComplexMatrix::identity(d));
            for _ in 1..k {
                options.rotations.push(sample_haar_unitary(d, &mut rng)?);
            }
        }
        Ok(options)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub ell: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub group: Option<Group>,
    /// Repetitions per distinguisher stage.
    #[serde(default = "default_reps")]
    pub reps: usize,
}

fn default_k() -> usize {
    2
}

fn default_trials() -> u64 {
    1000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_reps() -> usize {
    crate::protocols::DEFAULT_REPS
}

/// Command-line overrides; `None` keeps the config value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub ell: Option<usize>,
    pub k: Option<usize>,
    pub trials: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, ell: usize) -> Self {
        Self {
            experiment,
            ell,
            k: default_k(),
            trials: default_trials(),
            seed: 0,
            oracle: OracleConfig::default(),
            output_dir: default_output_dir(),
            group: None,
            reps: default_reps(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.ell {
            self.ell = v;
        }
        if let Some(v) = o.k {
            self.k = v;
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
    }

    /// Checks the config against the caps of `command`.
    pub fn validate_for(&self, command: Command) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !command.accepts(self.experiment) {
            return fail(format!("command {command} does not run experiment {}", self.experiment));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.reps == 0 {
            return fail("reps must be at least 1".into());
        }
        self.oracle.kind().map_err(|e| Error::Config(e.to_string()))?;
        let cap = match self.experiment {
            Experiment::Moments => MAX_MOMENT_ELL,
            Experiment::SwapLoqLop | Experiment::TvdScan | Experiment::IncoherentVsCoherent => MAX_EXACT_ELL,
            Experiment::Wg | Experiment::Symmetry => MAX_LAB_QUBITS,
        };
        if self.ell == 0 || self.ell > cap {
            return fail(format!("ell = {} outside 1..={cap} for {}", self.ell, self.experiment));
        }
        match self.experiment {
            Experiment::Moments if self.trials < 2 => fail("moments need at least 2 trials".into()),
            Experiment::TvdScan | Experiment::IncoherentVsCoherent if self.k > MAX_SCAN_K => {
                fail(format!("k = {} exceeds the exact-distribution cap {MAX_SCAN_K}", self.k))
            }
            _ => Ok(()),
        }
    }
}

/// One CSV row. `wall_ms` is kept out of the CSV, which must be reproducible,
/// and reported in the manifest instead.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub ell: usize,
    pub k: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub wall_ms: u64,
}

/// 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl ResultRecord {
    fn csv_row(&self) -> [String; 8] {
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        [
            self.experiment.clone(),
            self.ell.to_string(),
            self.k.to_string(),
            self.seed.to_string(),
            self.metric.clone(),
            format_f64(self.value),
            opt(self.ci_low),
            opt(self.ci_high),
        ]
    }
}

pub fn write_records(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record(r.csv_row()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// A named pass/fail check. Informational rows never affect the exit code.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub informational: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct CommandReport {
    pub command: Command,
    pub records: Vec<ResultRecord>,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
}

impl CommandReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn record(&self, metric: &str) -> Option<&ResultRecord> {
        self.records.iter().find(|r| r.metric == metric)
    }
}

/// 0 when every check passes, 1 when a scientific check fails (including an
/// internal consistency error), 2 for usage, config and size errors.
pub fn exit_code(result: &Result<CommandReport>) -> i32 {
    match result {
        Ok(report) => report.exit_code(),
        Err(Error::Consistency(_)) => 1,
        Err(_) => 2,
    }
}

/// Collects rows and checks for one command; wall time is measured from the
/// last [`Recorder::mark`].
struct Recorder<'a> {
    cfg: &'a ExperimentConfig,
    records: Vec<ResultRecord>,
    checks: Vec<Check>,
    files: Vec<PathBuf>,
    mark: Instant,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Self { cfg, records: Vec::new(), checks: Vec::new(), files: Vec::new(), mark: Instant::now() }
    }

    fn mark(&mut self) {
        self.mark = Instant::now();
    }

    fn push(&mut self, ell: usize, k: usize, metric: impl Into<String>, value: f64, ci: Option<(f64, f64)>) {
        self.records.push(ResultRecord {
            experiment: self.cfg.experiment.name().into(),
            ell,
            k,
            seed: self.cfg.seed,
            metric: metric.into(),
            value,
            ci_low: ci.map(|c| c.0),
            ci_high: ci.map(|c| c.1),
            wall_ms: self.mark.elapsed().as_millis() as u64,
        });
    }

    fn row(&mut self, metric: impl Into<String>, value: f64) {
        let (ell, k) = (self.cfg.ell, self.cfg.k);
        self.push(ell, k, metric, value, None);
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, informational: false, detail: detail.into() });
    }

    fn note(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, informational: true, detail: detail.into() });
    }

    fn finish(self, command: Command) -> CommandReport {
        CommandReport { command, records: self.records, checks: self.checks, files: self.files }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a ExperimentConfig,
    git_describe: String,
    started_unix_ms: u128,
    finished_unix_ms: u128,
    threads: usize,
    exit_code: i32,
    checks: &'a [Check],
    wall_ms: Vec<(&'a str, u64)>,
    files: Vec<String>,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Validates `config`, runs `command` on a pool of `threads` workers (all
/// cores when `None`), and writes `<out>/<experiment>.csv` plus
/// `<out>/<experiment>-manifest.json`. Both files are overwritten.
pub fn run_command(command: Command, config: &ExperimentConfig, threads: Option<usize>) -> Result<CommandReport> {
    config.validate_for(command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let started = unix_ms();
    fs::create_dir_all(&config.output_dir)?;
    let mut report = pool.install(|| match command {
        Command::Moments => cmd_moments(config),
        Command::Wg => cmd_wg(config),
        Command::Distinguish => cmd_distinguish(config),
        Command::TvdScan => cmd_tvd_scan(config),
        Command::IncoherentVsCoherent => cmd_incoherent_vs_coherent(config),
    })?;
    let name = config.experiment.name();
    let csv_path = config.output_dir.join(format!("{name}.csv"));
    write_records(&csv_path, &report.records)?;
    report.files.insert(0, csv_path);
    let manifest = Manifest {
        command: command.name(),
        config,
        git_describe: git_describe(),
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        threads: pool.current_num_threads(),
        exit_code: report.exit_code(),
        checks: &report.checks,
        wall_ms: report.records.iter().map(|r| (r.metric.as_str(), r.wall_ms)).collect(),
        files: report.files.iter().map(|p| p.display().to_string()).collect(),
    };
    let manifest_path = config.output_dir.join(format!("{name}-manifest.json"));
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    fs::write(&manifest_path, text)?;
    report.files.push(manifest_path);
    Ok(report)
}

fn dim(ell: usize) -> usize {
    1usize << ell
}

/// Runs `f(t)` for every trial index, in parallel, returning results in
/// trial order.
fn fan_out<T: Send>(trials: u64, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..trials).into_par_iter().map(&f).collect()
}

/// Mean and standard error of a sample.
fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn around(mean: f64, err: f64, z: f64) -> Option<(f64, f64)> {
    Some((mean - z * err, mean + z * err))
}

// ---------------------------------------------------------------------------
// moments

struct MomentTuple {
    rows: Vec<usize>,
    cols: Vec<usize>,
    closed: f64,
    table: f64,
    /// Indices of the plain and conjugated halves in [`half_products`].
    halves: (usize, usize),
}

/// Index of the product `∏ W_{r_s c_s}` over `s ∈ range` among all products of
/// that many entries from the `alphabet × alphabet` corner.
fn half_index(rows: &[usize], cols: &[usize], alphabet: usize) -> usize {
    rows.iter().zip(cols).fold(0, |h, (&r, &c)| h * alphabet * alphabet + r * alphabet + c)
}

/// Every product of `order` entries of the top-left `alphabet × alphabet`
/// block, indexed like [`half_index`].
fn half_products(w: &ComplexMatrix, order: usize, alphabet: usize) -> Vec<C64> {
    let cells = alphabet * alphabet;
    let mut out = vec![C64::new(1.0, 0.0)];
    for _ in 0..order {
        out = out
            .iter()
            .flat_map(|&p| (0..cells).map(move |e| p * w.row(e / alphabet)[e % alphabet]))
            .collect();
    }
    out
}

/// All `4·order` index tuples over `0..alphabet`: `2·order` rows, then columns.
fn tuples(order: usize, alphabet: usize) -> impl Iterator<Item = Vec<usize>> {
    let len = 4 * order;
    let count = alphabet.pow(len as u32);
    (0..count).map(move |mut x| {
        let mut t = vec![0; len];
        for s in (0..len).rev() {
            t[s] = x % alphabet;
            x /= alphabet;
        }
        t
    })
}

/// Second moments use every index; fourth moments the first three, which
/// still include a pair of `J`-partners once `D ≥ 4`.
fn moment_alphabet(d: usize, order: usize) -> usize {
    if order == 1 {
        d
    } else {
        d.min(3)
    }
}

fn moment_tuples(group: Group, d: usize, order: usize, table: &WgTable) -> Result<Vec<MomentTuple>> {
    let alphabet = moment_alphabet(d, order);
    let mut out = Vec::new();
    for t in tuples(order, alphabet) {
        let (rows, cols) = (t[..order * 2].to_vec(), t[order * 2..].to_vec());
        let (closed, via_table) = if order == 1 {
            let c = second_moment_closed(d, [rows[0], rows[1]], [cols[0], cols[1]]);
            let w = match group {
                Group::Unitary => unitary_moment(table, &rows[..1], &cols[..1], &rows[1..], &cols[1..])?,
                Group::Orthogonal => pairing_moment(table, &rows, &cols)?,
                Group::Symplectic => symplectic_mixed_moment(table, &rows[..1], &cols[..1], &rows[1..], &cols[1..])?,
            };
            (c, w)
        } else {
            let r = [rows[0], rows[1], rows[2], rows[3]];
            let c = [cols[0], cols[1], cols[2], cols[3]];
            match group {
                Group::Unitary => (
                    unitary_fourth_closed(d, r, c),
                    unitary_moment(table, &rows[..2], &cols[..2], &rows[2..], &cols[2..])?,
                ),
                Group::Orthogonal => (orthogonal_fourth_closed(d, r, c), pairing_moment(table, &rows, &cols)?),
                Group::Symplectic => (
                    symplectic_fourth_published(d, r, c),
                    symplectic_mixed_moment(table, &rows[..2], &cols[..2], &rows[2..], &cols[2..])?,
                ),
            }
        };
        let halves = (
            half_index(&rows[..order], &cols[..order], alphabet),
            half_index(&rows[order..], &cols[order..], alphabet),
        );
        out.push(MomentTuple { rows, cols, closed, table: via_table, halves });
    }
    Ok(out)
}

fn sample_group(group: Group, d: usize, rng: &mut SeededStream) -> Result<ComplexMatrix> {
    match group {
        Group::Unitary => sample_haar_unitary(d, rng),
        Group::Orthogonal => sample_haar_orthogonal(d, rng),
        Group::Symplectic => sample_haar_symplectic(d / 2, rng),
    }
}

/// Per-tuple running sums `(Σ re, Σ re², Σ im, Σ im²)` of the estimator
/// `∏_{s<n} W_{r_s c_s} ∏_{s≥n} conj(W_{r_s c_s})`, `n` the order.
fn moment_sums(
    group: Group,
    d: usize,
    (order, alphabet): (usize, usize),
    seed: u64,
    trials: u64,
    tuples: &[MomentTuple],
) -> Result<Vec<[f64; 4]>> {
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let partial: Vec<Vec<[f64; 4]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![[0.0; 4]; tuples.len()];
            for t in c * TRIAL_CHUNK..((c + 1) * TRIAL_CHUNK).min(trials) {
                let mut rng = SeededStream::new(derive_seed(seed, t), 0);
                let w = sample_group(group, d, &mut rng)?;
                let halves = half_products(&w, order, alphabet);
                for (a, tup) in acc.iter_mut().zip(tuples) {
                    let x = halves[tup.halves.0] * halves[tup.halves.1].conj();
                    a[0] += x.re;
                    a[1] += x.re * x.re;
                    a[2] += x.im;
                    a[3] += x.im * x.im;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![[0.0; 4]; tuples.len()];
    for p in partial {
        for (t, a) in total.iter_mut().zip(p) {
            for i in 0..4 {
                t[i] += a[i];
            }
        }
    }
    Ok(total)
}

/// `|mean − target|` in standard errors; zero-variance components must match
/// to 1e-12.
fn z_score(sum: f64, sum_sq: f64, n: f64, target: f64) -> (f64, f64, f64) {
    let mean = sum / n;
    let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let err = (var / n).sqrt();
    let dev = (mean - target).abs();
    let z = if err > 1e-300 {
        dev / err
    } else if dev <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    (z, mean, err)
}

/// Monte Carlo second and fourth moments of Haar U, O and Sp at `D = 2^ℓ`
/// against their closed forms, plus the closed forms against the
/// Weingarten-table route.
pub fn cmd_moments(cfg: &ExperimentConfig) -> Result<CommandReport> {
    let mut rec = Recorder::new(cfg);
    let d = dim(cfg.ell);
    let n = cfg.trials as f64;
    for (gi, group) in Group::ALL.into_iter().enumerate() {
        for order in [1usize, 2] {
            rec.mark();
            let table = wg_table(group, order, d as i64)?;
            let tuples = moment_tuples(group, d, order, &table)?;
            let alphabet = moment_alphabet(d, order);
            let sums = moment_sums(group, d, (order, alphabet), derive_seed(cfg.seed, (gi * 2 + order) as u64), cfg.trials, &tuples)?;
            let mut max_z = 0.0f64;
            let mut max_dev = 0.0f64;
            let mut table_gap = 0.0f64;
            for (t, s) in tuples.iter().zip(&sums) {
                let (z_re, mean_re, _) = z_score(s[0], s[1], n, t.closed);
                let (z_im, mean_im, _) = z_score(s[2], s[3], n, 0.0);
                max_z = max_z.max(z_re).max(z_im);
                max_dev = max_dev.max((mean_re - t.closed).abs()).max(mean_im.abs());
                table_gap = table_gap.max((t.closed - t.table).abs());
            }
            let label = format!("{group}/order{}", 2 * order);
            // the diagonal |W_00|^{2n} moment, with a CI
            let diag = tuples.iter().position(|t| t.rows.iter().chain(&t.cols).all(|&i| i == 0)).unwrap_or(0);
            let (_, mean, err) = z_score(sums[diag][0], sums[diag][1], n, tuples[diag].closed);
            rec.push(cfg.ell, order, format!("{label}/diag_mean"), mean, around(mean, err, CI_Z));
            rec.push(cfg.ell, order, format!("{label}/diag_closed"), tuples[diag].closed, None);
            rec.push(cfg.ell, order, format!("{label}/tuples"), tuples.len() as f64, None);
            rec.push(cfg.ell, order, format!("{label}/max_abs_dev"), max_dev, None);
            rec.push(cfg.ell, order, format!("{label}/max_z"), max_z, None);
            rec.push(cfg.ell, order, format!("{label}/z_threshold"), MOMENT_Z, None);
            rec.push(cfg.ell, order, format!("{label}/table_vs_closed"), table_gap, None);
            rec.check(format!("{label} Monte Carlo within {MOMENT_Z}σ"), max_z <= MOMENT_Z, format!("max z {max_z:.3}"));
            rec.check(format!("{label} table route equals closed form"), table_gap <= 1e-12, format!("{table_gap:.2e}"));
        }
    }
    Ok(rec.finish(Command::Moments))
}

// ---------------------------------------------------------------------------
// wg

#[derive(Serialize)]
struct WgGroupReport {
    table: serde_json::Value,
    inverse_identity: bool,
    sum_abs: String,
    closed_forms: Vec<(String, String, bool)>,
    sign_pattern: bool,
    bound_check: Option<crate::weingarten::BoundCheckReport>,
}

fn ratio_string(r: &num_rational::BigRational) -> String {
    r.to_string()
}

fn ratio_f64(r: &num_rational::BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// Builds (or loads from `<out>/wg-cache`) the tables for the configured
/// group, or all three, at `D = 2^ℓ` and checks them.
///
/// Exit-relevant: the inverse identity, the unitary sum identity, and the sign
/// pattern. The orthogonal and symplectic closed forms and the asymptotic
/// bound check are reported as informational rows.
pub fn cmd_wg(cfg: &ExperimentConfig) -> Result<CommandReport> {
    let mut rec = Recorder::new(cfg);
    let d = dim(cfg.ell) as i64;
    let k = cfg.k;
    let cache = cfg.output_dir.join("wg-cache");
    let groups: Vec<Group> = cfg.group.map(|g| vec![g]).unwrap_or_else(|| Group::ALL.to_vec());
    let mut dump = serde_json::Map::new();
    for group in groups {
        rec.mark();
        let g = group.label();
        let table = match wg_table_cached(group, k, d, &cache) {
            Ok(t) => t,
            Err(Error::Rank(why)) => {
                // No exact inverse below the rank threshold; report the pseudo-inverse instead.
                let pinv = gram_pseudo_inverse(group, k, d)?;
                let row_sum: f64 = pinv[0].iter().map(|x| x.abs()).sum();
                rec.row(format!("{g}/singular"), 1.0);
                rec.row(format!("{g}/pinv_sum_abs_identity_row"), row_sum);
                rec.note(format!("{g} Gram matrix invertible"), false, format!("k={k} D={d}: {why}"));
                dump.insert(g.to_string(), serde_json::json!({ "singular": why, "pinv_sum_abs_identity_row": row_sum }));
                continue;
            }
            Err(e) => return Err(e),
        };
        let inverse = verify_inverse_identity(&table)?;
        rec.row(format!("{g}/inverse_identity"), f64::from(u8::from(inverse)));
        rec.check(format!("{g} inverse identity"), inverse, format!("k={k} D={d}"));
        let elements: u64 = table.class_sizes().values().sum();
        rec.row(format!("{g}/elements"), elements as f64);
        rec.row(format!("{g}/classes"), table.values().len() as f64);
        for (ty, v) in table.values() {
            rec.row(format!("{g}/wg[{ty}]"), ratio_f64(v));
        }
        let sum = table.sum_abs();
        rec.row(format!("{g}/sum_abs"), ratio_f64(&sum));
        let mut forms = Vec::new();
        match group {
            Group::Unitary => {
                let f = falling_sum_closed_form(k, d);
                rec.row(format!("{g}/sum_abs_falling"), ratio_f64(&f));
                rec.check(format!("{g} Σ|Wg| = (D−k)!/D!"), f == sum, format!("{sum} vs {f}"));
                forms.push(("(D-k)!/D!".to_string(), ratio_string(&f), f == sum));
            }
            Group::Orthogonal | Group::Symplectic => {
                let mut candidates = vec![("prod 1/(D+2j)", ascending_double_closed_form(k, d))];
                if let Some(f) = descending_double_closed_form(k, d) {
                    candidates.push(("prod 1/(D-2j)", f));
                }
                if let Some(h) = half_argument_double_closed_form(k, d) {
                    candidates.push(("(D/2-k)!!/(D/2)!!", h));
                }
                for (name, f) in candidates {
                    let hit = f == sum;
                    rec.row(format!("{g}/sum_abs_candidate[{name}]"), ratio_f64(&f));
                    rec.note(format!("{g} Σ|Wg| = {name}"), hit, format!("{sum} vs {f}"));
                    forms.push((name.to_string(), ratio_string(&f), hit));
                }
            }
        }
        let signs = match group {
            Group::Symplectic => table.uniform_sign(),
            _ => table.alternating_sign_pattern(),
        };
        rec.row(format!("{g}/sign_pattern"), f64::from(u8::from(signs)));
        rec.check(format!("{g} sign pattern"), signs, String::new());
        let bound = if bound_regime(group, k, d) {
            let b = wg_bound_check(&table)?;
            rec.row(format!("{g}/bound_check_holds"), f64::from(u8::from(b.all_hold())));
            rec.note(format!("{g} asymptotic bounds"), b.all_hold(), format!("identity deviation {:.3e}", b.identity_deviation));
            Some(b)
        } else {
            rec.note(format!("{g} asymptotic bounds"), true, "outside the bound regime".to_string());
            None
        };
        dump.insert(
            g.to_string(),
            serde_json::to_value(WgGroupReport {
                table: table.to_json(),
                inverse_identity: inverse,
                sum_abs: ratio_string(&sum),
                closed_forms: forms,
                sign_pattern: signs,
                bound_check: bound,
            })
            .map_err(|e| Error::Io(std::io::Error::other(e)))?,
        );
    }
    let path = cfg.output_dir.join(format!("wg-k{k}-D{d}.json"));
    let text = serde_json::to_string_pretty(&dump).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    fs::write(&path, text)?;
    rec.files.push(path);
    Ok(rec.finish(Command::Wg))
}

// ---------------------------------------------------------------------------
// distinguish

struct SwapTrial {
    loq: bool,
    correct: bool,
    p0: f64,
}

/// Coherent distinguishers over `trials` oracle resamplings.
///
/// `swap_loq_lop` alternates LOQ and LOP by trial index and runs `reps` SWAP
/// tests per trial. `symmetry` runs `trials` oracles per class. The exit
/// check is the task's error bound: every class is recognized with error
/// below 1/3.
pub fn cmd_distinguish(cfg: &ExperimentConfig) -> Result<CommandReport> {
    match cfg.experiment {
        Experiment::SwapLoqLop => distinguish_swap(cfg),
        Experiment::Symmetry => distinguish_symmetry(cfg),
        other => Err(Error::Config(format!("distinguish does not run {other}"))),
    }
}

fn distinguish_swap(cfg: &ExperimentConfig) -> Result<CommandReport> {
    let mut rec = Recorder::new(cfg);
    let program = swap_test_program(cfg.ell)?;
    let d = dim(cfg.ell) as f64;
    let options = OracleOptions::default();
    let trials = fan_out(cfg.trials, |t| {
        let s = derive_seed(cfg.seed, t);
        let loq = t % 2 == 0;
        let kind = if loq { OracleKind::Loq } else { OracleKind::Lop };
        let mut oracle = make_oracle(kind, cfg.ell, s, &options)?;
        let mut rng = SeededStream::new(s, 1);
        let mut raw = Vec::with_capacity(cfg.reps);
        let mut p0 = 0.0;
        for r in 0..cfg.reps {
            let run = execute_coherent(&program, &mut oracle, &[], &mut rng)?;
            if r == 0 {
                p0 = run.probabilities[0];
            }
            raw.push(run.bits[0]);
        }
        let label = swap_rule(&raw);
        Ok(SwapTrial { loq, correct: (label == VerdictLabel::Loq) == loq, p0 })
    })?;
    rec.row("queries_per_test", program.query_complexity() as f64);
    rec.row("gates_per_test", program.gate_complexity() as f64);
    rec.row("reps", cfg.reps as f64);
    let all_correct = trials.iter().filter(|t| t.correct).count() as u64;
    let ci = wilson(all_correct, cfg.trials, CI_Z);
    rec.push(cfg.ell, cfg.k, "success_rate", all_correct as f64 / cfg.trials as f64, Some(ci));
    let mut single_shot_error = 0.0;
    for (name, loq) in [("LOQ", true), ("LOP", false)] {
        let class: Vec<&SwapTrial> = trials.iter().filter(|t| t.loq == loq).collect();
        if class.is_empty() {
            continue;
        }
        let n = class.len() as u64;
        let ok = class.iter().filter(|t| t.correct).count() as u64;
        let rate = ok as f64 / n as f64;
        rec.push(cfg.ell, cfg.k, format!("success_rate/{name}"), rate, Some(wilson(ok, n, CI_Z)));
        rec.check(format!("{name} error below 1/3"), 1.0 - rate < 1.0 / 3.0, format!("success {rate:.4}"));
        let p0: Vec<f64> = class.iter().map(|t| t.p0).collect();
        let (mean, err) = mean_and_error(&p0);
        rec.push(cfg.ell, cfg.k, format!("p0_mean/{name}"), mean, around(mean, err, CI_Z));
        // one test decides LOQ on outcome 0
        single_shot_error += 0.5 * if loq { 1.0 - mean } else { mean };
    }
    rec.row("p0_expected/LOP", 0.5 + 0.5 / d);
    rec.row("single_test_error", single_shot_error);
    rec.row("single_test_error_expected", 0.25 + 0.25 / d);
    rec.check("single two-query test error below 1/3", single_shot_error < 1.0 / 3.0, format!("{single_shot_error:.4}"));
    Ok(rec.finish(Command::Distinguish))
}

fn distinguish_symmetry(cfg: &ExperimentConfig) -> Result<CommandReport> {
    let mut rec = Recorder::new(cfg);
    let options = OracleOptions::default();
    let runs = fan_out(cfg.trials * 3, |i| {
        let group = Group::ALL[(i % 3) as usize];
        let s = derive_seed(cfg.seed, i);
        let mut oracle = make_oracle(OracleKind::FixedGroup(group), cfg.ell, s, &options)?;
        let mut rng = SeededStream::new(s, 1);
        let v = symmetry_distinguish(&mut oracle, cfg.reps, &mut rng)?;
        Ok((group, v.label, v.raw_outcomes.len()))
    })?;
    rec.row("reps", cfg.reps as f64);
    let queries: Vec<f64> = runs.iter().map(|r| 2.0 * r.2 as f64).collect();
    let (mq, eq) = mean_and_error(&queries);
    rec.push(cfg.ell, cfg.k, "queries_mean", mq, around(mq, eq, CI_Z));
    for truth in Group::ALL {
        let n = cfg.trials;
        let mut correct = 0;
        for guess in Group::ALL {
            let c = runs.iter().filter(|r| r.0 == truth && r.1 == VerdictLabel::Class(guess)).count() as u64;
            rec.row(format!("confusion/{truth}->{guess}"), c as f64);
            if guess == truth {
                correct = c;
            }
        }
        let rate = correct as f64 / n as f64;
        rec.push(cfg.ell, cfg.k, format!("accuracy/{truth}"), rate, Some(wilson(correct, n, CI_Z)));
        rec.check(format!("{truth} error below 1/3"), 1.0 - rate < 1.0 / 3.0, format!("accuracy {rate:.4}"));
    }
    let correct = runs.iter().filter(|r| r.1 == VerdictLabel::Class(r.0)).count() as u64;
    let total = 3 * cfg.trials;
    rec.push(cfg.ell, cfg.k, "accuracy", correct as f64 / total as f64, Some(wilson(correct, total, CI_Z)));
    // stage 1 on O and stage 2 on Sp accept with certainty
    let probes = cfg.trials.min(ANALYTIC_PROBES);
    for (group, stage, name) in [
        (Group::Orthogonal, SymmetryStage::Transpose, "stage1/O"),
        (Group::Symplectic, SymmetryStage::TimeReversal, "stage2/Sp"),
    ] {
        let probs = fan_out(probes, |t| {
            let mut oracle = make_oracle(OracleKind::FixedGroup(group), cfg.ell, derive_seed(!cfg.seed, t), &options)?;
            symmetry_plus_probability(&mut oracle, stage)
        })?;
        let min = probs.iter().copied().fold(1.0, f64::min);
        rec.row(format!("min_plus_probability/{name}"), min);
        rec.check(format!("{name} accepts with probability 1"), (1.0 - min).abs() <= 1e-9, format!("{min:.12}"));
    }
    Ok(rec.finish(Command::Distinguish))
}

// ---------------------------------------------------------------------------
// tvd scan and the separation table

/// The computational-basis baseline: prepare `|0⟩`, measure in the standard basis.
pub fn computational_policy(ell: usize, k: usize) -> Result<crate::qualm::FixedPolicy> {
    let id = ComplexMatrix::identity(dim(ell));
    parallel_sm_policy(ell, k, &id, &id)
}

fn scan_range(ell: usize) -> std::ops::RangeInclusive<usize> {
    ell.min(2)..=ell
}

/// Exact `P_k` vs `Q_k` distances with the bound chain, for `ℓ` from 2 up to
/// the configured value. For O or Sp the scan uses that group and adds the
/// three pairwise distances between the Haar distributions at the top `ℓ`.
/// A correlated oracle kind adds the distance of that ensemble to `P_k`.
pub fn cmd_tvd_scan(cfg: &ExperimentConfig) -> Result<CommandReport> {
    let mut rec = Recorder::new(cfg);
    let group = cfg.group.unwrap_or(Group::Unitary);
    let k = cfg.k;
    let mut previous: Option<f64> = None;
    for ell in scan_range(cfg.ell) {
        rec.mark();
        let policy = computational_policy(ell, k)?;
        let b = bound_quantities(&policy, ell, k, group)?;
        for (name, v) in [("tvd", b.lhs), ("c1", b.c1), ("c2", b.c2), ("T", b.t), ("rhs", b.rhs)] {
            rec.push(ell, k, format!("{group}/{name}"), v, None);
        }
        rec.push(ell, k, format!("{group}/regime"), f64::from(u8::from(b.regime_ok)), None);
        rec.push(ell, k, format!("{group}/patterns_hold"), f64::from(u8::from(b.patterns_hold())), None);
        let within = b.lhs_within_rhs();
        if b.regime_ok {
            rec.check(format!("ℓ={ell} tvd ≤ c1 + c2·T"), within, format!("{:.6} vs {:.6}", b.lhs, b.rhs));
        } else {
            rec.note(format!("ℓ={ell} tvd ≤ c1 + c2·T (outside regime)"), within, format!("{:.6} vs {:.6}", b.lhs, b.rhs));
        }
        rec.check(format!("ℓ={ell} per-pattern sums"), b.patterns_hold(), String::new());
        if let Some(p) = previous {
            rec.check(format!("ℓ={ell} tvd decreases"), b.lhs < p, format!("{:.6} after {p:.6}", b.lhs));
        }
        previous = Some(b.lhs);
        if cfg.oracle.kind()? == OracleKind::Correlated {
            let rotations = cfg.oracle.options(ell, k)?.rotations;
            let p = exact_pk(&policy, ell, k)?;
            let v = tvd(&p, &exact_qk_correlated(&policy, group, ell, k, &rotations)?)?;
            rec.push(ell, k, format!("{group}/correlated_tvd"), v, None);
            rec.note(format!("ℓ={ell} correlated ensemble no further from P than the fixed one"), v <= b.lhs * 1.01, format!("{v:.6} vs {:.6}", b.lhs));
        }
    }
    if group != Group::Unitary {
        let ell = cfg.ell;
        let policy = computational_policy(ell, k)?;
        let p = exact_pk(&policy, ell, k)?;
        let q: Vec<_> = Group::ALL.iter().map(|&g| exact_qk_sm(&policy, g, ell, k)).collect::<Result<_>>()?;
        let reference = tvd(&p, &q[0])?;
        rec.push(ell, k, "U/tvd_to_P", reference, None);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let v = tvd(&q[a], &q[b])?;
            let name = format!("{}-{}", Group::ALL[a], Group::ALL[b]);
            rec.push(ell, k, format!("pairwise/{name}"), v, None);
            rec.check(format!("{name} below 4× U-vs-P"), v <= 4.0 * reference, format!("{v:.6} vs {:.6}", 4.0 * reference));
        }
    }
    Ok(rec.finish(Command::TvdScan))
}

fn average_output(outputs: &[DensityMatrix]) -> Result<DensityMatrix> {
    let mut acc = ComplexMatrix::zeros(outputs[0].dim(), outputs[0].dim());
    for o in outputs {
        acc = acc.add(o.matrix())?;
    }
    DensityMatrix::new(acc.scale(C64::new(1.0 / outputs.len() as f64, 0.0)))
}

/// Coherent SWAP-test bias, from output states averaged over `trials` oracle
/// draws per class, next to the best exact incoherent distance over a policy
/// suite: computational basis, random fixed bases, and the adaptive echo
/// policy.
pub fn cmd_incoherent_vs_coherent(cfg: &ExperimentConfig) -> Result<CommandReport> {
    let mut rec = Recorder::new(cfg);
    let k = cfg.k;
    let options = OracleOptions::default();
    let mut previous: Option<f64> = None;
    for ell in scan_range(cfg.ell) {
        rec.mark();
        let program = swap_test_program(ell)?;
        let level = derive_seed(cfg.seed, ell as u64);
        let outputs = fan_out(2 * cfg.trials, |i| {
            let kind = if i % 2 == 0 { OracleKind::Loq } else { OracleKind::Lop };
            let s = derive_seed(level, i);
            let mut oracle = make_oracle(kind, ell, s, &options)?;
            Ok(execute_coherent(&program, &mut oracle, &[], &mut SeededStream::new(s, 1))?.output)
        })?;
        let (loq, lop): (Vec<_>, Vec<_>) = outputs.into_iter().enumerate().partition(|(i, _)| i % 2 == 0);
        let strip = |v: Vec<(usize, DensityMatrix)>| v.into_iter().map(|x| x.1).collect::<Vec<_>>();
        let (rho_q, rho_p) = (average_output(&strip(loq))?, average_output(&strip(lop))?);
        let coherent = bias(&rho_q, &rho_p)?;
        rec.push(ell, k, "coherent/bias", coherent, None);
        rec.push(ell, k, "coherent/p0_LOP", rho_p.matrix().row(0)[0].re, None);
        rec.check(format!("ℓ={ell} coherent bias ≥ {COHERENT_BIAS_FLOOR}"), coherent >= COHERENT_BIAS_FLOOR, format!("{coherent:.4}"));

        let d = dim(ell);
        let mut suite: Vec<(String, Box<dyn SmPolicy>)> =
            vec![("computational".into(), Box::new(computational_policy(ell, k)?))];
        for b in 0..RANDOM_BASES {
            let mut rng = SeededStream::new(derive_seed(level, u64::MAX - b), 2);
            let y = sample_haar_unitary(d, &mut rng)?;
            let v = sample_haar_unitary(d, &mut rng)?;
            suite.push((format!("random_basis_{b}"), Box::new(parallel_sm_policy(ell, k, &y, &v)?)));
        }
        suite.push(("echo_adaptive".into(), Box::new(EchoPolicy::new(ell, k)?)));
        let mut best = 0.0f64;
        for (name, policy) in &suite {
            let v = tvd(&exact_pk(policy.as_ref(), ell, k)?, &exact_qk_sm(policy.as_ref(), Group::Unitary, ell, k)?)?;
            rec.push(ell, k, format!("incoherent/{name}"), v, None);
            best = best.max(v);
        }
        rec.push(ell, k, "incoherent/best", best, None);
        if let Some(p) = previous {
            let ratio = best / p;
            rec.push(ell, k, "incoherent/ratio", ratio, None);
            let (lo, hi) = DECAY_ENVELOPE;
            rec.check(format!("ℓ={ell} incoherent shrink factor in [{lo}, {hi}]"), (lo..=hi).contains(&ratio), format!("{ratio:.4}"));
        }
        previous = Some(best);
    }
    Ok(rec.finish(Command::IncoherentVsCoherent))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_fields_and_experiments() {
        let ok = r#"{"experiment":"wg","ell":2,"k":2}"#;
        assert!(ExperimentConfig::from_json_str(ok).is_ok());
        let extra = r#"{"experiment":"wg","ell":2,"colour":1}"#;
        assert!(matches!(ExperimentConfig::from_json_str(extra), Err(Error::Config(_))));
        let unknown = r#"{"experiment":"teleport","ell":2}"#;
        assert!(matches!(ExperimentConfig::from_json_str(unknown), Err(Error::Config(_))));
        let bad_oracle = r#"{"experiment":"wg","ell":2,"oracle":{"kind":"LOQ","x":1}}"#;
        assert!(ExperimentConfig::from_json_str(bad_oracle).is_err());
    }

    #[test]
    fn validation_caps() {
        let mut c = ExperimentConfig::new(Experiment::TvdScan, 3);
        assert!(c.validate_for(Command::TvdScan).is_ok());
        assert!(c.validate_for(Command::Moments).is_err());
        c.k = 4;
        assert!(matches!(c.validate_for(Command::TvdScan), Err(Error::Config(_))));
        c.k = 2;
        c.trials = 0;
        assert!(c.validate_for(Command::TvdScan).is_err());
        let mut c = ExperimentConfig::new(Experiment::Symmetry, 5);
        assert!(c.validate_for(Command::Distinguish).is_ok());
        c.oracle.kind = "LOX".into();
        assert!(c.validate_for(Command::Distinguish).is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut c = ExperimentConfig::new(Experiment::Moments, 2);
        c.apply(&Overrides { seed: Some(9), trials: Some(10), ..Default::default() });
        assert_eq!((c.seed, c.trials, c.ell), (9, 10, 2));
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(1.0 / 3.0).len(), "3.3333333333333331e-1".len());
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("bogus".parse::<Command>().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Err(Error::Config("x".into()))), 2);
        assert_eq!(exit_code(&Err(Error::Consistency("x".into()))), 1);
    }
}

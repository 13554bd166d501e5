//! Command-line interface.
//!
//! Subcommands cover the full bound table (`table1`), bound-versus-time and
//! bound-versus-entanglement sweeps (`scan-time`, `scan-alpha`), the
//! closed-form coupling sweep (`scan-coupling`) and a one-off search
//! (`single`). Results are CSV on stdout or, with `--out`, written
//! atomically to a file; every emission starts with `#`-prefixed manifest
//! lines echoing the fully resolved settings so a result file is
//! self-describing. Exit codes: 0 success, 1 runtime failure (including any
//! failed table cell), 2 usage error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};

use crate::analytics::{self, ClosedFormCase, Scenario};
use crate::estimation::ExperimentConfig;
use crate::model::{HamiltonianKind, HamiltonianSpec, Parameter};
use crate::optimize::{
    minimize, scan_alpha, scan_time, splitmix64, Objective, OptimizationTask, ProbeFamilySpec,
};
use crate::par::par_map;

/// Fully resolved run settings: defaults, then config file, then flags.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub n_qubits: usize,
    pub cluster: usize,
    pub t_total: f64,
    pub gamma: f64,
    pub omega: f64,
    pub coupling_j: f64,
    pub field_h: f64,
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    pub steps_per_unit: usize,
    /// Hamiltonian selected by a config file, overridable per subcommand.
    pub kind: Option<HamiltonianKind>,
    /// Estimated parameter selected by a config file.
    pub estimated: Option<Parameter>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n_qubits: 2,
            cluster: 2,
            t_total: 2.0,
            gamma: 0.5,
            omega: 5.0 * std::f64::consts::PI,
            coupling_j: 0.5,
            field_h: 0.5,
            budget: 40_000,
            restarts: 5,
            seed: 42,
            steps_per_unit: 1000,
            kind: None,
            estimated: None,
        }
    }
}

impl Settings {
    fn experiment_config(&self, gamma: f64) -> ExperimentConfig {
        ExperimentConfig {
            n_qubits: self.n_qubits,
            cluster: self.cluster,
            t_total: self.t_total,
            gamma,
            steps_per_unit: self.steps_per_unit,
        }
    }

    fn manifest_lines(&self) -> Vec<String> {
        vec![
            format!("n_qubits = {}", self.n_qubits),
            format!("cluster = {}", self.cluster),
            format!("t_total = {}", self.t_total),
            format!("gamma = {}", self.gamma),
            format!("omega = {}", self.omega),
            format!("coupling_j = {}", self.coupling_j),
            format!("field_h = {}", self.field_h),
            format!("budget = {}", self.budget),
            format!("restarts = {}", self.restarts),
            format!("seed = {}", self.seed),
            format!("steps_per_unit = {}", self.steps_per_unit),
        ]
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<crate::error::Error> for CliError {
    fn from(err: crate::error::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Best-effort diagnostic line on stderr: a consumer closing the pipe early
/// (`... | head`) must not abort the run.
fn diag(msg: impl AsRef<str>) {
    let _ = writeln!(std::io::stderr(), "{}", msg.as_ref());
}

#[derive(Parser, Debug)]
#[command(
    name = "metrosim",
    version,
    about = "Fisher-information lower bounds for two-qubit Hamiltonian parameter estimation under local dephasing"
)]
struct Cli {
    /// Key=value settings file ('#' starts a comment); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write CSV here (atomically) instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Total number of qubits interrogated in parallel.
    #[arg(long, global = true)]
    n_qubits: Option<usize>,
    /// Qubits per jointly prepared cluster.
    #[arg(long, global = true)]
    cluster: Option<usize>,
    /// Total interrogation time budget per qubit.
    #[arg(long, global = true)]
    t_total: Option<f64>,
    /// Dephasing rate for noisy scenarios.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Qubit frequency.
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Ising zz coupling strength.
    #[arg(long, global = true)]
    coupling_j: Option<f64>,
    /// Transverse-field amplitude.
    #[arg(long, global = true)]
    field_h: Option<f64>,
    /// Objective evaluations per optimizer restart.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Independent optimizer restarts per search.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Runge-Kutta steps per unit time.
    #[arg(long, global = true)]
    steps_per_unit: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimized bounds for all nine Hamiltonian/parameter rows in all four
    /// noise/arrangement scenarios.
    Table1,
    /// Bound versus evolution time for both probe arrangements.
    ScanTime {
        /// Inclusive time grid start:stop:points.
        #[arg(long, default_value = "0.05:2.0:40")]
        grid: String,
        /// measured | qfi.
        #[arg(long, default_value = "measured")]
        objective: String,
        /// ideal | h1 | h2 | h3 | h4.
        #[arg(long)]
        kind: Option<String>,
        /// omega | h | j.
        #[arg(long)]
        estimated: Option<String>,
    },
    /// Closed-form noisy optimum versus coupling strength for both probe
    /// arrangements.
    ScanCoupling {
        /// Inclusive coupling grid start:stop:points.
        #[arg(long, default_value = "0.0:1.0:21")]
        grid: String,
    },
    /// Optimized bound versus the Schmidt weight of the probe.
    ScanAlpha {
        /// Inclusive weight grid start:stop:points, within [0, 1].
        #[arg(long, default_value = "0.0:1.0:21")]
        grid: String,
        /// measured | qfi.
        #[arg(long, default_value = "measured")]
        objective: String,
        /// ideal | h1 | h2 | h3 | h4.
        #[arg(long)]
        kind: Option<String>,
        /// omega | h | j.
        #[arg(long)]
        estimated: Option<String>,
    },
    /// One optimization cell.
    Single {
        /// ideal | h1 | h2 | h3 | h4.
        #[arg(long)]
        kind: Option<String>,
        /// omega | h | j.
        #[arg(long)]
        estimated: Option<String>,
        /// product | entangled | partial.
        #[arg(long, default_value = "product")]
        family: String,
        /// Schmidt weight, required with --family partial.
        #[arg(long)]
        alpha: Option<f64>,
        /// measured | qfi.
        #[arg(long, default_value = "measured")]
        objective: String,
    },
}

/// Formats with the given number of significant digits in plain decimal.
pub fn format_sig(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-9..=15).contains(&exponent) {
        return format!("{x:.*e}", sig - 1);
    }
    let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Parses an inclusive "start:stop:points" grid description.
fn parse_grid(desc: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = desc.split(':').collect();
    if parts.len() != 3 {
        return usage(format!("grid '{desc}' must look like start:stop:points"));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("grid start '{}' is not a number", parts[0])))?;
    let stop: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("grid stop '{}' is not a number", parts[1])))?;
    let points: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("grid points '{}' is not a count", parts[2])))?;
    if !start.is_finite() || !stop.is_finite() {
        return usage(format!("grid '{desc}' has non-finite endpoints"));
    }
    if points == 0 {
        return usage("grid needs at least one point");
    }
    if points == 1 {
        if start != stop {
            return usage("a single-point grid needs start == stop");
        }
        return Ok(vec![start]);
    }
    if stop <= start {
        return usage(format!("grid stop {stop} must exceed start {start}"));
    }
    let step = (stop - start) / (points - 1) as f64;
    Ok((0..points).map(|k| start + step * k as f64).collect())
}

fn apply_config_file(settings: &mut Settings, path: &Path) -> CliResult<()> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
    })?;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return usage(format!("config line {line_no}: expected key = value"));
        };
        let key = key.trim();
        let value = value.trim();
        fn parse_as<T: std::str::FromStr>(value: &str, key: &str, line_no: usize) -> CliResult<T> {
            value.parse().map_err(|_| {
                CliError::Usage(format!("config line {line_no}: bad value '{value}' for {key}"))
            })
        }
        match key {
            "n_qubits" => settings.n_qubits = parse_as(value, key, line_no)?,
            "cluster" => settings.cluster = parse_as(value, key, line_no)?,
            "t_total" => settings.t_total = parse_as(value, key, line_no)?,
            "gamma" => settings.gamma = parse_as(value, key, line_no)?,
            "omega" => settings.omega = parse_as(value, key, line_no)?,
            "coupling_j" => settings.coupling_j = parse_as(value, key, line_no)?,
            "field_h" => settings.field_h = parse_as(value, key, line_no)?,
            "budget" => settings.budget = parse_as(value, key, line_no)?,
            "restarts" => settings.restarts = parse_as(value, key, line_no)?,
            "seed" => settings.seed = parse_as(value, key, line_no)?,
            "steps_per_unit" => settings.steps_per_unit = parse_as(value, key, line_no)?,
            "kind" => {
                settings.kind = Some(HamiltonianKind::from_label(value).map_err(|e| {
                    CliError::Usage(format!("config line {line_no}: {e}"))
                })?)
            }
            "estimated" => {
                settings.estimated = Some(Parameter::from_label(value).map_err(|e| {
                    CliError::Usage(format!("config line {line_no}: {e}"))
                })?)
            }
            _ => return usage(format!("config line {line_no}: unknown key '{key}'")),
        }
    }
    Ok(())
}

fn resolve_settings(cli: &Cli) -> CliResult<Settings> {
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        apply_config_file(&mut settings, path)?;
    }
    macro_rules! override_flag {
        ($field:ident) => {
            if let Some(v) = cli.$field {
                settings.$field = v;
            }
        };
    }
    override_flag!(n_qubits);
    override_flag!(cluster);
    override_flag!(t_total);
    override_flag!(gamma);
    override_flag!(omega);
    override_flag!(coupling_j);
    override_flag!(field_h);
    override_flag!(budget);
    override_flag!(restarts);
    override_flag!(seed);
    override_flag!(steps_per_unit);
    Ok(settings)
}

/// Builds the Hamiltonian for a row, zeroing parameters the kind lacks.
fn build_spec(
    kind: HamiltonianKind,
    estimated: Parameter,
    settings: &Settings,
) -> CliResult<HamiltonianSpec> {
    let (mut omega, mut j, mut h) = (settings.omega, settings.coupling_j, settings.field_h);
    match kind {
        HamiltonianKind::Ideal => {
            j = 0.0;
            h = 0.0;
        }
        HamiltonianKind::Ising => h = 0.0,
        HamiltonianKind::Transverse => j = 0.0,
        HamiltonianKind::IsingTransverse => {}
        HamiltonianKind::IsingOnly => {
            omega = 0.0;
            h = 0.0;
        }
    }
    HamiltonianSpec::new(kind, omega, j, h, estimated).map_err(|e| CliError::Usage(e.to_string()))
}

/// Subcommand flag first, then config-file value, then the built-in default.
fn resolve_kind(flag: &Option<String>, settings: &Settings) -> CliResult<HamiltonianKind> {
    match flag {
        Some(label) => HamiltonianKind::from_label(label).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(settings.kind.unwrap_or(HamiltonianKind::Ising)),
    }
}

fn resolve_estimated(flag: &Option<String>, settings: &Settings) -> CliResult<Parameter> {
    match flag {
        Some(label) => Parameter::from_label(label).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(settings.estimated.unwrap_or(Parameter::Omega)),
    }
}

fn parse_objective(label: &str) -> CliResult<Objective> {
    Objective::from_label(label).map_err(|e| CliError::Usage(e.to_string()))
}

struct Report {
    manifest: Vec<String>,
    header: String,
    rows: Vec<String>,
    /// Human-readable summary printed to stdout when the CSV goes to a file.
    console: Option<String>,
    failures: usize,
}

impl Report {
    fn render(&self, command: &str, settings: &Settings) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# metrosim {command}");
        for line in settings.manifest_lines() {
            let _ = writeln!(out, "# {line}");
        }
        for line in &self.manifest {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.header);
        for row in &self.rows {
            let _ = writeln!(out, "{row}");
        }
        out
    }
}

const TABLE_ROWS: [(HamiltonianKind, Parameter); 9] = [
    (HamiltonianKind::Ideal, Parameter::Omega),
    (HamiltonianKind::Ising, Parameter::Omega),
    (HamiltonianKind::Transverse, Parameter::Omega),
    (HamiltonianKind::IsingTransverse, Parameter::Omega),
    (HamiltonianKind::Transverse, Parameter::FieldH),
    (HamiltonianKind::IsingTransverse, Parameter::FieldH),
    (HamiltonianKind::Ising, Parameter::CouplingJ),
    (HamiltonianKind::IsingTransverse, Parameter::CouplingJ),
    (HamiltonianKind::IsingOnly, Parameter::CouplingJ),
];

/// Scenario order within each table row.
const TABLE_SCENARIOS: [(Scenario, ProbeFamilySpec, bool); 4] = [
    (Scenario::NoiselessProduct, ProbeFamilySpec::Product, false),
    (Scenario::NoiselessEntangled, ProbeFamilySpec::MaxEntangled, false),
    (Scenario::NoisyProduct, ProbeFamilySpec::Product, true),
    (Scenario::NoisyEntangled, ProbeFamilySpec::MaxEntangled, true),
];

fn run_table1(settings: &Settings) -> CliResult<Report> {
    struct Cell {
        kind: HamiltonianKind,
        estimated: Parameter,
        scenario: Scenario,
        family: ProbeFamilySpec,
        noisy: bool,
        seed: u64,
    }
    let mut cells = Vec::with_capacity(TABLE_ROWS.len() * 4);
    for (row_idx, (kind, estimated)) in TABLE_ROWS.iter().enumerate() {
        for (scen_idx, (scenario, family, noisy)) in TABLE_SCENARIOS.into_iter().enumerate() {
            cells.push(Cell {
                kind: *kind,
                estimated: *estimated,
                scenario,
                family,
                noisy,
                seed: splitmix64(settings.seed ^ (row_idx * 4 + scen_idx) as u64),
            });
        }
    }

    let outcomes = par_map(&cells, |cell| -> Result<_, String> {
        let spec = match build_spec(cell.kind, cell.estimated, settings) {
            Ok(s) => s,
            Err(CliError::Usage(m)) | Err(CliError::Runtime(m)) => return Err(m),
        };
        let gamma = if cell.noisy { settings.gamma } else { 0.0 };
        let task = OptimizationTask {
            spec,
            probe_family: cell.family,
            objective: Objective::MeasuredFi,
            config: settings.experiment_config(gamma),
            budget: settings.budget,
            restarts: settings.restarts,
            rng_seed: cell.seed,
        };
        minimize(&task).map_err(|e| e.to_string())
    });

    let mut rows = Vec::with_capacity(cells.len());
    let mut bounds = Vec::with_capacity(cells.len());
    let mut failures = 0;
    for (cell, outcome) in cells.iter().zip(outcomes) {
        let prefix = format!(
            "{},{},{}",
            cell.kind.label(),
            cell.estimated.label(),
            cell.scenario.label()
        );
        match outcome {
            Ok(opt) => {
                bounds.push(format_sig(opt.best_bound, 6));
                rows.push(format!(
                    "{prefix},{},{},{}",
                    format_sig(opt.best_bound, 6),
                    format_sig(opt.best_time, 6),
                    opt.evaluations_used,
                ));
            }
            Err(msg) => {
                diag(format!(
                    "cell {} {} {} failed: {msg}",
                    cell.kind.label(),
                    cell.estimated.label(),
                    cell.scenario.label()
                ));
                failures += 1;
                bounds.push("FAILED".into());
                rows.push(format!("{prefix},FAILED,,"));
            }
        }
    }

    let mut console = String::new();
    let _ = writeln!(
        console,
        "{:<14} {:>18} {:>20} {:>14} {:>16}",
        "row", "product-noiseless", "entangled-noiseless", "product-noisy", "entangled-noisy"
    );
    for (row_idx, (kind, estimated)) in TABLE_ROWS.iter().enumerate() {
        let cell = |scen: usize| bounds[row_idx * 4 + scen].clone();
        let _ = writeln!(
            console,
            "{:<14} {:>18} {:>20} {:>14} {:>16}",
            format!("{} ({})", kind.label(), estimated.label()),
            cell(0),
            cell(1),
            cell(2),
            cell(3),
        );
    }

    Ok(Report {
        manifest: vec!["objective = measured".into()],
        header: "hamiltonian,parameter,scenario,bound,t_opt,evaluations".into(),
        rows,
        console: Some(console),
        failures,
    })
}

fn run_scan_time(
    settings: &Settings,
    grid_desc: &str,
    objective: &str,
    kind_flag: &Option<String>,
    estimated_flag: &Option<String>,
) -> CliResult<Report> {
    let grid = parse_grid(grid_desc)?;
    if grid[0] <= 0.0 {
        return usage("time grid must start above zero");
    }
    let objective = parse_objective(objective)?;
    let kind = resolve_kind(kind_flag, settings)?;
    let estimated = resolve_estimated(estimated_flag, settings)?;
    let spec = build_spec(kind, estimated, settings)?;
    let task = OptimizationTask {
        spec,
        probe_family: ProbeFamilySpec::Product,
        objective,
        config: settings.experiment_config(settings.gamma),
        budget: settings.budget,
        restarts: settings.restarts,
        rng_seed: settings.seed,
    };
    let points = scan_time(&task, &grid)?;
    let rows = points
        .iter()
        .map(|p| {
            format!(
                "{},{},{}",
                format_sig(p.t, 6),
                format_sig(p.bound_product, 6),
                format_sig(p.bound_entangled, 6)
            )
        })
        .collect();
    Ok(Report {
        manifest: vec![
            format!("kind = {}", kind.label()),
            format!("estimated = {}", estimated.label()),
            format!("objective = {}", objective.label()),
            format!("grid = {grid_desc}"),
        ],
        header: "grid_value,bound_product,bound_entangled".into(),
        rows,
        console: None,
        failures: 0,
    })
}

fn run_scan_coupling(settings: &Settings, grid_desc: &str) -> CliResult<Report> {
    let grid = parse_grid(grid_desc)?;
    let case = |scenario| ClosedFormCase {
        scenario,
        n_qubits: settings.n_qubits,
        cluster: settings.cluster,
        t_total: settings.t_total,
        gamma: settings.gamma,
        coupling_j: settings.coupling_j,
    };
    let product = analytics::sweep_coupling(&case(Scenario::NoisyProduct), &grid)?;
    let entangled = analytics::sweep_coupling(&case(Scenario::NoisyEntangled), &grid)?;
    let rows = product
        .iter()
        .zip(&entangled)
        .map(|(p, e)| {
            format!(
                "{},{},{}",
                format_sig(p.coupling_j, 6),
                format_sig(p.bound, 6),
                format_sig(e.bound, 6)
            )
        })
        .collect();
    Ok(Report {
        manifest: vec![format!("grid = {grid_desc}")],
        header: "grid_value,bound_product,bound_entangled".into(),
        rows,
        console: None,
        failures: 0,
    })
}

fn run_scan_alpha(
    settings: &Settings,
    grid_desc: &str,
    objective: &str,
    kind_flag: &Option<String>,
    estimated_flag: &Option<String>,
) -> CliResult<Report> {
    let grid = parse_grid(grid_desc)?;
    if grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return usage("alpha grid must stay within [0, 1]");
    }
    let objective = parse_objective(objective)?;
    let kind = resolve_kind(kind_flag, settings)?;
    let estimated = resolve_estimated(estimated_flag, settings)?;
    let spec = build_spec(kind, estimated, settings)?;
    let task = OptimizationTask {
        spec,
        probe_family: ProbeFamilySpec::Partial { alpha: grid[0] },
        objective,
        config: settings.experiment_config(settings.gamma),
        budget: settings.budget,
        restarts: settings.restarts,
        rng_seed: settings.seed,
    };
    let points = scan_alpha(&task, &grid)?;
    let rows = points
        .iter()
        .map(|p| format!("{},{}", format_sig(p.alpha, 6), format_sig(p.bound, 6)))
        .collect();
    Ok(Report {
        manifest: vec![
            format!("kind = {}", kind.label()),
            format!("estimated = {}", estimated.label()),
            format!("objective = {}", objective.label()),
            format!("grid = {grid_desc}"),
        ],
        header: "alpha,bound_min".into(),
        rows,
        console: None,
        failures: 0,
    })
}

fn run_single(
    settings: &Settings,
    kind_flag: &Option<String>,
    estimated_flag: &Option<String>,
    family: &str,
    alpha: Option<f64>,
    objective: &str,
) -> CliResult<Report> {
    let kind = resolve_kind(kind_flag, settings)?;
    let estimated = resolve_estimated(estimated_flag, settings)?;
    let objective = parse_objective(objective)?;
    let probe_family = match family.to_ascii_lowercase().as_str() {
        "product" => ProbeFamilySpec::Product,
        "entangled" => ProbeFamilySpec::MaxEntangled,
        "partial" => {
            let Some(alpha) = alpha else {
                return usage("--family partial requires --alpha");
            };
            if !(0.0..=1.0).contains(&alpha) {
                return usage(format!("alpha = {alpha} outside [0, 1]"));
            }
            ProbeFamilySpec::Partial { alpha }
        }
        other => return usage(format!("unknown family '{other}' (expected product|entangled|partial)")),
    };
    if alpha.is_some() && !matches!(probe_family, ProbeFamilySpec::Partial { .. }) {
        return usage("--alpha only applies to --family partial");
    }
    let spec = build_spec(kind, estimated, settings)?;
    let task = OptimizationTask {
        spec,
        probe_family,
        objective,
        config: settings.experiment_config(settings.gamma),
        budget: settings.budget,
        restarts: settings.restarts,
        rng_seed: settings.seed,
    };
    let optimum = minimize(&task)?;
    let concurrence = optimum.best_probe.concurrence()?;
    let row = format!(
        "{},{},{},{},{},{},{},{},{}",
        kind.label(),
        estimated.label(),
        probe_family.label(),
        objective.label(),
        format_sig(optimum.best_bound, 6),
        format_sig(optimum.best_time, 6),
        format_sig(optimum.best_result.fi_single, 6),
        format_sig(optimum.best_result.nu, 6),
        format_sig(concurrence, 6),
    );
    Ok(Report {
        manifest: vec![format!("evaluations = {}", optimum.evaluations_used)],
        header: "hamiltonian,parameter,family,objective,bound,best_time,fi_single,nu,concurrence"
            .into(),
        rows: vec![row],
        console: None,
        failures: 0,
    })
}

fn write_output(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| CliError::Runtime(format!("cannot write to stdout: {e}")))
        }
        Some(path) => {
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, content)
                .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", tmp.display())))?;
            fs::rename(&tmp, path).map_err(|e| {
                CliError::Runtime(format!("cannot move result into {}: {e}", path.display()))
            })
        }
    }
}

fn execute(cli: &Cli) -> CliResult<i32> {
    let settings = resolve_settings(cli)?;
    let (command_label, mut report) = match &cli.command {
        Command::Table1 => ("table1", run_table1(&settings)?),
        Command::ScanTime { grid, objective, kind, estimated } => (
            "scan-time",
            run_scan_time(&settings, grid, objective, kind, estimated)?,
        ),
        Command::ScanCoupling { grid } => ("scan-coupling", run_scan_coupling(&settings, grid)?),
        Command::ScanAlpha { grid, objective, kind, estimated } => (
            "scan-alpha",
            run_scan_alpha(&settings, grid, objective, kind, estimated)?,
        ),
        Command::Single { kind, estimated, family, alpha, objective } => (
            "single",
            run_single(&settings, kind, estimated, family, *alpha, objective)?,
        ),
    };
    if let Some(path) = &cli.out {
        report.manifest.push(format!("out = {}", path.display()));
    }
    write_output(cli.out.as_deref(), &report.render(command_label, &settings))?;
    if cli.out.is_some() {
        if let Some(console) = &report.console {
            // Courtesy summary; the payload already sits in the file.
            let _ = std::io::stdout().lock().write_all(console.as_bytes());
        }
    }
    Ok(if report.failures > 0 { 1 } else { 0 })
}

/// Parses the process arguments, runs the request and returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            diag(format!("error: {msg}"));
            diag("run with --help for usage");
            2
        }
        Err(CliError::Runtime(msg)) => {
            diag(format!("error: {msg}"));
            1
        }
    }
}

/// Keeps the derive in sync with clap's own invariants (debug builds only).
#[allow(dead_code)]
fn assert_cli() {
    Cli::command().debug_assert();
}

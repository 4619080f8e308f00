//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 numerical failure, 4 optimizer cost guard.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::asymptotics::{
    approach_rate, blade_height_bound, epsilon_critical, epsilon_critical_large_beta, epsilon_critical_small_beta,
    flexible_diagnostics, flexible_optimal_layout, rigid_optimal_position, second_order_factor, AsymptoticsError,
    Regime, FLEXIBLE_THRESHOLD,
};
use crate::model::{parse_config, Axis, Config, DeflectionField, EnergyReport, ModelError};
use crate::optimizer::{landscape_csv, optimize_positions, Objective, OptimizerError, Prediction, SearchSpec};
use crate::solver_bi::solve_bidirectional;
use crate::solver_torsion::solve_with_torsion;
use crate::solver_uni::{solve_general, SolverError};
use crate::verify::{verify_with, VerifyError, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_COST: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "stiffplate", version, about = "Stiffened plate compliance analysis and layout optimisation")]
pub struct Cli {
    /// Reserved; every default path is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a configuration and write the field lattice and energy report.
    Analyze {
        #[command(flatten)]
        io: ConfigIo,
        /// Lattice size `NxM`, N points along xi and M along eta, boundaries included.
        #[arg(long, default_value = "21x21")]
        grid: String,
    },
    /// Solve a configuration and report the energy only.
    Energy {
        #[command(flatten)]
        io: ConfigIo,
    },
    /// Search stiffener positions against the exact solver.
    Optimize {
        #[command(flatten)]
        io: ConfigIo,
        /// Stiffener indices to move, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        free: Vec<usize>,
        /// Also write the sampled energy landscape.
        #[arg(long)]
        landscape: bool,
        /// Grid points per free coordinate.
        #[arg(long, default_value_t = crate::optimizer::DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Closed-form asymptotic results.
    Asymptotics {
        #[command(subcommand)]
        query: AsymptoticQuery,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites; all of them when none is named.
    Verify {
        suites: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mutation check: flips the sign of every closed-form kernel in the oracle suite.
        #[arg(long, hide = true)]
        inject_kernel_sign_flip: bool,
    },
}

#[derive(Debug, Args)]
pub struct ConfigIo {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AsymptoticQuery {
    EpsilonCritical {
        #[arg(long)]
        beta: f64,
    },
    RigidOptimum {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        epsilon: f64,
    },
    BladeBound {
        #[arg(long)]
        beta: f64,
    },
    FlexibleLayout {
        #[arg(long)]
        config: PathBuf,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let code = match e {
            SolverError::Numerical { .. } => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<OptimizerError> for Failure {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::Solver(s) => s.into(),
            OptimizerError::CostGuard { .. } => Failure { code: EXIT_COST, message: e.to_string() },
            OptimizerError::NonFinite { .. } => Failure { code: EXIT_NUMERICAL, message: e.to_string() },
            OptimizerError::InvalidSpec(_) => Failure::input(e.to_string()),
        }
    }
}

impl From<AsymptoticsError> for Failure {
    fn from(e: AsymptoticsError) -> Self {
        match e {
            AsymptoticsError::Solver(s) => s.into(),
            AsymptoticsError::Domain(m) => Failure::input(m),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        Failure::input(e.to_string())
    }
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    match &cli.command {
        Command::Analyze { io, grid } => analyze(io, Some(grid)),
        Command::Energy { io } => analyze(io, None),
        Command::Optimize { io, free, landscape, resolution } => optimize(io, free, *landscape, *resolution),
        Command::Asymptotics { query, out } => asymptotics(query, out.as_deref()),
        Command::Verify { suites, out, inject_kernel_sign_flip } => verify(suites, out.as_deref(), *inject_kernel_sign_flip),
    }
}

// ---------------------------------------------------------------------------
// Output.

/// JSON numbers with 17 significant digits; non-finite values become `null`.
struct ScientificFormatter;

impl serde_json::ser::Formatter for ScientificFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ScientificFormatter);
    value.serialize(&mut ser).expect("reports serialise");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn emit(out: Option<&Path>, files: &[(&str, String)]) -> Result<(), Failure> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
        for (name, text) in files {
            let path = dir.join(name);
            write_atomic(&path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
        }
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<Config, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

// ---------------------------------------------------------------------------
// Analysis.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Unidirectional,
    Bidirectional,
    Torsion,
}

impl SolverChoice {
    fn name(self) -> &'static str {
        match self {
            SolverChoice::Unidirectional => "unidirectional",
            SolverChoice::Bidirectional => "bidirectional",
            SolverChoice::Torsion => "torsion",
        }
    }

    fn objective(self) -> Objective {
        match self {
            SolverChoice::Unidirectional => Objective::Uni,
            SolverChoice::Bidirectional => Objective::Bi,
            SolverChoice::Torsion => Objective::Torsion,
        }
    }
}

/// Picks the solver from the stiffener axes and torsional rigidities.
pub fn route(config: &Config) -> Result<SolverChoice, Failure> {
    let has_xi = config.stiffeners.iter().any(|s| s.axis == Axis::XiAligned);
    let has_gc = config.stiffeners.iter().any(|s| s.gc != 0.0);
    match (has_xi, has_gc) {
        (true, true) => Err(Failure::input("torsion supported for single-axis only")),
        (false, true) => Ok(SolverChoice::Torsion),
        (true, false) => Ok(SolverChoice::Bidirectional),
        (false, false) => Ok(SolverChoice::Unidirectional),
    }
}

#[derive(Debug, Serialize)]
struct EnergyOutput<'a> {
    solver: &'static str,
    route: &'static str,
    energy: &'a EnergyReport,
    condition: Option<f64>,
}

fn parse_grid(text: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::input(format!("grid `{text}` is not of the form NxM with N, M >= 2"));
    let (n, m) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    let m: usize = m.trim().parse().map_err(|_| bad())?;
    if n < 2 || m < 2 {
        return Err(bad());
    }
    Ok((n, m))
}

/// Field samples `xi,eta,w`, xi-major, boundaries included.
pub fn field_csv(field: &DeflectionField, n: usize, m: usize) -> Result<String, ModelError> {
    let plate = field.plate;
    let mut out = String::from("xi,eta,w\n");
    for i in 0..n {
        let xi = if i + 1 == n { plate.b } else { plate.b * i as f64 / (n - 1) as f64 };
        for j in 0..m {
            let eta = if j + 1 == m { plate.a } else { plate.a * j as f64 / (m - 1) as f64 };
            // Simply supported edges: exact zeros instead of sin(n pi) round-off.
            let edge = i == 0 || i + 1 == n || j == 0 || j + 1 == m;
            let w = if edge { 0.0 } else { field.evaluate(xi, eta)? };
            let _ = writeln!(out, "{xi:.16e},{eta:.16e},{w:.16e}");
        }
    }
    Ok(out)
}

fn analyze(io: &ConfigIo, grid: Option<&String>) -> Result<i32, Failure> {
    let config = load_config(&io.config)?;
    let lattice = grid.map(|g| parse_grid(g)).transpose()?;
    let choice = route(&config)?;
    let (st, load, plate, trunc) = (&config.stiffeners, &config.load, &config.plate, config.trunc);
    let (field, energy, route_name, condition) = match choice {
        SolverChoice::Unidirectional => {
            let s = solve_general(plate, st, load, trunc)?;
            (s.field, s.energy, "unidirectional", None)
        }
        SolverChoice::Bidirectional => {
            let s = solve_bidirectional(plate, st, load, trunc)?;
            (s.field, s.energy, s.route.name(), s.condition)
        }
        SolverChoice::Torsion => {
            let s = solve_with_torsion(plate, st, load, trunc)?;
            (s.field, s.energy, "torsion", None)
        }
    };
    if !energy.u_total.is_finite() || !field.is_finite() {
        return Err(Failure { code: EXIT_NUMERICAL, message: "solution is not finite".into() });
    }
    let report = to_json(&EnergyOutput { solver: choice.name(), route: route_name, energy: &energy, condition });
    let mut files = vec![("energy.json", report.clone()), ("config.json", config.to_json())];
    if let Some((n, m)) = lattice {
        files.push(("field.csv", field_csv(&field, n, m)?));
    }
    emit(io.out.as_deref(), &files)?;
    println!("{report}");
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Optimisation.

/// Asymptotic layout to compare against, when the configuration has one.
fn prediction_for(config: &Config) -> Option<Prediction> {
    let st = &config.stiffeners;
    if st.is_empty() || st.iter().any(|s| s.axis != Axis::EtaAligned || s.gc != 0.0) {
        return None;
    }
    let plate = &config.plate;
    let eps: Vec<f64> = st.iter().map(|s| s.ei / (plate.a * plate.d)).collect();
    let max_eps = eps.iter().cloned().fold(0.0, f64::max);
    if max_eps <= FLEXIBLE_THRESHOLD {
        let layout = flexible_optimal_layout(&config.load, plate, config.trunc, st.len(), 0).ok()?;
        return Some(Prediction {
            positions: layout.eta_positions,
            regime: Regime::FlexibleFirst,
            within_regime: flexible_diagnostics(max_eps, plate.beta()).within_regime,
        });
    }
    let symmetric_pair = st.len() == 2 && eps[0] == eps[1];
    if symmetric_pair && config.load.single_fundamental().is_some() {
        let r = rigid_optimal_position(eps[0], plate.beta());
        return Some(Prediction {
            positions: r.positions.iter().map(|x| x * plate.b).collect(),
            regime: r.regime,
            within_regime: r.diagnostics.within_regime,
        });
    }
    None
}

fn optimize(io: &ConfigIo, free: &[usize], landscape: bool, resolution: usize) -> Result<i32, Failure> {
    let config = load_config(&io.config)?;
    if landscape && io.out.is_none() {
        return Err(Failure::input("--landscape needs --out"));
    }
    let choice = route(&config)?;
    let mut spec = SearchSpec::new(choice.objective(), free.to_vec()).with_resolution(resolution);
    if let Some(pred) = prediction_for(&config) {
        spec = spec.with_prediction(pred);
    }
    let report = optimize_positions(&spec, &config.plate, &config.stiffeners, &config.load, config.trunc)?;
    let json = to_json(&report);
    let mut files = vec![("optimum.json", json.clone())];
    if landscape {
        files.push(("landscape.csv", landscape_csv(&report)));
    }
    emit(io.out.as_deref(), &files)?;
    println!("{json}");
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Asymptotics.

#[derive(Debug, Serialize)]
struct QueryOutput<T: Serialize> {
    query: &'static str,
    #[serde(flatten)]
    body: T,
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::input(format!("--{name} must be positive and finite")))
    }
}

fn asymptotics(query: &AsymptoticQuery, out: Option<&Path>) -> Result<i32, Failure> {
    let json = match *query {
        AsymptoticQuery::EpsilonCritical { beta } => {
            let beta = positive("beta", beta)?;
            #[derive(Serialize)]
            struct Body {
                beta: f64,
                value: f64,
                large_beta_limit: f64,
                small_beta_limit: f64,
            }
            to_json(&QueryOutput {
                query: "epsilon-critical",
                body: Body {
                    beta,
                    value: epsilon_critical(beta),
                    large_beta_limit: epsilon_critical_large_beta(beta),
                    small_beta_limit: epsilon_critical_small_beta(beta),
                },
            })
        }
        AsymptoticQuery::RigidOptimum { beta, epsilon } => {
            let (beta, epsilon) = (positive("beta", beta)?, positive("epsilon", epsilon)?);
            #[derive(Serialize)]
            struct Body {
                value: f64,
                approach_rate: f64,
                report: crate::asymptotics::AsymptoticReport,
            }
            let report = rigid_optimal_position(epsilon, beta);
            to_json(&QueryOutput {
                query: "rigid-optimum",
                body: Body { value: report.positions[0], approach_rate: approach_rate(), report },
            })
        }
        AsymptoticQuery::BladeBound { beta } => {
            let beta = positive("beta", beta)?;
            #[derive(Serialize)]
            struct Body {
                beta: f64,
                value: f64,
                second_order_factor: f64,
            }
            to_json(&QueryOutput {
                query: "blade-bound",
                body: Body { beta, value: blade_height_bound(beta), second_order_factor: second_order_factor(beta) },
            })
        }
        AsymptoticQuery::FlexibleLayout { ref config } => {
            let config = load_config(config)?;
            let n_eta = config.stiffeners.iter().filter(|s| s.axis == Axis::EtaAligned).count();
            let n_xi = config.stiffeners.len() - n_eta;
            let layout = flexible_optimal_layout(&config.load, &config.plate, config.trunc, n_eta, n_xi)?;
            let eps = config.stiffeners.iter().map(|s| s.ei / (config.plate.a * config.plate.d)).fold(0.0, f64::max);
            #[derive(Serialize)]
            struct Body {
                layout: crate::asymptotics::FlexibleLayout,
                diagnostics: crate::asymptotics::Diagnostics,
            }
            to_json(&QueryOutput {
                query: "flexible-layout",
                body: Body { layout, diagnostics: flexible_diagnostics(eps, config.plate.beta()) },
            })
        }
    };
    emit(out, &[("asymptotics.json", json.clone())])?;
    println!("{json}");
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// Verification.

fn verify(suites: &[String], out: Option<&Path>, flip: bool) -> Result<i32, Failure> {
    let options = VerifyOptions { kernel_sign: if flip { -1.0 } else { 1.0 }, ..VerifyOptions::default() };
    let report = verify_with(suites, &options)?;
    let json = to_json(&report);
    emit(out, &[("verify.json", json.clone())])?;
    println!("{json}");
    for s in &report.suites {
        for c in s.checks.iter().filter(|c| !c.pass) {
            eprintln!("FAIL {}: {} {}", s.suite, c.name, c.detail);
        }
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY })
}

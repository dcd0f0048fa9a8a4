//! Command-line front end. `parse_args` turns argv into a validated
//! [`Command`]; `run` executes it and returns the process exit code
//! (0 success, 1 domain error, 2 usage error).

mod overrides;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cu_sets::{Instance, KnapsackUncertaintyModel, ProcessSpec};
use crate::dro::{assemble_dual, dro_report, StageCost};
use crate::error::Error;
use crate::experiments::{
    run_knapsack_experiment, run_portfolio_experiment, solve_robust_knapsack, CsvTable, KnapsackExperimentConfig,
    KnapsackInstance, PortfolioConfig, SolveMethod, fmt_sig,
};
use crate::lp::write_lp_text;
use crate::ro::{
    center_cu_lhs, center_cu_system, matrix_cu_lhs, matrix_cu_system, matrix_sampled_worst_case,
    nested_worst_case_oracle, polyhedral_cu_dual_system, polyhedral_dual_min, polyhedral_worst_case, ConstraintSystem,
    OracleMode,
};

pub use overrides::{apply_overrides, Override};
pub use verify::{run_suite, Suite, SuiteReport, VerifyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    Reformulate,
    WorstCase,
    SolveKnapsack,
    RunKnapsack,
    SolvePortfolio,
    RunPortfolio,
    Verify,
    Export,
}

impl Verb {
    fn input(self) -> InputNeed {
        match self {
            Verb::Reformulate | Verb::WorstCase | Verb::SolveKnapsack | Verb::Export => InputNeed::Required,
            Verb::RunKnapsack | Verb::SolvePortfolio | Verb::RunPortfolio => InputNeed::Optional,
            Verb::Verify => InputNeed::None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum InputNeed {
    Required,
    Optional,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub verb: Verb,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub overrides: Vec<Override>,
    pub suite: Suite,
    pub instances: usize,
    pub omega: f64,
    pub rho: f64,
    pub samples: usize,
    pub conservative: bool,
}

/// Parse failures. `Help` carries text that should be printed with exit 0.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Help(String),
    UnknownVerb(String),
    MissingInput(String),
    BadOverride(String),
    BadArgument(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            _ => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Help(_) => "help",
            CliError::UnknownVerb(_) => "unknown_verb",
            CliError::MissingInput(_) => "missing_input",
            CliError::BadOverride(_) => "bad_override",
            CliError::BadArgument(_) => "bad_argument",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Help(s)
            | CliError::UnknownVerb(s)
            | CliError::MissingInput(s)
            | CliError::BadOverride(s)
            | CliError::BadArgument(s) => s,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "cuopt", version, about = "Connected-uncertainty robust and distributionally robust optimization")]
struct Cli {
    /// Seed for every random stream (experiments, sampled oracles, verify suites).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker cap; output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    verb: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Write the counterpart constraint system of an instance as JSON.
    Reformulate {
        args: Vec<String>,
        /// Moment instances: one dual copy per stage instead of per conditioning point.
        #[arg(long)]
        conservative: bool,
    },
    /// Evaluate the counterpart and its direct worst-case oracles at the instance decision.
    WorstCase {
        args: Vec<String>,
        /// Boundary samples for sampled oracles.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Solve one binary robust knapsack instance.
    SolveKnapsack { args: Vec<String> },
    /// Run the knapsack radius and λ sweeps.
    RunKnapsack { args: Vec<String> },
    /// Solve both portfolio models at one (ω, ρ) and simulate their wealth.
    SolvePortfolio {
        args: Vec<String>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        omega: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        rho: f64,
    },
    /// Run the portfolio (ω, ρ) grid.
    RunPortfolio { args: Vec<String> },
    /// Run the oracle-equivalence suites and report the largest gaps.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// Write the LP of an instance in the line-oriented text format.
    Export {
        args: Vec<String>,
        #[arg(long)]
        conservative: bool,
    },
}

pub fn usage() -> String {
    use clap::CommandFactory;
    Cli::command().render_help().to_string()
}

pub fn parse_args<I, S>(argv: I) -> std::result::Result<Command, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    if argv.is_empty() {
        return Err(CliError::BadArgument("no command given".into()));
    }
    let full = std::iter::once("cuopt".to_string()).chain(argv);
    let cli = Cli::try_parse_from(full).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                CliError::Help(e.render().to_string())
            }
            ErrorKind::InvalidSubcommand => CliError::UnknownVerb(e.render().to_string()),
            _ => CliError::BadArgument(e.render().to_string()),
        }
    })?;
    let mut cmd = Command {
        verb: Verb::Verify,
        input: None,
        out: cli.out,
        seed: cli.seed,
        threads: cli.threads,
        format: cli.format,
        overrides: Vec::new(),
        suite: Suite::All,
        instances: 50,
        omega: 0.0,
        rho: 0.0,
        samples: 10_000,
        conservative: false,
    };
    if cmd.threads == Some(0) {
        return Err(CliError::BadArgument("--threads must be at least 1".into()));
    }
    let args = match cli.verb {
        Sub::Reformulate { args, conservative } => {
            cmd.verb = Verb::Reformulate;
            cmd.conservative = conservative;
            args
        }
        Sub::WorstCase { args, samples } => {
            cmd.verb = Verb::WorstCase;
            cmd.samples = samples;
            args
        }
        Sub::SolveKnapsack { args } => {
            cmd.verb = Verb::SolveKnapsack;
            args
        }
        Sub::RunKnapsack { args } => {
            cmd.verb = Verb::RunKnapsack;
            args
        }
        Sub::SolvePortfolio { args, omega, rho } => {
            cmd.verb = Verb::SolvePortfolio;
            cmd.omega = omega;
            cmd.rho = rho;
            args
        }
        Sub::RunPortfolio { args } => {
            cmd.verb = Verb::RunPortfolio;
            args
        }
        Sub::Verify { suite, instances } => {
            cmd.verb = Verb::Verify;
            cmd.suite = suite;
            cmd.instances = instances;
            Vec::new()
        }
        Sub::Export { args, conservative } => {
            cmd.verb = Verb::Export;
            cmd.conservative = conservative;
            args
        }
    };
    for a in args {
        if a.contains('=') {
            cmd.overrides.push(Override::parse(&a).map_err(CliError::BadOverride)?);
        } else if cmd.input.is_none() && cmd.verb.input() != InputNeed::None {
            cmd.input = Some(PathBuf::from(a));
        } else {
            return Err(CliError::BadArgument(format!("unexpected argument '{a}'")));
        }
    }
    match (&cmd.input, cmd.verb.input()) {
        (None, InputNeed::Required) => return Err(CliError::MissingInput("this command needs an input file".into())),
        (Some(p), _) if !p.is_file() => {
            return Err(CliError::MissingInput(format!("input file '{}' does not exist", p.display())))
        }
        _ => {}
    }
    if cmd.format == Some(Format::Csv) && matches!(cmd.verb, Verb::Reformulate | Verb::WorstCase | Verb::Verify | Verb::Export) {
        return Err(CliError::BadArgument("this command only writes JSON or LP text".into()));
    }
    Ok(cmd)
}

/// Failures while running a parsed command.
#[derive(Debug)]
enum RunError {
    Domain(Error),
    Usage(CliError),
    Io(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Domain(e)
    }
}

fn error_json(code: &str, message: &str) -> String {
    json!({ "error": { "code": code, "message": message } }).to_string()
}

/// Executes a command, writing output to `--out` or stdout and diagnostics to stderr.
pub fn run(cmd: &Command) -> i32 {
    let result = match cmd.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cmd)),
            Err(e) => Err(RunError::Io(format!("thread pool: {e}"))),
        },
        None => execute(cmd),
    };
    let Outcome { text, failure } = match result {
        Ok(o) => o,
        Err(e) => return report(e),
    };
    let written = match &cmd.out {
        Some(p) => std::fs::write(p, text.as_bytes()).map_err(|e| format!("writing '{}': {e}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| format!("stdout: {e}"))
        }
    };
    match (written, failure) {
        (Err(m), _) => report(RunError::Io(m)),
        (Ok(()), Some(f)) => report(RunError::Domain(f)),
        (Ok(()), None) => 0,
    }
}

fn report(e: RunError) -> i32 {
    let (code, message, exit) = match &e {
        RunError::Domain(err) => (err.code(), err.to_string(), 1),
        RunError::Usage(u) => (u.code(), u.message().to_string(), u.exit_code()),
        RunError::Io(m) => ("io", m.clone(), 1),
    };
    eprintln!("{}", error_json(code, &message));
    exit
}

/// argv (including the program name) to exit code.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = args.into_iter().map(Into::into).skip(1).collect();
    let empty = argv.is_empty();
    match parse_args(argv) {
        Ok(cmd) => run(&cmd),
        Err(CliError::Help(text)) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(e.code(), e.message()));
            if empty {
                eprint!("{}", usage());
            } else if matches!(e, CliError::BadArgument(_) | CliError::UnknownVerb(_)) {
                eprint!("{}", e.message());
            }
            e.exit_code()
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

/// Input JSON (or `default` when no file is given) with overrides applied.
fn load_json(cmd: &Command, default: Option<Value>) -> Result<Value, RunError> {
    let mut v = match &cmd.input {
        Some(p) => read_json(p)?,
        None => default.ok_or_else(|| RunError::Usage(CliError::MissingInput("input file required".into())))?,
    };
    apply_overrides(&mut v, &cmd.overrides).map_err(|m| RunError::Usage(CliError::BadOverride(m)))?;
    Ok(v)
}

fn read_json(p: &Path) -> Result<Value, RunError> {
    let text = std::fs::read_to_string(p).map_err(|e| RunError::Io(format!("reading '{}': {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Domain(Error::InvalidInstance(format!("{}: {e}", p.display()))))
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T, RunError> {
    serde_json::from_value(v).map_err(|e| RunError::Domain(Error::InvalidInstance(format!("{what}: {e}"))))
}

fn load_instance(cmd: &Command) -> Result<Instance, RunError> {
    let v = load_json(cmd, None)?;
    Ok(Instance::from_json(&v.to_string())?)
}

struct Outcome {
    text: String,
    failure: Option<Error>,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Outcome { text, failure: None }
    }
}

fn execute(cmd: &Command) -> Result<Outcome, RunError> {
    let text = match cmd.verb {
        Verb::Reformulate => reformulate(cmd),
        Verb::WorstCase => worst_case(cmd),
        Verb::SolveKnapsack => solve_knapsack(cmd),
        Verb::RunKnapsack => run_knapsack(cmd),
        Verb::SolvePortfolio | Verb::RunPortfolio => portfolio(cmd),
        Verb::Verify => {
            let rep = run_suite(cmd.suite, cmd.seed.unwrap_or(0), cmd.instances)?;
            let failed: Vec<&str> = rep.suites.iter().filter(|s| !s.pass).map(|s| s.suite.as_str()).collect();
            // the report is written either way so the gaps can be inspected
            let failure = (!failed.is_empty())
                .then(|| Error::NumericalFailure(format!("verify suites failed: {}", failed.join(", "))));
            return Ok(Outcome { text: pretty(&rep), failure });
        }
        Verb::Export => export(cmd),
    }?;
    Ok(text.into())
}

fn costs_of(inst: &Instance) -> Result<Vec<crate::dro::CostSpec>, Error> {
    inst.stage_costs()
}

/// The counterpart constraint system of an instance. Moment instances give
/// their dual program: one copy per conditioning point unless `conservative`.
pub fn counterpart_system(inst: &Instance, conservative: bool) -> Result<ConstraintSystem, Error> {
    Ok(match &inst.process {
        ProcessSpec::EllipsoidalCenter(p) => center_cu_system(p, inst.budget()?),
        ProcessSpec::EllipsoidalMatrix(p) => matrix_cu_system(p, inst.budget()?)?,
        ProcessSpec::PolyhedralRhs(p) => polyhedral_cu_dual_system(inst.decision()?, p, inst.budget()?)?,
        ProcessSpec::Moment(p) => {
            let costs = costs_of(inst)?;
            let refs: Vec<&dyn StageCost> = costs.iter().map(|c| c as &dyn StageCost).collect();
            assemble_dual(p, &refs, !conservative)?.to_system(inst.budget)
        }
    })
}

/// Counterpart value at the instance decision next to its direct oracles.
/// `samples` and `seed` drive the Monte Carlo oracles.
pub fn worst_case_report(inst: &Instance, samples: usize, seed: u64) -> Result<Value, Error> {
    let mut v = match &inst.process {
        ProcessSpec::EllipsoidalCenter(p) => {
            let x = inst.decision()?;
            let (lhs, rec) = center_cu_lhs(x, p)?;
            let exact = if p.dim() == 1 { Some(nested_worst_case_oracle(x, p, OracleMode::Exact1d)?) } else { None };
            let sampled = nested_worst_case_oracle(x, p, OracleMode::MonteCarlo { samples, seed })?;
            json!({ "kind": inst.process.kind(), "lhs": lhs, "exact1d": exact, "sampled": sampled, "samples": samples, "recursion": rec })
        }
        ProcessSpec::EllipsoidalMatrix(p) => {
            let x = inst.decision()?;
            let (lhs, n) = matrix_cu_lhs(x, p)?;
            let sampled = matrix_sampled_worst_case(x, p, samples, seed)?;
            json!({ "kind": inst.process.kind(), "lhs": lhs, "sign_vector": n, "sampled": sampled, "samples": samples })
        }
        ProcessSpec::PolyhedralRhs(p) => {
            let x = inst.decision()?;
            let (primal, path) = polyhedral_worst_case(x, p)?;
            let (dual, q) = polyhedral_dual_min(x, p)?;
            json!({ "kind": inst.process.kind(), "primal": primal, "dual": dual, "path": path, "q": q })
        }
        ProcessSpec::Moment(p) => {
            let costs = costs_of(inst)?;
            let refs: Vec<&dyn StageCost> = costs.iter().map(|c| c as &dyn StageCost).collect();
            let rep = dro_report(p, &refs)?;
            json!({ "kind": inst.process.kind(), "report": rep })
        }
    };
    if let Some(b) = inst.budget {
        v["budget"] = json!(b);
    }
    Ok(v)
}

fn reformulate(cmd: &Command) -> Result<String, RunError> {
    let inst = load_instance(cmd)?;
    Ok(counterpart_system(&inst, cmd.conservative)?.to_json())
}

fn worst_case(cmd: &Command) -> Result<String, RunError> {
    let inst = load_instance(cmd)?;
    Ok(pretty(&worst_case_report(&inst, cmd.samples, cmd.seed.unwrap_or(0))?))
}

/// One knapsack instance file: the instance plus its `method`.
#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct KnapsackFile {
    schema_version: u32,
    c1: crate::numerics::DenseVector,
    c2: crate::numerics::DenseVector,
    budget: f64,
    model: KnapsackUncertaintyModel,
    mode: crate::experiments::ComparisonMode,
    #[serde(default)]
    method: SolveMethod,
}

/// Parses and validates a knapsack instance document.
pub fn knapsack_from_value(v: Value) -> Result<(KnapsackInstance, SolveMethod), Error> {
    let f: KnapsackFile =
        serde_json::from_value(v).map_err(|e| Error::InvalidInstance(format!("knapsack instance: {e}")))?;
    if f.schema_version != 1 {
        return Err(Error::InvalidInstance(format!("unsupported schema_version {}", f.schema_version)));
    }
    let m = f.model;
    let model = KnapsackUncertaintyModel::new(m.mu1, m.phi, m.psi, m.chol, m.r1, m.r2)?;
    Ok((KnapsackInstance::new(f.c1, f.c2, f.budget, model, f.mode)?, f.method))
}

fn solve_knapsack(cmd: &Command) -> Result<String, RunError> {
    let (inst, method) = knapsack_from_value(load_json(cmd, None)?)?;
    let sol = solve_robust_knapsack(&inst, method)?;
    match cmd.format.unwrap_or(Format::Json) {
        Format::Json => Ok(pretty(&sol)),
        Format::Csv => {
            let bits = |x: &[u8]| x.iter().map(|b| char::from(b'0' + b)).collect::<String>();
            let mut t = CsvTable::new(&["x1", "x2", "objective", "lhs", "nodes"]);
            t.push(vec![bits(&sol.x1), bits(&sol.x2), fmt_sig(sol.objective), fmt_sig(sol.lhs), sol.nodes.to_string()]);
            Ok(t.to_csv())
        }
    }
}

fn run_knapsack(cmd: &Command) -> Result<String, RunError> {
    let default = serde_json::to_value(KnapsackExperimentConfig::default()).expect("config serializes");
    let mut cfg: KnapsackExperimentConfig = from_value(load_json(cmd, Some(default))?, "knapsack config")?;
    if let Some(s) = cmd.seed {
        cfg.seed = s;
    }
    let res = run_knapsack_experiment(&cfg)?;
    Ok(match cmd.format.unwrap_or(Format::Csv) {
        Format::Csv => res.to_csv(),
        Format::Json => pretty(&res),
    })
}

fn portfolio(cmd: &Command) -> Result<String, RunError> {
    let default = serde_json::to_value(PortfolioConfig::default()).expect("config serializes");
    let mut cfg: PortfolioConfig = from_value(load_json(cmd, Some(default))?, "portfolio config")?;
    if let Some(s) = cmd.seed {
        cfg.seed = s;
    }
    if cmd.verb == Verb::SolvePortfolio {
        cfg.omega_grid = vec![cmd.omega];
        cfg.rho_grid = vec![cmd.rho];
    }
    let res = run_portfolio_experiment(&cfg)?;
    Ok(match cmd.format.unwrap_or(Format::Csv) {
        Format::Csv => res.to_csv(),
        Format::Json => pretty(&res),
    })
}

fn export(cmd: &Command) -> Result<String, RunError> {
    let inst = load_instance(cmd)?;
    match &inst.process {
        ProcessSpec::PolyhedralRhs(p) => Ok(write_lp_text(&p.joint_lp(inst.decision()?)?)),
        ProcessSpec::Moment(p) => {
            let costs = costs_of(&inst)?;
            let refs: Vec<&dyn StageCost> = costs.iter().map(|c| c as &dyn StageCost).collect();
            let dual = assemble_dual(p, &refs, !cmd.conservative)?;
            let mut text = String::new();
            for block in &dual.psd_columns {
                let names: Vec<&str> = block.iter().flatten().map(|&c| dual.problem.col_names[c].as_str()).collect();
                text.push_str(&format!("# psd {} {}\n", block.len(), names.join(" ")));
            }
            text.push_str(&write_lp_text(&dual.problem));
            Ok(text)
        }
        _ => Err(Error::UnsupportedModel(format!("'{}' has cone rows; use reformulate", inst.process.kind())).into()),
    }
}

//! Command-line front end. `run` returns the process exit code:
//! 0 when every verdict passes, 1 on a failed or inconclusive verdict,
//! 2 on usage, config or runtime errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::harness::{
    self, read_json, ConditionsConfig, CorrelationConfig, ExperimentConfig, ExperimentKind, ExperimentReport,
    ReportFormat, Verdict, VerdictStatus,
};
use crate::recurrence::scale_to_measure;
use crate::schedule::RadiusSchedule;
use crate::systems::{random_prime, Orbit, OrbitMode, Seed, SystemDescriptor, SystemKind};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "reclab",
    version,
    about = "Shrinking-target recurrence experiments for expanding maps"
)]
pub struct Cli {
    /// Worker threads for ensemble runs [default: all cores]
    #[arg(long, global = true, env = "RECLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the first N orbit points of one seed
    Simulate(SimulateArgs),
    /// Run a divergent-schedule experiment and judge the hit ratios
    VerifySbc(RunArgs),
    /// Run a convergent-schedule experiment and count late hits
    VerifyConvergence(RunArgs),
    /// Estimate correlation decay for a pair of observables
    EstimateCorrelations(CorrelationArgs),
    /// Check partition regularity, invariance and expansion for one system
    CheckConditions(ConditionsArgs),
    /// Solve mu(R(x, l r)) = gamma for the scale l
    ScaleTarget(ScaleArgs),
    /// Summarize or convert a saved report
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON experiment manifest; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    /// power:A[@C],..  const:R,..  list:R,R,..  (axes joined by ':')  or inline JSON
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    ensemble: Option<usize>,
    /// Master rng seed
    #[arg(long)]
    seed: Option<u64>,
    /// float64, exact_modular or high_precision
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    precision_bits: Option<u32>,
    /// Explicit seed, repeatable ("0.3", "1/3", "1/7,2/9")
    #[arg(long)]
    x0: Vec<String>,
    /// Use measure-matched targets on the thinned schedule
    #[arg(long)]
    hat: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Validate and print the resolved plan without running
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    system: String,
    /// Seed; sampled from the invariant measure when omitted
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, default_value_t = 10)]
    n: u64,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct CorrelationArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    n_max: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// monte_carlo or birkhoff
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct ConditionsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    /// Deepest cylinder level for the growth check
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[arg(long)]
    system: String,
    /// Center, comma-separated per axis
    #[arg(long)]
    x: String,
    /// Base radii; one value applies to every axis
    #[arg(long)]
    r: String,
    #[arg(long)]
    gamma: f64,
    /// Print the full result as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A report written by verify-sbc, verify-convergence, estimate-correlations or check-conditions
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::VerifySbc(a) => verify(a, false),
        Command::VerifyConvergence(a) => verify(a, true),
        Command::EstimateCorrelations(a) => correlations(a),
        Command::CheckConditions(a) => conditions(a),
        Command::ScaleTarget(a) => scale_target(a),
        Command::Report(a) => report(a),
    }
}

fn load_object(path: Option<&Path>) -> Result<Map<String, Value>> {
    match path {
        None => Ok(Map::new()),
        Some(p) => match read_json(p)? {
            Value::Object(m) => Ok(m),
            _ => Err(Error::Config(format!("{}: config must be a JSON object", p.display()))),
        },
    }
}

fn parse_system(s: &str) -> Result<SystemKind> {
    s.parse().map_err(|e: Error| Error::Config(e.to_string()))
}

/// Resolves a mode name plus optional bit budget for a single orbit.
fn parse_mode(sys: &SystemDescriptor, name: Option<&str>, bits: Option<u32>, n: u64) -> Result<OrbitMode> {
    let Some(name) = name else {
        return Ok(sys.default_mode());
    };
    let default_bits = (sys.lyapunov() / std::f64::consts::LN_2 * n as f64).ceil() as u32 + 64;
    OrbitMode::parse(name, bits.unwrap_or(default_bits))
}

/// `power:0.5`, `power:0.2,0.3`, `power:0.5@2` (exponent @ scale),
/// `const:0.1`, `list:0.5,0.25,0.1` (axes joined by ':'), or inline JSON.
pub fn parse_schedule(spec: &str) -> Result<RadiusSchedule> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let s: RadiusSchedule = serde_json::from_str(spec).map_err(|e| Error::Config(format!("schedule: {e}")))?;
        s.validate()?;
        return Ok(s);
    }
    let (family, body) = spec.split_once(':').ok_or_else(|| {
        Error::Config(format!(
            "schedule '{spec}' has no family prefix (power:, const: or list:)"
        ))
    })?;
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("schedule value '{t}': {e}")))
    };
    match family {
        "power" => {
            let mut exps = Vec::new();
            let mut scales = Vec::new();
            for term in body.split(',') {
                let (a, c) = term.split_once('@').unwrap_or((term, "1"));
                exps.push(num(a)?);
                scales.push(num(c)?);
            }
            RadiusSchedule::power_law(&exps, &scales)
        }
        "const" => RadiusSchedule::constant(&body.split(',').map(num).collect::<Result<Vec<_>>>()?),
        "list" => RadiusSchedule::explicit(
            body.split(',')
                .map(|t| t.split(':').map(num).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?,
        ),
        other => Err(Error::Config(format!(
            "unknown schedule family '{other}' (expected power, const or list)"
        ))),
    }
}

fn parse_coords(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number '{t}': {e}")))
        })
        .collect()
}

fn experiment_config(a: &RunArgs, convergence: bool) -> Result<ExperimentConfig> {
    let mut m = load_object(a.config.as_deref())?;
    let file_kind = m.get("experiment").cloned();
    let mut set = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    if let Some(s) = &a.system {
        set("system", json!(parse_system(s)?));
    }
    if let Some(s) = &a.schedule {
        set(
            "schedule",
            serde_json::to_value(parse_schedule(s)?).expect("schedule serializes"),
        );
    }
    if let Some(n) = a.n {
        set("n", json!(n));
    }
    if let Some(e) = a.ensemble {
        set("ensemble", json!(e));
    }
    if let Some(s) = a.seed {
        set("seed", json!(s));
    }
    if let Some(mode) = &a.mode {
        set("mode", json!(mode));
    }
    if let Some(b) = a.precision_bits {
        set("precision_bits", json!(b));
    }
    if !a.x0.is_empty() {
        set("x0", json!(a.x0));
    }
    let kind = match (convergence, file_kind.as_ref().and_then(Value::as_str)) {
        (true, Some(k)) if k != "convergence" => {
            return Err(Error::Config(format!(
                "config describes a '{k}' experiment; use verify-sbc"
            )))
        }
        (false, Some("convergence")) => {
            return Err(Error::Config(
                "config describes a convergence experiment; use verify-convergence".into(),
            ))
        }
        (true, _) => ExperimentKind::Convergence,
        (false, _) if a.hat => ExperimentKind::Hat,
        (false, Some("hat")) => ExperimentKind::Hat,
        (false, _) => ExperimentKind::Sbc,
    };
    if a.hat && convergence {
        return Err(Error::Config("--hat applies to verify-sbc only".into()));
    }
    set("experiment", json!(kind));
    if let Some(out) = &a.out {
        let format = a.format.map(ReportFormat::from).unwrap_or(ReportFormat::Json);
        set("output", json!({ "path": out, "format": format }));
    }
    ExperimentConfig::from_value(Value::Object(m))
}

fn verify(a: RunArgs, convergence: bool) -> Result<i32> {
    let cfg = experiment_config(&a, convergence)?;
    if a.dry_run {
        say(&format!(
            "{}\n",
            harness::report_to_json(&harness::plan(&cfg)?)?.trim_end()
        ));
        return Ok(EXIT_PASS);
    }
    let start = Instant::now();
    let report = if convergence {
        harness::run_convergence_experiment(&cfg)?
    } else {
        harness::run_sbc_experiment(&cfg)?
    };
    let elapsed = start.elapsed().as_secs_f64();
    match &cfg.output {
        Some(o) => harness::export_report(&report, o.format, &o.path)?,
        None => match a.format.unwrap_or(Format::Json) {
            Format::Json => say(&harness::report_to_json(&report)?),
            Format::Csv => say(&harness::report_to_csv(&report)?),
        },
    }
    summarize(&report.verdicts);
    eprintln!(
        "{} seeds, {} map steps, {:.2} s wall-clock",
        report.aggregates.seeds, report.aggregates.iterations, elapsed
    );
    Ok(exit_code(report.passed()))
}

fn exit_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn summarize(verdicts: &[Verdict]) {
    for v in verdicts {
        let tag = match v.status {
            VerdictStatus::Pass => "PASS",
            VerdictStatus::Fail => "FAIL",
            VerdictStatus::Inconclusive => "INCONCLUSIVE",
        };
        eprintln!("{tag:<12} {}: {}", v.name, v.detail);
    }
}

/// Writes to stdout; a closed pipe (`reclab ... | head`) is not an error.
fn say(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => harness::write_bytes(p, text.as_bytes()),
        None => {
            say(text);
            Ok(())
        }
    }
}

fn correlations(a: CorrelationArgs) -> Result<i32> {
    let mut m = load_object(a.config.as_deref())?;
    if let Some(s) = &a.system {
        m.insert("system".into(), json!(parse_system(s)?));
    }
    if let Some(n) = a.n_max {
        m.insert("n_max".into(), json!(n));
    }
    if let Some(s) = a.samples {
        m.insert("samples".into(), json!(s));
    }
    if let Some(e) = &a.estimator {
        let est: crate::correlations::Estimator = e.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
        m.insert("estimator".into(), json!(est));
    }
    if let Some(s) = a.seed {
        m.insert("seed".into(), json!(s));
    }
    let cfg = CorrelationConfig::from_value(Value::Object(m))?;
    if a.dry_run {
        say(&format!("{}\n", harness::report_to_json(&cfg)?.trim_end()));
        return Ok(EXIT_PASS);
    }
    let start = Instant::now();
    let report = harness::run_correlation_study(&cfg)?;
    let out = a.out.or_else(|| cfg.output.as_ref().map(|o| o.path.clone()));
    emit(&harness::report_to_json(&report)?, out.as_deref())?;
    summarize(&report.verdicts);
    if let Some(f) = &report.fit {
        eprintln!("fitted decay rate {:.5} over lags {:?}", f.rate, f.lags);
    }
    eprintln!("{:.2} s wall-clock", start.elapsed().as_secs_f64());
    Ok(exit_code(report.passed()))
}

fn conditions(a: ConditionsArgs) -> Result<i32> {
    let mut m = load_object(a.config.as_deref())?;
    if let Some(s) = &a.system {
        m.insert("system".into(), json!(parse_system(s)?));
    }
    if let Some(d) = a.depth {
        m.insert("depth".into(), json!(d));
    }
    if let Some(s) = a.seed {
        m.insert("seed".into(), json!(s));
    }
    let cfg = ConditionsConfig::from_value(Value::Object(m))?;
    if a.dry_run {
        say(&format!("{}\n", harness::report_to_json(&cfg)?.trim_end()));
        return Ok(EXIT_PASS);
    }
    let start = Instant::now();
    let report = harness::run_conditions(&cfg)?;
    let out = a.out.or_else(|| cfg.output.as_ref().map(|o| o.path.clone()));
    emit(&harness::report_to_json(&report)?, out.as_deref())?;
    summarize(&report.verdicts);
    eprintln!("{:.2} s wall-clock", start.elapsed().as_secs_f64());
    Ok(exit_code(report.passed()))
}

fn simulate(a: SimulateArgs) -> Result<i32> {
    let sys = SystemDescriptor::new(parse_system(&a.system)?);
    let mode = parse_mode(&sys, a.mode.as_deref(), a.precision_bits, a.n)?;
    let seed = match &a.x0 {
        Some(s) => s.parse::<Seed>()?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let q = match mode {
                OrbitMode::ExactModular => random_prime(&mut rng, 61)?,
                _ => 0,
            };
            sys.sample_seed(&mode, &mut rng, q)?
        }
    };
    let mut orbit = Orbit::new(sys, &seed, mode, a.n)?;
    let mut y = vec![0.0; sys.dim()];
    let mut out = String::new();
    while orbit.advance_into(&mut y) {
        match orbit.modular_state() {
            Some(m) => out.push_str(&m.to_string()),
            None => out.push_str(&y.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
        }
        out.push('\n');
    }
    say(&out);
    Ok(EXIT_PASS)
}

fn scale_target(a: ScaleArgs) -> Result<i32> {
    let sys = SystemDescriptor::new(parse_system(&a.system)?);
    let x = Point::new(&parse_coords(&a.x)?)?;
    let mut r = parse_coords(&a.r)?;
    if r.len() == 1 {
        r = vec![r[0]; sys.dim()];
    }
    let t = scale_to_measure(&sys, &x, &r, a.gamma)?;
    if a.json {
        say(&format!("{}\n", harness::report_to_json(&t)?.trim_end()));
    } else {
        say(&format!("l = {}\n", t.scale));
        say(&format!(
            "xi = {}\n",
            t.xi.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        ));
        say(&format!("mu = {}\n", t.achieved));
        say(&format!("residual = {:e}\n", t.residual));
    }
    Ok(EXIT_PASS)
}

fn report(a: ReportArgs) -> Result<i32> {
    let value = read_json(&a.input)?;
    let verdicts: Vec<Verdict> = serde_json::from_value(value.get("verdicts").cloned().unwrap_or(Value::Null))
        .map_err(|e| Error::Config(format!("{}: no verdict list: {e}", a.input.display())))?;
    let is_experiment = value.get("per_seed").is_some();
    match a.format {
        Some(Format::Csv) => {
            if !is_experiment {
                return Err(Error::Config(
                    "CSV export is available for experiment reports only".into(),
                ));
            }
            let r: ExperimentReport =
                serde_json::from_value(value).map_err(|e| Error::Config(format!("{}: {e}", a.input.display())))?;
            emit(&harness::report_to_csv(&r)?, a.out.as_deref())?;
        }
        Some(Format::Json) => emit(&harness::report_to_json(&value)?, a.out.as_deref())?,
        None => {}
    }
    summarize(&verdicts);
    let pass = if is_experiment {
        harness::all_pass(&verdicts)
    } else {
        verdicts.iter().all(|v| v.status == VerdictStatus::Pass)
    };
    Ok(exit_code(pass))
}

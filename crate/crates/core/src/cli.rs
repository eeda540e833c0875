//! The `cdp` command line.
//!
//! Every subcommand prints one JSON document:
//! `{"command", "inputs", "outputs", "warnings"}`. `--pretty` renders the same
//! content as an aligned table. Floats are rounded to 9 significant digits
//! unless `--full-precision` is given.
//!
//! Exit codes: 0 on success, 1 on invalid input or domain errors, 2 when a
//! `verify` suite finds a counterexample.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::composition::{advanced_composition, basic_composition, compose_cdp, CompositionInput};
use crate::distributions::{
    approx_max_divergence, kl_divergence, max_divergence, privacy_loss_rv, DiscreteDistribution,
};
use crate::error::{domain, Error, Result};
use crate::group_privacy::{group_cdp_closed_form, group_cdp_recursion, GroupBoundResult};
use crate::ledger::{exceedance_probability, record, record_at, to_approx_dp, Ledger};
use crate::mechanisms::{
    calibrate_gaussian_for_cdp, calibrate_gaussian_for_dp, gaussian_cdp, sample_gaussian_loss,
    CdpBound, DpBound, GaussianMechanismSpec, RNG_ALGORITHM,
};
use crate::reduction::{
    antipodalize, dp_to_cdp, drv_kl_bound, kl_symmetry_gap, search_extremal_pair, verify_antipodal,
};
use crate::subgaussian::tail_bound;
use crate::suites::{run_suite, Suite};

/// Seeds must be passed as flags; this variable is refused if set.
pub const SEED_ENV_VAR: &str = "CDP_ACCOUNTANT_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_SUITE_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cdp",
    version,
    about = "Concentrated differential privacy accounting"
)]
struct Cli {
    /// Human-readable table instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    /// Print floats with shortest round-trip precision instead of 9 significant digits.
    #[arg(long, global = true)]
    full_precision: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MechanismKind {
    Gaussian,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GroupMethodArg {
    Recursion,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Reduction,
    Composition,
    Gaussian,
    Group,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Reduction => Suite::Reduction,
            SuiteArg::Composition => Suite::Composition,
            SuiteArg::Gaussian => Suite::Gaussian,
            SuiteArg::Group => Suite::Group,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Noise scale for a target CDP or (epsilon, delta) guarantee.
    Calibrate(CalibrateArgs),
    /// CDP bound implied by epsilon-DP.
    Convert {
        #[arg(long)]
        epsilon: f64,
        /// Also search numerically for the pair with the largest KL at this epsilon.
        #[arg(long)]
        search_extremal: bool,
    },
    /// Compose a JSON array of bounds.
    Compose {
        #[arg(long = "in")]
        input: PathBuf,
        /// Convert the composed bound to (epsilon, delta)-DP at this delta.
        #[arg(long)]
        to_dp: Option<f64>,
        /// Also apply advanced composition at this delta (epsilon entries only).
        #[arg(long)]
        advanced: Option<f64>,
    },
    /// Advanced composition of k (epsilon, delta')-DP mechanisms.
    Advanced {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        delta_prime: f64,
    },
    /// Group-privacy bound for groups of s rows.
    Group {
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        s: u64,
        #[arg(long, value_enum, default_value = "recursion")]
        method: GroupMethodArg,
        /// Raise tau to sqrt(2 mu) when mu > tau^2/2.
        #[arg(long)]
        inflate: bool,
        /// Also report group-then-compose and compose-then-group for k mechanisms.
        #[arg(long)]
        compose_k: Option<u64>,
    },
    /// Probability bound that the ledger's cumulative loss reaches a threshold.
    Tail {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        threshold: f64,
    },
    /// Append a charge to a ledger file, creating it if needed.
    Record(RecordArgs),
    /// Run a property suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Monte Carlo samples of the Gaussian mechanism's privacy loss.
    Simulate {
        #[arg(long)]
        sensitivity: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Divergences and privacy loss variable of two distribution files.
    Loss {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// Also compute the delta-approximate max divergence.
        #[arg(long)]
        delta: Option<f64>,
        /// Write the loss atoms as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split two distribution files into an antipodal pair.
    Antipodal {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("target").required(true).multiple(false)))]
struct CalibrateArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismKind,
    #[arg(long)]
    sensitivity: f64,
    /// Target "mu,tau".
    #[arg(long, group = "target")]
    cdp: Option<String>,
    /// Target "epsilon,delta".
    #[arg(long, group = "target")]
    dp: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("charge").required(true).multiple(false)))]
struct RecordArgs {
    #[arg(long)]
    ledger: PathBuf,
    #[arg(long)]
    label: String,
    /// Charge "mu,tau".
    #[arg(long, group = "charge")]
    cdp: Option<String>,
    /// Charge an epsilon-DP mechanism through its CDP bound.
    #[arg(long, group = "charge")]
    epsilon: Option<f64>,
    /// Charge a Gaussian mechanism "sensitivity,sigma".
    #[arg(long, group = "charge")]
    gaussian: Option<String>,
    #[arg(long)]
    timestamp: Option<String>,
}

/// Structured result of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandResult {
    pub command: String,
    pub inputs: Value,
    pub outputs: Value,
    pub warnings: Vec<String>,
}

/// Everything the binary needs to finish: text for stdout/stderr and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub result: Option<CommandResult>,
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
}

enum Failure {
    Invalid(String),
    Suite(CommandResult),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    RunOutput {
                        result: None,
                        stdout: text,
                        stderr: String::new(),
                        exit_code: EXIT_OK,
                    }
                }
                _ => RunOutput {
                    result: None,
                    stdout: String::new(),
                    stderr: text,
                    exit_code: EXIT_INVALID,
                },
            };
        }
    };
    if std::env::var_os(SEED_ENV_VAR).is_some() {
        return RunOutput {
            result: None,
            stdout: String::new(),
            stderr: format!(
                "error: {SEED_ENV_VAR} is not supported; pass --seed on the command line\n"
            ),
            exit_code: EXIT_INVALID,
        };
    }
    let (pretty, full) = (cli.pretty, cli.full_precision);
    match execute(cli.command) {
        Ok(result) => {
            let stdout = render(&result, pretty, full);
            RunOutput {
                result: Some(result),
                stdout,
                stderr: String::new(),
                exit_code: EXIT_OK,
            }
        }
        Err(Failure::Invalid(msg)) => RunOutput {
            result: None,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            exit_code: EXIT_INVALID,
        },
        Err(Failure::Suite(result)) => {
            let stdout = render(&result, pretty, full);
            RunOutput {
                result: Some(result),
                stdout,
                stderr: "error: property suite failed\n".into(),
                exit_code: EXIT_SUITE_FAILED,
            }
        }
    }
}

fn parse_pair(name: &str, text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        return Err(domain(format!(
            "--{name} expects two comma-separated numbers, got {text:?}"
        )));
    };
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| domain(format!("--{name}: {s:?} is not a number")))
    };
    Ok((parse(a)?, parse(b)?))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| domain(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn result(command: &str, inputs: Value, outputs: Value, warnings: Vec<String>) -> CommandResult {
    CommandResult {
        command: command.to_string(),
        inputs,
        outputs,
        warnings,
    }
}

/// Entry of a `compose` input file.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum ComposeEntry {
    Cdp(CdpBound),
    Dp { epsilon: f64 },
}

fn execute(command: Command) -> std::result::Result<CommandResult, Failure> {
    match command {
        Command::Calibrate(args) => calibrate(args).map_err(Into::into),
        Command::Convert {
            epsilon,
            search_extremal,
        } => {
            let bound = dp_to_cdp(epsilon)?;
            let mut outputs = to_value(&bound);
            outputs["drv_kl_bound"] = json!(drv_kl_bound(epsilon));
            let mut warnings = Vec::new();
            if search_extremal {
                outputs["extremal"] = to_value(&search_extremal_pair(epsilon)?);
                warnings.push(
                    "extremal search covers two-outcome pairs only; no tightness is claimed".into(),
                );
            }
            Ok(result(
                "convert",
                json!({ "epsilon": epsilon, "search_extremal": search_extremal }),
                outputs,
                warnings,
            ))
        }
        Command::Compose {
            input,
            to_dp,
            advanced,
        } => compose(&input, to_dp, advanced).map_err(Into::into),
        Command::Advanced {
            k,
            epsilon,
            delta,
            delta_prime,
        } => {
            let bound = advanced_composition(k, epsilon, delta_prime, delta)?;
            let basic = basic_composition(k, epsilon)?;
            let mut outputs = to_value(&bound);
            outputs["basic"] = to_value(&basic);
            Ok(result(
                "advanced",
                json!({ "k": k, "epsilon": epsilon, "delta": delta, "delta_prime": delta_prime }),
                outputs,
                vec![],
            ))
        }
        Command::Group {
            mu,
            tau,
            s,
            method,
            inflate,
            compose_k,
        } => group(mu, tau, s, method, inflate, compose_k).map_err(Into::into),
        Command::Tail { ledger, threshold } => {
            let l = Ledger::load(&ledger)?;
            let p = exceedance_probability(&l, threshold)?;
            let mut warnings = Vec::new();
            if threshold <= l.total().mu {
                warnings.push(
                    "threshold is at or below the expected loss; the bound is vacuous".into(),
                );
            }
            Ok(result(
                "tail",
                json!({ "ledger": ledger, "threshold": threshold }),
                json!({ "probability": p, "total": l.total(), "entries": l.entries().len() }),
                warnings,
            ))
        }
        Command::Record(args) => record_cmd(args).map_err(Into::into),
        Command::Verify {
            suite,
            seed,
            trials,
        } => {
            let suite = Suite::from(suite);
            let trials = trials.unwrap_or(suite.default_trials());
            let report = run_suite(suite, seed, trials)?;
            let passed = report.passed();
            let r = result(
                "verify",
                json!({ "suite": suite, "seed": seed, "trials": trials }),
                json!({ "passed": passed, "report": report }),
                vec![],
            );
            if passed {
                Ok(r)
            } else {
                Err(Failure::Suite(r))
            }
        }
        Command::Simulate {
            sensitivity,
            sigma,
            n,
            seed,
            out,
        } => simulate(sensitivity, sigma, n, seed, &out).map_err(Into::into),
        Command::Loss { p, q, delta, out } => {
            loss(&p, &q, delta, out.as_deref()).map_err(Into::into)
        }
        Command::Antipodal { p, q } => {
            let d: DiscreteDistribution = read_json(&p)?;
            let d_prime: DiscreteDistribution = read_json(&q)?;
            let pair = antipodalize(&d, &d_prime)?;
            let mut warnings = Vec::new();
            let empty = pair
                .split_map
                .iter()
                .filter(|e| e.empty_split && e.split_outcome.is_some())
                .count();
            if empty > 0 {
                warnings.push(format!("{empty} split outcome(s) carry zero mass"));
            }
            if pair.epsilon == 0.0 {
                warnings.push("distributions are identical; returned unchanged".into());
            }
            Ok(result(
                "antipodal",
                json!({ "p": p, "q": q }),
                json!({
                    "pair": pair,
                    "valid": verify_antipodal(&pair),
                    "kl_before": kl_divergence(&d, &d_prime)?,
                    "kl_after": kl_divergence(&pair.m, &pair.m_prime)?,
                    "kl_symmetry_gap": kl_symmetry_gap(&pair)?,
                }),
                warnings,
            ))
        }
    }
}

fn calibrate(args: CalibrateArgs) -> Result<CommandResult> {
    let MechanismKind::Gaussian = args.mechanism;
    let sensitivity = args.sensitivity;
    if let Some(text) = &args.cdp {
        let (mu, tau) = parse_pair("cdp", text)?;
        let target = CdpBound::new(mu, tau)?;
        let sigma = calibrate_gaussian_for_cdp(sensitivity, &target)?;
        let achieved = gaussian_cdp(&GaussianMechanismSpec::new(sensitivity, sigma)?);
        return Ok(result(
            "calibrate",
            json!({ "mechanism": "gaussian", "sensitivity": sensitivity, "cdp": target }),
            json!({ "sigma": sigma, "achieved": achieved }),
            vec![],
        ));
    }
    let text = args
        .dp
        .as_deref()
        .ok_or_else(|| domain("one of --cdp or --dp is required"))?;
    let (epsilon, delta) = parse_pair("dp", text)?;
    let target = DpBound::new(epsilon, delta)?;
    let sigma = calibrate_gaussian_for_dp(sensitivity, &target)?;
    let achieved = gaussian_cdp(&GaussianMechanismSpec::new(sensitivity, sigma)?);
    Ok(result(
        "calibrate",
        json!({ "mechanism": "gaussian", "sensitivity": sensitivity, "dp": target }),
        json!({ "sigma": sigma, "achieved": achieved }),
        vec![],
    ))
}

fn compose(path: &Path, to_dp: Option<f64>, advanced: Option<f64>) -> Result<CommandResult> {
    let entries: Vec<ComposeEntry> = read_json(path)?;
    let bounds = entries
        .iter()
        .map(|e| match *e {
            ComposeEntry::Cdp(b) => Ok(b),
            ComposeEntry::Dp { epsilon } => dp_to_cdp(epsilon),
        })
        .collect::<Result<Vec<_>>>()?;
    let composed = compose_cdp(&CompositionInput { bounds });
    let mut outputs = json!({ "composed": composed, "count": entries.len() });
    let mut warnings = Vec::new();
    if let Some(delta) = to_dp {
        outputs["dp"] = to_value(&to_approx_dp(&composed, delta)?);
    }
    if let Some(delta) = advanced {
        let epsilons = entries
            .iter()
            .map(|e| match *e {
                ComposeEntry::Dp { epsilon } => Ok(epsilon),
                ComposeEntry::Cdp(_) => Err(domain(
                    "--advanced needs every entry to be an epsilon entry",
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        if epsilons.is_empty() {
            return Err(domain("--advanced needs at least one entry"));
        }
        let eps = epsilons.iter().copied().fold(0.0, f64::max);
        if epsilons.iter().any(|&e| e != eps) {
            warnings.push(format!(
                "epsilons differ; advanced composition uses the largest, {eps}"
            ));
        }
        outputs["advanced"] = to_value(&advanced_composition(
            epsilons.len() as u64,
            eps,
            0.0,
            delta,
        )?);
    }
    Ok(result(
        "compose",
        json!({ "in": path, "to_dp": to_dp, "advanced": advanced }),
        outputs,
        warnings,
    ))
}

fn group_bound(
    bound: &CdpBound,
    s: u64,
    method: GroupMethodArg,
    inflate: bool,
) -> Result<GroupBoundResult> {
    match method {
        GroupMethodArg::Recursion => group_cdp_recursion(bound, s, inflate),
        GroupMethodArg::ClosedForm => group_cdp_closed_form(bound, s, inflate),
    }
}

fn group(
    mu: f64,
    tau: f64,
    s: u64,
    method: GroupMethodArg,
    inflate: bool,
    compose_k: Option<u64>,
) -> Result<CommandResult> {
    let bound = CdpBound::new(mu, tau)?;
    let r = group_bound(&bound, s, method, inflate)?;
    let mut warnings = r.warnings.clone();
    let mut outputs = to_value(&r);
    if let Some(k) = compose_k {
        if k == 0 {
            return Err(domain("--compose-k must be at least 1"));
        }
        let group_then_compose = compose_cdp(&vec![r.bound; k as usize].into());
        let composed = compose_cdp(&vec![bound; k as usize].into());
        let compose_then_group = group_bound(&composed, s, method, inflate)?;
        outputs["orders"] = json!({
            "k": k,
            "group_then_compose": group_then_compose,
            "compose_then_group": compose_then_group.bound,
        });
        warnings.push("both orders are reported; they are not asserted to agree".into());
    }
    Ok(result(
        "group",
        json!({
            "mu": mu, "tau": tau, "s": s, "inflate": inflate, "compose_k": compose_k,
            "method": match method { GroupMethodArg::Recursion => "recursion", GroupMethodArg::ClosedForm => "closed-form" },
        }),
        outputs,
        warnings,
    ))
}

fn record_cmd(args: RecordArgs) -> Result<CommandResult> {
    let bound = if let Some(text) = &args.cdp {
        let (mu, tau) = parse_pair("cdp", text)?;
        CdpBound::new(mu, tau)?
    } else if let Some(eps) = args.epsilon {
        dp_to_cdp(eps)?
    } else {
        let text = args
            .gaussian
            .as_deref()
            .ok_or_else(|| domain("no charge given"))?;
        let (sensitivity, sigma) = parse_pair("gaussian", text)?;
        gaussian_cdp(&GaussianMechanismSpec::new(sensitivity, sigma)?)
    };
    let ledger = if args.ledger.exists() {
        Ledger::load(&args.ledger)?
    } else {
        Ledger::new()
    };
    let updated = match &args.timestamp {
        Some(ts) => record_at(&ledger, &args.label, bound, ts),
        None => record(&ledger, &args.label, bound),
    };
    updated.save(&args.ledger)?;
    Ok(result(
        "record",
        json!({ "ledger": args.ledger, "label": args.label, "bound": bound, "timestamp": args.timestamp }),
        json!({ "total": updated.total(), "entries": updated.entries().len() }),
        vec![],
    ))
}

fn simulate(
    sensitivity: f64,
    sigma: f64,
    n: usize,
    seed: u64,
    out: &Path,
) -> Result<CommandResult> {
    let spec = GaussianMechanismSpec::new(sensitivity, sigma)?;
    let samples = sample_gaussian_loss(&spec, n, seed)?;
    let bound = gaussian_cdp(&spec);

    let write = || -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["loss"])?;
        for x in &samples {
            w.write_record([x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| domain(format!("cannot write {}: {e}", out.display())))?;

    let count = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / count;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    let mut tails = Vec::new();
    if bound.tau > 0.0 {
        for t in [1.0, 2.0, 3.0] {
            let threshold = bound.mu + t * bound.tau;
            let frac = samples.iter().filter(|&&x| x >= threshold).count() as f64 / count;
            tails.push(json!({ "t": t, "threshold": threshold, "empirical": frac, "bound": tail_bound(bound.tau, t)? }));
        }
    }
    Ok(result(
        "simulate",
        json!({ "sensitivity": sensitivity, "sigma": sigma, "n": n, "seed": seed, "out": out }),
        json!({
            "generator": RNG_ALGORITHM,
            "mean": mean,
            "std": var.sqrt(),
            "expected_mean": bound.mu,
            "expected_std": bound.tau,
            "tails": tails,
        }),
        vec![],
    ))
}

fn loss(p: &Path, q: &Path, delta: Option<f64>, out: Option<&Path>) -> Result<CommandResult> {
    let d: DiscreteDistribution = read_json(p)?;
    let d_prime: DiscreteDistribution = read_json(q)?;
    let mut warnings = Vec::new();
    let mut outputs = Map::new();
    if let Some(delta) = delta {
        let approx = approx_max_divergence(&d, &d_prime, delta)?;
        if approx.heuristic {
            warnings.push("support exceeds the exhaustive-search limit; delta divergence is a greedy lower bound".into());
        }
        outputs.insert("approx_max_divergence".into(), to_value(&approx));
    }
    let rv = privacy_loss_rv(&d, &d_prime)?;
    outputs.insert("kl".into(), json!(kl_divergence(&d, &d_prime)?));
    outputs.insert("kl_reverse".into(), json!(kl_divergence(&d_prime, &d)?));
    outputs.insert(
        "max_divergence".into(),
        json!(max_divergence(&d, &d_prime)?),
    );
    outputs.insert(
        "max_divergence_reverse".into(),
        json!(max_divergence(&d_prime, &d)?),
    );
    outputs.insert("loss_atoms".into(), to_value(&rv.atoms()));
    if let Some(path) = out {
        let file = fs::File::create(path)
            .map_err(|e| domain(format!("cannot write {}: {e}", path.display())))?;
        rv.write_csv(file).map_err(|e| domain(e.to_string()))?;
    }
    Ok(result(
        "loss",
        json!({ "p": p, "q": q, "delta": delta, "out": out }),
        Value::Object(outputs),
        warnings,
    ))
}

/// Rounds every float in `v` to 9 significant digits.
pub fn round_floats(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
            json!(rounded)
        }
        Value::Array(items) => Value::Array(items.iter().map(round_floats).collect()),
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), round_floats(v)))
                .collect(),
        ),
        other => other.clone(),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) if !map.is_empty() => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, rows);
            }
        }
        Value::Array(items) if !items.is_empty() => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

fn render(result: &CommandResult, pretty: bool, full_precision: bool) -> String {
    let mut value = to_value(result);
    if !full_precision {
        value = round_floats(&value);
    }
    if !pretty {
        return serde_json::to_string(&value).expect("serializable") + "\n";
    }
    let mut out = format!("command: {}\n", result.command);
    for section in ["inputs", "outputs"] {
        let mut rows = Vec::new();
        flatten("", &value[section], &mut rows);
        out.push_str(&format!("\n{section}:\n"));
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            out.push_str(&format!("  {k:<width$}  {v}\n"));
        }
    }
    if !result.warnings.is_empty() {
        out.push_str("\nwarnings:\n");
        for w in &result.warnings {
            out.push_str(&format!("  - {w}\n"));
        }
    }
    out
}

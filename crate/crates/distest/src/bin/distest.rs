//! Command-line front end: simulate machine samples, run a single
//! estimation, calibrate the smoothness test, sweep risk over a grid of
//! sample sizes, and run the hard-instance indistinguishability experiment.
//!
//! Experiment configs are TOML or JSON files holding an `ExperimentSpec`
//! (picked by file extension). The environment variable `DISTEST_SEED`
//! overrides every seed, whether it came from a flag or a config file. Any
//! invariant violation exits nonzero with a message on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use distest::channel::EncoderConfig;
use distest::coeff::CoeffSeq;
use distest::error::{Error, Result};
use distest::estimators::{EstimateReport, ProcContext};
use distest::harness::{
    csv_string, generate_signal, json_string, run_calibration, run_indistinguishability,
    run_method, run_risk, EmitFormat, ExperimentSpec, MachineRule, RiskNorm, SignalSpec,
    SCHEMA_VERSION,
};
use distest::model::{simulate, LocalSample, ModelConfig};
use distest::signal::BesovKind;

#[derive(Parser)]
#[command(
    name = "distest",
    version,
    about = "Distributed estimation under bit constraints: simulate, estimate, calibrate, sweep"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw the noisy machine samples for one replicate of a signal rule.
    Simulate(SimulateArgs),
    /// Run one estimation procedure from a config file and report the fit.
    Estimate(EstimateArgs),
    /// Monte Carlo error rates of the composite smoothness test.
    CalibrateTest(CalibrateArgs),
    /// Risk-versus-n experiment from a config file (CSV or JSON out).
    Rates(RatesArgs),
    /// Hard-instance likelihood-ratio experiment at one machine.
    HardInstance(HardInstanceArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Observations per machine (power of two).
    #[arg(long)]
    n: u64,
    /// Number of machines.
    #[arg(long)]
    m: usize,
    /// Deepest wavelet level of the coefficient ladder.
    #[arg(long, default_value_t = 8)]
    j_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which replicate's streams to draw.
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// Truth rule, e.g. "zero", "besov:s=1,radius=1,kind=2inf,fill=0.9",
    /// "hard-l2:s=1,radius=1", "hard-linf:s=1,radius=1", "selfsim:s=1,
    /// radius=1,eps=0.5,j0=1,rho=2", "sep:s1=0.5,s2=1,radius=1,p=0.25,
    /// level=1", or "file:signal.json".
    #[arg(long, default_value = "zero")]
    signal: String,
    /// Per-machine bit budget; only hard-instance rules need it.
    #[arg(long)]
    budget: Option<f64>,
    /// Keep only this machine's sample.
    #[arg(long)]
    machine: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// ExperimentSpec file (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's signal rule (same grammar as `simulate`).
    #[arg(long)]
    signal: Option<String>,
    /// Grid point to run (defaults to the config's first n).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: usize,
    /// Rough smoothness of the alternatives.
    #[arg(long, default_value_t = 0.5)]
    s1: f64,
    /// Smoothness of the null ball.
    #[arg(long, default_value_t = 1.0)]
    s2: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.04)]
    alpha: f64,
    /// Wavelet level carrying the alternatives' energy.
    #[arg(long, default_value_t = 1)]
    level: usize,
    #[arg(long, default_value_t = 2000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    /// ExperimentSpec file (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    /// csv (default) or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output file; falls back to the config's `out`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MachineArg {
    /// Fixed machine count.
    #[arg(long)]
    m: Option<usize>,
    /// Machine count as a power of n: m = round(n^p).
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct HardInstanceArgs {
    #[arg(long)]
    n: u64,
    #[command(flatten)]
    machines: MachineArg,
    #[arg(long, default_value_t = 1.0)]
    s1: f64,
    #[arg(long, default_value_t = 2.0)]
    s2: f64,
    /// Per-machine bit budget; defaults to n^(1/(1+2 s1)) * log2(n).
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// `DISTEST_SEED` beats flags and config files when set.
fn effective_seed(seed: u64) -> Result<u64> {
    match std::env::var("DISTEST_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::InvalidParam(format!("DISTEST_SEED = {text:?} is not a u64"))),
        Err(_) => Ok(seed),
    }
}

fn parse_kv(body: &str) -> Result<std::collections::HashMap<String, String>> {
    let mut map = std::collections::HashMap::new();
    for piece in body.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let (k, v) = piece
            .split_once('=')
            .ok_or_else(|| Error::Malformed(format!("expected key=value, got {piece:?}")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn want<T: std::str::FromStr>(
    map: &std::collections::HashMap<String, String>,
    key: &str,
) -> Result<T> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::Malformed(format!("signal rule is missing {key}=...")))?;
    raw.parse::<T>()
        .map_err(|_| Error::Malformed(format!("could not parse {key}={raw}")))
}

fn want_or<T: std::str::FromStr>(
    map: &std::collections::HashMap<String, String>,
    key: &str,
    fallback: T,
) -> Result<T> {
    match map.get(key) {
        None => Ok(fallback),
        Some(raw) => raw
            .parse::<T>()
            .map_err(|_| Error::Malformed(format!("could not parse {key}={raw}"))),
    }
}

/// Parses the `--signal` mini-grammar into a [`SignalSpec`].
fn parse_signal_rule(rule: &str) -> Result<SignalSpec> {
    let (head, body) = match rule.split_once(':') {
        Some((h, b)) => (h.trim(), b.trim()),
        None => (rule.trim(), ""),
    };
    match head {
        "zero" => Ok(SignalSpec::Zero),
        "besov" => {
            let kv = parse_kv(body)?;
            let ball = match kv.get("kind").map(String::as_str).unwrap_or("2inf") {
                "2inf" => BesovKind::TwoInf,
                "infinf" => BesovKind::InfInf,
                other => {
                    return Err(Error::Malformed(format!(
                        "kind={other} is not 2inf or infinf"
                    )))
                }
            };
            Ok(SignalSpec::BesovRandom {
                s: want(&kv, "s")?,
                radius: want_or(&kv, "radius", 1.0)?,
                ball,
                fill: want_or(&kv, "fill", 0.9)?,
            })
        }
        "hard-l2" => {
            let kv = parse_kv(body)?;
            Ok(SignalSpec::HardL2 {
                s: want(&kv, "s")?,
                radius: want_or(&kv, "radius", 1.0)?,
            })
        }
        "hard-linf" => {
            let kv = parse_kv(body)?;
            Ok(SignalSpec::HardLinf {
                s: want(&kv, "s")?,
                radius: want_or(&kv, "radius", 1.0)?,
                position: match kv.get("k") {
                    None => None,
                    Some(raw) => Some(raw.parse().map_err(|_| {
                        Error::Malformed(format!("could not parse k={raw}"))
                    })?),
                },
            })
        }
        "selfsim" => {
            let kv = parse_kv(body)?;
            Ok(SignalSpec::SelfSimilar {
                s: want(&kv, "s")?,
                radius: want_or(&kv, "radius", 1.0)?,
                eps: want_or(&kv, "eps", 0.5)?,
                j0: want_or(&kv, "j0", 1)?,
                rho: want_or(&kv, "rho", 2)?,
            })
        }
        "sep" => {
            let kv = parse_kv(body)?;
            Ok(SignalSpec::Separated {
                s1: want(&kv, "s1")?,
                s2: want(&kv, "s2")?,
                radius: want_or(&kv, "radius", 1.0)?,
                p: want(&kv, "p")?,
                level: want_or(&kv, "level", 1)?,
            })
        }
        "file" => {
            let text = std::fs::read_to_string(body)?;
            let coeffs: CoeffSeq = serde_json::from_str(&text)?;
            Ok(SignalSpec::Fixed { coeffs })
        }
        other => Err(Error::Malformed(format!(
            "unknown signal rule {other:?}; see --help for the grammar"
        ))),
    }
}

/// Loads an `ExperimentSpec`, dispatching on the file extension.
fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let mut spec: ExperimentSpec = match ext.as_str() {
        "toml" => toml::from_str(&text)?,
        "json" => serde_json::from_str(&text)?,
        other => {
            return Err(Error::Malformed(format!(
                "config must end in .toml or .json, got {other:?}"
            )))
        }
    };
    spec.seed = effective_seed(spec.seed)?;
    Ok(spec)
}

fn write_out(body: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, body)?),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SimulateOutput {
    schema_version: u32,
    n: u64,
    m: usize,
    j_max: usize,
    seed: u64,
    replicate: u64,
    f0: CoeffSeq,
    samples: Vec<LocalSample>,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let seed = effective_seed(args.seed)?;
    let cfg = ModelConfig::new(args.n, args.m, args.j_max, seed)?;
    let signal = parse_signal_rule(&args.signal)?;
    let f0 = generate_signal(
        &signal,
        args.n,
        args.m,
        args.j_max,
        seed,
        args.budget,
        args.replicate,
    )?;
    let mut samples = simulate(&f0, &cfg, args.replicate)?;
    if let Some(machine) = args.machine {
        if machine >= args.m {
            return Err(Error::InvalidParam(format!(
                "machine {machine} out of range for m = {}",
                args.m
            )));
        }
        samples = vec![samples[machine].clone()];
    }
    let body = serde_json::to_string_pretty(&SimulateOutput {
        schema_version: SCHEMA_VERSION,
        n: args.n,
        m: args.m,
        j_max: args.j_max,
        seed,
        replicate: args.replicate,
        f0,
        samples,
    })?;
    write_out(&body, args.out.as_deref())
}

#[derive(Serialize)]
struct EstimateOutput {
    schema_version: u32,
    method: String,
    n: u64,
    m: usize,
    replicate: u64,
    norm: RiskNorm,
    risk: f64,
    estimate: EstimateReport,
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let mut spec = load_spec(&args.config)?;
    if let Some(rule) = &args.signal {
        spec.signal = parse_signal_rule(rule)?;
    }
    spec.validate()?;
    let n = args.n.unwrap_or(spec.n_grid[0]);
    let m = spec.machines.resolve(n);
    let cfg = ModelConfig::new(n, m, spec.j_max, spec.seed)?;
    let budget = spec.budget.as_ref().map(|b| b.resolve(n));
    let rep = args.replicate;
    let f0 = generate_signal(&spec.signal, n, m, spec.j_max, spec.seed, budget, rep)?;
    let samples = simulate(&f0, &cfg, rep)?;
    let enc = EncoderConfig::new(n, spec.approx_order)?;
    let ctx = ProcContext::with_encoder(cfg, enc, rep);
    let estimate = run_method(&spec.method, &samples, budget, &ctx)?;
    let risk = match spec.norm {
        RiskNorm::L2Sq => estimate.fhat.l2_dist_sq(&f0)?,
        RiskNorm::Linf => {
            let mut diff = CoeffSeq::zeros(spec.j_max);
            for t in 1..=diff.len() {
                diff.set_flat(t, estimate.fhat.get_flat(t)? - f0.get_flat(t)?)?;
            }
            diff.haar_sup_norm()
        }
    };
    let body = serde_json::to_string_pretty(&EstimateOutput {
        schema_version: SCHEMA_VERSION,
        method: spec.method.id().to_string(),
        n,
        m,
        replicate: rep,
        norm: spec.norm,
        risk,
        estimate,
    })?;
    write_out(&body, args.out.as_deref())
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let seed = effective_seed(args.seed)?;
    let report = run_calibration(
        args.n,
        args.m,
        args.s1,
        args.s2,
        args.radius,
        args.alpha,
        args.level,
        args.reps,
        seed,
    )?;
    write_out(&serde_json::to_string_pretty(&report)?, args.out.as_deref())
}

fn cmd_rates(args: &RatesArgs) -> Result<()> {
    let spec = load_spec(&args.config)?;
    let format = match args.format.as_str() {
        "csv" => EmitFormat::Csv,
        "json" => EmitFormat::Json,
        other => {
            return Err(Error::InvalidParam(format!(
                "format must be csv or json, got {other:?}"
            )))
        }
    };
    let report = run_risk(&spec)?;
    let body = match format {
        EmitFormat::Csv => csv_string(&report)?,
        EmitFormat::Json => json_string(&report)?,
    };
    let out = args
        .out
        .clone()
        .or_else(|| spec.out.as_ref().map(PathBuf::from));
    write_out(&body, out.as_deref())
}

fn cmd_hard_instance(args: &HardInstanceArgs) -> Result<()> {
    let seed = effective_seed(args.seed)?;
    let machines = match (args.machines.m, args.machines.p) {
        (Some(m), None) => MachineRule::Fixed { m },
        (None, Some(p)) => MachineRule::Power { p },
        _ => unreachable!("clap enforces exactly one of --m/--p"),
    };
    let budget = args.budget.unwrap_or_else(|| {
        let nf = args.n as f64;
        (nf.log2() / (1.0 + 2.0 * args.s1)).exp2() * nf.log2()
    });
    let report =
        run_indistinguishability(args.n, machines, args.s1, args.s2, budget, args.reps, seed)?;
    write_out(&serde_json::to_string_pretty(&report)?, args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Estimate(args) => cmd_estimate(args),
        Cmd::CalibrateTest(args) => cmd_calibrate(args),
        Cmd::Rates(args) => cmd_rates(args),
        Cmd::HardInstance(args) => cmd_hard_instance(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

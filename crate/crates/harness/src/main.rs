//! `tomo`: simulate counts, reconstruct states, evaluate precision theory,
//! and run the built-in comparison, sweep, and qudit studies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qst_core::fuzzy::fuzzy_protocol;
use qst_core::infotheory::{expected_loss, information_matrix, loss_function, precision_profile};
use qst_core::mle::{reconstruct_pure, ReconstructionOptions};
use qst_core::protocols::{mub_protocol, pauli_protocol};
use qst_core::quantum::fidelity;
use qst_core::sampling::{simulate_counts, simulate_noisy_counts, CountsRecord, SeedSpec};
use qst_core::{MeasurementProtocol, StateVector};

use qst_harness::config::{ExperimentConfig, ExperimentKind};
use qst_harness::emit::{aggregate_csv, emit_results};
use qst_harness::experiments;
use qst_harness::{HarnessError, Result};

#[derive(Parser)]
#[command(name = "tomo", version, about = "Quantum state tomography simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw multinomial counts for a protocol and a pure state
    Simulate(SimulateArgs),
    /// Maximum-likelihood reconstruction from recorded counts
    Reconstruct(ReconstructArgs),
    /// Precision profile and loss moments for a protocol and state
    Theory(TheoryArgs),
    /// Standard-vs-fuzzy comparison on fixed probe states
    Compare(RunArgs),
    /// Loss-functional sweep over dimension and readout level
    Sweep(RunArgs),
    /// Qudit dephasing study with MUB protocols
    Qudit(QuditArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct SimulateArgs {
    /// Protocol: pauli:<n_qubits>, mub:<dim>, or a protocol JSON file
    #[arg(long)]
    protocol: String,
    /// State file: JSON array of [re, im] amplitude pairs
    #[arg(long)]
    state: PathBuf,
    /// Total shots, split evenly over settings
    #[arg(long)]
    shots: u64,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial index within the seed's stream
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Optional noise block (JSON); counts are drawn from the noisy state
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Output directory (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    protocol: String,
    /// Counts record JSON produced by `simulate`
    #[arg(long)]
    counts: PathBuf,
    /// Optional noise block (JSON); reconstructs under the fuzzy model
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Optional true state; adds a fidelity field to the output
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    protocol: String,
    #[arg(long)]
    state: PathBuf,
    /// Sample size the information matrix is evaluated at
    #[arg(long)]
    shots: u64,
    /// Optional noise block (JSON); evaluates the fuzzy protocol
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON; defaults are built in
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count (Haar-state count for sweeps)
    #[arg(long)]
    trials: Option<usize>,
    /// Override the total shots per trial
    #[arg(long)]
    shots: Option<u64>,
    /// Output directory (default results/<experiment>)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct QuditArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Full-scale run: 10^6-shot trials, 200 of them
    #[arg(long)]
    paper_scale: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate(args) => simulate_cmd(args),
        Cmd::Reconstruct(args) => reconstruct_cmd(args),
        Cmd::Theory(args) => theory_cmd(args),
        Cmd::Compare(args) => run_cmd(ExperimentKind::Compare, args, false),
        Cmd::Sweep(args) => run_cmd(ExperimentKind::Sweep, args, false),
        Cmd::Qudit(args) => run_cmd(ExperimentKind::QuditDephasing, args.run, args.paper_scale),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

/// pauli:<n_qubits>, mub:<dim>, or a path to a protocol JSON file.
fn load_protocol(spec: &str) -> Result<MeasurementProtocol> {
    if let Some(n) = spec.strip_prefix("pauli:") {
        let n: usize = n.parse().map_err(config_err)?;
        return pauli_protocol(n).map_err(config_err);
    }
    if let Some(d) = spec.strip_prefix("mub:") {
        let d: usize = d.parse().map_err(config_err)?;
        return mub_protocol(d).map_err(config_err);
    }
    let text = read_file(Path::new(spec))?;
    MeasurementProtocol::from_json(&text).map_err(config_err)
}

fn load_state(path: &Path) -> Result<StateVector> {
    let pairs: Vec<(f64, f64)> =
        serde_json::from_str(&read_file(path)?).map_err(config_err)?;
    StateVector::from_pairs(&pairs).map_err(config_err)
}

fn load_noise(path: &Path) -> Result<qst_core::noise::NoiseConfig> {
    serde_json::from_str(&read_file(path)?).map_err(config_err)
}

/// Writes to `<dir>/<stem>.<ext>` when an output directory is given,
/// otherwise prints to stdout.
fn deliver(out: &Option<PathBuf>, stem: &str, format: OutputFormat, json: String, csv: String) -> Result<()> {
    let (ext, contents) = match format {
        OutputFormat::Json => ("json", json),
        OutputFormat::Csv => ("csv", csv),
    };
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.clone(),
                source,
            })?;
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, contents).map_err(|source| HarnessError::Io { path, source })
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn simulate_cmd(args: SimulateArgs) -> Result<()> {
    let protocol = load_protocol(&args.protocol)?;
    let state = load_state(&args.state)?;
    let seed = SeedSpec::new(args.seed, args.trial);
    let counts = match &args.noise {
        Some(path) => {
            let channel = load_noise(path)?
                .build_channel(protocol.dim())
                .map_err(config_err)?;
            simulate_noisy_counts(&protocol, &state, &channel, args.shots, seed)?
        }
        None => simulate_counts(&protocol, &state, args.shots, seed)?,
    };
    let json = serde_json::to_string_pretty(&counts).map_err(config_err)? + "\n";
    let mut csv = String::from("row,setting,count\n");
    for (i, row) in protocol.rows().iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", i, row.setting_id, counts.counts[i]));
    }
    deliver(&args.out, "counts", args.format, json, csv)
}

#[derive(Serialize)]
struct ReconstructOutput {
    estimate: Vec<(f64, f64)>,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
}

fn reconstruct_cmd(args: ReconstructArgs) -> Result<()> {
    let mut protocol = load_protocol(&args.protocol)?;
    if let Some(path) = &args.noise {
        let channel = load_noise(path)?
            .build_channel(protocol.dim())
            .map_err(config_err)?;
        protocol = fuzzy_protocol(&protocol, &channel)?;
    }
    let counts: CountsRecord =
        serde_json::from_str(&read_file(&args.counts)?).map_err(config_err)?;
    let rec = reconstruct_pure(&protocol, &counts, &ReconstructionOptions::default())?;
    let fid = match &args.truth {
        Some(path) => Some(fidelity(&load_state(path)?, &rec.estimate)?),
        None => None,
    };
    let output = ReconstructOutput {
        estimate: rec.estimate.amps().iter().map(|z| (z.re, z.im)).collect(),
        log_likelihood: rec.log_likelihood,
        iterations: rec.iterations,
        converged: rec.converged,
        residual: rec.residual,
        fidelity: fid,
    };
    let json = serde_json::to_string_pretty(&output).map_err(config_err)? + "\n";
    let mut csv = String::from("index,re,im\n");
    for (i, (re, im)) in output.estimate.iter().enumerate() {
        csv.push_str(&format!("{i},{re},{im}\n"));
    }
    deliver(&args.out, "reconstruction", args.format, json, csv)
}

#[derive(Serialize)]
struct TheoryOutput {
    nu: usize,
    d: Vec<f64>,
    mean_loss: f64,
    var_loss: f64,
    #[serde(rename = "L")]
    l: f64,
}

fn theory_cmd(args: TheoryArgs) -> Result<()> {
    let mut protocol = load_protocol(&args.protocol)?;
    if let Some(path) = &args.noise {
        let channel = load_noise(path)?
            .build_channel(protocol.dim())
            .map_err(config_err)?;
        protocol = fuzzy_protocol(&protocol, &channel)?;
    }
    let state = load_state(&args.state)?;
    let h = information_matrix(&protocol, &state, args.shots)?;
    let dp = precision_profile(&h)?;
    let moments = expected_loss(&dp);
    let output = TheoryOutput {
        nu: dp.nu(),
        d: dp.d.clone(),
        mean_loss: moments.mean,
        var_loss: moments.variance,
        l: loss_function(&dp, args.shots),
    };
    let json = serde_json::to_string_pretty(&output).map_err(config_err)? + "\n";
    let mut csv = String::from("j,d_j\n");
    for (j, d) in output.d.iter().enumerate() {
        csv.push_str(&format!("{j},{d}\n"));
    }
    deliver(&args.out, "theory", args.format, json, csv)
}

fn run_cmd(kind: ExperimentKind, args: RunArgs, paper_scale: bool) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::from_json(&read_file(path)?)?;
            if cfg.experiment != kind {
                return Err(HarnessError::Config(format!(
                    "config is for {}, not {}",
                    cfg.experiment.name(),
                    kind.name()
                )));
            }
            cfg
        }
        None if paper_scale => ExperimentConfig::paper_scale_qudit(),
        None => ExperimentConfig::default_for(kind),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        if kind == ExperimentKind::Sweep {
            cfg.n_haar_states = trials;
        } else {
            cfg.n_trials = trials;
        }
    }
    if let Some(shots) = args.shots {
        cfg.n_total = shots;
    }

    let result = experiments::run(&cfg)?;

    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results").join(kind.name()));
    let written = emit_results(&result, &dir)?;
    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    match args.format {
        OutputFormat::Json => {
            let summary =
                serde_json::to_string_pretty(&result.aggregates).map_err(config_err)?;
            println!("{summary}");
        }
        OutputFormat::Csv => print!("{}", aggregate_csv(&result)),
    }
    Ok(())
}

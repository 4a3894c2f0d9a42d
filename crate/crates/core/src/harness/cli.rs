//! Command line interface for the experiment runner.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use crate::analytics::{crb, loe_db, mqbd, FimInputs, LoeMode};
use crate::constellation::geometry_jacobian_with_clock;
use crate::error::{Error, Result};
use crate::harness::{
    build_interference_for_cli, config::ExperimentConfig, config::ExperimentKind,
    run_interference_sweep, run_loe_experiment, write_iq_f64le, write_loe_csv, write_results_csv,
};
use crate::interference::{scale_to_jn, JnSpec};
use crate::synth::{synthesize, synthesize_satellite};

#[derive(Parser)]
#[command(
    name = "dpe-rim",
    about = "GNSS direct position estimation with robust interference mitigation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the interference-free loss-of-efficiency threshold sweep.
    Loe(RunArgs),
    /// Run the CW jammer robustness sweep over JN.
    SweepCw(RunArgs),
    /// Run the DME interference robustness sweep over JN.
    SweepDme(RunArgs),
    /// Synthesize one scenario signal and dump it as binary I/Q.
    Synth(SynthArgs),
    /// Emit closed-form LoE and CRB tables.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the number of Monte Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output format (only csv).
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add the configured interference scaled to this JN (dB).
    #[arg(long)]
    jn: Option<f64>,
    /// Output path for little-endian interleaved f64 I/Q.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path for the LoE theory table.
    #[arg(long, default_value = "loe_theory.csv")]
    out: PathBuf,
    /// Output format (only csv).
    #[arg(long, default_value = "csv")]
    format: String,
}

fn check_format(format: &str) -> Result<()> {
    if format != "csv" {
        return Err(Error::Config(format!(
            "unsupported output format '{format}' (only csv)"
        )));
    }
    Ok(())
}

fn load_or_default(path: &Option<PathBuf>, default: ExperimentConfig) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(default),
    }
}

fn apply_overrides(config: &mut ExperimentConfig, args: &RunArgs) {
    if let Some(t) = args.trials {
        config.sweep.trials = t;
    }
    if let Some(s) = args.seed {
        config.sweep.base_seed = s;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
}

fn loe_companion_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}_loe.csv"))
}

fn cmd_loe(args: &RunArgs) -> Result<()> {
    check_format(&args.format)?;
    let mut config = load_or_default(&args.config, ExperimentConfig::default_loe())?;
    if config.kind != ExperimentKind::Loe {
        return Err(Error::Config("config kind must be 'loe'".into()));
    }
    apply_overrides(&mut config, args);
    config.validate()?;
    let (output, loe_rows) = run_loe_experiment(&config)?;
    write_results_csv(&args.out, &output.aggregates)?;
    let companion = loe_companion_path(&args.out);
    write_loe_csv(&companion, &loe_rows)?;
    println!("rmse table: {}", args.out.display());
    println!("loe table:  {}", companion.display());
    for row in &loe_rows {
        println!(
            "th/sigma {:>7.3}  {:>4}/{:<5}  empirical {:>7.3} dB  theory {:>7.3} dB",
            row.th_over_sigma,
            row.method,
            row.scheme.label(),
            row.loe_db_empirical,
            row.loe_db_theory
        );
    }
    Ok(())
}

fn cmd_sweep(args: &RunArgs, kind: ExperimentKind, default: ExperimentConfig) -> Result<()> {
    check_format(&args.format)?;
    let mut config = load_or_default(&args.config, default)?;
    if config.kind != kind {
        return Err(Error::Config(format!(
            "config kind does not match the requested sweep ({kind:?})"
        )));
    }
    apply_overrides(&mut config, args);
    config.validate()?;
    let output = run_interference_sweep(&config)?;
    write_results_csv(&args.out, &output.aggregates)?;
    println!("rmse table: {}", args.out.display());
    for row in &output.aggregates {
        println!(
            "jn {:>6.1} dB  {:<10}  rmse {:>12.3} m  (±{:.3}, n={})",
            row.sweep_value, row.method, row.rmse_m, row.stderr_m, row.trials
        );
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let config = load_or_default(&args.config, ExperimentConfig::default_loe())?;
    let scenario = config.build_scenario();
    let mut signal = synthesize(&scenario, args.seed)?;
    if let Some(jn_db) = args.jn {
        let interference = build_interference_for_cli(&config, signal.len(), args.seed)?
            .ok_or_else(|| {
                Error::Config("config has no interference to scale (kind is loe)".into())
            })?;
        let scaled = scale_to_jn(&interference, &JnSpec::new(jn_db)?, scenario.noise_variance)?;
        for (a, b) in signal.samples.iter_mut().zip(&scaled.samples) {
            *a += b;
        }
    }
    if let Some(bw) = scenario.frontend_bandwidth_hz {
        signal = crate::synth::lowpass_frontend(&signal, bw)?;
    }
    write_iq_f64le(&args.out, &signal)?;
    println!(
        "wrote {} samples ({} s at {} Hz) to {}",
        signal.len(),
        signal.duration_s(),
        signal.sample_rate_hz,
        args.out.display()
    );
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    check_format(&args.format)?;
    let config = load_or_default(&args.config, ExperimentConfig::default_loe())?;
    let scenario = config.build_scenario();

    // LoE theory table over the default normalized-threshold axis
    let axis: Vec<f64> = (1..=200).map(|k| 0.05 * k as f64).collect();
    let mut out = String::from("th_over_sigma,loe_db_single,loe_db_dual\n");
    for &t in &axis {
        out.push_str(&format!(
            "{},{},{}\n",
            t,
            loe_db(t, 1.0, LoeMode::SingleDomain),
            loe_db(t, 1.0, LoeMode::DualDomain)
        ));
    }
    std::fs::write(&args.out, out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    println!("loe theory table: {}", args.out.display());

    // position CRB for the configured scenario
    let jac = geometry_jacobian_with_clock(&scenario.receiver, &scenario.satellites)?;
    let mut mqbds = Vec::new();
    let mut snrs = Vec::new();
    for (i, _) in scenario.satellites.iter().enumerate() {
        let component = synthesize_satellite(&scenario, i)?;
        // the component carries α, so its total energy over σ² is the
        // whole-observation SNR of that satellite
        let energy: f64 = component.samples.iter().map(|s| s.norm_sqr()).sum();
        mqbds.push(mqbd(&component)?);
        snrs.push(energy / scenario.noise_variance);
    }
    let inputs = FimInputs {
        jacobian: jac,
        mqbd: mqbds,
        snr: snrs,
        k_out: 1.0,
    };
    let cov = crb(&inputs)?;
    let pos_var = cov[(0, 0)] + cov[(1, 1)] + cov[(2, 2)];
    println!(
        "predicted 3-D position CRB for the configured scenario: {:.3} m rms",
        pos_var.sqrt()
    );
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

/// CLI entry point. Returns the process exit code: 0 on success, 2 on
/// configuration/usage errors, 1 on runtime failures.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Loe(args) => cmd_loe(args),
        Command::SweepCw(args) => cmd_sweep(args, ExperimentKind::Cw, ExperimentConfig::default_cw()),
        Command::SweepDme(args) => {
            cmd_sweep(args, ExperimentKind::Dme, ExperimentConfig::default_dme())
        }
        Command::Synth(args) => cmd_synth(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

//! Command-line front end for the alpha-CIR simulation library.
//!
//! One TOML configuration file (see [`config::RunConfig`]) drives four
//! subcommands:
//!
//! * `simulate` — one trajectory, written as `t,x` CSV;
//! * `strong-error` — the coupled-grid error study: CSV table plus a
//!   log-log SVG with a red slope-1/2 reference line;
//! * `probe` — diagnostic probes (negative-discriminant frequency,
//!   terminal moments, jump-driver Laplace transform), printed as verdict
//!   lines and written as CSV;
//! * `sweep` — the strong-error study repeated over the `[[sweep]]` model
//!   overrides, one indexed CSV/SVG pair per entry.
//!
//! The CLI itself is a single-threaded orchestrator; all parallel work
//! happens inside the library, keyed only by the seed, so rerunning a
//! command with a different `--workers` value reproduces output files
//! byte for byte.
//!
//! Exit codes: 0 success, 1 configuration or usage problem, 2 runtime
//! abort (exploded-path fraction above threshold, or I/O failure).

mod config;
mod output;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use alpha_cir::drivers::build_panel;
use alpha_cir::experiments::{
    dneg_probability_probe, mgf_probe, moment_probe, strong_error_study, ErrorEstimate, ProbeKind,
    ProbeResult,
};
use alpha_cir::model::DriverSpec;
use alpha_cir::scheme::simulate_path;

use config::RunConfig;

/// Anything a subcommand can fail with, mapped onto the exit-code contract.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Lib(#[from] alpha_cir::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for anything the user can fix in the invocation or config file,
    /// 2 for aborts that happen mid-run.
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Lib(err) => match err {
                alpha_cir::Error::ExplosionAbort { .. } | alpha_cir::Error::Io(_) => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "alpha-cir",
    version,
    about = "Simulation and convergence experiments for the alpha-CIR process"
)]
struct Cli {
    /// TOML configuration file (required by every subcommand).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override the seed from the config file.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Override the worker count from the config file.
    #[arg(long, global = true, value_name = "INT")]
    workers: Option<usize>,
    /// Directory for output artifacts (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write it as CSV.
    Simulate,
    /// Run the coupled-grid strong-error study (CSV + log-log SVG).
    StrongError,
    /// Run the probe selected by the config's [probe] section.
    Probe,
    /// Run the strong-error study for every [[sweep]] entry.
    Sweep,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config_path =
        cli.config.ok_or_else(|| CliError::Usage("--config <FILE> is required".into()))?;
    let text = fs::read_to_string(&config_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    let mut config = RunConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        config.mc.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.mc.parallel_workers = workers;
    }
    fs::create_dir_all(&cli.out)?;

    match cli.command {
        Command::Simulate => cmd_simulate(&config, &cli.out),
        Command::StrongError => cmd_strong_error(&config, &cli.out),
        Command::Probe => cmd_probe(&config, &cli.out),
        Command::Sweep => cmd_sweep(&config, &cli.out),
    }
}

/// `simulate`: one path at the `[grid]` resolution, seed-stream 0.
fn cmd_simulate(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let panel = build_panel(config.mc.seed, 0, config.grid.n, config.grid.horizon, &config.driver)?;
    let record = simulate_path(&config.model, &config.grid, &panel.dw, &panel.dz)?;
    if let Some(step) = record.exploded_at {
        eprintln!("warning: trajectory overflowed at step {step}; output truncated");
    }
    let file = out.join("path.csv");
    fs::write(&file, output::path_csv(config, &record))?;
    println!(
        "wrote {} ({} states, {} negative-discriminant repairs)",
        file.display(),
        record.values.len(),
        record.d_negative_count
    );
    Ok(())
}

/// `strong-error`: the coupled-grid study on the `[mc]` base grids.
fn cmd_strong_error(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let estimate =
        strong_error_study(&config.model, &config.driver, config.grid.horizon, &config.mc)?;
    write_study(config, &estimate, out, "strong-error")
}

/// `probe`: dispatch on the `[probe]` kind.
fn cmd_probe(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let probe = config
        .probe
        .as_ref()
        .ok_or_else(|| CliError::Usage("the probe subcommand needs a [probe] section".into()))?;
    let seed = config.mc.seed;
    let results: Vec<ProbeResult> = match probe.kind {
        ProbeKind::DnegProbability => vec![dneg_probability_probe(
            &config.model,
            &config.driver,
            &config.grid,
            probe.num_paths,
            seed,
        )?],
        ProbeKind::Moment => vec![moment_probe(
            &config.model,
            &config.driver,
            &config.grid,
            probe.beta,
            probe.num_paths,
            seed,
        )?],
        ProbeKind::Mgf => {
            let dt = probe.dt.unwrap_or_else(|| config.grid.dt());
            mgf_probe(&config.driver, dt, &probe.q_list, probe.num_draws, seed)?
        }
    };

    for r in &results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        match r.reference_value {
            Some(reference) => println!(
                "{verdict} {}: estimate = {:.6e} (stderr {:.2e}), reference = {:.6e}; {}",
                output::kind_name(r.kind),
                r.estimate,
                r.std_error,
                reference,
                r.detail
            ),
            None => println!(
                "{verdict} {}: estimate = {:.6e} (stderr {:.2e}); {}",
                output::kind_name(r.kind),
                r.estimate,
                r.std_error,
                r.detail
            ),
        }
    }
    let file = out.join("probe.csv");
    fs::write(&file, output::probe_csv(config, &results))?;
    println!("wrote {}", file.display());
    Ok(())
}

/// `sweep`: the strong-error study per `[[sweep]]` entry, with indexed
/// output names. A stable driver follows an `alpha` override automatically.
fn cmd_sweep(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    if config.sweep.is_empty() {
        return Err(CliError::Usage(
            "the sweep subcommand needs at least one [[sweep]] entry".into(),
        ));
    }
    let total = config.sweep.len();
    for (index, entry) in config.sweep.iter().enumerate() {
        let model = entry.apply(&config.model);
        let driver = match config.driver {
            DriverSpec::Stable { .. } => DriverSpec::Stable { alpha: model.alpha },
            other => other,
        };
        // The header of each output file records the entry's resolved
        // configuration, not the sweep list it came from.
        let mut entry_config = config.clone();
        entry_config.model = model;
        entry_config.driver = driver;
        entry_config.sweep = Vec::new();
        entry_config.validate()?;

        let stem = match &entry.label {
            Some(label) => format!("sweep-{}-{}", index + 1, sanitize(label)),
            None => format!("sweep-{}", index + 1),
        };
        println!("[{}/{total}] {stem}", index + 1);
        let estimate = strong_error_study(
            &entry_config.model,
            &entry_config.driver,
            entry_config.grid.horizon,
            &entry_config.mc,
        )?;
        write_study(&entry_config, &estimate, out, &stem)?;
    }
    Ok(())
}

/// Writes one study as a CSV/SVG pair and prints its summary table.
fn write_study(
    config: &RunConfig,
    estimate: &ErrorEstimate,
    out: &Path,
    stem: &str,
) -> Result<(), CliError> {
    let csv_file = out.join(format!("{stem}.csv"));
    fs::write(&csv_file, output::error_csv(config, estimate))?;
    let svg_file = out.join(format!("{stem}.svg"));
    fs::write(&svg_file, svg::log_log_plot(&estimate.points(), stem))?;

    for row in &estimate.rows {
        println!(
            "n = {:>6}  error = {:.6e}  stderr = {:.2e}  excluded = {}",
            row.n, row.mean_abs_diff, row.std_error, row.exploded_count
        );
    }
    println!(
        "fitted slope {:.4} (stderr {:.4}); wrote {} and {}",
        estimate.fitted_slope,
        estimate.slope_stderr,
        csv_file.display(),
        svg_file.display()
    );
    Ok(())
}

/// Keeps sweep labels filesystem-safe.
fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

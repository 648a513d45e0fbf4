//! `wnls`: command-line driver for the spectral NLS toolkit.
//!
//! Every subcommand except `selftest` reads a TOML configuration (defaults,
//! then `--config`, then `--set` overrides), writes its outputs into a
//! content-addressed directory under `--out`, and exits with
//! 0 on success, 1 on invalid input, 2 on a non-finite solver state and
//! 3 when a requested check fails.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use error::{CliError, Result};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "WNLS_OUT";

#[derive(Debug, Parser)]
#[command(name = "wnls", version, about = "Cubic NLS with Wiener-randomized data: solver, norms and estimate checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set solver.dt=1e-4`; applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output root; each run writes to `<out>/<command>-<digest>`.
    #[arg(short, long, env = OUT_ENV, default_value = "runs")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(short, long)]
    jobs: Option<usize>,
    /// Print the resolved configuration and exit without running.
    #[arg(long)]
    print_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the full equation and record conserved quantities.
    Simulate(Common),
    /// Evolve the perturbation equation for a low/high split and compare with the full flow.
    Perturb(Common),
    /// Second-moment identity and Gaussian tail of the randomization.
    Randomize(Common),
    /// Composite space-time norms of the free evolution.
    Norms(Common),
    /// Interaction Morawetz functional along a run.
    Morawetz(Common),
    /// Linear estimate ratio sweeps.
    Inequality(Common),
    /// One high-low energy-increment run.
    Highlow(Common),
    /// Energy-increment scaling over N0 and seeds.
    Sweep(Common),
    /// Cauchy-distance scattering diagnostic.
    Scatter(Common),
    /// Closed-form checks of the numerical core.
    Selftest {
        #[arg(short, long)]
        jobs: Option<usize>,
    },
}

fn configure_pool(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        // The global pool can only be built once per process; later calls keep the first size.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("rayon pool already initialised");
        }
    }
    Ok(())
}

fn execute<C, F>(common: &Common, run: F, out: &mut dyn Write) -> Result<()>
where
    C: Default + Serialize + DeserializeOwned,
    F: FnOnce(&C, &Path) -> Result<commands::Finished>,
{
    configure_pool(common.jobs)?;
    let cfg: C = config::resolve(common.config.as_deref(), &common.set)?;
    if common.print_config {
        let text = toml::to_string(&cfg).map_err(|e| CliError::config(e.to_string()))?;
        let _ = write!(out, "{text}");
        return Ok(());
    }
    let done = run(&cfg, &common.out)?;
    let _ = writeln!(out, "{}", done.dir.display());
    for line in &done.summary {
        let _ = writeln!(out, "  {line}");
    }
    if done.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Assertion(done.failures.join("; ")))
    }
}

fn selftest(jobs: Option<usize>, out: &mut dyn Write) -> Result<()> {
    configure_pool(jobs)?;
    let checks = selftest::run_all();
    for c in &checks {
        let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(out, "{} of {} checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Assertion(format!("{failed} self-test checks failed")))
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(c) => execute(c, commands::simulate, out),
        Command::Perturb(c) => execute(c, commands::perturb, out),
        Command::Randomize(c) => execute(c, commands::randomize, out),
        Command::Norms(c) => execute(c, commands::norms, out),
        Command::Morawetz(c) => execute(c, commands::morawetz, out),
        Command::Inequality(c) => execute(c, commands::inequality, out),
        Command::Highlow(c) => execute(c, commands::highlow, out),
        Command::Sweep(c) => execute(c, commands::sweep, out),
        Command::Scatter(c) => execute(c, commands::scatter, out),
        Command::Selftest { jobs } => selftest(*jobs, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "wnls: {e}");
            e.exit_code()
        }
    }
}

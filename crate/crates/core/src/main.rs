//! Command-line front end: `run`, `sweep` and `check`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cgdg_sem::config::{Experiment, Mode, RunConfig};
use cgdg_sem::diagnostics::{write_convergence_csv, write_csv_file, write_energy_csv, RunReport};
use cgdg_sem::driver;
use cgdg_sem::error::{Error, Result};
use cgdg_sem::verify;

#[derive(Parser)]
#[command(
    name = "cgdg",
    version,
    about = "Hybrid CG/DG spectral element acoustics solver"
)]
struct Cli {
    /// Worker threads for element-parallel residuals (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress of each run.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its report and energy series.
    Run(RunArgs),
    /// Run a configuration for a range of polynomial degrees.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Lowest degree.
        #[arg(long)]
        from: usize,
        /// Highest degree (inclusive).
        #[arg(long)]
        to: usize,
    },
    /// Evaluate the discrete identities and stability inequalities.
    Check,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Experiment preset used when no run file is given.
    #[arg(long, value_parser = parse_experiment)]
    preset: Option<Experiment>,
    /// Face coupling for a preset run.
    #[arg(long, value_parser = parse_mode, default_value = "cg")]
    mode: Mode,
    /// Polynomial degree for a preset run.
    #[arg(long, default_value_t = 6)]
    degree: usize,
    /// Output directory.
    #[arg(long, default_value = "output")]
    output: PathBuf,
}

fn parse_experiment(s: &str) -> std::result::Result<Experiment, String> {
    toml::Value::String(s.to_string())
        .try_into()
        .map_err(|_| format!("unknown experiment '{s}'"))
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    toml::Value::String(s.to_string())
        .try_into()
        .map_err(|_| format!("unknown mode '{s}' (cg, dg, hybrid)"))
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        match (&self.config, self.preset) {
            (Some(path), _) => RunConfig::from_file(path),
            (None, Some(exp)) => {
                let c = RunConfig::preset(exp, self.mode, self.degree);
                c.validate()?;
                Ok(c)
            }
            (None, None) => Err(Error::Config("pass --config or --preset".into())),
        }
    }
}

fn stem(report: &RunReport) -> String {
    format!("{}-{}-N{}", report.experiment, report.mode, report.degree)
}

fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.into()))?;
    std::fs::write(dir.join(format!("{}.json", stem(report))), json)?;
    write_csv_file(&dir.join(format!("{}-energy.csv", stem(report))), |f| {
        write_energy_csv(f, &report.energy)
    })
}

fn print_report(report: &RunReport) {
    println!(
        "{} mode={} N={} elements={} dofs={} dt={:.3e} steps={}",
        report.experiment,
        report.mode,
        report.degree,
        report.elements,
        report.dofs,
        report.dt,
        report.steps
    );
    match &report.errors {
        Some(e) => println!(
            "  max error {:.6e} (log10 {:.4}), L2 error {:.6e}",
            e.max,
            e.log10_max(),
            e.l2
        ),
        None => println!("  no exact solution"),
    }
    println!(
        "  max |dU/dt| {:.3e}, conservation drift {:.3e}, runtime {:.2} s",
        report.max_time_derivative, report.conservation_drift, report.runtime_seconds
    );
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Run(args) => {
            let config = args.config()?;
            let report = driver::run(&config)?;
            print_report(&report);
            write_report(&args.output, &report)?;
            Ok(true)
        }
        Command::Sweep { run, from, to } => {
            let config = run.config()?;
            let mut rows = Vec::new();
            for n in from..=to {
                let mut c = config.clone();
                c.degree = n;
                let report = driver::run(&c)?;
                print_report(&report);
                write_report(&run.output, &report)?;
                rows.push((n, report.log10_error()));
            }
            let name = format!(
                "{}-{}-convergence.csv",
                config.experiment.name(),
                config.mode.name()
            );
            write_csv_file(&run.output.join(name), |f| write_convergence_csv(f, &rows))?;
            Ok(true)
        }
        Command::Check => {
            let mut all = true;
            for c in verify::run_checks()? {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                println!(
                    "{status}  {:<45} {:.3e} (tolerance {:.0e})",
                    c.name, c.value, c.tolerance
                );
                all &= c.passed();
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new().filter_level(level).init();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

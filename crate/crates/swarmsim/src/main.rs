use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use swarmsim::plots::{emit_plots, PlotCollector, PlotSpec};
use swarmsim::{csv, load_scenario, ConfigError, CsvSink};
use swarmsim_core::{run_scenario, RecordSink};

/// Leaderless formation control simulator for swarms of car-like robots.
#[derive(Debug, Parser)]
#[command(name = "swarmsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write CSV logs, figures and a summary.
    Run(RunArgs),
    /// Load a scenario and check it without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the summary of a previous run from its CSV logs.
    Inspect {
        #[arg(long, env = "SWARMSIM_OUT", default_value = "results")]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, env = "SWARMSIM_OUT", default_value = "results")]
    out: PathBuf,
    /// Feed every controller the true shape instead of its estimate.
    #[arg(long)]
    oracle_estimates: bool,
    /// Figures to draw: `all`, `none`, or a comma-separated subset of
    /// trajectory, shape, inputs, angles.
    #[arg(long, default_value = "all")]
    plots: PlotSpec,
    /// Override the simulated duration (s).
    #[arg(long, allow_hyphen_values = true)]
    duration: Option<f64>,
    /// Override the control period (s).
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Validate { config } => validate(&config),
        Command::Inspect { out } => inspect(&out).map_err(Failure::Runtime),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn validate(config: &Path) -> Result<(), Failure> {
    let cfg = load_scenario(config)?;
    println!(
        "{}: ok ({} robots, {} links, {} events, {} ticks)",
        config.display(),
        cfg.robots.len(),
        cfg.edges.len(),
        cfg.events.len(),
        cfg.tick_count() + 1
    );
    Ok(())
}

fn inspect(out: &Path) -> anyhow::Result<()> {
    let summary = csv::summary_from_dir(out)?;
    print!("{}", csv::format_summary(&summary));
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = load_scenario(&args.config)?;
    if let Some(d) = args.duration {
        cfg.duration = d;
    }
    if let Some(dt) = args.dt {
        cfg.control_dt = dt;
    }
    cfg.oracle_estimates |= args.oracle_estimates;
    cfg.validate().map_err(|e| Failure::Config(anyhow::anyhow!("{e}")))?;

    let runtime = Failure::Runtime;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .map_err(runtime)?;
    let mut csv_sink = CsvSink::create(&args.out).map_err(runtime)?;
    let mut collector = PlotCollector::new(cfg.shape, cfg.control_dt);

    let outcome = {
        let mut sinks: Vec<&mut dyn RecordSink> = vec![&mut csv_sink];
        if !args.plots.is_empty() {
            sinks.push(&mut collector);
        }
        run_scenario(&cfg, &mut sinks)
    };

    // Partial results are still written when the run aborts.
    let summary = csv_sink.finish().map_err(runtime)?;
    if !args.plots.is_empty() && !collector.is_empty() {
        for p in emit_plots(&collector, &args.plots, &args.out).map_err(runtime)? {
            log::info!("wrote {}", p.display());
        }
    }
    let mut text = csv::format_summary(&summary);
    if let Err(e) = &outcome {
        text.push_str(&format!("aborted: {e}\n"));
    }
    let summary_path = args.out.join("summary.txt");
    std::fs::write(&summary_path, &text)
        .with_context(|| format!("cannot write {}", summary_path.display()))
        .map_err(runtime)?;
    print!("{text}");
    outcome.map(|_| ()).map_err(|e| Failure::Runtime(anyhow::anyhow!("simulation aborted: {e}")))
}

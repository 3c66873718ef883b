use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clustersync::experiment::{self, ExperimentConfig, ExperimentError};

#[derive(Parser)]
#[command(name = "clustersync", version, about = "Cluster synchronization experiments for coupled delayed neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a configured case and report synchronization metrics.
    Run(RunArgs),
    /// Evaluate the synchronization criteria without simulating.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["case1", "case2", "case3"])]
    preset: Option<String>,
    /// CSV trajectory output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary output.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Settling tolerance on the largest error norm.
    #[arg(long)]
    tol: Option<f64>,
}

fn run(args: RunArgs) -> Result<(), ExperimentError> {
    let mut config: ExperimentConfig = match (&args.config, &args.preset) {
        (Some(path), _) => experiment::load_config(path)?,
        (None, Some(name)) => experiment::preset(name)?,
        (None, None) => unreachable!("clap requires one of --config and --preset"),
    };
    if let Some(h) = args.step {
        config.integrator.h = h;
    }
    if let Some(t) = args.horizon {
        config.integrator.horizon = t;
    }
    if let Some(tol) = args.tol {
        config.output.tol = Some(tol);
    }
    if args.out.is_some() {
        config.output.csv = args.out;
    }
    if args.summary.is_some() {
        config.output.summary = args.summary;
    }

    let (traj, summary) = experiment::run_case(&config)?;
    if let Some(path) = &config.output.csv {
        experiment::export_csv(&traj, path)?;
    }
    if let Some(path) = &config.output.summary {
        experiment::write_summary(&summary, path)?;
    }

    println!("records            {}", traj.len());
    println!("impulses           {}", summary.impulses);
    println!("final max |e_i|    {:.6e}", summary.final_max_error_norm);
    for (p, v) in summary.final_cluster_error_norms.iter().enumerate() {
        println!("  cluster {p}        {v:.6e}");
    }
    match summary.settling_time {
        Some(t) => println!("settled (tol {:.1e}) t = {t:.4}", summary.tolerance),
        None => println!("settled (tol {:.1e}) no", summary.tolerance),
    }
    if let Some(t) = summary.settling_estimate {
        println!("settling estimate  {t:.4}");
    }
    if let (Some(min), Some(last)) = (summary.min_leader_distance, summary.final_leader_distance) {
        println!("leader gap         min {min:.6e}, final {last:.6e}");
    }
    for finding in &summary.block_class_findings {
        println!("coupling note      {finding}");
    }
    for report in &summary.criteria {
        print!("{report}");
    }
    println!("wall clock         {:.3} s", summary.wall_clock_seconds);
    println!("config digest      {}", summary.config_digest);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args).map(|()| true),
        Command::Check { config } => experiment::load_config(&config)
            .and_then(|c| experiment::check_criteria(&c))
            .map(|reports| {
                if reports.is_empty() {
                    println!("no criteria parameters in config");
                }
                for report in &reports {
                    print!("{report}");
                }
                reports.iter().all(|r| r.passed())
            }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

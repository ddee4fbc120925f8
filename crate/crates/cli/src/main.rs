use std::path::PathBuf;
use std::process::ExitCode;

use cda_eit::config::RunConfig;
use cda_eit::experiments::{
    cmd_convergence, cmd_forward, cmd_gradcheck, cmd_run, convergence_failures, convergence_table, gradcheck_failures,
    gradcheck_table, run_summary, write_forward, write_run,
};
use cda_eit::export;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cda-eit", version, about = "Certified descent reconstruction of conductivity inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimator validation on the concentric disk.
    Convergence,
    /// Certified descent reconstruction.
    Run,
    /// Central-difference check of the shape derivative.
    Gradcheck,
    /// States on the initial geometry.
    Forward,
}

enum Failure {
    Config(anyhow::Error),
    Check(Vec<String>),
    Run(anyhow::Error),
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Config(anyhow::anyhow!("--config <path> is required")))?;
    let mut config = RunConfig::load(path).map_err(|e| Failure::Config(e.into()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = &cli.out;
    let create = |e: std::io::Error| Failure::Run(anyhow::anyhow!("cannot create {}: {e}", out.display()));
    match cli.command {
        Command::Convergence => {
            let report = cmd_convergence(&config).map_err(Failure::Run)?;
            std::fs::create_dir_all(out).map_err(create)?;
            let table = convergence_table(&report, config.timing);
            export::write(&out.join("convergence.csv"), &table).map_err(Failure::Run)?;
            print!("{table}");
            println!(
                "rates: err_N {:.3} err_D {:.3} bound_N {:.3} bound_D {:.3} Ebar {:.3} Ebar/|theta| {:.3}",
                report.rate_err_n,
                report.rate_err_d,
                report.rate_bound_n,
                report.rate_bound_d,
                report.rate_e_bar,
                report.rate_e_bar_normalized
            );
            let failures = convergence_failures(&report);
            if !failures.is_empty() {
                return Err(Failure::Check(failures));
            }
        }
        Command::Run => {
            let report = cmd_run(&config).map_err(Failure::Run)?;
            write_run(&config, &report, out).map_err(Failure::Run)?;
            print!("{}", run_summary(&report));
            let violations = report.violations();
            if !violations.is_empty() {
                return Err(Failure::Check(violations));
            }
        }
        Command::Gradcheck => {
            let rows = cmd_gradcheck(&config).map_err(Failure::Run)?;
            std::fs::create_dir_all(out).map_err(create)?;
            let table = gradcheck_table(&rows);
            export::write(&out.join("gradcheck.csv"), &table).map_err(Failure::Run)?;
            print!("{table}");
            let failures: Vec<String> = gradcheck_failures(&config, &rows)
                .iter()
                .map(|r| format!("mesh {} sample {}: mismatch {:e}", r.mesh, r.sample, r.mismatch()))
                .collect();
            if !failures.is_empty() {
                return Err(Failure::Check(failures));
            }
        }
        Command::Forward => {
            let report = cmd_forward(&config).map_err(Failure::Run)?;
            write_forward(&report, out).map_err(Failure::Run)?;
            println!("J {:.6e}", report.objective);
            for (j, (n, d)) in report.energy.iter().enumerate() {
                println!("measurement {j}: |||u_N||| {n:.6e} |||u_D||| {d:.6e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(messages)) => {
            for m in messages {
                eprintln!("check failed: {m}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

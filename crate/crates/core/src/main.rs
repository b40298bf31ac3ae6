use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diffeostat::runner::{emit_report, parse_config, run_all, run_experiment, ReportFormat};

#[derive(Parser)]
#[command(name = "diffeostat", version, about = "Fisher geometry experiments on finite sample spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments of a configuration file.
    Run {
        config: PathBuf,
        /// Run only this experiment.
        #[arg(long)]
        experiment: Option<String>,
        /// Overrides the seed in the configuration file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance override, e.g. `psd=1e-8`. Repeatable.
        #[arg(long = "tol-override", value_name = "KEY=VAL")]
        tol_override: Vec<String>,
        /// Include wall-clock times in the report.
        #[arg(long)]
        timings: bool,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        experiment,
        seed,
        format,
        out,
        tol_override,
        timings,
    } = Cli::parse().command;

    let result = (|| {
        let mut cfg = parse_config(&config)?;
        for o in &tol_override {
            cfg.override_tolerance(o)?;
        }
        let seed = seed.unwrap_or_else(|| cfg.seed());
        match &experiment {
            Some(name) => run_experiment(&cfg, name, seed),
            None => run_all(&cfg, seed),
        }
    })();

    let records = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit_report(&records, format, out.as_deref(), timings) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(1);
    }
    let failed: Vec<_> = records.iter().filter(|r| !r.verdict.pass).collect();
    for r in &failed {
        eprintln!("FAIL {}[{}]: {}", r.experiment, r.record, r.verdict.label);
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

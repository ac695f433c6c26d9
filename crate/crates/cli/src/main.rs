use std::path::PathBuf;
use std::process::ExitCode;

use cheeger_cli::compare::{compare, CompareTolerances};
use cheeger_cli::config::ExperimentConfig;
use cheeger_cli::error::Result;
use cheeger_cli::run::run;
use cheeger_core::{DomainSpec, PerimeterMode};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cheeger", version, about = "Discrete Cheeger constant experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipelines of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's `out`, then `results`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Overrides the config's perimeter mode.
        #[arg(long)]
        mode: Option<PerimeterMode>,
    },
    /// Diff two runs (directories or results.csv files).
    Compare {
        baseline: PathBuf,
        current: PathBuf,
        /// Default relative tolerance.
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
        /// Per-quantity tolerance, `quantity=value`; repeatable.
        #[arg(long = "tol", value_parser = parse_tol)]
        tol: Vec<(String, f64)>,
    },
    /// List the built-in domains.
    ListSpecs,
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (q, v) = s.split_once('=').ok_or("expected quantity=value")?;
    let v: f64 = v.parse().map_err(|e| format!("{v}: {e}"))?;
    Ok((q.to_string(), v))
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
            mode,
        } => {
            let mut exp = ExperimentConfig::load(&config)?;
            if let Some(m) = mode {
                exp.mode = m;
            }
            let base = config.parent().unwrap_or(std::path::Path::new("."));
            let cfg = exp.normalize(base, &config.display().to_string())?;
            let dir = out
                .or_else(|| exp.out.as_ref().map(|o| base.join(o)))
                .unwrap_or_else(|| PathBuf::from("results"));
            log::info!("config {} -> {}", &cfg.hash()[..12], dir.display());
            let output = run(&cfg, threads)?;
            output.write(&dir)?;
            print!("{}", output.record.summary());
            Ok(output.record.passed())
        }
        Command::Compare {
            baseline,
            current,
            rel_tol,
            tol,
        } => {
            let tolerances = CompareTolerances {
                default_rel: rel_tol,
                per_quantity: tol.into_iter().collect(),
            };
            let diff = compare(&baseline, &current, &tolerances)?;
            print!("{}", diff.render());
            Ok(diff.passed())
        }
        Command::ListSpecs => {
            for name in DomainSpec::builtin_names() {
                let spec = DomainSpec::builtin(name).expect("listed builtin");
                println!(
                    "{name}: dimension {}, {} box(es), volume {}{}",
                    spec.dimension,
                    spec.boxes.len(),
                    spec.volume(),
                    if spec.convex_hint { ", convex" } else { "" }
                );
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

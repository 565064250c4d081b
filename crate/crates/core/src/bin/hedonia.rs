//! `hedonia`: run the experiments and verification suites from the shell.
//!
//! Exit status: 0 on success, 1 when a verification fails or a run errors,
//! 2 on bad usage.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hedonia::cli::{
    cmd_fig2, cmd_run, cmd_rutledge, cmd_verify, Claim, ConfigDocument, Fig2Options, RutledgeOptions,
    VerifyOptions,
};
use hedonia::rutledge::HappinessModel;
use hedonia::Error;

#[derive(Parser)]
#[command(name = "hedonia", version, about = "Happiness as temporal-difference error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimistic vs pessimistic initialisation on the two-state example.
    Fig2 {
        /// Offset of the initial Q values.
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check a structural claim about happiness; exits 1 if it fails.
    Verify {
        /// 1, 2, 3, scaling or sarsa.
        #[arg(long)]
        prop: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, env = "HEDONIA_SEED", default_value_t = 0)]
        seed: u64,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Behaviour policies per MDP (claim 3).
        #[arg(long, default_value_t = 10)]
        policies: usize,
        /// Monte Carlo steps (claim 2).
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        /// Steps per run (scaling, sarsa).
        #[arg(long)]
        steps: Option<usize>,
        /// Exploration rate (sarsa).
        #[arg(long, default_value_t = 0.2)]
        exploration: f64,
    },
    /// Fit well-being models to synthetic gamble-task subjects.
    Rutledge {
        #[arg(long, default_value_t = 100)]
        subjects: usize,
        /// Rating noise as a fraction of the rating spread.
        #[arg(long)]
        noise: Option<f64>,
        /// Generating model: ours, rutledge or cumulative.
        #[arg(long)]
        truth: Option<String>,
        /// Discount of the generating model.
        #[arg(long)]
        truth_gamma: Option<f64>,
        #[arg(long, env = "HEDONIA_SEED", default_value_t = 0)]
        seed: u64,
        /// JSON document with a "generator" section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a configured learner on a JSON environment.
    Run {
        #[arg(long)]
        env: PathBuf,
        /// JSON document with a "learner" section.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "HEDONIA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
}

fn execute(command: Command) -> hedonia::Result<bool> {
    match command {
        Command::Fig2 {
            epsilon,
            alpha,
            steps,
            out,
        } => {
            let res = cmd_fig2(&Fig2Options {
                epsilon,
                alpha,
                steps,
                out,
            })?;
            println!("wrote {}", res.optimistic_csv.display());
            println!("wrote {}", res.pessimistic_csv.display());
            Ok(true)
        }
        Command::Verify {
            prop,
            trials,
            seed,
            out,
            policies,
            mc_samples,
            steps,
            exploration,
        } => {
            let claim: Claim = prop.parse()?;
            let report = cmd_verify(&VerifyOptions {
                claim,
                trials,
                seed,
                out,
                policies,
                mc_samples,
                steps,
                exploration,
            })?;
            println!(
                "{}: {} (max deviation {:e})",
                report.claim,
                if report.pass { "pass" } else { "FAIL" },
                report.max_deviation
            );
            if let Some(c) = &report.counterexample {
                println!("counterexample: {c}");
            }
            Ok(report.pass)
        }
        Command::Rutledge {
            subjects,
            noise,
            truth,
            truth_gamma,
            seed,
            config,
            out,
        } => {
            let mut generator = match &config {
                Some(path) => ConfigDocument::load(path)?.generator.unwrap_or_default(),
                None => Default::default(),
            };
            if let Some(name) = truth {
                generator.truth = HappinessModel::from_name(&name).ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown model {name:?}; expected ours, rutledge or cumulative"))
                })?;
            }
            if let Some(noise) = noise {
                generator.noise = noise;
            }
            if let Some(g) = truth_gamma {
                generator.truth_gamma = g;
            }
            let res = cmd_rutledge(&RutledgeOptions {
                subjects,
                seed,
                generator,
                out,
            })?;
            for s in &res.summary {
                let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
                println!(
                    "{:<10} mean r {}  median r² {}  median R² {}  ({} fitted, {} rejected)",
                    s.model,
                    show(s.mean_r),
                    show(s.median_r2),
                    show(s.median_big_r2),
                    s.fitted,
                    s.rejected
                );
            }
            Ok(true)
        }
        Command::Run {
            env,
            config,
            seed,
            out,
        } => {
            let run = cmd_run(&env, &config, seed, &out)?;
            let total: f64 = run.records.iter().map(|r| r.happiness).sum();
            println!(
                "{} steps, mean happiness {:.6}; wrote {}",
                run.records.len(),
                total / run.records.len() as f64,
                out.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

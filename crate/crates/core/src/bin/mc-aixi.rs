use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mc_aixi::env;
use mc_aixi::harness::{self, parse_checkpoints, parse_config};

#[derive(Parser)]
#[command(name = "mc-aixi", version, about = "Monte Carlo AIXI agent with context tree weighting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate at checkpoints, writing one CSV row per evaluation.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        sims: Option<u64>,
        #[arg(long = "ucb-c")]
        ucb_c: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated training cycle counts.
        #[arg(long)]
        checkpoints: Option<String>,
        #[arg(long = "eval-cycles")]
        eval_cycles: Option<u64>,
        /// CSV destination; standard output when neither this nor the config names one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a domain's optimal average reward per cycle.
    Oracle {
        #[arg(long)]
        domain: String,
    },
    /// Check the context tree, estimator and planner against brute-force references.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        Command::Run {
            config,
            domain,
            depth,
            horizon,
            sims,
            ucb_c,
            seed,
            checkpoints,
            eval_cycles,
            out,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let mut spec = parse_config(&text)?;
            if let Some(name) = domain {
                spec.agent.domain = env::domain(&name)?.name.to_string();
            }
            if let Some(v) = depth {
                spec.agent.depth = v;
            }
            if let Some(v) = horizon {
                spec.agent.horizon = v;
            }
            if let Some(v) = sims {
                spec.agent.simulations = v;
            }
            if let Some(v) = ucb_c {
                spec.agent.exploration = v;
            }
            if let Some(v) = seed {
                spec.agent.seed = v;
            }
            if let Some(list) = checkpoints {
                spec.checkpoints = parse_checkpoints(&list)?;
            }
            if let Some(v) = eval_cycles {
                spec.eval_cycles = v;
            }
            if out.is_some() {
                spec.output = out;
            }
            spec.validate()?;
            match &spec.output {
                Some(_) => harness::run_experiment(&spec)?,
                None => harness::run_experiment_to(&spec, std::io::stdout().lock())?,
            };
        }
        Command::Oracle { domain } => {
            let info = env::domain(&domain)?;
            println!("{} {:.6}", info.name, env::optimal_average_reward(info.name)?);
        }
        Command::Selftest { seed } => {
            let checks = mc_aixi::selftest::run_all(seed);
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                return Err(format!("{failed} self-test check(s) failed").into());
            }
        }
    }
    Ok(())
}

//! Learning-curve experiments.
//!
//! For every seed the agent trains in one continuous run. At each checkpoint
//! a forked copy of the agent plays greedily for a fixed number of cycles
//! against a copy of the environment, so evaluation never feeds back into
//! training. Scores are divided by the domain's optimal average reward and
//! written as CSV rows in (seed, checkpoint) order.

mod config;

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use thiserror::Error;

use crate::agent::{derive_seed, Agent, AgentConfig, AgentError, EvalSummary, Mode, ENV_STREAM, EVAL_STREAM};
use crate::env::{self, EnvError, Environment};

pub use config::{parse_checkpoints, parse_config, serialize_config};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },

    #[error("line {line}: unknown section `[{name}]`")]
    UnknownSection { line: usize, name: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: `{key}` does not belong in this section")]
    WrongSection { line: usize, key: &'static str },

    #[error("line {line}: `{key}` was already set on line {first}")]
    Duplicate { line: usize, key: &'static str, first: usize },

    #[error("line {line}: `{key}` needs {expected}, found `{found}`")]
    Type {
        line: usize,
        key: &'static str,
        expected: &'static str,
        found: String,
    },

    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Constraint { line: Option<usize>, message: String },

    #[error("no `domain` given")]
    MissingDomain,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("invalid experiment: {0}")]
    Invalid(String),

    #[error(transparent)]
    Agent(#[from] AgentError),

    #[error(transparent)]
    Env(#[from] EnvError),

    #[error("non-finite normalized reward for seed {seed} at {experience} cycles")]
    NonFinite { seed: u64, experience: u64 },

    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("writing results: {0}")]
    Io(#[from] io::Error),
}

/// One learning-curve experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub agent: AgentConfig,
    /// Training cycles completed before each evaluation, strictly increasing.
    pub checkpoints: Vec<u64>,
    pub eval_cycles: u64,
    /// Number of seeds, counting up from `agent.seed`.
    pub repeats: u64,
    pub output: Option<PathBuf>,
    /// Normalizer for domains without a computable optimum.
    pub optimum_estimate: f64,
}

impl ExperimentSpec {
    pub fn new(agent: AgentConfig) -> Self {
        let checkpoints = env::domain(&agent.domain)
            .map(|info| default_checkpoints(info.experience))
            .unwrap_or_default();
        Self {
            agent,
            checkpoints,
            eval_cycles: 2000,
            repeats: 1,
            output: None,
            optimum_estimate: 1.0,
        }
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.repeats).map(|i| self.agent.seed.wrapping_add(i))
    }

    pub fn validate(&self) -> Result<(), String> {
        self.agent.validate()?;
        env::domain(&self.agent.domain).map_err(|e| e.to_string())?;
        if self.checkpoints.is_empty() {
            return Err("at least one checkpoint is needed".into());
        }
        if let Some(w) = self.checkpoints.windows(2).find(|w| w[0] >= w[1]) {
            return Err(format!("checkpoints must be strictly increasing, got {} then {}", w[0], w[1]));
        }
        if self.repeats == 0 {
            return Err("repeats must be at least 1".into());
        }
        if self.eval_cycles == 0 {
            return Err("eval_cycles must be at least 1".into());
        }
        if !(self.optimum_estimate.is_finite() && self.optimum_estimate != 0.0) {
            return Err("optimum_estimate must be finite and nonzero".into());
        }
        Ok(())
    }
}

/// Powers of ten from 100 below `experience`, then `experience` itself.
pub fn default_checkpoints(experience: u64) -> Vec<u64> {
    let mut points: Vec<u64> = std::iter::successors(Some(100u64), |&c| c.checked_mul(10))
        .take_while(|&c| c < experience)
        .collect();
    points.push(experience);
    points
}

/// One evaluation: a seed at a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub domain: String,
    pub seed: u64,
    pub experience: u64,
    pub normalized_reward: f64,
    /// Mean wall-clock search time per evaluation cycle.
    pub search_time_s: f64,
    /// Mean simulations per evaluation cycle.
    pub simulations: f64,
}

pub const CSV_HEADER: [&str; 6] = [
    "domain",
    "seed",
    "experience",
    "normalized_reward",
    "search_time_s",
    "simulations",
];

/// Writes result rows one at a time, flushing after each.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(sink: W) -> Result<Self, HarnessError> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
        writer.write_record(CSV_HEADER)?;
        writer.flush()?;
        Ok(Self { writer })
    }

    pub fn push(&mut self, row: &ResultRow) -> Result<(), HarnessError> {
        self.writer.write_record([
            row.domain.clone(),
            row.seed.to_string(),
            row.experience.to_string(),
            row.normalized_reward.to_string(),
            row.search_time_s.to_string(),
            row.simulations.to_string(),
        ])?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W, HarnessError> {
        self.writer.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
    }
}

pub fn emit_csv<W: Write>(rows: &[ResultRow], sink: W) -> Result<(), HarnessError> {
    let mut out = CsvSink::new(sink)?;
    for row in rows {
        out.push(row)?;
    }
    Ok(())
}

/// The reward that normalizes scores to 1 for optimal play: the domain's
/// computed optimum, or the configured estimate when none is known.
pub fn normalizer(spec: &ExperimentSpec) -> Result<f64, HarnessError> {
    match env::optimal_average_reward(&spec.agent.domain) {
        Ok(v) => Ok(v),
        Err(EnvError::NoKnownOptimum(_)) => Ok(spec.optimum_estimate),
        Err(e) => Err(e.into()),
    }
}

/// Greedy evaluation of a snapshot of `agent` in a snapshot of `env`. Both
/// copies get random streams derived from `seed`, so evaluations of the same
/// seed at different checkpoints share their randomness.
pub fn evaluate_checkpoint(
    agent: &Agent,
    env: &dyn Environment,
    seed: u64,
    cycles: u64,
) -> Result<EvalSummary, AgentError> {
    let eval_seed = derive_seed(seed, EVAL_STREAM);
    let mut agent = agent.fork(eval_seed);
    let mut env = env.box_clone();
    env.reseed(eval_seed);
    agent.evaluate(env.as_mut(), cycles)
}

/// Trains one seed through every checkpoint, calling `at_checkpoint` with
/// the checkpoint index, agent and environment each time one is reached.
/// Returns the agent after the last checkpoint.
pub fn training_run<F>(spec: &ExperimentSpec, seed: u64, mut at_checkpoint: F) -> Result<Agent, HarnessError>
where
    F: FnMut(usize, &Agent, &dyn Environment) -> Result<(), HarnessError>,
{
    let config = AgentConfig {
        seed,
        ..spec.agent.clone()
    };
    let mut agent = Agent::new(config)?;
    let mut env = env::make_env(&spec.agent.domain, derive_seed(seed, ENV_STREAM))?;
    for (i, &checkpoint) in spec.checkpoints.iter().enumerate() {
        while agent.explore_cycles() < checkpoint {
            agent.run_cycle(env.as_mut(), Mode::Explore)?;
        }
        at_checkpoint(i, &agent, env.as_ref())?;
    }
    Ok(agent)
}

fn result_row(spec: &ExperimentSpec, seed: u64, experience: u64, summary: EvalSummary, denominator: f64) -> Result<ResultRow, HarnessError> {
    let normalized_reward = summary.mean_reward / denominator;
    if !normalized_reward.is_finite() {
        return Err(HarnessError::NonFinite { seed, experience });
    }
    Ok(ResultRow {
        domain: spec.agent.domain.clone(),
        seed,
        experience,
        normalized_reward,
        search_time_s: summary.mean_search_time.as_secs_f64(),
        simulations: summary.mean_simulations,
    })
}

/// Runs the experiment, writing CSV to `spec.output` when it is set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, HarnessError> {
    match &spec.output {
        Some(path) => run_experiment_to(spec, File::create(path)?),
        None => run_experiment_to(spec, io::sink()),
    }
}

/// Runs the experiment, streaming CSV rows to `sink` in (seed, checkpoint)
/// order as soon as each row and all rows before it are done.
///
/// Seeds train in parallel and every checkpoint evaluation is its own task.
pub fn run_experiment_to<W: Write>(spec: &ExperimentSpec, sink: W) -> Result<Vec<ResultRow>, HarnessError> {
    spec.validate().map_err(HarnessError::Invalid)?;
    let denominator = normalizer(spec)?;
    log::info!("{}: normalizing by optimal average reward {denominator}", spec.agent.domain);

    let seeds: Vec<u64> = spec.seeds().collect();
    let per_seed = spec.checkpoints.len();
    let total = seeds.len() * per_seed;
    let cancel = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<ResultRow, HarnessError>)>();

    let mut out = CsvSink::new(sink)?;
    let mut slots: Vec<Option<ResultRow>> = vec![None; total];
    let mut next = 0;
    let mut failure = None;

    std::thread::scope(|threads| {
        // The collector must not run on a pool thread: with a single worker
        // it would block the tasks it is waiting for.
        let cancel = &cancel;
        let seeds = &seeds;
        threads.spawn(move || {
            rayon::scope(|tasks| {
                for (s, &seed) in seeds.iter().enumerate() {
                    let tx = tx.clone();
                    tasks.spawn(move |tasks| {
                        let result = training_run(spec, seed, |i, agent, env| {
                            if cancel.load(Ordering::Relaxed) {
                                return Err(HarnessError::Invalid("cancelled".into()));
                            }
                            let agent = agent.clone();
                            let env = env.box_clone();
                            let tx = tx.clone();
                            tasks.spawn(move |_| {
                                let experience = spec.checkpoints[i];
                                let row = evaluate_checkpoint(&agent, env.as_ref(), seed, spec.eval_cycles)
                                    .map_err(HarnessError::from)
                                    .and_then(|summary| result_row(spec, seed, experience, summary, denominator));
                                log::debug!("seed {seed} checkpoint {experience} done");
                                let _ = tx.send((s * per_seed + i, row));
                            });
                            Ok(())
                        });
                        if let Err(e) = result {
                            let _ = tx.send((s * per_seed, Err(e)));
                        }
                    });
                }
            });
            drop(tx);
        });

        for (index, row) in rx {
            match row {
                Ok(row) => slots[index] = Some(row),
                Err(e) => {
                    cancel.store(true, Ordering::Relaxed);
                    failure.get_or_insert(e);
                }
            }
            while next < total {
                let Some(row) = &slots[next] else { break };
                if failure.is_none() {
                    if let Err(e) = out.push(row) {
                        cancel.store(true, Ordering::Relaxed);
                        failure = Some(e);
                    }
                }
                next += 1;
            }
        }
    });

    if let Some(e) = failure {
        return Err(e);
    }
    out.into_inner()?;
    Ok(slots.into_iter().map(|r| r.expect("every task reports a row")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(domain: &str) -> ExperimentSpec {
        let agent = AgentConfig {
            depth: 4,
            horizon: 2,
            simulations: 8,
            ..AgentConfig::for_domain(domain).unwrap()
        };
        ExperimentSpec {
            checkpoints: vec![0, 20, 60],
            eval_cycles: 15,
            repeats: 2,
            ..ExperimentSpec::new(agent)
        }
    }

    #[test]
    fn default_checkpoints_are_log_spaced() {
        assert_eq!(default_checkpoints(25_000), vec![100, 1000, 10_000, 25_000]);
        assert_eq!(default_checkpoints(1000), vec![100, 1000]);
        assert_eq!(default_checkpoints(50), vec![50]);
    }

    #[test]
    fn rows_come_in_seed_then_checkpoint_order() {
        let mut buf = Vec::new();
        let rows = run_experiment_to(&tiny("grid"), &mut buf).unwrap();
        let order: Vec<(u64, u64)> = rows.iter().map(|r| (r.seed, r.experience)).collect();
        assert_eq!(order, vec![(0, 0), (0, 20), (0, 60), (1, 0), (1, 20), (1, 60)]);
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("domain,seed,experience,normalized_reward,search_time_s,simulations\n"));
    }

    #[test]
    fn invalid_spec_is_rejected_before_running() {
        let mut spec = tiny("grid");
        spec.checkpoints = vec![5, 5];
        assert!(matches!(run_experiment(&spec), Err(HarnessError::Invalid(_))));
    }

    #[test]
    fn empty_rows_write_only_the_header() {
        let mut buf = Vec::new();
        emit_csv(&[], &mut buf).unwrap();
        assert_eq!(buf, b"domain,seed,experience,normalized_reward,search_time_s,simulations\n");
    }
}

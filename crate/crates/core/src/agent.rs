//! The agent: a context-tree model of the environment plus a ρUCT planner,
//! run in perceive/plan/act cycles.

use std::io::{self, Read, Write};
use std::time::Duration;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::{Action, CodecError, History, Percept, SpaceSpec};
use crate::ctw::{ContextTree, CtwError};
use crate::env::{self, EnvError, Environment};
use crate::model::{CtwModel, EnvironmentModel};
use crate::search::{rho_uct_search, Budget, PlannerConfig, SearchError};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid agent configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Codec(#[from] CodecError),

    #[error(transparent)]
    Ctw(#[from] CtwError),

    #[error(transparent)]
    Search(#[from] SearchError),

    #[error(transparent)]
    Env(#[from] EnvError),

    #[error("environment `{env}` does not match the agent's space for `{agent}`")]
    SpaceMismatch { agent: String, env: String },

    #[error("bad agent snapshot: {0}")]
    Snapshot(String),

    #[error("snapshot I/O: {0}")]
    Io(#[from] io::Error),
}

/// `ε_t = max(floor, initial · decay^t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            decay: 0.99999,
            floor: 0.05,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, t: u64) -> f64 {
        let t = i32::try_from(t).unwrap_or(i32::MAX);
        (self.initial * self.decay.powi(t)).max(self.floor)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 <= self.floor && self.floor <= self.initial && self.initial <= 1.0) {
            return Err(format!(
                "epsilon needs 0 <= floor <= initial <= 1, got floor {} initial {}",
                self.floor, self.initial
            ));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(format!("epsilon decay must be in (0, 1], got {}", self.decay));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub domain: String,
    pub depth: usize,
    pub horizon: usize,
    pub simulations: u64,
    /// Optional wall-clock cap per search, in addition to `simulations`.
    pub time_limit: Option<Duration>,
    pub exploration: f64,
    pub epsilon: EpsilonSchedule,
    pub seed: u64,
    /// Keep updating the model during greedy evaluation.
    pub learn_during_eval: bool,
}

impl AgentConfig {
    /// Suggested depth and horizon for a catalog domain, other settings at
    /// their defaults.
    pub fn for_domain(name: &str) -> Result<Self, EnvError> {
        let info = env::domain(name)?;
        Ok(Self {
            domain: info.name.to_string(),
            depth: info.depth,
            horizon: info.horizon,
            simulations: info.simulations,
            time_limit: None,
            exploration: std::f64::consts::SQRT_2,
            epsilon: EpsilonSchedule::default(),
            seed: 0,
            learn_during_eval: true,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.depth == 0 {
            return Err("depth must be at least 1".into());
        }
        if self.horizon == 0 {
            return Err("horizon must be at least 1".into());
        }
        if self.simulations == 0 {
            return Err("simulations must be at least 1".into());
        }
        if !(self.exploration > 0.0 && self.exploration.is_finite()) {
            return Err(format!("exploration constant must be positive, got {}", self.exploration));
        }
        self.epsilon.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// ε-greedy: random action with probability ε_t, otherwise search.
    Explore,
    /// Always search; the ε schedule does not advance.
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: u64,
    pub action: Action,
    pub observation: u64,
    pub reward: i64,
    pub epsilon: f64,
    pub was_random: bool,
    pub search_time: Duration,
    pub simulations: u64,
    /// `ln ρ(x | h a)` of the received percept before learning from it.
    pub percept_log_prob: f64,
}

/// Mean results of a greedy evaluation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub cycles: u64,
    pub mean_reward: f64,
    pub mean_search_time: Duration,
    pub mean_simulations: f64,
}

/// Derives an independent seed for stream `stream` of a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

pub const POLICY_STREAM: u64 = 1;
pub const PLANNER_STREAM: u64 = 2;
pub const ENV_STREAM: u64 = 3;
pub const EVAL_STREAM: u64 = 4;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    spec: SpaceSpec,
    model: CtwModel,
    history: History,
    /// Cycles run in explore mode; indexes the ε schedule.
    explore_cycles: u64,
    cycles: u64,
    policy_rng: ChaCha8Rng,
    planner_rng: ChaCha8Rng,
}

impl Agent {
    /// An agent for a catalog domain.
    pub fn new(config: AgentConfig) -> Result<Self, AgentError> {
        let spec = env::domain(&config.domain)?.spec();
        Self::with_spec(config, spec)
    }

    /// An agent for an arbitrary action/percept space.
    pub fn with_spec(config: AgentConfig, spec: SpaceSpec) -> Result<Self, AgentError> {
        config.validate().map_err(AgentError::Config)?;
        Ok(Self {
            model: CtwModel::new(spec, config.depth)?,
            history: History::new(spec),
            explore_cycles: 0,
            cycles: 0,
            policy_rng: stream_rng(config.seed, POLICY_STREAM),
            planner_rng: stream_rng(config.seed, PLANNER_STREAM),
            spec,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn model(&self) -> &CtwModel {
        &self.model
    }

    pub fn tree(&self) -> &ContextTree {
        self.model.tree()
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn explore_cycles(&self) -> u64 {
        self.explore_cycles
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon.at(self.explore_cycles)
    }

    pub fn planner_config(&self) -> PlannerConfig {
        let (lo, hi) = self.spec.reward_range();
        let (lo, hi) = if lo == hi { (lo as f64, hi as f64 + 1.0) } else { (lo as f64, hi as f64) };
        PlannerConfig {
            horizon: self.config.horizon,
            exploration: self.config.exploration,
            reward_min: lo,
            reward_max: hi,
            budget: Budget {
                simulations: Some(self.config.simulations),
                wall_clock: self.config.time_limit,
            },
        }
    }

    /// A copy for evaluation whose random streams are replaced by ones
    /// derived from `seed`, so that evaluations from different agent states
    /// can share their randomness.
    pub fn fork(&self, seed: u64) -> Self {
        let mut copy = self.clone();
        copy.policy_rng = stream_rng(seed, POLICY_STREAM);
        copy.planner_rng = stream_rng(seed, PLANNER_STREAM);
        copy
    }

    /// Chooses the search action for the current history.
    pub fn plan(&mut self) -> Result<(Action, Duration, u64), AgentError> {
        let cfg = self.planner_config();
        let out = rho_uct_search(&mut self.model, &cfg, &mut self.planner_rng)?;
        Ok((out.action, out.elapsed, out.simulations))
    }

    pub fn run_cycle(&mut self, env: &mut dyn Environment, mode: Mode) -> Result<CycleRecord, AgentError> {
        if env.spec() != self.spec {
            return Err(AgentError::SpaceMismatch {
                agent: self.config.domain.clone(),
                env: env.name().to_string(),
            });
        }
        let epsilon = match mode {
            Mode::Explore => self.epsilon(),
            Mode::Greedy => 0.0,
        };
        let was_random = mode == Mode::Explore && self.policy_rng.gen::<f64>() < epsilon;
        let (action, search_time, simulations) = if was_random {
            (self.policy_rng.gen_range(0..self.spec.action_count()), Duration::ZERO, 0)
        } else {
            self.plan()?
        };
        let learn = mode == Mode::Explore || self.config.learn_during_eval;
        let percept = env.step(action);
        let percept_log_prob = self.commit_cycle(action, percept, learn)?;
        if mode == Mode::Explore {
            self.explore_cycles += 1;
        }
        let record = CycleRecord {
            cycle: self.cycles,
            action,
            observation: percept.observation,
            reward: percept.reward,
            epsilon,
            was_random,
            search_time,
            simulations,
            percept_log_prob,
        };
        self.cycles += 1;
        Ok(record)
    }

    /// Appends a completed cycle to the model and history. Returns the log
    /// probability the model assigned to the percept.
    pub fn commit_cycle(&mut self, action: Action, percept: Percept, learn: bool) -> Result<f64, AgentError> {
        let bits = self.spec.encode_percept(percept)?;
        self.history.push_action(action)?;
        self.history.push_percept(percept)?;
        self.model.condition_action(action);
        let before = self.model.tree().block_log_prob();
        if learn {
            self.model.observe_percept(bits);
        } else {
            self.model.condition_percept(bits);
        }
        let after = self.model.tree().block_log_prob();
        self.model.commit();
        Ok(if learn { after - before } else { f64::NAN })
    }

    pub fn run_training(&mut self, env: &mut dyn Environment, cycles: u64) -> Result<Vec<CycleRecord>, AgentError> {
        (0..cycles).map(|_| self.run_cycle(env, Mode::Explore)).collect()
    }

    /// Greedy play for `cycles` cycles; returns the mean reward per cycle.
    pub fn run_greedy_eval(&mut self, env: &mut dyn Environment, cycles: u64) -> Result<f64, AgentError> {
        Ok(self.evaluate(env, cycles)?.mean_reward)
    }

    pub fn evaluate(&mut self, env: &mut dyn Environment, cycles: u64) -> Result<EvalSummary, AgentError> {
        let mut reward = 0i64;
        let mut time = Duration::ZERO;
        let mut sims = 0u64;
        for _ in 0..cycles {
            let r = self.run_cycle(env, Mode::Greedy)?;
            reward += r.reward;
            time += r.search_time;
            sims += r.simulations;
        }
        let n = cycles.max(1);
        Ok(EvalSummary {
            cycles,
            mean_reward: reward as f64 / n as f64,
            mean_search_time: time / n as u32,
            mean_simulations: sims as f64 / n as f64,
        })
    }

    pub fn same_state(&self, other: &Agent) -> bool {
        self.config == other.config
            && self.spec == other.spec
            && self.history == other.history
            && self.explore_cycles == other.explore_cycles
            && self.cycles == other.cycles
            && self.policy_rng == other.policy_rng
            && self.planner_rng == other.planner_rng
            && self.model.tree().same_state(other.model.tree())
    }
}

const AGENT_MAGIC: [u8; 4] = *b"MCAX";
const AGENT_VERSION: u16 = 1;

impl Agent {
    /// Writes configuration, counters, history, random stream positions and
    /// the model.
    pub fn save_snapshot<W: Write>(&self, w: &mut W) -> Result<(), AgentError> {
        let mut out = Vec::new();
        out.extend_from_slice(&AGENT_MAGIC);
        out.extend_from_slice(&AGENT_VERSION.to_le_bytes());
        put_bytes(&mut out, self.config.domain.as_bytes());
        for v in [
            self.config.depth as u64,
            self.config.horizon as u64,
            self.config.simulations,
            self.config.time_limit.map_or(u64::MAX, |d| d.as_nanos() as u64),
            self.config.exploration.to_bits(),
            self.config.epsilon.initial.to_bits(),
            self.config.epsilon.decay.to_bits(),
            self.config.epsilon.floor.to_bits(),
            self.config.seed,
            u64::from(self.config.learn_during_eval),
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let s = &self.spec;
        for v in [
            s.action_count() as u64,
            s.obs_count(),
            s.reward_range().0 as u64,
            s.reward_range().1 as u64,
            u64::from(s.action_bits()),
            u64::from(s.obs_bits()),
            u64::from(s.reward_bits()),
            s.reward_offset() as u64,
            self.explore_cycles,
            self.cycles,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for rng in [&self.policy_rng, &self.planner_rng] {
            out.extend_from_slice(&rng.get_seed());
            out.extend_from_slice(&rng.get_stream().to_le_bytes());
            out.extend_from_slice(&rng.get_word_pos().to_le_bytes());
        }
        out.extend_from_slice(&(self.history.actions().len() as u64).to_le_bytes());
        for (a, p) in self.history.actions().iter().zip(self.history.percepts()) {
            out.extend_from_slice(&(*a as u32).to_le_bytes());
            out.extend_from_slice(&p.observation.to_le_bytes());
            out.extend_from_slice(&p.reward.to_le_bytes());
        }
        w.write_all(&out)?;
        self.model.tree().write_snapshot(w)?;
        Ok(())
    }

    pub fn load_snapshot<R: Read>(r: &mut R) -> Result<Self, AgentError> {
        let mut rd = Reader(r);
        if rd.array::<4>()? != AGENT_MAGIC {
            return Err(AgentError::Snapshot("not an agent snapshot".into()));
        }
        let version = u16::from_le_bytes(rd.array()?);
        if version != AGENT_VERSION {
            return Err(AgentError::Snapshot(format!("unsupported version {version}")));
        }
        let domain = String::from_utf8(rd.bytes()?).map_err(|_| AgentError::Snapshot("domain is not UTF-8".into()))?;
        let mut u = || rd.u64();
        let (depth, horizon, simulations, time_limit) = (u()?, u()?, u()?, u()?);
        let exploration = f64::from_bits(u()?);
        let epsilon = EpsilonSchedule {
            initial: f64::from_bits(u()?),
            decay: f64::from_bits(u()?),
            floor: f64::from_bits(u()?),
        };
        let seed = u()?;
        let learn_during_eval = u()? != 0;
        let config = AgentConfig {
            domain,
            depth: depth as usize,
            horizon: horizon as usize,
            simulations,
            time_limit: (time_limit != u64::MAX).then(|| Duration::from_nanos(time_limit)),
            exploration,
            epsilon,
            seed,
            learn_during_eval,
        };
        config.validate().map_err(AgentError::Snapshot)?;
        let mut u = || rd.u64();
        let spec = SpaceSpec::new(
            u()? as usize,
            u()?,
            u()? as i64,
            u()? as i64,
            u()? as u32,
            u()? as u32,
            u()? as u32,
            u()? as i64,
        )
        .map_err(|e| AgentError::Snapshot(e.to_string()))?;
        let explore_cycles = rd.u64()?;
        let cycles = rd.u64()?;
        let mut rngs = Vec::new();
        for _ in 0..2 {
            let mut rng = ChaCha8Rng::from_seed(rd.array()?);
            rng.set_stream(rd.u64()?);
            rng.set_word_pos(u128::from_le_bytes(rd.array()?));
            rngs.push(rng);
        }
        let n = rd.u64()?;
        let mut history = History::new(spec);
        for _ in 0..n {
            let action = u32::from_le_bytes(rd.array()?) as usize;
            let observation = rd.u64()?;
            let reward = rd.u64()? as i64;
            history
                .push_action(action)
                .and_then(|_| history.push_percept(Percept::new(observation, reward)))
                .map_err(|e| AgentError::Snapshot(e.to_string()))?;
        }
        let tree = ContextTree::read_snapshot(rd.0)?;
        if tree.depth() != config.depth {
            return Err(AgentError::Snapshot("model depth differs from configuration".into()));
        }
        if tree.bits_seen() != history.bit_len() {
            return Err(AgentError::Snapshot("model and history lengths differ".into()));
        }
        let planner_rng = rngs.pop().expect("two streams");
        let policy_rng = rngs.pop().expect("two streams");
        Ok(Self {
            config,
            spec,
            model: CtwModel::from_tree(spec, tree),
            history,
            explore_cycles,
            cycles,
            policy_rng,
            planner_rng,
        })
    }
}

fn put_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(bytes);
}

struct Reader<'a, R: Read>(&'a mut R);

impl<R: Read> Reader<'_, R> {
    fn array<const N: usize>(&mut self) -> Result<[u8; N], AgentError> {
        let mut buf = [0u8; N];
        self.0.read_exact(&mut buf).map_err(truncated)?;
        Ok(buf)
    }

    fn u64(&mut self) -> Result<u64, AgentError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn bytes(&mut self) -> Result<Vec<u8>, AgentError> {
        let len = u32::from_le_bytes(self.array()?) as usize;
        if len > 1024 {
            return Err(AgentError::Snapshot("string field too long".into()));
        }
        let mut buf = vec![0u8; len];
        self.0.read_exact(&mut buf).map_err(truncated)?;
        Ok(buf)
    }
}

fn truncated(e: io::Error) -> AgentError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        AgentError::Snapshot("truncated snapshot".into())
    } else {
        AgentError::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_env;
    use approx::assert_relative_eq;

    fn small(domain: &str, seed: u64) -> AgentConfig {
        AgentConfig {
            depth: 8,
            horizon: 2,
            simulations: 20,
            seed,
            ..AgentConfig::for_domain(domain).unwrap()
        }
    }

    #[test]
    fn epsilon_schedule() {
        let s = EpsilonSchedule {
            initial: 1.0,
            decay: 0.99995,
            floor: 0.05,
        };
        assert_eq!(s.at(0), 1.0);
        let half = (2f64.ln() / (1.0 / 0.99995f64).ln()).round() as u64;
        assert_eq!(half, 13863);
        assert_relative_eq!(s.at(half), 0.5, epsilon = 1e-4);
        assert_eq!(s.at(10_000_000), 0.05);
        assert!(EpsilonSchedule { floor: 0.5, initial: 0.2, decay: 1.0 }.validate().is_err());
        assert!(EpsilonSchedule { decay: 0.0, ..s }.validate().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = small("grid", 0);
        c.depth = 0;
        assert!(matches!(Agent::new(c), Err(AgentError::Config(_))));
        let mut c = small("grid", 0);
        c.simulations = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn cycle_keeps_model_and_history_in_step() {
        let mut agent = Agent::new(small("cheese", 1)).unwrap();
        let mut env = make_env("cheese", 1).unwrap();
        for _ in 0..50 {
            let before = agent.tree().block_log_prob();
            let rec = agent.run_cycle(env.as_mut(), Mode::Explore).unwrap();
            assert_eq!(agent.tree().journal_len(), 0);
            assert!(agent.tree().block_log_prob() < before);
            assert!(rec.percept_log_prob < 0.0);
            assert_eq!(agent.tree().bits_seen(), agent.history().bit_len());
        }
    }

    #[test]
    fn greedy_mode_leaves_schedule_alone() {
        let mut agent = Agent::new(small("rps", 2)).unwrap();
        let mut env = make_env("rps", 2).unwrap();
        agent.run_training(env.as_mut(), 10).unwrap();
        let eps = agent.epsilon();
        agent.run_greedy_eval(env.as_mut(), 10).unwrap();
        assert_eq!(agent.explore_cycles(), 10);
        assert_eq!(agent.epsilon(), eps);
        assert_eq!(agent.cycles(), 20);
    }

    #[test]
    fn zero_training_cycles_change_nothing() {
        let mut agent = Agent::new(small("grid", 3)).unwrap();
        let copy = agent.clone();
        let mut env = make_env("grid", 3).unwrap();
        assert!(agent.run_training(env.as_mut(), 0).unwrap().is_empty());
        assert!(agent.same_state(&copy));
    }

    #[test]
    fn mismatched_environment_is_rejected() {
        let mut agent = Agent::new(small("grid", 0)).unwrap();
        let mut env = make_env("tiger", 0).unwrap();
        assert!(matches!(
            agent.run_cycle(env.as_mut(), Mode::Greedy),
            Err(AgentError::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn frozen_evaluation_does_not_learn() {
        let mut c = small("rps", 4);
        c.learn_during_eval = false;
        let mut agent = Agent::new(c).unwrap();
        let mut env = make_env("rps", 4).unwrap();
        agent.run_training(env.as_mut(), 30).unwrap();
        let counts = agent.tree().root_counts();
        agent.run_greedy_eval(env.as_mut(), 5).unwrap();
        assert_eq!(agent.tree().root_counts(), counts);
        assert_eq!(agent.tree().bits_seen(), agent.history().bit_len());
    }

    #[test]
    fn snapshot_round_trip() {
        let mut agent = Agent::new(small("kuhn", 5)).unwrap();
        let mut env = make_env("kuhn", 5).unwrap();
        agent.run_training(env.as_mut(), 200).unwrap();
        let mut buf = Vec::new();
        agent.save_snapshot(&mut buf).unwrap();
        let loaded = Agent::load_snapshot(&mut buf.as_slice()).unwrap();
        assert!(loaded.same_state(&agent));
        let mut again = Vec::new();
        loaded.save_snapshot(&mut again).unwrap();
        assert_eq!(buf, again);
        assert!(Agent::load_snapshot(&mut &buf[..buf.len() / 2]).is_err());
        let mut bad = buf.clone();
        bad[4] = 7;
        assert!(matches!(Agent::load_snapshot(&mut bad.as_slice()), Err(AgentError::Snapshot(_))));
    }
}

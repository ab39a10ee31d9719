use mc_aixi::agent::{Agent, AgentConfig, EpsilonSchedule, Mode, CycleRecord, PLANNER_STREAM};
use mc_aixi::codec::{Action, Percept, SpaceSpec};
use mc_aixi::env::{make_env, Environment};
use mc_aixi::model::EnvironmentModel;
use mc_aixi::search::rho_uct_search;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn config(domain: &str, seed: u64) -> AgentConfig {
    AgentConfig {
        depth: 16,
        horizon: 3,
        simulations: 30,
        seed,
        ..AgentConfig::for_domain(domain).unwrap()
    }
}

fn schedule(initial: f64, decay: f64, floor: f64) -> EpsilonSchedule {
    EpsilonSchedule { initial, decay, floor }
}

/// Pays 1 every cycle whatever the agent does.
#[derive(Clone)]
struct AlwaysPays;

impl Environment for AlwaysPays {
    fn name(&self) -> &'static str {
        "always-pays"
    }

    fn spec(&self) -> SpaceSpec {
        SpaceSpec::new(3, 1, 0, 1, 2, 1, 1, 0).unwrap()
    }

    fn step(&mut self, _action: Action) -> Percept {
        Percept::new(0, 1)
    }

    fn reseed(&mut self, _seed: u64) {}

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

fn without_timing(records: &[CycleRecord]) -> Vec<CycleRecord> {
    records
        .iter()
        .map(|r| CycleRecord {
            search_time: Default::default(),
            ..r.clone()
        })
        .collect()
}

#[test]
fn a_cycle_commits_and_lowers_the_block_probability() {
    let mut agent = Agent::new(config("tiger", 1)).unwrap();
    let mut env = make_env("tiger", 1).unwrap();
    for _ in 0..50 {
        let before = agent.tree().block_log_prob();
        let record = agent.run_cycle(env.as_mut(), Mode::Explore).unwrap();
        assert_eq!(agent.tree().journal_len(), 0);
        assert!(agent.tree().block_log_prob() < before);
        assert!((agent.tree().block_log_prob() - before - record.percept_log_prob).abs() < 1e-9);
    }
}

#[test]
fn certain_exploration_is_uniform() {
    let cfg = AgentConfig {
        epsilon: schedule(1.0, 1.0, 1.0),
        ..config("tictactoe", 2)
    };
    let mut agent = Agent::new(cfg).unwrap();
    let mut env = make_env("tictactoe", 2).unwrap();
    let mut counts = [0u64; 9];
    for r in agent.run_training(env.as_mut(), 10_000).unwrap() {
        assert!(r.was_random);
        counts[r.action] += 1;
    }
    let expected = 10_000.0 / 9.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < 26.12, "{counts:?}");
}

#[test]
fn no_exploration_means_the_search_decides() {
    let cfg = AgentConfig {
        epsilon: schedule(0.0, 1.0, 0.0),
        ..config("biased-rps", 3)
    };
    let mut agent = Agent::new(cfg).unwrap();
    let mut env = make_env("biased-rps", 3).unwrap();
    let mut planner = ChaCha8Rng::seed_from_u64(3);
    planner.set_stream(PLANNER_STREAM);
    let mut model = agent.model().clone();
    for _ in 0..100 {
        let expected = rho_uct_search(&mut model, &agent.planner_config(), &mut planner).unwrap().action;
        let r = agent.run_cycle(env.as_mut(), Mode::Explore).unwrap();
        assert!(!r.was_random);
        assert_eq!(r.action, expected);
        model = agent.model().clone();
    }
}

#[test]
fn epsilon_halves_where_the_logarithms_say() {
    let s = schedule(1.0, 0.99995, 0.05);
    let half_life = (2f64.ln() / (1.0 / 0.99995f64).ln()).ceil() as u64;
    assert_eq!(half_life, 13863);
    assert!(s.at(half_life - 1) > 0.5 && s.at(half_life) <= 0.5);
    assert_eq!(s.at(1_000_000), 0.05);
    assert!(schedule(0.5, 0.9, 0.6).validate().is_err());
    assert!(schedule(1.0, 0.0, 0.0).validate().is_err());
}

#[test]
fn training_is_deterministic_and_zero_cycles_is_a_no_op() {
    let run = || {
        let mut agent = Agent::new(config("cheese-maze", 4)).unwrap();
        let mut env = make_env("cheese-maze", 4).unwrap();
        without_timing(&agent.run_training(env.as_mut(), 200).unwrap())
    };
    assert_eq!(run(), run());

    let mut agent = Agent::new(config("cheese-maze", 4)).unwrap();
    let fresh = agent.clone();
    let mut env = make_env("cheese-maze", 4).unwrap();
    assert!(agent.run_training(env.as_mut(), 0).unwrap().is_empty());
    assert!(agent.same_state(&fresh));
}

#[test]
fn greedy_evaluation_leaves_the_schedule_alone() {
    let mut agent = Agent::new(config("grid", 5)).unwrap();
    let mut env = make_env("grid", 5).unwrap();
    agent.run_training(env.as_mut(), 50).unwrap();
    let eps = agent.epsilon();
    agent.evaluate(env.as_mut(), 50).unwrap();
    assert_eq!(agent.explore_cycles(), 50);
    assert_eq!(agent.epsilon(), eps);
}

#[test]
fn a_world_that_always_pays_scores_one() {
    let cfg = AgentConfig {
        domain: "always-pays".into(),
        ..config("grid", 6)
    };
    let mut agent = Agent::with_spec(cfg, AlwaysPays.spec()).unwrap();
    assert_eq!(agent.run_greedy_eval(&mut AlwaysPays, 200).unwrap(), 1.0);
}

#[test]
fn untrained_agent_breaks_even_on_rps() {
    let cfg = AgentConfig {
        learn_during_eval: false,
        ..config("biased-rps", 7)
    };
    let mut agent = Agent::new(cfg).unwrap();
    let mut env = make_env("biased-rps", 7).unwrap();
    let mean = agent.run_greedy_eval(env.as_mut(), 4000).unwrap();
    assert!(mean.abs() <= 0.05, "{mean}");
}

#[test]
fn model_and_history_stay_in_step() {
    let mut agent = Agent::new(config("kuhn-poker", 8)).unwrap();
    let mut env = make_env("kuhn-poker", 8).unwrap();
    for i in 0..100 {
        let mode = if i % 3 == 0 { Mode::Greedy } else { Mode::Explore };
        agent.run_cycle(env.as_mut(), mode).unwrap();
        assert_eq!(agent.tree().bits_seen(), agent.history().to_bits().len() as u64);
    }
}

#[test]
fn snapshots_reproduce_future_behaviour() {
    let mut agent = Agent::new(config("biased-rps", 9)).unwrap();
    let mut env = make_env("biased-rps", 9).unwrap();
    agent.run_training(env.as_mut(), 300).unwrap();

    let mut bytes = Vec::new();
    agent.save_snapshot(&mut bytes).unwrap();
    let mut loaded = Agent::load_snapshot(&mut bytes.as_slice()).unwrap();
    assert!(loaded.same_state(&agent));
    assert_eq!(loaded.tree().block_log_prob().to_bits(), agent.tree().block_log_prob().to_bits());
    let mut again = Vec::new();
    loaded.save_snapshot(&mut again).unwrap();
    assert_eq!(again, bytes);

    let mut env_copy = env.clone();
    let ours = agent.run_training(env.as_mut(), 100).unwrap();
    let theirs = loaded.run_training(env_copy.as_mut(), 100).unwrap();
    assert_eq!(without_timing(&ours), without_timing(&theirs));
    assert!(loaded.same_state(&agent));

    assert!(Agent::load_snapshot(&mut &bytes[..bytes.len() / 2]).is_err());
    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(Agent::load_snapshot(&mut bad.as_slice()).is_err());
}

#[test]
fn fresh_snapshot_is_small() {
    let agent = Agent::new(config("grid", 10)).unwrap();
    let mut bytes = Vec::new();
    agent.save_snapshot(&mut bytes).unwrap();
    assert!(bytes.len() < 400, "{}", bytes.len());
    assert_eq!(agent.model().spec(), agent.spec());
}

#[test]
fn log_loss_falls_with_experience() {
    // Random play on the cheese maze; epochs of 1000 cycles.
    let epoch = 1000;
    let mut first = 0.0;
    let mut fifth = 0.0;
    for seed in 0..10 {
        let cfg = AgentConfig {
            epsilon: schedule(1.0, 1.0, 1.0),
            ..config("cheese-maze", seed)
        };
        let mut agent = Agent::new(cfg).unwrap();
        let mut env = make_env("cheese-maze", seed).unwrap();
        let bits = agent.spec().percept_bits() as f64;
        let records = agent.run_training(env.as_mut(), 5 * epoch).unwrap();
        let loss = |k: usize| -records[k * epoch as usize..(k + 1) * epoch as usize]
            .iter()
            .map(|r| r.percept_log_prob)
            .sum::<f64>()
            / (epoch as f64 * bits);
        first += loss(0) / 10.0;
        fifth += loss(4) / 10.0;
    }
    assert!(fifth < first, "{first} -> {fifth}");
}

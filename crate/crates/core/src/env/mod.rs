//! Benchmark environments.
//!
//! Every domain is a seeded simulator: the same seed and action sequence
//! always produce the same percepts. Episodic domains start the next episode
//! immediately after a terminal reward, so the interaction never ends.

pub mod cheese;
pub mod grid;
pub mod kuhn;
mod mdp;
pub mod pacman;
pub mod rps;
pub mod tictactoe;
pub mod tiger;

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::{Action, Percept, SpaceSpec};

pub use cheese::{CheeseMaze, CHEESE_MAZE_MAP};
pub use grid::Grid;
pub use kuhn::{KuhnPoker, NASH_BLUFF};
pub use mdp::{FiniteMdp, Outcome};
pub use pacman::{Pacman, PACMAN_MAP};
pub use rps::BiasedRps;
pub use tictactoe::TicTacToe;
pub use tiger::Tiger;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("domain `{0}` has no known optimal average reward")]
    NoKnownOptimum(&'static str),
}

/// An interactive environment: takes an action, returns a percept.
pub trait Environment: Send {
    fn name(&self) -> &'static str;

    fn spec(&self) -> SpaceSpec;

    /// Executes `action` (any index below the action count; domains
    /// penalise illegal moves themselves) and returns the next percept.
    fn step(&mut self, action: Action) -> Percept;

    /// Replaces the random stream without touching the hidden state.
    fn reseed(&mut self, seed: u64);

    fn box_clone(&self) -> Box<dyn Environment>;
}

impl Clone for Box<dyn Environment> {
    fn clone(&self) -> Self {
        self.box_clone()
    }
}

/// Parameters of one benchmark domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainInfo {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub action_count: usize,
    pub obs_count: u64,
    pub action_bits: u32,
    pub obs_bits: u32,
    pub reward_bits: u32,
    pub reward_min: i64,
    pub reward_max: i64,
    pub reward_offset: i64,
    /// Suggested context depth.
    pub depth: usize,
    /// Suggested planning horizon.
    pub horizon: usize,
    /// Simulations per cycle used for near-optimal play at full scale.
    pub simulations: u64,
    /// Experience (cycles) needed for near-optimal play at full scale.
    pub experience: u64,
}

impl DomainInfo {
    pub fn spec(&self) -> SpaceSpec {
        SpaceSpec::new(
            self.action_count,
            self.obs_count,
            self.reward_min,
            self.reward_max,
            self.action_bits,
            self.obs_bits,
            self.reward_bits,
            self.reward_offset,
        )
        .expect("catalog entries are valid")
    }
}

pub const CATALOG: [DomainInfo; 7] = [
    DomainInfo {
        name: "cheese-maze",
        aliases: &["cheese", "cheesemaze", "cheese_maze"],
        action_count: 4,
        obs_count: 16,
        action_bits: 2,
        obs_bits: 4,
        reward_bits: 5,
        reward_min: -10,
        reward_max: 10,
        reward_offset: 10,
        depth: 96,
        horizon: 8,
        simulations: 500,
        experience: 50_000,
    },
    DomainInfo {
        name: "tiger",
        aliases: &["extended-tiger", "extended_tiger"],
        action_count: 4,
        obs_count: 3,
        action_bits: 2,
        obs_bits: 2,
        reward_bits: 7,
        reward_min: -100,
        reward_max: 10,
        reward_offset: 100,
        depth: 96,
        horizon: 5,
        simulations: 10_000,
        experience: 50_000,
    },
    DomainInfo {
        name: "grid",
        aliases: &["4x4-grid", "4x4_grid", "grid4x4"],
        action_count: 4,
        obs_count: 1,
        action_bits: 2,
        obs_bits: 1,
        reward_bits: 1,
        reward_min: 0,
        reward_max: 1,
        reward_offset: 0,
        depth: 96,
        horizon: 12,
        simulations: 1000,
        experience: 25_000,
    },
    DomainInfo {
        name: "tictactoe",
        aliases: &["tic-tac-toe", "tic_tac_toe"],
        action_count: 9,
        obs_count: 19683,
        action_bits: 4,
        obs_bits: 18,
        reward_bits: 3,
        reward_min: -3,
        reward_max: 2,
        reward_offset: 3,
        depth: 64,
        horizon: 9,
        simulations: 5000,
        experience: 500_000,
    },
    DomainInfo {
        name: "biased-rps",
        aliases: &["rps", "biased_rps", "rock-paper-scissors"],
        action_count: 3,
        obs_count: 3,
        action_bits: 2,
        obs_bits: 2,
        reward_bits: 2,
        reward_min: -1,
        reward_max: 1,
        reward_offset: 1,
        depth: 32,
        horizon: 4,
        simulations: 10_000,
        experience: 1_000_000,
    },
    DomainInfo {
        name: "kuhn-poker",
        aliases: &["kuhn", "kuhn_poker"],
        action_count: 2,
        obs_count: 6,
        action_bits: 1,
        obs_bits: 4,
        reward_bits: 3,
        reward_min: -2,
        reward_max: 2,
        reward_offset: 2,
        depth: 42,
        horizon: 2,
        simulations: 3000,
        experience: 5_000_000,
    },
    DomainInfo {
        name: "pacman",
        aliases: &[],
        action_count: 4,
        obs_count: 65536,
        action_bits: 2,
        obs_bits: 16,
        reward_bits: 8,
        reward_min: -50,
        reward_max: 109,
        reward_offset: 50,
        depth: 64,
        horizon: 8,
        simulations: 500,
        experience: 100_000,
    },
];

/// Looks a domain up by canonical name or alias (case-insensitive).
pub fn domain(name: &str) -> Result<&'static DomainInfo, EnvError> {
    let key = name.trim().to_ascii_lowercase();
    CATALOG
        .iter()
        .find(|d| d.name == key || d.aliases.contains(&key.as_str()))
        .ok_or_else(|| EnvError::UnknownDomain(name.to_string()))
}

/// Creates a domain in its initial state.
pub fn make_env(name: &str, seed: u64) -> Result<Box<dyn Environment>, EnvError> {
    let info = domain(name)?;
    Ok(match info.name {
        "cheese-maze" => Box::new(CheeseMaze::new(seed)),
        "tiger" => Box::new(Tiger::new(seed)),
        "grid" => Box::new(Grid::new(seed)),
        "tictactoe" => Box::new(TicTacToe::new(seed)),
        "biased-rps" => Box::new(BiasedRps::new(seed)),
        "kuhn-poker" => Box::new(KuhnPoker::new(seed)),
        "pacman" => Box::new(Pacman::new(seed)),
        _ => unreachable!("catalog and constructors agree"),
    })
}

/// Optimal expected reward per cycle, computed once per process by solving
/// the domain's underlying (belief) MDP or game.
pub fn optimal_average_reward(name: &str) -> Result<f64, EnvError> {
    static CACHE: [OnceLock<f64>; 6] = [const { OnceLock::new() }; 6];
    let info = domain(name)?;
    let (slot, solve): (usize, fn() -> f64) = match info.name {
        "cheese-maze" => (0, cheese::optimal_average_reward),
        "tiger" => (1, tiger::optimal_average_reward),
        "grid" => (2, grid::optimal_average_reward),
        "tictactoe" => (3, tictactoe::optimal_average_reward),
        "biased-rps" => (4, rps::optimal_average_reward),
        "kuhn-poker" => (5, kuhn::optimal_average_reward),
        _ => return Err(EnvError::NoKnownOptimum(info.name)),
    };
    Ok(*CACHE[slot].get_or_init(solve))
}

pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn catalog_matches_environment_specs() {
        for info in &CATALOG {
            let env = make_env(info.name, 0).unwrap();
            assert_eq!(env.spec(), info.spec(), "{}", info.name);
            assert_eq!(env.name(), info.name);
        }
    }

    #[test]
    fn lookup_by_alias() {
        assert_eq!(domain("kuhn").unwrap().name, "kuhn-poker");
        assert_eq!(domain("Cheese").unwrap().name, "cheese-maze");
        assert!(matches!(domain("chess"), Err(EnvError::UnknownDomain(_))));
        assert!(make_env("chess", 0).is_err());
    }

    #[test]
    fn pacman_has_no_optimum() {
        assert_eq!(optimal_average_reward("pacman"), Err(EnvError::NoKnownOptimum("pacman")));
    }

    #[test]
    fn same_seed_same_stream() {
        for info in &CATALOG {
            let mut a = make_env(info.name, 42).unwrap();
            let mut b = make_env(info.name, 42).unwrap();
            let mut rng = seeded(1);
            for _ in 0..2000 {
                let act = rng.gen_range(0..info.action_count);
                assert_eq!(a.step(act), b.step(act), "{}", info.name);
            }
        }
    }

    #[test]
    fn clones_continue_identically() {
        for info in &CATALOG {
            let mut a = make_env(info.name, 3).unwrap();
            let mut rng = seeded(2);
            for _ in 0..100 {
                a.step(rng.gen_range(0..info.action_count));
            }
            let mut b = a.clone();
            for _ in 0..500 {
                let act = rng.gen_range(0..info.action_count);
                assert_eq!(a.step(act), b.step(act), "{}", info.name);
            }
        }
    }

    #[test]
    fn percepts_fit_the_codec() {
        for info in &CATALOG {
            let spec = info.spec();
            let mut env = make_env(info.name, 9).unwrap();
            let mut rng = seeded(4);
            for _ in 0..5000 {
                let p = env.step(rng.gen_range(0..info.action_count));
                let bits = spec.encode_percept(p).unwrap();
                assert_eq!(spec.decode_percept(bits).unwrap(), p);
            }
        }
    }
}

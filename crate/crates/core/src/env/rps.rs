//! Rock-paper-scissors against an exploitable opponent.
//!
//! Actions and observations: 0 rock, 1 paper, 2 scissors; the observation
//! is the opponent's move. If the opponent won the previous round playing
//! rock it plays rock again, otherwise it plays uniformly at random.
//! Rewards: win 1, draw 0, loss -1.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{seeded, Environment, FiniteMdp, CATALOG};
use crate::codec::{Action, Percept, SpaceSpec};

pub const ROCK: u64 = 0;
pub const PAPER: u64 = 1;
pub const SCISSORS: u64 = 2;

/// Reward to the player of `mine` against `theirs`.
pub fn payoff(mine: u64, theirs: u64) -> i64 {
    match (3 + mine - theirs) % 3 {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

#[derive(Debug, Clone)]
pub struct BiasedRps {
    won_with_rock: bool,
    rng: ChaCha8Rng,
}

impl BiasedRps {
    pub fn new(seed: u64) -> Self {
        Self {
            won_with_rock: false,
            rng: seeded(seed),
        }
    }

    /// Whether the opponent's next move is forced to rock.
    pub fn predictable(&self) -> bool {
        self.won_with_rock
    }
}

impl Environment for BiasedRps {
    fn name(&self) -> &'static str {
        "biased-rps"
    }

    fn spec(&self) -> SpaceSpec {
        CATALOG[4].spec()
    }

    fn step(&mut self, action: Action) -> Percept {
        let theirs = if self.won_with_rock { ROCK } else { self.rng.gen_range(0..3) };
        let reward = payoff(action as u64, theirs);
        self.won_with_rock = theirs == ROCK && reward < 0;
        Percept::new(theirs, reward)
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = seeded(seed);
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

/// Two-state MDP: state 1 when the opponent is about to repeat rock.
pub(super) fn optimal_average_reward() -> f64 {
    let mut mdp = FiniteMdp::new();
    for predictable in [false, true] {
        let actions = (0..3u64)
            .map(|mine| {
                let replies: Vec<(u64, f64)> = if predictable {
                    vec![(ROCK, 1.0)]
                } else {
                    (0..3).map(|t| (t, 1.0 / 3.0)).collect()
                };
                replies
                    .into_iter()
                    .map(|(theirs, p)| {
                        let r = payoff(mine, theirs);
                        let next = usize::from(theirs == ROCK && r < 0);
                        (p, next, r as f64)
                    })
                    .collect()
            })
            .collect();
        mdp.add_state(actions);
    }
    mdp.optimal_average_reward(1e-14)
}

//! Kuhn poker, agent in second position against a fixed equilibrium player.
//!
//! Three cards (0 jack, 1 queen, 2 king), one each, ante 1. The opponent
//! acts first; the agent sees its card and the opponent's action and then
//! passes (0) or bets (1). One hand is played per cycle: the percept after
//! the agent's action carries the net chips won on that hand and the
//! observation of the next hand, `2 * card + opponent_bet`.
//!
//! The opponent plays the equilibrium family with bluff parameter `α`:
//! bet a jack with probability `α`, never bet a queen, bet a king with
//! probability `3α`; facing a bet after checking, fold a jack, call with a
//! queen with probability `α + 1/3`, always call with a king.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{seeded, Environment, CATALOG};
use crate::codec::{Action, Percept, SpaceSpec};

pub const NASH_BLUFF: f64 = 1.0 / 3.0;

pub const PASS: Action = 0;
pub const BET: Action = 1;

fn opening_bet_probability(card: u8) -> f64 {
    match card {
        0 => NASH_BLUFF,
        1 => 0.0,
        _ => 3.0 * NASH_BLUFF,
    }
}

fn call_probability(card: u8) -> f64 {
    match card {
        0 => 0.0,
        1 => NASH_BLUFF + 1.0 / 3.0,
        _ => 1.0,
    }
}

/// Agent's net chips given both cards, the opponent's opening and, when
/// relevant, whether the opponent calls the agent's bet.
fn settle(agent: u8, opponent: u8, opponent_bet: bool, action: Action, opponent_calls: bool) -> i64 {
    let showdown = |stake: i64| if agent > opponent { stake } else { -stake };
    match (opponent_bet, action) {
        (true, PASS) => -1,
        (true, _) => showdown(2),
        (false, PASS) => showdown(1),
        (false, _) if opponent_calls => showdown(2),
        (false, _) => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Hand {
    agent: u8,
    opponent: u8,
    opponent_bet: bool,
}

#[derive(Debug, Clone)]
pub struct KuhnPoker {
    hand: Hand,
    rng: ChaCha8Rng,
}

impl KuhnPoker {
    pub fn new(seed: u64) -> Self {
        let mut rng = seeded(seed);
        let hand = Self::deal(&mut rng);
        Self { hand, rng }
    }

    fn deal(rng: &mut ChaCha8Rng) -> Hand {
        let mut deck = [0u8, 1, 2];
        deck.shuffle(rng);
        let opponent_bet = rng.gen_bool(opening_bet_probability(deck[1]));
        Hand {
            agent: deck[0],
            opponent: deck[1],
            opponent_bet,
        }
    }

    /// (agent card, opponent card, opponent opened with a bet).
    pub fn current_hand(&self) -> (u8, u8, bool) {
        (self.hand.agent, self.hand.opponent, self.hand.opponent_bet)
    }

    pub fn observation(&self) -> u64 {
        2 * u64::from(self.hand.agent) + u64::from(self.hand.opponent_bet)
    }
}

impl Environment for KuhnPoker {
    fn name(&self) -> &'static str {
        "kuhn-poker"
    }

    fn spec(&self) -> SpaceSpec {
        CATALOG[5].spec()
    }

    fn step(&mut self, action: Action) -> Percept {
        let h = self.hand;
        let calls = !h.opponent_bet && action == BET && self.rng.gen_bool(call_probability(h.opponent));
        let reward = settle(h.agent, h.opponent, h.opponent_bet, action, calls);
        self.hand = Self::deal(&mut self.rng);
        Percept::new(self.observation(), reward)
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = seeded(seed);
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

/// Value per hand of the agent's best response, by enumerating the deal
/// and opponent randomness for each (card, opponent action) information set.
pub(super) fn optimal_average_reward() -> f64 {
    let mut total = 0.0;
    for agent in 0..3u8 {
        for opponent_bet in [false, true] {
            let mut values = [0.0; 2];
            for opponent in (0..3u8).filter(|&c| c != agent) {
                let p_open = opening_bet_probability(opponent);
                let p_reach = (1.0 / 6.0) * if opponent_bet { p_open } else { 1.0 - p_open };
                for action in [PASS, BET] {
                    let p_call = if !opponent_bet && action == BET { call_probability(opponent) } else { 0.0 };
                    let v = p_call * settle(agent, opponent, opponent_bet, action, true) as f64
                        + (1.0 - p_call) * settle(agent, opponent, opponent_bet, action, false) as f64;
                    values[action] += p_reach * v;
                }
            }
            total += values[0].max(values[1]);
        }
    }
    total
}

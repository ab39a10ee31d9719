//! Extended tiger: behind one of two doors is gold, behind the other a
//! tiger. The agent must stand up before it can open a door.
//!
//! Actions: 0 listen, 1 stand, 2 open left, 3 open right. Listening (only
//! while seated) reports the tiger's side correctly with probability 0.85.
//! Observations: 0 nothing, 1 tiger heard left, 2 tiger heard right.
//! Listening and standing cost 1; opening pays 10 for gold and -100 for the
//! tiger and starts a new episode seated with a fresh tiger. Any action not
//! allowed in the current posture costs 10 and changes nothing.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{seeded, Environment, FiniteMdp, CATALOG};
use crate::codec::{Action, Percept, SpaceSpec};

pub const LISTEN: Action = 0;
pub const STAND: Action = 1;
pub const OPEN_LEFT: Action = 2;
pub const OPEN_RIGHT: Action = 3;

pub const LISTEN_ACCURACY: f64 = 0.85;
const COST: i64 = -1;
const INVALID: i64 = -10;
const GOLD: i64 = 10;
const EATEN: i64 = -100;

const NOTHING: u64 = 0;
const HEARD_LEFT: u64 = 1;
const HEARD_RIGHT: u64 = 2;

#[derive(Debug, Clone)]
pub struct Tiger {
    tiger_left: bool,
    standing: bool,
    rng: ChaCha8Rng,
}

impl Tiger {
    pub fn new(seed: u64) -> Self {
        let mut rng = seeded(seed);
        let tiger_left = rng.gen_bool(0.5);
        Self {
            tiger_left,
            standing: false,
            rng,
        }
    }

    pub fn tiger_left(&self) -> bool {
        self.tiger_left
    }

    pub fn standing(&self) -> bool {
        self.standing
    }
}

impl Environment for Tiger {
    fn name(&self) -> &'static str {
        "tiger"
    }

    fn spec(&self) -> SpaceSpec {
        CATALOG[1].spec()
    }

    fn step(&mut self, action: Action) -> Percept {
        match (action, self.standing) {
            (LISTEN, false) => {
                let correct = self.rng.gen_bool(LISTEN_ACCURACY);
                let heard_left = self.tiger_left == correct;
                Percept::new(if heard_left { HEARD_LEFT } else { HEARD_RIGHT }, COST)
            }
            (STAND, false) => {
                self.standing = true;
                Percept::new(NOTHING, COST)
            }
            (OPEN_LEFT | OPEN_RIGHT, true) => {
                let opened_tiger = (action == OPEN_LEFT) == self.tiger_left;
                self.tiger_left = self.rng.gen_bool(0.5);
                self.standing = false;
                Percept::new(NOTHING, if opened_tiger { EATEN } else { GOLD })
            }
            _ => Percept::new(NOTHING, INVALID),
        }
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = seeded(seed);
    }

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

/// Beliefs beyond this many net listens are indistinguishable from certainty
/// at double precision for any policy worth following.
const MAX_EVIDENCE: i32 = 40;

/// Solves the belief MDP. The posterior on the tiger's side depends only on
/// the net number of left-minus-right reports `k` since the episode began.
pub(super) fn optimal_average_reward() -> f64 {
    let q = LISTEN_ACCURACY;
    let p_left = |k: i32| {
        let ratio = (q / (1.0 - q)).powi(k);
        ratio / (1.0 + ratio)
    };
    let width = (2 * MAX_EVIDENCE + 1) as usize;
    // States: posture * width + (k + MAX_EVIDENCE).
    let id = |standing: bool, k: i32| usize::from(standing) * width + (k + MAX_EVIDENCE) as usize;
    let start = id(false, 0);
    let mut mdp = FiniteMdp::new();
    for standing in [false, true] {
        for k in -MAX_EVIDENCE..=MAX_EVIDENCE {
            let here = id(standing, k);
            let invalid = vec![(1.0, here, INVALID as f64)];
            let pl = p_left(k);
            let actions = if standing {
                let open = |tiger_if_left: bool| {
                    let p_tiger = if tiger_if_left { pl } else { 1.0 - pl };
                    vec![(1.0, start, p_tiger * EATEN as f64 + (1.0 - p_tiger) * GOLD as f64)]
                };
                vec![invalid.clone(), invalid, open(true), open(false)]
            } else {
                let hear_left = pl * q + (1.0 - pl) * (1.0 - q);
                let up = (k + 1).min(MAX_EVIDENCE);
                let down = (k - 1).max(-MAX_EVIDENCE);
                vec![
                    vec![
                        (hear_left, id(false, up), COST as f64),
                        (1.0 - hear_left, id(false, down), COST as f64),
                    ],
                    vec![(1.0, id(true, k), COST as f64)],
                    invalid.clone(),
                    invalid,
                ]
            };
            mdp.add_state(actions);
        }
    }
    mdp.optimal_average_reward(1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_actions_cost_ten() {
        let mut t = Tiger::new(0);
        assert_eq!(t.step(OPEN_LEFT), Percept::new(NOTHING, INVALID));
        t.step(STAND);
        assert_eq!(t.step(LISTEN), Percept::new(NOTHING, INVALID));
        assert_eq!(t.step(STAND), Percept::new(NOTHING, INVALID));
        assert!(t.standing());
    }

    #[test]
    fn opening_resets_episode() {
        let mut t = Tiger::new(1);
        t.step(STAND);
        let gold_door = if t.tiger_left() { OPEN_RIGHT } else { OPEN_LEFT };
        assert_eq!(t.step(gold_door), Percept::new(NOTHING, GOLD));
        assert!(!t.standing());
    }

    #[test]
    fn listening_accuracy() {
        let mut t = Tiger::new(2);
        let n = 20_000;
        let mut correct = 0;
        for _ in 0..n {
            let expected = if t.tiger_left() { HEARD_LEFT } else { HEARD_RIGHT };
            correct += usize::from(t.step(LISTEN).observation == expected);
        }
        let rate = correct as f64 / n as f64;
        assert!((rate - LISTEN_ACCURACY).abs() < 0.01, "{rate}");
    }

    #[test]
    fn optimum_beats_simple_policies() {
        let g = optimal_average_reward();
        // Listen twice, open on agreement: a lower bound well above zero.
        assert!(g > 0.5 && g < 10.0 / 3.0, "{g}");
    }
}

//! 4×4 grid: walk from the top-left corner to the bottom-right one.
//!
//! Actions are N, E, S, W. Moves off the grid leave the agent in place.
//! Entering the goal pays 1 and returns the agent to the start. The
//! observation carries no information.

use super::{Environment, FiniteMdp, CATALOG};
use crate::codec::{Action, Percept, SpaceSpec};

pub const SIZE: usize = 4;
const GOAL: (usize, usize) = (SIZE - 1, SIZE - 1);

#[derive(Debug, Clone)]
pub struct Grid {
    row: usize,
    col: usize,
}

impl Grid {
    /// The grid is deterministic; the seed is accepted for a uniform interface.
    pub fn new(_seed: u64) -> Self {
        Self { row: 0, col: 0 }
    }

    pub fn position(&self) -> (usize, usize) {
        (self.row, self.col)
    }
}

/// Next (row, col) and reward from `pos` under `action`.
fn transition(pos: (usize, usize), action: Action) -> ((usize, usize), i64) {
    let (r, c) = pos;
    let next = match action {
        0 => (r.saturating_sub(1), c),
        1 => (r, (c + 1).min(SIZE - 1)),
        2 => ((r + 1).min(SIZE - 1), c),
        _ => (r, c.saturating_sub(1)),
    };
    if next == GOAL {
        ((0, 0), 1)
    } else {
        (next, 0)
    }
}

impl Environment for Grid {
    fn name(&self) -> &'static str {
        "grid"
    }

    fn spec(&self) -> SpaceSpec {
        CATALOG[2].spec()
    }

    fn step(&mut self, action: Action) -> Percept {
        let ((r, c), reward) = transition((self.row, self.col), action);
        self.row = r;
        self.col = c;
        Percept::new(0, reward)
    }

    fn reseed(&mut self, _seed: u64) {}

    fn box_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

pub(super) fn optimal_average_reward() -> f64 {
    let mut mdp = FiniteMdp::new();
    for s in 0..SIZE * SIZE {
        let pos = (s / SIZE, s % SIZE);
        let actions = (0..4)
            .map(|a| {
                let ((r, c), reward) = transition(pos, a);
                vec![(1.0, r * SIZE + c, reward as f64)]
            })
            .collect();
        mdp.add_state(actions);
    }
    mdp.optimal_average_reward(1e-13)
}

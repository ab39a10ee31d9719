//! Optimal average reward of small finite MDPs.
//!
//! Relative value iteration on the aperiodicity-transformed chain
//! `P' = τP + (1-τ)I`, which has the same optimal policies and average
//! reward `τ·g`. The span of successive value differences brackets `g`.

/// One outcome of taking an action: (probability, next state, reward).
pub type Outcome = (f64, usize, f64);

/// A finite MDP given as, for each state, the outcome lists of its actions.
#[derive(Debug, Clone, Default)]
pub struct FiniteMdp {
    pub states: Vec<Vec<Vec<Outcome>>>,
}

const TAU: f64 = 0.5;

impl FiniteMdp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self, actions: Vec<Vec<Outcome>>) -> usize {
        self.states.push(actions);
        self.states.len() - 1
    }

    /// Optimal long-run average reward per step for a communicating MDP.
    pub fn optimal_average_reward(&self, tolerance: f64) -> f64 {
        let n = self.states.len();
        let mut v = vec![0.0; n];
        let mut next = vec![0.0; n];
        for _ in 0..10_000_000 {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (s, actions) in self.states.iter().enumerate() {
                let best = actions
                    .iter()
                    .map(|outcomes| {
                        let q: f64 = outcomes.iter().map(|&(p, t, r)| p * (r + v[t])).sum();
                        TAU * q + (1.0 - TAU) * v[s]
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                next[s] = best;
                let d = best - v[s];
                lo = lo.min(d);
                hi = hi.max(d);
            }
            let anchor = next[0];
            for (x, y) in v.iter_mut().zip(&next) {
                *x = y - anchor;
            }
            if hi - lo < tolerance * TAU {
                return (lo + hi) / (2.0 * TAU);
            }
        }
        panic!("relative value iteration did not converge");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_state_cycle() {
        // Alternate between states; reward 1 on leaving state 1.
        let mut m = FiniteMdp::new();
        m.add_state(vec![vec![(1.0, 1, 0.0)]]);
        m.add_state(vec![vec![(1.0, 0, 1.0)]]);
        assert_relative_eq!(m.optimal_average_reward(1e-12), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn chooses_better_loop() {
        // State 0: stay for 0.3 or go to 1; state 1: back to 0 for 1.0.
        let mut m = FiniteMdp::new();
        m.add_state(vec![vec![(1.0, 0, 0.3)], vec![(1.0, 1, 0.0)]]);
        m.add_state(vec![vec![(1.0, 0, 1.0)]]);
        assert_relative_eq!(m.optimal_average_reward(1e-12), 0.5, epsilon = 1e-10);
    }
}

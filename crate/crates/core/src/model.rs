//! Environment models the planner can simulate against.
//!
//! A model is a conditional distribution over the next percept given the
//! history so far. Planning mutates the model as it imagines future
//! experience, so every model supports cheap checkpoints and exact rollback.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::codec::{Action, Bits, SpaceSpec};
use crate::ctw::{ContextTree, CtwError};

pub trait EnvironmentModel {
    fn spec(&self) -> &SpaceSpec;

    /// Appends an action to the model's history.
    fn condition_action(&mut self, action: Action);

    /// Appends a known percept, learning from it.
    fn observe_percept(&mut self, percept: Bits);

    /// Draws a percept from `ρ(x | h)` and appends it.
    fn sample_percept<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Bits;

    /// `ρ(x | h)` for the history ending in an action. Leaves the model unchanged.
    fn percept_probability(&mut self, percept: Bits) -> f64;

    /// Opaque marker for [`rollback`](Self::rollback).
    fn checkpoint(&self) -> usize;

    /// Undoes everything appended since `checkpoint` was taken.
    fn rollback(&mut self, checkpoint: usize);
}

/// The context-tree mixture as an environment model over a given space.
#[derive(Debug, Clone)]
pub struct CtwModel {
    spec: SpaceSpec,
    tree: ContextTree,
}

impl CtwModel {
    pub fn new(spec: SpaceSpec, depth: usize) -> Result<Self, CtwError> {
        Ok(Self {
            spec,
            tree: ContextTree::new(depth)?,
        })
    }

    pub fn from_tree(spec: SpaceSpec, tree: ContextTree) -> Self {
        Self { spec, tree }
    }

    pub fn tree(&self) -> &ContextTree {
        &self.tree
    }

    pub fn tree_mut(&mut self) -> &mut ContextTree {
        &mut self.tree
    }

    /// Advances the context with a percept without learning from it.
    pub fn condition_percept(&mut self, percept: Bits) {
        self.tree.condition(percept.iter());
    }

    pub fn commit(&mut self) {
        self.tree.commit();
    }
}

impl EnvironmentModel for CtwModel {
    fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    fn condition_action(&mut self, action: Action) {
        let bits = self.spec.encode_action(action).expect("planner produced a valid action");
        self.tree.condition(bits.iter());
    }

    fn observe_percept(&mut self, percept: Bits) {
        debug_assert_eq!(percept.width(), self.spec.percept_bits());
        self.tree.update_bits(percept.iter());
    }

    fn sample_percept<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Bits {
        let width = self.spec.percept_bits();
        let code = self.tree.sample_bits(width, rng);
        Bits::new(code, width).expect("sampled code fits its width")
    }

    fn percept_probability(&mut self, percept: Bits) -> f64 {
        let mark = self.tree.journal_len();
        let before = self.tree.block_log_prob();
        self.tree.update_bits(percept.iter());
        let after = self.tree.block_log_prob();
        self.tree.revert_to(mark).expect("journal mark is valid");
        (after - before).exp()
    }

    fn checkpoint(&self) -> usize {
        self.tree.journal_len()
    }

    fn rollback(&mut self, checkpoint: usize) {
        self.tree
            .revert_to(checkpoint)
            .expect("rollback to a checkpoint taken on this model");
    }
}

/// Completed cycles plus the pending action, as seen by an [`ExactModel`].
#[derive(Debug, Clone, Copy)]
pub struct Step {
    pub action: Action,
    pub percept: Option<Bits>,
}

type Conditional = dyn Fn(&[Step], Action) -> Vec<(Bits, f64)> + Send + Sync;

/// A fixed, fully known environment model given by its conditional
/// distribution. Used as a frozen ground truth when testing the planner.
#[derive(Clone)]
pub struct ExactModel {
    spec: SpaceSpec,
    conditional: Arc<Conditional>,
    steps: Vec<Step>,
    /// Number of push operations, for checkpoints.
    ops: Vec<bool>,
}

impl fmt::Debug for ExactModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactModel")
            .field("spec", &self.spec)
            .field("steps", &self.steps)
            .finish_non_exhaustive()
    }
}

impl ExactModel {
    /// `conditional(completed, action)` returns the distribution of the next
    /// percept as (percept, probability) pairs. `completed` holds the
    /// finished cycles only.
    pub fn new<F>(spec: SpaceSpec, conditional: F) -> Self
    where
        F: Fn(&[Step], Action) -> Vec<(Bits, f64)> + Send + Sync + 'static,
    {
        Self {
            spec,
            conditional: Arc::new(conditional),
            steps: Vec::new(),
            ops: Vec::new(),
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    fn distribution(&self) -> Vec<(Bits, f64)> {
        let (last, completed) = self.steps.split_last().expect("an action is pending");
        assert!(last.percept.is_none(), "an action is pending");
        (self.conditional)(completed, last.action)
    }
}

impl EnvironmentModel for ExactModel {
    fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    fn condition_action(&mut self, action: Action) {
        self.steps.push(Step { action, percept: None });
        self.ops.push(true);
    }

    fn observe_percept(&mut self, percept: Bits) {
        let last = self.steps.last_mut().expect("an action is pending");
        last.percept = Some(percept);
        self.ops.push(false);
    }

    fn sample_percept<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Bits {
        let dist = self.distribution();
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = dist.last().expect("non-empty distribution").0;
        for &(x, p) in &dist {
            acc += p;
            if u < acc {
                chosen = x;
                break;
            }
        }
        self.observe_percept(chosen);
        chosen
    }

    fn percept_probability(&mut self, percept: Bits) -> f64 {
        self.distribution()
            .iter()
            .filter(|(x, _)| *x == percept)
            .map(|(_, p)| p)
            .sum()
    }

    fn checkpoint(&self) -> usize {
        self.ops.len()
    }

    fn rollback(&mut self, checkpoint: usize) {
        while self.ops.len() > checkpoint {
            if self.ops.pop().expect("op") {
                self.steps.pop();
            } else if let Some(last) = self.steps.last_mut() {
                last.percept = None;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec() -> SpaceSpec {
        SpaceSpec::new(2, 2, 0, 1, 1, 1, 1, 0).unwrap()
    }

    #[test]
    fn ctw_percept_probabilities_normalise() {
        let mut m = CtwModel::new(spec(), 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            m.condition_action(rng.gen_range(0..2));
            let x = m.sample_percept(&mut rng);
            assert_eq!(x.width(), 2);
        }
        m.commit();
        m.condition_action(1);
        let total: f64 = (0..4).map(|c| m.percept_probability(Bits::new(c, 2).unwrap())).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ctw_rollback_restores_tree() {
        let mut m = CtwModel::new(spec(), 4).unwrap();
        let before = m.tree().clone();
        let cp = m.checkpoint();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            m.condition_action(0);
            m.sample_percept(&mut rng);
        }
        m.rollback(cp);
        assert!(m.tree().same_state(&before));
    }

    #[test]
    fn exact_model_samples_and_rolls_back() {
        let one = Bits::new(1, 2).unwrap();
        let zero = Bits::new(0, 2).unwrap();
        let mut m = ExactModel::new(spec(), move |_, a| {
            if a == 1 {
                vec![(one, 1.0)]
            } else {
                vec![(zero, 0.5), (one, 0.5)]
            }
        });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cp = m.checkpoint();
        m.condition_action(1);
        assert_eq!(m.percept_probability(one), 1.0);
        assert_eq!(m.sample_percept(&mut rng), one);
        m.condition_action(0);
        assert_eq!(m.percept_probability(zero), 0.5);
        m.rollback(cp);
        assert!(m.steps().is_empty());
    }
}

//! Full-width expectimax over a model, for small instances.

use super::SearchError;
use crate::codec::{Action, Bits};
use crate::model::EnvironmentModel;

/// Largest `(|A| * 2^{l_X})^m` the exact recursion will attempt.
pub const MAX_EXPECTIMAX_LEAVES: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectimax {
    /// `V^m(h)`
    pub value: f64,
    /// Lowest-indexed maximising first action.
    pub action: Action,
}

/// Exact `m`-horizon expectimax value of the model's current history.
/// Percept probabilities come from the model; rewards are decoded with the
/// same clamping the planner uses.
pub fn expectimax<M: EnvironmentModel>(model: &mut M, horizon: usize) -> Result<Expectimax, SearchError> {
    if horizon == 0 {
        return Err(SearchError::ZeroHorizon);
    }
    let spec = *model.spec();
    let branching = spec.action_count() as f64 * 2f64.powi(spec.percept_bits() as i32);
    let leaves = branching.powi(horizon as i32);
    if leaves > MAX_EXPECTIMAX_LEAVES {
        return Err(SearchError::TooLarge {
            leaves,
            limit: MAX_EXPECTIMAX_LEAVES,
        });
    }
    let (value, action) = decision_value(model, horizon);
    Ok(Expectimax { value, action })
}

fn decision_value<M: EnvironmentModel>(model: &mut M, remaining: usize) -> (f64, Action) {
    let spec = *model.spec();
    let mut best = (f64::NEG_INFINITY, 0);
    for action in 0..spec.action_count() {
        let mark = model.checkpoint();
        model.condition_action(action);
        let mut value = 0.0;
        for code in 0..1u64 << spec.percept_bits() {
            let percept = Bits::new(code, spec.percept_bits()).expect("code fits");
            let p = model.percept_probability(percept);
            if p == 0.0 {
                continue;
            }
            let reward = spec.decode_percept_clamped(percept).expect("percept width").reward as f64;
            let future = if remaining > 1 {
                let inner = model.checkpoint();
                model.observe_percept(percept);
                let (v, _) = decision_value(model, remaining - 1);
                model.rollback(inner);
                v
            } else {
                0.0
            };
            value += p * (reward + future);
        }
        model.rollback(mark);
        if value > best.0 {
            best = (value, action);
        }
    }
    best
}

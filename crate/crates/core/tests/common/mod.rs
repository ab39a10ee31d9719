//! Oracles and fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use mc_aixi::ctw::ContextTree;
use mc_aixi::pst::{enumerate_models, model_log_prob, HistoryBit, ParametricPst};
use rand::Rng;

/// Random cycles with `action_bits` action bits and `percept_bits` percept bits each.
pub fn random_stream<R: Rng>(rng: &mut R, cycles: usize, action_bits: usize, percept_bits: usize) -> Vec<HistoryBit> {
    let mut out = Vec::with_capacity(cycles * (action_bits + percept_bits));
    for _ in 0..cycles {
        out.extend((0..action_bits).map(|_| HistoryBit::Action(rng.gen())));
        out.extend((0..percept_bits).map(|_| HistoryBit::Percept(rng.gen())));
    }
    out
}

/// Feeds a stream bit by bit to a fresh tree.
pub fn tree_from(depth: usize, stream: &[HistoryBit]) -> ContextTree {
    let mut tree = ContextTree::new(depth).unwrap();
    for &hb in stream {
        match hb {
            HistoryBit::Action(b) => tree.condition([b]),
            HistoryBit::Percept(b) => tree.update(b),
        }
    }
    tree
}

/// Both sides of the squared-error bound for the mixture against a true PST.
///
/// One action bit (from `actions`) and one percept bit per cycle, horizon
/// `actions.len()`. The left side sums, over every cycle and every percept
/// prefix, the true probability of the prefix times the squared prediction
/// error of the mixture. The right side is the best model's code length in
/// nats plus the KL divergence of the truth from that model's KT
/// distribution. Everything is exhaustive enumeration.
pub fn squared_error_bound(truth: &ParametricPst, depth: usize, actions: &[bool]) -> (f64, f64) {
    struct Walk<'a> {
        truth: &'a ParametricPst,
        actions: &'a [bool],
        tree: ContextTree,
        context: Vec<bool>,
        stream: Vec<HistoryBit>,
        lhs: f64,
        sequences: Vec<(f64, Vec<HistoryBit>)>,
    }

    fn go(w: &mut Walk<'_>, k: usize, mu: f64) {
        if k == w.actions.len() {
            w.sequences.push((mu, w.stream.clone()));
            return;
        }
        let a = w.actions[k];
        w.tree.condition([a]);
        w.context.push(a);
        w.stream.push(HistoryBit::Action(a));
        let p_true = w.truth.predict_one(&w.context);
        let p_mix = w.tree.predict(true);
        // Both percept values contribute the same squared error.
        w.lhs += mu * 2.0 * (p_true - p_mix).powi(2);
        for bit in [false, true] {
            w.tree.update(bit);
            w.context.push(bit);
            w.stream.push(HistoryBit::Percept(bit));
            go(w, k + 1, mu * if bit { p_true } else { 1.0 - p_true });
            w.stream.pop();
            w.context.pop();
            w.tree.revert(1).unwrap();
        }
        w.stream.pop();
        w.context.pop();
        w.tree.revert(1).unwrap();
    }

    let mut w = Walk {
        truth,
        actions,
        tree: ContextTree::new(depth).unwrap(),
        context: vec![false; depth],
        stream: Vec::new(),
        lhs: 0.0,
        sequences: Vec::new(),
    };
    go(&mut w, 0, 1.0);

    let rhs = enumerate_models(depth)
        .unwrap()
        .iter()
        .map(|m| {
            let kl: f64 = w
                .sequences
                .iter()
                .map(|(mu, s)| mu * (mu.ln() - model_log_prob(m, depth, s).unwrap()))
                .sum();
            m.code_length(depth) as f64 * std::f64::consts::LN_2 + kl
        })
        .fold(f64::INFINITY, f64::min);
    (w.lhs, rhs)
}

/// A random true PST of depth at most `depth` with parameters in `[0.05, 0.95]`.
pub fn random_truth<R: Rng>(rng: &mut R, depth: usize) -> ParametricPst {
    let models = enumerate_models(depth).unwrap();
    let shape = models[rng.gen_range(0..models.len())].clone();
    let theta = (0..shape.leaf_count()).map(|_| rng.gen_range(0.05..0.95)).collect();
    ParametricPst::new(shape, theta).unwrap()
}

use mc_aixi::codec::{Bits, SpaceSpec};
use mc_aixi::model::{ExactModel, Step};

/// Percept code for the toy models below: a constant observation bit of 0
/// followed by a one-bit reward.
fn reward_code(r: bool) -> Bits {
    Bits::new(u64::from(r), 2).unwrap()
}

/// Two actions, two percepts (reward 0 or 1). Action 0 pays with
/// probability 0.6; action 1 pays with probability 0.9 right after a paid
/// cycle and 0.25 otherwise.
pub fn toy_model() -> ExactModel {
    let spec = SpaceSpec::new(2, 1, 0, 1, 1, 1, 1, 0).unwrap();
    ExactModel::new(spec, |done: &[Step], a| {
        let paid = done.last().and_then(|s| s.percept).is_some_and(|p| p.value() & 1 == 1);
        let p = match (a, paid) {
            (0, _) => 0.6,
            (_, true) => 0.9,
            (_, false) => 0.25,
        };
        vec![(reward_code(true), p), (reward_code(false), 1.0 - p)]
    })
}

/// Guess a fair coin: the observation is the coin, and the reward is 1 when
/// the action matched it.
pub fn coin_guess_model() -> ExactModel {
    let spec = SpaceSpec::new(2, 2, 0, 1, 1, 1, 1, 0).unwrap();
    ExactModel::new(spec, |_: &[Step], a| {
        (0..2u64)
            .map(|coin| {
                let reward = u64::from(coin == a as u64);
                (Bits::new(coin << 1 | reward, 2).unwrap(), 0.5)
            })
            .collect()
    })
}

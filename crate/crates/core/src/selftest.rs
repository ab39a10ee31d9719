//! Quick internal consistency checks against the enumeration references.
//!
//! These are small versions of the checks in the test suite, cheap enough to
//! run from the command line on any machine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::SpaceSpec;
use crate::ctw::ContextTree;
use crate::kt::{block_probability, log_block_probability};
use crate::model::{CtwModel, EnvironmentModel};
use crate::pst::{brute_force_mixture_log_prob, enumerate_models, HistoryBit};
use crate::search::{rho_uct_search, Budget, PlannerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// A random stream of cycles with one action bit and `percept_bits` percept bits.
pub fn random_stream<R: Rng>(rng: &mut R, cycles: usize, percept_bits: usize) -> Vec<HistoryBit> {
    let mut out = Vec::new();
    for _ in 0..cycles {
        out.push(HistoryBit::Action(rng.gen()));
        out.extend((0..percept_bits).map(|_| HistoryBit::Percept(rng.gen())));
    }
    out
}

/// Feeds a stream to a fresh context tree and returns its block log probability.
pub fn tree_log_prob(depth: usize, stream: &[HistoryBit]) -> f64 {
    let mut tree = ContextTree::new(depth).expect("positive depth");
    for &hb in stream {
        match hb {
            HistoryBit::Action(b) => tree.condition([b]),
            HistoryBit::Percept(b) => tree.update(b),
        }
    }
    tree.block_log_prob()
}

/// Context tree against the explicit mixture over every tree structure.
pub fn mixture_equivalence(streams: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for depth in 1..=3 {
        for _ in 0..streams {
            let cycles = rng.gen_range(1..=32);
            let percept_bits = rng.gen_range(1..=3);
            let stream = random_stream(&mut rng, cycles, percept_bits);
            let reference = brute_force_mixture_log_prob(depth, &stream).expect("depth within limit");
            worst = worst.max((tree_log_prob(depth, &stream) - reference).abs());
        }
    }
    Check::new("context tree = explicit mixture", worst <= 1e-9, format!("max |Δ| = {worst:.3e}"))
}

/// Model counts and prior mass for depths 1 to 4.
pub fn prior_normalization() -> Check {
    let mut counts = Vec::new();
    let mut worst: f64 = 0.0;
    for depth in 1..=4 {
        let models = enumerate_models(depth).expect("depth within limit");
        let mass: f64 = models.iter().map(|m| 2f64.powi(-(m.code_length(depth) as i32))).sum();
        worst = worst.max((mass - 1.0).abs());
        counts.push(models.len());
    }
    Check::new(
        "prior sums to one",
        counts == [2, 5, 26, 677] && worst <= 1e-12,
        format!("model counts {counts:?}, max |Σ - 1| = {worst:.3e}"),
    )
}

/// Closed-form block probabilities against the sequential product.
pub fn kt_product() -> Check {
    let mut worst: f64 = 0.0;
    for a in 0..=8u64 {
        for b in 0..=8 - a {
            // Zeros first, then ones; the order does not matter.
            let mut p = 1.0;
            for i in 0..a {
                p *= (i as f64 + 0.5) / (i as f64 + 1.0);
            }
            for j in 0..b {
                p *= (j as f64 + 0.5) / ((a + j) as f64 + 1.0);
            }
            worst = worst.max((log_block_probability(a, b).exp() - p).abs());
        }
    }
    let two_two = block_probability(2, 2);
    Check::new(
        "KT closed form",
        worst <= 1e-12 && two_two == 3.0 / 128.0,
        format!("max |Δ| = {worst:.3e}, Pr(0011) = {two_two}"),
    )
}

/// Summing the mixture over every next percept recovers the prefix probability.
pub fn chronological(histories: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..histories {
        let mut tree = ContextTree::new(4).expect("positive depth");
        for _ in 0..16 {
            let prefix = tree.block_log_prob().exp();
            tree.condition([rng.gen::<bool>()]);
            let mut total = 0.0;
            for x in 0..4u8 {
                tree.update(x & 2 != 0);
                tree.update(x & 1 != 0);
                total += tree.block_log_prob().exp();
                tree.revert(2).expect("two updates to undo");
            }
            worst = worst.max((total - prefix).abs() / prefix);
            tree.update(rng.gen());
            tree.update(rng.gen());
            tree.commit();
        }
    }
    Check::new("percept probabilities sum to one", worst <= 1e-9, format!("max relative |Δ| = {worst:.3e}"))
}

/// Searching leaves the committed model exactly as it was.
pub fn rollback(episodes: usize, seed: u64) -> Check {
    let spec = SpaceSpec::new(3, 3, -1, 1, 2, 2, 2, 1).expect("valid space");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = CtwModel::new(spec, 8).expect("positive depth");
    let mut failures = 0;
    for _ in 0..episodes {
        let before = model.clone();
        let cfg = PlannerConfig {
            horizon: rng.gen_range(1..=4),
            exploration: 1.0,
            reward_min: -1.0,
            reward_max: 1.0,
            budget: Budget::simulations(rng.gen_range(1..=20)),
        };
        let out = rho_uct_search(&mut model, &cfg, &mut rng).expect("valid planner settings");
        if !model.tree().same_state(before.tree()) {
            failures += 1;
        }
        model.condition_action(out.action);
        model.sample_percept(&mut rng);
        model.commit();
    }
    Check::new("search restores the model", failures == 0, format!("{failures} of {episodes} episodes differ"))
}

pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        mixture_equivalence(20, seed),
        prior_normalization(),
        kt_product(),
        chronological(20, seed),
        rollback(100, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for check in run_all(3) {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}

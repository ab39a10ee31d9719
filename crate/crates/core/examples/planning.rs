//! Planning over a known model: exact expectimax against ρUCT as the
//! simulation budget grows.
//!
//! Arm 0 pays with probability 0.6. Arm 1 pays with probability 0.9 right
//! after a paid cycle and 0.25 otherwise, so it is only worth pulling when
//! the last cycle paid.

use mc_aixi::codec::{Bits, SpaceSpec};
use mc_aixi::model::{ExactModel, Step};
use mc_aixi::search::{expectimax, rho_uct_search, Budget, PlannerConfig, SearchTree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model() -> ExactModel {
    let spec = SpaceSpec::new(2, 1, 0, 1, 1, 1, 1, 0).expect("valid space");
    ExactModel::new(spec, |done: &[Step], a| {
        let paid = done.last().and_then(|s| s.percept).is_some_and(|p| p.value() & 1 == 1);
        let p = match (a, paid) {
            (0, _) => 0.6,
            (_, true) => 0.9,
            (_, false) => 0.25,
        };
        let code = |r: u64| Bits::new(r, 2).expect("two-bit percept");
        vec![(code(1), p), (code(0), 1.0 - p)]
    })
}

fn main() {
    let horizon = 4;
    let exact = expectimax(&mut model(), horizon).expect("positive horizon");
    println!("expectimax: value {:.4}, action {}", exact.value, exact.action);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for sims in [10, 100, 1000, 10_000, 100_000] {
        let cfg = PlannerConfig {
            horizon,
            exploration: std::f64::consts::SQRT_2,
            reward_min: 0.0,
            reward_max: 1.0,
            budget: Budget::simulations(sims),
        };
        let out = rho_uct_search(&mut model(), &cfg, &mut rng).expect("valid settings");
        println!(
            "ρUCT {sims:>6} sims: value {:.4}, action {}, {} nodes, {:?}",
            out.tree.node(SearchTree::ROOT).value(),
            out.action,
            out.tree.len(),
            out.elapsed
        );
    }
}

//! The brute-force references: every prediction suffix tree of depth 2,
//! its prior weight, and the posterior after observing a short stream.

use mc_aixi::ctw::ContextTree;
use mc_aixi::pst::{brute_force_mixture_log_prob, brute_force_posterior, enumerate_models, HistoryBit};

fn main() {
    let depth = 2;
    let models = enumerate_models(depth).expect("small depth");
    println!("{} trees of depth ≤ {depth}:", models.len());
    for m in &models {
        println!("  leaves {:<26} prior 2^-{}", format!("{:?}", m.leaves()), m.code_length(depth));
    }

    // Percepts mostly alternate, whatever the action.
    let mut stream = Vec::new();
    let mut tree = ContextTree::new(depth).expect("positive depth");
    let mut last = true;
    for t in 0..24 {
        let action = t % 3 == 0;
        stream.push(HistoryBit::Action(action));
        stream.push(HistoryBit::Percept(last));
        tree.condition([action]);
        tree.update(last);
        tree.commit();
        last = !last || t % 5 == 0;
    }

    let explicit = brute_force_mixture_log_prob(depth, &stream).expect("small depth");
    println!("explicit mixture ln Pr = {explicit:.12}");
    println!("context tree     ln Pr = {:.12}", tree.block_log_prob());
    println!("posterior:");
    for (shape, w) in brute_force_posterior(depth, &stream).expect("small depth") {
        println!("  {:<26} {w:.4}", format!("{:?}", shape.leaves()));
    }
}

//! Sequence prediction with a context tree: learn an alternating source,
//! then check that a revert restores the tree exactly.

use mc_aixi::ctw::ContextTree;

fn main() {
    let mut tree = ContextTree::new(3).expect("positive depth");
    let mut cumulative_loss = 0.0;
    for t in 0..64 {
        let bit = t % 2 == 1;
        let p = tree.predict(bit);
        cumulative_loss -= p.log2();
        if t % 8 == 7 {
            println!("t = {:>2}: Pr(next bit) = {p:.4}, cumulative loss {cumulative_loss:.2} bits", t + 1);
        }
        tree.update(bit);
    }
    tree.commit();

    let before = tree.clone();
    tree.update_bits([false, true, true]);
    println!("after 3 speculative bits: ln Pr = {:.4}", tree.block_log_prob());
    tree.revert(3).expect("three bits to undo");
    println!(
        "after revert: ln Pr = {:.4}, identical to before: {}",
        tree.block_log_prob(),
        tree.same_state(&before)
    );
    println!("{} nodes, {} bits seen", tree.node_count(), tree.bits_seen());
}

//! The KT estimator on a single binary source: sequential predictions, the
//! closed-form block probability, and how counts drive the next prediction.

use mc_aixi::kt::{block_probability, KtCounts};

fn main() {
    let bits = "0011";
    let mut counts = KtCounts::new();
    let mut chain = 1.0;
    for c in bits.chars() {
        let bit = c == '1';
        let p = counts.predict(bit);
        chain *= p;
        println!("seen {} zeros, {} ones: Pr({c}) = {p:.4}", counts.zeros(), counts.ones());
        counts.update(bit);
    }
    println!("product of predictions: {chain}");
    println!("closed form:            {}", block_probability(2, 2));
    println!("ln from counts:         {:.6}", counts.log_block());

    // A long run of zeros makes a one increasingly unlikely, but never impossible.
    for n in [1u32, 10, 100, 1000] {
        println!("Pr(1 | {n:>4} zeros) = {:.6}", KtCounts::from_counts(n, 0).predict(true));
    }
}

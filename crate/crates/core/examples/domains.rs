//! Tours the benchmark domains: prints each domain's parameters, its optimal
//! average reward, and the average reward of uniformly random play.

use mc_aixi::env::{make_env, optimal_average_reward, CATALOG};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let cycles = 100_000;
    println!(
        "{:<12} {:>3} {:>6} {:>9} {:>4} {:>3} {:>10} {:>10}",
        "domain", "|A|", "|O|", "A/O/R", "D", "m", "optimum", "random"
    );
    for info in &CATALOG {
        let mut env = make_env(info.name, 1).expect("catalog domain");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let total: i64 = (0..cycles)
            .map(|_| env.step(rng.gen_range(0..info.action_count)).reward)
            .sum();
        let optimum = optimal_average_reward(info.name)
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|_| "n/a".into());
        println!(
            "{:<12} {:>3} {:>6} {:>9} {:>4} {:>3} {:>10} {:>10.4}",
            info.name,
            info.action_count,
            info.obs_count,
            format!("{}/{}/{}", info.action_bits, info.obs_bits, info.reward_bits),
            info.depth,
            info.horizon,
            optimum,
            total as f64 / cycles as f64
        );
    }
}

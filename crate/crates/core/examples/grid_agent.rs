//! The full agent on the 4×4 grid: explore with random actions, then act
//! greedily and compare with the optimum.

use mc_aixi::agent::{Agent, AgentConfig, EpsilonSchedule};
use mc_aixi::env::{make_env, optimal_average_reward};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = AgentConfig {
        seed: 3,
        epsilon: EpsilonSchedule {
            initial: 1.0,
            decay: 1.0,
            floor: 1.0,
        },
        ..AgentConfig::for_domain("grid")?
    };
    let optimum = optimal_average_reward("grid")?;
    let mut agent = Agent::new(config)?;
    let mut env = make_env("grid", 4)?;

    let mut trained = 0;
    for target in [500u64, 2000, 8000] {
        agent.run_training(env.as_mut(), target - trained)?;
        trained = target;
        // Evaluate a copy so the trained agent is untouched.
        let mut probe = agent.fork(99);
        let mut probe_env = make_env("grid", 5)?;
        let summary = probe.evaluate(probe_env.as_mut(), 300)?;
        println!(
            "{target:>5} cycles: greedy reward {:.3} ({:.0}% of optimum), {} tree nodes, {:?} per decision",
            summary.mean_reward,
            100.0 * summary.mean_reward / optimum,
            agent.tree().node_count(),
            summary.mean_search_time
        );
    }
    Ok(())
}

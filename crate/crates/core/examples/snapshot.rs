//! Saving a trained agent and resuming it: the restored agent makes the
//! same decisions as the original.

use mc_aixi::agent::{Agent, AgentConfig, Mode};
use mc_aixi::env::make_env;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut agent = Agent::new(AgentConfig {
        simulations: 50,
        ..AgentConfig::for_domain("cheese-maze")?
    })?;
    let mut env = make_env("cheese-maze", 1)?;
    agent.run_training(env.as_mut(), 500)?;

    let mut bytes = Vec::new();
    agent.save_snapshot(&mut bytes)?;
    println!("snapshot: {} bytes for {} tree nodes", bytes.len(), agent.tree().node_count());
    let mut restored = Agent::load_snapshot(&mut bytes.as_slice())?;
    println!("identical state: {}", restored.same_state(&agent));

    let mut env_a = make_env("cheese-maze", 2)?;
    let mut env_b = make_env("cheese-maze", 2)?;
    let mut agree = 0;
    for _ in 0..50 {
        let a = agent.run_cycle(env_a.as_mut(), Mode::Greedy)?;
        let b = restored.run_cycle(env_b.as_mut(), Mode::Greedy)?;
        agree += usize::from(a.action == b.action && a.reward == b.reward);
    }
    println!("{agree}/50 cycles identical after restoring");
    Ok(())
}

//! A small learning-curve experiment on the tiger problem, written as CSV
//! to standard output.

use mc_aixi::agent::AgentConfig;
use mc_aixi::harness::{parse_config, run_experiment_to, serialize_config, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ExperimentSpec {
        checkpoints: vec![0, 200, 1000],
        eval_cycles: 200,
        repeats: 2,
        ..ExperimentSpec::new(AgentConfig {
            simulations: 100,
            ..AgentConfig::for_domain("tiger")?
        })
    };

    // The same experiment as a config file for `mc-aixi run --config`.
    let text = serialize_config(&spec);
    eprintln!("{text}");
    assert_eq!(parse_config(&text)?, spec);

    run_experiment_to(&spec, std::io::stdout().lock())?;
    Ok(())
}

//! Line-based experiment configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! [agent]
//! domain = grid
//! depth = 16
//!
//! [experiment]
//! checkpoints = 100, 1000, 10000
//! repeats = 5
//! ```
//!
//! Section headers are optional, but a key placed under the wrong section is
//! rejected. Settings that are not given take the domain's catalog defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use super::{default_checkpoints, ConfigError, ExperimentSpec};
use crate::agent::AgentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Agent,
    Experiment,
}

const KEYS: &[(&str, Section)] = &[
    ("domain", Section::Agent),
    ("depth", Section::Agent),
    ("horizon", Section::Agent),
    ("simulations", Section::Agent),
    ("time_limit_ms", Section::Agent),
    ("exploration", Section::Agent),
    ("epsilon_initial", Section::Agent),
    ("epsilon_decay", Section::Agent),
    ("epsilon_floor", Section::Agent),
    ("seed", Section::Agent),
    ("learn_during_eval", Section::Agent),
    ("checkpoints", Section::Experiment),
    ("eval_cycles", Section::Experiment),
    ("repeats", Section::Experiment),
    ("output", Section::Experiment),
    ("optimum_estimate", Section::Experiment),
];

/// A value together with the line it came from.
struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Entries<'a>(BTreeMap<&'static str, Entry<'a>>);

impl<'a> Entries<'a> {
    fn get<T: FromStr>(&self, key: &'static str, what: &'static str) -> Result<Option<(T, usize)>, ConfigError> {
        let Some(e) = self.0.get(key) else {
            return Ok(None);
        };
        e.value.parse().map(|v| Some((v, e.line))).map_err(|_| ConfigError::Type {
            line: e.line,
            key,
            expected: what,
            found: e.value.to_string(),
        })
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.0.get(key).map(|e| e.line)
    }
}

fn constraint(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        line,
        message: message.into(),
    }
}

fn parse_list(entry: &Entry<'_>) -> Result<Vec<u64>, ConfigError> {
    if entry.value.trim().is_empty() {
        return Ok(Vec::new());
    }
    entry
        .value
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse().map_err(|_| ConfigError::Type {
                line: entry.line,
                key: "checkpoints",
                expected: "comma-separated cycle counts",
                found: s.to_string(),
            })
        })
        .collect()
}

/// Parses a comma-separated checkpoint list as given on a command line.
pub fn parse_checkpoints(text: &str) -> Result<Vec<u64>, ConfigError> {
    parse_list(&Entry { line: 0, value: text })
}

pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let mut entries = BTreeMap::new();
    let mut section = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = Some(match name.trim() {
                "agent" => Section::Agent,
                "experiment" => Section::Experiment,
                other => return Err(ConfigError::UnknownSection { line, name: other.to_string() }),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: raw.to_string() });
        };
        let key = key.trim();
        let Some(&(name, home)) = KEYS.iter().find(|(k, _)| *k == key) else {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        };
        if section.is_some_and(|s| s != home) {
            return Err(ConfigError::WrongSection { line, key: name });
        }
        let entry = Entry { line, value: value.trim() };
        if let Some(first) = entries.insert(name, entry) {
            return Err(ConfigError::Duplicate {
                line,
                key: name,
                first: first.line,
            });
        }
    }
    build(&Entries(entries))
}

fn build(entries: &Entries<'_>) -> Result<ExperimentSpec, ConfigError> {
    let Some(domain) = entries.0.get("domain") else {
        return Err(ConfigError::MissingDomain);
    };
    let mut agent = AgentConfig::for_domain(domain.value).map_err(|e| constraint(Some(domain.line), e.to_string()))?;
    let positive = |key: &'static str, v: u64, line: usize| {
        if v == 0 {
            Err(constraint(Some(line), format!("{key} must be at least 1")))
        } else {
            Ok(v)
        }
    };
    if let Some((v, line)) = entries.get::<u64>("depth", "an integer")? {
        agent.depth = positive("depth", v, line)? as usize;
    }
    if let Some((v, line)) = entries.get::<u64>("horizon", "an integer")? {
        agent.horizon = positive("horizon", v, line)? as usize;
    }
    if let Some((v, line)) = entries.get::<u64>("simulations", "an integer")? {
        agent.simulations = positive("simulations", v, line)?;
    }
    if let Some((v, line)) = entries.get::<u64>("time_limit_ms", "an integer")? {
        agent.time_limit = Some(Duration::from_millis(positive("time_limit_ms", v, line)?));
    }
    if let Some((v, line)) = entries.get::<f64>("exploration", "a number")? {
        if !(v > 0.0 && v.is_finite()) {
            return Err(constraint(Some(line), "exploration must be positive"));
        }
        agent.exploration = v;
    }
    if let Some((v, _)) = entries.get("epsilon_initial", "a number")? {
        agent.epsilon.initial = v;
    }
    if let Some((v, _)) = entries.get("epsilon_decay", "a number")? {
        agent.epsilon.decay = v;
    }
    if let Some((v, _)) = entries.get("epsilon_floor", "a number")? {
        agent.epsilon.floor = v;
    }
    if let Err(message) = agent.epsilon.validate() {
        let line = ["epsilon_floor", "epsilon_decay", "epsilon_initial"]
            .iter()
            .find_map(|k| entries.line(k));
        return Err(constraint(line, message));
    }
    if let Some((v, _)) = entries.get("seed", "an integer")? {
        agent.seed = v;
    }
    if let Some((v, _)) = entries.get("learn_during_eval", "true or false")? {
        agent.learn_during_eval = v;
    }

    let info = crate::env::domain(&agent.domain).expect("domain was resolved above");
    let mut spec = ExperimentSpec::new(agent);
    spec.checkpoints = match entries.0.get("checkpoints") {
        Some(e) => parse_list(e)?,
        None => default_checkpoints(info.experience),
    };
    if let Some((v, line)) = entries.get::<u64>("eval_cycles", "an integer")? {
        spec.eval_cycles = positive("eval_cycles", v, line)?;
    }
    if let Some((v, line)) = entries.get::<u64>("repeats", "an integer")? {
        spec.repeats = positive("repeats", v, line)?;
    }
    if let Some(e) = entries.0.get("output") {
        spec.output = (!e.value.is_empty()).then(|| PathBuf::from(e.value));
    }
    if let Some((v, line)) = entries.get::<f64>("optimum_estimate", "a number")? {
        if !(v.is_finite() && v != 0.0) {
            return Err(constraint(Some(line), "optimum_estimate must be finite and nonzero"));
        }
        spec.optimum_estimate = v;
    }
    // Every other setting was checked as it was read.
    spec.validate().map_err(|message| constraint(entries.line("checkpoints"), message))?;
    Ok(spec)
}

/// Canonical text form: every setting, in a fixed order, under its section.
/// Parsing the result gives back an equal spec.
pub fn serialize_config(spec: &ExperimentSpec) -> String {
    let a = &spec.agent;
    let mut s = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(s, "[agent]");
    let _ = writeln!(s, "domain = {}", a.domain);
    let _ = writeln!(s, "depth = {}", a.depth);
    let _ = writeln!(s, "horizon = {}", a.horizon);
    let _ = writeln!(s, "simulations = {}", a.simulations);
    if let Some(t) = a.time_limit {
        let _ = writeln!(s, "time_limit_ms = {}", t.as_millis());
    }
    let _ = writeln!(s, "exploration = {}", a.exploration);
    let _ = writeln!(s, "epsilon_initial = {}", a.epsilon.initial);
    let _ = writeln!(s, "epsilon_decay = {}", a.epsilon.decay);
    let _ = writeln!(s, "epsilon_floor = {}", a.epsilon.floor);
    let _ = writeln!(s, "seed = {}", a.seed);
    let _ = writeln!(s, "learn_during_eval = {}", a.learn_during_eval);
    let _ = writeln!(s, "\n[experiment]");
    let list: Vec<String> = spec.checkpoints.iter().map(u64::to_string).collect();
    let _ = writeln!(s, "checkpoints = {}", list.join(", "));
    let _ = writeln!(s, "eval_cycles = {}", spec.eval_cycles);
    let _ = writeln!(s, "repeats = {}", spec.repeats);
    if let Some(p) = &spec.output {
        let _ = writeln!(s, "output = {}", p.display());
    }
    let _ = writeln!(s, "optimum_estimate = {}", spec.optimum_estimate);
    s
}

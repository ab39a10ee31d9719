//! Monte Carlo expectimax approximation (ρUCT).
//!
//! The search tree alternates decision nodes (history ends in a percept, the
//! agent chooses) and chance nodes (history ends in an action, the model
//! samples). Each simulation walks from the root using UCB at decision nodes
//! and model samples at chance nodes, finishes at an unvisited decision node
//! with a uniform-random rollout, and backs the return up every node it
//! passed. The model is rolled back after every simulation.

mod expectimax;

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::codec::Action;
use crate::model::EnvironmentModel;

pub use expectimax::{expectimax, Expectimax, MAX_EXPECTIMAX_LEAVES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("search budget must allow at least one simulation")]
    EmptyBudget,

    #[error("search horizon must be at least 1")]
    ZeroHorizon,

    #[error("exploration constant must be positive, got {0}")]
    BadExploration(f64),

    #[error("reward bounds must satisfy min < max, got [{0}, {1}]")]
    BadRewardBounds(f64, f64),

    #[error("no action at the root has been visited")]
    NoVisitedAction,

    #[error("exact expectimax would enumerate {leaves} leaves (limit {limit})")]
    TooLarge { leaves: f64, limit: f64 },
}

/// When to stop searching. At least one limit must be set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub simulations: Option<u64>,
    pub wall_clock: Option<Duration>,
}

impl Budget {
    pub fn simulations(n: u64) -> Self {
        Self {
            simulations: Some(n),
            wall_clock: None,
        }
    }

    pub fn wall_clock(limit: Duration) -> Self {
        Self {
            simulations: None,
            wall_clock: Some(limit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub horizon: usize,
    pub exploration: f64,
    /// Smallest single-cycle reward.
    pub reward_min: f64,
    /// Largest single-cycle reward.
    pub reward_max: f64,
    pub budget: Budget,
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.horizon == 0 {
            return Err(SearchError::ZeroHorizon);
        }
        if !(self.exploration > 0.0) || !self.exploration.is_finite() {
            return Err(SearchError::BadExploration(self.exploration));
        }
        if !(self.reward_min < self.reward_max) {
            return Err(SearchError::BadRewardBounds(self.reward_min, self.reward_max));
        }
        match self.budget {
            Budget {
                simulations: None,
                wall_clock: None,
            }
            | Budget {
                simulations: Some(0),
                ..
            } => Err(SearchError::EmptyBudget),
            Budget {
                wall_clock: Some(d), ..
            } if d.is_zero() => Err(SearchError::EmptyBudget),
            _ => Ok(()),
        }
    }
}

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Decision,
    Chance,
}

#[derive(Debug, Clone)]
enum Children {
    /// Indexed by action.
    Decision(Vec<Option<NodeId>>),
    /// Keyed by sampled percept code.
    Chance(Vec<(u64, NodeId)>),
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    visits: u64,
    value: f64,
    children: Children,
}

impl SearchNode {
    pub fn kind(&self) -> NodeKind {
        match self.children {
            Children::Decision(_) => NodeKind::Decision,
            Children::Chance(_) => NodeKind::Chance,
        }
    }

    /// `T(h)`
    pub fn visits(&self) -> u64 {
        self.visits
    }

    /// `V̂(h)`, the mean return backed up through this node.
    pub fn value(&self) -> f64 {
        self.value
    }
}

/// The search tree `Ψ`.
#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
    action_count: usize,
    return_log: Option<Vec<Vec<f64>>>,
}

impl SearchTree {
    pub const ROOT: NodeId = 0;

    pub fn new(action_count: usize) -> Self {
        let mut tree = Self {
            nodes: Vec::new(),
            action_count,
            return_log: None,
        };
        tree.push(NodeKind::Decision);
        tree
    }

    /// A tree that also records every return backed up through each node.
    pub fn with_return_log(action_count: usize) -> Self {
        let mut tree = Self::new(action_count);
        tree.return_log = Some(vec![Vec::new()]);
        tree
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn returns(&self, id: NodeId) -> Option<&[f64]> {
        self.return_log.as_ref().map(|log| log[id as usize].as_slice())
    }

    /// Child of a decision node for `action`.
    pub fn action_child(&self, id: NodeId, action: Action) -> Option<NodeId> {
        match &self.nodes[id as usize].children {
            Children::Decision(c) => c[action],
            Children::Chance(_) => None,
        }
    }

    /// Children of a chance node, keyed by percept code.
    pub fn percept_children(&self, id: NodeId) -> &[(u64, NodeId)] {
        match &self.nodes[id as usize].children {
            Children::Chance(c) => c,
            Children::Decision(_) => &[],
        }
    }

    /// (visits, value) of each root action, `None` if never tried.
    pub fn root_action_stats(&self) -> Vec<Option<(u64, f64)>> {
        (0..self.action_count)
            .map(|a| {
                self.action_child(Self::ROOT, a)
                    .map(|c| (self.nodes[c as usize].visits, self.nodes[c as usize].value))
            })
            .collect()
    }

    fn push(&mut self, kind: NodeKind) -> NodeId {
        let children = match kind {
            NodeKind::Decision => Children::Decision(vec![None; self.action_count]),
            NodeKind::Chance => Children::Chance(Vec::new()),
        };
        self.nodes.push(SearchNode {
            visits: 0,
            value: 0.0,
            children,
        });
        if let Some(log) = &mut self.return_log {
            log.push(Vec::new());
        }
        (self.nodes.len() - 1) as NodeId
    }

    fn ensure_action_child(&mut self, id: NodeId, action: Action) -> NodeId {
        if let Some(c) = self.action_child(id, action) {
            return c;
        }
        let child = self.push(NodeKind::Chance);
        if let Children::Decision(c) = &mut self.nodes[id as usize].children {
            c[action] = Some(child);
        }
        child
    }

    fn ensure_percept_child(&mut self, id: NodeId, code: u64) -> NodeId {
        if let Some(&(_, c)) = self.percept_children(id).iter().find(|(k, _)| *k == code) {
            return c;
        }
        let child = self.push(NodeKind::Decision);
        if let Children::Chance(c) = &mut self.nodes[id as usize].children {
            c.push((code, child));
        }
        child
    }

    fn backup(&mut self, id: NodeId, reward: f64) {
        let node = &mut self.nodes[id as usize];
        let t = node.visits as f64;
        node.value = (reward + t * node.value) / (t + 1.0);
        node.visits += 1;
        if let Some(log) = &mut self.return_log {
            log[id as usize].push(reward);
        }
    }
}

/// Outcome of one call to [`rho_uct_search`].
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub action: Action,
    pub simulations: u64,
    pub elapsed: Duration,
    pub tree: SearchTree,
}

/// Runs simulations from the model's current history until the budget is
/// spent and returns the best root action. The model is left exactly as it
/// was on entry.
///
/// `observer` is called after every simulation with the simulation count and
/// the root action statistics' values.
pub fn rho_uct_search<M, R>(model: &mut M, cfg: &PlannerConfig, rng: &mut R) -> Result<SearchOutcome, SearchError>
where
    M: EnvironmentModel,
    R: Rng + ?Sized,
{
    rho_uct_search_observed(model, cfg, rng, SearchTree::new(model.spec().action_count()), |_, _| {})
}

/// [`rho_uct_search`] with a caller-supplied tree and per-simulation hook.
pub fn rho_uct_search_observed<M, R, F>(
    model: &mut M,
    cfg: &PlannerConfig,
    rng: &mut R,
    mut tree: SearchTree,
    mut observer: F,
) -> Result<SearchOutcome, SearchError>
where
    M: EnvironmentModel,
    R: Rng + ?Sized,
    F: FnMut(u64, &SearchTree),
{
    cfg.validate()?;
    let start = Instant::now();
    let mut simulations = 0u64;
    loop {
        let mark = model.checkpoint();
        sample_trajectory(&mut tree, SearchTree::ROOT, model, cfg, cfg.horizon, rng);
        model.rollback(mark);
        simulations += 1;
        observer(simulations, &tree);
        if cfg.budget.simulations.is_some_and(|n| simulations >= n) {
            break;
        }
        if cfg.budget.wall_clock.is_some_and(|d| start.elapsed() >= d) {
            break;
        }
    }
    let action = best_action(&tree, rng)?;
    Ok(SearchOutcome {
        action,
        simulations,
        elapsed: start.elapsed(),
        tree,
    })
}

/// One simulated trajectory from `node` with `remaining` cycles to go.
/// Returns the sum of rewards collected; the model keeps the simulated
/// experience (the caller rolls it back).
///
/// Unvisited decision nodes are valued by a rollout, except the root, which
/// always selects an action so that every simulation leaves a root child.
pub fn sample_trajectory<M, R>(
    tree: &mut SearchTree,
    node: NodeId,
    model: &mut M,
    cfg: &PlannerConfig,
    remaining: usize,
    rng: &mut R,
) -> f64
where
    M: EnvironmentModel,
    R: Rng + ?Sized,
{
    if remaining == 0 {
        return 0.0;
    }
    let reward = match tree.node(node).kind() {
        NodeKind::Chance => {
            let percept = model.sample_percept(rng);
            let r = model
                .spec()
                .decode_percept_clamped(percept)
                .expect("model percepts have the percept width")
                .reward as f64;
            let child = tree.ensure_percept_child(node, percept.value());
            r + sample_trajectory(tree, child, model, cfg, remaining - 1, rng)
        }
        NodeKind::Decision if node != SearchTree::ROOT && tree.node(node).visits == 0 => {
            rollout(model, remaining, rng)
        }
        NodeKind::Decision => {
            let action = select_ucb_action(tree, node, cfg, remaining, rng);
            model.condition_action(action);
            let child = tree.ensure_action_child(node, action);
            sample_trajectory(tree, child, model, cfg, remaining, rng)
        }
    };
    tree.backup(node, reward);
    reward
}

/// UCB action choice at a decision node. Untried actions are chosen first,
/// uniformly at random; otherwise the normalised UCB score is maximised with
/// ties broken uniformly.
pub fn select_ucb_action<R: Rng + ?Sized>(
    tree: &mut SearchTree,
    node: NodeId,
    cfg: &PlannerConfig,
    remaining: usize,
    rng: &mut R,
) -> Action {
    let n = tree.action_count;
    let stats: Vec<Option<(u64, f64)>> = (0..n)
        .map(|a| {
            tree.action_child(node, a)
                .map(|c| (tree.node(c).visits, tree.node(c).value))
                .filter(|&(v, _)| v > 0)
        })
        .collect();
    let untried: Vec<Action> = (0..n).filter(|&a| stats[a].is_none()).collect();
    if let Some(&a) = untried.choose(rng) {
        tree.ensure_action_child(node, a);
        return a;
    }
    let log_parent = (tree.node(node).visits as f64).ln();
    let scale = 1.0 / (remaining as f64 * (cfg.reward_max - cfg.reward_min));
    let scores: Vec<f64> = stats
        .iter()
        .map(|s| {
            let (visits, value) = s.expect("all actions tried");
            scale * value + cfg.exploration * (log_parent / visits as f64).sqrt()
        })
        .collect();
    argmax_random_tie(&scores, rng)
}

/// Uniform-random actions to the horizon, summing (clamped) model rewards.
pub fn rollout<M, R>(model: &mut M, remaining: usize, rng: &mut R) -> f64
where
    M: EnvironmentModel,
    R: Rng + ?Sized,
{
    let n = model.spec().action_count();
    let mut total = 0.0;
    for _ in 0..remaining {
        model.condition_action(rng.gen_range(0..n));
        let percept = model.sample_percept(rng);
        total += model
            .spec()
            .decode_percept_clamped(percept)
            .expect("model percepts have the percept width")
            .reward as f64;
    }
    total
}

/// The root action with the highest value estimate among visited actions.
pub fn best_action<R: Rng + ?Sized>(tree: &SearchTree, rng: &mut R) -> Result<Action, SearchError> {
    let stats = tree.root_action_stats();
    let candidates: Vec<(Action, f64)> = stats
        .iter()
        .enumerate()
        .filter_map(|(a, s)| s.filter(|&(v, _)| v > 0).map(|(_, value)| (a, value)))
        .collect();
    if candidates.is_empty() {
        return Err(SearchError::NoVisitedAction);
    }
    let values: Vec<f64> = candidates.iter().map(|&(_, v)| v).collect();
    Ok(candidates[argmax_random_tie(&values, rng)].0)
}

fn argmax_random_tie<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    *ties.choose(rng).expect("non-empty candidate set")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Bits, SpaceSpec};
    use crate::model::ExactModel;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bandit() -> ExactModel {
        // Action 1 always pays 1, action 0 always pays 0.
        let spec = SpaceSpec::new(2, 1, 0, 1, 1, 1, 1, 0).unwrap();
        ExactModel::new(spec, |_, a| vec![(Bits::new(a as u64, 2).unwrap(), 1.0)])
    }

    fn cfg(sims: u64, horizon: usize) -> PlannerConfig {
        PlannerConfig {
            horizon,
            exploration: std::f64::consts::SQRT_2,
            reward_min: 0.0,
            reward_max: 1.0,
            budget: Budget::simulations(sims),
        }
    }

    #[test]
    fn config_validation() {
        assert_eq!(cfg(0, 1).validate(), Err(SearchError::EmptyBudget));
        assert_eq!(cfg(1, 0).validate(), Err(SearchError::ZeroHorizon));
        let mut c = cfg(1, 1);
        c.exploration = 0.0;
        assert!(matches!(c.validate(), Err(SearchError::BadExploration(_))));
        c = cfg(1, 1);
        c.reward_max = 0.0;
        assert!(matches!(c.validate(), Err(SearchError::BadRewardBounds(..))));
    }

    #[test]
    fn single_simulation_returns_the_tried_action() {
        let mut m = bandit();
        for seed in 0..20 {
            let out = rho_uct_search(&mut m, &cfg(1, 2), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let tried: Vec<_> = out
                .tree
                .root_action_stats()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.is_some())
                .map(|(a, _)| a)
                .collect();
            assert_eq!(tried, vec![out.action]);
        }
    }

    #[test]
    fn bandit_picks_paying_arm() {
        let mut m = bandit();
        let out = rho_uct_search(&mut m, &cfg(100, 1), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.action, 1);
        assert!(m.steps().is_empty());
    }

    #[test]
    fn zero_remaining_returns_zero() {
        let mut m = bandit();
        let mut tree = SearchTree::new(2);
        let r = sample_trajectory(&mut tree, SearchTree::ROOT, &mut m, &cfg(1, 1), 0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, 0.0);
        assert_eq!(tree.node(SearchTree::ROOT).visits(), 0);
        assert!(m.steps().is_empty());
    }

    #[test]
    fn backup_arithmetic() {
        let mut tree = SearchTree::new(2);
        let id = SearchTree::ROOT;
        tree.nodes[0].visits = 3;
        tree.nodes[0].value = 10.0;
        tree.backup(id, 2.0);
        assert_eq!(tree.node(id).visits(), 4);
        assert_relative_eq!(tree.node(id).value(), 8.0);
    }

    fn decision_with_children(stats: &[(u64, f64)], parent_visits: u64) -> SearchTree {
        let mut tree = SearchTree::new(stats.len());
        tree.nodes[0].visits = parent_visits;
        for (a, &(v, val)) in stats.iter().enumerate() {
            let c = tree.ensure_action_child(0, a);
            tree.nodes[c as usize].visits = v;
            tree.nodes[c as usize].value = val;
        }
        tree
    }

    #[test]
    fn ucb_formula_example() {
        // 1/(2*1) * 1.0 + sqrt(ln 8 / 4) = 1.221; 0.8 + 0.721 = 1.521.
        let mut tree = decision_with_children(&[(4, 1.0), (4, 1.6)], 8);
        let c = PlannerConfig {
            exploration: 1.0,
            ..cfg(1, 2)
        };
        assert_eq!(select_ucb_action(&mut tree, 0, &c, 2, &mut ChaCha8Rng::seed_from_u64(0)), 1);
    }

    #[test]
    fn ucb_prefers_untried() {
        let mut tree = SearchTree::new(3);
        tree.nodes[0].visits = 5;
        let c = tree.ensure_action_child(0, 0);
        tree.nodes[c as usize].visits = 5;
        tree.nodes[c as usize].value = 100.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = select_ucb_action(&mut tree, 0, &cfg(1, 1), 1, &mut rng);
        assert!(a == 1 || a == 2);
        assert!(tree.action_child(0, a).is_some());
    }

    #[test]
    fn ucb_is_reward_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let stats: Vec<(u64, f64)> = (0..3).map(|_| (rng.gen_range(1..50), rng.gen_range(0.0..3.0))).collect();
            let parent: u64 = stats.iter().map(|s| s.0).sum::<u64>() + 1;
            let k = rng.gen_range(0.1..20.0);
            let scaled: Vec<(u64, f64)> = stats.iter().map(|&(v, x)| (v, x * k)).collect();
            let base = cfg(1, 3);
            let scaled_cfg = PlannerConfig {
                reward_min: base.reward_min * k,
                reward_max: base.reward_max * k,
                ..base
            };
            let a = select_ucb_action(&mut decision_with_children(&stats, parent), 0, &base, 3, &mut ChaCha8Rng::seed_from_u64(1));
            let b = select_ucb_action(
                &mut decision_with_children(&scaled, parent),
                0,
                &scaled_cfg,
                3,
                &mut ChaCha8Rng::seed_from_u64(1),
            );
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rollout_of_constant_reward() {
        let spec = SpaceSpec::new(2, 1, 0, 1, 1, 1, 1, 0).unwrap();
        let mut m = ExactModel::new(spec, |_, _| vec![(Bits::new(1, 2).unwrap(), 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(rollout(&mut m, 0, &mut rng), 0.0);
        assert_eq!(rollout(&mut m, 5, &mut rng), 5.0);
    }

    #[test]
    fn best_action_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = decision_with_children(&[(1, 2.0)], 1);
        assert_eq!(best_action(&tree, &mut rng).unwrap(), 0);
        let tree = decision_with_children(&[(1, 2.0), (1, 3.5), (1, 3.4)], 3);
        assert_eq!(best_action(&tree, &mut rng).unwrap(), 1);
        assert_eq!(best_action(&SearchTree::new(2), &mut rng), Err(SearchError::NoVisitedAction));
    }

    #[test]
    fn best_action_ties_are_uniform() {
        let tree = decision_with_children(&[(3, 1.0), (5, 1.0)], 8);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ones = (0..10_000).filter(|_| best_action(&tree, &mut rng).unwrap() == 1).count();
        assert!((4700..=5300).contains(&ones), "{ones}");
    }

    #[test]
    fn search_is_seed_deterministic() {
        let spec = SpaceSpec::new(2, 1, 0, 1, 1, 1, 1, 0).unwrap();
        let coin = ExactModel::new(spec, |_, _| {
            vec![(Bits::new(0, 2).unwrap(), 0.5), (Bits::new(1, 2).unwrap(), 0.5)]
        });
        let run = |seed| {
            let mut m = coin.clone();
            let out = rho_uct_search(&mut m, &cfg(300, 3), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            (out.action, out.tree.root_action_stats())
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn wall_clock_budget_stops() {
        let mut m = bandit();
        let c = PlannerConfig {
            budget: Budget::wall_clock(Duration::from_millis(5)),
            ..cfg(1, 2)
        };
        let out = rho_uct_search(&mut m, &c, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(out.simulations >= 1);
    }
}

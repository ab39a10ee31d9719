//! Prediction suffix trees and brute-force mixtures over them.
//!
//! This module is a reference implementation used to check the context
//! tree. It enumerates every tree structure of bounded depth, scores each
//! one with its own sequential KT estimators, and mixes them with the prior
//! `2^-Γ_D(M)`. It shares no arithmetic with [`crate::ctw`] or
//! [`crate::kt`]. Cost is exponential in the depth, so it refuses depths
//! above [`MAX_ENUMERATION_DEPTH`].

use thiserror::Error;

/// `|C_4| = 677`; `|C_5|` would be 458330.
pub const MAX_ENUMERATION_DEPTH: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PstError {
    #[error("depth {0} exceeds the enumeration limit {MAX_ENUMERATION_DEPTH}")]
    TooDeep(usize),

    #[error("model depth {model} exceeds the mixture depth {max}")]
    ModelTooDeep { model: usize, max: usize },

    #[error("expected {expected} leaf parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
}

/// One bit of the interleaved history stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryBit {
    /// Conditions the context but is never predicted.
    Action(bool),
    /// Predicted and counted.
    Percept(bool),
}

impl HistoryBit {
    pub fn bit(self) -> bool {
        match self {
            HistoryBit::Action(b) | HistoryBit::Percept(b) => b,
        }
    }
}

/// The structure `M` of a prediction suffix tree. `Split([zero, one])`
/// descends on the next-older context bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PstShape {
    Leaf,
    Split(Box<[PstShape; 2]>),
}

impl PstShape {
    pub fn split(zero: PstShape, one: PstShape) -> Self {
        PstShape::Split(Box::new([zero, one]))
    }

    /// Builds the tree whose leaves are exactly `leaves`, each written
    /// newest context bit first (so leaf "01" is reached by a most recent 0
    /// then a 1).
    pub fn from_leaves(leaves: &[&str]) -> Option<Self> {
        fn build(prefix: &str, leaves: &[&str]) -> Option<PstShape> {
            if leaves.contains(&prefix) {
                return Some(PstShape::Leaf);
            }
            if !leaves.iter().any(|l| l.starts_with(prefix) && l.len() > prefix.len()) {
                return None;
            }
            Some(PstShape::split(
                build(&format!("{prefix}0"), leaves)?,
                build(&format!("{prefix}1"), leaves)?,
            ))
        }
        build("", leaves)
    }

    pub fn depth(&self) -> usize {
        match self {
            PstShape::Leaf => 0,
            PstShape::Split(c) => 1 + c[0].depth().max(c[1].depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            PstShape::Leaf => 1,
            PstShape::Split(c) => 1 + c[0].node_count() + c[1].node_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PstShape::Leaf => 1,
            PstShape::Split(c) => c[0].leaf_count() + c[1].leaf_count(),
        }
    }

    /// Leaves at exactly depth `d` below this node.
    fn leaves_at(&self, d: usize) -> usize {
        match self {
            PstShape::Leaf => usize::from(d == 0),
            PstShape::Split(c) if d > 0 => c[0].leaves_at(d - 1) + c[1].leaves_at(d - 1),
            PstShape::Split(_) => 0,
        }
    }

    /// Code length `Γ_D(M)`: node count minus the number of leaves at depth `D`.
    pub fn code_length(&self, max_depth: usize) -> usize {
        self.node_count() - self.leaves_at(max_depth)
    }

    /// Leaf labels in left-to-right order, newest bit first.
    pub fn leaves(&self) -> Vec<String> {
        fn walk(node: &PstShape, prefix: String, out: &mut Vec<String>) {
            match node {
                PstShape::Leaf => out.push(prefix),
                PstShape::Split(c) => {
                    walk(&c[0], format!("{prefix}0"), out);
                    walk(&c[1], format!("{prefix}1"), out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, String::new(), &mut out);
        out
    }

    /// Index (in [`leaves`](Self::leaves) order) of the leaf selected by a
    /// context. `context` is oldest first; routing reads it from the end.
    pub fn leaf_index(&self, context: &[bool]) -> usize {
        let mut node = self;
        let mut offset = 0;
        let mut pos = context.len();
        loop {
            match node {
                PstShape::Leaf => return offset,
                PstShape::Split(c) => {
                    pos -= 1;
                    if context[pos] {
                        offset += c[0].leaf_count();
                        node = &c[1];
                    } else {
                        node = &c[0];
                    }
                }
            }
        }
    }
}

/// All tree structures of depth at most `depth`, each exactly once.
pub fn enumerate_models(depth: usize) -> Result<Vec<PstShape>, PstError> {
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(PstError::TooDeep(depth));
    }
    let mut models = vec![PstShape::Leaf];
    for _ in 0..depth {
        let mut next = vec![PstShape::Leaf];
        for zero in &models {
            for one in &models {
                next.push(PstShape::split(zero.clone(), one.clone()));
            }
        }
        models = next;
    }
    Ok(models)
}

/// A tree structure with a Bernoulli parameter `P(next bit = 1)` per leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricPst {
    shape: PstShape,
    theta: Vec<f64>,
}

impl ParametricPst {
    pub fn new(shape: PstShape, theta: Vec<f64>) -> Result<Self, PstError> {
        if theta.len() != shape.leaf_count() {
            return Err(PstError::ParameterCount {
                expected: shape.leaf_count(),
                got: theta.len(),
            });
        }
        Ok(Self { shape, theta })
    }

    pub fn shape(&self) -> &PstShape {
        &self.shape
    }

    /// `P(next = 1)` given a context (oldest bit first).
    pub fn predict_one(&self, context: &[bool]) -> f64 {
        self.theta[self.shape.leaf_index(context)]
    }
}

fn kt_next(zeros: u64, ones: u64, bit: bool) -> f64 {
    let count = if bit { ones } else { zeros };
    (count as f64 + 0.5) / ((zeros + ones) as f64 + 1.0)
}

/// Log probability of the percept bits under the KT-parameterised PST with
/// structure `shape`. The context is primed with `pad` zero bits.
pub fn model_log_prob(shape: &PstShape, pad: usize, stream: &[HistoryBit]) -> Result<f64, PstError> {
    if shape.depth() > pad {
        return Err(PstError::ModelTooDeep {
            model: shape.depth(),
            max: pad,
        });
    }
    let mut counts = vec![(0u64, 0u64); shape.leaf_count()];
    let mut context = vec![false; pad];
    let mut log_prob = 0.0;
    for &hb in stream {
        if let HistoryBit::Percept(bit) = hb {
            let leaf = shape.leaf_index(&context);
            let (zeros, ones) = &mut counts[leaf];
            log_prob += kt_next(*zeros, *ones, bit).ln();
            if bit {
                *ones += 1;
            } else {
                *zeros += 1;
            }
        }
        context.push(hb.bit());
    }
    Ok(log_prob)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln Σ_M 2^-Γ_D(M) Pr(x | M, a)` by explicit enumeration.
pub fn brute_force_mixture_log_prob(depth: usize, stream: &[HistoryBit]) -> Result<f64, PstError> {
    let terms = enumerate_models(depth)?
        .iter()
        .map(|m| {
            Ok(model_log_prob(m, depth, stream)? - m.code_length(depth) as f64 * std::f64::consts::LN_2)
        })
        .collect::<Result<Vec<_>, PstError>>()?;
    Ok(log_sum_exp(&terms))
}

/// Posterior weight of every model after the stream, `∝ 2^-Γ_D(M) Pr(x | M, a)`.
pub fn brute_force_posterior(depth: usize, stream: &[HistoryBit]) -> Result<Vec<(PstShape, f64)>, PstError> {
    let models = enumerate_models(depth)?;
    let log_joint = models
        .iter()
        .map(|m| {
            Ok(model_log_prob(m, depth, stream)? - m.code_length(depth) as f64 * std::f64::consts::LN_2)
        })
        .collect::<Result<Vec<_>, PstError>>()?;
    let norm = log_sum_exp(&log_joint);
    Ok(models
        .into_iter()
        .zip(log_joint)
        .map(|(m, lj)| (m, (lj - norm).exp()))
        .collect())
}

/// KT prediction of the next bit being 1 under one model after the stream.
pub fn model_predict_one(shape: &PstShape, pad: usize, stream: &[HistoryBit]) -> Result<f64, PstError> {
    if shape.depth() > pad {
        return Err(PstError::ModelTooDeep {
            model: shape.depth(),
            max: pad,
        });
    }
    let mut counts = vec![(0u64, 0u64); shape.leaf_count()];
    let mut context = vec![false; pad];
    for &hb in stream {
        if let HistoryBit::Percept(bit) = hb {
            let c = &mut counts[shape.leaf_index(&context)];
            if bit {
                c.1 += 1;
            } else {
                c.0 += 1;
            }
        }
        context.push(hb.bit());
    }
    let (zeros, ones) = counts[shape.leaf_index(&context)];
    Ok(kt_next(zeros, ones, true))
}

/// Posterior-weighted convex combination of per-model predictions.
pub fn posterior_predict_one(depth: usize, stream: &[HistoryBit]) -> Result<f64, PstError> {
    brute_force_posterior(depth, stream)?
        .iter()
        .map(|(m, w)| Ok(w * model_predict_one(m, depth, stream)?))
        .sum()
}

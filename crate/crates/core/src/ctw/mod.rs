//! Action-conditional context tree weighting.
//!
//! A [`ContextTree`] of depth `D` holds, for every binary context of length at
//! most `D` that has been visited, a KT estimator and the weighted
//! probability
//!
//! ```text
//! Pw(n) = Pkt(n)                              if n is at depth D
//! Pw(n) = 1/2 Pkt(n) + 1/2 Pw(n0) Pw(n1)      otherwise
//! ```
//!
//! where an absent child contributes probability one. The root's weighted
//! probability is the Bayesian mixture over all prediction suffix trees of
//! depth at most `D`.
//!
//! Actions enter the context but never update the estimators, so the root
//! probability is the probability of the percept bits conditioned on the
//! actions. Every change is recorded in a journal so that simulated
//! experience can be rolled back exactly.
//!
//! Each node stores the weighted log probabilities of its two children, so
//! an update reads and writes only the nodes on the context path.

mod snapshot;

use rand::Rng;
use thiserror::Error;

use crate::kt::{log_block_probability, KtCounts, KtError};

pub use snapshot::{SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

#[derive(Debug, Error)]
pub enum CtwError {
    #[error("context depth must be at least 1")]
    ZeroDepth,

    #[error("cannot revert {requested} records: journal holds {available}")]
    JournalUnderflow { requested: usize, available: usize },

    #[error("journal is not empty ({0} records); commit or revert first")]
    Uncommitted(usize),

    #[error("snapshot has bad magic bytes")]
    BadMagic,

    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u16),

    #[error("corrupt snapshot: {0}")]
    Corrupt(String),

    #[error("snapshot I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Kt(#[from] KtError),
}

const NONE: u32 = u32::MAX;
const ROOT: u32 = 0;
const LN_HALF: f64 = -std::f64::consts::LN_2;

/// Below this log ratio the smaller term cannot change the sum.
const NEGLIGIBLE: f64 = -45.0;

#[derive(Debug, Clone, Copy)]
struct Node {
    zeros: u32,
    ones: u32,
    child: [u32; 2],
    /// `ln Pw` of each child, 0 for an absent child.
    child_pw: [f64; 2],
}

impl Node {
    const FRESH: Node = Node {
        zeros: 0,
        ones: 0,
        child: [NONE, NONE],
        child_pw: [0.0, 0.0],
    };

    #[inline]
    fn log_kt(&self) -> f64 {
        log_block_probability(u64::from(self.zeros), u64::from(self.ones))
    }

    #[inline]
    fn count(&mut self, bit: bool) {
        if bit {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
    }

    #[inline]
    fn uncount(&mut self, bit: bool) {
        let c = if bit { &mut self.ones } else { &mut self.zeros };
        *c = c.checked_sub(1).expect("journal bit was recorded");
    }

    fn total(&self) -> u64 {
        u64::from(self.zeros) + u64::from(self.ones)
    }
}

/// `ln(1/2 e^x + 1/2 e^y)` without leaving log space.
#[inline]
fn log_half_sum(x: f64, y: f64) -> f64 {
    if x == y {
        // Single-child chains: the estimator and the child agree exactly.
        return x;
    }
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    let diff = lo - hi;
    if diff < NEGLIGIBLE {
        hi + LN_HALF
    } else {
        hi + diff.exp().ln_1p() + LN_HALF
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Record {
    /// Context-only advance by `len` bits.
    Context { len: u32 },
    /// A percept bit update. `created_at` is the depth of the first node
    /// allocated by this update, or `NONE` if the path already existed.
    Percept { bit: bool, created_at: u32 },
}

/// A path node and the weighted log probability it had before an update.
#[derive(Debug, Clone, Copy)]
struct Saved {
    node: u32,
    log_pw: f64,
}

/// A live node reached in a traversal.
#[derive(Debug, Clone, Copy)]
struct Visit {
    depth: usize,
    node: u32,
    /// `NONE` for the root.
    parent: u32,
    slot: usize,
}

/// A depth-`D` context tree with an undo journal.
#[derive(Debug, Clone)]
pub struct ContextTree {
    depth: usize,
    nodes: Vec<Node>,
    free: Vec<u32>,
    root_pw: f64,
    /// Bit stream, newest last. Always holds at least `depth` bits.
    context: Vec<bool>,
    journal: Vec<Record>,
    /// `depth + 1` saved entries per percept record, root first.
    saved: Vec<Saved>,
    path: Vec<u32>,
    bits_seen: u64,
    nodes_touched: u64,
}

impl ContextTree {
    /// Creates an empty tree whose context is primed with `depth` zero bits.
    pub fn new(depth: usize) -> Result<Self, CtwError> {
        if depth == 0 {
            return Err(CtwError::ZeroDepth);
        }
        Ok(Self {
            depth,
            nodes: vec![Node::FRESH],
            free: Vec::new(),
            root_pw: 0.0,
            context: vec![false; depth],
            journal: Vec::new(),
            saved: Vec::new(),
            path: Vec::with_capacity(depth + 1),
            bits_seen: 0,
            nodes_touched: 0,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of history bits (action and percept) appended since creation.
    pub fn bits_seen(&self) -> u64 {
        self.bits_seen
    }

    /// Number of live nodes, including the root.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    /// Running count of node visits made by percept updates. Instrumentation
    /// for the per-bit cost bound.
    pub fn nodes_touched(&self) -> u64 {
        self.nodes_touched
    }

    pub fn journal_len(&self) -> usize {
        self.journal.len()
    }

    /// The most recent `depth` bits, oldest first.
    pub fn context(&self) -> &[bool] {
        &self.context[self.context.len() - self.depth..]
    }

    /// `ln P_w` at the root: the log probability of all percept bits seen so
    /// far given the interleaved actions.
    pub fn block_log_prob(&self) -> f64 {
        self.root_pw
    }

    /// Root KT counts, i.e. totals over all percept bits.
    pub fn root_counts(&self) -> KtCounts {
        let root = &self.nodes[ROOT as usize];
        KtCounts::from_counts(root.zeros, root.ones)
    }

    /// Appends bits to the context without touching any estimator. Used for
    /// action bits, and for percept bits when learning is frozen.
    pub fn condition<I: IntoIterator<Item = bool>>(&mut self, bits: I) {
        let before = self.context.len();
        self.context.extend(bits);
        let len = (self.context.len() - before) as u32;
        self.bits_seen += u64::from(len);
        self.journal.push(Record::Context { len });
    }

    /// Observes one percept bit: updates every node on the current context
    /// path and recomputes weighted probabilities from the leaf up.
    pub fn update(&mut self, bit: bool) {
        let created_at = self.walk_creating();
        let depth = self.depth;
        let newest = self.context.len() - 1;
        let ctx = &self.context[newest + 1 - depth..];
        let nodes = &mut self.nodes;
        let path = &self.path[..=depth];

        // Save the value each path node's weight is stored in: the root's
        // own field, otherwise the parent's slot for it.
        self.saved.reserve(depth + 1);
        self.saved.push(Saved {
            node: ROOT,
            log_pw: self.root_pw,
        });
        for d in 1..=depth {
            let slot = usize::from(ctx[depth - d]);
            self.saved.push(Saved {
                node: path[d],
                log_pw: nodes[path[d - 1] as usize].child_pw[slot],
            });
        }

        let leaf = &mut nodes[path[depth] as usize];
        leaf.count(bit);
        let mut pw = leaf.log_kt();
        for d in (0..depth).rev() {
            let node = &mut nodes[path[d] as usize];
            node.child_pw[usize::from(ctx[depth - 1 - d])] = pw;
            node.count(bit);
            pw = log_half_sum(node.log_kt(), node.child_pw[0] + node.child_pw[1]);
        }
        self.root_pw = pw;
        self.nodes_touched += (depth + 1) as u64;
        self.context.push(bit);
        self.bits_seen += 1;
        self.journal.push(Record::Percept { bit, created_at });
    }

    /// Updates with each bit in turn.
    pub fn update_bits<I: IntoIterator<Item = bool>>(&mut self, bits: I) {
        for b in bits {
            self.update(b);
        }
    }

    /// Probability that the next percept bit is `bit`, leaving the tree unchanged.
    pub fn predict(&mut self, bit: bool) -> f64 {
        let before = self.block_log_prob();
        self.update(bit);
        let after = self.block_log_prob();
        self.pop_record();
        (after - before).exp()
    }

    /// Draws the next percept bit from the mixture's conditional distribution
    /// and updates the tree with it.
    pub fn sample_bit<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        // Tentatively update with the likelier-looking bit so that the common
        // case costs a single pass.
        let guess = self.guess_bit();
        let before = self.block_log_prob();
        self.update(guess);
        let p_guess = (self.block_log_prob() - before).exp();
        let p_one = if guess { p_guess } else { 1.0 - p_guess };
        let bit = rng.gen::<f64>() < p_one;
        if bit != guess {
            self.pop_record();
            self.update(bit);
        }
        bit
    }

    /// Samples `len` percept bits, most significant first.
    pub fn sample_bits<R: Rng + ?Sized>(&mut self, len: u32, rng: &mut R) -> u64 {
        let mut code = 0u64;
        for _ in 0..len {
            code = (code << 1) | u64::from(self.sample_bit(rng));
        }
        code
    }

    /// Undoes the last `k` journal records.
    pub fn revert(&mut self, k: usize) -> Result<(), CtwError> {
        if k > self.journal.len() {
            return Err(CtwError::JournalUnderflow {
                requested: k,
                available: self.journal.len(),
            });
        }
        for _ in 0..k {
            self.pop_record();
        }
        Ok(())
    }

    /// Reverts until the journal holds exactly `len` records.
    pub fn revert_to(&mut self, len: usize) -> Result<(), CtwError> {
        let available = self.journal.len();
        let k = available.checked_sub(len).ok_or(CtwError::JournalUnderflow {
            requested: len,
            available,
        })?;
        self.revert(k)
    }

    /// Accepts everything in the journal as real experience.
    pub fn commit(&mut self) {
        self.journal.clear();
        self.saved.clear();
        // Keep the bit stream bounded; only the last `depth` bits matter once
        // nothing can be reverted.
        if self.context.len() > 4 * self.depth + 4096 {
            let drop = self.context.len() - self.depth;
            self.context.drain(..drop);
        }
    }

    fn pop_record(&mut self) {
        let record = self.journal.pop().expect("journal record");
        match record {
            Record::Context { len } => {
                let keep = self.context.len() - len as usize;
                self.context.truncate(keep);
                self.bits_seen -= u64::from(len);
            }
            Record::Percept { bit, created_at } => {
                let popped = self.context.pop();
                debug_assert_eq!(popped, Some(bit));
                self.bits_seen -= 1;
                let depth = self.depth;
                let newest = self.context.len() - 1;
                let ctx = &self.context[newest + 1 - depth..];
                let base = self.saved.len() - (depth + 1);
                let saved = &self.saved[base..];
                let nodes = &mut self.nodes;
                self.root_pw = saved[0].log_pw;
                nodes[ROOT as usize].uncount(bit);
                for d in 1..=depth {
                    let slot = usize::from(ctx[depth - d]);
                    nodes[saved[d - 1].node as usize].child_pw[slot] = saved[d].log_pw;
                    nodes[saved[d].node as usize].uncount(bit);
                }
                if created_at != NONE {
                    let at = created_at as usize;
                    let slot = usize::from(ctx[depth - at]);
                    nodes[saved[at - 1].node as usize].child[slot] = NONE;
                    for s in &saved[at..] {
                        nodes[s.node as usize] = Node::FRESH;
                        self.free.push(s.node);
                    }
                }
                self.saved.truncate(base);
            }
        }
    }

    /// Fills `self.path` with the root-to-leaf path selected by the current
    /// context, allocating missing nodes. Returns the depth of the first
    /// allocated node, or `NONE`.
    fn walk_creating(&mut self) -> u32 {
        self.path.clear();
        self.path.push(ROOT);
        let mut created_at = NONE;
        let mut idx = ROOT as usize;
        let depth = self.depth;
        let start = self.context.len() - depth;
        for d in 0..depth {
            let b = usize::from(self.context[start + depth - 1 - d]);
            let mut next = self.nodes[idx].child[b];
            if next == NONE {
                next = self.alloc();
                self.nodes[idx].child[b] = next;
                if created_at == NONE {
                    created_at = (d + 1) as u32;
                }
            }
            self.path.push(next);
            idx = next as usize;
        }
        created_at
    }

    fn alloc(&mut self) -> u32 {
        if let Some(idx) = self.free.pop() {
            return idx;
        }
        let idx = u32::try_from(self.nodes.len()).expect("context tree exceeds u32 node indices");
        assert!(idx != NONE, "context tree exceeds u32 node indices");
        self.nodes.push(Node::FRESH);
        idx
    }

    /// Majority bit at the deepest estimator on the current path that has
    /// seen data.
    fn guess_bit(&self) -> bool {
        let mut idx = ROOT as usize;
        let mut best = (self.nodes[idx].zeros, self.nodes[idx].ones);
        let newest = self.context.len() - 1;
        for d in 0..self.depth {
            let next = self.nodes[idx].child[usize::from(self.context[newest - d])];
            if next == NONE {
                break;
            }
            idx = next as usize;
            let n = &self.nodes[idx];
            if n.zeros == 0 && n.ones == 0 {
                break;
            }
            best = (n.zeros, n.ones);
        }
        best.1 >= best.0
    }

    /// Weighted log probability of node `idx` at depth `d` from its counts
    /// and its children's stored values.
    fn weighted(&self, idx: usize, d: usize) -> f64 {
        let node = &self.nodes[idx];
        if d == self.depth {
            node.log_kt()
        } else {
            log_half_sum(node.log_kt(), node.child_pw[0] + node.child_pw[1])
        }
    }

    /// The stored weighted log probability of a visited node.
    fn stored_pw(&self, v: &Visit) -> f64 {
        if v.parent == NONE {
            self.root_pw
        } else {
            self.nodes[v.parent as usize].child_pw[v.slot]
        }
    }

    /// Live nodes in preorder, child 0 before child 1.
    fn preorder(&self) -> Vec<Visit> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut stack = vec![Visit {
            depth: 0,
            node: ROOT,
            parent: NONE,
            slot: 0,
        }];
        while let Some(v) = stack.pop() {
            out.push(v);
            let node = &self.nodes[v.node as usize];
            for slot in [1, 0] {
                let c = node.child[slot];
                if c != NONE {
                    stack.push(Visit {
                        depth: v.depth + 1,
                        node: c,
                        parent: v.node,
                        slot,
                    });
                }
            }
        }
        out
    }

    /// Structural and numerical equality of the committed-visible state:
    /// depth, bit counter, context window, journal depth and every live node
    /// (counts and log values compared bit for bit).
    pub fn same_state(&self, other: &ContextTree) -> bool {
        if self.depth != other.depth
            || self.bits_seen != other.bits_seen
            || self.context() != other.context()
            || self.journal.len() != other.journal.len()
            || self.node_count() != other.node_count()
            || self.root_pw.to_bits() != other.root_pw.to_bits()
        {
            return false;
        }
        let mut stack = vec![(ROOT, ROOT)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (&self.nodes[a as usize], &other.nodes[b as usize]);
            if na.zeros != nb.zeros || na.ones != nb.ones {
                return false;
            }
            for s in 0..2 {
                if na.child_pw[s].to_bits() != nb.child_pw[s].to_bits() {
                    return false;
                }
                match (na.child[s], nb.child[s]) {
                    (NONE, NONE) => {}
                    (ca, cb) if ca != NONE && cb != NONE => stack.push((ca, cb)),
                    _ => return false,
                }
            }
        }
        true
    }

    /// Checks the weighting recursion at every live node. Test support.
    pub fn check_invariants(&self) -> Result<(), String> {
        for v in self.preorder() {
            let node = &self.nodes[v.node as usize];
            let stored = self.stored_pw(&v);
            let expected = self.weighted(v.node as usize, v.depth);
            if expected.to_bits() != stored.to_bits() {
                return Err(format!(
                    "node {} at depth {}: log_pw {stored} but recursion gives {expected}",
                    v.node, v.depth
                ));
            }
            for s in 0..2 {
                if node.child[s] == NONE && node.child_pw[s] != 0.0 {
                    return Err(format!("node {}: absent child {s} has a weight", v.node));
                }
            }
            let child_total: u64 = node
                .child
                .iter()
                .filter(|&&c| c != NONE)
                .map(|&c| self.nodes[c as usize].total())
                .sum();
            if v.depth < self.depth && child_total != node.total() {
                return Err(format!(
                    "node {} at depth {}: {} bits but children hold {child_total}",
                    v.node,
                    v.depth,
                    node.total()
                ));
            }
            if !(stored <= 0.0) {
                return Err(format!("node {}: log_pw {stored} is not a log probability", v.node));
            }
        }
        Ok(())
    }
}

impl PartialEq for ContextTree {
    fn eq(&self, other: &Self) -> bool {
        self.same_state(other)
    }
}

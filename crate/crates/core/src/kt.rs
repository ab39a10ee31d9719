//! Krichevsky–Trofimov estimator for a Bernoulli source.
//!
//! The block probability of a string with `a` zeros and `b` ones is
//!
//! ```text
//! Pr_kt = prod_{i<a} (i + 1/2) * prod_{j<b} (j + 1/2) / (a + b)!
//! ```
//!
//! and the sequential prediction is `Pr(1) = (b + 1/2) / (a + b + 1)`.
//!
//! The log block probability is evaluated in closed form from the counts
//! rather than accumulated bit by bit. This makes it a pure function of
//! `(a, b)`: any permutation of the same bits gives an identical value, and
//! undoing an update restores the previous value bit for bit.

use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KtError {
    #[error("cannot revert a {bit} bit: no such bit has been recorded")]
    NothingToRevert { bit: u8 },
}

/// Counts below this use precomputed tables; larger counts use Stirling's series.
const TABLE_SIZE: usize = 1 << 16;

struct Tables {
    /// `half[n] = sum_{k<n} ln(k + 1/2)`
    half: Vec<f64>,
    /// `fact[n] = ln(n!)`
    fact: Vec<f64>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| Tables {
        half: compensated_prefix_sums(|k| (k as f64 + 0.5).ln()),
        fact: compensated_prefix_sums(|k| (k as f64 + 1.0).ln()),
    })
}

/// Prefix sums of `term(0), term(1), ...` with Neumaier compensation so the
/// table entries stay within an ulp or two of the exact sums.
fn compensated_prefix_sums(term: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(TABLE_SIZE);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    out.push(0.0);
    for k in 0..TABLE_SIZE - 1 {
        let x = term(k);
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

/// `ln Γ(x)` for large `x` via Stirling's series.
fn ln_gamma_large(x: f64) -> f64 {
    const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0)));
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series
}

fn ln_half_product(n: u64) -> f64 {
    // ln Γ(n + 1/2) - ln Γ(1/2)
    const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;
    match usize::try_from(n) {
        Ok(i) if i < TABLE_SIZE => tables().half[i],
        _ => ln_gamma_large(n as f64 + 0.5) - LN_SQRT_PI,
    }
}

fn ln_factorial(n: u64) -> f64 {
    match usize::try_from(n) {
        Ok(i) if i < TABLE_SIZE => tables().fact[i],
        _ => ln_gamma_large(n as f64 + 1.0),
    }
}

/// Natural log of the KT block probability of any string with the given counts.
pub fn log_block_probability(zeros: u64, ones: u64) -> f64 {
    if zeros == 0 && ones == 0 {
        return 0.0;
    }
    ln_half_product(zeros) + ln_half_product(ones) - ln_factorial(zeros + ones)
}

/// The KT block probability itself. Short blocks are computed directly, so
/// dyadic results such as `Pr(0011) = 3/128` come out exact.
pub fn block_probability(zeros: u64, ones: u64) -> f64 {
    // A direct product of small factors rounds only a handful of times, and
    // not at all for short dyadic cases.
    if zeros + ones <= 16 {
        let half = |n: u64| (0..n).map(|i| i as f64 + 0.5).product::<f64>();
        let factorial = (1..=zeros + ones).map(|k| k as f64).product::<f64>();
        return half(zeros) * half(ones) / factorial;
    }
    log_block_probability(zeros, ones).exp()
}

/// Zero/one counts with the log block probability they imply.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KtCounts {
    zeros: u32,
    ones: u32,
    log_block: f64,
}

impl KtCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(zeros: u32, ones: u32) -> Self {
        Self {
            zeros,
            ones,
            log_block: log_block_probability(u64::from(zeros), u64::from(ones)),
        }
    }

    pub fn zeros(&self) -> u32 {
        self.zeros
    }

    pub fn ones(&self) -> u32 {
        self.ones
    }

    pub fn total(&self) -> u64 {
        u64::from(self.zeros) + u64::from(self.ones)
    }

    pub fn is_empty(&self) -> bool {
        self.zeros == 0 && self.ones == 0
    }

    /// Natural log of the probability of the bits seen so far.
    pub fn log_block(&self) -> f64 {
        self.log_block
    }

    /// Probability that the next bit equals `bit`.
    pub fn predict(&self, bit: bool) -> f64 {
        let count = if bit { self.ones } else { self.zeros };
        (f64::from(count) + 0.5) / (self.total() as f64 + 1.0)
    }

    pub fn update(&mut self, bit: bool) {
        let count = if bit { &mut self.ones } else { &mut self.zeros };
        *count = count.checked_add(1).expect("KT count overflow");
        self.refresh();
    }

    pub fn revert(&mut self, bit: bool) -> Result<(), KtError> {
        let count = if bit { &mut self.ones } else { &mut self.zeros };
        *count = count
            .checked_sub(1)
            .ok_or(KtError::NothingToRevert { bit: u8::from(bit) })?;
        self.refresh();
        Ok(())
    }

    fn refresh(&mut self) {
        self.log_block = log_block_probability(u64::from(self.zeros), u64::from(self.ones));
    }
}

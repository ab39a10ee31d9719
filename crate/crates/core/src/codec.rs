//! Fixed-width binary encodings for actions and percepts, and the interaction
//! history shared by the model, the planner and the environments.
//!
//! Every symbol is written most-significant-bit first. A percept is laid out
//! as the observation bits followed by the reward bits, where the reward is
//! shifted by a per-domain offset so that the encoded value is non-negative.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Index of an action in `0..action_count`.
pub type Action = usize;

/// Errors raised when a symbol does not fit its declared space.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("action {action} out of range (action space has {count} actions)")]
    ActionOutOfRange { action: u64, count: usize },

    #[error("observation {observation} does not fit in {bits} bits")]
    ObservationOutOfRange { observation: u64, bits: u32 },

    #[error("reward {reward} outside declared interval [{min}, {max}]")]
    RewardOutOfRange { reward: i64, min: i64, max: i64 },

    #[error("malformed percept: encoded reward {encoded} decodes to {reward}, outside [{min}, {max}]")]
    MalformedPercept {
        encoded: u64,
        reward: i64,
        min: i64,
        max: i64,
    },

    #[error("expected {expected} bits, got {got}")]
    WidthMismatch { expected: u32, got: u32 },

    #[error("invalid bit string: {0}")]
    InvalidBits(String),

    #[error("invalid action or percept space: {0}")]
    InvalidSpec(String),

    #[error("history expected {expected} next")]
    OutOfTurn { expected: &'static str },
}

/// A fixed-width bit string of at most 64 bits, stored as an integer code.
///
/// Bit 0 in iteration order is the most significant bit of the code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    value: u64,
    width: u32,
}

impl Bits {
    pub const MAX_WIDTH: u32 = 64;

    pub fn new(value: u64, width: u32) -> Result<Self, CodecError> {
        if width > Self::MAX_WIDTH {
            return Err(CodecError::InvalidBits(format!("width {width} exceeds 64")));
        }
        if width < 64 && value >> width != 0 {
            return Err(CodecError::InvalidBits(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        Ok(Self { value, width })
    }

    pub fn empty() -> Self {
        Self { value: 0, width: 0 }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// The `i`-th bit, counting from the most significant end.
    pub fn bit(&self, i: u32) -> bool {
        assert!(i < self.width, "bit index {i} out of range for width {}", self.width);
        (self.value >> (self.width - 1 - i)) & 1 == 1
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.width).map(move |i| self.bit(i))
    }

    /// Appends `other` after `self`.
    pub fn concat(&self, other: Bits) -> Result<Bits, CodecError> {
        let width = self.width + other.width;
        if width > Self::MAX_WIDTH {
            return Err(CodecError::InvalidBits(format!("concatenation width {width} exceeds 64")));
        }
        let high = if other.width == 64 { 0 } else { self.value << other.width };
        Ok(Bits { value: high | other.value, width })
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Result<Self, CodecError> {
        let mut out = Bits::empty();
        for b in bits {
            if out.width == Self::MAX_WIDTH {
                return Err(CodecError::InvalidBits("more than 64 bits".into()));
            }
            out.value = (out.value << 1) | u64::from(b);
            out.width += 1;
        }
        Ok(out)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bools = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CodecError::InvalidBits(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Bits::from_bools(bools)
    }
}

/// An observation/reward pair as produced by an environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Percept {
    pub observation: u64,
    pub reward: i64,
}

impl Percept {
    pub fn new(observation: u64, reward: i64) -> Self {
        Self { observation, reward }
    }
}

/// Sizes and bit widths of the action, observation and reward spaces.
///
/// `obs_count` records the cardinality of the observation space; the codec
/// itself only requires observation codes to fit in `obs_bits`, since some
/// domains pack structured observations (a board, sensor bits) directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceSpec {
    action_count: usize,
    obs_count: u64,
    reward_min: i64,
    reward_max: i64,
    action_bits: u32,
    obs_bits: u32,
    reward_bits: u32,
    reward_offset: i64,
}

impl SpaceSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        action_count: usize,
        obs_count: u64,
        reward_min: i64,
        reward_max: i64,
        action_bits: u32,
        obs_bits: u32,
        reward_bits: u32,
        reward_offset: i64,
    ) -> Result<Self, CodecError> {
        let invalid = |msg: String| Err(CodecError::InvalidSpec(msg));
        if action_count == 0 || obs_count == 0 {
            return invalid("action and observation spaces must be non-empty".into());
        }
        if action_bits == 0 || obs_bits == 0 || reward_bits == 0 {
            return invalid("bit widths must be positive".into());
        }
        if action_bits > 32 || obs_bits + reward_bits > 64 {
            return invalid("symbol widths too large".into());
        }
        if (action_count as u128) > (1u128 << action_bits) {
            return invalid(format!("{action_count} actions do not fit in {action_bits} bits"));
        }
        if u128::from(obs_count) > (1u128 << obs_bits) {
            return invalid(format!("{obs_count} observations do not fit in {obs_bits} bits"));
        }
        if reward_min > reward_max {
            return invalid(format!("empty reward interval [{reward_min}, {reward_max}]"));
        }
        let lo = i128::from(reward_min) + i128::from(reward_offset);
        let hi = i128::from(reward_max) + i128::from(reward_offset);
        if lo < 0 || hi >= (1i128 << reward_bits) {
            return invalid(format!(
                "offset rewards [{lo}, {hi}] do not fit in {reward_bits} unsigned bits"
            ));
        }
        Ok(Self {
            action_count,
            obs_count,
            reward_min,
            reward_max,
            action_bits,
            obs_bits,
            reward_bits,
            reward_offset,
        })
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn obs_count(&self) -> u64 {
        self.obs_count
    }

    pub fn reward_range(&self) -> (i64, i64) {
        (self.reward_min, self.reward_max)
    }

    pub fn reward_offset(&self) -> i64 {
        self.reward_offset
    }

    pub fn action_bits(&self) -> u32 {
        self.action_bits
    }

    pub fn obs_bits(&self) -> u32 {
        self.obs_bits
    }

    pub fn reward_bits(&self) -> u32 {
        self.reward_bits
    }

    pub fn percept_bits(&self) -> u32 {
        self.obs_bits + self.reward_bits
    }

    /// Bits per completed interaction cycle.
    pub fn cycle_bits(&self) -> u32 {
        self.action_bits + self.percept_bits()
    }

    pub fn encode_action(&self, action: Action) -> Result<Bits, CodecError> {
        if action >= self.action_count {
            return Err(CodecError::ActionOutOfRange {
                action: action as u64,
                count: self.action_count,
            });
        }
        Bits::new(action as u64, self.action_bits)
    }

    pub fn decode_action(&self, bits: Bits) -> Result<Action, CodecError> {
        self.check_width(bits, self.action_bits)?;
        let action = bits.value();
        if action >= self.action_count as u64 {
            return Err(CodecError::ActionOutOfRange {
                action,
                count: self.action_count,
            });
        }
        Ok(action as Action)
    }

    pub fn encode_percept(&self, percept: Percept) -> Result<Bits, CodecError> {
        let Percept { observation, reward } = percept;
        if self.obs_bits < 64 && observation >> self.obs_bits != 0 {
            return Err(CodecError::ObservationOutOfRange {
                observation,
                bits: self.obs_bits,
            });
        }
        if reward < self.reward_min || reward > self.reward_max {
            return Err(CodecError::RewardOutOfRange {
                reward,
                min: self.reward_min,
                max: self.reward_max,
            });
        }
        let encoded_reward = (reward + self.reward_offset) as u64;
        Bits::new(observation, self.obs_bits)?.concat(Bits::new(encoded_reward, self.reward_bits)?)
    }

    pub fn decode_percept(&self, bits: Bits) -> Result<Percept, CodecError> {
        let (observation, encoded, reward) = self.split_percept(bits)?;
        if reward < self.reward_min || reward > self.reward_max {
            return Err(CodecError::MalformedPercept {
                encoded,
                reward,
                min: self.reward_min,
                max: self.reward_max,
            });
        }
        Ok(Percept { observation, reward })
    }

    /// Decodes a model-generated percept, mapping an out-of-range reward to
    /// the nearest legal one. Only used on simulated experience.
    pub fn decode_percept_clamped(&self, bits: Bits) -> Result<Percept, CodecError> {
        let (observation, _, reward) = self.split_percept(bits)?;
        Ok(Percept {
            observation,
            reward: reward.clamp(self.reward_min, self.reward_max),
        })
    }

    fn split_percept(&self, bits: Bits) -> Result<(u64, u64, i64), CodecError> {
        self.check_width(bits, self.percept_bits())?;
        let encoded = bits.value() & low_mask(self.reward_bits);
        let observation = if self.reward_bits == 64 { 0 } else { bits.value() >> self.reward_bits };
        Ok((observation, encoded, encoded as i64 - self.reward_offset))
    }

    fn check_width(&self, bits: Bits, expected: u32) -> Result<(), CodecError> {
        if bits.width() != expected {
            return Err(CodecError::WidthMismatch {
                expected,
                got: bits.width(),
            });
        }
        Ok(())
    }
}

fn low_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// The interaction history `a1 x1 a2 x2 ...`, possibly ending in an action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct History {
    spec: SpaceSpec,
    actions: Vec<Action>,
    percepts: Vec<Percept>,
}

impl History {
    pub fn new(spec: SpaceSpec) -> Self {
        Self {
            spec,
            actions: Vec::new(),
            percepts: Vec::new(),
        }
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    /// Number of completed cycles.
    pub fn len(&self) -> usize {
        self.percepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn ends_with_action(&self) -> bool {
        self.actions.len() > self.percepts.len()
    }

    pub fn push_action(&mut self, action: Action) -> Result<(), CodecError> {
        if self.ends_with_action() {
            return Err(CodecError::OutOfTurn { expected: "a percept" });
        }
        self.spec.encode_action(action)?;
        self.actions.push(action);
        Ok(())
    }

    pub fn push_percept(&mut self, percept: Percept) -> Result<(), CodecError> {
        if !self.ends_with_action() {
            return Err(CodecError::OutOfTurn { expected: "an action" });
        }
        self.spec.encode_percept(percept)?;
        self.percepts.push(percept);
        Ok(())
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn percepts(&self) -> &[Percept] {
        &self.percepts
    }

    pub fn last_percept(&self) -> Option<&Percept> {
        self.percepts.last()
    }

    /// Length of the bit-level image.
    pub fn bit_len(&self) -> u64 {
        self.actions.len() as u64 * u64::from(self.spec.action_bits())
            + self.percepts.len() as u64 * u64::from(self.spec.percept_bits())
    }

    /// The bit-level image `[a1][x1][a2][x2]...`.
    pub fn to_bits(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.bit_len() as usize);
        for (i, &a) in self.actions.iter().enumerate() {
            // Entries were validated on push.
            out.extend(self.spec.encode_action(a).expect("validated action").iter());
            if let Some(&p) = self.percepts.get(i) {
                out.extend(self.spec.encode_percept(p).expect("validated percept").iter());
            }
        }
        out
    }

    /// Rebuilds a history from its bit-level image.
    pub fn from_bits(spec: SpaceSpec, bits: &[bool]) -> Result<Self, CodecError> {
        let mut history = History::new(spec);
        let mut rest = bits;
        while !rest.is_empty() {
            let width = if history.ends_with_action() { spec.percept_bits() } else { spec.action_bits() } as usize;
            if rest.len() < width {
                return Err(CodecError::WidthMismatch {
                    expected: width as u32,
                    got: rest.len() as u32,
                });
            }
            let symbol = Bits::from_bools(rest[..width].iter().copied())?;
            if history.ends_with_action() {
                history.push_percept(spec.decode_percept(symbol)?)?;
            } else {
                history.push_action(spec.decode_action(symbol)?)?;
            }
            rest = &rest[width..];
        }
        Ok(history)
    }
}

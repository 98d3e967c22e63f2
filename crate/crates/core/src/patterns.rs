//! Deterministic complexity and minimal tail/cycle patterns.
//!
//! A pattern `(l1, l2)` describes the output of a deterministic automaton with
//! a tail of `l1` states leading into a cycle of `l2` states. A sequence is
//! generated by the pattern when every symbol past position `l1 + l2` repeats
//! the cycle `a[l1..l1 + l2]`, with the last repetition possibly truncated.
//! The deterministic complexity of a sequence is the smallest `l1 + l2` over
//! all patterns that generate it.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::BinarySequence;

/// Tail length and cycle length of a deterministic generator.
///
/// Serializes to JSON as the integer pair `[l1, l2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct Pattern {
    tail: usize,
    cycle: usize,
}

impl Pattern {
    pub fn new(tail: usize, cycle: usize) -> Result<Self> {
        if cycle == 0 {
            return Err(Error::InvalidPattern("cycle length must be positive".into()));
        }
        Ok(Self { tail, cycle })
    }

    pub fn tail(&self) -> usize {
        self.tail
    }

    pub fn cycle(&self) -> usize {
        self.cycle
    }

    /// Total number of states, `l1 + l2`.
    pub fn len(&self) -> usize {
        self.tail + self.cycle
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Renders the pattern against the sequence that owns it, e.g. `00(101)`.
    pub fn render(&self, seq: &BinarySequence) -> Result<String> {
        let a = seq.as_slice();
        if a.len() < self.len() {
            return Err(Error::InvalidPattern(format!(
                "pattern of length {} does not fit a sequence of length {}",
                self.len(),
                a.len()
            )));
        }
        let digits = |s: &[u8]| s.iter().map(|x| char::from(b'0' + x)).collect::<String>();
        Ok(format!("{}({})", digits(&a[..self.tail]), digits(&a[self.tail..self.len()])))
    }

    /// Whether this pattern extrapolates `a[..len]` to all of `a`.
    pub fn generates<T: PartialEq>(&self, a: &[T]) -> bool {
        let total = self.len();
        total <= a.len()
            && a[total..]
                .iter()
                .enumerate()
                .all(|(i, x)| *x == a[self.tail + i % self.cycle])
    }
}

impl TryFrom<(usize, usize)> for Pattern {
    type Error = Error;

    fn try_from((tail, cycle): (usize, usize)) -> Result<Self> {
        Pattern::new(tail, cycle)
    }
}

impl From<Pattern> for (usize, usize) {
    fn from(p: Pattern) -> Self {
        (p.tail, p.cycle)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.tail, self.cycle)
    }
}

/// Deterministic complexity together with every minimal pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DcResult {
    pub dc: usize,
    pub patterns: Vec<Pattern>,
}

/// Deterministic complexity of a word over an arbitrary alphabet.
///
/// Tries total lengths `1, 2, ..` in order and, for the first length with any
/// match, collects every tail split in increasing tail order. `O(L^3)`.
pub(crate) fn dc_patterns_generic<T: PartialEq>(a: &[T]) -> DcResult {
    let len = a.len();
    debug_assert!(len > 0);
    for dc in 1..=len {
        let patterns: Vec<Pattern> = (0..dc)
            .map(|tail| Pattern { tail, cycle: dc - tail })
            .filter(|p| p.generates(a))
            .collect();
        if !patterns.is_empty() {
            return DcResult { dc, patterns };
        }
    }
    unreachable!("the pattern (0, L) always generates the sequence")
}

pub fn dc_and_patterns(seq: &BinarySequence) -> DcResult {
    dc_patterns_generic(seq.as_slice())
}

/// Deterministic complexity only.
pub fn deterministic_complexity(seq: &BinarySequence) -> usize {
    dc_and_patterns(seq).dc
}

/// Extends the first `l1 + l2` symbols of `prefix` to length `len` by
/// repeating the cycle.
pub fn expand_pattern(prefix: &BinarySequence, pattern: Pattern, len: usize) -> Result<BinarySequence> {
    let total = pattern.len();
    if len < total {
        return Err(Error::OutOfRange(format!(
            "target length {len} is shorter than pattern length {total}"
        )));
    }
    let src = prefix.as_slice();
    if src.len() < total {
        return Err(Error::InvalidPattern(format!(
            "prefix of length {} is shorter than pattern length {total}",
            src.len()
        )));
    }
    let mut out = src[..total].to_vec();
    out.extend((0..len - total).map(|i| src[pattern.tail + i % pattern.cycle]));
    BinarySequence::new(out)
}

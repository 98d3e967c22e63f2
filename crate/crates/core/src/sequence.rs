//! Binary outcome sequences and their canonical enumeration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An ordered, non-empty list of dichotomic outcomes `a_1 .. a_L`.
///
/// Serializes as a compact string of `'0'`/`'1'` characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinarySequence(Vec<u8>);

impl BinarySequence {
    pub fn new(outcomes: Vec<u8>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidSequence("sequence must be non-empty".into()));
        }
        if let Some(bad) = outcomes.iter().find(|&&a| a > 1) {
            return Err(Error::InvalidSequence(format!("symbol {bad} is not 0 or 1")));
        }
        Ok(Self(outcomes))
    }

    /// The one-tick sequence `(0, .., 0, 1)` of length `len`.
    pub fn one_tick(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidSequence("sequence must be non-empty".into()));
        }
        let mut v = vec![0; len];
        v[len - 1] = 1;
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for the `len`/`is_empty` pairing clippy expects.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// Global `0 <-> 1` relabeling.
    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|a| 1 - a).collect())
    }

    /// Representative with `a_1 = 0`.
    pub fn canonical(&self) -> Self {
        if self.0[0] == 0 {
            self.clone()
        } else {
            self.flipped()
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.0[0] == 0
    }

    pub fn is_one_tick(&self) -> bool {
        match self.0.split_last() {
            Some((_, [])) => true,
            Some((last, head)) => *last != head[0] && head.iter().all(|a| *a == head[0]),
            None => false,
        }
    }
}

impl fmt::Display for BinarySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl FromStr for BinarySequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let outcomes = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidSequence(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(outcomes)
    }
}

impl Serialize for BinarySequence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinarySequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Iterator over all `2^(L-1)` sequences of length `L` with `a_1 = 0`, in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct CanonicalSequences {
    len: usize,
    next: u64,
    end: u64,
}

impl Iterator for CanonicalSequences {
    type Item = BinarySequence;

    fn next(&mut self) -> Option<BinarySequence> {
        if self.next >= self.end {
            return None;
        }
        let code = self.next;
        self.next += 1;
        // bit (len - 2 - i) of `code` is a_{i+2}
        let mut v = vec![0u8; self.len];
        for (i, slot) in v.iter_mut().enumerate().skip(1) {
            *slot = ((code >> (self.len - 1 - i)) & 1) as u8;
        }
        Some(BinarySequence(v))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for CanonicalSequences {}

pub fn enumerate_sequences(len: usize) -> Result<CanonicalSequences> {
    if len < 1 {
        return Err(Error::OutOfRange("sequence length must be at least 1".into()));
    }
    if len > 63 {
        return Err(Error::OutOfRange(format!("cannot enumerate 2^{} sequences", len - 1)));
    }
    Ok(CanonicalSequences { len, next: 0, end: 1u64 << (len - 1) })
}

//! Counting primitive words and minimal patterns.
//!
//! All arithmetic is exact on 128-bit integers; any overflow surfaces as
//! [`Error::Overflow`].

use crate::error::{Error, Result};

/// Möbius function.
pub fn mobius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::OutOfRange("mobius is defined for n >= 1".into()));
    }
    let mut n = n;
    let mut sign = 1i8;
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return Ok(0);
            }
            sign = -sign;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        sign = -sign;
    }
    Ok(sign)
}

fn checked_pow(base: u64, exp: u64, what: &'static str) -> Result<i128> {
    let exp = u32::try_from(exp).map_err(|_| Error::Overflow(what))?;
    i128::from(base).checked_pow(exp).ok_or(Error::Overflow(what))
}

fn check_alphabet(k: u64) -> Result<()> {
    if k < 2 {
        return Err(Error::OutOfRange(format!("alphabet size must be at least 2, got {k}")));
    }
    Ok(())
}

/// Number of primitive words of length `n` over a `k`-letter alphabet,
/// `sum over d | n of mu(d) k^(n/d)`.
pub fn primitive_word_count(k: u64, n: u64) -> Result<u128> {
    check_alphabet(k)?;
    if n == 0 {
        return Err(Error::OutOfRange("word length must be at least 1".into()));
    }
    const WHAT: &str = "primitive word count";
    let mut sum: i128 = 0;
    for d in (1..=n).filter(|d| n.is_multiple_of(*d)) {
        let mu = mobius(d)?;
        if mu == 0 {
            continue;
        }
        let term = checked_pow(k, n / d, WHAT)?;
        sum = if mu > 0 { sum.checked_add(term) } else { sum.checked_sub(term) }
            .ok_or(Error::Overflow(WHAT))?;
    }
    u128::try_from(sum).map_err(|_| Error::Overflow(WHAT))
}

/// Number of minimal tail/cycle patterns with exactly `len` states over a
/// `k`-letter alphabet.
///
/// A pattern is minimal when its cycle is a primitive word and, if the tail is
/// non-empty, the last tail symbol differs from the last cycle symbol.
pub fn minimal_pattern_count(k: u64, len: u64) -> Result<u128> {
    check_alphabet(k)?;
    if len == 0 {
        return Err(Error::OutOfRange("pattern length must be at least 1".into()));
    }
    const WHAT: &str = "minimal pattern count";
    let mut total = primitive_word_count(k, len)?;
    for tail in 1..len {
        let tails = checked_pow(k, tail - 1, WHAT)?
            .checked_mul(i128::from(k - 1))
            .ok_or(Error::Overflow(WHAT))? as u128;
        let term = tails
            .checked_mul(primitive_word_count(k, len - tail)?)
            .ok_or(Error::Overflow(WHAT))?;
        total = total.checked_add(term).ok_or(Error::Overflow(WHAT))?;
    }
    Ok(total)
}

//! Exhaustive search over generalized multicyclic models for one-tick
//! sequences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classical::{build_gmcm_with_start, GmcmSignature};
use crate::error::{Error, Result};
use crate::optimizer::{maximize_with_restarts, uniform_init, AdamConfig, FnObjective};
use crate::sequence::BinarySequence;

/// Candidates within this distance of the best count as optimal.
pub const OPTIMUM_TOL: f64 = 1e-6;

/// All ordered partitions of `d`, in lexicographic order.
pub fn compositions(d: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for k in 1..=rest {
            prefix.push(k);
            go(rest - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d > 0 {
        go(d, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmcmCandidate {
    pub block_sizes: Vec<usize>,
    /// Initial state, always inside the first block.
    pub start: usize,
    pub cycle_probs: Vec<f64>,
    pub probability: f64,
}

/// Optima sharing a multiset of block sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmcmClass {
    /// Block sizes in decreasing order.
    pub blocks: Vec<usize>,
    /// Every distinct ordering of `blocks` is optimal from state 0.
    pub all_permutations: bool,
    pub members: Vec<(Vec<usize>, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmcmSurvey {
    #[serde(rename = "L")]
    pub len: usize,
    pub d: usize,
    pub best: GmcmCandidate,
    /// Every (signature, start) within [`OPTIMUM_TOL`] of the best, in
    /// enumeration order.
    pub optima: Vec<GmcmCandidate>,
    pub classes: Vec<GmcmClass>,
    pub candidates_tried: usize,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn optimize_candidate(seq: &BinarySequence, blocks: &[usize], start: usize, config: &AdamConfig) -> Result<GmcmCandidate> {
    let eval = |q: &[f64]| -> Result<f64> {
        let sig = GmcmSignature::new(blocks.to_vec(), q.to_vec())?;
        Ok(build_gmcm_with_start(&sig, start)?.sequence_probability(seq))
    };
    let to_q = |x: &[f64]| x.iter().map(|&v| logistic(v)).collect::<Vec<f64>>();
    let objective = FnObjective::new(blocks.len(), |x: &[f64]| eval(&to_q(x)).unwrap_or(f64::NAN));
    let n = blocks.len();
    let search = maximize_with_restarts(&objective, |rng| uniform_init(rng, n), config)?;
    let mut q = to_q(&search.best.best_params);
    let mut p = eval(&q)?;
    // the logistic map only reaches q = 0 in the limit
    for i in 0..n {
        if q[i] < SNAP_BELOW {
            let old = std::mem::replace(&mut q[i], 0.0);
            match eval(&q)? {
                snapped if snapped >= p => p = snapped,
                _ => q[i] = old,
            }
        }
    }
    Ok(GmcmCandidate { block_sizes: blocks.to_vec(), start, cycle_probs: q, probability: p })
}

/// Cycle probabilities below this are tried at exactly zero after the ascent.
const SNAP_BELOW: f64 = 1e-3;

fn distinct_permutations(sorted: &[usize]) -> usize {
    // multinomial n! / prod(m_i!)
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in sorted {
        *counts.entry(k).or_default() += 1;
    }
    let fact = |n: usize| (1..=n).product::<usize>();
    fact(sorted.len()) / counts.values().map(|&m| fact(m)).product::<usize>()
}

fn classify(optima: &[GmcmCandidate]) -> Vec<GmcmClass> {
    let mut groups: BTreeMap<Vec<usize>, Vec<(Vec<usize>, usize)>> = BTreeMap::new();
    for c in optima {
        let mut key = c.block_sizes.clone();
        key.sort_unstable_by(|a, b| b.cmp(a));
        groups.entry(key).or_default().push((c.block_sizes.clone(), c.start));
    }
    groups
        .into_iter()
        .map(|(blocks, members)| {
            let from_zero = members.iter().filter(|(_, z)| *z == 0).count();
            let all_permutations = from_zero == distinct_permutations(&blocks);
            GmcmClass { blocks, all_permutations, members }
        })
        .collect()
}

/// Optimizes the cycle probabilities of every composition of `d` and every
/// start state in its first block for the one-tick sequence of length `len`.
pub fn gmcm_survey(len: usize, d: usize, config: &AdamConfig) -> Result<GmcmSurvey> {
    if d == 0 || d >= len || len > 12 {
        return Err(Error::OutOfRange(format!("GMCM survey needs 1 <= d < L <= 12, got L = {len}, d = {d}")));
    }
    let seq = BinarySequence::one_tick(len)?;
    let mut candidates = Vec::new();
    for blocks in compositions(d) {
        for start in 0..blocks[0] {
            candidates.push(optimize_candidate(&seq, &blocks, start, config)?);
        }
    }
    let best = candidates
        .iter()
        .fold(None::<&GmcmCandidate>, |b, c| match b {
            Some(b) if b.probability >= c.probability => Some(b),
            _ => Some(c),
        })
        .cloned()
        .expect("d >= 1 has at least one composition");
    let optima: Vec<GmcmCandidate> =
        candidates.iter().filter(|c| c.probability >= best.probability - OPTIMUM_TOL).cloned().collect();
    let classes = classify(&optima);
    Ok(GmcmSurvey { len, d, best, optima, classes, candidates_tried: candidates.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(1), vec![vec![1]]);
        let four = compositions(4);
        assert_eq!(four.len(), 8);
        assert_eq!(four[0], vec![1, 1, 1, 1]);
        assert_eq!(four[7], vec![4]);
        for d in 1..=8 {
            let c = compositions(d);
            assert_eq!(c.len(), 1 << (d - 1));
            assert!(c.iter().all(|k| k.iter().sum::<usize>() == d));
        }
    }

    #[test]
    fn permutation_counting() {
        assert_eq!(distinct_permutations(&[2, 1, 1]), 3);
        assert_eq!(distinct_permutations(&[2, 2, 2]), 1);
        assert_eq!(distinct_permutations(&[3, 2, 1]), 6);
    }

    #[test]
    fn small_survey() {
        let s = gmcm_survey(4, 2, &AdamConfig::gmcm()).unwrap();
        assert!((s.best.probability - 0.25).abs() < 1e-6);
        assert!(s.optima.iter().any(|c| c.block_sizes == vec![2] && c.start == 0));
        assert_eq!(s.candidates_tried, 3);
        assert!(gmcm_survey(4, 4, &AdamConfig::gmcm()).is_err());
    }
}

//! Closed-form model families for the one-tick sequence: one-way, cyclic,
//! multicyclic, generalized multicyclic (GMCM) and enhanced multicyclic
//! (EMCM) models.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ClassicalModel;
use crate::error::{Error, Result};
use crate::patterns::deterministic_complexity;
use crate::sequence::BinarySequence;

/// Relative tolerance under which two EMCM candidates count as tied.
const TIE_RTOL: f64 = 1e-12;

/// `C(n, r)` as a float. Exact integer accumulation while it fits, log-space
/// otherwise.
fn binomial(n: u64, r: u64) -> f64 {
    let r = r.min(n - r);
    if n <= 64 {
        // C(n, i) * (n - i) <= 64 * C(64, 32) fits comfortably in u128
        let mut c: u128 = 1;
        for i in 0..r {
            c = c * u128::from(n - i) / u128::from(i + 1);
        }
        c as f64
    } else {
        ln_binomial(n, r).exp()
    }
}

fn ln_binomial(n: u64, r: u64) -> f64 {
    (0..r).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// `x^e` with `0^0 = 1`.
fn pow0(x: f64, e: u64) -> f64 {
    if e == 0 {
        1.0
    } else {
        x.powf(e as f64)
    }
}

/// Probability that a one-way chain of `d` states with self-loop probability
/// `q` emits the one-tick sequence of length `len`:
/// `C(len-1, d-1) q^(len-d) (1-q)^d`.
pub fn negative_binomial(len: u64, d: u64, q: f64) -> Result<f64> {
    if d < 1 || d > len {
        return Err(Error::OutOfRange(format!("need 1 <= d <= L, got L={len}, d={d}")));
    }
    if len <= 64 {
        Ok(binomial(len - 1, d - 1) * pow0(q, len - d) * pow0(1.0 - q, d))
    } else {
        let mut ln = ln_binomial(len - 1, d - 1);
        for (x, e) in [(q, len - d), (1.0 - q, d)] {
            if e > 0 {
                if x == 0.0 {
                    return Ok(0.0);
                }
                ln += e as f64 * x.ln();
            }
        }
        Ok(ln.exp())
    }
}

/// Optimal one-way probability for the one-tick sequence,
/// `C(L-1, d-1) (1 - d/L)^(L-d) (d/L)^d`.
pub fn f_ow(len: u64, d: u64) -> Result<f64> {
    if d < 1 || d > len {
        return Err(Error::OutOfRange(format!("need 1 <= d <= L, got L={len}, d={d}")));
    }
    negative_binomial(len, d, 1.0 - d as f64 / len as f64)
}

/// Parameters of an enhanced multicyclic model: `n` cycle blocks of size `k`,
/// a deterministic block of `t` states, initial shift `z` and cycle
/// probability `q`, sized for the one-tick sequence of length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmcmParams {
    #[serde(rename = "L")]
    pub len: usize,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub z: usize,
    pub q: f64,
}

impl EmcmParams {
    pub fn dim(&self) -> usize {
        self.n * self.k + self.t
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::OutOfRange(m));
        if self.k == 0 || self.n == 0 {
            return bad(format!("need k >= 1 and n >= 1, got k={}, n={}", self.k, self.n));
        }
        if self.z >= self.k {
            return bad(format!("initial shift z={} must be below k={}", self.z, self.k));
        }
        if !(0.0..1.0).contains(&self.q) {
            return bad(format!("cycle probability q={} outside [0, 1)", self.q));
        }
        let shifted = (self.len + self.z).checked_sub(self.t).filter(|s| *s > 0);
        match shifted {
            Some(s) if s % self.k == 0 => Ok(()),
            _ => bad(format!(
                "(L - t + z) / k is not a positive integer for L={}, t={}, z={}, k={}",
                self.len, self.t, self.z, self.k
            )),
        }
    }

    /// Equivalent one-way problem `(L', d') = ((L - t + z) / k, (d - t) / k)`.
    pub fn reduced(&self) -> (usize, usize) {
        ((self.len + self.z - self.t) / self.k, self.n)
    }

    /// Closed-form one-tick probability at this `q`.
    pub fn probability(&self) -> Result<f64> {
        self.validate()?;
        let (l, d) = self.reduced();
        negative_binomial(l as u64, d as u64, self.q)
    }
}

/// Best EMCM for the one-tick sequence of length `len` on `d` states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmcmOptimum {
    pub probability: f64,
    pub params: EmcmParams,
}

/// Maximizes `F_ow(L', d')` over block size `k` and shift `z`. Ties go to the
/// smallest `t`, then the smallest `k`.
pub fn emcm_probability(len: usize, d: usize) -> Result<EmcmOptimum> {
    if d < 1 || d >= len {
        return Err(Error::OutOfRange(format!("need 1 <= d < L, got L={len}, d={d}")));
    }
    let mut best: Option<EmcmOptimum> = None;
    for k in 1..=d {
        let n = d / k;
        let t = d - n * k;
        // exactly one z in 0..k satisfies the divisibility constraint
        let z = (k - (len - t) % k) % k;
        let (lr, dr) = ((len - t + z) / k, n);
        let p = f_ow(lr as u64, dr as u64)?;
        let params = EmcmParams { len, n, k, t, z, q: 1.0 - dr as f64 / lr as f64 };
        let better = match &best {
            None => true,
            Some(b) => {
                let scale = b.probability.max(p);
                if (p - b.probability).abs() <= TIE_RTOL * scale {
                    (t, k) < (b.params.t, b.params.k)
                } else {
                    p > b.probability
                }
            }
        };
        if better {
            best = Some(EmcmOptimum { probability: p, params });
        }
    }
    Ok(best.expect("k = 1 is always a candidate"))
}

/// Explicit `(T0, T1)` for an EMCM, starting on state `z` of the first block.
///
/// Within a block transitions are deterministic; the last state of each block
/// returns to the block start with probability `q` and moves on with `1 - q`.
/// The final emission of `1` lands on the last state.
pub fn build_emcm(params: &EmcmParams) -> Result<ClassicalModel> {
    params.validate()?;
    let EmcmParams { n, k, z, q, .. } = *params;
    let d = params.dim();
    let mut t0 = DMatrix::zeros(d, d);
    let mut t1 = DMatrix::zeros(d, d);
    for b in 0..n {
        let start = b * k;
        let last = start + k - 1;
        for s in start..last {
            t0[(s, s + 1)] = 1.0;
        }
        t0[(last, start)] += q;
        if last + 1 < d {
            t0[(last, last + 1)] += 1.0 - q;
        } else {
            t1[(last, last)] = 1.0 - q;
        }
    }
    for s in n * k..d {
        if s + 1 < d {
            t0[(s, s + 1)] = 1.0;
        } else {
            t1[(s, s)] = 1.0;
        }
    }
    ClassicalModel::with_start(t0, t1, z)
}

/// Block sizes and per-block cycle probabilities of a generalized
/// multicyclic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmcmSignature {
    pub block_sizes: Vec<usize>,
    pub cycle_probs: Vec<f64>,
}

impl GmcmSignature {
    pub fn new(block_sizes: Vec<usize>, cycle_probs: Vec<f64>) -> Result<Self> {
        let sig = Self { block_sizes, cycle_probs };
        sig.validate()?;
        Ok(sig)
    }

    pub fn dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_sizes.is_empty() {
            return Err(Error::OutOfRange("GMCM signature must have at least one block".into()));
        }
        if self.block_sizes.len() != self.cycle_probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks but {} cycle probabilities",
                self.block_sizes.len(),
                self.cycle_probs.len()
            )));
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::OutOfRange("block sizes must be positive".into()));
        }
        if let Some(q) = self.cycle_probs.iter().find(|q| !(0.0..1.0).contains(*q)) {
            return Err(Error::OutOfRange(format!("cycle probability {q} outside [0, 1)")));
        }
        Ok(())
    }
}

/// GMCM starting on the first state.
pub fn build_gmcm(sig: &GmcmSignature) -> Result<ClassicalModel> {
    build_gmcm_with_start(sig, 0)
}

/// GMCM with `T1 = diag(0, .., 0, 1 - q_n)` and a point-mass start.
pub fn build_gmcm_with_start(sig: &GmcmSignature, start: usize) -> Result<ClassicalModel> {
    sig.validate()?;
    let d = sig.dim();
    let mut t0 = DMatrix::zeros(d, d);
    let mut t1 = DMatrix::zeros(d, d);
    let mut first = 0;
    for (&k, &q) in sig.block_sizes.iter().zip(&sig.cycle_probs) {
        let last = first + k - 1;
        for s in first..last {
            t0[(s, s + 1)] = 1.0;
        }
        t0[(last, first)] += q;
        if last + 1 < d {
            t0[(last, last + 1)] += 1.0 - q;
        } else {
            t1[(last, last)] = 1.0 - q;
        }
        first += k;
    }
    ClassicalModel::with_start(t0, t1, start)
}

/// Conjectured classical upper bound for any sequence on `d` states:
/// the optimal EMCM probability for the one-tick sequence of length
/// `DC(seq)`.
pub fn conjectured_bound(seq: &BinarySequence, d: usize) -> Result<f64> {
    let dc = deterministic_complexity(seq);
    if d == 0 || d >= dc {
        return Err(Error::OutOfRange(format!(
            "bound only applies below the deterministic complexity: d={d}, DC={dc}"
        )));
    }
    Ok(emcm_probability(dc, d)?.probability)
}

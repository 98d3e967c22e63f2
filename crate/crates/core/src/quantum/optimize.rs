//! Search over Kraus families for a fixed sequence.
//!
//! Parameters are the real and imaginary parts of `B_a^i`, laid out as
//! `[a][i][re (d*d, row-major), im (d*d, row-major)]`, so `4 N_K d^2` reals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ground_state, heisenberg_step, normalize_kraus, CMatrix, QuantumModel};
use crate::error::{Error, Result};
use crate::optimizer::{maximize_with_restarts, uniform_init, AdamConfig, MultiStartOutcome, Objective};
use crate::sequence::BinarySequence;

pub struct QuantumObjective {
    seq: BinarySequence,
    d: usize,
    n_kraus: usize,
}

impl QuantumObjective {
    pub fn new(seq: BinarySequence, d: usize, n_kraus: usize) -> Self {
        Self { seq, d, n_kraus }
    }

    fn unpack(&self, x: &[f64]) -> [Vec<CMatrix>; 2] {
        let dd = self.d * self.d;
        let block = |a: usize, i: usize| {
            let off = (a * self.n_kraus + i) * 2 * dd;
            CMatrix::from_fn(self.d, self.d, |r, c| {
                let at = r * self.d + c;
                Complex64::new(x[off + at], x[off + dd + at])
            })
        };
        [0, 1].map(|a| (0..self.n_kraus).map(|i| block(a, i)).collect())
    }

    /// The normalized instrument encoded by `x`.
    pub fn model(&self, x: &[f64]) -> Result<QuantumModel> {
        let [k0, k1] = normalize_kraus(&self.unpack(x))?;
        QuantumModel::new(k0, k1, ground_state(self.d))
    }

    fn probability(&self, x: &[f64]) -> Result<f64> {
        let kraus = normalize_kraus(&self.unpack(x))?;
        let mut e = CMatrix::identity(self.d, self.d);
        for &a in self.seq.as_slice().iter().rev() {
            e = heisenberg_step(&kraus[a as usize], &e);
        }
        // rho = |0><0|
        Ok(e[(0, 0)].re)
    }
}

impl Objective for QuantumObjective {
    fn arity(&self) -> usize {
        4 * self.n_kraus * self.d * self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.probability(x).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumFit {
    pub model: QuantumModel,
    pub probability: f64,
    pub search: MultiStartOutcome,
}

/// Multi-restart Adam search with finite-difference gradients, starting
/// from parameters uniform on `[-1, 1]` and `rho = |0><0|`.
pub fn optimize_quantum(seq: &BinarySequence, d: usize, n_kraus: usize, config: &AdamConfig) -> Result<QuantumFit> {
    if d == 0 || n_kraus == 0 {
        return Err(Error::OutOfRange(format!("need d >= 1 and N_K >= 1, got d = {d}, N_K = {n_kraus}")));
    }
    let objective = QuantumObjective::new(seq.clone(), d, n_kraus);
    let n = objective.arity();
    let search = maximize_with_restarts(&objective, |rng| uniform_init(rng, n), config)?;
    let model = objective.model(&search.best.best_params)?;
    let probability = model.sequence_probability(seq)?;
    Ok(QuantumFit { model, probability, search })
}

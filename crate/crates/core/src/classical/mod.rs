//! Classical probabilistic finite-state automata.

mod families;

pub use families::{
    build_emcm, build_gmcm, build_gmcm_with_start, conjectured_bound, emcm_probability, f_ow, negative_binomial,
    EmcmOptimum, EmcmParams,
    GmcmSignature,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::sequence::BinarySequence;

/// Tolerance on row sums and on the initial distribution's total mass.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A pair of sub-stochastic transition matrices `(T0, T1)` whose sum is
/// row-stochastic, plus an initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalModel {
    t0: DMatrix<f64>,
    t1: DMatrix<f64>,
    pi: DVector<f64>,
}

impl ClassicalModel {
    pub fn new(t0: DMatrix<f64>, t1: DMatrix<f64>, pi: DVector<f64>) -> Result<Self> {
        let d = pi.len();
        if d == 0 {
            return Err(Error::InvalidModel("model needs at least one state".into()));
        }
        for (name, t) in [("T0", &t0), ("T1", &t1)] {
            if t.shape() != (d, d) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, initial distribution has {d} entries",
                    t.nrows(),
                    t.ncols()
                )));
            }
        }
        if let Some(x) = t0.iter().chain(t1.iter()).chain(pi.iter()).find(|x| !x.is_finite() || **x < 0.0)
        {
            return Err(Error::InvalidModel(format!("entry {x} is negative or not finite")));
        }
        for i in 0..d {
            let row = t0.row(i).sum() + t1.row(i).sum();
            if (row - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidModel(format!("row {i} of T0 + T1 sums to {row}")));
            }
        }
        let mass = pi.sum();
        if (mass - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidModel(format!("initial distribution sums to {mass}")));
        }
        Ok(Self { t0, t1, pi })
    }

    /// Point-mass initial distribution on `start`.
    pub fn with_start(t0: DMatrix<f64>, t1: DMatrix<f64>, start: usize) -> Result<Self> {
        let d = t0.nrows();
        if start >= d {
            return Err(Error::OutOfRange(format!("start state {start} outside 0..{d}")));
        }
        let mut pi = DVector::zeros(d);
        pi[start] = 1.0;
        Self::new(t0, t1, pi)
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn t0(&self) -> &DMatrix<f64> {
        &self.t0
    }

    pub fn t1(&self) -> &DMatrix<f64> {
        &self.t1
    }

    pub fn transition(&self, symbol: u8) -> &DMatrix<f64> {
        if symbol == 0 {
            &self.t0
        } else {
            &self.t1
        }
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    /// The model with output labels exchanged.
    pub fn relabeled(&self) -> Self {
        Self { t0: self.t1.clone(), t1: self.t0.clone(), pi: self.pi.clone() }
    }

    /// `pi T_{a1} .. T_{aL} eta`.
    pub fn sequence_probability(&self, seq: &BinarySequence) -> f64 {
        chain_probability(&self.pi, [&self.t0, &self.t1], seq.as_slice())
    }

    /// True iff every transition entry is within `tol` of 0 or 1.
    pub fn is_deterministic(&self, tol: f64) -> bool {
        self.t0.iter().chain(self.t1.iter()).all(|&x| x.abs() <= tol || (x - 1.0).abs() <= tol)
    }

    /// Rounds every row to a single unit entry at its largest weight, across
    /// both outputs. The initial distribution becomes a point mass on its mode.
    pub fn round_to_deterministic(&self) -> Self {
        let d = self.dim();
        let mut t0 = DMatrix::zeros(d, d);
        let mut t1 = DMatrix::zeros(d, d);
        for i in 0..d {
            let (mut best, mut at) = (f64::NEG_INFINITY, (0u8, 0usize));
            for (a, t) in [(0u8, &self.t0), (1u8, &self.t1)] {
                for j in 0..d {
                    if t[(i, j)] > best {
                        best = t[(i, j)];
                        at = (a, j);
                    }
                }
            }
            if at.0 == 0 {
                t0[(i, at.1)] = 1.0;
            } else {
                t1[(i, at.1)] = 1.0;
            }
        }
        let start = self.pi.argmax().0;
        let mut pi = DVector::zeros(d);
        pi[start] = 1.0;
        Self { t0, t1, pi }
    }
}

/// Forward product `pi T_{a1} .. T_{aL} eta`, evaluated left to right.
pub(crate) fn chain_probability(pi: &DVector<f64>, t: [&DMatrix<f64>; 2], seq: &[u8]) -> f64 {
    let mut row = pi.transpose();
    for &a in seq {
        row = &row * t[a as usize];
    }
    row.sum()
}

pub fn sequence_probability(model: &ClassicalModel, seq: &BinarySequence) -> f64 {
    model.sequence_probability(seq)
}

pub fn is_deterministic(model: &ClassicalModel, tol: f64) -> bool {
    model.is_deterministic(tol)
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    d: usize,
    #[serde(rename = "T0")]
    t0: Vec<Vec<f64>>,
    #[serde(rename = "T1")]
    t1: Vec<Vec<f64>>,
    pi: Vec<f64>,
}

pub(crate) fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], d: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!("{name} must be {d}x{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl Serialize for ClassicalModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelRepr {
            d: self.dim(),
            t0: rows_of(&self.t0),
            t1: rows_of(&self.t1),
            pi: self.pi.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassicalModel {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = ModelRepr::deserialize(de)?;
        let build = || -> Result<Self> {
            if r.pi.len() != r.d {
                return Err(Error::DimensionMismatch(format!("pi must have {} entries", r.d)));
            }
            ClassicalModel::new(
                matrix_from_rows(&r.t0, r.d, "T0")?,
                matrix_from_rows(&r.t1, r.d, "T1")?,
                DVector::from_vec(r.pi.clone()),
            )
        };
        build().map_err(serde::de::Error::custom)
    }
}

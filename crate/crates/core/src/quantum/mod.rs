//! Quantum instruments on a `d`-dimensional Hilbert space.
//!
//! Each outcome `a` carries a family of Kraus operators `K_a^i`; the
//! Heisenberg action is `I_a(X) = sum_i K_a^i^dagger X K_a^i`.

mod one_way;
mod optimize;

pub use one_way::{
    default_grid_points, fourier_one_way_model, fourier_unitary, quantum_one_way_probability, theta_scan,
    theta_star, FourierOneWayParams, OneWayEvaluator, ThetaScan,
};
pub use optimize::{optimize_quantum, QuantumFit, QuantumObjective};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::classical::ClassicalModel;
use crate::error::{Error, Result};
use crate::sequence::BinarySequence;

pub type CMatrix = DMatrix<Complex64>;

/// Slack allowed on `sum K^dagger K <= 1`.
pub const KRAUS_TOL: f64 = 1e-9;
/// Slack on the trace and hermiticity of the initial state.
pub const STATE_TOL: f64 = 1e-12;
/// Largest imaginary part tolerated in a computed probability.
pub const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel {
    kraus: [Vec<CMatrix>; 2],
    rho: CMatrix,
}

impl QuantumModel {
    /// Accepts sub-normalized families (`sum K^dagger K <= 1`); see
    /// [`QuantumModel::is_exact`] for the equality case.
    pub fn new(kraus0: Vec<CMatrix>, kraus1: Vec<CMatrix>, rho: CMatrix) -> Result<Self> {
        let d = rho.nrows();
        if d == 0 || rho.ncols() != d {
            return Err(Error::DimensionMismatch(format!("rho is {:?}, must be square and non-empty", rho.shape())));
        }
        if kraus0.is_empty() || kraus1.is_empty() {
            return Err(Error::InvalidModel("each outcome needs at least one Kraus operator".into()));
        }
        if let Some(k) = kraus0.iter().chain(&kraus1).find(|k| k.shape() != (d, d)) {
            return Err(Error::DimensionMismatch(format!("Kraus operator is {:?}, rho is {d}x{d}", k.shape())));
        }
        if kraus0.iter().chain(&kraus1).flat_map(|k| k.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidModel("Kraus operator has a non-finite entry".into()));
        }
        check_state(&rho)?;
        let top = lambda_max(&kraus_sum(kraus0.iter().chain(&kraus1), d));
        if top > 1.0 + KRAUS_TOL {
            return Err(Error::InvalidModel(format!("sum of K^dagger K has eigenvalue {top} > 1")));
        }
        Ok(Self { kraus: [kraus0, kraus1], rho })
    }

    /// Initial state `|0><0|`.
    pub fn with_ground_state(kraus0: Vec<CMatrix>, kraus1: Vec<CMatrix>) -> Result<Self> {
        let d = kraus0.first().map(|k| k.nrows()).unwrap_or(0);
        Self::new(kraus0, kraus1, ground_state(d.max(1)))
    }

    /// Diagonal embedding of a classical model: `K_a^{ij} = sqrt(T_a[i][j]) |j><i|`
    /// for every nonzero transition, and `rho = diag(pi)`.
    pub fn from_classical(model: &ClassicalModel) -> Self {
        let d = model.dim();
        let family = |t: &DMatrix<f64>| {
            let mut ks: Vec<CMatrix> = Vec::new();
            for i in 0..d {
                for j in 0..d {
                    if t[(i, j)] > 0.0 {
                        let mut k = CMatrix::zeros(d, d);
                        k[(j, i)] = Complex64::new(t[(i, j)].sqrt(), 0.0);
                        ks.push(k);
                    }
                }
            }
            if ks.is_empty() {
                ks.push(CMatrix::zeros(d, d));
            }
            ks
        };
        let rho = CMatrix::from_diagonal(&model.pi().map(|p| Complex64::new(p, 0.0)));
        Self { kraus: [family(model.t0()), family(model.t1())], rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn kraus(&self, symbol: u8) -> &[CMatrix] {
        &self.kraus[symbol as usize]
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    /// Number of Kraus operators for the larger of the two outcomes.
    pub fn n_kraus(&self) -> usize {
        self.kraus[0].len().max(self.kraus[1].len())
    }

    /// True iff `sum K^dagger K` equals the identity within `tol`.
    pub fn is_exact(&self, tol: f64) -> bool {
        let d = self.dim();
        let e = kraus_sum(self.kraus[0].iter().chain(&self.kraus[1]), d);
        (e - CMatrix::identity(d, d)).iter().all(|z| z.norm() <= tol)
    }

    /// `tr(rho I_{a1}( .. I_{aL}(1)))`, propagating the effect backwards.
    pub fn sequence_probability(&self, seq: &BinarySequence) -> Result<f64> {
        let d = self.dim();
        let mut e = CMatrix::identity(d, d);
        for &a in seq.as_slice().iter().rev() {
            e = heisenberg_step(&self.kraus[a as usize], &e);
        }
        real_probability((&self.rho * e).trace())
    }

    /// Same probability via the Schrödinger picture: push `rho` forward
    /// through `rho -> sum K rho K^dagger` and take the final trace.
    pub fn forward_probability(&self, seq: &BinarySequence) -> Result<f64> {
        let mut rho = self.rho.clone();
        for &a in seq.as_slice() {
            rho = self.kraus[a as usize].iter().map(|k| k * &rho * k.adjoint()).fold(
                CMatrix::zeros(self.dim(), self.dim()),
                |acc, x| acc + x,
            );
        }
        real_probability(rho.trace())
    }
}

pub fn quantum_sequence_probability(model: &QuantumModel, seq: &BinarySequence) -> Result<f64> {
    model.sequence_probability(seq)
}

pub(crate) fn heisenberg_step(kraus: &[CMatrix], e: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(e.nrows(), e.ncols());
    for k in kraus {
        out += k.adjoint() * e * k;
    }
    out
}

pub(crate) fn real_probability(z: Complex64) -> Result<f64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NonFinite("quantum probability".into()));
    }
    if z.im.abs() > IMAG_TOL {
        return Err(Error::NonHermitian(z.im));
    }
    Ok(z.re)
}

pub fn ground_state(d: usize) -> CMatrix {
    let mut rho = CMatrix::zeros(d, d);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    rho
}

fn kraus_sum<'a>(ks: impl Iterator<Item = &'a CMatrix>, d: usize) -> CMatrix {
    ks.fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
}

fn lambda_max(hermitian: &CMatrix) -> f64 {
    hermitian.clone().symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn check_state(rho: &CMatrix) -> Result<()> {
    let skew = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if skew > STATE_TOL {
        return Err(Error::InvalidModel(format!("rho is not Hermitian (deviation {skew})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::InvalidModel(format!("rho has trace {tr}")));
    }
    let low = rho.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if low < -STATE_TOL {
        return Err(Error::InvalidModel(format!("rho has negative eigenvalue {low}")));
    }
    Ok(())
}

/// Rescales every operator by `1 / sqrt(lambda_max)` of `sum B^dagger B`, so
/// the top eigenvalue of the new sum is exactly 1 and the rest fall below it.
pub fn normalize_kraus(groups: &[Vec<CMatrix>; 2]) -> Result<[Vec<CMatrix>; 2]> {
    let d = groups
        .iter()
        .flatten()
        .next()
        .map(|b| b.nrows())
        .ok_or_else(|| Error::DegenerateNormalization("no Kraus operators given".into()))?;
    if let Some(b) = groups.iter().flatten().find(|b| b.shape() != (d, d)) {
        return Err(Error::DimensionMismatch(format!("operator is {:?}, expected {d}x{d}", b.shape())));
    }
    let top = lambda_max(&kraus_sum(groups.iter().flatten(), d));
    if !top.is_finite() {
        return Err(Error::NonFinite("largest eigenvalue of sum B^dagger B".into()));
    }
    if top <= 0.0 {
        return Err(Error::DegenerateNormalization("all Kraus operators vanish".into()));
    }
    let s = Complex64::new(1.0 / top.sqrt(), 0.0);
    Ok([groups[0].iter().map(|b| b * s).collect(), groups[1].iter().map(|b| b * s).collect()])
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    d: usize,
    kraus: [Vec<Vec<Vec<[f64; 2]>>>; 2],
    rho: Vec<Vec<[f64; 2]>>,
}

fn to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn from_pairs(rows: &[Vec<[f64; 2]>], d: usize) -> Result<CMatrix> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch(format!("matrix must be {d}x{d}")));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

impl Serialize for QuantumModel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelRepr {
            d: self.dim(),
            kraus: [self.kraus[0].iter().map(to_pairs).collect(), self.kraus[1].iter().map(to_pairs).collect()],
            rho: to_pairs(&self.rho),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumModel {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = ModelRepr::deserialize(de)?;
        let build = || -> Result<Self> {
            let family = |ms: &[Vec<Vec<[f64; 2]>>]| ms.iter().map(|m| from_pairs(m, r.d)).collect::<Result<Vec<_>>>();
            QuantumModel::new(family(&r.kraus[0])?, family(&r.kraus[1])?, from_pairs(&r.rho, r.d)?)
        };
        build().map_err(serde::de::Error::custom)
    }
}

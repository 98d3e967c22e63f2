//! Unconstrained search over classical models.
//!
//! Parameters are two real `d x d` matrices `B0, B1`, flattened row-major as
//! `[B0, B1]`, mapped onto transition matrices by
//! `T_a[i][j] = B_a[i][j]^2 / sum_l (B0[i][l]^2 + B1[i][l]^2)`.
//! The initial distribution is a point mass on the first state.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use super::{maximize_with_restarts, uniform_init, AdamConfig, MultiStartOutcome, Objective};
use crate::classical::{chain_probability, ClassicalModel};
use crate::error::{Error, Result};
use crate::sequence::BinarySequence;

/// Squares and row-normalizes `(B0, B1)` into `(T0, T1)`.
pub fn normalize_classical(b0: &DMatrix<f64>, b1: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (t0, t1, _) = normalize_with_norms(b0, b1)?;
    Ok((t0, t1))
}

fn normalize_with_norms(
    b0: &DMatrix<f64>,
    b1: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    if b0.shape() != b1.shape() || b0.nrows() != b0.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "B0 is {:?}, B1 is {:?}; both must be the same square shape",
            b0.shape(),
            b1.shape()
        )));
    }
    let d = b0.nrows();
    let mut norms = Vec::with_capacity(d);
    for i in 0..d {
        let s = b0.row(i).norm_squared() + b1.row(i).norm_squared();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::DegenerateNormalization(format!("row {i} of (B0, B1) has norm {s}")));
        }
        norms.push(s);
    }
    let scale = |b: &DMatrix<f64>| DMatrix::from_fn(d, d, |i, j| b[(i, j)] * b[(i, j)] / norms[i]);
    Ok((scale(b0), scale(b1), norms))
}

fn split_params(x: &[f64], d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = d * d;
    (DMatrix::from_row_slice(d, d, &x[..n]), DMatrix::from_row_slice(d, d, &x[n..2 * n]))
}

fn point_mass(d: usize) -> DVector<f64> {
    let mut pi = DVector::zeros(d);
    pi[0] = 1.0;
    pi
}

/// Sequence probability and its exact gradient with respect to `(B0, B1)`.
///
/// With prefix rows `alpha_j = pi T_{a1} .. T_{aj}` and suffix columns
/// `beta_j = T_{aj} .. T_{aL} eta`, the derivative with respect to
/// `T_a[i][l]` is `G_a[i][l] = sum over j with a_j = a of
/// alpha_{j-1}[i] beta_{j+1}[l]`, and through the normalization
/// `dp/dB_a[i][l] = 2 B_a[i][l] / S_i (G_a[i][l] - sum_{c,m} G_c[i][m] T_c[i][m])`.
pub fn analytic_classical_gradient(
    seq: &BinarySequence,
    b0: &DMatrix<f64>,
    b1: &DMatrix<f64>,
) -> Result<(f64, DMatrix<f64>, DMatrix<f64>)> {
    let (t0, t1, norms) = normalize_with_norms(b0, b1)?;
    let d = t0.nrows();
    let a = seq.as_slice();
    let t = [&t0, &t1];

    let mut prefix: Vec<RowDVector<f64>> = Vec::with_capacity(a.len() + 1);
    prefix.push(point_mass(d).transpose());
    for &s in a {
        let next = prefix.last().unwrap() * t[s as usize];
        prefix.push(next);
    }
    let mut suffix: Vec<DVector<f64>> = vec![DVector::zeros(d); a.len() + 1];
    suffix[a.len()] = DVector::from_element(d, 1.0);
    for j in (0..a.len()).rev() {
        suffix[j] = t[a[j] as usize] * &suffix[j + 1];
    }
    let p = prefix[a.len()].sum();

    let mut g = [DMatrix::<f64>::zeros(d, d), DMatrix::<f64>::zeros(d, d)];
    for (j, &s) in a.iter().enumerate() {
        // symbol j sits between prefix j and suffix j + 1
        g[s as usize] += prefix[j].transpose() * suffix[j + 1].transpose();
    }
    let mut grad = [DMatrix::<f64>::zeros(d, d), DMatrix::<f64>::zeros(d, d)];
    for i in 0..d {
        let c: f64 = (0..2).map(|s| g[s].row(i).dot(&t[s].row(i))).sum();
        for (s, b) in [b0, b1].into_iter().enumerate() {
            for l in 0..d {
                grad[s][(i, l)] = 2.0 * b[(i, l)] / norms[i] * (g[s][(i, l)] - c);
            }
        }
    }
    let [g0, g1] = grad;
    Ok((p, g0, g1))
}

/// Probability of `seq` as a function of the flattened `(B0, B1)`.
pub struct ClassicalObjective {
    seq: BinarySequence,
    d: usize,
    analytic: bool,
}

impl ClassicalObjective {
    pub fn new(seq: BinarySequence, d: usize) -> Self {
        Self { seq, d, analytic: true }
    }

    /// Use finite differences instead of the analytic gradient.
    pub fn finite_difference(mut self) -> Self {
        self.analytic = false;
        self
    }

    pub fn model(&self, x: &[f64]) -> Result<ClassicalModel> {
        let (b0, b1) = split_params(x, self.d);
        let (t0, t1) = normalize_classical(&b0, &b1)?;
        ClassicalModel::new(t0, t1, point_mass(self.d))
    }
}

impl Objective for ClassicalObjective {
    fn arity(&self) -> usize {
        2 * self.d * self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (b0, b1) = split_params(x, self.d);
        match normalize_classical(&b0, &b1) {
            Ok((t0, t1)) => chain_probability(&point_mass(self.d), [&t0, &t1], self.seq.as_slice()),
            Err(_) => f64::NAN,
        }
    }

    fn value_and_gradient(&self, x: &[f64], fd_step: f64) -> Result<(f64, Vec<f64>)> {
        if !self.analytic {
            let f = self.value(x);
            return Ok((f, super::finite_diff_gradient(|y| self.value(y), x, fd_step)?));
        }
        let (b0, b1) = split_params(x, self.d);
        let (p, g0, g1) = analytic_classical_gradient(&self.seq, &b0, &b1)?;
        let mut flat = Vec::with_capacity(self.arity());
        for g in [&g0, &g1] {
            flat.extend(g.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()));
        }
        Ok((p, flat))
    }
}

/// Best classical model found for a sequence at a fixed dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalFit {
    pub model: ClassicalModel,
    pub probability: f64,
    pub search: MultiStartOutcome,
}

/// Multi-restart Adam search for the most probable `d`-state model of `seq`,
/// starting each restart from `B` entries uniform on `[-1, 1]`.
pub fn optimize_classical(seq: &BinarySequence, d: usize, config: &AdamConfig) -> Result<ClassicalFit> {
    if d == 0 {
        return Err(Error::OutOfRange("dimension must be at least 1".into()));
    }
    let objective = ClassicalObjective::new(seq.clone(), d);
    let n = objective.arity();
    let search = maximize_with_restarts(&objective, |rng| uniform_init(rng, n), config)?;
    let model = objective.model(&search.best.best_params)?;
    let probability = model.sequence_probability(seq);
    Ok(ClassicalFit { model, probability, search })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    #[test]
    fn normalization_examples() {
        let (t0, t1) = normalize_classical(&DMatrix::from_element(2, 2, 1.0), &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(t0, DMatrix::from_element(2, 2, 0.5));
        assert_eq!(t1, DMatrix::zeros(2, 2));

        let (t0, t1) = normalize_classical(&dmatrix![1.0], &dmatrix![1.0]).unwrap();
        assert_eq!((t0[(0, 0)], t1[(0, 0)]), (0.5, 0.5));

        let (t0, _) = normalize_classical(&dmatrix![0.0, -3.0; 0.2, 0.0], &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(t0, dmatrix![0.0, 1.0; 1.0, 0.0]);
    }

    #[test]
    fn zero_row_is_flagged() {
        let b0 = dmatrix![1.0, 0.0; 0.0, 0.0];
        let err = normalize_classical(&b0, &DMatrix::zeros(2, 2)).unwrap_err();
        assert!(matches!(err, Error::DegenerateNormalization(_)));
        let s: BinarySequence = "01".parse().unwrap();
        assert!(analytic_classical_gradient(&s, &b0, &DMatrix::zeros(2, 2)).is_err());
        assert!(normalize_classical(&b0, &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn zero_probability_region_has_finite_gradient() {
        let s: BinarySequence = "0101".parse().unwrap();
        let b0 = dmatrix![0.3, -0.7; 0.5, 0.1];
        let (p, g0, g1) = analytic_classical_gradient(&s, &b0, &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(p, 0.0);
        assert!(g0.iter().chain(g1.iter()).all(|x| x.is_finite()));
    }

    #[test]
    fn gradient_matches_finite_differences_fixed_point() {
        let s: BinarySequence = "00101".parse().unwrap();
        let b0 = dmatrix![0.3, -0.7, 0.2; 0.5, 0.1, -0.4; 0.9, 0.6, 0.3];
        let b1 = dmatrix![0.8, 0.2, -0.1; -0.2, 0.4, 0.6; 0.1, -0.5, 0.7];
        let (p, g0, g1) = analytic_classical_gradient(&s, &b0, &b1).unwrap();
        let obj = ClassicalObjective::new(s, 3);
        let mut x: Vec<f64> = b0.transpose().iter().copied().collect();
        x.extend(b1.transpose().iter().copied());
        assert_abs_diff_eq!(p, obj.value(&x), epsilon = 1e-15);
        let fd = super::super::finite_diff_gradient(|y| obj.value(y), &x, 1e-6).unwrap();
        let analytic: Vec<f64> =
            g0.transpose().iter().chain(g1.transpose().iter()).copied().collect();
        for (a, b) in analytic.iter().zip(&fd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn fair_coin_is_the_one_state_optimum() {
        let s: BinarySequence = "01".parse().unwrap();
        let fit = optimize_classical(&s, 1, &AdamConfig::classical().with_restarts(4)).unwrap();
        assert_abs_diff_eq!(fit.probability, 0.25, epsilon = 1e-6);
    }
}

//! The Fourier-rotation quantum model for one-tick sequences.
//!
//! `U(theta) = F diag(e^{-ik theta}) F^dagger` with `F` the unitary DFT, so
//! applying `U` to a vector is an FFT, a phase multiply and an inverse FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{ground_state, CMatrix, QuantumModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierOneWayParams {
    pub d: usize,
    pub theta0: f64,
    pub q: f64,
}

impl FourierOneWayParams {
    /// Survival probability fixed at the classical one-way optimum `1/(d+1)`.
    pub fn at_classical_q(d: usize, theta0: f64) -> Self {
        Self { d, theta0, q: 1.0 / (d as f64 + 1.0) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::OutOfRange(format!("one-way model needs d >= 2, got {}", self.d)));
        }
        if !(0.0..1.0).contains(&self.q) && self.q != 1.0 {
            return Err(Error::OutOfRange(format!("q = {} outside [0, 1]", self.q)));
        }
        if !self.theta0.is_finite() {
            return Err(Error::NonFinite("theta0".into()));
        }
        Ok(())
    }
}

/// Dense `F diag(e^{-ik theta}) F^dagger`. The result is circulant, so only
/// its first column is computed.
pub fn fourier_unitary(d: usize, theta: f64) -> CMatrix {
    let df = d as f64;
    let col: Vec<Complex64> = (0..d)
        .map(|m| {
            (0..d)
                .map(|k| Complex64::from_polar(1.0, k as f64 * (2.0 * PI * m as f64 / df - theta)))
                .sum::<Complex64>()
                / df
        })
        .collect();
    CMatrix::from_fn(d, d, |j, l| col[(j + d - l) % d])
}

/// Reusable FFT plans for repeated evaluations at one dimension.
pub struct OneWayEvaluator {
    d: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl OneWayEvaluator {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::OutOfRange(format!("one-way model needs d >= 2, got {d}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self { d, forward: planner.plan_fft_forward(d), inverse: planner.plan_fft_inverse(d) })
    }

    /// `(1 - q) |<d-1| K0^d |0>|^2` with `K0 = U(theta) sqrt(E0)`,
    /// `E0 = diag(1, .., 1, q)`.
    pub fn probability(&self, theta: f64, q: f64) -> f64 {
        let d = self.d;
        let sq = q.sqrt();
        let phases: Vec<Complex64> =
            (0..d).map(|k| Complex64::from_polar(1.0 / d as f64, -(k as f64) * theta)).collect();
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[0] = Complex64::new(1.0, 0.0);
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())];
        for _ in 0..d {
            v[d - 1] *= sq;
            self.forward.process_with_scratch(&mut v, &mut scratch);
            for (x, p) in v.iter_mut().zip(&phases) {
                *x *= p;
            }
            self.inverse.process_with_scratch(&mut v, &mut scratch);
        }
        (1.0 - q) * v[d - 1].norm_sqr()
    }
}

pub fn quantum_one_way_probability(params: &FourierOneWayParams) -> Result<f64> {
    params.validate()?;
    Ok(OneWayEvaluator::new(params.d)?.probability(params.theta0, params.q))
}

/// The same model as a general instrument: `K0 = U sqrt(E0)`,
/// `K1 = sqrt(1 - E0)`, initial state `|0><0|`.
pub fn fourier_one_way_model(params: &FourierOneWayParams) -> Result<QuantumModel> {
    params.validate()?;
    let d = params.d;
    let mut e0 = vec![1.0; d];
    e0[d - 1] = params.q;
    let sqrt_diag = |v: Vec<f64>| CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, v.into_iter().map(|x| Complex64::new(x.sqrt(), 0.0))));
    let k0 = fourier_unitary(d, params.theta0) * sqrt_diag(e0.clone());
    let k1 = sqrt_diag(e0.iter().map(|x| 1.0 - x).collect());
    QuantumModel::new(vec![k0], vec![k1], ground_state(d))
}

/// `(2 pi / d)(1 - 1/d)`, where the slowest Fourier amplitude returns to
/// zero phase after `d` steps.
pub fn theta_star(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("theta_star needs d >= 2, got {d}")));
    }
    let df = d as f64;
    Ok(2.0 * PI / df * (1.0 - 1.0 / df))
}

/// Peaks narrow like `2 pi / d^2`; this keeps roughly 16 samples per peak
/// width.
pub fn default_grid_points(d: usize) -> usize {
    (10 * d).max(16 * d * d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaScan {
    pub d: usize,
    pub q: f64,
    pub theta_best: f64,
    pub p_best: f64,
    /// `(theta, probability)` on the uniform grid `2 pi i / n`, `i = 1..=n`.
    pub curve: Vec<(f64, f64)>,
}

const GOLDEN_TOL: f64 = 1e-10;

/// Samples `theta0` over `(0, 2 pi]` at `q = 1/(d+1)` and refines the best
/// grid cell by golden-section search.
pub fn theta_scan(d: usize, grid_points: usize) -> Result<ThetaScan> {
    if grid_points < 10 * d {
        return Err(Error::OutOfRange(format!("grid needs at least {} points for d = {d}, got {grid_points}", 10 * d)));
    }
    let eval = OneWayEvaluator::new(d)?;
    let q = 1.0 / (d as f64 + 1.0);
    let step = 2.0 * PI / grid_points as f64;
    let curve: Vec<(f64, f64)> = (1..=grid_points)
        .into_par_iter()
        .map(|i| {
            let theta = step * i as f64;
            (theta, eval.probability(theta, q))
        })
        .collect();
    // first maximum wins ties
    let (theta_grid, p_grid) = curve.iter().copied().fold((0.0, f64::NEG_INFINITY), |b, pt| if pt.1 > b.1 { pt } else { b });
    let (theta_ref, p_ref) =
        golden_section_max(|t| eval.probability(t, q), theta_grid - step, theta_grid + step, GOLDEN_TOL);
    let (theta_best, p_best) = if p_ref > p_grid { (theta_ref.rem_euclid(2.0 * PI), p_ref) } else { (theta_grid, p_grid) };
    Ok(ThetaScan { d, q, theta_best, p_best, curve })
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut e = a + r * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while b - a > tol {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + r * (b - a);
            fe = f(e);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::BinarySequence;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn dense_fourier(d: usize, theta: f64) -> CMatrix {
        let df = d as f64;
        let f = CMatrix::from_fn(d, d, |j, k| Complex64::from_polar(1.0 / df.sqrt(), 2.0 * PI * (j * k) as f64 / df));
        let phase = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| Complex64::from_polar(1.0, -(k as f64) * theta)));
        &f * phase * f.adjoint()
    }

    fn dense_probability(p: &FourierOneWayParams) -> f64 {
        let d = p.d;
        let mut sq = DMatrix::<Complex64>::identity(d, d);
        sq[(d - 1, d - 1)] = Complex64::new(p.q.sqrt(), 0.0);
        let k0 = dense_fourier(d, p.theta0) * sq;
        let mut pow = DMatrix::<Complex64>::identity(d, d);
        for _ in 0..d {
            pow = &k0 * pow;
        }
        (1.0 - p.q) * pow[(d - 1, 0)].norm_sqr()
    }

    #[test]
    fn unitary_examples() {
        let u = fourier_unitary(5, 0.0);
        assert_abs_diff_eq!((u - CMatrix::identity(5, 5)).norm(), 0.0, epsilon = 1e-14);
        let u = fourier_unitary(2, PI / 2.0);
        let a = Complex64::new(0.5, -0.5);
        let b = Complex64::new(0.5, 0.5);
        for (got, want) in u.iter().zip([a, b, b, a]) {
            assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-15);
        }
        for (d, theta) in [(3, 0.7), (7, 2.1), (12, -4.0)] {
            let u = fourier_unitary(d, theta);
            assert_abs_diff_eq!((u.adjoint() * &u - CMatrix::identity(d, d)).norm(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!((u - dense_fourier(d, theta)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn one_way_examples() {
        let p = |d, theta0, q| quantum_one_way_probability(&FourierOneWayParams { d, theta0, q }).unwrap();
        assert_abs_diff_eq!(p(4, 0.0, 0.2), 0.0, epsilon = 1e-15);
        assert_eq!(p(3, 1.0, 1.0), 0.0);
        let s3 = 3f64.sqrt();
        let want = ((1.0 + 1.0 / s3) / 2.0).powi(2) * (2.0 / 3.0);
        assert_abs_diff_eq!(p(2, PI / 2.0, 1.0 / 3.0), want, epsilon = 1e-14);
        assert!((want - 0.41467).abs() < 1e-5);
        assert!(quantum_one_way_probability(&FourierOneWayParams { d: 1, theta0: 0.0, q: 0.5 }).is_err());
    }

    #[test]
    fn fft_route_matches_dense_and_instrument() {
        for (d, theta0, q) in [(2, 0.3, 0.5), (3, 1.3697, 0.25), (6, 0.9, 0.1), (9, 5.5, 0.7)] {
            let params = FourierOneWayParams { d, theta0, q };
            let fast = quantum_one_way_probability(&params).unwrap();
            assert_abs_diff_eq!(fast, dense_probability(&params), epsilon = 1e-12);
            let model = fourier_one_way_model(&params).unwrap();
            assert!(model.is_exact(1e-12));
            let tick = BinarySequence::one_tick(d + 1).unwrap();
            assert_abs_diff_eq!(fast, model.sequence_probability(&tick).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn theta_star_formula() {
        assert_abs_diff_eq!(theta_star(2).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(theta_star(10).unwrap(), 0.18 * PI, epsilon = 1e-15);
        assert!(theta_star(1).is_err());
        let big = theta_star(100_000).unwrap();
        assert!(big > 0.0 && (big * 100_000.0 / (2.0 * PI) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn scan_small() {
        let s = theta_scan(2, default_grid_points(2)).unwrap();
        assert!(s.p_best >= 0.4146);
        assert_abs_diff_eq!(s.theta_best, PI / 2.0, epsilon = 1e-6);
        assert_eq!(s.curve.len(), 64);
        assert!(theta_scan(5, 49).is_err());
        let s3 = theta_scan(3, default_grid_points(3)).unwrap();
        let coarse = quantum_one_way_probability(&FourierOneWayParams::at_classical_q(3, 1.3697)).unwrap();
        assert!(s3.p_best >= coarse && (s3.p_best - 0.5332).abs() < 1e-3);
        assert!((s3.theta_best - 1.3697).abs() < 5e-3);
    }

    #[test]
    fn golden_section_finds_vertex() {
        let (x, fx) = golden_section_max(|t| -(t - 0.3) * (t - 0.3), 0.0, 1.0, 1e-10);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(fx, 0.0, epsilon = 1e-15);
    }
}

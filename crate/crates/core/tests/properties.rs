use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use seqmem::classical::{build_emcm, build_gmcm, emcm_probability, f_ow, ClassicalModel, EmcmParams, GmcmSignature};
use seqmem::combinatorics::{minimal_pattern_count, primitive_word_count};
use seqmem::optimizer::analytic_classical_gradient;
use seqmem::quantum::{fourier_unitary, normalize_kraus, CMatrix, QuantumModel};
use seqmem::{dc_and_patterns, expand_pattern, BinarySequence, Pattern, ONE_OVER_E};

fn seq_strategy(max_len: usize) -> impl Strategy<Value = BinarySequence> {
    prop::collection::vec(0u8..2, 1..=max_len).prop_map(|v| BinarySequence::new(v).unwrap())
}

fn all_sequences(len: usize) -> Vec<BinarySequence> {
    (0u32..1 << len).map(|m| BinarySequence::new((0..len).map(|b| ((m >> b) & 1) as u8).collect()).unwrap()).collect()
}

/// Row weights over `[T0 | T1]`, some forced to zero.
fn classical_strategy(max_d: usize) -> impl Strategy<Value = ClassicalModel> {
    (1..=max_d).prop_flat_map(|d| {
        (
            prop::collection::vec(prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0..1.0f64], 2 * d), d),
            prop::collection::vec(0.01..1.0f64, d),
        )
            .prop_map(move |(rows, pi)| {
                let mut t0 = DMatrix::zeros(d, d);
                let mut t1 = DMatrix::zeros(d, d);
                for (i, row) in rows.iter().enumerate() {
                    let s: f64 = row.iter().sum::<f64>() + 0.5;
                    for j in 0..d {
                        t0[(i, j)] = row[j] / s;
                        t1[(i, j)] = row[d + j] / s;
                    }
                    // keep the row stochastic without a degenerate all-zero row
                    t0[(i, i)] += 0.5 / s;
                }
                let total: f64 = pi.iter().sum();
                ClassicalModel::new(t0, t1, DVector::from_iterator(d, pi.iter().map(|p| p / total))).unwrap()
            })
    })
}

fn cmatrix_strategy(d: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d)
        .prop_map(move |v| CMatrix::from_iterator(d, d, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

fn kraus_strategy(max_d: usize) -> impl Strategy<Value = [Vec<CMatrix>; 2]> {
    (1..=max_d, 1..=3usize).prop_flat_map(|(d, nk)| {
        (prop::collection::vec(cmatrix_strategy(d), nk), prop::collection::vec(cmatrix_strategy(d), nk)).prop_map(|(a, b)| [a, b])
    })
}

fn completeness(groups: &[Vec<CMatrix>; 2]) -> CMatrix {
    let d = groups[0][0].nrows();
    groups.iter().flatten().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k)
}

fn exact_kraus(groups: [Vec<CMatrix>; 2]) -> [Vec<CMatrix>; 2] {
    let eig = completeness(&groups).symmetric_eigen();
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(1.0 / l.sqrt(), 0.0)));
    let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    groups.map(|g| g.into_iter().map(|b| b * &w).collect())
}

fn top_eigenvalue(m: &CMatrix) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.max()
}

/// Squared, row-normalized chain probability with a point-mass start.
fn chain_probability(seq: &[u8], b: &[DMatrix<f64>; 2]) -> f64 {
    let d = b[0].nrows();
    let norms: Vec<f64> = (0..d).map(|i| (0..d).map(|j| b[0][(i, j)].powi(2) + b[1][(i, j)].powi(2)).sum()).collect();
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    for &a in seq {
        v = (0..d).map(|j| (0..d).map(|i| v[i] * b[a as usize][(i, j)].powi(2) / norms[i]).sum()).collect();
    }
    v.iter().sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dc_is_relabeling_invariant(seq in seq_strategy(14)) {
        prop_assert_eq!(dc_and_patterns(&seq), dc_and_patterns(&seq.flipped()));
    }

    #[test]
    fn patterns_reproduce_and_are_minimal(seq in seq_strategy(14)) {
        let r = dc_and_patterns(&seq);
        prop_assert!(r.dc >= 1 && r.dc <= seq.len());
        prop_assert!(!r.patterns.is_empty());
        for p in &r.patterns {
            prop_assert_eq!(p.len(), r.dc);
            prop_assert_eq!(&expand_pattern(&seq, *p, seq.len()).unwrap(), &seq);
        }
        for ell in 1..r.dc {
            for tail in 0..ell {
                let p = Pattern::new(tail, ell - tail).unwrap();
                prop_assert_ne!(&expand_pattern(&seq, p, seq.len()).unwrap(), &seq);
            }
        }
        let tails: Vec<usize> = r.patterns.iter().map(|p| p.tail()).collect();
        prop_assert!(tails.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn classical_probabilities_sum_to_one(m in classical_strategy(4), len in 1..=6usize) {
        let total: f64 = all_sequences(len).iter().map(|s| m.sequence_probability(s)).sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "sum {}", total);
    }

    #[test]
    fn relabeling_symmetry(m in classical_strategy(4), seq in seq_strategy(8)) {
        let a = m.sequence_probability(&seq);
        let b = m.relabeled().sequence_probability(&seq.flipped());
        prop_assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn classical_embedding(m in classical_strategy(4), seq in seq_strategy(6)) {
        let q = QuantumModel::from_classical(&m);
        prop_assert!((q.sequence_probability(&seq).unwrap() - m.sequence_probability(&seq)).abs() < 1e-10);
    }

    #[test]
    fn exact_kraus_sums_to_one(groups in kraus_strategy(4), len in 1..=5usize) {
        let [k0, k1] = exact_kraus(groups);
        let m = QuantumModel::with_ground_state(k0, k1).unwrap();
        prop_assert!(m.is_exact(1e-9));
        let total: f64 = all_sequences(len).iter().map(|s| m.sequence_probability(s).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "sum {}", total);
    }

    #[test]
    fn normalized_iterates_sum_below_one(groups in kraus_strategy(4), len in 1..=5usize) {
        let [k0, k1] = normalize_kraus(&groups).unwrap();
        prop_assert!((top_eigenvalue(&completeness(&[k0.clone(), k1.clone()])) - 1.0).abs() < 1e-10);
        let m = QuantumModel::with_ground_state(k0, k1).unwrap();
        let total: f64 = all_sequences(len).iter().map(|s| m.sequence_probability(s).unwrap()).sum();
        prop_assert!(total <= 1.0 + 1e-9, "sum {}", total);
    }

    #[test]
    fn heisenberg_matches_schrodinger(groups in kraus_strategy(4), seq in seq_strategy(8)) {
        let [k0, k1] = normalize_kraus(&groups).unwrap();
        let m = QuantumModel::with_ground_state(k0, k1).unwrap();
        let h = m.sequence_probability(&seq).unwrap();
        let s = m.forward_probability(&seq).unwrap();
        prop_assert!((h - s).abs() < 1e-12, "{} vs {}", h, s);
    }

    #[test]
    fn fourier_unitary_is_unitary(d in 1..=12usize, theta in -10.0..10.0f64) {
        let u = fourier_unitary(d, theta);
        let err = (u.adjoint() * &u - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_central_differences(
        (d, seq, b) in (1..=5usize, prop::collection::vec(0u8..2, 1..=8)).prop_flat_map(|(d, seq)| {
            (Just(d), Just(seq), prop::collection::vec(-1.0..1.0f64, 2 * d * d))
        })
    ) {
        let mut b = [
            DMatrix::from_row_slice(d, d, &b[..d * d]),
            DMatrix::from_row_slice(d, d, &b[d * d..]),
        ];
        let s = BinarySequence::new(seq.clone()).unwrap();
        let (p, g0, g1) = analytic_classical_gradient(&s, &b[0], &b[1]).unwrap();
        prop_assert!((p - chain_probability(&seq, &b)).abs() < 1e-12);
        let h = 1e-6;
        for a in 0..2 {
            for i in 0..d {
                for j in 0..d {
                    let x = b[a][(i, j)];
                    b[a][(i, j)] = x + h;
                    let up = chain_probability(&seq, &b);
                    b[a][(i, j)] = x - h;
                    let down = chain_probability(&seq, &b);
                    b[a][(i, j)] = x;
                    let an = if a == 0 { g0[(i, j)] } else { g1[(i, j)] };
                    prop_assert!(((up - down) / (2.0 * h) - an).abs() < 1e-5);
                }
            }
        }
    }
}

#[test]
fn rounded_optimum_stays_exact() {
    // an optimum at d = DC rounds to a 0/1 model that still emits the sequence
    use seqmem::optimizer::{optimize_classical, AdamConfig};
    for s in ["001011", "0110", "00001"] {
        let seq: BinarySequence = s.parse().unwrap();
        let dc = dc_and_patterns(&seq).dc;
        let fit = optimize_classical(&seq, dc, &AdamConfig::classical().with_restarts(10)).unwrap();
        assert!(fit.probability > 1.0 - 1e-9, "{s}: {}", fit.probability);
        let rounded = fit.model.round_to_deterministic();
        assert!(rounded.is_deterministic(0.0));
        assert_eq!(rounded.sequence_probability(&seq), 1.0);
    }
}

/// Tail/cycle pairs with a primitive cycle whose last tail symbol differs
/// from the last cycle symbol, enumerated explicitly.
fn explicit_minimal_patterns(ell: usize) -> u128 {
    let primitive = |w: &[u8]| (1..w.len()).filter(|p| w.len().is_multiple_of(*p)).all(|p| (0..w.len()).any(|i| w[i] != w[i % p]));
    let mut count = 0;
    for m in 0u32..1 << ell {
        let w: Vec<u8> = (0..ell).map(|b| ((m >> b) & 1) as u8).collect();
        for tail in 0..ell {
            let cycle = &w[tail..];
            if primitive(cycle) && (tail == 0 || w[tail - 1] != w[ell - 1]) {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn pattern_count_matches_enumeration() {
    for ell in 1..=12 {
        assert_eq!(minimal_pattern_count(2, ell as u64).unwrap(), explicit_minimal_patterns(ell), "ell = {ell}");
    }
}

#[test]
fn primitive_words_at_primes() {
    for k in 2..=5u64 {
        for p in [2u64, 3, 5, 7, 11, 13] {
            assert_eq!(primitive_word_count(k, p).unwrap(), (k as u128).pow(p as u32) - k as u128);
        }
    }
}

#[test]
fn f_ow_increases_in_d() {
    for len in 2..=40u64 {
        let v: Vec<f64> = (1..=len).map(|d| f_ow(len, d).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "L = {len}");
        assert_eq!(*v.last().unwrap(), 1.0);
    }
}

#[test]
fn emcm_below_one_over_e() {
    for len in 2..=50 {
        for d in 1..len {
            let p = emcm_probability(len, d).unwrap().probability;
            assert!(p < ONE_OVER_E, "L={len} d={d}: {p}");
        }
    }
}

#[test]
fn emcm_model_matches_closed_form() {
    let mut checked = 0;
    for len in 2..=20 {
        for k in 1..=len {
            for n in 1..=len {
                for t in 0..len {
                    for z in 0..k {
                        let mut p = EmcmParams { len, n, k, t, z, q: 0.0 };
                        if p.validate().is_err() || p.dim() >= len {
                            continue;
                        }
                        let (l_red, d_red) = p.reduced();
                        p.q = 1.0 - d_red as f64 / l_red as f64;
                        let model = build_emcm(&p).unwrap();
                        let got = model.sequence_probability(&BinarySequence::one_tick(len).unwrap());
                        let want = f_ow(l_red as u64, d_red as u64).unwrap();
                        assert!((got - want).abs() < 1e-12, "{p:?}: {got} vs {want}");
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn uniform_gmcm_is_emcm() {
    for (n, k, q) in [(2usize, 2usize, 0.3), (3, 1, 0.5), (1, 4, 0.2), (4, 2, 0.25)] {
        let len = (n + 1) * k;
        let emcm = build_emcm(&EmcmParams { len, n, k, t: 0, z: 0, q }).unwrap();
        let gmcm = build_gmcm(&GmcmSignature::new(vec![k; n], vec![q; n]).unwrap()).unwrap();
        assert_eq!(emcm, gmcm, "n={n} k={k}");
    }
}

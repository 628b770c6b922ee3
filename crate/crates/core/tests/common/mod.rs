//! Random instance generators and independent reference formulas shared by the test suites.
//!
//! The reference formulas work on plain nested `Vec`s with explicit index loops so they share
//! no code with the library.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use twotime_core::linalg::{hermitian_eigen, CMatrix};
use twotime_core::{Complex64, DensityVector, Dim, Ensemble, KrausOperator, Measurement, Outcome, TwoTimeState};

pub type Arr = Vec<Vec<Complex64>>;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn dim(d: usize) -> Dim {
    Dim::new(d).unwrap()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn gaussian(r: &mut StdRng) -> f64 {
    let u1: f64 = 1.0 - r.random::<f64>();
    let u2: f64 = r.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn complex_gaussian(r: &mut StdRng) -> Complex64 {
    c(gaussian(r), gaussian(r))
}

pub fn random_matrix(r: &mut StdRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(r))
}

pub fn random_unit_vector(r: &mut StdRng, d: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d).map(|_| complex_gaussian(r)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

pub fn random_state(r: &mut StdRng, d: usize) -> TwoTimeState {
    TwoTimeState::new(random_matrix(r, d, d)).unwrap()
}

pub fn random_kraus(r: &mut StdRng, d: usize) -> KrausOperator {
    KrausOperator::new(random_matrix(r, d, d)).unwrap()
}

pub fn random_hermitian(r: &mut StdRng, d: usize) -> KrausOperator {
    let g = random_matrix(r, d, d);
    KrausOperator::new(g.add(&g.adjoint()).scale_real(0.5)).unwrap()
}

pub fn random_ensemble(r: &mut StdRng, d: usize, members: usize) -> Ensemble {
    let list = (0..members)
        .map(|_| (r.random::<f64>() + 0.05, random_state(r, d)))
        .collect();
    Ensemble::normalized(list).unwrap()
}

/// Density vector of a random ensemble with between 1 and `d²` members.
pub fn random_density(r: &mut StdRng, d: usize) -> DensityVector {
    let k = r.random_range(1..=d * d);
    twotime_core::states::density_from_ensemble(&random_ensemble(r, d, k))
}

/// `n` random operators rescaled so that `Σ A†A = I`.
pub fn random_complete_ops(r: &mut StdRng, d: usize, n: usize) -> Vec<KrausOperator> {
    let gs: Vec<CMatrix> = (0..n).map(|_| random_matrix(r, d, d)).collect();
    let mut s = CMatrix::zeros(d, d);
    for g in &gs {
        s.add_assign(&g.adjoint().matmul(g));
    }
    let inv_sqrt = hermitian_eigen(&s.hermitian_part()).compose(|x| 1.0 / x.sqrt());
    gs.iter()
        .map(|g| KrausOperator::new(g.matmul(&inv_sqrt)).unwrap())
        .collect()
}

pub fn random_detailed_measurement(r: &mut StdRng, d: usize) -> Measurement {
    let n = r.random_range(2..=d + 2);
    Measurement::detailed(random_complete_ops(r, d, n)).unwrap()
}

/// Complete measurement whose outcomes group between one and three Kraus operators each.
pub fn random_coarse_measurement(r: &mut StdRng, d: usize) -> Measurement {
    let outcomes = r.random_range(2..=3);
    let sizes: Vec<usize> = (0..outcomes).map(|_| r.random_range(1..=3)).collect();
    let mut ops = random_complete_ops(r, d, sizes.iter().sum()).into_iter();
    let list = sizes
        .iter()
        .enumerate()
        .map(|(mu, &k)| Outcome::new(mu.to_string(), ops.by_ref().take(k).collect()))
        .collect();
    Measurement::new(list).unwrap()
}

/// Rank-one projectors onto `|n⟩` and its orthogonal complement for a random qubit direction.
pub fn random_qubit_projective(r: &mut StdRng) -> Measurement {
    let u = random_unit_vector(r, 2);
    let v = vec![-u[1].conj(), u[0].conj()];
    Measurement::detailed(vec![
        KrausOperator::ket_bra(&u, &u).unwrap(),
        KrausOperator::ket_bra(&v, &v).unwrap(),
    ])
    .unwrap()
}

/// Random `n × n` unitary from the QR-like orthonormalization of a Gaussian matrix.
pub fn random_unitary(r: &mut StdRng, n: usize) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<Complex64> = (0..n).map(|_| complex_gaussian(r)).collect();
        for u in &cols {
            let p: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= p * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

pub fn to_arr(m: &CMatrix) -> Arr {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn frobenius_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.sub(b).frobenius_norm()
}

/// `Σ_ij A_ij α_ij`.
pub fn oracle_contract(a: &Arr, alpha: &Arr) -> Complex64 {
    let mut s = c(0.0, 0.0);
    for i in 0..a.len() {
        for j in 0..a.len() {
            s += a[i][j] * alpha[i][j];
        }
    }
    s
}

/// Ensemble rule: weights `Σ_r p_r Σ_χ |A_χ • Ψ_r|²` normalized over outcomes.
pub fn oracle_prob_ensemble(e: &Ensemble, m: &Measurement) -> Vec<f64> {
    let w: Vec<f64> = m
        .outcomes()
        .iter()
        .map(|o| {
            let mut s = 0.0;
            for (p, psi) in e.members() {
                let alpha = to_arr(psi.coeffs());
                for a in &o.kraus {
                    s += p * oracle_contract(&to_arr(a.entries()), &alpha).norm_sqr();
                }
            }
            s
        })
        .collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|x| x / t).collect()
}

/// `Σ_χ Σ_{ij,kl} A_ij η_(ij)(kl) A*_kl` normalized over outcomes.
pub fn oracle_prob_density(eta: &DensityVector, m: &Measurement) -> Vec<f64> {
    let d = eta.dim().get();
    let h = to_arr(eta.matrix());
    let w: Vec<f64> = m
        .outcomes()
        .iter()
        .map(|o| {
            let mut s = c(0.0, 0.0);
            for a in &o.kraus {
                let a = to_arr(a.entries());
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            for l in 0..d {
                                s += a[i][j] * h[i * d + j][k * d + l] * a[k][l].conj();
                            }
                        }
                    }
                }
            }
            s.re
        })
        .collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|x| x / t).collect()
}

/// `Σ_χ A_χ† A_χ`.
pub fn oracle_completeness(m: &Measurement) -> CMatrix {
    let d = m.dim().get();
    let mut s = CMatrix::zeros(d, d);
    for o in m.outcomes() {
        for a in &o.kraus {
            let a = to_arr(a.entries());
            for j in 0..d {
                for l in 0..d {
                    let mut acc = c(0.0, 0.0);
                    for row in &a {
                        acc += row[j].conj() * row[l];
                    }
                    s[(j, l)] += acc;
                }
            }
        }
    }
    s
}

/// The naive rule: average of the members' own conditional distributions, weighted by `p_r`.
pub fn naive_weighted_average(e: &Ensemble, m: &Measurement) -> Vec<f64> {
    let mut out = vec![0.0; m.len()];
    for (p, psi) in e.members() {
        let single = Ensemble::single(psi.clone());
        for (x, q) in out.iter_mut().zip(oracle_prob_ensemble(&single, m)) {
            *x += p * q;
        }
    }
    out
}

pub fn bell_basis() -> Vec<Vec<Complex64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)],
        vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)],
        vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)],
    ]
}

pub fn outer(u: &[Complex64]) -> CMatrix {
    CMatrix::outer(u, u)
}

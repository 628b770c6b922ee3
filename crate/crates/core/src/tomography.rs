//! Tomography of an unknown density vector with the `4d⁴` Kraus operators
//! `(O_ij ± O_kl)/√(8d³)` and `(O_ij ± i O_kl)/√(8d³)`, `O_ij = |i⟩⟨j|`.
//!
//! Outcome order is part of the wire format: lexicographic in `(i, j, k, l)` with the four
//! variants in the order `+, −, +i, −i`. Writing `a = i·d + j` and `b = k·d + l`, the outcome
//! index is `4·(a·d² + b) + variant`.
//!
//! Inversion is by polarization. With `s_μ = A^μ • η • A^μ†` the unnormalized weights,
//!
//! ```text
//! η_ab = (8d³ / 4) · [(s₊ − s₋) + i (s₊ᵢ − s₋ᵢ)]
//! ```
//!
//! Only ratios are observable; the absolute scale follows from `Σ_μ v(A^μ) v(A^μ)† = I / d`,
//! i.e. `Σ_μ s_μ = tr(η) / d`, so `s_μ = P_μ / d` for a trace-1 `η`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, solve_real, CMatrix};
use crate::measurements::Measurement;
use crate::probability::prob_density;
use crate::vectors::{Dim, DensityVector, KrausOperator};

/// Sign/phase attached to `O_kl` in a tomography operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Plus, Variant::Minus, Variant::PlusI, Variant::MinusI];

    pub fn phase(self) -> Complex64 {
        match self {
            Variant::Plus => Complex64::new(1.0, 0.0),
            Variant::Minus => Complex64::new(-1.0, 0.0),
            Variant::PlusI => Complex64::new(0.0, 1.0),
            Variant::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Variant::Plus => "+",
            Variant::Minus => "-",
            Variant::PlusI => "+i",
            Variant::MinusI => "-i",
        }
    }
}

/// Which operator sits at a given outcome position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TomographyIndex {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub variant: Variant,
}

/// The tomography measurement together with its outcome index map.
#[derive(Clone, Debug)]
pub struct TomographySet {
    dim: Dim,
    measurement: Measurement,
    index: Vec<TomographyIndex>,
}

impl TomographySet {
    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn measurement(&self) -> &Measurement {
        &self.measurement
    }

    pub fn index(&self) -> &[TomographyIndex] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

/// Number of outcomes of the tomography set, `4d⁴`.
pub fn outcome_count(dim: Dim) -> usize {
    4 * dim.squared() * dim.squared()
}

/// Builds the `4d⁴`-outcome tomography measurement.
pub fn build_tomography_set(dim: Dim) -> TomographySet {
    let d = dim.get();
    let norm = 1.0 / libm::sqrt(8.0 * (d * d * d) as f64);
    let mut ops = Vec::with_capacity(outcome_count(dim));
    let mut index = Vec::with_capacity(outcome_count(dim));
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    for variant in Variant::ALL {
                        let mut m = CMatrix::zeros(d, d);
                        m[(i, j)] += norm;
                        m[(k, l)] += variant.phase() * norm;
                        ops.push(KrausOperator::new(m).expect("square"));
                        index.push(TomographyIndex {
                            first: (i, j),
                            second: (k, l),
                            variant,
                        });
                    }
                }
            }
        }
    }
    TomographySet {
        dim,
        measurement: Measurement::detailed(ops).expect("nonempty, equal dimensions"),
        index,
    }
}

/// Outcome probabilities of the tomography set on `eta`, in wire order.
pub fn predict_probabilities(eta: &DensityVector, ts: &TomographySet) -> Result<Vec<f64>> {
    prob_density(eta, ts.measurement())
}

/// Maximum negative probability tolerated in input data.
pub const NEGATIVE_TOL: f64 = 1e-9;
/// Maximum deviation of `Σ P` from one.
pub const SUM_TOL: f64 = 1e-9;
/// Eigenvalues below `-CLIP_TOL` mean the data did not come from a density vector.
pub const CLIP_TOL: f64 = 1e-6;

fn validate_probabilities(probs: &[f64], dim: Dim) -> Result<()> {
    if probs.len() != outcome_count(dim) {
        return Err(Error::MalformedData("probability list length is not 4d^4"));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < -NEGATIVE_TOL) {
        return Err(Error::MalformedData("negative or non-finite probability"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::MalformedData("probabilities do not sum to 1"));
    }
    Ok(())
}

/// Symmetrizes, clips negative eigenvalues and renormalizes the trace.
fn repair(raw: &CMatrix, strict: bool) -> Result<DensityVector> {
    let eig = hermitian_eigen(&raw.hermitian_part());
    if strict && eig.min() < -CLIP_TOL {
        return Err(Error::MalformedData("reconstruction is not positive"));
    }
    let clipped = eig.compose(|x| x.max(0.0));
    let tr = clipped.trace().re;
    if !(tr > 0.0) {
        return Err(Error::MalformedData("reconstruction has zero trace"));
    }
    DensityVector::from_unnormalized(clipped)
}

/// Exact reconstruction of `η` from noiseless outcome probabilities by polarization.
pub fn reconstruct(probs: &[f64], dim: Dim) -> Result<DensityVector> {
    validate_probabilities(probs, dim)?;
    let d = dim.get();
    let n = dim.squared();
    let weight = |p: f64| p / d as f64;
    let pref = 8.0 * (d * d * d) as f64 / 4.0;
    let raw = CMatrix::from_fn(n, n, |a, b| {
        let base = 4 * (a * n + b);
        let re = weight(probs[base]) - weight(probs[base + 1]);
        let im = weight(probs[base + 2]) - weight(probs[base + 3]);
        Complex64::new(re, im) * pref
    });
    repair(&raw, true)
}

/// Least-squares reconstruction for noisy frequencies (e.g. finite-shot simulation).
///
/// Fits the Hermitian `η` minimizing `Σ_μ (f_μ − d · A^μ • η • A^μ†)²` over all `4d⁴`
/// outcomes, then clips negative eigenvalues and renormalizes. This is not maximum
/// likelihood; it is a linear fit followed by the nearest positive repair.
pub fn reconstruct_noisy(freqs: &[f64], dim: Dim) -> Result<DensityVector> {
    validate_probabilities(freqs, dim)?;
    let d = dim.get();
    let n = dim.squared();
    let params = n * n;
    // Parameter layout: x[a·n + a] = η_aa; for a < b, x[a·n + b] = Re η_ab, x[b·n + a] = Im η_ab.
    let mut gram = alloc::vec![0.0; params * params];
    let mut rhs = alloc::vec![0.0; params];
    let scale = d as f64 / (8.0 * (d * d * d) as f64);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(4);
    for a in 0..n {
        for b in 0..n {
            for (v, variant) in Variant::ALL.iter().enumerate() {
                let f = freqs[4 * (a * n + b) + v];
                row.clear();
                if a == b {
                    let w = (Complex64::new(1.0, 0.0) + variant.phase()).norm_sqr();
                    row.push((a * n + a, w * scale));
                } else {
                    // v = e_a + s e_b: |v_a|² η_aa + |v_b|² η_bb + 2 Re(v_a conj(v_b) η_ab)
                    let w = variant.phase().conj();
                    let (lo, hi, w) = if a < b { (a, b, w) } else { (b, a, w.conj()) };
                    row.push((a * n + a, scale));
                    row.push((b * n + b, scale));
                    row.push((lo * n + hi, 2.0 * w.re * scale));
                    row.push((hi * n + lo, -2.0 * w.im * scale));
                }
                for &(p, cp) in &row {
                    rhs[p] += cp * f;
                    for &(q, cq) in &row {
                        gram[p * params + q] += cp * cq;
                    }
                }
            }
        }
    }
    let x = solve_real(params, gram, rhs).ok_or(Error::MalformedData("singular tomography system"))?;
    let raw = CMatrix::from_fn(n, n, |a, b| match a.cmp(&b) {
        core::cmp::Ordering::Equal => Complex64::new(x[a * n + a], 0.0),
        core::cmp::Ordering::Less => Complex64::new(x[a * n + b], x[b * n + a]),
        core::cmp::Ordering::Greater => Complex64::new(x[b * n + a], -x[a * n + b]),
    });
    repair(&raw, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{density_from_ensemble, Ensemble};
    use crate::vectors::TwoTimeState;

    #[test]
    fn counts_and_completeness() {
        for d in 1..=3 {
            let ts = build_tomography_set(Dim::new(d).unwrap());
            assert_eq!(ts.len(), 4 * d.pow(4));
            assert!(ts.measurement().completeness_defect() < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn ordering_is_lexicographic() {
        let ts = build_tomography_set(Dim::new(2).unwrap());
        assert_eq!(
            ts.index()[0],
            TomographyIndex {
                first: (0, 0),
                second: (0, 0),
                variant: Variant::Plus
            }
        );
        assert_eq!(ts.index()[3].variant, Variant::MinusI);
        assert_eq!(ts.index()[4].second, (0, 1));
        assert_eq!(ts.index()[63].first, (1, 1));
        assert_eq!(ts.index()[63].second, (1, 1));
    }

    #[test]
    fn weight_identity_holds() {
        // Σ_μ v(A)v(A)† = I/d  ⇒  Σ_μ A•η•A† = tr(η)/d.
        for d in [2, 3] {
            let dim = Dim::new(d).unwrap();
            let ts = build_tomography_set(dim);
            let n = dim.squared();
            let mut sum = CMatrix::zeros(n, n);
            for o in ts.measurement().outcomes() {
                let v = o.kraus[0].vectorized();
                sum.add_assign(&CMatrix::outer(&v, &v));
            }
            assert!(sum.max_abs_diff(&CMatrix::identity(n).scale_real(1.0 / d as f64)) < 1e-14);
        }
    }

    #[test]
    fn pure_basis_round_trip() {
        let dim = Dim::new(2).unwrap();
        let ts = build_tomography_set(dim);
        let eta = DensityVector::pure(&TwoTimeState::basis(dim, 0, 0));
        let p = predict_probabilities(&eta, &ts).unwrap();
        let rec = reconstruct(&p, dim).unwrap();
        assert!(rec.matrix().max_abs_diff(eta.matrix()) < 1e-12);
        let top = hermitian_eigen(rec.matrix()).max();
        assert!((top - 1.0).abs() < 1e-9);
    }

    #[test]
    fn least_squares_matches_on_exact_data() {
        let dim = Dim::new(2).unwrap();
        let ts = build_tomography_set(dim);
        let eta = density_from_ensemble(
            &Ensemble::new(alloc::vec![
                (0.25, TwoTimeState::basis(dim, 0, 1)),
                (0.75, TwoTimeState::new(CMatrix::from_fn(2, 2, |i, j| Complex64::new(1.0 + i as f64, j as f64))).unwrap()),
            ])
            .unwrap(),
        );
        let p = predict_probabilities(&eta, &ts).unwrap();
        let rec = reconstruct_noisy(&p, dim).unwrap();
        assert!(rec.matrix().max_abs_diff(eta.matrix()) < 1e-12);
    }

    #[test]
    fn malformed_inputs() {
        let dim = Dim::new(2).unwrap();
        assert!(matches!(reconstruct(&[1.0], dim), Err(Error::MalformedData(_))));
        let mut p = alloc::vec![1.0 / 64.0; 64];
        p[0] = -0.1;
        p[1] += 0.1;
        assert!(matches!(reconstruct(&p, dim), Err(Error::MalformedData(_))));
        let p = alloc::vec![1.0 / 32.0; 64];
        assert!(matches!(reconstruct(&p, dim), Err(Error::MalformedData(_))));
        // All mass on one "−" outcome is inconsistent with any positive density vector.
        let mut p = alloc::vec![0.0; 64];
        p[5] = 1.0;
        assert!(matches!(reconstruct(&p, dim), Err(Error::MalformedData(_))));
    }
}

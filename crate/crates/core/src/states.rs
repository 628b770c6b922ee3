//! Pure 2-time states, superpositions, ensembles and their density vectors.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, vector_norm, CMatrix};
use crate::vectors::{Dim, DensityVector, TwoTimeState, EQ_TOL, LOAD_TOL, PSD_TOL};

/// `⟨φ| ⊗ |ψ⟩`, i.e. `α_ij = conj(φ_i) ψ_j`, normalized.
///
/// Contracting the result with `A` gives `⟨φ|A|ψ⟩ / (‖φ‖ ‖ψ‖)`.
pub fn pure_product(post_bra: &[Complex64], pre_ket: &[Complex64]) -> Result<TwoTimeState> {
    if post_bra.len() != pre_ket.len() {
        return Err(Error::DimensionMismatch {
            expected: post_bra.len(),
            found: pre_ket.len(),
        });
    }
    Dim::new(post_bra.len())?;
    if !(vector_norm(post_bra) > 0.0) {
        return Err(Error::DegenerateInput("post-selected bra"));
    }
    if !(vector_norm(pre_ket) > 0.0) {
        return Err(Error::DegenerateInput("prepared ket"));
    }
    let d = post_bra.len();
    TwoTimeState::new(CMatrix::from_fn(d, d, |i, j| post_bra[i].conj() * pre_ket[j]))
}

/// `Σ_k c_k Ψ_k`, renormalized to unit Frobenius norm.
pub fn superpose(terms: &[(Complex64, TwoTimeState)]) -> Result<TwoTimeState> {
    let (_, first) = terms.first().ok_or(Error::Empty("superposition"))?;
    let dim = first.dim();
    let d = dim.get();
    let mut acc = CMatrix::zeros(d, d);
    let mut scale: f64 = 0.0;
    for (coef, psi) in terms {
        dim.check(psi.dim())?;
        acc.add_assign(&psi.coeffs().scale(*coef));
        scale = scale.max(coef.norm());
    }
    // Cancellation is judged relative to the largest input coefficient.
    if acc.frobenius_norm() <= EQ_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateSuperposition);
    }
    TwoTimeState::new(acc)
}

/// A weighted list of pure 2-time states, `{p_r, Ψ_r}`, with `Σ p_r = 1`.
///
/// The weights are the relative frequencies with which each preparation/post-selection
/// procedure is *attempted*, not the proportions that survive post-selection.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    dim: Dim,
    members: Vec<(f64, TwoTimeState)>,
}

impl Ensemble {
    /// Weights must be strictly positive and sum to one within `1e-12`.
    pub fn new(members: Vec<(f64, TwoTimeState)>) -> Result<Self> {
        Self::with_tolerance(members, EQ_TOL)
    }

    /// Rescales positive weights so they sum to one.
    pub fn normalized(mut members: Vec<(f64, TwoTimeState)>) -> Result<Self> {
        for (index, &(weight, _)) in members.iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidWeight { index, weight });
            }
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        for (w, _) in &mut members {
            *w /= total;
        }
        Self::with_tolerance(members, LOAD_TOL)
    }

    fn with_tolerance(members: Vec<(f64, TwoTimeState)>, tol: f64) -> Result<Self> {
        let dim = members.first().ok_or(Error::Empty("ensemble"))?.1.dim();
        check_weights(&members)?;
        for (_, psi) in &members {
            dim.check(psi.dim())?;
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::NotNormalized {
                what: "ensemble weights",
                value: total,
            });
        }
        Ok(Self { dim, members })
    }

    pub fn single(psi: TwoTimeState) -> Self {
        Self {
            dim: psi.dim(),
            members: alloc::vec![(1.0, psi)],
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn members(&self) -> &[(f64, TwoTimeState)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn check_weights(members: &[(f64, TwoTimeState)]) -> Result<()> {
    for (index, &(weight, _)) in members.iter().enumerate() {
        if !(weight > 0.0 && weight <= 1.0 + EQ_TOL) {
            return Err(Error::InvalidWeight { index, weight });
        }
    }
    Ok(())
}

/// `η = Σ_r p_r v(Ψ_r) v(Ψ_r)†`.
pub fn density_from_ensemble(e: &Ensemble) -> DensityVector {
    let n = e.dim().squared();
    let mut mat = CMatrix::zeros(n, n);
    for (p, psi) in e.members() {
        let v = psi.vectorized();
        mat.add_assign(&CMatrix::outer(&v, &v).scale_real(*p));
    }
    DensityVector::from_parts_unchecked(e.dim(), mat.hermitian_part())
}

/// Outcome of [`positivity_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Positivity {
    pub is_positive: bool,
    pub min_eigenvalue: f64,
}

/// Smallest eigenvalue of a Hermitian array and whether it clears `-1e-10`.
///
/// The input is symmetrized first; arrays more than `1e-12` away from Hermitian are rejected.
pub fn positivity_check(mat: &CMatrix) -> Result<Positivity> {
    if !mat.is_square() {
        return Err(Error::BadShape {
            what: "positivity check input",
            expected: mat.rows(),
            rows: mat.rows(),
            cols: mat.cols(),
        });
    }
    let defect = mat.hermitian_defect();
    if defect > EQ_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let min_eigenvalue = hermitian_eigen(&mat.hermitian_part()).min();
    Ok(Positivity {
        is_positive: min_eigenvalue >= -PSD_TOL,
        min_eigenvalue,
    })
}

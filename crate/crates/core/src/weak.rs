//! Weak values on pure 2-time states and on ensembles.
//!
//! For a pure state `A_w = (A • Ψ) / (I • Ψ)`. For an ensemble the same formula holds with `Ψ`
//! replaced by the weak value vector `η_w = Σ_r p_r Ψ_r (I • Ψ_r)*`, a single 2-time vector.
//! Consequently every density vector has a pure state `Ψ ∝ η_w` with identical weak values.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::vectors::{contract_pure, DensityVector, Dim, KrausOperator, TwoTimeState, DENOMINATOR_TOL};

/// Which operators are accepted as observables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ObservablePolicy {
    /// Hermitian within `1e-12`.
    #[default]
    HermitianOnly,
    /// Any operator; the weak value formula is well defined regardless.
    AnyOperator,
}

fn check_observable(obs: &KrausOperator, policy: ObservablePolicy) -> Result<()> {
    if policy == ObservablePolicy::HermitianOnly && !obs.is_hermitian() {
        return Err(Error::NotHermitian {
            defect: obs.entries().hermitian_defect(),
        });
    }
    Ok(())
}

/// `(A • Ψ) / (I • Ψ)`; for `Ψ = ⟨φ|⊗|ψ⟩` this is `⟨φ|A|ψ⟩ / ⟨φ|ψ⟩`.
pub fn weak_value_pure(obs: &KrausOperator, psi: &TwoTimeState, policy: ObservablePolicy) -> Result<Complex64> {
    check_observable(obs, policy)?;
    let num = contract_pure(obs, psi)?;
    let den = psi.identity_overlap();
    if den.norm() <= DENOMINATOR_TOL {
        return Err(Error::UndefinedWeakValue {
            denominator: den.norm(),
        });
    }
    Ok(num / den)
}

/// `η_w = I† • η`, a `d × d` array shaped like a 2-time state (generally unnormalized).
#[derive(Clone, Debug, PartialEq)]
pub struct WeakValueVector {
    dim: Dim,
    coeffs: CMatrix,
}

impl WeakValueVector {
    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    /// `A • η_w`.
    pub fn contract(&self, a: &KrausOperator) -> Result<Complex64> {
        self.dim.check(a.dim())?;
        Ok(a.entries().bilinear_sum(&self.coeffs))
    }
}

/// Eigenvalues at or below this are left out of the eigen-ensemble of `η`.
const EIGEN_CUTOFF: f64 = 0.0;

/// `η_w = Σ_r p_r (I • Ψ_r)* Ψ_r` over the eigen-ensemble of `η`.
pub fn weak_value_vector(eta: &DensityVector) -> WeakValueVector {
    let d = eta.dim().get();
    let mut coeffs = CMatrix::zeros(d, d);
    for (p, psi) in eta.eigen_ensemble(EIGEN_CUTOFF) {
        let w = psi.identity_overlap().conj() * p;
        coeffs.add_assign(&psi.coeffs().scale(w));
    }
    WeakValueVector {
        dim: eta.dim(),
        coeffs,
    }
}

/// `(A • η_w) / (I • η_w)`.
pub fn weak_value_ensemble(obs: &KrausOperator, eta: &DensityVector, policy: ObservablePolicy) -> Result<Complex64> {
    check_observable(obs, policy)?;
    let w = weak_value_vector(eta);
    let num = w.contract(obs)?;
    let den = w.coeffs().trace();
    if den.norm() <= DENOMINATOR_TOL {
        return Err(Error::UndefinedWeakValue {
            denominator: den.norm(),
        });
    }
    Ok(num / den)
}

/// The pure 2-time state `Ψ ∝ η_w`, whose weak values coincide with those of `η`.
pub fn weak_equivalent_pure(eta: &DensityVector) -> Result<TwoTimeState> {
    let w = weak_value_vector(eta);
    if w.coeffs().frobenius_norm() <= DENOMINATOR_TOL {
        return Err(Error::NoEquivalentState);
    }
    TwoTimeState::new(w.coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{density_from_ensemble, pure_product, Ensemble};
    use alloc::vec;

    const S: f64 = core::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn d2() -> Dim {
        Dim::new(2).unwrap()
    }

    fn sigma_z() -> KrausOperator {
        KrausOperator::new(CMatrix::diag(&[1.0, -1.0])).unwrap()
    }

    fn sigma_x() -> KrausOperator {
        KrausOperator::new(CMatrix::from_rows(&[vec![c(0.0), c(1.0)], vec![c(1.0), c(0.0)]]).unwrap()).unwrap()
    }

    fn mixture() -> DensityVector {
        density_from_ensemble(
            &Ensemble::new(vec![
                (0.5, TwoTimeState::basis(d2(), 0, 0)),
                (0.5, TwoTimeState::basis(d2(), 1, 1)),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn identity_has_unit_weak_value() {
        let psi = pure_product(&[c(0.6), Complex64::new(0.0, 0.8)], &[c(S), c(S)]).unwrap();
        let w = weak_value_pure(&KrausOperator::identity(d2()), &psi, ObservablePolicy::HermitianOnly).unwrap();
        assert!((w - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn spin_hundred() {
        // (cos a + sin a)/(cos a − sin a) = (1 + t)/(1 − t) = 100 for t = 99/101.
        let a = libm::atan(99.0 / 101.0);
        let phi = [c(libm::cos(a)), c(-libm::sin(a))];
        let psi = pure_product(&phi, &[c(S), c(S)]).unwrap();
        let w = weak_value_pure(&sigma_z(), &psi, ObservablePolicy::HermitianOnly).unwrap();
        assert!((w - c(100.0)).norm() < 1e-9, "{w}");
    }

    #[test]
    fn sigma_x_on_basis_state() {
        let w = weak_value_pure(&sigma_x(), &TwoTimeState::basis(d2(), 0, 0), ObservablePolicy::HermitianOnly).unwrap();
        assert_eq!(w, c(0.0));
    }

    #[test]
    fn orthogonal_pre_post_is_undefined() {
        let r = weak_value_pure(&sigma_z(), &TwoTimeState::basis(d2(), 1, 0), ObservablePolicy::HermitianOnly);
        assert!(matches!(r, Err(Error::UndefinedWeakValue { .. })));
    }

    #[test]
    fn non_hermitian_needs_policy() {
        let raise = KrausOperator::ket_bra(&[c(1.0), c(0.0)], &[c(0.0), c(1.0)]).unwrap();
        let psi = TwoTimeState::new(CMatrix::from_rows(&[vec![c(1.0), c(1.0)], vec![c(0.0), c(1.0)]]).unwrap()).unwrap();
        assert!(matches!(
            weak_value_pure(&raise, &psi, ObservablePolicy::HermitianOnly),
            Err(Error::NotHermitian { .. })
        ));
        let w = weak_value_pure(&raise, &psi, ObservablePolicy::AnyOperator).unwrap();
        assert!((w - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn mixture_weak_value_vector_is_proportional_to_identity() {
        let w = weak_value_vector(&mixture());
        let expected = CMatrix::identity(2).scale_real(0.5);
        assert!(w.coeffs().max_abs_diff(&expected) < 1e-15, "{:?}", w.coeffs());
        let z = weak_value_ensemble(&sigma_z(), &mixture(), ObservablePolicy::HermitianOnly).unwrap();
        assert!(z.norm() < 1e-15);
    }

    #[test]
    fn mixture_is_weakly_equivalent_to_superposition() {
        let psi = weak_equivalent_pure(&mixture()).unwrap();
        let sup = TwoTimeState::new(CMatrix::identity(2)).unwrap();
        assert!(psi.coeffs().max_abs_diff(sup.coeffs()) < 1e-15);
    }

    #[test]
    fn traceless_members_have_no_equivalent() {
        let eta = DensityVector::pure(&TwoTimeState::basis(d2(), 1, 0));
        assert!(weak_value_vector(&eta).coeffs().max_abs() < 1e-15);
        assert_eq!(weak_equivalent_pure(&eta), Err(Error::NoEquivalentState));
        assert!(matches!(
            weak_value_ensemble(&sigma_z(), &eta, ObservablePolicy::HermitianOnly),
            Err(Error::UndefinedWeakValue { .. })
        ));
    }

    #[test]
    fn pure_density_recovers_state_up_to_phase() {
        let psi = pure_product(&[c(0.6), Complex64::new(0.0, 0.8)], &[c(S), Complex64::new(0.0, S)]).unwrap();
        let back = weak_equivalent_pure(&DensityVector::pure(&psi)).unwrap();
        let overlap: Complex64 = psi.coeffs().as_slice().iter().zip(back.coeffs().as_slice()).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-14);
    }
}

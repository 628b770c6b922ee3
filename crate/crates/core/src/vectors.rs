//! 2-time vectors, density vectors and the contraction `•` between them.
//!
//! # Conventions
//!
//! A pure 2-time state `Σ α_ij ⟨i| ⊗ |j⟩` is stored as the `d × d` array `α`, with the row
//! index `i` belonging to the backward-evolving bra at `t₂` and the column index `j` to the
//! forward-evolving ket at `t₁`. A Kraus operator `A` is stored as `A_ij = ⟨i|A|j⟩`, so the
//! contraction is the plain bilinear sum `A • Ψ = Σ α_ij A_ij`.
//!
//! Every `d² × d²` object (density vectors, Kraus density vectors, bipartite operators) is
//! written in terms of the row-major vectorization `v(α)_{i·d + j} = α_ij`. A density vector
//! is `η = Σ_r p_r v(Ψ_r) v(Ψ_r)†` and a Kraus density vector is `K = Σ_χ v(A_χ) v(A_χ)†`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};

/// Tolerance for exact identities (Hermiticity, normalization of stored values).
pub const EQ_TOL: f64 = 1e-12;
/// Slack allowed on the smallest eigenvalue of a positive array.
pub const PSD_TOL: f64 = 1e-10;
/// Maximum `‖Σ A†A − I‖` accepted as complete.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Total success weight below which post-selection counts as impossible.
pub const DENOMINATOR_TOL: f64 = 1e-14;
/// Tolerance on stored norms and traces when values are loaded rather than built.
pub const LOAD_TOL: f64 = 1e-10;

/// System Hilbert-space dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dim(usize);

impl Dim {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            Err(Error::ZeroDimension)
        } else {
            Ok(Self(d))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// `d²`, the length of a vectorized 2-time vector.
    pub fn squared(self) -> usize {
        self.0 * self.0
    }

    pub(crate) fn check(self, other: Dim) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.0,
                found: other.0,
            })
        }
    }

    /// Recovers `d` from a `d² × d²` array.
    pub(crate) fn of_doubled(what: &'static str, m: &CMatrix) -> Result<Self> {
        let n = m.rows();
        let d = isqrt(n);
        if !m.is_square() || d * d != n || d == 0 {
            return Err(Error::BadShape {
                what,
                expected: d.max(1) * d.max(1),
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        Ok(Self(d))
    }

    pub(crate) fn of_square(what: &'static str, m: &CMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::BadShape {
                what,
                expected: m.rows().max(1),
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        Ok(Self(m.rows()))
    }
}

fn isqrt(n: usize) -> usize {
    let mut r = libm::sqrt(n as f64) as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Row-major vectorization of a `d × d` array.
pub fn vectorize(m: &CMatrix) -> Vec<Complex64> {
    m.as_slice().to_vec()
}

/// Inverse of [`vectorize`].
pub fn unvectorize(dim: Dim, v: &[Complex64]) -> Result<CMatrix> {
    let d = dim.get();
    CMatrix::from_row_major(d, d, v.to_vec()).ok_or(Error::DimensionMismatch {
        expected: dim.squared(),
        found: v.len(),
    })
}

/// A pure 2-time state `Σ α_ij ⟨i|_{t₂} ⊗ |j⟩_{t₁}`, stored with unit Frobenius norm.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoTimeState {
    dim: Dim,
    coeffs: CMatrix,
}

impl TwoTimeState {
    /// Normalizes `coeffs` to unit Frobenius norm.
    pub fn new(coeffs: CMatrix) -> Result<Self> {
        let dim = Dim::of_square("2-time state coefficients", &coeffs)?;
        let norm = coeffs.frobenius_norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateInput("2-time state coefficient array"));
        }
        Ok(Self {
            dim,
            coeffs: coeffs.scale_real(1.0 / norm),
        })
    }

    /// Accepts coefficients that are already unit-normalized (within [`LOAD_TOL`]) and stores
    /// them untouched.
    pub fn from_normalized(coeffs: CMatrix) -> Result<Self> {
        let dim = Dim::of_square("2-time state coefficients", &coeffs)?;
        let norm = coeffs.frobenius_norm();
        if (norm - 1.0).abs() > LOAD_TOL {
            return Err(Error::NotNormalized {
                what: "2-time state Frobenius norm",
                value: norm,
            });
        }
        Ok(Self { dim, coeffs })
    }

    /// The product state `⟨i| ⊗ |j⟩`.
    pub fn basis(dim: Dim, i: usize, j: usize) -> Self {
        let mut coeffs = CMatrix::zeros(dim.get(), dim.get());
        coeffs[(i, j)] = Complex64::new(1.0, 0.0);
        Self { dim, coeffs }
    }

    /// Builds a state from its vectorized coefficients (normalizing).
    pub fn from_vectorized(dim: Dim, v: &[Complex64]) -> Result<Self> {
        Self::new(unvectorize(dim, v)?)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    pub fn vectorized(&self) -> Vec<Complex64> {
        vectorize(&self.coeffs)
    }

    /// `I • Ψ = tr α`, the overlap of pre- and post-selection.
    pub fn identity_overlap(&self) -> Complex64 {
        self.coeffs.trace()
    }
}

/// A Kraus operator (or any operator, e.g. an observable) viewed as a 2-time vector.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausOperator {
    dim: Dim,
    entries: CMatrix,
}

impl KrausOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let dim = Dim::of_square("Kraus operator", &entries)?;
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: Dim) -> Self {
        Self {
            dim,
            entries: CMatrix::identity(dim.get()),
        }
    }

    /// `|u⟩⟨v|`.
    pub fn ket_bra(u: &[Complex64], v: &[Complex64]) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                found: v.len(),
            });
        }
        Self::new(CMatrix::outer(u, v))
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn vectorized(&self) -> Vec<Complex64> {
        vectorize(&self.entries)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.scale(s),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.adjoint(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.entries.hermitian_defect() <= EQ_TOL
    }
}

/// The identity 2-time vector `I = Σ_i |i⟩_{t₂} ⊗ ⟨i|_{t₁}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityTwoTimeVector {
    pub dim: Dim,
}

impl IdentityTwoTimeVector {
    pub fn new(dim: Dim) -> Self {
        Self { dim }
    }

    pub fn to_kraus(self) -> KrausOperator {
        KrausOperator::identity(self.dim)
    }
}

/// Checks a `d² × d²` array for Hermiticity and positivity and returns its Hermitian part.
fn validated_positive(what: &'static str, mat: &CMatrix) -> Result<(Dim, CMatrix)> {
    let dim = Dim::of_doubled(what, mat)?;
    let defect = mat.hermitian_defect();
    if defect > EQ_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let herm = mat.hermitian_part();
    let min = hermitian_eigen(&herm).min();
    if min < -PSD_TOL {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    Ok((dim, herm))
}

/// The density vector `η = Σ_r p_r Ψ_r ⊗ Ψ_r†` of a 2-time ensemble, stored with trace 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityVector {
    dim: Dim,
    mat: CMatrix,
}

impl DensityVector {
    /// Validates a stored array: Hermitian, positive, trace 1 within [`LOAD_TOL`].
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let (dim, herm) = validated_positive("density vector", &mat)?;
        let tr = herm.trace().re;
        if (tr - 1.0).abs() > LOAD_TOL {
            return Err(Error::NotNormalized {
                what: "density vector trace",
                value: tr,
            });
        }
        Ok(Self { dim, mat: herm })
    }

    /// Validates Hermiticity and positivity, then rescales to trace 1.
    pub fn from_unnormalized(mat: CMatrix) -> Result<Self> {
        let (dim, herm) = validated_positive("density vector", &mat)?;
        let tr = herm.trace().re;
        if !(tr > 0.0) {
            return Err(Error::DegenerateInput("density vector"));
        }
        Ok(Self {
            dim,
            mat: herm.scale_real(1.0 / tr),
        })
    }

    /// `v(Ψ) v(Ψ)†`.
    pub fn pure(psi: &TwoTimeState) -> Self {
        let v = psi.vectorized();
        Self {
            dim: psi.dim(),
            mat: CMatrix::outer(&v, &v),
        }
    }

    /// The maximally mixed density vector `I / d²`.
    pub fn maximally_mixed(dim: Dim) -> Self {
        let n = dim.squared();
        Self {
            dim,
            mat: CMatrix::identity(n).scale_real(1.0 / n as f64),
        }
    }

    pub(crate) fn from_parts_unchecked(dim: Dim, mat: CMatrix) -> Self {
        Self { dim, mat }
    }

    /// Multiplies the stored array by `lambda` without renormalizing. Only meant for
    /// exercising the scale invariance of the probability rules.
    #[doc(hidden)]
    pub fn scaled_unchecked(&self, lambda: f64) -> Self {
        Self {
            dim: self.dim,
            mat: self.mat.scale_real(lambda),
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Eigen-ensemble of `η`: `(weight, state)` pairs for every eigenvalue above `cutoff`.
    pub fn eigen_ensemble(&self, cutoff: f64) -> Vec<(f64, TwoTimeState)> {
        let eig = hermitian_eigen(&self.mat);
        let mut members = Vec::new();
        for (k, &w) in eig.values.iter().enumerate().rev() {
            if w <= cutoff {
                continue;
            }
            if let Ok(state) = TwoTimeState::from_vectorized(self.dim, &eig.vectors.column(k)) {
                members.push((w, state));
            }
        }
        members
    }
}

/// The Kraus density vector `K = Σ_χ A_χ ⊗ A_χ†` of one (possibly coarse-grained) outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausDensityVector {
    dim: Dim,
    mat: CMatrix,
}

/// Eigenvalue cutoff for turning a positive array back into Kraus operators.
pub const KRAUS_CUTOFF: f64 = 1e-12;

impl KrausDensityVector {
    /// `Σ_χ v(A_χ) v(A_χ)†`.
    pub fn from_kraus(ops: &[KrausOperator]) -> Result<Self> {
        let first = ops.first().ok_or(Error::Empty("Kraus operator set"))?;
        let dim = first.dim();
        let n = dim.squared();
        let mut mat = CMatrix::zeros(n, n);
        for op in ops {
            dim.check(op.dim())?;
            let v = op.vectorized();
            mat.add_assign(&CMatrix::outer(&v, &v));
        }
        Ok(Self { dim, mat })
    }

    /// Validates a stored array (Hermitian and positive; no normalization).
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let (dim, mat) = validated_positive("Kraus density vector", &mat)?;
        Ok(Self { dim, mat })
    }

    pub fn zero(dim: Dim) -> Self {
        let n = dim.squared();
        Self {
            dim,
            mat: CMatrix::zeros(n, n),
        }
    }

    pub(crate) fn from_parts_unchecked(dim: Dim, mat: CMatrix) -> Self {
        Self { dim, mat }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Canonical Kraus realization: `A_k = √λ_k · unvec(e_k)` over eigenpairs with
    /// `λ_k > KRAUS_CUTOFF`.
    pub fn kraus_decomposition(&self) -> Vec<KrausOperator> {
        let eig = hermitian_eigen(&self.mat);
        let mut ops = Vec::new();
        for (k, &lambda) in eig.values.iter().enumerate().rev() {
            if lambda <= KRAUS_CUTOFF {
                continue;
            }
            let v: Vec<Complex64> = eig.vectors.column(k).iter().map(|z| z * libm::sqrt(lambda)).collect();
            if let Ok(entries) = unvectorize(self.dim, &v) {
                ops.push(KrausOperator {
                    dim: self.dim,
                    entries,
                });
            }
        }
        ops
    }

    /// Contraction with `I₂` over the `t₂` index pair: `Σ_i K_{(ij),(il)}`, a `d × d` array
    /// equal to `conj(Σ_χ A_χ† A_χ)`.
    pub fn contract_output(&self) -> CMatrix {
        let d = self.dim.get();
        CMatrix::from_fn(d, d, |j, l| (0..d).map(|i| self.mat[(i * d + j, i * d + l)]).sum())
    }
}

/// `A • Ψ = Σ_ij α_ij A_ij` (bilinear, no conjugation).
pub fn contract_pure(a: &KrausOperator, psi: &TwoTimeState) -> Result<Complex64> {
    a.dim().check(psi.dim())?;
    Ok(a.entries().bilinear_sum(psi.coeffs()))
}

fn clamp_nonnegative(x: f64) -> f64 {
    if (-EQ_TOL..0.0).contains(&x) {
        0.0
    } else {
        x
    }
}

/// `A • η • A† = v(A)ᵀ η v(A)*`.
///
/// Values in `[-1e-12, 0)` are rounded to zero.
pub fn sandwich(a: &KrausOperator, eta: &DensityVector) -> Result<f64> {
    a.dim().check(eta.dim())?;
    let v = a.vectorized();
    let conj: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
    let w = eta.matrix().mul_vec(&conj);
    let value: Complex64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
    Ok(clamp_nonnegative(value.re))
}

/// `K • η = Σ_ab K_ab η_ab`, which equals `Σ_χ sandwich(A_χ, η)` for `K` built from `{A_χ}`.
pub fn pair(k: &KrausDensityVector, eta: &DensityVector) -> Result<f64> {
    k.dim().check(eta.dim())?;
    Ok(clamp_nonnegative(k.matrix().bilinear_sum(eta.matrix()).re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const S: f64 = core::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn d2() -> Dim {
        Dim::new(2).unwrap()
    }

    fn minus_plus() -> KrausOperator {
        KrausOperator::ket_bra(&[c(S), c(-S)], &[c(S), c(S)]).unwrap()
    }

    fn bell_like() -> TwoTimeState {
        TwoTimeState::new(CMatrix::identity(2)).unwrap()
    }

    #[test]
    fn dim_rejects_zero() {
        assert_eq!(Dim::new(0), Err(Error::ZeroDimension));
    }

    #[test]
    fn contract_identity_on_basis_state() {
        let psi = TwoTimeState::basis(d2(), 0, 0);
        assert_eq!(contract_pure(&KrausOperator::identity(d2()), &psi).unwrap(), c(1.0));
    }

    #[test]
    fn contract_minus_plus() {
        assert!(contract_pure(&minus_plus(), &bell_like()).unwrap().norm() < 1e-16);
        let v = contract_pure(&minus_plus(), &TwoTimeState::basis(d2(), 0, 0)).unwrap();
        assert!((v - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn contract_rejects_dimension_mismatch() {
        let psi = TwoTimeState::basis(Dim::new(3).unwrap(), 0, 0);
        assert!(matches!(
            contract_pure(&KrausOperator::identity(d2()), &psi),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sandwich_examples() {
        let id = KrausOperator::identity(d2());
        let eta00 = DensityVector::pure(&TwoTimeState::basis(d2(), 0, 0));
        assert!((sandwich(&id, &eta00).unwrap() - 1.0).abs() < 1e-15);

        let eta11 = DensityVector::pure(&TwoTimeState::basis(d2(), 1, 1));
        let mix = DensityVector::from_unnormalized(eta00.matrix().add(eta11.matrix())).unwrap();
        assert!((sandwich(&minus_plus(), &mix).unwrap() - 0.25).abs() < 1e-15);

        let sup = DensityVector::pure(&bell_like());
        assert_eq!(sandwich(&minus_plus(), &sup).unwrap(), 0.0);
    }

    #[test]
    fn pair_examples() {
        let eta = DensityVector::pure(&TwoTimeState::basis(d2(), 0, 0));
        let k = KrausDensityVector::from_kraus(&[KrausOperator::identity(d2())]).unwrap();
        assert!((pair(&k, &eta).unwrap() - 1.0).abs() < 1e-15);

        let a1 = KrausOperator::ket_bra(&[c(1.0), c(0.0)], &[c(1.0), c(0.0)]).unwrap();
        let k1 = KrausDensityVector::from_kraus(&[a1]).unwrap();
        assert!((pair(&k1, &eta).unwrap() - 1.0).abs() < 1e-15);

        let a2 = KrausOperator::ket_bra(&[c(S), c(S)], &[c(0.0), c(1.0)]).unwrap();
        let k2 = KrausDensityVector::from_kraus(&[a2]).unwrap();
        let eta01 = DensityVector::pure(&TwoTimeState::basis(d2(), 0, 1));
        assert!((pair(&k2, &eta01).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn state_normalization_and_degeneracy() {
        let psi = TwoTimeState::new(CMatrix::identity(2).scale_real(5.0)).unwrap();
        assert!((psi.coeffs().frobenius_norm() - 1.0).abs() < 1e-15);
        assert_eq!(
            TwoTimeState::new(CMatrix::zeros(2, 2)),
            Err(Error::DegenerateInput("2-time state coefficient array"))
        );
        assert!(matches!(
            TwoTimeState::from_normalized(CMatrix::identity(2)),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn density_vector_validation() {
        let bad = CMatrix::diag(&[1.1, -0.1, 0.0, 0.0]);
        assert!(matches!(DensityVector::from_matrix(bad), Err(Error::NotPositive { .. })));
        let mut nh = CMatrix::diag(&[1.0, 0.0, 0.0, 0.0]);
        nh[(0, 1)] = c(0.5);
        assert!(matches!(DensityVector::from_matrix(nh), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            DensityVector::from_matrix(CMatrix::identity(4)),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            DensityVector::from_matrix(CMatrix::identity(3)),
            Err(Error::BadShape { .. })
        ));
    }

    #[test]
    fn kraus_decomposition_reproduces_array() {
        let a = KrausOperator::ket_bra(&[c(1.0), c(0.0)], &[c(1.0), c(0.0)]).unwrap();
        let b = minus_plus();
        let k = KrausDensityVector::from_kraus(&[a, b]).unwrap();
        let ops = k.kraus_decomposition();
        assert_eq!(ops.len(), 2);
        let back = KrausDensityVector::from_kraus(&ops).unwrap();
        assert!(back.matrix().max_abs_diff(k.matrix()) < 1e-14);
    }

    #[test]
    fn contract_output_is_conjugated_completeness_sum() {
        let a = KrausOperator::new(
            CMatrix::from_rows(&[
                vec![Complex64::new(0.3, 0.1), Complex64::new(0.0, 0.4)],
                vec![Complex64::new(0.2, -0.5), Complex64::new(0.1, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        let k = KrausDensityVector::from_kraus(core::slice::from_ref(&a)).unwrap();
        let expected = a.entries().adjoint().matmul(a.entries()).conj();
        assert!(k.contract_output().max_abs_diff(&expected) < 1e-15);
    }
}

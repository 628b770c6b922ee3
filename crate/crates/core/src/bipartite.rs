//! The basis-dependent isomorphism between 2-time objects and bipartite objects on
//! `H_A ⊗ H_B`, where `A` carries the `t₂` (row) index and `B` the `t₁` (column) index.
//!
//! * `Ψ = Σ α_ij ⟨i|⊗|j⟩  ↦  |Ψ⟩_AB = Σ α_ij |i⟩_A|j⟩_B`, the row-major vectorization.
//! * `η ↦ ρ_AB` is the identity on stored arrays.
//! * `A ↦ |a⟩_AB = Σ A*_ij |i⟩_A|j⟩_B` (note the conjugate), and `K ↦ Ẽ = Σ_χ |a_χ⟩⟨a_χ|`,
//!   which is the entrywise conjugate of `K`'s array.
//!
//! With these choices `K • η = tr(Ẽ ρ)` holds exactly. The map is tied to the canonical basis;
//! nothing here is basis covariant.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::measurements::{Measurement, Outcome};
use crate::vectors::{
    pair, unvectorize, Dim, DensityVector, KrausDensityVector, KrausOperator, TwoTimeState, COMPLETENESS_TOL,
    EQ_TOL, PSD_TOL,
};

/// A bipartite density matrix `ρ_AB`: Hermitian, positive, trace 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteDensity {
    dim: Dim,
    rho: CMatrix,
}

impl BipartiteDensity {
    pub fn from_matrix(rho: CMatrix) -> Result<Self> {
        let eta = DensityVector::from_matrix(rho)?;
        Ok(density_to_bipartite(&eta))
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }
}

/// A positive operator `Ẽ` on `H_A ⊗ H_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteOperator {
    dim: Dim,
    op: CMatrix,
}

impl BipartiteOperator {
    pub fn from_matrix(op: CMatrix) -> Result<Self> {
        let dim = Dim::of_doubled("bipartite operator", &op)?;
        let defect = op.hermitian_defect();
        if defect > EQ_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let op = op.hermitian_part();
        let min = hermitian_eigen(&op).min();
        if min < -PSD_TOL {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(Self { dim, op })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.op
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            dim: self.dim,
            op: self.op.scale_real(lambda),
        }
    }
}

/// `|Ψ⟩_AB = Σ α_ij |i⟩_A |j⟩_B`.
pub fn state_to_bipartite(psi: &TwoTimeState) -> Vec<Complex64> {
    psi.vectorized()
}

/// Inverse of [`state_to_bipartite`]; the vector must have unit norm.
pub fn bipartite_to_state(dim: Dim, v: &[Complex64]) -> Result<TwoTimeState> {
    TwoTimeState::from_normalized(unvectorize(dim, v)?)
}

/// `ρ_AB`, sharing `η`'s array.
pub fn density_to_bipartite(eta: &DensityVector) -> BipartiteDensity {
    BipartiteDensity {
        dim: eta.dim(),
        rho: eta.matrix().clone(),
    }
}

pub fn bipartite_to_density(rho: &BipartiteDensity) -> DensityVector {
    DensityVector::from_parts_unchecked(rho.dim, rho.rho.clone())
}

/// `|a⟩_AB = Σ A*_ij |i⟩_A |j⟩_B`.
pub fn kraus_to_bipartite_vector(a: &KrausOperator) -> Vec<Complex64> {
    a.vectorized().into_iter().map(|z| z.conj()).collect()
}

/// `Ẽ = Σ_χ |a_χ⟩⟨a_χ|`, obtained from `K` as its entrywise conjugate.
pub fn kdv_to_bipartite(k: &KrausDensityVector) -> BipartiteOperator {
    BipartiteOperator {
        dim: k.dim(),
        op: k.matrix().conj(),
    }
}

/// Inverse of [`kdv_to_bipartite`].
pub fn bipartite_to_kdv(e: &BipartiteOperator) -> KrausDensityVector {
    KrausDensityVector::from_parts_unchecked(e.dim, e.op.conj())
}

/// `Σ_χ |a_χ⟩⟨a_χ|` built directly from the Kraus operators.
pub fn kraus_set_to_bipartite(ops: &[KrausOperator]) -> Result<BipartiteOperator> {
    let dim = ops.first().ok_or(Error::Empty("Kraus operator set"))?.dim();
    let n = dim.squared();
    let mut op = CMatrix::zeros(n, n);
    for a in ops {
        dim.check(a.dim())?;
        let v = kraus_to_bipartite_vector(a);
        op.add_assign(&CMatrix::outer(&v, &v));
    }
    Ok(BipartiteOperator { dim, op })
}

/// Images `Ẽ^μ` of every outcome of a measurement.
pub fn measurement_images(m: &Measurement) -> Vec<BipartiteOperator> {
    m.outcomes()
        .iter()
        .map(|o| kraus_set_to_bipartite(&o.kraus).expect("outcomes are validated nonempty"))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairingCheck {
    /// `K • η`.
    pub lhs: f64,
    /// `tr(Ẽ ρ)`.
    pub rhs: f64,
    pub defect: f64,
}

/// Evaluates `K • η` and `tr(Ẽ ρ)` along separate routes.
pub fn pairing_equality_check(k: &KrausDensityVector, eta: &DensityVector) -> Result<PairingCheck> {
    let lhs = pair(k, eta)?;
    let e = kdv_to_bipartite(k);
    let rho = density_to_bipartite(eta);
    let rhs = e.matrix().matmul(rho.matrix()).trace().re;
    Ok(PairingCheck {
        lhs,
        rhs,
        defect: (lhs - rhs).abs(),
    })
}

/// Partial trace over the `A` factor: `(tr_A M)_{jl} = Σ_i M_{(ij),(il)}`.
pub fn partial_trace_a(m: &CMatrix, dim: Dim) -> CMatrix {
    let d = dim.get();
    CMatrix::from_fn(d, d, |j, l| (0..d).map(|i| m[(i * d + j, i * d + l)]).sum())
}

/// Partial trace over the `B` factor: `(tr_B M)_{ik} = Σ_j M_{(ij),(kj)}`.
pub fn partial_trace_b(m: &CMatrix, dim: Dim) -> CMatrix {
    let d = dim.get();
    CMatrix::from_fn(d, d, |i, k| (0..d).map(|j| m[(i * d + j, k * d + j)]).sum())
}

/// `Σ_μ Ẽ^μ`.
pub fn operator_sum(ops: &[BipartiteOperator]) -> Result<CMatrix> {
    let dim = ops.first().ok_or(Error::Empty("operator set"))?.dim();
    let n = dim.squared();
    let mut sum = CMatrix::zeros(n, n);
    for op in ops {
        dim.check(op.dim())?;
        sum.add_assign(op.matrix());
    }
    Ok(sum)
}

/// `‖Σ_μ tr_A(Ẽ^μ) − I‖`: the bipartite form of the 2-time normalization condition.
///
/// The trace runs over the factor carrying the Kraus output (`t₂`) index, so that
/// `tr_A(Ẽ) = Σ_χ A_χ† A_χ` and the defect vanishes exactly for complete measurements.
pub fn measurement_partial_trace_defect(ops: &[BipartiteOperator]) -> Result<f64> {
    let sum = operator_sum(ops)?;
    let dim = ops[0].dim();
    Ok(partial_trace_a(&sum, dim).max_abs_diff(&CMatrix::identity(dim.get())))
}

/// Pull-back of a normalized bipartite POVM to 2-time Kraus density vectors.
#[derive(Clone, Debug)]
pub struct PovmPullback {
    /// `K̃^μ`, the raw images of the POVM elements.
    pub kraus_density_vectors: Vec<KrausDensityVector>,
    /// The supernormalization factor, `d`.
    pub factor: f64,
    /// `‖Σ_μ K̃^μ • I₂ − d·I₁‖`.
    pub factor_defect: f64,
    /// `K̃^μ / d`.
    pub subnormalized: Vec<KrausDensityVector>,
    /// A measurement realizing the subnormalized set (canonical Kraus decomposition per outcome).
    pub measurement: Measurement,
}

/// Maps a POVM `{E^μ}` with `Σ E^μ = I_AB` to 2-time Kraus density vectors, which then satisfy
/// `Σ_μ K̃^μ • I₂ = d · I₁`, and subnormalizes them by `d` into a valid measurement.
pub fn povm_to_twotime(ops: &[BipartiteOperator]) -> Result<PovmPullback> {
    let sum = operator_sum(ops)?;
    let dim = ops[0].dim();
    let d = dim.get();
    let defect = sum.max_abs_diff(&CMatrix::identity(dim.squared()));
    if defect > COMPLETENESS_TOL {
        return Err(Error::NotNormalizedPovm { defect });
    }
    let kdvs: Vec<KrausDensityVector> = ops.iter().map(bipartite_to_kdv).collect();
    let mut contracted = CMatrix::zeros(d, d);
    for k in &kdvs {
        contracted.add_assign(&k.contract_output());
    }
    let factor = d as f64;
    let factor_defect = contracted.max_abs_diff(&CMatrix::identity(d).scale_real(factor));

    let subnormalized: Vec<KrausDensityVector> = kdvs
        .iter()
        .map(|k| KrausDensityVector::from_parts_unchecked(dim, k.matrix().scale_real(1.0 / factor)))
        .collect();
    let mut outcomes = Vec::with_capacity(ops.len());
    for (mu, k) in subnormalized.iter().enumerate() {
        let mut kraus = k.kraus_decomposition();
        if kraus.is_empty() {
            kraus.push(KrausOperator::new(CMatrix::zeros(d, d))?);
        }
        outcomes.push(Outcome::new(alloc::format!("{mu}"), kraus));
    }
    Ok(PovmPullback {
        kraus_density_vectors: kdvs,
        factor,
        factor_defect,
        subnormalized,
        measurement: Measurement::new(outcomes)?,
    })
}

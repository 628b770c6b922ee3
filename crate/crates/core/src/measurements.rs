//! Detailed and coarse-grained measurements and their Kraus density vectors.
//!
//! An outcome is always kept as its explicit set of Kraus operators `{A^μ_χ}`. The 2-time
//! statistics depend on `K^μ = Σ_χ A^μ_χ ⊗ A^μ_χ†`, which the POVM element
//! `Σ_χ A^μ_χ† A^μ_χ` does not determine.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::vectors::{Dim, KrausDensityVector, KrausOperator, COMPLETENESS_TOL, EQ_TOL, PSD_TOL};

/// One outcome `μ` with its Kraus operators `{A^μ_χ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub kraus: Vec<KrausOperator>,
}

impl Outcome {
    pub fn new(label: impl Into<String>, kraus: Vec<KrausOperator>) -> Self {
        Self {
            label: label.into(),
            kraus,
        }
    }

    pub fn kraus_density_vector(&self) -> Result<KrausDensityVector> {
        kraus_density_vector(&self.kraus)
    }
}

/// An ordered list of outcomes acting on a `d`-dimensional system.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    dim: Dim,
    outcomes: Vec<Outcome>,
    defect: f64,
}

impl Measurement {
    /// Accepts complete and incomplete sets alike; see [`Measurement::is_complete`].
    pub fn new(outcomes: Vec<Outcome>) -> Result<Self> {
        let first = outcomes.first().ok_or(Error::Empty("measurement"))?;
        let dim = first.kraus.first().ok_or(Error::Empty("measurement outcome"))?.dim();
        for outcome in &outcomes {
            if outcome.kraus.is_empty() {
                return Err(Error::Empty("measurement outcome"));
            }
            for op in &outcome.kraus {
                dim.check(op.dim())?;
            }
        }
        let defect = completeness_defect(dim, &outcomes);
        Ok(Self {
            dim,
            outcomes,
            defect,
        })
    }

    /// A detailed measurement, one Kraus operator per outcome, labelled by position.
    pub fn detailed(ops: Vec<KrausOperator>) -> Result<Self> {
        Self::new(
            ops.into_iter()
                .enumerate()
                .map(|(i, op)| Outcome::new(format!("{i}"), alloc::vec![op]))
                .collect(),
        )
    }

    /// Like [`Measurement::new`] but rejects incomplete sets.
    pub fn complete(outcomes: Vec<Outcome>) -> Result<Self> {
        let m = Self::new(outcomes)?;
        m.require_complete()?;
        Ok(m)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.defect <= COMPLETENESS_TOL
    }

    /// `‖Σ_{μ,χ} A†A − I‖` (largest entry modulus).
    pub fn completeness_defect(&self) -> f64 {
        self.defect
    }

    pub fn is_detailed(&self) -> bool {
        self.outcomes.iter().all(|o| o.kraus.len() == 1)
    }

    pub(crate) fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::IncompleteMeasurement { defect: self.defect })
        }
    }

    /// The single Kraus operator of each outcome; fails for coarse-grained measurements.
    pub fn detailed_operators(&self) -> Result<Vec<&KrausOperator>> {
        self.outcomes
            .iter()
            .enumerate()
            .map(|(outcome, o)| match o.kraus.as_slice() {
                [op] => Ok(op),
                ops => Err(Error::NotDetailed {
                    outcome,
                    count: ops.len(),
                }),
            })
            .collect()
    }

    pub fn kraus_density_vectors(&self) -> Vec<KrausDensityVector> {
        self.outcomes
            .iter()
            .map(|o| o.kraus_density_vector().expect("outcomes are validated nonempty"))
            .collect()
    }

    /// Lumps outcomes together: group `g` of the result collects every Kraus operator of the
    /// listed source outcomes. Each source outcome must appear in exactly one group.
    pub fn coarse_grain(&self, groups: &[Vec<usize>]) -> Result<Self> {
        let mut seen = alloc::vec![false; self.outcomes.len()];
        let mut outcomes = Vec::with_capacity(groups.len());
        for group in groups {
            let mut kraus = Vec::new();
            let mut label = String::new();
            for &idx in group {
                let src = self
                    .outcomes
                    .get(idx)
                    .ok_or(Error::MalformedData("coarse-graining index out of range"))?;
                if core::mem::replace(&mut seen[idx], true) {
                    return Err(Error::MalformedData("outcome listed in two coarse-graining groups"));
                }
                if !label.is_empty() {
                    label.push('+');
                }
                label.push_str(&src.label);
                kraus.extend(src.kraus.iter().cloned());
            }
            outcomes.push(Outcome::new(label, kraus));
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::MalformedData("coarse-graining drops an outcome"));
        }
        Self::new(outcomes)
    }
}

fn completeness_sum(dim: Dim, outcomes: &[Outcome]) -> CMatrix {
    let d = dim.get();
    let mut sum = CMatrix::zeros(d, d);
    for op in outcomes.iter().flat_map(|o| &o.kraus) {
        sum.add_assign(&op.entries().adjoint().matmul(op.entries()));
    }
    sum
}

fn completeness_defect(dim: Dim, outcomes: &[Outcome]) -> f64 {
    completeness_sum(dim, outcomes).max_abs_diff(&CMatrix::identity(dim.get()))
}

/// `K = Σ_χ A_χ ⊗ A_χ†` for one outcome.
pub fn kraus_density_vector(outcome: &[KrausOperator]) -> Result<KrausDensityVector> {
    KrausDensityVector::from_kraus(outcome)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Completeness {
    pub complete: bool,
    pub defect: f64,
}

/// `‖Σ_{μ,χ} A†A − I‖` and whether it is within `1e-10`.
pub fn check_completeness(m: &Measurement) -> Completeness {
    Completeness {
        complete: m.is_complete(),
        defect: m.completeness_defect(),
    }
}

/// Deviation of `Σ_μ K^μ • I₂` from the identity 2-time vector `I₁`.
///
/// Computed from the Kraus density vectors alone, so it is an independent route to
/// [`check_completeness`].
pub fn partial_normalization_defect(m: &Measurement) -> f64 {
    let d = m.dim().get();
    let mut sum = CMatrix::zeros(d, d);
    for k in m.kraus_density_vectors() {
        sum.add_assign(&k.contract_output());
    }
    sum.max_abs_diff(&CMatrix::identity(d))
}

/// Two measurements are identical iff their Kraus density vectors agree outcome by outcome
/// (positional correspondence, tolerance `1e-10`).
pub fn measurements_equal(m1: &Measurement, m2: &Measurement) -> Result<bool> {
    m1.dim().check(m2.dim())?;
    if m1.len() != m2.len() {
        return Err(Error::OutcomeCountMismatch {
            left: m1.len(),
            right: m2.len(),
        });
    }
    Ok(m1
        .kraus_density_vectors()
        .iter()
        .zip(m2.kraus_density_vectors())
        .all(|(k1, k2)| k1.matrix().max_abs_diff(k2.matrix()) <= COMPLETENESS_TOL))
}

/// Completion of a non-complete set of positive bipartite operators `{Ẽ^μ}` to
/// `c Σ_μ Ẽ^μ + E′ = I`.
#[derive(Clone, Debug)]
pub struct CompletionResult {
    /// The subnormalization factor `c`.
    pub scale: f64,
    /// `E′ = I − c Σ_μ Ẽ^μ`, positive.
    pub remainder: CMatrix,
    /// 2-time measurement realizing the completed set: one outcome per `Ẽ^μ` (in order)
    /// followed by a final `discard` outcome for `E′`.
    pub completed: Measurement,
}

impl CompletionResult {
    /// Index of the discard outcome in [`CompletionResult::completed`].
    pub fn discard_index(&self) -> usize {
        self.completed.len() - 1
    }
}

/// Label given to the `E′` outcome of a completed measurement.
pub const DISCARD_LABEL: &str = "discard";

fn validate_operator_set(ops: &[CMatrix]) -> Result<(Dim, CMatrix)> {
    let first = ops.first().ok_or(Error::Empty("operator set"))?;
    let n = first.rows();
    let mut sum = CMatrix::zeros(n, n);
    let mut dim = None;
    for op in ops {
        let k = KrausDensityVector::from_matrix(op.clone())?;
        let d = *dim.get_or_insert(k.dim());
        d.check(k.dim())?;
        sum.add_assign(op);
    }
    Ok((dim.expect("nonempty"), sum.hermitian_part()))
}

/// Completes `{Ẽ^μ}` with the largest admissible scale `c = 1/λ_max(Σ Ẽ^μ)`.
pub fn complete_operator_set(ops: &[CMatrix]) -> Result<CompletionResult> {
    let (_, sum) = validate_operator_set(ops)?;
    let lambda_max = hermitian_eigen(&sum).max();
    if lambda_max <= EQ_TOL {
        return Err(Error::ZeroOperatorSet);
    }
    complete_operator_set_with_scale(ops, 1.0 / lambda_max)
}

/// Completes `{Ẽ^μ}` with a caller-chosen scale `c ∈ (0, 1/λ_max]`.
///
/// The bipartite elements are pulled back to Kraus density vectors by entrywise conjugation
/// and subnormalized by `d`, since a normalized bipartite set is supernormalized by exactly
/// `d` as a 2-time measurement.
pub fn complete_operator_set_with_scale(ops: &[CMatrix], scale: f64) -> Result<CompletionResult> {
    let (dim, sum) = validate_operator_set(ops)?;
    let lambda_max = hermitian_eigen(&sum).max();
    if lambda_max <= EQ_TOL {
        return Err(Error::ZeroOperatorSet);
    }
    let max = 1.0 / lambda_max;
    if !(scale > 0.0 && scale <= max * (1.0 + EQ_TOL)) {
        return Err(Error::InvalidScale { scale, max });
    }
    let n = dim.squared();
    let remainder = CMatrix::identity(n).sub(&sum.scale_real(scale)).hermitian_part();
    let min = hermitian_eigen(&remainder).min();
    if min < -PSD_TOL {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }

    let sub = 1.0 / dim.get() as f64;
    let mut outcomes = Vec::with_capacity(ops.len() + 1);
    for (mu, op) in ops.iter().enumerate() {
        let k = KrausDensityVector::from_parts_unchecked(dim, op.conj().scale_real(scale * sub));
        let kraus = nonempty_kraus(dim, &k);
        outcomes.push(Outcome::new(format!("{mu}"), kraus));
    }
    let k_discard = KrausDensityVector::from_parts_unchecked(dim, remainder.conj().scale_real(sub));
    outcomes.push(Outcome::new(DISCARD_LABEL, nonempty_kraus(dim, &k_discard)));

    Ok(CompletionResult {
        scale,
        remainder,
        completed: Measurement::new(outcomes)?,
    })
}

/// Kraus realization of `k`; a vanishing array becomes a single zero operator so the outcome
/// stays present (with probability zero).
fn nonempty_kraus(dim: Dim, k: &KrausDensityVector) -> Vec<KrausOperator> {
    let ops = k.kraus_decomposition();
    if ops.is_empty() {
        let d = dim.get();
        alloc::vec![KrausOperator::new(CMatrix::zeros(d, d)).expect("square")]
    } else {
        ops
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use num_complex::Complex64;

    const S: f64 = core::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn ket(i: usize) -> Vec<Complex64> {
        let mut v = vec![c(0.0); 2];
        v[i] = c(1.0);
        v
    }

    fn plus() -> Vec<Complex64> {
        vec![c(S), c(S)]
    }

    fn proj(i: usize) -> KrausOperator {
        KrausOperator::ket_bra(&ket(i), &ket(i)).unwrap()
    }

    fn m1() -> Measurement {
        Measurement::detailed(vec![proj(0), KrausOperator::ket_bra(&plus(), &ket(1)).unwrap()]).unwrap()
    }

    #[test]
    fn lumped_projectors_give_rank_two_diagonal() {
        let k = kraus_density_vector(&[proj(0), proj(1)]).unwrap();
        assert_eq!(k.matrix(), &CMatrix::diag(&[1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn unitary_gives_rank_one() {
        let x = KrausOperator::new(CMatrix::from_rows(&[vec![c(0.0), c(1.0)], vec![c(1.0), c(0.0)]]).unwrap()).unwrap();
        let k = kraus_density_vector(&[x]).unwrap();
        let rank = hermitian_eigen(k.matrix()).values.iter().filter(|&&l| l > 1e-12).count();
        assert_eq!(rank, 1);
        assert!(kraus_density_vector(&[]).is_err());
    }

    #[test]
    fn completeness_examples() {
        let proj_m = Measurement::detailed(vec![proj(0), proj(1)]).unwrap();
        assert_eq!(check_completeness(&proj_m), Completeness { complete: true, defect: 0.0 });
        let c1 = check_completeness(&m1());
        assert!(c1.complete && c1.defect < 1e-15);
        let half = Measurement::detailed(vec![proj(0)]).unwrap();
        assert_eq!(check_completeness(&half), Completeness { complete: false, defect: 1.0 });
    }

    #[test]
    fn partial_normalization_matches_completeness() {
        assert!(partial_normalization_defect(&Measurement::detailed(vec![proj(0), proj(1)]).unwrap()) < 1e-15);
        assert!(partial_normalization_defect(&m1()) < 1e-15);
        assert!((partial_normalization_defect(&Measurement::detailed(vec![proj(0)]).unwrap()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equality_ignores_global_phase() {
        let a = KrausOperator::ket_bra(&plus(), &ket(1)).unwrap();
        let phased = a.scaled(Complex64::from_polar(1.0, 0.7));
        let ma = Measurement::detailed(vec![a]).unwrap();
        let mb = Measurement::detailed(vec![phased]).unwrap();
        assert!(measurements_equal(&ma, &mb).unwrap());
        assert!(measurements_equal(&ma, &ma).unwrap());
        let two = Measurement::detailed(vec![proj(0), proj(1)]).unwrap();
        assert!(matches!(measurements_equal(&ma, &two), Err(Error::OutcomeCountMismatch { .. })));
    }

    #[test]
    fn projector_pair_equals_identity_and_z_lumped() {
        // K for {|0><0|, |1><1|} is diag(1,0,0,1); for {I/√2, Z/√2} it is
        // ½(v(I)v(I)† + v(Z)v(Z)†) = diag(1,0,0,1) as well.
        let lumped = Measurement::new(vec![Outcome::new("all", vec![proj(0), proj(1)])]).unwrap();
        let i = KrausOperator::identity(Dim::new(2).unwrap()).scaled(c(S));
        let z = KrausOperator::new(CMatrix::diag(&[S, -S])).unwrap();
        let iz = Measurement::new(vec![Outcome::new("all", vec![i, z])]).unwrap();
        assert!(measurements_equal(&lumped, &iz).unwrap());
    }

    #[test]
    fn coarse_grain_groups() {
        let m = Measurement::detailed(vec![proj(0), proj(1)]).unwrap();
        let lumped = m.coarse_grain(&[vec![0, 1]]).unwrap();
        assert_eq!(lumped.len(), 1);
        assert_eq!(lumped.outcomes()[0].label, "0+1");
        assert!(lumped.is_complete() && !lumped.is_detailed());
        assert!(m.coarse_grain(&[vec![0]]).is_err());
        assert!(m.coarse_grain(&[vec![0, 0], vec![1]]).is_err());
    }

    #[test]
    fn completion_of_identity_and_doubled_identity() {
        let r = complete_operator_set(&[CMatrix::identity(4)]).unwrap();
        assert!((r.scale - 1.0).abs() < 1e-15);
        assert!(r.remainder.max_abs() < 1e-15);
        assert!(r.completed.is_complete());

        let r = complete_operator_set(&[CMatrix::identity(4), CMatrix::identity(4)]).unwrap();
        assert!((r.scale - 0.5).abs() < 1e-15);
        assert!(r.remainder.max_abs() < 1e-15);
        assert_eq!(r.completed.outcomes()[r.discard_index()].label, DISCARD_LABEL);
    }

    #[test]
    fn completion_rejects_bad_input() {
        assert_eq!(complete_operator_set(&[CMatrix::zeros(4, 4)]).unwrap_err(), Error::ZeroOperatorSet);
        assert!(matches!(
            complete_operator_set(&[CMatrix::diag(&[1.0, -1.0, 0.0, 0.0])]),
            Err(Error::NotPositive { .. })
        ));
        assert!(matches!(
            complete_operator_set_with_scale(&[CMatrix::identity(4)], 2.0),
            Err(Error::InvalidScale { .. })
        ));
    }
}

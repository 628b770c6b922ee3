//! Outcome probabilities conditioned on successful post-selection.
//!
//! Every rule has the same shape: an unnormalized weight per outcome, divided by the total.
//! The total is the (relative) post-selection success rate; when it vanishes the conditional
//! distribution is undefined and [`Error::PostSelectionImpossible`] is returned.

use alloc::vec::Vec;

use crate::bipartite::{BipartiteDensity, BipartiteOperator};
use crate::error::{Error, Result};
use crate::measurements::{CompletionResult, Measurement};
use crate::states::Ensemble;
use crate::vectors::{contract_pure, pair, sandwich, DensityVector, TwoTimeState, DENOMINATOR_TOL};

fn conditional(weights: Vec<f64>) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !(total > DENOMINATOR_TOL) {
        return Err(Error::PostSelectionImpossible { success: total });
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

fn detailed_complete(m: &Measurement) -> Result<()> {
    m.require_complete()?;
    m.detailed_operators().map(drop)
}

/// `P(μ) = |A^μ • Ψ|² / Σ_ν |A^ν • Ψ|²` for a detailed, complete measurement.
pub fn prob_pure(psi: &TwoTimeState, m: &Measurement) -> Result<Vec<f64>> {
    detailed_complete(m)?;
    psi.dim().check(m.dim())?;
    let weights = m
        .detailed_operators()?
        .into_iter()
        .map(|a| contract_pure(a, psi).map(|amp| amp.norm_sqr()))
        .collect::<Result<Vec<_>>>()?;
    conditional(weights)
}

/// `P(μ) = Σ_r p_r |A^μ • Ψ_r|² / Σ_ν Σ_s p_s |A^ν • Ψ_s|²`.
///
/// Each member is weighted by its attempt frequency times its own success amplitude; this is
/// not the average of the members' conditional distributions.
pub fn prob_ensemble(e: &Ensemble, m: &Measurement) -> Result<Vec<f64>> {
    detailed_complete(m)?;
    e.dim().check(m.dim())?;
    let ops = m.detailed_operators()?;
    let mut weights = alloc::vec![0.0; ops.len()];
    for (p, psi) in e.members() {
        for (w, a) in weights.iter_mut().zip(&ops) {
            *w += p * contract_pure(a, psi)?.norm_sqr();
        }
    }
    conditional(weights)
}

/// `P(μ) = A^μ • η • A^μ† / Σ_ν A^ν • η • A^ν†` for a detailed, complete measurement.
pub fn prob_density(eta: &DensityVector, m: &Measurement) -> Result<Vec<f64>> {
    detailed_complete(m)?;
    eta.dim().check(m.dim())?;
    let weights = m
        .detailed_operators()?
        .into_iter()
        .map(|a| sandwich(a, eta))
        .collect::<Result<Vec<_>>>()?;
    conditional(weights)
}

/// `P(μ) = K^μ • η / Σ_ν K^ν • η` for any complete (possibly coarse-grained) measurement.
pub fn prob_coarse(eta: &DensityVector, m: &Measurement) -> Result<Vec<f64>> {
    m.require_complete()?;
    eta.dim().check(m.dim())?;
    let weights = m
        .kraus_density_vectors()
        .iter()
        .map(|k| pair(k, eta))
        .collect::<Result<Vec<_>>>()?;
    conditional(weights)
}

/// Relative probabilities `tr(Ẽ^μ ρ) / Σ_ν tr(Ẽ^ν ρ)` of a non-complete set of positive
/// bipartite operators, i.e. the statistics after completing the set and discarding the
/// completion outcome.
pub fn prob_relative_bipartite(rho: &BipartiteDensity, ops: &[BipartiteOperator]) -> Result<Vec<f64>> {
    if ops.is_empty() {
        return Err(Error::Empty("operator set"));
    }
    let mut weights = Vec::with_capacity(ops.len());
    for op in ops {
        rho.dim().check(op.dim())?;
        weights.push(op.matrix().matmul(rho.matrix()).trace().re.max(0.0));
    }
    let total: f64 = weights.iter().sum();
    if !(total > DENOMINATOR_TOL) {
        return Err(Error::AllDiscarded { total });
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Runs the completed measurement on `eta`, drops the discard outcome and renormalizes the
/// kept outcomes. The result does not depend on the completion scale.
pub fn prob_completed(eta: &DensityVector, completion: &CompletionResult) -> Result<Vec<f64>> {
    let m = &completion.completed;
    m.require_complete()?;
    eta.dim().check(m.dim())?;
    let ks = m.kraus_density_vectors();
    let kept = &ks[..completion.discard_index()];
    let weights = kept.iter().map(|k| pair(k, eta)).collect::<Result<Vec<_>>>()?;
    let total: f64 = weights.iter().sum();
    if !(total > DENOMINATOR_TOL) {
        return Err(Error::AllDiscarded { total });
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

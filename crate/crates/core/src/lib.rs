//! Pre- and post-selected ("2-time") quantum states.
//!
//! A 2-time state `Ψ = Σ α_ij ⟨i| ⊗ |j⟩` is stored as the `d × d` array `α`, row `i` being the
//! later (post-selected) bra and column `j` the earlier (prepared) ket. Kraus operators act on it
//! by the bilinear contraction `A • Ψ = Σ A_ij α_ij`; mixtures are described by density vectors
//! `η = Σ p_r v(Ψ_r) v(Ψ_r)†` over the row-major vectorization `v`.
//!
//! The crate is `no_std` with `alloc`. File formats and the command-line tool live in the
//! `twotime` crate.
//!
//! ```
//! use twotime_core::probability::prob_pure;
//! use twotime_core::states::superpose;
//! use twotime_core::{Complex64, Dim, KrausOperator, Measurement, TwoTimeState};
//!
//! let d = Dim::new(2)?;
//! let one = Complex64::new(1.0, 0.0);
//! let psi = superpose(&[(one, TwoTimeState::basis(d, 0, 0)), (one, TwoTimeState::basis(d, 1, 1))])?;
//! let z = Measurement::detailed(vec![
//!     KrausOperator::ket_bra(&[one, Complex64::ZERO], &[one, Complex64::ZERO])?,
//!     KrausOperator::ket_bra(&[Complex64::ZERO, one], &[Complex64::ZERO, one])?,
//! ])?;
//! let p = prob_pure(&psi, &z)?;
//! assert!((p[0] - 0.5).abs() < 1e-12);
//! # Ok::<(), twotime_core::Error>(())
//! ```

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bipartite;
pub mod error;
pub mod linalg;
pub mod measurements;
pub mod probability;
pub mod sim;
pub mod states;
pub mod tomography;
pub mod vectors;
pub mod weak;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use measurements::{Measurement, Outcome};
pub use num_complex::Complex64;
pub use states::Ensemble;
pub use vectors::{DensityVector, Dim, KrausDensityVector, KrausOperator, TwoTimeState};

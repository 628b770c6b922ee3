use thiserror::Error;

/// Everything that can go wrong when building or evaluating 2-time objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what}: expected a {expected}x{expected} array, found {rows}x{cols}")]
    BadShape {
        what: &'static str,
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("{0} is the zero vector")]
    DegenerateInput(&'static str),

    #[error("superposition cancels to the zero array")]
    DegenerateSuperposition,

    #[error("{what} is not normalized (got {value}, expected 1)")]
    NotNormalized { what: &'static str, value: f64 },

    #[error("ensemble weight {index} must lie in (0, 1], got {weight}")]
    InvalidWeight { index: usize, weight: f64 },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("not Hermitian (max |m - m^dagger| = {defect})")]
    NotHermitian { defect: f64 },

    #[error("not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("measurement is not complete (completeness defect {defect})")]
    IncompleteMeasurement { defect: f64 },

    #[error("outcome {outcome} has {count} Kraus operators; a detailed measurement needs exactly one")]
    NotDetailed { outcome: usize, count: usize },

    #[error("outcome count mismatch: {left} vs {right}")]
    OutcomeCountMismatch { left: usize, right: usize },

    #[error("post-selection is impossible (success weight {success})")]
    PostSelectionImpossible { success: f64 },

    #[error("every outcome is discarded (total weight {total})")]
    AllDiscarded { total: f64 },

    #[error("weak value is undefined (denominator {denominator})")]
    UndefinedWeakValue { denominator: f64 },

    #[error("weak value vector vanishes; no equivalent pure 2-time state exists")]
    NoEquivalentState,

    #[error("operator set sums to zero")]
    ZeroOperatorSet,

    #[error("completion scale {scale} outside (0, {max}]")]
    InvalidScale { scale: f64, max: f64 },

    #[error("operators do not sum to the identity (defect {defect})")]
    NotNormalizedPovm { defect: f64 },

    #[error("malformed data: {0}")]
    MalformedData(&'static str),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ZeroDimension => "zero_dimension",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::BadShape { .. } => "bad_shape",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::DegenerateSuperposition => "degenerate_superposition",
            Error::NotNormalized { .. } => "not_normalized",
            Error::InvalidWeight { .. } => "invalid_weight",
            Error::Empty(_) => "empty",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::NotPositive { .. } => "not_positive",
            Error::IncompleteMeasurement { .. } => "incomplete_measurement",
            Error::NotDetailed { .. } => "not_detailed",
            Error::OutcomeCountMismatch { .. } => "outcome_count_mismatch",
            Error::PostSelectionImpossible { .. } => "post_selection_impossible",
            Error::AllDiscarded { .. } => "all_discarded",
            Error::UndefinedWeakValue { .. } => "undefined_weak_value",
            Error::NoEquivalentState => "no_equivalent_state",
            Error::ZeroOperatorSet => "zero_operator_set",
            Error::InvalidScale { .. } => "invalid_scale",
            Error::NotNormalizedPovm { .. } => "not_normalized_povm",
            Error::MalformedData(_) => "malformed_data",
            Error::InvalidConfig(_) => "invalid_config",
        }
    }

    /// True for failures of the physics (a null conditioning event) rather than of the input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::PostSelectionImpossible { .. }
                | Error::AllDiscarded { .. }
                | Error::UndefinedWeakValue { .. }
                | Error::NoEquivalentState
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

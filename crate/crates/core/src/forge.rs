//! The basis constructions and the lemmas they rest on.
//!
//! Every construction grows an orthonormal family `u₁, u₂, …` one vector at a time. Fresh
//! vectors come from far compression windows, so orthogonality to everything built so far
//! (and to its images under `T` and `T*`) holds by disjoint support rather than by projection.

mod band;
mod large;
mod lemma2d;
mod partition;
mod pearcy;
mod small;
mod state;
mod tridiag;

use num_complex::Complex64;

use crate::numrange::{NumRangeError, WindowPolicy};
use crate::seqspace::{FinVec, ModelError, OperatorModel, OrthoFamily};

pub use band::{build_banded_diagonal, reflected_target, BandParams};
pub use large::{build_large_entries, large_class, LargeConstants, LargeParams};
pub use lemma2d::{lemma2d_state, Lemma2dState};
pub use partition::{
    dyadic_class, select_residue_class, sparsify_weights, Block, PartitionKind, PartitionScheme, Sparsified,
    LoneBlock,
};
pub use pearcy::{pearcy_state, PearcyState, PEARCY_TOLERANCE};
pub use small::{build_small_entries, horizon_d, SmallParams};
pub use state::{Auxiliaries, BuildState, FactorKind, PlankAudit, SeedFamily, SeedLedger, StepBranch, StepRecord};
pub use tridiag::{build_tridiagonal, TridiagParams};

/// Residual norm at or below which a seed counts as already inside the span.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForgeError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("step {step}: precondition violated: {reason}")]
    Precondition { step: usize, reason: String },
    #[error("step {step}: state search failed: {source}")]
    Search { step: usize, source: NumRangeError },
    #[error("step {step}: internal consistency failure: {reason}")]
    Consistency { step: usize, reason: String },
    #[error("step {step}: no admissible seed among indices up to {examined}")]
    NoAdmissibleSeed { step: usize, examined: usize },
    #[error("step {step}: plank solver failed: {source}")]
    Plank { step: usize, source: NumRangeError },
    #[error("step {step}: seed family exhausted at index {index}")]
    SeedsExhausted { step: usize, index: usize },
    #[error("operator model: {0}")]
    Model(#[from] ModelError),
}

impl ForgeError {
    /// Step at which the failure happened; 0 for failures before the first step.
    pub fn step(&self) -> usize {
        match self {
            ForgeError::Precondition { step, .. }
            | ForgeError::Search { step, .. }
            | ForgeError::Consistency { step, .. }
            | ForgeError::NoAdmissibleSeed { step, .. }
            | ForgeError::Plank { step, .. }
            | ForgeError::SeedsExhausted { step, .. } => *step,
            ForgeError::InvalidParameters(_) | ForgeError::Model(_) => 0,
        }
    }

    pub(crate) fn at(step: usize, e: NumRangeError) -> Self {
        match e {
            NumRangeError::Precondition(reason) => ForgeError::Precondition { step, reason },
            source => ForgeError::Search { step, source },
        }
    }
}

/// A construction stopped early; `partial` holds every step completed before the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct Halted {
    pub error: ForgeError,
    pub partial: Box<BuildState>,
}

impl Halted {
    pub(crate) fn new(error: ForgeError, partial: BuildState) -> Self {
        Self {
            error,
            partial: Box::new(partial),
        }
    }
}

/// Largest support index over a collection of vectors, 0 when all are zero.
pub(crate) fn horizon_of<'a>(vs: impl IntoIterator<Item = &'a FinVec>) -> usize {
    vs.into_iter().filter_map(FinVec::max_support).max().unwrap_or(0)
}

/// Unit vector with `⟨Tv, v⟩ = λ` supported past `horizon + band_width`.
pub(crate) fn fresh_state(
    t: &OperatorModel,
    horizon: usize,
    lambda: Complex64,
    margin: f64,
    policy: WindowPolicy,
) -> Result<FinVec, NumRangeError> {
    crate::numrange::find_state_beyond(t, horizon, lambda, margin, true, policy).map(|(v, _)| v)
}

/// `r/‖r‖` projected once more against `us`, so rounding in a short residual `r` does not
/// reappear as a component along the span after normalization.
pub(crate) fn unit_residual(us: &OrthoFamily, r: &FinVec) -> FinVec {
    let b = us.residual(&r.scale_real(1.0 / r.norm()));
    b.scale_real(1.0 / b.norm())
}

/// `Tx − ⟨Tx, x⟩x`.
pub(crate) fn defect(tx: &FinVec, x: &FinVec) -> FinVec {
    tx.axpy(-tx.inner(x), x)
}

//! Sparse vectors over the standard basis of ℓ²(ℕ) and banded operator models.

mod family;
mod finvec;
mod operator;
mod sequence;

pub use family::{residual, OrthoFamily, DEFAULT_GRAM_TOLERANCE};
pub(crate) use family::residual_against;
pub use finvec::{inner_product, FinVec, FinVecFormatError, PRUNE_THRESHOLD};
pub(crate) use finvec::DenseAccumulator;
pub use operator::{matrix_entry, EntryPatch, ModelError, OperatorKind, OperatorModel, ToeplitzDiagonal};
pub use sequence::{Sequence, SequenceError};
pub(crate) use sequence::mix_seed;

//! Moment-matrix layouts, the affine parametrization fixed by the
//! anti-commutation relations, and objectives built from Hamiltonians.

mod affine;
mod embedding;
mod layout;
mod objective;
mod params;

pub use affine::{NormalSolver, SlotMap};
pub(crate) use embedding::entry_expression;
pub use embedding::{
    number_conserving_fourth_count, AffineEmbedding, MomentMatrix, MomentRecord, StorageLayout,
    MOMENT_FORMAT,
};
pub use layout::{BasisKind, BasisOp, BlockLayout, Family, FamilyLocation, IndexMap, MomentLevel};
pub(crate) use objective::hamiltonian_entries;
pub use objective::{objective_from_hamiltonian, Objective};
pub use params::{Coords, KeyRef, Param, ParamSpace, ValueClass};

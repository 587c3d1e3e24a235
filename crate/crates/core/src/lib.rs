//! Certified lower bounds on ground-state energies of fermionic lattice
//! Hamiltonians.
//!
//! The ground-state problem is relaxed to a semidefinite program over
//! second- or fourth-moment matrices. The relaxation is solved by projected
//! gradient descent, with each feasible-set projection evaluated by
//! Dykstra's alternating projections between the PSD cone and the affine
//! set fixed by the canonical anti-commutation relations.

pub mod error;
pub mod fermion;
pub mod linalg;
pub mod models;
pub mod moment;
pub mod oracle;
pub mod projections;
pub mod solver;
pub mod ti;

pub use error::{Error, Result};
pub use fermion::{canonicalize, AffineExpression, Ladder, Monomial, Symmetry};
pub use models::HamiltonianSpec;

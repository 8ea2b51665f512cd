//! Computations with bipartite graph planar algebras at desk scale:
//! weighted-graph validation, path-model box algebras and their fixed
//! points under graph symmetries, principal-graph spectral diagnostics,
//! truncated graded symmetric-enveloping algebras, and Hecke-pair crossed
//! products — with every finite-dimensional identity checked by the
//! verification suites.

pub mod boxes;
pub mod builders;
pub mod graph;
pub mod la;
pub mod oracle;
pub mod perm;
pub mod scalars;
pub mod spectral;
pub mod symmetry;

pub use scalars::{ApproxScalar, QScalar, Scalar, ScalarError};

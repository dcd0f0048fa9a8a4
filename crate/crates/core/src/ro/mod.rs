//! Robust counterparts under connected sets and the direct worst-case
//! evaluations used to check them.

mod aro;
mod center;
mod matrix;
mod polyhedral;
mod system;

pub use aro::{
    aro_ellipsoidal_rows, aro_polyhedral_row_system, aro_polyhedral_system, AroEllipsoidalInstance,
    AroPolyhedralInstance,
};
pub use center::{center_cu_lhs, center_cu_system, nested_worst_case_oracle, CenterCuRecursion, OracleMode};
pub use matrix::{
    enumerate_sign_vectors, matrix_cu_lhs, matrix_cu_lhs_for, matrix_cu_system, matrix_sampled_worst_case, SignVector,
    MAX_SIGN_HORIZON,
};
pub use polyhedral::{dual_columns, polyhedral_cu_dual_system, polyhedral_dual_min, polyhedral_worst_case};
pub use system::{AffineExpr, ConstraintSystem, LinearConstraint, PsdConstraint, SocConstraint, VarSign, Variable};

//! Connected uncertainty sets: parameters of period t depend on what was
//! realized in period t−1.

mod ellipsoidal;
mod instance;
mod knapsack;
mod matrix;
mod moment;
mod polyhedral;

pub use ellipsoidal::EllipsoidalCuProcess;
pub(crate) use ellipsoidal::{check_count, check_len};
pub use instance::{Instance, ProcessSpec, SCHEMA_VERSION};
pub use knapsack::{sample_path, KnapsackUncertaintyModel};
pub use matrix::MatrixCuProcess;
pub use moment::{MomentAmbiguityProcess, MomentProcessParts, SupportMode};
pub use polyhedral::{PolyhedralCuProcess, PolyhedralStage};

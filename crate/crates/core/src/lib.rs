//! Robust and distributionally robust optimization over connected
//! uncertainty: uncertainty sets whose center, covariance or right-hand side
//! depends on the previous period's realization.

pub mod cli;
pub mod cu_sets;
pub mod dro;
pub mod error;
pub mod experiments;
pub mod lp;
pub mod numerics;
pub mod ro;
pub mod rng;

pub use error::{Error, Result};

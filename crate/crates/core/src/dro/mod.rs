//! Finite-support moment ambiguity: stage moment LPs, the nested worst-case
//! recursion and the two dual bounds (per-point and constant duals).

mod cost;
mod duals;
mod moment;
mod nested;

pub use cost::{piecewise_utility, CostSpec, StageCost, UTILITY_PIECES};
pub use duals::{
    assemble_dual, conservative_dual_value, dro_report, exact_dual_value, strict_feasibility_margin, DroCutCounts,
    DroGaps, DroReport, DualProgram, DualValue,
};
pub use moment::{moment_sup_lp, Direction, DiscreteDistribution, MomentDuals, MomentSolution, StageMomentSet};
pub use nested::{nested_dro_value, Conditional, NestedDroResult};

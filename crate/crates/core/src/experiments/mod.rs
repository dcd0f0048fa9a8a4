//! The knapsack and portfolio benchmark pipelines, plus random instance
//! generators shared by the verify suites.

pub mod generators;
mod knapsack;
mod output;
mod portfolio;

pub use knapsack::{
    constraint_satisfaction, cu_knapsack_lhs, nc_knapsack_lhs, random_covariance, run_knapsack_experiment, sample_moments,
    solve_robust_knapsack, ComparisonMode, KnapsackExperimentConfig, KnapsackExperimentResult, KnapsackInstance,
    KnapsackRecord, KnapsackReplicate, KnapsackSolution, SolveMethod, Sweep, MAX_BNB_ITEMS, MAX_EXHAUSTIVE_ITEMS,
};
pub use output::{fmt_sig, CsvTable};
pub use portfolio::{
    portfolio_process, portfolio_stage_value, run_portfolio_experiment, simulate_wealth, solve_portfolio, PortfolioConfig,
    PortfolioExperimentResult, PortfolioModel, PortfolioRecord, PortfolioSolution, WealthStats,
};

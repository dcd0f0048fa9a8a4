use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{fmt_sig, CsvTable};
use crate::cu_sets::{check_len, MomentAmbiguityProcess, MomentProcessParts, SupportMode};
use crate::dro::{moment_sup_lp, piecewise_utility, Direction, StageMomentSet};
use crate::error::{Error, Result};
use crate::numerics::{cholesky, dot, DenseMatrix, DenseVector};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioConfig {
    pub schema_version: u32,
    pub mu1: DenseVector,
    pub delta: DenseVector,
    /// Per-asset return variance; the covariance is variance·[[1, ρ], [ρ, 1]].
    pub variance: f64,
    /// Support points per axis.
    pub support_points: usize,
    /// Support half-width in standard deviations.
    pub support_width: f64,
    /// The allocation grid is {i / allocation_steps}.
    pub allocation_steps: usize,
    pub samples: usize,
    pub initial_wealth: f64,
    /// Apply W_{t+1} = W_t·(1 + d̂ᵀx) when true, W_t·(d̂ᵀx) when false.
    pub gross_returns: bool,
    pub omega_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for PortfolioConfig {
    fn default() -> Self {
        PortfolioConfig {
            schema_version: 1,
            mu1: DenseVector(vec![0.03, 0.06]),
            delta: DenseVector(vec![0.02, 0.02]),
            variance: 0.005,
            support_points: 9,
            support_width: 3.0,
            allocation_steps: 100,
            samples: 2000,
            initial_wealth: 100.0,
            gross_returns: true,
            omega_grid: (0..9).map(|i| -2.0 + 0.5 * i as f64).collect(),
            rho_grid: (0..9).map(|i| -1.0 + 0.25 * i as f64).collect(),
            seed: 2024,
        }
    }
}

impl PortfolioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidInstance(s.into()));
        if self.schema_version != 1 {
            return bad("unsupported schema_version");
        }
        check_len(&self.mu1, 2, "mu1")?;
        check_len(&self.delta, 2, "delta")?;
        if self.delta.iter().any(|d| !(*d >= 0.0)) || !self.mu1.is_finite() {
            return bad("delta must be nonnegative and mu1 finite");
        }
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return bad("variance must be finite and nonnegative");
        }
        if self.support_points < 2 || self.allocation_steps < 2 {
            return bad("grid resolutions must be at least 2");
        }
        if !(self.support_width > 0.0 && self.support_width.is_finite()) {
            return bad("support_width must be positive");
        }
        if self.samples < 2 {
            return bad("at least 2 wealth samples");
        }
        if !(self.initial_wealth > 0.0 && self.initial_wealth.is_finite()) {
            return bad("initial wealth must be positive");
        }
        if self.rho_grid.iter().any(|r| !(-1.0..=1.0).contains(r)) || self.omega_grid.iter().any(|w| !w.is_finite()) {
            return bad("rho must lie in [-1, 1] and omega be finite");
        }
        Ok(())
    }

    pub fn covariance(&self, rho: f64) -> DenseMatrix {
        let v = self.variance;
        DenseMatrix::from_rows(&[vec![v, v * rho], vec![v * rho, v]]).expect("2x2")
    }

    fn half_width(&self) -> f64 {
        self.support_width * self.variance.sqrt()
    }

    /// Offsets of the per-axis grid, asset 1 major.
    pub fn support_offsets(&self) -> Vec<DenseVector> {
        let k = self.support_points;
        let w = self.half_width();
        let axis: Vec<f64> = (0..k).map(|i| -w + 2.0 * w * i as f64 / (k - 1) as f64).collect();
        axis.iter().flat_map(|&a| axis.iter().map(move |&b| DenseVector(vec![a, b]))).collect()
    }

    /// (i/N, 1 − i/N) for i = 0..=N.
    pub fn allocation(&self, i: usize) -> [f64; 2] {
        let a = i as f64 / self.allocation_steps as f64;
        [a, 1.0 - a]
    }
}

/// Two-period moment process with conditional center μ_1 + ω(d_1 − μ_1),
/// supports translated with the center, and cap Σ_1 in both periods.
pub fn portfolio_process(cfg: &PortfolioConfig, omega: f64, rho: f64) -> Result<MomentAmbiguityProcess> {
    cfg.validate()?;
    let offsets = cfg.support_offsets();
    let sigma = cfg.covariance(rho);
    MomentAmbiguityProcess::new(MomentProcessParts {
        support_mode: SupportMode::Translated,
        supports: vec![offsets.clone(), offsets],
        mu1: cfg.mu1.clone(),
        cond_a: vec![DenseMatrix::scaled_identity(2, omega)],
        cond_b: vec![DenseVector(cfg.mu1.iter().map(|m| (1.0 - omega) * m).collect())],
        delta: vec![cfg.delta.clone(), cfg.delta.clone()],
        anchors: None,
        sigma_caps: vec![sigma.clone(), sigma],
    })
}

/// Worst-case expected utility of allocation x over one stage set.
pub fn portfolio_stage_value(x: &[f64], set: &StageMomentSet, direction: Direction) -> Result<f64> {
    check_len(x, set.dim(), "allocation")?;
    if x.iter().any(|v| *v < -1e-12) || (x.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInstance("allocation must lie on the simplex".into()));
    }
    let cost: Vec<f64> = set.support.iter().map(|d| piecewise_utility(dot(x, d))).collect();
    Ok(moment_sup_lp(&cost, set, direction)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortfolioModel {
    /// Second-period set centered at μ_1 + ω(d_1 − μ_1).
    Cu,
    /// Both periods use the first-period set.
    Dro,
}

impl PortfolioModel {
    pub fn tag(self) -> &'static str {
        match self {
            PortfolioModel::Cu => "cu",
            PortfolioModel::Dro => "dro",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSolution {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub objective: f64,
}

/// Grid search over both allocations. Ties keep the smallest asset-1 weight
/// in period 1, then in period 2.
pub fn solve_portfolio(cfg: &PortfolioConfig, omega: f64, rho: f64, model: PortfolioModel) -> Result<PortfolioSolution> {
    let proc = portfolio_process(cfg, omega, rho)?;
    let grid: Vec<[f64; 2]> = (0..=cfg.allocation_steps).map(|i| cfg.allocation(i)).collect();
    let first = proc.stage_set(0, None)?;
    match model {
        PortfolioModel::Dro => {
            let values: Vec<f64> = grid
                .par_iter()
                .map(|x| portfolio_stage_value(x, &first, Direction::Inf))
                .collect::<Result<_>>()?;
            let (best, v) = argmax(&values);
            Ok(PortfolioSolution { x1: grid[best], x2: grid[best], objective: 2.0 * v })
        }
        PortfolioModel::Cu => {
            // second-stage values g_2(ξ_s) per x_2 and first-stage support point
            let seconds: Vec<StageMomentSet> = first
                .support
                .iter()
                .map(|xi| proc.stage_set(1, Some(xi)))
                .collect::<Result<_>>()?;
            let g2: Vec<Vec<f64>> = grid
                .par_iter()
                .map(|x2| seconds.iter().map(|set| portfolio_stage_value(x2, set, Direction::Inf)).collect())
                .collect::<Result<_>>()?;
            let pairs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..grid.len()).map(move |j| (i, j))).collect();
            let values: Vec<f64> = pairs
                .par_iter()
                .map(|&(i, j)| {
                    let cost: Vec<f64> = first
                        .support
                        .iter()
                        .zip(&g2[j])
                        .map(|(d, g)| piecewise_utility(dot(&grid[i], d)) + g)
                        .collect();
                    Ok(moment_sup_lp(&cost, &first, Direction::Inf)?.value)
                })
                .collect::<Result<_>>()?;
            let (best, v) = argmax(&values);
            let (i, j) = pairs[best];
            Ok(PortfolioSolution { x1: grid[i], x2: grid[j], objective: v })
        }
    }
}

fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WealthStats {
    pub mean: f64,
    pub std: f64,
    pub worst: f64,
}

fn clip(d: &mut [f64], center: &[f64], w: f64) {
    for (v, c) in d.iter_mut().zip(center) {
        *v = v.clamp(c - w, c + w);
    }
}

/// Terminal wealth over `n` paths d_1 ~ N(μ_1, Σ_1), d_2 ~ N(μ_1 + ω(d_1 − μ_1), Σ_1),
/// each clipped to its support box. Returns mean, sample std and minimum.
pub fn simulate_wealth(
    x1: &[f64],
    x2: &[f64],
    cfg: &PortfolioConfig,
    omega: f64,
    rho: f64,
    n: usize,
    seed: u64,
) -> Result<WealthStats> {
    cfg.validate()?;
    check_len(x1, 2, "x1")?;
    check_len(x2, 2, "x2")?;
    if n < 2 {
        return Err(Error::InvalidInstance("at least 2 wealth samples".into()));
    }
    let l = cholesky(&cfg.covariance(rho))?;
    let w = cfg.half_width();
    let mu = &cfg.mu1;
    let growth = |d: &[f64], x: &[f64]| if cfg.gross_returns { 1.0 + dot(d, x) } else { dot(d, x) };
    let wealth: Vec<f64> = (0..n)
        .map(|s| {
            let e1 = rng::correlated_normal(&mut rng::stream(seed, &[s as u64, 1]), &l);
            let e2 = rng::correlated_normal(&mut rng::stream(seed, &[s as u64, 2]), &l);
            let mut d1: Vec<f64> = (0..2).map(|i| mu[i] + e1[i]).collect();
            clip(&mut d1, mu, w);
            let c2: Vec<f64> = (0..2).map(|i| mu[i] + omega * (d1[i] - mu[i])).collect();
            let mut d2: Vec<f64> = (0..2).map(|i| c2[i] + e2[i]).collect();
            clip(&mut d2, &c2, w);
            cfg.initial_wealth * growth(&d1, x1) * growth(&d2, x2)
        })
        .collect();
    let mean = wealth.iter().sum::<f64>() / n as f64;
    let var = wealth.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    let worst = wealth.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(WealthStats { mean, std: var.sqrt(), worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioRecord {
    pub omega: f64,
    pub rho: f64,
    /// "cu", "dro" or "cu_minus_dro".
    pub model: String,
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub objective: f64,
    pub wealth: WealthStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioExperimentResult {
    pub config: PortfolioConfig,
    pub records: Vec<PortfolioRecord>,
}

impl PortfolioExperimentResult {
    pub fn record(&self, omega: f64, rho: f64, model: &str) -> Option<&PortfolioRecord> {
        self.records.iter().find(|r| r.omega == omega && r.rho == rho && r.model == model)
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&[
            "omega",
            "rho",
            "model",
            "x1_asset1",
            "x1_asset2",
            "x2_asset1",
            "x2_asset2",
            "objective",
            "wealth_mean",
            "wealth_std",
            "wealth_worst",
            "returns",
        ]);
        let returns = if self.config.gross_returns { "gross" } else { "literal" };
        for r in &self.records {
            t.push(vec![
                fmt_sig(r.omega),
                fmt_sig(r.rho),
                r.model.clone(),
                fmt_sig(r.x1[0]),
                fmt_sig(r.x1[1]),
                fmt_sig(r.x2[0]),
                fmt_sig(r.x2[1]),
                fmt_sig(r.objective),
                fmt_sig(r.wealth.mean),
                fmt_sig(r.wealth.std),
                fmt_sig(r.wealth.worst),
                returns.into(),
            ]);
        }
        t.to_csv()
    }
}

/// Solves and simulates both models on every (ω, ρ) cell, ω major. Both
/// models in a cell see the same simulated returns.
pub fn run_portfolio_experiment(cfg: &PortfolioConfig) -> Result<PortfolioExperimentResult> {
    cfg.validate()?;
    let cells: Vec<(f64, f64)> = cfg.omega_grid.iter().flat_map(|&w| cfg.rho_grid.iter().map(move |&r| (w, r))).collect();
    let per_cell: Vec<Vec<PortfolioRecord>> = cells
        .par_iter()
        .enumerate()
        .map(|(c, &(omega, rho))| {
            let seed = rng::mix_keys(cfg.seed, &[c as u64]);
            let mut rows = Vec::with_capacity(3);
            for model in [PortfolioModel::Cu, PortfolioModel::Dro] {
                let sol = solve_portfolio(cfg, omega, rho, model)?;
                let wealth = simulate_wealth(&sol.x1, &sol.x2, cfg, omega, rho, cfg.samples, seed)?;
                rows.push(PortfolioRecord { omega, rho, model: model.tag().into(), x1: sol.x1, x2: sol.x2, objective: sol.objective, wealth });
            }
            let (a, b) = (&rows[0], &rows[1]);
            let diff = PortfolioRecord {
                omega,
                rho,
                model: "cu_minus_dro".into(),
                x1: [a.x1[0] - b.x1[0], a.x1[1] - b.x1[1]],
                x2: [a.x2[0] - b.x2[0], a.x2[1] - b.x2[1]],
                objective: a.objective - b.objective,
                wealth: WealthStats {
                    mean: a.wealth.mean - b.wealth.mean,
                    std: a.wealth.std - b.wealth.std,
                    worst: a.wealth.worst - b.wealth.worst,
                },
            };
            rows.push(diff);
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(PortfolioExperimentResult { config: cfg.clone(), records: per_cell.into_iter().flatten().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PortfolioConfig {
        PortfolioConfig { support_points: 3, allocation_steps: 4, samples: 50, ..Default::default() }
    }

    #[test]
    fn point_mass_set_gives_utility_at_mean() {
        let set = StageMomentSet::new(
            vec![DenseVector(vec![0.0, 0.1]), DenseVector(vec![0.03, 0.06]), DenseVector(vec![0.06, 0.0])],
            DenseVector(vec![0.03, 0.06]),
            DenseVector::zeros(2),
            DenseVector(vec![0.03, 0.06]),
            DenseMatrix::zeros(2, 2),
        )
        .unwrap();
        let x = [0.25, 0.75];
        let v = portfolio_stage_value(&x, &set, Direction::Inf).unwrap();
        assert!((v - piecewise_utility(0.25 * 0.03 + 0.75 * 0.06)).abs() < 1e-9);
    }

    #[test]
    fn deterministic_wealth_without_noise() {
        let cfg = PortfolioConfig { variance: 0.0, ..small() };
        let s = simulate_wealth(&[1.0, 0.0], &[1.0, 0.0], &cfg, 1.3, 0.0, 5, 9).unwrap();
        assert!((s.mean - 106.09).abs() < 1e-9);
        assert!(s.std.abs() < 1e-9 && (s.worst - s.mean).abs() < 1e-9);
        let literal = PortfolioConfig { gross_returns: false, ..cfg };
        let s = simulate_wealth(&[0.5, 0.5], &[0.0, 1.0], &literal, 0.0, 0.0, 3, 1).unwrap();
        assert!((s.mean - 100.0 * 0.045 * 0.06).abs() < 1e-9);
    }

    #[test]
    fn offsets_span_the_box() {
        let cfg = small();
        let o = cfg.support_offsets();
        assert_eq!(o.len(), 9);
        let w = 3.0 * 0.005f64.sqrt();
        assert!((o[0][0] + w).abs() < 1e-15 && (o[8][1] - w).abs() < 1e-15);
        assert_eq!(o[4].0, vec![0.0, 0.0]);
    }

    #[test]
    fn no_time_correlation_models_agree() {
        let cfg = small();
        let cu = solve_portfolio(&cfg, 0.0, 0.0, PortfolioModel::Cu).unwrap();
        let dro = solve_portfolio(&cfg, 0.0, 0.0, PortfolioModel::Dro).unwrap();
        assert!((cu.objective - dro.objective).abs() < 1e-7);
        assert_eq!(cu.x1, dro.x1);
    }
}

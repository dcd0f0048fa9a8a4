//! Seeded random instances. Each generator is a pure function of
//! (seed, index), so suites can be rerun cell by cell.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cu_sets::{
    EllipsoidalCuProcess, MatrixCuProcess, MomentAmbiguityProcess, MomentProcessParts, PolyhedralCuProcess, PolyhedralStage,
    SupportMode,
};
use crate::dro::CostSpec;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::ro::{AroEllipsoidalInstance, AroPolyhedralInstance};
use crate::rng;

const CENTER_TAG: u64 = 11;
const MATRIX_TAG: u64 = 12;
const POLY_TAG: u64 = 13;
const ARO_POLY_TAG: u64 = 14;
const ARO_ELL_TAG: u64 = 15;
const MOMENT_TAG: u64 = 16;

fn uniform(g: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    g.gen_range(lo..hi)
}

fn vector(g: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DenseVector {
    DenseVector((0..n).map(|_| uniform(g, lo, hi)).collect())
}

fn matrix(g: &mut ChaCha8Rng, r: usize, c: usize, lo: f64, hi: f64) -> DenseMatrix {
    let data: Vec<f64> = (0..r * c).map(|_| uniform(g, lo, hi)).collect();
    DenseMatrix::new(r, c, data).expect("shape")
}

/// Lower-triangular factor with diagonal in [0.2, 1.2].
fn lower_factor(g: &mut ChaCha8Rng, m: usize) -> DenseMatrix {
    let mut l = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            l[(i, j)] = if i == j { uniform(g, 0.2, 1.2) } else { uniform(g, -0.5, 0.5) };
        }
    }
    l
}

/// Center-dependent ellipsoidal process and a decision, coefficients in [−1, 1].
pub fn center_instance(seed: u64, index: usize, m: usize, periods: usize) -> (EllipsoidalCuProcess, Vec<DenseVector>) {
    let mut g = rng::stream(seed, &[CENTER_TAG, index as u64, m as u64, periods as u64]);
    let mu1 = vector(&mut g, m, -2.0, 2.0);
    let radii = (0..periods).map(|_| uniform(&mut g, 0.0, 2.0)).collect();
    let chol = (0..periods).map(|_| lower_factor(&mut g, m)).collect();
    let a = (0..periods - 1).map(|_| matrix(&mut g, m, m, -1.0, 1.0)).collect();
    let f = (0..periods - 1).map(|_| matrix(&mut g, m, m, -1.0, 1.0)).collect();
    let c = (0..periods - 1).map(|_| vector(&mut g, m, -1.0, 1.0)).collect();
    let x = (0..periods).map(|_| vector(&mut g, m, -2.0, 2.0)).collect();
    (EllipsoidalCuProcess::new(mu1, radii, chol, a, f, c).expect("generated shapes"), x)
}

/// Scalar covariance-dependent process (m = 1).
pub fn matrix_instance(seed: u64, index: usize, periods: usize) -> (MatrixCuProcess, Vec<DenseVector>) {
    let mut g = rng::stream(seed, &[MATRIX_TAG, index as u64, periods as u64]);
    let s = |v: f64| DenseMatrix::from_rows(&[vec![v]]).expect("1x1");
    let means = (0..periods).map(|_| vector(&mut g, 1, -1.0, 1.0)).collect();
    let radii = (0..periods).map(|_| uniform(&mut g, 0.1, 1.5)).collect();
    let sigma1 = s(uniform(&mut g, 0.2, 2.0));
    let a = (0..periods - 1).map(|_| uniform(&mut g, 0.2, 1.5)).collect();
    let f = (0..periods - 1).map(|_| uniform(&mut g, 0.0, 1.0)).collect();
    let c = (0..periods - 1).map(|_| s(uniform(&mut g, 0.0, 1.0))).collect();
    let x = (0..periods).map(|_| vector(&mut g, 1, -2.0, 2.0)).collect();
    (MatrixCuProcess::new(means, radii, sigma1, a, f, c).expect("generated shapes"), x)
}

/// Bounded polyhedral process: box rows plus up to `max_rows − 2m` random
/// rows per stage, with offsets keeping the origin feasible for every
/// admissible previous realization.
pub fn polyhedral_instance(
    seed: u64,
    index: usize,
    m: usize,
    periods: usize,
    max_rows: usize,
) -> (PolyhedralCuProcess, Vec<DenseVector>) {
    let mut g = rng::stream(seed, &[POLY_TAG, index as u64, m as u64, periods as u64]);
    let extra_cap = max_rows.saturating_sub(2 * m);
    let mut stages = Vec::with_capacity(periods);
    // bound on |d_{t−1}| componentwise
    let mut prev_bound = 0.0f64;
    for t in 0..periods {
        let extra = if extra_cap == 0 { 0 } else { g.gen_range(0..=extra_cap) };
        let rows = 2 * m + extra;
        let mut normals: Vec<Vec<f64>> = Vec::with_capacity(rows);
        for i in 0..m {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            normals.push(e.clone());
            e[i] = -1.0;
            normals.push(e);
        }
        for _ in 0..extra {
            normals.push(vector(&mut g, m, -1.0, 1.0).0);
        }
        let delta = if t == 0 { DenseMatrix::zeros(rows, m) } else { matrix(&mut g, rows, m, -0.5, 0.5) };
        let mut g_vec = Vec::with_capacity(rows);
        let mut bound = 0.0f64;
        for (r, _) in normals.iter().enumerate() {
            let spread: f64 = delta.row(r).iter().map(|v| v.abs()).sum::<f64>() * prev_bound;
            let b = uniform(&mut g, 0.5, 1.5);
            g_vec.push(-(b + spread));
            if r < 2 * m {
                bound = bound.max(b + 2.0 * spread);
            }
        }
        prev_bound = bound;
        stages.push(PolyhedralStage {
            g_mat: DenseMatrix::from_rows(&normals).expect("rows"),
            g_vec: DenseVector(g_vec),
            delta,
        });
    }
    let x = (0..periods).map(|_| vector(&mut g, m, -2.0, 2.0)).collect();
    (PolyhedralCuProcess::new(stages).expect("generated process is bounded"), x)
}

fn box_rows(g: &mut ChaCha8Rng, m: usize) -> (DenseMatrix, DenseVector) {
    let mut rows = Vec::with_capacity(2 * m);
    let mut rhs = Vec::with_capacity(2 * m);
    for i in 0..m {
        let lo = uniform(g, -1.5, -0.1);
        let hi = uniform(g, 0.1, 1.5);
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        rows.push(e.clone());
        rhs.push(lo);
        e[i] = -1.0;
        rows.push(e);
        rhs.push(-hi);
    }
    (DenseMatrix::from_rows(&rows).expect("rows"), DenseVector(rhs))
}

/// Two-period polyhedral ARO data with box-shaped base sets, dims in 1..=max_dim.
pub fn aro_polyhedral_instance(seed: u64, index: usize, max_dim: usize) -> AroPolyhedralInstance {
    let mut g = rng::stream(seed, &[ARO_POLY_TAG, index as u64, max_dim as u64]);
    let d = |g: &mut ChaCha8Rng| g.gen_range(1..=max_dim);
    let (m1, m2, n1, n2, rows) = (d(&mut g), d(&mut g), d(&mut g), d(&mut g), d(&mut g));
    let (g1_mat, g1_vec) = box_rows(&mut g, m1);
    let (g2_mat, g2_vec) = box_rows(&mut g, m2);
    let with_first = g.gen_bool(0.5);
    let (a11, b1) = if with_first {
        let k = d(&mut g);
        (Some(matrix(&mut g, k, n1, -1.0, 1.0)), Some(matrix(&mut g, k, m1, -1.0, 1.0)))
    } else {
        (None, None)
    };
    AroPolyhedralInstance {
        a11,
        b1,
        a21: matrix(&mut g, rows, n1, -1.0, 1.0),
        a22: matrix(&mut g, rows, n2, -1.0, 1.0),
        b2: matrix(&mut g, rows, m2, -1.0, 1.0),
        delta1: matrix(&mut g, 2 * m2, m1, -0.5, 0.5),
        g1_mat,
        g1_vec,
        g2_mat,
        g2_vec,
        x2_rule: matrix(&mut g, n2, m1, -1.0, 1.0),
        x1: vector(&mut g, n1, -2.0, 2.0),
    }
}

/// Scalar ellipsoidal ARO data (m = 1) with two constraint rows.
pub fn aro_ellipsoidal_instance(seed: u64, index: usize) -> AroEllipsoidalInstance {
    let mut g = rng::stream(seed, &[ARO_ELL_TAG, index as u64]);
    let s = |g: &mut ChaCha8Rng, lo: f64, hi: f64| DenseMatrix::from_rows(&[vec![uniform(g, lo, hi)]]).expect("1x1");
    let rows = 2;
    AroEllipsoidalInstance {
        a21: matrix(&mut g, rows, 1, -1.0, 1.0),
        a22: matrix(&mut g, rows, 1, -1.0, 1.0),
        b2: matrix(&mut g, rows, 1, -1.0, 1.0),
        x2_rule: matrix(&mut g, 1, 1, -1.0, 1.0),
        x1: vector(&mut g, 1, -2.0, 2.0),
        mu1: vector(&mut g, 1, -1.0, 1.0),
        l1: s(&mut g, 0.2, 1.5),
        l2: s(&mut g, 0.2, 1.5),
        r1: uniform(&mut g, 0.0, 2.0),
        r2: uniform(&mut g, 0.0, 2.0),
        a2: s(&mut g, -1.0, 1.0),
        f2: s(&mut g, -1.0, 1.0),
        c2: vector(&mut g, 1, -0.5, 0.5),
    }
}

fn sorted_points(g: &mut ChaCha8Rng, k: usize) -> Vec<DenseVector> {
    let mut v: Vec<f64> = (0..k).map(|_| uniform(g, -2.0, 2.0)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v.into_iter().map(|p| DenseVector(vec![p])).collect()
}

fn stage_cost(g: &mut ChaCha8Rng) -> CostSpec {
    let x = DenseVector(vec![uniform(g, -1.5, 1.5)]);
    let pieces: Vec<[f64; 2]> = (0..g.gen_range(1..=3)).map(|_| [uniform(g, -1.0, 1.0), uniform(g, -0.5, 0.5)]).collect();
    match g.gen_range(0..3) {
        0 => CostSpec::Linear { x },
        1 => CostSpec::PiecewiseMax { x, pieces },
        _ => CostSpec::PiecewiseMin { x, pieces },
    }
}

/// Scalar two-period moment process with fixed supports of 2..=max_support
/// points and random stage costs. Draws are repeated until every stage set
/// is feasible for every conditioning point.
pub fn moment_instance(seed: u64, index: usize, max_support: usize) -> Result<(MomentAmbiguityProcess, Vec<CostSpec>)> {
    let max_support = max_support.max(2);
    for attempt in 0..64u64 {
        let mut g = rng::stream(seed, &[MOMENT_TAG, index as u64, attempt]);
        let k1 = g.gen_range(2..=max_support);
        let k2 = g.gen_range(2..=max_support);
        let s1 = sorted_points(&mut g, k1);
        let s2 = sorted_points(&mut g, k2);
        let (lo1, hi1) = (s1[0][0], s1[k1 - 1][0]);
        let mu1 = DenseVector(vec![uniform(&mut g, lo1, hi1 + 1e-12)]);
        let a = uniform(&mut g, -0.5, 0.5);
        let mid2 = 0.5 * (s2[0][0] + s2[k2 - 1][0]);
        let b = uniform(&mut g, mid2 - 0.3, mid2 + 0.3);
        let parts = MomentProcessParts {
            support_mode: SupportMode::Fixed,
            supports: vec![s1, s2],
            mu1,
            cond_a: vec![DenseMatrix::from_rows(&[vec![a]]).expect("1x1")],
            cond_b: vec![DenseVector(vec![b])],
            delta: vec![vector(&mut g, 1, 0.2, 1.0), vector(&mut g, 1, 0.2, 1.0)],
            anchors: None,
            sigma_caps: (0..2).map(|_| DenseMatrix::from_rows(&[vec![uniform(&mut g, 1.0, 6.0)]]).expect("1x1")).collect(),
        };
        let costs = vec![stage_cost(&mut g), stage_cost(&mut g)];
        match MomentAmbiguityProcess::new(parts) {
            Ok(p) => return Ok((p, costs)),
            Err(Error::InfeasibleMomentSet { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NumericalFailure("no feasible moment instance within 64 draws".into()))
}

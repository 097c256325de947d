//! Numerical checks of the bounds and identities the methods rest on. Every
//! check reports the measured quantity next to the bound it must respect.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, UniformGrid};
use crate::linalg::{infinity_norm_inverse, normal_equations_solve};
use crate::spectral::{
    decay_bounds, impute_spectral, inverse_estimate_check, inverse_gap_sum, random_envelope_coefficients, verify_optimality_bound,
    AxisPolicy, DecayParams, WeightScheme,
};
use crate::variational::{
    affected_stencil_report, assemble_variational, centered_difference_matrix, inverse_operator_bound, solve_variational,
    VariationalConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckRow {
    fn at_most(name: &str, measured: f64, bound: f64, detail: String) -> Self {
        Self { name: name.into(), measured, bound, pass: measured <= bound, detail }
    }
}

/// Largest relative error of `Σ_k |e^{2πik/N} − 1|^{-2} = (N² − 1)/12` over `N ∈ [2, n_max]`.
pub fn sum_identity_error(n_max: usize) -> f64 {
    (2..=n_max)
        .map(|n| {
            let exact = ((n * n - 1) as f64) / 12.0;
            (inverse_gap_sum(n) - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseBoundCase {
    pub n: usize,
    pub k: usize,
    pub inverse_norm: f64,
    pub bound: f64,
}

/// `‖A⁻¹‖∞` of the centred `2k`-difference matrix against its Euler-number
/// bound for every `k ≤ k_max`, `n ≤ n_max`.
pub fn inverse_bound_sweep(k_max: usize, n_max: usize) -> Result<Vec<InverseBoundCase>> {
    let cases: Vec<(usize, usize)> = (1..=k_max).flat_map(|k| (1..=n_max).map(move |n| (k, n))).collect();
    cases
        .into_par_iter()
        .map(|(k, n)| {
            let a = centered_difference_matrix(n, k)?;
            Ok(InverseBoundCase { n, k, inverse_norm: infinity_norm_inverse(&a)?, bound: inverse_operator_bound(n, k)?.0 })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseDraw {
    pub dim: usize,
    pub points: usize,
    pub order: usize,
    pub measured: f64,
    pub bound: f64,
}

/// Random coefficient sets inside the decay envelope, cycling through
/// `d ∈ {1, 2}`, `N ≤ 32` and `M ∈ {3, 4, 5}`.
pub fn inverse_estimate_draws(count: usize, seed: u64) -> Result<Vec<InverseDraw>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes_1d = [8, 16, 24, 32];
    let sizes_2d = [8, 12, 16, 32];
    (0..count)
        .map(|i| {
            let dim = 1 + i % 2;
            let order = 3 + (i / 2) % 3;
            let points = if dim == 1 { sizes_1d[(i / 6) % 4] } else { sizes_2d[(i / 6) % 4] };
            let c = rng.random_range(0.5..4.0);
            let grid = UniformGrid::periodic(dim, points)?;
            let coeffs = random_envelope_coefficients(&grid, order, c, &mut rng);
            let r = inverse_estimate_check(&coeffs, &grid, order, c)?;
            Ok(InverseDraw { dim, points, order, measured: r.measured, bound: r.bound })
        })
        .collect()
}

/// Smooth periodic test function whose spectrum obeys the decay envelope
/// off the axes, plus unconstrained axis modes.
pub fn envelope_function(grid: &UniformGrid, params: &DecayParams, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = grid.points_per_axis();
    let coeffs = random_envelope_coefficients(grid, params.order, params.derivative_bound, rng);
    let body = crate::dft::inverse(&coeffs, n, grid.dim());
    let shifts: Vec<f64> = (0..grid.dim()).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            body[i].re + x.iter().zip(&shifts).map(|(xi, s)| (xi + s).sin()).sum::<f64>()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityCase {
    pub dim: usize,
    pub points: usize,
    pub unknowns: usize,
    /// Largest `|c*_k| / (N^{d/2} e_k)`.
    pub worst_ratio: f64,
}

/// Imputes disk holes in envelope functions with prescribed-decay weights
/// and checks every coefficient of the completed grid against `N^{d/2} e_k`.
pub fn optimality_instances(count: usize, seed: u64) -> Result<Vec<OptimalityCase>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let (dim, points) = if i % 2 == 0 { (1, 32) } else { (2, 16) };
            let grid = UniformGrid::periodic(dim, points)?;
            let params = DecayParams::new(3 + i % 3, 1e-3, rng.random_range(0.5..2.0))?;
            let values = envelope_function(&grid, &params, &mut rng);
            let centre: Vec<f64> = (0..dim).map(|_| rng.random_range(0.3 * points as f64..0.7 * points as f64)).collect();
            let radius = rng.random_range(1.5..0.2 * points as f64);
            let full = GridFunction::new(grid.clone(), values, crate::grid::GridMask::all_known(grid.len()))?;
            let gf = full.with_unknown(|f| {
                let m = grid.multi_index(f);
                m.iter().zip(&centre).map(|(&a, c)| (a as f64 - c).powi(2)).sum::<f64>().sqrt() < radius
            });
            let (done, _) = impute_spectral(&gf, &params, WeightScheme::PrescribedDecay, AxisPolicy::Unpenalized)?;
            let report = verify_optimality_bound(&done, &decay_bounds(&grid, &params))?;
            Ok(OptimalityCase { dim, points, unknowns: gf.mask().unknown_count(), worst_ratio: report.worst_ratio })
        })
        .collect()
}

fn box_hole(grid: &UniformGrid, lo: usize, hi: usize) -> impl Fn(usize) -> bool + '_ {
    move |f| grid.multi_index(f).iter().all(|&m| (lo..hi).contains(&m))
}

/// Largest error when imputing a box hole in a polynomial of total degree
/// `2k − 1`, over `k ∈ {1, 2, 3}` and `d ∈ {1, 2}`.
pub fn polynomial_reproduction_error() -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 1..=3 {
        for d in 1..=2 {
            let n = 16 + 2 * k;
            let grid = UniformGrid::new(d, n, vec![-1.0; d], 2.0)?;
            let deg = 2 * k - 1;
            let gf = GridFunction::from_fn(grid.clone(), |x| {
                let s: f64 = x.iter().enumerate().map(|(a, v)| (a as f64 + 0.5) * v).sum();
                0.3 + s.powi(deg as i32) - 0.7 * x[0].powi(deg as i32 - (deg > 1) as i32)
            })
            .with_unknown(box_hole(&grid, n / 2 - 2, n / 2 + 2));
            let (out, _) = solve_variational(&assemble_variational(&gf, &VariationalConfig::new(k)?)?)?;
            let exact = GridFunction::from_fn(grid.clone(), |x| {
                let s: f64 = x.iter().enumerate().map(|(a, v)| (a as f64 + 0.5) * v).sum();
                0.3 + s.powi(deg as i32) - 0.7 * x[0].powi(deg as i32 - (deg > 1) as i32)
            });
            for f in gf.mask().unknown_indices() {
                worst = worst.max((out.raw_values()[f] - exact.raw_values()[f]).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub dim: usize,
    pub k: usize,
    pub unknowns: usize,
    /// `‖u_sparse − u_dense‖∞ / ‖u_dense‖∞`.
    pub relative_difference: f64,
    pub j_completed: f64,
    pub j_exact: f64,
}

/// Random smooth data with random holes (at most 200 unknowns): the sparse
/// solve against dense normal equations, and the completed energy against
/// the energy of the exact data.
pub fn oracle_instances(count: usize, seed: u64) -> Result<Vec<OracleCase>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + i as u64));
            let dim = 1 + i % 2;
            let k = 1 + (i / 2) % 3;
            let n = if dim == 1 { 60 } else { 26 };
            let grid = UniformGrid::periodic(dim, n)?;
            let freq: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
            let phase: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..PI)).collect();
            let exact = GridFunction::from_fn(grid.clone(), |x| {
                x.iter().zip(&freq).zip(&phase).map(|((v, f), p)| (f * v + p).sin()).product::<f64>() + 0.1 * x[0]
            });
            let centre: Vec<f64> = (0..dim).map(|_| rng.random_range(0.4 * n as f64..0.6 * n as f64)).collect();
            let radius = if dim == 1 { rng.random_range(1.0..8.0) } else { rng.random_range(1.0..5.0) };
            let gf = exact.with_unknown(|f| {
                let m = grid.multi_index(f);
                m.iter().zip(&centre).map(|(&a, c)| (a as f64 - c).powi(2)).sum::<f64>().sqrt() < radius
            });
            let unknowns = gf.mask().unknown_count();
            if unknowns == 0 || unknowns > 200 {
                return Err(Error::OutOfRange(format!("instance {i} has {unknowns} unknowns")));
            }
            let patch = assemble_variational(&gf, &VariationalConfig::new(k)?)?;
            let (out, _) = solve_variational(&patch)?;
            let dense = normal_equations_solve(&patch.matrix.to_dense(), &patch.rhs)?;
            let scale = dense.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let diff = patch
                .unknown
                .iter()
                .zip(&dense)
                .map(|(&f, v)| (out.raw_values()[f] - v).abs())
                .fold(0.0, f64::max);
            let report = affected_stencil_report(&patch, &out, Some(&exact))?;
            Ok(OracleCase {
                dim,
                k,
                unknowns,
                relative_difference: diff / scale,
                j_completed: report.j_completed,
                j_exact: report.j_exact.unwrap_or(f64::NAN),
            })
        })
        .collect()
}

/// The full suite with default sizes.
pub fn run_suite(seed: u64) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    rows.push(CheckRow::at_most(
        "sum identity (N = 2..64), max relative error",
        sum_identity_error(64),
        1e-10,
        "Σ|e^{2πik/N} − 1|^{-2} against (N² − 1)/12".into(),
    ));

    let sweep = inverse_bound_sweep(3, 40)?;
    let worst = sweep.iter().max_by(|a, b| (a.inverse_norm / a.bound).total_cmp(&(b.inverse_norm / b.bound))).unwrap();
    rows.push(CheckRow::at_most(
        "centred difference inverse (k ≤ 3, n ≤ 40), max ‖A⁻¹‖∞ / bound",
        worst.inverse_norm / worst.bound,
        1.0 + 1e-12,
        format!("worst at k = {}, n = {}", worst.k, worst.n),
    ));
    let first = sweep.iter().find(|c| c.k == 1 && c.n == 1).unwrap();
    rows.push(CheckRow::at_most(
        "centred difference inverse at k = 1, n = 1, |‖A⁻¹‖∞ − 0.5|",
        (first.inverse_norm - 0.5).abs().max((first.bound - 0.5).abs()),
        1e-15,
        format!("‖A⁻¹‖∞ = {}, bound = {}", first.inverse_norm, first.bound),
    ));

    let draws = inverse_estimate_draws(20, seed)?;
    let worst = draws.iter().map(|d| d.measured / d.bound).fold(0.0, f64::max);
    rows.push(CheckRow::at_most(
        "inverse estimate (20 draws), max measured / bound",
        worst,
        1.0 + 1e-12,
        "d ∈ {1, 2}, N ≤ 32, M ∈ {3, 4, 5}".into(),
    ));

    let opt = optimality_instances(10, seed)?;
    rows.push(CheckRow::at_most(
        "optimality bound (10 instances), max |c*_k| / (N^{d/2} e_k)",
        opt.iter().map(|c| c.worst_ratio).fold(0.0, f64::max),
        1.0,
        "prescribed-decay weights, d ∈ {1, 2}".into(),
    ));

    rows.push(CheckRow::at_most(
        "polynomial reproduction (degree ≤ 2k − 1), max error",
        polynomial_reproduction_error()?,
        1e-8,
        "k ∈ {1, 2, 3}, d ∈ {1, 2}".into(),
    ));

    let oracle = oracle_instances(20, seed)?;
    rows.push(CheckRow::at_most(
        "sparse solve against dense normal equations (20 instances), max relative difference",
        oracle.iter().map(|c| c.relative_difference).fold(0.0, f64::max),
        1e-8,
        "at most 200 unknowns".into(),
    ));
    rows.push(CheckRow::at_most(
        "completed energy against exact energy (20 instances), max J(u_h) − J(f)",
        oracle.iter().map(|c| c.j_completed - c.j_exact * (1.0 + 1e-10)).fold(f64::NEG_INFINITY, f64::max),
        0.0,
        "J summed over the affected stencils".into(),
    ));
    Ok(rows)
}

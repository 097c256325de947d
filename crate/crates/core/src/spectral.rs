//! Imputation by weighted least squares on DFT coefficients.
//!
//! The unknown grid values minimise `Σ_k w_k |c_k|²`, where `c_k` is the
//! non-normalized DFT of the completed grid. Weights come either from the
//! decay bound of a function with bounded mixed derivatives (`w_k = 1/r_k²`)
//! or from the 0/1 hyperbolic-corner mask `r_k < C`.

use std::f64::consts::PI;

use faer::Mat;
use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, UniformGrid};
use crate::linalg::{SvdLeastSquares, DEFAULT_RANK_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// Smoothness order `M`.
    pub order: usize,
    /// Threshold `C` of the hyperbolic mask.
    pub c_bound: f64,
    /// Stands for `‖D^{(M,…,M)} f‖∞`.
    pub derivative_bound: f64,
}

impl DecayParams {
    pub fn new(order: usize, c_bound: f64, derivative_bound: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::OutOfRange("smoothness order M must be at least 1".into()));
        }
        if !(c_bound > 0.0 && c_bound.is_finite()) {
            return Err(Error::OutOfRange(format!("C_bound must be positive, got {c_bound}")));
        }
        if !(derivative_bound > 0.0 && derivative_bound.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "derivative bound must be positive, got {derivative_bound}"
            )));
        }
        Ok(Self { order, c_bound, derivative_bound })
    }
}

impl Default for DecayParams {
    fn default() -> Self {
        Self { order: 8, c_bound: 1e-3, derivative_bound: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    PrescribedDecay,
    HyperbolicCorner,
}

/// Treatment of frequencies with some but not all `k_j = 0`, where the
/// decay bound is undefined. The constant mode is never penalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisPolicy {
    /// Weight 0 on every frequency touching an axis.
    Unpenalized,
    /// Hyperbolic scheme: weight 1. Prescribed decay: the bound restricted
    /// to the nonzero components, `N^d ∏_{k_j≠0} (2π/N)^M |e^{-2πik_j/N} − 1|^{-M}`.
    Penalized,
}

impl AxisPolicy {
    pub fn default_for(scheme: WeightScheme) -> Self {
        match scheme {
            WeightScheme::PrescribedDecay => AxisPolicy::Unpenalized,
            WeightScheme::HyperbolicCorner => AxisPolicy::Penalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralWeights {
    pub scheme: WeightScheme,
    pub axis_policy: AxisPolicy,
    pub points_per_axis: usize,
    pub dim: usize,
    /// Indexed like grid values: frequency multi-index in row-major order.
    pub weights: Vec<f64>,
}

impl SpectralWeights {
    pub fn penalized(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }
}

/// `|e^{-2πik/N} − 1| = 2|sin(πk/N)|`.
pub fn exp_gap(k: usize, n: usize) -> f64 {
    let k = (k % n).min(n - k % n);
    2.0 * (PI * k as f64 / n as f64).sin()
}

fn frequency_index(flat: usize, n: usize, d: usize) -> Vec<usize> {
    let mut k = vec![0; d];
    let mut f = flat;
    for a in (0..d).rev() {
        k[a] = f % n;
        f /= n;
    }
    k
}

/// `r_k = N^d (2π/N)^{Md} ‖D^{(M,…,M)}f‖∞ ∏_j |e^{-2πik_j/N} − 1|^{-M}`.
pub fn decay_bound(k: &[usize], grid: &UniformGrid, params: &DecayParams) -> Result<f64> {
    let n = grid.points_per_axis();
    if k.len() != grid.dim() || k.iter().any(|&kj| kj >= n) {
        return Err(Error::OutOfRange(format!("frequency {k:?} is not in [0, {n})^{}", grid.dim())));
    }
    if k.contains(&0) {
        return Err(Error::UndefinedFrequency(k.to_vec()));
    }
    Ok(partial_bound(k, n, grid.dim(), params))
}

fn partial_bound(k: &[usize], n: usize, d: usize, params: &DecayParams) -> f64 {
    let h = 2.0 * PI / n as f64;
    let m = params.order as i32;
    let mut r = (n as f64).powi(d as i32) * params.derivative_bound;
    for &kj in k.iter().filter(|&&kj| kj != 0) {
        r *= h.powi(m) * exp_gap(kj, n).powi(-m);
    }
    r
}

pub fn build_weights(
    grid: &UniformGrid,
    params: &DecayParams,
    scheme: WeightScheme,
    axis_policy: AxisPolicy,
) -> SpectralWeights {
    let (n, d) = (grid.points_per_axis(), grid.dim());
    let weights = (0..grid.len())
        .map(|flat| {
            let k = frequency_index(flat, n, d);
            let zeros = k.iter().filter(|&&kj| kj == 0).count();
            if zeros == d || (zeros > 0 && axis_policy == AxisPolicy::Unpenalized) {
                return 0.0;
            }
            match scheme {
                WeightScheme::PrescribedDecay => partial_bound(&k, n, d, params).powi(-2),
                WeightScheme::HyperbolicCorner if zeros > 0 => 1.0,
                WeightScheme::HyperbolicCorner => {
                    if partial_bound(&k, n, d, params) < params.c_bound {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();
    SpectralWeights { scheme, axis_policy, points_per_axis: n, dim: d, weights }
}

/// Rows are the real and imaginary parts of `√w_k c_k` for each penalized
/// frequency, interleaved; columns are the unknown grid points.
#[derive(Debug, Clone)]
pub struct SpectralSystem {
    pub input: GridFunction,
    pub weights: SpectralWeights,
    pub frequencies: Vec<usize>,
    pub unknown: Vec<usize>,
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    pub row_weights: Vec<f64>,
}

pub fn assemble_spectral(gf: &GridFunction, weights: &SpectralWeights) -> Result<SpectralSystem> {
    let grid = gf.grid();
    let (n, d) = (grid.points_per_axis(), grid.dim());
    if weights.points_per_axis != n || weights.dim != d {
        return Err(Error::InvalidGrid("weights were built for a different grid".into()));
    }
    let unknown = gf.mask().unknown_indices();
    if unknown.is_empty() {
        return Err(Error::NothingToImpute);
    }
    let frequencies = weights.penalized();
    if frequencies.is_empty() {
        return Err(Error::DegenerateSystem("every spectral weight is zero".into()));
    }

    let known_only: Vec<f64> = (0..grid.len())
        .map(|i| if gf.mask().is_known(i) { gf.raw_values()[i] } else { 0.0 })
        .collect();
    let cx = dft::forward_real(&known_only, n, d);

    let roots: Vec<(f64, f64)> = (0..n)
        .map(|m| {
            let t = 2.0 * PI * m as f64 / n as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let freq_idx: Vec<Vec<usize>> = frequencies.iter().map(|&f| frequency_index(f, n, d)).collect();
    let sqrt_w: Vec<f64> = frequencies.iter().map(|&f| weights.weights[f].sqrt()).collect();

    let rows = 2 * frequencies.len();
    let columns: Vec<Vec<f64>> = unknown
        .par_iter()
        .map(|&flat| {
            let pos = grid.multi_index(flat);
            let mut col = vec![0.0; rows];
            for (r, k) in freq_idx.iter().enumerate() {
                let phase = k.iter().zip(&pos).map(|(a, b)| a * b).sum::<usize>() % n;
                let (c, s) = roots[phase];
                col[2 * r] = sqrt_w[r] * c;
                col[2 * r + 1] = -sqrt_w[r] * s;
            }
            col
        })
        .collect();
    let matrix = Mat::from_fn(rows, unknown.len(), |i, j| columns[j][i]);

    let mut rhs = Vec::with_capacity(rows);
    let mut row_weights = Vec::with_capacity(rows);
    for (r, &f) in frequencies.iter().enumerate() {
        rhs.push(-sqrt_w[r] * cx[f].re);
        rhs.push(-sqrt_w[r] * cx[f].im);
        row_weights.push(weights.weights[f]);
        row_weights.push(weights.weights[f]);
    }

    Ok(SpectralSystem {
        input: gf.clone(),
        weights: weights.clone(),
        frequencies,
        unknown,
        matrix,
        rhs,
        row_weights,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    /// `σ_max / σ_rank` of the real split matrix.
    pub cond: f64,
    /// Square of `cond`, the conditioning of the normal matrix.
    pub cond_normal: f64,
    pub cost: f64,
    pub rank: usize,
    pub rank_deficient: bool,
    pub nullity: usize,
    pub rows: usize,
    pub cols: usize,
    pub residual_norm: f64,
    /// Largest `|c_k| / N^d` among frequencies of zero weight.
    pub max_unpenalized_coeff: f64,
    /// Largest `|c_k| / N^d` among frequencies of positive weight.
    pub max_penalized_coeff: f64,
    pub penalized_frequencies: usize,
}

/// Weighted cost `Σ w_k |c_k|²` of a completed grid.
pub fn spectral_cost(values: &[f64], weights: &SpectralWeights) -> f64 {
    let c = dft::forward_real(values, weights.points_per_axis, weights.dim);
    c.iter().zip(&weights.weights).map(|(c, w)| w * c.norm_sqr()).sum()
}

/// `|c_k| / N^d` for every frequency.
pub fn coefficient_magnitudes(gf: &GridFunction) -> Result<Vec<f64>> {
    let grid = gf.grid();
    let (n, d) = (grid.points_per_axis(), grid.dim());
    let scale = (n as f64).powi(d as i32);
    Ok(dft::forward_real(gf.complete_values()?, n, d).iter().map(|c| c.norm() / scale).collect())
}

pub fn solve_spectral(sys: &SpectralSystem) -> Result<(GridFunction, SpectralDiagnostics)> {
    solve_spectral_with_tolerance(sys, DEFAULT_RANK_TOLERANCE)
}

pub fn solve_spectral_with_tolerance(
    sys: &SpectralSystem,
    rank_tolerance: f64,
) -> Result<(GridFunction, SpectralDiagnostics)> {
    let svd = SvdLeastSquares::new(sys.matrix.as_ref(), rank_tolerance)?;
    let solution = svd.solve(&sys.rhs);
    let completed = sys.input.with_imputed(&sys.unknown, &solution)?;

    let residual_norm = crate::linalg::dense_mul_vec(&sys.matrix, &solution)
        .iter()
        .zip(&sys.rhs)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let values = completed.complete_values()?;
    let cost = spectral_cost(values, &sys.weights);
    let mags = coefficient_magnitudes(&completed)?;
    let mut max_pen = 0.0f64;
    let mut max_unpen = 0.0f64;
    for (m, w) in mags.iter().zip(&sys.weights.weights) {
        if *w > 0.0 {
            max_pen = max_pen.max(*m);
        } else {
            max_unpen = max_unpen.max(*m);
        }
    }
    let cols = sys.unknown.len();
    let rank = svd.rank();
    let diagnostics = SpectralDiagnostics {
        cond: svd.cond(),
        cond_normal: svd.cond().powi(2),
        cost,
        rank,
        rank_deficient: rank < cols,
        nullity: cols - rank,
        rows: sys.matrix.nrows(),
        cols,
        residual_norm,
        max_unpenalized_coeff: max_unpen,
        max_penalized_coeff: max_pen,
        penalized_frequencies: sys.frequencies.len(),
    };
    Ok((completed, diagnostics))
}

/// Convenience wrapper: weights, assembly and solve.
pub fn impute_spectral(
    gf: &GridFunction,
    params: &DecayParams,
    scheme: WeightScheme,
    axis_policy: AxisPolicy,
) -> Result<(GridFunction, SpectralDiagnostics)> {
    let weights = build_weights(gf.grid(), params, scheme, axis_policy);
    solve_spectral(&assemble_spectral(gf, &weights)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub holds: bool,
    /// Largest `|c_k| / (N^{d/2} e_k)` over checked frequencies.
    pub worst_ratio: f64,
    pub worst_frequency: Vec<usize>,
}

/// Checks `|c*_k| ≤ N^{d/2} e_k` for every frequency with all `k_j ≠ 0`.
pub fn verify_optimality_bound(completed: &GridFunction, e: &[f64]) -> Result<OptimalityReport> {
    let grid = completed.grid();
    let (n, d) = (grid.points_per_axis(), grid.dim());
    if e.len() != grid.len() {
        return Err(Error::InvalidGrid("one bound per frequency expected".into()));
    }
    let c = dft::forward_real(completed.complete_values()?, n, d);
    let scale = (n as f64).powf(d as f64 / 2.0);
    let mut worst = (0.0f64, Vec::new());
    for (flat, ck) in c.iter().enumerate() {
        let k = frequency_index(flat, n, d);
        if k.contains(&0) {
            continue;
        }
        let ratio = ck.norm() / (scale * e[flat]);
        if ratio > worst.0 || worst.1.is_empty() {
            worst = (ratio, k);
        }
    }
    Ok(OptimalityReport { holds: worst.0 <= 1.0, worst_ratio: worst.0, worst_frequency: worst.1 })
}

/// `e_k = r_k` on frequencies with all `k_j ≠ 0`, infinity elsewhere.
pub fn decay_bounds(grid: &UniformGrid, params: &DecayParams) -> Vec<f64> {
    let (n, d) = (grid.points_per_axis(), grid.dim());
    (0..grid.len())
        .map(|flat| {
            let k = frequency_index(flat, n, d);
            decay_bound(&k, grid, params).unwrap_or(f64::INFINITY)
        })
        .collect()
}

/// `Σ_{k=1}^{N-1} |e^{2πik/N} − 1|^{-2}`, which equals `(N² − 1)/12`.
pub fn inverse_gap_sum(n: usize) -> f64 {
    (1..n).map(|k| exp_gap(k, n).powi(-2)).sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InverseEstimate {
    pub bound: f64,
    pub measured: f64,
    pub pass: bool,
}

/// Synthesizes `f` from `coeffs` and compares the sup of its mixed divided
/// difference of order `M − 2` per axis against `(π²/3)^d (1 − 1/N²)^d C`.
/// Coefficients touching an axis are zeroed before synthesis.
pub fn inverse_estimate_check(
    coeffs: &[Complex64],
    grid: &UniformGrid,
    order: usize,
    c_const: f64,
) -> Result<InverseEstimate> {
    let (n, d) = (grid.points_per_axis(), grid.dim());
    if coeffs.len() != grid.len() {
        return Err(Error::InvalidGrid("one coefficient per frequency expected".into()));
    }
    if order < 2 {
        return Err(Error::OutOfRange("the inverse estimate needs M ≥ 2".into()));
    }
    let params = DecayParams { order, c_bound: 1.0, derivative_bound: c_const };
    let mut c = coeffs.to_vec();
    for (flat, ck) in c.iter_mut().enumerate() {
        let k = frequency_index(flat, n, d);
        if k.contains(&0) {
            *ck = Complex64::default();
            continue;
        }
        let bound = partial_bound(&k, n, d, &params);
        if ck.norm() > bound * (1.0 + 1e-12) {
            return Err(Error::HypothesisViolation { frequency: k, magnitude: ck.norm(), bound });
        }
    }
    let f = dft::inverse(&c, n, d);
    let m = order - 2;
    let h = 2.0 * PI / n as f64;
    let mut g = f;
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        for _ in 0..m {
            g = (0..g.len())
                .map(|flat| {
                    let i = (flat / stride) % n;
                    let next = flat - i * stride + ((i + 1) % n) * stride;
                    g[next] - g[flat]
                })
                .collect();
        }
    }
    let scale = h.powi((d * m) as i32);
    let measured = g.iter().map(|v| v.norm() / scale).fold(0.0, f64::max);
    let bound = (PI * PI / 3.0 * (1.0 - 1.0 / (n * n) as f64)).powi(d as i32) * c_const;
    Ok(InverseEstimate { bound, measured, pass: measured <= bound * (1.0 + 1e-12) })
}

/// Random coefficients inside the hypothesis envelope: independent moduli
/// uniform in `[0, r_k]` with uniform phases.
pub fn random_envelope_coefficients<R: Rng>(
    grid: &UniformGrid,
    order: usize,
    c_const: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let (n, d) = (grid.points_per_axis(), grid.dim());
    let params = DecayParams { order, c_bound: 1.0, derivative_bound: c_const };
    (0..grid.len())
        .map(|flat| {
            let k = frequency_index(flat, n, d);
            if k.contains(&0) {
                return Complex64::default();
            }
            let r = partial_bound(&k, n, d, &params) * rng.random::<f64>();
            Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridMask;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(order: usize) -> DecayParams {
        DecayParams { order, c_bound: 1e-3, derivative_bound: 1.0 }
    }

    #[test]
    fn decay_bound_examples() {
        let g = UniformGrid::periodic(1, 2).unwrap();
        assert!((decay_bound(&[1], &g, &params(1)).unwrap() - PI).abs() < 1e-14);
        let g = UniformGrid::periodic(1, 4).unwrap();
        assert!((decay_bound(&[2], &g, &params(1)).unwrap() - PI).abs() < 1e-14);
        assert!(matches!(decay_bound(&[0], &g, &params(1)), Err(Error::UndefinedFrequency(_))));
    }

    #[test]
    fn decay_bound_surface_shape() {
        let g = UniformGrid::periodic(2, 50).unwrap();
        let p = params(8);
        let corner = decay_bound(&[1, 1], &g, &p).unwrap();
        let mirror = decay_bound(&[49, 1], &g, &p).unwrap();
        let middle = decay_bound(&[25, 25], &g, &p).unwrap();
        assert!((corner - mirror).abs() <= 1e-12 * corner);
        for k1 in 1..50 {
            for k2 in 1..50 {
                let r = decay_bound(&[k1, k2], &g, &p).unwrap();
                assert!(r <= corner * (1.0 + 1e-12) && r >= middle * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn weight_examples() {
        let g = UniformGrid::periodic(1, 2).unwrap();
        let w = build_weights(&g, &params(1), WeightScheme::PrescribedDecay, AxisPolicy::Unpenalized);
        assert_eq!(w.weights[0], 0.0);
        assert!((w.weights[1] - 1.0 / (PI * PI)).abs() < 1e-15);
        let g = UniformGrid::periodic(2, 50).unwrap();
        for policy in [AxisPolicy::Unpenalized, AxisPolicy::Penalized] {
            for scheme in [WeightScheme::PrescribedDecay, WeightScheme::HyperbolicCorner] {
                let w = build_weights(&g, &params(8), scheme, policy);
                assert_eq!(w.weights[0], 0.0);
                assert!(w.weights.iter().all(|&x| x >= 0.0));
                if scheme == WeightScheme::HyperbolicCorner {
                    assert!(w.weights.iter().all(|&x| x == 0.0 || x == 1.0));
                }
            }
        }
    }

    #[test]
    fn hyperbolic_mask_leaves_low_frequency_corners_free() {
        let g = UniformGrid::periodic(2, 50).unwrap();
        let w = build_weights(&g, &params(8), WeightScheme::HyperbolicCorner, AxisPolicy::Unpenalized);
        let at = |a: usize, b: usize| w.weights[a * 50 + b];
        assert_eq!(at(1, 1), 0.0);
        assert_eq!(at(49, 49), 0.0);
        assert_eq!(at(1, 49), 0.0);
        assert_eq!(at(25, 25), 1.0);
        // The free set is a union of hyperbolic corners: monotone away from them.
        for a in 1..25 {
            for b in 1..25 {
                if at(a, b) == 1.0 {
                    assert_eq!(at(a + 1, b), 1.0);
                    assert_eq!(at(a, b + 1), 1.0);
                }
            }
        }
        let free_interior = (1..50).flat_map(|a| (1..50).map(move |b| (a, b))).filter(|&(a, b)| at(a, b) == 0.0).count();
        assert!(free_interior > 0 && free_interior < 100);
    }

    #[test]
    fn weights_are_conjugate_symmetric() {
        for (d, n) in [(1, 9), (2, 12), (2, 11)] {
            let g = UniformGrid::periodic(d, n).unwrap();
            for scheme in [WeightScheme::PrescribedDecay, WeightScheme::HyperbolicCorner] {
                for policy in [AxisPolicy::Unpenalized, AxisPolicy::Penalized] {
                    let w = build_weights(&g, &DecayParams { order: 3, c_bound: 0.5, derivative_bound: 1.0 }, scheme, policy);
                    for flat in 0..g.len() {
                        let k = frequency_index(flat, n, d);
                        let mirror: Vec<usize> = k.iter().map(|&kj| (n - kj) % n).collect();
                        assert_eq!(w.weights[flat], w.weights[g.flat_index(&mirror)]);
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_system_matches_calculus_oracle() {
        let g = UniformGrid::periodic(1, 4).unwrap();
        let gf = GridFunction::from_fn(g.clone(), |x| x[0].sin() + 0.3).with_unknown(|i| i == 2);
        let weights = SpectralWeights {
            scheme: WeightScheme::HyperbolicCorner,
            axis_policy: AxisPolicy::Penalized,
            points_per_axis: 4,
            dim: 1,
            weights: vec![0.0, 1.0, 1.0, 1.0],
        };
        let sys = assemble_spectral(&gf, &weights).unwrap();
        assert_eq!((sys.matrix.nrows(), sys.matrix.ncols()), (6, 1));
        let (out, diag) = solve_spectral(&sys).unwrap();

        let known: Vec<f64> = (0..4).map(|i| if i == 2 { 0.0 } else { gf.raw_values()[i] }).collect();
        let a = dft::forward_real(&known, 4, 1);
        let (mut num, mut den) = (0.0, 0.0);
        for k in 1..4 {
            let z = Complex64::from_polar(1.0, -2.0 * PI * (2 * k) as f64 / 4.0);
            num += (z.conj() * a[k]).re;
            den += z.norm_sqr();
        }
        let v = -num / den;
        assert!((out.raw_values()[2] - v).abs() < 1e-12);
        let cost = |t: f64| {
            let mut vals = known.clone();
            vals[2] = t;
            spectral_cost(&vals, &weights)
        };
        assert!(cost(v) <= cost(v + 1e-4) && cost(v) <= cost(v - 1e-4));
        assert!((diag.cost - cost(v)).abs() < 1e-12 * (1.0 + cost(v)));
        assert!((diag.residual_norm.powi(2) - diag.cost).abs() < 1e-10 * (1.0 + diag.cost));
    }

    #[test]
    fn errors_on_full_grid_and_zero_weights() {
        let g = UniformGrid::periodic(1, 8).unwrap();
        let full = GridFunction::from_fn(g.clone(), |x| x[0]);
        let w = build_weights(&g, &params(2), WeightScheme::PrescribedDecay, AxisPolicy::Unpenalized);
        assert!(matches!(assemble_spectral(&full, &w), Err(Error::NothingToImpute)));
        let zero = SpectralWeights { weights: vec![0.0; 8], ..w };
        let holey = full.with_unknown(|i| i == 3);
        assert!(matches!(assemble_spectral(&holey, &zero), Err(Error::DegenerateSystem(_))));
    }

    #[test]
    fn constant_data_extends_constantly() {
        let g = UniformGrid::periodic(2, 16).unwrap();
        let gf = GridFunction::from_fn(g.clone(), |_| 2.5).with_unknown(|i| {
            let m = g.multi_index(i);
            (m[0] as f64 - 8.0).hypot(m[1] as f64 - 8.0) < 3.5
        });
        let p = DecayParams { order: 4, c_bound: 1e-2, derivative_bound: 1.0 };
        let (out, diag) = impute_spectral(&gf, &p, WeightScheme::HyperbolicCorner, AxisPolicy::Penalized).unwrap();
        assert!(diag.cost < 1e-20);
        for v in out.complete_values().unwrap() {
            assert!((v - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn known_values_are_preserved() {
        let g = UniformGrid::periodic(2, 12).unwrap();
        let gf = GridFunction::from_fn(g.clone(), |x| (x[0] + 0.4).cos() * x[1].sin())
            .with_unknown(|i| g.multi_index(i).iter().all(|&j| (4..8).contains(&j)));
        let (out, _) =
            impute_spectral(&gf, &params(3), WeightScheme::PrescribedDecay, AxisPolicy::Unpenalized).unwrap();
        for i in gf.mask().known_indices() {
            assert_eq!(out.raw_values()[i].to_bits(), gf.raw_values()[i].to_bits());
        }
    }

    #[test]
    fn optimality_rejects_injected_spike() {
        let g = UniformGrid::periodic(1, 16).unwrap();
        let mut vals: Vec<f64> = (0..16).map(|i| (2.0 * PI * i as f64 / 16.0).sin()).collect();
        vals[5] += 50.0;
        let gf = GridFunction::new(g.clone(), vals, GridMask::all_known(16)).unwrap();
        let e = decay_bounds(&g, &params(2));
        assert!(!verify_optimality_bound(&gf, &e).unwrap().holds);
    }

    #[test]
    fn sum_identity_small_cases() {
        assert!((inverse_gap_sum(2) - 0.25).abs() < 1e-15);
        assert!((inverse_gap_sum(3) - 2.0 / 3.0).abs() < 1e-14);
        assert!((inverse_gap_sum(50) - 208.25).abs() < 1e-10 * 208.25);
    }

    #[test]
    fn inverse_estimate_examples() {
        let g = UniformGrid::periodic(1, 8).unwrap();
        let zero = vec![Complex64::default(); 8];
        let r = inverse_estimate_check(&zero, &g, 3, 1.0).unwrap();
        assert!(r.pass && r.measured == 0.0);

        let mut c = zero.clone();
        let p = DecayParams { order: 3, c_bound: 1.0, derivative_bound: 1.0 };
        c[1] = Complex64::new(decay_bound(&[1], &g, &p).unwrap(), 0.0);
        let r = inverse_estimate_check(&c, &g, 3, 1.0).unwrap();
        assert!(r.pass && r.measured > 0.0 && r.measured / r.bound < 1.0);

        c[1] *= 1.01;
        assert!(matches!(inverse_estimate_check(&c, &g, 3, 1.0), Err(Error::HypothesisViolation { .. })));
    }

    #[test]
    fn inverse_estimate_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (d, n, m) in [(1, 16, 3), (2, 8, 4), (2, 12, 5)] {
            let g = UniformGrid::periodic(d, n).unwrap();
            let c = random_envelope_coefficients(&g, m, 2.0, &mut rng);
            assert!(inverse_estimate_check(&c, &g, m, 2.0).unwrap().pass);
        }
    }
}

//! Least-squares machinery shared by the imputation back-ends.
//!
//! Dense problems are solved through a thin SVD, which yields the
//! minimum-norm solution, the numerical rank and the 2-norm condition number
//! in one pass. Sparse problems are factored with a sparse QR when they have
//! full column rank; the singular values used for rank and conditioning
//! diagnostics come from a dense copy, which is affordable at patch scale.

use faer::linalg::solvers::{DenseSolveCore, SolveLstsq};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

pub use faer::Mat as DenseMatrix;

/// Row-oriented sparse matrix, assembled one equation at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, rows: Vec::new() }
    }

    /// Appends a row; repeated columns are summed and exact zeros dropped.
    pub fn push_row(&mut self, mut entries: Vec<(usize, f64)>) {
        entries.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            assert!(c < self.ncols, "column {c} out of range");
            match merged.last_mut() {
                Some((last, acc)) if *last == c => *acc += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.rows.push(merged);
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(c, v)| v * x[c]).sum()).collect()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows(), self.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(i, c)] += v;
            }
        }
        m
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(c, v)| Triplet::new(i, c, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows(), self.ncols, &triplets)
            .map_err(|e| Error::Numerical(format!("sparse assembly failed: {e:?}")))
    }
}

#[derive(Debug, Clone)]
pub enum Matrix {
    Dense(Mat<f64>),
    Sparse(SparseMatrix),
}

impl Matrix {
    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.nrows(),
            Matrix::Sparse(s) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.ncols(),
            Matrix::Sparse(s) => s.ncols(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Matrix::Dense(m) => dense_mul_vec(m, x),
            Matrix::Sparse(s) => s.mul_vec(x),
        }
    }
}

pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LeastSquaresProblem {
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
    /// Singular values at or below `rank_tolerance · σ_max` count as zero.
    pub rank_tolerance: f64,
}

impl LeastSquaresProblem {
    pub fn new(matrix: Matrix, rhs: Vec<f64>) -> Self {
        Self { matrix, rhs, rank_tolerance: DEFAULT_RANK_TOLERANCE }
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = (self.matrix.nrows(), self.matrix.ncols());
        if m == 0 || n == 0 {
            return Err(Error::DegenerateSystem(format!("empty {m}x{n} system")));
        }
        if self.rhs.len() != m {
            return Err(Error::DegenerateSystem(format!(
                "right-hand side has {} entries for {m} rows",
                self.rhs.len()
            )));
        }
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite right-hand side".into()));
        }
        let finite = match &self.matrix {
            Matrix::Dense(a) => (0..n).all(|j| (0..m).all(|i| a[(i, j)].is_finite())),
            Matrix::Sparse(s) => s.rows.iter().flatten().all(|(_, v)| v.is_finite()),
        };
        if !finite {
            return Err(Error::Numerical("non-finite matrix entry".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub solution: Vec<f64>,
    pub rank: usize,
    /// `σ_max / σ_rank`; infinite for the zero matrix.
    pub cond: f64,
    pub residual_norm: f64,
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    pub zero_matrix: bool,
}

impl LsqSolution {
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.solution.len()
    }

    pub fn nullity(&self) -> usize {
        self.solution.len() - self.rank
    }
}

/// Minimum-norm least-squares solution with rank and conditioning.
pub fn lsq_solve(problem: &LeastSquaresProblem) -> Result<LsqSolution> {
    problem.validate()?;
    match &problem.matrix {
        Matrix::Dense(a) => {
            let svd = SvdLeastSquares::new(a.as_ref(), problem.rank_tolerance)?;
            let x = svd.solve(&problem.rhs);
            Ok(svd.finish(x, &problem.matrix, &problem.rhs))
        }
        Matrix::Sparse(s) => {
            let dense = s.to_dense();
            let singular_values = singular_values(&dense)?;
            let (rank, cond) = rank_and_cond(&singular_values, problem.rank_tolerance);
            let n = s.ncols();
            let x = if rank == n && s.nrows() >= n {
                sparse_qr_solve(s, &problem.rhs)?
            } else {
                SvdLeastSquares::new(dense.as_ref(), problem.rank_tolerance)?.solve(&problem.rhs)
            };
            let residual_norm = residual_norm(&problem.matrix, &x, &problem.rhs);
            Ok(LsqSolution {
                solution: x,
                rank,
                cond,
                residual_norm,
                zero_matrix: rank == 0,
                singular_values,
            })
        }
    }
}

/// A thin SVD kept around to solve for several right-hand sides.
pub struct SvdLeastSquares {
    u: Mat<f64>,
    v: Mat<f64>,
    singular_values: Vec<f64>,
    rank: usize,
    cond: f64,
}

impl SvdLeastSquares {
    pub fn new(a: faer::MatRef<'_, f64>, rank_tolerance: f64) -> Result<Self> {
        let svd = a
            .thin_svd()
            .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
        let singular_values: Vec<f64> = svd.S().column_vector().iter().copied().collect();
        let (rank, cond) = rank_and_cond(&singular_values, rank_tolerance);
        Ok(Self { u: svd.U().to_owned(), v: svd.V().to_owned(), singular_values, rank, cond })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cond(&self) -> f64 {
        self.cond
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `x = V_r Σ_r⁻¹ U_rᵀ b`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        assert_eq!(rhs.len(), m);
        let mut coeffs = vec![0.0; self.rank];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let col = self.u.col(j);
            let dot: f64 = (0..m).map(|i| col[i] * rhs[i]).sum();
            *c = dot / self.singular_values[j];
        }
        let mut x = vec![0.0; n];
        for (j, &c) in coeffs.iter().enumerate() {
            let col = self.v.col(j);
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += col[i] * c;
            }
        }
        x
    }

    fn finish(&self, x: Vec<f64>, a: &Matrix, rhs: &[f64]) -> LsqSolution {
        LsqSolution {
            residual_norm: residual_norm(a, &x, rhs),
            solution: x,
            rank: self.rank,
            cond: self.cond,
            singular_values: self.singular_values.clone(),
            zero_matrix: self.rank == 0,
        }
    }
}

fn rank_and_cond(singular_values: &[f64], tol: f64) -> (usize, f64) {
    let smax = singular_values.first().copied().unwrap_or(0.0);
    if smax <= 0.0 {
        return (0, f64::INFINITY);
    }
    let rank = singular_values.iter().take_while(|&&s| s > tol * smax).count();
    if rank == 0 {
        return (0, f64::INFINITY);
    }
    (rank, smax / singular_values[rank - 1])
}

fn sparse_qr_solve(a: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let qr = a
        .to_faer()?
        .sp_qr()
        .map_err(|e| Error::Numerical(format!("sparse QR failed: {e:?}")))?;
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = qr.solve_lstsq(&b);
    Ok((0..a.ncols()).map(|i| x[(i, 0)]).collect())
}

pub fn singular_values(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))
}

/// 2-norm condition number `σ_max / σ_min` over all singular values.
pub fn condition_number(a: &Mat<f64>) -> Result<f64> {
    let s = singular_values(a)?;
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => Ok(max / min),
        _ => Ok(f64::INFINITY),
    }
}

pub fn dense_mul_vec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

pub fn residual_norm(a: &Matrix, x: &[f64], rhs: &[f64]) -> f64 {
    a.mul_vec(x)
        .iter()
        .zip(rhs)
        .map(|(ax, b)| (ax - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Maximum absolute row sum of the explicit inverse.
pub fn infinity_norm_inverse(a: &Mat<f64>) -> Result<f64> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::DegenerateSystem("matrix must be square and nonempty".into()));
    }
    let s = singular_values(a)?;
    let smax = s[0];
    let smin = s[n - 1];
    if smax == 0.0 || smin <= n as f64 * f64::EPSILON * smax {
        return Err(Error::Singular);
    }
    let inv = a.partial_piv_lu().inverse();
    Ok((0..n)
        .map(|i| (0..n).map(|j| inv[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// Solves `AᵀA x = Aᵀb` by Cholesky. Squares the conditioning; kept as an
/// independent reference path.
pub fn normal_equations_solve(a: &Mat<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let ata = a.transpose() * a;
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let atb = a.transpose() * &b;
    let llt = ata.llt(Side::Lower).map_err(|_| Error::Singular)?;
    let x = faer::linalg::solvers::Solve::solve(&llt, &atb);
    Ok((0..a.ncols()).map(|i| x[(i, 0)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn identity_system() {
        let p = LeastSquaresProblem::new(
            Matrix::Dense(dense(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]])),
            vec![1.0, 2.0, 3.0],
        );
        let s = lsq_solve(&p).unwrap();
        for (a, b) in s.solution.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((s.cond - 1.0).abs() < 1e-14);
        assert_eq!(s.rank, 3);
        assert!(s.residual_norm < 1e-14);
    }

    #[test]
    fn rank_one_minimum_norm() {
        let p = LeastSquaresProblem::new(
            Matrix::Dense(dense(&[&[1.0, 1.0], &[1.0, 1.0]])),
            vec![2.0, 2.0],
        );
        let s = lsq_solve(&p).unwrap();
        assert_eq!(s.rank, 1);
        assert!(s.is_rank_deficient());
        assert!((s.solution[0] - 1.0).abs() < 1e-13 && (s.solution[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_matrix_is_flagged() {
        let p = LeastSquaresProblem::new(Matrix::Dense(Mat::zeros(3, 2)), vec![1.0, 2.0, 3.0]);
        let s = lsq_solve(&p).unwrap();
        assert!(s.zero_matrix);
        assert_eq!(s.rank, 0);
        assert_eq!(s.solution, vec![0.0, 0.0]);
    }

    #[test]
    fn random_instance_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Mat::from_fn(50, 20, |i, j| rng.random_range(-1.0..1.0) + if i == j { 3.0 } else { 0.0 });
        let b: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let oracle = normal_equations_solve(&a, &b).unwrap();
        let s = lsq_solve(&LeastSquaresProblem::new(Matrix::Dense(a.clone()), b.clone())).unwrap();
        let diff: Vec<f64> = s.solution.iter().zip(&oracle).map(|(x, y)| x - y).collect();
        assert!(norm(&diff) <= 1e-9 * norm(&oracle));
    }

    #[test]
    fn sparse_and_dense_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut sp = SparseMatrix::new(15);
        for i in 0..40 {
            let mut row = vec![(i % 15, 2.0)];
            for _ in 0..3 {
                row.push((rng.random_range(0..15), rng.random_range(-1.0..1.0)));
            }
            sp.push_row(row);
        }
        let b: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = lsq_solve(&LeastSquaresProblem::new(Matrix::Dense(sp.to_dense()), b.clone())).unwrap();
        let s = lsq_solve(&LeastSquaresProblem::new(Matrix::Sparse(sp), b)).unwrap();
        assert_eq!(d.rank, s.rank);
        for (x, y) in d.solution.iter().zip(&s.solution) {
            assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()));
        }
        assert!((d.cond - s.cond).abs() < 1e-8 * d.cond);
    }

    #[test]
    fn sparse_rank_deficient_falls_back_to_minimum_norm() {
        let mut sp = SparseMatrix::new(2);
        sp.push_row(vec![(0, 1.0), (1, 1.0)]);
        sp.push_row(vec![(0, 1.0), (1, 1.0)]);
        let s = lsq_solve(&LeastSquaresProblem::new(Matrix::Sparse(sp), vec![2.0, 2.0])).unwrap();
        assert_eq!(s.rank, 1);
        assert!((s.solution[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn minimum_norm_beats_null_space_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // 12x8 of rank 5: product of random 12x5 and 5x8
        let l = Mat::from_fn(12, 5, |_, _| rng.random_range(-1.0..1.0));
        let r = Mat::from_fn(5, 8, |_, _| rng.random_range(-1.0..1.0));
        let a = &l * &r;
        let svd = a.thin_svd().unwrap();
        let v = svd.V().to_owned();
        for _ in 0..100 {
            let b: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = lsq_solve(&LeastSquaresProblem::new(Matrix::Dense(a.clone()), b)).unwrap();
            assert_eq!(s.rank, 5);
            let base = norm(&s.solution);
            // null space spanned by the trailing right singular vectors
            let t: f64 = rng.random_range(0.01..1.0);
            let j = rng.random_range(5..8);
            let perturbed: Vec<f64> = (0..8).map(|i| s.solution[i] + t * v[(i, j)]).collect();
            assert!(norm(&perturbed) > base);
        }
    }

    #[test]
    fn backward_stability_proxy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = Mat::from_fn(30, 10, |i, j| rng.random_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 });
            let b: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = lsq_solve(&LeastSquaresProblem::new(Matrix::Dense(a.clone()), b.clone())).unwrap();
            assert!(s.cond < 1e6);
            let at = a.transpose().to_owned();
            let r: Vec<f64> = dense_mul_vec(&a, &s.solution).iter().zip(&b).map(|(x, y)| x - y).collect();
            let atr = dense_mul_vec(&at, &r);
            let atb = dense_mul_vec(&at, &b);
            assert!(norm(&atr) <= 1e-8 * norm(&atb));
        }
    }

    #[test]
    fn inverse_norms() {
        assert!((infinity_norm_inverse(&dense(&[&[2.0]])).unwrap() - 0.5).abs() < 1e-15);
        let v = infinity_norm_inverse(&dense(&[&[2.0, -1.0], &[-1.0, 2.0]])).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(v <= 9.0 / 8.0);
        let n = 10;
        let b = Mat::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        assert!(infinity_norm_inverse(&b).unwrap() <= 121.0 / 8.0);
        assert!(matches!(infinity_norm_inverse(&dense(&[&[1.0, 1.0], &[1.0, 1.0]])), Err(Error::Singular)));
    }

    #[test]
    fn empty_or_mismatched_problems_are_rejected() {
        let p = LeastSquaresProblem::new(Matrix::Dense(Mat::zeros(2, 2)), vec![1.0]);
        assert!(lsq_solve(&p).is_err());
        let p = LeastSquaresProblem::new(Matrix::Sparse(SparseMatrix::new(3)), vec![]);
        assert!(lsq_solve(&p).is_err());
    }
}

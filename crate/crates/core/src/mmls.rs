//! Manifold moving least squares: a weighted local affine frame followed by
//! a weighted polynomial fit over the frame, evaluated at its origin.

use std::collections::HashMap;

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridMask, UniformGrid};
use crate::linalg::{SvdLeastSquares, DEFAULT_RANK_TOLERANCE};

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform-cell bucket index for fixed-radius neighbour queries.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl SpatialIndex {
    pub fn new(points: &[Vec<f64>], cell: f64) -> Self {
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn key(p: &[f64], cell: f64) -> Vec<i64> {
        p.iter().map(|v| (v / cell).floor() as i64).collect()
    }

    /// Indices of points within `radius` of `x`, in increasing index order.
    pub fn within(&self, points: &[Vec<f64>], x: &[f64], radius: f64) -> Vec<usize> {
        let reach = (radius / self.cell).ceil() as i64;
        let n = x.len();
        let cells = (2 * reach + 1).checked_pow(n as u32).unwrap_or(i64::MAX);
        let r2 = radius * radius;
        let mut out: Vec<usize> = if cells as usize > self.buckets.len() {
            self.buckets.values().flatten().copied().filter(|&i| dist2(&points[i], x) <= r2).collect()
        } else {
            let base = Self::key(x, self.cell);
            let mut found = Vec::new();
            let mut offset = vec![-reach; n];
            loop {
                let key: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
                if let Some(bucket) = self.buckets.get(&key) {
                    found.extend(bucket.iter().copied().filter(|&i| dist2(&points[i], x) <= r2));
                }
                let mut axis = 0;
                loop {
                    if axis == n {
                        break;
                    }
                    if offset[axis] < reach {
                        offset[axis] += 1;
                        break;
                    }
                    offset[axis] = -reach;
                    axis += 1;
                }
                if axis == n {
                    break;
                }
            }
            found
        };
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone)]
pub struct PointCloud {
    ambient_dim: usize,
    intrinsic_dim: usize,
    points: Vec<Vec<f64>>,
    index: SpatialIndex,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, intrinsic_dim: usize) -> Result<Self> {
        let ambient_dim = points.first().map(Vec::len).unwrap_or(0);
        if intrinsic_dim == 0 || intrinsic_dim >= ambient_dim {
            return Err(Error::OutOfRange(format!(
                "intrinsic dimension {intrinsic_dim} must lie in 1..{ambient_dim}"
            )));
        }
        if let Some(i) = points.iter().position(|p| p.len() != ambient_dim) {
            return Err(Error::InvalidGrid(format!("point {i} has {} coordinates, expected {ambient_dim}", points[i].len())));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidGrid(format!("point {i} is not finite")));
        }
        if points.len() <= intrinsic_dim {
            return Err(Error::SamplingDeficiency(format!("{} points for a {intrinsic_dim}-manifold", points.len())));
        }
        let cell = Self::typical_spacing(&points, intrinsic_dim);
        let index = SpatialIndex::new(&points, cell);
        Ok(Self { ambient_dim, intrinsic_dim, points, index })
    }

    /// Rough spacing from the bounding box volume, used only to size buckets.
    fn typical_spacing(points: &[Vec<f64>], d: usize) -> f64 {
        let n = points[0].len();
        let mut extent = 0.0f64;
        for a in 0..n {
            let (lo, hi) = points.iter().fold((f64::MAX, f64::MIN), |(l, h), p| (l.min(p[a]), h.max(p[a])));
            extent = extent.max(hi - lo);
        }
        let s = extent / (points.len() as f64).powf(1.0 / d as f64);
        if s > 0.0 { 2.0 * s } else { 1.0 }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn within(&self, x: &[f64], radius: f64) -> Vec<usize> {
        self.index.within(&self.points, x, radius)
    }

    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let mut r = self.index.cell;
        loop {
            let near = self.within(x, r);
            if let Some(&best) = near.iter().min_by(|&&a, &&b| dist2(&self.points[a], x).total_cmp(&dist2(&self.points[b], x))) {
                return best;
            }
            r *= 2.0;
        }
    }

    /// Distance from `x` to the closest cloud point.
    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        dist2(&self.points[self.nearest_index(x)], x).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmlsConfig {
    /// Total degree `m` of the local polynomial.
    pub degree: usize,
    /// Neighbourhood radius `ρ`; weights vanish beyond it.
    pub radius: f64,
    /// Gaussian scale `σ` in `θ(r) = exp(-r²/σ²)`; `ρ/2` when absent.
    pub sigma: Option<f64>,
    pub max_iterations: usize,
    /// Origin movement, relative to `ρ`, below which the frame is accepted.
    pub frame_tolerance: f64,
    /// Relative eigen-gap below which the tangent space is flagged ill-defined.
    pub eigen_gap_tolerance: f64,
    pub rank_tolerance: f64,
}

impl MmlsConfig {
    pub fn new(degree: usize, radius: f64) -> Result<Self> {
        let cfg = Self {
            degree,
            radius,
            sigma: None,
            max_iterations: 100,
            frame_tolerance: 1e-13,
            eigen_gap_tolerance: 1e-3,
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::OutOfRange("polynomial degree must be at least 1".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::OutOfRange(format!("radius must be positive, got {}", self.radius)));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::OutOfRange(format!("sigma must be positive, got {s}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::OutOfRange("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(self.radius / 2.0)
    }

    pub fn weight(&self, r: f64) -> f64 {
        if r > self.radius {
            0.0
        } else {
            (-(r * r) / self.sigma().powi(2)).exp()
        }
    }
}

/// Number of monomials of total degree `≤ m` in `d` variables.
pub fn monomial_count(m: usize, d: usize) -> usize {
    let mut c = 1usize;
    for i in 1..=d {
        c = c * (m + i) / i;
    }
    c
}

fn exponents(m: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(d, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, m, &mut Vec::new(), &mut out);
    out.sort_by_key(|e| e.iter().sum::<usize>());
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentFrame {
    pub origin: Vec<f64>,
    /// `d` orthonormal vectors spanning the affine subspace's direction.
    pub basis: Vec<Vec<f64>>,
}

impl TangentFrame {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn to_local(&self, p: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = p.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        self.basis.iter().map(|b| dot(b, &diff)).collect()
    }

    pub fn to_ambient(&self, t: &[f64]) -> Vec<f64> {
        let mut out = self.origin.clone();
        for (b, &ti) in self.basis.iter().zip(t) {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += ti * bi;
            }
        }
        out
    }

    /// Orthogonal projection onto the affine subspace.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        self.to_ambient(&self.to_local(p))
    }

    /// `‖BᵀB − I‖∞` (max abs entry).
    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&self.basis[i], &self.basis[j]) - target).abs());
            }
        }
        worst
    }

    pub fn projector(&self) -> Mat<f64> {
        let n = self.origin.len();
        Mat::from_fn(n, n, |i, j| self.basis.iter().map(|b| b[i] * b[j]).sum())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameFit {
    pub frame: TangentFrame,
    /// Weighted covariance eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// `(λ_d − λ_{d+1}) / λ_1`.
    pub eigen_gap: f64,
    pub ill_defined_tangent: bool,
    pub iterations: usize,
    pub converged: bool,
    pub neighbors: usize,
}

fn weighted_neighbors(cloud: &PointCloud, q: &[f64], cfg: &MmlsConfig) -> (Vec<usize>, Vec<f64>) {
    let idx = cloud.within(q, cfg.radius);
    let w: Vec<f64> = idx.iter().map(|&i| cfg.weight(dist2(&cloud.points[i], q).sqrt())).collect();
    let keep: Vec<usize> = (0..idx.len()).filter(|&j| w[j] > 0.0).collect();
    (keep.iter().map(|&j| idx[j]).collect(), keep.iter().map(|&j| w[j]).collect())
}

fn weighted_pca(cloud: &PointCloud, idx: &[usize], w: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let n = cloud.ambient_dim;
    let d = cloud.intrinsic_dim;
    let total: f64 = w.iter().sum();
    let mut mean = vec![0.0; n];
    for (&i, &wi) in idx.iter().zip(w) {
        for (m, p) in mean.iter_mut().zip(&cloud.points[i]) {
            *m += wi * p;
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut cov = Mat::<f64>::zeros(n, n);
    for (&i, &wi) in idx.iter().zip(w) {
        let c: Vec<f64> = cloud.points[i].iter().zip(&mean).map(|(p, m)| p - m).collect();
        for a in 0..n {
            for b in 0..n {
                cov[(a, b)] += wi * c[a] * c[b] / total;
            }
        }
    }
    let evd = cov
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let vals: Vec<f64> = evd.S().column_vector().iter().rev().copied().collect();
    let u = evd.U();
    let basis = (0..d).map(|j| (0..n).map(|i| u[(i, n - 1 - j)]).collect()).collect();
    Ok((mean, basis, vals))
}

/// Fixed point: fit a weighted affine space with weights centred at the
/// current origin, then move the origin to the projection of `x`.
pub fn fit_local_frame(cloud: &PointCloud, x: &[f64], cfg: &MmlsConfig) -> Result<FrameFit> {
    cfg.validate()?;
    if x.len() != cloud.ambient_dim {
        return Err(Error::OutOfRange(format!("query has {} coordinates, cloud has {}", x.len(), cloud.ambient_dim)));
    }
    let d = cloud.intrinsic_dim;
    let mut q = x.to_vec();
    if weighted_neighbors(cloud, &q, cfg).0.len() < d + 1 {
        q = cloud.points[cloud.nearest_index(x)].clone();
    }
    let mut last = None;
    for it in 1..=cfg.max_iterations {
        let (idx, w) = weighted_neighbors(cloud, &q, cfg);
        if idx.len() < d + 1 {
            return Err(Error::SamplingDeficiency(format!(
                "{} weighted neighbours within radius {} (need at least {})",
                idx.len(),
                cfg.radius,
                d + 1
            )));
        }
        let (mean, basis, vals) = weighted_pca(cloud, &idx, &w)?;
        if vals[d - 1] <= 1e-14 * vals[0].max(f64::MIN_POSITIVE) {
            return Err(Error::SamplingDeficiency("neighbours are not affinely spanning".into()));
        }
        let frame = TangentFrame { origin: mean, basis };
        let next = frame.project(x);
        let moved = dist2(&next, &q).sqrt();
        let frame = TangentFrame { origin: next.clone(), basis: frame.basis };
        let gap = (vals[d - 1] - vals.get(d).copied().unwrap_or(0.0)) / vals[0];
        let fit = FrameFit {
            frame,
            eigen_gap: gap,
            ill_defined_tangent: gap < cfg.eigen_gap_tolerance,
            eigenvalues: vals,
            iterations: it,
            converged: moved <= cfg.frame_tolerance * cfg.radius,
            neighbors: idx.len(),
        };
        q = next;
        if fit.converged {
            return Ok(fit);
        }
        last = Some(fit);
    }
    Ok(last.expect("at least one iteration"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Projection {
    pub point: Vec<f64>,
    pub frame: FrameFit,
}

pub fn mmls_project(cloud: &PointCloud, x: &[f64], cfg: &MmlsConfig) -> Result<Projection> {
    let fit = fit_local_frame(cloud, x, cfg)?;
    let q = &fit.frame.origin;
    let d = cloud.intrinsic_dim;
    let (idx, w) = weighted_neighbors(cloud, q, cfg);
    let exps = exponents(cfg.degree, d);
    let monomials = exps.len();
    if idx.len() < monomials {
        return Err(Error::VandermondeDegenerate { monomials, neighbors: idx.len() });
    }
    let coords: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| fit.frame.to_local(&cloud.points[i]).iter().map(|t| t / cfg.radius).collect())
        .collect();
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let v = Mat::from_fn(idx.len(), monomials, |r, c| {
        sw[r] * exps[c].iter().zip(&coords[r]).map(|(&e, &t)| t.powi(e as i32)).product::<f64>()
    });
    let svd = SvdLeastSquares::new(v.as_ref(), cfg.rank_tolerance)?;
    if svd.rank() < monomials {
        return Err(Error::VandermondeDegenerate { monomials, neighbors: idx.len() });
    }
    let point = (0..cloud.ambient_dim)
        .map(|a| {
            let rhs: Vec<f64> = idx.iter().zip(&sw).map(|(&i, s)| s * (cloud.points[i][a] - q[a])).collect();
            q[a] + svd.solve(&rhs)[0]
        })
        .collect();
    Ok(Projection { point, frame: fit })
}

/// Projects every query independently, in parallel.
pub fn mmls_project_all(cloud: &PointCloud, queries: &[Vec<f64>], cfg: &MmlsConfig) -> Vec<Result<Projection>> {
    queries.par_iter().map(|x| mmls_project(cloud, x, cfg)).collect()
}

#[derive(Debug, Clone)]
pub struct ComponentGrids {
    /// One grid function per ambient coordinate.
    pub components: Vec<GridFunction>,
    pub failed_nodes: Vec<usize>,
    pub all_unknown: bool,
}

/// Lifts the admissible nodes of a chart mesh through the MMLS projection.
/// Mesh coordinates are frame coordinates; failures leave nodes unknown.
pub fn component_functions(
    frame: &TangentFrame,
    mesh: &UniformGrid,
    admissible: &[bool],
    cloud: &PointCloud,
    cfg: &MmlsConfig,
) -> Result<ComponentGrids> {
    if mesh.dim() != frame.dim() {
        return Err(Error::InvalidGrid("mesh dimension differs from the frame dimension".into()));
    }
    if admissible.len() != mesh.len() {
        return Err(Error::InvalidGrid("admissibility mask length differs from the mesh".into()));
    }
    let lifted: Vec<Option<Vec<f64>>> = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            if !admissible[i] {
                return None;
            }
            mmls_project(cloud, &frame.to_ambient(&mesh.point(i)), cfg).ok().map(|p| p.point)
        })
        .collect();
    let failed_nodes: Vec<usize> = (0..mesh.len()).filter(|&i| admissible[i] && lifted[i].is_none()).collect();
    let known: Vec<bool> = lifted.iter().map(Option::is_some).collect();
    let all_unknown = !known.iter().any(|&k| k);
    let components = (0..cloud.ambient_dim)
        .map(|a| {
            let values = lifted.iter().map(|p| p.as_ref().map_or(0.0, |p| p[a])).collect();
            GridFunction::new(mesh.clone(), values, GridMask::new(known.clone()))
        })
        .collect::<Result<_>>()?;
    Ok(ComponentGrids { components, failed_nodes, all_unknown })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * i as f64;
                vec![r * t.cos(), r * t.sin(), z]
            })
            .collect()
    }

    fn plane_cloud() -> PointCloud {
        let mut pts = Vec::new();
        for i in -10..=10 {
            for j in -10..=10 {
                let (u, v) = (i as f64 * 0.1, j as f64 * 0.1);
                pts.push(vec![u + 0.3 * v, v, 0.5 * u - 0.2 * v + 1.0]);
            }
        }
        PointCloud::new(pts, 2).unwrap()
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomial_count(5, 2), 21);
        assert_eq!(monomial_count(2, 1), 3);
        for (m, d) in [(3, 2), (4, 3), (1, 1)] {
            assert_eq!(exponents(m, d).len(), monomial_count(m, d));
        }
    }

    #[test]
    fn spatial_index_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec<f64>> = (0..500).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let idx = SpatialIndex::new(&pts, 0.2);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            for r in [0.1, 0.35, 3.0] {
                let brute: Vec<usize> = (0..pts.len()).filter(|&i| dist2(&pts[i], &x) <= r * r).collect();
                assert_eq!(idx.within(&pts, &x, r), brute);
            }
        }
    }

    #[test]
    fn plane_frame_and_projection() {
        let cloud = plane_cloud();
        let cfg = MmlsConfig::new(2, 0.45).unwrap();
        let x = vec![0.1, -0.05, 1.4];
        let fit = fit_local_frame(&cloud, &x, &cfg).unwrap();
        assert!(fit.frame.orthonormality_defect() < 1e-10);
        assert!(fit.eigenvalues[2].abs() < 1e-14);
        let normal = [0.5, -0.2 - 0.15, -1.0];
        for b in &fit.frame.basis {
            assert!(dot(b, &normal).abs() < 1e-10);
        }
        let p = mmls_project(&cloud, &x, &cfg).unwrap().point;
        // Orthogonal projection onto z = 0.5 u - 0.2 v + 1 written in x, y.
        let nn = dot(&normal, &normal);
        let off = dot(&normal, &[x[0], x[1], x[2] - 1.0]) / nn;
        for a in 0..3 {
            let want = x[a] - off * normal[a];
            assert!((p[a] - want).abs() < 1e-10, "{p:?}");
        }
    }

    #[test]
    fn too_few_neighbours_is_an_error() {
        let cloud = plane_cloud();
        let cfg = MmlsConfig::new(1, 0.05).unwrap();
        assert!(matches!(fit_local_frame(&cloud, &[0.03, 0.03, 1.0], &cfg), Err(Error::SamplingDeficiency(_))));
        let cfg = MmlsConfig::new(6, 0.15).unwrap();
        assert!(matches!(mmls_project(&cloud, &[0.0, 0.0, 1.0], &cfg), Err(Error::VandermondeDegenerate { .. })));
    }

    #[test]
    fn sphere_normal_near_pole() {
        let cloud = PointCloud::new(fibonacci_sphere(8000), 2).unwrap();
        let cfg = MmlsConfig::new(2, 0.12).unwrap();
        let x = vec![0.01, -0.02, 1.0];
        let fit = fit_local_frame(&cloud, &x, &cfg).unwrap();
        let radial: Vec<f64> = {
            let r = dot(&x, &x).sqrt();
            x.iter().map(|v| v / r).collect()
        };
        let tilt = fit.frame.basis.iter().map(|b| dot(b, &radial).abs()).fold(0.0, f64::max);
        assert!(tilt.asin().to_degrees() < 2.0);
    }

    #[test]
    fn sphere_projection_of_offset_points() {
        let cloud = PointCloud::new(fibonacci_sphere(5000), 2).unwrap();
        let cfg = MmlsConfig::new(2, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let mut u: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = dot(&u, &u).sqrt();
            u.iter_mut().for_each(|v| *v *= 1.05 / r);
            let p = mmls_project(&cloud, &u, &cfg).unwrap().point;
            assert!((dot(&p, &p).sqrt() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn polynomial_graph_is_reproduced() {
        // z = 0.3(u² + v²) − 0.4 u²v² is even in u and v, so the frame at the
        // origin is horizontal and the graph is a degree-4 polynomial over it.
        let mut pts = Vec::new();
        for i in -12..=12 {
            for j in -12..=12 {
                let (u, v) = (i as f64 * 0.05, j as f64 * 0.05);
                pts.push(vec![u, v, 0.3 * (u * u + v * v) - 0.4 * u * u * v * v]);
            }
        }
        let cloud = PointCloud::new(pts, 2).unwrap();
        let cfg = MmlsConfig::new(4, 0.5).unwrap();
        let p = mmls_project(&cloud, &[0.0, 0.0, 0.0], &cfg).unwrap().point;
        assert!(p.iter().all(|v| v.abs() < 1e-8), "{p:?}");
    }

    #[test]
    fn flat_components_are_affine() {
        let cloud = plane_cloud();
        let cfg = MmlsConfig::new(2, 0.45).unwrap();
        let frame = fit_local_frame(&cloud, &[0.0, 0.0, 1.0], &cfg).unwrap().frame;
        let mesh = UniformGrid::new(2, 7, vec![-0.3, -0.3], 0.7).unwrap();
        let mut admissible = vec![true; mesh.len()];
        admissible[24] = false;
        let grids = component_functions(&frame, &mesh, &admissible, &cloud, &cfg).unwrap();
        assert!(grids.failed_nodes.is_empty() && !grids.all_unknown);
        for c in &grids.components {
            assert!(!c.mask().is_known(24));
            for i in 0..mesh.len() {
                if i == 24 {
                    continue;
                }
                let t = mesh.point(i);
                let want = frame.to_ambient(&t)[grids.components.iter().position(|g| std::ptr::eq(g, c)).unwrap()];
                assert!((c.raw_values()[i] - want).abs() < 1e-10);
            }
        }
        let none = vec![false; mesh.len()];
        assert!(component_functions(&frame, &mesh, &none, &cloud, &cfg).unwrap().all_unknown);
    }
}

//! Seeded generators for the benchmark grids and point clouds, and analytic
//! surfaces used as ground truth.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridMask, UniformGrid};

/// `1 / (2.5 + sin(x + 1.2) + cos(y))`.
pub fn bump(x: &[f64]) -> f64 {
    1.0 / (2.5 + (x[0] + 1.2).sin() + x[1].cos())
}

#[derive(Debug, Clone)]
pub struct GridDataset {
    /// Noisy known values with unknown entries masked.
    pub data: GridFunction,
    /// Noise-free values everywhere.
    pub exact: GridFunction,
    /// Grid points whose reconstruction error is measured.
    pub hole: Vec<usize>,
}

fn add_noise(values: &[f64], mask: &GridMask, eps: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if mask.is_known(i) && eps > 0.0 {
                v + rng.random_range(-eps..=eps)
            } else {
                v
            }
        })
        .collect()
}

/// Known values on the annulus `r_in < |x − (π,π)| < r_out` of the periodic
/// `N × N` grid; the disk `|x − (π,π)| ≤ r_in` is the measured hole.
pub fn annulus_grid(n: usize, outer: f64, inner: f64, eps: f64, seed: u64) -> Result<GridDataset> {
    if !(0.0 < inner && inner < outer) {
        return Err(Error::OutOfRange(format!("need 0 < hole radius < outer radius, got {inner}, {outer}")));
    }
    let grid = UniformGrid::periodic(2, n)?;
    let exact = GridFunction::from_fn(grid.clone(), bump);
    let r = |i: usize| {
        let p = grid.point(i);
        (p[0] - PI).hypot(p[1] - PI)
    };
    let masked = exact.with_unknown(|i| !(r(i) > inner && r(i) < outer));
    let values = add_noise(exact.raw_values(), masked.mask(), eps, seed);
    let data = GridFunction::new(grid.clone(), values, masked.mask().clone())?;
    let hole = (0..grid.len()).filter(|&i| r(i) <= inner).collect();
    Ok(GridDataset { data, exact, hole })
}

/// The periodic `M × M` grid with the open disk `|x − (π,π)| < radius` unknown.
pub fn disk_grid(m: usize, radius: f64, eps: f64, seed: u64) -> Result<GridDataset> {
    if radius <= 0.0 {
        return Err(Error::OutOfRange("hole radius must be positive".into()));
    }
    let grid = UniformGrid::periodic(2, m)?;
    let exact = GridFunction::from_fn(grid.clone(), bump);
    let inside = |i: usize| {
        let p = grid.point(i);
        (p[0] - PI).hypot(p[1] - PI) < radius
    };
    let masked = exact.with_unknown(inside);
    let values = add_noise(exact.raw_values(), masked.mask(), eps, seed);
    let data = GridFunction::new(grid.clone(), values, masked.mask().clone())?;
    let hole = (0..grid.len()).filter(|&i| inside(i)).collect();
    Ok(GridDataset { data, exact, hole })
}

/// Analytic ground truth for point-to-surface distances.
pub trait Surface: Sync {
    fn distance(&self, p: &[f64]) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub origin: Vec<f64>,
    /// Orthonormal spanning vectors.
    pub basis: Vec<Vec<f64>>,
}

impl Surface for Plane {
    fn distance(&self, p: &[f64]) -> f64 {
        let diff: Vec<f64> = p.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        let mut rest = diff.clone();
        for b in &self.basis {
            let c: f64 = b.iter().zip(&diff).map(|(x, y)| x * y).sum();
            for (r, bi) in rest.iter_mut().zip(b) {
                *r -= c * bi;
            }
        }
        rest.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub radius: f64,
}

impl Surface for Sphere {
    fn distance(&self, p: &[f64]) -> f64 {
        (p.iter().map(|v| v * v).sum::<f64>().sqrt() - self.radius).abs()
    }
}

/// Torus around the z axis whose tube radius varies along the ring:
/// `X(u, v) = ((R + r(u) cos v) cos u, (R + r(u) cos v) sin u, r(u) sin v)`
/// with `r(u) = r₀ + a cos(3u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableTorus {
    pub major_radius: f64,
    pub tube_radius: f64,
    pub tube_amplitude: f64,
}

impl Default for VariableTorus {
    fn default() -> Self {
        Self { major_radius: 2.0, tube_radius: 0.8, tube_amplitude: 0.1 }
    }
}

impl VariableTorus {
    pub fn r(&self, u: f64) -> f64 {
        self.tube_radius + self.tube_amplitude * (3.0 * u).cos()
    }

    fn dr(&self, u: f64) -> f64 {
        -3.0 * self.tube_amplitude * (3.0 * u).sin()
    }

    pub fn point(&self, u: f64, v: f64) -> [f64; 3] {
        let r = self.r(u);
        let w = self.major_radius + r * v.cos();
        [w * u.cos(), w * u.sin(), r * v.sin()]
    }

    fn partials(&self, u: f64, v: f64) -> ([f64; 3], [f64; 3]) {
        let (r, dr) = (self.r(u), self.dr(u));
        let w = self.major_radius + r * v.cos();
        let xu = [-w * u.sin() + dr * v.cos() * u.cos(), w * u.cos() + dr * v.cos() * u.sin(), dr * v.sin()];
        let xv = [-r * v.sin() * u.cos(), -r * v.sin() * u.sin(), r * v.cos()];
        (xu, xv)
    }

    pub fn area_element(&self, u: f64, v: f64) -> f64 {
        let (a, b) = self.partials(u, v);
        let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    }

    pub fn normal(&self, u: f64, v: f64) -> [f64; 3] {
        let (a, b) = self.partials(u, v);
        let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        [c[0] / n, c[1] / n, c[2] / n]
    }

    /// Parameters of the closest surface point, by Gauss–Newton from the
    /// constant-radius guess.
    pub fn closest_parameters(&self, p: &[f64]) -> (f64, f64) {
        let mut u = p[1].atan2(p[0]);
        let mut v = p[2].atan2(p[0].hypot(p[1]) - self.major_radius);
        for _ in 0..100 {
            let x = self.point(u, v);
            let f = [x[0] - p[0], x[1] - p[1], x[2] - p[2]];
            let (a, b) = self.partials(u, v);
            let dotp = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
            let (aa, ab, bb) = (dotp(&a, &a), dotp(&a, &b), dotp(&b, &b));
            let (ga, gb) = (dotp(&a, &f), dotp(&b, &f));
            let det = aa * bb - ab * ab;
            let du = -(bb * ga - ab * gb) / det;
            let dv = -(aa * gb - ab * ga) / det;
            u += du;
            v += dv;
            if du.abs() + dv.abs() < 1e-15 {
                break;
            }
        }
        (u, v)
    }
}

impl Surface for VariableTorus {
    fn distance(&self, p: &[f64]) -> f64 {
        let (u, v) = self.closest_parameters(p);
        let x = self.point(u, v);
        ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2) + (x[2] - p[2]).powi(2)).sqrt()
    }
}

/// Greedy thinning of `candidates` so that no two kept points are closer
/// than `min_dist`; candidates are visited in order.
fn thin(candidates: &[Vec<f64>], min_dist: f64) -> Vec<Vec<f64>> {
    use std::collections::HashMap;
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / min_dist).floor() as i64).collect() };
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let r2 = min_dist * min_dist;
    'cand: for c in candidates {
        let k = key(c);
        let n = k.len();
        let mut off = vec![-1i64; n];
        loop {
            let kk: Vec<i64> = k.iter().zip(&off).map(|(a, b)| a + b).collect();
            if let Some(list) = cells.get(&kk) {
                for &j in list {
                    let d2: f64 = kept[j].iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
                    if d2 < r2 {
                        continue 'cand;
                    }
                }
            }
            let mut a = 0;
            while a < n && off[a] == 1 {
                off[a] = -1;
                a += 1;
            }
            if a == n {
                break;
            }
            off[a] += 1;
        }
        cells.entry(k).or_default().push(kept.len());
        kept.push(c.clone());
    }
    kept
}

/// Thins `candidates` to roughly `target` points by bisection on the
/// minimum spacing.
fn thin_to_count(candidates: &[Vec<f64>], target: usize, mut lo: f64, mut hi: f64) -> Vec<Vec<f64>> {
    let mut best = thin(candidates, lo);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let kept = thin(candidates, mid);
        let far = (kept.len() as f64 - target as f64).abs();
        if far < (best.len() as f64 - target as f64).abs() {
            best = kept.clone();
        }
        if kept.len() > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if far <= 0.005 * target as f64 {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloudDataset {
    pub points: Vec<Vec<f64>>,
    pub intrinsic_dim: usize,
    /// Ambient centre of the removed region, if any.
    pub hole_center: Option<Vec<f64>>,
    pub hole_radius: f64,
    pub hole_normal: Option<Vec<f64>>,
}

/// Quasi-uniform samples of the variable torus with the points within
/// Euclidean distance `hole_radius` of `X(hole_u, 0)` removed
/// (no removal when `hole_radius` is 0).
pub fn torus_cloud(torus: &VariableTorus, samples: usize, hole_u: f64, hole_radius: f64, seed: u64) -> Result<CloudDataset> {
    if samples < 100 {
        return Err(Error::OutOfRange("need at least 100 torus samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_area = max_area_element(torus);
    let mut candidates = Vec::with_capacity(samples * 16);
    while candidates.len() < samples * 16 {
        let u = rng.random_range(0.0..2.0 * PI);
        let v = rng.random_range(0.0..2.0 * PI);
        if rng.random::<f64>() * max_area <= torus.area_element(u, v) {
            candidates.push(torus.point(u, v).to_vec());
        }
    }
    let area = 4.0 * PI * PI * torus.major_radius * torus.tube_radius;
    let spacing = (area / samples as f64).sqrt();
    let mut points = thin_to_count(&candidates, samples, 0.3 * spacing, 1.5 * spacing);
    let center = torus.point(hole_u, 0.0).to_vec();
    if hole_radius > 0.0 {
        points.retain(|p| p.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() > hole_radius);
    }
    Ok(CloudDataset {
        points,
        intrinsic_dim: 2,
        hole_center: (hole_radius > 0.0).then_some(center),
        hole_radius,
        hole_normal: (hole_radius > 0.0).then(|| torus.normal(hole_u, 0.0).to_vec()),
    })
}

fn max_area_element(t: &VariableTorus) -> f64 {
    let mut m = 0.0f64;
    for i in 0..400 {
        for j in 0..100 {
            m = m.max(t.area_element(2.0 * PI * i as f64 / 400.0, 2.0 * PI * j as f64 / 100.0));
        }
    }
    m * 1.05
}

/// `n` points on the sphere of `radius` along a golden-angle spiral.
pub fn fibonacci_sphere(n: usize, radius: f64) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            vec![radius * r * t.cos(), radius * r * t.sin(), radius * z]
        })
        .collect()
}

/// Quasi-uniform samples of the unit sphere scaled by `radius`, without the
/// cap of angular radius `cap_angle` around `cap_axis`.
pub fn sphere_cloud(radius: f64, samples: usize, cap_axis: [f64; 3], cap_angle: f64, seed: u64) -> Result<CloudDataset> {
    if radius <= 0.0 || samples < 50 {
        return Err(Error::OutOfRange("sphere needs a positive radius and at least 50 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = Vec::with_capacity(samples * 16);
    while candidates.len() < samples * 16 {
        let z: f64 = rng.random_range(-1.0..1.0);
        let t: f64 = rng.random_range(0.0..2.0 * PI);
        let s = (1.0 - z * z).sqrt();
        candidates.push(vec![radius * s * t.cos(), radius * s * t.sin(), radius * z]);
    }
    let spacing = radius * (4.0 * PI / samples as f64).sqrt();
    let mut points = thin_to_count(&candidates, samples, 0.3 * spacing, 1.5 * spacing);
    let n = (cap_axis.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let axis: Vec<f64> = cap_axis.iter().map(|v| v / n).collect();
    if cap_angle > 0.0 {
        points.retain(|p| {
            let c: f64 = p.iter().zip(&axis).map(|(a, b)| a * b).sum::<f64>() / radius;
            c.clamp(-1.0, 1.0).acos() > cap_angle
        });
    }
    Ok(CloudDataset {
        points,
        intrinsic_dim: 2,
        hole_center: (cap_angle > 0.0).then(|| axis.iter().map(|a| a * radius).collect()),
        hole_radius: 2.0 * radius * (cap_angle / 2.0).sin(),
        hole_normal: (cap_angle > 0.0).then(|| axis.clone()),
    })
}

/// Jittered grid samples of a square patch `[-half, half]²` of an affine
/// plane in `ℝⁿ`, without the disk of `hole_radius` around `hole_at`
/// (plane coordinates).
pub fn plane_cloud(
    plane: &Plane,
    half: f64,
    spacing: f64,
    jitter: f64,
    hole_at: [f64; 2],
    hole_radius: f64,
    seed: u64,
) -> Result<CloudDataset> {
    if plane.basis.len() != 2 {
        return Err(Error::OutOfRange("plane clouds are two-dimensional".into()));
    }
    if spacing <= 0.0 || half <= 0.0 {
        return Err(Error::OutOfRange("plane patch needs positive size and spacing".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (half / spacing).floor() as i64;
    let mut points = Vec::new();
    for i in -steps..=steps {
        for j in -steps..=steps {
            let mut s = i as f64 * spacing;
            let mut t = j as f64 * spacing;
            if jitter > 0.0 {
                s += rng.random_range(-jitter..=jitter) * spacing;
                t += rng.random_range(-jitter..=jitter) * spacing;
            }
            if (s - hole_at[0]).hypot(t - hole_at[1]) <= hole_radius {
                continue;
            }
            points.push(
                (0..plane.origin.len())
                    .map(|a| plane.origin[a] + s * plane.basis[0][a] + t * plane.basis[1][a])
                    .collect(),
            );
        }
    }
    let center: Vec<f64> = (0..plane.origin.len())
        .map(|a| plane.origin[a] + hole_at[0] * plane.basis[0][a] + hole_at[1] * plane.basis[1][a])
        .collect();
    Ok(CloudDataset {
        points,
        intrinsic_dim: 2,
        hole_center: (hole_radius > 0.0).then_some(center),
        hole_radius,
        hole_normal: None,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeSection {
    pub level: f64,
    /// Chart grid over `(polar angle, azimuth)`.
    pub grid: UniformGrid,
    /// `x₁, x₂, x₃` sampled on the chart, with the shared hole unknown.
    pub components: Vec<GridFunction>,
    pub exact: Vec<GridFunction>,
}

/// Cross-sections `x₄ = level` of the cone `x₁² + x₂² + x₃² = x₄²`, each a
/// sphere of radius `|level|` sampled on the chart
/// `[π/4, 3π/4] × [0, π/2]` with a disk of chart radius `hole_radius`
/// around the chart centre missing.
pub fn cone_sections(levels: &[f64], points: usize, hole_radius: f64) -> Result<Vec<ConeSection>> {
    let edge = PI / 2.0;
    let grid = UniformGrid::new(2, points, vec![PI / 4.0, 0.0], edge * points as f64 / (points - 1) as f64)?;
    let centre = [PI / 2.0, PI / 4.0];
    let hole = |i: usize| {
        let p = grid.point(i);
        (p[0] - centre[0]).hypot(p[1] - centre[1]) < hole_radius
    };
    Ok(levels
        .iter()
        .map(|&level| {
            let r = level.abs();
            let exact: Vec<GridFunction> = (0..3)
                .map(|a| {
                    GridFunction::from_fn(grid.clone(), |t| {
                        let (th, ph) = (t[0], t[1]);
                        [r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()][a]
                    })
                })
                .collect();
            let components = exact.iter().map(|g| g.with_unknown(hole)).collect();
            ConeSection { level, grid: grid.clone(), components, exact }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_has_360_known_points() {
        let d = annulus_grid(50, PI / 2.0, 0.8, 0.1, 3).unwrap();
        assert_eq!(d.data.mask().known_count(), 360);
        assert_eq!(d.data.mask().unknown_count(), 2140);
        for i in d.data.mask().known_indices() {
            assert!((d.data.raw_values()[i] - d.exact.raw_values()[i]).abs() <= 0.1);
        }
    }

    #[test]
    fn disk_dataset_counts() {
        let d = disk_grid(40, 0.5, 0.01, 0).unwrap();
        assert_eq!(d.hole.len(), d.data.mask().unknown_count());
        assert_eq!(d.hole.len(), 37);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = sphere_cloud(1.0, 600, [0.0, 0.0, 1.0], 0.3, 9).unwrap();
        let b = sphere_cloud(1.0, 600, [0.0, 0.0, 1.0], 0.3, 9).unwrap();
        assert_eq!(a.points, b.points);
        let t1 = torus_cloud(&VariableTorus::default(), 500, 0.0, 0.3, 2).unwrap();
        let t2 = torus_cloud(&VariableTorus::default(), 500, 0.0, 0.3, 2).unwrap();
        assert_eq!(t1.points, t2.points);
    }

    #[test]
    fn torus_distance_is_zero_on_surface_and_exact_along_normals() {
        let t = VariableTorus::default();
        for (u, v) in [(0.0, 0.0), (1.0, 2.0), (4.0, -0.7), (2.5, 3.0)] {
            let p = t.point(u, v);
            assert!(t.distance(&p) < 1e-12);
            let n = t.normal(u, v);
            let off = [p[0] + 0.01 * n[0], p[1] + 0.01 * n[1], p[2] + 0.01 * n[2]];
            assert!((t.distance(&off) - 0.01).abs() < 1e-10);
        }
    }

    #[test]
    fn torus_sampling_is_quasi_uniform() {
        let t = VariableTorus::default();
        let c = torus_cloud(&t, 2800, 0.0, 0.0, 1).unwrap();
        assert!((c.points.len() as f64 - 2800.0).abs() <= 0.02 * 2800.0);
        assert!(c.points.iter().all(|p| t.distance(p) < 1e-9));
    }
}

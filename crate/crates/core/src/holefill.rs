//! Hole filling on sampled manifolds: detect the hole, lay a uniform mesh on
//! an averaged tangent plane, lift the mesh through the MMLS projection and
//! impute each ambient component over the hole footprint.

use std::collections::HashMap;
use std::f64::consts::PI;

use faer::{Mat, Side};
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{cone_sections, Surface};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, UniformGrid};
use crate::mmls::{component_functions, fit_local_frame, MmlsConfig, PointCloud, SpatialIndex, TangentFrame};
use crate::spectral::{impute_spectral, AxisPolicy, DecayParams, SpectralDiagnostics, WeightScheme};
use crate::variational::{impute_variational, VariationalConfig, VariationalDiagnostics};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Variational,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleFillConfig {
    pub mmls: MmlsConfig,
    /// Half-order of the variational functional.
    pub k: usize,
    pub backend: Backend,
    pub spectral: DecayParams,
    /// Neighbour radius for gap detection, in units of the median spacing.
    pub gap_radius_factor: f64,
    /// Angular gap (degrees) that marks a boundary point of a surface.
    pub gap_angle_deg: f64,
    /// Mesh nodes closer than this multiple of `h_{P,A}` to the hole are unknown.
    pub admissibility_multiplier: f64,
    /// Mesh spacing as a multiple of `h_{P,A}`, in `[0.5, 2]`.
    pub mesh_multiplier: f64,
    /// Minimum eigen-gap of the averaged tangent projector.
    pub plane_gap_tolerance: f64,
    pub min_boundary_points: usize,
}

impl HoleFillConfig {
    pub fn new(mmls: MmlsConfig) -> Self {
        Self {
            mmls,
            k: 3,
            backend: Backend::Variational,
            spectral: DecayParams::default(),
            gap_radius_factor: 2.5,
            gap_angle_deg: 90.0,
            admissibility_multiplier: 1.0,
            mesh_multiplier: 1.0,
            plane_gap_tolerance: 0.5,
            min_boundary_points: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mmls.validate()?;
        if self.k == 0 {
            return Err(Error::OutOfRange("k must be at least 1".into()));
        }
        if !(0.5..=2.0).contains(&self.mesh_multiplier) {
            return Err(Error::OutOfRange(format!("mesh multiplier {} is outside [0.5, 2]", self.mesh_multiplier)));
        }
        if !(self.admissibility_multiplier > 0.0 && self.gap_radius_factor > 0.0) {
            return Err(Error::OutOfRange("admissibility and gap radius multipliers must be positive".into()));
        }
        if !(0.0 < self.gap_angle_deg && self.gap_angle_deg < 360.0) {
            return Err(Error::OutOfRange("gap angle must lie in (0, 360) degrees".into()));
        }
        if self.min_boundary_points < 3 {
            return Err(Error::OutOfRange("a hole needs at least 3 boundary points".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoleDescriptor {
    /// Indices of the boundary samples `q_j` in the cloud.
    pub boundary: Vec<usize>,
    pub center: Vec<f64>,
    /// Largest Euclidean distance between boundary samples.
    pub diameter: f64,
    /// Largest graph distance between boundary samples along the sampled
    /// surface (the graph cannot cross the hole, so this overestimates).
    pub diameter_graph: Option<f64>,
    pub restricted_filling_distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoleDetection {
    pub hole: Option<HoleDescriptor>,
    /// Smaller holes, largest first.
    pub others: Vec<HoleDescriptor>,
    /// Boundary components facing away from their centroid (outer rims).
    pub outer_rims: usize,
    pub boundary_points: usize,
    /// Median nearest-neighbour distance.
    pub spacing: f64,
}

/// Median distance from a sample to its nearest other sample.
pub fn median_spacing(cloud: &PointCloud) -> f64 {
    let pts = cloud.points();
    let mut nn: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut r = 1e-3_f64.max(cloud_scale(cloud) * 1e-3);
            loop {
                let best = cloud
                    .within(&pts[i], r)
                    .into_iter()
                    .filter(|&j| j != i)
                    .map(|j| dist(&pts[i], &pts[j]))
                    .fold(f64::INFINITY, f64::min);
                if best.is_finite() {
                    return best;
                }
                r *= 2.0;
            }
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    nn[nn.len() / 2]
}

fn cloud_scale(cloud: &PointCloud) -> f64 {
    let pts = cloud.points();
    (0..cloud.ambient_dim())
        .map(|a| {
            let (lo, hi) = pts.iter().fold((f64::MAX, f64::MIN), |(l, h), p| (l.min(p[a]), h.max(p[a])));
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Direction (ambient, unit) of an empty angular sector around sample `i`,
/// if its neighbours leave one.
fn gap_direction(frame: &TangentFrame, center: &[f64], neighbours: &[&Vec<f64>], gap_angle: f64) -> Option<Vec<f64>> {
    let d = frame.dim();
    let dirs: Vec<Vec<f64>> = neighbours
        .iter()
        .map(|p| {
            let diff: Vec<f64> = p.iter().zip(center).map(|(a, b)| a - b).collect();
            let t: Vec<f64> = frame.basis.iter().map(|b| dot(b, &diff)).collect();
            let n = dot(&t, &t).sqrt();
            t.iter().map(|v| v / n).collect()
        })
        .filter(|t: &Vec<f64>| t.iter().all(|v| v.is_finite()))
        .collect();
    if dirs.is_empty() {
        return None;
    }
    let local = if d == 2 {
        let mut ang: Vec<f64> = dirs.iter().map(|t| t[1].atan2(t[0])).collect();
        ang.sort_by(f64::total_cmp);
        let mut best = (ang[0] + 2.0 * PI - ang[ang.len() - 1], ang[ang.len() - 1]);
        for w in ang.windows(2) {
            if w[1] - w[0] > best.0 {
                best = (w[1] - w[0], w[0]);
            }
        }
        if best.0 <= gap_angle {
            return None;
        }
        let mid = best.1 + best.0 / 2.0;
        vec![mid.cos(), mid.sin()]
    } else {
        // Empty half-space test against a few candidate normals.
        let mean: Vec<f64> = (0..d).map(|a| dirs.iter().map(|t| t[a]).sum::<f64>()).collect();
        let mut candidates: Vec<Vec<f64>> = vec![mean.iter().map(|v| -v).collect()];
        candidates.extend(dirs.iter().map(|t| t.iter().map(|v| -v).collect()));
        let u = candidates.into_iter().find(|u| {
            let n = dot(u, u).sqrt();
            n > 0.0 && dirs.iter().all(|t| dot(t, u) <= 0.0)
        })?;
        let n = dot(&u, &u).sqrt();
        u.iter().map(|v| v / n).collect()
    };
    Some(frame.to_ambient(&local).iter().zip(&frame.origin).map(|(a, b)| a - b).collect())
}

/// Largest region of missing samples, found from points whose neighbours
/// leave an angular gap.
pub fn detect_hole(cloud: &PointCloud, cfg: &HoleFillConfig) -> Result<HoleDetection> {
    cfg.validate()?;
    let pts = cloud.points();
    let spacing = median_spacing(cloud);
    let radius = cfg.gap_radius_factor * spacing;
    let gap_angle = cfg.gap_angle_deg.to_radians();

    let gaps: Vec<Option<Vec<f64>>> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let frame = fit_local_frame(cloud, &pts[i], &cfg.mmls).ok()?.frame;
            let neighbours: Vec<&Vec<f64>> =
                cloud.within(&pts[i], radius).into_iter().filter(|&j| j != i).map(|j| &pts[j]).collect();
            gap_direction(&frame, &pts[i], &neighbours, gap_angle)
        })
        .collect();
    let boundary: Vec<usize> = (0..pts.len()).filter(|&i| gaps[i].is_some()).collect();

    let mut uf = UnionFind::<usize>::new(boundary.len());
    let bpts: Vec<Vec<f64>> = boundary.iter().map(|&i| pts[i].clone()).collect();
    let bindex = SpatialIndex::new(&bpts, radius.max(f64::MIN_POSITIVE));
    for (a, p) in bpts.iter().enumerate() {
        for b in bindex.within(&bpts, p, radius) {
            uf.union(a, b);
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for a in 0..boundary.len() {
        groups.entry(uf.find(a)).or_default().push(a);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.iter_mut().for_each(|g| g.sort_unstable());
    groups.sort_by_key(|g| g[0]);

    let graph = SurfaceGraph::new(cloud, radius);
    let mut holes = Vec::new();
    let mut outer_rims = 0;
    for g in groups.into_iter().filter(|g| g.len() >= cfg.min_boundary_points) {
        let members: Vec<usize> = g.iter().map(|&a| boundary[a]).collect();
        let n = cloud.ambient_dim();
        let center: Vec<f64> = (0..n).map(|c| members.iter().map(|&i| pts[i][c]).sum::<f64>() / members.len() as f64).collect();
        let facing: f64 = members
            .iter()
            .map(|&i| {
                let to_c: Vec<f64> = center.iter().zip(&pts[i]).map(|(c, p)| c - p).collect();
                let l = dot(&to_c, &to_c).sqrt();
                if l > 0.0 { dot(gaps[i].as_ref().unwrap(), &to_c) / l } else { 0.0 }
            })
            .sum::<f64>()
            / members.len() as f64;
        if facing <= 0.0 {
            outer_rims += 1;
            continue;
        }
        let mut diameter = 0.0f64;
        let mut ends = (members[0], members[0]);
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                let dd = dist(&pts[i], &pts[j]);
                if dd > diameter {
                    diameter = dd;
                    ends = (i, j);
                }
            }
        }
        let diameter_graph = graph.distance(ends.0, ends.1);
        let region = region_samples(cloud, &members, &center, diameter, spacing, &cfg.mmls);
        let restricted_filling_distance = if region.is_empty() { spacing } else { restricted_filling_distance(cloud, &region)? };
        holes.push(HoleDescriptor { boundary: members, center, diameter, diameter_graph, restricted_filling_distance });
    }
    holes.sort_by(|a, b| b.diameter.total_cmp(&a.diameter));
    let mut it = holes.into_iter();
    let hole = it.next();
    Ok(HoleDetection { hole, others: it.collect(), outer_rims, boundary_points: boundary.len(), spacing })
}

struct SurfaceGraph {
    graph: UnGraph<(), f64>,
}

impl SurfaceGraph {
    fn new(cloud: &PointCloud, radius: f64) -> Self {
        let pts = cloud.points();
        let mut graph = UnGraph::<(), f64>::with_capacity(pts.len(), pts.len() * 8);
        for _ in 0..pts.len() {
            graph.add_node(());
        }
        for i in 0..pts.len() {
            for j in cloud.within(&pts[i], radius) {
                if j > i {
                    graph.add_edge(NodeIndex::new(i), NodeIndex::new(j), dist(&pts[i], &pts[j]));
                }
            }
        }
        Self { graph }
    }

    fn distance(&self, a: usize, b: usize) -> Option<f64> {
        let target = NodeIndex::new(b);
        dijkstra(&self.graph, NodeIndex::new(a), Some(target), |e| *e.weight()).get(&target).copied()
    }
}

/// Surface samples around the interior points near the hole: small rings
/// in each point's tangent plane.
fn region_samples(
    cloud: &PointCloud,
    boundary: &[usize],
    center: &[f64],
    diameter: f64,
    spacing: f64,
    mmls: &MmlsConfig,
) -> Vec<Vec<f64>> {
    let pts = cloud.points();
    let near: Vec<usize> = cloud
        .within(center, diameter)
        .into_iter()
        .filter(|i| boundary.binary_search(i).is_err())
        .collect();
    near.par_iter()
        .filter_map(|&i| fit_local_frame(cloud, &pts[i], mmls).ok())
        .flat_map_iter(|fit| {
            let frame = TangentFrame { origin: fit.frame.origin.clone(), basis: fit.frame.basis.clone() };
            let d = frame.dim();
            let mut local: Vec<Vec<f64>> = Vec::new();
            if d == 2 {
                for s in [0.5, 1.0] {
                    for a in 0..8 {
                        let t = a as f64 * PI / 4.0;
                        local.push(vec![s * spacing * t.cos(), s * spacing * t.sin()]);
                    }
                }
            } else {
                for s in [0.5, 1.0] {
                    for a in 0..d {
                        for sign in [-1.0, 1.0] {
                            let mut t = vec![0.0; d];
                            t[a] = sign * s * spacing;
                            local.push(t);
                        }
                    }
                }
            }
            local.into_iter().map(move |t| frame.to_ambient(&t))
        })
        .collect()
}

/// `max_{x ∈ region} min_i ‖x − p_i‖`.
pub fn restricted_filling_distance(cloud: &PointCloud, region: &[Vec<f64>]) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::OutOfRange("region sample is empty".into()));
    }
    Ok(region.par_iter().map(|x| cloud.nearest_distance(x)).reduce(|| 0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferencePlane {
    /// Origin `π̃`; the basis spans the averaged tangent plane.
    pub frame: TangentFrame,
    /// Mesh in frame coordinates over `[-diam, diam]^d`.
    pub mesh: UniformGrid,
    pub cube_edge: f64,
    pub spacing: f64,
    /// Gap between the d-th and (d+1)-th eigenvalue of the mean projector.
    pub eigen_gap: f64,
}

impl ReferencePlane {
    pub fn normal_projector(&self) -> Mat<f64> {
        let p = self.frame.projector();
        let n = p.nrows();
        Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - p[(i, j)])
    }
}

pub fn build_reference_plane(cloud: &PointCloud, hole: &HoleDescriptor, cfg: &HoleFillConfig) -> Result<ReferencePlane> {
    cfg.validate()?;
    let pts = cloud.points();
    let (n, d) = (cloud.ambient_dim(), cloud.intrinsic_dim());
    let fits = hole
        .boundary
        .par_iter()
        .map(|&i| fit_local_frame(cloud, &pts[i], &cfg.mmls))
        .collect::<Result<Vec<_>>>()?;
    let mut mean_proj = Mat::<f64>::zeros(n, n);
    let mut mean_origin = vec![0.0; n];
    for f in &fits {
        mean_proj += f.frame.projector();
        for (m, o) in mean_origin.iter_mut().zip(&f.frame.origin) {
            *m += o;
        }
    }
    let count = fits.len() as f64;
    mean_proj *= faer::Scale(1.0 / count);
    mean_origin.iter_mut().for_each(|m| *m /= count);
    let evd = mean_proj
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let vals: Vec<f64> = evd.S().column_vector().iter().rev().copied().collect();
    let eigen_gap = vals[d - 1] - vals.get(d).copied().unwrap_or(0.0);
    if eigen_gap < cfg.plane_gap_tolerance {
        return Err(Error::UnstablePlane { gap: eigen_gap });
    }
    let u = evd.U();
    let span: Vec<Vec<f64>> = (0..d).map(|j| (0..n).map(|i| u[(i, n - 1 - j)]).collect()).collect();
    let through = TangentFrame { origin: mean_origin, basis: span };
    let origin = through.project(&hole.center);

    let offsets: Vec<Vec<f64>> = hole
        .boundary
        .iter()
        .map(|&i| {
            let p = through.project(&pts[i]);
            p.iter().zip(&origin).map(|(a, b)| a - b).collect()
        })
        .collect();
    let basis = canonical_basis(&through.basis, &offsets);
    let frame = TangentFrame { origin, basis };

    let half = hole.diameter;
    let target = cfg.mesh_multiplier * hole.restricted_filling_distance;
    let steps = ((half / target).round() as usize).max(1);
    let spacing = half / steps as f64;
    let nodes = 2 * steps + 1;
    let mesh = UniformGrid::new(d, nodes, vec![-half; d], spacing * nodes as f64)?;
    Ok(ReferencePlane { frame, mesh, cube_edge: 2.0 * hole.diameter, spacing, eigen_gap })
}

/// Orthonormal basis of `span` fixed by the data: each vector points to the
/// sample with the largest remaining component.
fn canonical_basis(span: &[Vec<f64>], offsets: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut remaining: Vec<Vec<f64>> = span.to_vec();
    let mut out = Vec::with_capacity(span.len());
    while !remaining.is_empty() {
        let proj = |o: &Vec<f64>| -> Vec<f64> {
            let mut v = vec![0.0; o.len()];
            for b in &remaining {
                let c = dot(b, o);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi += c * bi;
                }
            }
            v
        };
        let best = offsets
            .iter()
            .map(proj)
            .max_by(|a, b| dot(a, a).total_cmp(&dot(b, b)))
            .filter(|v| dot(v, v) > 1e-24);
        let e = match best {
            Some(v) => {
                let l = dot(&v, &v).sqrt();
                v.iter().map(|x| x / l).collect::<Vec<f64>>()
            }
            None => remaining[0].clone(),
        };
        // Remove e from the remaining span.
        let mut next: Vec<Vec<f64>> = Vec::new();
        for b in &remaining {
            let mut v: Vec<f64> = b.iter().zip(&e).map(|(bi, ei)| bi - dot(b, &e) * ei).collect();
            for q in &next {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
            }
            let l = dot(&v, &v).sqrt();
            if l > 1e-8 {
                next.push(v.iter().map(|x| x / l).collect());
            }
        }
        next.truncate(remaining.len() - 1);
        out.push(e);
        remaining = next;
    }
    out
}

/// Mesh nodes farther than `threshold` from every projected sample, kept in
/// the connected group nearest the mesh centre and dilated by `threshold`,
/// are the hole footprint; everything else is admissible.
pub fn admissibility_mask(mesh: &UniformGrid, projected: &[Vec<f64>], threshold: f64) -> Vec<bool> {
    let d = mesh.dim();
    let nodes: Vec<Vec<f64>> = (0..mesh.len()).map(|i| mesh.point(i)).collect();
    if projected.is_empty() {
        return vec![false; mesh.len()];
    }
    let index = SpatialIndex::new(projected, threshold.max(mesh.mesh_size()));
    let far: Vec<bool> = nodes.par_iter().map(|x| index.within(projected, x, threshold).is_empty()).collect();
    let mut uf = UnionFind::<usize>::new(mesh.len());
    for i in (0..mesh.len()).filter(|&i| far[i]) {
        let m = mesh.multi_index(i);
        for a in 0..d {
            if m[a] + 1 < mesh.points_per_axis() {
                let mut q = m.clone();
                q[a] += 1;
                let j = mesh.flat_index(&q);
                if far[j] {
                    uf.union(i, j);
                }
            }
        }
    }
    let centre: Vec<f64> = vec![0.0; d];
    let seed = (0..mesh.len())
        .filter(|&i| far[i])
        .min_by(|&a, &b| dist(&nodes[a], &centre).total_cmp(&dist(&nodes[b], &centre)));
    let Some(seed) = seed else {
        return vec![true; mesh.len()];
    };
    let root = uf.find(seed);
    let core: Vec<usize> = (0..mesh.len()).filter(|&i| far[i] && uf.find(i) == root).collect();
    let core_pts: Vec<Vec<f64>> = core.iter().map(|&i| nodes[i].clone()).collect();
    let core_index = SpatialIndex::new(&core_pts, threshold.max(mesh.mesh_size()));
    nodes.par_iter().map(|x| core_index.within(&core_pts, x, threshold * (1.0 + 1e-12)).is_empty()).collect()
}

/// Plane coordinates of the samples over the reference cube, excluding
/// sheets of the surface that lie far off the plane.
pub fn local_footprint(cloud: &PointCloud, plane: &ReferencePlane, margin: f64) -> Vec<Vec<f64>> {
    let half = plane.cube_edge / 2.0;
    let reach = half * (plane.frame.dim() as f64).sqrt() + margin;
    cloud
        .within(&plane.frame.origin, reach)
        .into_iter()
        .filter_map(|i| {
            let p = &cloud.points()[i];
            let foot = plane.frame.project(p);
            (dist(p, &foot) <= half).then(|| plane.frame.to_local(p))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointTag {
    Known,
    Imputed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "lowercase")]
pub enum ComponentReport {
    Variational(VariationalDiagnostics),
    Spectral(SpectralDiagnostics),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoleFillDiagnostics {
    pub spacing: f64,
    pub boundary_points: usize,
    pub hole: HoleDescriptor,
    pub other_hole_diameters: Vec<f64>,
    pub outer_rims: usize,
    pub diameter_over_filling_distance: f64,
    pub plane_eigen_gap: f64,
    pub mesh_nodes_per_axis: usize,
    pub mesh_spacing: f64,
    pub mesh_spacing_ratio: f64,
    pub cube_edge: f64,
    pub admissible_nodes: usize,
    pub imputed_nodes: usize,
    pub failed_projections: usize,
    pub k: usize,
    pub backend: Backend,
    pub components: Vec<ComponentReport>,
    pub max_known_distance: Option<f64>,
    pub max_imputed_distance: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct HoleFillResult {
    pub points: Vec<Vec<f64>>,
    pub tags: Vec<PointTag>,
    pub plane: ReferencePlane,
    pub diagnostics: HoleFillDiagnostics,
}

#[derive(Debug, Clone)]
pub enum HoleFillOutcome {
    NoHole(HoleDetection),
    Filled(Box<HoleFillResult>),
}

pub fn fill_manifold_hole(cloud: &PointCloud, cfg: &HoleFillConfig, truth: Option<&dyn Surface>) -> Result<HoleFillOutcome> {
    let detection = detect_hole(cloud, cfg)?;
    let Some(hole) = detection.hole.clone() else {
        return Ok(HoleFillOutcome::NoHole(detection));
    };
    let plane = build_reference_plane(cloud, &hole, cfg)?;
    let mesh = &plane.mesh;
    let threshold = cfg.admissibility_multiplier * hole.restricted_filling_distance;
    let projected = local_footprint(cloud, &plane, threshold);
    let admissible = admissibility_mask(mesh, &projected, threshold);

    let lifted = component_functions(&plane.frame, mesh, &admissible, cloud, &cfg.mmls)?;
    if lifted.all_unknown {
        return Err(Error::SamplingDeficiency("no mesh node could be lifted onto the surface".into()));
    }
    let known_mask = lifted.components[0].mask().clone();
    let solved: Vec<(GridFunction, Option<ComponentReport>)> = lifted
        .components
        .into_par_iter()
        .enumerate()
        .map(|(c, g)| {
            if g.is_complete() {
                return Ok((g, None));
            }
            let wrap = |e: Error| Error::Component { component: c, source: Box::new(e) };
            match cfg.backend {
                Backend::Variational => {
                    let vc = VariationalConfig { k: cfg.k, rank_tolerance: cfg.mmls.rank_tolerance };
                    let (done, diag) = impute_variational(&g, &vc).map_err(wrap)?;
                    Ok((done, Some(ComponentReport::Variational(diag))))
                }
                Backend::Spectral => {
                    let scheme = WeightScheme::HyperbolicCorner;
                    let (done, diag) =
                        impute_spectral(&g, &cfg.spectral, scheme, AxisPolicy::default_for(scheme)).map_err(wrap)?;
                    Ok((done, Some(ComponentReport::Spectral(diag))))
                }
            }
        })
        .collect::<Result<_>>()?;

    let points: Vec<Vec<f64>> = (0..mesh.len()).map(|i| solved.iter().map(|(g, _)| g.raw_values()[i]).collect()).collect();
    let tags: Vec<PointTag> =
        (0..mesh.len()).map(|i| if known_mask.is_known(i) { PointTag::Known } else { PointTag::Imputed }).collect();
    let max_for = |tag: PointTag| {
        truth.map(|s| {
            points
                .par_iter()
                .zip(&tags)
                .filter(|(_, t)| **t == tag)
                .map(|(p, _)| s.distance(p))
                .reduce(|| 0.0, f64::max)
        })
    };
    let imputed_nodes = tags.iter().filter(|&&t| t == PointTag::Imputed).count();
    let diagnostics = HoleFillDiagnostics {
        spacing: detection.spacing,
        boundary_points: detection.boundary_points,
        other_hole_diameters: detection.others.iter().map(|h| h.diameter).collect(),
        outer_rims: detection.outer_rims,
        diameter_over_filling_distance: hole.diameter / hole.restricted_filling_distance,
        plane_eigen_gap: plane.eigen_gap,
        mesh_nodes_per_axis: mesh.points_per_axis(),
        mesh_spacing: plane.spacing,
        mesh_spacing_ratio: plane.spacing / hole.restricted_filling_distance,
        cube_edge: plane.cube_edge,
        admissible_nodes: admissible.iter().filter(|&&a| a).count(),
        imputed_nodes,
        failed_projections: lifted.failed_nodes.len(),
        k: cfg.k,
        backend: cfg.backend,
        components: solved.iter().filter_map(|(_, r)| r.clone()).collect(),
        max_known_distance: max_for(PointTag::Known),
        max_imputed_distance: if imputed_nodes > 0 { max_for(PointTag::Imputed) } else { None },
        hole,
    };
    Ok(HoleFillOutcome::Filled(Box::new(HoleFillResult { points, tags, plane, diagnostics })))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossSectionResult {
    pub level: f64,
    pub skipped: bool,
    pub note: Option<String>,
    pub imputed_points: usize,
    /// Largest `| ‖x‖ − |level| |` over imputed points.
    pub max_radius_error: f64,
    /// Largest componentwise error against the exact parametrization.
    pub max_value_error: f64,
    #[serde(skip)]
    pub completed: Vec<GridFunction>,
}

/// Fills a shared missing region on each cross-section `x₄ = level` of the
/// cone in `ℝ⁴` by variational imputation of `x₁, x₂, x₃` on the chart grid.
pub fn cross_section_demo(levels: &[f64], points: usize, hole_radius: f64, k: usize) -> Result<Vec<CrossSectionResult>> {
    let cfg = VariationalConfig::new(k)?;
    let sections = cone_sections(levels, points, hole_radius)?;
    sections
        .into_par_iter()
        .map(|s| {
            if s.level.abs() < 1e-12 {
                return Ok(CrossSectionResult {
                    level: s.level,
                    skipped: true,
                    note: Some("section degenerates to a point".into()),
                    imputed_points: 0,
                    max_radius_error: 0.0,
                    max_value_error: 0.0,
                    completed: Vec::new(),
                });
            }
            let completed = s
                .components
                .iter()
                .enumerate()
                .map(|(c, g)| {
                    impute_variational(g, &cfg)
                        .map(|r| r.0)
                        .map_err(|e| Error::Component { component: c, source: Box::new(e) })
                })
                .collect::<Result<Vec<_>>>()?;
            let unknown = s.components[0].mask().unknown_indices();
            let mut max_radius_error = 0.0f64;
            let mut max_value_error = 0.0f64;
            for &i in &unknown {
                let x: Vec<f64> = completed.iter().map(|g| g.raw_values()[i]).collect();
                max_radius_error = max_radius_error.max((dot(&x, &x).sqrt() - s.level.abs()).abs());
                for (g, e) in completed.iter().zip(&s.exact) {
                    max_value_error = max_value_error.max((g.raw_values()[i] - e.raw_values()[i]).abs());
                }
            }
            Ok(CrossSectionResult {
                level: s.level,
                skipped: false,
                note: None,
                imputed_points: unknown.len(),
                max_radius_error,
                max_value_error,
                completed,
            })
        })
        .collect()
}

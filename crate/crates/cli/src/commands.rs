use std::path::PathBuf;
use std::time::Instant;

use mimpute::datasets::{
    annulus_grid, cone_sections, disk_grid, plane_cloud, sphere_cloud, torus_cloud, CloudDataset, GridDataset, Plane, Sphere,
    Surface, VariableTorus,
};
use mimpute::grid::GridFunction;
use mimpute::holefill::{cross_section_demo, fill_manifold_hole, Backend, HoleFillOutcome, PointTag};
use mimpute::io;
use mimpute::mmls::PointCloud;
use mimpute::spectral::{coefficient_magnitudes, impute_spectral, WeightScheme};
use mimpute::variational::{
    affected_stencil_report, assemble_variational, error_scaling_study, impute_variational, impute_variational_per_hole,
    solve_variational, HoleScenario,
};
use mimpute::verify::run_suite;
use mimpute::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Command, RunConfig, Shape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum TruthSurface {
    Plane(Plane),
    Sphere(Sphere),
    Torus(VariableTorus),
}

impl TruthSurface {
    pub fn surface(&self) -> &dyn Surface {
        match self {
            TruthSurface::Plane(p) => p,
            TruthSurface::Sphere(s) => s,
            TruthSurface::Torus(t) => t,
        }
    }
}

/// Ground-truth sidecar for a generated point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub surface: TruthSurface,
    pub hole_center: Option<Vec<f64>>,
    pub hole_radius: f64,
    pub hole_normal: Option<Vec<f64>>,
    pub seed: u64,
}

pub fn run(cfg: &RunConfig) -> Result<i32> {
    let command = cfg.command.ok_or_else(|| Error::Config("no command given".into()))?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    io::write_json(&cfg.output_dir.join("config.json"), cfg)?;
    match command {
        Command::ImputeGrid => impute_grid(cfg),
        Command::ImputeManifold => impute_manifold(cfg),
        Command::Verify => verify(cfg),
        Command::Generate => generate(cfg),
        Command::Bench => bench(cfg),
    }
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn grid_dataset(cfg: &RunConfig, shape: Shape) -> Result<GridDataset> {
    let n = cfg.grid_points.expect("materialized");
    let hole = cfg.hole_radius.expect("materialized");
    match shape {
        Shape::AnnulusGrid => annulus_grid(n, cfg.outer_radius.expect("materialized"), hole, cfg.noise, cfg.seed),
        Shape::DiskGrid => disk_grid(n, hole, cfg.noise, cfg.seed),
        _ => Err(Error::Config(format!("{shape:?} is not a grid dataset"))),
    }
}

fn cloud_dataset(cfg: &RunConfig, shape: Shape) -> Result<(CloudDataset, TruthSurface)> {
    let hole = cfg.hole_radius.expect("materialized");
    match shape {
        Shape::Torus => {
            let torus = cfg.torus();
            Ok((torus_cloud(&torus, cfg.samples.expect("materialized"), cfg.hole_u, hole, cfg.seed)?, TruthSurface::Torus(torus)))
        }
        Shape::Sphere => {
            let sphere = Sphere { radius: cfg.sphere_radius };
            let data = sphere_cloud(cfg.sphere_radius, cfg.samples.expect("materialized"), [0.0, 0.0, 1.0], hole, cfg.seed)?;
            Ok((data, TruthSurface::Sphere(sphere)))
        }
        Shape::Plane => {
            let plane = Plane { origin: vec![0.0; 3], basis: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]] };
            let data = plane_cloud(&plane, cfg.plane_half, cfg.plane_spacing, cfg.plane_jitter, [0.0, 0.0], hole, cfg.seed)?;
            Ok((data, TruthSurface::Plane(plane)))
        }
        _ => Err(Error::Config(format!("{shape:?} is not a point-cloud dataset"))),
    }
}

fn load_grid(cfg: &RunConfig) -> Result<(GridFunction, Option<GridDataset>)> {
    if let Some(path) = &cfg.input {
        let raw = io::read_grid_csv(path, cfg.box_origin, cfg.box_edge)?;
        let Some(mask_path) = &cfg.mask else { return Ok((raw, None)) };
        let mask = io::read_mask_csv(mask_path, raw.grid())?;
        let values: Vec<f64> = raw
            .values_with_nan()
            .into_iter()
            .enumerate()
            .map(|(i, v)| match (mask.is_known(i), v.is_nan()) {
                (true, true) => Err(Error::Config(format!("mask marks grid point {i} known but its value is NaN"))),
                (false, _) => Ok(0.0),
                (true, false) => Ok(v),
            })
            .collect::<Result<_>>()?;
        return Ok((GridFunction::new(raw.grid().clone(), values, mask)?, None));
    }
    match cfg.shape {
        Some(shape) if shape.is_grid() => {
            let data = grid_dataset(cfg, shape)?;
            io::write_grid_csv(io::create_file(&out(cfg, "data.csv"))?, &data.data)?;
            io::write_grid_csv(io::create_file(&out(cfg, "exact.csv"))?, &data.exact)?;
            Ok((data.data.clone(), Some(data)))
        }
        _ => Err(Error::Config("impute-grid needs an input file or a grid shape".into())),
    }
}

fn max_error(done: &GridFunction, exact: &GridFunction, indices: &[usize]) -> f64 {
    indices.iter().map(|&i| (done.raw_values()[i] - exact.raw_values()[i]).abs()).fold(0.0, f64::max)
}

pub fn impute_grid(cfg: &RunConfig) -> Result<i32> {
    let (gf, dataset) = load_grid(cfg)?;
    let grid = gf.grid();
    let unknown = gf.mask().unknown_indices();
    let (done, solver) = match cfg.backend {
        Backend::Spectral => {
            let (done, diag) = impute_spectral(&gf, &cfg.decay_params()?, cfg.weight_scheme, cfg.axis_policy())?;
            io::write_coefficients_csv(io::create_file(&out(cfg, "coefficients.csv"))?, &done)?;
            let mut solver = serde_json::to_value(&diag)?;
            solver["weight_scheme"] = serde_json::to_value(cfg.weight_scheme)?;
            solver["axis_policy"] = serde_json::to_value(cfg.axis_policy())?;
            (done, solver)
        }
        Backend::Variational if cfg.per_hole => {
            let (done, diags) = impute_variational_per_hole(&gf, &cfg.variational()?)?;
            (done, json!({ "holes": diags }))
        }
        Backend::Variational => {
            let patch = assemble_variational(&gf, &cfg.variational()?)?;
            let (done, diag) = solve_variational(&patch)?;
            let report = affected_stencil_report(&patch, &done, dataset.as_ref().map(|d| &d.exact))?;
            io::write_json(&out(cfg, "affected_stencils.json"), &report)?;
            (done, serde_json::to_value(&diag)?)
        }
    };
    io::write_grid_csv(io::create_file(&out(cfg, "completed.csv"))?, &done)?;
    let errors = dataset.as_ref().map(|d| {
        json!({
            "max_hole_error": max_error(&done, &d.exact, &d.hole),
            "max_unknown_error": max_error(&done, &d.exact, &unknown),
        })
    });
    let diagnostics = json!({
        "command": "impute-grid",
        "seed": cfg.seed,
        "backend": cfg.backend,
        "dim": grid.dim(),
        "points_per_axis": grid.points_per_axis(),
        "known": gf.mask().known_count(),
        "unknown": unknown.len(),
        "solver": solver,
        "errors": errors,
    });
    io::write_json(&out(cfg, "diagnostics.json"), &diagnostics)?;
    println!("{}", serde_json::to_string(&diagnostics)?);
    Ok(0)
}

fn load_cloud(cfg: &RunConfig) -> Result<(PointCloud, Option<TruthSurface>)> {
    if let Some(path) = &cfg.input {
        let file = io::read_point_cloud(path)?;
        let ambient = file.points.first().map_or(0, Vec::len);
        let intrinsic = file.header.map(|h| h.intrinsic).or(cfg.intrinsic_dim).unwrap_or(ambient.saturating_sub(1));
        let truth = match &cfg.truth {
            Some(t) => {
                let text = std::fs::read_to_string(t)?;
                let parsed: TruthFile =
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", t.display())))?;
                Some(parsed.surface)
            }
            None => None,
        };
        return Ok((PointCloud::new(file.points, intrinsic)?, truth));
    }
    match cfg.shape {
        Some(shape @ (Shape::Torus | Shape::Sphere | Shape::Plane)) => {
            let (data, truth) = cloud_dataset(cfg, shape)?;
            Ok((PointCloud::new(data.points, data.intrinsic_dim)?, Some(truth)))
        }
        _ => Err(Error::Config("impute-manifold needs an input cloud or a cloud shape".into())),
    }
}

fn cross_sections(cfg: &RunConfig) -> Result<i32> {
    let n = cfg.grid_points.expect("materialized");
    let hole = cfg.hole_radius.expect("materialized");
    let results = cross_section_demo(&cfg.levels, n, hole, cfg.k)?;
    let chart = cone_sections(&[1.0], n, hole)?;
    let unknown: Vec<bool> = (0..chart[0].grid.len()).map(|i| !chart[0].components[0].mask().is_known(i)).collect();
    let mut sections = Vec::new();
    for (j, r) in results.iter().enumerate() {
        if r.skipped {
            eprintln!("notice: level {} skipped: {}", r.level, r.note.as_deref().unwrap_or(""));
            continue;
        }
        let points: Vec<Vec<f64>> = (0..unknown.len())
            .map(|i| r.completed.iter().map(|g| g.raw_values()[i]).chain(std::iter::once(r.level)).collect())
            .collect();
        let tags: Vec<PointTag> = unknown.iter().map(|&u| if u { PointTag::Imputed } else { PointTag::Known }).collect();
        let name = format!("section_{j}.csv");
        io::write_tagged_points(io::create_file(&out(cfg, &name))?, &points, &tags)?;
        sections.push(name);
    }
    let diagnostics = json!({
        "command": "impute-manifold",
        "shape": "cone4d",
        "seed": cfg.seed,
        "k": cfg.k,
        "levels": results,
        "files": sections,
    });
    io::write_json(&out(cfg, "diagnostics.json"), &diagnostics)?;
    println!("{}", serde_json::to_string(&diagnostics)?);
    Ok(0)
}

pub fn impute_manifold(cfg: &RunConfig) -> Result<i32> {
    if cfg.shape == Some(Shape::Cone4d) && cfg.input.is_none() {
        return cross_sections(cfg);
    }
    let (cloud, truth) = load_cloud(cfg)?;
    let hf = cfg.holefill()?;
    match fill_manifold_hole(&cloud, &hf, truth.as_ref().map(|t| t.surface()))? {
        HoleFillOutcome::NoHole(detection) => {
            eprintln!("notice: no hole detected; nothing to fill");
            let diagnostics = json!({
                "command": "impute-manifold",
                "status": "no-hole",
                "seed": cfg.seed,
                "samples": cloud.len(),
                "detection": detection,
            });
            io::write_json(&out(cfg, "diagnostics.json"), &diagnostics)?;
            println!("{}", serde_json::to_string(&diagnostics)?);
            Ok(0)
        }
        HoleFillOutcome::Filled(res) => {
            io::write_tagged_points(io::create_file(&out(cfg, "points.csv"))?, &res.points, &res.tags)?;
            let diagnostics = json!({
                "command": "impute-manifold",
                "status": "filled",
                "seed": cfg.seed,
                "samples": cloud.len(),
                "reference_frame": res.plane.frame,
                "fill": res.diagnostics,
            });
            io::write_json(&out(cfg, "diagnostics.json"), &diagnostics)?;
            let d = &res.diagnostics;
            println!(
                "{}",
                json!({
                    "status": "filled",
                    "imputed_nodes": d.imputed_nodes,
                    "max_known_distance": d.max_known_distance,
                    "max_imputed_distance": d.max_imputed_distance,
                })
            );
            Ok(0)
        }
    }
}

pub fn verify(cfg: &RunConfig) -> Result<i32> {
    let rows = run_suite(cfg.seed)?;
    let width = rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(0);
    for r in &rows {
        let pad = width - r.name.chars().count();
        println!(
            "{} {}{}  measured {:>12.4e}  bound {:>12.4e}  {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            " ".repeat(pad),
            r.measured,
            r.bound,
            r.detail
        );
    }
    let all = rows.iter().all(|r| r.pass);
    io::write_json(&out(cfg, "verify.json"), &json!({ "seed": cfg.seed, "all_pass": all, "checks": rows }))?;
    Ok(if all { 0 } else { 1 })
}

pub fn generate(cfg: &RunConfig) -> Result<i32> {
    let shape = cfg.shape.ok_or_else(|| Error::Config("generate needs a shape".into()))?;
    let mut files = Vec::new();
    match shape {
        Shape::AnnulusGrid | Shape::DiskGrid => {
            let data = grid_dataset(cfg, shape)?;
            io::write_grid_csv(io::create_file(&out(cfg, "data.csv"))?, &data.data)?;
            io::write_grid_csv(io::create_file(&out(cfg, "exact.csv"))?, &data.exact)?;
            io::write_mask_csv(io::create_file(&out(cfg, "mask.csv"))?, data.data.grid(), data.data.mask())?;
            files.extend(["data.csv", "exact.csv", "mask.csv"].map(String::from));
        }
        Shape::Torus | Shape::Sphere | Shape::Plane => {
            let (data, surface) = cloud_dataset(cfg, shape)?;
            io::write_point_cloud(io::create_file(&out(cfg, "cloud.csv"))?, &data.points, data.intrinsic_dim)?;
            let truth = TruthFile {
                surface,
                hole_center: data.hole_center,
                hole_radius: data.hole_radius,
                hole_normal: data.hole_normal,
                seed: cfg.seed,
            };
            io::write_json(&out(cfg, "truth.json"), &truth)?;
            files.extend(["cloud.csv", "truth.json"].map(String::from));
        }
        Shape::Cone4d => {
            let sections = cone_sections(&cfg.levels, cfg.grid_points.expect("materialized"), cfg.hole_radius.expect("materialized"))?;
            for (j, s) in sections.iter().enumerate() {
                for c in 0..3 {
                    let data = format!("section_{j}_x{}.csv", c + 1);
                    let exact = format!("section_{j}_x{}_exact.csv", c + 1);
                    io::write_grid_csv(io::create_file(&out(cfg, &data))?, &s.components[c])?;
                    io::write_grid_csv(io::create_file(&out(cfg, &exact))?, &s.exact[c])?;
                    files.push(data);
                    files.push(exact);
                }
            }
        }
    }
    let summary = json!({ "command": "generate", "shape": shape, "seed": cfg.seed, "files": files });
    io::write_json(&out(cfg, "manifest.json"), &summary)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(0)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    Ok((value, start.elapsed().as_secs_f64()))
}

/// Re-runs the reference experiments with wall-clock timings.
pub fn bench(cfg: &RunConfig) -> Result<i32> {
    let mut report = serde_json::Map::new();

    let (annulus, secs) = timed(|| {
        let data = annulus_grid(50, std::f64::consts::FRAC_PI_2, 0.8, 0.1, cfg.seed)?;
        let params = cfg.decay_params()?;
        let scheme = WeightScheme::HyperbolicCorner;
        let (done, diag) = impute_spectral(&data.data, &params, scheme, mimpute::spectral::AxisPolicy::default_for(scheme))?;
        let coeff_max = coefficient_magnitudes(&done)?.into_iter().fold(0.0, f64::max);
        Ok(json!({
            "cond_normal": diag.cond_normal,
            "max_hole_error": max_error(&done, &data.exact, &data.hole),
            "max_penalized_coeff": diag.max_penalized_coeff,
            "max_coeff": coeff_max,
        }))
    })?;
    report.insert("annulus_spectral".into(), json!({ "seconds": secs, "result": annulus }));

    let (disk, secs) = timed(|| {
        let data = disk_grid(40, 0.5, 0.01, cfg.seed)?;
        let (done, diag) = impute_variational(&data.data, &cfg.variational()?)?;
        Ok(json!({ "k": cfg.k, "cond_AtA": diag.cond_ata, "max_hole_error": max_error(&done, &data.exact, &data.hole) }))
    })?;
    report.insert("disk_variational".into(), json!({ "seconds": secs, "result": disk }));

    let (scaling, secs) = timed(|| {
        Ok(json!({
            "small_hole": error_scaling_study(HoleScenario::SmallHole, 1, 0.0, &[16, 32, 64, 128], cfg.seed)?,
            "large_hole": error_scaling_study(HoleScenario::LargeHole, 1, 0.0, &[16, 32, 64, 128], cfg.seed)?,
        }))
    })?;
    report.insert("error_scaling".into(), json!({ "seconds": secs, "result": scaling }));

    let (torus, secs) = timed(|| {
        let torus = VariableTorus::default();
        let data = torus_cloud(&torus, 2800, 0.0, 0.2, cfg.seed)?;
        let cloud = PointCloud::new(data.points, 2)?;
        let mut hf = cfg.holefill()?;
        hf.mesh_multiplier = 0.5;
        match fill_manifold_hole(&cloud, &hf, Some(&torus))? {
            HoleFillOutcome::Filled(r) => Ok(json!({
                "max_known_distance": r.diagnostics.max_known_distance,
                "max_imputed_distance": r.diagnostics.max_imputed_distance,
                "imputed_nodes": r.diagnostics.imputed_nodes,
            })),
            HoleFillOutcome::NoHole(_) => Ok(json!({ "status": "no-hole" })),
        }
    })?;
    report.insert("torus_fill".into(), json!({ "seconds": secs, "result": torus }));

    let (cone, secs) = timed(|| {
        let r = cross_section_demo(&[-1.0, -0.5, 0.0, 0.5, 1.0], 33, 0.25, 3)?;
        Ok(json!({ "max_radius_error": r.iter().map(|s| s.max_radius_error).fold(0.0, f64::max) }))
    })?;
    report.insert("cone_sections".into(), json!({ "seconds": secs, "result": cone }));

    let (rows, secs) = timed(|| run_suite(cfg.seed))?;
    report.insert("verify_suite".into(), json!({ "seconds": secs, "all_pass": rows.iter().all(|r| r.pass) }));

    let report = serde_json::Value::Object(report);
    io::write_json(&out(cfg, "bench.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

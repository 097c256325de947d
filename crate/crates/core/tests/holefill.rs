use mimpute::datasets::{plane_cloud, torus_cloud, Plane, VariableTorus};
use mimpute::holefill::{build_reference_plane, detect_hole, fill_manifold_hole, HoleDescriptor, HoleFillConfig, HoleFillOutcome};
use mimpute::mmls::{MmlsConfig, PointCloud};
use mimpute::Error;

fn torus_config() -> HoleFillConfig {
    let mut cfg = HoleFillConfig::new(MmlsConfig::new(5, 0.6).unwrap());
    cfg.mesh_multiplier = 0.5;
    cfg
}

fn flat(hole_at: [f64; 2], radius: f64) -> Vec<Vec<f64>> {
    let plane = Plane { origin: vec![0.0; 3], basis: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]] };
    plane_cloud(&plane, 1.5, 0.1, 0.2, hole_at, radius, 3).unwrap().points
}

#[test]
fn torus_hole_is_located_and_oriented() {
    let torus = VariableTorus::default();
    let data = torus_cloud(&torus, 2800, 0.0, 0.2, 1).unwrap();
    let cloud = PointCloud::new(data.points.clone(), 2).unwrap();
    let cfg = torus_config();
    let det = detect_hole(&cloud, &cfg).unwrap();
    let hole = det.hole.expect("hole found");
    assert!(det.others.is_empty());

    let truth = data.hole_center.unwrap();
    let offset = hole.center.iter().zip(&truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(offset <= hole.restricted_filling_distance, "centre off by {offset}");
    assert!(hole.diameter > 0.5 * 0.4 && hole.diameter < 2.0 * 0.4, "diameter {}", hole.diameter);

    let plane = build_reference_plane(&cloud, &hole, &cfg).unwrap();
    let n = data.hole_normal.unwrap();
    let tilt = plane
        .frame
        .basis
        .iter()
        .map(|b| b.iter().zip(&n).map(|(x, y)| x * y).sum::<f64>().abs())
        .fold(0.0, f64::max);
    assert!(tilt <= 10f64.to_radians().sin(), "tilt {tilt}");
}

#[test]
fn complete_torus_has_no_hole() {
    let data = torus_cloud(&VariableTorus::default(), 2800, 0.0, 0.0, 2).unwrap();
    let cloud = PointCloud::new(data.points, 2).unwrap();
    match fill_manifold_hole(&cloud, &torus_config(), None).unwrap() {
        HoleFillOutcome::NoHole(det) => assert!(det.hole.is_none() && det.others.is_empty()),
        HoleFillOutcome::Filled(_) => panic!("closed surface reported a hole"),
    }
}

#[test]
fn second_hole_is_listed_not_filled() {
    let pts: Vec<Vec<f64>> = flat([0.1, -0.05], 0.35)
        .into_iter()
        .filter(|p| (p[0] - 0.8).hypot(p[1] - 0.8) > 0.2)
        .collect();
    let cloud = PointCloud::new(pts, 2).unwrap();
    let det = detect_hole(&cloud, &HoleFillConfig::new(MmlsConfig::new(3, 0.5).unwrap())).unwrap();
    let hole = det.hole.unwrap();
    assert_eq!(det.others.len(), 1);
    assert!((hole.center[0] - 0.1).hypot(hole.center[1] + 0.05) < 0.1);
    assert!((det.others[0].center[0] - 0.8).hypot(det.others[0].center[1] - 0.8) < 0.1);
    assert!(det.others[0].diameter < hole.diameter);
}

#[test]
fn hole_on_a_crease_has_no_stable_plane() {
    let pts: Vec<Vec<f64>> = flat([0.0, 0.0], 0.3).into_iter().map(|p| vec![p[0], p[1], p[0].abs() * 1.5]).collect();
    let boundary: Vec<usize> = (0..pts.len()).filter(|&i| pts[i][0].hypot(pts[i][1]) < 0.4).collect();
    let cloud = PointCloud::new(pts, 2).unwrap();
    let hole = HoleDescriptor {
        boundary,
        center: vec![0.0; 3],
        diameter: 0.7,
        diameter_graph: None,
        restricted_filling_distance: 0.1,
    };
    let cfg = HoleFillConfig::new(MmlsConfig::new(2, 0.3).unwrap());
    match build_reference_plane(&cloud, &hole, &cfg) {
        Err(Error::UnstablePlane { gap }) => assert!(gap < cfg.plane_gap_tolerance),
        other => panic!("expected an unstable plane, got {other:?}"),
    }
}

#[test]
fn noisy_plane_is_filled_on_the_plane() {
    let mut pts = flat([0.0, 0.0], 0.3);
    for (i, p) in pts.iter_mut().enumerate() {
        p[2] = 1e-3 * ((i * 7919 % 1000) as f64 / 500.0 - 1.0);
    }
    let cloud = PointCloud::new(pts, 2).unwrap();
    let mut cfg = HoleFillConfig::new(MmlsConfig::new(2, 0.5).unwrap());
    cfg.mesh_multiplier = 0.5;
    let plane = Plane { origin: vec![0.0; 3], basis: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]] };
    let HoleFillOutcome::Filled(r) = fill_manifold_hole(&cloud, &cfg, Some(&plane)).unwrap() else {
        panic!("hole not filled")
    };
    assert!(r.diagnostics.imputed_nodes > 0);
    assert!(r.diagnostics.max_imputed_distance.unwrap() < 1e-3);
}

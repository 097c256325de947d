use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use mimpute::holefill::{Backend, HoleFillConfig};
use mimpute::mmls::MmlsConfig;
use mimpute::spectral::{AxisPolicy, DecayParams, WeightScheme};
use mimpute::variational::VariationalConfig;
use mimpute::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ImputeGrid,
    ImputeManifold,
    Verify,
    Generate,
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    AnnulusGrid,
    DiskGrid,
    Plane,
    Sphere,
    Torus,
    Cone4d,
}

impl Shape {
    pub fn is_grid(self) -> bool {
        matches!(self, Shape::AnnulusGrid | Shape::DiskGrid)
    }
}

/// One flat record per run. Absent keys take their defaults; shape-dependent
/// defaults are filled in by [`RunConfig::materialize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub input: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    /// Ground-truth sidecar written by `generate` for a point cloud.
    pub truth: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub backend: Backend,

    pub grid_points: Option<usize>,
    pub box_origin: f64,
    pub box_edge: f64,
    pub order: usize,
    pub c_bound: f64,
    pub derivative_bound: f64,
    pub weight_scheme: WeightScheme,
    pub axis_policy: Option<AxisPolicy>,
    pub k: usize,
    pub per_hole: bool,

    pub degree: usize,
    pub radius: f64,
    pub sigma: Option<f64>,
    pub intrinsic_dim: Option<usize>,
    pub mesh_multiplier: f64,
    pub admissibility_multiplier: f64,
    pub gap_radius_factor: f64,
    pub gap_angle_deg: f64,
    pub plane_gap_tolerance: f64,

    pub shape: Option<Shape>,
    pub hole_radius: Option<f64>,
    pub outer_radius: Option<f64>,
    pub samples: Option<usize>,
    pub torus_major_radius: f64,
    pub torus_tube_radius: f64,
    pub torus_tube_amplitude: f64,
    pub hole_u: f64,
    pub sphere_radius: f64,
    pub plane_half: f64,
    pub plane_spacing: f64,
    pub plane_jitter: f64,
    pub levels: Vec<f64>,

    pub noise: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hf = HoleFillConfig::new(MmlsConfig::new(5, 0.6).expect("valid defaults"));
        let torus = mimpute::datasets::VariableTorus::default();
        Self {
            command: None,
            input: None,
            mask: None,
            truth: None,
            output_dir: PathBuf::from("out"),
            backend: Backend::Variational,
            grid_points: None,
            box_origin: 0.0,
            box_edge: 2.0 * PI,
            order: DecayParams::default().order,
            c_bound: DecayParams::default().c_bound,
            derivative_bound: DecayParams::default().derivative_bound,
            weight_scheme: WeightScheme::HyperbolicCorner,
            axis_policy: None,
            k: VariationalConfig::default().k,
            per_hole: false,
            degree: hf.mmls.degree,
            radius: hf.mmls.radius,
            sigma: None,
            intrinsic_dim: None,
            mesh_multiplier: hf.mesh_multiplier,
            admissibility_multiplier: hf.admissibility_multiplier,
            gap_radius_factor: hf.gap_radius_factor,
            gap_angle_deg: hf.gap_angle_deg,
            plane_gap_tolerance: hf.plane_gap_tolerance,
            shape: None,
            hole_radius: None,
            outer_radius: None,
            samples: None,
            torus_major_radius: torus.major_radius,
            torus_tube_radius: torus.tube_radius,
            torus_tube_amplitude: torus.tube_amplitude,
            hole_u: 0.0,
            sphere_radius: 1.0,
            plane_half: 1.5,
            plane_spacing: 0.1,
            plane_jitter: 0.2,
            levels: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            noise: 0.0,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fills shape-dependent defaults so the written copy is complete.
    pub fn materialize(&mut self) {
        let Some(shape) = self.shape else { return };
        let (points, hole, outer, samples) = match shape {
            Shape::AnnulusGrid => (Some(50), 0.8, Some(PI / 2.0), None),
            Shape::DiskGrid => (Some(40), 0.5, None, None),
            Shape::Cone4d => (Some(33), 0.25, None, None),
            Shape::Torus => (None, 0.2, None, Some(2800)),
            Shape::Sphere => (None, 0.35, None, Some(2000)),
            Shape::Plane => (None, 0.3, None, None),
        };
        self.grid_points = self.grid_points.or(points);
        self.hole_radius = self.hole_radius.or(Some(hole));
        self.outer_radius = self.outer_radius.or(outer);
        self.samples = self.samples.or(samples);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise amplitude must be non-negative, got {}", self.noise));
        }
        if !(self.box_edge > 0.0 && self.box_edge.is_finite() && self.box_origin.is_finite()) {
            return bad("box_edge must be positive and box_origin finite".into());
        }
        if let Some(n) = self.grid_points {
            if n < 2 {
                return bad(format!("grid_points must be at least 2, got {n}"));
            }
        }
        if let Some(r) = self.hole_radius {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("hole_radius must be non-negative, got {r}"));
            }
        }
        self.decay_params()?;
        self.variational()?;
        self.holefill()?;
        Ok(())
    }

    pub fn decay_params(&self) -> Result<DecayParams> {
        DecayParams::new(self.order, self.c_bound, self.derivative_bound).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn axis_policy(&self) -> AxisPolicy {
        self.axis_policy.unwrap_or(AxisPolicy::default_for(self.weight_scheme))
    }

    pub fn variational(&self) -> Result<VariationalConfig> {
        VariationalConfig::new(self.k).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn holefill(&self) -> Result<HoleFillConfig> {
        let mut mmls = MmlsConfig::new(self.degree, self.radius).map_err(|e| Error::Config(e.to_string()))?;
        mmls.sigma = self.sigma;
        let cfg = HoleFillConfig {
            mmls,
            k: self.k,
            backend: self.backend,
            spectral: self.decay_params()?,
            gap_radius_factor: self.gap_radius_factor,
            gap_angle_deg: self.gap_angle_deg,
            admissibility_multiplier: self.admissibility_multiplier,
            mesh_multiplier: self.mesh_multiplier,
            plane_gap_tolerance: self.plane_gap_tolerance,
            min_boundary_points: 3,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn torus(&self) -> mimpute::datasets::VariableTorus {
        mimpute::datasets::VariableTorus {
            major_radius: self.torus_major_radius,
            tube_radius: self.torus_tube_radius,
            tube_amplitude: self.torus_tube_amplitude,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"seed": 3, "sedd": 4}"#).unwrap_err();
        assert!(err.to_string().contains("sedd"));
    }

    #[test]
    fn defaults_materialize_per_shape() {
        let mut c: RunConfig = serde_json::from_str(r#"{"shape": "annulus-grid", "noise": 0.1}"#).unwrap();
        c.materialize();
        assert_eq!(c.grid_points, Some(50));
        assert_eq!(c.hole_radius, Some(0.8));
        c.validate().unwrap();
        let round: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let c = RunConfig { mesh_multiplier: 3.0, ..RunConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = RunConfig { noise: -1.0, ..RunConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}

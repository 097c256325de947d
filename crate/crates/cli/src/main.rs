//! `mimpute`: grid imputation, manifold hole filling and bound verification.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mimpute::Error;
use serde_json::json;

use config::{Command, RunConfig, Shape};

/// Reconstructs missing grid values and fills holes in sampled manifolds.
///
/// Settings come from an optional JSON config; flags override it. The run
/// writes the completed config, results and diagnostics to the output
/// directory.
#[derive(Debug, Parser)]
#[command(name = "mimpute", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, env = "MIMPUTE_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// variational | spectral
    #[arg(long)]
    backend: Option<String>,
    /// hyperbolic-corner | prescribed-decay
    #[arg(long)]
    weight_scheme: Option<String>,
    /// penalized | unpenalized
    #[arg(long)]
    axis_policy: Option<String>,
    #[arg(long, value_enum)]
    shape: Option<Shape>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    box_origin: Option<f64>,
    #[arg(long)]
    box_edge: Option<f64>,
    /// Decay order M.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    c_bound: Option<f64>,
    #[arg(long)]
    derivative_bound: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Solve each hole in its own patch.
    #[arg(long)]
    per_hole: bool,
    #[arg(long)]
    degree: Option<usize>,
    /// MMLS neighbourhood radius.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    intrinsic_dim: Option<usize>,
    #[arg(long)]
    mesh_multiplier: Option<f64>,
    #[arg(long)]
    admissibility_multiplier: Option<f64>,
    #[arg(long)]
    hole_radius: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_enum<T: serde::de::DeserializeOwned>(flag: &str, value: &str) -> Result<T, Error> {
    serde_json::from_value(json!(value)).map_err(|_| Error::Config(format!("invalid value `{value}` for --{flag}")))
}

impl Cli {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_path(p)?,
            None => RunConfig::default(),
        };
        c.command = Some(self.command);
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f; } )* };
        }
        set!(output_dir, box_origin, box_edge, order, c_bound, derivative_bound, k, degree, radius, mesh_multiplier);
        set!(admissibility_multiplier, noise, seed);
        set_opt!(input, mask, truth, shape, grid_points, sigma, intrinsic_dim, hole_radius, samples);
        if let Some(b) = &self.backend {
            c.backend = parse_enum("backend", b)?;
        }
        if let Some(w) = &self.weight_scheme {
            c.weight_scheme = parse_enum("weight-scheme", w)?;
        }
        if let Some(a) = &self.axis_policy {
            c.axis_policy = Some(parse_enum("axis-policy", a)?);
        }
        c.per_hole |= self.per_hole;
        c.materialize();
        c.validate()?;
        Ok(c)
    }
}

fn hint(e: &Error) -> Option<&'static str> {
    let inner = match e {
        Error::Component { source, .. } => source.as_ref(),
        other => other,
    };
    match inner {
        Error::MarginViolation { .. } => Some("enlarge the computational region R: reduce the mesh multiplier or the admissibility multiplier"),
        Error::UnstablePlane { .. } => Some("the hole boundary is too curved for one reference plane; split the hole or use a smaller region"),
        Error::NonUniqueMinimizer { .. } => Some("add known values around the hole or lower k"),
        _ => None,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.into_config().and_then(|cfg| commands::run(&cfg)) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let code: u8 = if e.is_input_error() { 2 } else { 1 };
            let report = json!({
                "error": {
                    "kind": e.kind(),
                    "message": e.to_string(),
                    "hint": hint(&e),
                    "exit_code": code,
                }
            });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}

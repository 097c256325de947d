//! Missing-data reconstruction on uniform grids and hole filling on sampled
//! manifolds.

pub mod datasets;
pub mod dft;
pub mod error;
pub mod grid;
pub mod holefill;
pub mod io;
pub mod linalg;
pub mod mmls;
pub mod spectral;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};

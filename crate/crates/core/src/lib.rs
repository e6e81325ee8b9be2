//! Level structure, optical transitions and polarized PL/PLE spectra of
//! excitons and biexcitons in a single semiconductor quantum dot.

pub mod basis;
pub mod ci;
pub mod cli;
pub mod coulomb;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod model;
pub mod optics;
pub mod poly;
pub mod spectra;
pub mod spinfine;
pub mod units;

pub use error::{Error, Result};

//! Single-excitation simulator and coupling-design toolkit for giant emitters
//! coupled non-locally to tight-binding baths.

pub mod collective;
pub mod config;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod fourier;
pub mod lattice;
mod linalg;
pub mod observables;
mod reduce;
pub mod runner;

pub use error::{Error, Result};
pub use runner::cli_main;

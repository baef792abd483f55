//! Finite-volume tracer transport on arbitrary unstructured meshes.
//!
//! The crate implements the cubicFit multidimensional method-of-lines scheme
//! (upwind-biased stencils, stabilised least-squares reconstruction with
//! precomputed weights) together with a multidimensional linear-upwind
//! baseline, mesh generators for terrain-following, cut-cell, slanted-cell
//! and spherical-shell meshes, and the idealised test cases used to compare
//! the two schemes.

pub mod cases;
pub mod cli;
pub mod fit;
pub mod mesh;
pub mod meshgen;
pub mod meshio;
pub mod stencil;
pub mod terrain;
pub mod transport;

pub use mesh::{BcKind, GeometryKind, Mesh, Patch};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("degenerate face {face}: {reason}")]
    DegenerateFace { face: usize, reason: String },
    #[error("zero or negative volume in cell {cell}: {volume}")]
    BadVolume { cell: usize, volume: f64 },
    #[error("stencil error: {0}")]
    Stencil(String),
    #[error("numerical blow-up at t = {time} s (cell {cell})")]
    BlowUp { time: f64, cell: usize },
    #[error("case setup error: {0}")]
    Case(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid arguments: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

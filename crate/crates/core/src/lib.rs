//! Riemannian shape analysis of regular closed and open curves.
//!
//! Curves are sampled on a uniform parameter grid over `[0, 2π]`. On top of
//! the arc-length calculus in [`curve`] the crate provides the square root
//! velocity transform ([`srv`]), reparametrization matching ([`reparam`]),
//! evaluation of the L², almost-local, elastic and constant-coefficient
//! Sobolev metrics ([`metrics`]) and geodesic computations for them
//! ([`geodesics`]). [`io`] reads and writes the JSON file formats.

pub mod curve;
pub mod error;
pub mod geodesics;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod path;
pub mod reparam;
pub mod srv;

pub use curve::{
    arc_calculus, ds_derivative, integrate_ds, resample, validate_regular, ArcData, DiscreteCurve,
    RegularityReport, TangentField,
};
pub use error::{Result, ShapeError};
pub use grid::{Grid, Topology, Vec3};

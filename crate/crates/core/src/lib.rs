//! Quasi-rigid area-preserving deformations between planar domains and
//! conformally parameterized surfaces.
//!
//! The grid, calculus, interpolation and energy code is generic over the
//! scalar type; the solvers and the flow run in `f64`. The aliases below name
//! the `f64` instances.

pub mod deformation;
pub mod density;
pub mod elliptic;
pub mod error;
pub mod flow;
pub mod grid;
pub mod io;
pub mod moser;
pub mod scalar;
pub mod stream;
pub mod testmaps;

pub use error::{Error, Result};

pub type Chart = grid::Chart<f64>;
pub type ScalarField = grid::ScalarField<f64>;
pub type ComplexField = grid::ComplexField<f64>;
pub type DiffeoMap = deformation::DiffeoMap<f64>;
pub type ConformalDensity = density::ConformalDensity<f64>;
pub type Densities = density::Densities<f64>;

//! Worldline Monte Carlo for Casimir interaction energies of a Dirichlet
//! scalar: sphere-plate, cylinder-plate and D-dimensional parallel plates.

pub mod bvh;
pub mod cylinder_plate;
pub mod engine;
pub mod ensemble_file;
pub mod error;
pub mod geometry;
pub mod loops;
pub mod parallel;
pub mod parallel_plates;
pub mod pfa;
pub mod sphere_plate;
pub mod stats;
pub mod support;

pub use engine::{Method, QuadratureSpec};
pub use ensemble_file::{read_ensemble, write_ensemble};
pub use error::{Error, Result};
pub use loops::{generate_ensemble, LoopGenerator, LoopParams, LoopSource, UnitLoopEnsemble};
pub use pfa::Geometry;

//! Adiabatic potential surfaces and synthetic gauge fields for a pair of
//! dipole-dipole interacting Rydberg atoms in `nsnp` states.
//!
//! The numerical core is generic over [`scalar::Real`]; the aliases below fix
//! it to `f64`, which is what the CLI and the acceptance tests use.

pub mod adiabatic;
pub mod angular;
pub mod boundstates;
pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod io;
pub mod model;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ModelParams, TwoAtomBasis};

pub type Position = model::Position<f64>;
pub type InteractionModel = model::InteractionModel<f64>;
pub type AdiabaticFrame = adiabatic::AdiabaticFrame<f64>;
pub type SurfaceScan = adiabatic::SurfaceScan<f64>;
pub type WellDescriptor = adiabatic::WellDescriptor<f64>;
pub type LocalGauge = gauge::LocalGauge<f64>;
pub type WellProfile = boundstates::WellProfile<f64>;

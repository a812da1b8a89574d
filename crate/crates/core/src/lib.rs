//! Pseudospectral laboratory for nonlinear Schrödinger ground states under a
//! harmonic trap acting in two of three directions.

pub mod analysis;
pub mod corpus;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod oscillator;
pub mod rearrange;
pub mod sweep;
pub mod verify;

pub use energy::{EnergyReport, Exponent};
pub use error::{NlsError, Result};
pub use field::Field;
pub use grid::Grid3;

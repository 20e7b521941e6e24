//! Decoding-wave (soliton) velocities of spatially coupled density evolution.
//!
//! The crate covers LDPC ensembles on binary memoryless symmetric channels
//! (exactly on the BEC, through quantized densities or the Gaussian
//! approximation otherwise) and general scalar coupled recursions such as
//! generalized LDPC codes and compressive-sensing state evolution.

pub mod coupled;
pub mod density;
pub mod ensemble;
pub mod error;
pub mod ga;
pub mod numeric;
pub mod scaling;
pub mod scalar;
pub mod single;
pub mod soliton;

pub use density::{ChannelFamily, ChannelSpec, Density, DiracKind, Grid};
pub use ensemble::{DegreeDistribution, Poly};
pub use error::{Error, Result};

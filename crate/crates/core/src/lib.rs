//! Boolean model simulation with heavy-tailed homothetic grains.

pub mod error;
pub mod charlier;
pub mod estimators;
pub mod field;
pub mod geometry;
pub mod grains;
pub mod harness;
pub mod limitlaw;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
pub use grains::{BaseShape, GrainModel, GrainSample, HeavyTailLaw};
pub use rng::RngStream;

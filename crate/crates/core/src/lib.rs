//! Numerical flag Hardy space machinery on discretized Heisenberg groups.
//!
//! The crate is organised by layer: [`group`] arithmetic, [`tiling`] geometry,
//! [`fields`] sampled functions, [`spectral`] joint functional calculus,
//! [`kernels`], [`operators`], [`atoms`] and the experiment drivers in
//! [`experiments`].

pub mod atoms;
pub mod averaging;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod group;
pub mod kernels;
pub mod multiplier;
pub mod operators;
pub mod partition;
pub mod spectral;
pub mod tiling;
pub mod util;

pub use error::{Error, Result};
pub use fields::{GridField, GridSet, GridSpec, Line, VectorField, C64};
pub use group::{GroupContext, HPoint, Metric};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

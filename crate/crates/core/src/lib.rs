//! Lower bounds and expected values of the per-message electric energy of
//! battery-powered IoT uplinks.
//!
//! The crate is organized bottom-up:
//!
//! - [`special`]: Lambert-W, gamma, Gauss hypergeometric and adaptive quadrature.
//! - [`energy`]: the link-level model and its closed-form minimum.
//! - [`point_process`]: PPP, Matérn hard-core and triangular-lattice gateways.
//! - [`channel`]: fading and interference laws.
//! - [`expectation`]: network-level expected energy, Monte-Carlo and quadrature.
//! - [`deployment`]: real site lists, Voronoi cells and per-cell intensities.
//!
//! All internal quantities are linear SI (watts, hertz, meters, seconds,
//! joules); see [`units`] for dB conversions at the edges.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod deployment;
pub mod energy;
pub mod error;
pub mod expectation;
pub mod grid;
pub mod point_process;
pub mod special;
pub mod stats;
pub mod units;
pub mod validate;

pub use channel::{EmpiricalCdf, FadingModel, InterferenceModel};
pub use energy::{
    fit_power_model, load_power_samples, LinkState, OperatingPoint, PowerFit, RadioConfig,
};
pub use error::{Error, Result};
pub use expectation::{ChannelSpec, ExpectationResult, MonteCarloSpec};
pub use point_process::{ProcessKind, ProcessSpec, Window};
pub use special::QuadSpec;

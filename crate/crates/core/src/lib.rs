//! Simulation and optimization of cell-free bistatic backscatter networks:
//! distributed single-antenna access points illuminate energy-harvesting tags
//! whose reflections are decoded by a multi-antenna reader.
//!
//! The pipeline per Monte Carlo drop is
//! [`geometry::place_network`] → [`channel::draw_channels`] →
//! [`pilots::run_pilot_phase`] (estimated CSI only) →
//! [`optimizer::alternating_optimization`] → evaluation on the true channels.

pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod numerics;
pub mod optimizer;
pub mod pilots;
pub mod rng;
pub mod system;
pub mod units;

pub use channel::{draw_channels, CMatrix, ChannelRealization};
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use geometry::{place_network, NetworkGeometry};
pub use system::{LinkCsi, Solution};

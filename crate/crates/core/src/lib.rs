//! Simulation and learning toolkit for IRS-assisted downlinks.
//!
//! The BS learns the IRS phase configuration and its own beamformer straight
//! from received uplink pilots, and is compared against LS estimation followed by
//! alternating optimization, the perfect-CSI optimum, random phases and the
//! direct path alone.
//!
//! - [`channel`]: array responses, pathloss, multipath and cascaded channels.
//! - [`pilot`]: DFT reflection schedule and noisy pilot reception.
//! - [`estimation`]: LS estimator, alternating optimizer, downlink rate.
//! - [`nn`]: dense network, Adam, training schedule, model files.
//! - [`experiments`]: datasets, metrics, baselines and drivers.

mod binio;
pub mod channel;
pub mod config;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod nn;
pub mod pilot;
pub mod seed;

pub use config::{Profile, SystemConfig};
pub use error::{Error, Result};

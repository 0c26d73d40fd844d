//! Link-budget model, discrete phase optimisation and experiment sweeps for
//! links through an active transmissive reconfigurable intelligent surface.

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod link_budget;
pub mod ris_model;

pub use error::{Error, Result};

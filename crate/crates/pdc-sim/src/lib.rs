//! Simulator for the transverse mode structure of high-gain parametric
//! down-conversion.
//!
//! The crate is organized in four layers:
//!
//! * [`schmidt`] — mode-weight spectra, the gain transformation and the
//!   closed-form second-order correlation functions;
//! * [`optics`] — discretized two-photon transverse amplitudes, their
//!   singular-value decomposition into mode bases, Fresnel propagation
//!   through a 2f-2f lens layout, and aperture-filtered predictions;
//! * [`hbt`] — Monte-Carlo per-pulse photon statistics through a simulated
//!   Hanbury Brown-Twiss interferometer with a jackknifed g2 estimator;
//! * [`scenario`] — configuration files, gain/kernel calibration, the
//!   measurement scans, and CSV emission. The `pdc-sim` binary is a thin CLI
//!   over this module.

pub mod error;
pub mod hbt;
pub mod optics;
pub mod scenario;
pub mod schmidt;

pub use error::{Error, Result};
pub use schmidt::{
    g2_auto, g2_cross, gain_transform, schmidt_number, tensor_spectrum, CorrelationPrediction,
    GainedState, SchmidtSpectrum,
};

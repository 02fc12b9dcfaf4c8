//! Monte-Carlo sampling of per-pulse twin-beam photon statistics through a
//! simulated Hanbury Brown-Twiss interferometer.
//!
//! Two statistics backends are provided. The continuous sampler draws one
//! exponential intensity per mode (the thermal marginal of squeezed vacuum)
//! and models analog pin-diode detection; it is the default for bright-beam
//! auto-correlation scans. The discrete sampler draws Bose-Einstein photon
//! numbers shared exactly between signal and idler, so the shot-noise term of
//! the cross correlation is physically present.
//!
//! Sampling is deterministic for a fixed seed under any worker count: every
//! pulse owns an independent counter-based random stream keyed by
//! `(seed, pulse index)`, and draws within a pulse follow a fixed order over
//! `(mode index, draw role)`.

mod estimator;
mod rng;
mod sampler;

pub use estimator::{estimate_g2, estimate_g2_with_blocks, DEFAULT_JACKKNIFE_BLOCKS};
pub use sampler::{detector_response, sample_single_beam, sample_twin_beams};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Monte-Carlo run parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    /// Number of pulses per run.
    pub pulses: usize,
    /// Seed of the counter-based pulse streams.
    pub seed: u64,
    /// Detector quantum efficiency per arm, in (0, 1].
    pub detector_efficiency: [f64; 2],
    /// Beamsplitter transmission into arm 1, in (0, 1).
    pub splitting_ratio: f64,
    /// RMS of additive Gaussian electronic noise in photon-equivalent units.
    pub electronic_noise_rms: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            pulses: 30_000,
            seed: 1,
            detector_efficiency: [1.0, 1.0],
            splitting_ratio: 0.5,
            electronic_noise_rms: 0.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pulses < 2 {
            return Err(Error::SamplerConfig(format!(
                "need at least 2 pulses, got {}",
                self.pulses
            )));
        }
        for (i, eta) in self.detector_efficiency.iter().enumerate() {
            if !(*eta > 0.0 && *eta <= 1.0) {
                return Err(Error::SamplerConfig(format!(
                    "detector efficiency of arm {i} must lie in (0, 1], got {eta}"
                )));
            }
        }
        if !(self.splitting_ratio > 0.0 && self.splitting_ratio < 1.0) {
            return Err(Error::SamplerConfig(format!(
                "splitting ratio must lie in (0, 1), got {}",
                self.splitting_ratio
            )));
        }
        if !(self.electronic_noise_rms >= 0.0) || !self.electronic_noise_rms.is_finite() {
            return Err(Error::SamplerConfig(format!(
                "electronic noise rms must be finite and >= 0, got {}",
                self.electronic_noise_rms
            )));
        }
        Ok(())
    }
}

/// Per-pulse detector signals of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseBatch {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    /// Number of Schmidt modes that were sampled per pulse.
    pub mode_count: usize,
}

impl PulseBatch {
    pub fn len(&self) -> usize {
        self.s1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s1.is_empty()
    }

    /// Writes the batch as two-column CSV with a leading comment line that
    /// carries the sampler configuration as one JSON document.
    pub fn write_csv<W: Write>(&self, mut w: W, config: &SamplerConfig) -> std::io::Result<()> {
        let json = serde_json::to_string(config).expect("config serializes");
        writeln!(w, "# {json}")?;
        writeln!(w, "s1,s2")?;
        for (a, b) in self.s1.iter().zip(&self.s2) {
            writeln!(w, "{a},{b}")?;
        }
        Ok(())
    }
}

/// Estimated second-order correlation with its jackknife uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    pub value: f64,
    pub std_error: f64,
    pub pulses_used: usize,
}

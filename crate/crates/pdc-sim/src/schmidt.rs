//! Schmidt spectra, the gain transformation, and closed-form intensity
//! correlation functions.
//!
//! A `SchmidtSpectrum` holds the gain-independent weights of the bipartite
//! decomposition. At parametric gain `G` each mode is amplified as
//! `sinh^2(sqrt(w_n) * G)`, which concentrates the distribution and lowers the
//! effective mode number `K = 1 / sum(w_n^2)`. For one beam of multimode
//! thermal-statistics light `g2 = 1 + 1/K`; the signal-idler cross correlation
//! picks up an extra shot-noise term `1/(n_mode * K)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Relative weight cutoff below which trailing modes are dropped.
pub const WEIGHT_REL_CUTOFF: f64 = 1e-12;

/// Argument above which sinh^2 is evaluated in log space as 2x - ln 4.
const SINH_LOG_SWITCH: f64 = 350.0;

/// Ordered, normalized mode weights of a bipartite decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    weights: Vec<f64>,
    label: String,
}

impl SchmidtSpectrum {
    /// Normalizes raw non-negative weights into a sorted, sum-one spectrum,
    /// trimming the tail below [`WEIGHT_REL_CUTOFF`] relative to the largest
    /// weight.
    pub fn normalize(raw: &[f64], label: impl Into<String>) -> Result<Self> {
        Self::normalize_with_cutoff(raw, WEIGHT_REL_CUTOFF, label)
    }

    /// Same as [`SchmidtSpectrum::normalize`] with an explicit relative cutoff.
    pub fn normalize_with_cutoff(
        raw: &[f64],
        rel_cutoff: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidSpectrum("empty weight list".into()));
        }
        if let Some(w) = raw.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSpectrum(format!(
                "weights must be finite and non-negative, got {w}"
            )));
        }
        let mut weights = raw.to_vec();
        weights.sort_by(|a, b| b.partial_cmp(a).expect("finite weights"));
        let max = weights[0];
        if max <= 0.0 {
            return Err(Error::InvalidSpectrum("all weights are zero".into()));
        }
        let cut = max * rel_cutoff;
        weights.retain(|w| *w >= cut && *w > 0.0);
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Ok(Self {
            weights,
            label: label.into(),
        })
    }

    /// Geometric spectrum `(1-t) t^n`, the closed-form Schmidt spectrum of a
    /// double-Gaussian kernel.
    pub fn geometric(t: f64, label: impl Into<String>) -> Result<Self> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::InvalidSpectrum(format!(
                "geometric parameter must lie in [0, 1), got {t}"
            )));
        }
        if t == 0.0 {
            return Self::normalize(&[1.0], label);
        }
        let n = ((WEIGHT_REL_CUTOFF.ln() / t.ln()).ceil() as usize).max(1);
        let raw: Vec<f64> = (0..=n).map(|k| (1.0 - t) * t.powi(k as i32)).collect();
        Self::normalize(&raw, label)
    }

    /// Geometric spectrum whose Schmidt number equals `k`, via `t = (K-1)/(K+1)`.
    pub fn geometric_with_schmidt_number(k: f64, label: impl Into<String>) -> Result<Self> {
        if k < 1.0 {
            return Err(Error::Domain(format!("Schmidt number must be >= 1, got {k}")));
        }
        Self::geometric((k - 1.0) / (k + 1.0), label)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Effective number of active modes `K = 1 / sum(w^2)`.
    pub fn schmidt_number(&self) -> f64 {
        schmidt_number(&self.weights)
    }

    /// Keeps the first `n` weights and renormalizes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.weights.len()).max(1);
        Self::normalize_with_cutoff(&self.weights[..n], 0.0, self.label.clone())
    }

    /// Joint spectrum of a separable bipartite product: all pairwise weight
    /// products, renormalized and sorted. The Schmidt number factorizes,
    /// `K_joint = K_a * K_b`.
    pub fn tensor(&self, other: &Self) -> Self {
        tensor_spectrum(self, other)
    }
}

/// Gain-transformed spectrum together with the total photon number per beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainedState {
    pub gain: f64,
    weights: Vec<f64>,
    total_photons: f64,
}

impl GainedState {
    /// Gain-transforms raw low-gain weights without reordering them, so the
    /// result stays aligned with an external mode indexing. The input must be
    /// non-negative and is normalized before the transformation.
    pub fn from_unsorted_weights(low_gain_weights: &[f64], gain: f64) -> Result<Self> {
        if low_gain_weights.is_empty() {
            return Err(Error::InvalidSpectrum("empty weight list".into()));
        }
        if low_gain_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidSpectrum(
                "weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = low_gain_weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidSpectrum("all weights are zero".into()));
        }
        let normalized: Vec<f64> = low_gain_weights.iter().map(|w| w / sum).collect();
        let (weights, total_photons) = gain_transform_raw(&normalized, gain)?;
        Ok(Self {
            gain,
            weights,
            total_photons,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total photon number per beam per pulse, `sum_n sinh^2(sqrt(w_n) G)`.
    pub fn total_photons(&self) -> f64 {
        self.total_photons
    }

    pub fn schmidt_number(&self) -> f64 {
        schmidt_number(&self.weights)
    }

    /// Photons per mode `N / K`.
    pub fn photons_per_mode(&self) -> f64 {
        self.total_photons / self.schmidt_number()
    }
}

/// Closed-form correlation functions of a gained state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPrediction {
    pub schmidt_number: f64,
    pub g2_auto: f64,
    pub g2_cross: f64,
    pub photons_per_mode: f64,
    /// Set when an aperture transmits less than 1e-9 of the total power; the
    /// prediction is still returned.
    #[serde(default)]
    pub near_zero_signal: bool,
}

impl CorrelationPrediction {
    pub fn new(schmidt_number: f64, photons_per_mode: f64) -> Result<Self> {
        Ok(Self {
            schmidt_number,
            g2_auto: g2_auto(schmidt_number)?,
            g2_cross: g2_cross(schmidt_number, photons_per_mode)?,
            photons_per_mode,
            near_zero_signal: false,
        })
    }
}

/// ln(sinh^2(x)) without overflow for large x.
fn ln_sinh_sq(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x > SINH_LOG_SWITCH {
        // sinh(x) = e^x (1 - e^{-2x}) / 2; the correction is below f64 eps here
        2.0 * x - (4.0f64).ln()
    } else {
        2.0 * x.sinh().ln()
    }
}

fn gain_transform_raw(weights: &[f64], gain: f64) -> Result<(Vec<f64>, f64)> {
    if !(gain > 0.0) || !gain.is_finite() {
        return Err(Error::InvalidGain(gain));
    }
    let logs: Vec<f64> = weights.iter().map(|w| ln_sinh_sq(w.sqrt() * gain)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = scaled.iter().sum();
    let out: Vec<f64> = scaled.iter().map(|s| s / sum).collect();
    let total_photons = (max + sum.ln()).exp();
    Ok((out, total_photons))
}

/// Applies the gain transformation `w_n -> sinh^2(sqrt(w_n) G) / N` with
/// `N = sum_n sinh^2(sqrt(w_n) G)`.
///
/// Evaluated in log space with max-subtraction so the weights stay finite for
/// arbitrarily large arguments; `total_photons` itself may saturate to
/// infinity beyond `exp(~709)`.
pub fn gain_transform(spectrum: &SchmidtSpectrum, gain: f64) -> Result<GainedState> {
    let (weights, total_photons) = gain_transform_raw(&spectrum.weights, gain)?;
    Ok(GainedState {
        gain,
        weights,
        total_photons,
    })
}

/// Schmidt number `K = 1 / sum(w^2)` of a normalized weight list.
pub fn schmidt_number(weights: &[f64]) -> f64 {
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    1.0 / sum_sq
}

/// Auto-correlation `g2 = 1 + 1/K` of one beam.
pub fn g2_auto(k: f64) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::Domain(format!("Schmidt number must be >= 1, got {k}")));
    }
    Ok(1.0 + 1.0 / k)
}

/// Signal-idler cross correlation `g2 = 1 + 1/K + 1/(n_mode K)`.
pub fn g2_cross(k: f64, photons_per_mode: f64) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::Domain(format!("Schmidt number must be >= 1, got {k}")));
    }
    if !(photons_per_mode > 0.0) {
        return Err(Error::Domain(format!(
            "photons per mode must be positive, got {photons_per_mode}"
        )));
    }
    Ok(1.0 + 1.0 / k + 1.0 / (photons_per_mode * k))
}

/// All pairwise products of two weight lists, renormalized and sorted.
pub fn tensor_spectrum(a: &SchmidtSpectrum, b: &SchmidtSpectrum) -> SchmidtSpectrum {
    let mut raw = Vec::with_capacity(a.weights.len() * b.weights.len());
    for wa in &a.weights {
        for wb in &b.weights {
            raw.push(wa * wb);
        }
    }
    let label = format!("{}*{}", a.label, b.label);
    SchmidtSpectrum::normalize_with_cutoff(&raw, 0.0, label)
        .expect("product of valid spectra is valid")
}

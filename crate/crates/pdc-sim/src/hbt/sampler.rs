//! Continuous-intensity and discrete photon-number pulse samplers.

use super::rng::{map_pulses, pulse_rng};
use super::{PulseBatch, SamplerConfig};
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric, StandardNormal};

/// Largest admissible per-mode mean for the discrete sampler.
const DISCRETE_MEAN_LIMIT: f64 = 2_147_483_648.0; // 2^31

fn validate_state(weights: &[f64], total_photons: f64) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidSpectrum("empty weight list".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidSpectrum(
            "weights must be finite and non-negative".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidSpectrum(format!(
            "weights must sum to 1, got {sum}"
        )));
    }
    if !(total_photons > 0.0) || !total_photons.is_finite() {
        return Err(Error::Domain(format!(
            "total photon number must be positive and finite, got {total_photons}"
        )));
    }
    Ok(())
}

/// Efficiency-scaled signal plus Gaussian electronic noise, clamped at zero.
/// Models an analog pin-diode readout without saturation.
pub fn detector_response<R: Rng + ?Sized>(
    ideal_signal: f64,
    efficiency: f64,
    noise_rms: f64,
    rng: &mut R,
) -> f64 {
    debug_assert!(ideal_signal >= 0.0);
    let mut s = efficiency * ideal_signal;
    if noise_rms > 0.0 {
        let n: f64 = rng.sample(StandardNormal);
        s += noise_rms * n;
    }
    s.max(0.0)
}

/// Unit-mean exponential draw by inversion; one uniform per call.
fn exp_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln()
}

/// Samples per-pulse arm signals of a single beam split in a HBT
/// interferometer, with one exponential intensity per mode.
///
/// Per pulse and mode `n` the intensity is exponential with mean
/// `weights[n] * total_photons`; the beam intensity is their sum, and each arm
/// sees the efficiency-scaled split plus electronic noise.
pub fn sample_single_beam(
    weights: &[f64],
    total_photons: f64,
    config: &SamplerConfig,
) -> Result<PulseBatch> {
    config.validate()?;
    validate_state(weights, total_photons)?;
    let means: Vec<f64> = weights.iter().map(|w| w * total_photons).collect();
    let t = config.splitting_ratio;
    let [eta1, eta2] = config.detector_efficiency;
    let rms = config.electronic_noise_rms;

    let rows = map_pulses(config.pulses, |pulse| {
        let mut rng = pulse_rng(config.seed, pulse);
        let mut intensity = 0.0;
        for mean in &means {
            intensity += mean * exp_draw(&mut rng);
        }
        let s1 = detector_response(t * intensity, eta1, rms, &mut rng);
        let s2 = detector_response((1.0 - t) * intensity, eta2, rms, &mut rng);
        (s1, s2)
    });

    let (s1, s2) = rows.into_iter().unzip();
    Ok(PulseBatch {
        s1,
        s2,
        mode_count: means.len(),
    })
}

fn binomial_draw<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Samples twin beams with exact pairwise photon-number correlation.
///
/// Per pulse and mode the photon number is Bose-Einstein distributed with
/// mean `weights[n] * total_photons`, and signal and idler carry identical
/// copies. Returns the HBT split of the signal beam and the signal/idler
/// cross pair, both after independent binomial detection thinning.
pub fn sample_twin_beams(
    weights: &[f64],
    total_photons: f64,
    config: &SamplerConfig,
) -> Result<(PulseBatch, PulseBatch)> {
    config.validate()?;
    validate_state(weights, total_photons)?;
    let means: Vec<f64> = weights.iter().map(|w| w * total_photons).collect();
    if let Some(m) = means.iter().find(|m| **m > DISCRETE_MEAN_LIMIT) {
        return Err(Error::MeanOverflow(*m));
    }
    // success probability of the geometric form of the Bose-Einstein law
    let probs: Vec<f64> = means.iter().map(|m| 1.0 / (1.0 + m)).collect();
    let t = config.splitting_ratio;
    let [eta1, eta2] = config.detector_efficiency;
    let rms = config.electronic_noise_rms;

    let rows = map_pulses(config.pulses, |pulse| {
        let mut rng = pulse_rng(config.seed, pulse);
        let mut n_tot: u64 = 0;
        for p in &probs {
            n_tot += if *p >= 1.0 {
                0
            } else {
                Geometric::new(*p).expect("valid geometric").sample(&mut rng)
            };
        }
        // HBT split of the signal beam
        let arm1 = binomial_draw(n_tot, t, &mut rng);
        let d1 = binomial_draw(arm1, eta1, &mut rng);
        let d2 = binomial_draw(n_tot - arm1, eta2, &mut rng);
        // whole-beam signal/idler detection
        let cs = binomial_draw(n_tot, eta1, &mut rng);
        let ci = binomial_draw(n_tot, eta2, &mut rng);
        if rms > 0.0 {
            let a = detector_response(d1 as f64, 1.0, rms, &mut rng);
            let b = detector_response(d2 as f64, 1.0, rms, &mut rng);
            let c = detector_response(cs as f64, 1.0, rms, &mut rng);
            let d = detector_response(ci as f64, 1.0, rms, &mut rng);
            (a, b, c, d)
        } else {
            (d1 as f64, d2 as f64, cs as f64, ci as f64)
        }
    });

    let mut split = PulseBatch {
        s1: Vec::with_capacity(rows.len()),
        s2: Vec::with_capacity(rows.len()),
        mode_count: means.len(),
    };
    let mut cross = PulseBatch {
        s1: Vec::with_capacity(rows.len()),
        s2: Vec::with_capacity(rows.len()),
        mode_count: means.len(),
    };
    for (a, b, c, d) in rows {
        split.s1.push(a);
        split.s2.push(b);
        cross.s1.push(c);
        cross.s2.push(d);
    }
    Ok((split, cross))
}

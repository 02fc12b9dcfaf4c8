//! The measurement scans: gain, aperture, detection-plane position, and the
//! single-point HBT run.

use super::calibrate::{calibrate_gain, calibrate_kernel, GainCalibration};
use super::config::{ScanMetadata, ScanResult, ScanRow, ScanSpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::hbt::{estimate_g2, sample_single_beam, G2Estimate, PulseBatch, SamplerConfig};
use crate::optics::{
    build_kernel, decompose, filtered_g2, propagate, spatial_gained_2d, ApertureSpec, ModeBasis,
};
use crate::schmidt::SchmidtSpectrum;

/// Joint Monte-Carlo mode weights below this fraction of the largest are
/// dropped before sampling; the induced bias is orders below the statistical
/// error.
const MC_WEIGHT_REL_CUTOFF: f64 = 1e-9;

/// Scenario with calibrations applied and the mode basis decomposed.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub gain: f64,
    pub gain_calibration: Option<GainCalibration>,
    pub spectrum_1d: SchmidtSpectrum,
    pub signal_basis: ModeBasis,
    pub idler_basis: ModeBasis,
    pub temporal: SchmidtSpectrum,
}

impl ResolvedScenario {
    pub fn metadata(&self, seed: u64) -> ScanMetadata {
        ScanMetadata {
            config: self.config.clone(),
            resolved_gain: self.gain,
            fitted_sigma_c_um: self.config.kernel.sigma_c_um,
            gain_proportionality: self.gain_calibration.map(|c| c.proportionality),
            gain_fit_residual: self.gain_calibration.map(|c| c.fit_residual),
            seed,
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs()),
        }
    }
}

/// Applies gain and kernel calibration, builds and decomposes the kernel.
pub fn resolve(config: &ScenarioConfig) -> Result<ResolvedScenario> {
    config.validate()?;
    let mut config = config.clone();

    let gain_calibration = match &config.gain_calibration {
        Some(input) if !input.points_mw_signal.is_empty() => {
            Some(calibrate_gain(&input.points_mw_signal)?)
        }
        Some(input) => input.proportionality.map(|c| GainCalibration {
            proportionality: c,
            fit_residual: 0.0,
        }),
        None => None,
    };
    let gain = match (config.gain, config.pump_power_mw) {
        (Some(g), _) => g,
        (None, Some(p)) => {
            let cal = gain_calibration.as_ref().ok_or_else(|| {
                Error::Config("pump power given without a usable gain calibration".into())
            })?;
            cal.gain_at(p)
        }
        (None, None) => unreachable!("validated"),
    };

    if let Some(kc) = config.kernel_calibration {
        config.kernel =
            calibrate_kernel(kc.target_ks, kc.at_gain, &config.kernel, config.modes_per_axis)?;
    }

    let kernel = build_kernel(&config.kernel, &config.grid)?;
    let (spectrum_1d, signal_basis, idler_basis) = decompose(&kernel, config.modes_per_axis)?;
    let temporal = SchmidtSpectrum::geometric_with_schmidt_number(config.temporal_k, "temporal")?;

    Ok(ResolvedScenario {
        config,
        gain,
        gain_calibration,
        spectrum_1d,
        signal_basis,
        idler_basis,
        temporal,
    })
}

/// Tensors detected spatial photon weights with the temporal spectrum and
/// drops negligible joint modes.
fn joint_mc_weights(spatial_photons: &[f64], temporal: &[f64]) -> Vec<f64> {
    let mut joint = Vec::with_capacity(spatial_photons.len() * temporal.len());
    for s in spatial_photons {
        for t in temporal {
            joint.push(s * t);
        }
    }
    let max = joint.iter().cloned().fold(0.0, f64::max);
    joint.retain(|w| *w >= max * MC_WEIGHT_REL_CUTOFF);
    let sum: f64 = joint.iter().sum();
    for w in &mut joint {
        *w /= sum;
    }
    joint
}

fn row_sampler(config: &SamplerConfig, row: usize) -> SamplerConfig {
    SamplerConfig {
        seed: config.seed.wrapping_add(row as u64),
        ..config.clone()
    }
}

fn mc_estimate(
    spatial_photons: &[f64],
    total_photons: f64,
    temporal: &[f64],
    sampler: &SamplerConfig,
) -> Result<G2Estimate> {
    let weights = joint_mc_weights(spatial_photons, temporal);
    let batch = sample_single_beam(&weights, total_photons, sampler)?;
    estimate_g2(&batch)
}

pub fn run_gain_scan(config: &ScenarioConfig) -> Result<ScanResult> {
    let ScanSpec::GainScan { min, max, steps } = config.scan else {
        return Err(Error::Config("scenario does not hold a gain_scan block".into()));
    };
    let resolved = resolve(config)?;
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let g = min + (max - min) * i as f64 / (steps - 1) as f64;
        let gained = spatial_gained_2d(&resolved.spectrum_1d, resolved.config.modes_per_axis, g)?;
        let k_total = gained.schmidt_number() * resolved.temporal.schmidt_number();
        let analytic = 1.0 + 1.0 / k_total;
        let spatial_photons: Vec<f64> = gained
            .weights()
            .iter()
            .map(|w| w * gained.total_photons())
            .collect();
        let est = mc_estimate(
            &spatial_photons,
            gained.total_photons(),
            resolved.temporal.weights(),
            &row_sampler(&resolved.config.sampler, i),
        )?;
        rows.push(ScanRow {
            control: g,
            g2_analytic: analytic,
            g2_montecarlo: est.value,
            std_error: est.std_error,
            k_effective: k_total,
            transmitted_power_fraction: 1.0,
        });
    }
    Ok(ScanResult {
        control_name: "gain".into(),
        rows,
        metadata: resolved.metadata(resolved.config.sampler.seed),
    })
}

/// Shared evaluation of one filtered scan point.
fn filtered_row(
    resolved: &ResolvedScenario,
    basis_at_z: &ModeBasis,
    aperture: Option<&ApertureSpec>,
    control: f64,
    row: usize,
) -> Result<ScanRow> {
    let gained = spatial_gained_2d(
        &resolved.spectrum_1d,
        resolved.config.modes_per_axis,
        resolved.gain,
    )?;
    let filtered = filtered_g2(
        basis_at_z,
        &gained,
        aperture,
        resolved.temporal.schmidt_number(),
    )?;
    let trace = filtered.coherence.trace;
    let est = mc_estimate(
        &filtered.effective_photon_weights,
        trace,
        resolved.temporal.weights(),
        &row_sampler(&resolved.config.sampler, row),
    )?;
    Ok(ScanRow {
        control,
        g2_analytic: filtered.prediction.g2_auto,
        g2_montecarlo: est.value,
        std_error: est.std_error,
        k_effective: filtered.prediction.schmidt_number,
        transmitted_power_fraction: filtered.transmitted_fraction,
    })
}

pub fn run_aperture_scan(config: &ScenarioConfig) -> Result<ScanResult> {
    let ScanSpec::ApertureScan {
        ref diameters_mm,
        ref aperture,
    } = config.scan
    else {
        return Err(Error::Config(
            "scenario does not hold an aperture_scan block".into(),
        ));
    };
    let resolved = resolve(config)?;
    let layout = resolved.config.layout;
    let focal = propagate(&resolved.signal_basis, &layout, layout.focal_plane_cm())?;
    let mut diameters = diameters_mm.clone();
    diameters.sort_by(|a, b| a.partial_cmp(b).expect("finite diameters"));
    let template = aperture.unwrap_or_default();
    let mut rows = Vec::with_capacity(diameters.len());
    for (i, d) in diameters.iter().enumerate() {
        let spec = ApertureSpec {
            diameter_mm: *d,
            ..template
        };
        rows.push(filtered_row(&resolved, &focal, Some(&spec), *d, i)?);
    }
    Ok(ScanResult {
        control_name: "aperture_diameter_mm".into(),
        rows,
        metadata: resolved.metadata(resolved.config.sampler.seed),
    })
}

pub fn run_position_scan(config: &ScenarioConfig) -> Result<ScanResult> {
    let ScanSpec::PositionScan {
        ref z_list_cm,
        ref aperture,
    } = config.scan
    else {
        return Err(Error::Config(
            "scenario does not hold a position_scan block".into(),
        ));
    };
    let resolved = resolve(config)?;
    let layout = resolved.config.layout;
    let mut zs = z_list_cm.clone();
    zs.sort_by(|a, b| a.partial_cmp(b).expect("finite positions"));
    let mut rows = Vec::with_capacity(zs.len());
    for (i, z) in zs.iter().enumerate() {
        let basis = propagate(&resolved.signal_basis, &layout, *z)?;
        rows.push(filtered_row(&resolved, &basis, aperture.as_ref(), *z, i)?);
    }
    Ok(ScanResult {
        control_name: "z_cm".into(),
        rows,
        metadata: resolved.metadata(resolved.config.sampler.seed),
    })
}

/// Single full-collection HBT point; also returns the sampled batch for
/// export.
pub fn run_hbt_point(config: &ScenarioConfig) -> Result<(ScanResult, PulseBatch)> {
    let ScanSpec::HbtPoint {} = config.scan else {
        return Err(Error::Config("scenario does not hold an hbt_point block".into()));
    };
    let resolved = resolve(config)?;
    let gained = spatial_gained_2d(
        &resolved.spectrum_1d,
        resolved.config.modes_per_axis,
        resolved.gain,
    )?;
    let k_total = gained.schmidt_number() * resolved.temporal.schmidt_number();
    let analytic = 1.0 + 1.0 / k_total;
    let spatial_photons: Vec<f64> = gained
        .weights()
        .iter()
        .map(|w| w * gained.total_photons())
        .collect();
    let weights = joint_mc_weights(spatial_photons.as_slice(), resolved.temporal.weights());
    let batch = sample_single_beam(&weights, gained.total_photons(), &resolved.config.sampler)?;
    let est = estimate_g2(&batch)?;
    let rows = vec![ScanRow {
        control: resolved.gain,
        g2_analytic: analytic,
        g2_montecarlo: est.value,
        std_error: est.std_error,
        k_effective: k_total,
        transmitted_power_fraction: 1.0,
    }];
    Ok((
        ScanResult {
            control_name: "gain".into(),
            rows,
            metadata: resolved.metadata(resolved.config.sampler.seed),
        },
        batch,
    ))
}

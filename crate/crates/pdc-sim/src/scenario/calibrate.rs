//! Gain and kernel calibration against measured or target quantities.

use crate::error::{Error, Result};
use crate::optics::{build_kernel, decompose, spatial_gained_2d, GridSpec, KernelParams,
    PhaseMismatchModel};
use crate::schmidt::SchmidtSpectrum;
use serde::{Deserialize, Serialize};

/// Residual above which the gain fit is rejected.
const GAIN_FIT_MAX_RESIDUAL: f64 = 0.20;

/// Relative tolerance on the kernel-calibration target.
pub const KERNEL_CAL_TOLERANCE: f64 = 0.005;

/// Fitted proportionality of `G = c sqrt(P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainCalibration {
    pub proportionality: f64,
    /// Relative RMS misfit of `signal = A sinh^2(c sqrt(P))`.
    pub fit_residual: f64,
}

impl GainCalibration {
    pub fn gain_at(&self, pump_power_mw: f64) -> f64 {
        self.proportionality * pump_power_mw.sqrt()
    }
}

/// ln(sinh^2(x)), safe for large x.
fn ln_sinh_sq(x: f64) -> f64 {
    if x <= 0.0 {
        f64::NEG_INFINITY
    } else if x > 350.0 {
        2.0 * x - (4.0f64).ln()
    } else {
        2.0 * x.sinh().ln()
    }
}

/// Relative RMS residual of the best scale factor `A` at fixed `c`, computed
/// on max-scaled model values so huge gains cannot overflow.
fn gain_fit_residual(c: f64, points: &[(f64, f64)]) -> f64 {
    let logs: Vec<f64> = points.iter().map(|(p, _)| ln_sinh_sq(c * p.sqrt())).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sy: f64 = points.iter().zip(&s).map(|((_, y), s)| y * s).sum();
    let ss: f64 = s.iter().map(|s| s * s).sum();
    if ss <= 0.0 {
        return f64::INFINITY;
    }
    let a = sy / ss;
    let num: f64 = points
        .iter()
        .zip(&s)
        .map(|((_, y), s)| (y - a * s).powi(2))
        .sum();
    let den: f64 = points.iter().map(|(_, y)| y * y).sum();
    (num / den).sqrt()
}

/// Fits `mean_signal = A sinh^2(c sqrt(P))` over the measured points by a
/// scalar search on `c` with the scale factor eliminated in closed form.
pub fn calibrate_gain(points: &[(f64, f64)]) -> Result<GainCalibration> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "gain calibration needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(p, y)| !(*p > 0.0) || !(*y > 0.0)) {
        return Err(Error::Domain(
            "gain calibration points must have positive power and signal".into(),
        ));
    }
    // coarse log-space scan, then golden-section refinement
    let mut best_log_c = f64::NAN;
    let mut best = f64::INFINITY;
    let coarse = 240;
    for i in 0..=coarse {
        let log_c = -3.0 + 5.0 * i as f64 / coarse as f64;
        let r = gain_fit_residual(10f64.powf(log_c), points);
        if r < best {
            best = r;
            best_log_c = log_c;
        }
    }
    let (mut lo, mut hi) = (best_log_c - 0.05, best_log_c + 0.05);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = gain_fit_residual(10f64.powf(x1), points);
    let mut f2 = gain_fit_residual(10f64.powf(x2), points);
    for _ in 0..120 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = gain_fit_residual(10f64.powf(x1), points);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = gain_fit_residual(10f64.powf(x2), points);
        }
    }
    let c = 10f64.powf(0.5 * (lo + hi));
    let fit_residual = gain_fit_residual(c, points);
    if !(fit_residual <= GAIN_FIT_MAX_RESIDUAL) {
        return Err(Error::CalibrationFailed {
            residual: fit_residual,
        });
    }
    Ok(GainCalibration {
        proportionality: c,
        fit_residual,
    })
}

/// Spatial 2-D Schmidt number of the kernel at a given gain, with the same
/// per-axis truncation the scan pipeline uses. Gaussian kernels use the
/// closed-form geometric spectrum; the sinc model decomposes numerically.
pub fn spatial_k2d(params: &KernelParams, modes_per_axis: usize, gain: f64) -> Result<f64> {
    let spectrum = match params.phase_mismatch_model {
        PhaseMismatchModel::GaussianApprox => {
            let r = params.sigma_p_um() / params.sigma_c_um();
            let t = ((r - 1.0) / (r + 1.0)).powi(2);
            SchmidtSpectrum::geometric(t, "spatial_axis")?
        }
        PhaseMismatchModel::SincExact => {
            let kernel = build_kernel(params, &GridSpec::default())?;
            decompose(&kernel, modes_per_axis)?.0
        }
    };
    Ok(spatial_gained_2d(&spectrum, modes_per_axis, gain)?.schmidt_number())
}

/// Adjusts the phase-matching width by bisection until the gained spatial
/// Schmidt number matches `target_ks` within 0.5 percent. Searches the
/// physical branch `sigma_c < sigma_p` first, then the wide branch, within
/// `[sigma_p/100, 100 sigma_p]`.
pub fn calibrate_kernel(
    target_ks: f64,
    at_gain: f64,
    params: &KernelParams,
    modes_per_axis: usize,
) -> Result<KernelParams> {
    if !(target_ks > 1.0) {
        return Err(Error::Domain(format!(
            "kernel calibration target must exceed 1, got {target_ks}"
        )));
    }
    if !(at_gain > 0.0) {
        return Err(Error::InvalidGain(at_gain));
    }
    params.validate()?;
    let sp = params.sigma_p_um();
    let k_of = |sigma_c: f64| -> Result<f64> {
        let candidate = KernelParams {
            sigma_c_um: Some(sigma_c),
            ..params.clone()
        };
        spatial_k2d(&candidate, modes_per_axis, at_gain)
    };

    // K decreases towards sigma_c = sigma_p on the narrow branch and increases
    // away from it on the wide branch
    let branches: [(f64, f64, bool); 2] = [
        (sp / 100.0, sp * (1.0 - 1e-9), true),
        (sp * (1.0 + 1e-9), sp * 100.0, false),
    ];
    for (lo_edge, hi_edge, decreasing) in branches {
        let k_lo = k_of(lo_edge)?;
        let k_hi = k_of(hi_edge)?;
        let (k_min, k_max) = if decreasing { (k_hi, k_lo) } else { (k_lo, k_hi) };
        if target_ks < k_min * (1.0 - KERNEL_CAL_TOLERANCE)
            || target_ks > k_max * (1.0 + KERNEL_CAL_TOLERANCE)
        {
            continue;
        }
        let (mut lo, mut hi) = (lo_edge, hi_edge);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            let k = k_of(mid)?;
            let too_many = k > target_ks;
            if too_many == decreasing {
                lo = mid;
            } else {
                hi = mid;
            }
            if (k - target_ks).abs() / target_ks < KERNEL_CAL_TOLERANCE * 0.05 {
                break;
            }
        }
        let sigma_c = (lo * hi).sqrt();
        let fitted = KernelParams {
            sigma_c_um: Some(sigma_c),
            ..params.clone()
        };
        let achieved = spatial_k2d(&fitted, modes_per_axis, at_gain)?;
        if (achieved - target_ks).abs() / target_ks <= KERNEL_CAL_TOLERANCE {
            return Ok(fitted);
        }
    }
    Err(Error::CalibrationTarget(format!(
        "spatial Schmidt number {target_ks} at gain {at_gain} is unreachable within sigma_c bounds"
    )))
}

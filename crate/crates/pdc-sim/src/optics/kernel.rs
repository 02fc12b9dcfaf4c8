//! Discretized two-photon transverse amplitude per axis.
//!
//! In the transverse-momentum representation the amplitude factorizes into a
//! pump-envelope term in `q_s + q_i` and a phase-matching term in `q_s - q_i`.
//! The Gaussian model uses
//! `A ~ exp(-(q_s+q_i)^2 sp^2/4) exp(-(q_s-q_i)^2 sc^2/4)`,
//! which admits a closed-form geometric Schmidt spectrum; the sinc model keeps
//! the exact `sinc(dk L/2)` longitudinal integral. Both carry the emission
//! phase `exp(-i (q_s^2+q_i^2) d / (2k))` that refers the modes to the exit
//! facet when the effective source plane sits a depth `d` inside the crystal
//! assembly; this chirp leaves the weight spectrum untouched but fixes where
//! the propagated mode family reaches its waist.

use super::grid::Grid1d;
use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// sinc(y) reaches 1/e at this argument; used to map a phase-matching width
/// onto an equivalent Gaussian width.
const SINC_ONE_OVER_E: f64 = 2.1990;

/// Minimum sampling of each kernel factor, in points per 1/e full width.
pub const MIN_POINTS_PER_WIDTH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMismatchModel {
    GaussianApprox,
    SincExact,
}

/// Physical parameters of the two-photon amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelParams {
    /// Pump amplitude 1/e radius at the crystal, micrometres.
    pub pump_waist_um: f64,
    pub signal_wavelength_nm: f64,
    pub pump_wavelength_nm: f64,
    /// Effective length of the crystal assembly, millimetres. Sets the
    /// emission-plane depth and, absent an override, the phase-matching width.
    pub crystal_length_mm: f64,
    pub phase_mismatch_model: PhaseMismatchModel,
    /// Calibrated phase-matching width override, micrometres.
    pub sigma_c_um: Option<f64>,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            pump_waist_um: 115.0,
            signal_wavelength_nm: 709.0,
            pump_wavelength_nm: 355.0,
            crystal_length_mm: 20.0,
            phase_mismatch_model: PhaseMismatchModel::GaussianApprox,
            sigma_c_um: None,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pump_waist_um", self.pump_waist_um),
            ("signal_wavelength_nm", self.signal_wavelength_nm),
            ("pump_wavelength_nm", self.pump_wavelength_nm),
            ("crystal_length_mm", self.crystal_length_mm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(sc) = self.sigma_c_um {
            if !(sc > 0.0) || !sc.is_finite() {
                return Err(Error::Config(format!(
                    "sigma_c_um must be positive, got {sc}"
                )));
            }
        }
        Ok(())
    }

    pub fn k_signal_per_um(&self) -> f64 {
        2.0 * PI / (self.signal_wavelength_nm * 1e-3)
    }

    pub fn k_pump_per_um(&self) -> f64 {
        2.0 * PI / (self.pump_wavelength_nm * 1e-3)
    }

    /// Pump-envelope width parameter, micrometres.
    pub fn sigma_p_um(&self) -> f64 {
        self.pump_waist_um
    }

    /// Phase-matching width parameter, micrometres: the override when set,
    /// otherwise derived from the crystal length by matching the 1/e point of
    /// `sinc(dk L/2)` in the degenerate collinear geometry.
    pub fn sigma_c_um(&self) -> f64 {
        self.sigma_c_um.unwrap_or_else(|| {
            (self.crystal_length_mm * 1e3 / (2.0 * self.k_signal_per_um() * SINC_ONE_OVER_E))
                .sqrt()
        })
    }

    /// Length whose sinc phase-matching curve matches the current sigma_c.
    pub fn phase_matching_length_um(&self) -> f64 {
        2.0 * self.k_signal_per_um() * SINC_ONE_OVER_E * self.sigma_c_um().powi(2)
    }

    /// Depth of the effective emission plane behind the exit facet,
    /// micrometres.
    pub fn source_depth_um(&self) -> f64 {
        self.crystal_length_mm * 1e3 / 2.0
    }

    /// Longitudinal wavevector mismatch of the collinear degenerate geometry
    /// at transverse momenta `(q_s, q_i)`, per micrometre.
    pub fn delta_k(&self, q_s: f64, q_i: f64) -> f64 {
        let ks = self.k_signal_per_um();
        let kp = self.k_pump_per_um();
        (q_s * q_s + q_i * q_i) / (2.0 * ks) - (q_s + q_i) * (q_s + q_i) / (2.0 * kp)
    }
}

/// Grid request for [`build_kernel`]: a point count and an optional
/// half-extent in momentum space; the extent defaults to four 1/e full widths
/// of the wider kernel factor, and the point count is raised to the next
/// power of two that resolves the narrower factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub points: usize,
    pub half_extent: Option<f64>,
    /// When set, the point count is used exactly as given instead of being
    /// raised to meet the sampling requirement.
    pub strict_points: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 512,
            half_extent: None,
            strict_points: false,
        }
    }
}

/// Normalized two-photon amplitude sampled on a momentum grid, one transverse
/// axis.
#[derive(Debug, Clone)]
pub struct BiphotonKernel {
    pub grid: Grid1d,
    pub amplitude: Array2<Complex64>,
    pub params: KernelParams,
    /// Factorization `A = diag(chirp) R diag(chirp)` with real symmetric `R`,
    /// shared by both phase-matching models; lets the decomposition run a
    /// real-valued SVD.
    pub(crate) real_factor: RealFactor,
}

#[derive(Debug, Clone)]
pub(crate) struct RealFactor {
    pub matrix: Array2<f64>,
    pub chirp: Vec<Complex64>,
}

impl BiphotonKernel {
    /// Quadrature Frobenius norm `sqrt(sum |A|^2 dq^2)`.
    pub fn frobenius_norm(&self) -> f64 {
        let dq = self.grid.step();
        (self.amplitude.iter().map(|a| a.norm_sqr()).sum::<f64>() * dq * dq).sqrt()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Builds the per-axis two-photon amplitude on a symmetric momentum grid.
pub fn build_kernel(params: &KernelParams, spec: &GridSpec) -> Result<BiphotonKernel> {
    params.validate()?;
    let sp = params.sigma_p_um();
    let sc = params.sigma_c_um();
    // full 1/e widths of the two factors along one momentum axis
    let w_pump = 4.0 / sp;
    let w_pm = 4.0 / sc;
    let w_wide = w_pump.max(w_pm);
    let w_narrow = w_pump.min(w_pm);

    let half = spec.half_extent.unwrap_or(4.0 * w_wide);
    if !(half > 0.0) {
        return Err(Error::Config(format!(
            "grid half extent must be positive, got {half}"
        )));
    }
    let mut n = spec.points.max(4).next_power_of_two();
    if !spec.strict_points {
        while (w_narrow / (2.0 * half / n as f64)) < MIN_POINTS_PER_WIDTH && n < (1 << 16) {
            n *= 2;
        }
    }
    let dq = 2.0 * half / n as f64;
    for (scale, w) in [("pump envelope", w_pump), ("phase matching", w_pm)] {
        let points = w / dq;
        if points < MIN_POINTS_PER_WIDTH {
            return Err(Error::Resolution {
                scale: format!("{scale} width {w:.4e} per um^-1"),
                points,
                required: MIN_POINTS_PER_WIDTH,
            });
        }
    }
    let grid = Grid1d::new(n, dq)?;

    let ks = params.k_signal_per_um();
    let depth = params.source_depth_um();
    let l_pm = params.phase_matching_length_um();
    let q: Vec<f64> = grid.positions();
    let chirp: Vec<Complex64> = q
        .iter()
        .map(|qv| Complex64::from_polar(1.0, -qv * qv * depth / (2.0 * ks)))
        .collect();
    let mut real = Array2::<f64>::zeros((n, n));
    for (i, &qs) in q.iter().enumerate() {
        for (j, &qi) in q.iter().enumerate() {
            let pump = (-((qs + qi) * (qs + qi)) * sp * sp / 4.0).exp();
            let pm = match params.phase_mismatch_model {
                PhaseMismatchModel::GaussianApprox => {
                    (-((qs - qi) * (qs - qi)) * sc * sc / 4.0).exp()
                }
                PhaseMismatchModel::SincExact => sinc(params.delta_k(qs, qi) * l_pm / 2.0),
            };
            real[[i, j]] = pump * pm;
        }
    }
    let norm = (real.iter().map(|a| a * a).sum::<f64>() * dq * dq).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Computation(
            "kernel amplitude vanished on the requested grid".into(),
        ));
    }
    real.mapv_inplace(|a| a / norm);
    let amplitude =
        Array2::from_shape_fn((n, n), |(i, j)| chirp[i] * chirp[j] * real[[i, j]]);

    Ok(BiphotonKernel {
        grid,
        amplitude,
        params: params.clone(),
        real_factor: RealFactor {
            matrix: real,
            chirp,
        },
    })
}

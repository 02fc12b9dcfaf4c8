//! Band-limited angular-spectrum Fresnel propagation through the 2f-2f lens
//! layout.
//!
//! Each mode passes free space to the lens, an ideal thin-lens phase, and
//! free space to the detection plane. Free-space legs multiply the momentum
//! representation by the paraxial transfer function
//! `exp(i k z) exp(-i q^2 z / (2k))`, hard-limited at the momentum where the
//! discretized phase would alias. An energy detector refuses results whose
//! modes reach the grid boundary.

use super::decompose::{ModeBasis, Plane};
use super::grid::CenteredFft;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const CM_TO_UM: f64 = 1e4;

/// Fraction of mode energy allowed within two grid points of the boundary.
const ALIAS_ENERGY_LIMIT: f64 = 1e-4;

/// Spectral energy fraction used to estimate the mode support when sizing the
/// padded propagation grid.
const SUPPORT_ENERGY_TAIL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticalLayout {
    pub focal_length_cm: f64,
    /// Lens position along the optical axis, measured from the crystal output.
    pub lens_position_cm: f64,
    /// Admissible detection-plane positions, absolute, same origin.
    pub detection_range_cm: (f64, f64),
}

impl Default for OpticalLayout {
    fn default() -> Self {
        Self {
            focal_length_cm: 15.0,
            lens_position_cm: 30.0,
            detection_range_cm: (45.0, 60.0),
        }
    }
}

impl OpticalLayout {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length_cm > 0.0) {
            return Err(Error::Config(format!(
                "focal length must be positive, got {}",
                self.focal_length_cm
            )));
        }
        if !(self.lens_position_cm > 0.0) {
            return Err(Error::Config(format!(
                "lens position must be positive, got {}",
                self.lens_position_cm
            )));
        }
        let (lo, hi) = self.detection_range_cm;
        if !(lo < hi) || !(lo >= self.lens_position_cm) {
            return Err(Error::Config(format!(
                "detection range ({lo}, {hi}) must be ordered and lie past the lens"
            )));
        }
        Ok(())
    }

    pub fn focal_plane_cm(&self) -> f64 {
        self.lens_position_cm + self.focal_length_cm
    }

    pub fn image_plane_cm(&self) -> f64 {
        self.lens_position_cm + 2.0 * self.focal_length_cm
    }
}

/// Free-space Fresnel transfer applied in momentum space, in place.
fn fresnel_leg(
    fft: &CenteredFft,
    modes: &mut [Vec<Complex64>],
    dx: f64,
    dq: f64,
    q_at: impl Fn(usize) -> f64,
    z_um: f64,
    k: f64,
) {
    let q_limit = PI * k / (z_um * dq);
    let global = Complex64::from_polar(1.0, k * z_um % (2.0 * PI));
    for mode in modes.iter_mut() {
        fft.to_momentum(mode, dx);
        for (j, v) in mode.iter_mut().enumerate() {
            let q = q_at(j);
            if q.abs() > q_limit {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= global * Complex64::from_polar(1.0, -q * q * z_um / (2.0 * k));
            }
        }
        fft.to_position(mode, dq);
    }
}

fn boundary_energy_fraction(mode: &[Complex64]) -> f64 {
    let n = mode.len();
    let total: f64 = mode.iter().map(|v| v.norm_sqr()).sum();
    if total <= 0.0 {
        return 1.0;
    }
    let edge: f64 = mode[..2]
        .iter()
        .chain(&mode[n - 2..])
        .map(|v| v.norm_sqr())
        .sum();
    edge / total
}

/// Estimates the symmetric support half-width (in grid units of `step`) that
/// contains all but `SUPPORT_ENERGY_TAIL` of the collective energy.
fn support_half_extent(modes: &[Vec<Complex64>], step: f64, half_points: usize) -> f64 {
    let n = modes[0].len();
    let mut energy = vec![0.0; n];
    let mut total = 0.0;
    for mode in modes {
        for (e, v) in energy.iter_mut().zip(mode) {
            let p = v.norm_sqr();
            *e += p;
            total += p;
        }
    }
    let mut acc = 0.0;
    let mut lo = 0usize;
    let mut hi = n - 1;
    while acc < SUPPORT_ENERGY_TAIL * total && lo < hi {
        if energy[lo] <= energy[hi] {
            acc += energy[lo];
            lo += 1;
        } else {
            acc += energy[hi];
            hi -= 1;
        }
    }
    let center = half_points as f64;
    let reach = (center - lo as f64).abs().max(hi as f64 + 1.0 - center);
    reach * step
}

/// Propagates a crystal-output basis to an absolute detection-plane position.
///
/// The basis is zero-padded onto a wider grid with the same step before the
/// transforms so the beam never reaches the window boundary; weights are
/// unchanged and orthonormality is preserved by the unitary phase transfers.
pub fn propagate(basis: &ModeBasis, layout: &OpticalLayout, z_detect_cm: f64) -> Result<ModeBasis> {
    layout.validate()?;
    if basis.plane != Plane::CrystalOutput {
        return Err(Error::Domain(
            "propagation starts from the crystal output plane".into(),
        ));
    }
    if basis.modes.is_empty() {
        return Err(Error::Domain("empty mode basis".into()));
    }
    let (lo, hi) = layout.detection_range_cm;
    if !(z_detect_cm >= lo - 1e-9 && z_detect_cm <= hi + 1e-9) {
        return Err(Error::Domain(format!(
            "detection plane z = {z_detect_cm} cm outside the layout range [{lo}, {hi}]"
        )));
    }
    let k = 2.0 * PI / basis.wavelength_um;
    let z1 = layout.lens_position_cm * CM_TO_UM;
    let z2 = (z_detect_cm - layout.lens_position_cm) * CM_TO_UM;
    let f = layout.focal_length_cm * CM_TO_UM;

    // estimate beam extents to size the padded window
    for m in &basis.modes {
        let frac = boundary_energy_fraction(m);
        if frac > ALIAS_ENERGY_LIMIT {
            return Err(Error::Aliasing {
                z_cm: basis.z_cm,
                fraction: frac,
            });
        }
    }
    let x_support = support_half_extent(&basis.modes, basis.grid.step(), basis.grid.len() / 2);
    let q_support = {
        let fft = CenteredFft::new(basis.grid.len());
        let dx = basis.grid.step();
        let mut spectra: Vec<Vec<Complex64>> = basis.modes.clone();
        for s in spectra.iter_mut() {
            fft.to_momentum(s, dx);
        }
        support_half_extent(&spectra, basis.grid.dual().step(), basis.grid.len() / 2)
    };
    let needed = 1.35 * (x_support + q_support * z1 / k);
    let dx = basis.grid.step();
    let mut n_prop = basis.grid.len();
    while (n_prop / 2) as f64 * dx < needed {
        n_prop *= 2;
        if n_prop > (1 << 16) {
            return Err(Error::Computation(format!(
                "propagation window would need {n_prop} points (> 2^16)"
            )));
        }
    }

    let padded = basis.padded(n_prop)?;
    let grid = padded.grid;
    let dq = grid.dual().step();
    let q_of = |j: usize| (j as f64 - (n_prop / 2) as f64) * dq;
    let fft = CenteredFft::new(n_prop);
    let mut modes = padded.modes;

    fresnel_leg(&fft, &mut modes, dx, dq, q_of, z1, k);
    for m in &modes {
        let frac = boundary_energy_fraction(m);
        if frac > ALIAS_ENERGY_LIMIT {
            return Err(Error::Aliasing {
                z_cm: layout.lens_position_cm,
                fraction: frac,
            });
        }
    }
    // ideal thin lens
    for m in modes.iter_mut() {
        for (j, v) in m.iter_mut().enumerate() {
            let x = grid.coord(j);
            *v *= Complex64::from_polar(1.0, -k * x * x / (2.0 * f));
        }
    }
    if z2 > 0.0 {
        fresnel_leg(&fft, &mut modes, dx, dq, q_of, z2, k);
    }
    for m in &modes {
        let frac = boundary_energy_fraction(m);
        if frac > ALIAS_ENERGY_LIMIT {
            return Err(Error::Aliasing {
                z_cm: z_detect_cm,
                fraction: frac,
            });
        }
    }

    Ok(ModeBasis {
        grid,
        modes,
        weights: basis.weights.clone(),
        plane: Plane::ArbitraryZ,
        z_cm: z_detect_cm,
        wavelength_um: basis.wavelength_um,
    })
}

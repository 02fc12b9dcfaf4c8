//! Singular-value decomposition of the two-photon amplitude into Schmidt
//! mode bases.

use super::grid::{inner_product, CenteredFft, Grid1d};
use super::kernel::BiphotonKernel;
use crate::error::{Error, Result};
use crate::schmidt::SchmidtSpectrum;
use faer::solvers::SelfAdjointEigendecomposition;
use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Singular values below this fraction of the largest are treated as tail;
/// the discarded Frobenius mass then stays below 1e-6 of the kernel norm.
pub const SINGULAR_REL_CUTOFF: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    CrystalOutput,
    ArbitraryZ,
}

/// Orthonormal transverse mode functions of one beam along one axis, sampled
/// in position space at a fixed plane of the optical axis.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub grid: Grid1d,
    pub modes: Vec<Vec<Complex64>>,
    pub weights: SchmidtSpectrum,
    pub plane: Plane,
    /// Position along the optical axis, centimetres from the crystal output.
    pub z_cm: f64,
    pub wavelength_um: f64,
}

impl ModeBasis {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Largest deviation of the quadrature Gram matrix from the identity.
    pub fn gram_error(&self) -> f64 {
        let step = self.grid.step();
        let mut worst: f64 = 0.0;
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate() {
                let g = inner_product(a, b, step);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Basis restricted to the first `n` modes, weights renormalized.
    pub fn truncated(&self, n: usize) -> Result<ModeBasis> {
        let n = n.min(self.modes.len());
        if n == 0 {
            return Err(Error::Domain("cannot truncate basis to zero modes".into()));
        }
        Ok(ModeBasis {
            grid: self.grid,
            modes: self.modes[..n].to_vec(),
            weights: self.weights.truncated(n)?,
            plane: self.plane,
            z_cm: self.z_cm,
            wavelength_um: self.wavelength_um,
        })
    }

    /// Same basis on a zero-padded grid with identical step.
    pub fn padded(&self, points: usize) -> Result<ModeBasis> {
        let grid = self.grid.padded(points)?;
        let offset = (grid.len() - self.grid.len()) / 2;
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
                out[offset..offset + m.len()].copy_from_slice(m);
                out
            })
            .collect();
        Ok(ModeBasis {
            grid,
            modes,
            weights: self.weights.clone(),
            plane: self.plane,
            z_cm: self.z_cm,
            wavelength_um: self.wavelength_um,
        })
    }

    /// Debug export: one column of grid coordinates, then one real and one
    /// imaginary column per mode.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "x_um")?;
        for i in 0..self.modes.len() {
            write!(w, ",mode{i}_re,mode{i}_im")?;
        }
        writeln!(w)?;
        for j in 0..self.grid.len() {
            write!(w, "{}", self.grid.coord(j))?;
            for m in &self.modes {
                write!(w, ",{},{}", m[j].re, m[j].im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Schmidt-decomposes the kernel: weights are normalized squared singular
/// values; signal and idler bases hold the position-space mode functions at
/// the crystal output plane.
///
/// Modes are kept up to `max_modes` or down to the singular-value tail cutoff,
/// whichever bites first; with the cutoff in charge the discarded Frobenius
/// mass stays below 1e-6.
pub fn decompose(
    kernel: &BiphotonKernel,
    max_modes: usize,
) -> Result<(SchmidtSpectrum, ModeBasis, ModeBasis)> {
    if max_modes == 0 {
        return Err(Error::Domain("max_modes must be at least 1".into()));
    }
    super::ensure_deterministic_linalg();
    let n = kernel.grid.len();
    let dq = kernel.grid.step();
    // A = diag(chirp) R diag(chirp) with R real symmetric: the SVD of R is its
    // eigendecomposition with absolute values, which is the more robust path,
    // and the unitary chirp re-attaches to the vectors afterwards
    let chirp = &kernel.real_factor.chirp;
    let r = &kernel.real_factor.matrix;
    if cfg!(debug_assertions) {
        for i in 0..n {
            for j in (i + 1)..n {
                debug_assert!(
                    (r[[i, j]] - r[[j, i]]).abs() <= 1e-12,
                    "kernel real factor must be symmetric"
                );
            }
        }
    }
    let mat = Mat::from_fn(n, n, |i, j| r[[i, j]]);
    let eig = SelfAdjointEigendecomposition::new(mat.as_ref(), Side::Lower);
    let eigenvalues = eig.s().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigenvalues
            .read(b)
            .abs()
            .partial_cmp(&eigenvalues.read(a).abs())
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let sv: Vec<f64> = order.iter().map(|&i| eigenvalues.read(i).abs()).collect();
    let signs: Vec<f64> = order
        .iter()
        .map(|&i| if eigenvalues.read(i) < 0.0 { -1.0 } else { 1.0 })
        .collect();
    if !sv.iter().all(|v| v.is_finite()) {
        return Err(Error::Computation("SVD produced non-finite singular values".into()));
    }
    let s0 = sv[0];
    if !(s0 > 0.0) {
        return Err(Error::Computation("kernel has no nonzero singular values".into()));
    }
    let significant = sv.iter().take_while(|v| **v >= SINGULAR_REL_CUTOFF * s0).count();
    let kept = significant.min(max_modes).max(1);
    if kept == significant {
        // cutoff-bound truncation must reconstruct the kernel to 1e-6
        let tail: f64 = sv[kept..].iter().map(|v| (v * dq) * (v * dq)).sum();
        let residual = tail.sqrt();
        if residual > 1e-6 {
            return Err(Error::Computation(format!(
                "truncated reconstruction residual {residual:.3e} exceeds 1e-6"
            )));
        }
    }

    let weights = SchmidtSpectrum::normalize_with_cutoff(
        &sv[..kept].iter().map(|v| (v * dq) * (v * dq)).collect::<Vec<_>>(),
        0.0,
        "spatial_axis",
    )?;

    let fft = CenteredFft::new(n);
    let x_grid = kernel.grid.dual();
    let sqrt_dq = dq.sqrt();
    let u = eig.u();
    let mut signal_modes = Vec::with_capacity(kept);
    let mut idler_modes = Vec::with_capacity(kept);
    for k in 0..kept {
        // R = sum_k lambda_k v_k v_k^T, so u = v_k and the right singular
        // vector is sign(lambda_k) v_k; the chirp multiplies both beams
        let col = order[k];
        let mut mode_q: Vec<Complex64> = (0..n)
            .map(|i| chirp[i] * u.read(i, col) / sqrt_dq)
            .collect();
        fft.to_position(&mut mode_q, dq);
        signal_modes.push(mode_q);

        let mut idler_q: Vec<Complex64> = (0..n)
            .map(|i| chirp[i] * (signs[k] * u.read(i, col)) / sqrt_dq)
            .collect();
        fft.to_position(&mut idler_q, dq);
        idler_modes.push(idler_q);
    }

    let wavelength_um = kernel.params.signal_wavelength_nm * 1e-3;
    let signal = ModeBasis {
        grid: x_grid,
        modes: signal_modes,
        weights: weights.clone(),
        plane: Plane::CrystalOutput,
        z_cm: 0.0,
        wavelength_um,
    };
    let idler = ModeBasis {
        grid: x_grid,
        modes: idler_modes,
        weights: weights.clone(),
        plane: Plane::CrystalOutput,
        z_cm: 0.0,
        wavelength_um,
    };
    Ok((weights, signal, idler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::kernel::{build_kernel, GridSpec, KernelParams};
    use approx::assert_relative_eq;

    fn gaussian_params(sigma_p: f64, sigma_c: f64) -> KernelParams {
        KernelParams {
            pump_waist_um: sigma_p,
            sigma_c_um: Some(sigma_c),
            crystal_length_mm: 0.0001, // negligible emission depth for pure-spectrum checks
            ..KernelParams::default()
        }
    }

    #[test]
    fn symmetric_kernel_is_rank_one() {
        let k = build_kernel(&gaussian_params(80.0, 80.0), &GridSpec::default()).unwrap();
        let (spectrum, signal, _) = decompose(&k, 16).unwrap();
        assert_relative_eq!(spectrum.weights()[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(spectrum.schmidt_number(), 1.0, epsilon = 1e-9);
        assert!(signal.gram_error() < 1e-10);
    }

    #[test]
    fn double_gaussian_matches_mehler_spectrum() {
        let ratio: f64 = 3.0;
        let k = build_kernel(&gaussian_params(120.0, 120.0 / ratio), &GridSpec::default()).unwrap();
        let (spectrum, signal, idler) = decompose(&k, 40).unwrap();
        let t = ((ratio - 1.0) / (ratio + 1.0)).powi(2);
        for (n, w) in spectrum.weights().iter().enumerate().take(25) {
            let oracle = (1.0 - t) * t.powi(n as i32);
            assert!(
                (w - oracle).abs() < 1e-8,
                "mode {n}: svd {w} vs mehler {oracle}"
            );
        }
        // closed-form Schmidt number of the double-Gaussian kernel
        assert_relative_eq!(
            spectrum.schmidt_number(),
            0.5 * (ratio + 1.0 / ratio),
            max_relative = 1e-8
        );
        assert!(signal.gram_error() < 1e-8);
        assert!(idler.gram_error() < 1e-8);
    }

    #[test]
    fn two_dimensional_schmidt_number_is_square_of_one_dimensional() {
        let k = build_kernel(&gaussian_params(115.0, 13.0), &GridSpec::default()).unwrap();
        let (s1d, _, _) = decompose(&k, 80).unwrap();
        let joint = s1d.tensor(&s1d);
        assert_relative_eq!(
            joint.schmidt_number(),
            s1d.schmidt_number().powi(2),
            max_relative = 1e-9
        );
    }

    #[test]
    fn truncation_reconstruction_residual_is_small() {
        let k = build_kernel(&gaussian_params(115.0, 13.0), &GridSpec::default()).unwrap();
        let (spectrum, _, _) = decompose(&k, usize::MAX).unwrap();
        // tail mass below the kept modes, from the geometric oracle
        let kept = spectrum.len();
        let ratio = 115.0 / 13.0;
        let t = ((ratio - 1.0) / (ratio + 1.0) as f64).powi(2);
        let tail: f64 = t.powi(kept as i32);
        assert!(tail.sqrt() < 1e-6, "tail {tail:.3e} with {kept} modes");
    }

    #[test]
    fn source_depth_chirp_leaves_spectrum_invariant() {
        let flat = build_kernel(&gaussian_params(115.0, 13.0), &GridSpec::default()).unwrap();
        let mut with_depth = gaussian_params(115.0, 13.0);
        with_depth.crystal_length_mm = 20.0;
        let chirped = build_kernel(&with_depth, &GridSpec::default()).unwrap();
        let (sa, _, _) = decompose(&flat, 30).unwrap();
        let (sb, basis_b, _) = decompose(&chirped, 30).unwrap();
        for (a, b) in sa.weights().iter().zip(sb.weights()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(basis_b.gram_error() < 1e-8);
    }

    #[test]
    fn eigen_route_is_robust_across_width_sweep() {
        // sigma_c = 24 um at this grid hits an edge case in the plain
        // bidiagonal SVD; the symmetric-eigen route must stay finite
        for sc in [24.0f64, 24.2, 25.0, 20.0, 13.0] {
            let params = gaussian_params(115.0, sc);
            let k = build_kernel(&params, &GridSpec::default()).unwrap();
            let (spectrum, signal, _) = decompose(&k, 16).unwrap();
            assert!(spectrum.weights().iter().all(|w| w.is_finite()));
            assert!(signal.gram_error() < 1e-8, "sigma_c = {sc}");
        }
    }

    #[test]
    fn csv_export_round_trips_header_and_rows() {
        let k = build_kernel(&gaussian_params(100.0, 50.0), &GridSpec::default()).unwrap();
        let (_, signal, _) = decompose(&k, 3).unwrap();
        let mut buf = Vec::new();
        signal.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(header, "x_um,mode0_re,mode0_im,mode1_re,mode1_im,mode2_re,mode2_im");
        assert_eq!(lines.count(), signal.grid.len());
    }
}

//! Aperture masks, the field coherence matrix in the truncated Schmidt basis,
//! and filtered correlation predictions.
//!
//! The full two-dimensional transverse field is the tensor product of two
//! identical axes; circular masks do not factorize, so their overlap
//! integrals run on the outer-product grid of the per-axis modes. The
//! coherence matrix `C[(ab),(cd)] = sqrt(w_ab w_cd) N <psi_ab|P|psi_cd>` is
//! Hermitian positive semi-definite; its eigenvalue purity gives the
//! effective spatial mode number of the filtered light, and multimode thermal
//! statistics per mode then fix `g2 = 1 + 1/(K_s_eff K_t)`.

use super::decompose::ModeBasis;
use crate::error::{Error, Result};
use crate::schmidt::{g2_cross, CorrelationPrediction, GainedState};
use faer::complex_native::c64;
use faer::solvers::SelfAdjointEigendecomposition;
use faer::{Mat, Side};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Transmitted-power fraction below which predictions carry the
/// near-zero-signal flag.
pub const NEAR_ZERO_SIGNAL_FRACTION: f64 = 1e-9;

/// Supersampling factor per cell edge for anti-aliased circular masks.
const MASK_SUPERSAMPLE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApertureShape {
    Circular,
    Square,
}

/// Centered or offset aperture in the detection plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApertureSpec {
    pub diameter_mm: f64,
    /// Transverse offset of the aperture center, micrometres.
    pub center_um: [f64; 2],
    pub shape: ApertureShape,
}

impl Default for ApertureSpec {
    fn default() -> Self {
        Self {
            diameter_mm: 1.0,
            center_um: [0.0, 0.0],
            shape: ApertureShape::Circular,
        }
    }
}

impl ApertureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.diameter_mm > 0.0) || !self.diameter_mm.is_finite() {
            return Err(Error::Config(format!(
                "aperture diameter must be positive, got {}",
                self.diameter_mm
            )));
        }
        Ok(())
    }

    pub fn radius_um(&self) -> f64 {
        self.diameter_mm * 1e3 / 2.0
    }
}

/// First-order field coherence matrix in the truncated 2-D Schmidt basis.
#[derive(Debug, Clone)]
pub struct CoherenceMatrix {
    pub matrix: Array2<Complex64>,
    /// Mean detected photon number, `Tr C`.
    pub trace: f64,
}

impl CoherenceMatrix {
    /// Largest absolute deviation from Hermiticity, relative to the trace.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / self.trace.max(f64::MIN_POSITIVE)
    }

    /// Eigenvalues, ascending, from the self-adjoint decomposition of the
    /// symmetrized matrix.
    pub fn eigenvalues(&self) -> Vec<f64> {
        super::ensure_deterministic_linalg();
        let n = self.matrix.nrows();
        let sym = Mat::from_fn(n, n, |i, j| {
            let v = (self.matrix[[i, j]] + self.matrix[[j, i]].conj()) * 0.5;
            c64::new(v.re, v.im)
        });
        let eig = SelfAdjointEigendecomposition::new(sym.as_ref(), Side::Lower);
        let s = eig.s().column_vector();
        (0..n).map(|i| s.read(i).re).collect()
    }
}

/// Filtered prediction together with its diagnostic pieces.
#[derive(Debug, Clone)]
pub struct FilteredG2 {
    pub prediction: CorrelationPrediction,
    /// Effective spatial mode number of the transmitted light.
    pub effective_spatial_k: f64,
    /// Transmitted power as a fraction of the unfiltered beam.
    pub transmitted_fraction: f64,
    /// Eigenvalues of the coherence matrix in detected photons, descending.
    pub effective_photon_weights: Vec<f64>,
    pub coherence: CoherenceMatrix,
}

/// Fractional cell coverage of the aperture on the box `[xs] x [ys]`.
fn coverage(aperture: &ApertureSpec, xs: &[f64], ys: &[f64], step: f64) -> Array2<f64> {
    let r = aperture.radius_um();
    let [cx, cy] = aperture.center_um;
    let mut cov = Array2::<f64>::zeros((xs.len(), ys.len()));
    match aperture.shape {
        ApertureShape::Square => {
            // separable: fractional overlap of each cell with the half-width window
            let frac_1d = |c: f64, center: f64| -> f64 {
                let lo = (c - 0.5 * step).max(center - r);
                let hi = (c + 0.5 * step).min(center + r);
                ((hi - lo) / step).clamp(0.0, 1.0)
            };
            for (i, &x) in xs.iter().enumerate() {
                let fx = frac_1d(x, cx);
                if fx == 0.0 {
                    continue;
                }
                for (j, &y) in ys.iter().enumerate() {
                    cov[[i, j]] = fx * frac_1d(y, cy);
                }
            }
        }
        ApertureShape::Circular => {
            let r_sq = r * r;
            let half_diag = 0.5 * step * std::f64::consts::SQRT_2;
            let ss = MASK_SUPERSAMPLE;
            let offsets: Vec<f64> = (0..ss)
                .map(|a| ((a as f64 + 0.5) / ss as f64 - 0.5) * step)
                .collect();
            for (i, &x) in xs.iter().enumerate() {
                for (j, &y) in ys.iter().enumerate() {
                    let d = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
                    if d + half_diag <= r {
                        cov[[i, j]] = 1.0;
                    } else if d - half_diag >= r {
                        cov[[i, j]] = 0.0;
                    } else {
                        let mut inside = 0usize;
                        for du in &offsets {
                            for dv in &offsets {
                                let dx = x + du - cx;
                                let dy = y + dv - cy;
                                if dx * dx + dy * dy <= r_sq {
                                    inside += 1;
                                }
                            }
                        }
                        cov[[i, j]] = inside as f64 / (ss * ss) as f64;
                    }
                }
            }
        }
    }
    cov
}

/// Overlap matrix `O[(ab),(cd)] = <psi_a psi_b | P | psi_c psi_d>` of the
/// outer-product modes under the aperture mask.
fn aperture_overlaps(basis: &ModeBasis, aperture: &ApertureSpec) -> Array2<Complex64> {
    let m = basis.mode_count();
    let step = basis.grid.step();
    let r = aperture.radius_um();
    let [cx, cy] = aperture.center_um;
    let reach = r + 2.0 * step;
    let idx: Vec<usize> = (0..basis.grid.len())
        .filter(|&j| {
            let x = basis.grid.coord(j);
            (x - cx).abs() <= reach || (x - cy).abs() <= reach
        })
        .collect();
    let xs: Vec<f64> = idx.iter().map(|&j| basis.grid.coord(j)).collect();
    let nb = xs.len();
    let cov = coverage(aperture, &xs, &xs, step);

    // per-axis mode products restricted to the box: F[(a c)][x]
    let mut f = vec![Complex64::new(0.0, 0.0); m * m * nb];
    for a in 0..m {
        for c in 0..m {
            let row = &mut f[(a * m + c) * nb..(a * m + c + 1) * nb];
            for (t, &j) in idx.iter().enumerate() {
                row[t] = basis.modes[a][j].conj() * basis.modes[c][j];
            }
        }
    }
    // G[(b d)][x] = sum_y F[(b d)][y] cov(x, y) dy
    let mut g = vec![Complex64::new(0.0, 0.0); m * m * nb];
    for bd in 0..m * m {
        let src = &f[bd * nb..(bd + 1) * nb];
        let dst = &mut g[bd * nb..(bd + 1) * nb];
        for (t, d) in dst.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (u, s) in src.iter().enumerate() {
                acc += *s * cov[[t, u]];
            }
            *d = acc * step;
        }
    }
    // O[(ab),(cd)] = sum_x F[(a c)][x] G[(b d)][x] dx, Hermitian
    let mm = m * m;
    let mut out = Array2::<Complex64>::zeros((mm, mm));
    for ab in 0..mm {
        let (a, b) = (ab / m, ab % m);
        for cd in ab..mm {
            let (c, d) = (cd / m, cd % m);
            let fac = &f[(a * m + c) * nb..(a * m + c + 1) * nb];
            let gbd = &g[(b * m + d) * nb..(b * m + d + 1) * nb];
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, y) in fac.iter().zip(gbd) {
                acc += *x * *y;
            }
            acc *= step;
            out[[ab, cd]] = acc;
            if cd != ab {
                out[[cd, ab]] = acc.conj();
            }
        }
    }
    out
}

/// Builds the coherence matrix of the aperture-filtered 2-D field and turns
/// its eigenvalue spectrum into a correlation prediction.
///
/// `gained` must hold the 2-D spatial weights in row-major `(a, b)` order over
/// the `mode_count^2` outer products of the basis; `temporal_k` enters as a
/// fixed factor of the total mode number.
pub fn filtered_g2(
    basis: &ModeBasis,
    gained: &GainedState,
    aperture: Option<&ApertureSpec>,
    temporal_k: f64,
) -> Result<FilteredG2> {
    let m = basis.mode_count();
    let mm = m * m;
    if gained.weights().len() != mm {
        return Err(Error::Domain(format!(
            "gained state holds {} weights but the basis outer product has {mm}",
            gained.weights().len()
        )));
    }
    if !(temporal_k >= 1.0) {
        return Err(Error::Domain(format!(
            "temporal mode number must be >= 1, got {temporal_k}"
        )));
    }
    if let Some(a) = aperture {
        a.validate()?;
    }
    let n_photons = gained.total_photons();
    let overlaps = match aperture {
        None => Array2::from_shape_fn((mm, mm), |(i, j)| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        }),
        Some(a) => aperture_overlaps(basis, a),
    };
    let w = gained.weights();
    let mut matrix = Array2::<Complex64>::zeros((mm, mm));
    for i in 0..mm {
        for j in 0..mm {
            matrix[[i, j]] = overlaps[[i, j]] * (w[i] * w[j]).sqrt() * n_photons;
        }
    }
    let trace: f64 = (0..mm).map(|i| matrix[[i, i]].re).sum();
    if !(trace > 0.0) {
        return Err(Error::Computation(
            "aperture transmits no power on this grid".into(),
        ));
    }
    let coherence = CoherenceMatrix { matrix, trace };

    let mut ev = coherence.eigenvalues();
    ev.retain(|v| *v > 0.0);
    ev.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let sum: f64 = ev.iter().sum();
    let sum_sq: f64 = ev.iter().map(|v| v * v).sum();
    let k_spatial = sum * sum / sum_sq;
    let transmitted_fraction = sum / n_photons;

    let k_total = k_spatial * temporal_k;
    let photons_per_mode = sum / k_total;
    let prediction = CorrelationPrediction {
        schmidt_number: k_total,
        g2_auto: 1.0 + 1.0 / k_total,
        g2_cross: g2_cross(k_total, photons_per_mode)?,
        photons_per_mode,
        near_zero_signal: transmitted_fraction < NEAR_ZERO_SIGNAL_FRACTION,
    };
    Ok(FilteredG2 {
        prediction,
        effective_spatial_k: k_spatial,
        transmitted_fraction,
        effective_photon_weights: ev,
        coherence,
    })
}

/// Truncates a per-axis spectrum to `modes_per_axis`, forms the 2-D outer
/// product in row-major order, and applies the gain transformation without
/// reordering, so the weights stay aligned with mode index pairs.
pub fn spatial_gained_2d(
    per_axis: &crate::schmidt::SchmidtSpectrum,
    modes_per_axis: usize,
    gain: f64,
) -> Result<GainedState> {
    let axis = per_axis.truncated(modes_per_axis)?;
    let w = axis.weights();
    let mut joint = Vec::with_capacity(w.len() * w.len());
    for a in w {
        for b in w {
            joint.push(a * b);
        }
    }
    GainedState::from_unsorted_weights(&joint, gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::propagate::{propagate, OpticalLayout};
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn paper_setup() -> (&'static ModeBasis, &'static GainedState) {
        static GAINED: OnceLock<GainedState> = OnceLock::new();
        let (spectrum, signal, _) = crate::optics::testutil::paper_decomposition();
        let gained = GAINED.get_or_init(|| spatial_gained_2d(spectrum, 12, 7.3).unwrap());
        (signal, gained)
    }

    fn focal_basis() -> &'static ModeBasis {
        static CELL: OnceLock<ModeBasis> = OnceLock::new();
        CELL.get_or_init(|| {
            let (basis, _) = paper_setup();
            let layout = OpticalLayout::default();
            propagate(basis, &layout, layout.focal_plane_cm()).unwrap()
        })
    }

    #[test]
    fn no_aperture_reproduces_unfiltered_mode_number() {
        let (basis, gained) = paper_setup();
        let out = filtered_g2(basis, gained, None, 3.1).unwrap();
        assert_relative_eq!(
            out.effective_spatial_k,
            gained.schmidt_number(),
            max_relative = 1e-9
        );
        assert_relative_eq!(out.transmitted_fraction, 1.0, max_relative = 1e-9);
        assert!(!out.prediction.near_zero_signal);
        assert!(out.prediction.g2_cross >= out.prediction.g2_auto);
    }

    #[test]
    fn tiny_aperture_selects_a_single_mode() {
        let (_, gained) = paper_setup();
        let focal = focal_basis();
        let tiny = ApertureSpec {
            diameter_mm: 0.05,
            ..ApertureSpec::default()
        };
        let out = filtered_g2(focal, gained, Some(&tiny), 3.1).unwrap();
        assert!(
            out.effective_spatial_k < 1.01,
            "K_eff = {}",
            out.effective_spatial_k
        );
        let g2_expect = 1.0 + 1.0 / 3.1;
        assert!((out.prediction.g2_auto - g2_expect).abs() < 0.01);
    }

    #[test]
    fn transmitted_power_is_monotone_in_diameter() {
        let (_, gained) = paper_setup();
        let focal = focal_basis();
        let mut last = 0.0;
        for d in [0.1, 0.3, 0.8, 1.5, 2.5] {
            let ap = ApertureSpec {
                diameter_mm: d,
                ..ApertureSpec::default()
            };
            let out = filtered_g2(focal, gained, Some(&ap), 3.1).unwrap();
            assert!(
                out.transmitted_fraction >= last,
                "power dropped at D = {d}: {} < {last}",
                out.transmitted_fraction
            );
            last = out.transmitted_fraction;
        }
        assert!(last > 0.9);
    }

    #[test]
    fn coherence_matrix_is_hermitian_psd() {
        let (_, gained) = paper_setup();
        let focal = focal_basis();
        let ap = ApertureSpec {
            diameter_mm: 0.7,
            ..ApertureSpec::default()
        };
        let out = filtered_g2(focal, gained, Some(&ap), 3.1).unwrap();
        assert!(out.coherence.hermiticity_error() < 1e-10);
        let floor = -1e-10 * out.coherence.trace;
        assert!(out.coherence.eigenvalues().iter().all(|v| *v >= floor));
        assert!(out.coherence.trace > 0.0);
    }

    #[test]
    fn square_aperture_matches_separable_oracle() {
        let (_, gained) = paper_setup();
        let focal = focal_basis();
        let ap = ApertureSpec {
            diameter_mm: 0.9,
            shape: ApertureShape::Square,
            ..ApertureSpec::default()
        };
        let out = filtered_g2(focal, gained, Some(&ap), 3.1).unwrap();

        // separable oracle: 1-D windowed overlaps o[a][c], O = o(x) tensor o(y)
        let m = focal.mode_count();
        let half = ap.radius_um();
        let step = focal.grid.step();
        let mut o = vec![Complex64::new(0.0, 0.0); m * m];
        for a in 0..m {
            for c in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..focal.grid.len() {
                    let x = focal.grid.coord(j);
                    let lo = (x - 0.5 * step).max(-half);
                    let hi = (x + 0.5 * step).min(half);
                    let frac = ((hi - lo) / step).clamp(0.0, 1.0);
                    if frac > 0.0 {
                        acc += focal.modes[a][j].conj() * focal.modes[c][j] * frac;
                    }
                }
                o[a * m + c] = acc * step;
            }
        }
        let w = gained.weights();
        let n = gained.total_photons();
        for ab in 0..m * m {
            for cd in 0..m * m {
                let (a, b) = (ab / m, ab % m);
                let (c, d) = (cd / m, cd % m);
                let oracle = o[a * m + c] * o[b * m + d] * (w[ab] * w[cd]).sqrt() * n;
                let got = out.coherence.matrix[[ab, cd]];
                assert!(
                    (oracle - got).norm() <= 1e-9 * out.coherence.trace,
                    "C[{ab},{cd}] = {got} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn far_offset_aperture_flags_near_zero_signal() {
        let (_, gained) = paper_setup();
        let focal = focal_basis();
        let ap = ApertureSpec {
            diameter_mm: 0.1,
            center_um: [5200.0, 5200.0],
            ..ApertureSpec::default()
        };
        let out = filtered_g2(focal, gained, Some(&ap), 3.1).unwrap();
        assert!(out.prediction.near_zero_signal);
        assert!(out.transmitted_fraction < NEAR_ZERO_SIGNAL_FRACTION);
        assert!(out.prediction.g2_auto.is_finite());
    }

    #[test]
    fn mismatched_weight_count_is_rejected() {
        let (basis, _) = paper_setup();
        let bad = GainedState::from_unsorted_weights(&[0.5, 0.5], 7.3).unwrap();
        assert!(filtered_g2(basis, &bad, None, 3.1).is_err());
    }
}

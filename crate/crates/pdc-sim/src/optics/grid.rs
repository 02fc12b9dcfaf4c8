//! Uniform symmetric 1-D grids and unitary centered Fourier transforms.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform grid with even point count, symmetric around zero; the coordinate
/// of index `j` is `(j - n/2) * step` so zero itself is a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1d {
    n: usize,
    step: f64,
}

impl Grid1d {
    pub fn new(n: usize, step: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Domain(format!(
                "grid points must be even and >= 4, got {n}"
            )));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Domain(format!("grid step must be positive, got {step}")));
        }
        Ok(Self { n, step })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.step
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    pub fn half_extent(&self) -> f64 {
        (self.n / 2) as f64 * self.step
    }

    /// Conjugate (momentum) grid of the same point count,
    /// `dq = 2 pi / (n * step)`.
    pub fn dual(&self) -> Grid1d {
        Grid1d {
            n: self.n,
            step: 2.0 * PI / (self.n as f64 * self.step),
        }
    }

    /// Grid with the same step and a larger even point count; existing
    /// coordinates map onto indices shifted by `(n_new - n)/2`.
    pub fn padded(&self, n_new: usize) -> Result<Grid1d> {
        if n_new < self.n || n_new % 2 != 0 {
            return Err(Error::Domain(format!(
                "padded point count must be even and >= {}, got {n_new}",
                self.n
            )));
        }
        Grid1d::new(n_new, self.step)
    }
}

/// Centered unitary transforms between position and momentum samples.
///
/// Conventions: `f(q) = (2 pi)^(-1/2) integral f(x) exp(-i q x) dx` and its
/// inverse, discretized on symmetric grids, so quadrature norms are preserved
/// on both sides.
pub struct CenteredFft {
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
    n: usize,
}

impl CenteredFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    fn rotate_half(buf: &mut [Complex64]) {
        let h = buf.len() / 2;
        buf.rotate_left(h);
    }

    /// Position-to-momentum transform in place; `step` is the position-grid
    /// spacing. The result is sampled on `grid.dual()`.
    pub fn to_momentum(&self, buf: &mut [Complex64], step: f64) {
        assert_eq!(buf.len(), self.n);
        Self::rotate_half(buf);
        self.forward.process(buf);
        Self::rotate_half(buf);
        let scale = step / (2.0 * PI).sqrt();
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Momentum-to-position transform in place; `dq` is the momentum-grid
    /// spacing.
    pub fn to_position(&self, buf: &mut [Complex64], dq: f64) {
        assert_eq!(buf.len(), self.n);
        Self::rotate_half(buf);
        self.inverse.process(buf);
        Self::rotate_half(buf);
        let scale = dq / (2.0 * PI).sqrt();
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Quadrature inner product `<a|b> = sum conj(a) b step`.
pub fn inner_product(a: &[Complex64], b: &[Complex64], step: f64) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc * step
}

pub fn norm_sq(a: &[Complex64], step: f64) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>() * step
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_is_symmetric_with_zero_point() {
        let g = Grid1d::new(8, 0.5).unwrap();
        let xs = g.positions();
        assert_eq!(xs[4], 0.0);
        assert_eq!(xs[0], -2.0);
        assert_eq!(xs[7], 1.5);
        assert!(Grid1d::new(7, 0.5).is_err());
        assert!(Grid1d::new(8, 0.0).is_err());
    }

    #[test]
    fn gaussian_transforms_to_gaussian() {
        // exp(-x^2/(2 s^2)) -> s-free check against the analytic conjugate width
        let n = 256;
        let s = 1.3;
        let g = Grid1d::new(n, 12.0 * s / n as f64 * 2.0).unwrap();
        let mut buf: Vec<Complex64> = g
            .positions()
            .iter()
            .map(|x| Complex64::new((-x * x / (2.0 * s * s)).exp(), 0.0))
            .collect();
        let fft = CenteredFft::new(n);
        fft.to_momentum(&mut buf, g.step());
        let dual = g.dual();
        for (j, v) in buf.iter().enumerate() {
            let q = dual.coord(j);
            let expect = s * (-q * q * s * s / 2.0).exp();
            assert_relative_eq!(v.re, expect, epsilon = 1e-9 * s);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_preserves_signal_and_norm() {
        let n = 128;
        let g = Grid1d::new(n, 0.2).unwrap();
        let orig: Vec<Complex64> = g
            .positions()
            .iter()
            .map(|x| Complex64::new((-x * x).exp() * x.cos(), 0.3 * x.sin()))
            .collect();
        let mut buf = orig.clone();
        let fft = CenteredFft::new(n);
        let before = norm_sq(&buf, g.step());
        fft.to_momentum(&mut buf, g.step());
        let mid = norm_sq(&buf, g.dual().step());
        fft.to_position(&mut buf, g.dual().step());
        let after = norm_sq(&buf, g.step());
        assert_relative_eq!(before, mid, max_relative = 1e-12);
        assert_relative_eq!(before, after, max_relative = 1e-12);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}

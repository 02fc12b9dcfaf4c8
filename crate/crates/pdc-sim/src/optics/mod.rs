//! Discretized two-photon transverse amplitudes, their Schmidt mode bases,
//! Fresnel propagation through the 2f-2f layout, and aperture-filtered
//! correlation predictions.

pub mod aperture;
pub mod decompose;
pub mod grid;
pub mod kernel;
pub mod propagate;

pub use aperture::{
    filtered_g2, spatial_gained_2d, ApertureShape, ApertureSpec, CoherenceMatrix, FilteredG2,
};
pub use decompose::{decompose, ModeBasis, Plane};

/// Pins the linear-algebra backend to sequential execution so decompositions
/// and eigenvalue solves are bitwise-independent of the worker-pool size.
/// Pulse sampling keeps its own order-independent parallelism.
pub(crate) fn ensure_deterministic_linalg() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Parallelism::None));
}
pub use grid::Grid1d;
pub use kernel::{build_kernel, BiphotonKernel, GridSpec, KernelParams, PhaseMismatchModel};
pub use propagate::{propagate, OpticalLayout};

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::schmidt::SchmidtSpectrum;
    use std::sync::OnceLock;

    /// Paper-geometry fixture shared across test modules: kernel decomposition
    /// is the slow step, so it runs once per test binary.
    pub fn paper_decomposition() -> &'static (SchmidtSpectrum, ModeBasis, ModeBasis) {
        static CELL: OnceLock<(SchmidtSpectrum, ModeBasis, ModeBasis)> = OnceLock::new();
        CELL.get_or_init(|| {
            let params = KernelParams {
                sigma_c_um: Some(12.9),
                ..KernelParams::default()
            };
            let kernel = build_kernel(&params, &GridSpec::default()).unwrap();
            decompose(&kernel, 12).unwrap()
        })
    }
}

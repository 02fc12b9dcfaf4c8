//! Configuration ingestion, calibrations, the measurement scans, and result
//! emission.

pub mod calibrate;
pub mod config;
pub mod emit;
pub mod scan;

pub use calibrate::{calibrate_gain, calibrate_kernel, spatial_k2d, GainCalibration};
pub use config::{
    GainCalibrationInput, KernelCalibrationInput, ScanMetadata, ScanResult, ScanRow, ScanSpec,
    ScenarioConfig,
};
pub use emit::{csv_bytes, emit, emit_gnuplot, gnuplot_script, read_csv, write_csv};
pub use scan::{
    resolve, run_aperture_scan, run_gain_scan, run_hbt_point, run_position_scan, ResolvedScenario,
};

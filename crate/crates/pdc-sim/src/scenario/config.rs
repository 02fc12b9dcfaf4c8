//! Scenario configuration: one human-editable JSON document per run, with
//! units spelled out in the field names.

use crate::error::{Error, Result};
use crate::hbt::SamplerConfig;
use crate::optics::{ApertureSpec, GridSpec, KernelParams, OpticalLayout};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_temporal_k() -> f64 {
    3.1
}

fn default_modes_per_axis() -> usize {
    12
}

/// Gain calibration input: measured pump-power points, an explicit
/// proportionality constant, or both (points win).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct GainCalibrationInput {
    /// Measured `(pump power mW, mean signal)` pairs.
    pub points_mw_signal: Vec<(f64, f64)>,
    /// Known constant of `G = c sqrt(P)`, used when no points are given.
    pub proportionality: Option<f64>,
}

/// Kernel calibration request: fit the phase-matching width so the spatial
/// Schmidt number at `at_gain` hits `target_ks`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCalibrationInput {
    pub target_ks: f64,
    pub at_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanSpec {
    /// Analytic and Monte-Carlo g2 over a parametric-gain range.
    GainScan { min: f64, max: f64, steps: usize },
    /// Aperture-diameter scan at the focal plane.
    ApertureScan {
        diameters_mm: Vec<f64>,
        #[serde(default)]
        aperture: Option<ApertureSpec>,
    },
    /// Detection-plane position scan, optionally behind a fixed aperture.
    PositionScan {
        z_list_cm: Vec<f64>,
        #[serde(default)]
        aperture: Option<ApertureSpec>,
    },
    /// Single full-collection HBT measurement.
    HbtPoint {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub kernel: KernelParams,
    #[serde(default)]
    pub layout: OpticalLayout,
    #[serde(default)]
    pub sampler: SamplerConfig,
    /// Parametric gain, given directly ...
    #[serde(default)]
    pub gain: Option<f64>,
    /// ... or via pump power plus the gain calibration.
    #[serde(default)]
    pub pump_power_mw: Option<f64>,
    #[serde(default)]
    pub gain_calibration: Option<GainCalibrationInput>,
    #[serde(default)]
    pub kernel_calibration: Option<KernelCalibrationInput>,
    /// Fixed temporal mode number folded into every prediction.
    #[serde(default = "default_temporal_k")]
    pub temporal_k: f64,
    /// Per-axis truncation of the spatial mode basis.
    #[serde(default = "default_modes_per_axis")]
    pub modes_per_axis: usize,
    #[serde(default)]
    pub grid: GridSpec,
    pub scan: ScanSpec,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.layout.validate()?;
        self.sampler.validate()?;
        if self.gain.is_none() && self.pump_power_mw.is_none() {
            return Err(Error::Config(
                "either gain or pump_power_mw must be given".into(),
            ));
        }
        if let Some(g) = self.gain {
            if !(g > 0.0) {
                return Err(Error::Config(format!("gain must be positive, got {g}")));
            }
        }
        if let Some(p) = self.pump_power_mw {
            if !(p > 0.0) {
                return Err(Error::Config(format!(
                    "pump power must be positive, got {p} mW"
                )));
            }
            let has_cal = self
                .gain_calibration
                .as_ref()
                .is_some_and(|c| !c.points_mw_signal.is_empty() || c.proportionality.is_some());
            if !has_cal {
                return Err(Error::Config(
                    "pump_power_mw needs a gain_calibration block (points or proportionality)"
                        .into(),
                ));
            }
        }
        if !(self.temporal_k >= 1.0) {
            return Err(Error::Config(format!(
                "temporal_k must be >= 1, got {}",
                self.temporal_k
            )));
        }
        if self.modes_per_axis == 0 || self.modes_per_axis > 64 {
            return Err(Error::Config(format!(
                "modes_per_axis must lie in 1..=64, got {}",
                self.modes_per_axis
            )));
        }
        if let Some(kc) = &self.kernel_calibration {
            if !(kc.target_ks > 1.0) {
                return Err(Error::Config(format!(
                    "kernel calibration target_ks must exceed 1, got {}",
                    kc.target_ks
                )));
            }
            if !(kc.at_gain > 0.0) {
                return Err(Error::Config(format!(
                    "kernel calibration at_gain must be positive, got {}",
                    kc.at_gain
                )));
            }
        }
        match &self.scan {
            ScanSpec::GainScan { min, max, steps } => {
                if !(*min > 0.0 && max > min) {
                    return Err(Error::Config(format!(
                        "gain scan range ({min}, {max}) must be positive and ordered"
                    )));
                }
                if *steps < 2 {
                    return Err(Error::Config("gain scan needs at least 2 steps".into()));
                }
            }
            ScanSpec::ApertureScan {
                diameters_mm,
                aperture,
            } => {
                if diameters_mm.is_empty() {
                    return Err(Error::Config("aperture scan needs diameters".into()));
                }
                if diameters_mm.iter().any(|d| !(*d > 0.0)) {
                    return Err(Error::Config("aperture diameters must be positive".into()));
                }
                if let Some(a) = aperture {
                    a.validate()?;
                }
            }
            ScanSpec::PositionScan { z_list_cm, aperture } => {
                if z_list_cm.is_empty() {
                    return Err(Error::Config("position scan needs z points".into()));
                }
                let (lo, hi) = self.layout.detection_range_cm;
                for z in z_list_cm {
                    if !(*z >= lo - 1e-9 && *z <= hi + 1e-9) {
                        return Err(Error::Config(format!(
                            "z = {z} cm outside detection range [{lo}, {hi}]"
                        )));
                    }
                }
                if let Some(a) = aperture {
                    a.validate()?;
                }
            }
            ScanSpec::HbtPoint {} => {}
        }
        Ok(())
    }
}

/// One scan point of tabulated results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub control: f64,
    pub g2_analytic: f64,
    pub g2_montecarlo: f64,
    pub std_error: f64,
    /// Total effective mode number (spatial times temporal) at this point.
    pub k_effective: f64,
    pub transmitted_power_fraction: f64,
}

/// Resolved provenance attached to every result table. The wall-clock
/// timestamp stays in memory only, so emitted files are byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub config: ScenarioConfig,
    pub resolved_gain: f64,
    pub fitted_sigma_c_um: Option<f64>,
    pub gain_proportionality: Option<f64>,
    pub gain_fit_residual: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub timestamp_unix: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    /// Name of the control-variable column.
    pub control_name: String,
    pub rows: Vec<ScanRow>,
    pub metadata: ScanMetadata,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json(scan: &str) -> String {
        format!(r#"{{"gain": 7.3, "scan": {scan}}}"#)
    }

    #[test]
    fn parses_minimal_gain_scan() {
        let cfg = ScenarioConfig::from_json(&minimal_json(
            r#"{"type": "gain_scan", "min": 5.8, "max": 8.0, "steps": 12}"#,
        ))
        .unwrap();
        assert_eq!(cfg.temporal_k, 3.1);
        assert_eq!(cfg.modes_per_axis, 12);
        assert!(matches!(cfg.scan, ScanSpec::GainScan { steps: 12, .. }));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_ranges() {
        assert!(ScenarioConfig::from_json(r#"{"gain": 7.3, "scan": {"type": "hbt_point"}, "bogus": 1}"#).is_err());
        assert!(ScenarioConfig::from_json(&minimal_json(
            r#"{"type": "gain_scan", "min": 8.0, "max": 5.8, "steps": 12}"#
        ))
        .is_err());
        assert!(ScenarioConfig::from_json(r#"{"scan": {"type": "hbt_point"}}"#).is_err());
    }

    #[test]
    fn pump_power_requires_calibration() {
        let err = ScenarioConfig::from_json(
            r#"{"pump_power_mw": 20.5, "scan": {"type": "hbt_point"}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));

        let ok = ScenarioConfig::from_json(
            r#"{"pump_power_mw": 20.5,
                "gain_calibration": {"proportionality": 1.6123},
                "scan": {"type": "hbt_point"}}"#,
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn position_scan_enforces_layout_range() {
        let err = ScenarioConfig::from_json(&minimal_json(
            r#"{"type": "position_scan", "z_list_cm": [44.0], "aperture": null}"#,
        ))
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}

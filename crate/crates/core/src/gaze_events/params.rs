use serde::{Deserialize, Serialize};

use super::ClassifyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Fixed,
    Adaptive,
}

/// Tunables of the velocity-threshold event classifier. Velocities are px/s,
/// or deg/s when `px_per_degree` is set; every velocity-valued field uses the
/// same unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierParams {
    pub smoothing_enabled: bool,
    pub smoothing_window_samples: usize,
    pub smoothing_poly_order: usize,
    pub velocity_threshold_mode: ThresholdMode,
    pub fixed_threshold_px_s: f64,
    pub adaptive_k: f64,
    /// Lower bound on the effective threshold; keeps noiseless input from
    /// collapsing the adaptive threshold to zero.
    pub threshold_floor_px_s: f64,
    pub min_fixation_ms: f64,
    pub max_saccade_ms: f64,
    pub max_gap_ms: f64,
    /// Merge radius for uncalibrated (pixel) data.
    pub merge_radius_px: f64,
    /// Merge radius when `px_per_degree` is known.
    pub merge_radius_deg: f64,
    pub px_per_degree: Option<f64>,
    /// Consecutive samples further apart than this many nominal periods do not
    /// form a velocity interval.
    pub max_interval_periods: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            smoothing_enabled: true,
            smoothing_window_samples: 7,
            smoothing_poly_order: 2,
            velocity_threshold_mode: ThresholdMode::Adaptive,
            fixed_threshold_px_s: 300.0,
            adaptive_k: 5.0,
            threshold_floor_px_s: 20.0,
            min_fixation_ms: 100.0,
            max_saccade_ms: 200.0,
            max_gap_ms: 75.0,
            merge_radius_px: 30.0,
            merge_radius_deg: 1.0,
            px_per_degree: None,
            max_interval_periods: 2.5,
        }
    }
}

impl ClassifierParams {
    /// Settings for 10 Hz eye tracking: the seven-sample smoothing window spans
    /// 700 ms there and would smear every saccade into its neighbours, and the
    /// merge gap has to admit one full sample interval.
    pub fn low_rate() -> Self {
        Self { smoothing_enabled: false, max_gap_ms: 100.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::BadParams(m.to_string()));
        if self.smoothing_enabled {
            if self.smoothing_window_samples % 2 == 0 {
                return bad("smoothing_window_samples must be odd");
            }
            if self.smoothing_window_samples < self.smoothing_poly_order + 2 {
                return bad("smoothing_window_samples must be >= smoothing_poly_order + 2");
            }
        }
        if !(self.min_fixation_ms > 0.0) {
            return bad("min_fixation_ms must be positive");
        }
        for (name, v) in [
            ("fixed_threshold_px_s", self.fixed_threshold_px_s),
            ("adaptive_k", self.adaptive_k),
            ("threshold_floor_px_s", self.threshold_floor_px_s),
            ("max_saccade_ms", self.max_saccade_ms),
            ("max_gap_ms", self.max_gap_ms),
            ("merge_radius_px", self.merge_radius_px),
            ("merge_radius_deg", self.merge_radius_deg),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ClassifyError::BadParams(format!("{name} must be finite and >= 0")));
            }
        }
        if let Some(p) = self.px_per_degree {
            if !(p.is_finite() && p > 0.0) {
                return bad("px_per_degree must be positive");
            }
        }
        if !(self.max_interval_periods > 0.0) {
            return bad("max_interval_periods must be positive");
        }
        Ok(())
    }

    /// Divisor turning px/s into the configured velocity unit.
    pub(crate) fn unit_scale(&self) -> f64 {
        self.px_per_degree.unwrap_or(1.0)
    }

    pub(crate) fn merge_radius(&self) -> f64 {
        match self.px_per_degree {
            Some(ppd) => self.merge_radius_deg * ppd,
            None => self.merge_radius_px,
        }
    }
}

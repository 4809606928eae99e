//! Probes for the theoretical claims: masking-error constants, the
//! progressive-masking factor, convergence slopes and local drift.

mod convex;
mod drift;
mod masking_error;
mod slope;

use serde::{Deserialize, Serialize};

pub use convex::{box_gradient_bound, strongly_convex_comparison, ConvexComparison, ConvexSetup};
pub use drift::{gradient_drift, DriftReport, DriftStep};
pub use masking_error::{estimate_q, pm_factor, pm_factor_iid_gates, verify_pm_factor, PmFactorCheck};
pub use slope::convergence_slope;

use crate::error::{Error, Result};

/// Collected probe outputs. Probes that were not run are `None` or empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub q_hat: Option<f64>,
    pub pm_factor_hat: Option<f64>,
    pub pm_check: Option<PmFactorCheck>,
    pub slope_hat: Option<f64>,
    pub convex: Option<ConvexSummary>,
    /// Largest drift in each round.
    pub drift_per_round: Vec<f64>,
    pub drift: Option<DriftSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexSummary {
    pub fedmrn_slope: f64,
    pub fedavg_slope: f64,
    pub final_gap_ratio: f64,
    pub clipped_coordinates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub g_hat: f64,
    pub q_hat: f64,
    pub violations: usize,
    pub max_drift: f64,
}

impl AnalysisReport {
    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.q_hat {
            if !(q >= 0.0) {
                return Err(Error::invalid(format!("q_hat = {q} is negative")));
            }
        }
        if let Some(f) = self.pm_factor_hat {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("pm_factor_hat = {f} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))
    }
}

impl From<&ConvexComparison> for ConvexSummary {
    fn from(c: &ConvexComparison) -> Self {
        Self {
            fedmrn_slope: c.fedmrn_slope,
            fedavg_slope: c.fedavg_slope,
            final_gap_ratio: c.final_gap_ratio(),
            clipped_coordinates: c.clipped_coordinates,
        }
    }
}

impl From<&DriftReport> for DriftSummary {
    fn from(d: &DriftReport) -> Self {
        Self {
            g_hat: d.g_hat,
            q_hat: d.q_hat,
            violations: d.violations(),
            max_drift: d.steps.iter().map(|s| s.drift).fold(0.0, f64::max),
        }
    }
}

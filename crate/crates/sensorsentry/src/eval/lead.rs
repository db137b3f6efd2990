//! Early-warning lead time and threshold sensitivity.
//!
//! The warning point is the first grid severity where predicted health
//! drops below `tau_h`; the failure point is the first where the detector
//! score drops below `(1 - delta)` of its clean value. Lead is their gap in
//! severity units, reported on the discrete grid without interpolation, and
//! may be negative (a late warning) — that is diagnostic information, not an
//! error.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::PerformanceCurve;
use crate::model::DegradationMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EarlyWarningConfig {
    pub tau_h: f64,
    pub delta: f64,
}

impl Default for EarlyWarningConfig {
    fn default() -> Self {
        EarlyWarningConfig {
            tau_h: 0.8,
            delta: 0.20,
        }
    }
}

impl EarlyWarningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.tau_h && self.tau_h < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tau_h must lie in (0,1), got {}",
                self.tau_h
            )));
        }
        if !(0.0 < self.delta && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeadStatus {
    Lead(f64),
    /// Detector never crossed the failure threshold (rendered "N/F").
    NoFailure,
    /// Detector failed but the monitor never warned.
    NoWarning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadTimeResult {
    pub mode: DegradationMode,
    pub s_warn: Option<f64>,
    pub s_fail: Option<f64>,
    pub lead: Option<f64>,
    pub status: LeadStatus,
}

impl LeadTimeResult {
    /// Table rendering: a lead value, "N/F", or "no-warning".
    pub fn display(&self) -> String {
        match self.status {
            LeadStatus::Lead(v) => format!("{v:.2}"),
            LeadStatus::NoFailure => "N/F".to_string(),
            LeadStatus::NoWarning => "no-warning".to_string(),
        }
    }
}

/// First-crossing lead time on the discrete severity grid.
pub fn lead_time(
    health: &PerformanceCurve,
    detector: &PerformanceCurve,
    cfg: &EarlyWarningConfig,
) -> Result<LeadTimeResult> {
    cfg.validate()?;
    if health.mode != detector.mode {
        return Err(Error::Metric(format!(
            "curve mode mismatch: {} vs {}",
            health.mode, detector.mode
        )));
    }
    let clean = detector.clean_score().ok_or_else(|| {
        Error::Metric(format!(
            "detector curve for {} is missing the clean (s = 0) reference point",
            detector.mode
        ))
    })?;

    let s_warn = health
        .points()
        .iter()
        .find(|(_, h)| *h < cfg.tau_h)
        .map(|(s, _)| *s);
    let fail_level = (1.0 - cfg.delta) * clean;
    let s_fail = detector
        .points()
        .iter()
        .find(|(_, m)| *m < fail_level)
        .map(|(s, _)| *s);

    let (lead, status) = match (s_warn, s_fail) {
        (Some(w), Some(f)) => (Some(f - w), LeadStatus::Lead(f - w)),
        (_, None) => (None, LeadStatus::NoFailure),
        (None, Some(_)) => (None, LeadStatus::NoWarning),
    };
    Ok(LeadTimeResult {
        mode: health.mode,
        s_warn,
        s_fail,
        lead,
        status,
    })
}

/// One row of the threshold-sensitivity table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    /// Mean lead over modes with Lead status (None when there are none).
    pub mean_lead: Option<f64>,
    /// Population standard deviation of those leads.
    pub std_pop: Option<f64>,
    /// Sample standard deviation (n - 1); None below two leads.
    pub std_samp: Option<f64>,
    /// Fraction of failure-reaching modes warned at or before failure.
    pub warning_rate: f64,
    /// Fraction of all modes that produced any warning.
    pub trigger_rate: f64,
    pub leads: usize,
}

/// Early-warning behavior across warning thresholds.
pub fn threshold_sweep(
    pairs: &[(PerformanceCurve, PerformanceCurve)],
    taus: &[f64],
    base: &EarlyWarningConfig,
) -> Result<Vec<SweepRow>> {
    if pairs.is_empty() {
        return Err(Error::Metric("threshold sweep needs at least one curve pair".into()));
    }
    if taus.is_empty() {
        return Err(Error::Metric("threshold sweep needs at least one tau".into()));
    }
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let cfg = EarlyWarningConfig {
            tau_h: tau,
            delta: base.delta,
        };
        cfg.validate()?;
        let mut leads = Vec::new();
        let mut failure_modes = 0usize;
        let mut warned_in_time = 0usize;
        let mut triggered = 0usize;
        for (health, detector) in pairs {
            let r = lead_time(health, detector, &cfg)?;
            if r.s_warn.is_some() {
                triggered += 1;
            }
            if let Some(f) = r.s_fail {
                failure_modes += 1;
                if r.s_warn.map(|w| w <= f).unwrap_or(false) {
                    warned_in_time += 1;
                }
            }
            if let LeadStatus::Lead(v) = r.status {
                leads.push(v);
            }
        }
        let n = leads.len();
        let (mean_lead, std_pop, std_samp) = if n > 0 {
            let mean = leads.iter().sum::<f64>() / n as f64;
            let ss: f64 = leads.iter().map(|l| (l - mean) * (l - mean)).sum();
            let pop = (ss / n as f64).sqrt();
            let samp = if n > 1 {
                Some((ss / (n - 1) as f64).sqrt())
            } else {
                None
            };
            (Some(mean), Some(pop), samp)
        } else {
            (None, None, None)
        };
        rows.push(SweepRow {
            tau,
            mean_lead,
            std_pop,
            std_samp,
            warning_rate: if failure_modes > 0 {
                warned_in_time as f64 / failure_modes as f64
            } else {
                f64::NAN
            },
            trigger_rate: triggered as f64 / pairs.len() as f64,
            leads: n,
        });
    }
    Ok(rows)
}

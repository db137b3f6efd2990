//! Shared data model: taxonomy, severity/presence vectors, health scores,
//! operating regimes, risk weights and raster types.

mod mode;
mod raster;
mod risk;

pub use mode::{DegradationGroup, DegradationMode, GROUP_COUNT, MODE_COUNT};
pub use raster::{quantize8, BoundingBox, DepthMap, ImageBuffer, SpatialMask};
pub use risk::{default_risk_table, RiskWeightTable};

use crate::error::{Error, Result};

/// Per-mode degradation severities, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeverityVector {
    values: [f64; MODE_COUNT],
}

impl SeverityVector {
    pub fn new(values: [f64; MODE_COUNT]) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "severity for {} must lie in [0,1], got {v}",
                    DegradationMode::ALL[i]
                )));
            }
        }
        Ok(SeverityVector { values })
    }

    pub fn zero() -> Self {
        SeverityVector {
            values: [0.0; MODE_COUNT],
        }
    }

    /// Single active mode at the given severity.
    pub fn single(mode: DegradationMode, severity: f64) -> Result<Self> {
        let mut values = [0.0; MODE_COUNT];
        values[mode.id()] = severity;
        SeverityVector::new(values)
    }

    pub fn from_pairs(pairs: &[(DegradationMode, f64)]) -> Result<Self> {
        let mut values = [0.0; MODE_COUNT];
        for &(mode, severity) in pairs {
            values[mode.id()] = severity;
        }
        SeverityVector::new(values)
    }

    pub fn get(&self, mode: DegradationMode) -> f64 {
        self.values[mode.id()]
    }

    pub fn set(&mut self, mode: DegradationMode, severity: f64) -> Result<()> {
        if !severity.is_finite() || !(0.0..=1.0).contains(&severity) {
            return Err(Error::InvalidArgument(format!(
                "severity for {mode} must lie in [0,1], got {severity}"
            )));
        }
        self.values[mode.id()] = severity;
        Ok(())
    }

    pub fn values(&self) -> &[f64; MODE_COUNT] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Modes with strictly positive severity.
    pub fn active_modes(&self) -> Vec<DegradationMode> {
        DegradationMode::ALL
            .iter()
            .copied()
            .filter(|m| self.values[m.id()] > 0.0)
            .collect()
    }
}

/// Per-mode presence scores. Targets use {0, 1}; predictions may be any
/// reals in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresenceVector {
    values: [f64; MODE_COUNT],
}

/// Ground-truth presence flags.
pub type PresenceFlags = [bool; MODE_COUNT];

impl PresenceVector {
    pub fn new(values: [f64; MODE_COUNT]) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "presence score for {} must lie in [0,1], got {v}",
                    DegradationMode::ALL[i]
                )));
            }
        }
        Ok(PresenceVector { values })
    }

    pub fn from_flags(flags: &PresenceFlags) -> Self {
        let mut values = [0.0; MODE_COUNT];
        for (v, &f) in values.iter_mut().zip(flags) {
            *v = if f { 1.0 } else { 0.0 };
        }
        PresenceVector { values }
    }

    pub fn get(&self, mode: DegradationMode) -> f64 {
        self.values[mode.id()]
    }

    pub fn values(&self) -> &[f64; MODE_COUNT] {
        &self.values
    }
}

/// Scalar camera health in [0, 1]; 1 means fully healthy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HealthScore {
    value: f64,
}

impl HealthScore {
    pub const ZERO: HealthScore = HealthScore { value: 0.0 };
    pub const ONE: HealthScore = HealthScore { value: 1.0 };

    /// Construct a health score, clamping out-of-range inputs to [0, 1].
    ///
    /// Upstream estimators may emit raw values slightly outside the unit
    /// interval; the clamp is logged so it never passes silently.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            log::warn!("health score was NaN; clamped to 0");
            return HealthScore { value: 0.0 };
        }
        if !(0.0..=1.0).contains(&value) {
            log::warn!("health score {value} outside [0,1]; clamped");
        }
        HealthScore {
            value: value.clamp(0.0, 1.0),
        }
    }

    pub fn value(self) -> f64 {
        self.value
    }
}

/// Operating regime derived from a health score.
///
/// The order is total: `Healthy > Degraded > Critical`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Critical = 0,
    Degraded = 1,
    Healthy = 2,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Healthy => "healthy",
            Regime::Degraded => "degraded",
            Regime::Critical => "critical",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "healthy" => Ok(Regime::Healthy),
            "degraded" => Ok(Regime::Degraded),
            "critical" => Ok(Regime::Critical),
            other => Err(Error::InvalidArgument(format!("unknown regime `{other}`"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Map a health score to its operating regime.
///
/// Healthy covers [0.9, 1.0], Degraded [0.6, 0.9), Critical [0, 0.6); both
/// boundaries are inclusive on the healthier side.
pub fn classify_regime(h: HealthScore) -> Regime {
    let v = h.value();
    if v >= 0.9 {
        Regime::Healthy
    } else if v >= 0.6 {
        Regime::Degraded
    } else {
        Regime::Critical
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_boundaries() {
        assert_eq!(classify_regime(HealthScore::new(0.95)), Regime::Healthy);
        assert_eq!(classify_regime(HealthScore::new(0.90)), Regime::Healthy);
        assert_eq!(classify_regime(HealthScore::new(0.60)), Regime::Degraded);
        assert_eq!(classify_regime(HealthScore::new(0.599)), Regime::Critical);
        assert_eq!(classify_regime(HealthScore::new(0.0)), Regime::Critical);
        assert_eq!(classify_regime(HealthScore::new(1.0)), Regime::Healthy);
    }

    #[test]
    fn regime_order() {
        assert!(Regime::Healthy > Regime::Degraded);
        assert!(Regime::Degraded > Regime::Critical);
    }

    #[test]
    fn classify_regime_is_monotone() {
        let mut prev = classify_regime(HealthScore::new(0.0));
        for i in 1..=1000 {
            let r = classify_regime(HealthScore::new(i as f64 / 1000.0));
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn health_clamps_and_survives_nan() {
        assert_eq!(HealthScore::new(1.7).value(), 1.0);
        assert_eq!(HealthScore::new(-0.2).value(), 0.0);
        assert_eq!(HealthScore::new(f64::NAN).value(), 0.0);
    }

    #[test]
    fn severity_vector_validation() {
        assert!(SeverityVector::new([0.5; MODE_COUNT]).is_ok());
        let mut v = [0.0; MODE_COUNT];
        v[3] = 1.2;
        assert!(SeverityVector::new(v).is_err());
        v[3] = f64::NAN;
        assert!(SeverityVector::new(v).is_err());
    }

    #[test]
    fn active_modes_tracks_support() {
        let s = SeverityVector::from_pairs(&[
            (DegradationMode::Fog, 0.4),
            (DegradationMode::SensorNoise, 0.2),
        ])
        .unwrap();
        assert_eq!(
            s.active_modes(),
            vec![DegradationMode::Fog, DegradationMode::SensorNoise]
        );
        assert!(!s.is_zero());
        assert!(SeverityVector::zero().is_zero());
    }

    #[test]
    fn presence_from_flags() {
        let mut flags = [false; MODE_COUNT];
        flags[DegradationMode::Rain.id()] = true;
        let p = PresenceVector::from_flags(&flags);
        assert_eq!(p.get(DegradationMode::Rain), 1.0);
        assert_eq!(p.get(DegradationMode::Fog), 0.0);
    }
}

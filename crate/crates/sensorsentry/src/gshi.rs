//! Risk-aware multiplicative sensor health index and object-level
//! reliability pooling.
//!
//! The health index is `H = prod_i (1 - s_i)^(w_i * a_g(i))`: a single
//! severe high-risk mode collapses the score even when every other channel
//! is clean, which is the behavior wanted for safety monitoring. Evaluation
//! happens in log space so that many simultaneous moderate severities do not
//! underflow, with an exact-zero shortcut when any severity reaches 1.

use crate::error::{Error, Result};
use crate::model::{BoundingBox, DegradationMode, HealthScore, RiskWeightTable, SeverityVector, SpatialMask};

/// Severities within this distance of 1 are treated as exactly 1. 8-bit
/// derived severities never land in this band, and it keeps `ln` finite.
const UNITY_BAND: f64 = 1e-12;

/// Reliability of a single detection: one minus mean spatial uncertainty
/// pooled inside its box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectReliability {
    pub bbox: BoundingBox,
    pub score: f64,
}

/// Multiplicative risk-aware health score over a severity vector.
///
/// Returns exactly 1 when all severities are zero and exactly 0 when any
/// severity is 1 (the exponent is always positive).
pub fn compute_gshi(s: &SeverityVector, table: &RiskWeightTable) -> HealthScore {
    let mut log_sum = 0.0;
    for mode in DegradationMode::ALL {
        let sv = s.get(mode);
        if sv == 0.0 {
            continue;
        }
        if sv >= 1.0 - UNITY_BAND {
            return HealthScore::ZERO;
        }
        log_sum += table.effective_exponent(mode) * (1.0 - sv).ln();
    }
    if log_sum == 0.0 {
        return HealthScore::ONE;
    }
    HealthScore::new(log_sum.exp())
}

/// Pool spatial uncertainty inside a detection box: `r = 1 - mean(u)` over
/// the half-open rectangle.
pub fn object_reliability(u: &SpatialMask, bbox: &BoundingBox) -> Result<ObjectReliability> {
    if !bbox.fits_in(u.width(), u.height()) {
        return Err(Error::InvalidBox(format!(
            "box [{},{})x[{},{}) exceeds {}x{} mask",
            bbox.x_min,
            bbox.x_max,
            bbox.y_min,
            bbox.y_max,
            u.width(),
            u.height()
        )));
    }
    let mut sum = 0.0;
    for y in bbox.y_min..bbox.y_max {
        for x in bbox.x_min..bbox.x_max {
            sum += u.get(x, y);
        }
    }
    let score = 1.0 - sum / bbox.pixel_count() as f64;
    Ok(ObjectReliability { bbox: *bbox, score })
}

/// Finite-difference probe of the health index along one severity axis:
/// `H(s + eps * e_i) - H(s)`. Always non-positive by monotonicity.
pub fn gshi_gradient_check(
    s: &SeverityVector,
    table: &RiskWeightTable,
    mode: DegradationMode,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {eps}"
        )));
    }
    let base = s.get(mode);
    if base + eps > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "severity {base} + eps {eps} exceeds 1 for {mode}"
        )));
    }
    let mut bumped = *s;
    bumped.set(mode, base + eps)?;
    Ok(compute_gshi(&bumped, table).value() - compute_gshi(s, table).value())
}

//! Evaluation harness: calibration metrics, multi-label issue mAP,
//! correlation with downstream curves, early-warning lead time with
//! threshold sweeps, and sparsification error for spatial uncertainty.

mod ap;
mod ause;
mod lead;
mod report;

pub use ap::{average_precision, issue_map, IssueMapResult};
pub use ause::{ause, AuseResult};
pub use lead::{lead_time, threshold_sweep, EarlyWarningConfig, LeadStatus, LeadTimeResult, SweepRow};
pub use report::{
    evaluate_manifest, reference_header, DetectorCurves, EvalConfig, EvalReport, PredictionRow,
};

use crate::error::{Error, Result};
use crate::model::{DegradationMode, HealthScore, PresenceFlags, SeverityVector};

/// Whether a score series tracks monitor health or detector quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Health,
    DetectorMap,
}

/// A (severity -> score) series for one degradation mode.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceCurve {
    pub mode: DegradationMode,
    pub kind: CurveKind,
    points: Vec<(f64, f64)>,
}

impl PerformanceCurve {
    pub fn new(mode: DegradationMode, kind: CurveKind, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Metric(format!(
                "curve for {mode} needs at least 2 points, got {}",
                points.len()
            )));
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::Metric(format!(
                    "curve severities must be strictly ascending, got {} then {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if points.iter().any(|(s, _)| !(0.0..=1.0).contains(s)) {
            return Err(Error::Metric("curve severities must lie in [0,1]".into()));
        }
        Ok(PerformanceCurve { mode, kind, points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn severities(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    /// Score at severity 0, if the curve includes the clean point.
    pub fn clean_score(&self) -> Option<f64> {
        self.points.first().filter(|p| p.0 == 0.0).map(|p| p.1)
    }
}

/// Mean absolute error between predicted and target health scores.
pub fn health_mae(pred: &[HealthScore], target: &[HealthScore]) -> Result<f64> {
    if pred.is_empty() || pred.len() != target.len() {
        return Err(Error::Metric(format!(
            "health MAE needs equal non-empty lists, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p.value() - t.value()).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

/// Mean absolute severity error over (sample, mode) cells where the target
/// presence flag is set. Errors on inactive cells are ignored by protocol.
pub fn severity_mae(
    pred: &[SeverityVector],
    target: &[SeverityVector],
    presence: &[PresenceFlags],
) -> Result<f64> {
    if pred.len() != target.len() || pred.len() != presence.len() {
        return Err(Error::Metric("severity MAE needs aligned lists".into()));
    }
    let mut sum = 0.0;
    let mut cells = 0usize;
    for ((p, t), flags) in pred.iter().zip(target).zip(presence) {
        for mode in DegradationMode::ALL {
            if flags[mode.id()] {
                sum += (p.get(mode) - t.get(mode)).abs();
                cells += 1;
            }
        }
    }
    if cells == 0 {
        return Err(Error::Metric("severity MAE has zero active cells".into()));
    }
    Ok(sum / cells as f64)
}

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Metric(format!(
            "pearson needs equal lengths of at least 3, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Metric("pearson is undefined for constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Rank correlation with average ranks for ties (Pearson on ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    let rx = average_ranks(x)?;
    let ry = average_ranks(y)?;
    pearson(&rx, &ry)
}

fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Metric("rank transform rejects NaN".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    Ok(ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MODE_COUNT;

    #[test]
    fn health_mae_basics() {
        let a = vec![HealthScore::new(0.9), HealthScore::new(0.5)];
        let b = vec![HealthScore::new(1.0), HealthScore::new(0.4)];
        assert!((health_mae(&a, &b).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(health_mae(&a, &a).unwrap(), 0.0);
        // Symmetric in argument swap.
        assert_eq!(health_mae(&a, &b).unwrap(), health_mae(&b, &a).unwrap());
        assert!(health_mae(&a, &[]).is_err());
    }

    #[test]
    fn severity_mae_masks_inactive_cells() {
        let mut p1 = [0.0; MODE_COUNT];
        p1[0] = 0.7;
        p1[5] = 0.9; // inactive cell, must be ignored
        let pred = vec![SeverityVector::new(p1).unwrap()];
        let mut t1 = [0.0; MODE_COUNT];
        t1[0] = 0.5;
        let target = vec![SeverityVector::new(t1).unwrap()];
        let mut flags = [false; MODE_COUNT];
        flags[0] = true;
        let mae = severity_mae(&pred, &target, &[flags]).unwrap();
        assert!((mae - 0.2).abs() < 1e-15);
        // Perfect predictions.
        assert_eq!(severity_mae(&target, &target, &[flags]).unwrap(), 0.0);
        // Zero active cells errors out.
        assert!(severity_mae(&pred, &target, &[[false; MODE_COUNT]]).is_err());
    }

    #[test]
    fn pearson_endpoints() {
        let x = vec![0.0, 0.5, 1.0, 2.0];
        let y_pos: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let y_neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &y_pos).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &y_neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&x, &[1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(pearson(&x[..2], &x[..2]).is_err());
    }

    #[test]
    fn spearman_handles_ties_and_monotone_maps() {
        let x = vec![0.0, 0.1, 0.2, 0.3, 0.4];
        let y: Vec<f64> = x.iter().map(|&v: &f64| v.powi(3)).collect();
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y_desc: Vec<f64> = x.iter().map(|v| -v.exp()).collect();
        assert!((spearman(&x, &y_desc).unwrap() + 1.0).abs() < 1e-12);
        // A tie dampens but does not flip the coefficient.
        let y_tied = vec![1.0, 1.0, 0.8, 0.5, 0.2];
        let rho = spearman(&x, &y_tied).unwrap();
        assert!(rho < -0.9, "rho {rho}");
    }

    #[test]
    fn curve_validation() {
        use DegradationMode as M;
        assert!(PerformanceCurve::new(M::Fog, CurveKind::Health, vec![(0.0, 1.0)]).is_err());
        assert!(
            PerformanceCurve::new(M::Fog, CurveKind::Health, vec![(0.0, 1.0), (0.0, 0.9)]).is_err()
        );
        let c =
            PerformanceCurve::new(M::Fog, CurveKind::Health, vec![(0.0, 1.0), (0.5, 0.7)]).unwrap();
        assert_eq!(c.clean_score(), Some(1.0));
        let no_clean =
            PerformanceCurve::new(M::Fog, CurveKind::Health, vec![(0.1, 1.0), (0.5, 0.7)]).unwrap();
        assert_eq!(no_clean.clean_score(), None);
    }
}

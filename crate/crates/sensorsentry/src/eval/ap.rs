//! Multi-label average precision over the twelve degradation labels.
//!
//! Per-mode AP is the step integral of the precision-recall curve over the
//! score-ranked samples (precision at each positive rank averaged over the
//! positives), with ties broken by stable input order. The sum is
//! accumulated as an exact rational so small instances reproduce textbook
//! fractions bit-for-bit; conversion to f64 happens once at the end.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{DegradationMode, PresenceFlags, PresenceVector, MODE_COUNT};

/// Per-mode APs (None where the mode had no positives) and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct IssueMapResult {
    pub per_mode: [Option<f64>; MODE_COUNT],
    /// Unweighted mean over evaluated (positive-bearing) modes.
    pub mean: f64,
    pub excluded: Vec<DegradationMode>,
}

/// Average precision of one binary label over ranked scores.
/// Returns None when there are no positives.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "AP needs aligned scores and labels, got {} and {}",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Metric("AP rejects NaN scores".into()));
    }
    let npos = labels.iter().filter(|&&l| l).count();
    if npos == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort: ties keep input order.
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut sum = BigRational::zero();
    let mut tp = 0u64;
    for (rank, &idx) in order.iter().enumerate() {
        if labels[idx] {
            tp += 1;
            sum += BigRational::new(BigInt::from(tp), BigInt::from(rank as u64 + 1));
        }
    }
    let ap = sum / BigRational::new(BigInt::from(npos as u64), BigInt::from(1u64));
    Ok(Some(ratio_to_f64(&ap)))
}

/// Exact-to-nearest conversion; avoids inf/inf for huge components.
fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let num = r.numer();
    let den = r.denom();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // Keep up to ~80 bits apiece so the quotient retains full f64 precision.
    let ns = (nb - 80).max(0) as u64;
    let ds = (db - 80).max(0) as u64;
    let n = (num.abs() >> ns).to_f64().unwrap_or(f64::MAX);
    let d = (den.abs() >> ds).to_f64().unwrap_or(f64::MAX);
    let sign = if num.is_negative() { -1.0 } else { 1.0 };
    sign * (n / d) * 2f64.powi((ns as i64 - ds as i64) as i32)
}

/// Mean average precision over the twelve degradation labels.
///
/// Modes without a single positive example are excluded from the mean and
/// reported. Errors only when no mode has any positives.
pub fn issue_map(scores: &[PresenceVector], targets: &[PresenceFlags]) -> Result<IssueMapResult> {
    if scores.len() != targets.len() {
        return Err(Error::Metric(format!(
            "issue mAP needs aligned predictions and targets, got {} and {}",
            scores.len(),
            targets.len()
        )));
    }
    let mut per_mode: [Option<f64>; MODE_COUNT] = [None; MODE_COUNT];
    let mut excluded = Vec::new();
    let mut sum = 0.0;
    let mut evaluated = 0usize;
    for mode in DegradationMode::ALL {
        let s: Vec<f64> = scores.iter().map(|p| p.get(mode)).collect();
        let l: Vec<bool> = targets.iter().map(|t| t[mode.id()]).collect();
        match average_precision(&s, &l)? {
            Some(ap) => {
                per_mode[mode.id()] = Some(ap);
                sum += ap;
                evaluated += 1;
            }
            None => excluded.push(mode),
        }
    }
    if evaluated == 0 {
        return Err(Error::Metric("issue mAP: no mode has any positive example".into()));
    }
    Ok(IssueMapResult {
        per_mode,
        mean: sum / evaluated as f64,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_example_is_exact() {
        // scores [0.9, 0.8, 0.7, 0.6], labels [1, 0, 1, 0]:
        // AP = (1/1 + 2/3) / 2 = 5/6, bit-exact.
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false])
            .unwrap()
            .unwrap();
        assert_eq!(ap, 5.0 / 6.0);
    }

    #[test]
    fn perfect_separation_gives_one() {
        let ap = average_precision(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false])
            .unwrap()
            .unwrap();
        assert_eq!(ap, 1.0);
    }

    #[test]
    fn worst_ranking_bounded_by_perfect() {
        let labels = [true, false, true, false, false];
        let perfect = average_precision(&[1.0, 0.2, 0.9, 0.1, 0.0], &labels)
            .unwrap()
            .unwrap();
        let reversed = average_precision(&[0.0, 0.9, 0.1, 1.0, 0.8], &labels)
            .unwrap()
            .unwrap();
        assert!(reversed <= perfect);
        assert_eq!(perfect, 1.0);
    }

    #[test]
    fn ties_break_by_input_order() {
        // All scores equal: ranking is input order.
        let ap = average_precision(&[0.5, 0.5, 0.5], &[true, false, true])
            .unwrap()
            .unwrap();
        // Positives at ranks 1 and 3: (1/1 + 2/3)/2 = 5/6.
        assert_eq!(ap, 5.0 / 6.0);
    }

    #[test]
    fn no_positives_is_none() {
        assert_eq!(average_precision(&[0.5, 0.4], &[false, false]).unwrap(), None);
    }

    #[test]
    fn joint_permutation_invariance() {
        let scores = [0.9, 0.1, 0.8, 0.4, 0.6];
        let labels = [true, false, false, true, true];
        let base = average_precision(&scores, &labels).unwrap().unwrap();
        // A permutation that maps distinct scores to the same ranking.
        let perm = [2usize, 0, 4, 1, 3];
        let ps: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
        let pl: Vec<bool> = perm.iter().map(|&i| labels[i]).collect();
        assert_eq!(average_precision(&ps, &pl).unwrap().unwrap(), base);
    }

    #[test]
    fn random_balanced_labels_approach_positive_rate() {
        use crate::rng::RngStream;
        let mut rng = RngStream::new(0x5eed);
        let n = 10_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.next_bool()).collect();
        let ap = average_precision(&scores, &labels).unwrap().unwrap();
        let rate = labels.iter().filter(|&&l| l).count() as f64 / n as f64;
        assert!((ap - rate).abs() < 0.05, "AP {ap} vs rate {rate}");
    }

    #[test]
    fn issue_map_reports_excluded_modes() {
        use crate::model::DegradationMode as M;
        let mut targets = Vec::new();
        let mut scores = Vec::new();
        for i in 0..4 {
            let mut f = [false; MODE_COUNT];
            f[M::Fog.id()] = i < 2;
            targets.push(f);
            let mut s = [0.0; MODE_COUNT];
            s[M::Fog.id()] = if i < 2 { 0.9 } else { 0.1 };
            scores.push(PresenceVector::new(s).unwrap());
        }
        let r = issue_map(&scores, &targets).unwrap();
        assert_eq!(r.per_mode[M::Fog.id()], Some(1.0));
        assert_eq!(r.excluded.len(), 11);
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn issue_map_errors_without_positives() {
        let scores = vec![PresenceVector::new([0.0; MODE_COUNT]).unwrap()];
        let targets = vec![[false; MODE_COUNT]];
        assert!(issue_map(&scores, &targets).is_err());
    }
}

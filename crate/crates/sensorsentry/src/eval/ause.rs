//! Sparsification error for spatial uncertainty maps.
//!
//! Pixels are removed in order of predicted uncertainty (descending); at
//! each removal fraction the mean remaining error is recorded. Repeating
//! with the true error as the ordering gives the oracle curve, which is
//! pointwise minimal. AUSE is the trapezoidal area between the two curves.
//! Errors are normalized by their maximum so both curves live in [0, 1] and
//! the area is bounded by 1.

use crate::error::{Error, Result};
use crate::model::SpatialMask;

/// Number of removal fractions: {0, 0.02, ..., 1}.
const FRACTIONS: usize = 51;

#[derive(Debug, Clone, PartialEq)]
pub struct AuseResult {
    pub value: f64,
    /// Set when the uncertainty map is constant: the predicted curve then
    /// reflects input order (a random ordering), which is still defined but
    /// worth flagging.
    pub constant_uncertainty: bool,
}

/// Mean retained error at each removal fraction for a given ordering.
/// `order` lists pixel indices in removal order (first removed first).
fn sparsification_curve(errors: &[f64], order: &[usize]) -> Vec<f64> {
    let n = errors.len();
    // prefix[k]: total error of the first k removed pixels.
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &idx in order {
        prefix.push(prefix.last().unwrap() + errors[idx]);
    }
    let total = prefix[n];
    (0..FRACTIONS)
        .map(|i| {
            let f = i as f64 / (FRACTIONS - 1) as f64;
            let removed = ((f * n as f64).round() as usize).min(n);
            let retained = n - removed;
            if retained == 0 {
                0.0
            } else {
                (total - prefix[removed]) / retained as f64
            }
        })
        .collect()
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    order
}

/// Area between the predicted and oracle sparsification curves.
pub fn ause(uncertainty: &SpatialMask, error: &SpatialMask) -> Result<AuseResult> {
    if uncertainty.width() != error.width() || uncertainty.height() != error.height() {
        return Err(Error::DimensionMismatch(format!(
            "uncertainty {}x{} vs error {}x{}",
            uncertainty.width(),
            uncertainty.height(),
            error.width(),
            error.height()
        )));
    }
    let max_err = error.values().iter().cloned().fold(0.0, f64::max);
    if max_err == 0.0 {
        // No error anywhere: both curves are identically zero.
        return Ok(AuseResult {
            value: 0.0,
            constant_uncertainty: is_constant(uncertainty.values()),
        });
    }
    let errors: Vec<f64> = error.values().iter().map(|&e| e / max_err).collect();

    let pred_curve = sparsification_curve(&errors, &descending_order(uncertainty.values()));
    let oracle_curve = sparsification_curve(&errors, &descending_order(&errors));

    let mut area = 0.0;
    let df = 1.0 / (FRACTIONS - 1) as f64;
    for i in 0..FRACTIONS - 1 {
        let a = pred_curve[i] - oracle_curve[i];
        let b = pred_curve[i + 1] - oracle_curve[i + 1];
        area += 0.5 * (a + b) * df;
    }

    let constant = is_constant(uncertainty.values());
    if constant {
        log::warn!("AUSE computed against a constant uncertainty map (input-order curve)");
    }
    Ok(AuseResult {
        value: area,
        constant_uncertainty: constant,
    })
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn mask(w: u32, h: u32, values: Vec<f64>) -> SpatialMask {
        SpatialMask::new(w, h, values).unwrap()
    }

    #[test]
    fn perfect_uncertainty_gives_zero() {
        let e = mask(3, 3, vec![0.1, 0.9, 0.3, 0.0, 0.5, 0.7, 0.2, 0.8, 0.4]);
        let r = ause(&e.clone(), &e).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.constant_uncertainty);
    }

    #[test]
    fn anti_correlated_is_maximal() {
        let mut rng = RngStream::new(0xa5);
        let errors: Vec<f64> = (0..64).map(|_| rng.next_f64()).collect();
        let e = mask(8, 8, errors.clone());
        let anti = mask(8, 8, errors.iter().map(|v| 1.0 - v).collect());
        let worst = ause(&anti, &e).unwrap().value;
        for seed in 0..20 {
            let mut r2 = RngStream::new(seed);
            let u = mask(8, 8, (0..64).map(|_| r2.next_f64()).collect());
            let v = ause(&u, &e).unwrap().value;
            assert!(v <= worst + 1e-12, "random ordering {v} beat worst {worst}");
        }
    }

    #[test]
    fn hand_computed_three_by_three() {
        // Errors (already normalized: max = 1): removal grid {0, .02, ... 1}.
        let errors = vec![1.0, 0.5, 0.25, 0.0, 0.75, 0.125, 0.375, 0.625, 0.875];
        let e = mask(3, 3, errors.clone());
        // Uncertainty ranks pixel 1 highest, then input order for the rest.
        let unc = vec![0.5, 0.9, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
        let u = mask(3, 3, unc.clone());
        let got = ause(&u, &e).unwrap().value;

        // Brute-force both curves with an independent enumeration.
        let order_pred = {
            let mut idx: Vec<usize> = (0..9).collect();
            idx.sort_by(|&a, &b| unc[b].partial_cmp(&unc[a]).unwrap());
            idx
        };
        let order_oracle = {
            let mut idx: Vec<usize> = (0..9).collect();
            idx.sort_by(|&a, &b| errors[b].partial_cmp(&errors[a]).unwrap());
            idx
        };
        let curve = |order: &[usize]| -> Vec<f64> {
            (0..51)
                .map(|i| {
                    let f = i as f64 / 50.0;
                    let removed = ((f * 9.0).round() as usize).min(9);
                    let kept: Vec<usize> = order[removed..].to_vec();
                    if kept.is_empty() {
                        0.0
                    } else {
                        kept.iter().map(|&k| errors[k]).sum::<f64>() / kept.len() as f64
                    }
                })
                .collect()
        };
        let cp = curve(&order_pred);
        let co = curve(&order_oracle);
        let mut expect = 0.0;
        for i in 0..50 {
            expect += 0.5 * ((cp[i] - co[i]) + (cp[i + 1] - co[i + 1])) * (1.0 / 50.0);
        }
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        assert!(got > 0.0);
    }

    #[test]
    fn oracle_dominates_on_random_maps() {
        let mut rng = RngStream::new(0xd00d);
        for _ in 0..50 {
            let errors: Vec<f64> = (0..100).map(|_| rng.next_f64()).collect();
            let unc: Vec<f64> = (0..100).map(|_| rng.next_f64()).collect();
            let max_err = errors.iter().cloned().fold(0.0, f64::max);
            let norm: Vec<f64> = errors.iter().map(|e| e / max_err).collect();
            let pred = sparsification_curve(&norm, &descending_order(&unc));
            let oracle = sparsification_curve(&norm, &descending_order(&norm));
            for (p, o) in pred.iter().zip(&oracle) {
                assert!(o <= p, "oracle curve above predicted curve");
            }
            let r = ause(
                &mask(10, 10, unc.clone()),
                &mask(10, 10, errors.clone()),
            )
            .unwrap();
            assert!((0.0..=1.0).contains(&r.value));
        }
    }

    #[test]
    fn constant_uncertainty_is_flagged_and_defined() {
        let e = mask(2, 2, vec![0.1, 0.9, 0.2, 0.4]);
        let u = mask(2, 2, vec![0.5; 4]);
        let r = ause(&u, &e).unwrap();
        assert!(r.constant_uncertainty);
        assert!(r.value >= 0.0);
    }

    #[test]
    fn zero_error_map_gives_zero() {
        let e = mask(2, 2, vec![0.0; 4]);
        let u = mask(2, 2, vec![0.3, 0.2, 0.9, 0.1]);
        assert_eq!(ause(&u, &e).unwrap().value, 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let e = mask(2, 2, vec![0.0; 4]);
        let u = mask(2, 3, vec![0.0; 6]);
        assert!(ause(&u, &e).is_err());
    }
}

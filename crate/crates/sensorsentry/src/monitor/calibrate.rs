//! Calibration: fit a monotone transfer from raw statistic to severity for
//! every mode by sweeping the operators over a clean image set.
//!
//! For each mode the clean set is degraded across a severity grid with
//! seed-keyed streams; the pooled statistic per grid point is made monotone
//! by pool-adjacent-violators and inverted piecewise-linearly at estimate
//! time. A clean-baseline margin (mean + k * std of the clean statistic) is
//! subtracted first so held-out clean images map to severity zero instead of
//! accumulating twelve small false severities.

use crate::error::{Error, Result};
use crate::model::{DegradationMode, DepthMap, ImageBuffer, MODE_COUNT};
use crate::monitor::stats;
use crate::monitor::{CalibrationTable, ModeCalibration};
use crate::rng::RngStream;
use crate::synth::{apply, DegradationParams, PhysicsConfig};

#[derive(Debug, Clone)]
pub struct CalibrateConfig {
    pub seed: u64,
    /// Severity grid for the fitting sweeps; must start at 0.
    pub grid: Vec<f64>,
    /// Clean-baseline margin in standard deviations.
    pub margin: f64,
    pub physics: PhysicsConfig,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            seed: 0,
            grid: (0..=5).map(|i| i as f64 / 5.0).collect(),
            margin: 1.25,
            physics: PhysicsConfig::default(),
        }
    }
}

/// Pool-adjacent-violators: least-squares non-decreasing fit.
pub fn isotonic_non_decreasing(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut level: Vec<f64> = Vec::with_capacity(n);
    let mut weight: Vec<f64> = Vec::with_capacity(n);
    for &v in values {
        level.push(v);
        weight.push(1.0);
        while level.len() > 1 && level[level.len() - 2] > level[level.len() - 1] {
            let (lv, lw) = (level.pop().unwrap(), weight.pop().unwrap());
            let k = level.len() - 1;
            level[k] = (level[k] * weight[k] + lv * lw) / (weight[k] + lw);
            weight[k] += lw;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (l, w) in level.iter().zip(&weight) {
        for _ in 0..*w as usize {
            out.push(*l);
        }
    }
    out
}

/// Fit the per-mode transfer tables on a clean image set.
///
/// Needs at least 10 clean images, each paired with a depth map for the
/// scene-dependent sweeps. Deterministic under the seed.
pub fn calibrate(
    clean: &[(ImageBuffer, DepthMap)],
    cfg: &CalibrateConfig,
) -> Result<CalibrationTable> {
    if clean.len() < 10 {
        return Err(Error::Calibration(format!(
            "need at least 10 clean images, got {}",
            clean.len()
        )));
    }
    if cfg.grid.len() < 2 || cfg.grid[0] != 0.0 {
        return Err(Error::Calibration(
            "calibration grid must start at 0 and hold at least 2 points".into(),
        ));
    }
    for (img, depth) in clean {
        if img.width() != depth.width() || img.height() != depth.height() {
            return Err(Error::Calibration(format!(
                "clean image {}x{} has mismatched depth {}x{}",
                img.width(),
                img.height(),
                depth.width(),
                depth.height()
            )));
        }
    }

    let mut modes = Vec::with_capacity(MODE_COUNT);
    for mode in DegradationMode::ALL {
        // stat_by_grid[j][i]: statistic of image i degraded at grid[j].
        let mut stat_by_grid: Vec<Vec<f64>> = vec![Vec::new(); cfg.grid.len()];
        for (img_index, (img, depth)) in clean.iter().enumerate() {
            let stream = RngStream::keyed(&[cfg.seed, img_index as u64, mode.id() as u64]).key();
            for (j, &severity) in cfg.grid.iter().enumerate() {
                let params = DegradationParams::new(mode, severity, stream)?;
                let result = apply(img, Some(depth), &params, &cfg.physics)?;
                let raw = stats::compute(&result.image);
                stat_by_grid[j].push(raw.values[mode.id()]);
            }
        }

        let pooled: Vec<f64> = stat_by_grid
            .iter()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
            .collect();

        // Orientation from the covariance of (grid severity, pooled stat).
        let gm = cfg.grid.iter().sum::<f64>() / cfg.grid.len() as f64;
        let pm = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let cov: f64 = cfg
            .grid
            .iter()
            .zip(&pooled)
            .map(|(g, p)| (g - gm) * (p - pm))
            .sum();
        let orientation = if cov < 0.0 { -1.0 } else { 1.0 };

        let clean_stats = &stat_by_grid[0];
        let clean_mean = clean_stats.iter().sum::<f64>() / clean_stats.len() as f64;
        let clean_var = clean_stats
            .iter()
            .map(|v| (v - clean_mean).powi(2))
            .sum::<f64>()
            / clean_stats.len() as f64;
        let clean_std = clean_var.sqrt();
        let offset = orientation * clean_mean + cfg.margin * clean_std;

        let adjusted: Vec<f64> = pooled.iter().map(|p| orientation * p - offset).collect();
        let monotone = isotonic_non_decreasing(&adjusted);

        // Deduplicate flat runs, keeping the lowest severity of each run so
        // ambiguous statistics resolve conservatively.
        let mut breakpoints: Vec<(f64, f64)> = Vec::new();
        for (j, &a) in monotone.iter().enumerate() {
            if breakpoints.last().map(|&(b, _)| a > b).unwrap_or(true) {
                breakpoints.push((a, cfg.grid[j]));
            }
        }
        if breakpoints.len() < 2 {
            // Statistic carries no usable signal for this mode on this set;
            // the transfer degenerates to zero severity.
            log::warn!("calibration: {mode} statistic is flat; transfer pinned to 0");
            breakpoints = vec![(0.0, 0.0), (f64::MAX, 0.0)];
        }

        modes.push(ModeCalibration {
            orientation,
            offset,
            clean_mean,
            clean_std,
            breakpoints,
        });
    }

    Ok(CalibrationTable {
        seed: cfg.seed,
        margin: cfg.margin,
        modes: modes.try_into().expect("twelve modes"),
    })
}

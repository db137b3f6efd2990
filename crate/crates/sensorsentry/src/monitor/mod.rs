//! Training-free heuristic camera-health monitor.
//!
//! From a single RGB image the monitor estimates per-mode presence and
//! severity, the multiplicative health index, and a tile-level spatial
//! uncertainty map. It deliberately consumes no depth, no detector output
//! and no temporal history. Accuracy parity with a learned monitor is not
//! the goal; monotone severity response is, so the evaluation harness can
//! run end-to-end at desk scale.

mod calibrate;
mod stats;

pub use calibrate::{calibrate, isotonic_non_decreasing, CalibrateConfig};
pub use stats::{compute as compute_raw_statistics, RawStatistics, TileFeatures, TILE};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gshi::compute_gshi;
use crate::model::{
    default_risk_table, DegradationMode, HealthScore, ImageBuffer, PresenceVector, SeverityVector,
    SpatialMask, MODE_COUNT,
};

/// Estimated severity above which a mode counts as present.
pub const PRESENCE_THRESHOLD: f64 = 0.1;

/// Monotone transfer for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCalibration {
    /// +1 if the raw statistic grows with severity, -1 if it shrinks.
    pub orientation: f64,
    /// Clean baseline offset (oriented mean + margin * std).
    pub offset: f64,
    pub clean_mean: f64,
    pub clean_std: f64,
    /// (adjusted statistic, severity) pairs, strictly ascending in both.
    pub breakpoints: Vec<(f64, f64)>,
}

impl ModeCalibration {
    /// Map a raw statistic to severity via the piecewise-linear inverse.
    pub fn severity_from_raw(&self, raw: f64) -> f64 {
        let a = self.orientation * raw - self.offset;
        let bp = &self.breakpoints;
        if a <= bp[0].0 {
            return bp[0].1;
        }
        if a >= bp[bp.len() - 1].0 {
            return bp[bp.len() - 1].1;
        }
        for pair in bp.windows(2) {
            let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
            if a <= x1 {
                let t = (a - x0) / (x1 - x0);
                return (y0 + t * (y1 - y0)).clamp(0.0, 1.0);
            }
        }
        bp[bp.len() - 1].1
    }

    fn is_monotone(&self) -> bool {
        self.breakpoints.windows(2).all(|p| p[1].0 > p[0].0 && p[1].1 >= p[0].1)
    }
}

/// Fitted transfer tables for all twelve modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    pub seed: u64,
    pub margin: f64,
    pub modes: [ModeCalibration; MODE_COUNT],
}

impl CalibrationTable {
    fn validate(&self) -> Result<()> {
        for (i, m) in self.modes.iter().enumerate() {
            if m.breakpoints.len() < 2 {
                return Err(Error::Calibration(format!(
                    "{} transfer has {} breakpoints; calibration required",
                    DegradationMode::ALL[i],
                    m.breakpoints.len()
                )));
            }
            if !m.is_monotone() {
                return Err(Error::Calibration(format!(
                    "{} transfer is not monotone",
                    DegradationMode::ALL[i]
                )));
            }
        }
        Ok(())
    }

    /// Serialize to the versioned plain-text format.
    pub fn to_text(&self) -> String {
        let mut out = String::from("sensorsentry-calibration v1\n");
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "margin = {}", self.margin);
        for mode in DegradationMode::ALL {
            let m = &self.modes[mode.id()];
            let _ = writeln!(out, "[{}]", mode.name());
            let _ = writeln!(out, "orientation = {}", m.orientation);
            let _ = writeln!(out, "clean_mean = {}", m.clean_mean);
            let _ = writeln!(out, "clean_std = {}", m.clean_std);
            let _ = writeln!(out, "offset = {}", m.offset);
            for (a, s) in &m.breakpoints {
                let _ = writeln!(out, "breakpoint = {a} {s}");
            }
        }
        out
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Config {
            path: origin.to_path_buf(),
            reason,
        };
        let mut lines = text.lines();
        match lines.next() {
            Some("sensorsentry-calibration v1") => {}
            other => {
                return Err(bad(format!(
                    "expected `sensorsentry-calibration v1` header, got {other:?}"
                )))
            }
        }
        let mut seed = 0u64;
        let mut margin = 0.0f64;
        let mut modes: Vec<Option<ModeCalibration>> = vec![None; MODE_COUNT];
        let mut current: Option<usize> = None;
        for (ln, raw) in lines.enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let mode = DegradationMode::parse(name.trim())
                    .map_err(|e| bad(format!("line {}: {e}", ln + 2)))?;
                modes[mode.id()] = Some(ModeCalibration {
                    orientation: 1.0,
                    offset: 0.0,
                    clean_mean: 0.0,
                    clean_std: 0.0,
                    breakpoints: Vec::new(),
                });
                current = Some(mode.id());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", ln + 2)))?;
            let (key, value) = (key.trim(), value.trim());
            let parse_f = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|e| bad(format!("line {}: bad number `{v}`: {e}", ln + 2)))
            };
            match (current, key) {
                (None, "seed") => {
                    seed = value
                        .parse()
                        .map_err(|e| bad(format!("line {}: bad seed: {e}", ln + 2)))?;
                }
                (None, "margin") => margin = parse_f(value)?,
                (Some(id), "orientation") => modes[id].as_mut().unwrap().orientation = parse_f(value)?,
                (Some(id), "clean_mean") => modes[id].as_mut().unwrap().clean_mean = parse_f(value)?,
                (Some(id), "clean_std") => modes[id].as_mut().unwrap().clean_std = parse_f(value)?,
                (Some(id), "offset") => modes[id].as_mut().unwrap().offset = parse_f(value)?,
                (Some(id), "breakpoint") => {
                    let (a, s) = value
                        .split_once(' ')
                        .ok_or_else(|| bad(format!("line {}: breakpoint needs two numbers", ln + 2)))?;
                    modes[id]
                        .as_mut()
                        .unwrap()
                        .breakpoints
                        .push((parse_f(a.trim())?, parse_f(s.trim())?));
                }
                _ => return Err(bad(format!("line {}: unexpected key `{key}`", ln + 2))),
            }
        }
        let mut built = Vec::with_capacity(MODE_COUNT);
        for (i, m) in modes.into_iter().enumerate() {
            built.push(m.ok_or_else(|| {
                bad(format!("missing section for {}", DegradationMode::ALL[i]))
            })?);
        }
        let table = CalibrationTable {
            seed,
            margin,
            modes: built.try_into().expect("twelve modes"),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

/// Full monitor output for one image.
#[derive(Debug, Clone)]
pub struct MonitorOutput {
    pub presence: PresenceVector,
    pub severities: SeverityVector,
    pub health: HealthScore,
    pub uncertainty: SpatialMask,
}

/// Estimate presence, severity, health and spatial uncertainty from a
/// single RGB image. Pure given the calibration table.
pub fn estimate(img: &ImageBuffer, calibration: &CalibrationTable) -> Result<MonitorOutput> {
    calibration.validate()?;
    let raw = stats::compute(img);

    let mut severities = [0.0; MODE_COUNT];
    for mode in DegradationMode::ALL {
        severities[mode.id()] = calibration.modes[mode.id()]
            .severity_from_raw(raw.values[mode.id()])
            .clamp(0.0, 1.0);
    }
    let severities = SeverityVector::new(severities).expect("clamped severities");

    let mut presence = [0.0; MODE_COUNT];
    for mode in DegradationMode::ALL {
        presence[mode.id()] = if severities.get(mode) > PRESENCE_THRESHOLD {
            1.0
        } else {
            0.0
        };
    }
    let presence = PresenceVector::new(presence).expect("binary presence");

    let health = compute_gshi(&severities, &default_risk_table());
    let uncertainty = uncertainty_map(img, &raw, &severities);

    Ok(MonitorOutput {
        presence,
        severities,
        health,
        uncertainty,
    })
}

/// Tile-level combination of the spatially meaningful statistics, weighted
/// by the estimated severities and upsampled to pixel resolution.
fn uncertainty_map(img: &ImageBuffer, raw: &RawStatistics, severities: &SeverityVector) -> SpatialMask {
    use DegradationMode as M;
    let (tw, th) = (raw.tiles_x, raw.tiles_y);

    let max_of = |f: &dyn Fn(&TileFeatures) -> f64| {
        raw.tiles.iter().map(|t| f(t)).fold(0.0f64, f64::max).max(1e-9)
    };
    let max_dark = max_of(&|t| t.dark_channel);
    let max_sat = max_of(&|t| t.saturation);
    let max_blur = max_of(&|t| t.blur_ratio);

    let s_fog = severities.get(M::Fog);
    let s_blur = severities.get(M::DefocusBlur) + severities.get(M::MotionBlur);
    let s_glare = severities.get(M::Glare);
    let s_vig = severities.get(M::Vignetting);
    let s_occ = severities.get(M::LensOcclusion);
    let s_low = severities.get(M::LowLight);

    let mut tile_u = vec![0.0f64; raw.tiles.len()];
    for (i, t) in raw.tiles.iter().enumerate() {
        let fog = t.dark_channel / max_dark;
        let glare = t.saturation / max_sat;
        let blur = t.blur_ratio / max_blur;
        let vig = t.radial2;
        let collapse = if t.lap_energy < 0.012 || t.blur_ratio > 0.75 {
            1.0
        } else {
            (0.012 / t.lap_energy).clamp(0.0, 1.0)
        };
        let dark = (1.0 - t.mean_luma / 0.5).clamp(0.0, 1.0);
        tile_u[i] = (s_fog * fog
            + s_blur * blur
            + s_glare * glare
            + s_vig * vig
            + s_occ * collapse
            + s_low * dark)
            .clamp(0.0, 1.0);
    }

    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut values = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let (tx, ty) = (x / TILE, y / TILE);
            values[y * w + x] = tile_u[(ty.min(th - 1)) * tw + tx.min(tw - 1)];
        }
    }
    SpatialMask::new(img.width(), img.height(), values).expect("clamped uncertainty")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_table() -> CalibrationTable {
        let mk = |orientation: f64, offset: f64| ModeCalibration {
            orientation,
            offset,
            clean_mean: 0.0,
            clean_std: 0.0,
            breakpoints: vec![(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)],
        };
        CalibrationTable {
            seed: 7,
            margin: 1.25,
            modes: std::array::from_fn(|_| mk(1.0, 0.0)),
        }
    }

    #[test]
    fn transfer_identity_within_grid() {
        let m = ModeCalibration {
            orientation: 1.0,
            offset: 0.0,
            clean_mean: 0.0,
            clean_std: 0.0,
            breakpoints: (0..=10).map(|i| (i as f64 / 10.0, i as f64 / 10.0)).collect(),
        };
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((m.severity_from_raw(x) - x).abs() < 1e-12);
        }
        assert_eq!(m.severity_from_raw(-0.3), 0.0);
        assert_eq!(m.severity_from_raw(1.7), 1.0);
    }

    #[test]
    fn transfer_respects_orientation_and_offset() {
        let m = ModeCalibration {
            orientation: -1.0,
            offset: -0.8, // oriented stat = -raw; adjusted = -raw + 0.8
            clean_mean: 0.8,
            clean_std: 0.0,
            breakpoints: vec![(0.0, 0.0), (0.6, 1.0)],
        };
        assert_eq!(m.severity_from_raw(0.8), 0.0);
        assert!((m.severity_from_raw(0.5) - 0.5).abs() < 1e-12);
        assert_eq!(m.severity_from_raw(0.2), 1.0);
    }

    #[test]
    fn table_text_round_trip() {
        let t = toy_table();
        let text = t.to_text();
        let back = CalibrationTable::from_text(&text, Path::new("<mem>")).unwrap();
        assert_eq!(t, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn estimate_health_consistent_with_severities() {
        let img = ImageBuffer::filled(64, 48, [128, 128, 128]);
        let out = estimate(&img, &toy_table()).unwrap();
        let expected = compute_gshi(&out.severities, &default_risk_table());
        assert!((out.health.value() - expected.value()).abs() < 1e-12);
        assert_eq!(out.uncertainty.width(), 64);
        assert_eq!(out.uncertainty.height(), 48);
    }

    #[test]
    fn estimate_rejects_unfitted_table() {
        let mut t = toy_table();
        t.modes[3].breakpoints.clear();
        let img = ImageBuffer::filled(32, 32, [10, 10, 10]);
        assert!(estimate(&img, &t).is_err());
    }

    #[test]
    fn presence_follows_threshold() {
        let img = ImageBuffer::filled(64, 48, [0, 0, 0]);
        let out = estimate(&img, &toy_table()).unwrap();
        // All-black drives the low-light statistic to 1.
        assert!(out.severities.get(DegradationMode::LowLight) >= 0.9);
        assert_eq!(out.presence.get(DegradationMode::LowLight), 1.0);
    }
}

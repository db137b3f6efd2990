//! Risk-weight table driving the multiplicative health index.
//!
//! Each mode carries a base weight `w_i`; each group carries a scale `α_g`.
//! The health index raises `(1 - s_i)` to the effective exponent
//! `w_i · α_g(i)`. The default table assigns the largest effective exponents
//! to lens occlusion, glare and the blur modes, and the smallest to
//! compression and vignetting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::mode::{DegradationGroup, DegradationMode, GROUP_COUNT, MODE_COUNT};

/// Per-mode base weights and per-group scales; the sole parameterization of
/// the health index.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskWeightTable {
    base_weight: [f64; MODE_COUNT],
    group_scale: [f64; GROUP_COUNT],
    /// Group used for scaling each mode. Defaults to the taxonomy group for
    /// every mode except exposure shift, which scales with the
    /// sensor-pipeline group (its risk behaves like a pipeline artifact,
    /// not like photon starvation).
    scale_group: [DegradationGroup; MODE_COUNT],
}

impl RiskWeightTable {
    pub fn new(
        base_weight: [f64; MODE_COUNT],
        group_scale: [f64; GROUP_COUNT],
        scale_group: [DegradationGroup; MODE_COUNT],
    ) -> Result<Self> {
        for (i, &w) in base_weight.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "base weight for {} must be strictly positive, got {w}",
                    DegradationMode::ALL[i]
                )));
            }
        }
        for (i, &a) in group_scale.iter().enumerate() {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "group scale for {} must be strictly positive, got {a}",
                    DegradationGroup::ALL[i]
                )));
            }
        }
        Ok(RiskWeightTable {
            base_weight,
            group_scale,
            scale_group,
        })
    }

    pub fn base_weight(&self, mode: DegradationMode) -> f64 {
        self.base_weight[mode.id()]
    }

    pub fn group_scale(&self, group: DegradationGroup) -> f64 {
        self.group_scale[group.id()]
    }

    pub fn scale_group(&self, mode: DegradationMode) -> DegradationGroup {
        self.scale_group[mode.id()]
    }

    /// Exponent applied to `(1 - s_i)` for this mode.
    pub fn effective_exponent(&self, mode: DegradationMode) -> f64 {
        self.base_weight[mode.id()] * self.group_scale[self.scale_group[mode.id()].id()]
    }

    /// Serialize to the plain-text key-value config format.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str("# sensorsentry risk-weight table\n");
        out.push_str("[base_weight]\n");
        for m in DegradationMode::ALL {
            let _ = writeln!(out, "{} = {}", m.name(), self.base_weight[m.id()]);
        }
        out.push_str("[group_scale]\n");
        for g in DegradationGroup::ALL {
            let _ = writeln!(out, "{} = {}", g.name(), self.group_scale[g.id()]);
        }
        let overrides: Vec<DegradationMode> = DegradationMode::ALL
            .iter()
            .copied()
            .filter(|m| self.scale_group[m.id()] != m.group())
            .collect();
        if !overrides.is_empty() {
            out.push_str("[scale_group]\n");
            for m in overrides {
                let _ = writeln!(out, "{} = {}", m.name(), self.scale_group[m.id()].name());
            }
        }
        out
    }

    pub fn from_config_string(text: &str, origin: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Config {
            path: origin.to_path_buf(),
            reason,
        };
        let mut base_weight = [f64::NAN; MODE_COUNT];
        let mut group_scale = [f64::NAN; GROUP_COUNT];
        let mut scale_group: [DegradationGroup; MODE_COUNT] =
            std::array::from_fn(|i| DegradationMode::ALL[i].group());
        let mut section = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected `key = value`", ln + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match section.as_deref() {
                Some("base_weight") => {
                    let mode = DegradationMode::parse(key)
                        .map_err(|e| bad(format!("line {}: {e}", ln + 1)))?;
                    base_weight[mode.id()] = value
                        .parse()
                        .map_err(|e| bad(format!("line {}: bad number `{value}`: {e}", ln + 1)))?;
                }
                Some("group_scale") => {
                    let group = DegradationGroup::parse(key)
                        .map_err(|e| bad(format!("line {}: {e}", ln + 1)))?;
                    group_scale[group.id()] = value
                        .parse()
                        .map_err(|e| bad(format!("line {}: bad number `{value}`: {e}", ln + 1)))?;
                }
                Some("scale_group") => {
                    let mode = DegradationMode::parse(key)
                        .map_err(|e| bad(format!("line {}: {e}", ln + 1)))?;
                    scale_group[mode.id()] = DegradationGroup::parse(value)
                        .map_err(|e| bad(format!("line {}: {e}", ln + 1)))?;
                }
                Some(other) => return Err(bad(format!("unknown section `[{other}]`"))),
                None => return Err(bad(format!("line {}: entry before any section", ln + 1))),
            }
        }
        for (i, w) in base_weight.iter().enumerate() {
            if w.is_nan() {
                return Err(bad(format!("missing base_weight for {}", DegradationMode::ALL[i])));
            }
        }
        for (i, a) in group_scale.iter().enumerate() {
            if a.is_nan() {
                return Err(bad(format!("missing group_scale for {}", DegradationGroup::ALL[i])));
            }
        }
        RiskWeightTable::new(base_weight, group_scale, scale_group)
    }

    pub fn write_config(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_config_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_config(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_config_string(&text, path)
    }
}

/// The default 12-row risk table.
pub fn default_risk_table() -> RiskWeightTable {
    use DegradationGroup as G;
    let base_weight = [
        1.30, // fog
        1.10, // rain
        1.20, // snow
        1.30, // low light
        1.40, // motion blur
        1.40, // defocus blur
        1.50, // glare
        0.70, // vignetting
        1.10, // sensor noise
        1.00, // exposure shift
        0.80, // jpeg compression
        1.60, // lens occlusion
    ];
    let group_scale = [
        1.00, // weather
        1.00, // illumination
        1.10, // optical
        1.10, // motion
        0.95, // sensor/pipeline
        1.15, // occlusion
    ];
    let mut scale_group: [DegradationGroup; MODE_COUNT] =
        std::array::from_fn(|i| DegradationMode::ALL[i].group());
    // Exposure shift scales with the pipeline group rather than with the
    // low-light side of the illumination group.
    scale_group[DegradationMode::ExposureShift.id()] = G::SensorPipeline;
    RiskWeightTable::new(base_weight, group_scale, scale_group).expect("default table is valid")
}

impl Default for RiskWeightTable {
    fn default() -> Self {
        default_risk_table()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use DegradationMode as M;

    /// Effective exponents of the default table, in id order.
    const EXPECTED_EFFECTIVE: [f64; MODE_COUNT] = [
        1.30,
        1.10,
        1.20,
        1.30,
        1.54,
        1.54,
        1.65,
        0.77,
        1.045,
        0.95,
        0.76,
        1.84,
    ];

    #[test]
    fn default_table_effective_exponents() {
        let t = default_risk_table();
        for m in M::ALL {
            let eff = t.effective_exponent(m);
            assert!(
                (eff - EXPECTED_EFFECTIVE[m.id()]).abs() < 1e-12,
                "{m}: {eff} vs {}",
                EXPECTED_EFFECTIVE[m.id()]
            );
        }
    }

    #[test]
    fn fog_row() {
        let t = default_risk_table();
        assert_eq!(t.base_weight(M::Fog), 1.30);
        assert_eq!(t.group_scale(DegradationGroup::Weather), 1.00);
        assert!((t.effective_exponent(M::Fog) - 1.30).abs() < 1e-12);
    }

    #[test]
    fn occlusion_dominates_table() {
        let t = default_risk_table();
        assert!((t.effective_exponent(M::LensOcclusion) - 1.84).abs() < 1e-12);
        for m in M::ALL {
            if m != M::LensOcclusion {
                assert!(t.effective_exponent(m) < t.effective_exponent(M::LensOcclusion));
            }
        }
    }

    #[test]
    fn motion_blur_product() {
        let t = default_risk_table();
        assert!((t.effective_exponent(M::MotionBlur) - 1.40 * 1.10).abs() < 1e-15);
    }

    #[test]
    fn every_mode_exactly_once() {
        // The table is total by construction; spot-check the accessors.
        let t = default_risk_table();
        for m in M::ALL {
            assert!(t.base_weight(m) > 0.0);
            assert!(t.effective_exponent(m) > 0.0);
        }
    }

    #[test]
    fn config_round_trip_is_bit_exact() {
        let t = default_risk_table();
        let text = t.to_config_string();
        let back = RiskWeightTable::from_config_string(&text, Path::new("<mem>")).unwrap();
        assert_eq!(t, back);
        // And idempotent on re-serialization.
        assert_eq!(text, back.to_config_string());
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let mut base = default_risk_table().base_weight;
        base[0] = 0.0;
        let t = RiskWeightTable::new(
            base,
            default_risk_table().group_scale,
            default_risk_table().scale_group,
        );
        assert!(t.is_err());
    }

    #[test]
    fn rejects_missing_row() {
        let text = "[base_weight]\nfog = 1.3\n";
        assert!(RiskWeightTable::from_config_string(text, Path::new("<mem>")).is_err());
    }
}

//! The twelve-mode camera degradation taxonomy.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MODE_COUNT: usize = 12;
pub const GROUP_COUNT: usize = 6;

/// One of the twelve camera degradation modes.
///
/// Ids are frozen in risk-table row order (`Fog = 0` … `LensOcclusion = 11`)
/// so that manifests stay stable across versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum DegradationMode {
    Fog = 0,
    Rain = 1,
    Snow = 2,
    LowLight = 3,
    MotionBlur = 4,
    DefocusBlur = 5,
    Glare = 6,
    Vignetting = 7,
    SensorNoise = 8,
    ExposureShift = 9,
    JpegCompression = 10,
    LensOcclusion = 11,
}

/// Dominant physical source of a degradation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum DegradationGroup {
    Weather = 0,
    Illumination = 1,
    Optical = 2,
    Motion = 3,
    SensorPipeline = 4,
    Occlusion = 5,
}

use DegradationGroup as G;
use DegradationMode as M;

impl DegradationMode {
    pub const ALL: [DegradationMode; MODE_COUNT] = [
        M::Fog,
        M::Rain,
        M::Snow,
        M::LowLight,
        M::MotionBlur,
        M::DefocusBlur,
        M::Glare,
        M::Vignetting,
        M::SensorNoise,
        M::ExposureShift,
        M::JpegCompression,
        M::LensOcclusion,
    ];

    #[inline]
    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Self> {
        Self::ALL.get(id).copied()
    }

    pub fn group(self) -> DegradationGroup {
        match self {
            M::Fog | M::Rain | M::Snow => G::Weather,
            M::LowLight | M::ExposureShift => G::Illumination,
            M::DefocusBlur | M::Glare | M::Vignetting => G::Optical,
            M::MotionBlur => G::Motion,
            M::SensorNoise | M::JpegCompression => G::SensorPipeline,
            M::LensOcclusion => G::Occlusion,
        }
    }

    /// Canonical name used in manifests, config files and on the CLI.
    pub fn name(self) -> &'static str {
        match self {
            M::Fog => "fog",
            M::Rain => "rain",
            M::Snow => "snow",
            M::LowLight => "low_light",
            M::MotionBlur => "motion_blur",
            M::DefocusBlur => "defocus_blur",
            M::Glare => "glare",
            M::Vignetting => "vignetting",
            M::SensorNoise => "sensor_noise",
            M::ExposureShift => "exposure_shift",
            M::JpegCompression => "jpeg_compression",
            M::LensOcclusion => "lens_occlusion",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown degradation mode `{s}`")))
    }

    /// Whether the synthesis operator for this mode emits a spatial
    /// ground-truth mask (a physically meaningful footprint).
    pub fn has_spatial_mask(self) -> bool {
        matches!(
            self,
            M::Fog | M::Rain | M::Snow | M::DefocusBlur | M::Glare | M::Vignetting | M::LensOcclusion
        )
    }

    /// Whether synthesis needs a paired depth map (scene-dependent modes).
    pub fn needs_depth(self) -> bool {
        matches!(self, M::Fog | M::DefocusBlur)
    }
}

impl DegradationGroup {
    pub const ALL: [DegradationGroup; GROUP_COUNT] = [
        G::Weather,
        G::Illumination,
        G::Optical,
        G::Motion,
        G::SensorPipeline,
        G::Occlusion,
    ];

    #[inline]
    pub fn id(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            G::Weather => "weather",
            G::Illumination => "illumination",
            G::Optical => "optical",
            G::Motion => "motion",
            G::SensorPipeline => "sensor_pipeline",
            G::Occlusion => "occlusion",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown degradation group `{s}`")))
    }
}

impl fmt::Display for DegradationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for DegradationGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for DegradationMode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for DegradationMode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = DegradationMode;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a degradation mode name")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                DegradationMode::parse(v).map_err(|_| E::custom(format!("unknown mode `{v}`")))
            }
        }
        deserializer.deserialize_str(V)
    }
}

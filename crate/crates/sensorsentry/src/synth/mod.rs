//! The twelve severity-controlled degradation operators.
//!
//! Every operator is a pure function of (input image, optional depth,
//! severity, rng stream): identical inputs yield bit-identical outputs
//! regardless of thread count or call order. Compositing happens on 64-bit
//! reals with a single clip-and-quantize back to 8 bits per call, and
//! severity 0 returns the input byte-identically for every mode.

mod defocus;
mod fog;
mod glare;
mod jpeg;
mod kernel;
mod motion;
mod occlusion;
mod photometric;
mod weather;

pub use jpeg::jpeg_quality;
pub use weather::particle_count;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DegradationMode, DepthMap, ImageBuffer, SpatialMask};
use crate::rng::RngStream;

/// Severity-to-physics mappings for all operators. Every knob that turns a
/// unitless severity into physical strength lives here and can be overridden
/// from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsConfig {
    /// Fog extinction at s = 1: `beta(s) = fog_beta_max * s`.
    pub fog_beta_max: f64,
    /// Atmospheric light range (bright gray), drawn uniformly per image.
    pub fog_ambient: (f64, f64),

    /// Peak defocus blur in pixels: `sigma_max(s) = defocus_sigma_max * s`.
    pub defocus_sigma_max: f64,
    /// Stabilizer in the circle-of-confusion proxy.
    pub defocus_eps: f64,
    /// Number of discrete blur layers (layer 0 is sharp).
    pub defocus_layers: usize,
    /// Focal plane range in normalized depth.
    pub defocus_focal: (f64, f64),

    /// PSF length at s = 1 minus one: `L(s) = 1 + round(motion_len_coeff * s)`.
    pub motion_len_coeff: f64,

    /// Streak count at s = 1.
    pub rain_count_max: u32,
    /// Streak length range in pixels.
    pub rain_len: (f64, f64),
    /// Angle jitter around vertical, degrees.
    pub rain_angle_jitter_deg: f64,
    /// Per-streak opacity range.
    pub rain_alpha: (f64, f64),
    /// Global contrast loss factor at s = 1 (blend toward the mean).
    pub rain_contrast_loss: f64,

    /// Particle count at s = 1.
    pub snow_count_max: u32,
    /// Particle radius range in pixels.
    pub snow_radius: (f64, f64),
    /// Visibility attenuation toward white at s = 1.
    pub snow_whiten: f64,

    /// Gamma exponent gain: `gamma = 1 + lowlight_gamma_gain * s`.
    pub lowlight_gamma_gain: f64,
    /// Read noise (base, gain) in grey levels: `sigma = base + gain * s`.
    pub lowlight_read_noise: (f64, f64),

    /// Under-exposure gain at s = 1: `g = 1 - exposure_under_gain * s`.
    pub exposure_under_gain: f64,
    /// Over-exposure gain at s = 1: `g = 1 + exposure_over_gain * s`.
    pub exposure_over_gain: f64,

    /// Shot noise coefficient: `sigma_shot = noise_shot_coeff * s * sqrt(I)`.
    pub noise_shot_coeff: f64,
    /// Read noise (base, gain) in grey levels.
    pub noise_read: (f64, f64),

    /// Encoder quality mapping (start, span): `q = round(start - span * s)`.
    pub jpeg_quality: (f64, f64),

    /// Blob coverage fraction (base, span): `f(s) = base + span * s`.
    pub occlusion_coverage: (f64, f64),
    /// Heavy local blur behind occlusion blobs, pixels.
    pub occlusion_blur_sigma: f64,
    /// Blend factor toward the blurred image inside a blob.
    pub occlusion_blend: f64,

    /// Bloom radius (base, span) in pixels: `R = base + span * s`.
    pub glare_bloom_radius: (f64, f64),
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            fog_beta_max: 4.0,
            fog_ambient: (0.8, 1.0),
            defocus_sigma_max: 8.0,
            defocus_eps: 0.05,
            defocus_layers: 4,
            defocus_focal: (0.2, 0.8),
            motion_len_coeff: 30.0,
            rain_count_max: 400,
            rain_len: (8.0, 24.0),
            rain_angle_jitter_deg: 15.0,
            rain_alpha: (0.25, 0.5),
            rain_contrast_loss: 0.15,
            snow_count_max: 600,
            snow_radius: (1.0, 3.0),
            snow_whiten: 0.25,
            lowlight_gamma_gain: 2.0,
            lowlight_read_noise: (2.0, 10.0),
            exposure_under_gain: 0.8,
            exposure_over_gain: 1.5,
            noise_shot_coeff: 0.12,
            noise_read: (1.0, 6.0),
            jpeg_quality: (95.0, 85.0),
            occlusion_coverage: (0.05, 0.35),
            occlusion_blur_sigma: 8.0,
            occlusion_blend: 0.8,
            glare_bloom_radius: (40.0, 80.0),
        }
    }
}

impl PhysicsConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("physics config: {e}")))
    }

    pub fn read_toml(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// Parameters of one operator application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationParams {
    pub mode: DegradationMode,
    pub severity: f64,
    /// Stream key from which every stochastic knob of the operator derives.
    pub rng_stream: u64,
}

impl DegradationParams {
    pub fn new(mode: DegradationMode, severity: f64, rng_stream: u64) -> Result<Self> {
        if !severity.is_finite() || !(0.0..=1.0).contains(&severity) {
            return Err(Error::InvalidArgument(format!(
                "severity must lie in [0,1], got {severity}"
            )));
        }
        Ok(DegradationParams {
            mode,
            severity,
            rng_stream,
        })
    }
}

/// Output of one operator application.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub image: ImageBuffer,
    /// Ground-truth spatial footprint; present only for modes with a
    /// physically meaningful one.
    pub mask: Option<SpatialMask>,
}

impl SynthesisResult {
    pub fn mask_valid(&self) -> bool {
        self.mask.is_some()
    }
}

/// Per-mode rng sub-stream labels. Keyed derivation keeps knob draws stable
/// even if an operator later consumes more or fewer values.
pub(crate) mod knob {
    pub const FOG: u64 = 1;
    pub const RAIN: u64 = 2;
    pub const SNOW: u64 = 3;
    pub const LOW_LIGHT: u64 = 4;
    pub const MOTION: u64 = 5;
    pub const DEFOCUS: u64 = 6;
    pub const GLARE: u64 = 7;
    pub const NOISE: u64 = 9;
    pub const EXPOSURE: u64 = 10;
    pub const OCCLUSION: u64 = 12;
}

/// Apply one degradation operator.
///
/// Depth is required for fog and defocus and must match the image
/// dimensions. Severity 0 short-circuits to a byte-identical copy of the
/// input (with an all-zero mask for spatially structured modes).
pub fn apply(
    img: &ImageBuffer,
    depth: Option<&DepthMap>,
    p: &DegradationParams,
    cfg: &PhysicsConfig,
) -> Result<SynthesisResult> {
    use DegradationMode as M;

    let depth = match (p.mode.needs_depth(), depth) {
        (true, None) => {
            return Err(Error::DepthRequired {
                mode: p.mode.name(),
            })
        }
        (_, d) => d,
    };
    if let Some(d) = depth {
        if d.width() != img.width() || d.height() != img.height() {
            return Err(Error::DimensionMismatch(format!(
                "depth {}x{} does not match image {}x{}",
                d.width(),
                d.height(),
                img.width(),
                img.height()
            )));
        }
    }

    let (w, h) = (img.width(), img.height());
    if p.severity == 0.0 {
        let mask = p.mode.has_spatial_mask().then(|| SpatialMask::zero(w, h));
        return Ok(SynthesisResult {
            image: img.clone(),
            mask,
        });
    }

    // JPEG round-trips through the codec directly on 8-bit data.
    if p.mode == M::JpegCompression {
        let image = jpeg::render(img, p.severity, cfg)?;
        return Ok(SynthesisResult { image, mask: None });
    }

    let stream = RngStream::new(p.rng_stream);
    let (wu, hu) = (w as usize, h as usize);
    let mut data = kernel::to_f64(img);
    let mask = match p.mode {
        M::Fog => Some(fog::render(
            &mut data,
            depth.expect("checked above"),
            p.severity,
            &stream.derive(knob::FOG),
            cfg,
        )),
        M::DefocusBlur => Some(defocus::render(
            &mut data,
            wu,
            hu,
            depth.expect("checked above"),
            p.severity,
            &stream.derive(knob::DEFOCUS),
            cfg,
        )),
        M::MotionBlur => {
            motion::render(&mut data, wu, hu, p.severity, &stream.derive(knob::MOTION), cfg);
            None
        }
        M::Rain => Some(weather::render_rain(
            &mut data,
            wu,
            hu,
            p.severity,
            &stream.derive(knob::RAIN),
            cfg,
        )),
        M::Snow => Some(weather::render_snow(
            &mut data,
            wu,
            hu,
            p.severity,
            &stream.derive(knob::SNOW),
            cfg,
        )),
        M::LowLight => {
            photometric::render_low_light(&mut data, p.severity, &stream.derive(knob::LOW_LIGHT), cfg);
            None
        }
        M::ExposureShift => {
            photometric::render_exposure(&mut data, p.severity, &stream.derive(knob::EXPOSURE), cfg);
            None
        }
        M::SensorNoise => {
            photometric::render_sensor_noise(&mut data, p.severity, &stream.derive(knob::NOISE), cfg);
            None
        }
        M::Vignetting => Some(photometric::render_vignetting(&mut data, wu, hu, p.severity)),
        M::Glare => Some(glare::render(
            &mut data,
            wu,
            hu,
            p.severity,
            &stream.derive(knob::GLARE),
            cfg,
        )),
        M::LensOcclusion => Some(occlusion::render(
            &mut data,
            wu,
            hu,
            p.severity,
            &stream.derive(knob::OCCLUSION),
            cfg,
        )),
        M::JpegCompression => unreachable!("handled above"),
    };

    let image = kernel::from_f64(w, h, &data);
    let mask = match mask {
        Some(values) => Some(SpatialMask::new(w, h, values)?),
        None => None,
    };
    Ok(SynthesisResult { image, mask })
}

/// Physical compatibility of a mode pair at given severities.
///
/// Heavy rain and heavy snow never co-occur, extreme glare is not paired
/// with severe low light, and a mode is never paired with itself.
pub fn compatible(a: DegradationMode, sa: f64, b: DegradationMode, sb: f64) -> bool {
    use DegradationMode as M;
    if a == b {
        return false;
    }
    let pair = |x: DegradationMode, y: DegradationMode| (a == x && b == y) || (a == y && b == x);
    if pair(M::Rain, M::Snow) && sa.min(sb) > 0.3 {
        return false;
    }
    if pair(M::Glare, M::LowLight) && sa.min(sb) > 0.5 {
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DegradationMode as M;

    fn textured(w: u32, h: u32, salt: u64) -> ImageBuffer {
        let mut px = Vec::new();
        let mut rng = RngStream::keyed(&[salt, 0x1e57]);
        for _ in 0..(w * h) as usize {
            px.push((rng.below(256)) as u8);
            px.push((rng.below(256)) as u8);
            px.push((rng.below(256)) as u8);
        }
        ImageBuffer::new(w, h, px).unwrap()
    }

    fn ramp_depth(w: u32, h: u32) -> DepthMap {
        let values = (0..(w * h) as usize)
            .map(|i| (i / w as usize) as f64 / (h - 1).max(1) as f64)
            .collect();
        DepthMap::new(w, h, values).unwrap()
    }

    #[test]
    fn identity_at_zero_for_every_mode() {
        let img = textured(24, 18, 1);
        let depth = ramp_depth(24, 18);
        let cfg = PhysicsConfig::default();
        for mode in M::ALL {
            let p = DegradationParams::new(mode, 0.0, 7).unwrap();
            let r = apply(&img, Some(&depth), &p, &cfg).unwrap();
            assert_eq!(r.image, img, "{mode} changed bytes at s=0");
            assert_eq!(r.mask_valid(), mode.has_spatial_mask());
            if let Some(m) = r.mask {
                assert!(m.values().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn deterministic_per_params() {
        let img = textured(32, 24, 2);
        let depth = ramp_depth(32, 24);
        let cfg = PhysicsConfig::default();
        for mode in M::ALL {
            let p = DegradationParams::new(mode, 0.6, 12345).unwrap();
            let a = apply(&img, Some(&depth), &p, &cfg).unwrap();
            let b = apply(&img, Some(&depth), &p, &cfg).unwrap();
            assert_eq!(a.image, b.image, "{mode} not deterministic");
            assert_eq!(a.mask, b.mask);
        }
    }

    #[test]
    fn different_streams_differ() {
        let img = textured(32, 24, 3);
        let cfg = PhysicsConfig::default();
        let a = apply(
            &img,
            None,
            &DegradationParams::new(M::SensorNoise, 0.5, 1).unwrap(),
            &cfg,
        )
        .unwrap();
        let b = apply(
            &img,
            None,
            &DegradationParams::new(M::SensorNoise, 0.5, 2).unwrap(),
            &cfg,
        )
        .unwrap();
        assert_ne!(a.image, b.image);
    }

    #[test]
    fn dimensions_preserved_for_every_mode() {
        let img = textured(37, 23, 4);
        let depth = ramp_depth(37, 23);
        let cfg = PhysicsConfig::default();
        for mode in M::ALL {
            let p = DegradationParams::new(mode, 0.7, 5).unwrap();
            let r = apply(&img, Some(&depth), &p, &cfg).unwrap();
            assert_eq!(r.image.width(), 37);
            assert_eq!(r.image.height(), 23);
            if let Some(m) = r.mask {
                assert_eq!(m.width(), 37);
                assert_eq!(m.height(), 23);
            }
        }
    }

    #[test]
    fn depth_dimension_mismatch_rejected() {
        let img = textured(16, 16, 5);
        let depth = ramp_depth(8, 8);
        let p = DegradationParams::new(M::Fog, 0.5, 1).unwrap();
        assert!(apply(&img, Some(&depth), &p, &PhysicsConfig::default()).is_err());
    }

    #[test]
    fn severity_out_of_range_rejected() {
        assert!(DegradationParams::new(M::Fog, 1.01, 0).is_err());
        assert!(DegradationParams::new(M::Fog, -0.01, 0).is_err());
        assert!(DegradationParams::new(M::Fog, f64::NAN, 0).is_err());
    }

    #[test]
    fn compatibility_rules() {
        assert!(!compatible(M::Rain, 0.8, M::Snow, 0.8));
        assert!(!compatible(M::Snow, 0.8, M::Rain, 0.8));
        assert!(compatible(M::Rain, 0.2, M::Snow, 0.2));
        assert!(compatible(M::Rain, 0.9, M::Snow, 0.3));
        assert!(!compatible(M::Glare, 0.6, M::LowLight, 0.6));
        assert!(compatible(M::Glare, 0.6, M::LowLight, 0.5));
        assert!(!compatible(M::Fog, 1.0, M::Fog, 0.1));
        assert!(compatible(M::Fog, 1.0, M::JpegCompression, 1.0));
    }

    #[test]
    fn physics_config_toml_round_trip() {
        let cfg = PhysicsConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = PhysicsConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        // Partial override keeps defaults elsewhere.
        let partial = PhysicsConfig::from_toml_str("fog_beta_max = 6.0").unwrap();
        assert_eq!(partial.fog_beta_max, 6.0);
        assert_eq!(partial.rain_count_max, 400);
    }
}

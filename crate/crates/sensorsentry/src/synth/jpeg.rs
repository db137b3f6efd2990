//! Compression artifacts via a baseline-DCT JPEG encode/decode round trip.
//!
//! Severity maps linearly to encoder quality: `q(s) = round(q0 - q_span * s)`
//! (95 at s = 0 down to 10 at s = 1). Only the degradation passes through
//! JPEG; emitted dataset files stay PNG.

use crate::error::Result;
use crate::model::ImageBuffer;
use crate::synth::PhysicsConfig;

/// Encoder quality used at a given severity.
pub fn jpeg_quality(severity: f64, cfg: &PhysicsConfig) -> u8 {
    (cfg.jpeg_quality.0 - cfg.jpeg_quality.1 * severity).round().clamp(1.0, 100.0) as u8
}

pub(crate) fn render(img: &ImageBuffer, severity: f64, cfg: &PhysicsConfig) -> Result<ImageBuffer> {
    let quality = jpeg_quality(severity, cfg);
    log::debug!("jpeg round trip at quality {quality}");
    let rgb = image::RgbImage::from_raw(img.width(), img.height(), img.bytes().to_vec())
        .expect("image buffer is well-formed");
    let mut encoded = Vec::new();
    let enc = image::codecs::jpeg::JpegEncoder::new_with_quality(&mut encoded, quality);
    image::ImageEncoder::write_image(
        enc,
        rgb.as_raw(),
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgb8,
    )?;
    let decoded = image::load_from_memory_with_format(&encoded, image::ImageFormat::Jpeg)?.to_rgb8();
    ImageBuffer::new(decoded.width(), decoded.height(), decoded.into_raw())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DegradationMode;
    use crate::synth::{apply, DegradationParams};

    #[test]
    fn quality_mapping_endpoints() {
        let cfg = PhysicsConfig::default();
        assert_eq!(jpeg_quality(0.0, &cfg), 95);
        assert_eq!(jpeg_quality(1.0, &cfg), 10);
        assert_eq!(jpeg_quality(0.5, &cfg), 53);
    }

    #[test]
    fn heavy_compression_distorts_more() {
        let mut px = Vec::new();
        for i in 0..32 * 32 {
            let v = ((i * 37) % 256) as u8;
            px.extend_from_slice(&[v, 255 - v, v.wrapping_mul(2)]);
        }
        let img = ImageBuffer::new(32, 32, px).unwrap();
        let err = |s: f64| {
            let p = DegradationParams::new(DegradationMode::JpegCompression, s, 0).unwrap();
            let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
            img.bytes()
                .iter()
                .zip(r.image.bytes())
                .map(|(a, b)| (*a as f64 - *b as f64).abs())
                .sum::<f64>()
        };
        assert!(err(1.0) > err(0.1) * 1.5);
    }

    #[test]
    fn round_trip_keeps_dimensions() {
        let img = ImageBuffer::filled(21, 13, [90, 40, 200]);
        let p = DegradationParams::new(DegradationMode::JpegCompression, 0.7, 0).unwrap();
        let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
        assert_eq!(r.image.width(), 21);
        assert_eq!(r.image.height(), 13);
        assert!(r.mask.is_none());
    }
}

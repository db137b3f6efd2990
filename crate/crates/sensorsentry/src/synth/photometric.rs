//! Photometric and pipeline operators: low light, exposure shift, sensor
//! noise and vignetting.

use crate::rng::RngStream;
use crate::synth::PhysicsConfig;

/// Gamma darkening plus amplified read noise.
/// `I' = I^(1 + gamma_gain * s)` with Gaussian read noise of
/// `sigma = read.0 + read.1 * s` grey levels.
pub(crate) fn render_low_light(
    data: &mut [f64],
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) {
    let gamma = 1.0 + cfg.lowlight_gamma_gain * severity;
    let sigma = (cfg.lowlight_read_noise.0 + cfg.lowlight_read_noise.1 * severity) / 255.0;
    let mut noise_rng = rng.derive(knob::READ_NOISE);
    for v in data.iter_mut() {
        *v = v.powf(gamma) + sigma * noise_rng.normal();
    }
}

/// Under- or over-exposure gain; the direction comes from one stream bit.
pub(crate) fn render_exposure(data: &mut [f64], severity: f64, rng: &RngStream, cfg: &PhysicsConfig) {
    let mut dir_rng = rng.derive(knob::EXPOSURE_DIRECTION);
    let gain = if dir_rng.next_bool() {
        1.0 + cfg.exposure_over_gain * severity
    } else {
        1.0 - cfg.exposure_under_gain * severity
    };
    for v in data.iter_mut() {
        *v *= gain;
    }
}

/// Signal-dependent shot noise combined with read noise in quadrature.
/// `sigma_shot(x) = k(s) * sqrt(I(x))` with `k(s) = shot_coeff * s`;
/// `sigma_read = read.0 + read.1 * s` grey levels.
pub(crate) fn render_sensor_noise(
    data: &mut [f64],
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) {
    let k = cfg.noise_shot_coeff * severity;
    let read = (cfg.noise_read.0 + cfg.noise_read.1 * severity) / 255.0;
    let mut noise_rng = rng.derive(knob::PIXEL_NOISE);
    for v in data.iter_mut() {
        let shot = k * v.max(0.0).sqrt();
        let sigma = (shot * shot + read * read).sqrt();
        *v += sigma * noise_rng.normal();
    }
}

/// Radial attenuation: `I'(x) = I(x) * (1 - s * (r / r_max)^2)`.
/// Returns the attenuation field as the mask.
pub(crate) fn render_vignetting(
    data: &mut [f64],
    width: usize,
    height: usize,
    severity: f64,
) -> Vec<f64> {
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let r_max2 = cx * cx + cy * cy;
    let mut mask = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let r2 = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / r_max2;
            let fall = severity * r2;
            let i = (y * width + x) * 3;
            for c in 0..3 {
                data[i + c] *= 1.0 - fall;
            }
            mask.push(fall.clamp(0.0, 1.0));
        }
    }
    mask
}

mod knob {
    pub const READ_NOISE: u64 = 0;
    pub const EXPOSURE_DIRECTION: u64 = 1;
    pub const PIXEL_NOISE: u64 = 2;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DegradationMode, ImageBuffer};
    use crate::synth::{apply, DegradationParams};

    fn gray(v: u8) -> ImageBuffer {
        ImageBuffer::filled(16, 12, [v, v, v])
    }

    #[test]
    fn identity_at_zero_for_all_photometric_modes() {
        let img = gray(128);
        for mode in [
            DegradationMode::LowLight,
            DegradationMode::ExposureShift,
            DegradationMode::SensorNoise,
            DegradationMode::JpegCompression,
            DegradationMode::Vignetting,
        ] {
            let p = DegradationParams::new(mode, 0.0, 9).unwrap();
            let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
            assert_eq!(r.image, img, "{mode} not identity at s=0");
        }
    }

    #[test]
    fn low_light_darkens() {
        let img = gray(180);
        let p = DegradationParams::new(DegradationMode::LowLight, 0.8, 3).unwrap();
        let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
        let before: f64 = img.to_f64().iter().sum();
        let after: f64 = r.image.to_f64().iter().sum();
        assert!(after < before * 0.6, "{after} vs {before}");
        assert!(r.mask.is_none());
    }

    #[test]
    fn exposure_direction_is_seed_stable() {
        let img = gray(100);
        let p = DegradationParams::new(DegradationMode::ExposureShift, 0.5, 11).unwrap();
        let a = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
        let b = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
        assert_eq!(a.image, b.image);
        // Some seed must produce the opposite direction.
        let mean_a = a.image.to_f64().iter().sum::<f64>() / (16.0 * 12.0 * 3.0);
        let mut saw_other = false;
        for seed in 0..16 {
            let p = DegradationParams::new(DegradationMode::ExposureShift, 0.5, seed).unwrap();
            let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
            let m = r.image.to_f64().iter().sum::<f64>() / (16.0 * 12.0 * 3.0);
            if (m > 100.0 / 255.0) != (mean_a > 100.0 / 255.0) {
                saw_other = true;
            }
        }
        assert!(saw_other, "both exposure directions should occur across seeds");
    }

    #[test]
    fn sensor_noise_scales_with_severity() {
        let img = gray(128);
        let spread = |s: f64, seed: u64| {
            let p = DegradationParams::new(DegradationMode::SensorNoise, s, seed).unwrap();
            let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
            let vals = r.image.to_f64();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt()
        };
        assert!(spread(0.9, 4) > spread(0.2, 4) * 2.0);
    }

    #[test]
    fn vignetting_keeps_center_darkens_corners() {
        let img = gray(200);
        for s in [0.3, 0.7, 1.0] {
            let p = DegradationParams::new(DegradationMode::Vignetting, s, 2).unwrap();
            let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
            // Center pixel untouched for any severity (16x12 has no exact
            // center pixel; the four central pixels stay within one step).
            let c = r.image.get(8, 6)[0] as i32;
            assert!((c - 200).abs() <= 1, "center {c}");
            let corner = r.image.get(0, 0)[0];
            assert!((corner as f64) < 200.0 * (1.0 - 0.9 * s) + 2.0);
            let m = r.mask.unwrap();
            assert_eq!(m.get(8, 6) < 0.01, true);
            let mc = m.get(0, 0);
            assert!((mc - s).abs() < 0.05, "corner mask {mc} for s {s}");
        }
    }

    #[test]
    fn vignetting_center_pixel_exact_on_odd_dims() {
        let img = ImageBuffer::filled(17, 13, [173, 90, 40]);
        let p = DegradationParams::new(DegradationMode::Vignetting, 1.0, 2).unwrap();
        let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
        assert_eq!(r.image.get(8, 6), [173, 90, 40]);
        assert_eq!(r.mask.unwrap().get(8, 6), 0.0);
    }
}

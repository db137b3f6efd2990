//! Motion blur via a linear-trajectory point-spread function.
//!
//! `L(s) = 1 + round(len_coeff * s)` samples are splatted bilinearly along a
//! line at a uniformly drawn angle in [0, pi); the kernel is normalized to
//! sum 1 so constant images pass through unchanged.

use crate::rng::RngStream;
use crate::synth::{kernel, PhysicsConfig};

pub(crate) fn psf(length: u32, theta: f64) -> (Vec<f64>, usize) {
    let half = (length - 1) as f64 / 2.0;
    let radius = (half * theta.cos().abs().max(theta.sin().abs())).ceil() as i64 + 1;
    let size = (2 * radius + 1) as usize;
    let mut k = vec![0.0; size * size];
    let (dx, dy) = (theta.cos(), theta.sin());
    for step in 0..length {
        let t = step as f64 - half;
        let x = t * dx + radius as f64;
        let y = t * dy + radius as f64;
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (x0, y0) = (x0 as usize, y0 as usize);
        k[y0 * size + x0] += (1.0 - fx) * (1.0 - fy);
        k[y0 * size + x0 + 1] += fx * (1.0 - fy);
        k[(y0 + 1) * size + x0] += (1.0 - fx) * fy;
        k[(y0 + 1) * size + x0 + 1] += fx * fy;
    }
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    (k, size)
}

pub(crate) fn render(
    data: &mut [f64],
    width: usize,
    height: usize,
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) {
    let length = 1 + (cfg.motion_len_coeff * severity).round() as u32;
    if length <= 1 {
        return;
    }
    let mut angle_rng = rng.derive(knob::TRAJECTORY_ANGLE);
    let theta = angle_rng.uniform(0.0, std::f64::consts::PI);
    let (k, size) = psf(length, theta);
    let out = kernel::convolve_rgb(data, width, height, &k, size, size);
    data.copy_from_slice(&out);
}

mod knob {
    pub const TRAJECTORY_ANGLE: u64 = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DegradationMode, ImageBuffer};
    use crate::synth::{apply, DegradationParams};

    #[test]
    fn psf_sums_to_one() {
        for (len, theta) in [(3u32, 0.0), (7, 1.1), (31, 2.6), (1, 0.4)] {
            let (k, _) = psf(len, theta);
            let sum: f64 = k.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn horizontal_impulse_spreads_into_thirds() {
        // 5x1 impulse, L = 3, theta = 0: three equal pixels of value 1/3.
        let mut px = vec![0u8; 15];
        px[6] = 255;
        px[7] = 255;
        px[8] = 255;
        let data = ImageBuffer::new(5, 1, px).unwrap().to_f64();
        let (k, size) = psf(3, 0.0);
        let out = kernel::convolve_rgb(&data, 5, 1, &k, size, size);
        let img = ImageBuffer::from_f64(5, 1, &out).unwrap();
        let row: Vec<u8> = (0..5).map(|x| img.get(x, 0)[0]).collect();
        assert_eq!(row, vec![0, 85, 85, 85, 0]);
    }

    #[test]
    fn constant_image_unchanged() {
        let img = ImageBuffer::filled(9, 7, [120, 64, 200]);
        let p = DegradationParams::new(DegradationMode::MotionBlur, 0.8, 21).unwrap();
        let r = apply(&img, None, &p, &PhysicsConfig::default()).unwrap();
        assert_eq!(r.image, img);
        assert!(r.mask.is_none());
        assert!(!r.mask_valid());
    }

    #[test]
    fn length_mapping() {
        let cfg = PhysicsConfig::default();
        assert_eq!(1 + (cfg.motion_len_coeff * 0.0).round() as u32, 1);
        assert_eq!(1 + (cfg.motion_len_coeff * 1.0).round() as u32, 31);
    }
}

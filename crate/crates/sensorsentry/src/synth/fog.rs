//! Depth-conditioned fog with an exponential transmission model.
//!
//! Per pixel, transmission `t = exp(-beta(s) * d)` attenuates the scene and
//! blends in atmospheric light: `I' = I t + A (1 - t)`. Distant pixels
//! (larger normalized depth) receive more fog. The emitted mask is `1 - t`.

use crate::model::DepthMap;
use crate::rng::RngStream;
use crate::synth::PhysicsConfig;

pub(crate) fn render(
    data: &mut [f64],
    depth: &DepthMap,
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) -> Vec<f64> {
    let beta = cfg.fog_beta_max * severity;
    // Atmospheric light: a single bright-gray level shared by all channels.
    let mut light_rng = rng.derive(knob::ATMOSPHERIC_LIGHT);
    let ambient = light_rng.uniform(cfg.fog_ambient.0, cfg.fog_ambient.1);
    let mut mask = Vec::with_capacity(depth.values().len());
    for (pix, &d) in depth.values().iter().enumerate() {
        let t = (-beta * d).exp();
        let i = pix * 3;
        for c in 0..3 {
            data[i + c] = data[i + c] * t + ambient * (1.0 - t);
        }
        mask.push(1.0 - t);
    }
    mask
}

mod knob {
    pub const ATMOSPHERIC_LIGHT: u64 = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DegradationMode, DepthMap, ImageBuffer};
    use crate::synth::{apply, DegradationParams};

    fn tiny_image() -> ImageBuffer {
        ImageBuffer::new(4, 2, (0..24).map(|i| (i * 10) as u8).collect()).unwrap()
    }

    #[test]
    fn zero_depth_is_exact_identity() {
        let img = tiny_image();
        let depth = DepthMap::new(4, 2, vec![0.0; 8]).unwrap();
        let p = DegradationParams::new(DegradationMode::Fog, 0.8, 42).unwrap();
        let r = apply(&img, Some(&depth), &p, &PhysicsConfig::default()).unwrap();
        assert_eq!(r.image, img);
        let mask = r.mask.unwrap();
        assert!(mask.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn transmission_value_at_half() {
        // s = 0.5, d = 0.5 -> beta = 2, t = e^-1.
        let img = ImageBuffer::filled(2, 2, [255, 255, 255]);
        let depth = DepthMap::new(2, 2, vec![0.5; 4]).unwrap();
        let p = DegradationParams::new(DegradationMode::Fog, 0.5, 7).unwrap();
        let r = apply(&img, Some(&depth), &p, &PhysicsConfig::default()).unwrap();
        let t = (-1.0f64).exp();
        let got = r.mask.unwrap().get(0, 0);
        assert!((got - (1.0 - t)).abs() < 1e-12, "mask {got}");
    }

    #[test]
    fn farther_pixels_get_more_fog() {
        let img = ImageBuffer::filled(3, 1, [200, 200, 200]);
        let depth = DepthMap::new(3, 1, vec![0.1, 0.5, 0.9]).unwrap();
        let p = DegradationParams::new(DegradationMode::Fog, 0.7, 3).unwrap();
        let r = apply(&img, Some(&depth), &p, &PhysicsConfig::default()).unwrap();
        let m = r.mask.unwrap();
        assert!(m.get(0, 0) < m.get(1, 0));
        assert!(m.get(1, 0) < m.get(2, 0));
    }

    #[test]
    fn fog_requires_depth() {
        let img = tiny_image();
        let p = DegradationParams::new(DegradationMode::Fog, 0.5, 1).unwrap();
        let err = apply(&img, None, &p, &PhysicsConfig::default());
        assert!(err.is_err());
    }
}

//! Depth-dependent defocus blur via a circle-of-confusion proxy.
//!
//! `C(x) = |1/(d + eps) - 1/(Df + eps)|` measures distance from a randomly
//! drawn focal plane `Df`; the blur radius is `sigma(x) = sigma_max(s) *
//! C(x) / max C`. Rendering discretizes the blur map into layers, blurs the
//! whole image once per layer and composites per pixel by nearest layer, so
//! the focal plane stays sharp (layer 0 has sigma 0).

use crate::model::DepthMap;
use crate::rng::RngStream;
use crate::synth::{kernel, PhysicsConfig};

pub(crate) fn render(
    data: &mut [f64],
    width: usize,
    height: usize,
    depth: &DepthMap,
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) -> Vec<f64> {
    let eps = cfg.defocus_eps;
    let mut focal_rng = rng.derive(knob::FOCAL_PLANE);
    let focal = focal_rng.uniform(cfg.defocus_focal.0, cfg.defocus_focal.1);
    let inv_focal = 1.0 / (focal + eps);

    let coc: Vec<f64> = depth
        .values()
        .iter()
        .map(|&d| (1.0 / (d + eps) - inv_focal).abs())
        .collect();
    let max_coc = coc.iter().cloned().fold(0.0, f64::max);
    if max_coc <= 0.0 {
        // Entire scene on the focal plane: nothing to blur.
        return vec![0.0; coc.len()];
    }

    let sigma_max = cfg.defocus_sigma_max * severity;
    let layers = cfg.defocus_layers.max(2);
    let levels: Vec<f64> = (0..layers)
        .map(|l| sigma_max * l as f64 / (layers - 1) as f64)
        .collect();

    // Blur once per layer; layer 0 is the unblurred input.
    let mut blurred: Vec<Vec<f64>> = Vec::with_capacity(layers);
    blurred.push(data.to_vec());
    for &sigma in levels.iter().skip(1) {
        blurred.push(kernel::gaussian_blur_rgb(data, width, height, sigma));
    }

    let mut mask = Vec::with_capacity(coc.len());
    for (pix, &c) in coc.iter().enumerate() {
        let rel = c / max_coc;
        let layer = (rel * (layers - 1) as f64).round() as usize;
        let i = pix * 3;
        data[i..i + 3].copy_from_slice(&blurred[layer][i..i + 3]);
        mask.push(rel.clamp(0.0, 1.0));
    }
    mask
}

mod knob {
    pub const FOCAL_PLANE: u64 = 0;
}

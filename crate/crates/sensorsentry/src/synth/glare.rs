//! Glare/flare: additive bloom, halo ring and radial streaks from a bright
//! source placed in the top half of the frame.
//!
//! The added energy field is evaluated in closed form per pixel; its
//! normalized value is the ground-truth mask.

use crate::rng::RngStream;
use crate::synth::PhysicsConfig;

pub(crate) fn render(
    data: &mut [f64],
    width: usize,
    height: usize,
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) -> Vec<f64> {
    let mut flare_rng = rng.derive(knob::FLARE_GEOMETRY);
    let cx = flare_rng.uniform(0.1, 0.9) * width as f64;
    let cy = flare_rng.uniform(0.05, 0.45) * height as f64;
    let streak_phase = flare_rng.uniform(0.0, std::f64::consts::FRAC_PI_2);

    let bloom_radius = cfg.glare_bloom_radius.0 + cfg.glare_bloom_radius.1 * severity;
    let bloom_sigma = bloom_radius / 2.0;
    let halo_radius = 1.6 * bloom_radius;
    let halo_sigma = 0.15 * halo_radius;
    let streak_len = 3.0 * bloom_radius;
    let streak_width = 1.5 + 3.0 * severity;

    let amp_bloom = 0.9 * severity;
    let amp_halo = 0.3 * severity;
    let amp_streak = 0.5 * severity;

    let mut energy = vec![0.0f64; width * height];
    let mut max_energy = 0.0f64;
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let rho = (dx * dx + dy * dy).sqrt();

            let bloom = amp_bloom * (-(rho * rho) / (2.0 * bloom_sigma * bloom_sigma)).exp();
            let halo_d = rho - halo_radius;
            let halo = amp_halo * (-(halo_d * halo_d) / (2.0 * halo_sigma * halo_sigma)).exp();

            let mut streaks = 0.0;
            if rho < streak_len && rho > 1e-9 {
                let theta = dy.atan2(dx);
                for k in 0..4 {
                    let axis = streak_phase + k as f64 * std::f64::consts::FRAC_PI_2;
                    // Perpendicular distance to the streak axis.
                    let delta = theta - axis;
                    let perp = rho * delta.sin().abs();
                    if delta.cos() > 0.0 {
                        streaks += amp_streak
                            * (-(perp * perp) / (2.0 * streak_width * streak_width)).exp()
                            * (1.0 - rho / streak_len);
                    }
                }
            } else if rho <= 1e-9 {
                streaks = amp_streak;
            }

            let e = bloom + halo + streaks;
            energy[y * width + x] = e;
            max_energy = max_energy.max(e);
        }
    }

    for (pix, &e) in energy.iter().enumerate() {
        let i = pix * 3;
        for c in 0..3 {
            data[i + c] += e;
        }
    }
    if max_energy > 0.0 {
        energy.iter().map(|&e| (e / max_energy).clamp(0.0, 1.0)).collect()
    } else {
        energy
    }
}

mod knob {
    pub const FLARE_GEOMETRY: u64 = 0;
}

//! Rain streak and snow particle rendering.
//!
//! Rain composites semi-transparent near-vertical streaks over a mild global
//! contrast loss; snow composites soft Gaussian particles over a visibility
//! whitening. Both emit the accumulated splat alpha as the ground-truth
//! mask, clipped to [0, 1].

use crate::rng::RngStream;
use crate::synth::PhysicsConfig;

const RAIN_STREAK_BRIGHTNESS: f64 = 0.85;

/// Count of streaks/particles at a given severity.
pub fn particle_count(max_count: u32, severity: f64) -> u32 {
    (max_count as f64 * severity).round() as u32
}

fn splat_bilinear(alpha: &mut [f64], width: usize, height: usize, x: f64, y: f64, amount: f64) {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (xi, yi) = (x0 as i64, y0 as i64);
    for (dx, dy, w) in [
        (0i64, 0i64, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        let (px, py) = (xi + dx, yi + dy);
        if px >= 0 && py >= 0 && (px as usize) < width && (py as usize) < height {
            alpha[py as usize * width + px as usize] += amount * w;
        }
    }
}

pub(crate) fn render_rain(
    data: &mut [f64],
    width: usize,
    height: usize,
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) -> Vec<f64> {
    // Atmospheric contrast loss first, streaks on top.
    let fade = cfg.rain_contrast_loss * severity;
    if fade > 0.0 {
        let mean = data.iter().sum::<f64>() / data.len() as f64;
        for v in data.iter_mut() {
            *v += fade * (mean - *v);
        }
    }

    let count = particle_count(cfg.rain_count_max, severity);
    let mut streak_rng = rng.derive(knob::STREAKS);
    let jitter = cfg.rain_angle_jitter_deg.to_radians();
    let mut total_alpha = vec![0.0f64; width * height];
    let mut streak_alpha = vec![0.0f64; width * height];
    for _ in 0..count {
        let x0 = streak_rng.uniform(0.0, width as f64);
        let y0 = streak_rng.uniform(0.0, height as f64);
        let len = streak_rng.uniform(cfg.rain_len.0, cfg.rain_len.1);
        let angle = streak_rng.uniform(-jitter, jitter);
        let alpha = streak_rng.uniform(cfg.rain_alpha.0, cfg.rain_alpha.1);
        let (dx, dy) = (angle.sin(), angle.cos());

        streak_alpha.iter_mut().for_each(|v| *v = 0.0);
        let steps = (len / 0.5).ceil() as usize;
        for step in 0..=steps {
            let t = len * step as f64 / steps as f64;
            splat_bilinear(&mut streak_alpha, width, height, x0 + t * dx, y0 + t * dy, 1.0);
        }
        for (tot, &s) in total_alpha.iter_mut().zip(&streak_alpha) {
            if s > 0.0 {
                *tot += alpha * s.min(1.0);
            }
        }
        for (pix, &s) in streak_alpha.iter().enumerate() {
            if s > 0.0 {
                let a = alpha * s.min(1.0);
                let i = pix * 3;
                for c in 0..3 {
                    data[i + c] = data[i + c] * (1.0 - a) + RAIN_STREAK_BRIGHTNESS * a;
                }
            }
        }
    }
    total_alpha.iter().map(|&v| v.min(1.0)).collect()
}

pub(crate) fn render_snow(
    data: &mut [f64],
    width: usize,
    height: usize,
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) -> Vec<f64> {
    // Visibility attenuation toward white, then particles.
    let whiten = cfg.snow_whiten * severity;
    if whiten > 0.0 {
        for v in data.iter_mut() {
            *v += whiten * (1.0 - *v);
        }
    }

    let count = particle_count(cfg.snow_count_max, severity);
    let mut flake_rng = rng.derive(knob::PARTICLES);
    let mut total_alpha = vec![0.0f64; width * height];
    for _ in 0..count {
        let cx = flake_rng.uniform(0.0, width as f64);
        let cy = flake_rng.uniform(0.0, height as f64);
        let radius = flake_rng.uniform(cfg.snow_radius.0, cfg.snow_radius.1);
        let peak = flake_rng.uniform(0.55, 0.9);
        let sigma = radius / 1.5;
        let reach = (3.0 * sigma).ceil() as i64;
        let (xi, yi) = (cx.round() as i64, cy.round() as i64);
        for py in (yi - reach).max(0)..=(yi + reach).min(height as i64 - 1) {
            for px in (xi - reach).max(0)..=(xi + reach).min(width as i64 - 1) {
                let d2 = (px as f64 - cx).powi(2) + (py as f64 - cy).powi(2);
                let a = peak * (-d2 / (2.0 * sigma * sigma)).exp();
                if a < 1e-4 {
                    continue;
                }
                total_alpha[py as usize * width + px as usize] += a;
                let i = (py as usize * width + px as usize) * 3;
                for c in 0..3 {
                    data[i + c] = data[i + c] * (1.0 - a) + a;
                }
            }
        }
    }
    total_alpha.iter().map(|&v| v.min(1.0)).collect()
}

mod knob {
    pub const STREAKS: u64 = 0;
    pub const PARTICLES: u64 = 1;
}

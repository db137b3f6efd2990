//! Lens occlusion: soft refractive blobs with severity-controlled coverage.
//!
//! One to three elliptical blobs cover a target fraction
//! `f(s) = f0 + f_span * s` of the frame; inside a blob the image blends 80%
//! toward a heavy Gaussian blur. Axes are rescaled iteratively so the
//! realized mask mean tracks the coverage target even when blobs overlap or
//! clip the border. The blob alpha is the ground-truth mask.

use crate::rng::RngStream;
use crate::synth::{kernel, PhysicsConfig};

struct Blob {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    angle: f64,
}

fn coverage(blobs: &[Blob], width: usize, height: usize, alpha: &mut [f64]) -> f64 {
    alpha.iter_mut().for_each(|v| *v = 0.0);
    for b in blobs {
        let (sin, cos) = b.angle.sin_cos();
        // Bounding box of the soft ellipse (profile reaches 1.25 * radius).
        let reach = 1.25 * b.rx.max(b.ry);
        let x0 = ((b.cx - reach).floor().max(0.0)) as usize;
        let x1 = ((b.cx + reach).ceil().min(width as f64 - 1.0)) as usize;
        let y0 = ((b.cy - reach).floor().max(0.0)) as usize;
        let y1 = ((b.cy + reach).ceil().min(height as f64 - 1.0)) as usize;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 - b.cx;
                let dy = y as f64 - b.cy;
                let u = (dx * cos + dy * sin) / b.rx;
                let v = (-dx * sin + dy * cos) / b.ry;
                let rho = (u * u + v * v).sqrt();
                // Area-preserving soft edge: ramp centered on rho = 1.
                let a = ((1.25 - rho) / 0.5).clamp(0.0, 1.0);
                if a > 0.0 {
                    let cell = &mut alpha[y * width + x];
                    *cell = cell.max(a);
                }
            }
        }
    }
    alpha.iter().sum::<f64>() / alpha.len() as f64
}

pub(crate) fn render(
    data: &mut [f64],
    width: usize,
    height: usize,
    severity: f64,
    rng: &RngStream,
    cfg: &PhysicsConfig,
) -> Vec<f64> {
    let target = cfg.occlusion_coverage.0 + cfg.occlusion_coverage.1 * severity;
    let mut blob_rng = rng.derive(knob::BLOBS);
    let count = 1 + blob_rng.below(3) as usize;

    let mut shares: Vec<f64> = (0..count).map(|_| blob_rng.uniform(0.5, 1.0)).collect();
    let total: f64 = shares.iter().sum();
    shares.iter_mut().for_each(|s| *s /= total);

    let area = width as f64 * height as f64;
    let mut blobs: Vec<Blob> = shares
        .iter()
        .map(|share| {
            let aspect = blob_rng.uniform(0.6, 1.8);
            let blob_area = share * target * area;
            let rx = (blob_area * aspect / std::f64::consts::PI).sqrt();
            Blob {
                cx: blob_rng.uniform(0.15, 0.85) * width as f64,
                cy: blob_rng.uniform(0.15, 0.85) * height as f64,
                rx,
                ry: rx / aspect,
                angle: blob_rng.uniform(0.0, std::f64::consts::PI),
            }
        })
        .collect();

    // Rescale axes until the realized mean matches the coverage target;
    // overlap and border clipping otherwise bias it low.
    let mut alpha = vec![0.0f64; width * height];
    let max_axis = 0.75 * width.max(height) as f64;
    for _ in 0..4 {
        let measured = coverage(&blobs, width, height, &mut alpha);
        if measured <= 0.0 {
            break;
        }
        let ratio = (target / measured).sqrt().clamp(0.5, 2.0);
        if (ratio - 1.0).abs() < 0.02 {
            break;
        }
        for b in &mut blobs {
            b.rx = (b.rx * ratio).min(max_axis);
            b.ry = (b.ry * ratio).min(max_axis);
        }
    }
    let _ = coverage(&blobs, width, height, &mut alpha);

    let blurred = kernel::gaussian_blur_rgb(data, width, height, cfg.occlusion_blur_sigma);
    for (pix, &a) in alpha.iter().enumerate() {
        if a <= 0.0 {
            continue;
        }
        let blend = cfg.occlusion_blend * a;
        let i = pix * 3;
        for c in 0..3 {
            data[i + c] += blend * (blurred[i + c] - data[i + c]);
        }
    }
    alpha
}

mod knob {
    pub const BLOBS: u64 = 0;
}

//! Raw per-mode image statistics for the heuristic monitor.
//!
//! Each degradation mode gets one classical statistic oriented so that it
//! grows with severity: dark-channel mean for fog, oriented gradient energy
//! for rain, speckle density for snow, luminance deficit for low light,
//! blur-ratio split by gradient anisotropy for defocus vs motion blur,
//! saturation fraction for glare, radial falloff slope for vignetting,
//! local-variance collapse for occlusion, median residual for noise, 8x8
//! blockiness for compression, and mid-gray deviation for exposure. The
//! calibrated transfer turns these into severities; here we only measure.

use crate::model::{DegradationMode, ImageBuffer, MODE_COUNT};

pub const TILE: usize = 16;

/// Per-tile features feeding the spatial uncertainty map.
#[derive(Debug, Clone, Default)]
pub struct TileFeatures {
    pub mean_luma: f64,
    pub std_luma: f64,
    pub dark_channel: f64,
    pub saturation: f64,
    /// Blur ratio: Laplacian energy after a 1 px pre-blur over the raw
    /// Laplacian energy. Near 1 for already-blurred content.
    pub blur_ratio: f64,
    /// Mean squared Laplacian per pixel inside the tile.
    pub lap_energy: f64,
    /// Normalized squared distance of the tile center to the image center.
    pub radial2: f64,
}

#[derive(Debug, Clone)]
pub struct RawStatistics {
    /// Raw per-mode statistic, indexed by mode id.
    pub values: [f64; MODE_COUNT],
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub tiles: Vec<TileFeatures>,
}

struct Planes {
    w: usize,
    h: usize,
    luma: Vec<f64>,
    min_rgb: Vec<f64>,
}

fn luminance_planes(img: &ImageBuffer) -> Planes {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.to_f64();
    let mut luma = Vec::with_capacity(w * h);
    let mut min_rgb = Vec::with_capacity(w * h);
    for pix in 0..w * h {
        let i = pix * 3;
        let (r, g, b) = (data[i], data[i + 1], data[i + 2]);
        luma.push(0.299 * r + 0.587 * g + 0.114 * b);
        min_rgb.push(r.min(g).min(b));
    }
    Planes { w, h, luma, min_rgb }
}

#[inline]
fn at(plane: &[f64], w: usize, h: usize, x: i64, y: i64) -> f64 {
    let xc = x.clamp(0, w as i64 - 1) as usize;
    let yc = y.clamp(0, h as i64 - 1) as usize;
    plane[yc * w + xc]
}

fn sobel(luma: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let p = |dx: i64, dy: i64| at(luma, w, h, x + dx, y + dy);
            gx[(y as usize) * w + x as usize] = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            gy[(y as usize) * w + x as usize] = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1))
                - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
        }
    }
    (gx, gy)
}

fn laplacian(luma: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut lap = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let p = |dx: i64, dy: i64| at(luma, w, h, x + dx, y + dy);
            lap[(y as usize) * w + x as usize] =
                4.0 * p(0, 0) - p(-1, 0) - p(1, 0) - p(0, -1) - p(0, 1);
        }
    }
    lap
}

/// Separable Gaussian blur of a single plane, sigma 1, replicate border.
fn blur1(plane: &[f64], w: usize, h: usize) -> Vec<f64> {
    const TAPS: [f64; 7] = [0.004, 0.054, 0.242, 0.4, 0.242, 0.054, 0.004];
    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for (k, &t) in TAPS.iter().enumerate() {
                acc += t * at(plane, w, h, x + k as i64 - 3, y as i64);
            }
            horiz[y * w + x as usize] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in TAPS.iter().enumerate() {
                acc += t * at(&horiz, w, h, x as i64, y + k as i64 - 3);
            }
            out[y as usize * w + x] = acc;
        }
    }
    out
}

fn median_filter(plane: &[f64], w: usize, h: usize, radius: i64) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    let mut window = Vec::with_capacity(((2 * radius + 1) * (2 * radius + 1)) as usize);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            window.clear();
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    window.push(at(plane, w, h, x + dx, y + dy));
                }
            }
            window.sort_by(|a, b| a.partial_cmp(b).unwrap());
            out[y as usize * w + x as usize] = window[window.len() / 2];
        }
    }
    out
}

/// Grayscale erosion (separable min filter) used by the dark channel.
fn erode(plane: &[f64], w: usize, h: usize, radius: i64) -> Vec<f64> {
    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w as i64 {
            let mut m = f64::INFINITY;
            for dx in -radius..=radius {
                m = m.min(at(plane, w, h, x + dx, y as i64));
            }
            horiz[y * w + x as usize] = m;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w {
            let mut m = f64::INFINITY;
            for dy in -radius..=radius {
                m = m.min(at(&horiz, w, h, x as i64, y + dy));
            }
            out[y as usize * w + x] = m;
        }
    }
    out
}

/// Compute all twelve raw statistics plus the tile features.
pub fn compute(img: &ImageBuffer) -> RawStatistics {
    use DegradationMode as M;
    let p = luminance_planes(img);
    let (w, h) = (p.w, p.h);
    let n = (w * h) as f64;

    let mean_luma = p.luma.iter().sum::<f64>() / n;
    let (gx, gy) = sobel(&p.luma, w, h);
    let lap = laplacian(&p.luma, w, h);
    let smooth = blur1(&p.luma, w, h);
    let lap_smooth = laplacian(&smooth, w, h);
    let med3 = median_filter(&p.luma, w, h, 1);
    let med5 = median_filter(&p.luma, w, h, 2);
    let dark = erode(&p.min_rgb, w, h, 3);

    // Laplacian energies for the blur ratio.
    let lap_e: f64 = lap.iter().map(|v| v * v).sum();
    let lap_smooth_e: f64 = lap_smooth.iter().map(|v| v * v).sum();
    let blur_ratio = lap_smooth_e / (lap_e + 1e-12);

    // Structure-tensor coherence of the gradient field.
    let sxx: f64 = gx.iter().map(|v| v * v).sum();
    let syy: f64 = gy.iter().map(|v| v * v).sum();
    let sxy: f64 = gx.iter().zip(&gy).map(|(a, b)| a * b).sum();
    let coherence = (((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt()) / (sxx + syy + 1e-12);

    // Rain: energy of horizontal gradients in excess of vertical ones
    // (near-vertical streaks produce strong horizontal gradients).
    let streak_energy: f64 = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| (a.abs() - b.abs()).max(0.0))
        .sum::<f64>()
        / n;

    // Snow: density of bright speckles that a 5x5 median removes.
    let speckle = p
        .luma
        .iter()
        .zip(&med5)
        .filter(|(&v, &m)| v - m > 0.12 && v > 0.55)
        .count() as f64
        / n;

    // Glare: near-saturated fraction.
    let saturated = p.luma.iter().filter(|&&v| v > 0.92).count() as f64 / n;

    // Sensor noise: energy a 3x3 median removes.
    let residual: f64 = p
        .luma
        .iter()
        .zip(&med3)
        .map(|(v, m)| (v - m).abs())
        .sum::<f64>()
        / n;

    // Vignetting: least-squares slope of luminance against normalized r^2.
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let rmax2 = cx * cx + cy * cy;
    let mut srr = 0.0;
    let mut sry = 0.0;
    let mean_r2 = {
        let mut acc = 0.0;
        for y in 0..h {
            for x in 0..w {
                acc += ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / rmax2;
            }
        }
        acc / n
    };
    for y in 0..h {
        for x in 0..w {
            let r2 = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)) / rmax2 - mean_r2;
            srr += r2 * r2;
            sry += r2 * (p.luma[y * w + x] - mean_luma);
        }
    }
    let radial_slope = if srr > 0.0 { sry / srr } else { 0.0 };

    // JPEG: gradient step across 8x8 block boundaries vs interior.
    let mut boundary = (0.0, 0.0);
    let mut interior = (0.0, 0.0);
    for y in 0..h {
        for x in 1..w {
            let d = (p.luma[y * w + x] - p.luma[y * w + x - 1]).abs();
            if x % 8 == 0 {
                boundary.0 += d;
                boundary.1 += 1.0;
            } else {
                interior.0 += d;
                interior.1 += 1.0;
            }
        }
    }
    for y in 1..h {
        for x in 0..w {
            let d = (p.luma[y * w + x] - p.luma[(y - 1) * w + x]).abs();
            if y % 8 == 0 {
                boundary.0 += d;
                boundary.1 += 1.0;
            } else {
                interior.0 += d;
                interior.1 += 1.0;
            }
        }
    }
    let blockiness = if boundary.1 > 0.0 && interior.1 > 0.0 {
        (boundary.0 / boundary.1 - interior.0 / interior.1).max(0.0)
    } else {
        0.0
    };

    // Tile features.
    let tiles_x = w.div_ceil(TILE);
    let tiles_y = h.div_ceil(TILE);
    let mut tiles = vec![TileFeatures::default(); tiles_x * tiles_y];
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            let x0 = tx * TILE;
            let y0 = ty * TILE;
            let x1 = (x0 + TILE).min(w);
            let y1 = (y0 + TILE).min(h);
            let count = ((x1 - x0) * (y1 - y0)) as f64;
            let mut sum = 0.0;
            let mut dark_sum = 0.0;
            let mut sat = 0.0;
            let mut lap_sum = 0.0;
            let mut lap_smooth_sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    let i = y * w + x;
                    sum += p.luma[i];
                    dark_sum += dark[i];
                    if p.luma[i] > 0.92 {
                        sat += 1.0;
                    }
                    lap_sum += lap[i] * lap[i];
                    lap_smooth_sum += lap_smooth[i] * lap_smooth[i];
                }
            }
            let mean = sum / count;
            let var = {
                let mut acc = 0.0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let d = p.luma[y * w + x] - mean;
                        acc += d * d;
                    }
                }
                acc / count
            };
            let tcx = (x0 + x1) as f64 / 2.0 - 0.5;
            let tcy = (y0 + y1) as f64 / 2.0 - 0.5;
            tiles[ty * tiles_x + tx] = TileFeatures {
                mean_luma: mean,
                std_luma: var.sqrt(),
                dark_channel: dark_sum / count,
                saturation: sat / count,
                blur_ratio: lap_smooth_sum / (lap_sum + 1e-12),
                lap_energy: lap_sum / count,
                radial2: ((tcx - cx).powi(2) + (tcy - cy).powi(2)) / rmax2,
            };
        }
    }

    // Occlusion: area of tiles whose local detail collapsed. A refractive
    // blob leaves a residue of the original high frequencies (alpha
    // blending preserves the blur *ratio*), so the discriminating signal is
    // the absolute Laplacian energy hole, with a full-blur ratio test as a
    // fallback.
    let collapsed = tiles
        .iter()
        .filter(|t| t.lap_energy < 0.012 || t.blur_ratio > 0.75)
        .count() as f64
        / tiles.len() as f64;

    let mut values = [0.0; MODE_COUNT];
    values[M::Fog.id()] = dark.iter().sum::<f64>() / n;
    values[M::Rain.id()] = streak_energy;
    values[M::Snow.id()] = speckle;
    values[M::LowLight.id()] = 1.0 - (mean_luma / 0.5).min(1.0);
    values[M::MotionBlur.id()] = blur_ratio * coherence;
    values[M::DefocusBlur.id()] = blur_ratio * (1.0 - coherence);
    values[M::Glare.id()] = saturated;
    values[M::Vignetting.id()] = (-radial_slope).max(0.0);
    values[M::SensorNoise.id()] = residual;
    values[M::ExposureShift.id()] = (mean_luma - 0.5).abs();
    values[M::JpegCompression.id()] = blockiness;
    values[M::LensOcclusion.id()] = collapsed;

    RawStatistics {
        values,
        tiles_x,
        tiles_y,
        tiles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DegradationMode as M, DepthMap};
    use crate::rng::RngStream;
    use crate::synth::{apply, DegradationParams, PhysicsConfig};

    fn scene(seed: u64) -> ImageBuffer {
        // Sky gradient, textured ground, a few blocks: enough structure for
        // gradient and variance statistics.
        let (w, h) = (96u32, 72u32);
        let mut rng = RngStream::new(seed);
        let mut px = Vec::with_capacity((w * h * 3) as usize);
        for y in 0..h {
            for x in 0..w {
                let fy = y as f64 / h as f64;
                let (mut r, mut g, mut b) = if fy < 0.45 {
                    (0.55 + 0.2 * fy, 0.65 + 0.2 * fy, 0.8)
                } else {
                    let t = 0.3 + 0.25 * rng.next_f64();
                    (t, t * 0.95, t * 0.85)
                };
                if (20..34).contains(&x) && (40..60).contains(&y) {
                    r = 0.8;
                    g = 0.25;
                    b = 0.2;
                }
                if (60..64).contains(&x) && (20..64).contains(&y) {
                    r = 0.2;
                    g = 0.2;
                    b = 0.25;
                }
                px.push((r.clamp(0.0, 1.0) * 255.0) as u8);
                px.push((g.clamp(0.0, 1.0) * 255.0) as u8);
                px.push((b.clamp(0.0, 1.0) * 255.0) as u8);
            }
        }
        ImageBuffer::new(w, h, px).unwrap()
    }

    fn degraded(mode: M, s: f64) -> ImageBuffer {
        let img = scene(1);
        let depth = DepthMap::new(
            96,
            72,
            (0..96 * 72)
                .map(|i| 1.0 - (i / 96) as f64 / 71.0)
                .collect(),
        )
        .unwrap();
        let p = DegradationParams::new(mode, s, 42).unwrap();
        apply(&img, Some(&depth), &p, &PhysicsConfig::default())
            .unwrap()
            .image
    }

    #[test]
    fn statistics_respond_to_their_modes() {
        let clean = compute(&scene(1));
        for (mode, severity) in [
            (M::Fog, 0.8),
            (M::Snow, 0.8),
            (M::LowLight, 0.8),
            (M::MotionBlur, 0.8),
            (M::DefocusBlur, 0.8),
            (M::Glare, 0.8),
            (M::Vignetting, 0.9),
            (M::SensorNoise, 0.8),
            (M::JpegCompression, 1.0),
            (M::LensOcclusion, 0.9),
            (M::Rain, 0.9),
        ] {
            let stat = compute(&degraded(mode, severity));
            assert!(
                stat.values[mode.id()] > clean.values[mode.id()] + 1e-6,
                "{mode}: degraded {} <= clean {}",
                stat.values[mode.id()],
                clean.values[mode.id()]
            );
        }
    }

    #[test]
    fn black_image_saturates_low_light() {
        let img = ImageBuffer::filled(64, 48, [0, 0, 0]);
        let s = compute(&img);
        assert_eq!(s.values[M::LowLight.id()], 1.0);
    }

    #[test]
    fn tile_grid_covers_image() {
        let img = scene(2);
        let s = compute(&img);
        assert_eq!(s.tiles_x, 6);
        assert_eq!(s.tiles_y, 5);
        assert_eq!(s.tiles.len(), 30);
        for t in &s.tiles {
            assert!((0.0..=1.0).contains(&t.mean_luma));
            assert!(t.radial2 <= 1.0 + 1e-9);
        }
    }
}

//! Shared raster helpers for the degradation operators: real-valued
//! conversion, Gaussian and arbitrary-kernel convolution with replicated
//! borders, and luminance.

use crate::model::ImageBuffer;

/// Interleaved RGB raster in [0, 1].
pub(crate) fn to_f64(img: &ImageBuffer) -> Vec<f64> {
    img.to_f64()
}

pub(crate) fn from_f64(width: u32, height: u32, data: &[f64]) -> ImageBuffer {
    ImageBuffer::from_f64(width, height, data).expect("operator preserved dimensions")
}

/// 1-D Gaussian taps for the given sigma, normalized to sum 1.
/// Radius is ceil(3 sigma); sigma <= 0 yields the identity kernel.
pub(crate) fn gaussian_taps(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut taps = Vec::with_capacity((2 * radius + 1) as usize);
    let inv = 1.0 / (2.0 * sigma * sigma);
    for i in -radius..=radius {
        taps.push((-(i * i) as f64 * inv).exp());
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian blur of an interleaved RGB raster, replicate border.
pub(crate) fn gaussian_blur_rgb(data: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let taps = gaussian_taps(sigma);
    let radius = (taps.len() / 2) as i64;
    let mut horiz = vec![0.0; data.len()];
    for y in 0..height {
        let row = y * width * 3;
        for x in 0..width as i64 {
            let mut acc = [0.0f64; 3];
            for (k, &t) in taps.iter().enumerate() {
                let sx = (x + k as i64 - radius).clamp(0, width as i64 - 1) as usize;
                let i = row + sx * 3;
                acc[0] += t * data[i];
                acc[1] += t * data[i + 1];
                acc[2] += t * data[i + 2];
            }
            let o = row + x as usize * 3;
            horiz[o] = acc[0];
            horiz[o + 1] = acc[1];
            horiz[o + 2] = acc[2];
        }
    }
    // Second pass reads from the horizontally blurred raster.
    let mut final_out = vec![0.0; data.len()];
    for y in 0..height as i64 {
        for x in 0..width {
            let mut acc = [0.0f64; 3];
            for (k, &t) in taps.iter().enumerate() {
                let sy = (y + k as i64 - radius).clamp(0, height as i64 - 1) as usize;
                let i = (sy * width + x) * 3;
                acc[0] += t * horiz[i];
                acc[1] += t * horiz[i + 1];
                acc[2] += t * horiz[i + 2];
            }
            let o = (y as usize * width + x) * 3;
            final_out[o] = acc[0];
            final_out[o + 1] = acc[1];
            final_out[o + 2] = acc[2];
        }
    }
    final_out
}

/// Dense 2-D correlation with an arbitrary kernel, replicate border.
pub(crate) fn convolve_rgb(
    data: &[f64],
    width: usize,
    height: usize,
    kernel: &[f64],
    kwidth: usize,
    kheight: usize,
) -> Vec<f64> {
    let (rx, ry) = ((kwidth / 2) as i64, (kheight / 2) as i64);
    let mut out = vec![0.0; data.len()];
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            let mut acc = [0.0f64; 3];
            for ky in 0..kheight as i64 {
                let sy = (y + ky - ry).clamp(0, height as i64 - 1) as usize;
                for kx in 0..kwidth as i64 {
                    let sx = (x + kx - rx).clamp(0, width as i64 - 1) as usize;
                    let w = kernel[(ky * kwidth as i64 + kx) as usize];
                    if w == 0.0 {
                        continue;
                    }
                    let i = (sy * width + sx) * 3;
                    acc[0] += w * data[i];
                    acc[1] += w * data[i + 1];
                    acc[2] += w * data[i + 2];
                }
            }
            let o = ((y * width as i64 + x) * 3) as usize;
            out[o] = acc[0];
            out[o + 1] = acc[1];
            out[o + 2] = acc[2];
        }
    }
    out
}

#[inline]
pub(crate) fn luminance(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

//! Raster types: RGB images, normalized depth maps, spatial masks and
//! bounding boxes, plus their file formats (PNG, binary PPM, ASCII PGM).
//!
//! Pixel math elsewhere in the toolkit happens on 64-bit reals in [0, 1];
//! these types quantize to 8 bits only at file I/O boundaries.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};

/// Clip to [0, 1] and quantize to 8 bits.
#[inline]
pub fn quantize8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit RGB raster, row-major, interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<u8>, // len = width * height * 3
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        let expect = width as usize * height as usize * 3;
        if pixels.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "pixel buffer holds {} bytes, expected {expect} for {width}x{height} RGB",
                pixels.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            pixels.extend_from_slice(&rgb);
        }
        ImageBuffer::new(width, height, pixels).expect("filled image is valid")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Interleaved RGB as reals in [0, 1].
    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&v| v as f64 / 255.0).collect()
    }

    /// Clip-and-quantize an interleaved real raster back to 8 bits.
    pub fn from_f64(width: u32, height: u32, data: &[f64]) -> Result<Self> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(Error::DimensionMismatch(format!(
                "real raster holds {} values, expected {} for {width}x{height}",
                data.len(),
                width as usize * height as usize * 3
            )));
        }
        let pixels = data.iter().map(|&v| quantize8(v)).collect();
        ImageBuffer::new(width, height, pixels)
    }

    /// Read a PNG or binary PPM image, dispatching on extension.
    pub fn read(path: &Path) -> Result<Self> {
        match extension(path) {
            Some("ppm") => Self::read_ppm(path),
            _ => Self::read_png(path),
        }
    }

    /// Write a PNG or binary PPM image, dispatching on extension.
    pub fn write(&self, path: &Path) -> Result<()> {
        match extension(path) {
            Some("ppm") => self.write_ppm(path),
            _ => self.write_png(path),
        }
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        ImageBuffer::new(img.width(), img.height(), img.into_raw())
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.png_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// PNG-encode into memory (used for content hashing before writing).
    pub fn png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let enc = image::codecs::png::PngEncoder::new(&mut out);
        image::ImageEncoder::write_image(
            enc,
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::Rgb8,
        )?;
        Ok(out)
    }

    pub fn read_ppm(path: &Path) -> Result<Self> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |reason: &str| Error::Format {
            format: "PPM",
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut cursor = 0usize;
        let magic = next_pnm_token(&data, &mut cursor).ok_or_else(|| bad("missing magic"))?;
        if magic != b"P6" {
            return Err(bad("expected P6 magic"));
        }
        let width: u32 = parse_pnm_int(&data, &mut cursor).ok_or_else(|| bad("missing width"))?;
        let height: u32 = parse_pnm_int(&data, &mut cursor).ok_or_else(|| bad("missing height"))?;
        let maxval: u32 = parse_pnm_int(&data, &mut cursor).ok_or_else(|| bad("missing maxval"))?;
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }
        // Exactly one whitespace byte separates the header from raster data.
        cursor += 1;
        let expect = width as usize * height as usize * 3;
        if data.len() < cursor + expect {
            return Err(bad("truncated raster data"));
        }
        ImageBuffer::new(width, height, data[cursor..cursor + expect].to_vec())
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Normalized relative depth/disparity in [0, 1]; larger means farther.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "depth dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if values.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "depth holds {} values, expected {} for {width}x{height}",
                values.len(),
                width as usize * height as usize
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "depth values must lie in [0,1], found {v}"
            )));
        }
        Ok(DepthMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    /// Read 16-bit (or 8-bit) grayscale PNG, or ASCII PGM, by extension.
    pub fn read(path: &Path) -> Result<Self> {
        match extension(path) {
            Some("pgm") => Self::read_pgm_ascii(path),
            _ => Self::read_png(path),
        }
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?;
        let (w, h) = (img.width(), img.height());
        let values: Vec<f64> = match img {
            image::DynamicImage::ImageLuma16(buf) => {
                buf.into_raw().iter().map(|&v| v as f64 / 65535.0).collect()
            }
            image::DynamicImage::ImageLuma8(buf) => {
                buf.into_raw().iter().map(|&v| v as f64 / 255.0).collect()
            }
            other => other
                .to_luma16()
                .into_raw()
                .iter()
                .map(|&v| v as f64 / 65535.0)
                .collect(),
        };
        DepthMap::new(w, h, values)
    }

    /// Write as 16-bit grayscale PNG (value = round(d * 65535)).
    pub fn write_png16(&self, path: &Path) -> Result<()> {
        let raw: Vec<u16> = self
            .values
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16)
            .collect();
        // The encoder expects sample bytes in native endian.
        let mut bytes = Vec::with_capacity(raw.len() * 2);
        for v in raw {
            bytes.extend_from_slice(&v.to_ne_bytes());
        }
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let enc = image::codecs::png::PngEncoder::new(&mut w);
        image::ImageEncoder::write_image(
            enc,
            &bytes,
            self.width,
            self.height,
            image::ExtendedColorType::L16,
        )?;
        Ok(())
    }

    pub fn read_pgm_ascii(path: &Path) -> Result<Self> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |reason: &str| Error::Format {
            format: "PGM",
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut cursor = 0usize;
        let magic = next_pnm_token(&data, &mut cursor).ok_or_else(|| bad("missing magic"))?;
        if magic != b"P2" {
            return Err(bad("expected P2 magic (ASCII PGM)"));
        }
        let width: u32 = parse_pnm_int(&data, &mut cursor).ok_or_else(|| bad("missing width"))?;
        let height: u32 = parse_pnm_int(&data, &mut cursor).ok_or_else(|| bad("missing height"))?;
        let maxval: u32 = parse_pnm_int(&data, &mut cursor).ok_or_else(|| bad("missing maxval"))?;
        if maxval == 0 {
            return Err(bad("maxval must be positive"));
        }
        let count = width as usize * height as usize;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let v: u32 = parse_pnm_int(&data, &mut cursor).ok_or_else(|| bad("truncated samples"))?;
            if v > maxval {
                return Err(bad("sample exceeds maxval"));
            }
            values.push(v as f64 / maxval as f64);
        }
        DepthMap::new(width, height, values)
    }
}

/// Per-pixel degradation footprint in [0, 1]; 1 means fully degraded.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMask {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl SpatialMask {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "mask holds {} values, expected {} for {width}x{height}",
                values.len(),
                width as usize * height as usize
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "mask values must lie in [0,1], found {v}"
            )));
        }
        Ok(SpatialMask {
            width,
            height,
            values,
        })
    }

    pub fn zero(width: u32, height: u32) -> Self {
        SpatialMask {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Write as 8-bit grayscale PNG (value = round(m * 255)).
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.png_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// PNG-encode into memory (used for content hashing before writing).
    pub fn png_bytes(&self) -> Result<Vec<u8>> {
        let gray: Vec<u8> = self.values.iter().map(|&v| quantize8(v)).collect();
        let mut out = Vec::new();
        let enc = image::codecs::png::PngEncoder::new(&mut out);
        image::ImageEncoder::write_image(
            enc,
            &gray,
            self.width,
            self.height,
            image::ExtendedColorType::L8,
        )?;
        Ok(out)
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.to_luma8();
        let (w, h) = (img.width(), img.height());
        let values = img.into_raw().iter().map(|&v| v as f64 / 255.0).collect();
        SpatialMask::new(w, h, values)
    }
}

/// Half-open axis-aligned pixel rectangle: x in [x_min, x_max), y in [y_min, y_max).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BoundingBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self> {
        if x_min >= x_max || y_min >= y_max {
            return Err(Error::InvalidBox(format!(
                "degenerate box [{x_min},{x_max})x[{y_min},{y_max})"
            )));
        }
        Ok(BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn pixel_count(&self) -> u64 {
        (self.x_max - self.x_min) as u64 * (self.y_max - self.y_min) as u64
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.x_max <= width && self.y_max <= height
    }
}

fn extension(path: &Path) -> Option<&str> {
    path.extension().and_then(|e| e.to_str())
}

/// Skip whitespace and `#` comments, then return the next token.
fn next_pnm_token<'a>(data: &'a [u8], cursor: &mut usize) -> Option<&'a [u8]> {
    let mut i = *cursor;
    loop {
        while i < data.len() && data[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < data.len() && data[i] == b'#' {
            while i < data.len() && data[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        break;
    }
    if i >= data.len() {
        return None;
    }
    let start = i;
    while i < data.len() && !data[i].is_ascii_whitespace() {
        i += 1;
    }
    *cursor = i;
    Some(&data[start..i])
}

fn parse_pnm_int(data: &[u8], cursor: &mut usize) -> Option<u32> {
    let tok = next_pnm_token(data, cursor)?;
    std::str::from_utf8(tok).ok()?.parse().ok()
}

//! Grayscale rasters and PNG/PGM input/output.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, Luma};

use crate::error::{Error, Result};

/// Row-major scalar image with intensities nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "image data has {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Loads an 8- or 16-bit grayscale or color image. Color is reduced with
    /// luma = 0.299 R + 0.587 G + 0.114 B.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?;
        Ok(Self::from_dynamic(&img))
    }

    pub fn from_dynamic(img: &DynamicImage) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = match img {
            DynamicImage::ImageLuma8(b) => b.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
            DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
            DynamicImage::ImageLuma16(b) => b.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
            DynamicImage::ImageLumaA16(b) => {
                b.pixels().map(|p| p.0[0] as f64 / 65535.0).collect()
            }
            DynamicImage::ImageRgb16(b) => b.pixels().map(|p| luma(p.0, 65535.0)).collect(),
            DynamicImage::ImageRgba16(b) => {
                b.pixels().map(|p| luma([p.0[0], p.0[1], p.0[2]], 65535.0)).collect()
            }
            other => other
                .to_rgb8()
                .pixels()
                .map(|p| luma(p.0, 255.0))
                .collect(),
        };
        Self {
            width: w,
            height: h,
            data,
        }
    }

    /// Quantizes to 8 bits (values clamped to `[0, 1]`).
    pub fn to_luma8(&self) -> ImageBuffer<Luma<u8>, Vec<u8>> {
        let raw = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        ImageBuffer::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer size matches")
    }

    /// Writes an 8-bit image; the format follows the extension (`.pgm`/`.pnm`
    /// for binary PGM, anything else PNG).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") || ext.eq_ignore_ascii_case("pnm") => {
                ImageFormat::Pnm
            }
            _ => ImageFormat::Png,
        };
        self.to_luma8().save_with_format(path, format)?;
        Ok(())
    }
}

fn luma<T: Into<f64> + Copy>(rgb: [T; 3], max: f64) -> f64 {
    (0.299 * rgb[0].into() + 0.587 * rgb[1].into() + 0.114 * rgb[2].into()) / max
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths_and_nan() {
        assert!(GrayImage::new(3, 3, vec![0.0; 8]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn color_uses_rec601_luma() {
        let rgb = image::RgbImage::from_raw(1, 1, vec![255, 0, 0]).unwrap();
        let g = GrayImage::from_dynamic(&DynamicImage::ImageRgb8(rgb));
        assert!((g.get(0, 0) - 0.299).abs() < 1e-12);
    }

    #[test]
    fn sixteen_bit_scale() {
        let buf = ImageBuffer::<Luma<u16>, _>::from_raw(2, 1, vec![0u16, 65535]).unwrap();
        let g = GrayImage::from_dynamic(&DynamicImage::ImageLuma16(buf));
        assert_eq!(g.data(), &[0.0, 1.0]);
    }

    #[test]
    fn png_and_pgm_round_trip() {
        let dir = std::env::temp_dir().join(format!("plumbline-raster-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let img = GrayImage::from_fn(5, 4, |x, y| ((x * 4 + y) * 12) as f64 / 255.0);
        for name in ["a.png", "a.pgm"] {
            let p = dir.join(name);
            img.save(&p).unwrap();
            let back = GrayImage::load(&p).unwrap();
            assert_eq!(back.width(), 5);
            for (a, b) in back.data().iter().zip(img.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}

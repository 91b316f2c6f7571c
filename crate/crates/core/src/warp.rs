//! Corrected-image generation by inverse mapping and bicubic resampling.

use rayon::prelude::*;

use crate::model::{invert_point, DistortionParams};
use crate::raster::GrayImage;

/// Catmull–Rom (a = −0.5) cubic convolution kernel.
#[inline]
pub fn catmull_rom(t: f64) -> f64 {
    let t = t.abs();
    if t < 1.0 {
        (1.5 * t - 2.5) * t * t + 1.0
    } else if t < 2.0 {
        ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    } else {
        0.0
    }
}

/// Samples `img` at a real-valued position with a 4×4 Catmull–Rom stencil.
/// Returns `None` when the stencil would leave the image.
pub fn sample_bicubic(img: &GrayImage, x: f64, y: f64) -> Option<f64> {
    if !(x.is_finite() && y.is_finite()) {
        return None;
    }
    let (fx, fy) = (x.floor(), y.floor());
    let (x0, y0) = (fx as i64 - 1, fy as i64 - 1);
    if x0 < 0 || y0 < 0 || x0 + 3 >= img.width() as i64 || y0 + 3 >= img.height() as i64 {
        return None;
    }
    let (tx, ty) = (x - fx, y - fy);
    let wx = [
        catmull_rom(tx + 1.0),
        catmull_rom(tx),
        catmull_rom(1.0 - tx),
        catmull_rom(2.0 - tx),
    ];
    let wy = [
        catmull_rom(ty + 1.0),
        catmull_rom(ty),
        catmull_rom(1.0 - ty),
        catmull_rom(2.0 - ty),
    ];
    let mut acc = 0.0;
    for (j, wyj) in wy.iter().enumerate() {
        let row = (y0 as usize) + j;
        let mut r = 0.0;
        for (i, wxi) in wx.iter().enumerate() {
            r += wxi * img.get(x0 as usize + i, row);
        }
        acc += wyj * r;
    }
    Some(acc)
}

/// Output of [`undistort_image`].
#[derive(Debug, Clone, PartialEq)]
pub struct Undistorted {
    pub image: GrayImage,
    /// `true` where the output pixel was sampled from the input.
    pub coverage: Vec<bool>,
}

/// Renders the corrected image `I₁(x′) = I₀(D⁻¹(x′))`.
///
/// Pixels whose preimage is undefined or whose bicubic stencil falls outside
/// the input are black and marked uncovered. Values are clamped to `[0, 1]`.
pub fn undistort_image(
    img: &GrayImage,
    p: &DistortionParams,
    out_width: usize,
    out_height: usize,
) -> Undistorted {
    let samples: Vec<Option<f64>> = (0..out_height)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..out_width).map(move |x| {
                let src = invert_point(p, [x as f64, y as f64]).ok()?;
                sample_bicubic(img, src[0], src[1]).map(|v| v.clamp(0.0, 1.0))
            })
        })
        .collect();
    let coverage = samples.iter().map(Option::is_some).collect();
    let data = samples.into_iter().map(|s| s.unwrap_or(0.0)).collect();
    Undistorted {
        image: GrayImage::new(out_width, out_height, data).expect("sizes match"),
        coverage,
    }
}

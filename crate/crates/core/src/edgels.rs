//! Salient edgel extraction.
//!
//! Finite-difference gradients cast stick votes (in proportion to their
//! magnitude) into a dense 2×2 tensor field. Pixels whose accumulated tensor
//! is strongly oriented, `φ = λmax − e·λmin > 0`, become edgels with the
//! leading eigenvector as normal. The survivors are subsampled per grid cell
//! so that no single region dominates.
//!
//! A stick field gives pixels a few pixels off an edge a positive saliency
//! but a normal turned by up to 90°, so by default only pixels whose
//! gradient magnitude peaks along the gradient direction are candidates.

use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Edgel, Vec2};
use crate::raster::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    /// Scale of the voting kernel in pixels; votes reach `3 * sigma_vote`.
    pub sigma_vote: f64,
    /// Weight `e` on the smaller eigenvalue in the saliency.
    pub e_saliency: f64,
    /// Total number of edgels to keep across all cells.
    pub target_edgels: usize,
    /// Cells per image axis for stratified subsampling.
    pub grid_cells: usize,
    pub rng_seed: u64,
    /// Keep only pixels whose gradient magnitude is a local maximum along
    /// the gradient direction.
    pub suppress_non_maxima: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            sigma_vote: 0.5,
            e_saliency: 2.0,
            target_edgels: 100_000,
            grid_cells: 16,
            rng_seed: 0,
            suppress_non_maxima: true,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_vote > 0.0 && self.sigma_vote.is_finite()) {
            return Err(Error::invalid("sigma_vote must be positive"));
        }
        if !(self.e_saliency > 0.0 && self.e_saliency.is_finite()) {
            return Err(Error::invalid("e_saliency must be positive"));
        }
        if self.grid_cells == 0 {
            return Err(Error::invalid("grid_cells must be positive"));
        }
        if self.target_edgels < self.grid_cells * self.grid_cells {
            return Err(Error::invalid(format!(
                "target_edgels {} is smaller than the {} grid cells",
                self.target_edgels,
                self.grid_cells * self.grid_cells
            )));
        }
        Ok(())
    }

    /// Maximum number of edgels a single grid cell may contribute.
    pub fn cell_quota(&self) -> usize {
        self.target_edgels.div_ceil(self.grid_cells * self.grid_cells)
    }
}

/// Per-pixel 2-vector field, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Vec2>,
}

impl VectorField {
    pub fn get(&self, x: usize, y: usize) -> Vec2 {
        self.data[y * self.width + x]
    }
}

/// Symmetric 2×2 tensor per pixel, stored as `[t11, t12, t22]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl TensorField {
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }
}

/// Saliency and unit normal of one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saliency {
    pub phi: f64,
    pub normal: Vec2,
}

/// Central differences in the interior, one-sided differences on the border.
pub fn gradient(img: &GrayImage) -> Result<VectorField> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid(format!(
            "image {w}x{h} is too small for gradients (need at least 3x3)"
        )));
    }
    let diff = |lo: f64, hi: f64, span: usize| (hi - lo) / span as f64;
    let data = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).map(move |x| {
                let gx = match x {
                    0 => diff(img.get(0, y), img.get(1, y), 1),
                    _ if x == w - 1 => diff(img.get(x - 1, y), img.get(x, y), 1),
                    _ => diff(img.get(x - 1, y), img.get(x + 1, y), 2),
                };
                let gy = match y {
                    0 => diff(img.get(x, 0), img.get(x, 1), 1),
                    _ if y == h - 1 => diff(img.get(x, y - 1), img.get(x, y), 1),
                    _ => diff(img.get(x, y - 1), img.get(x, y + 1), 2),
                };
                [gx, gy]
            })
        })
        .collect();
    Ok(VectorField {
        width: w,
        height: h,
        data,
    })
}

struct Offset {
    dx: isize,
    dy: isize,
    len: f64,
    dir: Vec2,
}

fn kernel_offsets(sigma: f64) -> Vec<Offset> {
    let reach = 3.0 * sigma;
    let r = reach.floor() as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let len = ((dx * dx + dy * dy) as f64).sqrt();
            if len > reach {
                continue;
            }
            let dir = if len > 0.0 {
                [dx as f64 / len, dy as f64 / len]
            } else {
                [0.0, 0.0]
            };
            out.push(Offset { dx, dy, len, dir });
        }
    }
    out
}

/// Stick vote cast by a voter with unit normal `n` and magnitude `m` onto a
/// receiver displaced by `len * dir`.
///
/// The receiver lies on the circle tangent to the voter's edge; its decay is
/// `exp(-(s² + κ k²) / σ²)` with arc length `s`, curvature `k` and
/// `κ = σ²/4`. Receivers more than 45° off the tangent get nothing.
#[inline]
fn stick_vote(n: Vec2, m: f64, len: f64, dir: Vec2, sigma: f64) -> Option<[f64; 3]> {
    if len == 0.0 {
        return Some([m * n[0] * n[0], m * n[0] * n[1], m * n[1] * n[1]]);
    }
    let t = [-n[1], n[0]];
    let along = t[0] * dir[0] + t[1] * dir[1];
    let across = n[0] * dir[0] + n[1] * dir[1];
    let (cos_t, sin_t) = (along.abs(), across.abs());
    if sin_t > cos_t {
        return None;
    }
    let theta = sin_t.atan2(cos_t);
    let arc = if sin_t > 0.0 { theta * len / sin_t } else { len };
    let curvature = 2.0 * sin_t / len;
    let s2 = sigma * sigma;
    let weight = m * (-(arc * arc + 0.25 * s2 * curvature * curvature) / s2).exp();
    // Tangent at the receiver is the voter tangent reflected about the chord.
    let tr = [2.0 * along * dir[0] - t[0], 2.0 * along * dir[1] - t[1]];
    let nr = [-tr[1], tr[0]];
    Some([
        weight * nr[0] * nr[0],
        weight * nr[0] * nr[1],
        weight * nr[1] * nr[1],
    ])
}

/// Dense stick tensor voting.
///
/// Every receiving pixel sums the votes of its neighbors in a fixed offset
/// order, so the field does not depend on the number of worker threads.
pub fn tensor_vote(grad: &VectorField, sigma: f64) -> Result<TensorField> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("voting sigma must be positive"));
    }
    let (w, h) = (grad.width, grad.height);
    let offsets = kernel_offsets(sigma);
    let voters: Vec<Option<(Vec2, f64)>> = grad
        .data
        .iter()
        .map(|g| {
            let m = g[0].hypot(g[1]);
            (m > 0.0).then(|| ([g[0] / m, g[1] / m], m))
        })
        .collect();

    let data = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            let voters = &voters;
            let offsets = &offsets;
            (0..w).map(move |x| {
                let mut acc = [0.0; 3];
                for o in offsets {
                    let vx = x as isize - o.dx;
                    let vy = y as isize - o.dy;
                    if vx < 0 || vy < 0 || vx >= w as isize || vy >= h as isize {
                        continue;
                    }
                    let Some((n, m)) = voters[vy as usize * w + vx as usize] else {
                        continue;
                    };
                    if let Some(v) = stick_vote(n, m, o.len, o.dir, sigma) {
                        acc[0] += v[0];
                        acc[1] += v[1];
                        acc[2] += v[2];
                    }
                }
                acc
            })
        })
        .collect();
    Ok(TensorField {
        width: w,
        height: h,
        data,
    })
}

/// Eigenvalues `(λmax, λmin)` of a symmetric 2×2 tensor.
pub fn eigenvalues(t: [f64; 3]) -> (f64, f64) {
    let mean = 0.5 * (t[0] + t[2]);
    let half_diff = 0.5 * (t[0] - t[2]);
    let disc = half_diff.hypot(t[1]);
    (mean + disc, mean - disc)
}

/// `φ = λmax − e·λmin` and the eigenvector of `λmax`, oriented with a
/// nonnegative x component (nonnegative y on ties). A tensor without a
/// preferred direction gets normal `(1, 0)`.
pub fn saliency(t: [f64; 3], e: f64) -> Saliency {
    let (l1, l2) = eigenvalues(t);
    let phi = l1 - e * l2;
    let v = if t[0] >= t[2] {
        [l1 - t[2], t[1]]
    } else {
        [t[1], l1 - t[0]]
    };
    let len = v[0].hypot(v[1]);
    let mut normal = if len > 0.0 {
        [v[0] / len, v[1] / len]
    } else {
        [1.0, 0.0]
    };
    if normal[0] < 0.0 || (normal[0] == 0.0 && normal[1] < 0.0) {
        normal = [-normal[0], -normal[1]];
    }
    // Avoid -0.0 leaking into the outputs.
    normal = [normal[0] + 0.0, normal[1] + 0.0];
    Saliency { phi, normal }
}

pub fn saliency_and_normals(t: &TensorField, e: f64) -> Vec<Saliency> {
    t.data.par_iter().map(|&m| saliency(m, e)).collect()
}

/// `true` where the gradient magnitude is positive and not exceeded by either
/// neighbor along the gradient direction (rounded to the 8-neighborhood).
/// Plateaus keep the pixel only if it is strictly above one side.
pub fn gradient_maxima(grad: &VectorField) -> Vec<bool> {
    let (w, h) = (grad.width, grad.height);
    let mag = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            return 0.0;
        }
        let g = grad.data[y as usize * w + x as usize];
        g[0].hypot(g[1])
    };
    (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).map(move |x| {
                let g = grad.data[y * w + x];
                let m = g[0].hypot(g[1]);
                if m == 0.0 {
                    return false;
                }
                let sx = (g[0] / m).round() as isize;
                let sy = (g[1] / m).round() as isize;
                let (x, y) = (x as isize, y as isize);
                let fwd = mag(x + sx, y + sy);
                let back = mag(x - sx, y - sy);
                (m >= fwd && m > back) || (m > fwd && m >= back)
            })
        })
        .collect()
}

/// Full extraction pipeline: gradient, voting, saliency threshold at zero,
/// optional gradient non-maximum suppression, then stratified subsampling. Returned edgels carry `φ` as their weight and
/// are ordered by grid cell, then by raster order within a cell.
pub fn extract_edgels(img: &GrayImage, cfg: &ExtractionConfig) -> Result<Vec<Edgel>> {
    cfg.validate()?;
    let mut grad = gradient(img)?;
    let peaks = cfg.suppress_non_maxima.then(|| gradient_maxima(&grad));
    if let Some(p) = &peaks {
        for (g, keep) in grad.data.iter_mut().zip(p) {
            if !keep {
                *g = [0.0, 0.0];
            }
        }
    }
    let tensors = tensor_vote(&grad, cfg.sigma_vote)?;
    let sal = saliency_and_normals(&tensors, cfg.e_saliency);

    let (w, h) = (img.width(), img.height());
    let cells = cfg.grid_cells;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    for y in 0..h {
        let cy = y * cells / h;
        for x in 0..w {
            let i = y * w + x;
            if sal[i].phi > 0.0 && peaks.as_ref().is_none_or(|p| p[i]) {
                buckets[cy * cells + x * cells / w].push(i);
            }
        }
    }

    let quota = cfg.cell_quota();
    let mut out = Vec::new();
    for (cell, bucket) in buckets.iter().enumerate() {
        let chosen: Vec<usize> = if bucket.len() <= quota {
            bucket.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(cell as u64);
            let mut picks: Vec<usize> = sample(&mut rng, bucket.len(), quota)
                .into_iter()
                .map(|k| bucket[k])
                .collect();
            picks.sort_unstable();
            picks
        };
        out.extend(chosen.into_iter().map(|i| Edgel {
            position: [(i % w) as f64, (i / w) as f64],
            normal: sal[i].normal,
            weight: sal[i].phi,
        }));
    }
    Ok(out)
}

/// Writes `x,y,nx,ny,weight` with a header row.
pub fn write_edgels_csv<W: Write>(mut out: W, edgels: &[Edgel]) -> std::io::Result<()> {
    writeln!(out, "x,y,nx,ny,weight")?;
    for e in edgels {
        writeln!(
            out,
            "{},{},{},{},{}",
            e.position[0], e.position[1], e.normal[0], e.normal[1], e.weight
        )?;
    }
    Ok(())
}

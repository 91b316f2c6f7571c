//! Synthetic plumb-line scenes and multi-trial recovery studies.
//!
//! A scene is a set of edgels sampled on straight lines, pushed through a
//! barrel-distorting Harris map `ρ ↦ ρ / sqrt(1 + γρ²)` (γ > 0), plus clutter
//! edgels that belong to no line. The correction that undoes the distortion
//! has Harris coefficient `−γ`; studies report the recovered *distortion*
//! coefficient, i.e. the negated correction coefficient, so it is directly
//! comparable with `gamma_true`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{correct_point, norm, sub, transform_edgel, DistortionParams, Edgel, Vec2};
use crate::optim::{mcdh_calibrate, ImageDims, OptimConfig};
use crate::raster::GrayImage;

const MAX_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClutterKind {
    UncorrelatedPoints,
    CorrelatedEllipses,
}

impl fmt::Display for ClutterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClutterKind::UncorrelatedPoints => "points",
            ClutterKind::CorrelatedEllipses => "ellipses",
        })
    }
}

impl FromStr for ClutterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "points" => Ok(ClutterKind::UncorrelatedPoints),
            "ellipses" => Ok(ClutterKind::CorrelatedEllipses),
            other => Err(Error::invalid(format!(
                "unknown clutter kind {other:?} (expected points or ellipses)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    /// Side of the square image in pixels.
    pub size: usize,
    pub n_lines: usize,
    pub pts_per_line: usize,
    /// No line point may lie closer than this to the image center.
    pub center_exclusion: f64,
    /// Harris coefficient of the applied (barrel) distortion.
    pub gamma_true: f64,
    /// Fraction of all edgels that are clutter, in `[0, 1)`.
    pub noise_fraction: f64,
    pub clutter_kind: ClutterKind,
    /// Standard deviation of the per-edgel normal angle error, radians.
    pub orientation_noise_sigma: f64,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            size: 250,
            n_lines: 5,
            pts_per_line: 10,
            center_exclusion: 60.0,
            gamma_true: 1e-5,
            noise_fraction: 0.0,
            clutter_kind: ClutterKind::UncorrelatedPoints,
            orientation_noise_sigma: 0.02,
            rng_seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 8 || self.n_lines == 0 || self.pts_per_line == 0 {
            return Err(Error::invalid("scene needs a size ≥ 8 and at least one line point"));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::invalid(format!(
                "noise_fraction {} must lie in [0, 1)",
                self.noise_fraction
            )));
        }
        if !(self.center_exclusion >= 0.0 && self.orientation_noise_sigma >= 0.0) {
            return Err(Error::invalid("exclusion radius and orientation noise must be ≥ 0"));
        }
        if !self.gamma_true.is_finite() {
            return Err(Error::invalid("gamma_true must be finite"));
        }
        Ok(())
    }

    pub fn dims(&self) -> ImageDims {
        ImageDims::new(self.size, self.size)
    }

    /// Number of clutter edgels that makes them `noise_fraction` of the total.
    pub fn clutter_count(&self) -> usize {
        let lines = (self.n_lines * self.pts_per_line) as f64;
        (self.noise_fraction * lines / (1.0 - self.noise_fraction)).round() as usize
    }
}

/// A straight line `normal · x = offset` in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub normal: Vec2,
    pub offset: f64,
}

impl Line {
    pub fn distance(&self, p: Vec2) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] - self.offset
    }

    /// Intersection of the line with the rectangle `[0, w] × [0, h]`.
    pub fn clip(&self, w: f64, h: f64) -> Option<(Vec2, Vec2)> {
        let [nx, ny] = self.normal;
        let mut hits: Vec<Vec2> = Vec::with_capacity(4);
        if nx.abs() > 1e-12 {
            for y in [0.0, h] {
                let x = (self.offset - ny * y) / nx;
                if (0.0..=w).contains(&x) {
                    hits.push([x, y]);
                }
            }
        }
        if ny.abs() > 1e-12 {
            for x in [0.0, w] {
                let y = (self.offset - nx * x) / ny;
                if (0.0..=h).contains(&y) {
                    hits.push([x, y]);
                }
            }
        }
        let mut best: Option<(Vec2, Vec2, f64)> = None;
        for i in 0..hits.len() {
            for j in i + 1..hits.len() {
                let d = norm(sub(hits[i], hits[j]));
                if best.is_none_or(|b| d > b.2) {
                    best = Some((hits[i], hits[j], d));
                }
            }
        }
        best.filter(|b| b.2 > 0.0).map(|b| (b.0, b.1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Line edgels first, then clutter.
    pub edgels: Vec<Edgel>,
    /// The correction that undoes the applied distortion.
    pub ground_truth: DistortionParams,
    /// Undistorted lines the line edgels were sampled from.
    pub lines: Vec<Line>,
    pub n_line_edgels: usize,
}

impl Scene {
    pub fn line_edgels(&self) -> &[Edgel] {
        &self.edgels[..self.n_line_edgels]
    }
}

fn unit(angle: f64) -> Vec2 {
    [angle.cos(), angle.sin()]
}

/// Generates one seeded scene.
pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let size = cfg.size as f64;
    let centre = [size / 2.0, size / 2.0];
    let distortion = DistortionParams::radial(centre, cfg.gamma_true);
    let ground_truth = DistortionParams::radial(centre, -cfg.gamma_true);
    let angle_noise = Normal::new(0.0, cfg.orientation_noise_sigma)
        .map_err(|e| Error::invalid(format!("orientation noise: {e}")))?;

    let mut lines = Vec::with_capacity(cfg.n_lines);
    let mut edgels = Vec::new();
    let mut spacing_sum = 0.0;
    let mut attempts = 0;
    while lines.len() < cfg.n_lines {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::SceneGeneration(format!(
                "could not place {} lines outside the {}px exclusion after {} attempts",
                cfg.n_lines, cfg.center_exclusion, MAX_ATTEMPTS
            )));
        }
        let normal = unit(rng.random_range(0.0..PI));
        let d = rng.random_range(-size / 2.0..size / 2.0);
        let line = Line {
            normal,
            offset: normal[0] * centre[0] + normal[1] * centre[1] + d,
        };
        let Some((a, b)) = line.clip(size, size) else {
            continue;
        };
        let n = cfg.pts_per_line;
        let ideal: Vec<Vec2> = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            })
            .collect();
        let distorted: Vec<Vec2> = ideal
            .iter()
            .map(|p| correct_point(&distortion, *p))
            .collect::<Result<_>>()?;
        if distorted
            .iter()
            .any(|p| norm(sub(*p, centre)) < cfg.center_exclusion)
        {
            continue;
        }
        for p in &ideal {
            let theta = normal[1].atan2(normal[0]) + angle_noise.sample(&mut rng);
            edgels.push(transform_edgel(&distortion, &Edgel::new(*p, unit(theta)))?);
        }
        spacing_sum += norm(sub(b, a)) / n as f64;
        lines.push(line);
    }
    let n_line_edgels = edgels.len();
    let spacing = spacing_sum / cfg.n_lines as f64;

    let wanted = cfg.clutter_count();
    let inside = |p: Vec2| {
        (0.0..=size).contains(&p[0])
            && (0.0..=size).contains(&p[1])
            && norm(sub(p, centre)) >= cfg.center_exclusion
    };
    let mut attempts = 0;
    let mut clutter = Vec::with_capacity(wanted);
    while clutter.len() < wanted {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(Error::SceneGeneration(format!(
                "could not place {wanted} clutter edgels after {MAX_ATTEMPTS} attempts"
            )));
        }
        match cfg.clutter_kind {
            ClutterKind::UncorrelatedPoints => {
                let p = [rng.random_range(0.0..size), rng.random_range(0.0..size)];
                if inside(p) {
                    clutter.push(Edgel::new(p, unit(rng.random_range(0.0..PI))));
                }
            }
            ClutterKind::CorrelatedEllipses => {
                let ellipse = Ellipse {
                    centre: [rng.random_range(0.0..size), rng.random_range(0.0..size)],
                    semi_axes: [
                        rng.random_range(10.0..=size / 3.0),
                        rng.random_range(10.0..=size / 3.0),
                    ],
                    orientation: rng.random_range(0.0..PI),
                };
                let phase = rng.random_range(0.0..1.0);
                for e in ellipse.sample(spacing, phase) {
                    if clutter.len() == wanted {
                        break;
                    }
                    if inside(e.position) {
                        clutter.push(e);
                    }
                }
            }
        }
    }
    edgels.extend(clutter);

    Ok(Scene {
        edgels,
        ground_truth,
        lines,
        n_line_edgels,
    })
}

struct Ellipse {
    centre: Vec2,
    semi_axes: [f64; 2],
    orientation: f64,
}

impl Ellipse {
    fn local(&self, t: f64) -> (Vec2, Vec2) {
        let (s, c) = self.orientation.sin_cos();
        let [a, b] = self.semi_axes;
        let p = [a * t.cos(), b * t.sin()];
        let n = [b * t.cos(), a * t.sin()];
        let rot = |v: Vec2| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
        let pr = rot(p);
        (
            [self.centre[0] + pr[0], self.centre[1] + pr[1]],
            rot(n),
        )
    }

    /// Edgels at (approximately) equal arc-length `spacing` around the
    /// ellipse, starting `phase` of a step in.
    fn sample(&self, spacing: f64, phase: f64) -> Vec<Edgel> {
        const STEPS: usize = 2048;
        let mut out = Vec::new();
        let mut travelled = 0.0;
        let mut next = phase * spacing;
        let mut prev = self.local(0.0).0;
        for k in 1..=STEPS {
            let t = 2.0 * PI * k as f64 / STEPS as f64;
            let (p, n) = self.local(t);
            travelled += norm(sub(p, prev));
            prev = p;
            while travelled >= next {
                out.push(Edgel::new(p, n));
                next += spacing;
            }
        }
        out
    }
}

/// Renders bright lines with a Gaussian cross-section of standard deviation
/// `blur` (in undistorted pixels) on a black background, as seen through a
/// lens whose correction is `correction`: a pixel at `x` shows the scene at
/// `correct_point(x)`. Pixels outside the model's domain stay black.
pub fn render_lines(
    width: usize,
    height: usize,
    lines: &[Line],
    correction: &DistortionParams,
    blur: f64,
) -> GrayImage {
    let two_s2 = 2.0 * blur * blur;
    let data: Vec<f64> = (0..height)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..width).map(move |x| {
                let Ok(u) = correct_point(correction, [x as f64, y as f64]) else {
                    return 0.0;
                };
                lines
                    .iter()
                    .map(|l| {
                        let d = l.distance(u);
                        (-d * d / two_s2).exp()
                    })
                    .fold(0.0, f64::max)
            })
        })
        .collect();
    GrayImage::new(width, height, data).expect("sizes match")
}

/// One calibration inside a study.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub gamma_true: f64,
    pub noise: f64,
    pub kind: ClutterKind,
    pub trial: usize,
    /// Recovered distortion coefficient (negated correction γ); `None` if the
    /// trial failed.
    pub gamma_recovered: Option<f64>,
    pub cost: Option<f64>,
    pub error: Option<String>,
}

/// Percentile summary of one (γ, noise) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub gamma_true: f64,
    pub noise: f64,
    pub kind: ClutterKind,
    pub trials: usize,
    pub failed: usize,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

impl CellSummary {
    pub fn band_width(&self) -> f64 {
        self.p90 - self.p10
    }

    pub fn relative_median_error(&self) -> f64 {
        ((self.median - self.gamma_true) / self.gamma_true).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub trials: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` of cell `cell`, independent of scheduling.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    splitmix64(master ^ splitmix64((cell as u64) << 32 ^ trial as u64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub gammas: Vec<f64>,
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    pub kind: ClutterKind,
    /// Template for every scene; γ, noise, kind and seed are overwritten.
    pub scene: SceneConfig,
    /// Template for every calibration; the seed is overwritten.
    pub optim: OptimConfig,
    pub bins: usize,
    pub master_seed: u64,
}

/// Runs every (γ, noise) cell `trials` times and summarizes the recovered γ.
pub fn run_study(cfg: &StudyConfig) -> Result<TrialReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if cfg.gammas.is_empty() || cfg.noise_levels.is_empty() {
        return Err(Error::invalid("need at least one gamma and one noise level"));
    }
    for &noise in &cfg.noise_levels {
        if !(0.0..1.0).contains(&noise) {
            return Err(Error::invalid(format!("noise level {noise} must lie in [0, 1)")));
        }
    }
    let jobs: Vec<(usize, f64, f64, usize)> = cfg
        .gammas
        .iter()
        .flat_map(|&g| cfg.noise_levels.iter().map(move |&n| (g, n)))
        .enumerate()
        .flat_map(|(cell, (g, n))| (0..cfg.trials).map(move |t| (cell, g, n, t)))
        .collect();

    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(cell, gamma, noise, trial)| {
            let seed = trial_seed(cfg.master_seed, cell, trial);
            let scene_cfg = SceneConfig {
                gamma_true: gamma,
                noise_fraction: noise,
                clutter_kind: cfg.kind,
                rng_seed: seed,
                ..cfg.scene.clone()
            };
            let optim_cfg = OptimConfig {
                rng_seed: splitmix64(seed),
                ..cfg.optim.clone()
            };
            let outcome = generate_scene(&scene_cfg).and_then(|scene| {
                mcdh_calibrate(&scene.edgels, scene_cfg.dims(), &optim_cfg, cfg.bins)
            });
            let (gamma_recovered, cost, error) = match outcome {
                Ok(cal) => (Some(-cal.params.gamma), Some(cal.cost), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            TrialRecord {
                gamma_true: gamma,
                noise,
                kind: cfg.kind,
                trial,
                gamma_recovered,
                cost,
                error,
            }
        })
        .collect();

    let cells = trials
        .chunks(cfg.trials)
        .map(|chunk| {
            let mut values: Vec<f64> = chunk.iter().filter_map(|t| t.gamma_recovered).collect();
            values.sort_by(f64::total_cmp);
            CellSummary {
                gamma_true: chunk[0].gamma_true,
                noise: chunk[0].noise,
                kind: cfg.kind,
                trials: chunk.len(),
                failed: chunk.len() - values.len(),
                median: percentile(&values, 0.5),
                p10: percentile(&values, 0.1),
                p90: percentile(&values, 0.9),
            }
        })
        .collect();
    Ok(TrialReport { trials, cells })
}

impl TrialReport {
    /// `gamma_true,noise,kind,trial,gamma_recovered,cost`; failed trials leave
    /// the last two fields empty.
    pub fn write_trials_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "gamma_true,noise,kind,trial,gamma_recovered,cost")?;
        for t in &self.trials {
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t.gamma_true,
                t.noise,
                t.kind,
                t.trial,
                opt(t.gamma_recovered),
                opt(t.cost)
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "gamma_true,noise,kind,trials,failed,median,p10,p90")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.gamma_true, c.noise, c.kind, c.trials, c.failed, c.median, c.p10, c.p90
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{harris_f, invert_point};

    #[test]
    fn clutter_arithmetic() {
        let cfg = SceneConfig {
            noise_fraction: 0.5,
            ..Default::default()
        };
        assert_eq!(cfg.clutter_count(), 50);
        let scene = generate_scene(&cfg).unwrap();
        assert_eq!(scene.n_line_edgels, 50);
        assert_eq!(scene.edgels.len(), 100);
    }

    #[test]
    fn clutter_fraction_is_exact_for_every_kind() {
        for kind in [ClutterKind::UncorrelatedPoints, ClutterKind::CorrelatedEllipses] {
            for k in 0..8 {
                let noise = k as f64 / 10.0;
                let cfg = SceneConfig {
                    noise_fraction: noise,
                    clutter_kind: kind,
                    rng_seed: k,
                    ..Default::default()
                };
                let scene = generate_scene(&cfg).unwrap();
                let clutter = scene.edgels.len() - scene.n_line_edgels;
                let ideal = noise * scene.edgels.len() as f64;
                assert!((clutter as f64 - ideal).abs() <= 1.0, "{kind} {noise}");
            }
        }
    }

    #[test]
    fn undistorted_lines_are_exact() {
        let cfg = SceneConfig {
            gamma_true: 0.0,
            orientation_noise_sigma: 0.0,
            ..Default::default()
        };
        let scene = generate_scene(&cfg).unwrap();
        for (i, e) in scene.line_edgels().iter().enumerate() {
            let line = scene.lines[i / cfg.pts_per_line];
            assert!(line.distance(e.position).abs() < 1e-9);
            let cross = e.normal[0] * line.normal[1] - e.normal[1] * line.normal[0];
            assert!(cross.abs() < 1e-12);
            assert!(norm(sub(e.position, [125.0, 125.0])) >= 60.0);
        }
    }

    #[test]
    fn orientation_noise_perturbs_normals_only() {
        let base = SceneConfig {
            gamma_true: 0.0,
            ..Default::default()
        };
        let scene = generate_scene(&base).unwrap();
        let mut spread = 0.0;
        for (i, e) in scene.line_edgels().iter().enumerate() {
            let line = scene.lines[i / base.pts_per_line];
            assert!(line.distance(e.position).abs() < 1e-9);
            let cross = e.normal[0] * line.normal[1] - e.normal[1] * line.normal[0];
            spread += cross * cross;
        }
        let rms = (spread / scene.n_line_edgels as f64).sqrt();
        let sigma = base.orientation_noise_sigma;
        assert!(rms > 0.5 * sigma && rms < 2.0 * sigma, "rms angle error {rms}");
    }

    #[test]
    fn barrel_displacement_matches_harris() {
        let cfg = SceneConfig::default();
        let bent = generate_scene(&cfg).unwrap();
        let c = [125.0, 125.0];
        let distortion = DistortionParams::radial(c, cfg.gamma_true);
        for (i, e) in bent.line_edgels().iter().enumerate() {
            let ideal = invert_point(&distortion, e.position).unwrap();
            assert!(bent.lines[i / cfg.pts_per_line].distance(ideal).abs() < 1e-9);
            let rho = norm(sub(ideal, c));
            let rho_d = norm(sub(e.position, c));
            assert!(rho_d < rho, "barrel distortion moves points inward");
            let expected = rho - harris_f(cfg.gamma_true, rho).unwrap();
            assert!(((rho - rho_d) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn ground_truth_straightens_lines() {
        let scene = generate_scene(&SceneConfig {
            orientation_noise_sigma: 0.0,
            gamma_true: 2e-5,
            ..Default::default()
        })
        .unwrap();
        for (i, e) in scene.line_edgels().iter().enumerate() {
            let line = scene.lines[i / 10];
            let back = transform_edgel(&scene.ground_truth, e).unwrap();
            assert!(line.distance(back.position).abs() < 1e-9);
            let cross = back.normal[0] * line.normal[1] - back.normal[1] * line.normal[0];
            assert!(cross.abs() < 1e-9);
        }
    }

    #[test]
    fn scenes_are_seeded() {
        let cfg = SceneConfig {
            noise_fraction: 0.4,
            clutter_kind: ClutterKind::CorrelatedEllipses,
            rng_seed: 99,
            ..Default::default()
        };
        assert_eq!(generate_scene(&cfg).unwrap(), generate_scene(&cfg).unwrap());
        let other = SceneConfig {
            rng_seed: 100,
            ..cfg.clone()
        };
        assert_ne!(generate_scene(&cfg).unwrap(), generate_scene(&other).unwrap());
    }

    #[test]
    fn impossible_exclusion_fails() {
        let cfg = SceneConfig {
            center_exclusion: 400.0,
            ..Default::default()
        };
        assert!(matches!(generate_scene(&cfg), Err(Error::SceneGeneration(_))));
        let bad = SceneConfig {
            noise_fraction: 1.0,
            ..Default::default()
        };
        assert!(generate_scene(&bad).is_err());
    }

    #[test]
    fn percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert!((percentile(&v, 0.1) - 1.4).abs() < 1e-12);
        assert!((percentile(&v, 0.9) - 4.6).abs() < 1e-12);
        assert!(percentile(&[], 0.5).is_nan());
    }

    #[test]
    fn clip_square() {
        let l = Line {
            normal: [1.0, 0.0],
            offset: 30.0,
        };
        let (a, b) = l.clip(100.0, 50.0).unwrap();
        assert_eq!(a[0], 30.0);
        assert_eq!((a[1] - b[1]).abs(), 50.0);
        let outside = Line {
            normal: [0.0, 1.0],
            offset: -5.0,
        };
        assert!(outside.clip(100.0, 50.0).is_none());
    }

    #[test]
    fn render_draws_lines_where_expected() {
        let l = Line {
            normal: [0.0, 1.0],
            offset: 20.0,
        };
        let img = render_lines(40, 40, &[l], &DistortionParams::identity([20.0, 20.0]), 1.5);
        assert_eq!(img.get(10, 20), 1.0);
        assert!((img.get(10, 21) - (-1.0f64 / 4.5).exp()).abs() < 1e-12);
        assert!(img.get(10, 30) < 1e-9);
    }
}

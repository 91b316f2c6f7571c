//! Entropy minimization over scaled distortion parameters.
//!
//! Each Monte-Carlo restart draws a random start around the image center,
//! runs a downhill simplex on the Hough entropy, and the best restart wins.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hough::{entropy_of, OrientationHistogram};
use crate::model::{transform_normal, DistortionParams, Edgel, Vec2};

/// Width and height of the image the edgels came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageDims {
    pub width: usize,
    pub height: usize,
}

impl ImageDims {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    /// The image center `c̃`.
    pub fn center(&self) -> Vec2 {
        [self.width as f64 / 2.0, self.height as f64 / 2.0]
    }

    /// Whether `p` lies in the closed image rectangle `[0, w] × [0, h]`.
    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.width as f64).contains(&p[0]) && (0.0..=self.height as f64).contains(&p[1])
    }

    /// `ρ_max = |c̃|`.
    pub fn rho_max(&self) -> f64 {
        let c = self.center();
        c[0].hypot(c[1])
    }
}

const BETA_SCALE: f64 = 100.0;
const ANISOTROPY_SCALE: f64 = 1e5;

/// Plausible lenses keep `|γ| ρ_max² ≤ 1`. Outside that range the entropy
/// has degenerate minima: large positive γ collapses the image onto a small
/// circle, large negative γ discards the periphery.
pub const MAX_ABS_BETA: f64 = BETA_SCALE;

/// Optimization coordinates `[c1, c2, β, d1..d6]` with `β = 100 γ ρ_max²`
/// and `d_i = 10⁵ b_i`, which puts every coordinate at a comparable scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParamVector(pub [f64; 9]);

impl ScaledParamVector {
    pub fn from_params(p: &DistortionParams, rho_max: f64) -> Self {
        let mut v = [0.0; 9];
        v[0] = p.c[0];
        v[1] = p.c[1];
        v[2] = p.gamma * (BETA_SCALE * rho_max * rho_max);
        for (d, b) in v[3..].iter_mut().zip(p.b) {
            *d = b * ANISOTROPY_SCALE;
        }
        Self(v)
    }

    pub fn to_params(&self, rho_max: f64) -> DistortionParams {
        let v = &self.0;
        let mut b = [0.0; 6];
        for (b, d) in b.iter_mut().zip(&v[3..]) {
            *b = d / ANISOTROPY_SCALE;
        }
        DistortionParams {
            c: [v[0], v[1]],
            gamma: v[2] / (BETA_SCALE * rho_max * rho_max),
            b,
        }
    }
}

/// Which coordinates the optimizer may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelMode {
    /// Center and β only; the anisotropy stays at zero.
    Radial,
    /// All nine coordinates.
    Anisotropic,
}

impl ModelMode {
    fn free_dims(self) -> usize {
        match self {
            ModelMode::Radial => 3,
            ModelMode::Anisotropic => 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub residual_tol: f64,
    pub rng_seed: u64,
    /// Start centers are drawn with standard deviation `fraction * |c̃|`.
    pub center_sigma_fraction: f64,
    /// Standard deviation of the starting β. Draws outside
    /// `±MAX_ABS_BETA` are rejected and redrawn.
    pub beta_sigma: f64,
    pub mode: ModelMode,
    /// Calibration refuses edgel sets smaller than this.
    pub min_edgels: usize,
    /// Initial simplex offset along each scaled coordinate.
    pub simplex_step: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            restarts: 120,
            max_iters: 1000,
            residual_tol: 1e-15,
            rng_seed: 0,
            center_sigma_fraction: 1.0 / 20.0,
            beta_sigma: 100.0,
            mode: ModelMode::Anisotropic,
            min_edgels: 100,
            simplex_step: 1.0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.residual_tol)
            || !positive(self.center_sigma_fraction)
            || !positive(self.beta_sigma)
            || !positive(self.simplex_step)
        {
            return Err(Error::invalid(
                "residual_tol, center_sigma_fraction, beta_sigma and simplex_step must be positive",
            ));
        }
        Ok(())
    }
}

/// Hough entropy of the edgels after correction with `v`.
///
/// Edgels the model cannot transform are skipped; when more than half are
/// lost the parameters count as infeasible and the cost is `+∞`. So are
/// centers outside the image and `|β|` beyond [`MAX_ABS_BETA`]: both admit
/// near-singular maps that squeeze every normal into a few bins.
pub fn cost(edgels: &[Edgel], dims: ImageDims, v: &ScaledParamVector, bins: usize) -> f64 {
    if edgels.is_empty() {
        return f64::INFINITY;
    }
    let p = v.to_params(dims.rho_max());
    if !(p.gamma.is_finite() && p.c.iter().chain(&p.b).all(|x| x.is_finite())) {
        return f64::INFINITY;
    }
    if v.0[2].abs() > MAX_ABS_BETA || !dims.contains(p.c) {
        return f64::INFINITY;
    }
    let mut hist = match OrientationHistogram::zeros(bins) {
        Ok(h) => h,
        Err(_) => return f64::INFINITY,
    };
    let mut dropped = 0usize;
    for e in edgels {
        match transform_normal(&p, e) {
            Ok(n) => hist.vote(n),
            Err(_) => dropped += 1,
        }
    }
    if 2 * dropped > edgels.len() || dropped == edgels.len() {
        return f64::INFINITY;
    }
    entropy_of(hist.bins(), (edgels.len() - dropped) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexSettings {
    pub max_iters: usize,
    pub residual_tol: f64,
    /// Offset of each initial vertex from the start point along one axis.
    pub step: f64,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            residual_tol: 1e-15,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iters: usize,
}

/// Relative spread `|s_best − s_worst| / |s_best|` of the simplex; zero when
/// best and worst coincide.
fn residual(best: &[f64], worst: &[f64], f_best: f64, f_worst: f64) -> f64 {
    if f_best == f_worst || best == worst {
        return 0.0;
    }
    let diff = best
        .iter()
        .zip(worst)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale = best.iter().map(|a| a * a).sum::<f64>().sqrt();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Nelder–Mead minimization with reflection 1, expansion 2, contraction ½
/// and shrink ½. The start simplex is `x0` plus `x0 + step·e_i` for each axis.
///
/// Stops when the residual drops below `residual_tol` or after `max_iters`
/// iterations. `f` may return `+∞` to mark infeasible points.
pub fn downhill_simplex<F>(mut f: F, x0: &[f64], settings: &SimplexSettings) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += settings.step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut iters = 0;
    let mut order: Vec<usize> = (0..=n).collect();

    loop {
        // Stable sort keeps lower vertex indices first among equal values.
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let (best, worst, next_worst) = (order[0], order[n], order[n.saturating_sub(1)]);
        if n == 0
            || residual(&pts[best], &pts[worst], vals[best], vals[worst]) < settings.residual_tol
            || iters >= settings.max_iters
        {
            break;
        }
        iters += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, x)| c + t * (x - c))
                .collect()
        };

        let reflected = along(-REFLECT, &pts[worst]);
        let f_reflected = eval(&reflected);
        if f_reflected < vals[best] {
            let expanded = along(EXPAND, &reflected);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                pts[worst] = expanded;
                vals[worst] = f_expanded;
            } else {
                pts[worst] = reflected;
                vals[worst] = f_reflected;
            }
            continue;
        }
        if f_reflected < vals[next_worst] {
            pts[worst] = reflected;
            vals[worst] = f_reflected;
            continue;
        }
        let (contracted, accept_if_below) = if f_reflected < vals[worst] {
            (along(CONTRACT, &reflected), f_reflected)
        } else {
            (along(CONTRACT, &pts[worst]), vals[worst])
        };
        let f_contracted = eval(&contracted);
        if f_contracted < accept_if_below
            || (f_contracted == accept_if_below && f_reflected < vals[worst])
        {
            pts[worst] = contracted;
            vals[worst] = f_contracted;
            continue;
        }
        let anchor = pts[best].clone();
        for i in 0..=n {
            if i == best {
                continue;
            }
            for (x, a) in pts[i].iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            vals[i] = eval(&pts[i]);
        }
    }

    let best = order[0];
    SimplexResult {
        x: pts[best].clone(),
        value: vals[best],
        iters,
    }
}

/// Outcome of one Monte-Carlo restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub restart: usize,
    pub iterations: usize,
    pub cost: f64,
    pub params: DistortionParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub params: DistortionParams,
    pub cost: f64,
    /// Cost of the identity correction centered on the image.
    pub identity_cost: f64,
    /// True when no restart beat the identity and the identity was returned.
    pub fell_back_to_identity: bool,
    pub restarts: Vec<RestartTrace>,
}

impl Calibration {
    /// Writes `restart,iterations,cost,c1,c2,gamma,b1..b6`.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "restart,iterations,cost,c1,c2,gamma,b1,b2,b3,b4,b5,b6")?;
        for t in &self.restarts {
            let p = &t.params;
            write!(
                out,
                "{},{},{},{},{},{}",
                t.restart, t.iterations, t.cost, p.c[0], p.c[1], p.gamma
            )?;
            for b in p.b {
                write!(out, ",{b}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Start point for restart `k`, drawn from its own stream of the master seed.
pub fn restart_start(dims: ImageDims, cfg: &OptimConfig, k: usize) -> ScaledParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(k as u64);
    let centre = dims.center();
    let spread = dims.rho_max() * cfg.center_sigma_fraction;
    let c_dist = Normal::new(0.0, spread).expect("finite spread");
    let beta_dist = Normal::new(0.0, cfg.beta_sigma).expect("finite sigma");
    let mut v = [0.0; 9];
    v[0] = centre[0] + c_dist.sample(&mut rng);
    v[1] = centre[1] + c_dist.sample(&mut rng);
    // Redraw until the start lies inside the feasible β range.
    v[2] = loop {
        let b = beta_dist.sample(&mut rng);
        if b.abs() < MAX_ABS_BETA {
            break b;
        }
    };
    ScaledParamVector(v)
}

/// Monte-Carlo downhill calibration.
///
/// Restarts run in parallel; the winner is the lowest finite cost, ties going
/// to the lower restart index. If nothing beats the identity correction the
/// identity is returned.
pub fn mcdh_calibrate(
    edgels: &[Edgel],
    dims: ImageDims,
    cfg: &OptimConfig,
    bins: usize,
) -> Result<Calibration> {
    cfg.validate()?;
    if bins < 2 {
        return Err(Error::invalid("need at least 2 Hough bins"));
    }
    if edgels.len() < cfg.min_edgels {
        return Err(Error::TooFewEdgels {
            found: edgels.len(),
            required: cfg.min_edgels,
        });
    }
    let rho_max = dims.rho_max();
    let dim = cfg.mode.free_dims();
    let settings = SimplexSettings {
        max_iters: cfg.max_iters,
        residual_tol: cfg.residual_tol,
        step: cfg.simplex_step,
    };

    let restarts: Vec<RestartTrace> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let start = restart_start(dims, cfg, k);
            let embed = |x: &[f64]| {
                let mut v = [0.0; 9];
                v[..dim].copy_from_slice(x);
                ScaledParamVector(v)
            };
            let res = downhill_simplex(
                |x| cost(edgels, dims, &embed(x), bins),
                &start.0[..dim],
                &settings,
            );
            RestartTrace {
                restart: k,
                iterations: res.iters,
                cost: res.value,
                params: embed(&res.x).to_params(rho_max),
            }
        })
        .collect();

    let mut winner: Option<&RestartTrace> = None;
    for t in &restarts {
        if t.cost.is_finite() && winner.is_none_or(|w| t.cost < w.cost) {
            winner = Some(t);
        }
    }

    let identity = DistortionParams::identity(dims.center());
    let identity_cost = cost(
        edgels,
        dims,
        &ScaledParamVector::from_params(&identity, rho_max),
        bins,
    );
    let (params, best_cost, fell_back) = match winner {
        Some(w) if w.cost <= identity_cost => (w.params, w.cost, false),
        _ => (identity, identity_cost, true),
    };
    Ok(Calibration {
        params,
        cost: best_cost,
        identity_cost,
        fell_back_to_identity: fell_back,
        restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn settings() -> SimplexSettings {
        SimplexSettings::default()
    }

    #[test]
    fn quadratic_bowl_from_minimum() {
        let a = [3.0, -1.0, 0.5, 7.0, 2.0, -4.0, 1.0, 0.0, 9.0];
        let f = |x: &[f64]| x.iter().zip(&a).map(|(x, a)| (x - a) * (x - a)).sum::<f64>();
        let r = downhill_simplex(f, &a, &settings());
        assert!(r.value < 1e-20, "{}", r.value);
        assert!(r.iters < 1000);
    }

    #[test]
    fn quadratic_bowl_from_offset_start() {
        let a = [3.0, -1.0, 0.5];
        let f = |x: &[f64]| x.iter().zip(&a).map(|(x, a)| (x - a) * (x - a)).sum::<f64>();
        let r = downhill_simplex(f, &[10.0, 10.0, 10.0], &settings());
        assert!(r.value < 1e-20, "{}", r.value);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = downhill_simplex(f, &[-1.2, 1.0], &settings());
        assert!(r.value < 1e-6, "{}", r.value);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3);
        assert!(r.iters <= 1000);
    }

    #[test]
    fn constant_function_stops_immediately() {
        let x0 = [1.0, 2.0, 3.0];
        let r = downhill_simplex(|_| 4.0, &x0, &settings());
        assert_eq!(r.iters, 0);
        assert_eq!(r.value, 4.0);
        assert_eq!(r.x, x0.to_vec());
    }

    #[test]
    fn infinite_walls_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.5 { f64::INFINITY } else { (x[0] - 2.0).powi(2) };
        let r = downhill_simplex(f, &[3.0], &settings());
        assert!((r.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn iteration_cap() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let s = SimplexSettings {
            max_iters: 7,
            ..settings()
        };
        assert_eq!(downhill_simplex(f, &[-1.2, 1.0], &s).iters, 7);
    }

    #[test]
    fn scaled_vector_layout() {
        let dims = ImageDims::new(250, 250);
        let rho_max = dims.rho_max();
        let p = DistortionParams {
            c: [120.0, 130.0],
            gamma: 1e-5,
            b: [1e-3, -2e-3, 0.0, 0.0, 3e-4, 0.0],
        };
        let v = ScaledParamVector::from_params(&p, rho_max);
        assert!((v.0[2] - 31.25).abs() < 1e-12);
        assert!((v.0[3] - 100.0).abs() < 1e-9);
        assert_eq!(&v.0[..2], &[120.0, 130.0]);
    }

    #[test]
    fn calibration_floor() {
        let e = vec![Edgel::new([1.0, 1.0], [1.0, 0.0]); 10];
        let err = mcdh_calibrate(&e, ImageDims::new(50, 50), &OptimConfig::default(), 360);
        assert!(matches!(
            err,
            Err(Error::TooFewEdgels {
                found: 10,
                required: 100
            })
        ));
    }

    #[test]
    fn infeasible_region_is_infinite() {
        let dims = ImageDims::new(200, 200);
        let edgels: Vec<_> = (0..50)
            .map(|i| Edgel::new([150.0 + i as f64, 20.0], [0.0, 1.0]))
            .collect();
        // 1 + g < 0 for every edgel above the center.
        let mut p = DistortionParams::identity(dims.center());
        p.b[0] = 2.0;
        let v = ScaledParamVector::from_params(&p, dims.rho_max());
        assert_eq!(cost(&edgels, dims, &v, 360), f64::INFINITY);
        assert_eq!(cost(&[], dims, &v, 360), f64::INFINITY);
    }

    #[test]
    fn beta_outside_plausible_range_is_infinite() {
        let dims = ImageDims::new(200, 200);
        let edgels: Vec<_> = (0..50)
            .map(|i| Edgel::new([20.0 + 3.0 * i as f64, 30.0], [0.0, 1.0]))
            .collect();
        let mut v = ScaledParamVector::from_params(&DistortionParams::identity(dims.center()), dims.rho_max());
        v.0[2] = MAX_ABS_BETA * 0.99;
        assert!(cost(&edgels, dims, &v, 360).is_finite());
        v.0[2] = -MAX_ABS_BETA * 0.99;
        assert!(cost(&edgels, dims, &v, 360).is_finite());
        v.0[2] = MAX_ABS_BETA * 1.01;
        assert_eq!(cost(&edgels, dims, &v, 360), f64::INFINITY);
        v.0[2] = -MAX_ABS_BETA * 1.01;
        assert_eq!(cost(&edgels, dims, &v, 360), f64::INFINITY);
    }

    #[test]
    fn trace_csv_header() {
        let c = Calibration {
            params: DistortionParams::identity([0.0, 0.0]),
            cost: 1.0,
            identity_cost: 1.0,
            fell_back_to_identity: true,
            restarts: vec![RestartTrace {
                restart: 0,
                iterations: 3,
                cost: 1.5,
                params: DistortionParams::radial([1.0, 2.0], 1e-6),
            }],
        };
        let mut buf = Vec::new();
        c.write_trace_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "restart,iterations,cost,c1,c2,gamma,b1,b2,b3,b4,b5,b6\n0,3,1.5,1,2,0.000001,0,0,0,0,0,0\n"
        );
    }

    proptest! {
        #[test]
        fn scaling_round_trip(
            cx in -1e4..1e4f64, cy in -1e4..1e4f64, beta in -100.0..100.0f64,
            b in proptest::array::uniform6(-5e-3..5e-3f64),
            w in 10usize..5000, h in 10usize..5000,
        ) {
            let rho_max = ImageDims::new(w, h).rho_max();
            let p = DistortionParams { c: [cx, cy], gamma: beta / (100.0 * rho_max * rho_max), b };
            let q = ScaledParamVector::from_params(&p, rho_max).to_params(rho_max);
            prop_assert_eq!(p.c, q.c);
            let close = |a: f64, b: f64| (a - b).abs() <= 2.0 * f64::EPSILON * a.abs();
            prop_assert!(close(p.gamma, q.gamma));
            for (x, y) in p.b.iter().zip(&q.b) {
                prop_assert!(close(*x, *y));
            }
        }
    }
}

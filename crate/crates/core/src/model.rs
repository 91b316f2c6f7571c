//! Anisotropic Harris distortion-correction model.
//!
//! The correction map takes a pixel `x` of the distorted input image to its
//! corrected location
//!
//! ```text
//! D(x) = r̂ f(ρ) (1 + g(r̂)) + c,    r = x - c,  ρ = |r|,  r̂ = r / ρ
//! f(ρ) = ρ / sqrt(1 + γ ρ²)
//! g(r̂) = b1 r̂2 + b2 r̂1 + (b3 r̂2 + b4 r̂1)² + (b5 r̂2 + b6 r̂1)³
//! ```
//!
//! The map never changes the direction of `r` (as long as `1 + g > 0`), which
//! makes the inverse a scalar problem along each ray.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

/// Parameters of the correction map. Serializes as
/// `{"c":[c1,c2],"gamma":g,"b":[b1,..,b6]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionParams {
    /// Center of radial distortion, pixels.
    pub c: Vec2,
    /// Harris coefficient, pixels⁻².
    pub gamma: f64,
    /// Anisotropy coefficients.
    pub b: [f64; 6],
}

impl DistortionParams {
    /// The identity map centered at `c`.
    pub fn identity(c: Vec2) -> Self {
        Self {
            c,
            gamma: 0.0,
            b: [0.0; 6],
        }
    }

    pub fn radial(c: Vec2, gamma: f64) -> Self {
        Self {
            c,
            gamma,
            b: [0.0; 6],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.gamma == 0.0 && self.b.iter().all(|&v| v == 0.0)
    }

    /// Checks that `1 + γρ² > 0` for every radius up to `rho_max` and that all
    /// coefficients are finite.
    pub fn validate_for_radius(&self, rho_max: f64) -> Result<()> {
        let finite = self.c.iter().chain(self.b.iter()).all(|v| v.is_finite())
            && self.gamma.is_finite();
        if !finite {
            return Err(Error::invalid("distortion parameters must be finite"));
        }
        if 1.0 + self.gamma * rho_max * rho_max <= 0.0 {
            return Err(Error::domain(format!(
                "gamma {} makes 1 + gamma*rho^2 non-positive within radius {}",
                self.gamma, rho_max
            )));
        }
        Ok(())
    }

    /// Validates against the largest distance from the center to any corner
    /// of a `width`×`height` image.
    pub fn validate_for_image(&self, width: usize, height: usize) -> Result<()> {
        let corners = [
            [0.0, 0.0],
            [width as f64, 0.0],
            [0.0, height as f64],
            [width as f64, height as f64],
        ];
        let rho_max = corners
            .iter()
            .map(|p| norm(sub(*p, self.c)))
            .fold(0.0, f64::max);
        self.validate_for_radius(rho_max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("params JSON: {e}")))
    }
}

/// An edge sample: position, unit normal, and the saliency it was extracted with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edgel {
    pub position: Vec2,
    pub normal: Vec2,
    pub weight: f64,
}

impl Edgel {
    /// Builds an edgel with weight 1, normalizing `normal`.
    pub fn new(position: Vec2, normal: Vec2) -> Self {
        Self::with_weight(position, normal, 1.0)
    }

    pub fn with_weight(position: Vec2, normal: Vec2, weight: f64) -> Self {
        let n = norm(normal);
        assert!(n > 0.0, "edgel normal must be nonzero");
        Self {
            position,
            normal: [normal[0] / n, normal[1] / n],
            weight,
        }
    }
}

/// Row-major 2×2 matrix `∂D/∂x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2x2 {
    pub j11: f64,
    pub j12: f64,
    pub j21: f64,
    pub j22: f64,
}

impl Jacobian2x2 {
    pub const IDENTITY: Self = Self {
        j11: 1.0,
        j12: 0.0,
        j21: 0.0,
        j22: 1.0,
    };

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [
            self.j11 * v[0] + self.j12 * v[1],
            self.j21 * v[0] + self.j22 * v[1],
        ]
    }

    pub fn det(&self) -> f64 {
        self.j11 * self.j22 - self.j12 * self.j21
    }
}

#[inline]
pub(crate) fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn norm(v: Vec2) -> f64 {
    v[0].hypot(v[1])
}

/// Harris radial function `ρ / sqrt(1 + γρ²)`.
pub fn harris_f(gamma: f64, rho: f64) -> Result<f64> {
    let s = 1.0 + gamma * rho * rho;
    if s <= 0.0 || !s.is_finite() {
        return Err(Error::domain(format!(
            "1 + gamma*rho^2 = {s} is not positive (gamma {gamma}, rho {rho})"
        )));
    }
    Ok(rho / s.sqrt())
}

/// Angular modulation `g`, evaluated on the unit direction `(cos θ, sin θ)`.
pub fn anisotropy_g(b: &[f64; 6], r_hat: Vec2) -> f64 {
    let [c, s] = r_hat;
    let sq = b[2] * s + b[3] * c;
    let cu = b[4] * s + b[5] * c;
    b[0] * s + b[1] * c + sq * sq + cu * cu * cu
}

/// Partial derivatives of [`anisotropy_g`] with respect to `r̂1` and `r̂2`,
/// treating the two components as independent.
pub fn anisotropy_g_grad(b: &[f64; 6], r_hat: Vec2) -> Vec2 {
    let [c, s] = r_hat;
    let sq = b[2] * s + b[3] * c;
    let cu = b[4] * s + b[5] * c;
    [
        b[1] + 2.0 * b[3] * sq + 3.0 * b[5] * cu * cu,
        b[0] + 2.0 * b[2] * sq + 3.0 * b[4] * cu * cu,
    ]
}

/// Applies the correction map. The center maps to itself.
pub fn correct_point(p: &DistortionParams, x: Vec2) -> Result<Vec2> {
    if p.is_identity() {
        return Ok(x);
    }
    let r = sub(x, p.c);
    let rho = norm(r);
    if rho == 0.0 {
        return Ok(p.c);
    }
    let r_hat = [r[0] / rho, r[1] / rho];
    let scale = harris_f(p.gamma, rho)? * (1.0 + anisotropy_g(&p.b, r_hat));
    Ok([p.c[0] + r_hat[0] * scale, p.c[1] + r_hat[1] * scale])
}

/// Exact inverse of [`correct_point`].
///
/// Because the output lies on the same ray from `c` as the input, the output
/// radius is first divided by `1 + g` and then passed through the closed-form
/// Harris inverse `ρ = ρ' / sqrt(1 - γρ'²)`.
pub fn invert_point(p: &DistortionParams, x_out: Vec2) -> Result<Vec2> {
    if p.is_identity() {
        return Ok(x_out);
    }
    let r = sub(x_out, p.c);
    let rho_out = norm(r);
    if rho_out == 0.0 {
        return Ok(p.c);
    }
    let r_hat = [r[0] / rho_out, r[1] / rho_out];
    let aniso = 1.0 + anisotropy_g(&p.b, r_hat);
    if aniso <= 0.0 {
        return Err(Error::domain(format!(
            "1 + g = {aniso} is not positive along this ray"
        )));
    }
    let radial = rho_out / aniso;
    let rho = harris_f(-p.gamma, radial)?;
    Ok([p.c[0] + r_hat[0] * rho, p.c[1] + r_hat[1] * rho])
}

/// Analytic Jacobian `∂D/∂x`.
///
/// ```text
/// J = ∂r̂/∂x · f(1+g) + r̂ (1+g) f'(ρ) r̂ᵀ + r̂ f (∇_r̂ g)ᵀ ∂r̂/∂x
/// ∂r̂/∂x = (1/ρ) [[r̂2², -r̂1 r̂2], [-r̂1 r̂2, r̂1²]]
/// f'(ρ) = (1 + γρ²)^(-3/2)
/// ```
pub fn jacobian(p: &DistortionParams, x: Vec2) -> Result<Jacobian2x2> {
    let r = sub(x, p.c);
    let rho = norm(r);
    if rho == 0.0 {
        return Err(Error::domain("jacobian is undefined at the distortion center"));
    }
    if p.is_identity() {
        return Ok(Jacobian2x2::IDENTITY);
    }
    let [r1, r2] = [r[0] / rho, r[1] / rho];
    let f = harris_f(p.gamma, rho)?;
    let df = (1.0 + p.gamma * rho * rho).powf(-1.5);
    let one_g = 1.0 + anisotropy_g(&p.b, [r1, r2]);

    // ∂r̂/∂x
    let a11 = r2 * r2 / rho;
    let a12 = -r1 * r2 / rho;
    let a22 = r1 * r1 / rho;

    // ∇g · ∂r̂/∂x, a row vector
    let [g1, g2] = anisotropy_g_grad(&p.b, [r1, r2]);
    let dg1 = g1 * a11 + g2 * a12;
    let dg2 = g1 * a12 + g2 * a22;

    let t1 = f * one_g;
    let t2 = one_g * df;
    Ok(Jacobian2x2 {
        j11: a11 * t1 + r1 * t2 * r1 + r1 * f * dg1,
        j12: a12 * t1 + r1 * t2 * r2 + r1 * f * dg2,
        j21: a12 * t1 + r2 * t2 * r1 + r2 * f * dg1,
        j22: a22 * t1 + r2 * t2 * r2 + r2 * f * dg2,
    })
}

/// Moves an edgel through the correction map.
///
/// The normal is turned into a tangent, pushed through the Jacobian, and
/// turned back: `h = R₉₀ J R₋₉₀ n`. Edgels where the map folds over
/// (`1 + g ≤ 0`) or the Jacobian collapses the tangent are rejected.
pub fn transform_edgel(p: &DistortionParams, e: &Edgel) -> Result<Edgel> {
    if p.is_identity() {
        return Ok(*e);
    }
    let normal = transform_normal(p, e)?;
    Ok(Edgel {
        position: correct_point(p, e.position)?,
        normal,
        weight: e.weight,
    })
}

/// The normal half of [`transform_edgel`], skipping the position.
pub fn transform_normal(p: &DistortionParams, e: &Edgel) -> Result<Vec2> {
    if p.is_identity() {
        return Ok(e.normal);
    }
    let j = jacobian(p, e.position)?;
    let r = sub(e.position, p.c);
    let rho = norm(r);
    if 1.0 + anisotropy_g(&p.b, [r[0] / rho, r[1] / rho]) <= 0.0 {
        return Err(Error::domain("anisotropy folds the ray (1 + g <= 0)"));
    }
    let tangent = j.apply([-e.normal[1], e.normal[0]]);
    let h = [tangent[1], -tangent[0]];
    let len = norm(h);
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::domain("transformed tangent is degenerate"));
    }
    Ok([h[0] / len, h[1] / len])
}

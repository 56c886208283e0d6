//! The Getoor function, the self-similar profile Φ_α and its constants.
//!
//! With `K(α) = Γ(1/2) / (2^α Γ(1+α/2) Γ((1+α)/2))` the Getoor function
//! `v(x) = K(α)(1-x²)^{α/2}` on `|x| < 1` satisfies `Λ^α v = 1` inside the
//! unit interval. Its antiderivative `u` saturates at `±M(α)` and a rescaling
//! of `u` gives the nondecreasing profile Φ_α that climbs from 0 to 1 on
//! `[-y_α, y_α]` and solves `Λ^α Φ_α(y) = y/(α+1)` there.

use crate::error::{Error, Result};
use crate::quadrature::tanh_sinh;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Exponent α together with every constant derived from it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AlphaParams {
    pub alpha: f64,
    /// K(α), amplitude of the Getoor function.
    pub k_const: f64,
    /// M(α) = ∫₀¹ v, the saturation level of the Getoor antiderivative.
    pub m_const: f64,
    /// Half-width of the support of Φ_α'.
    pub y_alpha: f64,
    /// Scaling constant, `γ = (α+1) / (2 M(α))`.
    pub gamma: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "alpha must lie in (0,2), got {alpha}"
        )))
    }
}

/// `K(α) ∫₀¹ (1 - y²)^{α/2} dy` by tanh-sinh quadrature.
pub fn m_const_by_quadrature(alpha: f64, k_const: f64) -> f64 {
    let (integral, _) = tanh_sinh(
        |y| (1.0 - y * y).max(0.0).powf(0.5 * alpha),
        0.0,
        1.0,
        1e-15,
    );
    k_const * integral
}

pub fn compute_constants(alpha: f64) -> Result<AlphaParams> {
    check_alpha(alpha)?;
    let two_a = 2f64.powf(alpha);
    let g_half_plus = gamma(0.5 * (1.0 + alpha));
    let k_const = PI.sqrt() / (two_a * gamma(1.0 + 0.5 * alpha) * g_half_plus);
    let m_const = PI / (two_a * (alpha + 1.0) * g_half_plus * g_half_plus);

    let m_quad = m_const_by_quadrature(alpha, k_const);
    if (m_quad - m_const).abs() > 1e-10 * m_const.max(1.0) {
        return Err(Error::Numerical(format!(
            "closed-form M({alpha}) = {m_const} disagrees with quadrature {m_quad}"
        )));
    }

    let gamma_c = (alpha + 1.0) / (2.0 * m_const);
    let y_alpha = gamma_c.powf(1.0 / (alpha + 1.0));
    Ok(AlphaParams {
        alpha,
        k_const,
        m_const,
        y_alpha,
        gamma: gamma_c,
    })
}

impl AlphaParams {
    pub fn new(alpha: f64) -> Result<Self> {
        compute_constants(alpha)
    }

    /// `1/(α+1)`, the self-similar spreading exponent.
    pub fn spread_exponent(&self) -> f64 {
        1.0 / (self.alpha + 1.0)
    }

    /// Factor `s = γ^{-1/(α+1)}` mapping profile coordinates to Getoor ones.
    fn inner_scale(&self) -> f64 {
        1.0 / self.y_alpha
    }
}

/// Getoor function; exactly zero on `|x| >= 1`.
pub fn getoor_v(x: f64, params: &AlphaParams) -> f64 {
    let ax = x.abs();
    if ax >= 1.0 {
        return 0.0;
    }
    params.k_const * ((1.0 - ax) * (1.0 + ax)).powf(0.5 * params.alpha)
}

/// Antiderivative of [`getoor_v`] vanishing at 0.
///
/// Uses `∫₀ˣ (1-y²)^{α/2} dy = ½ sgn(x) B(x²; 1/2, 1+α/2)`, i.e.
/// `u(x) = sgn(x) M(α) I_{x²}(1/2, 1+α/2)`.
pub fn getoor_u(x: f64, params: &AlphaParams) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let mag = if ax >= 1.0 {
        params.m_const
    } else {
        params.m_const * beta_reg(0.5, 1.0 + 0.5 * params.alpha, ax * ax)
    };
    mag.copysign(x)
}

/// Self-similar profile Φ_α.
pub fn phi(y: f64, params: &AlphaParams) -> f64 {
    if y <= -params.y_alpha {
        return 0.0;
    }
    if y >= params.y_alpha {
        return 1.0;
    }
    let c = params.gamma / (params.alpha + 1.0);
    let val = c * (getoor_u(params.inner_scale() * y, params) + params.m_const);
    val.clamp(0.0, 1.0)
}

/// Φ_α'(y), compactly supported on `[-y_α, y_α]`.
pub fn phi_prime(y: f64, params: &AlphaParams) -> f64 {
    let s = params.inner_scale();
    params.gamma / (params.alpha + 1.0) * s * getoor_v(s * y, params)
}

/// `mass · Φ_α(mass^{-1/(α+1)} y) + offset`.
pub fn phi_scaled(y: f64, mass: f64, offset: f64, params: &AlphaParams) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    let s = mass.powf(-params.spread_exponent());
    Ok(mass * phi(s * y, params) + offset)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive, got {t}")))
    }
}

/// `u_α(x, t) = Φ_α(x t^{-1/(α+1)})`.
pub fn self_similar_u(x: f64, t: f64, params: &AlphaParams) -> Result<f64> {
    check_time(t)?;
    Ok(phi(x * t.powf(-params.spread_exponent()), params))
}

/// `v(x, t) = t^{-1/(α+1)} Φ_α'(x t^{-1/(α+1)})`, the unit-mass
/// compactly supported density.
pub fn self_similar_v(x: f64, t: f64, params: &AlphaParams) -> Result<f64> {
    check_time(t)?;
    let r = t.powf(-params.spread_exponent());
    Ok(r * phi_prime(x * r, params))
}

/// Self-similar density carrying total mass `mass`:
/// `mass · v(x, mass · t)`, the derivative of `mass Φ_α(x / (mass t)^{1/(α+1)})`.
pub fn self_similar_density(x: f64, t: f64, mass: f64, params: &AlphaParams) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    Ok(mass * self_similar_v(x, mass * t, params)?)
}

/// Support half-width of [`self_similar_density`] at time `t`.
pub fn self_similar_half_width(t: f64, mass: f64, params: &AlphaParams) -> f64 {
    params.y_alpha * (mass * t).powf(params.spread_exponent())
}

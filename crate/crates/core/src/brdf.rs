//! Simplified Disney BRDF: Lambertian diffuse plus a GGX microfacet lobe.
//!
//! `f = a/π + D(h; γ) · F(ωo, h) · G(ωi, ωo; γ) / ((ωi·n)(ωo·n))`
//!
//! with GGX `D` at `α = γ²`, Schlick `F` with `F0 = 0.04`, and the
//! height-correlated Smith masking-shadowing `G`. The specular denominator
//! omits the usual factor 4 unless [`SpecularForm::Conventional`] is chosen.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{Rgb, Vec3};

pub const DIELECTRIC_F0: f64 = 0.04;

/// GGX α is floored here so that a perfectly smooth surface stays finite.
const MIN_ALPHA: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BrdfMode {
    #[default]
    Full,
    DiffuseOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpecularForm {
    /// `D·F·G / ((ωi·n)(ωo·n))`.
    #[default]
    AsPrinted,
    /// `D·F·G / (4 (ωi·n)(ωo·n))`.
    Conventional,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BrdfOptions {
    pub mode: BrdfMode,
    pub specular: SpecularForm,
}

impl BrdfOptions {
    pub fn diffuse_only() -> Self {
        Self { mode: BrdfMode::DiffuseOnly, ..Self::default() }
    }
}

pub fn ggx_ndf(n_dot_h: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    a2 / (PI * d * d)
}

pub fn schlick_fresnel(cos_theta: f64, f0: f64) -> f64 {
    f0 + (1.0 - f0) * (1.0 - cos_theta).clamp(0.0, 1.0).powi(5)
}

fn smith_lambda(cos_theta: f64, alpha: f64) -> f64 {
    let c2 = cos_theta * cos_theta;
    let tan2 = (1.0 - c2).max(0.0) / c2;
    0.5 * ((1.0 + alpha * alpha * tan2).sqrt() - 1.0)
}

/// Height-correlated Smith masking-shadowing `1 / (1 + Λ(ωi) + Λ(ωo))`.
pub fn smith_g(n_dot_i: f64, n_dot_o: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + smith_lambda(n_dot_i, alpha) + smith_lambda(n_dot_o, alpha))
}

pub fn roughness_to_alpha(roughness: f64) -> f64 {
    (roughness * roughness).max(MIN_ALPHA)
}

/// Evaluates the BRDF for incident `wi` and outgoing `wo` about normal `n`.
/// Both directions must lie strictly above the surface.
pub fn brdf_eval(wi: &Vec3, wo: &Vec3, n: &Vec3, albedo: &Rgb, roughness: f64, opts: &BrdfOptions) -> Result<Rgb> {
    let n_dot_i = n.dot(wi);
    let n_dot_o = n.dot(wo);
    if !(n_dot_i > 0.0) {
        return Err(Error::Backfacing(n_dot_i));
    }
    if !(n_dot_o > 0.0) {
        return Err(Error::Backfacing(n_dot_o));
    }
    if !(0.0..=1.0).contains(&roughness) {
        return Err(Error::InvariantViolation(format!("roughness {roughness} outside [0, 1]")));
    }
    let diffuse = albedo / PI;
    if opts.mode == BrdfMode::DiffuseOnly {
        return Ok(diffuse);
    }
    Ok(diffuse.add_scalar(specular(n_dot_i, n_dot_o, wi, wo, n, roughness, opts.specular)))
}

fn specular(n_dot_i: f64, n_dot_o: f64, wi: &Vec3, wo: &Vec3, n: &Vec3, roughness: f64, form: SpecularForm) -> f64 {
    let h = (wi + wo).normalize();
    let alpha = roughness_to_alpha(roughness);
    let d = ggx_ndf(n.dot(&h).clamp(0.0, 1.0), alpha);
    let f = schlick_fresnel(wo.dot(&h), DIELECTRIC_F0);
    let g = smith_g(n_dot_i, n_dot_o, alpha);
    let denom = match form {
        SpecularForm::AsPrinted => n_dot_i * n_dot_o,
        SpecularForm::Conventional => 4.0 * n_dot_i * n_dot_o,
    };
    d * f * g / denom
}

/// Residual albedo `sigmoid(I + ΔA)` per channel.
pub fn material_albedo(image: &Rgb, residual: &Rgb) -> Rgb {
    (image + residual).map(|x| 1.0 / (1.0 + (-x).exp()))
}

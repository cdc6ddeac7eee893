//! Per-Gaussian physically based shading.
//!
//! Each Gaussian integrates incident light over the hemisphere about its
//! normal with cosine-weighted low-discrepancy samples, so the cosine term
//! and the pdf cancel to a constant `π`:
//!
//! `C ≈ (π/N) Σ L(ωi) f(ωi, ωo)`
//!
//! where `L` blends the prefiltered environment (scaled by `s_d`, gated by
//! SH visibility) with SH indirect light.

mod bake;
mod bvh;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::brdf::{brdf_eval, BrdfMode, BrdfOptions};
use crate::envlight::{compose_incident, EnvMap};
use crate::error::{Error, Result};
use crate::scene::{GaussianPoint, GaussianScene};
use crate::sh::{sh_eval, sh_eval_rgb};
use crate::{Rgb, Vec3};

pub use bake::{bake_indirect, bake_visibility, fibonacci_sphere, BakeConfig, Baker};
pub use bvh::{EllipsoidBvh, Ray};

/// Number of fixed quadrature directions used for ambient occlusion.
pub const AO_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ShadowMode {
    #[default]
    Soft,
    /// Visibility is binarised at the hard threshold before blending.
    Hard,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadingConfig {
    pub sample_count: usize,
    pub seed: u64,
    pub shadow_mode: ShadowMode,
    pub hard_threshold: f64,
    pub brdf: BrdfOptions,
}

impl Default for ShadingConfig {
    fn default() -> Self {
        Self {
            sample_count: 40,
            seed: 0,
            shadow_mode: ShadowMode::Soft,
            hard_threshold: 0.5,
            brdf: BrdfOptions::default(),
        }
    }
}

impl ShadingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidConfig("sample_count must be at least 1".into()));
        }
        if !self.hard_threshold.is_finite() {
            return Err(Error::InvalidConfig("hard_threshold must be finite".into()));
        }
        Ok(())
    }

    pub fn diffuse_only(mut self) -> Self {
        self.brdf.mode = BrdfMode::DiffuseOnly;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HemisphereSample {
    pub dir: Vec3,
    /// Cosine-weighted density `(dir·n)/π`.
    pub pdf: f64,
}

fn radical_inverse(mut i: u32) -> u32 {
    i = i.rotate_right(16);
    i = ((i & 0x00ff_00ff) << 8) | ((i & 0xff00_ff00) >> 8);
    i = ((i & 0x0f0f_0f0f) << 4) | ((i & 0xf0f0_f0f0) >> 4);
    i = ((i & 0x3333_3333) << 2) | ((i & 0xcccc_cccc) >> 2);
    ((i & 0x5555_5555) << 1) | ((i & 0xaaaa_aaaa) >> 1)
}

/// Orthonormal tangent frame about a unit vector (Duff et al. 2017).
pub fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let sign = 1f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    (
        Vec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x),
        Vec3::new(b, sign + n.y * n.y * a, -n.y),
    )
}

/// Cosine-weighted directions about `n` from a seed-scrambled Hammersley set.
///
/// The seed drives a Cranley–Patterson shift of the stratified coordinate
/// and a digit scramble of the radical inverse; equal seeds give equal sets.
/// Seed 0 is the unscrambled set with midpoint strata.
pub fn sample_hemisphere(n: &Vec3, count: usize, seed: u64) -> Vec<HemisphereSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (shift, scramble) = if seed == 0 { (0.5, 0) } else { (rng.random::<f64>(), rng.random::<u32>()) };
    let (t, b) = tangent_frame(n);
    (0..count)
        .map(|i| {
            let u1 = ((i as f64 + shift) / count as f64).fract().min(1.0 - 1e-9);
            let u2 = (radical_inverse(i as u32) ^ scramble) as f64 / 4_294_967_296.0;
            let r = u1.sqrt();
            let phi = 2.0 * PI * u2;
            let z = (1.0 - u1).sqrt();
            let dir = (t * (r * phi.cos()) + b * (r * phi.sin()) + n * z).normalize();
            HemisphereSample { dir, pdf: dir.dot(n) / PI }
        })
        .collect()
}

fn visibility(g: &GaussianPoint, dir: &Vec3, cfg: &ShadingConfig) -> f64 {
    let v = sh_eval(&g.visibility, dir, true);
    match cfg.shadow_mode {
        ShadowMode::Soft => v,
        ShadowMode::Hard if v >= cfg.hard_threshold => 1.0,
        ShadowMode::Hard => 0.0,
    }
}

fn indirect_radiance(g: &GaussianPoint, dir: &Vec3) -> Rgb {
    sh_eval_rgb(&g.indirect, dir).map(|c| c.max(0.0))
}

fn check_scale(direct_scale: f64) -> Result<()> {
    if !(direct_scale >= 0.0 && direct_scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("direct scaling {direct_scale} must be finite and non-negative")));
    }
    Ok(())
}

/// Physically based colour of one Gaussian seen from direction `wo`.
pub fn shade_gaussian(
    g: &GaussianPoint,
    env: &EnvMap,
    direct_scale: f64,
    wo: &Vec3,
    cfg: &ShadingConfig,
) -> Result<Rgb> {
    cfg.validate()?;
    check_scale(direct_scale)?;
    let albedo = g.albedo;
    let mut acc = Rgb::zeros();
    for s in sample_hemisphere(&g.normal, cfg.sample_count, cfg.seed) {
        let v = visibility(g, &s.dir, cfg);
        let incident = compose_incident(v, direct_scale, &env.sample_bilinear(&s.dir), &indirect_radiance(g, &s.dir));
        let f = brdf_eval(&s.dir, wo, &g.normal, &albedo, g.roughness, &cfg.brdf)?;
        acc += incident.component_mul(&f);
    }
    Ok(acc * (PI / cfg.sample_count as f64))
}

/// Cosine-weighted averages of the visible direct light and the occluded
/// indirect light; for a white Lambertian surface they sum to the diffuse
/// shading.
pub fn light_maps(g: &GaussianPoint, env: &EnvMap, direct_scale: f64, cfg: &ShadingConfig) -> Result<(Rgb, Rgb)> {
    cfg.validate()?;
    check_scale(direct_scale)?;
    let mut direct = Rgb::zeros();
    let mut indirect = Rgb::zeros();
    for s in sample_hemisphere(&g.normal, cfg.sample_count, cfg.seed) {
        let v = visibility(g, &s.dir, cfg);
        direct += env.sample_bilinear(&s.dir) * (v * direct_scale);
        indirect += indirect_radiance(g, &s.dir) * (1.0 - v);
    }
    let n = cfg.sample_count as f64;
    Ok((direct / n, indirect / n))
}

/// Cosine-weighted hemisphere average of clamped SH visibility about `n`.
pub fn ambient_occlusion(v: &crate::sh::ShCoeffs, n: &Vec3) -> f64 {
    let total: f64 = sample_hemisphere(n, AO_SAMPLES, 0).iter().map(|s| sh_eval(v, &s.dir, true)).sum();
    (total / AO_SAMPLES as f64).clamp(0.0, 1.0)
}

/// Unit direction from a point toward the camera center.
pub fn view_direction(p: &Vec3, camera_center: &Vec3) -> Vec3 {
    (camera_center - p).normalize()
}

/// Shades every Gaussian in parallel. Gaussians whose normal faces away from
/// the camera fall back to the diffuse lobe, which does not depend on `ωo`.
pub fn shade_scene(
    scene: &GaussianScene,
    env: &EnvMap,
    direct_scale: f64,
    camera_center: &Vec3,
    cfg: &ShadingConfig,
) -> Result<Vec<Rgb>> {
    cfg.validate()?;
    check_scale(direct_scale)?;
    scene
        .points()
        .par_iter()
        .map(|g| {
            let wo = view_direction(&g.position, camera_center);
            if g.normal.dot(&wo) > 0.0 {
                shade_gaussian(g, env, direct_scale, &wo, cfg)
            } else {
                let diffuse = ShadingConfig { brdf: BrdfOptions { mode: BrdfMode::DiffuseOnly, ..cfg.brdf }, ..*cfg };
                shade_gaussian(g, env, direct_scale, &g.normal, &diffuse)
            }
        })
        .collect()
}

//! Geometric bakers for SH visibility and one-bounce indirect light.
//!
//! Rays leave each Gaussian along a deterministic Fibonacci sphere of
//! directions from `p + ε·n`, `ε = 1e-3·max(s)`. A direction is blocked when
//! it meets another Gaussian's `k_sigma · s` ellipsoid; only Gaussians with
//! opacity at or above the threshold occlude.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::bvh::{EllipsoidBvh, Ray};
use super::sample_hemisphere;
use crate::envlight::EnvMap;
use crate::error::{Error, Result};
use crate::scene::GaussianScene;
use crate::sh::{basis, sh_eval, ShCoeffs, SH_COUNT};
use crate::{Rgb, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BakeConfig {
    pub dir_count: usize,
    pub k_sigma: f64,
    pub opacity_threshold: f64,
}

impl Default for BakeConfig {
    fn default() -> Self {
        Self { dir_count: 256, k_sigma: 1.0, opacity_threshold: 0.5 }
    }
}

impl BakeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dir_count < 64 {
            return Err(Error::InvalidConfig(format!("bake needs at least 64 directions, got {}", self.dir_count)));
        }
        if !(self.k_sigma > 0.0 && self.k_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("k_sigma {} must be positive", self.k_sigma)));
        }
        Ok(())
    }
}

/// `count` near-uniform unit directions on a golden-angle spiral.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Holds the occlusion hierarchy and direction set for repeated bakes over
/// one scene.
pub struct Baker<'a> {
    scene: &'a GaussianScene,
    cfg: BakeConfig,
    bvh: EllipsoidBvh,
    dirs: Vec<Vec3>,
    basis: Vec<[f64; SH_COUNT]>,
}

impl<'a> Baker<'a> {
    pub fn new(scene: &'a GaussianScene, cfg: BakeConfig) -> Result<Self> {
        cfg.validate()?;
        let bvh = EllipsoidBvh::build(scene.points(), cfg.k_sigma, cfg.opacity_threshold);
        let dirs = fibonacci_sphere(cfg.dir_count);
        let basis = dirs.iter().map(basis).collect();
        Ok(Self { scene, cfg, bvh, dirs, basis })
    }

    fn check_index(&self, idx: usize) -> Result<()> {
        if idx >= self.scene.len() {
            return Err(Error::OutOfRange(format!("point index {idx} for a scene of {}", self.scene.len())));
        }
        Ok(())
    }

    fn ray_origin(&self, idx: usize) -> Vec3 {
        let g = &self.scene.points()[idx];
        g.position + g.normal * (1e-3 * g.scale.max())
    }

    fn weight(&self) -> f64 {
        4.0 * PI / self.cfg.dir_count as f64
    }

    /// Binary visibility of point `idx` projected onto SH.
    pub fn visibility(&self, idx: usize) -> Result<ShCoeffs> {
        self.check_index(idx)?;
        let origin = self.ray_origin(idx);
        let w = self.weight();
        let mut c = [0.0; SH_COUNT];
        for (dir, y) in self.dirs.iter().zip(&self.basis) {
            if self.bvh.any_hit(&Ray { origin, dir: *dir }, Some(idx)) {
                continue;
            }
            for (ci, yi) in c.iter_mut().zip(y) {
                *ci += yi * w;
            }
        }
        Ok(ShCoeffs(c))
    }

    pub fn visibility_all(&self) -> Result<Vec<ShCoeffs>> {
        (0..self.scene.len()).into_par_iter().map(|i| self.visibility(i)).collect()
    }

    /// Cosine-weighted average of visible, scaled environment light at point
    /// `idx`, using its current visibility coefficients.
    pub fn direct_shade(&self, idx: usize, env: &EnvMap, direct_scale: f64) -> Result<Rgb> {
        self.check_index(idx)?;
        let g = &self.scene.points()[idx];
        let samples = sample_hemisphere(&g.normal, self.cfg.dir_count, 0);
        let total = samples.iter().fold(Rgb::zeros(), |acc, s| {
            acc + env.sample_bilinear(&s.dir) * (sh_eval(&g.visibility, &s.dir, true) * direct_scale)
        });
        Ok(total / samples.len() as f64)
    }

    pub fn direct_shades(&self, env: &EnvMap, direct_scale: f64) -> Result<Vec<Rgb>> {
        (0..self.scene.len()).into_par_iter().map(|i| self.direct_shade(i, env, direct_scale)).collect()
    }

    /// One-bounce indirect light at point `idx`: blocked directions carry
    /// the first hit's albedo times its direct shade, projected per channel.
    pub fn indirect_with<F>(&self, idx: usize, mut shade_of: F) -> Result<[ShCoeffs; 3]>
    where
        F: FnMut(usize) -> Result<Rgb>,
    {
        self.check_index(idx)?;
        let origin = self.ray_origin(idx);
        let w = self.weight();
        let mut out = [ShCoeffs::zeros(); 3];
        for (dir, y) in self.dirs.iter().zip(&self.basis) {
            let Some((hit, _)) = self.bvh.closest_hit(&Ray { origin, dir: *dir }, Some(idx)) else {
                continue;
            };
            let radiance = self.scene.points()[hit].albedo.component_mul(&shade_of(hit)?);
            for (channel, sh) in out.iter_mut().enumerate() {
                for (ci, yi) in sh.0.iter_mut().zip(y) {
                    *ci += radiance[channel] * yi * w;
                }
            }
        }
        Ok(out)
    }

    pub fn indirect_all(&self, env: &EnvMap, direct_scale: f64) -> Result<Vec<[ShCoeffs; 3]>> {
        let shades = self.direct_shades(env, direct_scale)?;
        (0..self.scene.len())
            .into_par_iter()
            .map(|i| self.indirect_with(i, |j| Ok(shades[j])))
            .collect()
    }
}

pub fn bake_visibility(scene: &GaussianScene, idx: usize, cfg: &BakeConfig) -> Result<ShCoeffs> {
    Baker::new(scene, *cfg)?.visibility(idx)
}

/// Indirect light for one point. Uses the visibility already stored on the
/// occluding points.
pub fn bake_indirect(
    scene: &GaussianScene,
    idx: usize,
    env: &EnvMap,
    direct_scale: f64,
    cfg: &BakeConfig,
) -> Result<[ShCoeffs; 3]> {
    let baker = Baker::new(scene, *cfg)?;
    baker.indirect_with(idx, |j| baker.direct_shade(j, env, direct_scale))
}

//! Equirectangular HDR environment maps.
//!
//! Texel `(u, v)` of a `W × H` map looks along polar angle
//! `θ = π(v + 0.5)/H` measured from +Y and azimuth `φ = 2π(u + 0.5)/W`, i.e.
//! `d = (sinθ cosφ, cosθ, sinθ sinφ)`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{check_mask, AttributeImage};
use crate::{Rgb, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct EnvMap {
    width: usize,
    height: usize,
    texels: Vec<Rgb>,
}

impl EnvMap {
    pub fn new(width: usize, height: usize, texels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ShapeMismatch(format!("environment map {width}x{height} is empty")));
        }
        if texels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} texels for a {width}x{height} map",
                texels.len()
            )));
        }
        for (i, t) in texels.iter().enumerate() {
            if t.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(format!("environment texel {i}")));
            }
            if t.iter().any(|&c| c < 0.0) {
                return Err(Error::InvariantViolation(format!("negative radiance at texel {i}")));
            }
        }
        Ok(Self { width, height, texels })
    }

    pub fn constant(width: usize, height: usize, value: Rgb) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a map by evaluating `f` at every texel direction.
    pub fn from_fn<F: Fn(&Vec3) -> Rgb>(width: usize, height: usize, f: F) -> Result<Self> {
        let texels = (0..height)
            .flat_map(|v| (0..width).map(move |u| (u, v)))
            .map(|(u, v)| f(&texel_dir(u, v, width, height)))
            .collect();
        Self::new(width, height, texels)
    }

    pub fn from_image(img: &AttributeImage) -> Result<Self> {
        let texels = match img.channels() {
            3 => img.data().chunks_exact(3).map(Rgb::from_column_slice).collect(),
            1 => img.data().iter().map(|&v| Rgb::repeat(v)).collect(),
            c => return Err(Error::ShapeMismatch(format!("environment map with {c} channels"))),
        };
        Self::new(img.width(), img.height(), texels)
    }

    pub fn to_image(&self) -> AttributeImage {
        let data = self.texels.iter().flat_map(|t| t.iter().copied()).collect();
        AttributeImage::from_data(self.width, self.height, 3, data).expect("texel count matches dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Whether the map has the usual 2:1 equirectangular aspect.
    pub fn has_standard_aspect(&self) -> bool {
        self.width == 2 * self.height
    }

    pub fn texels(&self) -> &[Rgb] {
        &self.texels
    }

    pub fn texel(&self, u: usize, v: usize) -> Rgb {
        self.texels[v * self.width + u]
    }

    /// Bilinear lookup between texel centers, wrapping in azimuth and
    /// clamping at the poles.
    pub fn sample_bilinear(&self, dir: &Vec3) -> Rgb {
        let (theta, phi) = dir_angles(dir);
        let fx = phi / (2.0 * PI) * self.width as f64 - 0.5;
        let fy = (theta / PI * self.height as f64 - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = fx.floor();
        let tx = fx - x0;
        let y0 = fy.floor();
        let ty = fy - y0;
        let w = self.width as isize;
        let xa = (x0 as isize).rem_euclid(w) as usize;
        let xb = (x0 as isize + 1).rem_euclid(w) as usize;
        let ya = y0 as usize;
        let yb = (ya + 1).min(self.height - 1);
        let top = self.texel(xa, ya) * (1.0 - tx) + self.texel(xb, ya) * tx;
        let bottom = self.texel(xa, yb) * (1.0 - tx) + self.texel(xb, yb) * tx;
        top * (1.0 - ty) + bottom * ty
    }

    pub fn sample_nearest(&self, dir: &Vec3) -> Rgb {
        let (u, v) = dir_to_texel(dir, self.width, self.height);
        self.texel(u, v)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            texels: self.texels.iter().map(|t| t * s).collect(),
        }
    }
}

/// Polar angle from +Y and azimuth in `[0, 2π)`.
fn dir_angles(d: &Vec3) -> (f64, f64) {
    let theta = d.y.clamp(-1.0, 1.0).acos();
    let phi = d.z.atan2(d.x).rem_euclid(2.0 * PI);
    (theta, phi)
}

/// Direction at continuous texel coordinates; integer `(u, v)` is the
/// texel center.
pub fn pixel_to_dir(u: f64, v: f64, width: usize, height: usize) -> Result<Vec3> {
    if !(u >= 0.0 && u < width as f64 && v >= 0.0 && v < height as f64) {
        return Err(Error::OutOfRange(format!("pixel ({u}, {v}) outside {width}x{height}")));
    }
    Ok(dir_at(u, v, width, height))
}

fn dir_at(u: f64, v: f64, width: usize, height: usize) -> Vec3 {
    let theta = PI * (v + 0.5) / height as f64;
    let phi = 2.0 * PI * (u + 0.5) / width as f64;
    Vec3::new(theta.sin() * phi.cos(), theta.cos(), theta.sin() * phi.sin())
}

/// Texel-center direction without range checks.
pub fn texel_dir(u: usize, v: usize, width: usize, height: usize) -> Vec3 {
    dir_at(u as f64, v as f64, width, height)
}

/// The texel containing `d`; inverse of [`texel_dir`].
pub fn dir_to_texel(d: &Vec3, width: usize, height: usize) -> (usize, usize) {
    let (theta, phi) = dir_angles(d);
    let u = ((phi / (2.0 * PI) * width as f64).floor() as usize).min(width - 1);
    let v = ((theta / PI * height as f64).floor() as usize).min(height - 1);
    (u, v)
}

/// Solid angle of texel row `v`.
pub fn texel_solid_angle(v: usize, width: usize, height: usize) -> f64 {
    let theta = PI * (v as f64 + 0.5) / height as f64;
    theta.sin() * (PI / height as f64) * (2.0 * PI / width as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrefilterConfig {
    /// Phong shininess exponent of the clamped-cosine kernel.
    pub exponent: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for PrefilterConfig {
    fn default() -> Self {
        Self { exponent: 16.0, width: 64, height: 32 }
    }
}

impl PrefilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.exponent >= 1.0 && self.exponent.is_finite()) {
            return Err(Error::InvalidConfig(format!("prefilter exponent {} < 1", self.exponent)));
        }
        if self.width < 4 || self.height < 2 {
            return Err(Error::InvalidConfig(format!(
                "prefilter output {}x{} below 4x2",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Sub-samples per texel side used by [`prefilter`] for an input of the
/// given size. Grows with the lobe sharpness relative to the texel angle and
/// is 1 once texels are small against the lobe.
pub fn prefilter_subdivision(width: usize, height: usize, exponent: f64) -> usize {
    let texel_angle = (PI / height as f64).max(2.0 * PI / width as f64);
    ((texel_angle * exponent.sqrt() / 0.25).ceil() as usize).clamp(1, 16)
}

/// Convolves `env` with the unnormalised clamped-cosine lobe
/// `max(0, ω'·ω)^l`, treating the map as constant over each texel. Coarse
/// texels are split into [`prefilter_subdivision`]² cells so the lobe is
/// integrated across the texel, not only sampled at its center.
///
/// Output texels are computed in parallel; each texel's sum runs in a fixed
/// serial order so results do not depend on the thread count.
pub fn prefilter(env: &EnvMap, cfg: &PrefilterConfig) -> Result<EnvMap> {
    cfg.validate()?;
    let (w, h) = (env.width, env.height);
    let sub = prefilter_subdivision(w, h, cfg.exponent);
    let (sw, sh) = (w * sub, h * sub);
    let samples: Vec<(Vec3, Rgb)> = (0..sh)
        .flat_map(|v| (0..sw).map(move |u| (u, v)))
        .map(|(u, v)| (texel_dir(u, v, sw, sh), env.texel(u / sub, v / sub) * texel_solid_angle(v, sw, sh)))
        .filter(|(_, l)| l.iter().any(|&c| c != 0.0))
        .collect();
    let integral_exp = (cfg.exponent.fract() == 0.0 && cfg.exponent <= i32::MAX as f64).then_some(cfg.exponent as i32);
    let kernel = |c: f64| match integral_exp {
        Some(n) => c.powi(n),
        None => c.powf(cfg.exponent),
    };
    let (ow, oh) = (cfg.width, cfg.height);
    let texels = (0..ow * oh)
        .into_par_iter()
        .map(|i| {
            let out_dir = texel_dir(i % ow, i / ow, ow, oh);
            let mut acc = Rgb::zeros();
            for (d, l) in &samples {
                let c = out_dir.dot(d);
                if c > 0.0 {
                    acc += l * kernel(c);
                }
            }
            acc
        })
        .collect();
    EnvMap::new(ow, oh, texels)
}

/// Mean of a one-channel scaling map over the foreground mask.
pub fn average_scaling(scale_map: &AttributeImage, mask: Option<&[bool]>) -> Result<f64> {
    if scale_map.channels() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "scaling map must have 1 channel, got {}",
            scale_map.channels()
        )));
    }
    let mask = mask.or(scale_map.mask());
    check_mask(mask, scale_map.pixel_count())?;
    let (sum, count) = scale_map
        .data()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask.is_none_or(|m| m[*i]))
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
    Ok(sum / count as f64)
}

/// Incident radiance blending shadowed direct light with indirect light:
/// `V·(s_d·direct) + (1 − V)·indirect`.
pub fn compose_incident(visibility: f64, direct_scale: f64, direct: &Rgb, indirect: &Rgb) -> Rgb {
    if visibility == 1.0 {
        return direct * direct_scale;
    }
    if visibility == 0.0 {
        return *indirect;
    }
    direct * (visibility * direct_scale) + indirect * (1.0 - visibility)
}

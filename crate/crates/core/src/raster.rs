//! Software splatting rasterizer.
//!
//! Gaussians are projected with the EWA local affine approximation, sorted
//! front to back once per frame, binned into 16×16 tiles and alpha-blended
//! per pixel. Any per-Gaussian attribute vector can be blended.

use nalgebra::{Matrix2, Matrix2x3, Vector2};
use rayon::prelude::*;

use crate::camera::Camera;
use crate::envlight::EnvMap;
use crate::error::{Error, Result};
use crate::image::AttributeImage;
use crate::scene::GaussianScene;
use crate::shading::{ambient_occlusion, light_maps, shade_scene, ShadingConfig};
use crate::Vec3;

pub const TILE: usize = 16;
pub const NEAR: f64 = 0.01;
/// Added to the diagonal of every screen-space covariance.
pub const COV_REGULARIZATION: f64 = 0.3;
pub const ALPHA_MAX: f64 = 0.99;
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
/// Squared Mahalanobis radius of the footprint (3σ).
pub const FOOTPRINT_M2: f64 = 9.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Splat2D {
    pub mean2d: Vector2<f64>,
    pub cov2d: Matrix2<f64>,
    pub view_depth: f64,
    pub opacity: f64,
    pub index: usize,
}

impl Splat2D {
    /// Half extents of the axis-aligned box around the 3σ ellipse.
    pub fn radius(&self) -> Vector2<f64> {
        Vector2::new(self.cov2d[(0, 0)].sqrt(), self.cov2d[(1, 1)].sqrt()) * FOOTPRINT_M2.sqrt()
    }

    pub fn conic(&self) -> Matrix2<f64> {
        // positive definite by construction
        self.cov2d.try_inverse().unwrap_or_else(Matrix2::zeros)
    }
}

/// Screen-space footprint of a Gaussian, or `None` when it sits behind the
/// near plane or its 3σ box misses the image.
pub fn project_gaussian(g: &crate::GaussianPoint, cam: &Camera, index: usize) -> Option<Splat2D> {
    let t = cam.world_to_camera(&g.position);
    if !(t.z > NEAR) {
        return None;
    }
    let rot = g.rotation.to_rotation_matrix().into_inner();
    let m = rot * nalgebra::Matrix3::from_diagonal(&g.scale);
    let sigma = m * m.transpose();
    let z2 = t.z * t.z;
    let j = Matrix2x3::new(cam.fx / t.z, 0.0, -cam.fx * t.x / z2, 0.0, cam.fy / t.z, -cam.fy * t.y / z2);
    let jw = j * cam.rotation;
    let mut cov2d = jw * sigma * jw.transpose();
    cov2d[(0, 0)] += COV_REGULARIZATION;
    cov2d[(1, 1)] += COV_REGULARIZATION;
    let off = 0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]);
    cov2d[(0, 1)] = off;
    cov2d[(1, 0)] = off;
    let splat = Splat2D {
        mean2d: Vector2::new(cam.fx * t.x / t.z + cam.cx, cam.fy * t.y / t.z + cam.cy),
        cov2d,
        view_depth: t.z,
        opacity: g.opacity,
        index,
    };
    let r = splat.radius();
    let (w, h) = ((cam.width - 1) as f64, (cam.height - 1) as f64);
    let mx = splat.mean2d;
    if !(mx.x + r.x >= -1.0 && mx.x - r.x <= w + 1.0 && mx.y + r.y >= -1.0 && mx.y - r.y <= h + 1.0) {
        return None;
    }
    Some(splat)
}

/// Projects every Gaussian and sorts the survivors by depth, ties by index.
pub fn project_scene(scene: &GaussianScene, cam: &Camera) -> Vec<Splat2D> {
    let mut splats: Vec<Splat2D> = scene
        .points()
        .par_iter()
        .enumerate()
        .filter_map(|(i, g)| project_gaussian(g, cam, i))
        .collect();
    splats.sort_by(|a, b| a.view_depth.total_cmp(&b.view_depth).then(a.index.cmp(&b.index)));
    splats
}

/// Blended attribute image with its coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub image: AttributeImage,
    pub alpha: AttributeImage,
}

struct Prepared {
    mean: Vector2<f64>,
    conic: Matrix2<f64>,
    opacity: f64,
    index: usize,
}

/// Alpha-blends `values` (`channels` numbers per Gaussian, in scene order)
/// into an image the size of the camera viewport.
pub fn rasterize(scene: &GaussianScene, cam: &Camera, values: &[f64], channels: usize) -> Result<Rendered> {
    if channels == 0 || values.len() != scene.len() * channels {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} Gaussians with {channels} channels",
            values.len(),
            scene.len()
        )));
    }
    let (w, h) = (cam.width, cam.height);
    let splats = project_scene(scene, cam);
    let tiles_x = w.div_ceil(TILE);
    let tiles_y = h.div_ceil(TILE);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    let prepared: Vec<Prepared> = splats
        .iter()
        .map(|s| Prepared { mean: s.mean2d, conic: s.conic(), opacity: s.opacity, index: s.index })
        .collect();
    for (k, s) in splats.iter().enumerate() {
        // one pixel of slack keeps the box a superset of the per-pixel test
        let r = s.radius().add_scalar(1.0);
        let x0 = (s.mean2d.x - r.x).floor().max(0.0) as usize;
        let y0 = (s.mean2d.y - r.y).floor().max(0.0) as usize;
        let x1 = ((s.mean2d.x + r.x).ceil().max(0.0) as usize).min(w - 1);
        let y1 = ((s.mean2d.y + r.y).ceil().max(0.0) as usize).min(h - 1);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for ty in y0 / TILE..=y1 / TILE {
            for tx in x0 / TILE..=x1 / TILE {
                bins[ty * tiles_x + tx].push(k as u32);
            }
        }
    }

    let tiles: Vec<(Vec<f64>, Vec<f64>)> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| {
            let (tx, ty) = (t % tiles_x, t / tiles_x);
            let xs = tx * TILE..((tx + 1) * TILE).min(w);
            let ys = ty * TILE..((ty + 1) * TILE).min(h);
            let mut color = Vec::with_capacity(xs.len() * ys.len() * channels);
            let mut alpha = Vec::with_capacity(xs.len() * ys.len());
            let mut acc = vec![0.0; channels];
            for y in ys {
                for x in xs.clone() {
                    let a = blend_pixel(x, y, bins[t].iter().map(|&k| &prepared[k as usize]), values, &mut acc);
                    color.extend_from_slice(&acc);
                    alpha.push(a);
                }
            }
            (color, alpha)
        })
        .collect();

    let mut image = AttributeImage::new(w, h, channels);
    let mut alpha = AttributeImage::new(w, h, 1);
    for (t, (color, a)) in tiles.into_iter().enumerate() {
        let (tx, ty) = (t % tiles_x, t / tiles_x);
        let mut i = 0;
        for y in ty * TILE..((ty + 1) * TILE).min(h) {
            for x in tx * TILE..((tx + 1) * TILE).min(w) {
                image.pixel_mut(x, y).copy_from_slice(&color[i * channels..(i + 1) * channels]);
                alpha.set(x, y, 0, a[i]);
                i += 1;
            }
        }
    }
    Ok(Rendered { image, alpha })
}

fn blend_pixel<'a>(
    x: usize,
    y: usize,
    splats: impl Iterator<Item = &'a Prepared>,
    values: &[f64],
    acc: &mut [f64],
) -> f64 {
    let channels = acc.len();
    acc.fill(0.0);
    let mut transmittance = 1.0;
    for s in splats {
        let d = Vector2::new(x as f64 - s.mean.x, y as f64 - s.mean.y);
        let m = d.dot(&(s.conic * d));
        if !(m <= FOOTPRINT_M2) {
            continue;
        }
        let a = (s.opacity * (-0.5 * m).exp()).min(ALPHA_MAX);
        if a < ALPHA_MIN {
            continue;
        }
        let weight = a * transmittance;
        let c = &values[s.index * channels..(s.index + 1) * channels];
        for (o, v) in acc.iter_mut().zip(c) {
            *o += weight * v;
        }
        transmittance *= 1.0 - a;
    }
    1.0 - transmittance
}

/// Which per-Gaussian quantity a render blends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Pbr,
    Albedo,
    Normal,
    Ao,
    Roughness,
    Direct,
    Indirect,
}

impl Channel {
    pub fn channels(self) -> usize {
        match self {
            Channel::Ao | Channel::Roughness => 1,
            _ => 3,
        }
    }

    pub fn needs_lighting(self) -> bool {
        matches!(self, Channel::Pbr | Channel::Direct | Channel::Indirect)
    }
}

/// Everything the shaded channels need beyond the scene.
#[derive(Clone, Debug)]
pub struct Lighting<'a> {
    /// Prefiltered environment map.
    pub env: &'a EnvMap,
    pub direct_scale: f64,
    pub camera_center: Vec3,
    pub config: ShadingConfig,
}

/// Per-Gaussian values for `channel`, flattened in scene order.
pub fn channel_values(scene: &GaussianScene, channel: Channel, lighting: Option<&Lighting>) -> Result<Vec<f64>> {
    let lit = || {
        lighting.ok_or_else(|| Error::InvalidConfig(format!("{channel:?} rendering needs an environment map")))
    };
    let pts = scene.points();
    let flat3 = |v: Vec<Vec3>| v.iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()).collect();
    Ok(match channel {
        Channel::Albedo => flat3(pts.iter().map(|g| g.albedo).collect()),
        Channel::Normal => flat3(pts.iter().map(|g| g.normal).collect()),
        Channel::Roughness => pts.iter().map(|g| g.roughness).collect(),
        Channel::Ao => pts.par_iter().map(|g| ambient_occlusion(&g.visibility, &g.normal)).collect(),
        Channel::Pbr => {
            let l = lit()?;
            flat3(shade_scene(scene, l.env, l.direct_scale, &l.camera_center, &l.config)?)
        }
        Channel::Direct | Channel::Indirect => {
            let l = lit()?;
            let maps = pts
                .par_iter()
                .map(|g| light_maps(g, l.env, l.direct_scale, &l.config))
                .collect::<Result<Vec<_>>>()?;
            let pick = channel == Channel::Direct;
            flat3(maps.into_iter().map(|(d, i)| if pick { d } else { i }).collect())
        }
    })
}

/// Computes the channel values and blends them.
pub fn render(scene: &GaussianScene, cam: &Camera, channel: Channel, lighting: Option<&Lighting>) -> Result<Rendered> {
    let values = channel_values(scene, channel, lighting)?;
    rasterize(scene, cam, &values, channel.channels())
}

//! Real spherical harmonics up to band 3 (16 coefficients).
//!
//! Coefficients are ordered `(l, m)` = (0,0), (1,-1), (1,0), (1,1), (2,-2) ...
//! (3,3). The basis is the graphics convention without the Condon–Shortley
//! phase, with +z as the polar axis, so `Y_{1,-1} ∝ y`, `Y_{1,0} ∝ z` and
//! `Y_{1,1} ∝ x`.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use crate::envlight::texel_dir;
use crate::error::{Error, Result};
use crate::{Rgb, Vec3};

pub const SH_COUNT: usize = 16;

/// `Y_{0,0}`.
pub const SH_C0: f64 = 0.282_094_791_773_878_14;

const UNIT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShCoeffs(pub [f64; SH_COUNT]);

impl ShCoeffs {
    pub const fn zeros() -> Self {
        Self([0.0; SH_COUNT])
    }

    /// Coefficients of the constant function `value`.
    pub fn constant(value: f64) -> Self {
        let mut c = [0.0; SH_COUNT];
        c[0] = value / SH_C0;
        Self(c)
    }

    /// Sum of squared coefficients in band `l`.
    pub fn band_energy(&self, l: usize) -> f64 {
        self.0[l * l..(l + 1) * (l + 1)].iter().map(|c| c * c).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Default for ShCoeffs {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Add for ShCoeffs {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.0.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
        self
    }
}

impl Mul<f64> for ShCoeffs {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        self.0.iter_mut().for_each(|a| *a *= rhs);
        self
    }
}

/// Basis values at `dir`, which must be unit length within 1e-6.
pub fn sh_basis(dir: &Vec3) -> Result<[f64; SH_COUNT]> {
    let norm = dir.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvariantViolation(format!("SH direction not unit length (|d| = {norm})")));
    }
    Ok(basis(dir))
}

pub(crate) fn basis(d: &Vec3) -> [f64; SH_COUNT] {
    let (x, y, z) = (d.x, d.y, d.z);
    let (x2, y2, z2) = (x * x, y * y, z * z);
    [
        SH_C0,
        0.488_602_511_902_919_9 * y,
        0.488_602_511_902_919_9 * z,
        0.488_602_511_902_919_9 * x,
        1.092_548_430_592_079_2 * x * y,
        1.092_548_430_592_079_2 * y * z,
        0.315_391_565_252_520_05 * (3.0 * z2 - 1.0),
        1.092_548_430_592_079_2 * x * z,
        0.546_274_215_296_039_6 * (x2 - y2),
        0.590_043_589_926_643_5 * y * (3.0 * x2 - y2),
        2.890_611_442_640_554 * x * y * z,
        0.457_045_799_464_465_8 * y * (5.0 * z2 - 1.0),
        0.373_176_332_590_115_4 * z * (5.0 * z2 - 3.0),
        0.457_045_799_464_465_8 * x * (5.0 * z2 - 1.0),
        1.445_305_721_320_277 * z * (x2 - y2),
        0.590_043_589_926_643_5 * x * (x2 - 3.0 * y2),
    ]
}

/// `Σ c_lm Y_lm(dir)`, optionally clipped to `[0, 1]` (visibility semantics).
pub fn sh_eval(c: &ShCoeffs, dir: &Vec3, clamp01: bool) -> f64 {
    let y = basis(dir);
    let v: f64 = c.0.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    if clamp01 {
        v.clamp(0.0, 1.0)
    } else {
        v
    }
}

/// Evaluates three SH channels at once.
pub fn sh_eval_rgb(c: &[ShCoeffs; 3], dir: &Vec3) -> Rgb {
    let y = basis(dir);
    let dot = |s: &ShCoeffs| s.0.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>();
    Rgb::new(dot(&c[0]), dot(&c[1]), dot(&c[2]))
}

fn check_grid(width: usize, height: usize) -> Result<()> {
    if width < 16 || height < 8 {
        return Err(Error::InvalidConfig(format!("SH projection grid {width}x{height} is below 16x8")));
    }
    Ok(())
}

/// Projects `f` onto the basis using texel-center quadrature on an
/// equirectangular `width × height` grid, `Δω = sinθ (π/H)(2π/W)`.
pub fn sh_project<F>(width: usize, height: usize, f: F) -> Result<ShCoeffs>
where
    F: Fn(&Vec3) -> f64,
{
    check_grid(width, height)?;
    let mut c = [0.0; SH_COUNT];
    let dtheta = PI / height as f64;
    let dphi = 2.0 * PI / width as f64;
    for v in 0..height {
        let theta = PI * (v as f64 + 0.5) / height as f64;
        let weight = theta.sin() * dtheta * dphi;
        for u in 0..width {
            let d = texel_dir(u, v, width, height);
            let value = f(&d);
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("SH sample at texel ({u}, {v})")));
            }
            let y = basis(&d);
            for (ci, yi) in c.iter_mut().zip(y.iter()) {
                *ci += value * yi * weight;
            }
        }
    }
    Ok(ShCoeffs(c))
}

/// As [`sh_project`] with samples given row-major on the grid.
pub fn sh_project_samples(samples: &[f64], width: usize, height: usize) -> Result<ShCoeffs> {
    if samples.len() != width * height {
        return Err(Error::ShapeMismatch(format!(
            "{} samples for a {width}x{height} grid",
            samples.len()
        )));
    }
    check_grid(width, height)?;
    sh_project(width, height, |d| {
        let (u, v) = crate::envlight::dir_to_texel(d, width, height);
        samples[v * width + u]
    })
}

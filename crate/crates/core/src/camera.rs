//! Pinhole camera with world-to-camera extrinsics.
//!
//! Camera space follows the usual vision convention: +x right, +y down,
//! +z forward. Pixel coordinates are continuous with pixel `(u, v)` sitting at
//! integer coordinates, so `K · X_cam / z` lands directly on pixel indices.
//!
//! Text format, one labeled line each (`#` starts a comment):
//!
//! ```text
//! fx 500
//! fy 500
//! cx 256
//! cy 256
//! R 1 0 0 0 1 0 0 0 1
//! t 0 0 0
//! size 512 512
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix3x4};

use crate::error::{Error, Result};
use crate::Vec3;

const ORTHO_TOL: f64 = 1e-4;
const KEEP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation.
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Matrix3<f64>,
        translation: Vec3,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::InvariantViolation(format!("focal lengths must be positive, got {fx}, {fy}")));
        }
        let values = [fx, fy, cx, cy].into_iter().chain(rotation.iter().copied()).chain(translation.iter().copied());
        if values.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("camera parameter".into()));
        }
        let rotation = orthonormalize(rotation)?;
        Ok(Self { fx, fy, cx, cy, rotation, translation, width, height })
    }

    /// Camera at `eye` looking at `target`; `up` is the world up direction
    /// (image rows grow opposite to it).
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, focal: f64, width: usize, height: usize) -> Result<Self> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        Self::new(
            focal,
            focal,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            rotation,
            translation,
            width,
            height,
        )
    }

    pub fn intrinsics(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// `P = K [R | t]`.
    pub fn projection_matrix(&self) -> Matrix3x4<f64> {
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        rt.set_column(3, &self.translation);
        self.intrinsics() * rt
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn world_to_camera(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    /// Projects a world point to `(u, v, z)` with `z` the camera-space depth.
    pub fn project(&self, x: &Vec3) -> (f64, f64, f64) {
        let c = self.world_to_camera(x);
        (self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy, c.z)
    }
}

fn orthonormalize(r: Matrix3<f64>) -> Result<Matrix3<f64>> {
    let dev = (r.transpose() * r - Matrix3::identity()).abs().max();
    let det = r.determinant();
    if dev > ORTHO_TOL || (det - 1.0).abs() > ORTHO_TOL {
        return Err(Error::InvariantViolation(format!(
            "rotation not orthonormal (|RᵀR - I| = {dev:e}, det = {det})"
        )));
    }
    if dev <= KEEP_TOL && (det - 1.0).abs() <= KEEP_TOL {
        return Ok(r);
    }
    // nearest rotation via polar decomposition
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    Ok(u * v_t)
}

pub fn parse_camera(text: &str) -> Result<Camera> {
    let mut fields: HashMap<&str, (usize, Vec<f64>)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label = toks.next().unwrap_or_default();
        let values = toks
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: format!("`{t}`: {e}") }))
            .collect::<Result<Vec<_>>>()?;
        if fields.insert(label, (i + 1, values)).is_some() {
            return Err(Error::Parse { line: i + 1, msg: format!("duplicate label `{label}`") });
        }
    }
    let mut take = |label: &str, n: usize| -> Result<Vec<f64>> {
        let (line, v) = fields
            .remove(label)
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("missing `{label}` line") })?;
        if v.len() != n {
            return Err(Error::Parse { line, msg: format!("`{label}` expects {n} numbers, got {}", v.len()) });
        }
        Ok(v)
    };
    let fx = take("fx", 1)?[0];
    let fy = take("fy", 1)?[0];
    let cx = take("cx", 1)?[0];
    let cy = take("cy", 1)?[0];
    let r = take("R", 9)?;
    let t = take("t", 3)?;
    let size = take("size", 2)?;
    if let Some((label, (line, _))) = fields.into_iter().next() {
        return Err(Error::Parse { line, msg: format!("unknown label `{label}`") });
    }
    let dims = size
        .iter()
        .map(|&s| {
            if s >= 0.0 && s.fract() == 0.0 {
                Ok(s as usize)
            } else {
                Err(Error::InvariantViolation(format!("image size must be a non-negative integer, got {s}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Camera::new(fx, fy, cx, cy, Matrix3::from_row_slice(&r), Vec3::from_column_slice(&t), dims[0], dims[1])
}

pub fn serialize_camera(cam: &Camera) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "fx {}", cam.fx);
    let _ = writeln!(out, "fy {}", cam.fy);
    let _ = writeln!(out, "cx {}", cam.cx);
    let _ = writeln!(out, "cy {}", cam.cy);
    out.push('R');
    for i in 0..3 {
        for j in 0..3 {
            let _ = write!(out, " {}", cam.rotation[(i, j)]);
        }
    }
    out.push_str("\nt");
    for v in cam.translation.iter() {
        let _ = write!(out, " {v}");
    }
    let _ = writeln!(out, "\nsize {} {}", cam.width, cam.height);
    out
}

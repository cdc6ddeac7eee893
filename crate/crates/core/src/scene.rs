//! Gaussian point records and the `gsc` text scene format.
//!
//! A scene file is UTF-8 text: `gsc 1` on the first line, the record count on
//! the second, then one record per line holding 82 whitespace-separated
//! numbers:
//!
//! ```text
//! p(3) r(4: w x y z) s(3) opacity(1) n(3) albedo(3) roughness(1) v(16) l_ind(48: r g b)
//! ```

use std::fmt::Write as _;

use nalgebra::{Quaternion, UnitQuaternion};

use crate::error::{Error, Result};
use crate::sh::ShCoeffs;
use crate::Vec3;

pub const RECORD_LEN: usize = 82;
const HEADER: &str = "gsc 1";

const UNIT_TOL: f64 = 1e-6;
/// Quaternions and normals further than this from unit length are rejected.
const RENORM_TOL: f64 = 1e-3;
/// Below this deviation a parsed vector is kept as is so that re-serialising
/// reproduces the same text.
const KEEP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPoint {
    pub position: Vec3,
    pub rotation: UnitQuaternion<f64>,
    /// Per-axis standard deviation in the local frame of `rotation`.
    pub scale: Vec3,
    pub opacity: f64,
    pub normal: Vec3,
    /// Light visibility as SH coefficients.
    pub visibility: ShCoeffs,
    pub albedo: Vec3,
    pub roughness: f64,
    /// Indirect radiance, one SH vector per RGB channel.
    pub indirect: [ShCoeffs; 3],
}

impl GaussianPoint {
    /// A fully visible, white, mid-rough point with no indirect light.
    pub fn new(position: Vec3, normal: Vec3) -> Self {
        Self {
            position,
            rotation: UnitQuaternion::identity(),
            scale: Vec3::new(1.0, 1.0, 1.0),
            opacity: 1.0,
            normal,
            visibility: ShCoeffs::constant(1.0),
            albedo: Vec3::new(1.0, 1.0, 1.0),
            roughness: 0.5,
            indirect: [ShCoeffs::zeros(); 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.rotation.quaternion();
        if (q.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvariantViolation(format!("|r| = {}", q.norm())));
        }
        if self.scale.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvariantViolation(format!("scale {:?} not positive", self.scale)));
        }
        if !(0.0..=1.0).contains(&self.opacity) {
            return Err(Error::InvariantViolation(format!("opacity {}", self.opacity)));
        }
        if (self.normal.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvariantViolation(format!("|n| = {}", self.normal.norm())));
        }
        if self.albedo.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvariantViolation(format!("albedo {:?}", self.albedo)));
        }
        if !(0.0..=1.0).contains(&self.roughness) {
            return Err(Error::InvariantViolation(format!("roughness {}", self.roughness)));
        }
        Ok(())
    }

    fn to_record(&self) -> [f64; RECORD_LEN] {
        let mut rec = [0.0; RECORD_LEN];
        let q = self.rotation.quaternion();
        rec[0..3].copy_from_slice(self.position.as_slice());
        rec[3..7].copy_from_slice(&[q.w, q.i, q.j, q.k]);
        rec[7..10].copy_from_slice(self.scale.as_slice());
        rec[10] = self.opacity;
        rec[11..14].copy_from_slice(self.normal.as_slice());
        rec[14..17].copy_from_slice(self.albedo.as_slice());
        rec[17] = self.roughness;
        rec[18..34].copy_from_slice(&self.visibility.0);
        for (c, sh) in self.indirect.iter().enumerate() {
            rec[34 + 16 * c..50 + 16 * c].copy_from_slice(&sh.0);
        }
        rec
    }

    fn from_record(rec: &[f64; RECORD_LEN]) -> Result<Self> {
        let q = Quaternion::new(rec[3], rec[4], rec[5], rec[6]);
        let q = renormalize_quaternion(q)?;
        let n = renormalize(Vec3::new(rec[11], rec[12], rec[13]), "normal")?;
        let mut indirect = [ShCoeffs::zeros(); 3];
        for (c, sh) in indirect.iter_mut().enumerate() {
            sh.0.copy_from_slice(&rec[34 + 16 * c..50 + 16 * c]);
        }
        let mut visibility = ShCoeffs::zeros();
        visibility.0.copy_from_slice(&rec[18..34]);
        let point = Self {
            position: Vec3::new(rec[0], rec[1], rec[2]),
            rotation: q,
            scale: Vec3::new(rec[7], rec[8], rec[9]),
            opacity: rec[10],
            normal: n,
            visibility,
            albedo: Vec3::new(rec[14], rec[15], rec[16]),
            roughness: rec[17],
            indirect,
        };
        point.validate()?;
        Ok(point)
    }
}

fn renormalize_quaternion(q: Quaternion<f64>) -> Result<UnitQuaternion<f64>> {
    let norm = q.norm();
    if (norm - 1.0).abs() > RENORM_TOL {
        return Err(Error::InvariantViolation(format!("|r| = {norm}")));
    }
    if (norm - 1.0).abs() > KEEP_TOL {
        Ok(UnitQuaternion::from_quaternion(q))
    } else {
        Ok(UnitQuaternion::new_unchecked(q))
    }
}

fn renormalize(v: Vec3, what: &str) -> Result<Vec3> {
    let norm = v.norm();
    if (norm - 1.0).abs() > RENORM_TOL {
        return Err(Error::InvariantViolation(format!("|{what}| = {norm}")));
    }
    if (norm - 1.0).abs() > KEEP_TOL {
        Ok(v / norm)
    } else {
        Ok(v)
    }
}

/// Axis-aligned bounding box of the point positions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }
}

/// An ordered list of Gaussians. Point order is the tie-breaking identity
/// used by sorting in the rasterizer and is preserved through IO.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianScene {
    points: Vec<GaussianPoint>,
    bbox: Aabb,
}

impl GaussianScene {
    pub fn new(points: Vec<GaussianPoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            p.validate().map_err(|e| match e {
                Error::InvariantViolation(m) => Error::InvariantViolation(format!("point {i}: {m}")),
                other => other,
            })?;
        }
        let bbox = compute_bbox(&points);
        Ok(Self { points, bbox })
    }

    pub fn points(&self) -> &[GaussianPoint] {
        &self.points
    }

    /// Mutable access for attribute updates (baking). Positions must not be
    /// changed through this; use [`GaussianScene::new`] to rebuild instead.
    pub fn points_mut(&mut self) -> &mut [GaussianPoint] {
        &mut self.points
    }

    pub fn into_points(self) -> Vec<GaussianPoint> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }
}

fn compute_bbox(points: &[GaussianPoint]) -> Aabb {
    let Some(first) = points.first() else {
        return Aabb { min: Vec3::zeros(), max: Vec3::zeros() };
    };
    points.iter().fold(Aabb { min: first.position, max: first.position }, |b, p| Aabb {
        min: b.min.inf(&p.position),
        max: b.max.sup(&p.position),
    })
}

pub fn parse_scene(text: &str) -> Result<GaussianScene> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, HEADER)) => {}
        Some((line, other)) => {
            return Err(Error::Parse { line, msg: format!("expected header `{HEADER}`, got `{other}`") })
        }
        None => return Err(Error::Parse { line: 1, msg: "empty scene file".into() }),
    }
    let declared = match lines.next() {
        Some((line, l)) => l.parse::<usize>().map_err(|e| Error::Parse { line, msg: format!("record count: {e}") })?,
        None => return Err(Error::Parse { line: 2, msg: "missing record count".into() }),
    };

    let mut points = Vec::with_capacity(declared);
    let mut found = 0;
    for (line, l) in lines {
        found += 1;
        if found > declared {
            continue;
        }
        let mut rec = [0.0; RECORD_LEN];
        let mut n = 0;
        for tok in l.split_whitespace() {
            if n == RECORD_LEN {
                n += 1;
                break;
            }
            let v: f64 = tok
                .parse()
                .map_err(|e| Error::Parse { line, msg: format!("`{tok}`: {e}") })?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("line {line}: `{tok}`")));
            }
            rec[n] = v;
            n += 1;
        }
        if n != RECORD_LEN {
            return Err(Error::Parse { line, msg: format!("expected {RECORD_LEN} numbers per record") });
        }
        let point = GaussianPoint::from_record(&rec).map_err(|e| match e {
            Error::InvariantViolation(m) => Error::InvariantViolation(format!("line {line}: {m}")),
            other => other,
        })?;
        points.push(point);
    }
    if found != declared {
        return Err(Error::CountMismatch { declared, found });
    }
    GaussianScene::new(points)
}

/// Numbers are written with 10 significant digits, which re-parses to within
/// 1e-6 of the stored value and is a fixed point after one round trip.
pub fn serialize_scene(scene: &GaussianScene) -> String {
    let mut out = String::with_capacity(16 + scene.len() * RECORD_LEN * 17);
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "{}", scene.len());
    for p in scene.points() {
        let rec = p.to_record();
        for (i, v) in rec.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

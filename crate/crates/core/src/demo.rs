//! Synthetic demo content: two touching spheres under a sky.
//!
//! The spheres are built from thin surface disks so each point's ray origin
//! stays clear of its neighbours' ellipsoids.

use nalgebra::UnitQuaternion;

use crate::camera::Camera;
use crate::envlight::EnvMap;
use crate::error::Result;
use crate::scene::{GaussianPoint, GaussianScene};
use crate::shading::fibonacci_sphere;
use crate::{Rgb, Vec3};

pub const SPHERE_POINTS: usize = 2500;
pub const SPHERE_RADIUS: f64 = 1.0;
pub const DISK_RADIUS: f64 = 0.05;
pub const DISK_THICKNESS: f64 = 0.001;

fn sphere(center: Vec3, albedo: Rgb, roughness: f64) -> impl Iterator<Item = GaussianPoint> {
    fibonacci_sphere(SPHERE_POINTS).into_iter().map(move |d| {
        let mut g = GaussianPoint::new(center + d * SPHERE_RADIUS, d);
        g.rotation = UnitQuaternion::rotation_between(&Vec3::z(), &d)
            .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vec3::x_axis(), std::f64::consts::PI));
        g.scale = Vec3::new(DISK_RADIUS, DISK_RADIUS, DISK_THICKNESS);
        g.opacity = 0.95;
        g.albedo = albedo;
        g.roughness = roughness;
        g
    })
}

/// Two unit spheres centred at `(±1, 0, 0)`, touching at the origin.
/// Visibility is unbaked (everything fully visible).
pub fn two_spheres() -> GaussianScene {
    let left = sphere(Vec3::new(-SPHERE_RADIUS, 0.0, 0.0), Rgb::new(0.8, 0.3, 0.25), 0.4);
    let right = sphere(Vec3::new(SPHERE_RADIUS, 0.0, 0.0), Rgb::new(0.25, 0.5, 0.8), 0.7);
    GaussianScene::new(left.chain(right).collect()).expect("demo scene is valid")
}

/// Blue sky above, warm ground below and a soft sun high in the +z half.
pub fn sky(width: usize, height: usize) -> Result<EnvMap> {
    let sun = Vec3::new(0.3, 0.8, 0.5).normalize();
    EnvMap::from_fn(width, height, |d| {
        let up = d.y.max(0.0);
        let sky = Rgb::new(0.45, 0.6, 0.9) * (0.4 + 0.6 * up);
        let base = if d.y >= 0.0 { sky } else { Rgb::new(0.25, 0.2, 0.15) * (1.0 + 0.5 * d.y) };
        base + Rgb::new(3.0, 2.8, 2.5) * d.dot(&sun).max(0.0).powi(32)
    })
}

/// Viewer in front of the contact point, slightly above.
pub fn demo_camera(width: usize, height: usize) -> Result<Camera> {
    Camera::look_at(
        Vec3::new(0.0, 0.8, 5.0),
        Vec3::zeros(),
        Vec3::y(),
        0.9 * width as f64,
        width,
        height,
    )
}

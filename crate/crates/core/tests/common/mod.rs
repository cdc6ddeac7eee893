#![allow(dead_code)]

use gsrelight_core::geometry::FeatureTensor;
use gsrelight_core::{Camera, GaussianPoint, GaussianScene, Rgb, ShCoeffs, Vec3};
use nalgebra::{Matrix2, Matrix3, Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_sh(rng: &mut impl Rng, amp: f64) -> ShCoeffs {
    ShCoeffs(std::array::from_fn(|_| rng.random_range(-amp..amp)))
}

pub fn random_point(rng: &mut impl Rng) -> GaussianPoint {
    let mut g = GaussianPoint::new(
        Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0)),
        unit(rng),
    );
    g.rotation = UnitQuaternion::from_euler_angles(
        rng.random_range(-3.0..3.0),
        rng.random_range(-1.5..1.5),
        rng.random_range(-3.0..3.0),
    );
    g.scale = Vec3::from_fn(|_, _| rng.random_range(0.01..0.5));
    g.opacity = rng.random_range(0.0..1.0);
    g.albedo = Rgb::from_fn(|_, _| rng.random_range(0.0..1.0));
    g.roughness = rng.random_range(0.0..1.0);
    g.visibility = random_sh(rng, 0.5);
    g.indirect = [random_sh(rng, 0.3), random_sh(rng, 0.3), random_sh(rng, 0.3)];
    g
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Exact-for-low-degree spherical quadrature: Gauss–Legendre in z, uniform
/// in azimuth.
pub fn sphere_quadrature(n_theta: usize, n_phi: usize) -> Vec<(Vec3, f64)> {
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for (z, w) in gauss_legendre(n_theta) {
        let r = (1.0 - z * z).sqrt();
        for k in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64;
            out.push((Vec3::new(r * phi.cos(), r * phi.sin(), z), w * 2.0 * std::f64::consts::PI / n_phi as f64));
        }
    }
    out
}

pub fn random_camera(r: &mut impl Rng) -> Camera {
    let rot = Rotation3::from_euler_angles(r.random_range(-3.0..3.0), r.random_range(-1.5..1.5), r.random_range(-3.0..3.0));
    Camera::new(
        r.random_range(50.0..800.0),
        r.random_range(50.0..800.0),
        r.random_range(0.0..640.0),
        r.random_range(0.0..480.0),
        rot.into_inner(),
        Vec3::from_fn(|_, _| r.random_range(-5.0..5.0)),
        640,
        480,
    )
    .unwrap()
}

/// Camera at `(0, 0, height)` looking down the −z axis.
pub fn overhead(height: f64, w: usize, h: usize) -> Camera {
    let rot = Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
    Camera::new(100.0, 100.0, w as f64 / 2.0, h as f64 / 2.0, rot, -(rot * Vec3::new(0.0, 0.0, height)), w, h).unwrap()
}

/// Unit features whose angle grows along the row, so shifted copies have a
/// unique best match.
pub fn shifted_pair(w: usize, h: usize, shift: usize) -> (FeatureTensor, FeatureTensor) {
    let step = 0.7 * std::f64::consts::PI / (w + shift) as f64;
    let feat = |col: usize, row: usize| {
        let a = step * col as f64 + 0.1 * row as f64;
        [a.cos(), a.sin()]
    };
    let left = (0..h).flat_map(|i| (0..w).flat_map(move |j| feat(j, i))).collect();
    let right = (0..h).flat_map(|i| (0..w).flat_map(move |k| feat(k + shift, i))).collect();
    (FeatureTensor::new(w, h, 2, left).unwrap(), FeatureTensor::new(w, h, 2, right).unwrap())
}

/// Every pixel visits every Gaussian, in depth order, with the projection
/// derived directly from the camera-space Jacobian.
pub fn brute_force(scene: &GaussianScene, cam: &Camera, values: &[f64], ch: usize) -> (Vec<f64>, Vec<f64>) {
    let mut splats = Vec::new();
    for (i, g) in scene.points().iter().enumerate() {
        let t = cam.rotation * g.position + cam.translation;
        if t.z <= 0.01 {
            continue;
        }
        let (x, y, z) = (t.x, t.y, t.z);
        let jac = nalgebra::Matrix2x3::new(cam.fx / z, 0.0, -cam.fx * x / (z * z), 0.0, cam.fy / z, -cam.fy * y / (z * z));
        let world = g.rotation.to_rotation_matrix().into_inner() * Matrix3::from_diagonal(&(g.scale.component_mul(&g.scale)))
            * g.rotation.to_rotation_matrix().into_inner().transpose();
        let view = cam.rotation * world * cam.rotation.transpose();
        let cov = jac * view * jac.transpose() + Matrix2::identity() * 0.3;
        let mean = (cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy);
        splats.push((z, i, mean, cov.try_inverse().unwrap(), g.opacity));
    }
    splats.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut img = vec![0.0; cam.width * cam.height * ch];
    let mut alpha = vec![0.0; cam.width * cam.height];
    for py in 0..cam.height {
        for px in 0..cam.width {
            let mut t = 1.0;
            for &(_, i, mean, conic, o) in &splats {
                let d = nalgebra::Vector2::new(px as f64 - mean.0, py as f64 - mean.1);
                let m = (d.transpose() * conic * d)[0];
                if m > 9.0 {
                    continue;
                }
                let a = (o * (-0.5 * m).exp()).min(0.99);
                if a < 1.0 / 255.0 {
                    continue;
                }
                for c in 0..ch {
                    img[(py * cam.width + px) * ch + c] += a * t * values[i * ch + c];
                }
                t *= 1.0 - a;
            }
            alpha[py * cam.width + px] = 1.0 - t;
        }
    }
    (img, alpha)
}

mod common;

use std::f64::consts::PI;

use common::{random_sh, rng, sphere_quadrature, unit};
use gsrelight_core::sh::{sh_basis, sh_eval, sh_project, ShCoeffs, SH_COUNT};
use gsrelight_core::Vec3;
use nalgebra::Rotation3;
use proptest::prelude::*;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Associated Legendre `P_l^m(x)` without the Condon–Shortley phase, by the
/// standard upward recurrences.
fn legendre(l: usize, m: usize, x: f64) -> f64 {
    let mut pmm = 1.0;
    let s = (1.0 - x * x).max(0.0).sqrt();
    for i in 0..m {
        pmm *= (2 * i + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut p = 0.0;
    for ll in m + 2..=l {
        p = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = p;
    }
    p
}

fn oracle_basis(d: &Vec3) -> [f64; SH_COUNT] {
    let phi = d.y.atan2(d.x);
    let mut out = [0.0; SH_COUNT];
    for l in 0..4usize {
        for m in -(l as i64)..=(l as i64) {
            let am = m.unsigned_abs() as usize;
            let k = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
            let p = legendre(l, am, d.z);
            let v = match m {
                0 => k * p,
                m if m > 0 => 2f64.sqrt() * k * p * (m as f64 * phi).cos(),
                _ => 2f64.sqrt() * k * p * (am as f64 * phi).sin(),
            };
            out[(l * l) as usize + (l as i64 + m) as usize] = v;
        }
    }
    out
}

fn gl_project(f: impl Fn(&Vec3) -> f64) -> ShCoeffs {
    let mut c = [0.0; SH_COUNT];
    for (d, w) in sphere_quadrature(32, 64) {
        let y = sh_basis(&d).unwrap();
        let v = f(&d);
        for (ci, yi) in c.iter_mut().zip(y) {
            *ci += v * yi * w;
        }
    }
    ShCoeffs(c)
}

#[test]
fn basis_matches_legendre_recurrence() {
    let mut r = rng(1);
    for _ in 0..100 {
        let d = unit(&mut r);
        let a = sh_basis(&d).unwrap();
        let b = oracle_basis(&d);
        for i in 0..SH_COUNT {
            assert!((a[i] - b[i]).abs() <= 1e-10, "index {i}: {} vs {}", a[i], b[i]);
        }
    }
}

#[test]
fn basis_pole_values() {
    let y = sh_basis(&Vec3::z()).unwrap();
    assert!((y[0] - 0.28209479).abs() < 1e-8);
    assert!((y[2] - 0.48860251).abs() < 1e-8);
    assert_eq!(y[1], 0.0);
    assert_eq!(y[3], 0.0);
    assert!(sh_basis(&Vec3::new(0.0, 0.0, 1.1)).is_err());
}

#[test]
fn projection_of_constants_and_cosine() {
    let c = sh_project(128, 64, |_| 1.0).unwrap();
    assert!((c.0[0] - 3.5449077).abs() < 1e-3);
    assert!(c.0[1..].iter().all(|v| v.abs() <= 1e-3));
    let c = sh_project(128, 64, |d| d.z.max(0.0)).unwrap();
    assert!((c.0[0] - 0.8862269).abs() < 1e-3);
    assert!(sh_project(8, 8, |_| 1.0).is_err());
    assert!(sh_project(16, 8, |_| f64::NAN).is_err());
}

#[test]
fn eval_examples() {
    let one = ShCoeffs::constant(1.0);
    assert!((one.0[0] - 2.0 * PI.sqrt()).abs() < 1e-12);
    let mut r = rng(2);
    for _ in 0..50 {
        let d = unit(&mut r);
        assert!((sh_eval(&one, &d, false) - 1.0).abs() < 1e-14);
        assert_eq!(sh_eval(&ShCoeffs::zeros(), &d, true), 0.0);
    }
    let neg = ShCoeffs::constant(-0.2);
    assert_eq!(sh_eval(&neg, &Vec3::x(), true), 0.0);
    assert!((sh_eval(&neg, &Vec3::x(), false) + 0.2).abs() < 1e-14);
}

#[test]
fn orthonormal_on_grid() {
    for j in 0..SH_COUNT {
        let c = sh_project(128, 64, |d| sh_basis(d).unwrap()[j]).unwrap();
        for i in 0..SH_COUNT {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((c.0[i] - expect).abs() <= 1e-3, "<Y{i}, Y{j}> = {}", c.0[i]);
        }
    }
}

#[test]
fn exact_quadrature_is_orthonormal() {
    for j in 0..SH_COUNT {
        let c = gl_project(|d| sh_basis(d).unwrap()[j]);
        for i in 0..SH_COUNT {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((c.0[i] - expect).abs() <= 1e-12);
        }
    }
}

fn rotation() -> impl Strategy<Value = Rotation3<f64>> {
    (-PI..PI, -PI..PI, -PI..PI).prop_map(|(a, b, c)| Rotation3::from_euler_angles(a, b, c))
}

fn coeffs() -> impl Strategy<Value = ShCoeffs> {
    prop::array::uniform16(-1.0..1.0f64).prop_map(ShCoeffs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // the midpoint equirect grid is only accurate to ~1e-4 here, so the
    // tight check uses an exact quadrature
    #[test]
    fn band_energy_rotation_invariant(c in coeffs(), rot in rotation()) {
        let base = gl_project(|d| sh_eval(&c, d, false));
        let turned = gl_project(|d| sh_eval(&c, &(rot.inverse() * d), false));
        for l in 0..4 {
            prop_assert!((base.band_energy(l) - turned.band_energy(l)).abs() <= 1e-6);
        }
        // rotation can push single coefficients above 1 and the grid error
        // grows with them
        let grid = sh_project(128, 64, |d| sh_eval(&c, &(rot.inverse() * d), false)).unwrap();
        for i in 0..SH_COUNT {
            prop_assert!((grid.0[i] - turned.0[i]).abs() <= 1e-3 * turned.0[i].abs().max(1.0));
        }
    }

    #[test]
    fn project_eval_round_trip(c in coeffs()) {
        let back = sh_project(128, 64, |d| sh_eval(&c, d, false)).unwrap();
        for i in 0..SH_COUNT {
            prop_assert!((back.0[i] - c.0[i]).abs() <= 1e-3);
        }
    }
}

#[test]
fn random_band_limited_round_trip() {
    let mut r = rng(3);
    for _ in 0..100 {
        let c = random_sh(&mut r, 1.0);
        let back = sh_project(128, 64, |d| sh_eval(&c, d, false)).unwrap();
        let err = c.0.iter().zip(back.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-3, "{err}");
    }
}

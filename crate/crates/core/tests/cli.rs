use std::path::Path;
use std::process::{Command, Output};

use gsrelight_core::camera::serialize_camera;
use gsrelight_core::demo::{demo_camera, sky};
use gsrelight_core::pfm::{load_pfm, save_pfm};
use gsrelight_core::scene::{parse_scene, serialize_scene};
use gsrelight_core::{AttributeImage, GaussianPoint, GaussianScene, Vec3};

fn gsrelight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsrelight")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    gsrelight(args).status.code().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let points: Vec<GaussianPoint> = (0..60)
            .map(|i| {
                let a = i as f64 * 0.7;
                let n = Vec3::new(a.cos(), 0.3, a.sin()).normalize();
                let mut g = GaussianPoint::new(n * 0.8, n);
                g.scale = Vec3::new(0.2, 0.2, 0.02);
                g.opacity = 0.9;
                g
            })
            .collect();
        std::fs::write(dir.path().join("s.gsc"), serialize_scene(&GaussianScene::new(points).unwrap())).unwrap();
        std::fs::write(dir.path().join("c.txt"), serialize_camera(&demo_camera(40, 32).unwrap())).unwrap();
        save_pfm(dir.path().join("e.pfm"), &sky(32, 16).unwrap().to_image()).unwrap();
        let mut depth = AttributeImage::filled(40, 32, 1, 5.0);
        depth.set(0, 0, 0, 0.0);
        save_pfm(dir.path().join("d.pfm"), &depth).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_owned()
    }
}

fn bytes(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["render", "--scene", "x.gsc"]), 2);
    assert_eq!(code(&["render", "--scene", "a", "--camera", "b", "--env", "c", "--out", "d", "--mode", "sparkle"]), 2);
    assert_eq!(code(&["bake", "--scene", "a", "--what", "indirect", "--out", "b"]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn missing_and_invalid_inputs_exit_one() {
    let f = Fixture::new();
    let out = gsrelight(&["render", "--scene", "/nonexistent/s.gsc", "--camera", &f.path("c.txt"), "--env", &f.path("e.pfm"), "--out", &f.path("o.pfm")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    std::fs::write(f.path("bad.gsc"), "gsc 1\n3\n").unwrap();
    assert_eq!(code(&["bake", "--scene", &f.path("bad.gsc"), "--what", "visibility", "--out", &f.path("o.gsc")]), 1);
    assert_eq!(code(&["prefilter", "--env", &f.path("e.pfm"), "--out", &f.path("o.pfm"), "--exponent", "0.5"]), 1);
    assert_eq!(code(&["metrics", "--pred", &f.path("e.pfm"), "--gt", &f.path("d.pfm"), "--metric", "l1"]), 1);
}

#[test]
fn prefilter_output_parses() {
    let f = Fixture::new();
    assert_eq!(code(&["prefilter", "--env", &f.path("e.pfm"), "--out", &f.path("p.pfm"), "--width", "16", "--height", "8"]), 0);
    let img = load_pfm(f.path("p.pfm")).unwrap();
    assert_eq!((img.width(), img.height(), img.channels()), (16, 8, 3));
}

#[test]
fn render_every_mode() {
    let f = Fixture::new();
    for (mode, ch) in [("pbr", 3), ("albedo", 3), ("normal", 3), ("ao", 1), ("roughness", 1), ("direct", 3), ("indirect", 3)] {
        let out = f.path(&format!("{mode}.pfm"));
        let png = f.path(&format!("{mode}.png"));
        let args = ["render", "--scene", &f.path("s.gsc"), "--camera", &f.path("c.txt"), "--env", &f.path("e.pfm"), "--mode", mode, "--out", &out, "--png", &png, "--samples", "8"];
        assert_eq!(code(&args), 0, "{mode}");
        let img = load_pfm(&out).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (40, 32, ch));
        // unbaked visibility is 1 everywhere, so the indirect map is black
        if mode != "indirect" {
            assert!(img.data().iter().any(|&v| v != 0.0), "{mode} rendered nothing");
        }
        assert!(bytes(&png).starts_with(b"\x89PNG"));
    }
}

#[test]
fn bake_writes_a_scene() {
    let f = Fixture::new();
    assert_eq!(code(&["bake", "--scene", &f.path("s.gsc"), "--what", "visibility", "--out", &f.path("v.gsc"), "--dirs", "64"]), 0);
    assert_eq!(code(&["bake", "--scene", &f.path("v.gsc"), "--what", "indirect", "--env", &f.path("e.pfm"), "--out", &f.path("i.gsc"), "--dirs", "64"]), 0);
    let baked = parse_scene(&std::fs::read_to_string(f.path("i.gsc")).unwrap()).unwrap();
    assert_eq!(baked.len(), 60);
    let before = parse_scene(&std::fs::read_to_string(f.path("s.gsc")).unwrap()).unwrap();
    assert_ne!(baked.points()[0].visibility, before.points()[0].visibility);
}

#[test]
fn normals_and_metrics() {
    let f = Fixture::new();
    assert_eq!(code(&["normals", "--depth", &f.path("d.pfm"), "--camera", &f.path("c.txt"), "--out", &f.path("n.pfm")]), 0);
    let n = load_pfm(f.path("n.pfm")).unwrap();
    assert_eq!((n.width(), n.height(), n.channels()), (40, 32, 3));

    let out = gsrelight(&["metrics", "--pred", &f.path("n.pfm"), "--gt", &f.path("n.pfm"), "--metric", "psnr"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim().parse::<f64>().unwrap(), 99.0);
    let out = gsrelight(&["metrics", "--pred", &f.path("d.pfm"), "--gt", &f.path("d.pfm"), "--metric", "l1", "--mask", &f.path("d.pfm")]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim().parse::<f64>().unwrap(), 0.0);
}

#[test]
fn reruns_are_bit_identical() {
    let f = Fixture::new();
    let render = |out: &str| {
        let args = ["render", "--scene", &f.path("s.gsc"), "--camera", &f.path("c.txt"), "--env", &f.path("e.pfm"), "--out", &f.path(out), "--seed", "3", "--shadow", "hard"];
        assert_eq!(code(&args), 0);
        bytes(f.dir.path().join(out))
    };
    assert_eq!(render("a.pfm"), render("b.pfm"));
    let bake = |out: &str| {
        assert_eq!(code(&["bake", "--scene", &f.path("s.gsc"), "--what", "visibility", "--out", &f.path(out)]), 0);
        bytes(f.dir.path().join(out))
    };
    assert_eq!(bake("a.gsc"), bake("b.gsc"));
}

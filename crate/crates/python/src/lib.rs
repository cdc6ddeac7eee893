//! Python bindings. Vectors cross the boundary as 3-tuples and images as
//! flat row-major lists.

use std::cell::RefCell;

use gsrelight_core::brdf::{brdf_eval, BrdfOptions};
use gsrelight_core::camera::{parse_camera, serialize_camera};
use gsrelight_core::envlight::{prefilter, PrefilterConfig};
use gsrelight_core::metrics;
use gsrelight_core::pfm::{load_pfm, save_pfm};
use gsrelight_core::raster::{self, Channel, Lighting};
use gsrelight_core::scene::{parse_scene, serialize_scene};
use gsrelight_core::shading::{ambient_occlusion, BakeConfig, Baker, ShadingConfig, ShadowMode};
use gsrelight_core::tonemap::save_png;
use gsrelight_core::{demo, geometry, sh, AttributeImage, Error, Rgb, ShCoeffs, Vec3};
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

type Triple = (f64, f64, f64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn vec3(t: Triple) -> Vec3 {
    Vec3::new(t.0, t.1, t.2)
}

fn triple(v: &Vec3) -> Triple {
    (v.x, v.y, v.z)
}

fn read(path: &str) -> PyResult<String> {
    std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
}

fn sh_coeffs(c: Vec<f64>) -> PyResult<ShCoeffs> {
    let arr: [f64; sh::SH_COUNT] =
        c.try_into().map_err(|v: Vec<f64>| PyValueError::new_err(format!("expected 16 coefficients, got {}", v.len())))?;
    Ok(ShCoeffs(arr))
}

#[pyclass(name = "Image", module = "gsrelight", from_py_object)]
#[derive(Clone)]
pub struct PyImage {
    inner: AttributeImage,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> PyResult<Self> {
        AttributeImage::from_data(width, height, channels, data).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_pfm(path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_pfm(path, &self.inner).map_err(to_py)
    }

    fn save_png(&self, path: &str) -> PyResult<()> {
        save_png(path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<Vec<f64>> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyIndexError::new_err(format!("pixel ({x}, {y}) out of range")));
        }
        Ok(self.inner.pixel(x, y).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{}x{})", self.inner.width(), self.inner.height(), self.inner.channels())
    }
}

#[pyclass(name = "Camera", module = "gsrelight", skip_from_py_object)]
#[derive(Clone)]
pub struct PyCamera {
    inner: gsrelight_core::Camera,
}

#[pymethods]
impl PyCamera {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        parse_camera(&read(path)?).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn look_at(eye: Triple, target: Triple, up: Triple, focal: f64, width: usize, height: usize) -> PyResult<Self> {
        gsrelight_core::Camera::look_at(vec3(eye), vec3(target), vec3(up), focal, width, height)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn demo(width: usize, height: usize) -> PyResult<Self> {
        demo::demo_camera(width, height).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, serialize_camera(&self.inner)).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Pixel coordinates and view depth of a world point.
    fn project(&self, p: Triple) -> Triple {
        self.inner.project(&vec3(p))
    }

    fn unproject(&self, u: f64, v: f64, depth: f64) -> PyResult<Triple> {
        geometry::unproject(u, v, depth, &self.inner).map(|p| triple(&p)).map_err(to_py)
    }

    #[getter]
    fn center(&self) -> Triple {
        triple(&self.inner.center())
    }

    #[getter]
    fn size(&self) -> (usize, usize) {
        (self.inner.width, self.inner.height)
    }
}

#[pyclass(name = "EnvMap", module = "gsrelight", skip_from_py_object)]
#[derive(Clone)]
pub struct PyEnvMap {
    inner: gsrelight_core::EnvMap,
}

#[pymethods]
impl PyEnvMap {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let img = load_pfm(path).map_err(to_py)?;
        gsrelight_core::EnvMap::from_image(&img).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn constant(width: usize, height: usize, value: Triple) -> PyResult<Self> {
        gsrelight_core::EnvMap::constant(width, height, vec3(value)).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn sky(width: usize, height: usize) -> PyResult<Self> {
        demo::sky(width, height).map(|inner| Self { inner }).map_err(to_py)
    }

    #[pyo3(signature = (exponent = 16.0, width = 64, height = 32))]
    fn prefilter(&self, exponent: f64, width: usize, height: usize) -> PyResult<Self> {
        prefilter(&self.inner, &PrefilterConfig { exponent, width, height }).map(|inner| Self { inner }).map_err(to_py)
    }

    fn lookup(&self, dir: Triple) -> Triple {
        triple(&self.inner.sample_bilinear(&vec3(dir).normalize()))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_pfm(path, &self.inner.to_image()).map_err(to_py)
    }

    #[getter]
    fn size(&self) -> (usize, usize) {
        (self.inner.width(), self.inner.height())
    }
}

#[pyclass(name = "Scene", module = "gsrelight", skip_from_py_object)]
#[derive(Clone)]
pub struct PyScene {
    inner: gsrelight_core::GaussianScene,
}

#[pymethods]
impl PyScene {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        parse_scene(&read(path)?).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_scene(text).map(|inner| Self { inner }).map_err(to_py)
    }

    /// The two touching spheres used by the demo.
    #[staticmethod]
    fn two_spheres() -> Self {
        Self { inner: demo::two_spheres() }
    }

    fn save(&self, path: &str) -> PyResult<()> {
        std::fs::write(path, serialize_scene(&self.inner)).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    fn to_text(&self) -> String {
        serialize_scene(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn positions(&self) -> Vec<Triple> {
        self.inner.points().iter().map(|g| triple(&g.position)).collect()
    }

    fn normals(&self) -> Vec<Triple> {
        self.inner.points().iter().map(|g| triple(&g.normal)).collect()
    }

    /// Per-Gaussian ambient occlusion from the baked visibility.
    fn ambient_occlusion(&self) -> Vec<f64> {
        self.inner.points().iter().map(|g| ambient_occlusion(&g.visibility, &g.normal)).collect()
    }

    /// Returns a copy with visibility baked by ray casting.
    #[pyo3(signature = (dirs = 256, k_sigma = 1.0))]
    fn bake_visibility(&self, py: Python<'_>, dirs: usize, k_sigma: f64) -> PyResult<Self> {
        let cfg = BakeConfig { dir_count: dirs, k_sigma, ..BakeConfig::default() };
        let vis = py.detach(|| Baker::new(&self.inner, cfg).and_then(|b| b.visibility_all())).map_err(to_py)?;
        let mut out = self.inner.clone();
        for (g, v) in out.points_mut().iter_mut().zip(vis) {
            g.visibility = v;
        }
        Ok(Self { inner: out })
    }

    /// Returns a copy with one-bounce indirect light baked under a
    /// prefiltered environment.
    #[pyo3(signature = (env, direct_scale = 1.0, dirs = 256, k_sigma = 1.0))]
    fn bake_indirect(&self, py: Python<'_>, env: &PyEnvMap, direct_scale: f64, dirs: usize, k_sigma: f64) -> PyResult<Self> {
        let cfg = BakeConfig { dir_count: dirs, k_sigma, ..BakeConfig::default() };
        let ind = py
            .detach(|| Baker::new(&self.inner, cfg).and_then(|b| b.indirect_all(&env.inner, direct_scale)))
            .map_err(to_py)?;
        let mut out = self.inner.clone();
        for (g, l) in out.points_mut().iter_mut().zip(ind) {
            g.indirect = l;
        }
        Ok(Self { inner: out })
    }
}

fn parse_channel(mode: &str) -> PyResult<Channel> {
    Ok(match mode {
        "pbr" => Channel::Pbr,
        "albedo" => Channel::Albedo,
        "normal" => Channel::Normal,
        "ao" => Channel::Ao,
        "roughness" => Channel::Roughness,
        "direct" => Channel::Direct,
        "indirect" => Channel::Indirect,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    })
}

/// Renders one channel; returns `(image, alpha)`. `env` must already be
/// prefiltered for the lit modes.
#[pyfunction]
#[pyo3(signature = (scene, camera, mode = "pbr", env = None, direct_scale = 1.0, samples = 40, seed = 0, shadow = "soft", diffuse_only = false))]
#[allow(clippy::too_many_arguments)]
fn render(
    py: Python<'_>,
    scene: &PyScene,
    camera: &PyCamera,
    mode: &str,
    env: Option<&PyEnvMap>,
    direct_scale: f64,
    samples: usize,
    seed: u64,
    shadow: &str,
    diffuse_only: bool,
) -> PyResult<(PyImage, PyImage)> {
    let channel = parse_channel(mode)?;
    let shadow_mode = match shadow {
        "soft" => ShadowMode::Soft,
        "hard" => ShadowMode::Hard,
        other => return Err(PyValueError::new_err(format!("unknown shadow mode {other:?}"))),
    };
    let mut config = ShadingConfig { sample_count: samples, seed, shadow_mode, ..ShadingConfig::default() };
    if diffuse_only {
        config = config.diffuse_only();
    }
    if channel.needs_lighting() && env.is_none() {
        return Err(PyValueError::new_err(format!("mode {mode:?} needs an environment map")));
    }
    let lighting = env.map(|e| Lighting { env: &e.inner, direct_scale, camera_center: camera.inner.center(), config });
    let out = py
        .detach(|| raster::render(&scene.inner, &camera.inner, channel, lighting.as_ref()))
        .map_err(to_py)?;
    Ok((PyImage { inner: out.image }, PyImage { inner: out.alpha }))
}

#[pyfunction]
#[pyo3(signature = (coeffs, dir, clamp = false))]
fn sh_eval(coeffs: Vec<f64>, dir: Triple, clamp: bool) -> PyResult<f64> {
    Ok(sh::sh_eval(&sh_coeffs(coeffs)?, &vec3(dir).normalize(), clamp))
}

#[pyfunction]
fn sh_basis(dir: Triple) -> PyResult<Vec<f64>> {
    sh::sh_basis(&vec3(dir)).map(|b| b.to_vec()).map_err(to_py)
}

/// Projects a Python callable `f(x, y, z) -> float` onto the SH basis.
#[pyfunction]
#[pyo3(signature = (f, width = 128, height = 64))]
fn sh_project(f: &Bound<'_, PyAny>, width: usize, height: usize) -> PyResult<Vec<f64>> {
    let err = RefCell::new(None);
    let coeffs = sh::sh_project(width, height, |d| match f.call1((d.x, d.y, d.z)).and_then(|v| v.extract::<f64>()) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            0.0
        }
    });
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    coeffs.map(|c| c.0.to_vec()).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (wi, wo, n, albedo, roughness, diffuse_only = false))]
fn brdf(wi: Triple, wo: Triple, n: Triple, albedo: Triple, roughness: f64, diffuse_only: bool) -> PyResult<Triple> {
    let opts = if diffuse_only { BrdfOptions::diffuse_only() } else { BrdfOptions::default() };
    brdf_eval(&vec3(wi), &vec3(wo), &vec3(n), &Rgb::new(albedo.0, albedo.1, albedo.2), roughness, &opts)
        .map(|f| triple(&f))
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (pred, gt, peak = 1.0))]
fn psnr(pred: &PyImage, gt: &PyImage, peak: f64) -> PyResult<f64> {
    metrics::psnr(&pred.inner, &gt.inner, peak, None).map_err(to_py)
}

#[pyfunction]
fn l1(pred: &PyImage, gt: &PyImage) -> PyResult<f64> {
    metrics::l1(&pred.inner, &gt.inner, None).map_err(to_py)
}

#[pyfunction]
fn mae_normals(pred: &PyImage, gt: &PyImage) -> PyResult<f64> {
    metrics::mae_normals(&pred.inner, &gt.inner, None).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (preds, gt, mu = metrics::DEPTH_MU))]
fn depth_loss(preds: Vec<PyImage>, gt: &PyImage, mu: f64) -> PyResult<f64> {
    let preds: Vec<AttributeImage> = preds.into_iter().map(|p| p.inner).collect();
    metrics::depth_loss(&preds, &gt.inner, mu, None).map_err(to_py)
}

/// Camera-facing normals from a depth map; pixels with depth ≤ 0 are
/// background.
#[pyfunction]
fn normals_from_depth(depth: &PyImage, camera: &PyCamera) -> PyResult<PyImage> {
    let mask: Vec<bool> = depth.inner.data().iter().map(|&d| d > 0.0).collect();
    let pos = geometry::position_map(&depth.inner, &camera.inner, Some(&mask)).map_err(to_py)?;
    geometry::coarse_normals(&pos, Some(&mask), &camera.inner).map(|inner| PyImage { inner }).map_err(to_py)
}

#[pymodule]
fn gsrelight(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyCamera>()?;
    m.add_class::<PyEnvMap>()?;
    m.add_class::<PyScene>()?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(sh_eval, m)?)?;
    m.add_function(wrap_pyfunction!(sh_basis, m)?)?;
    m.add_function(wrap_pyfunction!(sh_project, m)?)?;
    m.add_function(wrap_pyfunction!(brdf, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(l1, m)?)?;
    m.add_function(wrap_pyfunction!(mae_normals, m)?)?;
    m.add_function(wrap_pyfunction!(depth_loss, m)?)?;
    m.add_function(wrap_pyfunction!(normals_from_depth, m)?)?;
    Ok(())
}

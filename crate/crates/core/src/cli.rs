//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on IO or validation failure, 2 on usage
//! errors. Diagnostics go to standard error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::brdf::BrdfMode;
use crate::camera::{parse_camera, Camera};
use crate::envlight::{average_scaling, prefilter, EnvMap, PrefilterConfig};
use crate::error::{Error, Result};
use crate::geometry::{coarse_normals, position_map, refine_normals};
use crate::image::AttributeImage;
use crate::metrics::{l1, mae_normals, psnr};
use crate::pfm::{load_pfm, save_pfm};
use crate::raster::{render, Channel, Lighting};
use crate::scene::{parse_scene, serialize_scene, GaussianScene};
use crate::shading::{BakeConfig, Baker, ShadingConfig, ShadowMode};
use crate::tonemap::save_png;

#[derive(Parser, Debug)]
#[command(name = "gsrelight", version, about = "Relightable Gaussian splat tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convolve an equirectangular map with the cosine-power kernel.
    Prefilter(PrefilterArgs),
    /// Shade and rasterize a scene from a camera.
    Render(RenderArgs),
    /// Normals from a depth map.
    Normals(NormalsArgs),
    /// Bake visibility or indirect light into a scene file.
    Bake(BakeArgs),
    /// Compare two images.
    Metrics(MetricsArgs),
}

#[derive(Args, Debug)]
struct PrefilterArgs {
    #[arg(long)]
    env: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16.0)]
    exponent: f64,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Pbr,
    Albedo,
    Normal,
    Ao,
    Roughness,
    Direct,
    Indirect,
}

impl From<Mode> for Channel {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Pbr => Channel::Pbr,
            Mode::Albedo => Channel::Albedo,
            Mode::Normal => Channel::Normal,
            Mode::Ao => Channel::Ao,
            Mode::Roughness => Channel::Roughness,
            Mode::Direct => Channel::Direct,
            Mode::Indirect => Channel::Indirect,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Shadow {
    Soft,
    Hard,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    #[arg(long)]
    env: PathBuf,
    #[arg(long, value_enum, default_value = "pbr")]
    mode: Mode,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    png: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Direct light scale.
    #[arg(long, conflicts_with = "sd_map")]
    sd: Option<f64>,
    /// One-channel scaling map averaged over its positive pixels.
    #[arg(long)]
    sd_map: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "soft")]
    shadow: Shadow,
    #[arg(long)]
    diffuse_only: bool,
    /// Treat `--env` as already prefiltered.
    #[arg(long)]
    prefiltered: bool,
}

#[derive(Args, Debug)]
struct NormalsArgs {
    /// One-channel depth map; pixels with depth <= 0 are background.
    #[arg(long)]
    depth: PathBuf,
    #[arg(long)]
    camera: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Residual added to the coarse normals before renormalizing.
    #[arg(long)]
    delta: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum What {
    Visibility,
    Indirect,
}

#[derive(Args, Debug)]
struct BakeArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum)]
    what: What,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 256)]
    dirs: usize,
    #[arg(long, default_value_t = 1.0)]
    k_sigma: f64,
    #[arg(long, required_if_eq("what", "indirect"))]
    env: Option<PathBuf>,
    /// Direct light scale used for the bounce.
    #[arg(long, default_value_t = 1.0)]
    sd: f64,
    #[arg(long)]
    prefiltered: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Metric {
    Psnr,
    Mae,
    L1,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, value_enum)]
    metric: Metric,
    /// One-channel mask; pixels with value > 0 are compared.
    #[arg(long)]
    mask: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Prefilter(a) => cmd_prefilter(a),
        Command::Render(a) => cmd_render(a),
        Command::Normals(a) => cmd_normals(a),
        Command::Bake(a) => cmd_bake(a),
        Command::Metrics(a) => cmd_metrics(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_scene(path: &Path) -> Result<GaussianScene> {
    parse_scene(&read_text(path)?)
}

fn load_camera(path: &Path) -> Result<Camera> {
    parse_camera(&read_text(path)?)
}

fn load_env(path: &Path, prefiltered: bool) -> Result<EnvMap> {
    let env = EnvMap::from_image(&load_pfm(path)?)?;
    if prefiltered {
        Ok(env)
    } else {
        prefilter(&env, &PrefilterConfig::default())
    }
}

fn positive_mask(img: &AttributeImage) -> Result<Vec<bool>> {
    if img.channels() != 1 {
        return Err(Error::ShapeMismatch(format!("mask must have 1 channel, got {}", img.channels())));
    }
    Ok(img.data().iter().map(|&v| v > 0.0).collect())
}

fn cmd_prefilter(a: PrefilterArgs) -> Result<()> {
    let env = EnvMap::from_image(&load_pfm(&a.env)?)?;
    let cfg = PrefilterConfig { exponent: a.exponent, width: a.width, height: a.height };
    save_pfm(&a.out, &prefilter(&env, &cfg)?.to_image())
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let scene = load_scene(&a.scene)?;
    let cam = load_camera(&a.camera)?;
    let channel = Channel::from(a.mode);
    let direct_scale = match (&a.sd, &a.sd_map) {
        (Some(s), _) => *s,
        (None, Some(path)) => {
            let map = load_pfm(path)?;
            let mask = positive_mask(&map)?;
            average_scaling(&map, Some(&mask))?
        }
        (None, None) => 1.0,
    };
    let mut config = ShadingConfig {
        sample_count: a.samples,
        seed: a.seed,
        shadow_mode: match a.shadow {
            Shadow::Soft => ShadowMode::Soft,
            Shadow::Hard => ShadowMode::Hard,
        },
        ..ShadingConfig::default()
    };
    if a.diffuse_only {
        config.brdf.mode = BrdfMode::DiffuseOnly;
    }
    config.validate()?;
    let env = if channel.needs_lighting() { Some(load_env(&a.env, a.prefiltered)?) } else { None };
    let lighting = env.as_ref().map(|env| Lighting { env, direct_scale, camera_center: cam.center(), config });
    let out = render(&scene, &cam, channel, lighting.as_ref())?;
    save_pfm(&a.out, &out.image)?;
    if let Some(p) = &a.png {
        save_png(p, &out.image)?;
    }
    Ok(())
}

fn cmd_normals(a: NormalsArgs) -> Result<()> {
    let depth = load_pfm(&a.depth)?;
    let cam = load_camera(&a.camera)?;
    if depth.width() != cam.width || depth.height() != cam.height {
        return Err(Error::ShapeMismatch(format!(
            "depth {}x{} vs camera {}x{}",
            depth.width(),
            depth.height(),
            cam.width,
            cam.height
        )));
    }
    let mask = positive_mask(&depth)?;
    let positions = position_map(&depth, &cam, Some(&mask))?;
    let mut normals = coarse_normals(&positions, None, &cam)?;
    if let Some(p) = &a.delta {
        normals = refine_normals(&normals, &load_pfm(p)?)?;
    }
    save_pfm(&a.out, &normals)
}

fn cmd_bake(a: BakeArgs) -> Result<()> {
    let mut scene = load_scene(&a.scene)?;
    let cfg = BakeConfig { dir_count: a.dirs, k_sigma: a.k_sigma, ..BakeConfig::default() };
    match a.what {
        What::Visibility => {
            let vis = Baker::new(&scene, cfg)?.visibility_all()?;
            for (g, v) in scene.points_mut().iter_mut().zip(vis) {
                g.visibility = v;
            }
        }
        What::Indirect => {
            let path = a.env.as_deref().ok_or_else(|| Error::InvalidConfig("--env is required".into()))?;
            let env = load_env(path, a.prefiltered)?;
            let light = Baker::new(&scene, cfg)?.indirect_all(&env, a.sd)?;
            for (g, l) in scene.points_mut().iter_mut().zip(light) {
                g.indirect = l;
            }
        }
    }
    std::fs::write(&a.out, serialize_scene(&scene))?;
    Ok(())
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let pred = load_pfm(&a.pred)?;
    let gt = load_pfm(&a.gt)?;
    let mask = a.mask.as_deref().map(load_pfm).transpose()?.map(|m| positive_mask(&m)).transpose()?;
    let mask = mask.as_deref();
    let value = match a.metric {
        Metric::Psnr => psnr(&pred, &gt, 1.0, mask)?,
        Metric::Mae => mae_normals(&pred, &gt, mask)?,
        Metric::L1 => l1(&pred, &gt, mask)?,
    };
    println!("{value:.6}");
    Ok(())
}

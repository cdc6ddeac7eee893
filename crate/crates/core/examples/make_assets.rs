//! Regenerates the bundled demo files in `assets/`.

use std::path::Path;

use gsrelight_core::camera::serialize_camera;
use gsrelight_core::demo::{demo_camera, sky, two_spheres};
use gsrelight_core::pfm::save_pfm;
use gsrelight_core::scene::serialize_scene;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("two_spheres.gsc"), serialize_scene(&two_spheres()))?;
    save_pfm(dir.join("sky_64x32.pfm"), &sky(64, 32)?.to_image())?;
    std::fs::write(dir.join("camera_512.txt"), serialize_camera(&demo_camera(512, 512)?))?;
    Ok(())
}

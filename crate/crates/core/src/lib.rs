//! Relightable 3D Gaussian rendering toolkit.
//!
//! Gaussians carry geometry, material and spherical-harmonics light
//! transport attributes. The crate covers the deterministic half of a
//! relighting pipeline: depth geometry (unprojection, normals, correlation
//! volumes), environment prefiltering, Monte-Carlo shading with a simplified
//! Disney BRDF, visibility/indirect baking, EWA splat rasterization, the
//! supervision losses, and PFM/PNG IO with a command-line front end.

pub mod brdf;
pub mod camera;
pub mod cli;
pub mod demo;
pub mod envlight;
pub mod error;
pub mod geometry;
pub mod image;
pub mod metrics;
pub mod pfm;
pub mod raster;
pub mod scene;
pub mod sh;
pub mod shading;
pub mod tonemap;

pub use camera::Camera;
pub use envlight::EnvMap;
pub use error::{Error, Result};
pub use image::AttributeImage;
pub use scene::{GaussianPoint, GaussianScene};
pub use sh::ShCoeffs;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Rgb = nalgebra::Vector3<f64>;

//! Image losses and evaluation metrics.
//!
//! Masked means run over selected pixels and all channels. Passing `None`
//! for a mask uses the whole frame.

use crate::error::{Error, Result};
use crate::image::{check_mask, AttributeImage};

pub const DEPTH_MU: f64 = 0.9;
pub const LAMBDA_ALBEDO_SMOOTH: f64 = 0.1;
pub const LAMBDA_ROUGHNESS_SMOOTH: f64 = 0.1;
/// Perceptual loss weights. Kept for reference; perceptual terms are not
/// computed here.
pub const LAMBDA_PERCEPTUAL: f64 = 0.2;
pub const PSNR_CAP_DB: f64 = 99.0;

fn masked_sum<F>(a: &AttributeImage, b: &AttributeImage, mask: Option<&[bool]>, f: F) -> Result<(f64, usize)>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    a.check_same_shape(b, "metric inputs")?;
    check_mask(mask, a.pixel_count())?;
    let mut sum = 0.0;
    let mut count = 0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            if mask.is_some_and(|m| !m[y * a.width() + x]) {
                continue;
            }
            sum += f(a.pixel(x, y), b.pixel(x, y));
            count += 1;
        }
    }
    Ok((sum, count))
}

/// Masked mean absolute difference.
pub fn l1(pred: &AttributeImage, gt: &AttributeImage, mask: Option<&[bool]>) -> Result<f64> {
    let (sum, count) = masked_sum(pred, gt, mask, |p, g| p.iter().zip(g).map(|(a, b)| (a - b).abs()).sum())?;
    Ok(sum / (count * pred.channels()) as f64)
}

/// Masked mean squared difference.
pub fn mse(pred: &AttributeImage, gt: &AttributeImage, mask: Option<&[bool]>) -> Result<f64> {
    let (sum, count) = masked_sum(pred, gt, mask, |p, g| p.iter().zip(g).map(|(a, b)| (a - b).powi(2)).sum())?;
    Ok(sum / (count * pred.channels()) as f64)
}

/// `Σ_i μ^(N−i) · L1(d_i, gt)` over an ordered list of refinements, so the
/// last prediction carries weight one.
pub fn depth_loss(preds: &[AttributeImage], gt: &AttributeImage, mu: f64, mask: Option<&[bool]>) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::InvalidConfig("depth_loss needs at least one prediction".into()));
    }
    let n = preds.len();
    let mut total = 0.0;
    for (i, p) in preds.iter().enumerate() {
        total += mu.powi((n - 1 - i) as i32) * l1(p, gt, mask)?;
    }
    Ok(total)
}

fn grad_l1(img: &AttributeImage, x: usize, y: usize) -> f64 {
    let here = img.pixel(x, y);
    let right = img.pixel(x + 1, y);
    let down = img.pixel(x, y + 1);
    here.iter().zip(right).zip(down).map(|((h, r), d)| (r - h).abs() + (d - h).abs()).sum()
}

/// Edge-aware smoothness of predicted albedo and roughness, weighted down
/// where the reference albedo has strong gradients. Uses forward
/// differences; the last row and column are excluded.
pub fn smoothness_loss(
    albedo: &AttributeImage,
    roughness: &AttributeImage,
    gt_albedo: &AttributeImage,
    lambda_albedo: f64,
    lambda_roughness: f64,
) -> Result<f64> {
    albedo.check_same_shape(gt_albedo, "albedo vs reference")?;
    if roughness.width() != albedo.width() || roughness.height() != albedo.height() {
        return Err(Error::ShapeMismatch(format!(
            "roughness {}x{} vs albedo {}x{}",
            roughness.width(),
            roughness.height(),
            albedo.width(),
            albedo.height()
        )));
    }
    if albedo.width() < 2 || albedo.height() < 2 {
        return Ok(0.0);
    }
    let mut albedo_term = 0.0;
    let mut rough_term = 0.0;
    for y in 0..albedo.height() - 1 {
        for x in 0..albedo.width() - 1 {
            let w = (-grad_l1(gt_albedo, x, y)).exp();
            albedo_term += grad_l1(albedo, x, y) * w;
            rough_term += grad_l1(roughness, x, y) * w;
        }
    }
    let count = ((albedo.width() - 1) * (albedo.height() - 1)) as f64;
    Ok((lambda_albedo * albedo_term + lambda_roughness * rough_term) / count)
}

/// The five maps compared by [`l1_losses`].
#[derive(Clone, Copy, Debug)]
pub struct MapSet<'a> {
    pub albedo: &'a AttributeImage,
    pub ao: &'a AttributeImage,
    pub direct: &'a AttributeImage,
    pub indirect: &'a AttributeImage,
    pub pbr: &'a AttributeImage,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossRecord {
    pub albedo: f64,
    pub ao: f64,
    pub direct: f64,
    pub indirect: f64,
    pub pbr: f64,
}

pub fn l1_losses(pred: &MapSet, gt: &MapSet, mask: Option<&[bool]>) -> Result<LossRecord> {
    Ok(LossRecord {
        albedo: l1(pred.albedo, gt.albedo, mask)?,
        ao: l1(pred.ao, gt.ao, mask)?,
        direct: l1(pred.direct, gt.direct, mask)?,
        indirect: l1(pred.indirect, gt.indirect, mask)?,
        pbr: l1(pred.pbr, gt.pbr, mask)?,
    })
}

/// Peak signal-to-noise ratio in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr(pred: &AttributeImage, gt: &AttributeImage, peak: f64, mask: Option<&[bool]>) -> Result<f64> {
    Ok(psnr_from_mse(mse(pred, gt, mask)?, peak))
}

pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse < 1e-12 {
        return PSNR_CAP_DB;
    }
    (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
}

/// Mean angular error between normal maps, in degrees.
pub fn mae_normals(pred: &AttributeImage, gt: &AttributeImage, mask: Option<&[bool]>) -> Result<f64> {
    if pred.channels() != 3 {
        return Err(Error::ShapeMismatch(format!("normal maps need 3 channels, got {}", pred.channels())));
    }
    let (sum, count) = masked_sum(pred, gt, mask, |p, g| {
        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        dot.clamp(-1.0, 1.0).acos().to_degrees()
    })?;
    Ok(sum / count as f64)
}

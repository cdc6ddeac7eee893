//! Depth geometry: unprojection, position and normal maps, stereo
//! correlation volumes, a winner-takes-all disparity baseline and convex
//! upsampling.

use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::image::{check_mask, AttributeImage};
use crate::Vec3;

const MIN_NORM: f64 = 1e-8;

/// Lifts pixel `(u, v)` at camera-space depth `depth` to world space:
/// `X = Rᵀ(K⁻¹ (u, v, 1)ᵀ · depth − t)`.
pub fn unproject(u: f64, v: f64, depth: f64, cam: &Camera) -> Result<Vec3> {
    if !(depth > 0.0) {
        return Err(Error::NonPositiveDepth(depth));
    }
    let ray = Vec3::new((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
    Ok(cam.rotation.transpose() * (ray * depth - cam.translation))
}

/// Per-pixel unprojection of a one-channel depth map. Background pixels are
/// zeroed and carry `false` in the output mask.
pub fn position_map(depth: &AttributeImage, cam: &Camera, mask: Option<&[bool]>) -> Result<AttributeImage> {
    if depth.channels() != 1 {
        return Err(Error::ShapeMismatch(format!("depth map has {} channels", depth.channels())));
    }
    let (w, h) = (depth.width(), depth.height());
    let mask = mask.or(depth.mask());
    if let Some(m) = mask {
        if m.len() != w * h {
            return Err(Error::ShapeMismatch(format!("mask length {} != {}", m.len(), w * h)));
        }
    }
    let mut out = AttributeImage::new(w, h, 3);
    let mut valid = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if mask.is_some_and(|m| !m[i]) {
                continue;
            }
            let p = unproject(x as f64, y as f64, depth.get(x, y, 0), cam)?;
            out.pixel_mut(x, y).copy_from_slice(p.as_slice());
            valid[i] = true;
        }
    }
    out.with_mask(valid)
}

fn vec_at(img: &AttributeImage, x: usize, y: usize) -> Vec3 {
    Vec3::from_column_slice(img.pixel(x, y))
}

/// Raw gradient cross product `(X(u+1,v) − X(u,v)) × (X(u,v+1) − X(u,v))`.
///
/// Forward differences are used where the next pixel is valid, backward
/// differences otherwise (image borders, mask edges). Returns `None` when
/// neither neighbour is available along an axis.
pub fn gradient_cross(positions: &AttributeImage, valid: &[bool], x: usize, y: usize) -> Option<Vec3> {
    let (w, h) = (positions.width(), positions.height());
    let ok = |xx: usize, yy: usize| valid[yy * w + xx];
    let here = vec_at(positions, x, y);
    let dx = if x + 1 < w && ok(x + 1, y) {
        vec_at(positions, x + 1, y) - here
    } else if x > 0 && ok(x - 1, y) {
        here - vec_at(positions, x - 1, y)
    } else {
        return None;
    };
    let dy = if y + 1 < h && ok(x, y + 1) {
        vec_at(positions, x, y + 1) - here
    } else if y > 0 && ok(x, y - 1) {
        here - vec_at(positions, x, y - 1)
    } else {
        return None;
    };
    Some(dx.cross(&dy))
}

/// Normalised gradient cross product of a position map, flipped to face the
/// camera. Pixels with a degenerate cross product are dropped from the mask.
pub fn coarse_normals(positions: &AttributeImage, mask: Option<&[bool]>, cam: &Camera) -> Result<AttributeImage> {
    if positions.channels() != 3 {
        return Err(Error::ShapeMismatch(format!("position map has {} channels", positions.channels())));
    }
    let (w, h) = (positions.width(), positions.height());
    let valid: Vec<bool> = match mask.or(positions.mask()) {
        Some(m) => m.to_vec(),
        None => vec![true; w * h],
    };
    check_mask(Some(&valid), w * h)?;
    let center = cam.center();
    let mut out = AttributeImage::new(w, h, 3);
    let mut out_valid = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !valid[y * w + x] {
                continue;
            }
            let Some(cross) = gradient_cross(positions, &valid, x, y) else {
                continue;
            };
            let norm = cross.norm();
            if !(norm > MIN_NORM * MIN_NORM) {
                continue;
            }
            let mut n = cross / norm;
            if n.dot(&(center - vec_at(positions, x, y))) < 0.0 {
                n = -n;
            }
            out.pixel_mut(x, y).copy_from_slice(n.as_slice());
            out_valid[y * w + x] = true;
        }
    }
    out.with_mask(out_valid)
}

/// `N_f = (N_c + ΔN) / ‖N_c + ΔN‖`; pixels whose sum nearly vanishes are
/// invalidated.
pub fn refine_normals(coarse: &AttributeImage, delta: &AttributeImage) -> Result<AttributeImage> {
    coarse.check_same_shape(delta, "refine_normals")?;
    if coarse.channels() != 3 {
        return Err(Error::ShapeMismatch(format!("normal map has {} channels", coarse.channels())));
    }
    let (w, h) = (coarse.width(), coarse.height());
    let mut out = AttributeImage::new(w, h, 3);
    let mut valid = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !coarse.is_foreground(x, y) {
                continue;
            }
            let sum = vec_at(coarse, x, y) + vec_at(delta, x, y);
            let norm = sum.norm();
            if !(norm >= MIN_NORM) {
                continue;
            }
            out.pixel_mut(x, y).copy_from_slice((sum / norm).as_slice());
            valid[y * w + x] = true;
        }
    }
    out.with_mask(valid)
}

/// Row-major `height × width × channels` feature map.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::ShapeMismatch(format!("empty feature tensor {width}x{height}x{channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch(format!(
                "feature data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature tensor".into()));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn feature(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.channels;
        &self.data[start..start + self.channels]
    }
}

/// `M[i, j, k]`: similarity of left pixel `(i, j)` and right pixel `(i, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationVolume {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl CorrelationVolume {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.width + j) * self.width + k]
    }

    /// Correlations of left pixel `(i, j)` against every right column.
    pub fn row(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.width + j) * self.width;
        &self.data[start..start + self.width]
    }
}

/// `M_ijk = Σ_l F̂_ijl · F̄_ikl`, computed row by row in parallel.
pub fn correlation_volume(left: &FeatureTensor, right: &FeatureTensor) -> Result<CorrelationVolume> {
    if (left.width, left.height, left.channels) != (right.width, right.height, right.channels) {
        return Err(Error::ShapeMismatch(format!(
            "features {}x{}x{} vs {}x{}x{}",
            left.width, left.height, left.channels, right.width, right.height, right.channels
        )));
    }
    let (h, w) = (left.height, left.width);
    let mut data = vec![0.0; h * w * w];
    data.par_chunks_mut(w * w).enumerate().for_each(|(i, plane)| {
        for j in 0..w {
            let a = left.feature(i, j);
            for k in 0..w {
                plane[j * w + k] = a.iter().zip(right.feature(i, k)).map(|(x, y)| x * y).sum();
            }
        }
    });
    Ok(CorrelationVolume { height: h, width: w, data })
}

fn best_match(row: &[f64], j: usize) -> usize {
    (1..=j).fold(0, |best, k| if row[k] > row[best] { k } else { best })
}

/// Integer disparity `j − argmax_{k ≤ j} M[i, j, k]`, row-major. Ties go to
/// the smaller `k`.
pub fn disparity_map(volume: &CorrelationVolume) -> Vec<usize> {
    let (h, w) = (volume.height, volume.width);
    (0..h)
        .flat_map(|i| (0..w).map(move |j| j - best_match(volume.row(i, j), j)))
        .collect()
}

/// Winner-takes-all disparity over the correlation volume, converted to
/// depth `fx · baseline / disparity`. Pixels with zero disparity are masked
/// out.
pub fn stereo_depth_baseline(volume: &CorrelationVolume, fx: f64, baseline: f64) -> Result<AttributeImage> {
    if !(baseline > 0.0) {
        return Err(Error::InvalidConfig(format!("stereo baseline must be positive, got {baseline}")));
    }
    let w = volume.width;
    let disparities = disparity_map(volume);
    let mut depth = AttributeImage::new(w, volume.height, 1);
    let mut valid = vec![false; disparities.len()];
    for (idx, &d) in disparities.iter().enumerate() {
        if d > 0 {
            depth.set(idx % w, idx / w, 0, fx * baseline / d as f64);
            valid[idx] = true;
        }
    }
    depth.with_mask(valid)
}

/// Upsamples `field` by `factor` as softmax-weighted combinations of each
/// coarse pixel's 3×3 neighbourhood (edge-replicated).
///
/// `weights` lives at the coarse resolution with `9·factor²` channels: channel
/// `n·factor² + a·factor + b` holds the logit of neighbour
/// `n = (di + 1)·3 + (dj + 1)` for fine sub-pixel `(a, b)` (row, column).
pub fn convex_upsample(field: &AttributeImage, weights: &AttributeImage, factor: usize) -> Result<AttributeImage> {
    if factor == 0 {
        return Err(Error::InvalidConfig("upsampling factor must be positive".into()));
    }
    let f2 = factor * factor;
    if weights.channels() != 9 * f2 || weights.width() != field.width() || weights.height() != field.height() {
        return Err(Error::ShapeMismatch(format!(
            "weights {}x{}x{} for field {}x{} at factor {factor} (expected {} channels)",
            weights.width(),
            weights.height(),
            weights.channels(),
            field.width(),
            field.height(),
            9 * f2
        )));
    }
    if weights.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("upsampling weights".into()));
    }
    let (w, h, c) = (field.width(), field.height(), field.channels());
    let mut out = AttributeImage::new(w * factor, h * factor, c);
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    for cy in 0..h {
        for cx in 0..w {
            let logits = weights.pixel(cx, cy);
            for a in 0..factor {
                for b in 0..factor {
                    let sub = a * factor + b;
                    let max = (0..9).map(|n| logits[n * f2 + sub]).fold(f64::NEG_INFINITY, f64::max);
                    let mut probs = [0.0; 9];
                    let mut total = 0.0;
                    for (n, p) in probs.iter_mut().enumerate() {
                        *p = (logits[n * f2 + sub] - max).exp();
                        total += *p;
                    }
                    let fine = out.pixel_mut(cx * factor + b, cy * factor + a);
                    for (n, p) in probs.iter().enumerate() {
                        let sy = clamp(cy as isize + n as isize / 3 - 1, h);
                        let sx = clamp(cx as isize + n as isize % 3 - 1, w);
                        let weight = p / total;
                        for (o, v) in fine.iter_mut().zip(field.pixel(sx, sy)) {
                            *o += weight * v;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn canonical(fx: f64) -> Camera {
        Camera::new(fx, fx, 0.0, 0.0, Matrix3::identity(), Vec3::zeros(), 8, 8).unwrap()
    }

    #[test]
    fn unproject_examples() {
        assert_eq!(unproject(0.0, 0.0, 2.0, &canonical(1.0)).unwrap(), Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(unproject(2.0, 0.0, 4.0, &canonical(2.0)).unwrap(), Vec3::new(4.0, 0.0, 4.0));
        assert!(matches!(unproject(0.0, 0.0, 0.0, &canonical(1.0)), Err(Error::NonPositiveDepth(_))));
        assert!(unproject(0.0, 0.0, -1.0, &canonical(1.0)).is_err());
    }

    #[test]
    fn constant_depth_gives_plane() {
        let depth = AttributeImage::filled(5, 4, 1, 3.0);
        let x = position_map(&depth, &canonical(2.0), None).unwrap();
        for y in 0..4 {
            for u in 0..5 {
                assert_eq!(x.get(u, y, 2), 3.0);
                assert_eq!(x.get(u, y, 0), u as f64 * 1.5);
            }
        }
    }

    #[test]
    fn single_pixel_mask() {
        let depth = AttributeImage::filled(3, 3, 1, 1.0);
        let mut mask = vec![false; 9];
        mask[4] = true;
        let x = position_map(&depth, &canonical(1.0), Some(&mask)).unwrap();
        assert_eq!(x.mask().unwrap().iter().filter(|&&b| b).count(), 1);
        assert_eq!(x.pixel(0, 0), &[0.0, 0.0, 0.0]);
        assert_eq!(x.pixel(1, 1), &[1.0, 1.0, 1.0]);
    }

    fn grid(w: usize, h: usize, f: impl Fn(f64, f64) -> Vec3) -> AttributeImage {
        let mut img = AttributeImage::new(w, h, 3);
        for y in 0..h {
            for x in 0..w {
                img.pixel_mut(x, y).copy_from_slice(f(x as f64, y as f64).as_slice());
            }
        }
        img
    }

    #[test]
    fn plane_normals_face_camera() {
        let cam = Camera::new(1.0, 1.0, 0.0, 0.0, Matrix3::identity(), Vec3::new(0.0, 0.0, -10.0), 4, 4).unwrap();
        assert_eq!(cam.center(), Vec3::new(0.0, 0.0, 10.0));
        let n = coarse_normals(&grid(4, 4, |u, v| Vec3::new(u, v, 0.0)), None, &cam).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(n.pixel(x, y), &[0.0, 0.0, 1.0]);
            }
        }
    }

    #[test]
    fn tilted_plane_cross_product() {
        let img = grid(3, 3, |u, v| Vec3::new(u, v, u));
        let valid = vec![true; 9];
        let cross = gradient_cross(&img, &valid, 0, 0).unwrap();
        assert_eq!(cross, Vec3::new(-1.0, 0.0, 1.0));
        let n = cross.normalize();
        assert!((n - Vec3::new(-1.0, 0.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
        // border pixel uses backward differences with the same orientation
        assert_eq!(gradient_cross(&img, &valid, 2, 2).unwrap(), cross);
    }

    #[test]
    fn degenerate_gradients_invalidated() {
        let cam = canonical(1.0);
        let img = grid(3, 3, |u, _| Vec3::new(u, 0.0, 1.0));
        let n = coarse_normals(&img, None, &cam).unwrap();
        assert!(n.mask().unwrap().iter().all(|&b| !b));
        assert!(matches!(coarse_normals(&img, Some(&[false; 9]), &cam), Err(Error::EmptyForeground)));
    }

    #[test]
    fn refine_examples() {
        let nc = AttributeImage::from_data(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        let zero = AttributeImage::new(1, 1, 3);
        assert_eq!(refine_normals(&nc, &zero).unwrap().pixel(0, 0), nc.pixel(0, 0));
        let dn = AttributeImage::from_data(1, 1, 3, vec![0.0, 1.0, 0.0]).unwrap();
        let nf = refine_normals(&nc, &dn).unwrap();
        assert!((nf.get(0, 0, 0) - 0.70711).abs() < 1e-5 && (nf.get(0, 0, 1) - 0.70711).abs() < 1e-5);
        let up = AttributeImage::from_data(1, 1, 3, vec![0.0, 0.0, 1.0]).unwrap();
        let down = AttributeImage::from_data(1, 1, 3, vec![0.0, 0.0, -1.0]).unwrap();
        assert_eq!(refine_normals(&up, &down).unwrap().mask(), Some(&[false][..]));
        assert!(refine_normals(&up, &AttributeImage::new(2, 1, 3)).is_err());
    }

    #[test]
    fn correlation_small() {
        let l = FeatureTensor::new(2, 1, 1, vec![1.0, 2.0]).unwrap();
        let r = FeatureTensor::new(2, 1, 1, vec![3.0, 4.0]).unwrap();
        let m = correlation_volume(&l, &r).unwrap();
        assert_eq!(m.row(0, 0), &[3.0, 4.0]);
        assert_eq!(m.row(0, 1), &[6.0, 8.0]);
        let r2 = FeatureTensor::new(2, 1, 2, vec![0.0; 4]).unwrap();
        assert!(correlation_volume(&l, &r2).is_err());
        assert!(FeatureTensor::new(2, 1, 1, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn stereo_formula_and_tie_break() {
        // one row of width 5; left pixel j = 4 best matches right column k = 2
        let mut data = vec![0.0; 5 * 5];
        data[4 * 5 + 2] = 1.0;
        let m = CorrelationVolume { height: 1, width: 5, data };
        let d = stereo_depth_baseline(&m, 100.0, 0.5).unwrap();
        assert_eq!(d.get(4, 0, 0), 25.0);
        assert!(d.is_foreground(4, 0));
        // flat rows tie everywhere and resolve to k = 0
        assert_eq!(disparity_map(&m), vec![0, 1, 2, 3, 2]);
        assert!(!d.is_foreground(0, 0));
        assert!(stereo_depth_baseline(&m, 100.0, 0.0).is_err());
    }

    #[test]
    fn matching_views_have_zero_disparity() {
        let feats: Vec<f64> = (0..6)
            .flat_map(|j| {
                let a = j as f64 * 0.9;
                [a.cos(), a.sin()]
            })
            .collect();
        let f = FeatureTensor::new(6, 1, 2, feats).unwrap();
        let m = correlation_volume(&f, &f).unwrap();
        assert!(disparity_map(&m).iter().all(|&d| d == 0));
        let depth = stereo_depth_baseline(&m, 1.0, 1.0).unwrap();
        assert!(depth.mask().unwrap().iter().all(|&b| !b));
    }

    #[test]
    fn upsample_uniform_weights_average_neighbourhood() {
        let field = AttributeImage::from_data(3, 2, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let weights = AttributeImage::new(3, 2, 9 * 4);
        let out = convex_upsample(&field, &weights, 2).unwrap();
        assert_eq!((out.width(), out.height()), (6, 4));
        // coarse (0,0): rows {0,0,1} x cols {0,0,1} after edge replication
        let expected = (0.0 + 0.0 + 1.0 + 0.0 + 0.0 + 1.0 + 3.0 + 3.0 + 4.0) / 9.0;
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            assert!((out.get(x, y, 0) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn upsample_one_hot_replicates() {
        let field = AttributeImage::from_data(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut weights = AttributeImage::new(2, 2, 9 * 9);
        for y in 0..2 {
            for x in 0..2 {
                for sub in 0..9 {
                    weights.set(x, y, 4 * 9 + sub, 50.0);
                }
            }
        }
        let out = convex_upsample(&field, &weights, 3).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                assert!((out.get(x, y, 0) - field.get(x / 3, y / 3, 0)).abs() < 1e-12);
            }
        }
        assert!(convex_upsample(&field, &AttributeImage::new(2, 2, 9), 3).is_err());
    }
}

//! Bounding volume hierarchy over Gaussian ellipsoids for occlusion rays.

use nalgebra::Matrix3;

use crate::scene::GaussianPoint;
use crate::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

#[derive(Clone, Debug)]
struct Ellipsoid {
    center: Vec3,
    /// World-to-local rotation scaled per axis by the inverse radius.
    to_unit: Matrix3<f64>,
    index: usize,
}

impl Ellipsoid {
    /// Distance along the ray to the ellipsoid, or `None` on a miss. A ray
    /// starting inside the ellipsoid hits it at distance 0.
    fn intersect(&self, ray: &Ray) -> Option<f64> {
        let o = self.to_unit * (ray.origin - self.center);
        let d = self.to_unit * ray.dir;
        let a = d.dot(&d);
        let b = o.dot(&d);
        let c = o.dot(&o) - 1.0;
        let disc = b * b - a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let far = (-b + sq) / a;
        if far <= 0.0 {
            return None;
        }
        Some(((-b - sq) / a).max(0.0))
    }
}

#[derive(Clone, Copy, Debug)]
struct Bounds {
    min: Vec3,
    max: Vec3,
}

impl Bounds {
    fn empty() -> Self {
        Self { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) }
    }

    fn union(&self, other: &Bounds) -> Bounds {
        Bounds { min: self.min.inf(&other.min), max: self.max.sup(&other.max) }
    }

    /// Slab test; returns the entry distance when the ray overlaps `[0, t_max]`.
    fn hit(&self, ray: &Ray, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for axis in 0..3 {
            let mut near = (self.min[axis] - ray.origin[axis]) * inv_dir[axis];
            let mut far = (self.max[axis] - ray.origin[axis]) * inv_dir[axis];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN from 0 * inf means the ray lies in the slab plane
            if !near.is_nan() {
                t0 = t0.max(near);
            }
            if !far.is_nan() {
                t1 = t1.min(far);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Bounds, start: usize, end: usize },
    Inner { bounds: Bounds, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Bounds {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Median-split BVH over the ellipsoids `k_sigma · scale` of the Gaussians
/// that pass an opacity threshold.
#[derive(Clone, Debug)]
pub struct EllipsoidBvh {
    prims: Vec<Ellipsoid>,
    prim_bounds: Vec<Bounds>,
    nodes: Vec<Node>,
}

impl EllipsoidBvh {
    pub fn build(points: &[GaussianPoint], k_sigma: f64, opacity_threshold: f64) -> Self {
        let mut prims = Vec::new();
        let mut prim_bounds = Vec::new();
        for (index, g) in points.iter().enumerate() {
            if g.opacity < opacity_threshold {
                continue;
            }
            let rot = g.rotation.to_rotation_matrix().into_inner();
            let radii = g.scale * k_sigma;
            let inv = Matrix3::from_diagonal(&radii.map(|r| 1.0 / r));
            let half = Vec3::from_fn(|i, _| (0..3).map(|j| (rot[(i, j)] * radii[j]).powi(2)).sum::<f64>().sqrt());
            prims.push(Ellipsoid { center: g.position, to_unit: inv * rot.transpose(), index });
            prim_bounds.push(Bounds { min: g.position - half, max: g.position + half });
        }
        let mut bvh = Self { prims, prim_bounds, nodes: Vec::new() };
        if !bvh.prims.is_empty() {
            bvh.split(0, bvh.prims.len());
        }
        bvh
    }

    pub fn len(&self) -> usize {
        self.prims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prims.is_empty()
    }

    fn split(&mut self, start: usize, end: usize) -> usize {
        let bounds = self.prim_bounds[start..end].iter().fold(Bounds::empty(), |a, b| a.union(b));
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        self.nodes.push(Node::Leaf { bounds, start, end });
        let centers = self.prims[start..end].iter().fold(Bounds::empty(), |a, p| a.union(&Bounds { min: p.center, max: p.center }));
        let extent = centers.max - centers.min;
        let axis = extent.imax();
        let mid = (start + end) / 2;
        let mut order: Vec<usize> = (start..end).collect();
        order.sort_by(|&a, &b| {
            self.prims[a].center[axis]
                .total_cmp(&self.prims[b].center[axis])
                .then(self.prims[a].index.cmp(&self.prims[b].index))
        });
        let prims: Vec<_> = order.iter().map(|&i| self.prims[i].clone()).collect();
        let pb: Vec<_> = order.iter().map(|&i| self.prim_bounds[i]).collect();
        self.prims[start..end].clone_from_slice(&prims);
        self.prim_bounds[start..end].copy_from_slice(&pb);
        let left = self.split(start, mid);
        let right = self.split(mid, end);
        self.nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    fn traverse(&self, ray: &Ray, skip: Option<usize>, mut visit: impl FnMut(usize, f64) -> Option<f64>) {
        if self.nodes.is_empty() {
            return;
        }
        let inv_dir = ray.dir.map(|d| 1.0 / d);
        let mut t_max = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds().hit(ray, &inv_dir, t_max).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for p in &self.prims[start..end] {
                        if Some(p.index) == skip {
                            continue;
                        }
                        if let Some(t) = p.intersect(ray) {
                            if t <= t_max {
                                match visit(p.index, t) {
                                    Some(limit) => t_max = limit,
                                    None => return,
                                }
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
    }

    /// Whether the ray hits any ellipsoid other than `skip`.
    pub fn any_hit(&self, ray: &Ray, skip: Option<usize>) -> bool {
        let mut hit = false;
        self.traverse(ray, skip, |_, _| {
            hit = true;
            None
        });
        hit
    }

    /// Nearest hit as `(point index, distance)`; equal distances resolve to
    /// the smaller index.
    pub fn closest_hit(&self, ray: &Ray, skip: Option<usize>) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        self.traverse(ray, skip, |index, t| {
            let better = match best {
                None => true,
                Some((bi, bt)) => t < bt || (t == bt && index < bi),
            };
            if better {
                best = Some((index, t));
            }
            Some(best.map_or(f64::INFINITY, |b| b.1))
        });
        best
    }
}

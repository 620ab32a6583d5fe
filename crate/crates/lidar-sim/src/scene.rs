//! Analytic scene description: a list of opaque primitives with Lambertian
//! albedo, plus exact ray intersection.

use serde::{Deserialize, Serialize};
use transient_core::error::{invalid, Result};
use transient_core::{Aabb, Ray, Vec3};

const T_EPS: f64 = 1e-9;

/// Geometry of a single primitive. Plane extent, when present, bounds the
/// plane to a rectangle of half-widths `[hu, hv]` in a tangent frame derived
/// deterministically from the normal.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    Plane {
        point: [f64; 3],
        normal: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        extent: Option<[f64; 2]>,
    },
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
}

/// A shape paired with its per-channel albedo.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub albedo: Vec<f64>,
}

/// A named collection of primitives. Rays see the nearest surface; on exact
/// distance ties the primitive listed first wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticScene {
    pub name: String,
    pub channels: usize,
    pub primitives: Vec<Primitive>,
}

/// Result of a ray/scene intersection.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceHit {
    pub distance: f64,
    pub position: Vec3,
    /// Unit surface normal; orientation is not guaranteed to face the ray.
    pub normal: Vec3,
    pub primitive: usize,
}

impl AnalyticScene {
    pub fn validate(&self) -> Result<()> {
        if self.channels != 1 && self.channels != 3 {
            return Err(invalid(format!("channels must be 1 or 3, got {}", self.channels)));
        }
        if self.primitives.is_empty() {
            return Err(invalid("scene has no primitives"));
        }
        for (i, prim) in self.primitives.iter().enumerate() {
            if prim.albedo.len() != self.channels {
                return Err(invalid(format!(
                    "primitive {i}: albedo has {} entries, scene has {} channels",
                    prim.albedo.len(),
                    self.channels
                )));
            }
            for &a in &prim.albedo {
                if !(a.is_finite() && (0.0..=1.0).contains(&a)) {
                    return Err(invalid(format!("primitive {i}: albedo {a} outside [0, 1]")));
                }
            }
            match &prim.shape {
                Shape::Sphere { center, radius } => {
                    if !center.iter().all(|v| v.is_finite()) || !(*radius > 0.0 && radius.is_finite()) {
                        return Err(invalid(format!("primitive {i}: bad sphere")));
                    }
                }
                Shape::Plane { point, normal, extent } => {
                    if !point.iter().all(|v| v.is_finite()) {
                        return Err(invalid(format!("primitive {i}: bad plane point")));
                    }
                    if Vec3::from_array(*normal).normalized().is_none() {
                        return Err(invalid(format!("primitive {i}: degenerate plane normal")));
                    }
                    if let Some([hu, hv]) = extent {
                        if !(*hu > 0.0 && *hv > 0.0 && hu.is_finite() && hv.is_finite()) {
                            return Err(invalid(format!("primitive {i}: plane extent must be positive")));
                        }
                    }
                }
                Shape::Box { min, max } => {
                    let ok = min.iter().zip(max).all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi);
                    if !ok {
                        return Err(invalid(format!("primitive {i}: box min must be below max")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let scene: AnalyticScene =
            serde_json::from_str(&text).map_err(|e| invalid(format!("scene parse error: {e}")))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| invalid(format!("scene serialize error: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Union of the finite primitive bounds. Unbounded planes contribute
    /// nothing; returns None when no primitive has finite bounds.
    pub fn bounds(&self) -> Option<Aabb> {
        let mut acc: Option<Aabb> = None;
        for prim in &self.primitives {
            let b = match &prim.shape {
                Shape::Sphere { center, radius } => {
                    let c = Vec3::from_array(*center);
                    let r = Vec3::new(*radius, *radius, *radius);
                    Some(Aabb { min: c - r, max: c + r })
                }
                Shape::Plane { point, normal, extent } => extent.map(|[hu, hv]| {
                    let p = Vec3::from_array(*point);
                    let n = Vec3::from_array(*normal).normalized().expect("validated");
                    let (u, v) = plane_tangent_frame(n);
                    let mut min = p;
                    let mut max = p;
                    for su in [-1.0, 1.0] {
                        for sv in [-1.0, 1.0] {
                            let corner = p + u * (su * hu) + v * (sv * hv);
                            min = min.min_by_component(corner);
                            max = max.max_by_component(corner);
                        }
                    }
                    Aabb { min, max }
                }),
                Shape::Box { min, max } => {
                    Some(Aabb { min: Vec3::from_array(*min), max: Vec3::from_array(*max) })
                }
            };
            if let Some(b) = b {
                acc = Some(match acc {
                    Some(a) => a.union(&b),
                    None => b,
                });
            }
        }
        acc
    }
}

/// Deterministic orthonormal tangent frame (u, v) for a unit normal.
pub fn plane_tangent_frame(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let u = n.cross(helper).normalized().expect("helper not parallel to normal");
    let v = n.cross(u);
    (u, v)
}

fn intersect_shape(shape: &Shape, ray: &Ray) -> Option<(f64, Vec3)> {
    match shape {
        Shape::Sphere { center, radius } => {
            let c = Vec3::from_array(*center);
            let oc = ray.origin - c;
            let b = oc.dot(ray.direction);
            let disc = b * b - (oc.length_squared() - radius * radius);
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let t = if -b - sq > T_EPS {
                -b - sq
            } else if -b + sq > T_EPS {
                -b + sq
            } else {
                return None;
            };
            let p = ray.point_at(t);
            Some((t, (p - c) / *radius))
        }
        Shape::Plane { point, normal, extent } => {
            let p0 = Vec3::from_array(*point);
            let n = Vec3::from_array(*normal).normalized()?;
            let denom = ray.direction.dot(n);
            if denom.abs() < 1e-12 {
                return None;
            }
            let t = (p0 - ray.origin).dot(n) / denom;
            if t <= T_EPS {
                return None;
            }
            if let Some([hu, hv]) = extent {
                let (u, v) = plane_tangent_frame(n);
                let rel = ray.point_at(t) - p0;
                if rel.dot(u).abs() > *hu || rel.dot(v).abs() > *hv {
                    return None;
                }
            }
            Some((t, n))
        }
        Shape::Box { min, max } => {
            let lo = Vec3::from_array(*min);
            let hi = Vec3::from_array(*max);
            let mut t_enter = f64::NEG_INFINITY;
            let mut t_exit = f64::INFINITY;
            for axis in 0..3 {
                let o = ray.origin.to_array()[axis];
                let d = ray.direction.to_array()[axis];
                let (l, h) = (lo.to_array()[axis], hi.to_array()[axis]);
                if d.abs() < 1e-15 {
                    if o < l || o > h {
                        return None;
                    }
                    continue;
                }
                let (mut t0, mut t1) = ((l - o) / d, (h - o) / d);
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                t_enter = t_enter.max(t0);
                t_exit = t_exit.min(t1);
            }
            if t_enter > t_exit {
                return None;
            }
            let t = if t_enter > T_EPS {
                t_enter
            } else if t_exit > T_EPS {
                t_exit
            } else {
                return None;
            };
            let p = ray.point_at(t);
            Some((t, box_normal(p, lo, hi)))
        }
    }
}

fn box_normal(p: Vec3, lo: Vec3, hi: Vec3) -> Vec3 {
    let pa = p.to_array();
    let la = lo.to_array();
    let ha = hi.to_array();
    let mut best_axis = 0;
    let mut best_dist = f64::INFINITY;
    let mut best_sign = -1.0;
    for axis in 0..3 {
        let d_lo = (pa[axis] - la[axis]).abs();
        let d_hi = (pa[axis] - ha[axis]).abs();
        if d_lo < best_dist {
            best_dist = d_lo;
            best_axis = axis;
            best_sign = -1.0;
        }
        if d_hi < best_dist {
            best_dist = d_hi;
            best_axis = axis;
            best_sign = 1.0;
        }
    }
    let mut n = [0.0; 3];
    n[best_axis] = best_sign;
    Vec3::from_array(n)
}

/// Nearest surface hit along a ray, if any. Ties in distance keep the
/// primitive with the lowest index.
pub fn intersect(scene: &AnalyticScene, ray: &Ray) -> Option<SurfaceHit> {
    let mut best: Option<SurfaceHit> = None;
    for (i, prim) in scene.primitives.iter().enumerate() {
        if let Some((t, normal)) = intersect_shape(&prim.shape, ray) {
            let closer = best.map_or(true, |b| t < b.distance);
            if closer {
                best = Some(SurfaceHit { distance: t, position: ray.point_at(t), normal, primitive: i });
            }
        }
    }
    best
}

//! Camera models and per-pixel ray generation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoreError, Result};
use crate::vec3::Vec3;

/// Ray with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing the direction.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        if !origin.is_finite() {
            return Err(invalid("ray origin must be finite"));
        }
        let direction = direction
            .normalized()
            .ok_or_else(|| invalid("ray direction must be a nonzero finite vector"))?;
        Ok(Ray { origin, direction })
    }

    pub fn point_at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Rigid camera-to-world transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    /// Row-major rotation matrix; columns are the camera axes in world space.
    pub rotation: [[f64; 3]; 3],
    pub translation: Vec3,
}

impl RigidPose {
    pub fn identity() -> Self {
        RigidPose {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: Vec3::ZERO,
        }
    }

    /// Validates orthonormality (within 1e-6) and positive determinant.
    pub fn new(rotation: [[f64; 3]; 3], translation: Vec3) -> Result<Self> {
        let pose = RigidPose { rotation, translation };
        if !translation.is_finite() {
            return Err(invalid("pose translation must be finite"));
        }
        let cols: Vec<Vec3> = (0..3).map(|c| pose.column(c)).collect();
        for i in 0..3 {
            for j in i..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                let got = cols[i].dot(cols[j]);
                if !got.is_finite() || (got - expect).abs() > 1e-6 {
                    return Err(invalid(format!(
                        "rotation not orthonormal: col{i}.col{j} = {got}"
                    )));
                }
            }
        }
        let det = cols[0].dot(cols[1].cross(cols[2]));
        if (det - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("rotation determinant {det}, expected +1")));
        }
        Ok(pose)
    }

    /// Camera at `eye` looking toward `target`, with `up` fixing the roll.
    ///
    /// Camera axes follow the usual imaging convention: +x right, +y down,
    /// +z forward.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<Self> {
        let forward = (target - eye)
            .normalized()
            .ok_or_else(|| invalid("look_at eye and target coincide"))?;
        let mut up = up;
        if forward.cross(up).length() < 1e-9 {
            // Degenerate up vector; pick any perpendicular axis.
            up = if forward.x.abs() < 0.9 {
                Vec3::new(1.0, 0.0, 0.0)
            } else {
                Vec3::new(0.0, 1.0, 0.0)
            };
        }
        let right = forward.cross(up).normalized().unwrap();
        let down = forward.cross(right);
        Ok(RigidPose {
            rotation: [
                [right.x, down.x, forward.x],
                [right.y, down.y, forward.y],
                [right.z, down.z, forward.z],
            ],
            translation: eye,
        })
    }

    fn column(&self, c: usize) -> Vec3 {
        Vec3::new(self.rotation[0][c], self.rotation[1][c], self.rotation[2][c])
    }

    pub fn apply_direction(&self, d: Vec3) -> Vec3 {
        self.column(0) * d.x + self.column(1) * d.y + self.column(2) * d.z
    }

    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        self.apply_direction(p) + self.translation
    }

    /// Serializes as a row-major 4x4 homogeneous matrix.
    pub fn to_matrix_rows(&self) -> [f64; 16] {
        let t = self.translation;
        let r = &self.rotation;
        [
            r[0][0], r[0][1], r[0][2], t.x,
            r[1][0], r[1][1], r[1][2], t.y,
            r[2][0], r[2][1], r[2][2], t.z,
            0.0, 0.0, 0.0, 1.0,
        ]
    }

    pub fn from_matrix_rows(m: &[f64; 16]) -> Result<Self> {
        if m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0 {
            return Err(invalid("pose matrix last row must be [0 0 0 1]"));
        }
        RigidPose::new(
            [
                [m[0], m[1], m[2]],
                [m[4], m[5], m[6]],
                [m[8], m[9], m[10]],
            ],
            Vec3::new(m[3], m[7], m[11]),
        )
    }
}

/// Intrinsic projection model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Intrinsics {
    /// Ideal pinhole: pixel (px, py) maps to camera-space direction
    /// ((px-cx)/fx, (py-cy)/fy, 1), normalized.
    Pinhole { fx: f64, fy: f64, cx: f64, cy: f64 },
    /// Per-pixel calibrated ray table in the camera frame, bilinearly
    /// interpolated at fractional pixel coordinates.
    RayTable {
        width: usize,
        height: usize,
        /// Row-major per-pixel ray origins, length width*height.
        origins: Vec<[f64; 3]>,
        /// Row-major per-pixel unit ray directions, length width*height.
        directions: Vec<[f64; 3]>,
    },
}

/// A camera: intrinsics plus a rigid camera-to-world pose.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub intrinsics: Intrinsics,
    pub pose: RigidPose,
}

impl CameraModel {
    pub fn new(intrinsics: Intrinsics, pose: RigidPose) -> Result<Self> {
        match &intrinsics {
            Intrinsics::Pinhole { fx, fy, cx, cy } => {
                if !(fx.is_finite() && fy.is_finite() && *fx > 0.0 && *fy > 0.0) {
                    return Err(invalid(format!("focal lengths must be positive, got {fx}, {fy}")));
                }
                if !(cx.is_finite() && cy.is_finite()) {
                    return Err(invalid("principal point must be finite"));
                }
            }
            Intrinsics::RayTable { width, height, origins, directions } => {
                if *width == 0 || *height == 0 {
                    return Err(invalid("ray table must be non-empty"));
                }
                if origins.len() != width * height || directions.len() != width * height {
                    return Err(invalid("ray table size does not match width*height"));
                }
                for d in directions {
                    let len = Vec3::from_array(*d).length();
                    if !len.is_finite() || (len - 1.0).abs() > 1e-6 {
                        return Err(invalid(format!("ray table direction has norm {len}")));
                    }
                }
                if origins.iter().any(|o| !Vec3::from_array(*o).is_finite()) {
                    return Err(invalid("ray table origin not finite"));
                }
            }
        }
        Ok(CameraModel { intrinsics, pose })
    }

    /// World-space ray through a (fractional) pixel coordinate (px, py).
    ///
    /// For the pinhole model the caller is responsible for keeping pixels
    /// within the image plus any footprint margin; a ray table rejects
    /// lookups outside its stored grid.
    pub fn ray_for_pixel(&self, pixel: [f64; 2]) -> Result<Ray> {
        let (origin_cam, dir_cam) = match &self.intrinsics {
            Intrinsics::Pinhole { fx, fy, cx, cy } => {
                let dir = Vec3::new((pixel[0] - cx) / fx, (pixel[1] - cy) / fy, 1.0);
                (Vec3::ZERO, dir)
            }
            Intrinsics::RayTable { width, height, origins, directions } => {
                let (px, py) = (pixel[0], pixel[1]);
                if !(px >= 0.0 && px <= (*width - 1) as f64 && py >= 0.0 && py <= (*height - 1) as f64)
                {
                    return Err(CoreError::OutsideRayTable { pixel });
                }
                let x0 = px.floor().min((*width - 1) as f64) as usize;
                let y0 = py.floor().min((*height - 1) as f64) as usize;
                let x1 = (x0 + 1).min(*width - 1);
                let y1 = (y0 + 1).min(*height - 1);
                let ax = px - x0 as f64;
                let ay = py - y0 as f64;
                let lerp = |table: &Vec<[f64; 3]>| {
                    let v00 = Vec3::from_array(table[y0 * width + x0]);
                    let v10 = Vec3::from_array(table[y0 * width + x1]);
                    let v01 = Vec3::from_array(table[y1 * width + x0]);
                    let v11 = Vec3::from_array(table[y1 * width + x1]);
                    (v00 * (1.0 - ax) + v10 * ax) * (1.0 - ay)
                        + (v01 * (1.0 - ax) + v11 * ax) * ay
                };
                (lerp(origins), lerp(directions))
            }
        };
        let dir_cam = dir_cam
            .normalized()
            .ok_or_else(|| invalid("degenerate interpolated ray direction"))?;
        Ray::new(self.pose.apply_point(origin_cam), self.pose.apply_direction(dir_cam))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pinhole_512() -> CameraModel {
        CameraModel::new(
            Intrinsics::Pinhole { fx: 256.0, fy: 256.0, cx: 256.0, cy: 256.0 },
            RigidPose::identity(),
        )
        .unwrap()
    }

    #[test]
    fn optical_axis_pixel_points_forward() {
        let ray = pinhole_512().ray_for_pixel([256.0, 256.0]).unwrap();
        assert_eq!(ray.origin, Vec3::ZERO);
        assert!((ray.direction - Vec3::new(0.0, 0.0, 1.0)).length() < 1e-12);
    }

    #[test]
    fn off_axis_pixel_direction() {
        let ray = pinhole_512().ray_for_pixel([512.0, 256.0]).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((ray.direction - Vec3::new(s, 0.0, s)).length() < 1e-12);
    }

    #[test]
    fn translated_pose_moves_origin_only() {
        let cam = CameraModel::new(
            Intrinsics::Pinhole { fx: 256.0, fy: 256.0, cx: 256.0, cy: 256.0 },
            RigidPose::new(RigidPose::identity().rotation, Vec3::new(0.5, -1.0, 2.0)).unwrap(),
        )
        .unwrap();
        let ray = cam.ray_for_pixel([256.0, 256.0]).unwrap();
        assert!((ray.origin - Vec3::new(0.5, -1.0, 2.0)).length() < 1e-12);
        assert!((ray.direction - Vec3::new(0.0, 0.0, 1.0)).length() < 1e-12);
    }

    #[test]
    fn directions_are_unit_for_random_pixels() {
        let cam = pinhole_512();
        for i in 0..50 {
            let px = (i * 37 % 512) as f64 + 0.21;
            let py = (i * 91 % 512) as f64 + 0.77;
            let ray = cam.ray_for_pixel([px, py]).unwrap();
            assert!((ray.direction.length() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn non_orthonormal_rotation_rejected() {
        let r = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(RigidPose::new(r, Vec3::ZERO).is_err());
        // Reflections (det -1) are not rigid poses.
        let refl = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(RigidPose::new(refl, Vec3::ZERO).is_err());
    }

    #[test]
    fn look_at_points_camera_z_at_target() {
        let eye = Vec3::new(2.0, 1.0, 3.0);
        let pose = RigidPose::look_at(eye, Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let forward = pose.apply_direction(Vec3::new(0.0, 0.0, 1.0));
        let expect = (Vec3::ZERO - eye).normalized().unwrap();
        assert!((forward - expect).length() < 1e-12);
        // Round trip through the matrix form.
        let again = RigidPose::from_matrix_rows(&pose.to_matrix_rows()).unwrap();
        assert!((again.translation - eye).length() < 1e-12);
    }

    #[test]
    fn ray_table_interpolates_and_rejects_outside() {
        let width = 2;
        let height = 2;
        let origins = vec![[0.0, 0.0, 0.0]; 4];
        let dirs = vec![
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0],
        ];
        let cam = CameraModel::new(
            Intrinsics::RayTable { width, height, origins, directions: dirs },
            RigidPose::identity(),
        )
        .unwrap();
        let mid = cam.ray_for_pixel([0.5, 0.0]).unwrap();
        // Mean of +z and +x, renormalized.
        let s = 1.0 / 2.0_f64.sqrt();
        assert!((mid.direction - Vec3::new(s, 0.0, s)).length() < 1e-12);
        assert!(matches!(
            cam.ray_for_pixel([1.5, 0.0]),
            Err(CoreError::OutsideRayTable { .. })
        ));
        assert!(cam.ray_for_pixel([-0.1, 0.0]).is_err());
    }

    #[test]
    fn bad_ray_table_norm_rejected() {
        let cam = CameraModel::new(
            Intrinsics::RayTable {
                width: 1,
                height: 1,
                origins: vec![[0.0; 3]],
                directions: vec![[0.0, 0.0, 2.0]],
            },
            RigidPose::identity(),
        );
        assert!(cam.is_err());
    }
}

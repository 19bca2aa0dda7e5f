//! Camera model, frame conventions, and point-cloud transforms.
//!
//! Conventions used everywhere in the crate:
//!
//! * Camera frame: x right, y down, z forward (optical axis).
//! * Body frame: x forward, y left, z up. The camera is mounted at the
//!   body origin with zero pitch, so camera-to-body is the fixed axis
//!   remap [`Extrinsics::camera_to_body`].
//! * World frame: z up. A [`Pose`] is a position plus a yaw about world z;
//!   the aerial agent never rolls or pitches.
//!
//! Back-projection of pixel (u, v) with depth z uses the pinhole model
//! p = (z*(u-cu)/fx, z*(v-cv)/fy, z), so reprojecting a cloud point lands
//! on the pixel it came from.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::DepthFrame;

/// Tolerance for the orthonormality check on extrinsic rotations.
pub const ROTATION_TOL: f64 = 1e-9;

/// Pinhole camera intrinsics. Pixels are sampled at integer coordinates,
/// so u ranges over 0..width and v over 0..height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cu: f64,
    pub cv: f64,
    pub width: usize,
    pub height: usize,
    /// Maximum Euclidean sensing range in meters; rays are cut off here.
    pub max_range: f64,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cu: f64,
        cv: f64,
        width: usize,
        height: usize,
        max_range: f64,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::config("intrinsics: focal lengths must be positive"));
        }
        if !(cu > 0.0 && cu < width as f64 && cv > 0.0 && cv < height as f64) {
            return Err(Error::config("intrinsics: principal point outside image"));
        }
        if !(max_range > 0.0) {
            return Err(Error::config("intrinsics: max_range must be positive"));
        }
        Ok(CameraIntrinsics { fx, fy, cu, cv, width, height, max_range })
    }

    /// Builds square-pixel intrinsics from a horizontal field of view.
    pub fn from_hfov(width: usize, height: usize, hfov_rad: f64, max_range: f64) -> Result<Self> {
        if !(hfov_rad > 0.0 && hfov_rad < std::f64::consts::PI) {
            return Err(Error::config("intrinsics: hfov must be in (0, pi)"));
        }
        let fx = width as f64 / (2.0 * (hfov_rad / 2.0).tan());
        CameraIntrinsics::new(fx, fx, width as f64 / 2.0, height as f64 / 2.0, width, height, max_range)
    }

    /// Horizontal field of view implied by fx and the image width.
    pub fn hfov(&self) -> f64 {
        2.0 * (self.width as f64 / (2.0 * self.fx)).atan()
    }

    /// Default navigation camera: 80x60 pixels, 90 degree hfov, 3 m range.
    pub fn default_nav() -> Self {
        CameraIntrinsics::from_hfov(80, 60, std::f64::consts::FRAC_PI_2, 3.0)
            .expect("default intrinsics are valid")
    }

    /// Projects a camera-frame point to pixel coordinates. The caller must
    /// ensure z > 0.
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cu, self.fy * p.y / p.z + self.cv)
    }
}

/// Which frame a point cloud is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Camera,
    Body,
}

/// Rigid camera-to-body transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrinsics {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Extrinsics {
    /// Validates that `rotation` is orthonormal with determinant +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let err = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        if err > ROTATION_TOL {
            return Err(Error::config(format!(
                "extrinsics: rotation not orthonormal (residual {err:.3e})"
            )));
        }
        if (rotation.determinant() - 1.0).abs() > 1e-6 {
            return Err(Error::config("extrinsics: rotation must have determinant +1"));
        }
        Ok(Extrinsics { rotation, translation })
    }

    /// The canonical axis remap for a forward-looking, zero-pitch camera at
    /// the body origin: camera z maps to body x, camera x to body -y,
    /// camera y to body -z.
    pub fn camera_to_body() -> Self {
        #[rustfmt::skip]
        let rotation = Matrix3::new(
            0.0, 0.0, 1.0,
            -1.0, 0.0, 0.0,
            0.0, -1.0, 0.0,
        );
        Extrinsics { rotation, translation: Vector3::zeros() }
    }

    /// Identity transform, for sensors already expressed in the body frame.
    pub fn identity() -> Self {
        Extrinsics { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Inverse transform, body to camera.
    pub fn apply_inverse(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.translation)
    }
}

/// World pose of the agent body: position plus yaw about world z,
/// normalized to [-pi, pi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub yaw: f64,
}

/// Wraps an angle to [-pi, pi).
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can return exactly 2*pi for inputs just below zero.
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

impl Pose {
    pub fn new(position: Vector3<f64>, yaw: f64) -> Self {
        Pose { position, yaw: wrap_angle(yaw) }
    }

    /// Rotation taking body-frame vectors to world frame.
    pub fn rotation_body_to_world(&self) -> Matrix3<f64> {
        let (s, c) = self.yaw.sin_cos();
        #[rustfmt::skip]
        let r = Matrix3::new(
            c, -s, 0.0,
            s, c, 0.0,
            0.0, 0.0, 1.0,
        );
        r
    }

    pub fn body_to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_body_to_world() * p + self.position
    }

    pub fn world_to_body(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation_body_to_world().transpose() * (p - self.position)
    }

    /// Unit vector the body x axis points along in the world frame.
    pub fn heading(&self) -> Vector3<f64> {
        let (s, c) = self.yaw.sin_cos();
        Vector3::new(c, s, 0.0)
    }
}

/// A list of points tagged with the frame they are expressed in. Point
/// order is the row-major pixel order they were lifted from, which keeps
/// downstream reductions deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub frame: Frame,
}

impl PointCloud {
    pub fn empty(frame: Frame) -> Self {
        PointCloud { points: Vec::new(), frame }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Lifts every valid depth pixel into a camera-frame point cloud.
///
/// Pixels with z <= 0 (invalid) or z > max_range are dropped. The output
/// order is row-major scan order.
pub fn back_project(depth: &DepthFrame, k: &CameraIntrinsics) -> PointCloud {
    let mut points = Vec::new();
    for v in 0..depth.height() {
        for u in 0..depth.width() {
            let z = depth.at(u, v);
            if z <= 0.0 || z > k.max_range {
                continue;
            }
            let x = z * (u as f64 - k.cu) / k.fx;
            let y = z * (v as f64 - k.cv) / k.fy;
            points.push(Vector3::new(x, y, z));
        }
    }
    PointCloud { points, frame: Frame::Camera }
}

/// Applies the camera-to-body rigid transform to a camera-frame cloud.
///
/// Panics if the cloud is not in the camera frame; frame tags are a module
/// contract, not user input.
pub fn to_body(cloud: &PointCloud, extrinsics: &Extrinsics) -> PointCloud {
    assert_eq!(cloud.frame, Frame::Camera, "to_body expects a camera-frame cloud");
    PointCloud {
        points: cloud.points.iter().map(|p| extrinsics.apply(p)).collect(),
        frame: Frame::Body,
    }
}

/// Keeps body-frame points within |z| <= half_height of the sensor plane.
///
/// Panics if the cloud is not in the body frame.
pub fn slice_by_height(cloud: &PointCloud, half_height: f64) -> PointCloud {
    assert_eq!(cloud.frame, Frame::Body, "slice_by_height expects a body-frame cloud");
    PointCloud {
        points: cloud.points.iter().filter(|p| p.z.abs() <= half_height).copied().collect(),
        frame: Frame::Body,
    }
}

/// Drops body-frame points at or below `ground_eps` above the floor.
///
/// `height_above_floor` is the altitude of the body origin over the floor
/// surface; a point's height over the floor is that plus its body z.
pub fn exclude_ground(cloud: &PointCloud, height_above_floor: f64, ground_eps: f64) -> PointCloud {
    assert_eq!(cloud.frame, Frame::Body, "exclude_ground expects a body-frame cloud");
    PointCloud {
        points: cloud
            .points
            .iter()
            .filter(|p| height_above_floor + p.z > ground_eps)
            .copied()
            .collect(),
        frame: Frame::Body,
    }
}

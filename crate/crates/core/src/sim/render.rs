//! Depth and class-label rendering against the voxel grid.
//!
//! One ray is cast per pixel, through the pixel's integer coordinates.
//! The stored value is z-depth (the camera-frame forward component of the
//! hit point), while the range cutoff is Euclidean: rays are abandoned
//! once the hit distance exceeds the camera's `max_range`, so every
//! back-projected point satisfies `norm <= max_range` exactly.

use nalgebra::Vector3;

use crate::frame::{ClassFrame, DepthFrame};
use crate::geometry::{CameraIntrinsics, Extrinsics, Pose};

use super::grid::raycast;
use super::scene::VoxelScene;

/// Renders a depth frame and a per-pixel class-id frame from `pose`.
/// Pixels whose ray escapes the grid or exceeds range hold depth 0 and
/// class 0; class 0 also covers structural cells (walls, floor).
pub fn render(scene: &VoxelScene, pose: &Pose, k: &CameraIntrinsics) -> (DepthFrame, ClassFrame) {
    let cam_to_body = Extrinsics::camera_to_body();
    let body_to_world = pose.rotation_body_to_world();
    let origin = pose.position;

    let mut depth = DepthFrame::new(k.width, k.height);
    let mut class = ClassFrame::new(k.width, k.height);

    for v in 0..k.height {
        for u in 0..k.width {
            let dir_cam = Vector3::new(
                (u as f64 - k.cu) / k.fx,
                (v as f64 - k.cv) / k.fy,
                1.0,
            );
            let inv_norm = 1.0 / dir_cam.norm();
            let dir_world = body_to_world * (cam_to_body.rotation() * (dir_cam * inv_norm));
            if let Some(hit) = raycast(scene, &origin, &dir_world, k.max_range) {
                // Ray direction is unit-length, so `t` is Euclidean range;
                // the forward component of the unit camera ray is inv_norm.
                depth.set(u, v, hit.t * inv_norm);
                class.set(u, v, scene.cell_class_id(hit.cell));
            }
        }
    }
    (depth, class)
}

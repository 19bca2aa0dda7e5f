//! Free-space coverage accounting.
//!
//! A reachable free cell counts as covered once its center has been seen:
//! inside the camera frustum, within sensing range, and with clear line of
//! sight from the camera origin. The cell the camera itself occupies is
//! covered by presence. Coverage only ever grows, and the denominator is
//! the set of free cells reachable from the episode start by face-adjacent
//! moves, so the ratio compares what was seen against what could ever be.

use nalgebra::Vector3;

use crate::geometry::{CameraIntrinsics, Extrinsics, Pose};
use crate::sim::{reachable_mask, segment_visible, VoxelScene};

#[derive(Debug, Clone)]
pub struct CoverageState {
    reachable: Vec<bool>,
    covered: Vec<bool>,
    reachable_count: usize,
    covered_count: usize,
}

impl CoverageState {
    /// A fresh state covers nothing, so the ratio starts at zero until the
    /// first observation is folded in.
    pub fn new(scene: &VoxelScene, start_cell: [usize; 3]) -> Self {
        let reachable = reachable_mask(scene, start_cell);
        let reachable_count = reachable.iter().filter(|r| **r).count();
        CoverageState {
            covered: vec![false; reachable.len()],
            reachable,
            reachable_count,
            covered_count: 0,
        }
    }

    pub fn reachable_count(&self) -> usize {
        self.reachable_count
    }

    pub fn covered_count(&self) -> usize {
        self.covered_count
    }

    /// Covered share of reachable free space, in percent.
    pub fn fcr(&self) -> f64 {
        if self.reachable_count == 0 {
            return 0.0;
        }
        100.0 * self.covered_count as f64 / self.reachable_count as f64
    }

    /// Folds in one camera pose. Only cells inside the range ball around
    /// the camera are candidates, so the sweep stays local.
    pub fn update(&mut self, scene: &VoxelScene, pose: &Pose, k: &CameraIntrinsics) {
        let origin = pose.position;
        let res = scene.resolution();
        let dims = scene.dims();
        let r = k.max_range;

        let lo = |v: f64| ((v - r) / res).floor().max(0.0) as usize;
        let hi = |v: f64, n: usize| (((v + r) / res).floor() as usize).min(n - 1);
        let (x0, x1) = (lo(origin.x), hi(origin.x, dims[0]));
        let (y0, y1) = (lo(origin.y), hi(origin.y, dims[1]));
        let (z0, z1) = (lo(origin.z), hi(origin.z, dims[2]));

        let cam_cell = scene.cell_of_point(&origin);
        let ext = Extrinsics::camera_to_body();
        let (w, h) = (k.width as f64, k.height as f64);

        for z in z0..=z1 {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let cell = [x, y, z];
                    let i = scene.idx(cell);
                    if self.covered[i] || !self.reachable[i] {
                        continue;
                    }
                    if cam_cell == Some(cell) {
                        self.covered[i] = true;
                        self.covered_count += 1;
                        continue;
                    }
                    let center = scene.cell_center(cell);
                    if (center - origin).norm() > r {
                        continue;
                    }
                    if !in_frustum(&center, pose, &ext, k, w, h) {
                        continue;
                    }
                    if segment_visible(scene, &origin, cell) {
                        self.covered[i] = true;
                        self.covered_count += 1;
                    }
                }
            }
        }
    }
}

/// True when the point projects inside the image rectangle, edges
/// inclusive, from in front of the camera.
fn in_frustum(
    point: &Vector3<f64>,
    pose: &Pose,
    ext: &Extrinsics,
    k: &CameraIntrinsics,
    w: f64,
    h: f64,
) -> bool {
    let cam = ext.apply_inverse(&pose.world_to_body(point));
    if cam.z <= 0.0 {
        return false;
    }
    let (u, v) = k.project(&cam);
    (0.0..=w).contains(&u) && (0.0..=h).contains(&v)
}

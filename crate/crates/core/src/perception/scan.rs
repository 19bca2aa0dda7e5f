//! Horizontal range scan distilled from the depth frame.
//!
//! The camera's field of view is divided into `sectors` angular bins,
//! left to right from the agent's perspective. Each bin holds the nearest
//! normalized range among the depth points that fall into it after ground
//! removal and height slicing; bins with no points read 1.0 (fully open).

use serde::{Deserialize, Serialize};

use crate::frame::DepthFrame;
use crate::geometry::{
    back_project, exclude_ground, slice_by_height, to_body, CameraIntrinsics, Extrinsics, Frame,
    PointCloud,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub sectors: usize,
    /// Points farther than this from the camera's horizontal plane are
    /// ignored, in meters.
    pub slice_half_width: f64,
    /// Points at or below this height above the floor are ignored.
    pub ground_eps: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { sectors: 16, slice_half_width: 0.1, ground_eps: 0.1 }
    }
}

/// Bins a body-frame cloud into per-sector minimum ranges, normalized by
/// `max_range`. Sector 0 is the leftmost (+y side); azimuths outside the
/// field of view clamp to the edge bins.
pub fn polar_scan(cloud: &PointCloud, hfov: f64, sectors: usize, max_range: f64) -> Vec<f64> {
    assert_eq!(cloud.frame, Frame::Body, "polar scan expects a body-frame cloud");
    assert!(sectors > 0, "polar scan needs at least one sector");
    let half = hfov / 2.0;
    let width = hfov / sectors as f64;
    let mut scan = vec![1.0; sectors];
    for p in &cloud.points {
        let phi = p.y.atan2(p.x);
        let i = (((half - phi) / width).floor() as i64).clamp(0, sectors as i64 - 1) as usize;
        let rho = p.x.hypot(p.y).min(max_range) / max_range;
        if rho < scan[i] {
            scan[i] = rho;
        }
    }
    scan
}

/// Full scan pipeline from a rendered depth frame: back-project, move to
/// the body frame, drop ground returns, slice to the horizontal band, and
/// bin. `height_above_floor` is the camera height over the walkable floor.
pub fn depth_to_scan(
    depth: &DepthFrame,
    k: &CameraIntrinsics,
    height_above_floor: f64,
    cfg: &ScanConfig,
) -> Vec<f64> {
    let cloud = back_project(depth, k);
    let body = to_body(&cloud, &Extrinsics::camera_to_body());
    let aloft = exclude_ground(&body, height_above_floor, cfg.ground_eps);
    let band = slice_by_height(&aloft, cfg.slice_half_width);
    polar_scan(&band, k.hfov(), cfg.sectors, k.max_range)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn body_cloud(points: Vec<Vector3<f64>>) -> PointCloud {
        PointCloud { points, frame: Frame::Body }
    }

    #[test]
    fn single_point_ahead_fills_the_center_sector() {
        let cloud = body_cloud(vec![Vector3::new(1.0, 0.0, 0.0)]);
        let scan = polar_scan(&cloud, FRAC_PI_2, 9, 3.0);
        for (i, &v) in scan.iter().enumerate() {
            if i == 4 {
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            } else {
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn leftmost_azimuth_lands_in_sector_zero() {
        let left = body_cloud(vec![Vector3::new(1.0, 1.0, 0.0)]);
        let scan = polar_scan(&left, FRAC_PI_2, 9, 3.0);
        assert!(scan[0] < 1.0, "azimuth +hfov/2 is the left edge");
        // The right edge azimuth computes to bin 9 and clamps to 8.
        let right = body_cloud(vec![Vector3::new(1.0, -1.0, 0.0)]);
        let scan = polar_scan(&right, FRAC_PI_2, 9, 3.0);
        assert!(scan[8] < 1.0);
        assert!(scan[..8].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn sectors_keep_the_minimum_range() {
        let cloud = body_cloud(vec![
            Vector3::new(2.4, 0.0, 0.0),
            Vector3::new(0.6, 0.01, 0.0),
            Vector3::new(1.5, -0.01, 0.0),
        ]);
        let scan = polar_scan(&cloud, FRAC_PI_2, 9, 3.0);
        assert!((scan[4] - 0.6f64.hypot(0.01) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ranges_clamp_at_max_range() {
        let cloud = body_cloud(vec![Vector3::new(5.0, 0.0, 0.0)]);
        let scan = polar_scan(&cloud, FRAC_PI_2, 9, 3.0);
        assert_eq!(scan[4], 1.0);
    }

    #[test]
    fn empty_cloud_reads_fully_open() {
        let scan = polar_scan(&body_cloud(vec![]), FRAC_PI_2, 16, 3.0);
        assert_eq!(scan, vec![1.0; 16]);
    }

    #[test]
    fn angular_order_runs_left_to_right() {
        // Points at evenly spaced azimuths from left to right must land
        // in strictly increasing sector indices.
        let mut points = Vec::new();
        let n = 9;
        for i in 0..n {
            let phi = FRAC_PI_4 - (i as f64 + 0.5) * FRAC_PI_2 / n as f64;
            points.push(Vector3::new(phi.cos(), phi.sin(), 0.0));
        }
        let scan = polar_scan(&body_cloud(points), FRAC_PI_2, 9, 3.0);
        assert!(scan.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
    }

    mod pipeline {
        use super::*;
        use crate::geometry::Pose;
        use crate::sim::{render, VoxelScene};

        #[test]
        fn open_room_reads_fully_open_even_hovering_at_the_floor() {
            let s = VoxelScene::new(0.15, [80, 60, 14], 0).unwrap();
            let k = CameraIntrinsics::default_nav();
            // Hovering 5 cm over the floor the camera sees mostly floor;
            // ground removal keeps it out of the scan.
            let z = s.floor_z() + 0.05;
            let pose = Pose::new(Vector3::new(6.0, 4.5, z), 0.0);
            let (depth, _) = render(&s, &pose, &k);
            let scan = depth_to_scan(&depth, &k, s.height_above_floor(z), &ScanConfig::default());
            assert_eq!(scan, vec![1.0; 16]);
        }

        #[test]
        fn wall_ahead_closes_the_center_sectors() {
            let s = VoxelScene::new(0.15, [80, 60, 14], 0).unwrap();
            let k = CameraIntrinsics::default_nav();
            // Facing the +x wall (inner face at 79 * 0.15 = 11.85) from
            // 1.5 m away, at a comfortable height.
            let pose = Pose::new(Vector3::new(11.85 - 1.5, 4.5, 0.9), 0.0);
            let (depth, _) = render(&s, &pose, &k);
            let scan =
                depth_to_scan(&depth, &k, s.height_above_floor(0.9), &ScanConfig::default());
            let center = 1.5 / 3.0;
            assert!((scan[7] - center).abs() < 0.02, "got {}", scan[7]);
            assert!((scan[8] - center).abs() < 0.02);
            // Edge sectors look at the wall obliquely, so they read longer.
            assert!(scan[0] > scan[7] && scan[15] > scan[8]);
        }
    }
}

//! Frontier region of interest: the largest connected patch of far depth.
//!
//! The top decile of valid depth marks "far" pixels, the largest
//! 4-connected component of those is the frontier, and its box center and
//! mean depth summarize where open space lies relative to the image
//! center. Ground returns never count as frontier: the floor is always
//! far away in the lower image and would otherwise dominate.

use serde::{Deserialize, Serialize};

use crate::frame::DepthFrame;
use crate::geometry::CameraIntrinsics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoiConfig {
    /// Fraction of valid pixels marked as far (by depth quantile).
    pub quantile: f64,
    /// Pixels whose 3D point is at or below this height over the floor
    /// are ground returns and never valid.
    pub ground_eps: f64,
}

impl Default for RoiConfig {
    fn default() -> Self {
        RoiConfig { quantile: 0.10, ground_eps: 0.1 }
    }
}

/// Frontier summary. `dx`, `dy` are the component box center's offset
/// from the image center, normalized to [-1, 1]; `z_mean` is the mean
/// depth over component pixels in meters. All zero when nothing is valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiFeature {
    pub dx: f64,
    pub dy: f64,
    pub z_mean: f64,
    pub valid: bool,
}

impl RoiFeature {
    fn invalid() -> Self {
        RoiFeature { dx: 0.0, dy: 0.0, z_mean: 0.0, valid: false }
    }
}

/// Computes the frontier feature along with the winning component's pixel
/// mask (all false when invalid).
pub fn roi_component(
    depth: &DepthFrame,
    k: &CameraIntrinsics,
    height_above_floor: f64,
    cfg: &RoiConfig,
) -> (RoiFeature, Vec<bool>) {
    let (w, h) = (depth.width(), depth.height());
    let mut mask = vec![false; w * h];

    // A pixel is valid when it has a depth return and its back-projected
    // point sits above the ground band. The camera's y axis points down,
    // so the body-frame height offset of pixel (u, v) is -(v - cv) z / fy.
    let mut depths: Vec<f64> = Vec::new();
    let mut valid = vec![false; w * h];
    for v in 0..h {
        for u in 0..w {
            let z = depth.at(u, v);
            if z <= 0.0 {
                continue;
            }
            let height = height_above_floor - (v as f64 - k.cv) * z / k.fy;
            if height > cfg.ground_eps {
                valid[v * w + u] = true;
                depths.push(z);
            }
        }
    }
    if depths.is_empty() {
        return (RoiFeature::invalid(), mask);
    }
    depths.sort_by(|a, b| a.partial_cmp(b).expect("depths are finite"));
    let n = depths.len();
    let idx = ((1.0 - cfg.quantile) * n as f64).ceil() as usize;
    let threshold = depths[idx.max(1) - 1];

    let marked: Vec<bool> = (0..w * h)
        .map(|i| valid[i] && depth.at(i % w, i / w) >= threshold)
        .collect();

    // Largest 4-connected component; components are discovered in flat
    // index order, so keeping only strictly larger areas breaks ties
    // toward the smaller minimum flat index.
    let mut seen = vec![false; w * h];
    let mut best: Option<(usize, [usize; 4], f64)> = None;
    for start in 0..w * h {
        if !marked[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut area = 0usize;
        let mut bbox = [w, h, 0, 0];
        let mut depth_sum = 0.0;
        let mut cells = Vec::new();
        while let Some(i) = stack.pop() {
            let (u, v) = (i % w, i / w);
            area += 1;
            depth_sum += depth.at(u, v);
            bbox = [bbox[0].min(u), bbox[1].min(v), bbox[2].max(u), bbox[3].max(v)];
            cells.push(i);
            let mut push = |j: usize| {
                if marked[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if u > 0 {
                push(i - 1);
            }
            if u + 1 < w {
                push(i + 1);
            }
            if v > 0 {
                push(i - w);
            }
            if v + 1 < h {
                push(i + w);
            }
        }
        if best.as_ref().map_or(true, |(a, _, _)| area > *a) {
            for b in mask.iter_mut() {
                *b = false;
            }
            for &i in &cells {
                mask[i] = true;
            }
            best = Some((area, bbox, depth_sum));
        }
    }
    let (area, bbox, depth_sum) = best.expect("threshold marks at least one pixel");

    // The +1 makes the center the midpoint of the covered pixel span, so
    // a component spanning the full image centers exactly on w/2, h/2.
    let uc = (bbox[0] + bbox[2] + 1) as f64 / 2.0;
    let vc = (bbox[1] + bbox[3] + 1) as f64 / 2.0;
    let feature = RoiFeature {
        dx: (uc - w as f64 / 2.0) / (w as f64 / 2.0),
        dy: (vc - h as f64 / 2.0) / (h as f64 / 2.0),
        z_mean: depth_sum / area as f64,
        valid: true,
    };
    (feature, mask)
}

/// Frontier feature alone; see [`roi_component`].
pub fn roi_feature(
    depth: &DepthFrame,
    k: &CameraIntrinsics,
    height_above_floor: f64,
    cfg: &RoiConfig,
) -> RoiFeature {
    roi_component(depth, k, height_above_floor, cfg).0
}

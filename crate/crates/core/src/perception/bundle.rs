//! The per-step observation vector handed to policies.
//!
//! The bundle is one flat `Vec<f64>` with a fixed layout; the structured
//! accessors are plain slices into it, so flattening is free and exact in
//! both directions. Layout, in order:
//!
//! ```text
//! [scan sectors | roi dx, dy, z/max_range | semantic patches
//!  | bbox cx, cy, w, h, area, present | altitude]
//! ```
//!
//! All entries are normalized: scan in [0, 1], roi offsets in [-1, 1],
//! similarity in [-1, 1], box geometry in [0, 1], altitude as a fraction
//! of the ceiling height.

use crate::geometry::CameraIntrinsics;
use crate::sim::Detection;

use super::roi::RoiFeature;

/// Normalized detection box summary. Zeroed when nothing is detected.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BBoxFeature {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub area_ratio: f64,
    pub present: bool,
}

/// Summarizes a detection relative to the image size.
pub fn bbox_feature(det: &Detection, k: &CameraIntrinsics) -> BBoxFeature {
    let Some(b) = det.bbox.filter(|_| det.present) else {
        return BBoxFeature::default();
    };
    let (iw, ih) = (k.width as f64, k.height as f64);
    let w = (b[2] - b[0]) / iw;
    let h = (b[3] - b[1]) / ih;
    BBoxFeature {
        cx: (b[0] + b[2]) / 2.0 / iw,
        cy: (b[1] + b[3]) / 2.0 / ih,
        w,
        h,
        area_ratio: w * h,
        present: true,
    }
}

/// Number of bundle entries for a given scan and patch count.
pub fn bundle_dim(scan_sectors: usize, semantic_patches: usize) -> usize {
    scan_sectors + 3 + semantic_patches + 6 + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    data: Vec<f64>,
    scan_len: usize,
    semantic_len: usize,
}

impl FeatureBundle {
    /// Assembles the flat vector. `roi.z_mean` is normalized by
    /// `max_range` on the way in; `altitude` must arrive pre-normalized.
    pub fn assemble(
        scan: &[f64],
        roi: &RoiFeature,
        semantic: &[f64],
        bbox: &BBoxFeature,
        altitude: f64,
        max_range: f64,
    ) -> Self {
        let mut data = Vec::with_capacity(bundle_dim(scan.len(), semantic.len()));
        data.extend_from_slice(scan);
        data.push(roi.dx);
        data.push(roi.dy);
        data.push(if roi.valid { roi.z_mean / max_range } else { 0.0 });
        data.extend_from_slice(semantic);
        data.push(bbox.cx);
        data.push(bbox.cy);
        data.push(bbox.w);
        data.push(bbox.h);
        data.push(bbox.area_ratio);
        data.push(if bbox.present { 1.0 } else { 0.0 });
        data.push(altitude);
        FeatureBundle { data, scan_len: scan.len(), semantic_len: semantic.len() }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scan(&self) -> &[f64] {
        &self.data[..self.scan_len]
    }

    /// Smallest normalized range in the scan; 1.0 with no sectors.
    pub fn rho_min(&self) -> f64 {
        self.scan().iter().copied().fold(1.0, f64::min)
    }

    /// Index of the smallest scan sector, ties to the leftmost.
    pub fn rho_min_index(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.scan().iter().enumerate() {
            if v < self.scan()[best] {
                best = i;
            }
        }
        best
    }

    pub fn roi_dx(&self) -> f64 {
        self.data[self.scan_len]
    }

    pub fn roi_dy(&self) -> f64 {
        self.data[self.scan_len + 1]
    }

    /// Frontier mean depth as a fraction of max range; 0 when invalid.
    pub fn roi_z(&self) -> f64 {
        self.data[self.scan_len + 2]
    }

    /// A valid frontier always has positive mean depth, so the z slot
    /// doubles as the validity flag.
    pub fn roi_valid(&self) -> bool {
        self.roi_z() > 0.0
    }

    pub fn semantic(&self) -> &[f64] {
        &self.data[self.scan_len + 3..self.scan_len + 3 + self.semantic_len]
    }

    /// The six bbox slots: cx, cy, w, h, area, present.
    pub fn bbox(&self) -> &[f64] {
        let start = self.scan_len + 3 + self.semantic_len;
        &self.data[start..start + 6]
    }

    pub fn bbox_cx(&self) -> f64 {
        self.bbox()[0]
    }

    pub fn bbox_cy(&self) -> f64 {
        self.bbox()[1]
    }

    pub fn bbox_area(&self) -> f64 {
        self.bbox()[4]
    }

    pub fn present(&self) -> bool {
        self.bbox()[5] > 0.5
    }

    pub fn altitude(&self) -> f64 {
        self.data[self.data.len() - 1]
    }
}

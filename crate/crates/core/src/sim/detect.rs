//! Oracle object detector with optional miss and box-jitter noise.
//!
//! Ground truth comes from the rendered class frame, so occlusion is
//! handled for free: a pixel only counts toward an instance's visible
//! fraction if that class is what the camera actually sees there. The
//! candidate box is the projection of the instance's bounding volume,
//! clipped to the image.
//!
//! Noise draws are taken from the caller's stream only when the matching
//! knob is nonzero, so a noise-free detector consumes no randomness and
//! runs are byte-identical with or without the detector config present.

use rand::Rng;

use crate::frame::ClassFrame;
use crate::geometry::{CameraIntrinsics, Extrinsics, Pose};

use super::scene::{Aabb, VoxelScene};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorConfig {
    /// Probability of dropping a true detection outright.
    pub miss_prob: f64,
    /// Uniform box-corner jitter amplitude in pixels.
    pub jitter_px: f64,
    /// Minimum visible pixel fraction for a detection to fire.
    pub min_visible_frac: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { miss_prob: 0.0, jitter_px: 0.0, min_visible_frac: 0.05 }
    }
}

/// One detection query result. `bbox` is `[umin, vmin, umax, vmax]` in
/// pixel coordinates, clipped to the image; present only when `present`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Detection {
    pub present: bool,
    pub class: String,
    pub bbox: Option<[f64; 4]>,
}

impl Detection {
    pub fn absent(class: &str) -> Detection {
        Detection { present: false, class: class.to_string(), bbox: None }
    }
}

/// Projects a world-frame box to its pixel-space extent. Corners at or
/// behind the camera plane (forward component <= 1e-9) are skipped; if
/// every corner is behind, there is no box. The extent is unclipped.
pub fn project_aabb(aabb: &Aabb, pose: &Pose, k: &CameraIntrinsics) -> Option<[f64; 4]> {
    let ext = Extrinsics::camera_to_body();
    let mut umin = f64::INFINITY;
    let mut vmin = f64::INFINITY;
    let mut umax = f64::NEG_INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    let mut any = false;
    for corner in aabb.corners() {
        let cam = ext.apply_inverse(&pose.world_to_body(&corner));
        if cam.z <= 1e-9 {
            continue;
        }
        let (u, v) = k.project(&cam);
        umin = umin.min(u);
        vmin = vmin.min(v);
        umax = umax.max(u);
        vmax = vmax.max(v);
        any = true;
    }
    any.then_some([umin, vmin, umax, vmax])
}

/// Fraction of integer pixel positions inside the box (already clipped)
/// that show `id` in the class frame. An empty sample grid is fraction 0.
fn visible_fraction(frame: &ClassFrame, boxpx: [f64; 4], id: u16) -> f64 {
    let [umin, vmin, umax, vmax] = boxpx;
    let u0 = umin.ceil().max(0.0) as i64;
    let v0 = vmin.ceil().max(0.0) as i64;
    let u1 = (umax.floor() as i64).min(frame.width() as i64 - 1);
    let v1 = (vmax.floor() as i64).min(frame.height() as i64 - 1);
    if u0 > u1 || v0 > v1 {
        return 0.0;
    }
    let total = ((u1 - u0 + 1) * (v1 - v0 + 1)) as f64;
    let mut hit = 0u64;
    for v in v0..=v1 {
        for u in u0..=u1 {
            if frame.at(u as usize, v as usize) == id {
                hit += 1;
            }
        }
    }
    hit as f64 / total
}

fn clip_box(b: [f64; 4], k: &CameraIntrinsics) -> Option<[f64; 4]> {
    let umin = b[0].max(0.0);
    let vmin = b[1].max(0.0);
    let umax = b[2].min(k.width as f64);
    let vmax = b[3].min(k.height as f64);
    (umin < umax && vmin < vmax).then_some([umin, vmin, umax, vmax])
}

/// Queries the detector for one class against an already rendered class
/// frame. The best instance is the one with the highest visible fraction,
/// ties going to the lower instance id; it is reported present when that
/// fraction reaches `min_visible_frac`.
pub fn detect<R: Rng>(
    scene: &VoxelScene,
    class: &str,
    pose: &Pose,
    k: &CameraIntrinsics,
    class_frame: &ClassFrame,
    cfg: &DetectorConfig,
    rng: &mut R,
) -> Detection {
    let Some(id) = scene.class_id(class) else {
        return Detection::absent(class);
    };
    let mut best: Option<(f64, [f64; 4])> = None;
    for obj in scene.instances_of(class) {
        let Some(raw) = project_aabb(&obj.aabb, pose, k) else { continue };
        let Some(clipped) = clip_box(raw, k) else { continue };
        let frac = visible_fraction(class_frame, clipped, id);
        // Instances iterate in ascending id order, so a strictly greater
        // fraction is required to displace the incumbent.
        if best.map_or(true, |(f, _)| frac > f) {
            best = Some((frac, clipped));
        }
    }
    let Some((frac, mut boxpx)) = best else {
        return Detection::absent(class);
    };
    if frac < cfg.min_visible_frac {
        return Detection::absent(class);
    }
    if cfg.miss_prob > 0.0 && rng.gen::<f64>() < cfg.miss_prob {
        return Detection::absent(class);
    }
    if cfg.jitter_px > 0.0 {
        for c in boxpx.iter_mut() {
            *c += rng.gen_range(-cfg.jitter_px..cfg.jitter_px);
        }
        match clip_box(boxpx, k) {
            Some(b) => boxpx = b,
            None => return Detection::absent(class),
        }
    }
    Detection { present: true, class: class.to_string(), bbox: Some(boxpx) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::render::render;
    use super::super::scene::VoxelScene;
    use crate::rng::rng_from;
    use nalgebra::Vector3;

    fn nav_cam() -> CameraIntrinsics {
        CameraIntrinsics::default_nav()
    }

    fn block_scene() -> VoxelScene {
        let mut s = VoxelScene::new(0.15, [40, 40, 12], 0).unwrap();
        s.declare_class("crate", None);
        s.add_object("crate", [20, 17, 1], [23, 22, 5], true).unwrap();
        s
    }

    #[test]
    fn facing_block_is_detected_with_centered_box() {
        let s = block_scene();
        let k = nav_cam();
        let pose = Pose::new(Vector3::new(1.2, 19.5 * 0.15, 3.0 * 0.15), 0.0);
        let (_, cf) = render(&s, &pose, &k);
        let mut rng = rng_from(1);
        let d = detect(&s, "crate", &pose, &k, &cf, &DetectorConfig::default(), &mut rng);
        assert!(d.present);
        let b = d.bbox.unwrap();
        assert!(b[0] < 40.0 && b[2] > 40.0, "box straddles image center: {b:?}");
        assert!(b[0] >= 0.0 && b[2] <= 80.0 && b[1] >= 0.0 && b[3] <= 60.0);
    }

    #[test]
    fn occluded_block_is_absent_despite_projecting() {
        let mut s = block_scene();
        // Full-height wall slab between camera and block.
        s.fill_structure([12, 1, 1], [13, 39, 11]);
        let k = nav_cam();
        let pose = Pose::new(Vector3::new(1.2, 19.5 * 0.15, 3.0 * 0.15), 0.0);
        let (_, cf) = render(&s, &pose, &k);
        let obj = &s.objects()[0];
        assert!(project_aabb(&obj.aabb, &pose, &k).is_some());
        let mut rng = rng_from(1);
        let d = detect(&s, "crate", &pose, &k, &cf, &DetectorConfig::default(), &mut rng);
        assert!(!d.present);
        assert!(d.bbox.is_none());
    }

    #[test]
    fn behind_camera_has_no_projection() {
        let s = block_scene();
        let k = nav_cam();
        let pose = Pose::new(
            Vector3::new(1.2, 19.5 * 0.15, 3.0 * 0.15),
            std::f64::consts::PI,
        );
        let obj = &s.objects()[0];
        assert!(project_aabb(&obj.aabb, &pose, &k).is_none());
        let (_, cf) = render(&s, &pose, &k);
        let mut rng = rng_from(1);
        let d = detect(&s, "crate", &pose, &k, &cf, &DetectorConfig::default(), &mut rng);
        assert!(!d.present);
    }

    #[test]
    fn visible_fraction_threshold_is_inclusive() {
        // Hand-built class frame against a full-image box: the sample grid
        // is all 80 * 60 = 4800 integer pixels, so 240 hits is exactly the
        // 0.05 default threshold.
        let mut s = VoxelScene::new(0.15, [40, 40, 12], 0).unwrap();
        s.declare_class("crate", None);
        // A big slab right in front of the camera projects past the frame
        // on every side, clipping to the full image.
        s.add_object("crate", [14, 1, 1], [25, 38, 11], true).unwrap();
        let id = s.class_id("crate").unwrap();
        let k = nav_cam();
        let pose = Pose::new(Vector3::new(1.5, 19.5 * 0.15, 0.9), 0.0);
        let raw = project_aabb(&s.objects()[0].aabb, &pose, &k).unwrap();
        assert!(raw[0] < 0.0 && raw[2] > 80.0 && raw[1] < 0.0 && raw[3] > 60.0);

        let make_frame = |hits: usize| {
            let mut f = ClassFrame::new(80, 60);
            for i in 0..hits {
                f.set(i % 80, i / 80, id);
            }
            f
        };
        let cfg = DetectorConfig::default();
        let mut rng = rng_from(2);
        let d = detect(&s, "crate", &pose, &k, &make_frame(240), &cfg, &mut rng);
        assert!(d.present, "fraction exactly at threshold fires");
        let d = detect(&s, "crate", &pose, &k, &make_frame(239), &cfg, &mut rng);
        assert!(!d.present, "one pixel short stays absent");
    }

    #[test]
    fn tie_on_fraction_keeps_lower_instance_id() {
        let mut s = VoxelScene::new(0.15, [40, 40, 12], 0).unwrap();
        s.declare_class("crate", None);
        // Two identical blocks mirrored about the camera axis.
        s.add_object("crate", [20, 12, 1], [22, 14, 3], true).unwrap();
        s.add_object("crate", [20, 25, 1], [22, 27, 3], true).unwrap();
        let k = nav_cam();
        let pose = Pose::new(Vector3::new(0.9, (12.0 + 27.0) / 2.0 * 0.15, 0.3), 0.0);
        let (_, cf) = render(&s, &pose, &k);
        let mut rng = rng_from(3);
        let d = detect(&s, "crate", &pose, &k, &cf, &DetectorConfig::default(), &mut rng);
        assert!(d.present);
        let b0 = clip_box(project_aabb(&s.objects()[0].aabb, &pose, &k).unwrap(), &k).unwrap();
        let got = d.bbox.unwrap();
        for i in 0..4 {
            assert!((got[i] - b0[i]).abs() < 1e-12, "picked instance 0's box");
        }
    }

    #[test]
    fn certain_miss_suppresses_detection() {
        let s = block_scene();
        let k = nav_cam();
        let pose = Pose::new(Vector3::new(1.2, 19.5 * 0.15, 3.0 * 0.15), 0.0);
        let (_, cf) = render(&s, &pose, &k);
        let cfg = DetectorConfig { miss_prob: 1.0, ..DetectorConfig::default() };
        let mut rng = rng_from(4);
        let d = detect(&s, "crate", &pose, &k, &cf, &cfg, &mut rng);
        assert!(!d.present);
    }

    #[test]
    fn noise_free_detector_consumes_no_randomness() {
        let s = block_scene();
        let k = nav_cam();
        let pose = Pose::new(Vector3::new(1.2, 19.5 * 0.15, 3.0 * 0.15), 0.0);
        let (_, cf) = render(&s, &pose, &k);
        let mut rng = rng_from(7);
        let _ = detect(&s, "crate", &pose, &k, &cf, &DetectorConfig::default(), &mut rng);
        let after: u64 = rand::Rng::gen(&mut rng);
        let fresh: u64 = rand::Rng::gen(&mut rng_from(7));
        assert_eq!(after, fresh);
    }

    #[test]
    fn jitter_is_reproducible_and_clipped() {
        let s = block_scene();
        let k = nav_cam();
        let pose = Pose::new(Vector3::new(1.2, 19.5 * 0.15, 3.0 * 0.15), 0.0);
        let (_, cf) = render(&s, &pose, &k);
        let cfg = DetectorConfig { jitter_px: 3.0, ..DetectorConfig::default() };
        let run = || {
            let mut rng = rng_from(9);
            detect(&s, "crate", &pose, &k, &cf, &cfg, &mut rng)
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        let jb = a.bbox.unwrap();
        let mut rng = rng_from(10);
        let clean = detect(&s, "crate", &pose, &k, &cf, &DetectorConfig::default(), &mut rng)
            .bbox
            .unwrap();
        assert!(jb.iter().zip(clean.iter()).any(|(x, y)| (x - y).abs() > 1e-9));
        assert!(jb[0] >= 0.0 && jb[2] <= 80.0 && jb[1] >= 0.0 && jb[3] <= 60.0);
    }
}

//! Aggregate metrics over a batch of episodes.
//!
//! Success rate and the frontier coverage ratio average per episode;
//! path efficiency weights each success by how close the walked path came
//! to the shortest feasible one; the collision rate pools collisions over
//! all acted steps so short episodes cannot dominate it.

use std::collections::BTreeMap;

use crate::eval::episode::{EpisodeRecord, EpisodeStatus};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::rewards::{success_check, SUCCESS_DISTANCE};
use crate::rng::rng_from;
use crate::sim::{
    detect, ground_truth_distance, raycast, render, Action, DetectorConfig, VoxelScene,
};

/// Spelled out next to every reported collision rate so the number is
/// not mistaken for a per-episode average.
pub const CR_DEFINITION: &str =
    "collision rate: colliding steps as a share of all acted steps, pooled across episodes";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricSet {
    pub episodes: usize,
    /// Percent of episodes that ended in success.
    pub sr: f64,
    /// Path-efficiency-weighted success, percent.
    pub spl: f64,
    /// Pooled colliding-step share, percent.
    pub cr: f64,
    /// Mean frontier coverage ratio, percent.
    pub fcr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub overall: MetricSet,
    pub per_class: BTreeMap<String, MetricSet>,
}

/// Per-episode efficiency term in [0, 1]. Failures contribute zero, an
/// unreachable or unknown optimum contributes zero even on success, and
/// starting inside the success region with no movement is a perfect 1.
fn spl_term(rec: &EpisodeRecord) -> f64 {
    if rec.status != EpisodeStatus::Success {
        return 0.0;
    }
    let l = rec.optimal_length;
    let p = rec.path_length;
    if l == 0.0 && p == 0.0 {
        return 1.0;
    }
    if !l.is_finite() {
        return 0.0;
    }
    l / p.max(l)
}

fn metric_set(records: &[&EpisodeRecord]) -> MetricSet {
    let n = records.len();
    if n == 0 {
        return MetricSet::default();
    }
    let successes = records.iter().filter(|r| r.success()).count();
    let spl_sum: f64 = records.iter().map(|r| spl_term(r)).sum();
    let steps: usize = records.iter().map(|r| r.steps.len()).sum();
    let collisions: usize = records.iter().map(|r| r.collisions()).sum();
    let fcr_sum: f64 = records.iter().map(|r| r.fcr).sum();
    MetricSet {
        episodes: n,
        sr: 100.0 * successes as f64 / n as f64,
        spl: 100.0 * spl_sum / n as f64,
        cr: if steps == 0 { 0.0 } else { 100.0 * collisions as f64 / steps as f64 },
        fcr: fcr_sum / n as f64,
    }
}

pub fn compute_metrics(records: &[EpisodeRecord]) -> MetricsReport {
    let all: Vec<&EpisodeRecord> = records.iter().collect();
    let overall = metric_set(&all);
    let mut by_class: BTreeMap<String, Vec<&EpisodeRecord>> = BTreeMap::new();
    for r in records {
        by_class.entry(r.target.clone()).or_default().push(r);
    }
    let per_class = by_class.into_iter().map(|(c, rs)| (c, metric_set(&rs))).collect();
    MetricsReport { overall, per_class }
}

impl MetricsReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let row = |s: &MetricSet, name: &str| {
            format!(
                "{name:<16} n={:<4} SR {:6.2}%  SPL {:6.2}%  CR {:5.2}%  FCR {:6.2}%\n",
                s.episodes, s.sr, s.spl, s.cr, s.fcr
            )
        };
        out.push_str(&row(&self.overall, "overall"));
        for (class, s) in &self.per_class {
            out.push_str(&row(s, class));
        }
        out.push_str(CR_DEFINITION);
        out.push('\n');
        out
    }

    /// One row per class plus an `overall` row; stable column order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,episodes,sr,spl,cr,fcr\n");
        let row = |s: &MetricSet, name: &str| {
            format!("{name},{},{},{},{},{}\n", s.episodes, s.sr, s.spl, s.cr, s.fcr)
        };
        out.push_str(&row(&self.overall, "overall"));
        for (class, s) in &self.per_class {
            out.push_str(&row(s, class));
        }
        out
    }
}

/// Free cells from which announcing `Done` would be judged a success:
/// strictly inside the success distance of the class, with unbroken line
/// of sight to some instance's center, confirmed by actually rendering
/// from the cell while facing that instance and running the noise-free
/// stop check. Detector noise fields are ignored; the visibility
/// threshold is honored.
pub fn success_region(
    scene: &VoxelScene,
    target: &str,
    k: &CameraIntrinsics,
    detector: &DetectorConfig,
) -> Vec<[usize; 3]> {
    let det = DetectorConfig { miss_prob: 0.0, jitter_px: 0.0, ..*detector };
    let mut rng = rng_from(0);
    let instances: Vec<_> = scene.instances_of(target).collect();
    let mut region = Vec::new();
    if instances.is_empty() {
        return region;
    }
    let dims = scene.dims();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let cell = [x, y, z];
                if scene.occupied(cell) {
                    continue;
                }
                let center = scene.cell_center(cell);
                let dist = ground_truth_distance(scene, &center, target);
                if dist >= SUCCESS_DISTANCE {
                    continue;
                }
                let confirmed = instances.iter().any(|inst| {
                    let icenter = inst.aabb.center();
                    // A ray toward the instance center must strike that
                    // instance before anything else; its own surface is the
                    // expected first hit, any other cell means occlusion.
                    let to_center = icenter - center;
                    let reach = to_center.norm();
                    let struck = raycast(scene, &center, &(to_center / reach), reach + 1.0)
                        .and_then(|hit| scene.cell_object(hit.cell))
                        .is_some_and(|owner| owner.id == inst.id);
                    if !struck {
                        return false;
                    }
                    let to = icenter - center;
                    let pose = Pose::new(center, to.y.atan2(to.x));
                    let (_, class_frame) = render(scene, &pose, k);
                    let d = detect(scene, target, &pose, k, &class_frame, &det, &mut rng);
                    success_check(&d, Action::Done, dist, k)
                });
                if confirmed {
                    region.push(cell);
                }
            }
        }
    }
    region
}

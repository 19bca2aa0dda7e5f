//! Ray traversal over the occupancy grid.
//!
//! Amanatides-Woo stepping with one refinement: when the ray crosses a cell
//! corner or edge exactly (tied boundary parameters), all tied axes step
//! together. A corner-touching ray therefore never enters the cells it only
//! grazes, which makes the walk agree with exact segment-versus-box
//! interior tests. That agreement matters because visibility oracles in the
//! test suite are written as brute-force interval checks.

use nalgebra::Vector3;

use super::scene::VoxelScene;

/// First occupied cell along a ray, if any within `max_t` meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub cell: [usize; 3],
    /// Distance from the origin to where the ray enters the cell.
    pub t: f64,
}

/// Casts a ray from `origin` along the unit vector `dir`, returning the
/// first occupied cell entered within `max_t` meters. An origin inside an
/// occupied cell hits immediately at t = 0.
pub fn raycast(scene: &VoxelScene, origin: &Vector3<f64>, dir: &Vector3<f64>, max_t: f64) -> Option<RayHit> {
    let res = scene.resolution();
    let mut cell = [
        (origin.x / res).floor() as i64,
        (origin.y / res).floor() as i64,
        (origin.z / res).floor() as i64,
    ];
    if scene.occupied_i64(cell) {
        return Some(RayHit { cell: clamp_cell(scene, cell), t: 0.0 });
    }

    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    let mut step = [0i64; 3];
    for a in 0..3 {
        let d = dir[a];
        if d > 0.0 {
            step[a] = 1;
            t_max[a] = ((cell[a] + 1) as f64 * res - origin[a]) / d;
            t_delta[a] = res / d;
        } else if d < 0.0 {
            step[a] = -1;
            t_max[a] = (cell[a] as f64 * res - origin[a]) / d;
            t_delta[a] = res / -d;
        }
    }

    loop {
        let t = t_max[0].min(t_max[1]).min(t_max[2]);
        if !(t <= max_t) {
            return None;
        }
        // Step every axis whose boundary lies exactly at t; ties mean the
        // ray pierces an edge or corner and the diagonal cell is entered.
        for a in 0..3 {
            if t_max[a] == t {
                cell[a] += step[a];
                t_max[a] += t_delta[a];
            }
        }
        if scene.occupied_i64(cell) {
            return Some(RayHit { cell: clamp_cell(scene, cell), t });
        }
    }
}

fn clamp_cell(scene: &VoxelScene, c: [i64; 3]) -> [usize; 3] {
    let d = scene.dims();
    [
        c[0].clamp(0, d[0] as i64 - 1) as usize,
        c[1].clamp(0, d[1] as i64 - 1) as usize,
        c[2].clamp(0, d[2] as i64 - 1) as usize,
    ]
}

/// True if the segment from `from` to the center of `target` crosses no
/// occupied cell first. The target cell itself may be occupied (looking at
/// an object surface); reaching it counts as visible.
pub fn segment_visible(scene: &VoxelScene, from: &Vector3<f64>, target: [usize; 3]) -> bool {
    let center = scene.cell_center(target);
    let delta = center - from;
    let len = delta.norm();
    if len == 0.0 {
        return true;
    }
    let dir = delta / len;
    // The walk must reach the target cell before any other occupied cell.
    // A small margin over the segment length guards against the center
    // lying exactly on the last boundary crossing.
    match raycast_until(scene, from, &dir, len + scene.resolution(), target) {
        Reached::Target => true,
        Reached::Blocked | Reached::Escaped => false,
    }
}

enum Reached {
    Target,
    Blocked,
    Escaped,
}

fn raycast_until(
    scene: &VoxelScene,
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    max_t: f64,
    target: [usize; 3],
) -> Reached {
    let res = scene.resolution();
    let tgt = [target[0] as i64, target[1] as i64, target[2] as i64];
    let mut cell = [
        (origin.x / res).floor() as i64,
        (origin.y / res).floor() as i64,
        (origin.z / res).floor() as i64,
    ];
    if cell == tgt {
        return Reached::Target;
    }
    if scene.occupied_i64(cell) {
        return Reached::Blocked;
    }
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    let mut step = [0i64; 3];
    for a in 0..3 {
        let d = dir[a];
        if d > 0.0 {
            step[a] = 1;
            t_max[a] = ((cell[a] + 1) as f64 * res - origin[a]) / d;
            t_delta[a] = res / d;
        } else if d < 0.0 {
            step[a] = -1;
            t_max[a] = (cell[a] as f64 * res - origin[a]) / d;
            t_delta[a] = res / -d;
        }
    }
    loop {
        let t = t_max[0].min(t_max[1]).min(t_max[2]);
        if !(t <= max_t) {
            return Reached::Escaped;
        }
        for a in 0..3 {
            if t_max[a] == t {
                cell[a] += step[a];
                t_max[a] += t_delta[a];
            }
        }
        if cell == tgt {
            return Reached::Target;
        }
        if scene.occupied_i64(cell) {
            return Reached::Blocked;
        }
    }
}

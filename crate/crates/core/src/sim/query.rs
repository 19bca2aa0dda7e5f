//! Grid queries shared by generation, evaluation, and metrics: BFS
//! reachability, geodesic distances, clearance, and distance to objects.
//!
//! All BFS routines are 6-connected over free cells and expand neighbors
//! in the fixed order +x, -x, +y, -y, +z, -z so results are identical
//! across runs and platforms.

use std::collections::VecDeque;

use nalgebra::Vector3;

use crate::geometry::Pose;

use super::scene::VoxelScene;

/// Sentinel for cells a BFS never reached.
pub const UNREACHED: u32 = u32::MAX;

fn neighbors6(c: [usize; 3], dims: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
    const OFFS: [[i64; 3]; 6] =
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];
    OFFS.into_iter().filter_map(move |o| {
        let n = [c[0] as i64 + o[0], c[1] as i64 + o[1], c[2] as i64 + o[2]];
        (n[0] >= 0
            && n[1] >= 0
            && n[2] >= 0
            && (n[0] as usize) < dims[0]
            && (n[1] as usize) < dims[1]
            && (n[2] as usize) < dims[2])
            .then(|| [n[0] as usize, n[1] as usize, n[2] as usize])
    })
}

/// Edge counts from `start` to every free cell, [`UNREACHED`] elsewhere.
/// A start on an occupied cell reaches nothing.
pub fn geodesic_distances(scene: &VoxelScene, start: [usize; 3]) -> Vec<u32> {
    let dims = scene.dims();
    let mut dist = vec![UNREACHED; dims[0] * dims[1] * dims[2]];
    if scene.occupied(start) {
        return dist;
    }
    dist[scene.idx(start)] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        let d = dist[scene.idx(c)];
        for n in neighbors6(c, dims) {
            if !scene.occupied(n) && dist[scene.idx(n)] == UNREACHED {
                dist[scene.idx(n)] = d + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

/// Free cells reachable from `start`, as a flat mask in grid index order.
pub fn reachable_mask(scene: &VoxelScene, start: [usize; 3]) -> Vec<bool> {
    geodesic_distances(scene, start).iter().map(|&d| d != UNREACHED).collect()
}

/// Shortest grid path length in meters from `start` to the nearest of
/// `goals` (edge count times resolution). `None` when no goal is
/// reachable or the lists are empty.
pub fn geodesic_length(scene: &VoxelScene, start: [usize; 3], goals: &[[usize; 3]]) -> Option<f64> {
    let dist = geodesic_distances(scene, start);
    let best = goals
        .iter()
        .map(|&g| dist[scene.idx(g)])
        .filter(|&d| d != UNREACHED)
        .min()?;
    Some(best as f64 * scene.resolution())
}

/// Euclidean distance from a point to the closest instance of `class`,
/// measured to the instance bounding box (zero inside). Infinity when the
/// scene holds no such instance.
pub fn ground_truth_distance(scene: &VoxelScene, point: &Vector3<f64>, class: &str) -> f64 {
    scene
        .instances_of(class)
        .map(|o| o.aabb.distance(point))
        .fold(f64::INFINITY, f64::min)
}

/// The free cell with the largest 6-connected hop distance to any
/// occupied cell, found by multi-source BFS. Ties resolve to the lowest
/// flat index, so the answer is a pure function of the occupancy grid and
/// can be recomputed from a loaded scene bit for bit.
pub fn max_clearance_cell(scene: &VoxelScene) -> [usize; 3] {
    let dims = scene.dims();
    let total = dims[0] * dims[1] * dims[2];
    let mut dist = vec![UNREACHED; total];
    let mut queue = VecDeque::new();
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                if scene.occupied([x, y, z]) {
                    dist[scene.idx([x, y, z])] = 0;
                    queue.push_back([x, y, z]);
                }
            }
        }
    }
    while let Some(c) = queue.pop_front() {
        let d = dist[scene.idx(c)];
        for n in neighbors6(c, dims) {
            if dist[scene.idx(n)] == UNREACHED {
                dist[scene.idx(n)] = d + 1;
                queue.push_back(n);
            }
        }
    }
    let mut best_cell = [0, 0, 0];
    let mut best = 0u32;
    for i in 0..total {
        // Strict comparison in flat order keeps the first maximum.
        if dist[i] != UNREACHED && dist[i] > best {
            best = dist[i];
            best_cell = scene.cell_of_index(i);
        }
    }
    best_cell
}

/// Canonical start pose: centered in the max-clearance cell, yaw zero.
pub fn default_start_pose(scene: &VoxelScene) -> Pose {
    Pose::new(scene.cell_center(max_clearance_cell(scene)), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(dims: [usize; 3]) -> VoxelScene {
        VoxelScene::new(0.15, dims, 0).unwrap()
    }

    #[test]
    fn straight_line_distance_counts_edges() {
        let s = room([20, 8, 6]);
        let d = geodesic_distances(&s, [2, 3, 2]);
        assert_eq!(d[s.idx([2, 3, 2])], 0);
        assert_eq!(d[s.idx([14, 3, 2])], 12);
        assert_eq!(d[s.idx([14, 5, 3])], 12 + 2 + 1);
        assert_eq!(d[s.idx([0, 3, 2])], UNREACHED, "walls are not entered");
    }

    #[test]
    fn wall_forces_detour_through_gap() {
        let mut s = room([21, 9, 5]);
        // Full wall at x = 10 except a one-cell gap at y = 1, z = 1.
        s.fill_structure([10, 1, 1], [11, 8, 4]);
        s.carve([10, 1, 1], [11, 2, 2]);
        let d = geodesic_distances(&s, [2, 4, 2]);
        // Direct line would be 14 edges; the detour runs to the gap and back.
        let direct = 14;
        let through = d[s.idx([16, 4, 2])];
        assert!(through != UNREACHED);
        let detour = (4 - 1) + (2 - 1) + 14 + (4 - 1) + (2 - 1);
        assert_eq!(through, detour as u32);
        assert!(through > direct);
    }

    #[test]
    fn sealed_pocket_is_unreachable() {
        let mut s = room([20, 20, 8]);
        s.fill_structure([8, 8, 1], [14, 14, 7]);
        s.carve([10, 10, 2], [12, 12, 5]);
        let d = geodesic_distances(&s, [3, 3, 3]);
        assert_eq!(d[s.idx([11, 11, 3])], UNREACHED);
        let mask = reachable_mask(&s, [3, 3, 3]);
        assert!(!mask[s.idx([11, 11, 3])]);
        assert!(mask[s.idx([16, 16, 3])]);
    }

    #[test]
    fn geodesic_length_scales_by_resolution() {
        let s = room([20, 8, 6]);
        let l = geodesic_length(&s, [2, 3, 2], &[[14, 3, 2], [2, 6, 2]]);
        // The nearer goal is 3 edges away.
        assert_eq!(l, Some(3.0 * 0.15));
        assert_eq!(geodesic_length(&s, [2, 3, 2], &[[0, 0, 0]]), None);
        assert_eq!(geodesic_length(&s, [2, 3, 2], &[]), None);
    }

    #[test]
    fn distance_to_class_clamps_to_box() {
        let mut s = room([30, 30, 10]);
        s.declare_class("crate", None);
        s.add_object("crate", [10, 10, 1], [12, 12, 3], true).unwrap();
        // Box spans [1.5, 1.8] on x and y, [0.15, 0.45] on z.
        let p = Vector3::new(1.5 - 0.3, 1.65, 0.3);
        assert!((ground_truth_distance(&s, &p, "crate") - 0.3).abs() < 1e-12);
        let inside = Vector3::new(1.65, 1.65, 0.3);
        assert_eq!(ground_truth_distance(&s, &inside, "crate"), 0.0);
        let diag = Vector3::new(1.8 + 0.3, 1.8 + 0.4, 0.45);
        assert!((ground_truth_distance(&s, &diag, "crate") - 0.5).abs() < 1e-12);
        assert_eq!(ground_truth_distance(&s, &p, "ghost"), f64::INFINITY);
    }

    #[test]
    fn nearest_instance_wins() {
        let mut s = room([40, 20, 8]);
        s.declare_class("crate", None);
        s.add_object("crate", [5, 5, 1], [7, 7, 3], true).unwrap();
        s.add_object("crate", [30, 5, 1], [32, 7, 3], true).unwrap();
        let p = Vector3::new(28.0 * 0.15, 6.0 * 0.15, 0.3);
        let want = (30.0 - 28.0) * 0.15;
        assert!((ground_truth_distance(&s, &p, "crate") - want).abs() < 1e-12);
    }

    #[test]
    fn clearance_picks_lowest_flat_index_maximum() {
        let s = room([12, 12, 12]);
        let got = max_clearance_cell(&s);
        // Oracle: recompute hop distance to the nearest occupied cell per
        // free cell and take the first maximum in flat index order.
        let dims = s.dims();
        let mut best_cell = None;
        let mut best = 0i64;
        for i in 0..dims[0] * dims[1] * dims[2] {
            let c = s.cell_of_index(i);
            if s.occupied(c) {
                continue;
            }
            let mut near = i64::MAX;
            for z in 0..dims[2] {
                for y in 0..dims[1] {
                    for x in 0..dims[0] {
                        if s.occupied([x, y, z]) {
                            let d = (x as i64 - c[0] as i64).abs()
                                + (y as i64 - c[1] as i64).abs()
                                + (z as i64 - c[2] as i64).abs();
                            near = near.min(d);
                        }
                    }
                }
            }
            if near > best {
                best = near;
                best_cell = Some(c);
            }
        }
        assert_eq!(got, best_cell.unwrap());
    }

    #[test]
    fn start_pose_sits_at_clearance_cell_center() {
        let mut s = room([20, 14, 8]);
        s.fill_structure([2, 2, 1], [6, 12, 7]);
        let pose = default_start_pose(&s);
        assert_eq!(pose.yaw, 0.0);
        let cell = max_clearance_cell(&s);
        assert_eq!(pose.position, s.cell_center(cell));
        assert!(!s.occupied(cell));
    }
}

//! Procedural indoor scenes: recursive room partition, doorways, and a
//! catalog of box-shaped objects placed on the floor, on furniture, or on
//! walls.
//!
//! Generation is a pure function of the config. Every random draw comes
//! from one ChaCha stream per attempt, seeded by the config seed and the
//! attempt index, so a given config reproduces the same scene bit for bit.
//! An attempt that ends in a malformed scene (no target candidate, poor
//! reachability) is discarded and the next attempt seed is tried; only a
//! config that cannot ever partition into the requested room count is an
//! error on the spot.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::{child_seed_indexed, rng_from};

use super::agent::{sphere_intersects, AGENT_RADIUS};
use super::query::{max_clearance_cell, reachable_mask};
use super::scene::VoxelScene;

/// Rooms never shrink below this many cells per side.
const MIN_ROOM_SIDE: usize = 7;
/// Door opening width in cells. Wide enough that the scripted explorer's
/// avoidance threshold (0.3 m) plus the agent radius passes through.
const DOOR_WIDTH: usize = 5;
/// Floor cells this close to a door (Chebyshev, in cells) stay clear of
/// floor-standing objects so openings are never pinched shut.
const DOOR_CLEARANCE: i64 = 2;
/// Objects keep this Chebyshev distance from the pre-object clearance
/// cell, leaving an open pocket for the start pose.
const START_CLEARANCE: i64 = 3;
/// Position draws per object before giving up on it.
const PLACEMENT_TRIES: usize = 40;
/// Whole-scene attempts before generation is declared failed.
const GEN_ATTEMPTS: u64 = 8;

/// How an object class attaches to the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Stands on the floor.
    Floor,
    /// Sits on top of an instance of the named class, which is also its
    /// semantic parent.
    OnFurniture(&'static str),
    /// Hangs flush against a wall in the upper half of the room.
    WallMounted,
}

/// A generatable object class. `size` is the cell extent: for wall-mounted
/// classes it reads along-wall width, depth off the wall, height; otherwise
/// x extent, y extent, height. Horizontal extents may swap at placement.
#[derive(Debug, Clone, Copy)]
pub struct ClassSpec {
    pub name: &'static str,
    pub size: [usize; 3],
    pub placement: Placement,
    /// Whether episodes may select this class as the navigation target.
    /// Small on-furniture items are excluded: their projected area never
    /// reaches the scripted stop rule's threshold.
    pub target_candidate: bool,
}

pub const CATALOG: [ClassSpec; 10] = [
    ClassSpec { name: "table", size: [6, 4, 3], placement: Placement::Floor, target_candidate: true },
    ClassSpec { name: "shelf", size: [3, 2, 6], placement: Placement::Floor, target_candidate: true },
    ClassSpec { name: "cabinet", size: [4, 3, 4], placement: Placement::Floor, target_candidate: true },
    ClassSpec { name: "crate", size: [3, 3, 3], placement: Placement::Floor, target_candidate: true },
    ClassSpec { name: "plant", size: [2, 2, 4], placement: Placement::Floor, target_candidate: true },
    ClassSpec { name: "mug", size: [1, 1, 1], placement: Placement::OnFurniture("table"), target_candidate: false },
    ClassSpec { name: "lamp", size: [1, 1, 2], placement: Placement::OnFurniture("table"), target_candidate: false },
    ClassSpec { name: "book", size: [2, 1, 1], placement: Placement::OnFurniture("shelf"), target_candidate: false },
    ClassSpec { name: "picture", size: [3, 1, 2], placement: Placement::WallMounted, target_candidate: true },
    ClassSpec { name: "clock", size: [2, 1, 2], placement: Placement::WallMounted, target_candidate: true },
];

/// Catalog entry for a class name.
pub fn catalog_spec(name: &str) -> Option<&'static ClassSpec> {
    CATALOG.iter().find(|s| s.name == name)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Cell edge length in meters.
    pub resolution: f64,
    /// Grid cells per axis, boundary shell included.
    pub dims: [usize; 3],
    /// Room rectangles the interior is partitioned into.
    pub rooms: usize,
    /// Placement quota in objects per square meter of free floor.
    pub object_density: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            resolution: 0.15,
            dims: [60, 48, 14],
            rooms: 3,
            object_density: 0.15,
            seed: 0,
        }
    }
}

impl SceneConfig {
    fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::config("gen: resolution must be positive"));
        }
        let min_xy = MIN_ROOM_SIDE + 2;
        if self.dims[0] < min_xy || self.dims[1] < min_xy {
            return Err(Error::config(format!(
                "gen: dims[0] and dims[1] must be at least {min_xy} cells"
            )));
        }
        if self.dims[2] < 6 {
            return Err(Error::config("gen: dims[2] must be at least 6 cells"));
        }
        if self.rooms == 0 {
            return Err(Error::config("gen: rooms must be at least 1"));
        }
        if !(self.object_density > 0.0 && self.object_density.is_finite()) {
            return Err(Error::config("gen: object_density must be positive"));
        }
        Ok(())
    }
}

/// Axis-aligned room rectangle, half-open cell ranges.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Rect {
    fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn splittable(&self) -> bool {
        (self.x1 - self.x0).max(self.y1 - self.y0) >= 2 * MIN_ROOM_SIDE + 1
    }
}

/// A one-cell-thick full-height wall segment created by a split. `axis`
/// is the axis the wall is perpendicular to; the door slides along the
/// other one over [lo, hi).
#[derive(Debug, Clone, Copy)]
struct Wall {
    axis: usize,
    coord: usize,
    lo: usize,
    hi: usize,
}

/// Largest room count any split sequence can reach for an interior of
/// `w` by `h` cells. Values cap at `need`; the recurrence only has to
/// prove feasibility, not count exactly.
fn max_rooms(w: usize, h: usize, need: usize) -> usize {
    let mut n = vec![vec![0usize; h + 1]; w + 1];
    for a in MIN_ROOM_SIDE..=w {
        for b in MIN_ROOM_SIDE..=h {
            let mut best = 1;
            if a >= 2 * MIN_ROOM_SIDE + 1 {
                for c in MIN_ROOM_SIDE..=(a - 1 - MIN_ROOM_SIDE) {
                    best = best.max(n[c][b] + n[a - 1 - c][b]);
                    if best >= need {
                        break;
                    }
                }
            }
            if best < need && b >= 2 * MIN_ROOM_SIDE + 1 {
                for c in MIN_ROOM_SIDE..=(b - 1 - MIN_ROOM_SIDE) {
                    best = best.max(n[a][c] + n[a][b - 1 - c]);
                    if best >= need {
                        break;
                    }
                }
            }
            n[a][b] = best.min(need);
        }
    }
    if w < MIN_ROOM_SIDE || h < MIN_ROOM_SIDE {
        0
    } else {
        n[w][h]
    }
}

/// Splits the interior into exactly `rooms` rects, recording the wall each
/// split created. `Ok(None)` is an unlucky dead end worth retrying;
/// `Err` means no split sequence can ever work.
fn partition(
    dims: [usize; 3],
    rooms: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Option<(Vec<Rect>, Vec<Wall>)>> {
    let interior = Rect { x0: 1, y0: 1, x1: dims[0] - 1, y1: dims[1] - 1 };
    let mut rects = vec![interior];
    let mut walls = Vec::new();
    while rects.len() < rooms {
        let mut pick: Option<usize> = None;
        for (i, r) in rects.iter().enumerate() {
            if r.splittable() && pick.map_or(true, |p| r.area() > rects[p].area()) {
                pick = Some(i);
            }
        }
        let Some(i) = pick else {
            let cap = max_rooms(interior.x1 - interior.x0, interior.y1 - interior.y0, rooms);
            if rooms > cap {
                return Err(Error::config(format!(
                    "gen: {rooms} rooms cannot fit; this interior holds at most {cap}"
                )));
            }
            return Ok(None);
        };
        let r = rects[i];
        let (w, h) = (r.x1 - r.x0, r.y1 - r.y0);
        if w >= h {
            let c = rng.gen_range(r.x0 + MIN_ROOM_SIDE..=r.x1 - 1 - MIN_ROOM_SIDE);
            rects[i] = Rect { x1: c, ..r };
            rects.push(Rect { x0: c + 1, ..r });
            walls.push(Wall { axis: 0, coord: c, lo: r.y0, hi: r.y1 });
        } else {
            let c = rng.gen_range(r.y0 + MIN_ROOM_SIDE..=r.y1 - 1 - MIN_ROOM_SIDE);
            rects[i] = Rect { y1: c, ..r };
            rects.push(Rect { y0: c + 1, ..r });
            walls.push(Wall { axis: 1, coord: c, lo: r.x0, hi: r.x1 });
        }
    }
    Ok(Some((rects, walls)))
}

fn door_height(dims: [usize; 3]) -> usize {
    (2 * (dims[2] - 2) / 3).max(3)
}

/// Floor-plane mask of cells too close to a doorway for floor objects.
fn door_zone(dims: [usize; 3], doors: &[(usize, usize, usize, usize)]) -> Vec<bool> {
    // Each door is (axis, coord, lo, width) at floor level.
    let mut zone = vec![false; dims[0] * dims[1]];
    let mut mark = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && (x as usize) < dims[0] && (y as usize) < dims[1] {
            zone[y as usize * dims[0] + x as usize] = true;
        }
    };
    for &(axis, coord, lo, width) in doors {
        for along in lo..lo + width {
            let (cx, cy) =
                if axis == 0 { (coord as i64, along as i64) } else { (along as i64, coord as i64) };
            for dy in -DOOR_CLEARANCE..=DOOR_CLEARANCE {
                for dx in -DOOR_CLEARANCE..=DOOR_CLEARANCE {
                    mark(cx + dx, cy + dy);
                }
            }
        }
    }
    zone
}

fn cheb_xy(a: [usize; 3], x: usize, y: usize) -> i64 {
    let dx = (a[0] as i64 - x as i64).abs();
    let dy = (a[1] as i64 - y as i64).abs();
    dx.max(dy)
}

/// True when every cell in [cmin, cmax) is free.
fn region_free(scene: &VoxelScene, cmin: [usize; 3], cmax: [usize; 3]) -> bool {
    for z in cmin[2]..cmax[2] {
        for y in cmin[1]..cmax[1] {
            for x in cmin[0]..cmax[0] {
                if scene.occupied([x, y, z]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Checks the one-cell ring around each z layer of a box. `structure_ok`
/// admits plain walls in the ring (used for wall-mounted boxes, which are
/// flush against one by design) but never other objects.
fn ring_clear(
    scene: &VoxelScene,
    cmin: [usize; 3],
    cmax: [usize; 3],
    structure_ok: bool,
) -> bool {
    let dims = scene.dims();
    for z in cmin[2]..cmax[2] {
        for y in cmin[1].saturating_sub(1)..(cmax[1] + 1).min(dims[1]) {
            for x in cmin[0].saturating_sub(1)..(cmax[0] + 1).min(dims[0]) {
                let inside =
                    x >= cmin[0] && x < cmax[0] && y >= cmin[1] && y < cmax[1];
                if inside {
                    continue;
                }
                if scene.cell_object([x, y, z]).is_some() {
                    return false;
                }
                if !structure_ok && scene.occupied([x, y, z]) {
                    return false;
                }
            }
        }
    }
    true
}

fn place_floor(
    scene: &mut VoxelScene,
    spec: &ClassSpec,
    zone: &[bool],
    start: [usize; 3],
    rng: &mut ChaCha8Rng,
) {
    let dims = scene.dims();
    for _ in 0..PLACEMENT_TRIES {
        let [mut sx, mut sy, sz] = spec.size;
        if rng.gen::<bool>() {
            std::mem::swap(&mut sx, &mut sy);
        }
        // The ring check needs one free cell on every side, so the min
        // corner starts at 2 and the box ends one short of the shell.
        if dims[0] < sx + 4 || dims[1] < sy + 4 || dims[2] < sz + 2 {
            continue;
        }
        let x0 = rng.gen_range(2..=dims[0] - 2 - sx);
        let y0 = rng.gen_range(2..=dims[1] - 2 - sy);
        let cmin = [x0, y0, 1];
        let cmax = [x0 + sx, y0 + sy, 1 + sz];
        let footprint_blocked = (y0..y0 + sy).any(|y| {
            (x0..x0 + sx).any(|x| zone[y * dims[0] + x] || cheb_xy(start, x, y) <= START_CLEARANCE)
        });
        if footprint_blocked
            || !region_free(scene, cmin, cmax)
            || !ring_clear(scene, cmin, cmax, false)
        {
            continue;
        }
        scene.add_object(spec.name, cmin, cmax, spec.target_candidate).expect("checked placement");
        return;
    }
}

fn place_on_furniture(
    scene: &mut VoxelScene,
    spec: &ClassSpec,
    parent: &str,
    rng: &mut ChaCha8Rng,
) {
    let tops: Vec<([usize; 3], [usize; 3])> =
        scene.instances_of(parent).map(|o| (o.cell_min, o.cell_max)).collect();
    if tops.is_empty() {
        return;
    }
    let dims = scene.dims();
    for _ in 0..PLACEMENT_TRIES {
        let (pmin, pmax) = tops[rng.gen_range(0..tops.len())];
        let [mut sx, mut sy, sz] = spec.size;
        if rng.gen::<bool>() {
            std::mem::swap(&mut sx, &mut sy);
        }
        let z0 = pmax[2];
        if z0 + sz > dims[2] - 1 || pmax[0] - pmin[0] < sx || pmax[1] - pmin[1] < sy {
            continue;
        }
        let x0 = rng.gen_range(pmin[0]..=pmax[0] - sx);
        let y0 = rng.gen_range(pmin[1]..=pmax[1] - sy);
        let cmin = [x0, y0, z0];
        let cmax = [x0 + sx, y0 + sy, z0 + sz];
        if !region_free(scene, cmin, cmax) {
            continue;
        }
        scene.add_object(spec.name, cmin, cmax, spec.target_candidate).expect("checked placement");
        return;
    }
}

fn place_wall_mounted(
    scene: &mut VoxelScene,
    spec: &ClassSpec,
    zone: &[bool],
    start: [usize; 3],
    door_h: usize,
    rng: &mut ChaCha8Rng,
) {
    let dims = scene.dims();
    let [along, depth, sz] = spec.size;
    let z_lo = dims[2] / 2;
    if z_lo + sz > dims[2] - 1 {
        return;
    }
    for _ in 0..PLACEMENT_TRIES {
        let z0 = rng.gen_range(z_lo..=dims[2] - 1 - sz);
        // Normal directions: 0 = wall on -x side, 1 = +x, 2 = -y, 3 = +y.
        let side = rng.gen_range(0..4u8);
        let (sx, sy) = if side < 2 { (depth, along) } else { (along, depth) };
        if dims[0] < sx + 2 || dims[1] < sy + 2 {
            continue;
        }
        let x0 = rng.gen_range(1..=dims[0] - 1 - sx);
        let y0 = rng.gen_range(1..=dims[1] - 1 - sy);
        let cmin = [x0, y0, z0];
        let cmax = [x0 + sx, y0 + sy, z0 + sz];
        let backing: Vec<[usize; 3]> = {
            let mut cells = Vec::new();
            let ok = match side {
                0 => x0 >= 1,
                1 => cmax[0] <= dims[0] - 1,
                2 => y0 >= 1,
                _ => cmax[1] <= dims[1] - 1,
            };
            if ok {
                for z in z0..z0 + sz {
                    match side {
                        0 => (y0..y0 + sy).for_each(|y| cells.push([x0 - 1, y, z])),
                        1 => (y0..y0 + sy).for_each(|y| cells.push([cmax[0], y, z])),
                        2 => (x0..x0 + sx).for_each(|x| cells.push([x, y0 - 1, z])),
                        _ => (x0..x0 + sx).for_each(|x| cells.push([x, cmax[1], z])),
                    }
                }
            }
            cells
        };
        let flush = !backing.is_empty()
            && backing
                .iter()
                .all(|&c| scene.occupied(c) && scene.cell_object(c).is_none());
        if !flush {
            continue;
        }
        let over_passage = z0 < 1 + door_h
            && (y0..y0 + sy).any(|y| (x0..x0 + sx).any(|x| zone[y * dims[0] + x]));
        let near_start = (y0..y0 + sy)
            .any(|y| (x0..x0 + sx).any(|x| cheb_xy(start, x, y) <= START_CLEARANCE));
        if over_passage
            || near_start
            || !region_free(scene, cmin, cmax)
            || !ring_clear(scene, cmin, cmax, true)
        {
            continue;
        }
        scene.add_object(spec.name, cmin, cmax, spec.target_candidate).expect("checked placement");
        return;
    }
}

fn build_attempt(cfg: &SceneConfig, attempt: u64) -> Result<Option<VoxelScene>> {
    let mut rng = rng_from(child_seed_indexed(cfg.seed, "scene-attempt", attempt));
    let dims = cfg.dims;
    let mut scene = VoxelScene::new(cfg.resolution, dims, cfg.seed)?;
    for spec in &CATALOG {
        let parent = match spec.placement {
            Placement::OnFurniture(p) => Some(p),
            _ => None,
        };
        scene.declare_class(spec.name, parent);
    }

    let Some((_, walls)) = partition(dims, cfg.rooms, &mut rng)? else {
        return Ok(None);
    };
    for w in &walls {
        match w.axis {
            0 => scene.fill_structure([w.coord, w.lo, 1], [w.coord + 1, w.hi, dims[2] - 1]),
            _ => scene.fill_structure([w.lo, w.coord, 1], [w.hi, w.coord + 1, dims[2] - 1]),
        }
    }
    let door_h = door_height(dims);
    let mut doors = Vec::new();
    for w in &walls {
        let lo = rng.gen_range(w.lo..=w.hi - DOOR_WIDTH);
        match w.axis {
            0 => scene.carve([w.coord, lo, 1], [w.coord + 1, lo + DOOR_WIDTH, 1 + door_h]),
            _ => scene.carve([lo, w.coord, 1], [lo + DOOR_WIDTH, w.coord + 1, 1 + door_h]),
        }
        doors.push((w.axis, w.coord, lo, DOOR_WIDTH));
    }
    let zone = door_zone(dims, &doors);
    let start_pocket = max_clearance_cell(&scene);

    let floor_cells = (0..dims[0] * dims[1])
        .filter(|i| !scene.occupied([i % dims[0], i / dims[0], 1]))
        .count();
    let floor_m2 = floor_cells as f64 * cfg.resolution * cfg.resolution;
    let quota = (cfg.object_density * floor_m2).round() as usize;

    let floor_specs: Vec<&ClassSpec> =
        CATALOG.iter().filter(|s| s.placement == Placement::Floor).collect();
    for _ in 0..quota {
        let mut spec = &CATALOG[rng.gen_range(0..CATALOG.len())];
        if let Placement::OnFurniture(parent) = spec.placement {
            if scene.instances_of(parent).next().is_none() {
                spec = floor_specs[rng.gen_range(0..floor_specs.len())];
            }
        }
        match spec.placement {
            Placement::Floor => place_floor(&mut scene, spec, &zone, start_pocket, &mut rng),
            Placement::OnFurniture(parent) => {
                place_on_furniture(&mut scene, spec, parent, &mut rng)
            }
            Placement::WallMounted => {
                place_wall_mounted(&mut scene, spec, &zone, start_pocket, door_h, &mut rng)
            }
        }
    }

    if !scene.objects().iter().any(|o| o.target_candidate) {
        return Ok(None);
    }
    let start = max_clearance_cell(&scene);
    if scene.occupied(start) || sphere_intersects(&scene, &scene.cell_center(start), AGENT_RADIUS)
    {
        return Ok(None);
    }
    let reachable = reachable_mask(&scene, start).iter().filter(|&&r| r).count();
    if (reachable as f64) < 0.99 * scene.free_cell_count() as f64 {
        return Ok(None);
    }
    Ok(Some(scene))
}

/// Generates a scene for the config, retrying with fresh attempt seeds
/// when a build comes out malformed.
pub fn generate_scene(cfg: &SceneConfig) -> Result<VoxelScene> {
    cfg.validate()?;
    for attempt in 0..GEN_ATTEMPTS {
        if let Some(scene) = build_attempt(cfg, attempt)? {
            return Ok(scene);
        }
    }
    Err(Error::generation(format!(
        "no valid scene after {GEN_ATTEMPTS} attempts for seed {}",
        cfg.seed
    )))
}

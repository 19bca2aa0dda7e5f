//! Deterministic debug artifacts: ASCII PGM images and small CSV tables.
//!
//! Every artifact embeds the config hash in a comment line so a stray file
//! can be traced back to the run that produced it. Floats are written with
//! Rust's shortest round-trip formatting, which keeps reruns byte-equal.

use voxnav_core::eval::EpisodeRecord;
use voxnav_core::sim::VoxelScene;

/// ASCII (P2) PGM. `rows` holds `height` rows of `width` samples already
/// clamped to `maxval`.
pub fn pgm(width: usize, height: usize, maxval: u16, rows: &[Vec<u16>], config_hash: u64) -> String {
    assert_eq!(rows.len(), height);
    let mut out = format!("P2\n# config {config_hash:016x}\n{width} {height}\n{maxval}\n");
    for row in rows {
        assert_eq!(row.len(), width);
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Depth frame scaled so `max_range` maps to the full pixel value and
/// invalid pixels stay 0.
pub fn depth_pgm(depth: &voxnav_core::frame::DepthFrame, max_range: f64, config_hash: u64) -> String {
    const MAXVAL: u16 = 65535;
    let (w, h) = (depth.width(), depth.height());
    let mut rows = Vec::with_capacity(h);
    for v in 0..h {
        let mut row = Vec::with_capacity(w);
        for u in 0..w {
            let px = if depth.is_valid(u, v) {
                ((depth.at(u, v) / max_range) * f64::from(MAXVAL)).round() as u16
            } else {
                0
            };
            row.push(px);
        }
        rows.push(row);
    }
    pgm(w, h, MAXVAL, &rows, config_hash)
}

/// Binary pixel mask as a PGM, 255 inside the mask.
pub fn mask_pgm(width: usize, height: usize, mask: &[bool], config_hash: u64) -> String {
    assert_eq!(mask.len(), width * height);
    let rows: Vec<Vec<u16>> = (0..height)
        .map(|v| (0..width).map(|u| if mask[v * width + u] { 255 } else { 0 }).collect())
        .collect();
    pgm(width, height, 255, &rows, config_hash)
}

/// One labeled value per line.
pub fn scan_csv(scan: &[f64], config_hash: u64) -> String {
    let mut out = format!("# config {config_hash:016x}\nsector,range\n");
    for (i, v) in scan.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

/// Patch grid, one image row of patches per line.
pub fn semantic_csv(map: &[f64], patches_x: usize, patches_y: usize, config_hash: u64) -> String {
    assert_eq!(map.len(), patches_x * patches_y);
    let mut out = format!("# config {config_hash:016x}\n");
    for row in map.chunks(patches_x) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Training curve, one mean episode reward per line.
pub fn curve_csv(curve: &[f64], config_hash: u64) -> String {
    let mut out = format!("# config {config_hash:016x}\nepisode,mean_reward\n");
    for (i, v) in curve.iter().enumerate() {
        out.push_str(&format!("{i},{v}\n"));
    }
    out
}

const TOPDOWN_SCALE: usize = 4;
const SHADE_FREE: u16 = 255;
const SHADE_WALL: u16 = 96;
const SHADE_PATH: u16 = 0;
const SHADE_START: u16 = 180;

/// Top-down view of an episode: interior occupancy in gray, the flown
/// path in black, the start cell highlighted. Row 0 is the +y edge of
/// the scene. The floor and ceiling shells are ignored so furniture and
/// walls stand out.
pub fn trajectory_pgm(scene: &VoxelScene, record: &EpisodeRecord, config_hash: u64) -> String {
    let [nx, ny, nz] = scene.dims();
    let mut shade = vec![SHADE_FREE; nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            let blocked = (1..nz - 1).any(|z| scene.occupied([x, y, z]));
            if blocked {
                shade[y * nx + x] = SHADE_WALL;
            }
        }
    }
    let mut paint = |pos, value: u16| {
        if let Some([x, y, _]) = scene.cell_of_point(pos) {
            shade[y * nx + x] = value;
        }
    };
    paint(&record.start.position, SHADE_PATH);
    for step in &record.steps {
        paint(&step.pose.position, SHADE_PATH);
    }
    paint(&record.start.position, SHADE_START);

    let (w, h) = (nx * TOPDOWN_SCALE, ny * TOPDOWN_SCALE);
    let rows: Vec<Vec<u16>> = (0..h)
        .map(|r| {
            let y = ny - 1 - r / TOPDOWN_SCALE;
            (0..w).map(|c| shade[y * nx + c / TOPDOWN_SCALE]).collect()
        })
        .collect();
    pgm(w, h, 255, &rows, config_hash)
}

//! Subcommand implementations. Each handler loads its inputs, applies the
//! flag overrides, does the work, and writes its outputs under --out.

use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use voxnav_core::eval::{
    attach_optimal_lengths, compute_metrics, read_log, run_batch, run_episode, write_log,
    EpisodeRecord, EpisodeSpec, ReplayPolicy, SimRolloutEnv,
};
use voxnav_core::geometry::Pose;
use voxnav_core::perception::{depth_to_scan, roi_component, semantic_map, SyntheticEmbedding};
use voxnav_core::policy::train_actor_critic;
use voxnav_core::rng::{child_seed, child_seed_indexed};
use voxnav_core::sim::{
    default_start_pose, generate_scene, render, sphere_intersects, VoxelScene, AGENT_RADIUS,
};
use voxnav_core::{Error, NavConfig, Result};

use crate::artifacts;
use crate::spec::PolicySpec;
use crate::Common;

/// Config file plus flag overrides, re-validated afterwards because a flag
/// can push a field out of range just like a bad file can.
fn load_config(common: &Common) -> Result<NavConfig> {
    let mut nav = match &common.config {
        Some(path) => {
            if !path.is_file() {
                return Err(Error::config(format!(
                    "config file {} does not exist",
                    path.display()
                )));
            }
            NavConfig::from_toml_path(path)?
        }
        None => NavConfig::default(),
    };
    if let Some(seed) = common.seed {
        nav.eval.seed = seed;
        nav.trainer.seed = seed;
    }
    if let Some(max_steps) = common.max_steps {
        nav.eval.max_steps = max_steps;
    }
    if let Some(p) = common.detector_miss_prob {
        nav.detector.miss_prob = p;
    }
    if let Some(px) = common.detector_jitter {
        nav.detector.jitter_px = px;
    }
    nav.validate()?;
    Ok(nav)
}

fn load_scene(path: &Path) -> Result<VoxelScene> {
    if !path.is_file() {
        return Err(Error::config(format!("scene file {} does not exist", path.display())));
    }
    VoxelScene::from_json(&fs::read_to_string(path)?)
}

fn load_scenes(paths: &[PathBuf]) -> Result<Vec<VoxelScene>> {
    paths.iter().map(|p| load_scene(p)).collect()
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

pub fn gen_scenes(common: &Common, out: &Path, count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::config("gen-scenes: count must be positive"));
    }
    let nav = load_config(common)?;
    let root = common.seed.unwrap_or(nav.scene.seed);
    for i in 0..count {
        let mut cfg = nav.scene.clone();
        cfg.seed = child_seed_indexed(root, "scene", i as u64);
        let scene = generate_scene(&cfg)?;
        let path = write_out(out, &format!("scene-{i:03}.json"), &scene.to_json())?;
        println!(
            "wrote {} ({} objects, {} free cells)",
            path.display(),
            scene.objects().len(),
            scene.free_cell_count()
        );
    }
    Ok(())
}

pub fn run(
    common: &Common,
    target: &str,
    scene_path: &Path,
    policy: &PolicySpec,
    out: &Path,
) -> Result<()> {
    let nav = load_config(common)?;
    let scene = load_scene(scene_path)?;
    let builder = policy.prepare(&nav)?;
    let seed = nav.eval.seed;
    let start = default_start_pose(&scene);

    let mut policy = builder.build();
    let mut record = run_episode(&scene, start, target, policy.as_mut(), &nav, seed)?;
    let specs = [EpisodeSpec { scene: &scene, start, target: target.to_string(), seed }];
    attach_optimal_lengths(std::slice::from_mut(&mut record), &specs, &nav)?;

    let mut buf = Vec::new();
    write_log(&mut buf, &record, nav.hash())?;
    let path = write_out(out, "episode.jsonl", std::str::from_utf8(&buf).expect("utf-8 log"))?;
    println!("wrote {}", path.display());
    println!("{}", summary_line(&record));
    Ok(())
}

fn summary_line(rec: &EpisodeRecord) -> String {
    format!(
        "{} target={} steps={} path={:.2}m optimal={:.2}m collisions={} fcr={:.1}%",
        rec.status.label(),
        rec.target,
        rec.steps.len(),
        rec.path_length,
        rec.optimal_length,
        rec.collisions(),
        rec.fcr
    )
}

/// Target classes an episode matrix uses for a scene when none are given
/// explicitly: every class with a target-candidate instance, sorted.
fn scene_targets(scene: &VoxelScene) -> Vec<String> {
    let names: BTreeSet<&str> = scene
        .objects()
        .iter()
        .filter(|o| o.target_candidate)
        .map(|o| o.class.as_str())
        .collect();
    names.into_iter().map(str::to_string).collect()
}

pub fn eval(
    common: &Common,
    targets: &[String],
    scene_paths: &[PathBuf],
    policy: &PolicySpec,
    out: &Path,
    episodes: Option<usize>,
    workers: Option<usize>,
) -> Result<()> {
    let mut nav = load_config(common)?;
    if let Some(n) = episodes {
        nav.eval.episodes = n;
    }
    if let Some(w) = workers {
        nav.eval.workers = w;
    }
    if nav.eval.episodes == 0 {
        return Err(Error::config("eval: episodes must be positive"));
    }
    let scenes = load_scenes(scene_paths)?;
    let builder = policy.prepare(&nav)?;

    // The matrix is laid out scene-major, then target, then seed index, so
    // episode seeds and log file names are stable across reruns and do not
    // depend on the worker count.
    let mut specs = Vec::new();
    for scene in &scenes {
        let matrix_targets =
            if targets.is_empty() { scene_targets(scene) } else { targets.to_vec() };
        if matrix_targets.is_empty() {
            return Err(Error::config(
                "eval: scene has no target candidates; pass target classes explicitly",
            ));
        }
        let start = default_start_pose(scene);
        for target in matrix_targets {
            for _ in 0..nav.eval.episodes {
                let seed = child_seed_indexed(nav.eval.seed, "episode", specs.len() as u64);
                specs.push(EpisodeSpec { scene, start, target: target.clone(), seed });
            }
        }
    }

    let mut records = run_batch(&specs, &|| builder.build(), &nav, nav.eval.workers)?;
    attach_optimal_lengths(&mut records, &specs, &nav)?;
    let report = compute_metrics(&records);

    let hash = nav.hash();
    fs::create_dir_all(out.join("logs"))?;
    for (i, record) in records.iter().enumerate() {
        let mut buf = Vec::new();
        write_log(&mut buf, record, hash)?;
        fs::write(
            out.join("logs").join(format!("ep-{i:04}.jsonl")),
            std::str::from_utf8(&buf).expect("utf-8 log"),
        )?;
    }
    let text = format!("config {hash:016x}\n{}", report.to_text());
    let csv = format!("# config {hash:016x}\n{}", report.to_csv());
    write_out(out, "report.txt", &text)?;
    write_out(out, "report.csv", &csv)?;
    println!("{} episodes -> {}", records.len(), out.join("report.txt").display());
    print!("{text}");
    Ok(())
}

pub fn train(
    common: &Common,
    target: &str,
    scene_paths: &[PathBuf],
    policy: &PolicySpec,
    out: &Path,
    episodes: Option<usize>,
) -> Result<()> {
    let mut nav = load_config(common)?;
    if let Some(n) = episodes {
        nav.trainer.episodes = n;
    }
    let engine = policy.train_engine()?;
    let scenes = load_scenes(scene_paths)?;
    let mut env = SimRolloutEnv::new(&scenes, target, engine, &nav)?;

    let outcome = train_actor_critic(&mut env, engine, &nav.trainer, nav.hash())?;
    fs::create_dir_all(out)?;
    let ckpt = out.join("policy.json");
    outcome.params.save(&ckpt)?;
    write_out(out, "curve.csv", &artifacts::curve_csv(&outcome.curve, nav.hash()))?;
    let last = outcome.curve.last().copied().unwrap_or(0.0);
    println!(
        "wrote {} ({} episodes, final mean reward {last:.4})",
        ckpt.display(),
        outcome.curve.len()
    );
    Ok(())
}

fn parse_pose(text: &str) -> Result<Pose> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::config("pose must be X,Y,Z,YAW"));
    }
    let mut vals = [0.0f64; 4];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("pose component {p:?} is not a number")))?;
    }
    Ok(Pose::new(Vector3::new(vals[0], vals[1], vals[2]), vals[3]))
}

pub fn render_debug(
    common: &Common,
    target: &str,
    scene_path: &Path,
    out: &Path,
    pose_text: Option<&str>,
) -> Result<()> {
    let nav = load_config(common)?;
    let scene = load_scene(scene_path)?;
    let pose = match pose_text {
        Some(text) => parse_pose(text)?,
        None => default_start_pose(&scene),
    };
    if scene.cell_of_point(&pose.position).is_none()
        || sphere_intersects(&scene, &pose.position, AGENT_RADIUS)
    {
        return Err(Error::config(format!(
            "pose ({}, {}, {}) is outside the scene or inside structure",
            pose.position.x, pose.position.y, pose.position.z
        )));
    }
    if scene.class_id(target).is_none() {
        return Err(Error::config(format!("scene does not declare class {target:?}")));
    }

    let k = nav.intrinsics()?;
    let hash = nav.hash();
    let (depth, class_frame) = render(&scene, &pose, &k);
    let haf = scene.height_above_floor(pose.position.z);
    let scan = depth_to_scan(&depth, &k, haf, &nav.scan);
    let (_, mask) = roi_component(&depth, &k, haf, &nav.roi);
    let provider = SyntheticEmbedding::new(
        &nav.semantic,
        child_seed(scene.seed(), "embedding"),
        scene.taxonomy(),
    );
    let sem = semantic_map(&class_frame, &scene, &provider, target, &nav.semantic);

    for (name, contents) in [
        ("scan.csv", artifacts::scan_csv(&scan, hash)),
        ("roi.pgm", artifacts::mask_pgm(depth.width(), depth.height(), &mask, hash)),
        (
            "semantic.csv",
            artifacts::semantic_csv(&sem, nav.semantic.patches_x, nav.semantic.patches_y, hash),
        ),
        ("depth.pgm", artifacts::depth_pgm(&depth, k.max_range, hash)),
    ] {
        let path = write_out(out, name, &contents)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

const REPLAY_TOLERANCE: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REPLAY_TOLERANCE || (a.is_infinite() && a == b)
}

/// First discrepancy between the logged episode and its re-simulation,
/// described for the report line.
fn first_mismatch(logged: &EpisodeRecord, rerun: &EpisodeRecord) -> Option<String> {
    for (i, (a, b)) in logged.steps.iter().zip(&rerun.steps).enumerate() {
        if a.action != b.action || a.engine != b.engine {
            return Some(format!(
                "step {i}: action {:?}/{:?} vs {:?}/{:?}",
                a.engine, a.action, b.engine, b.action
            ));
        }
        let pose_ok = close(a.pose.position.x, b.pose.position.x)
            && close(a.pose.position.y, b.pose.position.y)
            && close(a.pose.position.z, b.pose.position.z)
            && close(a.pose.yaw, b.pose.yaw);
        if !pose_ok {
            return Some(format!("step {i}: pose diverged"));
        }
        if a.collided != b.collided || a.detected != b.detected {
            return Some(format!("step {i}: collision/detection flags diverged"));
        }
        let r = &a.reward;
        let s = &b.reward;
        let terms = [
            ("r_d", r.r_d, s.r_d),
            ("r_parent", r.r_parent, s.r_parent),
            ("r_bbox", r.r_bbox, s.r_bbox),
            ("r_suc", r.r_suc, s.r_suc),
            ("r_c", r.r_c, s.r_c),
            ("r_fwd", r.r_fwd, s.r_fwd),
            ("r_dir", r.r_dir, s.r_dir),
            ("r_safe", r.r_safe, s.r_safe),
            ("gamma", r.gamma, s.gamma),
            ("total", r.total, s.total),
        ];
        for (name, x, y) in terms {
            if !close(x, y) {
                return Some(format!("step {i}: {name} logged {x} vs resimulated {y}"));
            }
        }
        if !close(a.rho_min, b.rho_min) {
            return Some(format!("step {i}: clearance diverged"));
        }
    }
    if logged.steps.len() != rerun.steps.len() {
        return Some(format!(
            "length: logged {} steps vs resimulated {}",
            logged.steps.len(),
            rerun.steps.len()
        ));
    }
    if logged.status != rerun.status {
        return Some(format!("terminal: status {:?} vs {:?}", logged.status, rerun.status));
    }
    if !close(logged.path_length, rerun.path_length) || !close(logged.fcr, rerun.fcr) {
        return Some("terminal: path or coverage diverged".to_string());
    }
    None
}

pub fn replay(common: &Common, log_path: &Path, scene_path: &Path, out: &Path) -> Result<()> {
    let nav = load_config(common)?;
    if !log_path.is_file() {
        return Err(Error::config(format!("log file {} does not exist", log_path.display())));
    }
    let logged = read_log(&mut BufReader::new(fs::File::open(log_path)?))?;
    if logged.config_hash != nav.hash() {
        return Err(Error::config(format!(
            "log was produced under config {:016x}, current config is {:016x}",
            logged.config_hash,
            nav.hash()
        )));
    }
    let scene = load_scene(scene_path)?;
    let rec = &logged.record;

    let mut policy = ReplayPolicy::from_record(rec);
    let rerun = run_episode(&scene, rec.start, &rec.target, &mut policy, &nav, rec.seed)?;

    let path =
        write_out(out, "trajectory.pgm", &artifacts::trajectory_pgm(&scene, rec, nav.hash()))?;
    println!("wrote {}", path.display());

    match first_mismatch(rec, &rerun) {
        None => {
            println!("verdict: ok ({} steps, {})", rec.steps.len(), rec.status.label());
            Ok(())
        }
        Some(what) => Err(Error::format(format!("replay mismatch at {what}"))),
    }
}

//! Hot-path benchmarks: frame rendering, scan extraction, geodesic BFS,
//! and a full perception-to-reward episode step.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use voxnav_bench::bench_scene;
use voxnav_core::eval::EpisodeCore;
use voxnav_core::perception::depth_to_scan;
use voxnav_core::policy::EngineKind;
use voxnav_core::sim::{default_start_pose, geodesic_distances, render, Action};
use voxnav_core::NavConfig;

fn render_frame(c: &mut Criterion) {
    let scene = bench_scene();
    let nav = NavConfig::default();
    let k = nav.intrinsics().unwrap();
    let pose = default_start_pose(&scene);
    c.bench_function("render_frame", |b| {
        b.iter(|| render(black_box(&scene), black_box(&pose), &k))
    });
}

fn scan_from_depth(c: &mut Criterion) {
    let scene = bench_scene();
    let nav = NavConfig::default();
    let k = nav.intrinsics().unwrap();
    let pose = default_start_pose(&scene);
    let (depth, _) = render(&scene, &pose, &k);
    let haf = scene.height_above_floor(pose.position.z);
    c.bench_function("scan_from_depth", |b| {
        b.iter(|| depth_to_scan(black_box(&depth), &k, haf, &nav.scan))
    });
}

fn geodesic_bfs(c: &mut Criterion) {
    let scene = bench_scene();
    let start = scene.cell_of_point(&default_start_pose(&scene).position).unwrap();
    c.bench_function("geodesic_bfs", |b| {
        b.iter(|| geodesic_distances(black_box(&scene), black_box(start)))
    });
}

fn episode_step(c: &mut Criterion) {
    let scene = bench_scene();
    let nav = NavConfig::default();
    let start = default_start_pose(&scene);
    let mut core = EpisodeCore::new(&scene, start, "table", &nav, 0).unwrap();
    // Turning in place keeps the pose legal forever, so one long-lived
    // episode can absorb every iteration.
    c.bench_function("episode_step", |b| {
        b.iter(|| core.transition(black_box(Action::TurnLeft), EngineKind::Explore))
    });
}

criterion_group!(pipeline, render_frame, scan_from_depth, geodesic_bfs, episode_step);
criterion_main!(pipeline);

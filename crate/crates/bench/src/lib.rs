//! Shared fixtures for the pipeline benchmarks.

use voxnav_core::sim::{generate_scene, SceneConfig, VoxelScene};

/// The default procedural scene, fixed seed, as the benchmarks' workload.
pub fn bench_scene() -> VoxelScene {
    generate_scene(&SceneConfig { seed: 7, ..SceneConfig::default() }).expect("scene generates")
}

//! Voxel world: scene storage, procedural generation, agent kinematics,
//! raycast rendering, oracle detection, and distance queries.

mod agent;
mod detect;
mod gen;
mod grid;
mod query;
mod render;
mod scene;

pub use agent::{
    sphere_intersects, step, Action, AgentState, AGENT_RADIUS, ROTATION_STEP, TRANSLATION_STEP,
};
pub use detect::{detect, project_aabb, Detection, DetectorConfig};
pub use gen::{catalog_spec, generate_scene, ClassSpec, Placement, SceneConfig, CATALOG};
pub use grid::{raycast, segment_visible, RayHit};
pub use query::{
    default_start_pose, geodesic_distances, geodesic_length, ground_truth_distance,
    max_clearance_cell, reachable_mask, UNREACHED,
};
pub use render::render;
pub use scene::{Aabb, ObjectInstance, VoxelScene, SCENE_FORMAT_VERSION};

// Frames are defined at the crate root so geometry can reference them
// without depending on this module; re-export them here since the renderer
// is what produces them.
pub use crate::frame::{ClassFrame, DepthFrame};

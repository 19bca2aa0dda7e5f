//! Agent kinematics and collision handling.
//!
//! The agent is a sphere of radius [`AGENT_RADIUS`]. Translations move one
//! fixed step along the body axis they name; turns rotate yaw by a fixed
//! increment and never collide. A blocked translation leaves the position
//! unchanged and raises the collision flag, so the post-step state never
//! intersects occupancy.

use serde::{Deserialize, Serialize};

use nalgebra::Vector3;

use crate::geometry::Pose;

use super::scene::VoxelScene;

/// Forward/vertical translation step in meters.
pub const TRANSLATION_STEP: f64 = 0.15;
/// Yaw increment in radians (30 degrees).
pub const ROTATION_STEP: f64 = std::f64::consts::PI / 6.0;
/// Collision sphere radius in meters.
pub const AGENT_RADIUS: f64 = 0.12;
/// Collision samples along a translation sweep. With a 0.15 m step the
/// sample spacing is under 0.01 m, far below any representable gap between
/// the 0.12 m sphere and 0.15 m cells.
const SWEEP_SAMPLES: usize = 16;

/// The discrete action space. The order here fixes the policy-head index
/// of each action; argmax ties resolve to the lowest index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Ascend,
    Descend,
    Forward,
    TurnLeft,
    TurnRight,
    Done,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::Ascend,
        Action::Descend,
        Action::Forward,
        Action::TurnLeft,
        Action::TurnRight,
        Action::Done,
    ];

    pub fn index(self) -> usize {
        Action::ALL.iter().position(|&a| a == self).expect("action is in ALL")
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    pub fn is_translation(self) -> bool {
        matches!(self, Action::Ascend | Action::Descend | Action::Forward)
    }

    pub fn label(self) -> &'static str {
        match self {
            Action::Ascend => "ascend",
            Action::Descend => "descend",
            Action::Forward => "forward",
            Action::TurnLeft => "turn_left",
            Action::TurnRight => "turn_right",
            Action::Done => "done",
        }
    }
}

/// Kinematic state of the agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub pose: Pose,
    /// True when the previous step was a blocked translation.
    pub collided: bool,
    pub steps: u32,
}

impl AgentState {
    pub fn at(pose: Pose) -> Self {
        AgentState { pose, collided: false, steps: 0 }
    }
}

/// True if a sphere intersects any occupied cell. Cells outside the grid
/// count as occupied. Touching exactly (distance equal to the radius) is
/// not an intersection.
pub fn sphere_intersects(scene: &VoxelScene, center: &Vector3<f64>, radius: f64) -> bool {
    let res = scene.resolution();
    let lo = [
        ((center.x - radius) / res).floor() as i64,
        ((center.y - radius) / res).floor() as i64,
        ((center.z - radius) / res).floor() as i64,
    ];
    let hi = [
        ((center.x + radius) / res).floor() as i64,
        ((center.y + radius) / res).floor() as i64,
        ((center.z + radius) / res).floor() as i64,
    ];
    let r2 = radius * radius;
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                if !scene.occupied_i64([x, y, z]) {
                    continue;
                }
                let mut d2 = 0.0;
                for (a, &c) in [x, y, z].iter().enumerate() {
                    let lo_m = c as f64 * res;
                    let hi_m = (c + 1) as f64 * res;
                    let p = center[a].clamp(lo_m, hi_m);
                    d2 += (center[a] - p) * (center[a] - p);
                }
                if d2 < r2 {
                    return true;
                }
            }
        }
    }
    false
}

/// Applies one action. Translations sweep the collision sphere along the
/// motion; if any sample intersects occupancy the position is unchanged
/// and the collision flag is set. `Done` is a pure signal and never moves.
pub fn step(scene: &VoxelScene, state: &AgentState, action: Action) -> AgentState {
    let pose = state.pose;
    let steps = state.steps + 1;
    match action {
        Action::Done => AgentState { pose, collided: false, steps },
        Action::TurnLeft => AgentState {
            pose: Pose::new(pose.position, pose.yaw + ROTATION_STEP),
            collided: false,
            steps,
        },
        Action::TurnRight => AgentState {
            pose: Pose::new(pose.position, pose.yaw - ROTATION_STEP),
            collided: false,
            steps,
        },
        Action::Ascend | Action::Descend | Action::Forward => {
            let delta = match action {
                Action::Forward => pose.heading() * TRANSLATION_STEP,
                Action::Ascend => Vector3::new(0.0, 0.0, TRANSLATION_STEP),
                Action::Descend => Vector3::new(0.0, 0.0, -TRANSLATION_STEP),
                _ => unreachable!(),
            };
            for i in 1..=SWEEP_SAMPLES {
                let f = i as f64 / SWEEP_SAMPLES as f64;
                let c = pose.position + delta * f;
                if sphere_intersects(scene, &c, AGENT_RADIUS) {
                    return AgentState { pose, collided: true, steps };
                }
            }
            AgentState {
                pose: Pose::new(pose.position + delta, pose.yaw),
                collided: false,
                steps,
            }
        }
    }
}

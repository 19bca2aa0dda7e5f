//! Deterministic voxel-world simulator and navigation stack for aerial
//! object-goal search.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: camera intrinsics, frame transforms, point clouds.
//! * [`sim`]: voxel scenes, procedural generation, agent kinematics,
//!   raycast rendering, oracle detection, distance queries.
//! * [`perception`]: polar obstacle scans, depth ROI extraction, semantic
//!   similarity maps, and the fused feature bundle fed to policies.
//! * [`rewards`]: goal-reaching and exploration reward engines plus the
//!   episode success predicate.
//! * [`policy`]: scripted controllers, the dual explore/goal switcher, and
//!   a small actor-critic trainer.
//! * [`eval`]: episode runner, coverage accounting, SR/SPL/CR/FCR metrics,
//!   and batch evaluation with worker pools.
//!
//! Everything is deterministic: all randomness flows from a root seed
//! through [`rng::child_seed`], containers with observable iteration order
//! are `BTreeMap`, and batch results are independent of worker count.

pub mod config;
pub mod error;
pub mod eval;
pub mod frame;
pub mod geometry;
pub mod perception;
pub mod policy;
pub mod rewards;
pub mod rng;
pub mod sim;

pub use config::NavConfig;
pub use error::{Error, Result};

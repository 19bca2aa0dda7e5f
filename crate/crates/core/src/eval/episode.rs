//! One navigation episode, from a start pose to a terminal status.
//!
//! The loop alternates strictly: the policy acts on the current
//! observation, the simulator applies the action, and a fresh observation
//! is rendered at the new pose. Rewards are computed from the transition
//! the agent just caused, under whichever reward regime matches the
//! engine that chose the action. `Done` freezes the pose, so its reward
//! is evaluated against the observation the agent stopped on.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::NavConfig;
use crate::error::{Error, Result};
use crate::eval::coverage::CoverageState;
use crate::frame::{ClassFrame, DepthFrame};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::perception::{
    bbox_feature, depth_to_scan, roi_feature, semantic_map, BBoxFeature, FeatureBundle,
    RoiConfig, RoiFeature, ScanConfig, SemanticConfig, SyntheticEmbedding,
};
use crate::policy::{ActionDistribution, EngineKind, Policy};
use crate::rewards::{
    explore_reward, goal_reward, success_check, ExploreRewardConfig, ExploreStep,
    GoalRewardConfig, GoalStep, RewardBreakdown,
};
use crate::rng::{child_seed, rng_from};
use crate::sim::{
    self, detect, ground_truth_distance, render, sphere_intersects, Action, AgentState,
    Detection, DetectorConfig, VoxelScene, AGENT_RADIUS,
};

/// Everything sensed at one pose. The policy consumes only `bundle`;
/// the rest stays around for reward terms and diagnostics.
#[derive(Debug, Clone)]
pub struct Observation {
    pub depth: DepthFrame,
    pub class_frame: ClassFrame,
    pub roi: RoiFeature,
    pub detection: Detection,
    pub bbox: BBoxFeature,
    pub bundle: FeatureBundle,
}

/// The sensing stack bound to one episode: camera, feature configs, the
/// scene's embedding table, and the detector's noise stream.
#[derive(Debug)]
struct Sensors {
    k: CameraIntrinsics,
    scan: ScanConfig,
    roi: RoiConfig,
    semantic: SemanticConfig,
    detector: DetectorConfig,
    provider: SyntheticEmbedding,
    rng: ChaCha8Rng,
}

impl Sensors {
    fn observe(&mut self, scene: &VoxelScene, target: &str, pose: &Pose) -> Observation {
        let (depth, class_frame) = render(scene, pose, &self.k);
        let above = scene.height_above_floor(pose.position.z);
        let scan = depth_to_scan(&depth, &self.k, above, &self.scan);
        let roi = roi_feature(&depth, &self.k, above, &self.roi);
        let semantic = semantic_map(&class_frame, scene, &self.provider, target, &self.semantic);
        let detection =
            detect(scene, target, pose, &self.k, &class_frame, &self.detector, &mut self.rng);
        let bbox = bbox_feature(&detection, &self.k);
        let altitude = pose.position.z / scene.ceiling_z();
        let bundle =
            FeatureBundle::assemble(&scan, &roi, &semantic, &bbox, altitude, self.k.max_range);
        Observation { depth, class_frame, roi, detection, bbox, bundle }
    }
}

/// What one applied action produced, besides the next observation.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub breakdown: RewardBreakdown,
    pub collided: bool,
    /// Pose after the action; unchanged when the move was blocked or the
    /// action was `Done`.
    pub pose: Pose,
    /// Nearest normalized scan range of the observation the reward was
    /// computed from.
    pub rho_min: f64,
    /// `Some(success)` exactly when the action was `Done`.
    pub terminal: Option<bool>,
}

/// Simulation state for one episode against a borrowed scene. Drives the
/// sense-act-reward cycle but owns no policy and no step budget; callers
/// loop it.
#[derive(Debug)]
pub struct EpisodeCore<'s> {
    scene: &'s VoxelScene,
    target: String,
    parent_class_id: Option<u16>,
    sensors: Sensors,
    goal_cfg: GoalRewardConfig,
    explore_cfg: ExploreRewardConfig,
    parent_seen: bool,
    state: AgentState,
    obs: Observation,
    /// Ground-truth distance from the current pose to the target class,
    /// infinite when the scene has no instance of it.
    distance: f64,
}

impl<'s> EpisodeCore<'s> {
    /// The target class must be declared in the scene's taxonomy and the
    /// start pose must fit the agent's collision sphere in free space.
    /// The parent-sighting bonus is armed here: a parent already visible
    /// from the start never pays out.
    pub fn new(
        scene: &'s VoxelScene,
        start: Pose,
        target: &str,
        nav: &NavConfig,
        seed: u64,
    ) -> Result<Self> {
        if !scene.taxonomy().contains_key(target) {
            return Err(Error::config(format!(
                "episode: class {target:?} not in the scene taxonomy"
            )));
        }
        if scene.cell_of_point(&start.position).is_none() {
            return Err(Error::config("episode: start pose outside the scene"));
        }
        if sphere_intersects(scene, &start.position, AGENT_RADIUS) {
            return Err(Error::config("episode: start pose intersects geometry"));
        }
        let mut sensors = Sensors {
            k: nav.intrinsics()?,
            scan: nav.scan,
            roi: nav.roi,
            semantic: nav.semantic,
            detector: nav.detector,
            provider: SyntheticEmbedding::new(
                &nav.semantic,
                child_seed(scene.seed(), "embedding"),
                scene.taxonomy(),
            ),
            rng: rng_from(child_seed(seed, "detector")),
        };
        let parent_class_id =
            scene.parent_of(target).and_then(|p| scene.class_id(p));
        let obs = sensors.observe(scene, target, &start);
        let parent_seen =
            parent_class_id.map_or(false, |id| obs.class_frame.contains_class(id));
        let distance = ground_truth_distance(scene, &start.position, target);
        Ok(EpisodeCore {
            scene,
            target: target.to_string(),
            parent_class_id,
            sensors,
            goal_cfg: nav.goal_reward,
            explore_cfg: nav.explore_reward,
            parent_seen,
            state: AgentState::at(start),
            obs,
            distance,
        })
    }

    pub fn observation(&self) -> &Observation {
        &self.obs
    }

    pub fn pose(&self) -> Pose {
        self.state.pose
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.sensors.k
    }

    /// Applies one action under the given reward regime. `Done` is
    /// judged against the current observation and pose; any other action
    /// advances the simulator and re-senses.
    pub fn transition(&mut self, action: Action, engine: EngineKind) -> StepOutcome {
        if action == Action::Done {
            let success = success_check(&self.obs.detection, action, self.distance, &self.sensors.k);
            let rho_min = scan_min(self.obs.bundle.scan());
            let breakdown = match engine {
                EngineKind::Goal => goal_reward(
                    &self.goal_cfg,
                    &GoalStep {
                        prev_distance: self.distance,
                        distance: self.distance,
                        parent_first_sighting: false,
                        bbox_area: 0.0,
                        success,
                        collided: false,
                    },
                ),
                EngineKind::Explore => {
                    let z = frontier_depth(&self.obs.roi);
                    explore_reward(
                        &self.explore_cfg,
                        &ExploreStep {
                            z_prev: z,
                            z_cur: z,
                            dx: self.obs.roi.dx,
                            dy: self.obs.roi.dy,
                            rho_min,
                        },
                    )
                }
            };
            self.state = sim::step(self.scene, &self.state, action);
            return StepOutcome {
                breakdown,
                collided: false,
                pose: self.state.pose,
                rho_min,
                terminal: Some(success),
            };
        }

        let prev_distance = self.distance;
        let z_prev = frontier_depth(&self.obs.roi);
        let next = sim::step(self.scene, &self.state, action);
        let obs = self.sensors.observe(self.scene, &self.target, &next.pose);
        let parent_visible =
            self.parent_class_id.map_or(false, |id| obs.class_frame.contains_class(id));
        let parent_first_sighting = parent_visible && !self.parent_seen;
        self.parent_seen |= parent_visible;
        let distance = ground_truth_distance(self.scene, &next.pose.position, &self.target);
        let rho_min = scan_min(obs.bundle.scan());
        let breakdown = match engine {
            EngineKind::Goal => goal_reward(
                &self.goal_cfg,
                &GoalStep {
                    prev_distance,
                    distance,
                    parent_first_sighting,
                    bbox_area: obs.bbox.area_ratio,
                    success: false,
                    collided: next.collided,
                },
            ),
            EngineKind::Explore => explore_reward(
                &self.explore_cfg,
                &ExploreStep {
                    z_prev,
                    z_cur: frontier_depth(&obs.roi),
                    dx: obs.roi.dx,
                    dy: obs.roi.dy,
                    rho_min,
                },
            ),
        };
        self.state = next;
        self.obs = obs;
        self.distance = distance;
        StepOutcome {
            breakdown,
            collided: next.collided,
            pose: next.pose,
            rho_min,
            terminal: None,
        }
    }
}

/// An invalid frontier reads as zero depth, matching how the feature
/// bundle encodes it.
fn frontier_depth(roi: &RoiFeature) -> f64 {
    if roi.valid {
        roi.z_mean
    } else {
        0.0
    }
}

/// Scan values are normalized to [0, 1] with empty sectors at 1.0, so
/// folding from 1.0 yields the true minimum.
fn scan_min(scan: &[f64]) -> f64 {
    scan.iter().copied().fold(1.0, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Success,
    Failure,
    Timeout,
}

impl EpisodeStatus {
    pub fn label(self) -> &'static str {
        match self {
            EpisodeStatus::Success => "success",
            EpisodeStatus::Failure => "failure",
            EpisodeStatus::Timeout => "timeout",
        }
    }
}

/// One acted step: the pose is post-action, `detected` is what the
/// policy saw when it chose, and `rho_min` is the clearance the reward
/// used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub pose: Pose,
    pub action: Action,
    pub engine: EngineKind,
    pub detected: bool,
    pub collided: bool,
    pub reward: RewardBreakdown,
    pub rho_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub target: String,
    pub seed: u64,
    pub start: Pose,
    pub status: EpisodeStatus,
    pub steps: Vec<StepRecord>,
    /// Sum of translation distances actually moved.
    pub path_length: f64,
    pub fcr: f64,
    pub covered: usize,
    pub reachable: usize,
    /// Shortest feasible path to the success region, infinite when the
    /// region is empty or unreachable. Filled in by the batch layer;
    /// a bare [`run_episode`] leaves it infinite.
    pub optimal_length: f64,
}

impl EpisodeRecord {
    pub fn collisions(&self) -> usize {
        self.steps.iter().filter(|s| s.collided).count()
    }

    pub fn success(&self) -> bool {
        self.status == EpisodeStatus::Success
    }
}

/// Runs one episode to termination or the step budget. Coverage folds in
/// the start observation and every post-action observation; the frozen
/// view a `Done` is judged on adds nothing new.
pub fn run_episode(
    scene: &VoxelScene,
    start: Pose,
    target: &str,
    policy: &mut dyn Policy,
    nav: &NavConfig,
    seed: u64,
) -> Result<EpisodeRecord> {
    let mut core = EpisodeCore::new(scene, start, target, nav, seed)?;
    let start_cell = scene.cell_of_point(&start.position).expect("start validated above");
    let mut coverage = CoverageState::new(scene, start_cell);
    coverage.update(scene, &start, core.intrinsics());
    policy.reset(child_seed(seed, "policy"));

    let mut steps = Vec::new();
    let mut path_length = 0.0;
    let mut status = EpisodeStatus::Timeout;
    for t in 0..nav.eval.max_steps {
        let detected = core.obs.detection.present;
        let (_, action) = policy.act(&core.obs.bundle);
        let engine = policy.engine();
        let prev = core.state.pose.position;
        let out = core.transition(action, engine);
        path_length += (out.pose.position - prev).norm();
        steps.push(StepRecord {
            step: t,
            pose: out.pose,
            action,
            engine,
            detected,
            collided: out.collided,
            reward: out.breakdown,
            rho_min: out.rho_min,
        });
        match out.terminal {
            Some(true) => {
                status = EpisodeStatus::Success;
                break;
            }
            Some(false) => {
                status = EpisodeStatus::Failure;
                break;
            }
            None => coverage.update(scene, &out.pose, core.intrinsics()),
        }
    }

    Ok(EpisodeRecord {
        target: target.to_string(),
        seed,
        start,
        status,
        steps,
        path_length,
        fcr: coverage.fcr(),
        covered: coverage.covered_count(),
        reachable: coverage.reachable_count(),
        optimal_length: f64::INFINITY,
    })
}

/// Feeds back a recorded action sequence, reporting each step's recorded
/// engine. Running it through [`run_episode`] with the original config
/// and seed reproduces the original trajectory.
pub struct ReplayPolicy {
    steps: Vec<(Action, EngineKind)>,
    cursor: usize,
}

impl ReplayPolicy {
    pub fn new(steps: Vec<(Action, EngineKind)>) -> Self {
        ReplayPolicy { steps, cursor: 0 }
    }

    pub fn from_record(record: &EpisodeRecord) -> Self {
        ReplayPolicy::new(record.steps.iter().map(|s| (s.action, s.engine)).collect())
    }
}

impl Policy for ReplayPolicy {
    fn reset(&mut self, _episode_seed: u64) {
        self.cursor = 0;
    }

    fn act(&mut self, _bundle: &FeatureBundle) -> (ActionDistribution, Action) {
        let (action, _) = self.steps[self.cursor];
        self.cursor += 1;
        (ActionDistribution::delta(action), action)
    }

    fn engine(&self) -> EngineKind {
        if self.cursor == 0 {
            self.steps.first().map_or(EngineKind::Explore, |s| s.1)
        } else {
            self.steps[self.cursor - 1].1
        }
    }
}

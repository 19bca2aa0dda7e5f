//! Episode logs as JSON lines: one header, one line per acted step, one
//! terminal summary.
//!
//! The log carries everything needed to rebuild the episode record and to
//! replay the action sequence through the simulator, so a log plus the
//! original config and seed reproduces the trajectory exactly. Infinite
//! optimal lengths serialize as `null` because JSON has no infinity.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::episode::{EpisodeRecord, EpisodeStatus, StepRecord};
use crate::eval::metrics::CR_DEFINITION;
use crate::geometry::Pose;
use crate::policy::EngineKind;
use crate::rewards::RewardBreakdown;
use crate::sim::Action;

pub const LOG_FORMAT: &str = "voxnav-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct HeaderLine {
    format: String,
    version: u32,
    config_hash: u64,
    seed: u64,
    target: String,
    x: f64,
    y: f64,
    z: f64,
    yaw: f64,
    cr_definition: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct StepLine {
    step: usize,
    x: f64,
    y: f64,
    z: f64,
    yaw: f64,
    action: String,
    policy: String,
    collided: bool,
    detected: bool,
    r_d: f64,
    r_parent: f64,
    r_bbox: f64,
    r_suc: f64,
    r_c: f64,
    r_fwd: f64,
    r_dir: f64,
    r_safe: f64,
    gamma: f64,
    total: f64,
    rho_min: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TerminalLine {
    status: String,
    steps: usize,
    path_length: f64,
    fcr: f64,
    covered: usize,
    reachable: usize,
    optimal_length: Option<f64>,
}

/// A parsed log: the episode it recorded plus the config fingerprint it
/// was produced under.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedEpisode {
    pub config_hash: u64,
    pub record: EpisodeRecord,
}

pub fn write_log(w: &mut dyn Write, record: &EpisodeRecord, config_hash: u64) -> Result<()> {
    let header = HeaderLine {
        format: LOG_FORMAT.to_string(),
        version: LOG_VERSION,
        config_hash,
        seed: record.seed,
        target: record.target.clone(),
        x: record.start.position.x,
        y: record.start.position.y,
        z: record.start.position.z,
        yaw: record.start.yaw,
        cr_definition: CR_DEFINITION.to_string(),
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for s in &record.steps {
        let line = StepLine {
            step: s.step,
            x: s.pose.position.x,
            y: s.pose.position.y,
            z: s.pose.position.z,
            yaw: s.pose.yaw,
            action: s.action.label().to_string(),
            policy: s.engine.label().to_string(),
            collided: s.collided,
            detected: s.detected,
            r_d: s.reward.r_d,
            r_parent: s.reward.r_parent,
            r_bbox: s.reward.r_bbox,
            r_suc: s.reward.r_suc,
            r_c: s.reward.r_c,
            r_fwd: s.reward.r_fwd,
            r_dir: s.reward.r_dir,
            r_safe: s.reward.r_safe,
            gamma: s.reward.gamma,
            total: s.reward.total,
            rho_min: s.rho_min,
        };
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    let terminal = TerminalLine {
        status: record.status.label().to_string(),
        steps: record.steps.len(),
        path_length: record.path_length,
        fcr: record.fcr,
        covered: record.covered,
        reachable: record.reachable,
        optimal_length: record.optimal_length.is_finite().then_some(record.optimal_length),
    };
    writeln!(w, "{}", serde_json::to_string(&terminal)?)?;
    Ok(())
}

fn parse_action(label: &str) -> Result<Action> {
    Action::ALL
        .iter()
        .copied()
        .find(|a| a.label() == label)
        .ok_or_else(|| Error::format(format!("log: unknown action {label:?}")))
}

fn parse_engine(label: &str) -> Result<EngineKind> {
    match label {
        "explore" => Ok(EngineKind::Explore),
        "goal" => Ok(EngineKind::Goal),
        other => Err(Error::format(format!("log: unknown policy {other:?}"))),
    }
}

fn parse_status(label: &str) -> Result<EpisodeStatus> {
    match label {
        "success" => Ok(EpisodeStatus::Success),
        "failure" => Ok(EpisodeStatus::Failure),
        "timeout" => Ok(EpisodeStatus::Timeout),
        other => Err(Error::format(format!("log: unknown status {other:?}"))),
    }
}

pub fn read_log(r: &mut dyn BufRead) -> Result<LoggedEpisode> {
    let mut lines = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    if lines.len() < 2 {
        return Err(Error::format("log: needs at least a header and a terminal line"));
    }
    let header: HeaderLine = serde_json::from_str(&lines[0])
        .map_err(|e| Error::format(format!("log: bad header: {e}")))?;
    if header.format != LOG_FORMAT {
        return Err(Error::format(format!("log: format {:?} is not {LOG_FORMAT:?}", header.format)));
    }
    if header.version != LOG_VERSION {
        return Err(Error::format(format!(
            "log: version {} is not {LOG_VERSION}",
            header.version
        )));
    }
    let terminal: TerminalLine = serde_json::from_str(lines.last().unwrap())
        .map_err(|e| Error::format(format!("log: bad terminal line: {e}")))?;
    let mut steps = Vec::with_capacity(lines.len() - 2);
    for raw in &lines[1..lines.len() - 1] {
        let s: StepLine = serde_json::from_str(raw)
            .map_err(|e| Error::format(format!("log: bad step line: {e}")))?;
        steps.push(StepRecord {
            step: s.step,
            pose: Pose::new(nalgebra::Vector3::new(s.x, s.y, s.z), s.yaw),
            action: parse_action(&s.action)?,
            engine: parse_engine(&s.policy)?,
            detected: s.detected,
            collided: s.collided,
            reward: RewardBreakdown {
                r_d: s.r_d,
                r_parent: s.r_parent,
                r_bbox: s.r_bbox,
                r_suc: s.r_suc,
                r_c: s.r_c,
                r_fwd: s.r_fwd,
                r_dir: s.r_dir,
                r_safe: s.r_safe,
                gamma: s.gamma,
                total: s.total,
            },
            rho_min: s.rho_min,
        });
    }
    if steps.len() != terminal.steps {
        return Err(Error::format(format!(
            "log: terminal line says {} steps but {} step lines are present",
            terminal.steps,
            steps.len()
        )));
    }
    let record = EpisodeRecord {
        target: header.target,
        seed: header.seed,
        start: Pose::new(nalgebra::Vector3::new(header.x, header.y, header.z), header.yaw),
        status: parse_status(&terminal.status)?,
        steps,
        path_length: terminal.path_length,
        fcr: terminal.fcr,
        covered: terminal.covered,
        reachable: terminal.reachable,
        optimal_length: terminal.optimal_length.unwrap_or(f64::INFINITY),
    };
    Ok(LoggedEpisode { config_hash: header.config_hash, record })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::NavConfig;
    use crate::eval::episode::{run_episode, ReplayPolicy};
    use crate::eval::metrics::compute_metrics;
    use crate::policy::RandomPolicy;
    use crate::sim::VoxelScene;

    fn fixture() -> (VoxelScene, NavConfig, Pose) {
        let mut s = VoxelScene::new(0.15, [30, 20, 8], 42).unwrap();
        s.declare_class("crate", None);
        s.add_object("crate", [20, 8, 1], [22, 12, 4], true).unwrap();
        let mut cfg = NavConfig::default();
        cfg.eval.max_steps = 25;
        cfg.detector.miss_prob = 0.15;
        cfg.detector.jitter_px = 1.0;
        let start = Pose::new(s.cell_center([5, 9, 2]), 0.7);
        (s, cfg, start)
    }

    #[test]
    fn logs_round_trip_bit_for_bit() {
        let (s, cfg, start) = fixture();
        let mut policy = RandomPolicy::new();
        let rec = run_episode(&s, start, "crate", &mut policy, &cfg, 3).unwrap();
        let mut buf = Vec::new();
        write_log(&mut buf, &rec, cfg.hash()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), rec.steps.len() + 2);
        assert!(text.lines().next().unwrap().contains("voxnav-log"));

        let parsed = read_log(&mut buf.as_slice()).unwrap();
        assert_eq!(parsed.config_hash, cfg.hash());
        assert_eq!(parsed.record, rec);
    }

    #[test]
    fn infinite_optimum_survives_as_null() {
        let (s, cfg, start) = fixture();
        let mut policy = RandomPolicy::new();
        let mut rec = run_episode(&s, start, "crate", &mut policy, &cfg, 4).unwrap();
        assert!(rec.optimal_length.is_infinite());
        let mut buf = Vec::new();
        write_log(&mut buf, &rec, 0).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().contains("\"optimal_length\":null"));
        let parsed = read_log(&mut buf.as_slice()).unwrap();
        assert!(parsed.record.optimal_length.is_infinite());

        rec.optimal_length = 2.25;
        let mut buf2 = Vec::new();
        write_log(&mut buf2, &rec, 0).unwrap();
        let parsed2 = read_log(&mut buf2.as_slice()).unwrap();
        assert_eq!(parsed2.record.optimal_length, 2.25);
    }

    #[test]
    fn replay_from_log_reproduces_the_run_and_its_metrics() {
        let (s, cfg, start) = fixture();
        let mut policy = RandomPolicy::new();
        let rec = run_episode(&s, start, "crate", &mut policy, &cfg, 9).unwrap();
        let mut buf = Vec::new();
        write_log(&mut buf, &rec, cfg.hash()).unwrap();
        let parsed = read_log(&mut buf.as_slice()).unwrap();

        let mut replay = ReplayPolicy::from_record(&parsed.record);
        let again =
            run_episode(&s, parsed.record.start, &parsed.record.target, &mut replay, &cfg, parsed.record.seed)
                .unwrap();
        assert_eq!(again, rec);
        assert_eq!(compute_metrics(&[again]), compute_metrics(&[rec]));
    }

    #[test]
    fn malformed_logs_are_rejected() {
        let (s, cfg, start) = fixture();
        let mut policy = RandomPolicy::new();
        let rec = run_episode(&s, start, "crate", &mut policy, &cfg, 5).unwrap();
        let mut buf = Vec::new();
        write_log(&mut buf, &rec, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();

        // Dropped terminal line: the last step line cannot stand in.
        let truncated: String =
            text.lines().take(text.lines().count() - 1).collect::<Vec<_>>().join("\n");
        assert!(read_log(&mut truncated.as_bytes()).is_err());

        // Wrong format tag.
        let alien = text.replacen("voxnav-log", "other-log", 1);
        assert!(read_log(&mut alien.as_bytes()).is_err());

        // Wrong version.
        let future = text.replacen("\"version\":1", "\"version\":9", 1);
        assert!(read_log(&mut future.as_bytes()).is_err());

        // Corrupt middle line.
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1] = "{\"step\":0}";
        let broken = lines.join("\n");
        assert!(read_log(&mut broken.as_bytes()).is_err());

        // Empty input.
        assert!(read_log(&mut "".as_bytes()).is_err());
    }
}

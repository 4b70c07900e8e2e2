use serde::{Deserialize, Serialize};

use crate::geometry::{angular_distance, position_distance, Pose};
use crate::tracking::RunRecord;
use crate::vehicle::{Mode, Timestamp};

use super::psi::{build_psi, FramePoseIndex};
use super::refine::{FlagReason, RefinementFlag};
use super::MatchingError;

/// Scenario metadata carried by every pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ScenarioTags {
    pub scenario: String,
    pub road_scene: String,
    pub lighting: String,
}

impl ScenarioTags {
    /// Key used for per-tag breakdowns.
    pub fn key(&self) -> String {
        format!("{}/{}", self.road_scene, self.lighting)
    }
}

/// Camera frames of one run with their ψ-resolved poses.
#[derive(Debug, Clone)]
pub struct RunFrames {
    pub mode: Mode,
    psi: FramePoseIndex<Timestamp>,
    poses: Vec<Pose<f64>>,
}

impl RunFrames {
    pub fn new(
        mode: Mode,
        camera_times: &[Timestamp],
        pose_times: &[Timestamp],
        poses: Vec<Pose<f64>>,
    ) -> Result<Self, MatchingError> {
        if pose_times.len() != poses.len() {
            return Err(MatchingError::LengthMismatch {
                times: pose_times.len(),
                poses: poses.len(),
            });
        }
        let psi = if camera_times.is_empty() {
            FramePoseIndex::empty()
        } else {
            build_psi(camera_times, pose_times)?
        };
        Ok(Self { mode, psi, poses })
    }

    /// Camera triggers against the realized (estimated) trajectory.
    pub fn from_record(record: &RunRecord) -> Result<Self, MatchingError> {
        let cams: Vec<Timestamp> = record.camera_triggers.iter().map(|(_, t)| *t).collect();
        let ticks: Vec<Timestamp> = record.lidar_ticks.iter().map(|(_, t)| *t).collect();
        let poses = record.realized.poses().copied().collect();
        Self::new(record.mode, &cams, &ticks, poses)
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn psi(&self) -> &FramePoseIndex<Timestamp> {
        &self.psi
    }

    pub fn time(&self, frame: usize) -> Timestamp {
        self.psi.camera_times()[frame]
    }

    pub fn pose_index(&self, frame: usize) -> usize {
        self.psi.get(frame)
    }

    /// `p_{ψ(frame)}`.
    pub fn pose(&self, frame: usize) -> &Pose<f64> {
        &self.poses[self.psi.get(frame)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub day_frame: usize,
    pub night_frame: usize,
    pub day_time: Timestamp,
    pub night_time: Timestamp,
    pub day_pose_index: usize,
    pub night_pose_index: usize,
    /// Meters.
    pub position_error: f64,
    /// Radians.
    pub angular_error: f64,
    pub day_pose: Pose<f64>,
    pub night_pose: Pose<f64>,
    pub tags: ScenarioTags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    /// Maximum accepted position error in meters.
    pub delta: f64,
    /// Let each night frame serve at most one day frame.
    pub unique: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            delta: 0.05,
            unique: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MatchOutcome {
    /// Ordered by day frame.
    pub pairs: Vec<MatchedPair>,
    /// Day frames whose nearest night frame is farther than `delta`.
    pub unmatched: Vec<usize>,
    /// Pairs that lost a night frame to a closer day frame (uniqueness mode).
    pub duplicates: Vec<RefinementFlag>,
}

/// Night frame minimizing the position distance to `target`; ties go to the
/// lowest frame index.
pub fn nearest_night_frame(target: &Pose<f64>, night: &RunFrames) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for f in 0..night.len() {
        let d = position_distance(target, night.pose(f));
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((f, d));
        }
    }
    best
}

/// For every day frame, pairs the night frame whose pose is nearest in
/// position and keeps it when the distance is within `delta`.
pub fn match_pairs(
    day: &RunFrames,
    night: &RunFrames,
    options: &MatchOptions,
    tags: &ScenarioTags,
) -> Result<MatchOutcome, MatchingError> {
    if !(options.delta > 0.0 && options.delta.is_finite()) {
        return Err(MatchingError::InvalidDelta(options.delta));
    }
    let mut out = MatchOutcome::default();
    for q in 0..day.len() {
        let p_day = day.pose(q);
        match nearest_night_frame(p_day, night) {
            Some((f, d)) if d <= options.delta => {
                let p_night = night.pose(f);
                out.pairs.push(MatchedPair {
                    day_frame: q,
                    night_frame: f,
                    day_time: day.time(q),
                    night_time: night.time(f),
                    day_pose_index: day.pose_index(q),
                    night_pose_index: night.pose_index(f),
                    position_error: d,
                    angular_error: angular_distance(p_day, p_night),
                    day_pose: *p_day,
                    night_pose: *p_night,
                    tags: tags.clone(),
                });
            }
            _ => out.unmatched.push(q),
        }
    }
    if options.unique {
        let (winners, losers) = resolve_duplicates(std::mem::take(&mut out.pairs));
        out.pairs = winners;
        out.duplicates = losers;
    }
    Ok(out)
}

/// Keeps, per night frame, the pair with the smallest error (then the lowest
/// day frame).
fn resolve_duplicates(pairs: Vec<MatchedPair>) -> (Vec<MatchedPair>, Vec<RefinementFlag>) {
    let mut winner: std::collections::BTreeMap<usize, usize> = Default::default();
    for (i, p) in pairs.iter().enumerate() {
        winner
            .entry(p.night_frame)
            .and_modify(|w| {
                if p.position_error < pairs[*w].position_error {
                    *w = i;
                }
            })
            .or_insert(i);
    }
    let mut kept = Vec::new();
    let mut flags = Vec::new();
    for (i, p) in pairs.into_iter().enumerate() {
        if winner[&p.night_frame] == i {
            kept.push(p);
        } else {
            flags.push(RefinementFlag::for_pair(&p, FlagReason::DuplicateTarget));
        }
    }
    (kept, flags)
}

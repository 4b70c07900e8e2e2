use std::collections::{BTreeSet, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;

use super::pairs::MatchedPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagReason {
    DynamicObjectMismatch,
    DecimeterError,
    DuplicateTarget,
}

impl FlagReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlagReason::DynamicObjectMismatch => "dynamic_object_mismatch",
            FlagReason::DecimeterError => "decimeter_error",
            FlagReason::DuplicateTarget => "duplicate_target",
        }
    }
}

/// Why a pair was dropped, referenced by its frame indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementFlag {
    pub reason: FlagReason,
    pub day_frame: usize,
    pub night_frame: usize,
    pub position_error: f64,
}

impl RefinementFlag {
    pub fn for_pair(pair: &MatchedPair, reason: FlagReason) -> Self {
        Self {
            reason,
            day_frame: pair.day_frame,
            night_frame: pair.night_frame,
            position_error: pair.position_error,
        }
    }
}

/// Camera frames that caught a transient object in one run only.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnomalyLog {
    pub day: BTreeSet<usize>,
    pub night: BTreeSet<usize>,
}

impl AnomalyLog {
    /// Tags frames independently so that a pair (one day frame, one night
    /// frame) is touched with probability `rate`.
    pub fn inject(seed: u64, rate: f64, day_frames: usize, night_frames: usize) -> Self {
        assert!((0.0..=1.0).contains(&rate), "anomaly rate outside [0, 1]");
        let per_frame = 1.0 - (1.0 - rate).sqrt();
        let mut rng = rng::stream(seed, rng::ANOMALIES);
        let mut draw = |n: usize| -> BTreeSet<usize> {
            (0..n).filter(|_| rng.gen::<f64>() < per_frame).collect()
        };
        let day = draw(day_frames);
        let night = draw(night_frames);
        Self { day, night }
    }

    pub fn is_empty(&self) -> bool {
        self.day.is_empty() && self.night.is_empty()
    }

    pub fn touches(&self, pair: &MatchedPair) -> bool {
        self.day.contains(&pair.day_frame) || self.night.contains(&pair.night_frame)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Refinement {
    pub kept: Vec<MatchedPair>,
    /// Sorted by day frame, then reason.
    pub flags: Vec<RefinementFlag>,
}

/// Automatic review pass over the matched pairs.
///
/// Pairs with an anomaly-tagged frame are dropped as dynamic object
/// mismatches. Any pair, in `pairs` or in the loosely thresholded
/// `diagnostic` set, whose error reaches `decimeter_threshold` is dropped as a
/// decimeter error. Each dropped pair yields exactly one flag.
pub fn refine_pairs(
    pairs: &[MatchedPair],
    diagnostic: &[MatchedPair],
    anomalies: &AnomalyLog,
    decimeter_threshold: f64,
) -> Refinement {
    let mut out = Refinement::default();
    for p in pairs {
        if anomalies.touches(p) {
            out.flags.push(RefinementFlag::for_pair(p, FlagReason::DynamicObjectMismatch));
        } else if p.position_error >= decimeter_threshold {
            out.flags.push(RefinementFlag::for_pair(p, FlagReason::DecimeterError));
        } else {
            out.kept.push(p.clone());
        }
    }
    let primary: HashSet<(usize, usize)> = pairs.iter().map(|p| (p.day_frame, p.night_frame)).collect();
    for d in diagnostic {
        if d.position_error >= decimeter_threshold && !primary.contains(&(d.day_frame, d.night_frame)) {
            out.flags.push(RefinementFlag::for_pair(d, FlagReason::DecimeterError));
        }
    }
    out.flags.sort_by_key(|f| (f.day_frame, f.reason, f.night_frame));
    out
}

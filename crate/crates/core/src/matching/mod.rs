//! Day/night frame pairing: ψ, constrained pose matching, refinement and
//! alignment statistics.

mod pairs;
mod psi;
mod refine;
mod report;

pub use pairs::{
    match_pairs, nearest_night_frame, MatchOptions, MatchOutcome, MatchedPair, RunFrames,
    ScenarioTags,
};
pub use psi::{build_psi, FramePoseIndex};
pub use refine::{refine_pairs, AnomalyLog, FlagReason, Refinement, RefinementFlag};
pub use report::{alignment_report, AlignmentReport, ErrorStats, TagBreakdown};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MatchingError {
    #[error("empty timestamp stream")]
    EmptyStream,
    #[error("{stream} timestamps not sorted at index {index}")]
    Unsorted { stream: &'static str, index: usize },
    #[error("{times} pose timestamps but {poses} poses")]
    LengthMismatch { times: usize, poses: usize },
    #[error("matching threshold must be positive and finite, got {0}")]
    InvalidDelta(f64),
}

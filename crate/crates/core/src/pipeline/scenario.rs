use tracing::{info, warn};

use crate::matching::{
    alignment_report, match_pairs, refine_pairs, AlignmentReport, AnomalyLog, MatchOptions,
    MatchOutcome, MatchedPair, Refinement, RunFrames, ScenarioTags,
};
use crate::tracking::RunRecord;
use crate::vehicle::Mode;

use super::{PipelineError, World};

/// In-memory result of one day/night scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub seed: u64,
    pub tags: ScenarioTags,
    pub day: RunRecord,
    pub night: RunRecord,
    pub day_frames: RunFrames,
    pub night_frames: RunFrames,
    /// Pairs within δ (before refinement) and the unmatched day frames.
    pub matched: MatchOutcome,
    /// Pairs within the looser diagnostic threshold.
    pub diagnostic: Vec<MatchedPair>,
    pub anomalies: AnomalyLog,
    pub refinement: Refinement,
    pub report: AlignmentReport,
}

impl ScenarioRun {
    /// Final pair set.
    pub fn kept(&self) -> &[MatchedPair] {
        &self.refinement.kept
    }
}

impl World {
    pub fn tags(&self) -> ScenarioTags {
        ScenarioTags {
            scenario: self.config.id.clone(),
            road_scene: self.config.road_scene.as_str().to_string(),
            lighting: self.config.lighting.as_str().to_string(),
        }
    }

    /// Configured matching options.
    pub fn match_options(&self) -> MatchOptions {
        MatchOptions {
            delta: self.config.matching.delta,
            unique: self.config.matching.unique,
        }
    }

    /// Day run, night run, ψ for both, matching, refinement and report.
    pub fn execute(&self, seed: u64, options: &MatchOptions) -> Result<ScenarioRun, PipelineError> {
        let run_options = self.run_options(seed);
        let day = self
            .track(Mode::Day, &run_options)
            .map_err(|e| PipelineError::tracking(Mode::Day, e))?;
        let night = self
            .track(Mode::Night, &run_options)
            .map_err(|e| PipelineError::tracking(Mode::Night, e))?;
        for run in [&day, &night] {
            if !run.completed {
                warn!(mode = run.mode.as_str(), "run ended before the vehicle stopped at the goal");
            }
        }
        let day_frames = RunFrames::from_record(&day)?;
        let night_frames = RunFrames::from_record(&night)?;
        let tags = self.tags();
        let matched = match_pairs(&day_frames, &night_frames, options, &tags)?;
        let m = &self.config.matching;
        let diagnostic_options = MatchOptions {
            delta: m.diagnostic_delta.max(options.delta),
            unique: false,
        };
        let diagnostic = match_pairs(&day_frames, &night_frames, &diagnostic_options, &tags)?.pairs;
        let anomalies = AnomalyLog::inject(seed, self.config.anomalies.rate, day_frames.len(), night_frames.len());
        let mut refinement = refine_pairs(&matched.pairs, &diagnostic, &anomalies, m.decimeter_threshold);
        refinement.flags.extend(matched.duplicates.iter().cloned());
        refinement
            .flags
            .sort_by_key(|f| (f.day_frame, f.reason, f.night_frame));

        let mut report = alignment_report(&refinement.kept, day_frames.len(), m.angular_warn_deg.to_radians());
        for f in &refinement.flags {
            *report.removed.entry(f.reason.as_str().to_string()).or_default() += 1;
        }
        info!(
            scenario = %tags.scenario,
            seed,
            matched = matched.pairs.len(),
            kept = refinement.kept.len(),
            day_frames = day_frames.len(),
            "scenario finished"
        );
        Ok(ScenarioRun {
            seed,
            tags,
            day,
            night,
            day_frames,
            night_frames,
            matched,
            diagnostic,
            anomalies,
            refinement,
            report,
        })
    }
}

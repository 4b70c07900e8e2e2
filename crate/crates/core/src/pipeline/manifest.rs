//! Pair manifest: one JSON header line, then one line per pair that passed
//! the δ gate, in day-frame order.
//!
//! Pair lines always carry the fields `pair_id, scenario, road_scene,
//! lighting, day_frame, day_time, night_frame, night_time, position_error_m,
//! angular_error_rad, status` in that order. Times are exact rationals
//! (`"7/6"` seconds), position errors have 4 decimals and angular errors 6.
//! `status` is `kept` or the refinement flag that removed the pair.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angular_distance, position_distance};
use crate::matching::{AlignmentReport, ErrorStats, FlagReason, RefinementFlag, TagBreakdown};

use super::ScenarioRun;

pub const MANIFEST_SCHEMA: &str = "nightpair.pairs";
pub const MANIFEST_VERSION: u32 = 1;
pub const KEPT: &str = "kept";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub schema: String,
    pub version: u32,
    pub scenario: String,
    pub road_scene: String,
    pub lighting: String,
    pub seed: u64,
    pub config_hash: String,
    pub delta_m: f64,
    pub unique: bool,
    pub angular_warn_rad: f64,
    pub day_frames: usize,
    pub night_frames: usize,
    /// Decimeter-error removals from the diagnostic set that have no pair line.
    pub diagnostic_decimeter_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub pair_id: usize,
    pub scenario: String,
    pub road_scene: String,
    pub lighting: String,
    pub day_frame: usize,
    pub day_time: String,
    pub night_frame: usize,
    pub night_time: String,
    pub position_error_m: f64,
    pub angular_error_rad: f64,
    pub status: String,
}

impl ManifestRecord {
    pub fn is_kept(&self) -> bool {
        self.status == KEPT
    }

    /// Serialized line with the documented field order and precision.
    pub fn to_line(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string serializes");
        format!(
            "{{\"pair_id\":{},\"scenario\":{},\"road_scene\":{},\"lighting\":{},\"day_frame\":{},\"day_time\":{},\"night_frame\":{},\"night_time\":{},\"position_error_m\":{:.4},\"angular_error_rad\":{:.6},\"status\":{}}}",
            self.pair_id,
            q(&self.scenario),
            q(&self.road_scene),
            q(&self.lighting),
            self.day_frame,
            q(&self.day_time),
            self.night_frame,
            q(&self.night_time),
            self.position_error_m,
            self.angular_error_rad,
            q(&self.status),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub header: ManifestHeader,
    pub records: Vec<ManifestRecord>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest is empty")]
    Empty,
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("unsupported manifest schema {schema:?} version {version}")]
    Schema { schema: String, version: u32 },
}

/// Round-trips a float through the fixed decimal text used in the manifest.
fn rounded(value: f64, decimals: usize) -> f64 {
    format!("{value:.decimals$}").parse().expect("formatted float parses")
}

impl Manifest {
    pub fn from_run(run: &ScenarioRun, config_hash: &str, delta: f64, unique: bool, angular_warn_rad: f64) -> Self {
        // primary pairs plus the uniqueness losers, which also passed δ
        let mut entries: Vec<(usize, usize)> = run
            .matched
            .pairs
            .iter()
            .map(|p| (p.day_frame, p.night_frame))
            .chain(run.matched.duplicates.iter().map(|f| (f.day_frame, f.night_frame)))
            .collect();
        entries.sort_unstable();
        let listed: HashSet<(usize, usize)> = entries.iter().copied().collect();
        let status = |q: usize, f: usize| -> &'static str {
            run.refinement
                .flags
                .iter()
                .find(|fl| fl.day_frame == q && fl.night_frame == f)
                .map_or(KEPT, |fl| fl.reason.as_str())
        };
        let (day, night) = (&run.day_frames, &run.night_frames);
        let records = entries
            .iter()
            .enumerate()
            .map(|(id, &(q, f))| ManifestRecord {
                pair_id: id,
                scenario: run.tags.scenario.clone(),
                road_scene: run.tags.road_scene.clone(),
                lighting: run.tags.lighting.clone(),
                day_frame: q,
                day_time: day.time(q).to_string(),
                night_frame: f,
                night_time: night.time(f).to_string(),
                position_error_m: rounded(position_distance(day.pose(q), night.pose(f)), 4),
                angular_error_rad: rounded(angular_distance(day.pose(q), night.pose(f)), 6),
                status: status(q, f).to_string(),
            })
            .collect();
        let unlisted = |fl: &&RefinementFlag| !listed.contains(&(fl.day_frame, fl.night_frame));
        let header = ManifestHeader {
            schema: MANIFEST_SCHEMA.to_string(),
            version: MANIFEST_VERSION,
            scenario: run.tags.scenario.clone(),
            road_scene: run.tags.road_scene.clone(),
            lighting: run.tags.lighting.clone(),
            seed: run.seed,
            config_hash: config_hash.to_string(),
            delta_m: delta,
            unique,
            angular_warn_rad,
            day_frames: day.len(),
            night_frames: night.len(),
            diagnostic_decimeter_errors: run
                .refinement
                .flags
                .iter()
                .filter(unlisted)
                .filter(|fl| fl.reason == FlagReason::DecimeterError)
                .count(),
        };
        Self { header, records }
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string(&self.header).expect("header serializes");
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ManifestError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(ManifestError::Empty)?;
        let header: ManifestHeader =
            serde_json::from_str(first).map_err(|source| ManifestError::Json { line: 1, source })?;
        if header.schema != MANIFEST_SCHEMA || header.version != MANIFEST_VERSION {
            return Err(ManifestError::Schema {
                schema: header.schema,
                version: header.version,
            });
        }
        let records = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|source| ManifestError::Json { line: i + 1, source }))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, records })
    }

    pub fn kept(&self) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(|r| r.is_kept())
    }

    /// Alignment report over the kept records.
    pub fn report(&self) -> AlignmentReport {
        let kept: Vec<&ManifestRecord> = self.kept().collect();
        let pos: Vec<f64> = kept.iter().map(|r| r.position_error_m).collect();
        let ang: Vec<f64> = kept.iter().map(|r| r.angular_error_rad).collect();
        let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in &kept {
            grouped
                .entry(format!("{}/{}", r.road_scene, r.lighting))
                .or_default()
                .push(r.position_error_m);
        }
        let mut removed: BTreeMap<String, usize> = BTreeMap::new();
        for r in self.records.iter().filter(|r| !r.is_kept()) {
            *removed.entry(r.status.clone()).or_default() += 1;
        }
        if self.header.diagnostic_decimeter_errors > 0 {
            *removed.entry(FlagReason::DecimeterError.as_str().to_string()).or_default() +=
                self.header.diagnostic_decimeter_errors;
        }
        let day_frames = self.header.day_frames;
        let warn = self.header.angular_warn_rad;
        AlignmentReport {
            day_frames,
            matched: kept.len(),
            match_yield: if day_frames == 0 {
                0.0
            } else {
                kept.len() as f64 / day_frames as f64
            },
            position: ErrorStats::from_values(&pos),
            angular: ErrorStats::from_values(&ang),
            angular_warn_rad: warn,
            angular_warnings: ang.iter().filter(|&&a| a > warn).count(),
            by_tag: grouped
                .into_iter()
                .map(|(k, v)| {
                    (
                        k,
                        TagBreakdown {
                            pairs: v.len(),
                            position: ErrorStats::from_values(&v),
                        },
                    )
                })
                .collect(),
            removed,
        }
    }

    /// Text report with a short identifying preamble.
    pub fn report_text(&self) -> String {
        let h = &self.header;
        let mut s = String::new();
        let _ = writeln!(s, "scenario {} ({}/{})", h.scenario, h.road_scene, h.lighting);
        let _ = writeln!(s, "seed {}  config {}", h.seed, &h.config_hash[..h.config_hash.len().min(12)]);
        let _ = writeln!(
            s,
            "delta {:.3} m  day frames {}  night frames {}",
            h.delta_m, h.day_frames, h.night_frames
        );
        s.push_str(&self.report().render_text());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: usize, err: f64, status: &str) -> ManifestRecord {
        ManifestRecord {
            pair_id: id,
            scenario: "s".into(),
            road_scene: "open_road".into(),
            lighting: "vehicle_low_beam".into(),
            day_frame: id,
            day_time: format!("{id}/10"),
            night_frame: id / 2,
            night_time: format!("{}/6", id / 2),
            position_error_m: err,
            angular_error_rad: 0.001234,
            status: status.into(),
        }
    }

    fn manifest() -> Manifest {
        Manifest {
            header: ManifestHeader {
                schema: MANIFEST_SCHEMA.into(),
                version: MANIFEST_VERSION,
                scenario: "s".into(),
                road_scene: "open_road".into(),
                lighting: "vehicle_low_beam".into(),
                seed: 3,
                config_hash: "ab".repeat(32),
                delta_m: 0.05,
                unique: false,
                angular_warn_rad: 0.0174533,
                day_frames: 10,
                night_frames: 6,
                diagnostic_decimeter_errors: 2,
            },
            records: vec![
                record(0, 0.0123, KEPT),
                record(1, 0.0311, "dynamic_object_mismatch"),
                record(2, 0.02, KEPT),
            ],
        }
    }

    #[test]
    fn line_has_fixed_order_and_precision() {
        let line = record(4, 0.0123, KEPT).to_line();
        assert_eq!(
            line,
            r#"{"pair_id":4,"scenario":"s","road_scene":"open_road","lighting":"vehicle_low_beam","day_frame":4,"day_time":"4/10","night_frame":2,"night_time":"2/6","position_error_m":0.0123,"angular_error_rad":0.001234,"status":"kept"}"#
        );
    }

    #[test]
    fn text_round_trips() {
        let m = manifest();
        let text = m.to_text();
        assert_eq!(text.lines().count(), 4);
        let back = Manifest::parse(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn report_counts_kept_and_removed() {
        let r = manifest().report();
        assert_eq!(r.matched, 2);
        assert!((r.match_yield - 0.2).abs() < 1e-15);
        assert_eq!(r.removed["dynamic_object_mismatch"], 1);
        assert_eq!(r.removed["decimeter_error"], 2);
        let p = r.position.unwrap();
        assert_eq!(p.max, 0.02);
        assert!(manifest().report_text().starts_with("scenario s"));
    }

    #[test]
    fn rejects_foreign_schema() {
        let mut m = manifest();
        m.header.version = 9;
        assert!(matches!(Manifest::parse(&m.to_text()), Err(ManifestError::Schema { .. })));
        assert!(matches!(Manifest::parse(""), Err(ManifestError::Empty)));
        assert!(matches!(Manifest::parse("{}\n"), Err(ManifestError::Json { line: 1, .. })));
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tracing::{error, info};

use crate::config::ScenarioConfig;

use super::artifacts::{run_scenario, Overrides, RunArtifacts};
use super::PipelineError;

#[derive(Debug, Clone, Serialize)]
pub struct BatchRow {
    pub scenario: String,
    pub road_scene: String,
    pub lighting: String,
    pub day_frames: usize,
    pub kept: usize,
    pub match_yield: f64,
    pub mean_error_m: Option<f64>,
    pub p95_error_m: Option<f64>,
    pub max_error_m: Option<f64>,
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchFailure {
    pub config: PathBuf,
    pub error: String,
    pub exit_code: i32,
}

/// Aggregate over all rows sharing a `road_scene/lighting` key (or all rows).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TagTotals {
    pub scenarios: usize,
    pub day_frames: usize,
    pub kept: usize,
    pub match_yield: f64,
    /// Pair-weighted mean of the per-scenario means.
    pub mean_error_m: Option<f64>,
    pub max_error_m: Option<f64>,
}

impl TagTotals {
    fn add(&mut self, row: &BatchRow) {
        let weight = row.kept as f64;
        if let Some(m) = row.mean_error_m {
            let prev = self.mean_error_m.unwrap_or(0.0) * self.kept as f64;
            self.mean_error_m = Some((prev + m * weight) / (self.kept as f64 + weight));
        }
        if let Some(m) = row.max_error_m {
            self.max_error_m = Some(self.max_error_m.map_or(m, |x: f64| x.max(m)));
        }
        self.scenarios += 1;
        self.day_frames += row.day_frames;
        self.kept += row.kept;
        self.match_yield = if self.day_frames == 0 {
            0.0
        } else {
            self.kept as f64 / self.day_frames as f64
        };
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BatchSummary {
    pub rows: Vec<BatchRow>,
    pub by_tag: BTreeMap<String, TagTotals>,
    pub totals: TagTotals,
    pub failures: Vec<BatchFailure>,
}

impl BatchSummary {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    /// 0 when every scenario succeeded, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            3
        }
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let cm = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.2}", 100.0 * x));
        let _ = writeln!(
            s,
            "{:<24} {:<18} {:<42} {:>6} {:>6} {:>7} {:>9} {:>8}",
            "scenario", "road_scene", "lighting", "frames", "kept", "yield", "mean[cm]", "max[cm]"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<24} {:<18} {:<42} {:>6} {:>6} {:>6.1}% {:>9} {:>8}",
                r.scenario,
                r.road_scene,
                r.lighting,
                r.day_frames,
                r.kept,
                100.0 * r.match_yield,
                cm(r.mean_error_m),
                cm(r.max_error_m)
            );
        }
        s.push('\n');
        for (tag, t) in &self.by_tag {
            let _ = writeln!(
                s,
                "{:<61} {:>2} runs {:>6} {:>6} {:>6.1}% {:>9} {:>8}",
                tag,
                t.scenarios,
                t.day_frames,
                t.kept,
                100.0 * t.match_yield,
                cm(t.mean_error_m),
                cm(t.max_error_m)
            );
        }
        let t = &self.totals;
        let _ = writeln!(
            s,
            "{:<61} {:>2} runs {:>6} {:>6} {:>6.1}% {:>9} {:>8}",
            "total",
            t.scenarios,
            t.day_frames,
            t.kept,
            100.0 * t.match_yield,
            cm(t.mean_error_m),
            cm(t.max_error_m)
        );
        for f in &self.failures {
            let _ = writeln!(s, "FAILED {}: {}", f.config.display(), f.error);
        }
        s
    }
}

/// Scenario files (`*.toml`) directly inside `dir`, sorted by name.
pub fn collect_configs(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let io = |source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "toml") {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn row(a: &RunArtifacts, cfg: &ScenarioConfig) -> BatchRow {
    let r = &a.summary;
    BatchRow {
        scenario: a.scenario_id.clone(),
        road_scene: cfg.road_scene.as_str().to_string(),
        lighting: cfg.lighting.as_str().to_string(),
        day_frames: r.day_frames,
        kept: r.matched,
        match_yield: r.match_yield,
        mean_error_m: r.position.map(|p| p.mean),
        p95_error_m: r.position.map(|p| p.p95),
        max_error_m: r.position.map(|p| p.max),
        manifest: a.manifest.clone(),
    }
}

/// Runs every config in turn; failures are recorded and the batch goes on.
pub fn batch_run(configs: &[PathBuf], out_dir: &Path, overrides: &Overrides) -> BatchSummary {
    let mut summary = BatchSummary::default();
    for path in configs {
        let result = ScenarioConfig::load(path)
            .map_err(PipelineError::from)
            .and_then(|cfg| run_scenario(cfg.clone(), out_dir, overrides).map(|a| (a, cfg)));
        match result {
            Ok((artifacts, cfg)) => {
                info!(config = %path.display(), kept = artifacts.summary.matched, "batch entry done");
                let r = row(&artifacts, &cfg);
                summary
                    .by_tag
                    .entry(format!("{}/{}", r.road_scene, r.lighting))
                    .or_default()
                    .add(&r);
                summary.totals.add(&r);
                summary.rows.push(r);
            }
            Err(e) => {
                error!(config = %path.display(), error = %e, "batch entry failed");
                summary.failures.push(BatchFailure {
                    config: path.clone(),
                    error: e.to_string(),
                    exit_code: e.exit_code(),
                });
            }
        }
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(kept: usize, frames: usize, mean: f64, max: f64) -> BatchRow {
        BatchRow {
            scenario: "x".into(),
            road_scene: "open_road".into(),
            lighting: "no_streetlight".into(),
            day_frames: frames,
            kept,
            match_yield: kept as f64 / frames as f64,
            mean_error_m: Some(mean),
            p95_error_m: Some(max),
            max_error_m: Some(max),
            manifest: PathBuf::new(),
        }
    }

    #[test]
    fn totals_are_pair_weighted() {
        let mut t = TagTotals::default();
        t.add(&r(10, 20, 0.01, 0.02));
        t.add(&r(30, 40, 0.03, 0.04));
        assert_eq!((t.scenarios, t.day_frames, t.kept), (2, 60, 40));
        let naive = (10.0 * 0.01 + 30.0 * 0.03) / 40.0;
        assert!((t.mean_error_m.unwrap() - naive).abs() < 1e-15);
        assert_eq!(t.max_error_m, Some(0.04));
        assert!((t.match_yield - 40.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn empty_row_does_not_poison_mean() {
        let mut t = TagTotals::default();
        let mut empty = r(0, 20, 0.0, 0.0);
        empty.mean_error_m = None;
        empty.max_error_m = None;
        t.add(&empty);
        assert_eq!(t.mean_error_m, None);
        t.add(&r(5, 10, 0.02, 0.03));
        assert!((t.mean_error_m.unwrap() - 0.02).abs() < 1e-15);
    }
}

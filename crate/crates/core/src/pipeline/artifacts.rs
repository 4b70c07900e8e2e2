use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tracing::info;

use crate::config::ScenarioConfig;
use crate::matching::{AlignmentReport, MatchOptions};
use crate::tracking::{RunLogRecord, Trajectory};

use super::manifest::Manifest;
use super::{PipelineError, World};

/// Command-line style overrides applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub unique: Option<bool>,
}

impl Overrides {
    /// Effective, validated configuration.
    pub fn apply(&self, mut config: ScenarioConfig) -> Result<ScenarioConfig, PipelineError> {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(delta) = self.delta {
            config.matching.delta = delta;
        }
        if let Some(unique) = self.unique {
            config.matching.unique = unique;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Files written by one scenario run.
#[derive(Debug, Clone, Serialize)]
pub struct RunArtifacts {
    pub scenario_id: String,
    pub seed: u64,
    pub config_hash: String,
    pub dir: PathBuf,
    pub config: PathBuf,
    pub day_log: PathBuf,
    pub night_log: PathBuf,
    pub desired_trajectory: PathBuf,
    pub day_trajectory: PathBuf,
    pub night_trajectory: PathBuf,
    pub manifest: PathBuf,
    pub report: PathBuf,
    pub report_json: PathBuf,
    #[serde(skip)]
    pub summary: AlignmentReport,
}

impl RunArtifacts {
    pub fn paths(&self) -> [&Path; 10] {
        [
            &self.config,
            &self.day_log,
            &self.night_log,
            &self.desired_trajectory,
            &self.day_trajectory,
            &self.night_trajectory,
            &self.manifest,
            &self.report,
            &self.report_json,
            &self.dir,
        ]
    }
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(contents).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io)
}

fn jsonl(records: &[RunLogRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("log record serializes");
        out.push(b'\n');
    }
    out
}

fn trajectory_text(t: &Trajectory) -> Vec<u8> {
    let mut out = Vec::new();
    t.write(&mut out).expect("writing to memory");
    out
}

/// Runs one scenario end to end and writes its artifacts under
/// `out_dir/<scenario id>/`.
pub fn run_scenario(config: ScenarioConfig, out_dir: &Path, overrides: &Overrides) -> Result<RunArtifacts, PipelineError> {
    let config = overrides.apply(config)?;
    let hash = config.hash();
    let seed = config.seed;
    let options = MatchOptions {
        delta: config.matching.delta,
        unique: config.matching.unique,
    };
    let warn = config.matching.angular_warn_deg.to_radians();
    let config_text = config.to_toml_string();
    let world = World::build(config)?;
    let run = world.execute(seed, &options)?;

    let dir = out_dir.join(&world.config.id);
    fs::create_dir_all(&dir).map_err(|source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let manifest = Manifest::from_run(&run, &hash, options.delta, options.unique, warn);
    let summary = manifest.report();
    let artifacts = RunArtifacts {
        scenario_id: world.config.id.clone(),
        seed,
        config_hash: hash,
        config: dir.join("config.toml"),
        day_log: dir.join("day_run.jsonl"),
        night_log: dir.join("night_run.jsonl"),
        desired_trajectory: dir.join("desired_trajectory.txt"),
        day_trajectory: dir.join("day_trajectory.txt"),
        night_trajectory: dir.join("night_trajectory.txt"),
        manifest: dir.join("pairs.jsonl"),
        report: dir.join("report.txt"),
        report_json: dir.join("report.json"),
        dir,
        summary,
    };
    write_atomic(&artifacts.config, config_text.as_bytes())?;
    write_atomic(&artifacts.day_log, &jsonl(&run.day.log))?;
    write_atomic(&artifacts.night_log, &jsonl(&run.night.log))?;
    write_atomic(&artifacts.desired_trajectory, &trajectory_text(&world.desired))?;
    write_atomic(&artifacts.day_trajectory, &trajectory_text(&run.day.realized))?;
    write_atomic(&artifacts.night_trajectory, &trajectory_text(&run.night.realized))?;
    write_atomic(&artifacts.manifest, manifest.to_text().as_bytes())?;
    write_atomic(&artifacts.report, manifest.report_text().as_bytes())?;
    let mut json = serde_json::to_vec_pretty(&ReportFile {
        header: &manifest.header,
        report: &artifacts.summary,
    })
    .expect("report serializes");
    json.push(b'\n');
    write_atomic(&artifacts.report_json, &json)?;
    info!(dir = %artifacts.dir.display(), "artifacts written");
    Ok(artifacts)
}

/// Layout of `report.json`.
#[derive(Serialize)]
pub struct ReportFile<'a> {
    pub header: &'a super::manifest::ManifestHeader,
    pub report: &'a AlignmentReport,
}

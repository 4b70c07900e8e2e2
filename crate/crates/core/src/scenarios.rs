//! Scenarios shipped with the crate.

use crate::config::{ConfigError, ScenarioConfig};

pub const STRAIGHT_ROAD: &str = include_str!("../scenarios/straight-road.toml");
pub const CURVED_COURSE: &str = include_str!("../scenarios/curved-course.toml");

/// Bundled scenario ids with their TOML text.
pub const BUNDLED: [(&str, &str); 2] = [("straight-road", STRAIGHT_ROAD), ("curved-course", CURVED_COURSE)];

pub fn bundled(id: &str) -> Option<Result<ScenarioConfig, ConfigError>> {
    BUNDLED
        .iter()
        .find(|(name, _)| *name == id)
        .map(|(_, text)| ScenarioConfig::from_toml_str(text))
}

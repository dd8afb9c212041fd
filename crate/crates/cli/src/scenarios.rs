//! Scenarios shipped with the binary.

use crate::config::{Scenario, ScenarioConfig};
use crate::error::{CliError, CliResult};

pub const BUNDLED: [(&str, &str); 8] = [
    ("refex", include_str!("../scenarios/refex.json")),
    ("lamex", include_str!("../scenarios/lamex.json")),
    ("s3ex", include_str!("../scenarios/s3ex.json")),
    ("s3ex2", include_str!("../scenarios/s3ex2.json")),
    ("hor2ex", include_str!("../scenarios/hor2ex.json")),
    ("poin1ex", include_str!("../scenarios/poin1ex.json")),
    ("poin2ex", include_str!("../scenarios/poin2ex.json")),
    ("counterprop1", include_str!("../scenarios/counterprop1.json")),
];

pub fn bundled_config(name: &str) -> CliResult<ScenarioConfig> {
    let (_, text) = BUNDLED.iter().find(|(n, _)| *n == name).ok_or_else(|| CliError::UnknownScenario(name.to_string()))?;
    ScenarioConfig::from_json(name, text)
}

pub fn bundled(name: &str) -> CliResult<Scenario> {
    bundled_config(name)?.validate(name)
}

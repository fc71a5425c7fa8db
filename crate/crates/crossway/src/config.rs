//! Scenario configuration files (TOML) and their validation.

use crate::sim::ScenarioSpec;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config {path}: {message}")]
    Invalid { path: String, message: String },
}

/// Load and validate a scenario description.
pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, ConfigError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: display.clone(), source })?;
    let spec: ScenarioSpec = toml::from_str(&text)
        .map_err(|source| ConfigError::Parse { path: display.clone(), source: Box::new(source) })?;
    validate(&spec).map_err(|message| ConfigError::Invalid { path: display, message })?;
    Ok(spec)
}

pub fn validate(spec: &ScenarioSpec) -> Result<(), String> {
    if spec.agents.is_empty() {
        return Err("at least one agent is required".into());
    }
    if spec.sim.dt <= 0.0 {
        return Err("sim.dt must be positive".into());
    }
    let ratio = spec.sim.subgame_period / spec.sim.dt;
    if (ratio - ratio.round()).abs() > 1e-6 || ratio < 1.0 {
        return Err("sim.subgame_period must be a positive multiple of sim.dt".into());
    }
    for (i, a) in spec.agents.iter().enumerate() {
        if a.v0 < 0.0 {
            return Err(format!("agent {i}: v0 must be non-negative"));
        }
        let s = a.profile.sigma;
        if !(0.0..=1.0).contains(&s) || (a.profile.sigma + a.profile.delta - 1.0).abs() > 1e-9 {
            return Err(format!("agent {i}: profile weightings must satisfy sigma + delta = 1"));
        }
        if let crate::sim::Start::ConflictDistance(_) = a.start {
            if spec.agents.len() != 2 {
                return Err("conflict-distance starts require exactly two agents".into());
            }
        }
    }
    if spec.layout.lane_width <= 0.0 {
        return Err("layout.lane_width must be positive".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const BASELINE: &str = r#"
seed = 42

[layout]
lane_width = 3.5

[sim]
subgame_period = 0.5
dt = 0.001
stop_at_first_arrival = true

[[agents]]
arm = "south"
maneuver = "straight"
start = { conflict_distance = 60.0 }
v0 = 11.11
a0 = 0.0
[agents.profile]
sigma = 0.6
delta = 0.4

[[agents]]
arm = "east"
maneuver = "straight"
start = { conflict_distance = 60.0 }
v0 = 11.11
a0 = 0.0
[agents.profile]
sigma = 0.5
delta = 0.5
"#;

    #[test]
    fn parses_baseline_config() {
        let mut f = tempfile_path("baseline");
        f.write_all(BASELINE.as_bytes()).unwrap();
        let spec = load_scenario(&f.path).unwrap();
        assert_eq!(spec.agents.len(), 2);
        assert_eq!(spec.agents[0].profile.sigma, 0.6);
        assert!(spec.sim.stop_at_first_arrival);
        assert_eq!(spec.seed, 42);
    }

    #[test]
    fn rejects_malformed_toml_with_position() {
        let mut f = tempfile_path("broken");
        f.write_all(b"[[agents]\narm = \"south\"").unwrap();
        let err = load_scenario(&f.path).unwrap_err();
        let msg = format!("{err:#}");
        assert!(matches!(err, ConfigError::Parse { .. }), "unexpected error: {msg}");
    }

    #[test]
    fn rejects_bad_weightings() {
        let mut text = BASELINE.replace("sigma = 0.6", "sigma = 0.9");
        text = text.replacen("delta = 0.4", "delta = 0.4", 1);
        let mut f = tempfile_path("weights");
        f.write_all(text.as_bytes()).unwrap();
        let err = load_scenario(&f.path).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { .. }));
    }

    struct TempFile {
        path: std::path::PathBuf,
        file: std::fs::File,
    }

    impl Write for TempFile {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.file.write(buf)
        }
        fn flush(&mut self) -> std::io::Result<()> {
            self.file.flush()
        }
    }

    impl Drop for TempFile {
        fn drop(&mut self) {
            let _ = std::fs::remove_file(&self.path);
        }
    }

    fn tempfile_path(tag: &str) -> TempFile {
        let path = std::env::temp_dir().join(format!("crossway-config-{tag}-{}.toml", std::process::id()));
        let file = std::fs::File::create(&path).unwrap();
        TempFile { path, file }
    }
}

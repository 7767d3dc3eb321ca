//! Run configuration: one TOML file tying together the component data, the
//! scenario table and every tunable section, plus loaders for standalone
//! design files.
//!
//! All sections are optional and default to the shipped configuration, so a
//! minimal run config only names the data files. Relative paths are resolved
//! against the directory of the config file itself, which keeps run configs
//! relocatable. Loaders hash every file they read so a run manifest can pin
//! the exact inputs.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::economics::EconParams;
use crate::evolution::{DesignBounds, ESConfig};
use crate::flowsheet::{FlowsheetConfig, TrainDesign};
use crate::localsearch::SearchConfig;
use crate::scenarios::{ScenarioError, ScenarioSet};
use crate::thermo::{ComponentSet, ThermoError};

#[derive(Debug)]
pub enum ConfigError {
    Io { path: PathBuf, message: String },
    Parse { path: PathBuf, message: String },
    Invalid(String),
    Components(ThermoError),
    Scenarios(ScenarioError),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => {
                write!(f, "cannot read {}: {message}", path.display())
            }
            ConfigError::Parse { path, message } => {
                write!(f, "cannot parse {}: {message}", path.display())
            }
            ConfigError::Invalid(m) => write!(f, "invalid configuration: {m}"),
            ConfigError::Components(e) => write!(f, "component data: {e}"),
            ConfigError::Scenarios(e) => write!(f, "scenario data: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<ThermoError> for ConfigError {
    fn from(e: ThermoError) -> Self {
        ConfigError::Components(e)
    }
}

impl From<ScenarioError> for ConfigError {
    fn from(e: ScenarioError) -> Self {
        ConfigError::Scenarios(e)
    }
}

/// Complete run configuration. Unknown keys are rejected so a typo cannot
/// silently fall back to a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Component data file, relative to the config file unless absolute.
    pub components: PathBuf,
    /// Scenario table, relative to the config file unless absolute.
    pub scenarios: PathBuf,
    pub flowsheet: FlowsheetConfig,
    pub economics: EconParams,
    pub search: SearchConfig,
    pub es: ESConfig,
    pub bounds: DesignBounds,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            components: PathBuf::from("components.toml"),
            scenarios: PathBuf::from("scenarios.toml"),
            flowsheet: FlowsheetConfig::default(),
            economics: EconParams::default(),
            search: SearchConfig::default(),
            es: ESConfig::default(),
            bounds: DesignBounds::default(),
        }
    }
}

/// SHA-256 of one input file, recorded in the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub path: String,
    pub sha256: String,
}

/// A parsed and validated run configuration together with the checksums of
/// every file that went into it.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub run: RunConfig,
    pub sources: Vec<FileChecksum>,
}

pub fn file_sha256(path: &Path) -> Result<String, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn read_to_string(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        match base {
            Some(dir) => dir.join(p),
            None => p.to_path_buf(),
        }
    }
}

impl RunConfig {
    /// Cross-section validation; every section owns its own rules.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.flowsheet.validate().map_err(ConfigError::Invalid)?;
        self.economics.validate().map_err(ConfigError::Invalid)?;
        self.search.validate().map_err(ConfigError::Invalid)?;
        self.es.validate().map_err(ConfigError::Invalid)?;
        self.bounds.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    /// Parses `path`, resolves the data paths against its directory,
    /// validates everything and hashes all referenced files.
    pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
        let text = read_to_string(path)?;
        let mut run: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent();
        run.components = resolve(base, &run.components);
        run.scenarios = resolve(base, &run.scenarios);
        run.validate()?;
        let sources = vec![
            FileChecksum {
                path: path.display().to_string(),
                sha256: file_sha256(path)?,
            },
            FileChecksum {
                path: run.components.display().to_string(),
                sha256: file_sha256(&run.components)?,
            },
            FileChecksum {
                path: run.scenarios.display().to_string(),
                sha256: file_sha256(&run.scenarios)?,
            },
        ];
        Ok(LoadedConfig { run, sources })
    }

    /// Loads the component set and scenario table this config points at.
    pub fn load_data(&self) -> Result<(ComponentSet, ScenarioSet), ConfigError> {
        let cs = ComponentSet::load(&self.components)?;
        let scenarios = ScenarioSet::load(&self.scenarios, &cs)?;
        Ok((cs, scenarios))
    }
}

/// Loads a standalone train design (used by the evaluate and simulate
/// subcommands and for the fixed reference designs).
pub fn load_design(path: &Path) -> Result<TrainDesign, ConfigError> {
    let text = read_to_string(path)?;
    let design: TrainDesign = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for (i, col) in design.columns.iter().enumerate() {
        if col.n_stages < 3 {
            return Err(ConfigError::Invalid(format!(
                "column {}: {} stages is below the minimum of 3",
                i + 1,
                col.n_stages
            )));
        }
        if col.feed_stage < 1 || col.feed_stage > col.n_stages {
            return Err(ConfigError::Invalid(format!(
                "column {}: feed stage {} outside 1..={}",
                i + 1,
                col.feed_stage,
                col.n_stages
            )));
        }
        if !(col.diameter > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "column {}: diameter must be positive",
                i + 1
            )));
        }
    }
    for (i, p) in design.pressures.iter().enumerate() {
        if !(*p > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "column {}: pressure must be positive",
                i + 1
            )));
        }
    }
    Ok(design)
}

/// Fixture loaders shared by the test suites. They resolve the shipped data
/// files relative to this crate so tests run from any working directory.
pub mod test_support {
    use super::*;
    use crate::column::ColumnDesign;

    pub fn config_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config")
    }

    pub fn component_set() -> ComponentSet {
        ComponentSet::load(&config_dir().join("components.toml"))
            .expect("shipped component data must load")
    }

    pub fn scenario_set(cs: &ComponentSet) -> ScenarioSet {
        ScenarioSet::load(&config_dir().join("scenarios.toml"), cs)
            .expect("shipped scenario table must load")
    }

    pub fn test_config() -> FlowsheetConfig {
        FlowsheetConfig::default()
    }

    /// The conservative reference design used as the optimization baseline:
    /// generously sized columns at one fixed operating philosophy.
    pub fn robust_design(cfg: &FlowsheetConfig) -> TrainDesign {
        TrainDesign {
            columns: [
                ColumnDesign {
                    n_stages: 40,
                    feed_stage: 20,
                    diameter: 1.0,
                },
                ColumnDesign {
                    n_stages: 25,
                    feed_stage: 15,
                    diameter: 0.7,
                },
                ColumnDesign {
                    n_stages: 60,
                    feed_stage: 30,
                    diameter: 1.0,
                },
            ],
            pressures: cfg.pressures,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn shipped_default_config_loads_and_validates() {
        let path = test_support::config_dir().join("default.toml");
        let loaded = RunConfig::load(&path).expect("default config must load");
        assert_eq!(loaded.sources.len(), 3);
        for src in &loaded.sources {
            assert_eq!(src.sha256.len(), 64);
        }
        assert_eq!(loaded.run.es.mu, 10);
        assert_eq!(loaded.run.es.lambda, 40);
        let (cs, scen) = loaded.run.load_data().unwrap();
        assert_eq!(cs.len(), 10);
        assert_eq!(scen.len(), 7);
    }

    #[test]
    fn shipped_robust_design_file_matches_the_fixture() {
        let path = test_support::config_dir().join("robust_design.toml");
        let design = load_design(&path).unwrap();
        assert_eq!(
            design,
            test_support::robust_design(&FlowsheetConfig::default())
        );
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new()
            .suffix(".toml")
            .tempfile()
            .unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = write_temp("components = \"c.toml\"\nscnearios = \"s.toml\"\n");
        let err = RunConfig::load(f.path()).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }), "got {err}");
    }

    #[test]
    fn invalid_section_values_are_rejected() {
        let f = write_temp("[es]\nmu = 0\n");
        let err = RunConfig::load(f.path()).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "got {err}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = RunConfig::load(Path::new("/nonexistent/run.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
    }

    #[test]
    fn malformed_design_files_are_rejected() {
        let bad_feed = write_temp(
            "pressures = [5.0, 30.0, 20.0]\n\
             [[columns]]\nn_stages = 10\nfeed_stage = 11\ndiameter = 1.0\n\
             [[columns]]\nn_stages = 10\nfeed_stage = 5\ndiameter = 1.0\n\
             [[columns]]\nn_stages = 10\nfeed_stage = 5\ndiameter = 1.0\n",
        );
        let err = load_design(bad_feed.path()).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)), "got {err}");
    }
}

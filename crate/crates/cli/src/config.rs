use std::path::{Path, PathBuf};

use jones_core::toric::{Backend, GeometryConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the directory searched for geometry files.
pub const GEOMETRY_DIR_ENV: &str = "JONES_GEOMETRY_DIR";

/// File looked up in the geometry directory when no `--geometry` is given.
pub const DEFAULT_GEOMETRY_FILE: &str = "default.toml";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Records,
    Csv,
}

/// Half-open `a..b` or closed `a..=b` range of patch sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRange {
    pub start: usize,
    /// Exclusive end.
    pub end: usize,
}

impl SizeRange {
    pub fn values(&self) -> impl Iterator<Item = usize> {
        self.start..self.end
    }
}

impl std::str::FromStr for SizeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("{s:?} is not a range like 1..=3, 1..4 or 2");
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        if let Some((a, b)) = s.split_once("..=") {
            Ok(Self {
                start: parse(a)?,
                end: parse(b)? + 1,
            })
        } else if let Some((a, b)) = s.split_once("..") {
            Ok(Self {
                start: parse(a)?,
                end: parse(b)?,
            })
        } else {
            let n = parse(s)?;
            Ok(Self { start: n, end: n + 1 })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    Entropy {
        inputs: Vec<PathBuf>,
    },
    Index {
        blocks: usize,
        block_dim: usize,
        tensor_square: bool,
    },
    Toric {
        n: usize,
        backend: Backend,
        dump_ensemble: Option<PathBuf>,
    },
    Sweep {
        sizes: SizeRange,
        backends: Vec<Backend>,
    },
    Privacy {
        block_dim: usize,
        bob: Vec<usize>,
        eve: Vec<usize>,
    },
}

/// Everything needed to reproduce a run. Echoed into every report record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub command: Command,
    /// Resolved geometry file; `None` means the built-in default.
    pub geometry: Option<PathBuf>,
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    /// Checks the invariants: referenced inputs exist and the tolerance is positive.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(CliError::Input(format!("tolerance must be positive, got {}", self.tol)));
        }
        if let Some(g) = &self.geometry {
            if !g.is_file() {
                return Err(CliError::Input(format!("geometry file {} does not exist", g.display())));
            }
        }
        if let Command::Entropy { inputs } = &self.command {
            if inputs.is_empty() {
                return Err(CliError::Input("entropy needs at least one state file".into()));
            }
            if let Some(missing) = inputs.iter().find(|p| !p.is_file()) {
                return Err(CliError::Input(format!("state file {} does not exist", missing.display())));
            }
        }
        Ok(())
    }

    pub fn load_geometry(&self) -> Result<GeometryConfig, CliError> {
        match &self.geometry {
            None => Ok(GeometryConfig::default_geometry()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
                Ok(GeometryConfig::parse(&text)?)
            }
        }
    }
}

/// Finds the geometry file: an existing path is used as is, otherwise it is
/// looked up in the geometry directory. Without a request, the directory's
/// `default.toml` is used when present.
pub fn resolve_geometry(requested: Option<&Path>, dir: Option<&Path>) -> Result<Option<PathBuf>, CliError> {
    match requested {
        Some(p) if p.is_file() => Ok(Some(p.to_path_buf())),
        Some(p) => match dir.map(|d| d.join(p)).filter(|c| c.is_file()) {
            Some(found) => Ok(Some(found)),
            None => Err(CliError::Input(format!(
                "geometry file {} not found (also searched {})",
                p.display(),
                dir.map_or("no geometry directory".to_string(), |d| d.display().to_string())
            ))),
        },
        None => Ok(dir.map(|d| d.join(DEFAULT_GEOMETRY_FILE)).filter(|c| c.is_file())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r: SizeRange = "1..=3".parse().unwrap();
        assert_eq!(r.values().collect::<Vec<_>>(), [1, 2, 3]);
        let r: SizeRange = "1..3".parse().unwrap();
        assert_eq!(r.values().count(), 2);
        let r: SizeRange = "2..2".parse().unwrap();
        assert_eq!(r.values().count(), 0);
        let r: SizeRange = "4".parse().unwrap();
        assert_eq!(r.values().collect::<Vec<_>>(), [4]);
        assert!("a..b".parse::<SizeRange>().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig {
            command: Command::Sweep {
                sizes: "1..=3".parse().unwrap(),
                backends: vec![Backend::Stabilizer, Backend::Dense],
            },
            geometry: None,
            seed: 7,
            trials: 10,
            tol: 1e-6,
            out: None,
            format: OutputFormat::Csv,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn nonpositive_tolerance_is_rejected() {
        let cfg = ExperimentConfig {
            command: Command::Index {
                blocks: 4,
                block_dim: 2,
                tensor_square: false,
            },
            geometry: None,
            seed: 0,
            trials: 1,
            tol: 0.0,
            out: None,
            format: OutputFormat::Records,
        };
        assert!(cfg.validate().is_err());
    }
}

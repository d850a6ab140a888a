use std::fmt;
use std::path::{Path, PathBuf};

use rwrange_core::capacity::CapacityConfig;
use rwrange_core::lattice::{MAX_DIM, MIN_DIM};
use rwrange_core::stats::{validate_grid, MIN_CLT_SAMPLES, MIN_TAIL_SAMPLES, MIN_VARIANCE_SAMPLES};
use rwrange_core::{ObservableKind, ResistanceSolveConfig};
use serde::{Deserialize, Serialize};

pub const OUTPUT_ENV: &str = "RWRANGE_OUT";
pub const DEFAULT_OUTPUT_DIR: &str = "rwrange-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Tails,
    Variance,
    Clt,
    Decompose,
    Capacity,
    OracleCheck,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Tails => "tails",
            Command::Variance => "variance",
            Command::Clt => "clt",
            Command::Decompose => "decompose",
            Command::Capacity => "capacity",
            Command::OracleCheck => "oracle-check",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A rejected configuration value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError { field, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_kind")]
    pub kind: ObservableKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `None` uses every available core. Outputs do not
    /// depend on this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub solver: ResistanceSolveConfig,
    /// Tail fit window `[l_min, l_max]`; defaults to `[n^0.3, n^0.8]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_window: Option<[f64; 2]>,
    #[serde(default = "default_levels")]
    pub levels: u32,
    #[serde(default = "default_radius_factors")]
    pub radius_factors: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials_per_point: u32,
    #[serde(default = "default_jump_threshold", skip_serializing_if = "Option::is_none")]
    pub jump_threshold: Option<f64>,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// Streams per persisted chunk; the unit of resumption.
    #[serde(default = "default_chunk")]
    pub chunk: usize,
}

fn default_d() -> usize {
    7
}
fn default_kind() -> ObservableKind {
    ObservableKind::CutPoints
}
fn default_levels() -> u32 {
    4
}
fn default_radius_factors() -> Vec<f64> {
    vec![16.0, 64.0]
}
fn default_trials() -> u32 {
    CapacityConfig::default().trials_per_point
}
fn default_jump_threshold() -> Option<f64> {
    CapacityConfig::default().jump_threshold
}
fn default_max_n() -> usize {
    256
}
fn default_instances() -> usize {
    500
}
fn default_chunk() -> usize {
    1000
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            d: default_d(),
            kind: default_kind(),
            n: None,
            n_grid: None,
            samples: None,
            seed: 0,
            threads: None,
            output_dir: None,
            solver: ResistanceSolveConfig::default(),
            tail_window: None,
            levels: default_levels(),
            radius_factors: default_radius_factors(),
            trials_per_point: default_trials(),
            jump_threshold: default_jump_threshold(),
            max_n: default_max_n(),
            instances: default_instances(),
            chunk: default_chunk(),
        }
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| anyhow::anyhow!("cannot parse config {}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Output directory: the configured one, else `$RWRANGE_OUT`, else
    /// `rwrange-out` in the working directory.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// The configuration with fields that cannot change any output cleared.
    pub fn identity(&self) -> Self {
        Self { threads: None, output_dir: None, chunk: 0, ..self.clone() }
    }

    pub fn n_required(&self) -> Result<usize, ConfigError> {
        self.n.ok_or_else(|| bad("n", format!("required by `{}`", self.command)))
    }

    pub fn samples_required(&self) -> Result<usize, ConfigError> {
        self.samples.ok_or_else(|| bad("samples", format!("required by `{}`", self.command)))
    }

    pub fn grid_required(&self) -> Result<&[usize], ConfigError> {
        self.n_grid.as_deref().ok_or_else(|| bad("n_grid", format!("required by `{}`", self.command)))
    }

    pub fn window(&self) -> Result<(f64, f64), ConfigError> {
        let n = self.n_required()? as f64;
        Ok(match self.tail_window {
            Some([lo, hi]) => (lo, hi),
            None => (n.powf(0.3), n.powf(0.8)),
        })
    }

    pub fn capacity_config(&self, radius_factor: f64, seed: u64) -> CapacityConfig {
        CapacityConfig {
            radius_factor,
            trials_per_point: self.trials_per_point,
            seed,
            jump_threshold: self.jump_threshold,
            ..CapacityConfig::default()
        }
    }

    /// Check every parameter the command uses before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(MIN_DIM..=MAX_DIM).contains(&self.d) {
            return Err(bad("d", format!("{} is outside {MIN_DIM}..={MAX_DIM}", self.d)));
        }
        if self.threads == Some(0) {
            return Err(bad("threads", "must be at least 1"));
        }
        if self.chunk == 0 {
            return Err(bad("chunk", "must be at least 1"));
        }
        self.solver.validate().map_err(|e| bad("solver", e.to_string()))?;
        let at_least = |field: &'static str, value: usize, min: usize| {
            if value < min {
                Err(bad(field, format!("{value} is below the minimum {min}")))
            } else {
                Ok(())
            }
        };
        match self.command {
            Command::Simulate => {
                self.n_required()?;
                at_least("samples", self.samples_required()?, 1)?;
            }
            Command::Tails => {
                at_least("n", self.n_required()?, 1)?;
                at_least("samples", self.samples_required()?, MIN_TAIL_SAMPLES)?;
                let (lo, hi) = self.window()?;
                if !(lo >= 1.0 && lo < hi && hi.is_finite()) {
                    return Err(bad("tail_window", format!("[{lo}, {hi}] must satisfy 1 <= l_min < l_max")));
                }
            }
            Command::Variance => {
                validate_grid(self.grid_required()?).map_err(|e| bad("n_grid", e.to_string()))?;
                at_least("samples", self.samples_required()?, MIN_VARIANCE_SAMPLES)?;
            }
            Command::Clt => {
                let n = self.n_required()?;
                at_least("n", n, 1)?;
                at_least("samples", self.samples_required()?, MIN_CLT_SAMPLES)?;
            }
            Command::Decompose => {
                let n = self.n_required()?;
                at_least("samples", self.samples_required()?, 1)?;
                if self.levels == 0 || self.levels >= usize::BITS || !n.is_multiple_of(1usize << self.levels) {
                    return Err(bad("levels", format!("n = {n} is not divisible by 2^{}", self.levels)));
                }
            }
            Command::Capacity => {
                at_least("n", self.n_required()?, 1)?;
                at_least("samples", self.samples_required()?, 1)?;
                if self.radius_factors.is_empty() {
                    return Err(bad("radius_factors", "at least one factor is required"));
                }
                for &f in &self.radius_factors {
                    self.capacity_config(f, 0).validate(self.d).map_err(|e| bad("radius_factors", e.to_string()))?;
                }
            }
            Command::OracleCheck => {
                at_least("max_n", self.max_n, 1)?;
                at_least("instances", self.instances, 1)?;
            }
        }
        Ok(())
    }
}

/// Parse `256..8192` (powers of two, inclusive) or `256,512,1024`.
pub fn parse_grid(text: &str) -> Result<Vec<usize>, String> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|e| format!("bad grid start {lo:?}: {e}"))?;
        let hi: usize = hi.trim().parse().map_err(|e| format!("bad grid end {hi:?}: {e}"))?;
        if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
            return Err(format!("grid range {text:?} needs powers of two with start <= end"));
        }
        Ok(std::iter::successors(Some(lo), |&n| (n < hi).then(|| n * 2)).collect())
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad grid value {s:?}: {e}")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("256..2048").unwrap(), vec![256, 512, 1024, 2048]);
        assert_eq!(parse_grid("8, 16").unwrap(), vec![8, 16]);
        assert!(parse_grid("300..2048").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let text = r#"{"command":"variance","d":5,"n_grid":[256,512],"samples":600,"solver":{"rel_tolerance":1e-9}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let once = cfg.to_json();
        let twice = ExperimentConfig::from_json(&once).unwrap().to_json();
        assert_eq!(once, twice);
        assert_eq!(cfg.solver.rel_tolerance, 1e-9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"command":"tails","samplez":5}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command":"tails","solver":{"tol":1}}"#).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = ExperimentConfig::new(Command::Tails);
        assert_eq!(cfg.validate().unwrap_err().field, "n");
        cfg.n = Some(2048);
        cfg.samples = Some(10);
        assert_eq!(cfg.validate().unwrap_err().field, "samples");
        cfg.samples = Some(20_000);
        cfg.validate().unwrap();
        cfg.d = 9;
        assert_eq!(cfg.validate().unwrap_err().field, "d");

        let mut dec = ExperimentConfig::new(Command::Decompose);
        dec.n = Some(100);
        dec.samples = Some(5);
        assert_eq!(dec.validate().unwrap_err().field, "levels");

        let mut cap = ExperimentConfig::new(Command::Capacity);
        cap.d = 4;
        cap.n = Some(100);
        cap.samples = Some(1);
        cap.radius_factors = vec![2.0];
        assert_eq!(cap.validate().unwrap_err().field, "radius_factors");
    }
}

//! Run configuration: defaults, `key = value` config files and flags.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::Serialize;
use weakmeas::bench::NoiseModel;
use weakmeas::sweep::Estimation;
use weakmeas::WeakMeasurement;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{field} must be in {range}, got {value}")]
    OutOfRange {
        field: String,
        range: &'static str,
        value: String,
    },

    #[error("{field}: cannot parse {value:?}")]
    Malformed { field: String, value: String },

    #[error("config file line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },

    #[error("config file line {line}: expected `key = value`")]
    Syntax { line: usize },

    #[error("cannot read config file {path}: {reason}")]
    Unreadable { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub epsilon: f64,
    pub eta: f64,
    pub photons_per_setting: u64,
    pub counts_per_basis: u64,
    pub seed: u64,
    pub pbs_leakage: f64,
    pub detector_efficiency: f64,
    pub grid_size: usize,
    pub exact_mode: bool,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub mutate_reversal: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.25,
            eta: 0.75,
            photons_per_setting: 100_000,
            counts_per_basis: 10_000,
            seed: 42,
            pbs_leakage: 0.0,
            detector_efficiency: 1.0,
            grid_size: 16,
            exact_mode: false,
            output_path: None,
            output_format: OutputFormat::Csv,
            mutate_reversal: false,
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Plain-text `key = value` file with defaults for the flags below.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// First-outcome weight on |H⟩, in [0, 1].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,

    /// First-outcome weight on |V⟩, in [0, 1].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eta: Option<f64>,

    #[arg(long, global = true, value_name = "N")]
    pub photons_per_setting: Option<u64>,

    /// Detected photons per tomography basis (at least 100).
    #[arg(long, global = true, value_name = "N")]
    pub counts_per_basis: Option<u64>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Probability that a PBS routes a photon to the wrong arm, in [0, 0.01].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub pbs_leakage: Option<f64>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub detector_efficiency: Option<f64>,

    /// Points per axis of the ε×η grid.
    #[arg(long, global = true, value_name = "N")]
    pub grid_size: Option<usize>,

    /// Replace all photon sampling by expected counts.
    #[arg(long, global = true, value_name = "BOOL", action = clap::ArgAction::Set)]
    pub exact_mode: Option<bool>,

    /// Output file; standard output when omitted.
    #[arg(long, visible_alias = "output-path", global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub output_format: Option<OutputFormat>,

    #[arg(long, global = true, hide = true)]
    pub mutate_reversal: bool,
}

fn parse_value<T: FromStr>(field: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Malformed {
        field: field.to_string(),
        value: value.to_string(),
    })
}

fn parse_bool(field: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(ConfigError::Malformed {
            field: field.to_string(),
            value: value.to_string(),
        }),
    }
}

impl RunConfig {
    /// Applies the contents of a config file on top of `self`.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            match key {
                "epsilon" => self.epsilon = parse_value(key, value)?,
                "eta" => self.eta = parse_value(key, value)?,
                "photons_per_setting" => self.photons_per_setting = parse_value(key, value)?,
                "counts_per_basis" => self.counts_per_basis = parse_value(key, value)?,
                "seed" => self.seed = parse_value(key, value)?,
                "pbs_leakage" => self.pbs_leakage = parse_value(key, value)?,
                "detector_efficiency" => self.detector_efficiency = parse_value(key, value)?,
                "grid_size" => self.grid_size = parse_value(key, value)?,
                "exact_mode" => self.exact_mode = parse_bool(key, value)?,
                "output_path" => self.output_path = Some(PathBuf::from(value)),
                "output_format" => self.output_format = parse_value(key, value)?,
                "mutate_reversal" => self.mutate_reversal = parse_bool(key, value)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: i + 1,
                        key: key.to_string(),
                    })
                }
            }
        }
        Ok(())
    }

    fn apply_flags(&mut self, f: &Flags) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = f.$field { self.$field = v; })*
            };
        }
        take!(epsilon, eta, photons_per_setting, counts_per_basis, seed, pbs_leakage,
              detector_efficiency, grid_size, exact_mode, output_format);
        if let Some(p) = &f.output {
            self.output_path = Some(p.clone());
        }
        self.mutate_reversal |= f.mutate_reversal;
    }

    /// Defaults, then the config file named by `--config`, then flags.
    pub fn resolve(flags: &Flags) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        if let Some(path) = &flags.config {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
            config.apply_file(&text)?;
        }
        config.apply_flags(flags);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, field: &str, range: &'static str, value: impl ToString) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    field: field.to_string(),
                    range,
                    value: value.to_string(),
                })
            }
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        check(unit(self.epsilon), "epsilon", "[0, 1]", self.epsilon)?;
        check(unit(self.eta), "eta", "[0, 1]", self.eta)?;
        check(self.photons_per_setting >= 1, "photons_per_setting", "[1, ∞)", self.photons_per_setting)?;
        check(self.counts_per_basis >= 100, "counts_per_basis", "[100, ∞)", self.counts_per_basis)?;
        check((0.0..=0.01).contains(&self.pbs_leakage), "pbs_leakage", "[0, 0.01]", self.pbs_leakage)?;
        check(
            self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0,
            "detector_efficiency",
            "(0, 1]",
            self.detector_efficiency,
        )?;
        check(self.grid_size >= 2, "grid_size", "[2, ∞)", self.grid_size)
    }

    pub fn instrument(&self) -> WeakMeasurement {
        WeakMeasurement::new(self.epsilon, self.eta).expect("validated")
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel::new(self.pbs_leakage, self.detector_efficiency).expect("validated")
    }

    pub fn estimation(&self) -> Estimation {
        if self.exact_mode {
            Estimation::Exact
        } else {
            Estimation::Sampled
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::default();
        c.apply_file("# bench\nseed = 7\ngrid_size = 4  # coarse\n\nexact_mode = true\n").unwrap();
        assert_eq!((c.seed, c.grid_size, c.exact_mode), (7, 4, true));
        c.apply_flags(&Flags {
            seed: Some(9),
            ..Flags::default()
        });
        assert_eq!((c.seed, c.grid_size), (9, 4));
    }

    #[test]
    fn file_errors_name_the_problem() {
        let mut c = RunConfig::default();
        assert_eq!(
            c.apply_file("seed = 1\nsede = 2").unwrap_err(),
            ConfigError::UnknownKey { line: 2, key: "sede".into() }
        );
        let e = c.apply_file("epsilon = abc").unwrap_err();
        assert!(e.to_string().contains("epsilon"));
        assert!(matches!(c.apply_file("seed 4"), Err(ConfigError::Syntax { line: 1 })));
        assert!(c.apply_file("output_format = xml").is_err());
    }

    #[test]
    fn ranges() {
        let bad = [
            RunConfig { epsilon: 1.5, ..RunConfig::default() },
            RunConfig { eta: -0.1, ..RunConfig::default() },
            RunConfig { eta: f64::NAN, ..RunConfig::default() },
            RunConfig { photons_per_setting: 0, ..RunConfig::default() },
            RunConfig { counts_per_basis: 99, ..RunConfig::default() },
            RunConfig { pbs_leakage: 0.02, ..RunConfig::default() },
            RunConfig { detector_efficiency: 0.0, ..RunConfig::default() },
            RunConfig { grid_size: 1, ..RunConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let msg = RunConfig { epsilon: 1.5, ..RunConfig::default() }.validate().unwrap_err().to_string();
        assert_eq!(msg, "epsilon must be in [0, 1], got 1.5");
        assert!(RunConfig::default().validate().is_ok());
    }
}

//! Flat `key = value` experiment configs.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are errors.
//! See the README for the full key list.

use flash_device_model::DisturbParams;
use puf_extraction::{ExperimentConfig, Technique};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

/// A full run description: which chip to build and which experiment to run
/// on it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chip_seed: u64,
    pub blocks: u32,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chip_seed: 1,
            blocks: 1024,
            experiment: ExperimentConfig::for_technique(Technique::SamePage),
        }
    }
}

impl RunConfig {
    /// The disturb parameters this run will actually use.
    pub fn resolved_params(&self) -> DisturbParams {
        self.experiment.params.unwrap_or_default()
    }
}

pub(crate) fn split_pairs(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError { line, message: format!("expected key = value, got {content:?}") });
        };
        pairs.push((line, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_value<T: std::str::FromStr>(
    line: usize,
    key: &str,
    value: &str,
) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError {
        line,
        message: format!("bad value {value:?} for {key}"),
    })
}

pub(crate) fn parse_pattern(line: usize, value: &str) -> Result<u8, ConfigError> {
    let parsed = if let Some(hex) = value.strip_prefix("0x").or_else(|| value.strip_prefix("0X")) {
        u8::from_str_radix(hex, 16).ok()
    } else {
        value.parse().ok()
    };
    parsed.ok_or_else(|| ConfigError {
        line,
        message: format!("bad value {value:?} for pattern (use 0xAA or 0..=255)"),
    })
}

/// Apply one key to a config under construction. Returns false when the key
/// is not a config key (manifests layer extra keys on top).
pub(crate) fn apply_key(
    config: &mut RunConfig,
    line: usize,
    key: &str,
    value: &str,
) -> Result<bool, ConfigError> {
    match key {
        "technique" => {
            let technique: Technique = value.parse().map_err(|_| ConfigError {
                line,
                message: format!("unknown technique {value:?}"),
            })?;
            // Re-derive technique-dependent defaults for keys not yet seen.
            let old = config.experiment.clone();
            let mut fresh = ExperimentConfig::for_technique(technique);
            fresh.block = old.block;
            fresh.target_page = old.target_page;
            fresh.pattern = old.pattern;
            fresh.iterations = old.iterations;
            fresh.pre_program_all = old.pre_program_all;
            fresh.experiment_seed = old.experiment_seed;
            fresh.params = old.params;
            config.experiment = fresh;
        }
        "block" => config.experiment.block = parse_value(line, key, value)?,
        "target_page" => config.experiment.target_page = parse_value(line, key, value)?,
        "pattern" => config.experiment.pattern = parse_pattern(line, value)?,
        "iterations" => config.experiment.iterations = parse_value(line, key, value)?,
        "check_interval" => config.experiment.check_interval = parse_value(line, key, value)?,
        "pre_program_all" => config.experiment.pre_program_all = parse_value(line, key, value)?,
        "experiment_seed" => config.experiment.experiment_seed = parse_value(line, key, value)?,
        "chip_seed" => config.chip_seed = parse_value(line, key, value)?,
        "blocks" => config.blocks = parse_value(line, key, value)?,
        _ => {
            if let Some(field) = key.strip_prefix("params.") {
                let params = config.experiment.params.get_or_insert_with(DisturbParams::default);
                let slot = match field {
                    "intra_scale" => &mut params.intra_scale,
                    "intra_rate" => &mut params.intra_rate,
                    "pair_scale" => &mut params.pair_scale,
                    "pair_rate" => &mut params.pair_rate,
                    "sigma" => &mut params.sigma,
                    "read_disturb_median" => &mut params.read_disturb_median,
                    "latency_base_us" => &mut params.latency_base_us,
                    "latency_spread" => &mut params.latency_spread,
                    other => {
                        return Err(ConfigError {
                            line,
                            message: format!("unknown parameter key params.{other}"),
                        })
                    }
                };
                *slot = parse_value(line, key, value)?;
            } else {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Parse a config file. The `technique` line may appear anywhere; keys not
/// present keep their technique defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let pairs = split_pairs(text)?;
    let mut config = RunConfig::default();
    // Apply the technique first so its defaults never clobber explicit keys.
    for (line, key, value) in pairs.iter().filter(|(_, k, _)| k == "technique") {
        apply_key(&mut config, *line, key, value)?;
    }
    for (line, key, value) in pairs.iter().filter(|(_, k, _)| k != "technique") {
        if !apply_key(&mut config, *line, key, value)? {
            return Err(ConfigError {
                line: *line,
                message: format!("unknown key {key:?}"),
            });
        }
    }
    Ok(config)
}

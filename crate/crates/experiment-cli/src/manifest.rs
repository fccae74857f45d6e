//! Run manifests: the one file that pins a run's outputs bit-for-bit.

use std::fmt::Write as _;

use crate::config_file::{apply_key, split_pairs, ConfigError, RunConfig};

/// Everything a run wrote and the exact configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: RunConfig, outputs: Vec<String>) -> Self {
        Self {
            tool: format!("nandpuf {}", env!("CARGO_PKG_VERSION")),
            config,
            outputs,
        }
    }

    /// Deterministic text rendering; rendering the parse of a manifest
    /// reproduces it byte for byte.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let e = &self.config.experiment;
        let p = self.config.resolved_params();
        let _ = writeln!(out, "tool = {}", self.tool);
        let _ = writeln!(out, "technique = {}", e.technique.name());
        let _ = writeln!(out, "block = {}", e.block);
        let _ = writeln!(out, "target_page = {}", e.target_page);
        let _ = writeln!(out, "pattern = {:#04X}", e.pattern);
        let _ = writeln!(out, "iterations = {}", e.iterations);
        let _ = writeln!(out, "check_interval = {}", e.check_interval);
        let _ = writeln!(out, "pre_program_all = {}", e.pre_program_all);
        let _ = writeln!(out, "chip_seeds = {}", self.config.chip_seed);
        let _ = writeln!(out, "experiment_seed = {}", e.experiment_seed);
        let _ = writeln!(out, "blocks = {}", self.config.blocks);
        let _ = writeln!(out, "params.intra_scale = {}", p.intra_scale);
        let _ = writeln!(out, "params.intra_rate = {}", p.intra_rate);
        let _ = writeln!(out, "params.pair_scale = {}", p.pair_scale);
        let _ = writeln!(out, "params.pair_rate = {}", p.pair_rate);
        let _ = writeln!(out, "params.sigma = {}", p.sigma);
        let _ = writeln!(out, "params.read_disturb_median = {}", p.read_disturb_median);
        let _ = writeln!(out, "params.latency_base_us = {}", p.latency_base_us);
        let _ = writeln!(out, "params.latency_spread = {}", p.latency_spread);
        let _ = writeln!(out, "outputs = {}", self.outputs.join(","));
        out
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut tool = String::new();
        let mut outputs = Vec::new();
        let mut config = RunConfig::default();
        let pairs = split_pairs(text)?;
        for (line, key, value) in pairs.iter().filter(|(_, k, _)| k == "technique") {
            apply_key(&mut config, *line, key, value)?;
        }
        for (line, key, value) in pairs.iter().filter(|(_, k, _)| k != "technique") {
            match key.as_str() {
                "tool" => tool = value.clone(),
                "outputs" => {
                    outputs = value
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.trim().to_string())
                        .collect();
                }
                "chip_seeds" => {
                    let seeds: Result<Vec<u64>, _> =
                        value.split(',').map(|s| s.trim().parse()).collect();
                    let seeds = seeds.map_err(|_| ConfigError {
                        line: *line,
                        message: format!("bad chip seed list {value:?}"),
                    })?;
                    match seeds.as_slice() {
                        [seed] => config.chip_seed = *seed,
                        other => {
                            return Err(ConfigError {
                                line: *line,
                                message: format!(
                                    "a run manifest names exactly one chip seed, got {}",
                                    other.len()
                                ),
                            })
                        }
                    }
                }
                _ => {
                    if !apply_key(&mut config, *line, key, value)? {
                        return Err(ConfigError {
                            line: *line,
                            message: format!("unknown manifest key {key:?}"),
                        });
                    }
                }
            }
        }
        Ok(Self { tool, config, outputs })
    }
}

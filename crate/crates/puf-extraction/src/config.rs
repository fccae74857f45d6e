use flash_device_model::DisturbParams;

use crate::signature::{Technique, NEVER};
use crate::ExtractError;

/// Everything needed to reproduce one extraction run over a device.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub technique: Technique,
    pub block: u32,
    pub target_page: u32,
    /// Byte written by the program-based techniques.
    pub pattern: u8,
    /// Aggressor cycles (programs or reads, by technique).
    pub iterations: u64,
    /// Cycles between victim checks.
    pub check_interval: u64,
    /// Write the pattern to every page of the block before hammering, and
    /// compare neighbours against the pattern instead of 0xFF.
    pub pre_program_all: bool,
    /// Seed for experiment-owned randomness (the read-disturb data images);
    /// independent of any chip seed so different chips can run the
    /// identical experiment.
    pub experiment_seed: u64,
    /// Parameter override for the simulated device, when one is built from
    /// this config.
    pub params: Option<DisturbParams>,
}

impl ExperimentConfig {
    /// Reference-procedure defaults: block 0, page 2, pattern 0xAA, ten
    /// thousand iterations, checks every cycle for program techniques and
    /// every thousand reads for read disturb.
    pub fn for_technique(technique: Technique) -> Self {
        Self {
            technique,
            block: 0,
            target_page: 2,
            pattern: 0xAA,
            iterations: 10_000,
            check_interval: match technique {
                Technique::ReadDisturb => 1_000,
                _ => 1,
            },
            pre_program_all: false,
            experiment_seed: 1,
            params: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExtractError> {
        if self.check_interval == 0 {
            return Err(ExtractError::ZeroCheckInterval);
        }
        if self.iterations >= u64::from(NEVER) {
            return Err(ExtractError::TooManyIterations(self.iterations));
        }
        Ok(())
    }
}

//! Extraction procedures that turn disturb physics into device signatures.
//!
//! Each procedure runs against anything implementing [`FlashDevice`]:
//! hammer a page (or reads of it), watch the victim bits deviate from
//! their expected image, and record the cycle of each bit's first
//! deviation. The never-flipping bits form the stable mask that serves as
//! the device fingerprint.

mod config;
mod device;
mod extract;
mod signature;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use device::FlashDevice;
pub use extract::{
    compare_bits, extract_adjacent, extract_multi_page_sweep, extract_program_latency,
    extract_read_disturb, extract_same_page, read_disturb_image, AdjacentSignatures,
    SweepSummary,
};
pub use signature::{Signature, StableBitMap, Technique, UnknownTechnique, NEVER};

pub use flash_device_model::{DeviceError, FlipEvent};

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("config is for {got:?}, procedure needs {expected:?}")]
    TechniqueMismatch { expected: Technique, got: Technique },
    #[error("target page {0} has no neighbour on both sides")]
    TargetAtBlockEdge(u32),
    #[error("iteration count {0} does not fit the 32-bit cycle records")]
    TooManyIterations(u64),
    #[error("check interval must be at least 1")]
    ZeroCheckInterval,
    #[error(transparent)]
    Device(#[from] DeviceError),
}

//! Behavioral model of a seeded SLC NAND chip.
//!
//! The array itself is simple — erase sets a block to all ones, programming
//! ANDs bytes in, reads return what is there — but each chip carries
//! process variation derived from its seed: per-cell disturb thresholds and
//! per-byte program-latency offsets. Hammering a page programs charge into
//! its own still-1 bits and into its pair partner (page XOR 1); reading a
//! page charges every other page of the block. A bit flips to 0 once its
//! accumulated charge reaches the cell's threshold, which is lognormal
//! around an exponentially page-dependent median (see
//! [`DisturbParams`]).
//!
//! Everything is deterministic: every random quantity comes from a
//! counter-based keyed generator, so two chips with equal seed, geometry
//! and parameters are indistinguishable under any operation sequence.

mod chip;
mod hammer;
mod math;
mod params;
pub mod rng;
mod snapshot;

pub use chip::{
    DeviceError, DisturbRole, FlashChip, FlipEvent, PageData, PAGE_BITS,
};
pub use math::{min_median_offset, normal_cdf, normal_quantile};
pub use params::{DisturbParams, ParamError};
pub use snapshot::SnapshotError;

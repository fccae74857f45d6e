//! Chip snapshot serialization: magic `FPUF1`, fixed little-endian layout.

use std::collections::BTreeMap;

use nand_protocol::{ChipGeometry, PAGES_PER_BLOCK, PAGE_TOTAL_BYTES};
use thiserror::Error;

use crate::chip::{BlockState, DeviceError, FlashChip};
use crate::params::DisturbParams;

const MAGIC: &[u8; 5] = b"FPUF1";
const VERSION: u16 = 1;
const WORDS_PER_PAGE: usize = PAGE_TOTAL_BYTES / 8;
const WORDS_PER_BLOCK: usize = WORDS_PER_PAGE * PAGES_PER_BLOCK as usize;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot is truncated at byte {0}")]
    Truncated(usize),
    #[error("bad magic, expected FPUF1")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u16),
    #[error("invalid geometry in snapshot: {0}")]
    BadGeometry(#[from] nand_protocol::GeometryError),
    #[error("invalid device state in snapshot: {0}")]
    BadDevice(#[from] DeviceError),
    #[error("block index {0} repeated or out of order")]
    BadBlockIndex(u32),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.pos + n > self.bytes.len() {
            return Err(SnapshotError::Truncated(self.pos));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, SnapshotError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl FlashChip {
    /// Serialize the full device state (cells and disturb accumulators; the
    /// threshold cache is derived data and not stored).
    pub fn to_snapshot(&self) -> Vec<u8> {
        let blocks = self.block_states();
        let mut out = Vec::with_capacity(64 + blocks.len() * (WORDS_PER_BLOCK * 8 + 1100));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let g = self.geometry();
        for v in [
            g.data_bytes_per_page(),
            g.spare_bytes_per_page(),
            g.pages_per_block(),
            g.blocks_per_chip(),
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.seed().to_le_bytes());
        let p = self.params();
        for v in [
            p.intra_scale,
            p.intra_rate,
            p.pair_scale,
            p.pair_rate,
            p.sigma,
            p.read_disturb_median,
            p.latency_base_us,
            p.latency_spread,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.latency_noise() as u8);
        out.extend_from_slice(&self.noise_counter().to_le_bytes());
        out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
        for (index, state) in blocks {
            out.extend_from_slice(&index.to_le_bytes());
            for word in &state.programmed {
                out.extend_from_slice(&word.to_le_bytes());
            }
            for count in &state.program_count {
                out.extend_from_slice(&count.to_le_bytes());
            }
            for count in &state.read_count {
                out.extend_from_slice(&count.to_le_bytes());
            }
        }
        out
    }

    /// Rebuild a chip from [`FlashChip::to_snapshot`] bytes.
    pub fn from_snapshot(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(5)? != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(SnapshotError::UnsupportedVersion(version));
        }
        let data = r.u32()?;
        let spare = r.u32()?;
        let pages = r.u32()?;
        let block_count = r.u32()?;
        let geometry = ChipGeometry::new(data, spare, pages, block_count)?;
        let seed = r.u64()?;
        let params = DisturbParams {
            intra_scale: r.f64()?,
            intra_rate: r.f64()?,
            pair_scale: r.f64()?,
            pair_rate: r.f64()?,
            sigma: r.f64()?,
            read_disturb_median: r.f64()?,
            latency_base_us: r.f64()?,
            latency_spread: r.f64()?,
        };
        let latency_noise = r.u8()? != 0;
        let noise_counter = r.u64()?;
        let stored_blocks = r.u32()?;
        let mut blocks = BTreeMap::new();
        let mut last_index = None;
        for _ in 0..stored_blocks {
            let index = r.u32()?;
            if last_index.is_some_and(|prev| index <= prev) {
                return Err(SnapshotError::BadBlockIndex(index));
            }
            last_index = Some(index);
            let mut programmed = vec![0u64; WORDS_PER_BLOCK];
            for word in programmed.iter_mut() {
                *word = r.u64()?;
            }
            let mut program_count = [0u64; 64];
            for count in program_count.iter_mut() {
                *count = r.u64()?;
            }
            let mut read_count = [0u64; 64];
            for count in read_count.iter_mut() {
                *count = r.u64()?;
            }
            let total_reads = read_count.iter().sum();
            blocks.insert(
                index,
                BlockState { programmed, program_count, read_count, total_reads },
            );
        }
        Ok(FlashChip::restore(
            seed,
            geometry,
            params,
            blocks,
            latency_noise,
            noise_counter,
        )?)
    }
}

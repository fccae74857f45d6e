use std::collections::{BTreeMap, HashMap};

use nand_protocol::{ChipGeometry, NandTarget, PAGES_PER_BLOCK, PAGE_TOTAL_BYTES};
use thiserror::Error;

use crate::math::min_median_offset;
use crate::params::{DisturbParams, ParamError};
use crate::rng::{keyed_normal, keyed_unit};

/// Bits in one page (2112 bytes x 8).
pub const PAGE_BITS: usize = PAGE_TOTAL_BYTES * 8;
const WORDS_PER_PAGE: usize = PAGE_TOTAL_BYTES / 8;

/// Reference victim-population sizes behind each median: the intra medians
/// describe a half-ones pattern (half the page accumulates), the pair and
/// read medians a fully erased page.
const INTRA_CALIBRATION_BITS: u64 = (PAGE_BITS / 2) as u64;
const PAIR_CALIBRATION_BITS: u64 = PAGE_BITS as u64;
const READ_CALIBRATION_BITS: u64 = PAGE_BITS as u64;

const ROLE_TAG_INTRA: u64 = 1;
const ROLE_TAG_PAIR: u64 = 2;
const ROLE_TAG_READ: u64 = 3;
const ROLE_TAG_LATENCY: u64 = 4;
const ROLE_TAG_NOISE: u64 = 5;

/// Which disturb mechanism a per-cell threshold belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DisturbRole {
    /// Charged when the cell's own page is programmed.
    Intra,
    /// Charged when the pair partner (page XOR 1) is programmed.
    Pair,
    /// Charged when another page of the block is read.
    Read,
}

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("block {block} out of range (chip has {blocks} blocks)")]
    BlockOutOfRange { block: u32, blocks: u32 },
    #[error("page {page} out of range (blocks hold {PAGES_PER_BLOCK} pages)")]
    PageOutOfRange { page: u32 },
    #[error("check interval must be at least 1")]
    ZeroCheckInterval,
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// One page worth of bytes (data area plus spare area).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageData(Box<[u8; PAGE_TOTAL_BYTES]>);

impl PageData {
    pub fn erased() -> Self {
        Self::filled(0xFF)
    }

    pub fn filled(byte: u8) -> Self {
        Self(Box::new([byte; PAGE_TOTAL_BYTES]))
    }

    pub fn from_fn(mut f: impl FnMut(usize) -> u8) -> Self {
        let mut bytes = Box::new([0u8; PAGE_TOTAL_BYTES]);
        for (i, b) in bytes.iter_mut().enumerate() {
            *b = f(i);
        }
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; PAGE_TOTAL_BYTES] {
        &self.0
    }

    pub fn as_mut_bytes(&mut self) -> &mut [u8; PAGE_TOTAL_BYTES] {
        &mut self.0
    }

    /// Bit `index` (0..PAGE_BITS), LSB first within each byte.
    pub fn bit(&self, index: usize) -> bool {
        (self.0[index / 8] >> (index % 8)) & 1 == 1
    }

    fn to_words(&self) -> Box<[u64; WORDS_PER_PAGE]> {
        let mut words = Box::new([0u64; WORDS_PER_PAGE]);
        for (w, chunk) in words.iter_mut().zip(self.0.chunks_exact(8)) {
            *w = u64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        }
        words
    }

    fn from_words(words: &[u64]) -> Self {
        let mut bytes = Box::new([0u8; PAGE_TOTAL_BYTES]);
        for (chunk, w) in bytes.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        Self(bytes)
    }
}

impl Default for PageData {
    fn default() -> Self {
        Self::erased()
    }
}

/// A 1 -> 0 transition observed while hammering, with the 1-based cycle of
/// the check that first saw it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipEvent {
    pub page: u32,
    pub bit: u32,
    pub cycle: u64,
}

/// Per-block mutable state.
///
/// Disturb charge is tracked with per-page counters rather than per-bit
/// accumulators: a still-1 bit has been charged by exactly every qualifying
/// operation since the erase (a program whose pattern held 0 at the bit
/// would have killed it), so the per-bit counts are recoverable as
/// `program_count[page]`, `program_count[page ^ 1]` and
/// `total_reads - read_count[page]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BlockState {
    /// Programmed image, 1 = never driven low since erase. 64 pages x 264
    /// words, little-endian bytes.
    pub(crate) programmed: Vec<u64>,
    pub(crate) program_count: [u64; 64],
    pub(crate) read_count: [u64; 64],
    pub(crate) total_reads: u64,
}

impl BlockState {
    fn erased() -> Self {
        Self {
            programmed: vec![u64::MAX; WORDS_PER_PAGE * PAGES_PER_BLOCK as usize],
            program_count: [0; 64],
            read_count: [0; 64],
            total_reads: 0,
        }
    }

    fn page_words(&self, page: u32) -> &[u64] {
        let start = page as usize * WORDS_PER_PAGE;
        &self.programmed[start..start + WORDS_PER_PAGE]
    }

    fn page_words_mut(&mut self, page: u32) -> &mut [u64] {
        let start = page as usize * WORDS_PER_PAGE;
        &mut self.programmed[start..start + WORDS_PER_PAGE]
    }
}

/// Deterministic simulated SLC NAND chip.
///
/// Two chips built with the same `(seed, geometry, params)` behave
/// bit-identically under the same operation sequence; chips with different
/// seeds carry independent per-cell disturb thresholds and latency
/// variation, which is what makes each simulated device fingerprintable.
pub struct FlashChip {
    seed: u64,
    geometry: ChipGeometry,
    params: DisturbParams,
    blocks: BTreeMap<u32, BlockState>,
    thresholds: HashMap<(u32, u32, DisturbRole), Box<[u64]>>,
    latency_noise: bool,
    noise_counter: u64,
    z_intra: f64,
    z_pair: f64,
    z_read: f64,
}

impl FlashChip {
    pub fn new(
        seed: u64,
        geometry: ChipGeometry,
        params: DisturbParams,
    ) -> Result<Self, DeviceError> {
        params.validate()?;
        Ok(Self {
            seed,
            geometry,
            params,
            blocks: BTreeMap::new(),
            thresholds: HashMap::new(),
            latency_noise: true,
            noise_counter: 0,
            z_intra: min_median_offset(INTRA_CALIBRATION_BITS),
            z_pair: min_median_offset(PAIR_CALIBRATION_BITS),
            z_read: min_median_offset(READ_CALIBRATION_BITS),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn geometry(&self) -> ChipGeometry {
        self.geometry
    }

    pub fn params(&self) -> DisturbParams {
        self.params
    }

    /// Measurement noise on reported program latencies (on by default).
    pub fn set_latency_noise(&mut self, enabled: bool) {
        self.latency_noise = enabled;
    }

    pub fn latency_noise(&self) -> bool {
        self.latency_noise
    }

    pub(crate) fn noise_counter(&self) -> u64 {
        self.noise_counter
    }

    pub(crate) fn restore(
        seed: u64,
        geometry: ChipGeometry,
        params: DisturbParams,
        blocks: BTreeMap<u32, BlockState>,
        latency_noise: bool,
        noise_counter: u64,
    ) -> Result<Self, DeviceError> {
        let mut chip = Self::new(seed, geometry, params)?;
        chip.blocks = blocks;
        chip.latency_noise = latency_noise;
        chip.noise_counter = noise_counter;
        Ok(chip)
    }

    pub(crate) fn block_states(&self) -> &BTreeMap<u32, BlockState> {
        &self.blocks
    }

    fn check_block(&self, block: u32) -> Result<(), DeviceError> {
        let blocks = self.geometry.blocks_per_chip();
        if block >= blocks {
            return Err(DeviceError::BlockOutOfRange { block, blocks });
        }
        Ok(())
    }

    pub(crate) fn ensure_addressable(&self, block: u32, page: u32) -> Result<(), DeviceError> {
        self.check_block(block)?;
        if page >= PAGES_PER_BLOCK {
            return Err(DeviceError::PageOutOfRange { page });
        }
        Ok(())
    }

    pub(crate) fn program_count(&self, block: u32, page: u32) -> u64 {
        self.blocks
            .get(&block)
            .map_or(0, |b| b.program_count[page as usize])
    }

    pub(crate) fn victim_reads(&self, block: u32, page: u32) -> u64 {
        self.blocks
            .get(&block)
            .map_or(0, |b| b.total_reads - b.read_count[page as usize])
    }

    pub(crate) fn page_counters(&self, block: u32, page: u32) -> PageCounters {
        match self.blocks.get(&block) {
            Some(state) => PageCounters {
                intra: state.program_count[page as usize],
                pair: state.program_count[(page ^ 1) as usize],
                read: state.total_reads - state.read_count[page as usize],
            },
            None => PageCounters { intra: 0, pair: 0, read: 0 },
        }
    }

    /// The programmed image only: 1 = never driven low since erase,
    /// ignoring disturb flips.
    pub(crate) fn programmed_image(&self, block: u32, page: u32) -> PageData {
        match self.blocks.get(&block) {
            Some(state) => PageData::from_words(state.page_words(page)),
            None => PageData::erased(),
        }
    }

    /// Per-bit threshold arrays for one page, filling the cache as needed.
    pub(crate) fn page_thresholds(&mut self, block: u32, page: u32) -> ThresholdView<'_> {
        let has_intra = self.role_thresholds_ready(block, page, DisturbRole::Intra);
        let has_pair = self.role_thresholds_ready(block, page, DisturbRole::Pair);
        let has_read = self.role_thresholds_ready(block, page, DisturbRole::Read);
        ThresholdView {
            intra: has_intra.then(|| &self.thresholds[&(block, page, DisturbRole::Intra)][..]),
            pair: has_pair.then(|| &self.thresholds[&(block, page, DisturbRole::Pair)][..]),
            read: has_read.then(|| &self.thresholds[&(block, page, DisturbRole::Read)][..]),
        }
    }

    fn block_mut(&mut self, block: u32) -> &mut BlockState {
        self.blocks.entry(block).or_insert_with(BlockState::erased)
    }

    /// Erase a block: every bit back to 1, every disturb accumulator to 0.
    /// Erasing an already-erased block is a no-op.
    pub fn erase_block(&mut self, block: u32) -> Result<(), DeviceError> {
        self.check_block(block)?;
        self.blocks.insert(block, BlockState::erased());
        Ok(())
    }

    /// Program a page: bits can only fall (old AND new), and the write
    /// itself delivers one disturb pulse with this page as the aggressor.
    pub fn program_page(
        &mut self,
        block: u32,
        page: u32,
        data: &PageData,
    ) -> Result<(), DeviceError> {
        self.program_repeat(block, page, data, 1)
    }

    /// `count` identical programs back to back. Equivalent to calling
    /// [`FlashChip::program_page`] `count` times.
    pub fn program_repeat(
        &mut self,
        block: u32,
        page: u32,
        data: &PageData,
        count: u64,
    ) -> Result<(), DeviceError> {
        self.ensure_addressable(block, page)?;
        if count == 0 {
            return Ok(());
        }
        let words = data.to_words();
        let state = self.block_mut(block);
        for (cell, input) in state.page_words_mut(page).iter_mut().zip(words.iter()) {
            *cell &= *input;
        }
        state.program_count[page as usize] += count;
        Ok(())
    }

    /// Read a page. The returned bytes reflect every disturb flip so far;
    /// the read then charges one read-disturb unit to the other pages of
    /// the block.
    pub fn read_page(&mut self, block: u32, page: u32) -> Result<PageData, DeviceError> {
        let data = self.read_page_quiet(block, page)?;
        let state = self.block_mut(block);
        state.read_count[page as usize] += 1;
        state.total_reads += 1;
        Ok(data)
    }

    /// Observation read: same contents as [`FlashChip::read_page`] but with
    /// no read-disturb charge. The extraction procedures use this for their
    /// between-cycle checks.
    pub fn read_page_quiet(&mut self, block: u32, page: u32) -> Result<PageData, DeviceError> {
        self.ensure_addressable(block, page)?;
        if !self.blocks.contains_key(&block) {
            return Ok(PageData::erased());
        }
        let counters = {
            let state = &self.blocks[&block];
            PageCounters {
                intra: state.program_count[page as usize],
                pair: state.program_count[(page ^ 1) as usize],
                read: state.total_reads - state.read_count[page as usize],
            }
        };
        // Fill the caches first; the borrows below are immutable.
        let has_intra = self.role_thresholds_ready(block, page, DisturbRole::Intra);
        let has_pair = self.role_thresholds_ready(block, page, DisturbRole::Pair);
        let has_read = self.role_thresholds_ready(block, page, DisturbRole::Read);
        let intra = has_intra.then(|| &self.thresholds[&(block, page, DisturbRole::Intra)][..]);
        let pair = has_pair.then(|| &self.thresholds[&(block, page, DisturbRole::Pair)][..]);
        let read = has_read.then(|| &self.thresholds[&(block, page, DisturbRole::Read)][..]);

        let state = &self.blocks[&block];
        let mut out = vec![0u64; WORDS_PER_PAGE];
        for (w, (dst, src)) in out.iter_mut().zip(state.page_words(page)).enumerate() {
            let mut word = *src;
            if word != 0 {
                word &= alive_mask(intra, w, counters.intra);
                word &= alive_mask(pair, w, counters.pair);
                word &= alive_mask(read, w, counters.read);
            }
            *dst = word;
        }
        Ok(PageData::from_words(&out))
    }

    /// `count` reads of one page back to back; disturb-equivalent to a loop
    /// over [`FlashChip::read_page`], without materializing the data.
    pub fn read_repeat(&mut self, block: u32, page: u32, count: u64) -> Result<(), DeviceError> {
        self.ensure_addressable(block, page)?;
        if count == 0 {
            return Ok(());
        }
        let state = self.block_mut(block);
        state.read_count[page as usize] += count;
        state.total_reads += count;
        Ok(())
    }

    /// Program a page and report how long the operation took, in
    /// microseconds. The deterministic part of the variation is keyed by
    /// the page and the bytes the pattern drives low; the 1% measurement
    /// noise takes a fresh draw per call.
    pub fn program_latency_us(
        &mut self,
        block: u32,
        page: u32,
        data: &PageData,
    ) -> Result<f64, DeviceError> {
        self.program_page(block, page, data)?;
        let mut sum = 0.0;
        let mut driven = 0u32;
        for (byte, &value) in data.as_bytes().iter().enumerate() {
            if value != 0xFF {
                let unit = keyed_unit(
                    self.seed,
                    &[ROLE_TAG_LATENCY, cell_key(block, page, byte as u64)],
                );
                sum += 2.0 * unit - 1.0;
                driven += 1;
            }
        }
        let variation = if driven > 0 { sum / driven as f64 } else { 0.0 };
        let mut latency = self.params.latency_base_us * (1.0 + self.params.latency_spread * variation);
        if self.latency_noise {
            let unit = keyed_unit(self.seed, &[ROLE_TAG_NOISE, self.noise_counter]);
            self.noise_counter += 1;
            latency += self.params.latency_base_us * 0.01 * (2.0 * unit - 1.0);
        }
        Ok(latency)
    }

    /// Per-cell disturb threshold: the number of charge units after which
    /// the bit flips. A pure function of the chip seed and the cell
    /// coordinates, so it survives erases.
    pub fn threshold_for(&mut self, block: u32, page: u32, bit: u32, role: DisturbRole) -> u64 {
        if self.role_thresholds_ready(block, page, role) {
            self.thresholds[&(block, page, role)][bit as usize]
        } else {
            u64::MAX
        }
    }

    fn median_for(&self, page: u32, role: DisturbRole) -> f64 {
        match role {
            DisturbRole::Intra => self.params.intra_median(page),
            // A victim's pair threshold scales with its aggressor's index.
            DisturbRole::Pair => self.params.pair_median(page ^ 1),
            DisturbRole::Read => self.params.read_disturb_median,
        }
    }

    fn z_for(&self, role: DisturbRole) -> f64 {
        match role {
            DisturbRole::Intra => self.z_intra,
            DisturbRole::Pair => self.z_pair,
            DisturbRole::Read => self.z_read,
        }
    }

    /// Ensure the threshold array for (block, page, role) is cached.
    /// Returns false when the role's median is infinite (disturb disabled),
    /// in which case no array exists and every threshold is unreachable.
    fn role_thresholds_ready(&mut self, block: u32, page: u32, role: DisturbRole) -> bool {
        let median = self.median_for(page, role);
        if !median.is_finite() {
            return false;
        }
        if !self.thresholds.contains_key(&(block, page, role)) {
            let sigma = self.params.sigma;
            let z_ref = self.z_for(role);
            let tag = match role {
                DisturbRole::Intra => ROLE_TAG_INTRA,
                DisturbRole::Pair => ROLE_TAG_PAIR,
                DisturbRole::Read => ROLE_TAG_READ,
            };
            let mut arr = vec![0u64; PAGE_BITS].into_boxed_slice();
            for (bit, slot) in arr.iter_mut().enumerate() {
                let value = if sigma == 0.0 {
                    median
                } else {
                    let z = keyed_normal(self.seed, &[tag, cell_key(block, page, bit as u64)]);
                    median * libm::exp(sigma * (z - z_ref))
                };
                *slot = round_threshold(value);
            }
            self.thresholds.insert((block, page, role), arr);
        }
        true
    }
}

pub(crate) struct PageCounters {
    pub(crate) intra: u64,
    pub(crate) pair: u64,
    pub(crate) read: u64,
}

/// Borrowed per-role threshold arrays; a missing array means the role is
/// disabled and its thresholds are unreachable.
pub(crate) struct ThresholdView<'a> {
    intra: Option<&'a [u64]>,
    pair: Option<&'a [u64]>,
    read: Option<&'a [u64]>,
}

impl ThresholdView<'_> {
    pub(crate) fn intra(&self, bit: usize) -> u64 {
        self.intra.map_or(u64::MAX, |t| t[bit])
    }

    pub(crate) fn pair(&self, bit: usize) -> u64 {
        self.pair.map_or(u64::MAX, |t| t[bit])
    }

    pub(crate) fn read(&self, bit: usize) -> u64 {
        self.read.map_or(u64::MAX, |t| t[bit])
    }
}

fn cell_key(block: u32, page: u32, unit: u64) -> u64 {
    (u64::from(block) << 38) | (u64::from(page) << 32) | unit
}

fn round_threshold(value: f64) -> u64 {
    let rounded = libm::round(value);
    if rounded < 1.0 {
        1
    } else if rounded >= u64::MAX as f64 {
        u64::MAX
    } else {
        rounded as u64
    }
}

/// 64-bit mask of bits whose threshold is still above the charge counter.
fn alive_mask(thresholds: Option<&[u64]>, word: usize, charge: u64) -> u64 {
    let Some(thresholds) = thresholds else {
        return u64::MAX;
    };
    if charge == 0 {
        return u64::MAX;
    }
    let mut mask = 0u64;
    let base = word * 64;
    for i in 0..64 {
        if thresholds[base + i] > charge {
            mask |= 1 << i;
        }
    }
    mask
}

impl NandTarget for FlashChip {
    fn read_page(&mut self, block: u32, page: u32, buf: &mut [u8; PAGE_TOTAL_BYTES]) {
        let data = FlashChip::read_page(self, block, page)
            .expect("bus geometry must match chip geometry");
        buf.copy_from_slice(data.as_bytes());
    }

    fn program_page(&mut self, block: u32, page: u32, data: &[u8; PAGE_TOTAL_BYTES]) -> bool {
        let mut page_data = PageData::erased();
        page_data.as_mut_bytes().copy_from_slice(data);
        FlashChip::program_page(self, block, page, &page_data).is_ok()
    }

    fn erase_block(&mut self, block: u32) -> bool {
        FlashChip::erase_block(self, block).is_ok()
    }
}

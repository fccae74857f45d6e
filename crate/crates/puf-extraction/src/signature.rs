use flash_device_model::PAGE_BITS;
use thiserror::Error;

/// Sentinel first-flip value for a bit that never deviated.
pub const NEVER: u32 = u32::MAX;

/// Which procedure produced a signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Technique {
    SamePage,
    AdjacentPage,
    MultiPageSweep,
    ReadDisturb,
    ProgramLatency,
}

impl Technique {
    pub fn name(self) -> &'static str {
        match self {
            Technique::SamePage => "same_page",
            Technique::AdjacentPage => "adjacent_page",
            Technique::MultiPageSweep => "multi_page_sweep",
            Technique::ReadDisturb => "read_disturb",
            Technique::ProgramLatency => "program_latency",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown technique name {0:?}")]
pub struct UnknownTechnique(pub String);

impl std::str::FromStr for Technique {
    type Err = UnknownTechnique;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "same_page" => Ok(Technique::SamePage),
            "adjacent_page" => Ok(Technique::AdjacentPage),
            "multi_page_sweep" => Ok(Technique::MultiPageSweep),
            "read_disturb" => Ok(Technique::ReadDisturb),
            "program_latency" => Ok(Technique::ProgramLatency),
            other => Err(UnknownTechnique(other.to_string())),
        }
    }
}

/// Raw extraction output for one page: the cycle at which each of the
/// 16896 bits first deviated, or [`NEVER`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub technique: Technique,
    pub block: u32,
    pub page: u32,
    pub total_cycles: u32,
    pub pattern: u8,
    first_flip: Vec<u32>,
}

impl Signature {
    pub fn all_stable(
        technique: Technique,
        block: u32,
        page: u32,
        total_cycles: u32,
        pattern: u8,
    ) -> Self {
        Self {
            technique,
            block,
            page,
            total_cycles,
            pattern,
            first_flip: vec![NEVER; PAGE_BITS],
        }
    }

    pub fn from_values(
        technique: Technique,
        block: u32,
        page: u32,
        total_cycles: u32,
        pattern: u8,
        first_flip: Vec<u32>,
    ) -> Option<Self> {
        (first_flip.len() == PAGE_BITS).then_some(Self {
            technique,
            block,
            page,
            total_cycles,
            pattern,
            first_flip,
        })
    }

    /// Record a first flip; later cycles for the same bit are ignored.
    pub fn record(&mut self, bit: u32, cycle: u32) {
        let slot = &mut self.first_flip[bit as usize];
        if *slot == NEVER || cycle < *slot {
            *slot = cycle;
        }
    }

    pub fn first_flip(&self, bit: u32) -> u32 {
        self.first_flip[bit as usize]
    }

    pub fn values(&self) -> &[u32] {
        &self.first_flip
    }

    pub fn sentinel_count(&self) -> usize {
        self.first_flip.iter().filter(|&&v| v == NEVER).count()
    }

    /// Earliest recorded flip, if any bit flipped at all.
    pub fn earliest_flip(&self) -> Option<u32> {
        self.first_flip.iter().copied().filter(|&v| v != NEVER).min()
    }

    /// Stability mask: a bit is stable exactly when it never flipped.
    pub fn stable_map(&self) -> StableBitMap {
        let mut map = StableBitMap::all_unstable(self.block, self.page, self.total_cycles);
        for (bit, &value) in self.first_flip.iter().enumerate() {
            if value == NEVER {
                map.set(bit as u32, true);
            }
        }
        map
    }
}

const MAP_WORDS: usize = PAGE_BITS / 64;

/// Per-bit stability mask after an experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableBitMap {
    pub block: u32,
    pub page: u32,
    pub after_cycles: u32,
    words: Vec<u64>,
}

impl StableBitMap {
    pub fn all_unstable(block: u32, page: u32, after_cycles: u32) -> Self {
        Self { block, page, after_cycles, words: vec![0; MAP_WORDS] }
    }

    pub fn all_stable(block: u32, page: u32, after_cycles: u32) -> Self {
        Self { block, page, after_cycles, words: vec![u64::MAX; MAP_WORDS] }
    }

    pub fn from_words(block: u32, page: u32, after_cycles: u32, words: Vec<u64>) -> Option<Self> {
        (words.len() == MAP_WORDS).then_some(Self { block, page, after_cycles, words })
    }

    pub fn get(&self, bit: u32) -> bool {
        (self.words[bit as usize / 64] >> (bit % 64)) & 1 == 1
    }

    pub fn set(&mut self, bit: u32, stable: bool) {
        let word = &mut self.words[bit as usize / 64];
        let mask = 1u64 << (bit % 64);
        if stable {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    pub fn stable_count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn len(&self) -> u32 {
        PAGE_BITS as u32
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Bits that differ between two equally-shaped maps.
    pub fn differing_bits(&self, other: &Self) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    /// Keep only bits stable in both maps.
    pub fn intersect_with(&mut self, other: &Self) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w &= *o;
        }
        self.after_cycles = self.after_cycles.max(other.after_cycles);
    }
}

use thiserror::Error;

/// Data area of a page in bytes.
pub const PAGE_DATA_BYTES: usize = 2048;
/// Spare (out-of-band) area of a page in bytes.
pub const PAGE_SPARE_BYTES: usize = 64;
/// Full column space of a page: data plus spare.
pub const PAGE_TOTAL_BYTES: usize = PAGE_DATA_BYTES + PAGE_SPARE_BYTES;
/// Pages per erase block.
pub const PAGES_PER_BLOCK: u32 = 64;
/// Upper bound on block count so that `block * 64 + page` fits the two
/// row-address cycles.
pub const MAX_BLOCKS_PER_CHIP: u32 = 1024;
/// Significant bits in the column address (2112 <= 2^12).
pub const COLUMN_ADDRESS_BITS: u32 = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("page layout must be {PAGE_DATA_BYTES}+{PAGE_SPARE_BYTES} bytes, got {data}+{spare}")]
    BadPageLayout { data: u32, spare: u32 },
    #[error("blocks must hold {PAGES_PER_BLOCK} pages, got {0}")]
    BadPagesPerBlock(u32),
    #[error("block count {0} outside 1..={MAX_BLOCKS_PER_CHIP}")]
    BadBlockCount(u32),
}

/// Block/page/byte layout of the simulated part.
///
/// The page layout is structurally fixed (2048+64 bytes, 64 pages per block);
/// only the number of blocks varies between configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChipGeometry {
    data_bytes_per_page: u32,
    spare_bytes_per_page: u32,
    pages_per_block: u32,
    blocks_per_chip: u32,
}

impl ChipGeometry {
    /// Geometry with the given number of blocks and the fixed page layout.
    pub fn with_blocks(blocks_per_chip: u32) -> Result<Self, GeometryError> {
        Self::new(
            PAGE_DATA_BYTES as u32,
            PAGE_SPARE_BYTES as u32,
            PAGES_PER_BLOCK,
            blocks_per_chip,
        )
    }

    /// Fully spelled-out constructor; rejects any layout other than the
    /// 2048+64 x 64 arrangement this device family uses.
    pub fn new(
        data_bytes_per_page: u32,
        spare_bytes_per_page: u32,
        pages_per_block: u32,
        blocks_per_chip: u32,
    ) -> Result<Self, GeometryError> {
        if data_bytes_per_page != PAGE_DATA_BYTES as u32
            || spare_bytes_per_page != PAGE_SPARE_BYTES as u32
        {
            return Err(GeometryError::BadPageLayout {
                data: data_bytes_per_page,
                spare: spare_bytes_per_page,
            });
        }
        if pages_per_block != PAGES_PER_BLOCK {
            return Err(GeometryError::BadPagesPerBlock(pages_per_block));
        }
        if blocks_per_chip == 0 || blocks_per_chip > MAX_BLOCKS_PER_CHIP {
            return Err(GeometryError::BadBlockCount(blocks_per_chip));
        }
        Ok(Self {
            data_bytes_per_page,
            spare_bytes_per_page,
            pages_per_block,
            blocks_per_chip,
        })
    }

    pub fn data_bytes_per_page(&self) -> u32 {
        self.data_bytes_per_page
    }

    pub fn spare_bytes_per_page(&self) -> u32 {
        self.spare_bytes_per_page
    }

    pub fn total_bytes_per_page(&self) -> u32 {
        self.data_bytes_per_page + self.spare_bytes_per_page
    }

    pub fn pages_per_block(&self) -> u32 {
        self.pages_per_block
    }

    pub fn blocks_per_chip(&self) -> u32 {
        self.blocks_per_chip
    }

    /// Number of addressable rows (pages) on the whole chip.
    pub fn row_count(&self) -> u32 {
        self.blocks_per_chip * self.pages_per_block
    }

    /// Row address of (block, page).
    pub fn row(&self, block: u32, page: u32) -> u32 {
        block * self.pages_per_block + page
    }
}

impl Default for ChipGeometry {
    fn default() -> Self {
        Self::with_blocks(MAX_BLOCKS_PER_CHIP).expect("default geometry is valid")
    }
}

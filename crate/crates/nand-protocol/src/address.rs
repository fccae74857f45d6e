use thiserror::Error;

use crate::geometry::{ChipGeometry, PAGE_TOTAL_BYTES};

/// A fully decoded (block, page, column) location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceAddress {
    pub block: u32,
    pub page: u32,
    pub column: u32,
}

impl DeviceAddress {
    pub fn new(block: u32, page: u32, column: u32) -> Self {
        Self { block, page, column }
    }

    /// Row address: `block * pages_per_block + page`.
    pub fn row(&self, geometry: &ChipGeometry) -> u32 {
        geometry.row(self.block, self.page)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddressError {
    #[error("column {0} outside 0..{PAGE_TOTAL_BYTES}")]
    ColumnOutOfRange(u32),
    #[error("page {0} outside 0..{1}")]
    PageOutOfRange(u32, u32),
    #[error("block {0} outside 0..{1}")]
    BlockOutOfRange(u32, u32),
    #[error("row {0} outside 0..{1}")]
    RowOutOfRange(u32, u32),
}

/// Pack an address into the four cycle bytes the bus expects:
/// column little-endian in bytes 0-1 (top four bits of byte 1 unused and
/// zero), row little-endian in bytes 2-3.
pub fn encode_address(
    addr: DeviceAddress,
    geometry: &ChipGeometry,
) -> Result<[u8; 4], AddressError> {
    if addr.column >= geometry.total_bytes_per_page() {
        return Err(AddressError::ColumnOutOfRange(addr.column));
    }
    if addr.page >= geometry.pages_per_block() {
        return Err(AddressError::PageOutOfRange(addr.page, geometry.pages_per_block()));
    }
    if addr.block >= geometry.blocks_per_chip() {
        return Err(AddressError::BlockOutOfRange(addr.block, geometry.blocks_per_chip()));
    }
    let row = addr.row(geometry);
    Ok([
        (addr.column & 0xFF) as u8,
        (addr.column >> 8) as u8,
        (row & 0xFF) as u8,
        (row >> 8) as u8,
    ])
}

/// Exact inverse of [`encode_address`] on its range.
pub fn decode_address(
    bytes: [u8; 4],
    geometry: &ChipGeometry,
) -> Result<DeviceAddress, AddressError> {
    let column = u32::from(bytes[0]) | (u32::from(bytes[1]) << 8);
    if column >= geometry.total_bytes_per_page() {
        return Err(AddressError::ColumnOutOfRange(column));
    }
    let row = u32::from(bytes[2]) | (u32::from(bytes[3]) << 8);
    if row >= geometry.row_count() {
        return Err(AddressError::RowOutOfRange(row, geometry.row_count()));
    }
    Ok(DeviceAddress {
        block: row / geometry.pages_per_block(),
        page: row % geometry.pages_per_block(),
        column,
    })
}

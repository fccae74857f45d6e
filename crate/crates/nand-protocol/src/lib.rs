//! Bus-level protocol for a small SLC NAND flash device.
//!
//! The device speaks the classic 8-bit multiplexed command/address/data
//! convention: `00h`/`30h` read, `80h`/`10h` program, `60h`/`D0h` erase and
//! `70h` status. This crate owns the pure parts of that protocol — the
//! address cycle packing, the command byte vocabulary and the sequence state
//! machine — and delegates actual array access to a [`NandTarget`]
//! implementation.

mod address;
mod bus;
mod command;
mod geometry;

pub use address::{decode_address, encode_address, AddressError, DeviceAddress};
pub use bus::{step_bus, BusEvent, BusPhase, BusState, NandTarget, ProtocolViolation, SequenceKind};
pub use command::{CommandByte, UnknownCommand};
pub use geometry::{
    ChipGeometry, GeometryError, COLUMN_ADDRESS_BITS, MAX_BLOCKS_PER_CHIP, PAGES_PER_BLOCK,
    PAGE_DATA_BYTES, PAGE_SPARE_BYTES, PAGE_TOTAL_BYTES,
};

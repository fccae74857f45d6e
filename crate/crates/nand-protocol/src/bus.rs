use thiserror::Error;

use crate::address::{decode_address, DeviceAddress};
use crate::command::CommandByte;
use crate::geometry::{ChipGeometry, PAGE_TOTAL_BYTES};

/// Storage backend the bus front end drives. Addresses handed to these
/// methods have already been range-checked against the bus geometry.
pub trait NandTarget {
    /// Copy the current contents of (block, page) into `buf`. A bus-level
    /// read; backends that model read disturb account for it here.
    fn read_page(&mut self, block: u32, page: u32, buf: &mut [u8; PAGE_TOTAL_BYTES]);

    /// Program (1 -> 0 only). Returns false on device failure, which is
    /// reported through status bit 0.
    fn program_page(&mut self, block: u32, page: u32, data: &[u8; PAGE_TOTAL_BYTES]) -> bool;

    /// Erase a whole block (all bits back to 1). Returns false on failure.
    fn erase_block(&mut self, block: u32) -> bool;
}

/// Which multi-cycle sequence is in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Read,
    Program,
    Erase,
}

impl SequenceKind {
    fn address_cycles(self) -> u8 {
        match self {
            // column low/high + row low/high
            SequenceKind::Read | SequenceKind::Program => 4,
            // row low/high only
            SequenceKind::Erase => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusPhase {
    Idle,
    /// Collecting address cycles; once `bytes_remaining` hits zero the
    /// sequence waits for its confirm opcode (read/erase) or data (program).
    AwaitAddress {
        kind: SequenceKind,
        bytes_remaining: u8,
    },
    DataIn,
    DataOut,
    /// An internal program/erase finished; cleared by the next status poll.
    Busy,
}

/// One input on the 8-bit bus, with the latch pins folded into the event
/// kind: `Command` stands for a cycle with CLE high, `Address` for ALE high,
/// `DataIn`/`DataOutRequest` for plain I/O cycles, `StatusPoll` for the
/// `70h` shortcut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusEvent {
    Command(u8),
    Address(u8),
    DataIn(u8),
    DataOutRequest,
    StatusPoll,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("illegal bus event {event:?} in phase {phase:?}")]
pub struct ProtocolViolation {
    pub phase: BusPhase,
    pub event: BusEvent,
}

/// Mutable front-end state of one device: sequence phase, latched address,
/// status register and the page register data moves through.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusState {
    geometry: ChipGeometry,
    phase: BusPhase,
    latched_address: Option<DeviceAddress>,
    status_register: u8,
    addr_bytes: [u8; 4],
    addr_len: u8,
    page_register: Box<[u8; PAGE_TOTAL_BYTES]>,
    cursor: usize,
}

impl BusState {
    pub fn new(geometry: ChipGeometry) -> Self {
        Self {
            geometry,
            phase: BusPhase::Idle,
            latched_address: None,
            status_register: 0,
            addr_bytes: [0; 4],
            addr_len: 0,
            page_register: Box::new([0xFF; PAGE_TOTAL_BYTES]),
            cursor: 0,
        }
    }

    pub fn phase(&self) -> BusPhase {
        self.phase
    }

    pub fn latched_address(&self) -> Option<DeviceAddress> {
        self.latched_address
    }

    /// Bit 0: 0 = last program/erase succeeded, 1 = it failed.
    pub fn status_register(&self) -> u8 {
        self.status_register
    }

    fn violation(&self, event: BusEvent) -> ProtocolViolation {
        ProtocolViolation { phase: self.phase, event }
    }
}

/// Advance the bus by one event.
///
/// Legal sequences: READ `00h` + 4 address bytes + `30h` + data-out cycles
/// (column auto-increments); PROGRAM `80h` + 4 address bytes + data-in
/// cycles + `10h`; ERASE `60h` + 2 row bytes + `D0h`; `70h` answers with the
/// status register anywhere, and is also how a Busy device is handed back to
/// Idle. Anything else is a [`ProtocolViolation`], and a rejected event
/// leaves both the bus state and the target untouched.
pub fn step_bus<T: NandTarget>(
    state: &mut BusState,
    event: BusEvent,
    target: &mut T,
) -> Result<Option<u8>, ProtocolViolation> {
    match event {
        BusEvent::StatusPoll => handle_status(state),
        BusEvent::Command(byte) => {
            let cmd = CommandByte::try_from(byte).map_err(|_| state.violation(event))?;
            handle_command(state, event, cmd, target)
        }
        BusEvent::Address(byte) => handle_address(state, event, byte),
        BusEvent::DataIn(byte) => match state.phase {
            BusPhase::DataIn => {
                if state.cursor >= PAGE_TOTAL_BYTES {
                    return Err(state.violation(event));
                }
                state.page_register[state.cursor] = byte;
                state.cursor += 1;
                Ok(None)
            }
            _ => Err(state.violation(event)),
        },
        BusEvent::DataOutRequest => match state.phase {
            BusPhase::DataOut => {
                if state.cursor >= PAGE_TOTAL_BYTES {
                    return Err(state.violation(event));
                }
                let byte = state.page_register[state.cursor];
                state.cursor += 1;
                Ok(Some(byte))
            }
            _ => Err(state.violation(event)),
        },
    }
}

fn handle_status(state: &mut BusState) -> Result<Option<u8>, ProtocolViolation> {
    // Polling resolves a finished internal operation; in every other phase
    // it is transparent.
    if state.phase == BusPhase::Busy {
        state.phase = BusPhase::Idle;
    }
    Ok(Some(state.status_register))
}

fn handle_command<T: NandTarget>(
    state: &mut BusState,
    event: BusEvent,
    cmd: CommandByte,
    target: &mut T,
) -> Result<Option<u8>, ProtocolViolation> {
    if cmd == CommandByte::ReadStatus {
        return handle_status(state);
    }
    match (state.phase, cmd) {
        // New sequences start from Idle, or cut short a data-out stream.
        (BusPhase::Idle | BusPhase::DataOut, CommandByte::ReadSetup) => {
            start_sequence(state, SequenceKind::Read);
            Ok(None)
        }
        (BusPhase::Idle | BusPhase::DataOut, CommandByte::ProgramSetup) => {
            start_sequence(state, SequenceKind::Program);
            Ok(None)
        }
        (BusPhase::Idle | BusPhase::DataOut, CommandByte::EraseSetup) => {
            start_sequence(state, SequenceKind::Erase);
            Ok(None)
        }
        (
            BusPhase::AwaitAddress { kind: SequenceKind::Read, bytes_remaining: 0 },
            CommandByte::ReadConfirm,
        ) => {
            let addr = state.latched_address.expect("address latched before confirm");
            target.read_page(addr.block, addr.page, &mut state.page_register);
            state.cursor = addr.column as usize;
            state.phase = BusPhase::DataOut;
            Ok(None)
        }
        (
            BusPhase::AwaitAddress { kind: SequenceKind::Erase, bytes_remaining: 0 },
            CommandByte::EraseConfirm,
        ) => {
            // The page part of the row is ignored; erase works on blocks.
            let addr = state.latched_address.expect("address latched before confirm");
            let ok = target.erase_block(addr.block);
            state.status_register = if ok { 0x00 } else { 0x01 };
            state.phase = BusPhase::Busy;
            Ok(None)
        }
        (BusPhase::DataIn, CommandByte::ProgramConfirm) => {
            let addr = state.latched_address.expect("address latched before data-in");
            let ok = target.program_page(addr.block, addr.page, &state.page_register);
            state.status_register = if ok { 0x00 } else { 0x01 };
            state.phase = BusPhase::Busy;
            Ok(None)
        }
        _ => Err(state.violation(event)),
    }
}

fn start_sequence(state: &mut BusState, kind: SequenceKind) {
    state.phase = BusPhase::AwaitAddress { kind, bytes_remaining: kind.address_cycles() };
    state.addr_len = 0;
    state.latched_address = None;
}

fn handle_address(
    state: &mut BusState,
    event: BusEvent,
    byte: u8,
) -> Result<Option<u8>, ProtocolViolation> {
    let BusPhase::AwaitAddress { kind, bytes_remaining } = state.phase else {
        return Err(state.violation(event));
    };
    if bytes_remaining == 0 {
        return Err(state.violation(event));
    }

    // Validate each field as its final byte arrives so a rejected byte
    // leaves the latch exactly as it was.
    let idx = state.addr_len as usize;
    let proposed = {
        let mut bytes = state.addr_bytes;
        bytes[idx] = byte;
        bytes
    };
    let cycles = kind.address_cycles();
    let filled = state.addr_len + 1;

    if kind != SequenceKind::Erase && filled == 2 {
        let column = u32::from(proposed[0]) | (u32::from(proposed[1]) << 8);
        if column >= state.geometry.total_bytes_per_page() {
            return Err(state.violation(event));
        }
    }
    if filled == cycles {
        let (row_lo, row_hi) = match kind {
            SequenceKind::Erase => (proposed[0], proposed[1]),
            _ => (proposed[2], proposed[3]),
        };
        let row = u32::from(row_lo) | (u32::from(row_hi) << 8);
        if row >= state.geometry.row_count() {
            return Err(state.violation(event));
        }
        let full = match kind {
            SequenceKind::Erase => [0, 0, proposed[0], proposed[1]],
            _ => proposed,
        };
        let addr = decode_address(full, &state.geometry)
            .expect("fields validated before full decode");
        state.latched_address = Some(addr);
    }

    state.addr_bytes = proposed;
    state.addr_len = filled;
    let remaining = bytes_remaining - 1;
    if remaining == 0 && kind == SequenceKind::Program {
        // Unwritten positions stay 0xFF so a partial page program leaves
        // the rest of the page alone.
        state.page_register.fill(0xFF);
        state.cursor = state
            .latched_address
            .expect("program address latched")
            .column as usize;
        state.phase = BusPhase::DataIn;
    } else {
        state.phase = BusPhase::AwaitAddress { kind, bytes_remaining: remaining };
    }
    Ok(None)
}

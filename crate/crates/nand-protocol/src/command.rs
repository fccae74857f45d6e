use thiserror::Error;

/// Command bytes the device accepts. Anything else in command position is a
/// protocol error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum CommandByte {
    ReadSetup = 0x00,
    ReadConfirm = 0x30,
    ProgramSetup = 0x80,
    ProgramConfirm = 0x10,
    EraseSetup = 0x60,
    EraseConfirm = 0xD0,
    ReadStatus = 0x70,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown command byte {0:#04x}")]
pub struct UnknownCommand(pub u8);

impl TryFrom<u8> for CommandByte {
    type Error = UnknownCommand;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0x00 => Ok(CommandByte::ReadSetup),
            0x30 => Ok(CommandByte::ReadConfirm),
            0x80 => Ok(CommandByte::ProgramSetup),
            0x10 => Ok(CommandByte::ProgramConfirm),
            0x60 => Ok(CommandByte::EraseSetup),
            0xD0 => Ok(CommandByte::EraseConfirm),
            0x70 => Ok(CommandByte::ReadStatus),
            other => Err(UnknownCommand(other)),
        }
    }
}

impl From<CommandByte> for u8 {
    fn from(cmd: CommandByte) -> u8 {
        cmd as u8
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_known_opcodes() {
        for byte in [0x00u8, 0x30, 0x80, 0x10, 0x60, 0xD0, 0x70] {
            let cmd = CommandByte::try_from(byte).unwrap();
            assert_eq!(u8::from(cmd), byte);
        }
    }

    #[test]
    fn rejects_everything_else() {
        let known = [0x00u8, 0x30, 0x80, 0x10, 0x60, 0xD0, 0x70];
        for byte in 0..=255u8 {
            let parsed = CommandByte::try_from(byte);
            assert_eq!(parsed.is_ok(), known.contains(&byte), "byte {byte:#04x}");
        }
    }
}

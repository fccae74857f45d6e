//! On-disk signature and stable-map formats, fixed little-endian.
//!
//! `signature.bin`: magic `FSIG1`, technique byte, block u32, page u32,
//! total_cycles u32, pattern byte, then 16896 u32 first-flip values.
//!
//! `stable.bin`: magic `FSTB1`, block u32, page u32, after_cycles u32,
//! then 2112 bytes of stability mask (bit i of byte b = bit b*8+i).

use puf_extraction::{Signature, StableBitMap, Technique};
use thiserror::Error;

const SIG_MAGIC: &[u8; 5] = b"FSIG1";
const MAP_MAGIC: &[u8; 5] = b"FSTB1";
const PAGE_BITS: usize = 2112 * 8;

#[derive(Debug, Error, PartialEq)]
pub enum FileFormatError {
    #[error("bad magic: expected {expected}")]
    BadMagic { expected: &'static str },
    #[error("file truncated: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("unknown technique code {0}")]
    UnknownTechnique(u8),
}

fn technique_code(technique: Technique) -> u8 {
    match technique {
        Technique::SamePage => 0,
        Technique::AdjacentPage => 1,
        Technique::MultiPageSweep => 2,
        Technique::ReadDisturb => 3,
        Technique::ProgramLatency => 4,
    }
}

fn technique_from_code(code: u8) -> Result<Technique, FileFormatError> {
    Ok(match code {
        0 => Technique::SamePage,
        1 => Technique::AdjacentPage,
        2 => Technique::MultiPageSweep,
        3 => Technique::ReadDisturb,
        4 => Technique::ProgramLatency,
        other => return Err(FileFormatError::UnknownTechnique(other)),
    })
}

pub fn signature_to_bytes(sig: &Signature) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + 1 + 4 + 4 + 4 + 1 + PAGE_BITS * 4);
    out.extend_from_slice(SIG_MAGIC);
    out.push(technique_code(sig.technique));
    out.extend_from_slice(&sig.block.to_le_bytes());
    out.extend_from_slice(&sig.page.to_le_bytes());
    out.extend_from_slice(&sig.total_cycles.to_le_bytes());
    out.push(sig.pattern);
    for value in sig.values() {
        out.extend_from_slice(&value.to_le_bytes());
    }
    out
}

pub fn signature_from_bytes(bytes: &[u8]) -> Result<Signature, FileFormatError> {
    let expected = 5 + 1 + 4 + 4 + 4 + 1 + PAGE_BITS * 4;
    if bytes.len() != expected {
        return Err(FileFormatError::Truncated { expected, got: bytes.len() });
    }
    if &bytes[..5] != SIG_MAGIC {
        return Err(FileFormatError::BadMagic { expected: "FSIG1" });
    }
    let technique = technique_from_code(bytes[5])?;
    let block = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let page = u32::from_le_bytes(bytes[10..14].try_into().unwrap());
    let total_cycles = u32::from_le_bytes(bytes[14..18].try_into().unwrap());
    let pattern = bytes[18];
    let values: Vec<u32> = bytes[19..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Signature::from_values(technique, block, page, total_cycles, pattern, values)
        .expect("length checked above"))
}

pub fn stable_map_to_bytes(map: &StableBitMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + 4 + 4 + 4 + PAGE_BITS / 8);
    out.extend_from_slice(MAP_MAGIC);
    out.extend_from_slice(&map.block.to_le_bytes());
    out.extend_from_slice(&map.page.to_le_bytes());
    out.extend_from_slice(&map.after_cycles.to_le_bytes());
    for word in map.words() {
        out.extend_from_slice(&word.to_le_bytes());
    }
    out
}

pub fn stable_map_from_bytes(bytes: &[u8]) -> Result<StableBitMap, FileFormatError> {
    let expected = 5 + 4 + 4 + 4 + PAGE_BITS / 8;
    if bytes.len() != expected {
        return Err(FileFormatError::Truncated { expected, got: bytes.len() });
    }
    if &bytes[..5] != MAP_MAGIC {
        return Err(FileFormatError::BadMagic { expected: "FSTB1" });
    }
    let block = u32::from_le_bytes(bytes[5..9].try_into().unwrap());
    let page = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    let after_cycles = u32::from_le_bytes(bytes[13..17].try_into().unwrap());
    let words: Vec<u64> = bytes[17..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(StableBitMap::from_words(block, page, after_cycles, words).expect("length checked"))
}

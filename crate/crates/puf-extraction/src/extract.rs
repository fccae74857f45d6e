use flash_device_model::{rng::keyed_u64, FlipEvent, PageData};
use nand_protocol::{PAGES_PER_BLOCK, PAGE_TOTAL_BYTES};

use crate::config::ExperimentConfig;
use crate::device::FlashDevice;
use crate::signature::{Signature, StableBitMap, Technique};
use crate::ExtractError;

const READ_DATA_TAG: u64 = 0x7261_6e64; // experiment-owned random images

/// Bit positions (LSB first) where `observed` differs from `expected`.
pub fn compare_bits(observed: u8, expected: u8) -> impl Iterator<Item = u8> {
    let diff = observed ^ expected;
    (0..8u8).filter(move |bit| (diff >> bit) & 1 == 1)
}

fn signature_from_events(
    technique: Technique,
    block: u32,
    page: u32,
    cfg_iterations: u64,
    pattern: u8,
    events: &[FlipEvent],
) -> Signature {
    let mut sig = Signature::all_stable(technique, block, page, cfg_iterations as u32, pattern);
    for event in events.iter().filter(|e| e.page == page) {
        sig.record(event.bit, event.cycle as u32);
    }
    sig
}

/// Hammer the target page with the pattern and watch the page itself for
/// bits drifting away from the pattern.
pub fn extract_same_page(
    dev: &mut impl FlashDevice,
    cfg: &ExperimentConfig,
) -> Result<(Signature, StableBitMap), ExtractError> {
    expect_technique(cfg, Technique::SamePage)?;
    cfg.validate()?;
    dev.erase_block(cfg.block)?;
    let pattern = PageData::filled(cfg.pattern);
    let events = dev.program_hammer(
        cfg.block,
        cfg.target_page,
        &pattern,
        cfg.iterations,
        cfg.check_interval,
        &[(cfg.target_page, pattern.clone())],
    )?;
    let sig = signature_from_events(
        Technique::SamePage,
        cfg.block,
        cfg.target_page,
        cfg.iterations,
        cfg.pattern,
        &events,
    );
    let stable = sig.stable_map();
    Ok((sig, stable))
}

/// Signatures of both neighbours of a hammered page. The neighbours are
/// compared against 0xFF (they are never programmed) unless
/// `pre_program_all` is set, in which case every page first receives the
/// pattern and the comparison is against the pattern.
pub struct AdjacentSignatures {
    pub below: (Signature, StableBitMap),
    pub above: (Signature, StableBitMap),
}

pub fn extract_adjacent(
    dev: &mut impl FlashDevice,
    cfg: &ExperimentConfig,
) -> Result<AdjacentSignatures, ExtractError> {
    expect_technique(cfg, Technique::AdjacentPage)?;
    cfg.validate()?;
    if cfg.target_page == 0 || cfg.target_page >= PAGES_PER_BLOCK - 1 {
        return Err(ExtractError::TargetAtBlockEdge(cfg.target_page));
    }
    dev.erase_block(cfg.block)?;
    let pattern = PageData::filled(cfg.pattern);
    if cfg.pre_program_all {
        for page in 0..PAGES_PER_BLOCK {
            dev.program_page(cfg.block, page, &pattern)?;
        }
    }
    let expected = if cfg.pre_program_all {
        pattern.clone()
    } else {
        PageData::erased()
    };
    let below_page = cfg.target_page - 1;
    let above_page = cfg.target_page + 1;
    let events = dev.program_hammer(
        cfg.block,
        cfg.target_page,
        &pattern,
        cfg.iterations,
        cfg.check_interval,
        &[(below_page, expected.clone()), (above_page, expected)],
    )?;
    let build = |page: u32| {
        let sig = signature_from_events(
            Technique::AdjacentPage,
            cfg.block,
            page,
            cfg.iterations,
            cfg.pattern,
            &events,
        );
        let stable = sig.stable_map();
        (sig, stable)
    };
    Ok(AdjacentSignatures { below: build(below_page), above: build(above_page) })
}

/// First-flip summary for one aggressor page of a sweep. `None` means no
/// bit of that page deviated within the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSummary {
    pub aggressor: u32,
    pub self_first: Option<u32>,
    pub predecessor_first: Option<u32>,
    pub successor_first: Option<u32>,
}

/// Hammer every page of the block in turn (fresh erase per aggressor) and
/// record the earliest deviation on the aggressor and both neighbours.
/// Only these summaries are kept; full per-page signatures of a 64-page
/// sweep would be retained nowhere.
pub fn extract_multi_page_sweep(
    dev: &mut impl FlashDevice,
    block: u32,
    iterations_per_page: u64,
    pattern: u8,
    pre_program_all: bool,
) -> Result<Vec<SweepSummary>, ExtractError> {
    if iterations_per_page >= u64::from(crate::signature::NEVER) {
        return Err(ExtractError::TooManyIterations(iterations_per_page));
    }
    let pattern_data = PageData::filled(pattern);
    let mut summaries = Vec::with_capacity(PAGES_PER_BLOCK as usize);
    for aggressor in 0..PAGES_PER_BLOCK {
        dev.erase_block(block)?;
        if pre_program_all {
            for page in 0..PAGES_PER_BLOCK {
                dev.program_page(block, page, &pattern_data)?;
            }
        }
        let neighbour_expected = if pre_program_all {
            pattern_data.clone()
        } else {
            PageData::erased()
        };
        let mut observe = vec![(aggressor, pattern_data.clone())];
        if aggressor > 0 {
            observe.push((aggressor - 1, neighbour_expected.clone()));
        }
        if aggressor + 1 < PAGES_PER_BLOCK {
            observe.push((aggressor + 1, neighbour_expected));
        }
        let events =
            dev.program_hammer(block, aggressor, &pattern_data, iterations_per_page, 1, &observe)?;
        let first_on = |page: Option<u32>| -> Option<u32> {
            let page = page?;
            events
                .iter()
                .filter(|e| e.page == page)
                .map(|e| e.cycle as u32)
                .min()
        };
        summaries.push(SweepSummary {
            aggressor,
            self_first: first_on(Some(aggressor)),
            predecessor_first: first_on(aggressor.checked_sub(1)),
            successor_first: first_on((aggressor + 1 < PAGES_PER_BLOCK).then_some(aggressor + 1)),
        });
    }
    Ok(summaries)
}

/// The random image written to one page for the read-disturb experiment;
/// a pure function of the experiment seed.
pub fn read_disturb_image(experiment_seed: u64, page: u32) -> PageData {
    PageData::from_fn(|byte| {
        keyed_u64(experiment_seed, &[READ_DATA_TAG, u64::from(page), byte as u64]) as u8
    })
}

/// Program the whole block with seed-derived random data, hammer reads of
/// the target page, and compare every page against its written image every
/// `check_interval` reads. Returns one signature per page of the block.
pub fn extract_read_disturb(
    dev: &mut impl FlashDevice,
    cfg: &ExperimentConfig,
) -> Result<Vec<(Signature, StableBitMap)>, ExtractError> {
    expect_technique(cfg, Technique::ReadDisturb)?;
    cfg.validate()?;
    dev.erase_block(cfg.block)?;
    let images: Vec<PageData> = (0..PAGES_PER_BLOCK)
        .map(|page| read_disturb_image(cfg.experiment_seed, page))
        .collect();
    for (page, image) in images.iter().enumerate() {
        dev.program_page(cfg.block, page as u32, image)?;
    }
    let observe: Vec<(u32, PageData)> = images
        .iter()
        .enumerate()
        .map(|(page, image)| (page as u32, image.clone()))
        .collect();
    let events = dev.read_hammer(
        cfg.block,
        cfg.target_page,
        cfg.iterations,
        cfg.check_interval,
        &observe,
    )?;
    Ok((0..PAGES_PER_BLOCK)
        .map(|page| {
            let sig = signature_from_events(
                Technique::ReadDisturb,
                cfg.block,
                page,
                cfg.iterations,
                cfg.pattern,
                &events,
            );
            let stable = sig.stable_map();
            (sig, stable)
        })
        .collect())
}

/// Program one byte position at a time across an erased page and record
/// each operation's reported latency, in order. Page programming is the
/// smallest write the device offers, so "one at a time" is one byte driven
/// low per operation.
pub fn extract_program_latency(
    dev: &mut impl FlashDevice,
    block: u32,
    page: u32,
) -> Result<Vec<f64>, ExtractError> {
    let mut latencies = Vec::with_capacity(PAGE_TOTAL_BYTES);
    for byte in 0..PAGE_TOTAL_BYTES {
        let mut data = PageData::erased();
        data.as_mut_bytes()[byte] = 0x00;
        latencies.push(dev.program_latency_us(block, page, &data)?);
    }
    Ok(latencies)
}

fn expect_technique(cfg: &ExperimentConfig, expected: Technique) -> Result<(), ExtractError> {
    if cfg.technique != expected {
        return Err(ExtractError::TechniqueMismatch {
            expected,
            got: cfg.technique,
        });
    }
    Ok(())
}

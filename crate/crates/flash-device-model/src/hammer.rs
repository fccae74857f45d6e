//! Batched hammering.
//!
//! Repeating one program or read many thousands of times dominates every
//! extraction procedure, and stepping the model one cycle at a time would
//! make the large runs unusable. Because disturb charge accrues one unit per
//! qualifying cycle, the cycle at which any bit crosses its threshold is
//! computable in closed form, so a whole hammer run collapses to one pass
//! over the observed bits. The results are bit- and cycle-exact against the
//! per-cycle loop; the extraction crate property-tests that equivalence.

use crate::chip::{DeviceError, DisturbRole, FlashChip, FlipEvent, PageData, PAGE_BITS};

/// How a bit's charge counter moves during a hammer run.
#[derive(Clone, Copy)]
struct ChargePlan {
    /// Role whose counter advances by one per hammer cycle, if any.
    active: Option<DisturbRole>,
    /// Counter value of the active role before the run.
    active_start: u64,
}

impl FlashChip {
    /// Program `data` into (block, target) `cycles` times. After every
    /// `check_interval` programs, each `(page, expected)` pair in `observe`
    /// is compared bit-by-bit (as by a quiet read) and the first check cycle
    /// at which each bit deviates from `expected` is reported.
    ///
    /// Equivalent to the per-cycle program/read/compare loop, including the
    /// final partial interval never being checked.
    pub fn program_hammer(
        &mut self,
        block: u32,
        target: u32,
        data: &PageData,
        cycles: u64,
        check_interval: u64,
        observe: &[(u32, PageData)],
    ) -> Result<Vec<FlipEvent>, DeviceError> {
        self.validate_hammer(block, target, check_interval, observe)?;
        let mut events = Vec::new();
        for (page, expected) in observe {
            let plan = if *page == target {
                ChargePlan {
                    active: Some(DisturbRole::Intra),
                    active_start: self.program_count(block, target),
                }
            } else if *page == (target ^ 1) {
                ChargePlan {
                    active: Some(DisturbRole::Pair),
                    active_start: self.program_count(block, target),
                }
            } else {
                ChargePlan { active: None, active_start: 0 }
            };
            let pattern = (*page == target).then_some(data);
            self.observe_page(
                block,
                *page,
                expected,
                pattern,
                plan,
                cycles,
                check_interval,
                &mut events,
            );
        }
        self.program_repeat(block, target, data, cycles)?;
        Ok(events)
    }

    /// Read (block, target) `cycles` times; every `check_interval` reads,
    /// compare each observed page against its expected image (quietly) and
    /// report first deviations. Pages other than `target` accumulate one
    /// read-disturb unit per hammer read.
    pub fn read_hammer(
        &mut self,
        block: u32,
        target: u32,
        cycles: u64,
        check_interval: u64,
        observe: &[(u32, PageData)],
    ) -> Result<Vec<FlipEvent>, DeviceError> {
        self.validate_hammer(block, target, check_interval, observe)?;
        let mut events = Vec::new();
        for (page, expected) in observe {
            let plan = if *page == target {
                ChargePlan { active: None, active_start: 0 }
            } else {
                ChargePlan {
                    active: Some(DisturbRole::Read),
                    active_start: self.victim_reads(block, *page),
                }
            };
            self.observe_page(
                block,
                *page,
                expected,
                None,
                plan,
                cycles,
                check_interval,
                &mut events,
            );
        }
        self.read_repeat(block, target, cycles)?;
        Ok(events)
    }

    fn validate_hammer(
        &mut self,
        block: u32,
        target: u32,
        check_interval: u64,
        observe: &[(u32, PageData)],
    ) -> Result<(), DeviceError> {
        if check_interval == 0 {
            return Err(DeviceError::ZeroCheckInterval);
        }
        self.ensure_addressable(block, target)?;
        for (page, _) in observe {
            self.ensure_addressable(block, *page)?;
        }
        Ok(())
    }

    /// Closed-form first-deviation scan of one observed page.
    #[allow(clippy::too_many_arguments)]
    fn observe_page(
        &mut self,
        block: u32,
        page: u32,
        expected: &PageData,
        pattern: Option<&PageData>,
        plan: ChargePlan,
        cycles: u64,
        check_interval: u64,
        events: &mut Vec<FlipEvent>,
    ) {
        let last_check = (cycles / check_interval) * check_interval;
        if last_check == 0 {
            return;
        }
        let counters = self.page_counters(block, page);
        let image = self.programmed_image(block, page);
        let thresholds = self.page_thresholds(block, page);

        for bit in 0..PAGE_BITS {
            // Image after the first hammer cycle.
            let mut alive = image.bit(bit);
            if let Some(pattern) = pattern {
                alive &= pattern.bit(bit);
            }
            // Static conditions: roles whose counters do not move.
            if alive {
                for (role, threshold, counter) in [
                    (DisturbRole::Intra, thresholds.intra(bit), counters.intra),
                    (DisturbRole::Pair, thresholds.pair(bit), counters.pair),
                    (DisturbRole::Read, thresholds.read(bit), counters.read),
                ] {
                    if Some(role) != plan.active && counter >= threshold {
                        alive = false;
                    }
                }
            }
            // Death cycle: first hammer cycle at which the bit reads 0.
            let death = if !alive {
                1
            } else {
                match plan.active {
                    Some(role) => {
                        let threshold = match role {
                            DisturbRole::Intra => thresholds.intra(bit),
                            DisturbRole::Pair => thresholds.pair(bit),
                            DisturbRole::Read => thresholds.read(bit),
                        };
                        if threshold == u64::MAX {
                            u64::MAX
                        } else if threshold > plan.active_start {
                            threshold - plan.active_start
                        } else {
                            1
                        }
                    }
                    None => u64::MAX,
                }
            };

            let cycle = if expected.bit(bit) {
                // Deviates once dead: first check at or after the death cycle.
                death
                    .div_ceil(check_interval)
                    .checked_mul(check_interval)
                    .filter(|detect| *detect <= last_check)
            } else {
                // Expected low: deviates while still alive at the first check.
                (check_interval < death).then_some(check_interval)
            };
            if let Some(cycle) = cycle {
                events.push(FlipEvent { page, bit: bit as u32, cycle });
            }
        }
    }
}

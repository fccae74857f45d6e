use flash_device_model::{DeviceError, FlashChip, FlipEvent, PageData, PAGE_BITS};

/// The operations an extraction procedure needs from a device: erase,
/// program, read, and a latency-reporting program. Implemented by the
/// simulated chip here; a hardware transport can implement the same five
/// primitives and run the identical procedures.
///
/// The two hammer methods have default per-cycle implementations that are
/// the procedures themselves (program or read, then compare every
/// `check_interval` cycles). Backends that can compute flip cycles directly
/// may override them, as the simulator does; overrides must match the
/// default loop observation for observation.
pub trait FlashDevice {
    fn block_count(&self) -> u32;

    fn erase_block(&mut self, block: u32) -> Result<(), DeviceError>;

    fn program_page(&mut self, block: u32, page: u32, data: &PageData)
        -> Result<(), DeviceError>;

    /// A real read, including whatever disturb cost the device charges.
    fn read_page(&mut self, block: u32, page: u32) -> Result<PageData, DeviceError>;

    /// Observation read used for between-cycle checks; should avoid adding
    /// read disturb where the backend can manage it. Falls back to a plain
    /// read.
    fn read_page_quiet(&mut self, block: u32, page: u32) -> Result<PageData, DeviceError> {
        self.read_page(block, page)
    }

    /// Program a page and report the operation latency in microseconds.
    fn program_latency_us(
        &mut self,
        block: u32,
        page: u32,
        data: &PageData,
    ) -> Result<f64, DeviceError>;

    /// Program `data` to (block, target) `cycles` times; after every
    /// `check_interval` programs, compare each observed page against its
    /// expected image and report the first check cycle at which each bit
    /// deviates.
    fn program_hammer(
        &mut self,
        block: u32,
        target: u32,
        data: &PageData,
        cycles: u64,
        check_interval: u64,
        observe: &[(u32, PageData)],
    ) -> Result<Vec<FlipEvent>, DeviceError> {
        if check_interval == 0 {
            return Err(DeviceError::ZeroCheckInterval);
        }
        let mut recorded = vec![vec![false; PAGE_BITS]; observe.len()];
        let mut events = Vec::new();
        for cycle in 1..=cycles {
            self.program_page(block, target, data)?;
            if cycle % check_interval == 0 {
                self.check_observed(block, cycle, observe, &mut recorded, &mut events)?;
            }
        }
        Ok(events)
    }

    /// Read (block, target) `cycles` times; every `check_interval` reads,
    /// compare each observed page against its expected image.
    fn read_hammer(
        &mut self,
        block: u32,
        target: u32,
        cycles: u64,
        check_interval: u64,
        observe: &[(u32, PageData)],
    ) -> Result<Vec<FlipEvent>, DeviceError> {
        if check_interval == 0 {
            return Err(DeviceError::ZeroCheckInterval);
        }
        let mut recorded = vec![vec![false; PAGE_BITS]; observe.len()];
        let mut events = Vec::new();
        for cycle in 1..=cycles {
            self.read_page(block, target)?;
            if cycle % check_interval == 0 {
                self.check_observed(block, cycle, observe, &mut recorded, &mut events)?;
            }
        }
        Ok(events)
    }

    /// One comparison pass over the observed pages (XOR against the
    /// expected image, mask out bits already seen).
    #[doc(hidden)]
    fn check_observed(
        &mut self,
        block: u32,
        cycle: u64,
        observe: &[(u32, PageData)],
        recorded: &mut [Vec<bool>],
        events: &mut Vec<FlipEvent>,
    ) -> Result<(), DeviceError> {
        for ((page, expected), seen) in observe.iter().zip(recorded.iter_mut()) {
            let got = self.read_page_quiet(block, *page)?;
            for (byte, (&g, &e)) in got.as_bytes().iter().zip(expected.as_bytes()).enumerate() {
                let diff = g ^ e;
                if diff == 0 {
                    continue;
                }
                for offset in crate::extract::compare_bits(g, e) {
                    let bit = byte * 8 + offset as usize;
                    if !seen[bit] {
                        seen[bit] = true;
                        events.push(FlipEvent { page: *page, bit: bit as u32, cycle });
                    }
                }
            }
        }
        Ok(())
    }
}

impl FlashDevice for FlashChip {
    fn block_count(&self) -> u32 {
        self.geometry().blocks_per_chip()
    }

    fn erase_block(&mut self, block: u32) -> Result<(), DeviceError> {
        FlashChip::erase_block(self, block)
    }

    fn program_page(
        &mut self,
        block: u32,
        page: u32,
        data: &PageData,
    ) -> Result<(), DeviceError> {
        FlashChip::program_page(self, block, page, data)
    }

    fn read_page(&mut self, block: u32, page: u32) -> Result<PageData, DeviceError> {
        FlashChip::read_page(self, block, page)
    }

    fn read_page_quiet(&mut self, block: u32, page: u32) -> Result<PageData, DeviceError> {
        FlashChip::read_page_quiet(self, block, page)
    }

    fn program_latency_us(
        &mut self,
        block: u32,
        page: u32,
        data: &PageData,
    ) -> Result<f64, DeviceError> {
        FlashChip::program_latency_us(self, block, page, data)
    }

    fn program_hammer(
        &mut self,
        block: u32,
        target: u32,
        data: &PageData,
        cycles: u64,
        check_interval: u64,
        observe: &[(u32, PageData)],
    ) -> Result<Vec<FlipEvent>, DeviceError> {
        FlashChip::program_hammer(self, block, target, data, cycles, check_interval, observe)
    }

    fn read_hammer(
        &mut self,
        block: u32,
        target: u32,
        cycles: u64,
        check_interval: u64,
        observe: &[(u32, PageData)],
    ) -> Result<Vec<FlipEvent>, DeviceError> {
        FlashChip::read_hammer(self, block, target, cycles, check_interval, observe)
    }
}

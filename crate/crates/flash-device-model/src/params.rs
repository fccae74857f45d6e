use thiserror::Error;

/// Calibration constants for the disturb physics.
///
/// The program-disturb medians grow exponentially with page index:
/// a page hammered with a half-ones pattern sees its own first bit flip at a
/// median of `intra_scale * exp(intra_rate * page)` cycles, and its pair
/// partner (page XOR 1) at `pair_scale * exp(pair_rate * page)` cycles of
/// the aggressor. `sigma` is the lognormal shape of the per-cell threshold
/// spread around those medians; with `sigma = 0` every cell of a page shares
/// the rounded median exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbParams {
    /// Intra-page first-flip median at page 0, in program cycles.
    pub intra_scale: f64,
    /// Per-page-index exponent of the intra-page median.
    pub intra_rate: f64,
    /// Pair-partner first-flip median at aggressor page 0, in program cycles.
    pub pair_scale: f64,
    /// Per-page-index exponent of the pair-partner median.
    pub pair_rate: f64,
    /// Lognormal shape of the per-cell threshold spread.
    pub sigma: f64,
    /// Median reads to the first flip elsewhere in the block.
    pub read_disturb_median: f64,
    /// Nominal page-program latency in microseconds.
    pub latency_base_us: f64,
    /// Fractional spread of the per-(page, byte) latency variation.
    pub latency_spread: f64,
}

/// Least-squares fits (log domain) over the measured first-flip series for
/// pages 1..=7, in cycles:
/// intra {500, 500, 1000, 3000, 5000, 7000, 15000},
/// pair  {500, 2000, 4000, 13000, 28000, 39000, 64000}.
const FITTED_INTRA_SCALE: f64 = 204.35055338906537;
const FITTED_INTRA_RATE: f64 = 0.6103980255946817;
const FITTED_PAIR_SCALE: f64 = 350.59139697042986;
const FITTED_PAIR_RATE: f64 = 0.8015296382840561;

impl Default for DisturbParams {
    fn default() -> Self {
        Self {
            intra_scale: FITTED_INTRA_SCALE,
            intra_rate: FITTED_INTRA_RATE,
            pair_scale: FITTED_PAIR_SCALE,
            pair_rate: FITTED_PAIR_RATE,
            sigma: 0.6,
            read_disturb_median: 3_000_000.0,
            latency_base_us: 200.0,
            latency_spread: 0.05,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("sigma must be finite and non-negative, got {0}")]
    BadSigma(f64),
    #[error("latency spread must lie in [0, 0.9], got {0}")]
    BadLatencySpread(f64),
    #[error("{name} must not be NaN")]
    NotANumber { name: &'static str },
}

impl DisturbParams {
    /// Parameters with every disturb mechanism pushed out of reach; the
    /// device then behaves as an ideal AND-programming array.
    pub fn disturb_disabled() -> Self {
        Self {
            intra_scale: f64::INFINITY,
            pair_scale: f64::INFINITY,
            read_disturb_median: f64::INFINITY,
            sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positives = [
            ("intra_scale", self.intra_scale),
            ("pair_scale", self.pair_scale),
            ("read_disturb_median", self.read_disturb_median),
            ("latency_base_us", self.latency_base_us),
        ];
        for (name, value) in positives {
            if value.is_nan() {
                return Err(ParamError::NotANumber { name });
            }
            if value <= 0.0 {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        for (name, value) in [("intra_rate", self.intra_rate), ("pair_rate", self.pair_rate)] {
            if value.is_nan() || value.is_infinite() {
                return Err(ParamError::NotANumber { name });
            }
        }
        if self.sigma.is_nan() || self.sigma < 0.0 || self.sigma.is_infinite() {
            return Err(ParamError::BadSigma(self.sigma));
        }
        if self.latency_spread.is_nan() || !(0.0..=0.9).contains(&self.latency_spread) {
            return Err(ParamError::BadLatencySpread(self.latency_spread));
        }
        Ok(())
    }

    /// Median first-flip cycle for the hammered page itself.
    pub fn intra_median(&self, page: u32) -> f64 {
        self.intra_scale * libm::exp(self.intra_rate * page as f64)
    }

    /// Median first-flip cycle for the pair partner of `aggressor_page`.
    pub fn pair_median(&self, aggressor_page: u32) -> f64 {
        self.pair_scale * libm::exp(self.pair_rate * aggressor_page as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        DisturbParams::default().validate().unwrap();
        DisturbParams::disturb_disabled().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            DisturbParams { intra_scale: 0.0, ..DisturbParams::default() },
            DisturbParams { sigma: -0.1, ..DisturbParams::default() },
            DisturbParams { latency_spread: 0.95, ..DisturbParams::default() },
            DisturbParams { read_disturb_median: f64::NAN, ..DisturbParams::default() },
            DisturbParams { intra_rate: f64::INFINITY, ..DisturbParams::default() },
        ];
        for params in bad {
            assert!(params.validate().is_err(), "{params:?} must not validate");
        }
    }

    #[test]
    fn medians_follow_the_exponential_law() {
        let p = DisturbParams::default();
        assert!((p.intra_median(0) - p.intra_scale).abs() < 1e-9);
        let ratio = p.intra_median(5) / p.intra_median(4);
        assert!((ratio - libm::exp(p.intra_rate)).abs() < 1e-9);
        let ratio = p.pair_median(7) / p.pair_median(6);
        assert!((ratio - libm::exp(p.pair_rate)).abs() < 1e-9);
    }
}

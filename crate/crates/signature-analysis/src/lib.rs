//! Analyses over extracted signatures: correlation and Hamming-distance
//! comparisons, exponential first-flip curve fitting, cross-pass stability,
//! and heatmap classification with CSV/SVG export.

mod fit;
mod heatmap;
mod stats;

use thiserror::Error;

pub use fit::{fit_exponential, predict_first_flip, CurveFit};
pub use heatmap::{default_bucket_edges, heatmap, CellClass, HeatmapGrid};
pub use stats::{fractional_hamming, pearson, signature_values, stable_bits_across_passes};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("correlation undefined for a constant vector")]
    ConstantInput,
    #[error("cycle values must be positive, got {0}")]
    NonPositiveCycles(f64),
    #[error("all points share one abscissa; no slope is identifiable")]
    DegenerateAbscissa,
    #[error("bucket edges must be non-empty and strictly increasing")]
    UnsortedEdges,
    #[error("first-flip cycle {value} exceeds the last bucket edge {last}")]
    ValueBeyondEdges { value: u32, last: u32 },
}

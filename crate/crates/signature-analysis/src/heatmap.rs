use puf_extraction::{Signature, NEVER};

use crate::AnalysisError;

const ROWS: usize = 2112;
const COLS: usize = 8;

/// Classification of one bit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    /// Never flipped within the experiment.
    Stable,
    /// First flip fell in the given bucket (index into the edge list).
    Flipped(u8),
}

/// 2112 x 8 grid of per-bit classifications: rows are byte positions,
/// columns are bit positions within the byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatmapGrid {
    bucket_edges: Vec<u32>,
    classes: Vec<CellClass>,
}

impl HeatmapGrid {
    pub fn rows(&self) -> usize {
        ROWS
    }

    pub fn cols(&self) -> usize {
        COLS
    }

    pub fn bucket_edges(&self) -> &[u32] {
        &self.bucket_edges
    }

    pub fn class(&self, byte: usize, bit: usize) -> CellClass {
        self.classes[byte * COLS + bit]
    }

    pub fn stable_count(&self) -> usize {
        self.classes.iter().filter(|c| **c == CellClass::Stable).count()
    }

    /// Bytes whose eight bits all flipped (the all-black rows of the map).
    pub fn fully_flipped_bytes(&self) -> usize {
        (0..ROWS)
            .filter(|&byte| (0..COLS).all(|bit| self.class(byte, bit) != CellClass::Stable))
            .count()
    }

    /// Bytes whose eight bits all stayed stable.
    pub fn fully_stable_bytes(&self) -> usize {
        (0..ROWS)
            .filter(|&byte| (0..COLS).all(|bit| self.class(byte, bit) == CellClass::Stable))
            .count()
    }

    /// CSV with one row per byte position: `byte,c0,..,c7`, where 0 is
    /// stable and `1 + bucket` encodes a flip bucket.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(ROWS * 24);
        for byte in 0..ROWS {
            out.push_str(&byte.to_string());
            for bit in 0..COLS {
                out.push(',');
                let ordinal = match self.class(byte, bit) {
                    CellClass::Stable => 0,
                    CellClass::Flipped(bucket) => 1 + u32::from(bucket),
                };
                out.push_str(&ordinal.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// SVG rendering, one 3x3 rect per cell. Stable cells are white;
    /// buckets run from cool blue (early flips) to warm red (flips that
    /// needed the most cycles).
    pub fn to_svg(&self) -> String {
        const CELL: usize = 3;
        let width = COLS * CELL;
        let height = ROWS * CELL;
        let mut out = String::with_capacity(ROWS * COLS * 64);
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             viewBox=\"0 0 {width} {height}\">\n"
        ));
        out.push_str(&format!(
            "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
        ));
        for byte in 0..ROWS {
            for bit in 0..COLS {
                let CellClass::Flipped(bucket) = self.class(byte, bit) else {
                    continue;
                };
                let color = bucket_color(bucket as usize, self.bucket_edges.len());
                out.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{color}\"/>\n",
                    bit * CELL,
                    byte * CELL,
                ));
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Cool-to-warm ramp indexed by bucket.
fn bucket_color(bucket: usize, buckets: usize) -> &'static str {
    const RAMP: [&str; 8] = [
        "#2166ac", "#4393c3", "#92c5de", "#d1e5f0", "#fddbc7", "#f4a582", "#d6604d", "#b2182b",
    ];
    let idx = if buckets <= 1 {
        RAMP.len() - 1
    } else {
        bucket * (RAMP.len() - 1) / (buckets - 1)
    };
    RAMP[idx.min(RAMP.len() - 1)]
}

/// Classify every bit of a signature against ascending bucket edges. The
/// bucket for a cycle c is the first edge with c <= edge; edges must cover
/// every recorded cycle.
pub fn heatmap(sig: &Signature, bucket_edges: &[u32]) -> Result<HeatmapGrid, AnalysisError> {
    if bucket_edges.is_empty() || bucket_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalysisError::UnsortedEdges);
    }
    let last = *bucket_edges.last().expect("non-empty");
    let mut classes = Vec::with_capacity(ROWS * COLS);
    for bit in 0..(ROWS * COLS) as u32 {
        let value = sig.first_flip(bit);
        if value == NEVER {
            classes.push(CellClass::Stable);
        } else {
            if value > last {
                return Err(AnalysisError::ValueBeyondEdges { value, last });
            }
            let bucket = bucket_edges.partition_point(|&edge| edge < value);
            classes.push(CellClass::Flipped(bucket as u8));
        }
    }
    Ok(HeatmapGrid { bucket_edges: bucket_edges.to_vec(), classes })
}

/// Eight logarithmically spaced edges over [1, total_cycles].
pub fn default_bucket_edges(total_cycles: u32) -> Vec<u32> {
    let total = total_cycles.max(1);
    let mut edges = Vec::with_capacity(8);
    let mut prev = 0u32;
    for i in 1..=8u32 {
        let raw = f64::from(total).powf(f64::from(i) / 8.0).round() as u32;
        let edge = raw.max(prev + 1);
        edges.push(edge);
        prev = edge;
    }
    // The last edge must reach the full budget.
    let last = edges.last_mut().expect("eight edges");
    *last = (*last).max(total);
    edges
}

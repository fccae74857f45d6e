use puf_extraction::{Signature, StableBitMap, NEVER};

use crate::AnalysisError;

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooFewPoints(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(AnalysisError::ConstantInput);
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation-ready view of a signature: never-flipped bits map to
/// `total_cycles + 1`, one past every recordable cycle, so censored bits
/// stay maximally ranked without infinities.
pub fn signature_values(sig: &Signature) -> Vec<f64> {
    sig.values()
        .iter()
        .map(|&v| {
            if v == NEVER {
                f64::from(sig.total_cycles) + 1.0
            } else {
                f64::from(v)
            }
        })
        .collect()
}

/// Fraction of positions where the two stability masks disagree.
pub fn fractional_hamming(a: &StableBitMap, b: &StableBitMap) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch {
            left: a.len() as usize,
            right: b.len() as usize,
        });
    }
    Ok(f64::from(a.differing_bits(b)) / f64::from(a.len()))
}

/// Bits stable in every pass.
pub fn stable_bits_across_passes(maps: &[StableBitMap]) -> Result<StableBitMap, AnalysisError> {
    let (first, rest) = maps.split_first().ok_or(AnalysisError::TooFewPoints(0))?;
    let mut combined = first.clone();
    for map in rest {
        if map.len() != combined.len() {
            return Err(AnalysisError::LengthMismatch {
                left: combined.len() as usize,
                right: map.len() as usize,
            });
        }
        combined.intersect_with(map);
    }
    Ok(combined)
}

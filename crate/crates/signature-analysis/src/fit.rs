use crate::AnalysisError;

/// Exponential law `cycles = scale * exp(rate * page)` fitted to first-flip
/// observations, with the fit residual kept in the log domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFit {
    pub scale: f64,
    pub rate: f64,
    /// Root-mean-square residual of ln(cycles) against the fitted line.
    pub log_rms: f64,
}

/// Least squares of ln(cycles) against page index.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<CurveFit, AnalysisError> {
    if points.len() < 2 {
        return Err(AnalysisError::TooFewPoints(points.len()));
    }
    for &(_, cycles) in points {
        if cycles.is_nan() || cycles <= 0.0 {
            return Err(AnalysisError::NonPositiveCycles(cycles));
        }
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = points.iter().map(|(_, y)| y.ln()).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        let dx = x - mx;
        sxx += dx * dx;
        sxy += dx * (y.ln() - my);
    }
    if sxx == 0.0 {
        return Err(AnalysisError::DegenerateAbscissa);
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let mut rss = 0.0;
    for &(x, y) in points {
        let r = y.ln() - (intercept + rate * x);
        rss += r * r;
    }
    Ok(CurveFit { scale: intercept.exp(), rate, log_rms: (rss / n).sqrt() })
}

/// Predicted first-flip cycle at a page index, rounded to whole cycles
/// (saturating on overflow).
pub fn predict_first_flip(fit: &CurveFit, page: u32) -> u64 {
    let value = (fit.scale * (fit.rate * f64::from(page)).exp()).round();
    if value >= u64::MAX as f64 {
        u64::MAX
    } else if value < 0.0 {
        0
    } else {
        value as u64
    }
}

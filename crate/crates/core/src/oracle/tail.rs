//! Log-linear fit of the empirical delay tail.

use serde::Serialize;

use super::queue::DelayHistogram;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    /// d ln Pr{D ≥ d} / dd.
    pub slope: f64,
    pub intercept: f64,
    /// Delays actually used in the regression.
    pub delays: Vec<usize>,
}

/// Least-squares line through ln Pr{D ≥ d} for `d_min ≤ d ≤ d_max`, using
/// only delays whose tail holds at least `min_pieces` FIFO fragments.
/// Returns `None` with fewer than three usable points.
pub fn fit_tail_slope(hist: &DelayHistogram, d_min: usize, d_max: usize, min_pieces: u64) -> Option<TailFit> {
    let pts: Vec<(usize, f64)> = (d_min..=d_max)
        .filter(|&d| hist.tail_pieces(d) >= min_pieces)
        .map(|d| (d, hist.ccdf(d)))
        .filter(|&(_, p)| p > 0.0)
        .map(|(d, p)| (d, p.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|&(d, _)| d as f64).sum::<f64>() / n;
    let my = pts.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|&(d, y)| (d as f64 - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|&(d, _)| (d as f64 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Some(TailFit { slope, intercept: my - slope * mx, delays: pts.into_iter().map(|(d, _)| d).collect() })
}

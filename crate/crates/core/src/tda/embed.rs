//! Delay and dimension estimation and Takens embedding.

use crate::error::{Error, Result};
use crate::fpa::fft_magnitude;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingParams {
    pub dimension: usize,
    pub delay: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayEstimate {
    pub delay: usize,
    pub dominant_hz: f64,
    /// Spectrum too flat to name a dominant frequency; `delay` is then 1.
    pub degenerate: bool,
}

/// Spectral flatness at or above which no dominant frequency is trusted.
pub const FLATNESS_LIMIT: f64 = 0.3;

/// Quarter period of the dominant (non-DC) FFT frequency, in samples.
pub fn estimate_delay(x: &[f64], fs: f64) -> Result<DelayEstimate> {
    if x.len() < 4 {
        return Err(Error::SignalTooShort {
            needed: 4,
            got: x.len(),
        });
    }
    if stats::variance(x) <= 0.0 {
        return Err(Error::ConstantSignal);
    }
    let m = stats::mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let spec = fft_magnitude(&centered, fs)?;
    let power: Vec<f64> = spec.ordinate[1..].iter().map(|a| a * a).collect();
    let (k, _) = power
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
    let dominant_hz = spec.abscissa[k + 1];

    let arith = stats::mean(&power);
    let geo = (power.iter().map(|p| p.max(1e-300).ln()).sum::<f64>() / power.len() as f64).exp();
    let flatness = if arith > 0.0 { geo / arith } else { 1.0 };
    if flatness >= FLATNESS_LIMIT {
        return Ok(DelayEstimate {
            delay: 1,
            dominant_hz,
            degenerate: true,
        });
    }
    let delay = (fs / (4.0 * dominant_hz)).round().max(1.0) as usize;
    Ok(DelayEstimate {
        delay,
        dominant_hz,
        degenerate: false,
    })
}

pub fn takens_embed(x: &[f64], params: EmbeddingParams) -> Result<PointCloud> {
    let EmbeddingParams {
        dimension: m,
        delay: tau,
    } = params;
    if m < 2 {
        return Err(Error::invalid("embedding dimension must be at least 2"));
    }
    if tau == 0 {
        return Err(Error::invalid("embedding delay must be positive"));
    }
    let span = (m - 1) * tau;
    let needed = span + m + 1;
    if x.len() < needed {
        return Err(Error::SignalTooShort { needed, got: x.len() });
    }
    let count = x.len() - span;
    let points = (0..count).map(|i| (0..m).map(|k| x[i + k * tau]).collect()).collect();
    Ok(PointCloud { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FnnEstimate {
    pub dimension: usize,
    /// The false-neighbour fraction never dropped below the threshold.
    pub capped: bool,
}

pub const FNN_CAP: usize = 10;
const FNN_RTOL: f64 = 10.0;
const FNN_ATOL: f64 = 2.0;

/// Fraction of false nearest neighbours when going from dimension `m` to
/// `m + 1` (Kennel's distance-ratio and attractor-size tests).
pub fn false_neighbor_fraction(x: &[f64], tau: usize, m: usize) -> f64 {
    let n = x.len().saturating_sub(m * tau);
    if n < 2 {
        return 1.0;
    }
    let ra = stats::std_dev(x);
    let mut false_count = 0usize;
    for i in 0..n {
        let mut best = (usize::MAX, f64::INFINITY);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d2: f64 = (0..m).map(|k| (x[i + k * tau] - x[j + k * tau]).powi(2)).sum();
            if d2 < best.1 {
                best = (j, d2);
            }
        }
        let (j, d2) = best;
        let extra = (x[i + m * tau] - x[j + m * tau]).abs();
        let rm = d2.sqrt();
        let rm1 = (d2 + extra * extra).sqrt();
        // Neighbours closer than round-off are repeats of the same state.
        let tol = 1e-9 * ra.max(f64::MIN_POSITIVE);
        let is_false = if rm > tol {
            extra / rm > FNN_RTOL || (ra > 0.0 && rm1 / ra > FNN_ATOL)
        } else {
            extra > tol
        };
        if is_false {
            false_count += 1;
        }
    }
    false_count as f64 / n as f64
}

/// Smallest dimension (at least 2) whose false-neighbour fraction falls
/// below `threshold`, capped at 10.
pub fn estimate_dimension_fnn(x: &[f64], tau: usize, threshold: f64) -> Result<FnnEstimate> {
    if tau == 0 {
        return Err(Error::invalid("embedding delay must be positive"));
    }
    let needed = 10 * tau + 1;
    if x.len() < needed {
        return Err(Error::SignalTooShort { needed, got: x.len() });
    }
    for m in 1..FNN_CAP {
        if (m + 1) * tau >= x.len() {
            break;
        }
        if false_neighbor_fraction(x, tau, m) < threshold {
            return Ok(FnnEstimate {
                dimension: m.max(2),
                capped: false,
            });
        }
    }
    Ok(FnnEstimate {
        dimension: FNN_CAP,
        capped: true,
    })
}

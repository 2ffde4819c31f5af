//! FFT / PSD / ACF peak-coordinate features ("FPA").
//!
//! Each transform is reduced to the coordinates of its tallest peaks after
//! two gates: a minimum peak height set between the 5th and 95th
//! percentiles of the ordinate, and a minimum distance between accepted
//! peaks along the abscissa.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesRecord;
use crate::error::{Error, Result};
use crate::stats::{mean, percentile};

/// A sampled curve: Hz on the abscissa for FFT/PSD, lag samples for ACF.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub abscissa: Vec<f64>,
    pub ordinate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    /// `(abscissa, ordinate)`, tallest first.
    pub peaks: Vec<(f64, f64)>,
    pub mph: f64,
    pub mpd: f64,
}

impl PeakSet {
    /// True when every peak clears the height gate and all pairs respect
    /// the distance gate.
    pub fn satisfies_gates(&self) -> bool {
        let heights_ok = self.peaks.iter().all(|p| p.1 >= self.mph);
        let sorted = self.peaks.windows(2).all(|w| w[0].1 >= w[1].1);
        let mut xs: Vec<f64> = self.peaks.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        let spaced = xs.windows(2).all(|w| w[1] - w[0] >= self.mpd);
        heights_ok && sorted && spaced
    }
}

fn forward_fft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// One-sided magnitude spectrum `|X_k|`, `k = 0..=N/2`, unnormalized.
pub fn fft_magnitude(x: &[f64], fs: f64) -> Result<SpectrumEstimate> {
    if x.len() < 2 {
        return Err(Error::EmptyInput { needed: 2 });
    }
    let n = x.len();
    let spectrum = forward_fft(x);
    let half = n / 2 + 1;
    Ok(SpectrumEstimate {
        abscissa: (0..half).map(|k| k as f64 * fs / n as f64).collect(),
        ordinate: spectrum[..half].iter().map(|c| c.norm()).collect(),
    })
}

/// Periodic Hann window.
fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

/// Welch PSD (density scaling, one-sided): eight Hann-windowed segments
/// with ~50% overlap, no detrending. Integrates to the mean square of `x`.
pub fn psd_estimate(x: &[f64], fs: f64) -> Result<SpectrumEstimate> {
    const SEGMENTS: usize = 8;
    let n = x.len();
    if n < 8 {
        return Err(Error::EmptyInput { needed: 8 });
    }
    let mut seg_len = 2 * n / 9;
    let mut count = SEGMENTS;
    if seg_len < 4 {
        seg_len = n;
        count = 1;
    }
    let window = hann(seg_len);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(seg_len);
    let half = seg_len / 2 + 1;
    let mut acc = vec![0.0; half];
    let span = n - seg_len;
    for i in 0..count {
        let start = if count > 1 {
            ((i * span) as f64 / (count - 1) as f64).round() as usize
        } else {
            0
        };
        let mut buf: Vec<Complex64> = x[start..start + seg_len]
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new(v * w, 0.0))
            .collect();
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf[..half]) {
            *a += c.norm_sqr();
        }
    }
    let scale = 1.0 / (fs * win_power * count as f64);
    let ordinate: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let interior = k != 0 && !(seg_len.is_multiple_of(2) && k == seg_len / 2);
            p * scale * if interior { 2.0 } else { 1.0 }
        })
        .collect();
    Ok(SpectrumEstimate {
        abscissa: (0..half).map(|k| k as f64 * fs / seg_len as f64).collect(),
        ordinate,
    })
}

/// Biased autocorrelation normalized to 1 at lag 0, lags `0..=max_lag`.
/// A constant series yields 1 at lag 0 and zeros elsewhere.
pub fn acf(x: &[f64], max_lag: usize) -> Result<SpectrumEstimate> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput { needed: 1 });
    }
    if max_lag >= n {
        return Err(Error::LagTooLarge { max_lag, len: n });
    }
    let m = mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = x
        .iter()
        .map(|v| Complex64::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let r0 = buf[0].re;
    let ordinate = if r0 <= f64::EPSILON * n as f64 * (m.abs() + 1.0) {
        (0..=max_lag).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect()
    } else {
        (0..=max_lag).map(|k| (buf[k].re / r0).clamp(-1.0, 1.0)).collect()
    };
    Ok(SpectrumEstimate {
        abscissa: (0..=max_lag).map(|k| k as f64).collect(),
        ordinate,
    })
}

/// `MPH = y_min + alpha * (y_max - y_min)` over the 5th/95th percentiles.
pub fn min_peak_height(ordinate: &[f64], alpha: f64) -> f64 {
    let lo = percentile(ordinate, 5.0);
    let hi = percentile(ordinate, 95.0);
    lo + alpha * (hi - lo)
}

/// Strict 3-point local maxima gated by height, then a greedy pass from the
/// tallest that discards anything within `mpd` of an accepted peak.
pub fn detect_peaks(s: &SpectrumEstimate, alpha: f64, mpd: f64) -> PeakSet {
    let y = &s.ordinate;
    let mph = if y.is_empty() { 0.0 } else { min_peak_height(y, alpha) };
    let mut candidates: Vec<usize> = (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] > y[i + 1] && y[i] >= mph)
        .collect();
    candidates.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in candidates {
        let x = s.abscissa[i];
        if peaks.iter().all(|p| (p.0 - x).abs() >= mpd) {
            peaks.push((x, y[i]));
        }
    }
    PeakSet { peaks, mph, mpd }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpaParams {
    pub alpha_fft: f64,
    pub alpha_psd: f64,
    pub alpha_acf: f64,
    /// Hz.
    pub mpd_fft: f64,
    /// Hz.
    pub mpd_psd: f64,
    /// Lag samples.
    pub mpd_acf: f64,
    pub n_peaks: usize,
}

impl Default for FpaParams {
    fn default() -> Self {
        FpaParams {
            alpha_fft: 0.1,
            alpha_psd: 0.1,
            alpha_acf: 0.5,
            mpd_fft: 500.0,
            mpd_psd: 500.0,
            mpd_acf: 500.0,
            n_peaks: 2,
        }
    }
}

pub fn fpa_feature_names(n_peaks: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(6 * n_peaks);
    for transform in ["fft", "psd", "acf"] {
        for k in 1..=n_peaks {
            names.push(format!("{transform}_peak{k}_x"));
            names.push(format!("{transform}_peak{k}_y"));
        }
    }
    names
}

fn push_peaks(out: &mut Vec<f64>, peaks: &PeakSet, n_peaks: usize) {
    for k in 0..n_peaks {
        let (x, y) = peaks.peaks.get(k).copied().unwrap_or((0.0, 0.0));
        out.push(x);
        out.push(y);
    }
}

/// `(x, y)` of the first `n_peaks` peaks of the FFT, PSD and ACF, in that
/// order; missing peaks are zero-padded.
pub fn fpa_features(x: &[f64], fs: f64, params: &FpaParams) -> Result<Vec<f64>> {
    let fft = fft_magnitude(x, fs)?;
    let psd = psd_estimate(x, fs)?;
    let acf = acf(x, x.len() - 1)?;
    let mut out = Vec::with_capacity(6 * params.n_peaks);
    push_peaks(
        &mut out,
        &detect_peaks(&fft, params.alpha_fft, params.mpd_fft),
        params.n_peaks,
    );
    push_peaks(
        &mut out,
        &detect_peaks(&psd, params.alpha_psd, params.mpd_psd),
        params.n_peaks,
    );
    push_peaks(
        &mut out,
        &detect_peaks(&acf, params.alpha_acf, params.mpd_acf),
        params.n_peaks,
    );
    Ok(out)
}

pub fn fpa_feature_vector(record: &TimeSeriesRecord, params: &FpaParams) -> Result<Vec<f64>> {
    fpa_features(&record.samples, record.fs, params)
}

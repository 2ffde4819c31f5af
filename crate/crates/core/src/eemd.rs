//! Empirical mode decomposition by cubic-spline sifting, its noise-assisted
//! ensemble variant, and the informative-IMF features.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesRecord;
use crate::error::{Error, Result};
use crate::fpa::fft_magnitude;
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    pub imfs: Vec<Vec<f64>>,
    pub residue: Vec<f64>,
    pub ensemble_size: usize,
    pub noise_std_fraction: f64,
}

impl ImfSet {
    /// Sum of all IMFs plus the residue.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residue.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(imf) {
                *o += v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiftConfig {
    pub sd_threshold: f64,
    /// Per-IMF cap on sifting iterations.
    pub max_sift: usize,
    pub max_imfs: Option<usize>,
}

impl Default for SiftConfig {
    fn default() -> Self {
        SiftConfig {
            sd_threshold: 0.25,
            max_sift: 50,
            max_imfs: None,
        }
    }
}

/// Indices of local maxima and minima. Plateaus count once, at their first
/// sample.
pub fn extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let n = x.len();
    if n < 3 {
        return (maxima, minima);
    }
    let mut i = 1;
    while i < n - 1 {
        // Skip across a flat run to see where it exits.
        let mut j = i;
        while j < n - 1 && x[j + 1] == x[i] {
            j += 1;
        }
        if j == n - 1 {
            break;
        }
        let before = x[i - 1];
        let after = x[j + 1];
        if x[i] > before && x[i] > after {
            maxima.push(i);
        } else if x[i] < before && x[i] < after {
            minima.push(i);
        }
        i = j + 1;
    }
    (maxima, minima)
}

fn zero_crossings(x: &[f64]) -> usize {
    x.windows(2)
        .filter(|w| (w[0] < 0.0 && w[1] >= 0.0) || (w[0] > 0.0 && w[1] <= 0.0))
        .count()
}

/// Natural cubic spline through `(t, v)` (strictly increasing `t`),
/// evaluated at `0..n`.
fn natural_spline(t: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    let k = t.len();
    match k {
        0 => return vec![0.0; n],
        1 => return vec![v[0]; n],
        _ => {}
    }
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    // Second derivatives; natural ends keep m[0] = m[k-1] = 0.
    let mut m = vec![0.0; k];
    if k > 2 {
        let size = k - 2;
        let mut diag = vec![0.0; size];
        let mut upper = vec![0.0; size];
        let mut rhs = vec![0.0; size];
        for i in 0..size {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            upper[i] = h[i + 1];
            rhs[i] = 6.0 * ((v[i + 2] - v[i + 1]) / h[i + 1] - (v[i + 1] - v[i]) / h[i]);
        }
        // Thomas algorithm; the sub-diagonal equals h[i].
        for i in 1..size {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m[size] = rhs[size - 1] / diag[size - 1];
        for i in (0..size - 1).rev() {
            m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for s in 0..n {
        let p = s as f64;
        while seg + 2 < k && p > t[seg + 1] {
            seg += 1;
        }
        let (t0, t1) = (t[seg], t[seg + 1]);
        let hh = t1 - t0;
        let a = (t1 - p) / hh;
        let b = (p - t0) / hh;
        let val =
            a * v[seg] + b * v[seg + 1] + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * hh * hh / 6.0;
        out.push(val);
    }
    out
}

/// Envelope through the given extrema, with the two outermost extrema at
/// each end mirrored across the boundary samples.
fn envelope(x: &[f64], idx: &[usize]) -> Vec<f64> {
    let n = x.len();
    let last = (n - 1) as f64;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(idx.len() + 4);
    for &i in idx.iter().take(2).rev() {
        if i > 0 {
            pts.push((-(i as f64), x[i]));
        }
    }
    pts.extend(idx.iter().map(|&i| (i as f64, x[i])));
    for &i in idx.iter().rev().take(2) {
        if i < n - 1 {
            pts.push((2.0 * last - i as f64, x[i]));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let (t, v): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    natural_spline(&t, &v, n)
}

/// True when sifting can continue: at least one maximum and one minimum.
fn has_oscillation(x: &[f64]) -> bool {
    let (mx, mn) = extrema(x);
    !mx.is_empty() && !mn.is_empty()
}

fn sift_one(x: &[f64], cfg: &SiftConfig) -> Vec<f64> {
    let mut h = x.to_vec();
    for _ in 0..cfg.max_sift {
        let (mx, mn) = extrema(&h);
        if mx.is_empty() || mn.is_empty() {
            break;
        }
        let upper = envelope(&h, &mx);
        let lower = envelope(&h, &mn);
        let next: Vec<f64> = h
            .iter()
            .zip(upper.iter().zip(&lower))
            .map(|(v, (u, l))| v - 0.5 * (u + l))
            .collect();
        let denom = stats::energy(&h);
        let sd = if denom > 0.0 {
            h.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / denom
        } else {
            0.0
        };
        h = next;
        let (mx, mn) = extrema(&h);
        let n_ext = mx.len() + mn.len();
        let is_imf = n_ext.abs_diff(zero_crossings(&h)) <= 1;
        if sd < cfg.sd_threshold && is_imf {
            break;
        }
    }
    h
}

fn emd_unchecked(x: &[f64], cfg: &SiftConfig) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut residue = x.to_vec();
    let mut imfs = Vec::new();
    // Without an explicit cap, stop well past the ~log2(n) IMFs a dyadic
    // filter bank would produce.
    let cap = cfg
        .max_imfs
        .unwrap_or(2 * (usize::BITS - x.len().leading_zeros()) as usize + 2);
    let floor = 1e-10 * stats::std_dev(x);
    while imfs.len() < cap && has_oscillation(&residue) && stats::std_dev(&residue) > floor {
        let imf = sift_one(&residue, cfg);
        for (r, v) in residue.iter_mut().zip(&imf) {
            *r -= v;
        }
        imfs.push(imf);
    }
    (imfs, residue)
}

fn check_input(x: &[f64]) -> Result<()> {
    if x.len() < 8 {
        return Err(Error::SignalTooShort {
            needed: 8,
            got: x.len(),
        });
    }
    if stats::variance(x) <= 0.0 {
        return Err(Error::ConstantSignal);
    }
    Ok(())
}

/// Plain EMD. Extraction stops once the residue lacks either a maximum or
/// a minimum (monotonic or single-extremum), or has decayed to round-off.
pub fn emd_sift(x: &[f64], cfg: &SiftConfig) -> Result<ImfSet> {
    check_input(x)?;
    let (imfs, residue) = emd_unchecked(x, cfg);
    Ok(ImfSet {
        imfs,
        residue,
        ensemble_size: 1,
        noise_std_fraction: 0.0,
    })
}

/// Ensemble EMD: mean IMFs over `ensemble_size` noisy copies. Member `i`
/// draws its noise from stream `i` of a ChaCha generator keyed by `seed`,
/// so the result does not depend on thread scheduling. Members with fewer
/// IMFs contribute zeros to the missing ones.
pub fn eemd(x: &[f64], ensemble_size: usize, noise_std_fraction: f64, seed: u64, cfg: &SiftConfig) -> Result<ImfSet> {
    if ensemble_size == 0 {
        return Err(Error::invalid("ensemble size must be positive"));
    }
    if !(noise_std_fraction >= 0.0 && noise_std_fraction.is_finite()) {
        return Err(Error::invalid("noise fraction must be non-negative"));
    }
    check_input(x)?;
    let sigma = noise_std_fraction * stats::std_dev(x);
    let normal = Normal::new(0.0, sigma.max(0.0)).map_err(|e| Error::invalid(e.to_string()))?;
    let members: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (0..ensemble_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let noisy: Vec<f64> = if sigma > 0.0 {
                x.iter().map(|v| v + normal.sample(&mut rng)).collect()
            } else {
                x.to_vec()
            };
            emd_unchecked(&noisy, cfg)
        })
        .collect();
    let n = x.len();
    let n_imfs = members.iter().map(|m| m.0.len()).max().unwrap_or(0);
    let scale = 1.0 / ensemble_size as f64;
    let mut imfs = vec![vec![0.0; n]; n_imfs];
    let mut residue = vec![0.0; n];
    for (m_imfs, m_res) in &members {
        for (acc, imf) in imfs.iter_mut().zip(m_imfs) {
            for (a, v) in acc.iter_mut().zip(imf) {
                *a += v * scale;
            }
        }
        for (a, v) in residue.iter_mut().zip(m_res) {
            *a += v * scale;
        }
    }
    Ok(ImfSet {
        imfs,
        residue,
        ensemble_size,
        noise_std_fraction,
    })
}

/// Normalized inner product of magnitude spectra.
pub fn spectral_overlap(a: &[f64], b: &[f64]) -> f64 {
    let (Ok(sa), Ok(sb)) = (fft_magnitude(a, 1.0), fft_magnitude(b, 1.0)) else {
        return 0.0;
    };
    let dot: f64 = sa.ordinate.iter().zip(&sb.ordinate).map(|(p, q)| p * q).sum();
    let na = stats::energy(&sa.ordinate).sqrt();
    let nb = stats::energy(&sb.ordinate).sqrt();
    if na <= 0.0 || nb <= 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// 0-based index of the IMF whose spectrum overlaps `x` most; ties go to
/// the lowest index.
pub fn select_informative_imf(set: &ImfSet, x: &[f64]) -> Result<usize> {
    if set.imfs.is_empty() {
        return Err(Error::invalid("IMF set is empty"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, imf) in set.imfs.iter().enumerate() {
        let score = spectral_overlap(imf, x);
        if score > best.1 {
            best = (i, score);
        }
    }
    Ok(best.0)
}

pub const EEMD_FEATURE_NAMES: [&str; 7] = [
    "energy_ratio",
    "peak_to_peak",
    "std",
    "rms",
    "crest_factor",
    "skewness",
    "kurtosis",
];

pub fn eemd_feature_names() -> Vec<String> {
    EEMD_FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Features of one IMF relative to its source signal. A zero IMF gives
/// zero energy ratio and zero crest factor.
pub fn eemd_feature_vector(imf: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if imf.is_empty() || x.is_empty() {
        return Err(Error::EmptyInput { needed: 1 });
    }
    let ex = stats::energy(x);
    let ratio = if ex > 0.0 { stats::energy(imf) / ex } else { 0.0 };
    let max = imf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = imf.iter().copied().fold(f64::INFINITY, f64::min);
    let rms = stats::rms(imf);
    let crest = if rms > 0.0 { stats::max_abs(imf) / rms } else { 0.0 };
    Ok(vec![
        ratio,
        max - min,
        stats::std_dev(imf),
        rms,
        crest,
        stats::skewness(imf),
        stats::kurtosis(imf),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EemdParams {
    pub ensemble_size: usize,
    pub noise_std_fraction: f64,
    pub seed: u64,
    pub sift: SiftConfig,
    /// Records sampled per tag when choosing the informative IMF.
    pub selection_sample: usize,
}

impl Default for EemdParams {
    fn default() -> Self {
        EemdParams {
            ensemble_size: 100,
            noise_std_fraction: 0.2,
            seed: 0,
            sift: SiftConfig::default(),
            selection_sample: 5,
        }
    }
}

pub fn eemd_record(record: &TimeSeriesRecord, params: &EemdParams) -> Result<ImfSet> {
    eemd(
        &record.samples,
        params.ensemble_size,
        params.noise_std_fraction,
        params.seed,
        &params.sift,
    )
}

/// Most frequent informative IMF over the first `selection_sample` records
/// of a tag; ties go to the lower index.
pub fn select_informative_imf_for_tag(records: &[TimeSeriesRecord], params: &EemdParams) -> Result<usize> {
    let sample = &records[..records.len().min(params.selection_sample.max(1))];
    if sample.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let picks = sample
        .par_iter()
        .map(|r| {
            let set = eemd_record(r, params)?;
            select_informative_imf(&set, &r.samples)
        })
        .collect::<Result<Vec<usize>>>()?;
    let top = picks.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; top + 1];
    for p in &picks {
        counts[*p] += 1;
    }
    let best = counts
        .iter()
        .enumerate()
        .fold((0, 0), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
    Ok(best.0)
}

/// Features of IMF `imf_index` of a record. When the record yields fewer
/// IMFs, its last IMF is used.
pub fn eemd_record_features(record: &TimeSeriesRecord, params: &EemdParams, imf_index: usize) -> Result<Vec<f64>> {
    let set = eemd_record(record, params)?;
    let imf = match set.imfs.get(imf_index).or(set.imfs.last()) {
        Some(imf) => imf.as_slice(),
        None => set.residue.as_slice(),
    };
    eemd_feature_vector(imf, &record.samples)
}

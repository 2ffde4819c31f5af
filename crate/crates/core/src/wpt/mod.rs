//! Wavelet packet decomposition with symmetric (half-sample) boundary
//! extension, single-packet reconstruction, and the 14 time/frequency
//! features computed on the reconstructed informative packet.

mod wavelets;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dataset::{StabilityLabel, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::stats;

pub use wavelets::FilterBank;

pub const DEFAULT_WAVELET: &str = "db4";
pub const DEFAULT_LEVEL: usize = 4;

/// Leaves of a full packet tree, stored in frequency order.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPacketTree {
    pub level: usize,
    pub wavelet_name: String,
    pub packets: Vec<Vec<f64>>,
    /// Signal length at each depth; `lengths[0]` is the input length.
    pub lengths: Vec<usize>,
}

impl WaveletPacketTree {
    pub fn n_packets(&self) -> usize {
        self.packets.len()
    }

    pub fn signal_len(&self) -> usize {
        self.lengths[0]
    }
}

/// Position in natural (Paley) order of the packet at frequency rank `f`.
fn natural_index(f: usize) -> usize {
    f ^ (f >> 1)
}

fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period);
    if r < n as isize {
        r as usize
    } else {
        (period - 1 - r) as usize
    }
}

/// One analysis step: returns (approximation, detail), each of length
/// `floor((n + F - 1) / 2)`.
fn analysis_step(x: &[f64], fb: &FilterBank) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let f = fb.len();
    let m = (n + f - 1) / 2;
    let mut a = vec![0.0; m];
    let mut d = vec![0.0; m];
    for k in 0..m {
        let (mut sa, mut sd) = (0.0, 0.0);
        for j in 0..f {
            let idx = 2 * k as isize + 1 - j as isize;
            let v = x[reflect(idx, n)];
            sa += fb.lowpass[j] * v;
            sd += fb.highpass[j] * v;
        }
        a[k] = sa;
        d[k] = sd;
    }
    (a, d)
}

/// Inverse of `analysis_step` truncated to `out_len` samples. Either half
/// may be absent (treated as zeros).
fn synthesis_step(a: Option<&[f64]>, d: Option<&[f64]>, fb: &FilterBank, out_len: usize) -> Vec<f64> {
    let f = fb.len() as isize;
    let mut x = vec![0.0; out_len];
    for (half, filt) in [(a, &fb.lowpass), (d, &fb.highpass)] {
        let Some(c) = half else { continue };
        for (k, &ck) in c.iter().enumerate() {
            if ck == 0.0 {
                continue;
            }
            // x[m] += filt[2k + 1 - m] * c[k] for valid filter taps.
            let base = 2 * k as isize + 1;
            let lo = (base - f + 1).max(0);
            let hi = base.min(out_len as isize - 1);
            for m in lo..=hi {
                x[m as usize] += filt[(base - m) as usize] * ck;
            }
        }
    }
    x
}

pub fn wpt_decompose(x: &[f64], level: usize, wavelet: &str) -> Result<WaveletPacketTree> {
    let fb = FilterBank::by_name(wavelet)?;
    if level == 0 {
        return Err(Error::invalid("decomposition level must be positive"));
    }
    let needed = 1usize << level;
    if x.len() < needed {
        return Err(Error::SignalTooShort { needed, got: x.len() });
    }
    let mut lengths = vec![x.len()];
    let mut nodes = vec![x.to_vec()];
    for _ in 0..level {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for node in &nodes {
            let (a, d) = analysis_step(node, &fb);
            next.push(a);
            next.push(d);
        }
        lengths.push(next[0].len());
        nodes = next;
    }
    let mut packets = vec![Vec::new(); nodes.len()];
    for (f, slot) in packets.iter_mut().enumerate() {
        *slot = std::mem::take(&mut nodes[natural_index(f)]);
    }
    Ok(WaveletPacketTree {
        level,
        wavelet_name: fb.name,
        packets,
        lengths,
    })
}

/// Packet energy divided by total packet energy. An all-zero tree yields
/// all-zero ratios.
pub fn energy_ratios(tree: &WaveletPacketTree) -> Vec<f64> {
    let energies: Vec<f64> = tree.packets.iter().map(|p| stats::energy(p)).collect();
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return vec![0.0; energies.len()];
    }
    energies.iter().map(|e| e / total).collect()
}

/// Time-domain signal carried by one packet (1-based, frequency order),
/// with every other packet set to zero.
pub fn reconstruct_packet(tree: &WaveletPacketTree, packet_index: usize) -> Result<Vec<f64>> {
    let n = tree.n_packets();
    if packet_index == 0 || packet_index > n {
        return Err(Error::IndexOutOfRange {
            index: packet_index,
            max: n,
        });
    }
    let fb = FilterBank::by_name(&tree.wavelet_name)?;
    let mut node = natural_index(packet_index - 1);
    let mut current = tree.packets[packet_index - 1].clone();
    for depth in (0..tree.level).rev() {
        let out_len = tree.lengths[depth];
        current = if node & 1 == 0 {
            synthesis_step(Some(&current), None, &fb, out_len)
        } else {
            synthesis_step(None, Some(&current), &fb, out_len)
        };
        node >>= 1;
    }
    Ok(current)
}

/// Full inverse transform from every packet.
pub fn reconstruct_all(tree: &WaveletPacketTree) -> Result<Vec<f64>> {
    let fb = FilterBank::by_name(&tree.wavelet_name)?;
    let mut nodes = vec![Vec::new(); tree.n_packets()];
    for (f, p) in tree.packets.iter().enumerate() {
        nodes[natural_index(f)] = p.clone();
    }
    for depth in (0..tree.level).rev() {
        let out_len = tree.lengths[depth];
        nodes = nodes
            .chunks(2)
            .map(|pair| synthesis_step(Some(&pair[0]), Some(&pair[1]), &fb, out_len))
            .collect();
    }
    Ok(nodes.pop().unwrap_or_default())
}

/// Dataset tag to 1-based level-4 packet index.
#[derive(Debug, Clone, PartialEq)]
pub struct InformativePacketTable {
    pub entries: BTreeMap<String, usize>,
}

impl Default for InformativePacketTable {
    fn default() -> Self {
        let entries = [
            ("turning-5.08cm", 3),
            ("turning-6.35cm", 4),
            ("turning-8.89cm", 6),
            ("turning-11.43cm", 10),
            ("milling", 3),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        InformativePacketTable { entries }
    }
}

impl InformativePacketTable {
    pub fn get(&self, tag: &str) -> Option<usize> {
        self.entries.get(tag).copied()
    }

    pub fn insert(&mut self, tag: impl Into<String>, packet: usize) -> Result<()> {
        if !(1..=16).contains(&packet) {
            return Err(Error::IndexOutOfRange { index: packet, max: 16 });
        }
        self.entries.insert(tag.into(), packet);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PacketSelection {
    Table(InformativePacketTable),
    Fixed(usize),
    Auto,
}

/// Informative packet for a group of records sharing one dataset tag.
pub fn select_informative_packet(
    records: &[TimeSeriesRecord],
    selection: &PacketSelection,
    level: usize,
    wavelet: &str,
) -> Result<usize> {
    match selection {
        PacketSelection::Fixed(p) => {
            let max = 1usize << level;
            if *p == 0 || *p > max {
                return Err(Error::IndexOutOfRange { index: *p, max });
            }
            Ok(*p)
        }
        PacketSelection::Table(table) => {
            let tag = records
                .first()
                .map(|r| r.dataset_tag.as_str())
                .ok_or(Error::EmptyDataset)?;
            table
                .get(tag)
                .ok_or_else(|| Error::Config(format!("no informative packet tabulated for tag '{tag}'")))
        }
        PacketSelection::Auto => {
            let mut sum = vec![0.0; 1usize << level];
            let mut count = 0usize;
            for r in records.iter().filter(|r| r.label == StabilityLabel::Unstable) {
                let tree = wpt_decompose(&r.samples, level, wavelet)?;
                for (s, e) in sum.iter_mut().zip(energy_ratios(&tree)) {
                    *s += e;
                }
                count += 1;
            }
            if count == 0 {
                return Err(Error::NoUnstableRecords);
            }
            let best = sum
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
                .0;
            Ok(best + 1)
        }
    }
}

pub const WPT_FEATURE_NAMES: [&str; 14] = [
    "mean",
    "std",
    "rms",
    "peak",
    "skewness",
    "kurtosis",
    "crest_factor",
    "clearance_factor",
    "shape_factor",
    "impulse_factor",
    "mean_square_frequency",
    "standard_frequency",
    "acf_lag1",
    "frequency_center",
];

pub fn wpt_feature_names() -> Vec<String> {
    WPT_FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// True when the signal has zero variance; such signals get zero shape
/// ratios and zero frequency features.
pub fn is_degenerate(x: &[f64]) -> bool {
    stats::variance(x) <= 0.0
}

/// One-sided power spectrum frequencies and weights.
fn power_spectrum(x: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = n / 2 + 1;
    let freqs = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    let power = buf[..bins].iter().map(|c| c.norm_sqr()).collect();
    (freqs, power)
}

pub fn wpt_feature_vector(x: &[f64], fs: f64) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput { needed: 1 });
    }
    let mean = stats::mean(x);
    let std = stats::std_dev(x);
    let rms = stats::rms(x);
    let peak = stats::max_abs(x);
    if is_degenerate(x) {
        return Ok(vec![
            mean, 0.0, rms, peak, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ]);
    }
    let mean_abs = x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
    let mean_sqrt = x.iter().map(|v| v.abs().sqrt()).sum::<f64>() / x.len() as f64;

    let (freqs, power) = power_spectrum(x, fs);
    let total: f64 = power.iter().sum();
    let fc = freqs.iter().zip(&power).map(|(f, p)| f * p).sum::<f64>() / total;
    let msf = freqs.iter().zip(&power).map(|(f, p)| f * f * p).sum::<f64>() / total;
    let std_freq = (msf - fc * fc).max(0.0).sqrt();

    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let acf1 = centered.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / stats::energy(&centered);

    Ok(vec![
        mean,
        std,
        rms,
        peak,
        stats::skewness(x),
        stats::kurtosis(x),
        peak / rms,
        peak / (mean_sqrt * mean_sqrt),
        rms / mean_abs,
        peak / mean_abs,
        msf,
        std_freq,
        acf1,
        fc,
    ])
}

/// Decompose, reconstruct the chosen packet, and featurize it.
pub fn wpt_record_features(record: &TimeSeriesRecord, level: usize, wavelet: &str, packet: usize) -> Result<Vec<f64>> {
    let tree = wpt_decompose(&record.samples, level, wavelet)?;
    let rec = reconstruct_packet(&tree, packet)?;
    wpt_feature_vector(&rec, record.fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        num / stats::energy(b).sqrt().max(f64::MIN_POSITIVE)
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
            .0
    }

    #[test]
    fn packet_count_is_two_to_the_level() {
        let x = noise(300, 1);
        for level in 1..=4 {
            assert_eq!(wpt_decompose(&x, level, "db4").unwrap().n_packets(), 1 << level);
        }
    }

    #[test]
    fn gray_code_frequency_order() {
        let order: Vec<usize> = (0..4).map(natural_index).collect();
        assert_eq!(order, vec![0, 1, 3, 2]);
    }

    #[test]
    fn haar_single_step_matches_closed_form() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let fb = FilterBank::by_name("haar").unwrap();
        let (a, d) = analysis_step(&x, &fb);
        let s = 0.5f64.sqrt();
        assert_eq!(a.len(), 2);
        assert!((a[0] - 3.0 * s).abs() < 1e-12 && (a[1] - 7.0 * s).abs() < 1e-12);
        assert!((d[0] + s).abs() < 1e-12 && (d[1] + s).abs() < 1e-12);
    }

    #[test]
    fn perfect_reconstruction_all_wavelets() {
        for n in 1..=10 {
            let name = format!("db{n}");
            for len in [16, 33, 100, 257] {
                let x = noise(len, len as u64);
                let tree = wpt_decompose(&x, 4, &name).unwrap();
                let full = reconstruct_all(&tree).unwrap();
                assert!(rel_err(&full, &x) < 1e-10, "{name} len {len}");
                let mut sum = vec![0.0; len];
                for p in 1..=16 {
                    for (s, v) in sum.iter_mut().zip(reconstruct_packet(&tree, p).unwrap()) {
                        *s += v;
                    }
                }
                assert!(rel_err(&sum, &x) < 1e-10, "{name} len {len} sum");
            }
        }
    }

    #[test]
    fn low_tone_lands_in_first_packet() {
        let x = tone(100.0, 10_000.0, 1024);
        let r = energy_ratios(&wpt_decompose(&x, 4, "db4").unwrap());
        assert_eq!(argmax(&r), 0);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn band_three_tone() {
        // Level-4 bands are fs/32 wide; band 3 spans [625, 937.5) Hz at 10 kHz.
        let x = tone(816.0, 10_000.0, 1024);
        let tree = wpt_decompose(&x, 4, "db4").unwrap();
        assert_eq!(argmax(&energy_ratios(&tree)) + 1, 3);
        // db4 leaks ~20% into neighbouring packets; the longer db10 filter
        // is sharp enough to keep 95% of a mid-band tone.
        let tree = wpt_decompose(&x, 4, "db10").unwrap();
        assert_eq!(argmax(&energy_ratios(&tree)) + 1, 3);
        let rec = reconstruct_packet(&tree, 3).unwrap();
        assert_eq!(rec.len(), x.len());
        assert!(stats::energy(&rec) >= 0.95 * stats::energy(&x));
    }

    #[test]
    fn swept_tone_moves_argmax_monotonically() {
        let fs = 10_000.0;
        let mut last = 0;
        for band in 0..16 {
            let f = (band as f64 + 0.5) * fs / 32.0;
            let r = energy_ratios(&wpt_decompose(&tone(f, fs, 2048), 4, "db4").unwrap());
            let arg = argmax(&r);
            assert!(arg >= last, "band {band}: {arg} < {last}");
            assert_eq!(arg, band);
            last = arg;
        }
    }

    #[test]
    fn zero_signal_gives_zero_ratios() {
        let r = energy_ratios(&wpt_decompose(&[0.0; 64], 4, "db4").unwrap());
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            wpt_decompose(&[1.0; 8], 4, "db4"),
            Err(Error::SignalTooShort { needed: 16, got: 8 })
        ));
        assert!(matches!(
            wpt_decompose(&[1.0; 32], 2, "coif3"),
            Err(Error::UnknownWavelet(_))
        ));
        let tree = wpt_decompose(&noise(64, 2), 4, "db4").unwrap();
        assert!(matches!(
            reconstruct_packet(&tree, 17),
            Err(Error::IndexOutOfRange { index: 17, max: 16 })
        ));
        assert!(reconstruct_packet(&tree, 0).is_err());
    }

    fn record(tag: &str, label: StabilityLabel, samples: Vec<f64>) -> TimeSeriesRecord {
        TimeSeriesRecord::new("r", samples, 10_000.0, 1000.0, 1.0, label, tag).unwrap()
    }

    #[test]
    fn tabulated_packets() {
        let t = PacketSelection::Table(InformativePacketTable::default());
        let recs = |tag: &str| vec![record(tag, StabilityLabel::Stable, noise(64, 3))];
        assert_eq!(
            select_informative_packet(&recs("turning-5.08cm"), &t, 4, "db4").unwrap(),
            3
        );
        assert_eq!(
            select_informative_packet(&recs("turning-6.35cm"), &t, 4, "db4").unwrap(),
            4
        );
        assert_eq!(
            select_informative_packet(&recs("turning-8.89cm"), &t, 4, "db4").unwrap(),
            6
        );
        assert_eq!(
            select_informative_packet(&recs("turning-11.43cm"), &t, 4, "db4").unwrap(),
            10
        );
        assert_eq!(select_informative_packet(&recs("milling"), &t, 4, "db4").unwrap(), 3);
        assert!(select_informative_packet(&recs("other"), &t, 4, "db4").is_err());
    }

    #[test]
    fn auto_selection_finds_chatter_band() {
        // Band 6 spans [1562.5, 1875) Hz at 10 kHz.
        let fs = 10_000.0;
        let mut recs = Vec::new();
        for i in 0..6 {
            let base = noise(1024, i);
            let chatter = tone(1700.0 + 20.0 * i as f64, fs, 1024);
            let unstable: Vec<f64> = base.iter().zip(&chatter).map(|(b, c)| 0.2 * b + 3.0 * c).collect();
            recs.push(record("synthetic", StabilityLabel::Unstable, unstable));
            let stable: Vec<f64> = tone(300.0, fs, 1024)
                .iter()
                .zip(&base)
                .map(|(a, b)| 2.0 * a + 0.2 * b)
                .collect();
            recs.push(record("synthetic", StabilityLabel::Stable, stable));
        }
        assert_eq!(
            select_informative_packet(&recs, &PacketSelection::Auto, 4, "db4").unwrap(),
            6
        );
        let stable_only: Vec<_> = recs.into_iter().filter(|r| r.label == StabilityLabel::Stable).collect();
        assert!(matches!(
            select_informative_packet(&stable_only, &PacketSelection::Auto, 4, "db4"),
            Err(Error::NoUnstableRecords)
        ));
    }

    #[test]
    fn constant_signal_features() {
        let f = wpt_feature_vector(&[2.5; 100], 1000.0).unwrap();
        assert_eq!(f.len(), 14);
        assert_eq!(f[0], 2.5);
        assert_eq!(f[1], 0.0);
        assert!((f[2] - 2.5).abs() < 1e-12);
        assert!(is_degenerate(&[2.5; 100]));
        assert!(f[6..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_sine_closed_forms() {
        let fs = 10_000.0;
        // Ten whole periods of a 10 Hz tone, finely sampled.
        let x = tone(10.0, fs, 10_000);
        let f = wpt_feature_vector(&x, fs).unwrap();
        let names = wpt_feature_names();
        let get = |n: &str| f[names.iter().position(|m| m == n).unwrap()];
        assert!((get("rms") - 0.5f64.sqrt()).abs() < 1e-3);
        assert!((get("crest_factor") - 2f64.sqrt()).abs() < 1e-3);
        assert!(get("mean").abs() < 1e-9);
        assert!((get("peak") - 1.0).abs() < 1e-3);
        // mean|sin| = 2/pi.
        assert!((get("shape_factor") - (0.5f64.sqrt() * PI / 2.0)).abs() < 1e-3);
        assert!((get("impulse_factor") - PI / 2.0).abs() < 1e-3);
        // E[sqrt|sin|] = Gamma(3/4) / (sqrt(pi) Gamma(5/4)) ~ 0.762759.
        let ms: f64 = 0.762_759_555;
        assert!((get("clearance_factor") - 1.0 / (ms * ms)).abs() < 1e-3);
        assert!((get("frequency_center") - 10.0).abs() < 1e-9);
        assert!((get("mean_square_frequency") - 100.0).abs() < 1e-6);
        assert!(get("standard_frequency").abs() < 1e-6);
        assert!((get("acf_lag1") - (2.0 * PI * 10.0 / fs).cos()).abs() < 1e-3);
        assert!((get("kurtosis") - 1.5).abs() < 1e-3);
    }

    #[test]
    fn gaussian_moments() {
        let x = noise(100_000, 42);
        let f = wpt_feature_vector(&x, 1000.0).unwrap();
        assert!(f[4].abs() < 0.05);
        assert!((f[5] - 3.0).abs() < 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn reconstruction_identity(x in proptest::collection::vec(-100.0f64..100.0, 16..200), w in 1usize..=10) {
            let tree = wpt_decompose(&x, 4, &format!("db{w}")).unwrap();
            let r = energy_ratios(&tree);
            prop_assert_eq!(r.len(), 16);
            prop_assert!(r.iter().all(|v| *v >= 0.0));
            let full = reconstruct_all(&tree).unwrap();
            if stats::energy(&x) > 0.0 {
                prop_assert!(rel_err(&full, &x) < 1e-8);
            }
            let again = wpt_feature_vector(&x, 500.0).unwrap();
            prop_assert_eq!(again.clone(), wpt_feature_vector(&x, 500.0).unwrap());
            prop_assert!(again.iter().all(|v| v.is_finite()));
        }
    }
}

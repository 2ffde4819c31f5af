//! Anti-alias low-pass filtering and decimation.
//!
//! The Butterworth design is realized as a cascade of second-order
//! sections; a high-order filter in direct form loses all precision long
//! before order 100. Filtering runs forward and backward so the output has
//! zero phase.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dataset::TimeSeriesRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub cutoff_hz: f64,
    pub order: usize,
    pub decimation_factor: usize,
}

impl FilterSpec {
    pub const DEFAULT_ORDER: usize = 100;

    /// Spec for resampling `fs_raw` down to `fs_target` with the default
    /// cutoff of 90% of the target Nyquist frequency.
    pub fn for_rates(fs_raw: f64, fs_target: f64) -> Self {
        FilterSpec {
            cutoff_hz: default_cutoff_hz(fs_target),
            order: Self::DEFAULT_ORDER,
            decimation_factor: (fs_raw / fs_target).round().max(1.0) as usize,
        }
    }
}

pub fn default_cutoff_hz(fs_target: f64) -> f64 {
    0.45 * fs_target
}

/// One biquad, `b0 b1 b2 / 1 a1 a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Section {
    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Transposed direct-form-II state after a unit step has settled.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z1 = self.b[2] - self.a[2] * g;
        let z0 = self.b[1] - self.a[1] * g + z1;
        [z0, z1]
    }
}

/// Digital Butterworth low-pass via bilinear transform with pre-warping.
/// Every section has unit DC gain.
pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Vec<Section>> {
    let nyquist = fs / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::InvalidCutoff {
            cutoff_hz,
            nyquist_hz: nyquist,
        });
    }
    if order == 0 {
        return Err(Error::invalid("filter order must be positive"));
    }
    let warped = 2.0 * fs * (PI * cutoff_hz / fs).tan();
    let two_fs = Complex64::new(2.0 * fs, 0.0);
    let n = order as f64;
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for k in 0..order / 2 {
        let theta = PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
        let s = Complex64::from_polar(warped, theta);
        let z = (two_fs + s) / (two_fs - s);
        let a1 = -2.0 * z.re;
        let a2 = z.norm_sqr();
        let g = (1.0 + a1 + a2) / 4.0;
        sections.push(Section {
            b: [g, 2.0 * g, g],
            a: [1.0, a1, a2],
        });
    }
    if order % 2 == 1 {
        // Real pole at theta = pi.
        let s = -warped;
        let z = (2.0 * fs + s) / (2.0 * fs - s);
        let g = (1.0 - z) / 2.0;
        sections.push(Section {
            b: [g, g, 0.0],
            a: [1.0, -z, 0.0],
        });
    }
    Ok(sections)
}

fn sosfilt(sections: &[Section], x: &mut [f64], initial: Option<f64>) {
    for sec in sections {
        let [b0, b1, b2] = sec.b;
        let [_, a1, a2] = sec.a;
        let (mut z0, mut z1) = match initial {
            // Unit-DC-gain cascade: every section sees the same settled input.
            Some(x0) => {
                let st = sec.step_state();
                (st[0] * x0, st[1] * x0)
            }
            None => (0.0, 0.0),
        };
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z0;
            z0 = b1 * input - a1 * y + z1;
            z1 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Forward-backward filtering with odd-reflection padding and
/// steady-state initial conditions.
pub fn sosfiltfilt(sections: &[Section], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return x.to_vec();
    }
    let pad = (3 * (2 * sections.len() + 1)).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    let (first, last) = (x[0], x[n - 1]);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

    let x0 = ext[0];
    sosfilt(sections, &mut ext, Some(x0));
    ext.reverse();
    let y0 = ext[0];
    sosfilt(sections, &mut ext, Some(y0));
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Zero-phase Butterworth low-pass; output has the input's length.
pub fn lowpass_filter(x: &[f64], fs: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    let sections = butterworth_lowpass(spec.order, spec.cutoff_hz, fs)?;
    Ok(sosfiltfilt(&sections, x))
}

/// Keeps every `factor`-th sample starting with the first.
pub fn decimate(x: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 {
        return Err(Error::ZeroFactor);
    }
    Ok(x.iter().step_by(factor).copied().collect())
}

/// Filters then decimates a record, updating its sampling rate.
pub fn preprocess_record(record: &TimeSeriesRecord, spec: &FilterSpec) -> Result<TimeSeriesRecord> {
    let filtered = if spec.decimation_factor > 1 {
        lowpass_filter(&record.samples, record.fs, spec)?
    } else {
        record.samples.clone()
    };
    let samples = decimate(&filtered, spec.decimation_factor)?;
    Ok(TimeSeriesRecord {
        samples,
        fs: record.fs / spec.decimation_factor as f64,
        ..record.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rms;

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect()
    }

    /// |H(e^{jw})| evaluated directly from the section coefficients.
    fn magnitude(sections: &[Section], freq: f64, fs: f64) -> f64 {
        let z = Complex64::from_polar(1.0, -2.0 * PI * freq / fs);
        sections
            .iter()
            .map(|s| {
                let num = s.b[0] + s.b[1] * z + s.b[2] * z * z;
                let den = s.a[0] + s.a[1] * z + s.a[2] * z * z;
                (num / den).norm()
            })
            .product()
    }

    #[test]
    fn dc_passes_unchanged() {
        let spec = FilterSpec {
            cutoff_hz: 4500.0,
            order: 100,
            decimation_factor: 16,
        };
        let y = lowpass_filter(&vec![1.0; 4000], 160_000.0, &spec).unwrap();
        assert_eq!(y.len(), 4000);
        for v in &y[400..3600] {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn tone_at_twice_cutoff_is_removed() {
        let fs = 20_000.0;
        let spec = FilterSpec {
            cutoff_hz: 2000.0,
            order: 100,
            decimation_factor: 2,
        };
        let x = tone(4000.0, fs, 4000);
        let y = lowpass_filter(&x, fs, &spec).unwrap();
        assert!(rms(&y[500..3500]) <= 1e-3 * rms(&x));
    }

    #[test]
    fn stopband_is_at_least_60_db_at_one_and_a_half_cutoff() {
        for (order, fs, fc) in [
            (100, 160_000.0, 4500.0),
            (100, 25_000.0, 5625.0),
            (20, 20_000.0, 3000.0),
        ] {
            let secs = butterworth_lowpass(order, fc, fs).unwrap();
            let single_pass_db = 20.0 * magnitude(&secs, 1.5 * fc, fs).log10();
            assert!(single_pass_db <= -60.0, "order {order}: {single_pass_db} dB");
            assert!((magnitude(&secs, 0.0, fs) - 1.0).abs() < 1e-9);
            // -3 dB at cutoff, monotone passband.
            assert!((magnitude(&secs, fc, fs) - 0.5f64.sqrt()).abs() < 1e-6);
            let mut prev = 1.0 + 1e-12;
            for k in 0..50 {
                let m = magnitude(&secs, fc * k as f64 / 50.0, fs);
                assert!(m <= prev + 1e-9, "{m} > {prev}");
                prev = m;
            }
        }
    }

    #[test]
    fn cutoff_at_or_above_nyquist_rejected() {
        let spec = FilterSpec {
            cutoff_hz: 5000.0,
            order: 4,
            decimation_factor: 2,
        };
        assert!(matches!(
            lowpass_filter(&[1.0; 10], 10_000.0, &spec),
            Err(Error::InvalidCutoff { .. })
        ));
    }

    #[test]
    fn decimation_lengths_and_stride() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(decimate(&x, 3).unwrap(), vec![0.0, 3.0, 6.0, 9.0]);
        assert_eq!(decimate(&x, 1).unwrap(), x);
        assert!(matches!(decimate(&x, 0), Err(Error::ZeroFactor)));
        assert_eq!(FilterSpec::for_rates(160_000.0, 10_000.0).decimation_factor, 16);
        assert_eq!(FilterSpec::for_rates(25_000.0, 12_500.0).decimation_factor, 2);
    }

    #[test]
    fn band_limited_tone_keeps_its_frequency() {
        let (fs, n) = (160_000.0, 32_000);
        let x = tone(1234.0, fs, n);
        let spec = FilterSpec::for_rates(fs, 10_000.0);
        let y = decimate(&lowpass_filter(&x, fs, &spec).unwrap(), 16).unwrap();
        let spec_est = crate::fpa::fft_magnitude(&y, 10_000.0).unwrap();
        let (peak_idx, _) = spec_est
            .ordinate
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let bin = 10_000.0 / y.len() as f64;
        assert!((spec_est.abscissa[peak_idx] - 1234.0).abs() <= bin);
        assert!(y.iter().all(|v| v.is_finite()));
    }
}

//! Synthetic regenerative-chatter signals.
//!
//! A single-mode oscillator cuts a surface it left one delay earlier:
//!
//! ```text
//! x'' + 2 zeta wn x' + wn^2 x = wn^2 kappa (g(t) sat(h0 + x(t - T) - x) - g_mean h0) + wn^2 noise xi(t)
//! ```
//!
//! `g` is 1 in turning and a tooth-pass screen in milling. `sat` clips the
//! chip to `[0, 2 h0]`: the tool leaving the cut, or the force limit of a
//! doubled chip. Small vibrations never reach either bound, so the model is
//! the linear delay equation until chatter has grown to the chip scale. Integration is fixed-step RK4
//! with the delayed state linearly interpolated from the stored trajectory.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{write_series, DatasetManifest, ManifestEntry, SeriesFormat, StabilityLabel, TimeSeriesRecord};
use crate::error::{Error, Result};
use crate::stats;

/// Delay (in samples) for Poincaré sections when none is given.
pub const DEFAULT_POINCARE_DELAY: usize = 6;
/// Terminal/initial RMS ratio above which a run counts as chatter.
pub const GROWTH_RATIO: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningModelParams {
    /// Natural frequency in rad/s.
    pub omega_n: f64,
    pub zeta: f64,
    /// Cutting to modal stiffness ratio.
    pub kappa: f64,
    /// Spindle period in seconds (the regenerative delay in turning).
    pub tau_s: f64,
    /// Standard deviation of the white forcing, in displacement units.
    pub noise: f64,
    pub duration: f64,
    pub fs: f64,
    /// Initial displacement.
    pub x0: f64,
    /// Nominal chip thickness; `None` keeps the model linear.
    pub chip: Option<f64>,
    /// White noise added to the returned samples only.
    pub sensor_noise: f64,
}

impl Default for TurningModelParams {
    fn default() -> Self {
        TurningModelParams {
            omega_n: 2.0 * std::f64::consts::PI * 800.0,
            zeta: 0.03,
            kappa: 0.0,
            tau_s: 0.01,
            noise: 0.0,
            duration: 0.1,
            fs: 20_000.0,
            x0: 0.02,
            chip: Some(1.0),
            sensor_noise: 0.0,
        }
    }
}

impl TurningModelParams {
    pub fn rpm(&self) -> f64 {
        60.0 / self.tau_s
    }

    pub fn n_samples(&self) -> usize {
        (self.duration * self.fs).round() as usize
    }

    fn validate(&self, delay: f64) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::invalid(format!("damping ratio {} outside (0, 1)", self.zeta)));
        }
        if !(self.omega_n > 0.0 && self.fs > 0.0 && self.kappa >= 0.0 && self.noise >= 0.0 && self.sensor_noise >= 0.0)
        {
            return Err(Error::invalid(
                "natural frequency and fs must be positive; kappa and noise non-negative",
            ));
        }
        if !(self.tau_s > 0.0) {
            return Err(Error::invalid("spindle period must be positive"));
        }
        if self.chip.is_some_and(|h| !(h > 0.0)) {
            return Err(Error::invalid("chip thickness must be positive"));
        }
        if self.fs * delay < 20.0 {
            return Err(Error::UnresolvableDelay {
                delay_s: delay,
                fs: self.fs,
            });
        }
        if self.n_samples() < 10 {
            return Err(Error::SignalTooShort {
                needed: 10,
                got: self.n_samples(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MillingModelParams {
    pub base: TurningModelParams,
    pub teeth: usize,
    /// Fraction of each tooth period spent cutting.
    pub duty: f64,
}

impl MillingModelParams {
    /// Tooth-pass period, the regenerative delay in milling.
    pub fn tooth_period(&self) -> f64 {
        self.base.tau_s / self.teeth as f64
    }

    pub fn tooth_pass_hz(&self) -> f64 {
        1.0 / self.tooth_period()
    }

    fn validate(&self) -> Result<()> {
        if self.teeth == 0 {
            return Err(Error::invalid("tooth count must be at least 1"));
        }
        if !(self.duty > 0.0 && self.duty <= 1.0) {
            return Err(Error::invalid(format!("duty {} outside (0, 1]", self.duty)));
        }
        self.base.validate(self.tooth_period())
    }
}

/// Smallest stiffness ratio at which the linear turning model can lose
/// stability at any spindle speed: `2 zeta (1 + zeta)`.
pub fn kappa_min(zeta: f64) -> f64 {
    2.0 * zeta * (1.0 + zeta)
}

struct Model {
    p: TurningModelParams,
    delay: f64,
    duty: f64,
}

impl Model {
    fn screen(&self, t: f64) -> f64 {
        if self.duty >= 1.0 || (t / self.delay).rem_euclid(1.0) < self.duty {
            1.0
        } else {
            0.0
        }
    }

    fn accel(&self, t: f64, x: f64, v: f64, xd: f64, xi: f64) -> f64 {
        let p = &self.p;
        let g = self.screen(t);
        let cut = match p.chip {
            Some(h0) => g * (h0 + xd - x).clamp(0.0, 2.0 * h0) - self.duty * h0,
            None => g * (xd - x),
        };
        let wn2 = p.omega_n * p.omega_n;
        -2.0 * p.zeta * p.omega_n * v - wn2 * x + wn2 * p.kappa * cut + wn2 * p.noise * xi
    }

    /// Clean trajectory at the output rate; forcing is held over each
    /// output sample so the result converges as `steps` grows.
    fn integrate(&self, forcing: &[f64], steps: usize) -> Vec<f64> {
        let n = forcing.len();
        let h = 1.0 / (self.p.fs * steps as f64);
        let total = n * steps;
        let mut xs = Vec::with_capacity(total + 1);
        xs.push(self.p.x0);
        let lag = self.delay / h;
        let delayed = |xs: &[f64], k: usize, frac: f64| -> f64 {
            let pos = k as f64 + frac - lag;
            if pos < 0.0 {
                return 0.0;
            }
            let i = pos.floor() as usize;
            let w = pos - i as f64;
            if w == 0.0 {
                xs[i]
            } else {
                xs[i] + w * (xs[i + 1] - xs[i])
            }
        };
        let (mut x, mut v) = (self.p.x0, 0.0);
        let mut out = Vec::with_capacity(n);
        for k in 0..total {
            if k % steps == 0 {
                out.push(x);
            }
            let xi = forcing[k / steps];
            let t = k as f64 * h;
            let d0 = delayed(&xs, k, 0.0);
            let dh = delayed(&xs, k, 0.5);
            let d1 = delayed(&xs, k, 1.0);
            let k1x = v;
            let k1v = self.accel(t, x, v, d0, xi);
            let k2x = v + 0.5 * h * k1v;
            let k2v = self.accel(t + 0.5 * h, x + 0.5 * h * k1x, k2x, dh, xi);
            let k3x = v + 0.5 * h * k2v;
            let k3v = self.accel(t + 0.5 * h, x + 0.5 * h * k2x, k3x, dh, xi);
            let k4x = v + h * k3v;
            let k4v = self.accel(t + h, x + h * k3x, k4x, d1, xi);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            xs.push(x);
        }
        out
    }

    /// Integration steps per output sample keeping `wn h <= 0.1`.
    fn auto_steps(&self) -> usize {
        ((self.p.omega_n / (0.1 * self.p.fs)).ceil() as usize).max(2)
    }
}

/// Stable when the RMS of the last `window` samples is at most three times
/// that of the first `window`.
pub fn growth_label(x: &[f64], window: usize) -> StabilityLabel {
    let w = window.clamp(1, x.len());
    let first = stats::rms(&x[..w]);
    let last = stats::rms(&x[x.len() - w..]);
    StabilityLabel::from_chatter(last > GROWTH_RATIO * first)
}

/// `x(t) - x(t - lag)` with `x = 0` before the start, `lag` in samples.
pub fn regenerative_difference(x: &[f64], lag: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let pos = k as f64 - lag;
            let past = if pos < 0.0 {
                0.0
            } else {
                let i = pos.floor() as usize;
                let w = pos - i as f64;
                x[i] + if w > 0.0 { w * (x[i + 1] - x[i]) } else { 0.0 }
            };
            x[k] - past
        })
        .collect()
}

/// Clean trajectory, measured samples and growth label.
fn run(model: &Model, seed: u64, steps: Option<usize>) -> (Vec<f64>, Vec<f64>, StabilityLabel) {
    let n = model.p.n_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forcing: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let clean = model.integrate(&forcing, steps.unwrap_or_else(|| model.auto_steps()));
    let measured = clean
        .iter()
        .map(|x| {
            let e: f64 = StandardNormal.sample(&mut rng);
            x + model.p.sensor_noise * e
        })
        .collect();
    // Windows span one delay (at most a tenth of the run): nothing has
    // regenerated yet during the first one. Interrupted cutting adds a
    // tooth-periodic forced response that would mask growth; the
    // regenerative difference cancels it.
    let lag = model.delay * model.p.fs;
    let window = (lag.round() as usize).min(n / 10);
    let label = if model.duty < 1.0 {
        growth_label(&regenerative_difference(&clean, lag), window)
    } else {
        growth_label(&clean, window)
    };
    (clean, measured, label)
}

fn to_record(
    p: &TurningModelParams,
    samples: Vec<f64>,
    label: StabilityLabel,
    id: &str,
    tag: &str,
) -> Result<TimeSeriesRecord> {
    TimeSeriesRecord::new(id, samples, p.fs, p.rpm(), p.kappa.max(1e-3), label, tag)
}

/// Depth of cut in the returned record is `kappa` read as millimetres
/// (floored at 1e-3 so it stays positive).
pub fn simulate_turning(params: &TurningModelParams, seed: u64) -> Result<TimeSeriesRecord> {
    params.validate(params.tau_s)?;
    let model = Model {
        p: *params,
        delay: params.tau_s,
        duty: 1.0,
    };
    let (_, measured, label) = run(&model, seed, None);
    to_record(params, measured, label, &format!("turning_{seed}"), "turning")
}

pub fn simulate_milling(params: &MillingModelParams, seed: u64) -> Result<TimeSeriesRecord> {
    params.validate()?;
    let model = Model {
        p: params.base,
        delay: params.tooth_period(),
        duty: params.duty,
    };
    let (_, measured, label) = run(&model, seed, None);
    to_record(&params.base, measured, label, &format!("milling_{seed}"), "milling")
}

/// Milling presets at an 850 Hz mode: stable, Hopf (quasi-periodic) and
/// flip (period-doubling) chatter.
pub mod presets {
    use super::*;

    fn base(kappa: f64, tau_s: f64) -> TurningModelParams {
        TurningModelParams {
            omega_n: 2.0 * std::f64::consts::PI * 850.0,
            zeta: 0.02,
            kappa,
            tau_s,
            noise: 0.002,
            duration: 0.2,
            fs: 20_000.0,
            x0: 0.02,
            chip: Some(1.0),
            sensor_noise: 0.0,
        }
    }

    /// Four teeth, 30% immersion, 567 Hz tooth pass.
    pub fn milling_stable() -> MillingModelParams {
        MillingModelParams {
            base: base(0.05, 4.0 / 567.0),
            teeth: 4,
            duty: 0.3,
        }
    }

    pub fn milling_hopf() -> MillingModelParams {
        MillingModelParams {
            base: base(0.4, 4.0 / 567.0),
            teeth: 4,
            duty: 0.3,
        }
    }

    /// Two teeth, 10% immersion, 600 Hz tooth pass: chatter locks to
    /// 1.5x the tooth-pass frequency.
    pub fn milling_flip() -> MillingModelParams {
        MillingModelParams {
            base: base(0.8, 2.0 / 600.0),
            teeth: 2,
            duty: 0.1,
        }
    }
}

/// Delay-coordinate points `(x[n], x[n + delay])` taken once per forcing
/// period (`period` in samples, possibly fractional).
pub fn poincare_section(x: &[f64], delay: usize, period: f64) -> Result<Vec<(f64, f64)>> {
    if delay == 0 || !(period >= 1.0) {
        return Err(Error::invalid("delay and period must be positive"));
    }
    let needed = delay + period.ceil() as usize + 1;
    if x.len() < needed {
        return Err(Error::SignalTooShort { needed, got: x.len() });
    }
    let mut points = Vec::new();
    for k in 0.. {
        let n = (k as f64 * period).round() as usize;
        if n + delay >= x.len() {
            break;
        }
        points.push((x[n], x[n + delay]));
    }
    Ok(points)
}

fn default_noise() -> f64 {
    0.002
}

fn default_sensor_noise() -> f64 {
    0.005
}

fn default_x0() -> f64 {
    0.02
}

fn default_chip() -> f64 {
    1.0
}

fn default_teeth() -> usize {
    1
}

fn default_duty() -> f64 {
    1.0
}

/// One dataset tag of a synthetic corpus. Stiffness ranges are multiples
/// of `kappa_min(zeta) / duty`; spindle speeds are drawn uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagSpec {
    pub name: String,
    pub natural_hz: f64,
    pub zeta: f64,
    pub stable: usize,
    pub unstable: usize,
    pub rpm: (f64, f64),
    pub stable_kappa: (f64, f64),
    pub unstable_kappa: (f64, f64),
    #[serde(default = "default_teeth")]
    pub teeth: usize,
    #[serde(default = "default_duty")]
    pub duty: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_sensor_noise")]
    pub sensor_noise: f64,
    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default = "default_chip")]
    pub chip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub name: String,
    pub fs_raw: f64,
    pub fs_target: f64,
    pub n_samples: usize,
    /// Simulated time before the kept window; labels use the whole run.
    #[serde(default = "default_warmup")]
    pub warmup_s: f64,
    /// Draws allowed per requested record before giving up on a class.
    #[serde(default = "default_attempts")]
    pub max_attempts_per_record: usize,
    pub tags: Vec<TagSpec>,
}

fn default_attempts() -> usize {
    20
}

fn default_warmup() -> f64 {
    0.05
}

impl CorpusSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("corpus spec serializes")
    }

    /// Four turning tags and one milling tag with `per_class` stable and
    /// `per_class` chatter records each, 1024 samples at 20 kHz.
    pub fn five_tag(per_class: usize) -> Self {
        let turning = |name: &str, hz: f64, rpm: (f64, f64)| TagSpec {
            name: name.into(),
            natural_hz: hz,
            zeta: 0.03,
            stable: per_class,
            unstable: per_class,
            rpm,
            stable_kappa: (0.2, 0.8),
            unstable_kappa: (4.0, 10.0),
            teeth: 1,
            duty: 1.0,
            noise: default_noise(),
            sensor_noise: default_sensor_noise(),
            x0: default_x0(),
            chip: default_chip(),
        };
        CorpusSpec {
            name: "synthetic-five-tag".into(),
            fs_raw: 20_000.0,
            fs_target: 10_000.0,
            n_samples: 1024,
            warmup_s: default_warmup(),
            max_attempts_per_record: default_attempts(),
            tags: vec![
                turning("turning-5.08cm", 800.0, (7500.0, 30000.0)),
                turning("turning-6.35cm", 1100.0, (7500.0, 30000.0)),
                turning("turning-8.89cm", 1650.0, (7500.0, 30000.0)),
                turning("turning-11.43cm", 2950.0, (7500.0, 30000.0)),
                TagSpec {
                    teeth: 4,
                    duty: 0.5,
                    rpm: (1500.0, 4000.0),
                    ..turning("milling", 850.0, (0.0, 0.0))
                },
            ],
        }
    }
}

fn draw_record(spec: &CorpusSpec, tag: &TagSpec, chatter: bool, seed: u64) -> Result<TimeSeriesRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = if chatter { tag.unstable_kappa } else { tag.stable_kappa };
    let scale = kappa_min(tag.zeta) / tag.duty;
    let kappa = scale * rng.random_range(lo..=hi);
    let rpm = rng.random_range(tag.rpm.0..=tag.rpm.1);
    let base = TurningModelParams {
        omega_n: 2.0 * std::f64::consts::PI * tag.natural_hz,
        zeta: tag.zeta,
        kappa,
        tau_s: 60.0 / rpm,
        noise: tag.noise,
        duration: spec.warmup_s + spec.n_samples as f64 / spec.fs_raw,
        fs: spec.fs_raw,
        x0: tag.x0,
        chip: Some(tag.chip),
        sensor_noise: tag.sensor_noise,
    };
    let sim_seed = rng.random();
    let mut rec = if tag.teeth == 1 && tag.duty >= 1.0 {
        simulate_turning(&base, sim_seed)?
    } else {
        simulate_milling(
            &MillingModelParams {
                base,
                teeth: tag.teeth,
                duty: tag.duty,
            },
            sim_seed,
        )?
    };
    let keep = spec.n_samples.min(rec.samples.len());
    rec.samples.drain(..rec.samples.len() - keep);
    Ok(rec)
}

/// Draws records per tag until each class count is met, keeping only runs
/// whose growth label matches the class being filled. Tag `t` takes its
/// per-draw seeds from ChaCha8 stream `t`, so the corpus depends on
/// `(spec, seed)` alone.
pub fn generate_records(spec: &CorpusSpec, seed: u64) -> Result<Vec<TimeSeriesRecord>> {
    use rayon::prelude::*;
    let per_tag: Vec<Vec<TimeSeriesRecord>> = spec
        .tags
        .par_iter()
        .enumerate()
        .map(|(t, tag)| {
            let mut stream = ChaCha8Rng::seed_from_u64(seed);
            stream.set_stream(t as u64);
            let mut out = Vec::with_capacity(tag.stable + tag.unstable);
            for (chatter, wanted) in [(false, tag.stable), (true, tag.unstable)] {
                let mut got = 0;
                let mut attempts = 0;
                while got < wanted {
                    if attempts >= spec.max_attempts_per_record * wanted.max(1) {
                        return Err(Error::invalid(format!(
                            "tag '{}': only {got} of {wanted} {} records after {attempts} draws",
                            tag.name,
                            if chatter { "chatter" } else { "stable" }
                        )));
                    }
                    attempts += 1;
                    let mut rec = draw_record(spec, tag, chatter, stream.random())?;
                    if rec.label.is_chatter() != Some(chatter) {
                        continue;
                    }
                    rec.id = format!("{}_{:04}", tag.name, out.len());
                    rec.dataset_tag = tag.name.clone();
                    out.push(rec);
                    got += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_tag.into_iter().flatten().collect())
}

/// Writes `series/<id>.txt` files and `manifest.txt` under `out_dir`.
pub fn generate_benchmark(spec: &CorpusSpec, seed: u64, out_dir: &Path) -> Result<DatasetManifest> {
    let records = generate_records(spec, seed)?;
    let series_dir = out_dir.join("series");
    fs::create_dir_all(&series_dir)?;
    let mut entries = Vec::with_capacity(records.len());
    for rec in &records {
        let rel = PathBuf::from("series").join(format!("{}.txt", rec.id));
        write_series(&out_dir.join(&rel), &rec.samples)?;
        entries.push(ManifestEntry {
            path: rel,
            rpm: rec.rpm,
            depth_of_cut_mm: rec.depth_of_cut_mm,
            label: rec.label,
            tag: rec.dataset_tag.clone(),
        });
    }
    let manifest = DatasetManifest {
        name: spec.name.clone(),
        fs_raw: spec.fs_raw,
        fs_target: spec.fs_target,
        format: SeriesFormat::SingleColumn,
        records: entries,
        base_dir: out_dir.to_path_buf(),
    };
    manifest.write(&out_dir.join("manifest.txt"))?;
    Ok(manifest)
}

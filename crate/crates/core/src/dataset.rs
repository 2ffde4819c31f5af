//! Records, manifests, label policy, train/test split generation and the
//! feature-matrix container shared by every featurizer.
//!
//! A manifest is a small text file: a `key = value` header followed by a
//! `[records]` table with one whitespace-separated line per series file.
//!
//! ```text
//! # comment
//! name = turning-5.08cm
//! fs_raw = 20000
//! fs_target = 10000
//! format = single            # or: time-value
//! [records]
//! # file                rpm    depth_mm  label     tag
//! series/t508_0000.txt  570    0.254     unstable  turning-5.08cm
//! ```
//!
//! Relative series paths resolve against the manifest's directory.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabilityLabel {
    Stable,
    MildChatter,
    Unstable,
    Unknown,
}

impl StabilityLabel {
    /// Binary class used by the classifiers: `true` means chatter.
    ///
    /// Only meaningful after [`binarize_labels`]; `MildChatter` maps to
    /// chatter, `Unknown` to `None`.
    pub fn is_chatter(self) -> Option<bool> {
        match self {
            StabilityLabel::Stable => Some(false),
            StabilityLabel::MildChatter | StabilityLabel::Unstable => Some(true),
            StabilityLabel::Unknown => None,
        }
    }

    pub fn from_chatter(chatter: bool) -> Self {
        if chatter {
            StabilityLabel::Unstable
        } else {
            StabilityLabel::Stable
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StabilityLabel::Stable => "stable",
            StabilityLabel::MildChatter => "mild",
            StabilityLabel::Unstable => "unstable",
            StabilityLabel::Unknown => "unknown",
        }
    }
}

impl fmt::Display for StabilityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StabilityLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stable" | "s" | "0" => Ok(StabilityLabel::Stable),
            "mild" | "mild_chatter" | "mildchatter" | "intermediate" | "m" => Ok(StabilityLabel::MildChatter),
            "unstable" | "chatter" | "u" | "1" => Ok(StabilityLabel::Unstable),
            "unknown" | "?" => Ok(StabilityLabel::Unknown),
            other => Err(format!("unknown label '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub id: String,
    pub samples: Vec<f64>,
    pub fs: f64,
    pub rpm: f64,
    pub depth_of_cut_mm: f64,
    pub label: StabilityLabel,
    pub dataset_tag: String,
}

impl TimeSeriesRecord {
    pub fn new(
        id: impl Into<String>,
        samples: Vec<f64>,
        fs: f64,
        rpm: f64,
        depth_of_cut_mm: f64,
        label: StabilityLabel,
        dataset_tag: impl Into<String>,
    ) -> Result<Self> {
        let record = TimeSeriesRecord {
            id: id.into(),
            samples,
            fs,
            rpm,
            depth_of_cut_mm,
            label,
            dataset_tag: dataset_tag.into(),
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::SignalTooShort {
                needed: 2,
                got: self.samples.len(),
            });
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::invalid(format!("sampling rate {} must be positive", self.fs)));
        }
        if !(self.rpm > 0.0 && self.depth_of_cut_mm > 0.0) {
            return Err(Error::invalid("rpm and depth of cut must be positive"));
        }
        if self.dataset_tag.is_empty() {
            return Err(Error::invalid("dataset tag must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeriesFormat {
    /// One sample per line.
    #[default]
    SingleColumn,
    /// `time value` (whitespace or comma separated); the time column is ignored.
    TimeValue,
}

impl FromStr for SeriesFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "single" | "1" | "single-column" => Ok(SeriesFormat::SingleColumn),
            "time-value" | "2" | "two-column" => Ok(SeriesFormat::TimeValue),
            other => Err(format!("unknown series format '{other}'")),
        }
    }
}

impl fmt::Display for SeriesFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesFormat::SingleColumn => f.write_str("single"),
            SeriesFormat::TimeValue => f.write_str("time-value"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub rpm: f64,
    pub depth_of_cut_mm: f64,
    pub label: StabilityLabel,
    pub tag: String,
}

impl ManifestEntry {
    /// Record id derived from the series file stem.
    pub fn id(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub fs_raw: f64,
    pub fs_target: f64,
    pub format: SeriesFormat,
    pub records: Vec<ManifestEntry>,
    /// Directory that relative record paths resolve against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    /// Decimation factor implied by `fs_raw / fs_target`.
    pub fn decimation_factor(&self) -> usize {
        (self.fs_raw / self.fs_target).round().max(1.0) as usize
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("name = {}\n", self.name));
        out.push_str(&format!("fs_raw = {}\n", self.fs_raw));
        out.push_str(&format!("fs_target = {}\n", self.fs_target));
        out.push_str(&format!("format = {}\n", self.format));
        out.push_str("[records]\n");
        out.push_str("# file rpm depth_mm label tag\n");
        for r in &self.records {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                r.path.display(),
                r.rpm,
                r.depth_of_cut_mm,
                r.label,
                r.tag
            ));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Reads every listed series at `fs_raw`.
    pub fn load_records(&self) -> Result<Vec<TimeSeriesRecord>> {
        self.records
            .iter()
            .map(|entry| {
                let samples = read_series(&self.resolve(entry), self.format)?;
                TimeSeriesRecord::new(
                    entry.id(),
                    samples,
                    self.fs_raw,
                    entry.rpm,
                    entry.depth_of_cut_mm,
                    entry.label,
                    entry.tag.clone(),
                )
            })
            .collect()
    }
}

/// Parses a manifest and checks that every listed series file exists.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path)?;
    let base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let manifest = parse_manifest(&text, base_dir)?;
    for entry in &manifest.records {
        let p = manifest.resolve(entry);
        if !p.is_file() {
            return Err(Error::MissingFile(p));
        }
    }
    Ok(manifest)
}

pub fn parse_manifest(text: &str, base_dir: PathBuf) -> Result<DatasetManifest> {
    let mut name = None;
    let mut fs_raw = None;
    let mut fs_target = None;
    let mut format = SeriesFormat::default();
    let mut records = Vec::new();
    let mut in_records = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.eq_ignore_ascii_case("[records]") {
            in_records = true;
            continue;
        }
        if !in_records {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, format!("expected key = value, got '{line}'")))?;
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "fs_raw" => fs_raw = Some(parse_positive(value, lineno, "fs_raw")?),
                "fs_target" => fs_target = Some(parse_positive(value, lineno, "fs_target")?),
                "format" => format = value.parse().map_err(|e| Error::parse(lineno, e))?,
                other => return Err(Error::parse(lineno, format!("unknown header key '{other}'"))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                lineno,
                format!("record needs 5 fields (file rpm depth label tag), got {}", fields.len()),
            ));
        }
        records.push(ManifestEntry {
            path: PathBuf::from(fields[0]),
            rpm: parse_positive(fields[1], lineno, "rpm")?,
            depth_of_cut_mm: parse_positive(fields[2], lineno, "depth")?,
            label: fields[3].parse().map_err(|e| Error::parse(lineno, e))?,
            tag: fields[4].to_string(),
        });
    }

    let name = name.ok_or_else(|| Error::parse(0, "missing 'name'"))?;
    let fs_raw = fs_raw.ok_or_else(|| Error::parse(0, "missing 'fs_raw'"))?;
    let fs_target = fs_target.unwrap_or(fs_raw);
    if fs_target > fs_raw {
        return Err(Error::parse(0, "fs_target must not exceed fs_raw"));
    }
    if records.is_empty() {
        return Err(Error::parse(0, "manifest lists no records"));
    }
    Ok(DatasetManifest {
        name,
        fs_raw,
        fs_target,
        format,
        records,
        base_dir,
    })
}

fn parse_positive(value: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::parse(line, format!("{what}: '{value}' is not a number")))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::parse(line, format!("{what} must be positive, got {v}")));
    }
    Ok(v)
}

pub fn read_series(path: &Path, format: SeriesFormat) -> Result<Vec<f64>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty());
        let token = match format {
            SeriesFormat::SingleColumn => fields.next(),
            SeriesFormat::TimeValue => fields.nth(1),
        };
        let token = token.ok_or_else(|| Error::parse(i + 1, "missing value column"))?;
        let v: f64 = token
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("'{token}' is not a number")))?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_series(path: &Path, samples: &[f64]) -> Result<()> {
    let mut text = String::with_capacity(samples.len() * 24);
    for v in samples {
        text.push_str(&fmt_f64(*v));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Shortest round-tripping decimal text for `v`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Merges mild chatter into unstable and drops unknown records.
pub fn binarize_labels(records: Vec<TimeSeriesRecord>) -> Vec<TimeSeriesRecord> {
    records
        .into_iter()
        .filter_map(|mut r| match r.label {
            StabilityLabel::Unknown => None,
            StabilityLabel::MildChatter => {
                r.label = StabilityLabel::Unstable;
                Some(r)
            }
            _ => Some(r),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub test_fraction: f64,
    /// Draw each class separately in proportion to its size.
    pub stratify: bool,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            seeds: (0..10).collect(),
            train_fraction: 0.67,
            test_fraction: 0.70,
            stratify: false,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        for f in [self.train_fraction, self.test_fraction] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("split fraction {f} outside (0, 1]")));
            }
        }
        let distinct: HashSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() || self.seeds.is_empty() {
            return Err(Error::invalid("split seeds must be non-empty and distinct"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Subset size `floor(fraction * n)`, at least one.
pub fn subset_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 + 1e-9).floor() as usize).clamp(1, n)
}

/// One `(train, test)` index pair per seed: the train set samples the
/// source, the test set samples the target, both without replacement.
/// Indices are returned sorted.
pub fn make_splits<S, T>(source_ids: &[S], target_ids: &[T], plan: &SplitPlan) -> Result<Vec<Split>> {
    if source_ids.is_empty() || target_ids.is_empty() {
        return Err(Error::EmptyDataset);
    }
    plan.validate()?;
    let (ns, nt) = (source_ids.len(), target_ids.len());
    Ok(plan
        .seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut train = sample(&mut rng, ns, subset_size(ns, plan.train_fraction)).into_vec();
            let mut test = sample(&mut rng, nt, subset_size(nt, plan.test_fraction)).into_vec();
            train.sort_unstable();
            test.sort_unstable();
            Split { train, test }
        })
        .collect())
}

/// Label-stratified variant of [`make_splits`]: each class contributes
/// `floor(fraction * class_size)` (at least one) indices.
pub fn make_stratified_splits(source_labels: &[bool], target_labels: &[bool], plan: &SplitPlan) -> Result<Vec<Split>> {
    if source_labels.is_empty() || target_labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    plan.validate()?;
    let draw = |rng: &mut ChaCha8Rng, labels: &[bool], fraction: f64| {
        let mut out = Vec::new();
        for class in [false, true] {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if members.is_empty() {
                continue;
            }
            let k = subset_size(members.len(), fraction);
            out.extend(sample(rng, members.len(), k).into_iter().map(|j| members[j]));
        }
        out.sort_unstable();
        out
    };
    Ok(plan
        .seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let train = draw(&mut rng, source_labels, plan.train_fraction);
            let test = draw(&mut rng, target_labels, plan.test_fraction);
            Split { train, test }
        })
        .collect())
}

/// Rows are records, columns are named features; `labels[i]` is `true`
/// when record `i` is chatter.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub record_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(
        record_ids: Vec<String>,
        feature_names: Vec<String>,
        values: Vec<Vec<f64>>,
        labels: Vec<bool>,
    ) -> Result<Self> {
        let m = FeatureMatrix {
            record_ids,
            feature_names,
            values,
            labels,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let rows = self.values.len();
        if self.record_ids.len() != rows || self.labels.len() != rows {
            return Err(Error::invalid(format!(
                "feature matrix has {rows} rows but {} ids and {} labels",
                self.record_ids.len(),
                self.labels.len()
            )));
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != self.feature_names.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.feature_names.len(),
                    got: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite feature {v} in row '{}'",
                    self.record_ids[i]
                )));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn select(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            record_ids: rows.iter().map(|&i| self.record_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            values: rows.iter().map(|&i| self.values[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select_features(&self, names: &[&str]) -> Result<FeatureMatrix> {
        let cols: Vec<usize> = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::invalid(format!("no feature named '{n}'")))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            record_ids: self.record_ids.clone(),
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            values: self
                .values
                .iter()
                .map(|row| cols.iter().map(|&c| row[c]).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }

    /// CSV text: `id,label,<feature names>` then one row per record.
    /// `provenance` lines are emitted first as `# ` comments.
    pub fn to_csv(&self, provenance: &[String]) -> String {
        let mut out = String::new();
        for p in provenance {
            out.push_str("# ");
            out.push_str(p);
            out.push('\n');
        }
        out.push_str("id,label");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for ((id, label), row) in self.record_ids.iter().zip(&self.labels).zip(&self.values) {
            out.push_str(id);
            out.push(',');
            out.push_str(StabilityLabel::from_chatter(*label).as_str());
            for v in row {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path, provenance: &[String]) -> Result<()> {
        fs::write(path, self.to_csv(provenance))?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<FeatureMatrix> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(0, "empty feature file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "id" || cols[1] != "label" {
            return Err(Error::parse(hline + 1, "header must start with 'id,label'"));
        }
        let feature_names: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
        let mut record_ids = Vec::new();
        let mut labels = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {} fields, got {}", cols.len(), fields.len()),
                ));
            }
            let label: StabilityLabel = fields[1].parse().map_err(|e| Error::parse(i + 1, e))?;
            let chatter = label
                .is_chatter()
                .ok_or_else(|| Error::parse(i + 1, "feature rows must carry a binary label"))?;
            let row = fields[2..]
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(i + 1, format!("'{t}' is not a number")))
                })
                .collect::<Result<Vec<_>>>()?;
            record_ids.push(fields[0].to_string());
            labels.push(chatter);
            values.push(row);
        }
        FeatureMatrix::new(record_ids, feature_names, values, labels)
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        FeatureMatrix::from_csv(&fs::read_to_string(path)?)
    }
}

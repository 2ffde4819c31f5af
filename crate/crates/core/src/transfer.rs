//! Source -> target evaluation grid and the best-method / error-band
//! accounting over it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{fmt_f64, subset_size, FeatureMatrix, Split, SplitPlan};
use crate::dtw::DistanceMatrix;
use crate::learn::{evaluate_knn_realizations, evaluate_on_splits, plan_splits, ClassifierSpec, EvalSummary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransferPair {
    pub source_tag: String,
    pub target_tag: String,
}

impl TransferPair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        TransferPair {
            source_tag: source.into(),
            target_tag: target.into(),
        }
    }

    /// Train and test come from the same dataset.
    pub fn is_traditional(&self) -> bool {
        self.source_tag == self.target_tag
    }
}

impl fmt::Display for TransferPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.source_tag, self.target_tag)
    }
}

/// All ordered pairs of distinct tags, source-major. With
/// `include_traditional`, each tag's self pair precedes its transfer pairs.
pub fn enumerate_pairs<S: AsRef<str>>(tags: &[S], include_traditional: bool) -> Result<Vec<TransferPair>> {
    let distinct: BTreeSet<&str> = tags.iter().map(AsRef::as_ref).collect();
    if distinct.len() != tags.len() {
        return Err(Error::invalid("dataset tags must be distinct"));
    }
    if tags.len() < 2 {
        return Err(Error::TooFewTags(tags.len()));
    }
    let mut pairs = Vec::new();
    for s in tags {
        for t in tags {
            if s.as_ref() != t.as_ref() || include_traditional {
                pairs.push(TransferPair::new(s.as_ref(), t.as_ref()));
            }
        }
    }
    Ok(pairs)
}

/// Record ids and binary labels of one dataset, in the order every split
/// index refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct TagData {
    pub tag: String,
    pub record_ids: Vec<String>,
    pub labels: Vec<bool>,
}

/// Precomputed per-tag features and cross-record distance matrices.
#[derive(Debug, Clone, Default)]
pub struct TransferInputs {
    tags: Vec<TagData>,
    features: BTreeMap<(String, String), FeatureMatrix>,
    // Keyed by (featurizer, fit tag, tag) for vectorizers fitted on the source.
    fitted: BTreeMap<(String, String, String), FeatureMatrix>,
    distances: BTreeMap<String, DistanceMatrix>,
    // Keyed by (featurizer, source tag, target tag).
    pair_distances: BTreeMap<(String, String, String), DistanceMatrix>,
}

impl TransferInputs {
    pub fn new(tags: Vec<TagData>) -> Result<Self> {
        for t in &tags {
            if t.record_ids.len() != t.labels.len() {
                return Err(Error::invalid(format!("tag '{}' has mismatched ids and labels", t.tag)));
            }
        }
        Ok(TransferInputs {
            tags,
            ..Default::default()
        })
    }

    pub fn tags(&self) -> &[TagData] {
        &self.tags
    }

    pub fn tag_names(&self) -> Vec<String> {
        self.tags.iter().map(|t| t.tag.clone()).collect()
    }

    pub fn tag(&self, name: &str) -> Result<&TagData> {
        self.tags
            .iter()
            .find(|t| t.tag == name)
            .ok_or_else(|| Error::Config(format!("unknown dataset tag '{name}'")))
    }

    pub fn insert_features(&mut self, featurizer: &str, tag: &str, features: FeatureMatrix) {
        self.features
            .insert((featurizer.to_string(), tag.to_string()), features);
    }

    /// Features of `tag` produced by a vectorizer fitted on `fit_tag`.
    pub fn insert_fitted_features(&mut self, featurizer: &str, fit_tag: &str, tag: &str, features: FeatureMatrix) {
        self.fitted
            .insert((featurizer.to_string(), fit_tag.to_string(), tag.to_string()), features);
    }

    pub fn insert_distances(&mut self, featurizer: &str, distances: DistanceMatrix) {
        self.distances.insert(featurizer.to_string(), distances);
    }

    /// Distances for one pair only, rows = target records, columns =
    /// source records. Takes precedence over the all-records matrix.
    pub fn insert_pair_distances(&mut self, featurizer: &str, source: &str, target: &str, distances: DistanceMatrix) {
        self.pair_distances.insert(
            (featurizer.to_string(), source.to_string(), target.to_string()),
            distances,
        );
    }

    /// Features of `tag` for a model trained on `source`, rows in the tag's
    /// record order.
    pub fn features_for(&self, featurizer: &str, source: &str, tag: &str) -> Result<FeatureMatrix> {
        let missing = || Error::MissingFeatures {
            tag: tag.to_string(),
            featurizer: featurizer.to_string(),
        };
        let data = self.tag(tag)?;
        let fm = self
            .fitted
            .get(&(featurizer.to_string(), source.to_string(), tag.to_string()))
            .or_else(|| self.features.get(&(featurizer.to_string(), tag.to_string())))
            .ok_or_else(missing)?;
        let index: BTreeMap<&str, usize> = fm
            .record_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let rows = data
            .record_ids
            .iter()
            .map(|id| index.get(id.as_str()).copied().ok_or_else(missing))
            .collect::<Result<Vec<_>>>()?;
        let mut out = fm.select(&rows);
        out.labels = data.labels.clone();
        Ok(out)
    }

    /// Distances with rows = target records and columns = source records.
    pub fn distances_for(&self, featurizer: &str, source: &str, target: &str) -> Result<DistanceMatrix> {
        let dm = self
            .pair_distances
            .get(&(featurizer.to_string(), source.to_string(), target.to_string()))
            .or_else(|| self.distances.get(featurizer))
            .ok_or_else(|| Error::MissingFeatures {
                tag: source.to_string(),
                featurizer: featurizer.to_string(),
            })?;
        let lookup = |ids: &[String], wanted: &TagData| -> Result<Vec<usize>> {
            let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            wanted
                .record_ids
                .iter()
                .map(|id| {
                    index.get(id.as_str()).copied().ok_or_else(|| Error::MissingFeatures {
                        tag: wanted.tag.clone(),
                        featurizer: featurizer.to_string(),
                    })
                })
                .collect()
        };
        let rows = lookup(&dm.row_ids, self.tag(target)?)?;
        let cols = lookup(&dm.col_ids, self.tag(source)?)?;
        Ok(dm.select(&rows, &cols))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Features,
    Distances,
}

/// A featurizer and the classifiers evaluated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub input: InputKind,
    pub classifiers: Vec<ClassifierSpec>,
}

impl Method {
    pub fn features(name: impl Into<String>, classifiers: Vec<ClassifierSpec>) -> Self {
        Method {
            name: name.into(),
            input: InputKind::Features,
            classifiers,
        }
    }

    pub fn distances(name: impl Into<String>, classifiers: Vec<ClassifierSpec>) -> Self {
        Method {
            name: name.into(),
            input: InputKind::Distances,
            classifiers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classifiers.is_empty() {
            return Err(Error::Config(format!("no classifiers listed for '{}'", self.name)));
        }
        if self.input == InputKind::Distances {
            if let Some(c) = self.classifiers.iter().find(|c| !c.is_knn()) {
                return Err(Error::DtwRequiresKnn(c.name()));
            }
        }
        Ok(())
    }
}

/// Independent train/test draws for a source -> target pair; for a
/// traditional pair the test set is the complement of the train set.
pub fn pair_splits(
    pair: &TransferPair,
    source_labels: &[bool],
    target_labels: &[bool],
    plan: &SplitPlan,
) -> Result<Vec<Split>> {
    if !pair.is_traditional() {
        return plan_splits(source_labels, target_labels, plan);
    }
    plan.validate()?;
    let n = source_labels.len();
    if n < 2 {
        return Err(Error::EmptyDataset);
    }
    let n_train = subset_size(n, plan.train_fraction).min(n - 1);
    Ok(plan
        .seeds
        .iter()
        .map(|&seed| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut train = idx[..n_train].to_vec();
            let mut test = idx[n_train..].to_vec();
            train.sort_unstable();
            test.sort_unstable();
            Split { train, test }
        })
        .collect())
}

/// Short hex digest of a list of index draws.
pub fn split_digest(splits: &[Split]) -> String {
    let mut h = Sha256::new();
    for s in splits {
        for (name, idx) in [("train", &s.train), ("test", &s.test)] {
            h.update(name.as_bytes());
            for i in idx {
                h.update((*i as u64).to_le_bytes());
            }
        }
    }
    hex::encode(&h.finalize()[..8])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub pair: TransferPair,
    pub featurizer: String,
    pub classifier: String,
    pub summary: EvalSummary,
    pub split_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Accuracy,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Accuracy, Metric::F1];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
        }
    }

    pub fn mean_std(self, s: &EvalSummary) -> (f64, f64) {
        match self {
            Metric::Accuracy => (s.mean_accuracy, s.std_accuracy),
            Metric::F1 => (s.mean_f1, s.std_f1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestScore {
    pub classifier: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransferReport {
    pub rows: Vec<ResultRow>,
}

impl TransferReport {
    /// Distinct pairs in first-seen order.
    pub fn pairs(&self) -> Vec<TransferPair> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.pair.clone()))
            .map(|r| r.pair.clone())
            .collect()
    }

    /// Distinct featurizers in first-seen order.
    pub fn featurizers(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.featurizer.clone()))
            .map(|r| r.featurizer.clone())
            .collect()
    }

    /// Tags in first-seen order over sources then targets.
    pub fn tags(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for p in self.pairs() {
            for t in [p.source_tag, p.target_tag] {
                if seen.insert(t.clone()) {
                    out.push(t);
                }
            }
        }
        out
    }

    /// Highest-mean classifier for a pair and featurizer; the first listed
    /// wins ties.
    pub fn best(&self, pair: &TransferPair, featurizer: &str, metric: Metric) -> Option<BestScore> {
        let mut best: Option<BestScore> = None;
        for r in self
            .rows
            .iter()
            .filter(|r| &r.pair == pair && r.featurizer == featurizer)
        {
            let (mean, std) = metric.mean_std(&r.summary);
            if best.as_ref().is_none_or(|b| mean > b.mean) {
                best = Some(BestScore {
                    classifier: r.classifier.clone(),
                    mean,
                    std,
                });
            }
        }
        best
    }

    /// Every result row, one per (pair, featurizer, classifier).
    pub fn results_csv(&self) -> String {
        let mut out = String::from(
            "source,target,featurizer,classifier,mean_accuracy,std_accuracy,mean_f1,std_f1,split_digest,accuracies,f1s\n",
        );
        for r in &self.rows {
            let s = &r.summary;
            let join = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.pair.source_tag,
                r.pair.target_tag,
                r.featurizer,
                r.classifier,
                fmt_f64(s.mean_accuracy),
                fmt_f64(s.std_accuracy),
                fmt_f64(s.mean_f1),
                fmt_f64(s.std_f1),
                r.split_digest,
                join(&s.accuracies),
                join(&s.f1s),
            ));
        }
        out
    }

    /// Parses `results_csv` output; `#` lines are skipped.
    pub fn from_results_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(Error::parse(n + 1, format!("expected 11 fields, got {}", f.len())));
            }
            let list = |s: &str| -> Result<Vec<f64>> {
                s.split(';')
                    .filter(|v| !v.is_empty())
                    .map(|v| v.parse().map_err(|_| Error::parse(n + 1, format!("bad number '{v}'"))))
                    .collect()
            };
            rows.push(ResultRow {
                pair: TransferPair::new(f[0], f[1]),
                featurizer: f[2].to_string(),
                classifier: f[3].to_string(),
                summary: EvalSummary::from_scores(list(f[9])?, list(f[10])?),
                split_digest: f[8].to_string(),
            });
        }
        Ok(TransferReport { rows })
    }

    /// Results for one pair with each featurizer's best classifier marked.
    pub fn pair_csv(&self, pair: &TransferPair) -> String {
        let mut out =
            String::from("featurizer,classifier,mean_accuracy,std_accuracy,mean_f1,std_f1,best_accuracy,best_f1\n");
        for r in self.rows.iter().filter(|r| &r.pair == pair) {
            let mark = |m: Metric| {
                self.best(pair, &r.featurizer, m)
                    .is_some_and(|b| b.classifier == r.classifier)
            };
            let s = &r.summary;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.featurizer,
                r.classifier,
                fmt_f64(s.mean_accuracy),
                fmt_f64(s.std_accuracy),
                fmt_f64(s.mean_f1),
                fmt_f64(s.std_f1),
                u8::from(mark(Metric::Accuracy)),
                u8::from(mark(Metric::F1)),
            ));
        }
        out
    }

    /// Best-classifier means of one featurizer; rows are training tags,
    /// columns test tags, blank where the pair was not run.
    pub fn heatmap_csv(&self, featurizer: &str, metric: Metric) -> String {
        let tags = self.tags();
        let mut out = format!("train\\test,{}\n", tags.join(","));
        for s in &tags {
            let cells: Vec<String> = tags
                .iter()
                .map(|t| {
                    self.best(&TransferPair::new(s.as_str(), t.as_str()), featurizer, metric)
                        .map_or_else(String::new, |b| fmt_f64(b.mean))
                })
                .collect();
            out.push_str(&format!("{s},{}\n", cells.join(",")));
        }
        out
    }
}

/// Evaluates every (pair, method, classifier) on one shared set of index
/// draws per pair.
pub fn run_transfer(
    inputs: &TransferInputs,
    pairs: &[TransferPair],
    methods: &[Method],
    plan: &SplitPlan,
) -> Result<TransferReport> {
    plan.validate()?;
    for m in methods {
        m.validate()?;
    }
    let pair_splits = pairs
        .iter()
        .map(|p| {
            let s = inputs.tag(&p.source_tag)?;
            let t = inputs.tag(&p.target_tag)?;
            let splits = pair_splits(p, &s.labels, &t.labels, plan)?;
            let digest = split_digest(&splits);
            Ok((splits, digest))
        })
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|p| (0..methods.len()).map(move |m| (p, m)))
        .collect();
    let blocks = jobs
        .par_iter()
        .map(|&(pi, mi)| {
            let pair = &pairs[pi];
            let method = &methods[mi];
            let (splits, digest) = &pair_splits[pi];
            let summaries: Vec<EvalSummary> = match method.input {
                InputKind::Features => {
                    let src = inputs.features_for(&method.name, &pair.source_tag, &pair.source_tag)?;
                    let tgt = inputs.features_for(&method.name, &pair.source_tag, &pair.target_tag)?;
                    method
                        .classifiers
                        .iter()
                        .map(|c| evaluate_on_splits(c, &src, &tgt, splits, &plan.seeds))
                        .collect::<Result<_>>()?
                }
                InputKind::Distances => {
                    let dist = inputs.distances_for(&method.name, &pair.source_tag, &pair.target_tag)?;
                    let s = &inputs.tag(&pair.source_tag)?.labels;
                    let t = &inputs.tag(&pair.target_tag)?.labels;
                    method
                        .classifiers
                        .iter()
                        .map(|c| match c {
                            ClassifierSpec::Knn { k } => evaluate_knn_realizations(&dist, s, t, *k, splits),
                            other => Err(Error::DtwRequiresKnn(other.name())),
                        })
                        .collect::<Result<_>>()?
                }
            };
            Ok(method
                .classifiers
                .iter()
                .zip(summaries)
                .map(|(c, summary)| ResultRow {
                    pair: pair.clone(),
                    featurizer: method.name.clone(),
                    classifier: c.name(),
                    summary,
                    split_digest: digest.clone(),
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferReport {
        rows: blocks.into_iter().flatten().collect(),
    })
}

/// How far below the winner a method may score and still count as inside
/// its error band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandRule {
    /// Mean at or above the winner's mean minus the winner's std.
    #[default]
    WinnerStd,
    /// The two mean +- std intervals overlap.
    Overlap,
}

impl FromStr for BandRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "winner-std" => Ok(BandRule::WinnerStd),
            "overlap" => Ok(BandRule::Overlap),
            _ => Err(Error::Config(format!("unknown band rule '{s}' (winner-std|overlap)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodGroup {
    pub name: String,
    pub members: Vec<String>,
}

/// Time-frequency, TDA and DTW groups restricted to `featurizers`;
/// unknown featurizers get a group of their own.
pub fn default_groups<S: AsRef<str>>(featurizers: &[S]) -> Vec<MethodGroup> {
    let known: [(&str, &[&str]); 3] = [
        ("time-frequency", &["wpt", "eemd", "fpa"]),
        ("tda", &["tda-cc", "tda-pi", "tda-pl", "tda-tf"]),
        ("dtw", &["dtw"]),
    ];
    let present: Vec<&str> = featurizers.iter().map(AsRef::as_ref).collect();
    let mut groups: Vec<MethodGroup> = known
        .iter()
        .map(|(name, members)| MethodGroup {
            name: name.to_string(),
            members: members
                .iter()
                .filter(|m| present.contains(m))
                .map(|m| m.to_string())
                .collect(),
        })
        .filter(|g| !g.members.is_empty())
        .collect();
    for f in present {
        if !known.iter().any(|(_, m)| m.contains(&f)) {
            groups.push(MethodGroup {
                name: f.to_string(),
                members: vec![f.to_string()],
            });
        }
    }
    groups
}

/// One group per featurizer.
pub fn singleton_groups<S: AsRef<str>>(featurizers: &[S]) -> Vec<MethodGroup> {
    featurizers
        .iter()
        .map(|f| MethodGroup {
            name: f.as_ref().to_string(),
            members: vec![f.as_ref().to_string()],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupCount {
    pub group: String,
    pub bm: usize,
    pub mieb: usize,
}

/// Per pair, the group whose best member scores highest is the best method
/// (all exact ties count); other groups inside its error band count as
/// MIEB. A group scores as its best member, with that member's std.
pub fn count_best_and_error_band(
    report: &TransferReport,
    groups: &[MethodGroup],
    metric: Metric,
    rule: BandRule,
) -> Result<Vec<GroupCount>> {
    let featurizers = report.featurizers();
    let mut counts: Vec<GroupCount> = groups
        .iter()
        .map(|g| GroupCount {
            group: g.name.clone(),
            bm: 0,
            mieb: 0,
        })
        .collect();
    for pair in report.pairs() {
        let incomplete = || Error::IncompleteReport {
            source_tag: pair.source_tag.clone(),
            target_tag: pair.target_tag.clone(),
        };
        let mut scores = Vec::with_capacity(groups.len());
        for g in groups {
            let mut group_best: Option<(f64, f64)> = None;
            let mut any = false;
            for m in g.members.iter().filter(|m| featurizers.contains(m)) {
                any = true;
                let b = report.best(&pair, m, metric).ok_or_else(incomplete)?;
                if group_best.is_none_or(|(mean, _)| b.mean > mean) {
                    group_best = Some((b.mean, b.std));
                }
            }
            if !any {
                return Err(incomplete());
            }
            scores.push(group_best.ok_or_else(incomplete)?);
        }
        let Some(top) = scores.iter().map(|s| s.0).reduce(f64::max) else {
            continue;
        };
        let winner_std = scores.iter().find(|s| s.0 == top).map_or(0.0, |s| s.1);
        let floor = top - winner_std;
        for (c, &(mean, std)) in counts.iter_mut().zip(&scores) {
            if mean == top {
                c.bm += 1;
            } else {
                let reach = match rule {
                    BandRule::WinnerStd => mean,
                    BandRule::Overlap => mean + std,
                };
                if reach >= floor {
                    c.mieb += 1;
                }
            }
        }
    }
    Ok(counts)
}

pub fn counts_csv(rows: &[(Metric, Vec<GroupCount>)]) -> String {
    let mut out = String::from("metric,group,bm,mieb\n");
    for (metric, counts) in rows {
        for c in counts {
            out.push_str(&format!("{},{},{},{}\n", metric.as_str(), c.group, c.bm, c.mieb));
        }
    }
    out
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes results, per-pair tables, heatmaps and BM/MIEB tables under
/// `dir`, each file opening with a `# config-hash:` line. Returns the
/// written file names.
pub fn write_report(
    dir: &Path,
    report: &TransferReport,
    groups: &[MethodGroup],
    rule: BandRule,
    config_hash: &str,
) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let header = format!("# config-hash: {config_hash}\n");
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        fs::write(dir.join(&name), format!("{header}{body}"))?;
        written.push(name);
        Ok(())
    };
    put("results.csv".into(), report.results_csv())?;
    for pair in report.pairs() {
        put(
            format!(
                "pair_{}__{}.csv",
                file_safe(&pair.source_tag),
                file_safe(&pair.target_tag)
            ),
            report.pair_csv(&pair),
        )?;
    }
    let featurizers = report.featurizers();
    for f in &featurizers {
        for m in Metric::ALL {
            put(
                format!("heatmap_{}_{}.csv", file_safe(f), m.as_str()),
                report.heatmap_csv(f, m),
            )?;
        }
    }
    let singles = singleton_groups(&featurizers);
    let mut by_group = Vec::new();
    let mut by_method = Vec::new();
    for m in Metric::ALL {
        by_group.push((m, count_best_and_error_band(report, groups, m, rule)?));
        by_method.push((m, count_best_and_error_band(report, &singles, m, rule)?));
    }
    put("bm_mieb_groups.csv".into(), counts_csv(&by_group))?;
    put("bm_mieb_methods.csv".into(), counts_csv(&by_method))?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(acc: &[f64]) -> EvalSummary {
        EvalSummary::from_scores(acc.to_vec(), acc.to_vec())
    }

    fn row(s: &str, t: &str, f: &str, c: &str, acc: &[f64]) -> ResultRow {
        ResultRow {
            pair: TransferPair::new(s, t),
            featurizer: f.into(),
            classifier: c.into(),
            summary: summary(acc),
            split_digest: "0".into(),
        }
    }

    #[test]
    fn pair_counts() {
        let five = ["a", "b", "c", "d", "e"];
        assert_eq!(enumerate_pairs(&five, false).unwrap().len(), 20);
        assert_eq!(enumerate_pairs(&five, true).unwrap().len(), 25);
        assert_eq!(enumerate_pairs(&five[..4], false).unwrap().len(), 12);
        let two = enumerate_pairs(&["x", "y"], false).unwrap();
        assert_eq!(two, vec![TransferPair::new("x", "y"), TransferPair::new("y", "x")]);
        assert!(matches!(enumerate_pairs(&["x"], false), Err(Error::TooFewTags(1))));
        assert!(enumerate_pairs(&["x", "x"], false).is_err());
    }

    #[test]
    fn traditional_splits_are_disjoint() {
        let labels: Vec<bool> = (0..30).map(|i| i % 3 == 0).collect();
        let plan = SplitPlan::default();
        let splits = pair_splits(&TransferPair::new("a", "a"), &labels, &labels, &plan).unwrap();
        for s in &splits {
            assert_eq!(s.train.len(), 20);
            assert_eq!(s.train.len() + s.test.len(), 30);
            assert!(s.train.iter().all(|i| !s.test.contains(i)));
        }
        assert_ne!(splits[0], splits[1]);
    }

    #[test]
    fn band_rule_examples() {
        let groups = vec![
            MethodGroup {
                name: "w".into(),
                members: vec!["w".into()],
            },
            MethodGroup {
                name: "r".into(),
                members: vec!["r".into()],
            },
            MethodGroup {
                name: "l".into(),
                members: vec!["l".into()],
            },
        ];
        // Winner 0.90 +- 0.05, runner-up 0.87, third 0.84.
        let report = TransferReport {
            rows: vec![
                row("a", "b", "w", "lr", &[0.85, 0.95]),
                row("a", "b", "r", "lr", &[0.87, 0.87]),
                row("a", "b", "l", "lr", &[0.84, 0.84]),
            ],
        };
        let c = count_best_and_error_band(&report, &groups, Metric::Accuracy, BandRule::WinnerStd).unwrap();
        assert_eq!((c[0].bm, c[0].mieb), (1, 0));
        assert_eq!((c[1].bm, c[1].mieb), (0, 1));
        assert_eq!((c[2].bm, c[2].mieb), (0, 0));

        // Overlap admits 0.84 +- 0.02 against 0.90 - 0.05.
        let report = TransferReport {
            rows: vec![
                row("a", "b", "w", "lr", &[0.85, 0.95]),
                row("a", "b", "r", "lr", &[0.87, 0.87]),
                row("a", "b", "l", "lr", &[0.82, 0.86]),
            ],
        };
        let c = count_best_and_error_band(&report, &groups, Metric::Accuracy, BandRule::Overlap).unwrap();
        assert_eq!(c[2].mieb, 1);
    }

    #[test]
    fn ties_all_count_and_zero_std_band_is_exact() {
        let groups = singleton_groups(&["x", "y", "z"]);
        let report = TransferReport {
            rows: vec![
                row("a", "b", "x", "lr", &[0.9, 0.9]),
                row("a", "b", "y", "lr", &[0.9, 0.9]),
                row("a", "b", "z", "lr", &[0.89, 0.89]),
            ],
        };
        let c = count_best_and_error_band(&report, &groups, Metric::Accuracy, BandRule::WinnerStd).unwrap();
        assert_eq!(
            c.iter().map(|g| (g.bm, g.mieb)).collect::<Vec<_>>(),
            vec![(1, 0), (1, 0), (0, 0)]
        );
    }

    #[test]
    fn group_score_is_best_member_and_best_classifier() {
        let report = TransferReport {
            rows: vec![
                row("a", "b", "wpt", "lr", &[0.6]),
                row("a", "b", "wpt", "svm", &[0.95]),
                row("a", "b", "fpa", "lr", &[0.7]),
                row("a", "b", "dtw", "knn1", &[0.8]),
                row("a", "b", "dtw", "knn2", &[0.9]),
            ],
        };
        assert_eq!(
            report
                .best(&TransferPair::new("a", "b"), "dtw", Metric::Accuracy)
                .unwrap()
                .classifier,
            "knn2"
        );
        let groups = default_groups(&report.featurizers());
        assert_eq!(groups.len(), 2);
        let c = count_best_and_error_band(&report, &groups, Metric::Accuracy, BandRule::WinnerStd).unwrap();
        assert_eq!(c[0].group, "time-frequency");
        assert_eq!((c[0].bm, c[1].bm), (1, 0));
    }

    #[test]
    fn missing_method_for_a_pair_is_incomplete() {
        let groups = singleton_groups(&["x", "y"]);
        let report = TransferReport {
            rows: vec![
                row("a", "b", "x", "lr", &[0.9]),
                row("a", "b", "y", "lr", &[0.9]),
                row("b", "a", "x", "lr", &[0.9]),
            ],
        };
        let err = count_best_and_error_band(&report, &groups, Metric::F1, BandRule::WinnerStd).unwrap_err();
        assert!(matches!(err, Error::IncompleteReport { ref source_tag, .. } if source_tag == "b"));
    }

    #[test]
    fn bm_totals_cover_every_pair() {
        let tags = ["t1", "t2", "t3", "t4"];
        let pairs = enumerate_pairs(&tags, false).unwrap();
        let mut rows = Vec::new();
        for (i, p) in pairs.iter().enumerate() {
            for (j, f) in ["wpt", "tda-cc", "dtw"].iter().enumerate() {
                let v = if (i + j) % 4 == 0 { 0.9 } else { 0.5 + 0.1 * j as f64 };
                rows.push(row(&p.source_tag, &p.target_tag, f, "c", &[v]));
            }
        }
        let report = TransferReport { rows };
        let groups = default_groups(&report.featurizers());
        let c = count_best_and_error_band(&report, &groups, Metric::Accuracy, BandRule::WinnerStd).unwrap();
        assert!(c.iter().map(|g| g.bm).sum::<usize>() >= 12);
    }

    fn toy_inputs() -> TransferInputs {
        let mut tags = Vec::new();
        let mut inputs_features = Vec::new();
        for (t, shift) in [("a", 0.0), ("b", 0.3), ("c", -0.2)] {
            let ids: Vec<String> = (0..30).map(|i| format!("{t}{i}")).collect();
            let labels: Vec<bool> = (0..30).map(|i| i % 2 == 0).collect();
            let values: Vec<Vec<f64>> = (0..30)
                .map(|i| {
                    let c = if i % 2 == 0 { 1.0 } else { -1.0 };
                    vec![c + shift + 0.01 * i as f64, 0.1 * (i % 7) as f64]
                })
                .collect();
            // Stored in reverse to exercise id alignment.
            let mut fm =
                FeatureMatrix::new(ids.clone(), vec!["f0".into(), "f1".into()], values, labels.clone()).unwrap();
            let rev: Vec<usize> = (0..30).rev().collect();
            fm = fm.select(&rev);
            inputs_features.push((t, fm));
            tags.push(TagData {
                tag: t.into(),
                record_ids: ids,
                labels,
            });
        }
        let all_ids: Vec<String> = tags.iter().flat_map(|t| t.record_ids.clone()).collect();
        let coords: Vec<f64> = inputs_features
            .iter()
            .flat_map(|(_, fm)| {
                let mut v: Vec<(String, f64)> = fm
                    .record_ids
                    .iter()
                    .cloned()
                    .zip(fm.values.iter().map(|r| r[0]))
                    .collect();
                v.reverse();
                v.into_iter().map(|(_, x)| x)
            })
            .collect();
        let values = coords
            .iter()
            .map(|a| coords.iter().map(|b| (a - b).abs()).collect())
            .collect();
        let dm = DistanceMatrix {
            row_ids: all_ids.clone(),
            col_ids: all_ids,
            values,
        };
        let mut inputs = TransferInputs::new(tags).unwrap();
        for (t, fm) in inputs_features {
            inputs.insert_features("feat", t, fm);
        }
        inputs.insert_distances("dtw", dm);
        inputs
    }

    #[test]
    fn run_shares_draws_across_methods() {
        let inputs = toy_inputs();
        let pairs = enumerate_pairs(&inputs.tag_names(), false).unwrap();
        let methods = vec![
            Method::features("feat", vec!["lr".parse().unwrap(), "knn1".parse().unwrap()]),
            Method::distances("dtw", (1..=3).map(|k| ClassifierSpec::Knn { k }).collect()),
        ];
        let plan = SplitPlan::default();
        let report = run_transfer(&inputs, &pairs, &methods, &plan).unwrap();
        assert_eq!(report.rows.len(), 6 * 5);
        for p in &pairs {
            let digests: BTreeSet<&str> = report
                .rows
                .iter()
                .filter(|r| &r.pair == p)
                .map(|r| r.split_digest.as_str())
                .collect();
            assert_eq!(digests.len(), 1);
            let feat = report.best(p, "feat", Metric::Accuracy).unwrap();
            let dtw = report.best(p, "dtw", Metric::Accuracy).unwrap();
            assert!(feat.mean >= 0.95, "{p}: {}", feat.mean);
            assert!(dtw.mean >= 0.95, "{p}: {}", dtw.mean);
        }
        assert_eq!(report, run_transfer(&inputs, &pairs, &methods, &plan).unwrap());
        let back = TransferReport::from_results_csv(&report.results_csv()).unwrap();
        assert_eq!(back.results_csv(), report.results_csv());
    }

    #[test]
    fn single_combination_gives_one_summary() {
        let inputs = toy_inputs();
        let pairs = vec![TransferPair::new("a", "b")];
        let methods = vec![Method::features("feat", vec!["svm".parse().unwrap()])];
        let report = run_transfer(&inputs, &pairs, &methods, &SplitPlan::default()).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].summary.accuracies.len(), 10);
    }

    #[test]
    fn dtw_rejects_non_knn_and_missing_features_are_named() {
        let inputs = toy_inputs();
        let pairs = vec![TransferPair::new("a", "b")];
        let bad = vec![Method::distances("dtw", vec!["lr".parse().unwrap()])];
        assert!(matches!(
            run_transfer(&inputs, &pairs, &bad, &SplitPlan::default()),
            Err(Error::DtwRequiresKnn(ref c)) if c == "lr"
        ));
        let missing = vec![Method::features("wpt", vec!["lr".parse().unwrap()])];
        match run_transfer(&inputs, &pairs, &missing, &SplitPlan::default()) {
            Err(Error::MissingFeatures { tag, featurizer }) => {
                assert_eq!(tag, "a");
                assert_eq!(featurizer, "wpt");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn report_files_carry_the_hash() {
        let inputs = toy_inputs();
        let pairs = enumerate_pairs(&inputs.tag_names(), false).unwrap();
        let methods = vec![
            Method::features("feat", vec!["lr".parse().unwrap()]),
            Method::distances("dtw", vec![ClassifierSpec::Knn { k: 1 }]),
        ];
        let report = run_transfer(&inputs, &pairs, &methods, &SplitPlan::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(
            dir.path(),
            &report,
            &default_groups(&report.featurizers()),
            BandRule::WinnerStd,
            "abc",
        )
        .unwrap();
        assert_eq!(files.len(), 1 + 6 + 4 + 2);
        for f in &files {
            let text = fs::read_to_string(dir.path().join(f)).unwrap();
            assert!(text.starts_with("# config-hash: abc\n"), "{f}");
        }
        let heat = fs::read_to_string(dir.path().join("heatmap_dtw_accuracy.csv")).unwrap();
        let lines: Vec<&str> = heat.lines().collect();
        assert_eq!(lines[1], "train\\test,a,b,c");
        assert!(lines[2].starts_with("a,,"));
    }
}

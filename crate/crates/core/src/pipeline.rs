//! Run configuration and the path from manifests (or a generated corpus)
//! through preprocessing, featurization and the transfer grid to a report
//! directory.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{binarize_labels, load_manifest, FeatureMatrix, SplitPlan, TimeSeriesRecord};
use crate::dtw::{cross_matrix, pairwise_matrix, DistanceMatrix, DtwConfig};
use crate::eemd::{eemd_feature_names, eemd_record_features, select_informative_imf_for_tag, EemdParams};
use crate::fpa::{fpa_feature_names, fpa_feature_vector, FpaParams};
use crate::learn::ClassifierSpec;
use crate::preprocess::{default_cutoff_hz, preprocess_record, FilterSpec};
use crate::synth::{generate_records, CorpusSpec};
use crate::tda::{record_diagram, FittedVectorizer, PersistenceDiagram, TdaMethod, TdaParams};
use crate::transfer::{
    default_groups, enumerate_pairs, run_transfer, write_report, BandRule, InputKind, Method, MethodGroup, TagData,
    TransferInputs, TransferPair, TransferReport,
};
use crate::wpt::{
    select_informative_packet, wpt_feature_names, wpt_record_features, InformativePacketTable, PacketSelection,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Featurizer {
    Fpa,
    Wpt,
    Eemd,
    Tda(TdaMethod),
    Dtw,
}

impl Featurizer {
    pub fn name(self) -> String {
        match self {
            Featurizer::Fpa => "fpa".into(),
            Featurizer::Wpt => "wpt".into(),
            Featurizer::Eemd => "eemd".into(),
            Featurizer::Tda(m) => format!("tda-{}", m.as_str()),
            Featurizer::Dtw => "dtw".into(),
        }
    }

    pub fn input(self) -> InputKind {
        if self == Featurizer::Dtw {
            InputKind::Distances
        } else {
            InputKind::Features
        }
    }
}

impl fmt::Display for Featurizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Featurizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "fpa" => Ok(Featurizer::Fpa),
            "wpt" => Ok(Featurizer::Wpt),
            "eemd" => Ok(Featurizer::Eemd),
            "dtw" => Ok(Featurizer::Dtw),
            _ => match lower.strip_prefix("tda-") {
                Some(m) => Ok(Featurizer::Tda(m.parse()?)),
                None => Err(Error::Config(format!(
                    "unknown featurizer '{s}' (fpa|wpt|eemd|tda-cc|tda-pi|tda-pl|tda-tf|dtw)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Anti-alias cutoff; 90% of the target Nyquist frequency when unset.
    pub cutoff_hz: Option<f64>,
    pub order: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            cutoff_hz: None,
            order: FilterSpec::DEFAULT_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WptConfig {
    pub level: usize,
    pub wavelet: String,
    /// `table`, `auto`, or a fixed 1-based packet index.
    pub packet: String,
    /// Extra or overriding entries for the tag -> packet table.
    pub table: BTreeMap<String, usize>,
}

impl Default for WptConfig {
    fn default() -> Self {
        WptConfig {
            level: crate::wpt::DEFAULT_LEVEL,
            wavelet: crate::wpt::DEFAULT_WAVELET.into(),
            packet: "table".into(),
            table: BTreeMap::new(),
        }
    }
}

impl WptConfig {
    pub fn selection(&self) -> Result<PacketSelection> {
        match self.packet.as_str() {
            "auto" => Ok(PacketSelection::Auto),
            "table" => {
                let mut table = InformativePacketTable::default();
                for (tag, &p) in &self.table {
                    table.insert(tag.clone(), p)?;
                }
                Ok(PacketSelection::Table(table))
            }
            n => n
                .parse()
                .map(PacketSelection::Fixed)
                .map_err(|_| Error::Config(format!("wpt packet must be table, auto or an index, got '{n}'"))),
        }
    }
}

/// Generated corpus used in place of manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSource {
    pub seed: u64,
    /// Records per class and tag of the default five-tag corpus.
    #[serde(default)]
    pub per_class: Option<usize>,
    /// Corpus description file; overrides `per_class`.
    #[serde(default)]
    pub spec: Option<PathBuf>,
}

impl SynthSource {
    pub fn corpus(&self, base_dir: &Path) -> Result<CorpusSpec> {
        match (&self.spec, self.per_class) {
            (Some(p), _) => CorpusSpec::from_toml(&fs::read_to_string(resolve(base_dir, p))?),
            (None, Some(n)) => Ok(CorpusSpec::five_tag(n)),
            (None, None) => Err(Error::Config("synth needs per_class or spec".into())),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifests: Vec<PathBuf>,
    /// Precomputed `<featurizer>/<tag>.csv` or `<featurizer>.csv` files
    /// used instead of computing features.
    pub feature_dir: Option<PathBuf>,
    /// Precomputed all-records DTW matrix.
    pub distances: Option<PathBuf>,
    pub featurizers: Vec<String>,
    pub classifiers: Vec<String>,
    pub dtw_classifiers: Vec<String>,
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub test_fraction: f64,
    pub stratify: bool,
    pub include_traditional: bool,
    pub band: BandRule,
    pub synth: Option<SynthSource>,
    /// Empty means time-frequency / TDA / DTW.
    pub groups: Vec<MethodGroup>,
    pub preprocess: PreprocessConfig,
    pub fpa: FpaParams,
    pub wpt: WptConfig,
    pub eemd: EemdParams,
    pub tda: TdaParams,
    pub dtw: DtwConfig,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let plan = SplitPlan::default();
        RunConfig {
            manifests: Vec::new(),
            feature_dir: None,
            distances: None,
            featurizers: ["fpa", "wpt", "eemd", "tda-cc", "dtw"].map(String::from).to_vec(),
            classifiers: ["lr", "svm", "rf", "gb"].map(String::from).to_vec(),
            dtw_classifiers: (1..=5).map(|k| format!("knn{k}")).collect(),
            seeds: plan.seeds,
            train_fraction: plan.train_fraction,
            test_fraction: plan.test_fraction,
            stratify: plan.stratify,
            include_traditional: false,
            band: BandRule::WinnerStd,
            synth: None,
            groups: Vec::new(),
            preprocess: PreprocessConfig::default(),
            fpa: FpaParams::default(),
            wpt: WptConfig::default(),
            eemd: EemdParams::default(),
            tda: TdaParams::default(),
            dtw: DtwConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths in it resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn plan(&self) -> SplitPlan {
        SplitPlan {
            seeds: self.seeds.clone(),
            train_fraction: self.train_fraction,
            test_fraction: self.test_fraction,
            stratify: self.stratify,
        }
    }

    pub fn featurizer_list(&self) -> Result<Vec<Featurizer>> {
        if self.featurizers.is_empty() {
            return Err(Error::Config("no featurizers listed".into()));
        }
        let list = self
            .featurizers
            .iter()
            .map(|f| f.parse())
            .collect::<Result<Vec<Featurizer>>>()?;
        let mut seen = list.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != list.len() {
            return Err(Error::Config("featurizers listed twice".into()));
        }
        Ok(list)
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        let parse = |names: &[String]| names.iter().map(|c| c.parse()).collect::<Result<Vec<ClassifierSpec>>>();
        let classifiers = parse(&self.classifiers)?;
        let knn = parse(&self.dtw_classifiers)?;
        let methods: Vec<Method> = self
            .featurizer_list()?
            .into_iter()
            .map(|f| match f.input() {
                InputKind::Features => Method::features(f.name(), classifiers.clone()),
                InputKind::Distances => Method::distances(f.name(), knn.clone()),
            })
            .collect();
        for m in &methods {
            m.validate()?;
        }
        Ok(methods)
    }

    pub fn method_groups(&self) -> Result<Vec<MethodGroup>> {
        if self.groups.is_empty() {
            return Ok(default_groups(&self.featurizers));
        }
        for g in &self.groups {
            if let Some(m) = g.members.iter().find(|m| !self.featurizers.contains(m)) {
                return Err(Error::Config(format!(
                    "group '{}' names unlisted featurizer '{m}'",
                    g.name
                )));
            }
        }
        Ok(self.groups.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.plan().validate()?;
        self.methods()?;
        self.method_groups()?;
        self.wpt.selection()?;
        match (self.manifests.is_empty(), &self.synth) {
            (true, None) => Err(Error::Config("no manifests and no synth section".into())),
            (false, Some(_)) => Err(Error::Config("give manifests or synth, not both".into())),
            _ => Ok(()),
        }
    }
}

/// Records of one dataset tag after preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct TagRecords {
    pub tag: String,
    pub records: Vec<TimeSeriesRecord>,
}

impl TagRecords {
    pub fn tag_data(&self) -> TagData {
        TagData {
            tag: self.tag.clone(),
            record_ids: self.records.iter().map(|r| r.id.clone()).collect(),
            labels: self
                .records
                .iter()
                .map(|r| r.label.is_chatter().unwrap_or(false))
                .collect(),
        }
    }
}

/// Groups records by tag in first-seen order.
pub fn group_by_tag(records: Vec<TimeSeriesRecord>) -> Vec<TagRecords> {
    let mut out: Vec<TagRecords> = Vec::new();
    for r in records {
        match out.iter_mut().find(|t| t.tag == r.dataset_tag) {
            Some(t) => t.records.push(r),
            None => out.push(TagRecords {
                tag: r.dataset_tag.clone(),
                records: vec![r],
            }),
        }
    }
    out
}

/// Low-pass filters and decimates every record to `fs_target`.
pub fn preprocess_all(
    records: &[TimeSeriesRecord],
    fs_target: f64,
    cfg: &PreprocessConfig,
) -> Result<Vec<TimeSeriesRecord>> {
    records
        .par_iter()
        .map(|r| {
            let spec = FilterSpec {
                cutoff_hz: cfg.cutoff_hz.unwrap_or_else(|| default_cutoff_hz(fs_target)),
                order: cfg.order,
                decimation_factor: (r.fs / fs_target).round().max(1.0) as usize,
            };
            preprocess_record(r, &spec)
        })
        .collect()
}

/// Loads, binarizes and preprocesses the configured datasets.
pub fn load_datasets(cfg: &RunConfig) -> Result<Vec<TagRecords>> {
    let mut all = Vec::new();
    if let Some(synth) = &cfg.synth {
        let spec = synth.corpus(&cfg.base_dir)?;
        let raw = binarize_labels(generate_records(&spec, synth.seed)?);
        all.extend(preprocess_all(&raw, spec.fs_target, &cfg.preprocess)?);
    }
    for m in &cfg.manifests {
        let manifest = load_manifest(&resolve(&cfg.base_dir, m))?;
        let raw = binarize_labels(manifest.load_records()?);
        all.extend(preprocess_all(&raw, manifest.fs_target, &cfg.preprocess)?);
    }
    if all.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(group_by_tag(all))
}

fn matrix(records: &[TimeSeriesRecord], names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<FeatureMatrix> {
    FeatureMatrix::new(
        records.iter().map(|r| r.id.clone()).collect(),
        names,
        rows,
        records.iter().map(|r| r.label.is_chatter().unwrap_or(false)).collect(),
    )
}

/// H1 diagrams of every record.
pub fn diagrams(records: &[TimeSeriesRecord], params: &TdaParams) -> Result<Vec<PersistenceDiagram>> {
    records.par_iter().map(|r| record_diagram(r, params)).collect()
}

/// Vectorizes diagrams with a vectorizer fitted on `fit_on`.
pub fn vectorize(
    method: TdaMethod,
    fit_on: &[PersistenceDiagram],
    records: &[TimeSeriesRecord],
    diagrams: &[PersistenceDiagram],
    params: &TdaParams,
) -> Result<FeatureMatrix> {
    let vec = FittedVectorizer::fit(method, fit_on, params)?;
    let rows = diagrams.iter().map(|d| vec.transform(d)).collect::<Result<Vec<_>>>()?;
    matrix(records, vec.feature_names(), rows)
}

/// Features of one tag. TDA vectorizers are fitted on the tag itself.
pub fn featurize_tag(featurizer: Featurizer, records: &[TimeSeriesRecord], cfg: &RunConfig) -> Result<FeatureMatrix> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    match featurizer {
        Featurizer::Fpa => {
            let rows = records
                .par_iter()
                .map(|r| fpa_feature_vector(r, &cfg.fpa))
                .collect::<Result<Vec<_>>>()?;
            matrix(records, fpa_feature_names(cfg.fpa.n_peaks), rows)
        }
        Featurizer::Wpt => {
            let w = &cfg.wpt;
            let packet = select_informative_packet(records, &w.selection()?, w.level, &w.wavelet)?;
            let rows = records
                .par_iter()
                .map(|r| wpt_record_features(r, w.level, &w.wavelet, packet))
                .collect::<Result<Vec<_>>>()?;
            matrix(records, wpt_feature_names(), rows)
        }
        Featurizer::Eemd => {
            let imf = select_informative_imf_for_tag(records, &cfg.eemd)?;
            let rows = records
                .par_iter()
                .map(|r| eemd_record_features(r, &cfg.eemd, imf))
                .collect::<Result<Vec<_>>>()?;
            matrix(records, eemd_feature_names(), rows)
        }
        Featurizer::Tda(m) => {
            let d = diagrams(records, &cfg.tda)?;
            vectorize(m, &d, records, &d, &cfg.tda)
        }
        Featurizer::Dtw => Err(Error::Config("DTW produces distances, not features".into())),
    }
}

fn pairs_for(cfg: &RunConfig, tags: &[TagRecords]) -> Result<Vec<TransferPair>> {
    let names: Vec<&str> = tags.iter().map(|t| t.tag.as_str()).collect();
    enumerate_pairs(&names, cfg.include_traditional)
}

/// Per-tag diagrams, computed once and shared by every TDA vectorizer.
fn tag_diagrams<'a>(
    cache: &'a mut Option<Vec<Vec<PersistenceDiagram>>>,
    cfg: &RunConfig,
    tags: &[TagRecords],
) -> Result<&'a [Vec<PersistenceDiagram>]> {
    if cache.is_none() {
        let d = tags
            .iter()
            .map(|t| diagrams(&t.records, &cfg.tda))
            .collect::<Result<Vec<_>>>()?;
        *cache = Some(d);
    }
    Ok(cache.as_deref().unwrap_or_default())
}

/// Features and distances for every tag and pair the run needs.
pub fn build_inputs(cfg: &RunConfig, tags: &[TagRecords]) -> Result<TransferInputs> {
    let mut inputs = TransferInputs::new(tags.iter().map(TagRecords::tag_data).collect())?;
    let pairs = pairs_for(cfg, tags)?;
    let mut diagram_cache = None;
    for f in cfg.featurizer_list()? {
        let name = f.name();
        if let Some(dir) = &cfg.feature_dir {
            if f.input() == InputKind::Features {
                // `<featurizer>/<tag>.csv`, else one `<featurizer>.csv` for all tags.
                let dir = resolve(&cfg.base_dir, dir);
                let combined = dir.join(format!("{name}.csv"));
                let shared = if combined.is_file() {
                    Some(FeatureMatrix::read_csv(&combined)?)
                } else {
                    None
                };
                for t in tags {
                    let path = dir.join(&name).join(format!("{}.csv", t.tag));
                    let fm = if path.is_file() {
                        FeatureMatrix::read_csv(&path)?
                    } else if let Some(fm) = &shared {
                        fm.clone()
                    } else {
                        return Err(Error::MissingFeatures {
                            tag: t.tag.clone(),
                            featurizer: name,
                        });
                    };
                    inputs.insert_features(&name, &t.tag, fm);
                }
                continue;
            }
        }
        match f {
            Featurizer::Dtw => {
                if let Some(path) = &cfg.distances {
                    inputs.insert_distances(&name, DistanceMatrix::read_csv(&resolve(&cfg.base_dir, path))?);
                    continue;
                }
                let index: BTreeMap<&str, &TagRecords> = tags.iter().map(|t| (t.tag.as_str(), t)).collect();
                for p in &pairs {
                    let (s, t) = (&p.source_tag, &p.target_tag);
                    if p.is_traditional() {
                        inputs.insert_pair_distances(
                            &name,
                            s,
                            t,
                            pairwise_matrix(&index[s.as_str()].records, &cfg.dtw)?,
                        );
                    } else if s < t {
                        let dm = cross_matrix(&index[s.as_str()].records, &index[t.as_str()].records, &cfg.dtw)?;
                        inputs.insert_pair_distances(&name, t, s, dm.transpose());
                        inputs.insert_pair_distances(&name, s, t, dm);
                    }
                }
            }
            Featurizer::Tda(TdaMethod::Carlsson) => {
                let diags = tag_diagrams(&mut diagram_cache, cfg, tags)?;
                for (t, d) in tags.iter().zip(diags) {
                    inputs.insert_features(
                        &name,
                        &t.tag,
                        vectorize(TdaMethod::Carlsson, d, &t.records, d, &cfg.tda)?,
                    );
                }
            }
            Featurizer::Fpa | Featurizer::Wpt | Featurizer::Eemd => {
                for t in tags {
                    inputs.insert_features(&name, &t.tag, featurize_tag(f, &t.records, cfg)?);
                }
            }
            Featurizer::Tda(m) => {
                // Fitted on each source tag, applied to every tag.
                let diags = tag_diagrams(&mut diagram_cache, cfg, tags)?;
                for (si, s) in tags.iter().enumerate() {
                    for (ti, t) in tags.iter().enumerate() {
                        let fm = vectorize(m, &diags[si], &t.records, &diags[ti], &cfg.tda)?;
                        inputs.insert_fitted_features(&name, &s.tag, &t.tag, fm);
                    }
                }
            }
        }
    }
    Ok(inputs)
}

pub fn provenance(cfg: &RunConfig, tags: &[TagRecords]) -> String {
    let mut out = format!("config-hash: {}\n", cfg.hash());
    out.push_str(&format!("chatterkit-version: {}\n", env!("CARGO_PKG_VERSION")));
    let seeds: Vec<String> = cfg.seeds.iter().map(u64::to_string).collect();
    out.push_str(&format!("seeds: {}\n", seeds.join(" ")));
    out.push_str(&format!("featurizers: {}\n", cfg.featurizers.join(" ")));
    for t in tags {
        let chatter = t.tag_data().labels.iter().filter(|&&l| l).count();
        out.push_str(&format!(
            "tag: {} records={} chatter={}\n",
            t.tag,
            t.records.len(),
            chatter
        ));
    }
    out.push_str("\n[config]\n");
    out.push_str(&cfg.to_toml());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub report: TransferReport,
    pub files: Vec<String>,
    pub config_hash: String,
}

pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// Runs the full grid and writes the report under `out_dir`. While running,
/// `out_dir` holds an `INCOMPLETE` marker that is removed on success.
pub fn run_pipeline(cfg: &RunConfig, out_dir: &Path) -> Result<PipelineOutput> {
    cfg.validate()?;
    let hash = cfg.hash();
    fs::create_dir_all(out_dir)?;
    let marker = out_dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, format!("# config-hash: {hash}\nrun did not finish\n"))?;

    let tags = load_datasets(cfg)?;
    let inputs = build_inputs(cfg, &tags)?;
    let pairs = pairs_for(cfg, &tags)?;
    let report = run_transfer(&inputs, &pairs, &cfg.methods()?, &cfg.plan())?;
    let mut files = write_report(out_dir, &report, &cfg.method_groups()?, cfg.band, &hash)?;
    fs::write(
        out_dir.join("provenance.txt"),
        format!("# config-hash: {hash}\n{}", provenance(cfg, &tags)),
    )?;
    files.push("provenance.txt".into());
    fs::remove_file(&marker)?;
    Ok(PipelineOutput {
        report,
        files,
        config_hash: hash,
    })
}

use std::fmt::Debug;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use chatterkit::dataset::{
    binarize_labels, load_manifest, write_series, DatasetManifest, FeatureMatrix, ManifestEntry, SeriesFormat,
    SplitPlan, TimeSeriesRecord,
};
use chatterkit::dtw::{cross_matrix, pairwise_matrix, DtwConfig};
use chatterkit::learn::{evaluate_on_splits, ClassifierSpec};
use chatterkit::pipeline::{
    diagrams, featurize_tag, group_by_tag, preprocess_all, run_pipeline, vectorize, Featurizer, PreprocessConfig,
    RunConfig,
};
use chatterkit::preprocess::{default_cutoff_hz, preprocess_record, FilterSpec};
use chatterkit::synth::{generate_benchmark, CorpusSpec};
use chatterkit::tda::TdaMethod;
use chatterkit::transfer::{
    count_best_and_error_band, default_groups, pair_splits, split_digest, write_report, BandRule, Metric, TransferPair,
    TransferReport,
};

/// Chatter-detection featurizers and transfer-learning evaluation.
#[derive(Debug, Parser)]
#[command(name = "chatterkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Low-pass filter and decimate every series of a manifest.
    Preprocess(PreprocessArgs),
    /// Extract one feature family for every record of a manifest.
    Featurize(FeaturizeArgs),
    /// DTW distance matrix within one manifest or between two.
    Dtw(DtwArgs),
    /// Train on one feature file and score on another over seeded splits.
    Train(TrainArgs),
    /// Run the full source -> target grid from a run config.
    Transfer(TransferArgs),
    /// Generate the synthetic machining corpus.
    Synth(SynthArgs),
    /// Recompute heatmaps and BM/MIEB tables from a report's results.csv.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to 90% of the target Nyquist frequency.
    #[arg(long)]
    cutoff_hz: Option<f64>,
    /// Defaults to fs_raw / fs_target.
    #[arg(long)]
    factor: Option<usize>,
    #[arg(long, default_value_t = FilterSpec::DEFAULT_ORDER)]
    order: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Wpt,
    Eemd,
    Fpa,
    Tda,
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    family: Family,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// FPA: MPH fraction for the FFT and PSD.
    #[arg(long)]
    alpha_fft: Option<f64>,
    /// FPA: MPH fraction for the ACF.
    #[arg(long)]
    alpha_acf: Option<f64>,
    /// FPA: minimum peak distance (Hz for FFT/PSD, lag samples for ACF).
    #[arg(long)]
    mpd: Option<f64>,
    #[arg(long)]
    n_peaks: Option<usize>,
    /// WPT decomposition level.
    #[arg(long)]
    level: Option<usize>,
    /// WPT informative packet: table, auto or an index.
    #[arg(long)]
    packet: Option<String>,
    #[arg(long)]
    wavelet: Option<String>,
    /// EEMD ensemble size.
    #[arg(long)]
    ensemble: Option<usize>,
    /// EEMD noise std as a fraction of the signal std.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// TDA vectorization: cc, pi, pl or tf.
    #[arg(long, default_value = "cc")]
    method: String,
    #[arg(long)]
    max_points: Option<usize>,
}

#[derive(Debug, Args)]
struct DtwArgs {
    /// Row records.
    #[arg(long)]
    manifest_a: PathBuf,
    /// Column records; rows against themselves when absent.
    #[arg(long)]
    manifest_b: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    window: f64,
    #[arg(long, default_value_t = 1.0)]
    slope: f64,
    /// Skip z-normalization.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training features.
    #[arg(long)]
    features: PathBuf,
    /// Test features; a held-out part of the training file when absent.
    #[arg(long)]
    test: Option<PathBuf>,
    /// lr, svm, rf, gb, mlp or knn<k>; repeatable.
    #[arg(long, default_values_t = ["lr".to_string()])]
    classifier: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = 0..10u64)]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 0.67)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0.70)]
    test_fraction: f64,
    #[arg(long)]
    stratify: bool,
    /// Summary CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TransferArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Corpus description (TOML); the five-tag corpus when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report directory holding results.csv.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long, default_value = "winner-std")]
    band: String,
    /// Write regenerated tables here instead of only printing them.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn args_hash(args: &impl Debug) -> String {
    hex::encode(Sha256::digest(format!("{args:?}").as_bytes()))
}

/// Records binarized and resampled to the manifest's target rate.
fn load_preprocessed(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let manifest = load_manifest(path).with_context(|| format!("loading {}", path.display()))?;
    let records = binarize_labels(manifest.load_records()?);
    Ok(preprocess_all(
        &records,
        manifest.fs_target,
        &PreprocessConfig::default(),
    )?)
}

fn preprocess(args: &PreprocessArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest).with_context(|| format!("loading {}", args.manifest.display()))?;
    let factor = args.factor.unwrap_or_else(|| manifest.decimation_factor());
    let fs_out = manifest.fs_raw / factor as f64;
    let spec = FilterSpec {
        cutoff_hz: args.cutoff_hz.unwrap_or_else(|| default_cutoff_hz(fs_out)),
        order: args.order,
        decimation_factor: factor,
    };
    let series_dir = args.out.join("series");
    fs::create_dir_all(&series_dir)?;
    let mut entries = Vec::new();
    for rec in manifest.load_records()? {
        let out = preprocess_record(&rec, &spec)?;
        let rel = PathBuf::from("series").join(format!("{}.txt", out.id));
        write_series(&args.out.join(&rel), &out.samples)?;
        entries.push(ManifestEntry {
            path: rel,
            rpm: out.rpm,
            depth_of_cut_mm: out.depth_of_cut_mm,
            label: out.label,
            tag: out.dataset_tag,
        });
    }
    let n = entries.len();
    let out = DatasetManifest {
        name: manifest.name,
        fs_raw: fs_out,
        fs_target: fs_out,
        format: SeriesFormat::SingleColumn,
        records: entries,
        base_dir: args.out.clone(),
    };
    out.write(&args.out.join("manifest.txt"))?;
    println!("{n} records at {fs_out} Hz written to {}", args.out.display());
    Ok(())
}

fn featurize(args: &FeaturizeArgs) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(a) = args.alpha_fft {
        cfg.fpa.alpha_fft = a;
        cfg.fpa.alpha_psd = a;
    }
    if let Some(a) = args.alpha_acf {
        cfg.fpa.alpha_acf = a;
    }
    if let Some(d) = args.mpd {
        cfg.fpa.mpd_fft = d;
        cfg.fpa.mpd_psd = d;
        cfg.fpa.mpd_acf = d;
    }
    if let Some(k) = args.n_peaks {
        cfg.fpa.n_peaks = k;
    }
    if let Some(l) = args.level {
        cfg.wpt.level = l;
    }
    if let Some(p) = &args.packet {
        cfg.wpt.packet = p.clone();
    }
    if let Some(w) = &args.wavelet {
        cfg.wpt.wavelet = w.clone();
    }
    if let Some(e) = args.ensemble {
        cfg.eemd.ensemble_size = e;
    }
    if let Some(n) = args.noise {
        cfg.eemd.noise_std_fraction = n;
    }
    if let Some(s) = args.seed {
        cfg.eemd.seed = s;
        cfg.tda.seed = s;
    }
    if let Some(m) = args.max_points {
        cfg.tda.max_points = m;
    }
    let featurizer = match args.family {
        Family::Wpt => Featurizer::Wpt,
        Family::Eemd => Featurizer::Eemd,
        Family::Fpa => Featurizer::Fpa,
        Family::Tda => Featurizer::Tda(args.method.parse::<TdaMethod>()?),
    };
    let records = load_preprocessed(&args.manifest)?;
    let fm = match featurizer {
        // Fitted vectorizers share one grid across the whole manifest.
        Featurizer::Tda(m) if m != TdaMethod::Carlsson => {
            let d = diagrams(&records, &cfg.tda)?;
            vectorize(m, &d, &records, &d, &cfg.tda)?
        }
        _ => per_tag(featurizer, records, &cfg)?,
    };
    let provenance = vec![
        format!("config-hash: {}", args_hash(args)),
        format!("featurizer: {featurizer}"),
        format!("manifest: {}", args.manifest.display()),
    ];
    if let Some(dir) = args.out.parent() {
        fs::create_dir_all(dir)?;
    }
    fm.write_csv(&args.out, &provenance)?;
    println!(
        "{} rows x {} features written to {}",
        fm.n_rows(),
        fm.n_features(),
        args.out.display()
    );
    Ok(())
}

/// Features computed tag by tag (informative packet and IMF are chosen per
/// tag) and stacked in first-seen tag order.
fn per_tag(featurizer: Featurizer, records: Vec<TimeSeriesRecord>, cfg: &RunConfig) -> Result<FeatureMatrix> {
    let mut combined: Option<FeatureMatrix> = None;
    for t in group_by_tag(records) {
        let fm = featurize_tag(featurizer, &t.records, cfg).with_context(|| format!("tag '{}'", t.tag))?;
        match &mut combined {
            None => combined = Some(fm),
            Some(all) => {
                all.record_ids.extend(fm.record_ids);
                all.values.extend(fm.values);
                all.labels.extend(fm.labels);
            }
        }
    }
    let fm = combined.context("manifest has no records")?;
    fm.validate()?;
    Ok(fm)
}

fn dtw(args: &DtwArgs) -> Result<()> {
    let cfg = DtwConfig {
        window_fraction: args.window,
        slope_p: args.slope,
        z_normalize: !args.raw,
        ..DtwConfig::default()
    };
    let a = load_preprocessed(&args.manifest_a)?;
    let dm = match &args.manifest_b {
        Some(b) => cross_matrix(&load_preprocessed(b)?, &a, &cfg)?,
        None => pairwise_matrix(&a, &cfg)?,
    };
    if let Some(dir) = args.out.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(
        &args.out,
        format!("# config-hash: {}\n{}", args_hash(args), dm.to_csv()),
    )?;
    println!(
        "{} x {} distances written to {}",
        dm.n_rows(),
        dm.n_cols(),
        args.out.display()
    );
    Ok(())
}

fn train(args: &TrainArgs) -> Result<()> {
    let source = FeatureMatrix::read_csv(&args.features)?;
    let (target, pair) = match &args.test {
        Some(t) => (FeatureMatrix::read_csv(t)?, TransferPair::new("train", "test")),
        None => (source.clone(), TransferPair::new("train", "train")),
    };
    let plan = SplitPlan {
        seeds: args.seeds.clone(),
        train_fraction: args.train_fraction,
        test_fraction: args.test_fraction,
        stratify: args.stratify,
    };
    let splits = pair_splits(&pair, &source.labels, &target.labels, &plan)?;
    let mut out = format!(
        "# config-hash: {}\n# split-digest: {}\nclassifier,mean_accuracy,std_accuracy,mean_f1,std_f1\n",
        args_hash(args),
        split_digest(&splits)
    );
    for name in &args.classifier {
        let spec: ClassifierSpec = name.parse()?;
        let s = evaluate_on_splits(&spec, &source, &target, &splits, &plan.seeds)?;
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            spec.name(),
            s.mean_accuracy,
            s.std_accuracy,
            s.mean_f1,
            s.std_f1
        ));
    }
    match &args.out {
        Some(p) => fs::write(p, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn print_counts(report: &TransferReport, band: BandRule) -> Result<()> {
    let groups = default_groups(&report.featurizers());
    for m in Metric::ALL {
        println!("{:<16} {:>4} {:>5}   ({})", "group", "BM", "MIEB", m.as_str());
        for c in count_best_and_error_band(report, &groups, m, band)? {
            println!("{:<16} {:>4} {:>5}", c.group, c.bm, c.mieb);
        }
    }
    Ok(())
}

fn transfer(args: &TransferArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let out = run_pipeline(&cfg, &args.out).with_context(|| format!("transfer run into {}", args.out.display()))?;
    println!(
        "{} pairs, {} result rows, {} files in {} (config {})",
        out.report.pairs().len(),
        out.report.rows.len(),
        out.files.len(),
        args.out.display(),
        &out.config_hash[..12]
    );
    let groups = cfg.method_groups()?;
    for m in Metric::ALL {
        println!("{:<16} {:>4} {:>5}   ({})", "group", "BM", "MIEB", m.as_str());
        for c in count_best_and_error_band(&out.report, &groups, m, cfg.band)? {
            println!("{:<16} {:>4} {:>5}", c.group, c.bm, c.mieb);
        }
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = match &args.spec {
        Some(p) => CorpusSpec::from_toml(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => CorpusSpec::five_tag(args.per_class),
    };
    let manifest = generate_benchmark(&spec, args.seed, &args.out)?;
    println!(
        "{} records in {} tags written to {}",
        manifest.records.len(),
        spec.tags.len(),
        args.out.display()
    );
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let path = args.dir.join("results.csv");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let hash = text
        .lines()
        .find_map(|l| l.strip_prefix("# config-hash: "))
        .unwrap_or("unknown")
        .to_string();
    let report = TransferReport::from_results_csv(&text)?;
    let band: BandRule = args.band.parse()?;
    if let Some(out) = &args.out {
        let files = write_report(out, &report, &default_groups(&report.featurizers()), band, &hash)?;
        println!("{} files written to {}", files.len(), out.display());
    }
    print_counts(&report, band)
}

fn run(cli: &Cli) -> Result<()> {
    if let Ok(v) = std::env::var("CHATTERKIT_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("CHATTERKIT_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            bail!("CHATTERKIT_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::Featurize(a) => featurize(a),
        Command::Dtw(a) => dtw(a),
        Command::Train(a) => train(a),
        Command::Transfer(a) => transfer(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series file {0} listed in manifest does not exist")]
    MissingFile(PathBuf),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({nyquist_hz} Hz)")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("decimation factor must be positive")]
    ZeroFactor,

    #[error("input is empty or too short (need at least {needed} samples)")]
    EmptyInput { needed: usize },
    #[error("maximum lag {max_lag} must be below series length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("signal too short: need at least {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },
    #[error("unknown wavelet '{0}'")]
    UnknownWavelet(String),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("no records labelled unstable; cannot select an informative packet automatically")]
    NoUnstableRecords,
    #[error("signal is constant")]
    ConstantSignal,

    #[error("warping window of {window} samples cannot bridge a length difference of {len_diff}")]
    InfeasibleWindow { window: usize, len_diff: usize },
    #[error("no warping path satisfies the slope constraint for lengths {len_x} and {len_y}")]
    InfeasibleSlope { len_x: usize, len_y: usize },
    #[error("DTW between '{row}' and '{col}' failed: {source}")]
    PairFailed {
        row: String,
        col: String,
        #[source]
        source: Box<Error>,
    },
    #[error("k = {k} exceeds the {available} available training columns")]
    KTooLarge { k: usize, available: usize },

    #[error("too few points for persistence: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("pixel size must be positive, got {0}")]
    InvalidPixelSize(f64),
    #[error("mesh has duplicate nodes or fewer than two nodes")]
    DegenerateMesh,

    #[error("training set contains a single class")]
    SingleClassTrainingSet,
    #[error("feature width {got} does not match the model's {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature names differ between source and target")]
    FeatureMismatch,

    #[error("need at least two dataset tags, got {0}")]
    TooFewTags(usize),
    #[error("missing {featurizer} features for tag '{tag}'")]
    MissingFeatures { tag: String, featurizer: String },
    #[error("report is missing results for pair {source_tag} -> {target_tag}")]
    IncompleteReport { source_tag: String, target_tag: String },
    #[error("DTW features can only be paired with KNN classifiers, not {0}")]
    DtwRequiresKnn(String),

    #[error("delay {delay_s} s is not resolvable at {fs} Hz (need fs * delay >= 20)")]
    UnresolvableDelay { delay_s: f64, fs: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}

//! C interface to the chatterkit featurizers, DTW, persistence and
//! classifiers.
//!
//! Every fallible call returns a [`CkStatus`]. On failure the message is
//! kept per thread and can be copied out with [`ck_last_error`]. Handles
//! are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use chatterkit::dataset::FeatureMatrix;
use chatterkit::dtw::{dtw_distance, DtwConfig};
use chatterkit::fpa::{fpa_feature_names, fpa_features, FpaParams};
use chatterkit::learn::{train, ClassifierSpec, Model};
use chatterkit::pipeline::{run_pipeline, RunConfig};
use chatterkit::tda::{carlsson_coordinates, rips_persistence_h1, PersistenceDiagram, PointCloud};
use chatterkit::wpt::{reconstruct_packet, wpt_decompose, wpt_feature_names, wpt_feature_vector};
use chatterkit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    /// Input data unusable: too short, constant, single class, mismatched.
    Data = 5,
    /// No warping path satisfies the window or slope constraint.
    Infeasible = 6,
    /// Caller buffer too small; the needed length was written.
    BufferTooSmall = 7,
    Panic = 99,
}

impl From<&Error> for CkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io(_) | Error::MissingFile(_) => CkStatus::Io,
            Error::Parse { .. } | Error::Config(_) => CkStatus::Parse,
            Error::InfeasibleWindow { .. } | Error::InfeasibleSlope { .. } | Error::PairFailed { .. } => {
                CkStatus::Infeasible
            }
            Error::InvalidParameter(_)
            | Error::InvalidCutoff { .. }
            | Error::ZeroFactor
            | Error::UnknownWavelet(_)
            | Error::IndexOutOfRange { .. }
            | Error::KTooLarge { .. }
            | Error::InvalidPixelSize(_)
            | Error::DegenerateMesh
            | Error::DtwRequiresKnn(_) => CkStatus::InvalidArgument,
            _ => CkStatus::Data,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(CkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(CkStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn null(what: &str) -> Failure {
    Failure(CkStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CkStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any error or panic for `ck_last_error`.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> CkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CkStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CkStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> FfiResult<&'a [f64]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn string(p: *const c_char, what: &str) -> FfiResult<String> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copies `values` into `out[..cap]`; `len_out` receives `values.len()`.
unsafe fn copy_out(values: &[f64], out: *mut f64, cap: usize, len_out: *mut usize) -> FfiResult<()> {
    if let Some(l) = len_out.as_mut() {
        *l = values.len();
    }
    if values.len() > cap {
        return Err(Failure(
            CkStatus::BufferTooSmall,
            format!("need {} values, buffer holds {cap}", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ck_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// without the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn ck_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            0
        }
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// DTW distance between two series. `slope_p <= 0` disables the slope
/// constraint.
///
/// # Safety
/// `x` and `y` must hold `nx` and `ny` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_dtw_distance(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    window_fraction: f64,
    slope_p: f64,
    z_normalize: bool,
    out: *mut f64,
) -> CkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let cfg = DtwConfig {
            window_fraction,
            slope_p,
            z_normalize,
            ..DtwConfig::default()
        };
        *out = dtw_distance(slice(x, nx, "x")?, slice(y, ny, "y")?, &cfg)?;
        Ok(())
    })
}

/// Number of values written by [`ck_fpa_features`] for `n_peaks`.
#[no_mangle]
pub extern "C" fn ck_fpa_feature_count(n_peaks: usize) -> usize {
    fpa_feature_names(n_peaks).len()
}

/// Peak-picking features of one signal with default thresholds and
/// `n_peaks` peaks per spectrum.
///
/// # Safety
/// `x` must hold `n` values; `out` must be valid for `cap` values;
/// `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn ck_fpa_features(
    x: *const f64,
    n: usize,
    fs: f64,
    n_peaks: usize,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> CkStatus {
    guard(|| {
        let params = FpaParams {
            n_peaks,
            ..FpaParams::default()
        };
        let v = fpa_features(slice(x, n, "x")?, fs, &params)?;
        copy_out(&v, out, cap, len_out)
    })
}

/// Number of values written by [`ck_wpt_features`].
#[no_mangle]
pub extern "C" fn ck_wpt_feature_count() -> usize {
    wpt_feature_names().len()
}

/// Wavelet packet features of one signal: decompose to `level`,
/// reconstruct packet `packet` (1-based, frequency order) and featurize.
///
/// # Safety
/// `x` must hold `n` values; `wavelet` must be a NUL-terminated name such
/// as "db10"; `out` must be valid for `cap` values; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn ck_wpt_features(
    x: *const f64,
    n: usize,
    fs: f64,
    level: usize,
    packet: usize,
    wavelet: *const c_char,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> CkStatus {
    guard(|| {
        let tree = wpt_decompose(slice(x, n, "x")?, level, &string(wavelet, "wavelet")?)?;
        let rec = reconstruct_packet(&tree, packet)?;
        copy_out(&wpt_feature_vector(&rec, fs)?, out, cap, len_out)
    })
}

/// Opaque H1 persistence diagram.
pub struct CkDiagram(PersistenceDiagram);

/// H1 persistence of a Vietoris-Rips filtration over `n_points` points of
/// dimension `dim`, stored row-major. Clouds larger than `max_points` are
/// subsampled with `seed`; `max_points == 0` keeps every point.
///
/// # Safety
/// `points` must hold `n_points * dim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_persistence_h1(
    points: *const f64,
    n_points: usize,
    dim: usize,
    max_points: usize,
    seed: u64,
    out: *mut *mut CkDiagram,
) -> CkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let total = n_points
            .checked_mul(dim)
            .ok_or_else(|| invalid("point buffer size overflows"))?;
        let data = slice(points, total, "points")?;
        let cloud = PointCloud {
            points: data.chunks(dim).map(<[f64]>::to_vec).collect(),
        };
        let cap = if max_points == 0 { n_points } else { max_points };
        let d = rips_persistence_h1(&cloud, cap, seed)?;
        *out = Box::into_raw(Box::new(CkDiagram(d)));
        Ok(())
    })
}

/// Number of (birth, death) pairs in the diagram; 0 for null.
///
/// # Safety
/// `d` must be a live diagram or null.
#[no_mangle]
pub unsafe extern "C" fn ck_diagram_len(d: *const CkDiagram) -> usize {
    d.as_ref().map_or(0, |d| d.0.pairs.len())
}

/// Writes births and deaths interleaved, `2 * len` values.
///
/// # Safety
/// `d` must be a live diagram; `out` must be valid for `cap` values;
/// `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn ck_diagram_pairs(
    d: *const CkDiagram,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> CkStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("diagram"))?;
        let flat: Vec<f64> = d.0.pairs.iter().flat_map(|&(b, e)| [b, e]).collect();
        copy_out(&flat, out, cap, len_out)
    })
}

/// The five Carlsson coordinates of the diagram.
///
/// # Safety
/// `d` must be a live diagram; `out` must be valid for 5 values.
#[no_mangle]
pub unsafe extern "C" fn ck_diagram_carlsson(d: *const CkDiagram, out: *mut f64) -> CkStatus {
    guard(|| {
        let d = d.as_ref().ok_or_else(|| null("diagram"))?;
        copy_out(&carlsson_coordinates(&d.0), out, 5, ptr::null_mut())
    })
}

/// # Safety
/// `d` must come from `ck_persistence_h1` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_diagram_free(d: *mut CkDiagram) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Opaque labelled feature table.
pub struct CkFeatures(FeatureMatrix);

/// Reads a feature CSV as written by `chatterkit featurize`.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_features_read_csv(path: *const c_char, out: *mut *mut CkFeatures) -> CkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let fm = FeatureMatrix::read_csv(&PathBuf::from(string(path, "path")?))?;
        *out = Box::into_raw(Box::new(CkFeatures(fm)));
        Ok(())
    })
}

/// Builds a table from `rows * cols` row-major values and one label per
/// row (nonzero = chatter).
///
/// # Safety
/// `values` must hold `rows * cols` values, `labels` `rows` bytes; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_features_new(
    values: *const f64,
    rows: usize,
    cols: usize,
    labels: *const u8,
    out: *mut *mut CkFeatures,
) -> CkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        if cols == 0 {
            return Err(invalid("feature width must be positive"));
        }
        let total = rows
            .checked_mul(cols)
            .ok_or_else(|| invalid("feature buffer size overflows"))?;
        let data = slice(values, total, "values")?;
        let labels = if rows == 0 {
            &[][..]
        } else if labels.is_null() {
            return Err(null("labels"));
        } else {
            std::slice::from_raw_parts(labels, rows)
        };
        let fm = FeatureMatrix::new(
            (0..rows).map(|i| format!("r{i}")).collect(),
            (0..cols).map(|j| format!("f{j}")).collect(),
            data.chunks(cols).map(<[f64]>::to_vec).collect(),
            labels.iter().map(|&l| l != 0).collect(),
        )?;
        *out = Box::into_raw(Box::new(CkFeatures(fm)));
        Ok(())
    })
}

/// # Safety
/// `f` must be a live table or null.
#[no_mangle]
pub unsafe extern "C" fn ck_features_rows(f: *const CkFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.0.n_rows())
}

/// # Safety
/// `f` must be a live table or null.
#[no_mangle]
pub unsafe extern "C" fn ck_features_cols(f: *const CkFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.0.n_features())
}

/// Copies row `row` into `out`.
///
/// # Safety
/// `f` must be a live table; `out` must be valid for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn ck_features_row(f: *const CkFeatures, row: usize, out: *mut f64, cap: usize) -> CkStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("features"))?;
        let r =
            f.0.values
                .get(row)
                .ok_or_else(|| invalid(format!("row {row} out of range")))?;
        copy_out(r, out, cap, ptr::null_mut())
    })
}

/// Chatter label of row `row`.
///
/// # Safety
/// `f` must be a live table; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_features_label(f: *const CkFeatures, row: usize, out: *mut bool) -> CkStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("features"))?;
        let out = out_ref(out, "out")?;
        *out =
            *f.0.labels
                .get(row)
                .ok_or_else(|| invalid(format!("row {row} out of range")))?;
        Ok(())
    })
}

/// # Safety
/// `f` must come from a `ck_features_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_features_free(f: *mut CkFeatures) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Opaque trained classifier.
pub struct CkModel(Model);

/// Trains `classifier` ("lr", "svm", "rf", "gb", "mlp" or "knn<k>") on
/// every row of `features`.
///
/// # Safety
/// `classifier` must be NUL-terminated; `features` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_model_train(
    classifier: *const c_char,
    features: *const CkFeatures,
    seed: u64,
    out: *mut *mut CkModel,
) -> CkStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let f = features.as_ref().ok_or_else(|| null("features"))?;
        let spec: ClassifierSpec = string(classifier, "classifier")?.parse()?;
        *out = Box::into_raw(Box::new(CkModel(train(&spec, &f.0, seed)?)));
        Ok(())
    })
}

/// Predicts one feature row; `out` receives true for chatter.
///
/// # Safety
/// `m` must be a live model; `row` must hold `n` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_model_predict(m: *const CkModel, row: *const f64, n: usize, out: *mut bool) -> CkStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        let out = out_ref(out, "out")?;
        let pred = m.0.predict_rows(&[slice(row, n, "row")?.to_vec()])?;
        *out = pred[0];
        Ok(())
    })
}

/// # Safety
/// `m` must come from `ck_model_train` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ck_model_free(m: *mut CkModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Runs a transfer configuration file and writes the report to `out_dir`.
///
/// # Safety
/// Both arguments must be NUL-terminated paths.
#[no_mangle]
pub unsafe extern "C" fn ck_transfer_run(config_path: *const c_char, out_dir: *const c_char) -> CkStatus {
    guard(|| {
        let cfg = RunConfig::load(&PathBuf::from(string(config_path, "config_path")?))?;
        run_pipeline(&cfg, &PathBuf::from(string(out_dir, "out_dir")?))?;
        Ok(())
    })
}

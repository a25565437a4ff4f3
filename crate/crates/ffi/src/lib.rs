//! C interface to the `parc` library.
//!
//! Objects are opaque heap handles released with the matching `*_free`
//! function. Every fallible call returns a [`ParcStatus`]; on failure the
//! message is available from [`parc_last_error_message`] on the same thread
//! until the next failing call. Panics are caught and reported as
//! `PARC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use nalgebra::DMatrix;
use parc::config::RunConfig;
use parc::data::{encode, infer_specs, EncodedDataset, RawTable, DEFAULT_CATEGORICAL_THRESHOLD};
use parc::mip::{build_tracking_milp, export_lp, optimize_tracking, BnbSettings, FeatureBox, MilpStatus};
use parc::parc::{fit, ParcConfig, SeparationMode};
use parc::predictor::{evaluate, predict, region_of};
use parc::ParcError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    /// Bad input data: unknown column or category, missing or non-numeric cell.
    Data = 4,
    Io = 5,
    /// Malformed CSV, JSON, TOML or LP text.
    Parse = 6,
    /// Training could not produce a model.
    Training = 7,
    Numerical = 8,
    /// The optimizer stopped at its node limit; outputs hold the incumbent.
    NodeLimit = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParcSeparation {
    Softmax = 0,
    Voronoi = 1,
}

/// Encoded training data.
pub struct ParcDataset {
    inner: EncodedDataset,
}

/// Training options; starts from the library defaults.
pub struct ParcFitOptions {
    inner: ParcConfig,
}

/// A fitted model.
pub struct ParcModel {
    inner: parc::parc::ParcModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &ParcError) -> ParcStatus {
    match e {
        ParcError::UnknownCategory { .. }
        | ParcError::NonNumeric { .. }
        | ParcError::MissingValue { .. }
        | ParcError::UnknownColumn(_)
        | ParcError::NonFinite(_) => ParcStatus::Data,
        ParcError::InvalidArgument(_) => ParcStatus::InvalidArgument,
        ParcError::Dimension(_) => ParcStatus::Dimension,
        ParcError::TooFewSamples { .. } | ParcError::AllClustersDiscarded => ParcStatus::Training,
        ParcError::Numerical(_) => ParcStatus::Numerical,
        ParcError::Io(_) => ParcStatus::Io,
        ParcError::LpFormat { .. }
        | ParcError::FormatVersion(_)
        | ParcError::Csv(_)
        | ParcError::Json(_)
        | ParcError::Config(_) => ParcStatus::Parse,
    }
}

/// Error raised inside a call: a status plus its message.
struct Failure(ParcStatus, String);

impl From<ParcError> for Failure {
    fn from(e: ParcError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ParcStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<ParcStatus, Failure>) -> ParcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            ParcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ParcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<ParcStatus, Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(ParcStatus::Ok)
}

fn check_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got == want {
        Ok(())
    } else {
        Err(Failure(ParcStatus::Dimension, format!("{what} has length {got}, expected {want}")))
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn parc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn parc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reads a CSV file. `targets` names the target columns; feature and target
/// kinds are inferred as in the command line tool.
///
/// # Safety
/// `path` and each of the `n_targets` entries of `targets` must be valid
/// nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn parc_dataset_from_csv(
    path: *const c_char,
    targets: *const *const c_char,
    n_targets: usize,
    out: *mut *mut ParcDataset,
) -> ParcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let names = slice_arg(targets, n_targets, "targets")?
            .iter()
            .map(|&t| str_arg(t, "target name").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let table = RawTable::read_csv(path)?;
        let (features, target_specs) = infer_specs(&table, &names, DEFAULT_CATEGORICAL_THRESHOLD)?;
        let inner = encode(&table, &features, &target_specs)?;
        put(out, ParcDataset { inner })
    })
}

/// Builds a numeric dataset from row-major arrays: `x` is
/// `n_samples * n_features`, `y` is `n_samples * n_targets`.
///
/// # Safety
/// The arrays must hold the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn parc_dataset_from_arrays(
    x: *const f64,
    y: *const f64,
    n_samples: usize,
    n_features: usize,
    n_targets: usize,
    out: *mut *mut ParcDataset,
) -> ParcStatus {
    guard(|| {
        let xs = slice_arg(x, n_samples * n_features, "x")?;
        let ys = slice_arg(y, n_samples * n_targets, "y")?;
        let inner = EncodedDataset::from_numeric(
            DMatrix::from_row_slice(n_samples, n_features, xs),
            DMatrix::from_row_slice(n_samples, n_targets, ys),
        )?;
        put(out, ParcDataset { inner })
    })
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn parc_dataset_n_samples(ds: *const ParcDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n_samples())
}

/// Number of encoded feature columns, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn parc_dataset_n_features(ds: *const ParcDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n_features())
}

/// # Safety
/// `ds` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn parc_dataset_free(ds: *mut ParcDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// New options with the library defaults.
#[no_mangle]
pub extern "C" fn parc_fit_options_new() -> *mut ParcFitOptions {
    Box::into_raw(Box::new(ParcFitOptions {
        inner: ParcConfig::default(),
    }))
}

/// Options from the `[parc]` table and top-level `seed` of a TOML run
/// configuration.
///
/// # Safety
/// `toml` must be a valid nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_from_toml(toml: *const c_char, out: *mut *mut ParcFitOptions) -> ParcStatus {
    guard(|| {
        let cfg = RunConfig::from_toml(str_arg(toml, "toml")?)?.resolve()?;
        put(out, ParcFitOptions { inner: cfg.parc })
    })
}

/// # Safety
/// `opts` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_free(opts: *mut ParcFitOptions) {
    if !opts.is_null() {
        drop(Box::from_raw(opts));
    }
}

unsafe fn with_options(opts: *mut ParcFitOptions, f: impl FnOnce(&mut ParcConfig)) -> ParcStatus {
    guard(|| {
        let o = opts.as_mut().ok_or_else(|| null("options"))?;
        f(&mut o.inner);
        Ok(ParcStatus::Ok)
    })
}

/// Number of clusters `K`. Values are checked by `parc_fit`.
///
/// # Safety
/// `opts` must be a live options handle.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_set_k(opts: *mut ParcFitOptions, k: usize) -> ParcStatus {
    with_options(opts, |c| c.k = k)
}

/// # Safety
/// `opts` must be a live options handle.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_set_alpha(opts: *mut ParcFitOptions, alpha: f64) -> ParcStatus {
    with_options(opts, |c| c.alpha = alpha)
}

/// # Safety
/// `opts` must be a live options handle.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_set_beta(opts: *mut ParcFitOptions, beta: f64) -> ParcStatus {
    with_options(opts, |c| c.beta = beta)
}

/// # Safety
/// `opts` must be a live options handle.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_set_sigma(opts: *mut ParcFitOptions, sigma: f64) -> ParcStatus {
    with_options(opts, |c| c.sigma = sigma)
}

/// `separation` is a `ParcSeparation` value.
///
/// # Safety
/// `opts` must be a live options handle.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_set_separation(opts: *mut ParcFitOptions, separation: u32) -> ParcStatus {
    guard(|| {
        let o = opts.as_mut().ok_or_else(|| null("options"))?;
        o.inner.separation = match separation {
            s if s == ParcSeparation::Softmax as u32 => SeparationMode::Softmax,
            s if s == ParcSeparation::Voronoi as u32 => SeparationMode::Voronoi,
            s => return Err(Failure(ParcStatus::InvalidArgument, format!("unknown separation {s}"))),
        };
        Ok(ParcStatus::Ok)
    })
}

/// # Safety
/// `opts` must be a live options handle.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_set_seed(opts: *mut ParcFitOptions, seed: u64) -> ParcStatus {
    with_options(opts, |c| c.seed = seed)
}

/// # Safety
/// `opts` must be a live options handle.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_set_max_iters(opts: *mut ParcFitOptions, max_iters: usize) -> ParcStatus {
    with_options(opts, |c| c.max_iters = max_iters)
}

/// # Safety
/// `opts` must be a live options handle.
#[no_mangle]
pub unsafe extern "C" fn parc_fit_options_set_standardize(opts: *mut ParcFitOptions, standardize: bool) -> ParcStatus {
    with_options(opts, |c| c.standardize = standardize)
}

/// Trains a model. `opts` may be null for the defaults.
///
/// # Safety
/// `ds` must be a live dataset, `opts` null or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn parc_fit(
    ds: *const ParcDataset,
    opts: *const ParcFitOptions,
    out: *mut *mut ParcModel,
) -> ParcStatus {
    guard(|| {
        let ds = handle(ds, "dataset")?;
        let default = ParcConfig::default();
        let cfg = opts.as_ref().map_or(&default, |o| &o.inner);
        let (inner, _) = fit(&ds.inner, cfg)?;
        put(out, ParcModel { inner })
    })
}

/// Writes the model as JSON.
///
/// # Safety
/// `model` must be live and `path` a valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn parc_model_save(model: *const ParcModel, path: *const c_char) -> ParcStatus {
    guard(|| {
        let m = handle(model, "model")?;
        m.inner.save(PathBuf::from(str_arg(path, "path")?))?;
        Ok(ParcStatus::Ok)
    })
}

/// # Safety
/// `path` must be a valid nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn parc_model_load(path: *const c_char, out: *mut *mut ParcModel) -> ParcStatus {
    guard(|| {
        let inner = parc::parc::ParcModel::load(str_arg(path, "path")?)?;
        put(out, ParcModel { inner })
    })
}

/// # Safety
/// `model` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn parc_model_free(model: *mut ParcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of regions, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn parc_model_n_regions(model: *const ParcModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_regions())
}

/// Number of encoded features the model expects, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn parc_model_n_features(model: *const ParcModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_features())
}

/// Number of numeric targets, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn parc_model_n_numeric_targets(model: *const ParcModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.layout.numeric)
}

/// Number of categorical targets, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn parc_model_n_categorical_targets(model: *const ParcModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.layout.classes.len())
}

unsafe fn features<'a>(model: *const ParcModel, x: *const f64, n: usize) -> Result<(&'a ParcModel, &'a [f64]), Failure> {
    let m = handle(model, "model")?;
    check_len(n, m.inner.n_features(), "x")?;
    let x = slice_arg(x, n, "x")?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Failure(ParcStatus::Data, "x has non-finite entries".into()));
    }
    Ok((m, x))
}

/// Region (0-based) of the encoded feature vector `x`.
///
/// # Safety
/// `x` must hold `n` doubles and `region` must be writable.
#[no_mangle]
pub unsafe extern "C" fn parc_model_region_of(
    model: *const ParcModel,
    x: *const f64,
    n: usize,
    region: *mut usize,
) -> ParcStatus {
    guard(|| {
        let (m, x) = features(model, x, n)?;
        let out = region.as_mut().ok_or_else(|| null("region"))?;
        *out = region_of(&m.inner, x);
        Ok(ParcStatus::Ok)
    })
}

/// Numeric predictions at `x`, in target units. `out` holds one value per
/// numeric target.
///
/// # Safety
/// `x` must hold `n` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn parc_model_predict_numeric(
    model: *const ParcModel,
    x: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> ParcStatus {
    guard(|| {
        let (m, x) = features(model, x, n)?;
        check_len(out_len, m.inner.layout.numeric, "out")?;
        let out = slice_out(out, out_len, "out")?;
        out.copy_from_slice(&predict(&m.inner, x).numeric);
        Ok(ParcStatus::Ok)
    })
}

/// Category indices (in the order categories were first seen in the
/// training data) predicted at `x`, one per categorical target.
///
/// # Safety
/// `x` must hold `n` doubles and `out` `out_len` entries.
#[no_mangle]
pub unsafe extern "C" fn parc_model_predict_categorical(
    model: *const ParcModel,
    x: *const f64,
    n: usize,
    out: *mut usize,
    out_len: usize,
) -> ParcStatus {
    guard(|| {
        let (m, x) = features(model, x, n)?;
        check_len(out_len, m.inner.layout.classes.len(), "out")?;
        let out = slice_out(out, out_len, "out")?;
        out.copy_from_slice(&predict(&m.inner, x).categorical);
        Ok(ParcStatus::Ok)
    })
}

/// R^2 of every numeric target on `ds` (NaN for a constant target).
///
/// # Safety
/// `model` and `ds` must be live; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn parc_model_r2(
    model: *const ParcModel,
    ds: *const ParcDataset,
    out: *mut f64,
    out_len: usize,
) -> ParcStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let d = handle(ds, "dataset")?;
        check_len(out_len, m.inner.layout.numeric, "out")?;
        let metrics = evaluate(&m.inner, &d.inner)?;
        let out = slice_out(out, out_len, "out")?;
        for (o, r) in out.iter_mut().zip(&metrics.r2) {
            *o = r.unwrap_or(f64::NAN);
        }
        Ok(ParcStatus::Ok)
    })
}

/// Solves `min ||f(x) - y_ref||_inf` over the training box expanded by
/// `box_expand` per side. Writes `x*` (length `n`), the optimal error and
/// the region of `x*`. `node_limit` 0 means the default.
///
/// Returns `PARC_STATUS_NODE_LIMIT` when the search was cut short; the
/// outputs then hold the best point found.
///
/// # Safety
/// `y_ref` must hold `m` doubles, `x_out` `n` doubles; `epsilon` and
/// `region` must be writable.
#[no_mangle]
pub unsafe extern "C" fn parc_optimize_tracking(
    model: *const ParcModel,
    y_ref: *const f64,
    m: usize,
    box_expand: f64,
    gap: f64,
    node_limit: usize,
    x_out: *mut f64,
    n: usize,
    epsilon: *mut f64,
    region: *mut usize,
) -> ParcStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let y_ref = slice_arg(y_ref, m, "y_ref")?;
        check_len(n, model.inner.n_features(), "x_out")?;
        let bx = FeatureBox::from_model(&model.inner, box_expand)?;
        let defaults = BnbSettings::default();
        let settings = BnbSettings {
            gap,
            node_limit: if node_limit == 0 { defaults.node_limit } else { node_limit },
        };
        let r = optimize_tracking(&model.inner, y_ref, &bx, &settings)?;
        let eps = epsilon.as_mut().ok_or_else(|| null("epsilon"))?;
        let reg = region.as_mut().ok_or_else(|| null("region"))?;
        slice_out(x_out, n, "x_out")?.copy_from_slice(&r.x_star);
        *eps = r.epsilon;
        *reg = r.region;
        Ok(match r.solution.status {
            MilpStatus::IterationLimit => ParcStatus::NodeLimit,
            _ => ParcStatus::Ok,
        })
    })
}

/// Tracking MILP in CPLEX LP format as a newly allocated string, released
/// with `parc_string_free`.
///
/// # Safety
/// `y_ref` must hold `m` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn parc_export_lp(
    model: *const ParcModel,
    y_ref: *const f64,
    m: usize,
    box_expand: f64,
    out: *mut *mut c_char,
) -> ParcStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let y_ref = slice_arg(y_ref, m, "y_ref")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let bx = FeatureBox::from_model(&model.inner, box_expand)?;
        let text = export_lp(&build_tracking_milp(&model.inner, y_ref, &bx)?);
        *out = CString::new(text).expect("LP text has no nul").into_raw();
        Ok(ParcStatus::Ok)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn parc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

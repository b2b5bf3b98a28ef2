//! C ABI for the `tsgbm` estimator.
//!
//! Every fallible function returns a [`TsgbmStatus`]; on failure the message
//! is available from [`tsgbm_last_error`] on the same thread. Estimators are
//! opaque handles released with [`tsgbm_estimator_free`]; strings returned by
//! the library are released with [`tsgbm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tsgbm::config::ExperimentConfig;
use tsgbm::pipeline::{train_tsgbm, Estimator};
use tsgbm::simulators::{Mechanism, MechanismKind, MechanismSpec};
use tsgbm::types::ObservationSequence;
use tsgbm::Error;

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsgbmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Config = 4,
    DegenerateFit = 5,
    Training = 6,
    Stage = 7,
    Format = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Trained estimator handle.
pub struct TsgbmEstimator {
    inner: tsgbm::pipeline::TsgbmEstimator,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> TsgbmStatus {
    match err {
        Error::Domain(_) => TsgbmStatus::Domain,
        Error::Config { .. } => TsgbmStatus::Config,
        Error::DegenerateFit { .. } => TsgbmStatus::DegenerateFit,
        Error::Training { .. } => TsgbmStatus::Training,
        Error::Stage { .. } => TsgbmStatus::Stage,
        Error::Format(_) => TsgbmStatus::Format,
        Error::Io(_) => TsgbmStatus::Io,
    }
}

struct Fail(TsgbmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TsgbmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TsgbmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside tsgbm");
            TsgbmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(TsgbmStatus::NullPointer, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TsgbmStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail(TsgbmStatus::NullPointer, format!("`{what}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn check_out<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(TsgbmStatus::NullPointer, format!("`{what}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn handle<'a>(p: *const TsgbmEstimator) -> Result<&'a TsgbmEstimator, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(TsgbmStatus::NullPointer, "estimator handle is null".into()))
}

fn boxed(est: tsgbm::pipeline::TsgbmEstimator) -> *mut TsgbmEstimator {
    Box::into_raw(Box::new(TsgbmEstimator { inner: est }))
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn tsgbm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tsgbm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses an estimator from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_estimator_from_json(
    json: *const c_char,
    out: *mut *mut TsgbmEstimator,
) -> TsgbmStatus {
    guard(|| {
        check_out(out, "out")?;
        let text = str_arg(json, "json")?;
        let est = tsgbm::pipeline::TsgbmEstimator::from_json(text)?;
        *out = boxed(est);
        Ok(())
    })
}

/// Loads an estimator from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_estimator_load(
    path: *const c_char,
    out: *mut *mut TsgbmEstimator,
) -> TsgbmStatus {
    guard(|| {
        check_out(out, "out")?;
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(Error::from)?;
        *out = boxed(tsgbm::pipeline::TsgbmEstimator::from_json(&text)?);
        Ok(())
    })
}

/// Trains an estimator from a config, given as TOML text or a shipped config name.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_estimator_train(
    config: *const c_char,
    out: *mut *mut TsgbmEstimator,
) -> TsgbmStatus {
    guard(|| {
        check_out(out, "out")?;
        let text = str_arg(config, "config")?;
        let cfg = match ExperimentConfig::shipped(text) {
            Ok(cfg) => cfg,
            Err(_) => ExperimentConfig::from_toml(text)?,
        };
        let prior = cfg.prior_spec()?;
        let mut est = train_tsgbm(
            &cfg.mechanism,
            &prior,
            &cfg.compressor,
            cfg.features,
            &cfg.gbm,
            &cfg.loss,
            cfg.train.m_train,
            cfg.master_seed,
        )?;
        est.config_fingerprint = Some(cfg.fingerprint());
        *out = boxed(est);
        Ok(())
    })
}

/// Serialises an estimator to JSON. Release the string with [`tsgbm_string_free`].
///
/// # Safety
/// `est` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_estimator_to_json(
    est: *const TsgbmEstimator,
    out: *mut *mut c_char,
) -> TsgbmStatus {
    guard(|| {
        check_out(out, "out")?;
        let est = handle(est)?;
        let s = CString::new(est.inner.to_json())
            .map_err(|_| Fail(TsgbmStatus::Format, "estimator JSON contains NUL".into()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// Number of parameters the estimator returns, or 0 for a null handle.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_estimator_dims(est: *const TsgbmEstimator) -> usize {
    est.as_ref().map_or(0, |e| e.inner.dims())
}

/// Estimates the parameters from an observation sequence `y[0..n]`, writing
/// `dims` values to `out` (`out_len` must be at least `dims`).
///
/// # Safety
/// `est` must be a live handle; `y` must point to `n` doubles and `out` to `out_len`.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_estimator_estimate(
    est: *const TsgbmEstimator,
    y: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> TsgbmStatus {
    guard(|| {
        let est = handle(est)?;
        let y = slice_arg(y, n, "y")?;
        check_out(out, "out")?;
        let d = est.inner.dims();
        if out_len < d {
            return Err(Fail(
                TsgbmStatus::BufferTooSmall,
                format!("output buffer holds {out_len} values, estimator returns {d}"),
            ));
        }
        let seq = ObservationSequence::new(y.to_vec(), est.inner.mechanism_id.clone())?;
        let theta = est.inner.estimate(&seq)?;
        std::slice::from_raw_parts_mut(out, d).copy_from_slice(&theta);
        Ok(())
    })
}

/// Releases an estimator. Null is ignored.
///
/// # Safety
/// `est` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_estimator_free(est: *mut TsgbmEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Weibull Cramér-Rao bounds for `n` i.i.d. samples.
///
/// # Safety
/// `crlb_eta` and `crlb_gamma` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_weibull_crlb(
    eta: f64,
    gamma: f64,
    n: usize,
    crlb_eta: *mut f64,
    crlb_gamma: *mut f64,
) -> TsgbmStatus {
    guard(|| {
        check_out(crlb_eta, "crlb_eta")?;
        check_out(crlb_gamma, "crlb_gamma")?;
        let (e, g) = tsgbm::crlb::weibull_crlb(eta, gamma, n)?;
        *crlb_eta = e;
        *crlb_gamma = g;
        Ok(())
    })
}

/// Seed of substream `index` for `purpose` under `master`.
///
/// # Safety
/// `purpose` must be a NUL-terminated string; null is treated as "".
#[no_mangle]
pub unsafe extern "C" fn tsgbm_derive_substream_seed(
    master: u64,
    purpose: *const c_char,
    index: u64,
) -> u64 {
    let purpose = if purpose.is_null() {
        ""
    } else {
        CStr::from_ptr(purpose).to_str().unwrap_or("")
    };
    tsgbm::seed::derive_substream_seed(master, purpose, index)
}

/// Simulates `n` observations of `mechanism` ("weibull", "state_space_1p" or
/// "stoch_vol") at `theta[0..d]` into `out[0..n]`, with the default burn-in.
/// `transformed` selects the log-square output of "stoch_vol".
///
/// # Safety
/// `mechanism` must be a NUL-terminated string; `theta` must point to `d`
/// doubles and `out` to `n`.
#[no_mangle]
pub unsafe extern "C" fn tsgbm_simulate(
    mechanism: *const c_char,
    transformed: bool,
    theta: *const f64,
    d: usize,
    seed: u64,
    out: *mut f64,
    n: usize,
) -> TsgbmStatus {
    guard(|| {
        let kind_name = str_arg(mechanism, "mechanism")?;
        let theta = slice_arg(theta, d, "theta")?;
        check_out(out, "out")?;
        let kind = match kind_name {
            "weibull" => MechanismKind::Weibull,
            "state_space_1p" => MechanismKind::StateSpace1p,
            "stoch_vol" => MechanismKind::StochVol,
            other => {
                return Err(Fail(TsgbmStatus::Domain, format!("unknown mechanism `{other}`")));
            }
        };
        let mut spec = MechanismSpec::new(kind, n);
        spec.transformed = transformed;
        spec.validate()?;
        let y = spec.simulate(theta, seed)?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&y.samples);
        Ok(())
    })
}

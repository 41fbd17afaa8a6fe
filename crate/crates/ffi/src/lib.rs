//! C ABI for curveforge.
//!
//! Every function returns a [`CfStatus`]; results are written through out
//! pointers. On failure a message is kept per thread and can be copied out
//! with [`cf_last_error_message`]. Curves and models are opaque handles
//! released with their `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chrono::NaiveDate;
use curveforge::calibration::{calibrate, CalibrationConfig, CrossSection, DatedCurve};
use curveforge::curve::DiscountCurve;
use curveforge::diagnostics::g2pp_dPdT;
use curveforge::estimation::{fit_ml, AlignedPanel, FitConfig};
use curveforge::models::{G2State, ModelKind, ModelParams, ModelState};
use curveforge::montecarlo::{mc_zero_price, SimConfig};
use curveforge::Error;

/// Status code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Ordering = 4,
    Extrapolation = 5,
    NoSolution = 6,
    Conditioning = 7,
    Boundary = 8,
    OptimizationFailed = 9,
    Io = 10,
    Panic = 11,
}

/// Model selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfModelKind {
    Vasicek = 0,
    G2pp = 1,
    HoLee = 2,
    HullWhite = 3,
}

impl From<CfModelKind> for ModelKind {
    fn from(k: CfModelKind) -> Self {
        match k {
            CfModelKind::Vasicek => ModelKind::Vasicek,
            CfModelKind::G2pp => ModelKind::G2pp,
            CfModelKind::HoLee => ModelKind::HoLee,
            CfModelKind::HullWhite => ModelKind::HullWhite,
        }
    }
}

/// Initial discount curve.
pub struct CfCurve(DiscountCurve);

/// Model with its parameters.
pub struct CfModel(ModelParams);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CfStatus {
    match e {
        Error::Ordering(_) => CfStatus::Ordering,
        Error::Extrapolation { .. } => CfStatus::Extrapolation,
        Error::NoSolution(_) => CfStatus::NoSolution,
        Error::Conditioning(_) | Error::SingularInversion(_) => CfStatus::Conditioning,
        Error::Boundary(_) => CfStatus::Boundary,
        Error::OptimizationFailed { .. } => CfStatus::OptimizationFailed,
        Error::Usage(_) | Error::Precondition(_) | Error::Ambiguity(_) | Error::Resolution(_) => {
            CfStatus::InvalidArgument
        }
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Ingestion { .. } => CfStatus::Io,
        _ => CfStatus::Domain,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            CfStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CfStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            CfStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            CfStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn curve_ref<'a>(p: *const CfCurve) -> Option<&'a DiscountCurve> {
    p.as_ref().map(|c| &c.0)
}

fn state_from(kind: ModelKind, t: f64, state: &[f64]) -> Result<ModelState, Fail> {
    match (kind, state) {
        (ModelKind::G2pp, [x, y]) => Ok(ModelState::Factors(G2State::new(*x, *y, t))),
        (ModelKind::G2pp, _) => Err(Fail::Arg("G2++ state is [x, y]".into())),
        (_, [r]) => Ok(ModelState::ShortRate { t, r: *r }),
        _ => Err(Fail::Arg("short-rate state is [r]".into())),
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    V.as_ptr()
}

/// Builds a curve from `n` pillars `(times[i], dfs[i])`.
///
/// # Safety
/// `times` and `dfs` must be valid for `n` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_new(
    times: *const f64,
    dfs: *const f64,
    n: usize,
    flat_extrapolation: bool,
    out_curve: *mut *mut CfCurve,
) -> CfStatus {
    guard(|| {
        let t = slice(times, n, "times")?;
        let d = slice(dfs, n, "dfs")?;
        let slot = out(out_curve, "out_curve")?;
        let pillars: Vec<(f64, f64)> = t.iter().copied().zip(d.iter().copied()).collect();
        let curve = DiscountCurve::new(&pillars)?.with_flat_extrapolation(flat_extrapolation);
        *slot = Box::into_raw(Box::new(CfCurve(curve)));
        Ok(())
    })
}

/// Releases a curve. Null is ignored.
///
/// # Safety
/// `curve` must come from [`cf_curve_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_free(curve: *mut CfCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// `P^M(0,t)`.
///
/// # Safety
/// `curve` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_discount(curve: *const CfCurve, t: f64, out_value: *mut f64) -> CfStatus {
    guard(|| {
        let c = curve_ref(curve).ok_or(Fail::Null("curve"))?;
        *out(out_value, "out_value")? = c.discount(t)?;
        Ok(())
    })
}

/// Instantaneous forward `f^M(0,t)`.
///
/// # Safety
/// `curve` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_curve_forward(curve: *const CfCurve, t: f64, out_value: *mut f64) -> CfStatus {
    guard(|| {
        let c = curve_ref(curve).ok_or(Fail::Null("curve"))?;
        *out(out_value, "out_value")? = c.instantaneous_forward(t)?;
        Ok(())
    })
}

/// Creates a model from its parameters in canonical order:
/// Vasicek (a, b, sigma); G2++ (a, b, sigma, eta, rho); Ho-Lee (sigma);
/// Hull-White (a, sigma).
///
/// # Safety
/// `params` must be valid for `n` reads; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_model_new(
    kind: CfModelKind,
    params: *const f64,
    n: usize,
    out_model: *mut *mut CfModel,
) -> CfStatus {
    guard(|| {
        let p = slice(params, n, "params")?;
        let slot = out(out_model, "out_model")?;
        let kind = ModelKind::from(kind);
        let names = parameter_names(kind);
        if p.len() != names.len() {
            return Err(Fail::Arg(format!("{kind} takes {} parameters, got {}", names.len(), p.len())));
        }
        let m = ModelParams::from_named(kind, |k| names.iter().position(|n| *n == k).map(|i| p[i]))?;
        *slot = Box::into_raw(Box::new(CfModel(m)));
        Ok(())
    })
}

fn parameter_names(kind: ModelKind) -> &'static [&'static str] {
    match kind {
        ModelKind::Vasicek => &["a", "b", "sigma"],
        ModelKind::G2pp => &["a", "b", "sigma", "eta", "rho"],
        ModelKind::HoLee => &["sigma"],
        ModelKind::HullWhite => &["a", "sigma"],
    }
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`cf_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cf_model_free(model: *mut CfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Closed-form zero-coupon price `P(t, maturity)` at `state` (`[r]` or
/// `[x, y]`). `curve` may be null for Vasicek.
///
/// # Safety
/// Handles must be live or null; `state` valid for `n_state` reads.
#[no_mangle]
pub unsafe extern "C" fn cf_model_price(
    model: *const CfModel,
    curve: *const CfCurve,
    t: f64,
    state: *const f64,
    n_state: usize,
    maturity: f64,
    out_price: *mut f64,
) -> CfStatus {
    guard(|| {
        let m = &model.as_ref().ok_or(Fail::Null("model"))?.0;
        let s = state_from(m.kind(), t, slice(state, n_state, "state")?)?;
        *out(out_price, "out_price")? = m.price(curve_ref(curve), &s, maturity)?;
        Ok(())
    })
}

/// Maturity derivative `∂P(t,T)/∂T` of a G2++ model.
///
/// # Safety
/// Handles must be live; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_g2pp_dpdt(
    model: *const CfModel,
    curve: *const CfCurve,
    t: f64,
    x: f64,
    y: f64,
    maturity: f64,
    out_value: *mut f64,
) -> CfStatus {
    guard(|| {
        let ModelParams::G2pp(p) = &model.as_ref().ok_or(Fail::Null("model"))?.0 else {
            return Err(Fail::Arg("model is not G2++".into()));
        };
        let c = curve_ref(curve).ok_or(Fail::Null("curve"))?;
        *out(out_value, "out_value")? = g2pp_dPdT(p, c, &G2State::new(x, y, t), maturity)?;
        Ok(())
    })
}

/// Monte-Carlo estimate of the zero-coupon price with its standard error.
///
/// # Safety
/// As for [`cf_model_price`]; both out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn cf_mc_zero_price(
    model: *const CfModel,
    curve: *const CfCurve,
    t: f64,
    state: *const f64,
    n_state: usize,
    maturity: f64,
    n_paths: usize,
    step: f64,
    seed: u64,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> CfStatus {
    guard(|| {
        let m = &model.as_ref().ok_or(Fail::Null("model"))?.0;
        let s = state_from(m.kind(), t, slice(state, n_state, "state")?)?;
        let value = out(out_value, "out_value")?;
        let stderr = out(out_stderr, "out_stderr")?;
        let config = SimConfig::new(n_paths, step, (maturity - t).max(step), seed)?;
        let est = mc_zero_price(m, curve_ref(curve), &s, maturity, &config)?;
        *value = est.value;
        *stderr = est.stderr;
        Ok(())
    })
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date")
}

/// Least-squares calibration of Ho-Lee (`out_params[0] = sigma`) or
/// Hull-White (`out_params = [a, sigma]`) to `n` quotes `(taus[i],
/// prices[i])` observed `days_after_curve` days after the curve date.
///
/// # Safety
/// Arrays valid for `n` reads; `out_params` valid for 2 writes.
#[no_mangle]
pub unsafe extern "C" fn cf_calibrate(
    kind: CfModelKind,
    curve: *const CfCurve,
    days_after_curve: i64,
    short_rate: f64,
    taus: *const f64,
    prices: *const f64,
    n: usize,
    out_params: *mut f64,
    out_objective: *mut f64,
    out_converged: *mut bool,
) -> CfStatus {
    guard(|| {
        let c = curve_ref(curve).ok_or(Fail::Null("curve"))?;
        let t = slice(taus, n, "taus")?;
        let p = slice(prices, n, "prices")?;
        if out_params.is_null() {
            return Err(Fail::Null("out_params"));
        }
        let objective = out(out_objective, "out_objective")?;
        let converged = out(out_converged, "out_converged")?;
        let asof = epoch() + chrono::Duration::days(days_after_curve);
        let xs = CrossSection {
            asof,
            quotes: t.iter().copied().zip(p.iter().copied()).collect(),
            short_rate,
        };
        let dated = DatedCurve { date: epoch(), curve: c.clone() };
        let r = calibrate(kind.into(), &xs, &dated, &CalibrationConfig::default())?;
        for (i, (_, v)) in r.params.named_values().into_iter().enumerate() {
            *out_params.add(i) = v;
        }
        *objective = r.objective;
        *converged = r.converged;
        Ok(())
    })
}

/// Maximum-likelihood fit of Vasicek (`n_instruments = 1`) or G2++ (`2`).
///
/// `times` holds `n_obs` observation times in years from the curve date,
/// `prices` is row-major `n_obs × n_instruments`, `maturities` has
/// `n_instruments` entries: years from the curve date, or times to maturity
/// when `constant_tenor` is set. `out_params` receives 3 or 5 values.
///
/// # Safety
/// Arrays valid for the stated lengths; `curve` live (G2++) or null.
#[no_mangle]
pub unsafe extern "C" fn cf_fit_ml(
    kind: CfModelKind,
    curve: *const CfCurve,
    times: *const f64,
    prices: *const f64,
    n_obs: usize,
    maturities: *const f64,
    n_instruments: usize,
    constant_tenor: bool,
    restarts: usize,
    seed: u64,
    out_params: *mut f64,
    out_loglik: *mut f64,
    out_converged: *mut bool,
) -> CfStatus {
    guard(|| {
        let ts = slice(times, n_obs, "times")?;
        let ps = slice(prices, n_obs * n_instruments, "prices")?;
        let ms = slice(maturities, n_instruments, "maturities")?;
        if out_params.is_null() {
            return Err(Fail::Null("out_params"));
        }
        let loglik = out(out_loglik, "out_loglik")?;
        let converged = out(out_converged, "out_converged")?;
        let ids = (0..n_instruments).map(|i| format!("I{i}")).collect();
        let dates = ts
            .iter()
            .map(|t| epoch() + chrono::Duration::days((t * 365.0).round() as i64))
            .collect();
        let rows = ps.chunks(n_instruments.max(1)).map(<[f64]>::to_vec).collect();
        let data = if constant_tenor {
            AlignedPanel::constant_tenor(ids, dates, ts.to_vec(), ms, rows)
        } else {
            AlignedPanel { ids, dates, times: ts.to_vec(), maturities: vec![ms.to_vec(); n_obs], prices: rows }
        };
        let config = FitConfig { restarts, seed, ..FitConfig::default() };
        let fit = fit_ml(kind.into(), &data, curve_ref(curve), &config)?;
        for (i, (_, v)) in fit.params.named_values().into_iter().enumerate() {
            *out_params.add(i) = v;
        }
        *loglik = fit.loglik.total;
        *converged = fit.report.converged;
        Ok(())
    })
}

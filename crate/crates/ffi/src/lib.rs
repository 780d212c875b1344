//! C interface to `atf-core`.
//!
//! Parameters live behind an opaque [`AtfParams`] handle. Every function
//! returns an [`AtfStatus`]; on failure [`atf_last_error_message`] describes
//! the most recent error on the calling thread. Panics never cross the
//! boundary. The header is `include/atf.h`, regenerated on every build.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use atf_core::fading::marcum_q;
use atf_core::{
    analyze, derive_link_gains, direct_outage, optimal_et, run_replicated, BatteryGrid, BatteryModel, Config, Error,
    SimConfig, SystemParams,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    SingularSystem = 3,
    Numerical = 4,
    Config = 5,
    BufferTooSmall = 6,
    InvalidUtf8 = 7,
    Panic = 8,
}

/// Opaque parameter set.
pub struct AtfParams {
    inner: SystemParams,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AtfOutageReport {
    pub p_out: f64,
    pub p_e: f64,
    pub p_mode_i: f64,
    pub p_mode_ii: f64,
    pub p_mode_iii: f64,
    pub phi_i: f64,
    pub phi_ii: f64,
    pub phi_iii: f64,
    pub p_direct: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AtfSimResult {
    pub blocks: u64,
    pub outages: u64,
    pub outage_rate: f64,
    pub standard_error: f64,
    pub conditional_outage: f64,
    pub mode_counts: [u64; 3],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AtfOptimalEt {
    /// 1-based battery level of the minimizer.
    pub index: usize,
    pub e_t: f64,
    pub outage: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Utf8(&'static str),
    TooSmall { needed: usize, given: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn status(&self) -> AtfStatus {
        match self {
            Failure::Core(Error::InvalidParameter(_)) => AtfStatus::InvalidParameter,
            Failure::Core(Error::SingularSystem(_)) => AtfStatus::SingularSystem,
            Failure::Core(Error::Numerical(_)) => AtfStatus::Numerical,
            Failure::Core(Error::Config(_)) => AtfStatus::Config,
            Failure::Null(_) => AtfStatus::NullPointer,
            Failure::Utf8(_) => AtfStatus::InvalidUtf8,
            Failure::TooSmall { .. } => AtfStatus::BufferTooSmall,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Null(what) => format!("null pointer: {what}"),
            Failure::Utf8(what) => format!("{what} is not valid UTF-8"),
            Failure::TooSmall { needed, given } => format!("buffer holds {given} values, {needed} needed"),
        }
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> AtfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AtfStatus::Ok,
        Ok(Err(failure)) => {
            set_error(failure.message());
            failure.status()
        }
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown".into());
            set_error(format!("internal panic: {what}"));
            AtfStatus::Panic
        }
    }
}

unsafe fn handle<'a>(h: *const AtfParams) -> Result<&'a SystemParams, Failure> {
    h.as_ref().map(|p| &p.inner).ok_or(Failure::Null("params"))
}

unsafe fn text<'a>(s: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Failure::Utf8(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

/// Paper-default parameters. Release with [`atf_params_free`].
#[no_mangle]
pub extern "C" fn atf_params_new() -> *mut AtfParams {
    Box::into_raw(Box::new(AtfParams { inner: SystemParams::paper_defaults() }))
}

/// # Safety
/// `params` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn atf_params_free(params: *mut AtfParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Reads a `key = value` file into a new handle stored in `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn atf_params_load_config(path: *const c_char, out: *mut *mut AtfParams) -> AtfStatus {
    guard(|| {
        let path = text(path, "path")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let cfg = Config::load(Path::new(path))?;
        cfg.params.validate()?;
        out.write(Box::into_raw(Box::new(AtfParams { inner: cfg.params })));
        Ok(())
    })
}

/// Sets one parameter from its config spelling, e.g. `("P_S", "20dbm")`.
/// Unknown keys and unparsable values give `Config` and leave the handle
/// unchanged. Consistency between keys (such as `E_T <= C`) is checked by the
/// computing calls.
///
/// # Safety
/// `params` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn atf_params_set(params: *mut AtfParams, key: *const c_char, value: *const c_char) -> AtfStatus {
    guard(|| {
        let h = params.as_mut().ok_or(Failure::Null("params"))?;
        let key = text(key, "key")?;
        let value = text(value, "value")?;
        let mut next = h.inner;
        next.set(key, value)?;
        h.inner = next;
        Ok(())
    })
}

/// Reads one parameter in SI units.
///
/// # Safety
/// `params` must be a live handle, `key` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn atf_params_get(params: *const AtfParams, key: *const c_char, out: *mut f64) -> AtfStatus {
    guard(|| {
        let p = handle(params)?;
        let key = text(key, "key")?;
        let v = p.get(key).ok_or_else(|| Failure::Core(Error::InvalidParameter(format!("unknown key `{key}`"))))?;
        write(out, v, "out")
    })
}

/// Closed-form outage with its per-mode breakdown.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn atf_analytic_outage(params: *const AtfParams, out: *mut AtfOutageReport) -> AtfStatus {
    guard(|| {
        let p = handle(params)?;
        let r = analyze(p)?.report;
        write(
            out,
            AtfOutageReport {
                p_out: r.p_out,
                p_e: r.p_e,
                p_mode_i: r.p_mode_i,
                p_mode_ii: r.p_mode_ii,
                p_mode_iii: r.p_mode_iii,
                phi_i: r.phi_i,
                phi_ii: r.phi_ii,
                phi_iii: r.phi_iii,
                p_direct: r.p_direct,
            },
            "out",
        )
    })
}

/// Outage of direct source-destination transmission.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn atf_direct_outage(params: *const AtfParams, out: *mut f64) -> AtfStatus {
    guard(|| {
        let p = handle(params)?;
        let v = direct_outage(p, &derive_link_gains(p)?)?;
        write(out, v, "out")
    })
}

/// Best `E_T` over the battery levels, ignoring the handle's own `E_T`.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn atf_optimal_et(params: *const AtfParams, out: *mut AtfOptimalEt) -> AtfStatus {
    guard(|| {
        let p = handle(params)?;
        let o = optimal_et(p)?;
        write(out, AtfOptimalEt { index: o.index, e_t: o.e_t, outage: o.outage }, "out")
    })
}

/// Monte Carlo run of `replicas` chains with `blocks` blocks each, the first
/// `warmup` discarded. `discrete` nonzero selects the quantized battery.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn atf_simulate(
    params: *const AtfParams,
    blocks: u64,
    warmup: u64,
    seed: u64,
    discrete: i32,
    replicas: u32,
    out: *mut AtfSimResult,
) -> AtfStatus {
    guard(|| {
        let p = handle(params)?;
        let cfg = SimConfig {
            blocks,
            warmup,
            seed,
            stream: 0,
            battery_model: if discrete != 0 { BatteryModel::Discrete } else { BatteryModel::Continuous },
        };
        let r = run_replicated(p, &derive_link_gains(p)?, &BatteryGrid::from_params(p)?, &cfg, replicas)?;
        write(
            out,
            AtfSimResult {
                blocks: r.blocks,
                outages: r.outages,
                outage_rate: r.outage_rate(),
                standard_error: r.standard_error(),
                conditional_outage: r.conditional_outage(),
                mode_counts: r.mode_counts,
            },
            "out",
        )
    })
}

/// Generalized Marcum Q-function `Q_order(a, b)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn atf_marcum_q(order: u32, a: f64, b: f64, out: *mut f64) -> AtfStatus {
    guard(|| {
        let v = marcum_q(order, a, b)?;
        write(out, v, "out")
    })
}

/// Stationary battery distribution, `L + 1` values. `*len_out` always receives
/// the required length; if `capacity` is smaller nothing else is written and
/// the call returns `BufferTooSmall`. `buf` may be null when `capacity` is 0.
///
/// # Safety
/// `buf` must hold `capacity` doubles and `len_out` be writable.
#[no_mangle]
pub unsafe extern "C" fn atf_stationary_distribution(
    params: *const AtfParams,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> AtfStatus {
    guard(|| {
        let p = handle(params)?;
        if len_out.is_null() {
            return Err(Failure::Null("len_out"));
        }
        let a = analyze(p)?;
        let pi = a.stationary.probabilities();
        len_out.write(pi.len());
        if capacity < pi.len() {
            return Err(Failure::TooSmall { needed: pi.len(), given: capacity });
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        ptr::copy_nonoverlapping(pi.as_ptr(), buf, pi.len());
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null after a
/// successful one. Valid until the next call from the same thread.
#[no_mangle]
pub extern "C" fn atf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

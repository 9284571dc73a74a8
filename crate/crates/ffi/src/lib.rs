//! C ABI over `projstruct`.
//!
//! Families and structures cross the boundary as JSON text using the same
//! schema as the command-line configs. Every fallible call returns a
//! [`PsStatus`]; the message of the most recent failure on the calling thread
//! is available through [`ps_last_error`]. Objects are opaque handles that the
//! caller releases with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use projstruct::balls::{ebr_ball_with_m2, ConfidenceBall};
use projstruct::ddm::{structure_posterior, Candidates, DdmPosterior};
use projstruct::oracle::oracle_rate;
use projstruct::selection::{select_penalized, Penalty, SearchMode, Selection};
use projstruct::{Error, Family, Structure};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidInput = 4,
    DimensionMismatch = 5,
    NonFinite = 6,
    InvalidStructure = 7,
    CapExceeded = 8,
    Unsupported = 9,
    ExactUnavailable = 10,
    Constants = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// A family of structures.
pub struct PsFamily(Family);

/// The penalized selection for one observation.
pub struct PsSelection {
    selection: Selection,
    rho: f64,
    estimate: Vec<f64>,
}

/// The data-dependent measure over structures for one observation.
pub struct PsPosterior(DdmPosterior);

/// A confidence ball.
pub struct PsBall(ConfidenceBall);

/// Oracle quantities for a known signal.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PsOracle {
    /// `|theta - P_I theta|^2` at the oracle structure.
    pub approx_sq: f64,
    /// `tau sigma^2 rho(I)` at the oracle structure.
    pub complexity: f64,
    /// `approx_sq + complexity`.
    pub rate_sq: f64,
    /// Majorant of the oracle structure.
    pub rho: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(PsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DimensionMismatch { .. } => PsStatus::DimensionMismatch,
            Error::NonFinite(_) => PsStatus::NonFinite,
            Error::InvalidStructure { .. } => PsStatus::InvalidStructure,
            Error::CapExceeded { .. } => PsStatus::CapExceeded,
            Error::Unsupported { .. } => PsStatus::Unsupported,
            Error::ExactUnavailable { .. } => PsStatus::ExactUnavailable,
            Error::Constants(_) => PsStatus::Constants,
            Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => PsStatus::InvalidInput,
        };
        Fail(code, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(PsStatus::InvalidJson, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(PsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            PsStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            PsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(PsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, out_len: usize) -> Result<(), Fail> {
    if out_len < src.len() {
        return Err(Fail(
            PsStatus::BufferTooSmall,
            format!("output buffer holds {out_len} values, {} needed", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

fn json_string(v: &impl serde::Serialize) -> Result<*mut c_char, Fail> {
    let s = serde_json::to_string(v)?;
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(PsStatus::InvalidInput, "string contains NUL".into()))
}

fn penalty(sigma: f64, kappa: f64, with_dimension: bool) -> Penalty {
    Penalty::new(sigma, kappa).with_dimension(with_dimension)
}

/// Message for the most recent failure on this thread, or null after a
/// successful call. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a family from JSON, e.g. `{"kind":"sparsity","n":10}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_family_from_json(
    json: *const c_char,
    out: *mut *mut PsFamily,
) -> PsStatus {
    guard(|| {
        let family: Family = serde_json::from_str(str_arg(json, "json")?)?;
        family.check()?;
        put(out, Box::into_raw(Box::new(PsFamily(family))), "out")
    })
}

/// # Safety
/// `family` must be null or a handle from [`ps_family_from_json`].
#[no_mangle]
pub unsafe extern "C" fn ps_family_free(family: *mut PsFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Length of the parameter vector.
///
/// # Safety
/// `family` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_family_ambient_dim(
    family: *const PsFamily,
    out: *mut usize,
) -> PsStatus {
    guard(|| {
        let f = ref_arg(family, "family")?;
        put(out, f.0.ambient_dim(), "out")
    })
}

/// Majorant `rho(I)` of a structure given as JSON.
///
/// # Safety
/// `family` must be a live handle, `structure` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_family_majorant(
    family: *const PsFamily,
    structure: *const c_char,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        let f = ref_arg(family, "family")?;
        let s: Structure = serde_json::from_str(str_arg(structure, "structure")?)?;
        put(out, f.0.majorant(&s)?, "out")
    })
}

/// Projection of `y` onto the subspace of a structure given as JSON.
///
/// # Safety
/// `y` must point to `len` values and `out` to `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ps_family_project(
    family: *const PsFamily,
    structure: *const c_char,
    y: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> PsStatus {
    guard(|| {
        let f = ref_arg(family, "family")?;
        let s: Structure = serde_json::from_str(str_arg(structure, "structure")?)?;
        let p = f.0.project(&s, slice_arg(y, len, "y")?)?;
        copy_out(&p, out, out_len)
    })
}

/// Exact minimiser of `|y - P_I y|^2 + sigma^2 (2 kappa rho(I) [+ dim])`.
///
/// # Safety
/// `family` must be a live handle, `y` must point to `len` values and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_select(
    family: *const PsFamily,
    y: *const f64,
    len: usize,
    sigma: f64,
    kappa: f64,
    with_dimension: bool,
    out: *mut *mut PsSelection,
) -> PsStatus {
    guard(|| {
        let f = &ref_arg(family, "family")?.0;
        let y = slice_arg(y, len, "y")?;
        let selection = select_penalized(
            y,
            f,
            &penalty(sigma, kappa, with_dimension),
            SearchMode::Exact,
        )?;
        let rho = f.majorant(&selection.structure)?;
        let estimate = f.project(&selection.structure, y)?;
        let h = PsSelection {
            selection,
            rho,
            estimate,
        };
        put(out, Box::into_raw(Box::new(h)), "out")
    })
}

/// # Safety
/// `selection` must be null or a handle from [`ps_select`].
#[no_mangle]
pub unsafe extern "C" fn ps_selection_free(selection: *mut PsSelection) {
    if !selection.is_null() {
        drop(Box::from_raw(selection));
    }
}

/// Objective value at the selected structure.
///
/// # Safety
/// `selection` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_selection_objective(
    selection: *const PsSelection,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        put(
            out,
            ref_arg(selection, "selection")?.selection.objective,
            "out",
        )
    })
}

/// Majorant of the selected structure.
///
/// # Safety
/// `selection` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_selection_rho(
    selection: *const PsSelection,
    out: *mut f64,
) -> PsStatus {
    guard(|| put(out, ref_arg(selection, "selection")?.rho, "out"))
}

/// Selected structure as JSON; release with [`ps_string_free`].
///
/// # Safety
/// `selection` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_selection_structure_json(
    selection: *const PsSelection,
    out: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        let s = ref_arg(selection, "selection")?;
        put(out, json_string(&s.selection.structure)?, "out")
    })
}

/// Model-selected estimate `P_I y`.
///
/// # Safety
/// `selection` must be a live handle and `out` must point to `out_len`
/// writable values.
#[no_mangle]
pub unsafe extern "C" fn ps_selection_estimate(
    selection: *const PsSelection,
    out: *mut f64,
    out_len: usize,
) -> PsStatus {
    guard(|| copy_out(&ref_arg(selection, "selection")?.estimate, out, out_len))
}

/// Builds the data-dependent measure over every structure of the family.
/// Families other than sparsity are enumerated; `cap` bounds the count
/// (0 selects the library default).
///
/// # Safety
/// `family` must be a live handle, `y` must point to `len` values and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_posterior_new(
    family: *const PsFamily,
    y: *const f64,
    len: usize,
    sigma: f64,
    kappa: f64,
    with_dimension: bool,
    cap: u64,
    out: *mut *mut PsPosterior,
) -> PsStatus {
    guard(|| {
        let f = &ref_arg(family, "family")?.0;
        let y = slice_arg(y, len, "y")?;
        let candidates = if cap == 0 {
            Candidates::default()
        } else {
            Candidates::All { cap: cap as u128 }
        };
        let post = structure_posterior(y, f, &penalty(sigma, kappa, with_dimension), &candidates)?;
        put(out, Box::into_raw(Box::new(PsPosterior(post))), "out")
    })
}

/// # Safety
/// `posterior` must be null or a handle from [`ps_posterior_new`].
#[no_mangle]
pub unsafe extern "C" fn ps_posterior_free(posterior: *mut PsPosterior) {
    if !posterior.is_null() {
        drop(Box::from_raw(posterior));
    }
}

/// Log of the normalising constant.
///
/// # Safety
/// `posterior` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_posterior_log_normalizer(
    posterior: *const PsPosterior,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        put(
            out,
            ref_arg(posterior, "posterior")?.0.log_normalizer(),
            "out",
        )
    })
}

/// Normalised log weight of a structure given as JSON.
///
/// # Safety
/// `posterior` must be a live handle, `structure` a NUL-terminated string
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ps_posterior_log_weight(
    posterior: *const PsPosterior,
    structure: *const c_char,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        let p = ref_arg(posterior, "posterior")?;
        let s: Structure = serde_json::from_str(str_arg(structure, "structure")?)?;
        put(out, p.0.log_weight(&s)?, "out")
    })
}

/// Model-averaged mean.
///
/// # Safety
/// `posterior` must be a live handle and `out` must point to `out_len`
/// writable values.
#[no_mangle]
pub unsafe extern "C" fn ps_posterior_ma_mean(
    posterior: *const PsPosterior,
    out: *mut f64,
    out_len: usize,
) -> PsStatus {
    guard(|| copy_out(&ref_arg(posterior, "posterior")?.0.ma_mean(), out, out_len))
}

/// Projection onto the heaviest structure.
///
/// # Safety
/// `posterior` must be a live handle and `out` must point to `out_len`
/// writable values.
#[no_mangle]
pub unsafe extern "C" fn ps_posterior_ms_mean(
    posterior: *const PsPosterior,
    out: *mut f64,
    out_len: usize,
) -> PsStatus {
    guard(|| copy_out(&ref_arg(posterior, "posterior")?.0.ms_mean(), out, out_len))
}

/// The `k` heaviest structures with their log weights as a JSON array;
/// release with [`ps_string_free`].
///
/// # Safety
/// `posterior` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_posterior_top_k_json(
    posterior: *const PsPosterior,
    k: usize,
    out: *mut *mut c_char,
) -> PsStatus {
    guard(|| {
        let p = ref_arg(posterior, "posterior")?;
        put(out, json_string(&p.0.top_k(k))?, "out")
    })
}

/// Oracle rate `min_I |theta - P_I theta|^2 + tau sigma^2 rho(I)`.
///
/// # Safety
/// `family` must be a live handle, `theta` must point to `len` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_oracle_rate(
    family: *const PsFamily,
    theta: *const f64,
    len: usize,
    sigma: f64,
    tau: f64,
    out: *mut PsOracle,
) -> PsStatus {
    guard(|| {
        let f = &ref_arg(family, "family")?.0;
        let r = oracle_rate(slice_arg(theta, len, "theta")?, f, sigma, tau)?;
        let o = PsOracle {
            approx_sq: r.approx_sq,
            complexity: r.complexity,
            rate_sq: r.rate_sq,
            rho: r.rho,
        };
        put(out, o, "out")
    })
}

/// Ball centred at the selected estimate with squared radius
/// `(t+1) m2 sigma^2 (1 + rho) + (t+2) m sigma^2`.
///
/// # Safety
/// `family` and `selection` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_ball_ebr(
    family: *const PsFamily,
    selection: *const PsSelection,
    sigma: f64,
    m2: f64,
    t: f64,
    m: f64,
    out: *mut *mut PsBall,
) -> PsStatus {
    guard(|| {
        let f = &ref_arg(family, "family")?.0;
        let s = ref_arg(selection, "selection")?;
        let ball = ebr_ball_with_m2(f, sigma, m2, &s.selection.structure, &s.estimate, t, m)?;
        put(out, Box::into_raw(Box::new(PsBall(ball))), "out")
    })
}

/// # Safety
/// `ball` must be null or a handle from [`ps_ball_ebr`].
#[no_mangle]
pub unsafe extern "C" fn ps_ball_free(ball: *mut PsBall) {
    if !ball.is_null() {
        drop(Box::from_raw(ball));
    }
}

/// Squared radius.
///
/// # Safety
/// `ball` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_ball_radius_sq(ball: *const PsBall, out: *mut f64) -> PsStatus {
    guard(|| put(out, ref_arg(ball, "ball")?.0.radius_sq, "out"))
}

/// Whether `theta` lies in the closed ball.
///
/// # Safety
/// `ball` must be a live handle, `theta` must point to `len` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ps_ball_contains(
    ball: *const PsBall,
    theta: *const f64,
    len: usize,
    out: *mut bool,
) -> PsStatus {
    guard(|| {
        let b = ref_arg(ball, "ball")?;
        put(out, b.0.contains(slice_arg(theta, len, "theta")?)?, "out")
    })
}

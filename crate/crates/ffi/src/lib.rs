//! C ABI for `hetclass`.
//!
//! Objects are opaque handles created by `hc_*_new`/`hc_*_from_json` and
//! released by the matching `hc_*_free`. Every fallible call returns an
//! [`HcStatus`]; on failure a message is kept per thread and can be read
//! with [`hc_last_error_message`]. Strings returned through out-pointers
//! are owned by the caller and released with [`hc_string_free`].

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hetclass::cocycle::{
    classify_periodic, eigen_moduli, finite_time_domination, lyapunov_map_of_periodic, volume_hyperbolicity_check,
    DominationVerdict, MatrixWord, PeriodicClass,
};
use hetclass::graph::{
    edge_connectivity, is_eulerian, mechanical_nondomination_indices, strongly_connected, tangency_indices,
    EdgeConnectivity, HeteroclinicGraph, TangencyData,
};
use hetclass::scenario::{canonical_graph_json, parse_scenario, run, ScenarioError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    AnalysisError = 5,
    IoError = 6,
    InvalidArgument = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcVerdict {
    Dominated = 0,
    NotDominated = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcClassKind {
    Sink = 0,
    Source = 1,
    Saddle = 2,
    Neutral = 3,
}

/// Classification of a periodic word; `index` is the stable index of a
/// saddle and 0 otherwise.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HcClass {
    pub kind: HcClassKind,
    pub index: usize,
}

/// Opaque matrix word.
pub struct HcMatrixWord(MatrixWord);

/// Opaque heteroclinic graph.
pub struct HcGraph(HeteroclinicGraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(HcStatus, String);

impl From<hetclass::Error> for Fail {
    fn from(e: hetclass::Error) -> Self {
        Fail(HcStatus::InvalidArgument, e.to_string())
    }
}

impl From<ScenarioError> for Fail {
    fn from(e: ScenarioError) -> Self {
        let status = match e {
            ScenarioError::Parse { .. } => HcStatus::ParseError,
            ScenarioError::Invalid(_) => HcStatus::ValidationError,
            ScenarioError::Io { .. } => HcStatus::IoError,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HcStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating failures and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(HcStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(HcStatus::InvalidArgument, "output contains a nul byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Copy `values` into a caller buffer of `capacity` elements, reporting the
/// needed length through `out_len` in every case.
unsafe fn fill<T: Copy>(values: &[T], out: *mut T, capacity: usize, out_len: *mut usize) -> Result<(), Fail> {
    if out_len.is_null() {
        return Err(null("out_len"));
    }
    *out_len = values.len();
    if values.len() > capacity {
        return Err(Fail(
            HcStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", values.len()),
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

unsafe fn word<'a>(w: *const HcMatrixWord) -> Result<&'a MatrixWord, Fail> {
    w.as_ref().map(|w| &w.0).ok_or_else(|| null("word"))
}

unsafe fn graph<'a>(g: *const HcGraph) -> Result<&'a HeteroclinicGraph, Fail> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null("graph"))
}

/// Message of the latest call on this thread if it failed, or null. Valid
/// until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Create a matrix word of `period` square matrices of size `dim`, given
/// row-major in `data` (`period * dim * dim` values, entry 0 applied first).
///
/// # Safety
/// `data` must point to `period * dim * dim` readable doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_word_new(
    dim: usize,
    period: usize,
    data: *const f64,
    out: *mut *mut HcMatrixWord,
) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if data.is_null() {
            return Err(null("data"));
        }
        if dim == 0 || period == 0 {
            return Err(Fail(HcStatus::InvalidArgument, "dim and period must be positive".into()));
        }
        let n = dim
            .checked_mul(dim)
            .and_then(|x| x.checked_mul(period))
            .ok_or_else(|| Fail(HcStatus::InvalidArgument, "size overflow".into()))?;
        let flat = std::slice::from_raw_parts(data, n);
        let rows: Vec<Vec<Vec<f64>>> = flat
            .chunks(dim * dim)
            .map(|m| m.chunks(dim).map(<[f64]>::to_vec).collect())
            .collect();
        let w = MatrixWord::from_rows(&rows)?;
        *out = Box::into_raw(Box::new(HcMatrixWord(w)));
        Ok(())
    })
}

/// # Safety
/// `w` must be null or a handle from [`hc_word_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_word_free(w: *mut HcMatrixWord) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Dimension of the word, or 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_word_dim(w: *const HcMatrixWord) -> usize {
    w.as_ref().map_or(0, |w| w.0.dim())
}

/// Period of the word, or 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hc_word_period(w: *const HcMatrixWord) -> usize {
    w.as_ref().map_or(0, |w| w.0.period())
}

/// Ascending Lyapunov exponents (`dim` values).
///
/// # Safety
/// `w` must be a live handle; `out` must hold `capacity` doubles and
/// `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_word_exponents(
    w: *const HcMatrixWord,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> HcStatus {
    guard(|| {
        let s = eigen_moduli(word(w)?)?;
        fill(&s.exponents, out, capacity, out_len)
    })
}

/// Lyapunov map values `σ_0 … σ_d` (`dim + 1` values).
///
/// # Safety
/// As for [`hc_word_exponents`].
#[no_mangle]
pub unsafe extern "C" fn hc_word_lyapunov_map(
    w: *const HcMatrixWord,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> HcStatus {
    guard(|| {
        let m = lyapunov_map_of_periodic(word(w)?)?;
        fill(m.values(), out, capacity, out_len)
    })
}

/// Finite-time domination test at `index` over `horizon` steps with rate
/// `rate` (> 1).
///
/// # Safety
/// `w` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_word_domination(
    w: *const HcMatrixWord,
    index: usize,
    horizon: usize,
    rate: f64,
    out_verdict: *mut HcVerdict,
    out_min_log_gap: *mut f64,
) -> HcStatus {
    guard(|| {
        if out_verdict.is_null() || out_min_log_gap.is_null() {
            return Err(null("output"));
        }
        let c = finite_time_domination(word(w)?, index, horizon, rate)?;
        *out_verdict = match c.verdict {
            DominationVerdict::Dominated => HcVerdict::Dominated,
            DominationVerdict::NotDominated => HcVerdict::NotDominated,
            DominationVerdict::Inconclusive => HcVerdict::Inconclusive,
        };
        *out_min_log_gap = c.min_log_gap;
        Ok(())
    })
}

/// Sink/source/saddle classification with modulus tolerance `tol`.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_word_classify(w: *const HcMatrixWord, tol: f64, out: *mut HcClass) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match classify_periodic(word(w)?, tol)? {
            PeriodicClass::Sink => HcClass {
                kind: HcClassKind::Sink,
                index: 0,
            },
            PeriodicClass::Source => HcClass {
                kind: HcClassKind::Source,
                index: 0,
            },
            PeriodicClass::Saddle(i) => HcClass {
                kind: HcClassKind::Saddle,
                index: i,
            },
            PeriodicClass::Neutral => HcClass {
                kind: HcClassKind::Neutral,
                index: 0,
            },
        };
        Ok(())
    })
}

/// Volume hyperbolicity of the splitting with block dimensions
/// `blocks[0..len]`.
///
/// # Safety
/// `w` must be a live handle; `blocks` must hold `len` values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hc_word_volume_hyperbolic(
    w: *const HcMatrixWord,
    blocks: *const usize,
    len: usize,
    rate: f64,
    horizon: usize,
    out: *mut bool,
) -> HcStatus {
    guard(|| {
        if out.is_null() || (blocks.is_null() && len > 0) {
            return Err(null("argument"));
        }
        let split = if len == 0 { &[][..] } else { std::slice::from_raw_parts(blocks, len) };
        *out = volume_hyperbolicity_check(word(w)?, split, rate, horizon)?.volume_hyperbolic;
        Ok(())
    })
}

/// Index set blocked by a bundle tangency in dimension `dim`.
///
/// # Safety
/// `out` must hold `capacity` values and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_tangency_indices(
    dim: usize,
    i_alpha: usize,
    i_omega: usize,
    d_t: usize,
    out: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> HcStatus {
    guard(|| {
        let set = tangency_indices(&TangencyData::new(i_alpha, i_omega, d_t), dim)?;
        fill(&set.into_iter().collect::<Vec<_>>(), out, capacity, out_len)
    })
}

/// Parse a graph from its canonical JSON form.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_from_json(json: *const c_char, out: *mut *mut HcGraph) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let g: HeteroclinicGraph = serde_json::from_str(text).map_err(|e| {
            let status = if e.is_data() { HcStatus::ValidationError } else { HcStatus::ParseError };
            Fail(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(HcGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from [`hc_graph_from_json`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_free(g: *mut HcGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Canonical JSON form of the graph; free with [`hc_string_free`].
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_to_json(g: *const HcGraph, out: *mut *mut c_char) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out_string(out, canonical_graph_json(graph(g)?))
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_is_eulerian(g: *const HcGraph, out: *mut bool) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = is_eulerian(graph(g)?);
        Ok(())
    })
}

/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_strongly_connected(g: *const HcGraph, out: *mut bool) -> HcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = strongly_connected(graph(g)?);
        Ok(())
    })
}

/// Edge connectivity; `out_infinite` is set when fewer than two nodes carry
/// edges, in which case `out_level` is 0.
///
/// # Safety
/// `g` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_edge_connectivity(
    g: *const HcGraph,
    out_infinite: *mut bool,
    out_level: *mut usize,
) -> HcStatus {
    guard(|| {
        if out_infinite.is_null() || out_level.is_null() {
            return Err(null("output"));
        }
        let (inf, level) = match edge_connectivity(graph(g)?) {
            EdgeConnectivity::Infinite => (true, 0),
            EdgeConnectivity::Level(n) => (false, n),
        };
        *out_infinite = inf;
        *out_level = level;
        Ok(())
    })
}

/// Mechanical non-domination indices at `node`.
///
/// # Safety
/// `g` must be a live handle; `node` a nul-terminated string; `out` must
/// hold `capacity` values and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_graph_mechanical_indices(
    g: *const HcGraph,
    node: *const c_char,
    out: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> HcStatus {
    guard(|| {
        let set: BTreeSet<usize> = mechanical_nondomination_indices(graph(g)?, str_arg(node, "node")?)?;
        fill(&set.into_iter().collect::<Vec<_>>(), out, capacity, out_len)
    })
}

/// Validate and run a scenario given as JSON text, returning the report
/// JSON through `out_report` (free with [`hc_string_free`]). The report is
/// also returned when the status is `AnalysisError`.
///
/// # Safety
/// `json` must be a nul-terminated string; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hc_run_scenario(json: *const c_char, out_report: *mut *mut c_char) -> HcStatus {
    guard(|| {
        if out_report.is_null() {
            return Err(null("out_report"));
        }
        *out_report = ptr::null_mut();
        let scenario = parse_scenario(str_arg(json, "json")?)?;
        let out = run(&scenario);
        out_string(out_report, out.report.to_json())?;
        match out.report.results.iter().find(|o| o.error.is_some()) {
            Some(o) => Err(Fail(
                HcStatus::AnalysisError,
                format!("analysis {} ({}) failed: {}", o.index, o.kind, o.error.as_deref().unwrap_or("")),
            )),
            None => Ok(()),
        }
    })
}

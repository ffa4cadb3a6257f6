//! C interface to `corrlife`.
//!
//! Every fallible function returns a [`CorrlifeStatus`]; on failure the
//! message is available from [`corrlife_last_error`] on the same thread.
//! Panels are opaque handles owned by the caller and released with
//! [`corrlife_panel_free`]. Undefined correlations are reported as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use corrlife::corr::{self, CorrelationLevel};
use corrlife::ingest::{align_panel, detect_layout, load_prices, log_returns, AlignPolicy, ReturnPanel};
use corrlife::lifetime::{self, LifetimeParams};
use corrlife::mst;
use corrlife::synth::{self, AsyncTradeSpec, MarketSpec};
use corrlife::{Error, ErrorKind};

/// Result of every fallible call. The first four match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrlifeStatus {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Invariant = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrlifeLevel {
    Strong = 0,
    Weak = 1,
    Negative = 2,
    Undefined = 3,
}

impl From<CorrelationLevel> for CorrlifeLevel {
    fn from(l: CorrelationLevel) -> Self {
        match l {
            CorrelationLevel::Strong => Self::Strong,
            CorrelationLevel::Weak => Self::Weak,
            CorrelationLevel::Negative => Self::Negative,
            CorrelationLevel::Undefined => Self::Undefined,
        }
    }
}

/// Aligned log-return panel.
pub struct CorrlifePanel {
    inner: ReturnPanel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Buffer { needed: usize, got: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Outcome) -> CorrlifeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CorrlifeStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            match e.kind() {
                ErrorKind::Usage => CorrlifeStatus::Usage,
                ErrorKind::Data => CorrlifeStatus::Data,
                ErrorKind::Invariant => CorrlifeStatus::Invariant,
            }
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            CorrlifeStatus::NullPointer
        }
        Ok(Err(Failure::Buffer { needed, got })) => {
            set_error(format!("output buffer holds {got} values, {needed} needed"));
            CorrlifeStatus::BufferTooSmall
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CorrlifeStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, needed: usize, what: &'static str) -> Result<&'a mut [T], Failure> {
    if len < needed {
        return Err(Failure::Buffer { needed, got: len });
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, needed))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn panel_ref<'a>(p: *const CorrlifePanel) -> Result<&'a ReturnPanel, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or(Failure::Null("panel"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Core(Error::InvalidParameter(format!("`{what}` is not valid UTF-8"))))
}

fn params(strong_threshold: f64) -> LifetimeParams {
    LifetimeParams {
        strong_threshold,
        ..LifetimeParams::default()
    }
}

fn rho_or_nan(rho: Option<f64>) -> f64 {
    rho.unwrap_or(f64::NAN)
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn corrlife_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn corrlife_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Pearson correlation of two series of length `len`. A constant series
/// yields NaN with status OK.
///
/// # Safety
/// `x` and `y` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn corrlife_pearson(x: *const f64, y: *const f64, len: usize, out_rho: *mut f64) -> CorrlifeStatus {
    guard(|| {
        let x = input(x, len, "x")?;
        let y = input(y, len, "y")?;
        let out = out_ref(out_rho, "out_rho")?;
        *out = rho_or_nan(corr::pearson(x, y)?);
        Ok(())
    })
}

/// Correlation distance `sqrt(2 (1 - rho))`.
///
/// # Safety
/// `out_distance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrlife_distance(rho: f64, out_distance: *mut f64) -> CorrlifeStatus {
    guard(|| {
        let out = out_ref(out_distance, "out_distance")?;
        *out = corr::distance(rho)?;
        Ok(())
    })
}

/// Level of a coefficient; NaN is UNDEFINED.
#[no_mangle]
pub extern "C" fn corrlife_classify(rho: f64, strong_threshold: f64) -> CorrlifeLevel {
    let rho = if rho.is_nan() { None } else { Some(rho) };
    corr::classify_with(rho, strong_threshold).into()
}

/// Builds a panel from a row-major `n_tickers x len` block of log-returns.
/// `tickers` may be NULL, in which case names `T0`, `T1`, ... are used.
///
/// # Safety
/// `returns` must hold `n_tickers * len` doubles; `tickers`, when not NULL,
/// must hold `n_tickers` NUL-terminated strings; `out_panel` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrlife_panel_from_returns(
    returns: *const f64,
    n_tickers: usize,
    len: usize,
    tickers: *const *const c_char,
    out_panel: *mut *mut CorrlifePanel,
) -> CorrlifeStatus {
    guard(|| {
        let out = out_ref(out_panel, "out_panel")?;
        let total = n_tickers
            .checked_mul(len)
            .ok_or_else(|| Error::InvalidParameter("panel size overflows".into()))?;
        let data = input(returns, total, "returns")?;
        let names: Vec<String> = if tickers.is_null() {
            (0..n_tickers).map(|k| format!("T{k}")).collect()
        } else {
            input(tickers, n_tickers, "tickers")?
                .iter()
                .map(|&p| c_str(p, "tickers").map(str::to_owned))
                .collect::<Result<_, _>>()?
        };
        let rows = if len == 0 {
            vec![Vec::new(); n_tickers]
        } else {
            data.chunks(len).map(<[f64]>::to_vec).collect()
        };
        let inner = ReturnPanel::from_rows(names, rows)?;
        *out = Box::into_raw(Box::new(CorrlifePanel { inner }));
        Ok(())
    })
}

/// Loads prices from a long-format CSV or a directory of per-ticker CSVs,
/// aligns them with `align` (`"intersect"` or `"ffill:N"`; NULL means
/// intersect) and converts to log-returns.
///
/// # Safety
/// `path` and `align` must be NUL-terminated strings (or NULL for `align`);
/// `out_panel` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrlife_panel_load(
    path: *const c_char,
    align: *const c_char,
    out_panel: *mut *mut CorrlifePanel,
) -> CorrlifeStatus {
    guard(|| {
        let out = out_ref(out_panel, "out_panel")?;
        let path = Path::new(c_str(path, "path")?);
        let policy: AlignPolicy = if align.is_null() {
            AlignPolicy::Intersect
        } else {
            c_str(align, "align")?.parse()?
        };
        let series = load_prices(path, detect_layout(path))?;
        let inner = log_returns(&align_panel(&series, policy)?)?;
        *out = Box::into_raw(Box::new(CorrlifePanel { inner }));
        Ok(())
    })
}

/// Synthetic market: `n_tickers` series with pairwise correlation `rho`,
/// daily volatility `volatility` and `length` price days (so `length - 1`
/// returns), fully determined by `seed`.
///
/// # Safety
/// `out_panel` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrlife_panel_synthetic(
    n_tickers: usize,
    rho: f64,
    volatility: f64,
    length: usize,
    seed: u64,
    out_panel: *mut *mut CorrlifePanel,
) -> CorrlifeStatus {
    guard(|| {
        let out = out_ref(out_panel, "out_panel")?;
        let spec = MarketSpec::uniform(MarketSpec::numbered_tickers(n_tickers), rho, volatility, length, seed);
        let inner = synth::generate_panel(&spec)?.returns;
        *out = Box::into_raw(Box::new(CorrlifePanel { inner }));
        Ok(())
    })
}

/// Releases a panel. NULL is ignored.
///
/// # Safety
/// `panel` must come from one of the constructors and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn corrlife_panel_free(panel: *mut CorrlifePanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Number of tickers, or 0 for NULL.
///
/// # Safety
/// `panel` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn corrlife_panel_tickers(panel: *const CorrlifePanel) -> usize {
    panel.as_ref().map_or(0, |p| p.inner.n_tickers())
}

/// Number of return observations, or 0 for NULL.
///
/// # Safety
/// `panel` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn corrlife_panel_len(panel: *const CorrlifePanel) -> usize {
    panel.as_ref().map_or(0, |p| p.inner.len())
}

/// Full-period correlation matrix, row-major into `out` (`n * n` values).
///
/// # Safety
/// `panel` must be a live handle; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn corrlife_correlation_matrix(
    panel: *const CorrlifePanel,
    out: *mut f64,
    out_len: usize,
) -> CorrlifeStatus {
    guard(|| {
        let panel = panel_ref(panel)?;
        let n = panel.n_tickers();
        let out = output(out, out_len, n * n, "out")?;
        let matrix = corr::full_period_matrix(panel)?;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = rho_or_nan(matrix.get(i, j));
            }
        }
        Ok(())
    })
}

/// Mean strong-correlation lifetime of pair `(i, j)` for each of the
/// `n_widths` window widths (step 1), in trading days.
///
/// # Safety
/// `panel` must be a live handle; `widths` must hold `n_widths` values and
/// `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn corrlife_mltc_curve(
    panel: *const CorrlifePanel,
    i: usize,
    j: usize,
    widths: *const usize,
    n_widths: usize,
    strong_threshold: f64,
    out: *mut f64,
    out_len: usize,
) -> CorrlifeStatus {
    guard(|| {
        let panel = panel_ref(panel)?;
        let widths = input(widths, n_widths, "widths")?;
        let out = output(out, out_len, n_widths, "out")?;
        let curve = lifetime::mltc_curve(panel, (i, j), widths, &params(strong_threshold))?;
        for (slot, (_, m)) in out.iter_mut().zip(curve) {
            *slot = m;
        }
        Ok(())
    })
}

/// Mean and population standard deviation of the per-pair mean lifetimes
/// across all pairs at one window width.
///
/// # Safety
/// `panel` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrlife_portfolio_mltc(
    panel: *const CorrlifePanel,
    width: usize,
    strong_threshold: f64,
    out_mean: *mut f64,
    out_stddev: *mut f64,
) -> CorrlifeStatus {
    guard(|| {
        let panel = panel_ref(panel)?;
        let mean = out_ref(out_mean, "out_mean")?;
        let stddev = out_ref(out_stddev, "out_stddev")?;
        let p = lifetime::portfolio_mltc(panel, width, &params(strong_threshold))?;
        *mean = p.mean;
        *stddev = p.stddev;
        Ok(())
    })
}

/// Half-life, in trading days, of edges in the rolling minimum spanning
/// trees. `out_found` is set to 0 when the survival ratio never falls to 1/2.
///
/// # Safety
/// `panel` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrlife_tree_half_life(
    panel: *const CorrlifePanel,
    width: usize,
    step: usize,
    out_half_life: *mut usize,
    out_found: *mut i32,
) -> CorrlifeStatus {
    guard(|| {
        let panel = panel_ref(panel)?;
        let half_life = out_ref(out_half_life, "out_half_life")?;
        let found = out_ref(out_found, "out_found")?;
        let window = corr::WindowSpec::new(width, step)?;
        let trees = mst::rolling_msts(panel, window)?;
        let curve = mst::survival_curve(&trees.trees, window)?;
        *found = curve.half_life.is_some() as i32;
        *half_life = curve.half_life.unwrap_or(0);
        Ok(())
    })
}

/// Measured correlation of two asynchronously traded stocks with true
/// correlation `rho`, for each sampling interval in minutes (390-minute days).
/// Intervals with too few samples give NaN.
///
/// # Safety
/// `intervals` must hold `n_intervals` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn corrlife_epps(
    rho: f64,
    trade_intensity: f64,
    intervals: *const f64,
    n_intervals: usize,
    horizon_days: f64,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> CorrlifeStatus {
    guard(|| {
        let intervals = input(intervals, n_intervals, "intervals")?;
        let out = output(out, out_len, n_intervals, "out")?;
        let spec = AsyncTradeSpec {
            true_correlation: rho,
            trade_intensity,
            sampling_intervals: intervals.to_vec(),
            horizon_days,
            seed,
            ..AsyncTradeSpec::default()
        };
        let points = synth::epps_experiment(&spec)?;
        for (slot, p) in out.iter_mut().zip(points) {
            *slot = rho_or_nan(p.measured);
        }
        Ok(())
    })
}

//! Pearson correlation of return series, full-period and rolling, with the
//! correlation-distance metric and the strong / weak / negative level scheme.

use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::ReturnPanel;

/// A correlation coefficient, `None` when it cannot be computed because one
/// of the inputs has zero variance.
pub type Rho = Option<f64>;

/// Round-off allowance before a coefficient outside `[-1, 1]` is an error.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Lower bound of the strong level.
pub const DEFAULT_STRONG_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CorrelationLevel {
    /// `rho` in `[threshold, 1]`.
    Strong,
    /// `rho` in `[0, threshold)`.
    Weak,
    /// `rho` in `[-1, 0)`.
    Negative,
    Undefined,
}

impl CorrelationLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationLevel::Strong => "STRONG",
            CorrelationLevel::Weak => "WEAK",
            CorrelationLevel::Negative => "NEGATIVE",
            CorrelationLevel::Undefined => "UNDEFINED",
        }
    }
}

impl fmt::Display for CorrelationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies with the default strong threshold of 1/2.
pub fn classify(rho: Rho) -> CorrelationLevel {
    classify_with(rho, DEFAULT_STRONG_THRESHOLD)
}

/// Both boundaries are closed on the left: `rho == threshold` is strong and
/// `rho == 0` is weak.
pub fn classify_with(rho: Rho, strong_threshold: f64) -> CorrelationLevel {
    match rho {
        None => CorrelationLevel::Undefined,
        Some(r) if r.is_nan() => CorrelationLevel::Undefined,
        Some(r) if r >= strong_threshold => CorrelationLevel::Strong,
        Some(r) if r >= 0.0 => CorrelationLevel::Weak,
        Some(_) => CorrelationLevel::Negative,
    }
}

/// Correlation distance `sqrt(2 (1 - rho))`, in `[0, 2]`.
pub fn distance(rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("correlation {rho} outside [-1, 1]")));
    }
    Ok((2.0 * (1.0 - rho)).sqrt())
}

/// Pearson coefficient over the common length of `x` and `y`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Rho> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: x.len(),
        });
    }
    pearson_unchecked(x, y)
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

// Centered two-pass evaluation; equal to the raw-moment form in exact arithmetic.
fn pearson_unchecked(x: &[f64], y: &[f64]) -> Result<Rho> {
    if is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let denom = (sxx * syy).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return Ok(None);
    }
    clamp(sxy / denom).map(Some)
}

fn clamp(r: f64) -> Result<f64> {
    if r.is_nan() || r.abs() > 1.0 + CLAMP_TOLERANCE {
        return Err(Error::Invariant(format!("correlation {r} outside [-1, 1]")));
    }
    Ok(r.clamp(-1.0, 1.0))
}

/// Symmetric matrix of pairwise coefficients with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub tickers: Vec<String>,
    rho: Vec<Vec<Rho>>,
}

/// Counts of pairs per level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    pub strong: usize,
    pub weak: usize,
    pub negative: usize,
    pub undefined: usize,
}

impl Census {
    pub fn total(&self) -> usize {
        self.strong + self.weak + self.negative + self.undefined
    }
}

impl fmt::Display for Census {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "strong={} weak={} negative={} undefined={}",
            self.strong, self.weak, self.negative, self.undefined
        )
    }
}

/// One row of the flat pair export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub ticker_i: String,
    pub ticker_j: String,
    pub rho: Rho,
    pub level: CorrelationLevel,
}

pub(crate) fn fmt_rho(rho: Rho) -> String {
    rho.map_or_else(|| "NA".to_string(), |r| r.to_string())
}

impl CorrelationMatrix {
    /// Validates symmetry, the unit diagonal and the `[-1, 1]` range
    /// (clamping round-off up to [`CLAMP_TOLERANCE`]).
    pub fn new(tickers: Vec<String>, mut rho: Vec<Vec<Rho>>) -> Result<Self> {
        let n = tickers.len();
        if rho.len() != n || rho.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(format!("correlation matrix must be {n}x{n}")));
        }
        for i in 0..n {
            if rho[i][i] != Some(1.0) {
                return Err(Error::InvalidParameter(format!("diagonal entry {i} is not 1")));
            }
            for j in i + 1..n {
                match (rho[i][j], rho[j][i]) {
                    (Some(a), Some(b)) if a == b => {
                        let r = Some(clamp(a)?);
                        rho[i][j] = r;
                        rho[j][i] = r;
                    }
                    (None, None) => {}
                    _ => return Err(Error::InvalidParameter(format!("matrix not symmetric at ({i}, {j})"))),
                }
            }
        }
        Ok(Self { tickers, rho })
    }

    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Rho {
        self.rho[i][j]
    }

    /// The `n(n-1)/2` off-diagonal entries with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, Rho)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, self.rho[i][j])))
    }

    pub fn undefined_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs().filter(|p| p.2.is_none()).map(|(i, j, _)| (i, j)).collect()
    }

    pub fn census(&self, strong_threshold: f64) -> Census {
        let mut c = Census::default();
        for (_, _, rho) in self.pairs() {
            match classify_with(rho, strong_threshold) {
                CorrelationLevel::Strong => c.strong += 1,
                CorrelationLevel::Weak => c.weak += 1,
                CorrelationLevel::Negative => c.negative += 1,
                CorrelationLevel::Undefined => c.undefined += 1,
            }
        }
        c
    }

    pub fn pair_records(&self, strong_threshold: f64) -> Vec<PairRecord> {
        self.pairs()
            .map(|(i, j, rho)| PairRecord {
                ticker_i: self.tickers[i].clone(),
                ticker_j: self.tickers[j].clone(),
                rho,
                level: classify_with(rho, strong_threshold),
            })
            .collect()
    }

    /// Square CSV with a header row; undefined entries are written as `NA`.
    pub fn write_square_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["ticker".to_string()];
        header.extend(self.tickers.iter().cloned());
        w.write_record(&header)?;
        for (i, t) in self.tickers.iter().enumerate() {
            let mut row = vec![t.clone()];
            row.extend(self.rho[i].iter().map(|r| fmt_rho(*r)));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Flat `ticker_i,ticker_j,rho,level` list.
    pub fn write_pairs_csv<W: Write>(&self, out: W, strong_threshold: f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ticker_i", "ticker_j", "rho", "level"])?;
        for rec in self.pair_records(strong_threshold) {
            w.write_record([rec.ticker_i, rec.ticker_j, fmt_rho(rec.rho), rec.level.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Square matrix with `null` for undefined entries.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "tickers": self.tickers, "rho": self.rho })
    }
}

fn matrix_from_rows(tickers: Vec<String>, rows: &[&[f64]]) -> Result<CorrelationMatrix> {
    let n = rows.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| pearson_unchecked(rows[i], rows[j]))
        .collect::<Result<Vec<_>>>()?;
    let mut rho = vec![vec![None; n]; n];
    for (i, row) in rho.iter_mut().enumerate() {
        row[i] = Some(1.0);
    }
    for (&(i, j), v) in pairs.iter().zip(values) {
        rho[i][j] = v;
        rho[j][i] = v;
    }
    Ok(CorrelationMatrix { tickers, rho })
}

/// Correlation matrix over every day of the panel. Pairs involving a
/// zero-variance series are left undefined and are listed by
/// [`CorrelationMatrix::undefined_pairs`].
pub fn full_period_matrix(panel: &ReturnPanel) -> Result<CorrelationMatrix> {
    if panel.n_tickers() < 2 {
        return Err(Error::TooFewSeries(panel.n_tickers()));
    }
    if panel.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: panel.len(),
        });
    }
    let rows: Vec<&[f64]> = panel.returns.iter().map(Vec::as_slice).collect();
    matrix_from_rows(panel.tickers.clone(), &rows)
}

/// Moving-window geometry: `width` returns per window, windows advancing by
/// `step` returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowSpec {
    pub width: usize,
    pub step: usize,
}

impl WindowSpec {
    pub fn new(width: usize, step: usize) -> Result<Self> {
        if width < 2 {
            return Err(Error::InvalidParameter(format!("window width {width} < 2")));
        }
        if step < 1 {
            return Err(Error::InvalidParameter("step must be at least 1".into()));
        }
        Ok(Self { width, step })
    }

    /// `floor((len - width) / step) + 1`.
    pub fn count(&self, len: usize) -> Result<usize> {
        if self.width > len {
            return Err(Error::WindowTooWide {
                width: self.width,
                available: len,
            });
        }
        Ok((len - self.width) / self.step + 1)
    }

    /// Index range of window `k`.
    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        let start = k * self.step;
        start..start + self.width
    }
}

/// One moving-window estimate, dated at the last return inside the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RollingPoint {
    pub window_end: NaiveDate,
    pub rho: Rho,
    pub level: CorrelationLevel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingCorrelationSeries {
    pub pair: (String, String),
    pub window: WindowSpec,
    pub points: Vec<RollingPoint>,
}

impl RollingCorrelationSeries {
    pub fn window_width(&self) -> usize {
        self.window.width
    }

    pub fn step(&self) -> usize {
        self.window.step
    }

    pub fn levels(&self) -> impl Iterator<Item = CorrelationLevel> + '_ {
        self.points.iter().map(|p| p.level)
    }
}

/// Moving-window correlation of tickers `i` and `j`.
pub fn rolling_correlation(
    panel: &ReturnPanel,
    pair: (usize, usize),
    window: WindowSpec,
    strong_threshold: f64,
) -> Result<RollingCorrelationSeries> {
    let (i, j) = pair;
    for k in [i, j] {
        if k >= panel.n_tickers() {
            return Err(Error::UnknownTicker(format!("#{k}")));
        }
    }
    let window = WindowSpec::new(window.width, window.step)?;
    let count = window.count(panel.len())?;
    let (x, y) = (panel.row(i), panel.row(j));
    let points = (0..count)
        .map(|k| {
            let r = window.range(k);
            let end = r.end - 1;
            let rho = pearson_unchecked(&x[r.clone()], &y[r])?;
            Ok(RollingPoint {
                window_end: panel.calendar[end],
                rho,
                level: classify_with(rho, strong_threshold),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RollingCorrelationSeries {
        pair: (panel.tickers[i].clone(), panel.tickers[j].clone()),
        window,
        points,
    })
}

/// [`rolling_correlation`] addressed by ticker symbol.
pub fn rolling_correlation_by_name(
    panel: &ReturnPanel,
    a: &str,
    b: &str,
    window: WindowSpec,
    strong_threshold: f64,
) -> Result<RollingCorrelationSeries> {
    let pair = (panel.index_of(a)?, panel.index_of(b)?);
    rolling_correlation(panel, pair, window, strong_threshold)
}

/// Correlation matrix of every window position; `(window_end, matrix)`.
pub fn rolling_matrices(panel: &ReturnPanel, window: WindowSpec) -> Result<Vec<(NaiveDate, CorrelationMatrix)>> {
    let window = WindowSpec::new(window.width, window.step)?;
    let count = window.count(panel.len())?;
    (0..count)
        .into_par_iter()
        .map(|k| {
            let r = window.range(k);
            let rows: Vec<&[f64]> = panel.returns.iter().map(|row| &row[r.clone()]).collect();
            let m = matrix_from_rows(panel.tickers.clone(), &rows)?;
            Ok((panel.calendar[r.end - 1], m))
        })
        .collect()
}

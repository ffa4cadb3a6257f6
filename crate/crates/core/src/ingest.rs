//! Price ingestion, calendar alignment and log-returns.
//!
//! Two CSV layouts are understood, both UTF-8 with a header row, comma
//! separated, `.` as the decimal point and ISO-8601 (`YYYY-MM-DD`) dates:
//!
//! * long format, one file: `date,ticker,close`
//! * per-ticker format, one file per ticker in a directory: `date,close`,
//!   with the ticker taken from the file stem (`AAA.csv` -> `AAA`).

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::Deserialize;

use crate::error::{Error, Result};

/// Closing prices of one ticker, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub ticker: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    /// Builds a series, sorting by date and checking the invariants.
    pub fn new(ticker: impl Into<String>, mut observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let ticker = ticker.into();
        observations.sort_by_key(|(d, _)| *d);
        for w in observations.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateDate {
                    file: PathBuf::new(),
                    line: 0,
                    ticker,
                    date: w[0].0,
                });
            }
        }
        if let Some(&(_, close)) = observations.iter().find(|(_, c)| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::NonPositivePrice {
                file: PathBuf::new(),
                line: 0,
                ticker,
                close,
            });
        }
        Ok(Self {
            ticker,
            observations,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.observations.iter().map(|(d, _)| *d)
    }
}

/// Rectangular tickers x trading-days matrix of closing prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub tickers: Vec<String>,
    pub calendar: Vec<NaiveDate>,
    /// One row per ticker, one column per calendar date.
    pub closes: Vec<Vec<f64>>,
}

impl PricePanel {
    pub fn new(tickers: Vec<String>, calendar: Vec<NaiveDate>, closes: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.len() != closes.len() {
            return Err(Error::LengthMismatch(tickers.len(), closes.len()));
        }
        check_calendar(&calendar)?;
        for (ticker, row) in tickers.iter().zip(&closes) {
            if row.len() != calendar.len() {
                return Err(Error::LengthMismatch(row.len(), calendar.len()));
            }
            if let Some(&close) = row.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
                return Err(Error::NonPositivePrice {
                    file: PathBuf::new(),
                    line: 0,
                    ticker: ticker.clone(),
                    close,
                });
            }
        }
        Ok(Self {
            tickers,
            calendar,
            closes,
        })
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    /// Keeps only the dates inside `[from, to]` (either bound optional).
    pub fn restrict(&self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> PricePanel {
        let keep: Vec<usize> = self
            .calendar
            .iter()
            .enumerate()
            .filter(|(_, d)| from.is_none_or(|f| **d >= f) && to.is_none_or(|t| **d <= t))
            .map(|(i, _)| i)
            .collect();
        PricePanel {
            tickers: self.tickers.clone(),
            calendar: keep.iter().map(|&i| self.calendar[i]).collect(),
            closes: self
                .closes
                .iter()
                .map(|row| keep.iter().map(|&i| row[i]).collect())
                .collect(),
        }
    }

    /// Projects the panel back onto one ticker.
    pub fn series(&self, index: usize) -> PriceSeries {
        PriceSeries {
            ticker: self.tickers[index].clone(),
            observations: self
                .calendar
                .iter()
                .copied()
                .zip(self.closes[index].iter().copied())
                .collect(),
        }
    }

    /// Writes the panel in long format (`date,ticker,close`), date-major.
    pub fn write_long_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "ticker", "close"])?;
        for (t, date) in self.calendar.iter().enumerate() {
            let date = date.format("%Y-%m-%d").to_string();
            for (ticker, row) in self.tickers.iter().zip(&self.closes) {
                w.write_record([date.as_str(), ticker.as_str(), row[t].to_string().as_str()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Log-returns of a [`PricePanel`]; the return at column `t` is dated at
/// `calendar[t]`, the later of the two prices it spans.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub tickers: Vec<String>,
    pub calendar: Vec<NaiveDate>,
    pub returns: Vec<Vec<f64>>,
}

impl ReturnPanel {
    pub fn new(tickers: Vec<String>, calendar: Vec<NaiveDate>, returns: Vec<Vec<f64>>) -> Result<Self> {
        if tickers.len() != returns.len() {
            return Err(Error::LengthMismatch(tickers.len(), returns.len()));
        }
        check_calendar(&calendar)?;
        for row in &returns {
            if row.len() != calendar.len() {
                return Err(Error::LengthMismatch(row.len(), calendar.len()));
            }
            if row.iter().any(|r| !r.is_finite()) {
                return Err(Error::InvalidParameter("non-finite return".into()));
            }
        }
        let mut seen = BTreeSet::new();
        for t in &tickers {
            if !seen.insert(t) {
                return Err(Error::InvalidParameter(format!("duplicate ticker {t}")));
            }
        }
        Ok(Self {
            tickers,
            calendar,
            returns,
        })
    }

    /// Panel dated on consecutive business days starting 2000-01-03.
    pub fn from_rows(tickers: Vec<String>, returns: Vec<Vec<f64>>) -> Result<Self> {
        let len = returns.first().map_or(0, Vec::len);
        Self::new(tickers, business_days(default_start_date(), len), returns)
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    /// Number of return observations per ticker.
    pub fn len(&self) -> usize {
        self.calendar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calendar.is_empty()
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.returns[index]
    }

    pub fn index_of(&self, ticker: &str) -> Result<usize> {
        self.tickers
            .iter()
            .position(|t| t == ticker)
            .ok_or_else(|| Error::UnknownTicker(ticker.to_string()))
    }

    /// All unordered pairs `(i, j)` with `i < j`, in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_tickers();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }
}

fn check_calendar(calendar: &[NaiveDate]) -> Result<()> {
    if calendar.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invariant("calendar is not strictly increasing".into()));
    }
    Ok(())
}

/// Input file layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvLayout {
    /// One file with `date,ticker,close` rows.
    Long,
    /// A directory of `<TICKER>.csv` files with `date,close` rows.
    PerTicker,
}

#[derive(Deserialize)]
struct LongRow {
    date: String,
    ticker: String,
    close: String,
}

#[derive(Deserialize)]
struct TickerRow {
    date: String,
    close: String,
}

/// Loads every ticker found at `source`, one [`PriceSeries`] per ticker,
/// ordered by ticker symbol.
pub fn load_prices(source: &Path, layout: CsvLayout) -> Result<Vec<PriceSeries>> {
    let series = match layout {
        CsvLayout::Long => load_long(source)?,
        CsvLayout::PerTicker => load_directory(source)?,
    };
    if series.is_empty() {
        return Err(Error::NoData(source.to_path_buf()));
    }
    Ok(series)
}

/// Picks [`CsvLayout::PerTicker`] for directories and [`CsvLayout::Long`] otherwise.
pub fn detect_layout(source: &Path) -> CsvLayout {
    if source.is_dir() {
        CsvLayout::PerTicker
    } else {
        CsvLayout::Long
    }
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn malformed(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        file: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| malformed(path, 1, e.to_string()))?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(malformed(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| malformed(path, line, format!("bad date `{s}`: {e}")))
}

fn parse_close(path: &Path, line: u64, ticker: &str, s: &str) -> Result<f64> {
    let close: f64 = s
        .parse()
        .map_err(|_| malformed(path, line, format!("bad close `{s}`")))?;
    if !close.is_finite() {
        return Err(malformed(path, line, format!("bad close `{s}`")));
    }
    if close <= 0.0 {
        return Err(Error::NonPositivePrice {
            file: path.to_path_buf(),
            line,
            ticker: ticker.to_string(),
            close,
        });
    }
    Ok(close)
}

fn insert(
    book: &mut BTreeMap<NaiveDate, f64>,
    path: &Path,
    line: u64,
    ticker: &str,
    date: NaiveDate,
    close: f64,
) -> Result<()> {
    if book.insert(date, close).is_some() {
        return Err(Error::DuplicateDate {
            file: path.to_path_buf(),
            line,
            ticker: ticker.to_string(),
            date,
        });
    }
    Ok(())
}

fn load_long(path: &Path) -> Result<Vec<PriceSeries>> {
    let mut rdr = open(path)?;
    check_header(path, &mut rdr, &["date", "ticker", "close"])?;
    let mut books: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: LongRow = record
            .deserialize(None)
            .map_err(|e| malformed(path, line, e.to_string()))?;
        if row.ticker.is_empty() {
            return Err(malformed(path, line, "empty ticker"));
        }
        let date = parse_date(path, line, &row.date)?;
        let close = parse_close(path, line, &row.ticker, &row.close)?;
        let book = books.entry(row.ticker.clone()).or_default();
        insert(book, path, line, &row.ticker, date, close)?;
    }
    Ok(books
        .into_iter()
        .map(|(ticker, book)| PriceSeries {
            ticker,
            observations: book.into_iter().collect(),
        })
        .collect())
}

fn load_ticker_file(path: &Path) -> Result<PriceSeries> {
    let ticker = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| malformed(path, 0, "file name is not a valid ticker"))?
        .to_string();
    let mut rdr = open(path)?;
    check_header(path, &mut rdr, &["date", "close"])?;
    let mut book = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: TickerRow = record
            .deserialize(None)
            .map_err(|e| malformed(path, line, e.to_string()))?;
        let date = parse_date(path, line, &row.date)?;
        let close = parse_close(path, line, &ticker, &row.close)?;
        insert(&mut book, path, line, &ticker, date, close)?;
    }
    Ok(PriceSeries {
        ticker,
        observations: book.into_iter().collect(),
    })
}

fn load_directory(dir: &Path) -> Result<Vec<PriceSeries>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    let mut series = Vec::with_capacity(files.len());
    for file in &files {
        let s = load_ticker_file(file)?;
        if series.iter().any(|o: &PriceSeries| o.ticker == s.ticker) {
            return Err(malformed(file, 0, format!("ticker {} appears in more than one file", s.ticker)));
        }
        series.push(s);
    }
    series.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    Ok(series)
}

/// How calendars of different tickers are reconciled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlignPolicy {
    /// Keep only dates on which every ticker traded.
    #[default]
    Intersect,
    /// Use the union calendar and carry the last close forward across gaps of
    /// at most `max_gap` consecutive missing trading days; dates that cannot
    /// be filled for some ticker are dropped for all tickers.
    ForwardFill { max_gap: usize },
}

impl std::str::FromStr for AlignPolicy {
    type Err = Error;

    /// Parses `intersect`, `ffill:<N>` or `forward-fill:<N>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("intersect") {
            return Ok(AlignPolicy::Intersect);
        }
        let gap = s
            .strip_prefix("ffill:")
            .or_else(|| s.strip_prefix("forward-fill:"))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown alignment policy `{s}`")))?;
        let max_gap = gap
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad forward-fill gap `{gap}`")))?;
        Ok(AlignPolicy::ForwardFill { max_gap })
    }
}

impl std::fmt::Display for AlignPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlignPolicy::Intersect => f.write_str("intersect"),
            AlignPolicy::ForwardFill { max_gap } => write!(f, "ffill:{max_gap}"),
        }
    }
}

/// Aligns several series onto one trading calendar.
pub fn align_panel(series: &[PriceSeries], policy: AlignPolicy) -> Result<PricePanel> {
    if series.len() < 2 {
        return Err(Error::TooFewSeries(series.len()));
    }
    let mut seen = BTreeSet::new();
    for s in series {
        if !seen.insert(s.ticker.as_str()) {
            return Err(Error::InvalidParameter(format!("duplicate ticker {}", s.ticker)));
        }
    }
    let tickers: Vec<String> = series.iter().map(|s| s.ticker.clone()).collect();

    let (calendar, closes) = match policy {
        AlignPolicy::Intersect => {
            let mut common: BTreeSet<NaiveDate> = series[0].dates().collect();
            for s in &series[1..] {
                let dates: BTreeSet<NaiveDate> = s.dates().collect();
                common.retain(|d| dates.contains(d));
            }
            let calendar: Vec<NaiveDate> = common.into_iter().collect();
            let closes = series
                .iter()
                .map(|s| {
                    let book: BTreeMap<NaiveDate, f64> = s.observations.iter().copied().collect();
                    calendar.iter().map(|d| book[d]).collect()
                })
                .collect();
            (calendar, closes)
        }
        AlignPolicy::ForwardFill { max_gap } => {
            let union: Vec<NaiveDate> = series
                .iter()
                .flat_map(|s| s.dates())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            // Filled value of every ticker on every union date, None when the
            // gap since the last observation is too long (or nothing observed yet).
            let filled: Vec<Vec<Option<f64>>> = series
                .iter()
                .map(|s| {
                    let book: BTreeMap<NaiveDate, f64> = s.observations.iter().copied().collect();
                    let mut last: Option<f64> = None;
                    let mut gap = 0usize;
                    union
                        .iter()
                        .map(|d| match book.get(d) {
                            Some(&c) => {
                                last = Some(c);
                                gap = 0;
                                Some(c)
                            }
                            None => {
                                gap += 1;
                                if gap <= max_gap {
                                    last
                                } else {
                                    None
                                }
                            }
                        })
                        .collect()
                })
                .collect();
            let keep: Vec<usize> = (0..union.len())
                .filter(|&t| filled.iter().all(|row| row[t].is_some()))
                .collect();
            let calendar = keep.iter().map(|&t| union[t]).collect();
            let closes = filled
                .iter()
                .map(|row| keep.iter().map(|&t| row[t].expect("kept dates are filled")).collect())
                .collect();
            (calendar, closes)
        }
    };

    if calendar.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(PricePanel {
        tickers,
        calendar,
        closes,
    })
}

/// `returns[i][t] = ln(closes[i][t+1]) - ln(closes[i][t])`.
pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    if panel.n_days() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: panel.n_days(),
        });
    }
    let returns = panel
        .closes
        .iter()
        .map(|row| row.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
        .collect();
    Ok(ReturnPanel {
        tickers: panel.tickers.clone(),
        calendar: panel.calendar[1..].to_vec(),
        returns,
    })
}

/// Start date used for synthetic calendars.
pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

/// `count` consecutive Monday-to-Friday dates beginning at `start`
/// (rolled forward to a weekday).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

//! Run configuration: a `key = value` text file, overlaid by command-line
//! flags.
//!
//! ```text
//! # comments start with '#'
//! data = prices.csv
//! windows = 10, 20, 40..43   # lists; `a..b` is an inclusive range
//! step = 1
//! strong_threshold = 0.5
//! align = ffill:2
//! out = results
//! format = csv
//! seed = 42
//! ```
//!
//! Keys are case-sensitive; `-` and `_` are interchangeable. Unknown keys are
//! rejected so typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::corr::{CorrelationLevel, DEFAULT_STRONG_THRESHOLD};
use crate::error::{Error, Result};
use crate::ingest::{AlignPolicy, CsvLayout};
use crate::lifetime::LifetimeParams;
use crate::synth::{AsyncTradeSpec, MarketSpec};

/// Every key the configuration understands.
pub const KEYS: &[&str] = &[
    "data",
    "layout",
    "from",
    "to",
    "window",
    "windows",
    "step",
    "strong_threshold",
    "align",
    "out",
    "format",
    "seed",
    "portfolio",
    "include_censored",
    "level",
    "pairs",
    "max_lag",
    // synthetic market
    "tickers",
    "n_tickers",
    "rho",
    "pair_rho",
    "volatility",
    "length",
    "regime_rho",
    "regime_pair_rho",
    "regime_length",
    // asynchronous trading
    "true_rho",
    "intensity",
    "intervals",
    "horizon",
    "minutes_per_day",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown output format `{other}`"))),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Raw `key -> value` settings, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("config line {}: expected `key = value`", n + 1)))?;
            s.set(k, v)?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::InvalidParameter(format!("unknown config key `{key}`")));
        }
        self.0.insert(key, value.trim().to_string());
        Ok(())
    }

    /// Applies `key=value`.
    pub fn set_pair(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{assignment}`")))?;
        self.set(k, v)
    }

    pub fn merge(&mut self, other: Settings) {
        self.0.extend(other.0);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::InvalidParameter(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                split_list(v)
                    .map(|item| {
                        item.parse::<T>()
                            .map_err(|_| Error::InvalidParameter(format!("bad item `{item}` in `{key}`")))
                    })
                    .collect()
            })
            .transpose()
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses `10, 20, 30..33` into `[10, 20, 30, 31, 32, 33]`.
pub fn parse_widths(v: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("bad window list `{v}`"));
    let mut out = Vec::new();
    for item in split_list(v) {
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

/// `A:B:0.8, C:D:0.3`
fn parse_pair_rhos(v: &str) -> Result<Vec<(String, String, f64)>> {
    split_list(v)
        .map(|item| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            match parts.as_slice() {
                [a, b, r] => r
                    .parse()
                    .map(|r| (a.to_string(), b.to_string(), r))
                    .map_err(|_| Error::InvalidParameter(format!("bad pair correlation `{item}`"))),
                _ => Err(Error::InvalidParameter(format!("expected TICKER:TICKER:RHO, got `{item}`"))),
            }
        })
        .collect()
}

fn parse_level(v: &str) -> Result<CorrelationLevel> {
    match v.trim().to_ascii_lowercase().as_str() {
        "strong" => Ok(CorrelationLevel::Strong),
        "weak" => Ok(CorrelationLevel::Weak),
        "negative" => Ok(CorrelationLevel::Negative),
        other => Err(Error::InvalidParameter(format!("unknown level `{other}`"))),
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::InvalidParameter(format!("bad boolean `{other}`"))),
    }
}

/// Validated configuration for one command run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub layout: Option<CsvLayout>,
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub window_widths: Vec<usize>,
    pub step: usize,
    pub strong_threshold: f64,
    pub align: AlignPolicy,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub seed: u64,
    pub portfolio: String,
    pub include_censored: bool,
    pub level: CorrelationLevel,
    /// Pairs whose mean-lifetime curves are written; all pairs when empty.
    pub pairs: Vec<(String, String)>,
    /// Largest survival lag, in window positions.
    pub max_lag: Option<usize>,
    pub settings: Settings,
}

impl RunConfig {
    pub fn from_settings(settings: Settings) -> Result<Self> {
        let s = &settings;
        let mut window_widths = Vec::new();
        if let Some(w) = s.get("window") {
            window_widths.extend(parse_widths(w)?);
        }
        if let Some(w) = s.get("windows") {
            window_widths.extend(parse_widths(w)?);
        }
        window_widths.sort_unstable();
        window_widths.dedup();
        let date = |key: &str| -> Result<Option<NaiveDate>> {
            s.get(key)
                .map(|v| {
                    NaiveDate::parse_from_str(v, "%Y-%m-%d")
                        .map_err(|_| Error::InvalidParameter(format!("bad date `{v}` for `{key}`")))
                })
                .transpose()
        };
        let layout = match s.get("layout") {
            None => None,
            Some(v) => Some(match v.to_ascii_lowercase().as_str() {
                "long" => CsvLayout::Long,
                "per-ticker" | "per_ticker" => CsvLayout::PerTicker,
                other => return Err(Error::InvalidParameter(format!("unknown layout `{other}`"))),
            }),
        };
        let pairs = match s.get("pairs") {
            None => Vec::new(),
            Some(v) => split_list(v)
                .map(|p| {
                    p.split_once(':')
                        .or_else(|| p.split_once('-'))
                        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                        .ok_or_else(|| Error::InvalidParameter(format!("bad pair `{p}`")))
                })
                .collect::<Result<_>>()?,
        };
        let cfg = RunConfig {
            data: s.get("data").map(PathBuf::from),
            layout,
            from: date("from")?,
            to: date("to")?,
            window_widths,
            step: s.parsed("step")?.unwrap_or(1),
            strong_threshold: s.parsed("strong_threshold")?.unwrap_or(DEFAULT_STRONG_THRESHOLD),
            align: s.get("align").map(str::parse).transpose()?.unwrap_or_default(),
            out: s.get("out").map_or_else(|| PathBuf::from("out"), PathBuf::from),
            format: s.get("format").map(str::parse).transpose()?.unwrap_or_default(),
            seed: s.parsed("seed")?.unwrap_or(1),
            portfolio: s.get("portfolio").unwrap_or("portfolio").to_string(),
            include_censored: s.get("include_censored").map(parse_bool).transpose()?.unwrap_or(true),
            level: s.get("level").map(parse_level).transpose()?.unwrap_or(CorrelationLevel::Strong),
            pairs,
            max_lag: s.parsed("max_lag")?,
            settings: settings.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the invariants that hold for every command.
    pub fn validate(&self) -> Result<()> {
        if self.step < 1 {
            return Err(Error::InvalidParameter("step must be at least 1".into()));
        }
        if !(self.strong_threshold > 0.0 && self.strong_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "strong threshold {} outside (0, 1]",
                self.strong_threshold
            )));
        }
        if let Some(w) = self.window_widths.iter().find(|w| **w < 2) {
            return Err(Error::InvalidParameter(format!("window width {w} < 2")));
        }
        if let (Some(f), Some(t)) = (self.from, self.to) {
            if f > t {
                return Err(Error::InvalidParameter(format!("--from {f} is after --to {t}")));
            }
        }
        Ok(())
    }

    /// Window widths for commands that need at least one.
    pub fn require_windows(&self) -> Result<&[usize]> {
        if self.window_widths.is_empty() {
            return Err(Error::InvalidParameter("no window widths given (--window / --windows)".into()));
        }
        Ok(&self.window_widths)
    }

    pub fn lifetime_params(&self) -> LifetimeParams {
        LifetimeParams {
            step: self.step,
            strong_threshold: self.strong_threshold,
            level: self.level,
            include_censored: self.include_censored,
            portfolio: self.portfolio.clone(),
        }
    }

    fn market_with(&self, rho_key: &str, pair_key: &str, length_key: &str, default_length: usize) -> Result<MarketSpec> {
        let s = &self.settings;
        let tickers = match s.list::<String>("tickers")? {
            Some(t) => t,
            None => MarketSpec::numbered_tickers(s.parsed("n_tickers")?.unwrap_or(2)),
        };
        let n = tickers.len();
        let rho = s.parsed(rho_key)?.unwrap_or(0.0);
        let length = s.parsed(length_key)?.unwrap_or(default_length);
        let mut spec = MarketSpec::uniform(tickers, rho, 0.01, length, self.seed);
        match s.list::<f64>("volatility")? {
            None => {}
            Some(v) if v.len() == 1 => spec.daily_volatility = vec![v[0]; n],
            Some(v) if v.len() == n => spec.daily_volatility = v,
            Some(v) => {
                return Err(Error::InvalidParameter(format!(
                    "{} volatilities given for {n} tickers",
                    v.len()
                )))
            }
        }
        if let Some(v) = s.get(pair_key) {
            for (a, b, r) in parse_pair_rhos(v)? {
                let find = |t: &str| {
                    spec.tickers
                        .iter()
                        .position(|x| x == t)
                        .ok_or_else(|| Error::UnknownTicker(t.to_string()))
                };
                let (i, j) = (find(&a)?, find(&b)?);
                spec = spec.with_pair(i, j, r);
            }
        }
        Ok(spec)
    }

    /// Market for `synth`; `length` defaults to 1000 days.
    pub fn market_spec(&self) -> Result<MarketSpec> {
        let spec = self.market_with("rho", "pair_rho", "length", 1000)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Second regime when `regime_length` is set; otherwise `None`.
    pub fn regime_spec(&self) -> Result<Option<MarketSpec>> {
        if self.settings.get("regime_length").is_none() {
            return Ok(None);
        }
        let spec = self.market_with("regime_rho", "regime_pair_rho", "regime_length", 0)?;
        spec.validate()?;
        Ok(Some(spec))
    }

    pub fn epps_spec(&self) -> Result<AsyncTradeSpec> {
        let s = &self.settings;
        let d = AsyncTradeSpec::default();
        let spec = AsyncTradeSpec {
            true_correlation: s.parsed("true_rho")?.unwrap_or(d.true_correlation),
            trade_intensity: s.parsed("intensity")?.unwrap_or(d.trade_intensity),
            sampling_intervals: s.list("intervals")?.unwrap_or(d.sampling_intervals),
            horizon_days: s.parsed("horizon")?.unwrap_or(d.horizon_days),
            minutes_per_day: s.parsed("minutes_per_day")?.unwrap_or(d.minutes_per_day),
            seed: s.parsed("seed")?.unwrap_or(d.seed),
        };
        spec.validate()?;
        Ok(spec)
    }
}

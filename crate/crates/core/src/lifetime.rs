//! Lifetime of correlation: maximal stretches during which a pair's rolling
//! correlation stays on one level (strong by default), their per-pair mean,
//! and portfolio aggregates over all pairs.

use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::corr::{rolling_correlation, CorrelationLevel, RollingCorrelationSeries, WindowSpec, DEFAULT_STRONG_THRESHOLD};
use crate::error::{Error, Result};
use crate::ingest::ReturnPanel;

/// A maximal run of consecutive window positions on the tracked level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeRun {
    pub pair: (String, String),
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Index of the first window position of the run.
    pub first_position: usize,
    pub positions: usize,
    /// Trading days: `positions * step`.
    pub length: usize,
    pub censored_left: bool,
    pub censored_right: bool,
}

impl LifetimeRun {
    pub fn censored(&self) -> bool {
        self.censored_left || self.censored_right
    }
}

/// Maximal runs of `level` in `series`. Any other level, including
/// undefined windows, ends a run.
pub fn extract_runs(series: &RollingCorrelationSeries, level: CorrelationLevel) -> Vec<LifetimeRun> {
    let levels: Vec<CorrelationLevel> = series.levels().collect();
    let last = levels.len().saturating_sub(1);
    let step = series.step();
    run_bounds(&levels, level)
        .into_iter()
        .map(|(a, b)| LifetimeRun {
            pair: series.pair.clone(),
            start: series.points[a].window_end,
            end: series.points[b].window_end,
            first_position: a,
            positions: b - a + 1,
            length: (b - a + 1) * step,
            censored_left: a == 0,
            censored_right: b == last,
        })
        .collect()
}

/// Inclusive `(first, last)` index pairs of the maximal runs of `level`.
pub fn run_bounds(levels: &[CorrelationLevel], level: CorrelationLevel) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, &l) in levels.iter().enumerate() {
        match (l == level, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, levels.len() - 1));
    }
    out
}

/// Mean run length in trading days, 0 when there are no (eligible) runs.
pub fn mltc(runs: &[LifetimeRun], include_censored: bool) -> f64 {
    let lengths: Vec<usize> = runs
        .iter()
        .filter(|r| include_censored || !r.censored())
        .map(|r| r.length)
        .collect();
    if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
    }
}

/// Analysis knobs shared by the lifetime operations.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeParams {
    pub step: usize,
    pub strong_threshold: f64,
    pub level: CorrelationLevel,
    pub include_censored: bool,
    pub portfolio: String,
}

impl Default for LifetimeParams {
    fn default() -> Self {
        Self {
            step: 1,
            strong_threshold: DEFAULT_STRONG_THRESHOLD,
            level: CorrelationLevel::Strong,
            include_censored: true,
            portfolio: "portfolio".to_string(),
        }
    }
}

impl LifetimeParams {
    fn window(&self, width: usize) -> Result<WindowSpec> {
        WindowSpec::new(width, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeStats {
    pub pair: (String, String),
    pub window_width: usize,
    pub runs: Vec<LifetimeRun>,
    pub mltc: f64,
}

/// Runs and mean lifetime of one pair at one window width.
pub fn pair_lifetime(
    panel: &ReturnPanel,
    pair: (usize, usize),
    width: usize,
    params: &LifetimeParams,
) -> Result<LifetimeStats> {
    let series = rolling_correlation(panel, pair, params.window(width)?, params.strong_threshold)?;
    let runs = extract_runs(&series, params.level);
    Ok(LifetimeStats {
        pair: series.pair.clone(),
        window_width: width,
        mltc: mltc(&runs, params.include_censored),
        runs,
    })
}

/// Mean lifetime of one pair for each window width.
pub fn mltc_curve(
    panel: &ReturnPanel,
    pair: (usize, usize),
    widths: &[usize],
    params: &LifetimeParams,
) -> Result<Vec<(usize, f64)>> {
    widths
        .iter()
        .map(|&w| pair_lifetime(panel, pair, w, params).map(|s| (w, s.mltc)))
        .collect()
}

/// Lifetime statistics of every unordered pair, ordered `(0,1), (0,2), ...`.
pub fn all_pair_lifetimes(panel: &ReturnPanel, width: usize, params: &LifetimeParams) -> Result<Vec<LifetimeStats>> {
    if panel.n_tickers() < 2 {
        return Err(Error::TooFewSeries(panel.n_tickers()));
    }
    panel
        .pairs()
        .par_iter()
        .map(|&pair| pair_lifetime(panel, pair, width, params))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioLifetime {
    pub portfolio: String,
    pub window_width: usize,
    /// Average of the per-pair mean lifetimes, trading days.
    pub mean: f64,
    /// Population standard deviation of the per-pair mean lifetimes.
    pub stddev: f64,
    pub pair_count: usize,
}

impl PortfolioLifetime {
    pub fn from_pairs(portfolio: &str, window_width: usize, pairs: &[LifetimeStats]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::TooFewSeries(0));
        }
        let n = pairs.len() as f64;
        let mean = pairs.iter().map(|p| p.mltc).sum::<f64>() / n;
        let var = pairs.iter().map(|p| (p.mltc - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            portfolio: portfolio.to_string(),
            window_width,
            mean,
            stddev: var.sqrt(),
            pair_count: pairs.len(),
        })
    }
}

pub fn portfolio_mltc(panel: &ReturnPanel, width: usize, params: &LifetimeParams) -> Result<PortfolioLifetime> {
    let pairs = all_pair_lifetimes(panel, width, params)?;
    PortfolioLifetime::from_pairs(&params.portfolio, width, &pairs)
}

pub fn portfolio_curve(panel: &ReturnPanel, widths: &[usize], params: &LifetimeParams) -> Result<Vec<PortfolioLifetime>> {
    widths.iter().map(|&w| portfolio_mltc(panel, w, params)).collect()
}

/// Standard deviation of the per-pair mean lifetimes for each window width.
pub fn stddev_curve(panel: &ReturnPanel, widths: &[usize], params: &LifetimeParams) -> Result<Vec<(usize, f64)>> {
    Ok(portfolio_curve(panel, widths, params)?
        .into_iter()
        .map(|p| (p.window_width, p.stddev))
        .collect())
}

/// Row of the run export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub pair: String,
    pub window_width: usize,
    pub run_index: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub length: usize,
    pub censored: bool,
}

pub fn pair_label(pair: &(String, String)) -> String {
    format!("{}-{}", pair.0, pair.1)
}

pub fn run_records(stats: &[LifetimeStats]) -> Vec<RunRecord> {
    stats
        .iter()
        .flat_map(|s| {
            s.runs.iter().enumerate().map(move |(k, r)| RunRecord {
                pair: pair_label(&s.pair),
                window_width: s.window_width,
                run_index: k,
                start: r.start,
                end: r.end,
                length: r.length,
                censored: r.censored(),
            })
        })
        .collect()
}

/// `pair,window_width,run_index,start,end,length,censored`
pub fn write_runs_csv<W: Write>(out: W, stats: &[LifetimeStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in run_records(stats) {
        w.serialize(rec)?;
    }
    if stats.iter().all(|s| s.runs.is_empty()) {
        w.write_record(["pair", "window_width", "run_index", "start", "end", "length", "censored"])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// `window_width,mean,stddev,pair_count`
pub fn write_portfolio_csv<W: Write>(out: W, curve: &[PortfolioLifetime]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_width", "mean", "stddev", "pair_count"])?;
    for p in curve {
        w.write_record([
            p.window_width.to_string(),
            p.mean.to_string(),
            p.stddev.to_string(),
            p.pair_count.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corr::RollingPoint;
    use crate::ingest::business_days;
    use CorrelationLevel::*;

    fn series(levels: &[CorrelationLevel], step: usize) -> RollingCorrelationSeries {
        let dates = business_days(crate::ingest::default_start_date(), levels.len());
        RollingCorrelationSeries {
            pair: ("A".into(), "B".into()),
            window: WindowSpec { width: 2, step },
            points: levels
                .iter()
                .zip(dates)
                .map(|(&level, window_end)| RollingPoint {
                    window_end,
                    rho: None,
                    level,
                })
                .collect(),
        }
    }

    fn lengths(runs: &[LifetimeRun]) -> Vec<usize> {
        runs.iter().map(|r| r.length).collect()
    }

    #[test]
    fn runs_from_level_sequences() {
        let runs = extract_runs(&series(&[Strong, Strong, Strong, Weak, Strong, Strong], 1), Strong);
        assert_eq!(lengths(&runs), vec![3, 2]);
        assert!(runs[0].censored_left && !runs[0].censored_right);
        assert!(runs[1].censored_right && !runs[1].censored_left);
        assert_eq!(mltc(&runs, true), 2.5);
        assert_eq!(mltc(&runs, false), 0.0);

        let none = extract_runs(&series(&[Weak, Weak, Weak], 1), Strong);
        assert!(none.is_empty());
        assert_eq!(mltc(&none, true), 0.0);

        let alternating: Vec<_> = (0..12).map(|k| if k % 2 == 0 { Strong } else { Weak }).collect();
        let runs = extract_runs(&series(&alternating, 1), Strong);
        assert_eq!(lengths(&runs), vec![1; 6]);
    }

    #[test]
    fn undefined_breaks_runs_and_step_scales_length() {
        let runs = extract_runs(&series(&[Weak, Strong, Undefined, Strong, Strong, Negative], 5), Strong);
        assert_eq!(lengths(&runs), vec![5, 10]);
        assert!(runs.iter().all(|r| !r.censored()));
        assert_eq!(runs[1].positions, 2);
        assert_eq!(runs[1].first_position, 3);
        let neg = extract_runs(&series(&[Weak, Strong, Undefined, Strong, Strong, Negative], 5), Negative);
        assert_eq!(lengths(&neg), vec![5]);
    }

    #[test]
    fn portfolio_of_one_pair() {
        let rows = vec![
            vec![0.01, 0.02, -0.01, 0.03, 0.0, 0.01, -0.02],
            vec![0.02, 0.01, -0.02, 0.02, 0.01, 0.0, -0.01],
        ];
        let panel = ReturnPanel::from_rows(vec!["A".into(), "B".into()], rows).unwrap();
        let params = LifetimeParams::default();
        let p = portfolio_mltc(&panel, 3, &params).unwrap();
        let single = pair_lifetime(&panel, (0, 1), 3, &params).unwrap();
        assert_eq!(p.pair_count, 1);
        assert_eq!(p.mean, single.mltc);
        assert_eq!(p.stddev, 0.0);

        // full-width window: one point, mltc is 0 or one step
        let c = mltc_curve(&panel, (0, 1), &[7], &params).unwrap();
        assert!(c[0].1 == 0.0 || c[0].1 == 1.0);
        assert!(mltc_curve(&panel, (0, 1), &[8], &params).is_err());
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "pair,window_width,run_index,start,end,length,censored\n"
        );
        let stats = LifetimeStats {
            pair: ("A".into(), "B".into()),
            window_width: 3,
            runs: extract_runs(&series(&[Strong, Weak], 1), Strong),
            mltc: 1.0,
        };
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, &[stats]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "pair,window_width,run_index,start,end,length,censored\nA-B,3,0,2000-01-03,2000-01-03,1,true\n"
        );
    }
}

//! The `corrlife` commands as library calls. Each command reads its inputs
//! from a [`RunConfig`], writes plot-ready files into `config.out` and
//! returns the paths it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{OutputFormat, RunConfig};
use crate::corr::{fmt_rho, full_period_matrix, Census};
use crate::error::{Error, Result};
use crate::ingest::{align_panel, detect_layout, load_prices, log_returns, ReturnPanel};
use crate::lifetime::{all_pair_lifetimes, pair_label, run_records, write_portfolio_csv, write_runs_csv, PortfolioLifetime};
use crate::mst::{build_mst, rolling_msts, survival_curve_up_to, write_edges_csv};
use crate::synth::{epps_experiment, generate_panel, regime_panel};

/// Loads, aligns and date-restricts the configured prices, then takes log-returns.
pub fn load_returns(cfg: &RunConfig) -> Result<ReturnPanel> {
    let data = cfg
        .data
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("no data source given (--data)".into()))?;
    let layout = cfg.layout.unwrap_or_else(|| detect_layout(data));
    let series = load_prices(data, layout)?;
    let panel = align_panel(&series, cfg.align)?.restrict(cfg.from, cfg.to);
    log_returns(&panel)
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w).map_err(|e| Error::io(name, e))
        })
    }

    fn csv<T: Serialize>(&mut self, name: &str, header: &[&str], rows: &[T]) -> Result<()> {
        self.write(name, |w| {
            let mut c = csv::WriterBuilder::new().has_headers(false).from_writer(w);
            c.write_record(header)?;
            for r in rows {
                c.serialize(r)?;
            }
            c.flush().map_err(|e| Error::io(name, e))
        })
    }
}

pub struct CorrReport {
    pub census: Census,
    pub files: Vec<PathBuf>,
}

/// Full-period matrix, flat pair list and level census.
pub fn run_corr(cfg: &RunConfig) -> Result<CorrReport> {
    let panel = load_returns(cfg)?;
    let m = full_period_matrix(&panel)?;
    for (i, j) in m.undefined_pairs() {
        log::warn!("undefined correlation for {}-{}", m.tickers[i], m.tickers[j]);
    }
    let census = m.census(cfg.strong_threshold);
    let mut out = Outputs::new(&cfg.out)?;
    match cfg.format {
        OutputFormat::Csv => {
            out.write("corr_matrix.csv", |w| m.write_square_csv(w))?;
            out.write("corr_pairs.csv", |w| m.write_pairs_csv(w, cfg.strong_threshold))?;
        }
        OutputFormat::Json => {
            out.json("corr_matrix.json", &m.to_json())?;
            out.json("corr_pairs.json", &m.pair_records(cfg.strong_threshold))?;
        }
    }
    out.write("census.txt", |w| writeln!(w, "{census}").map_err(|e| Error::io("census.txt", e)))?;
    Ok(CorrReport {
        census,
        files: out.written,
    })
}

#[derive(Debug, Clone, Serialize)]
struct PairMltc {
    pair: String,
    window_width: usize,
    mltc: f64,
    run_count: usize,
}

pub struct LifetimeReport {
    pub curve: Vec<PortfolioLifetime>,
    pub files: Vec<PathBuf>,
}

/// Runs, per-pair mean-lifetime curves and the portfolio mean / stddev curve.
pub fn run_lifetime(cfg: &RunConfig) -> Result<LifetimeReport> {
    let widths = cfg.require_windows()?.to_vec();
    let panel = load_returns(cfg)?;
    let params = cfg.lifetime_params();
    let selected: Vec<String> = cfg.pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    for (a, b) in &cfg.pairs {
        panel.index_of(a)?;
        panel.index_of(b)?;
    }

    let mut all_stats = Vec::new();
    let mut curve = Vec::new();
    let mut pair_rows = Vec::new();
    for &w in &widths {
        let stats = all_pair_lifetimes(&panel, w, &params)?;
        curve.push(PortfolioLifetime::from_pairs(&params.portfolio, w, &stats)?);
        for s in &stats {
            let label = pair_label(&s.pair);
            if selected.is_empty() || selected.contains(&label) {
                pair_rows.push(PairMltc {
                    pair: label,
                    window_width: w,
                    mltc: s.mltc,
                    run_count: s.runs.len(),
                });
            }
        }
        all_stats.extend(stats);
    }
    // pair-major ordering for the per-pair files
    pair_rows.sort_by(|a, b| a.pair.cmp(&b.pair).then(a.window_width.cmp(&b.window_width)));
    let mut ordered = all_stats;
    ordered.sort_by(|a, b| a.pair.cmp(&b.pair).then(a.window_width.cmp(&b.window_width)));

    let mut out = Outputs::new(&cfg.out)?;
    match cfg.format {
        OutputFormat::Csv => {
            out.write("runs.csv", |w| write_runs_csv(w, &ordered))?;
            out.csv("pair_mltc.csv", &["pair", "window_width", "mltc", "run_count"], &pair_rows)?;
            out.write("portfolio_curve.csv", |w| write_portfolio_csv(w, &curve))?;
        }
        OutputFormat::Json => {
            out.json("runs.json", &run_records(&ordered))?;
            out.json("pair_mltc.json", &pair_rows)?;
            out.json("portfolio_curve.json", &curve)?;
        }
    }
    Ok(LifetimeReport {
        curve,
        files: out.written,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfLifeRow {
    pub window_width: usize,
    pub half_life: Option<usize>,
    pub trees: usize,
    pub skipped: usize,
}

pub struct MstReport {
    pub half_lives: Vec<HalfLifeRow>,
    pub files: Vec<PathBuf>,
}

/// Full-period tree, per-window trees, survival curves and half-lives.
pub fn run_mst(cfg: &RunConfig) -> Result<MstReport> {
    let widths = cfg.require_windows()?.to_vec();
    let panel = load_returns(cfg)?;
    let mut out = Outputs::new(&cfg.out)?;

    let full = full_period_matrix(&panel)?;
    match build_mst(&full) {
        Ok(mut tree) => {
            tree.window_end = panel.calendar.last().copied();
            out.write("mst_full.edgelist", |w| tree.write_edgelist(w))?;
        }
        Err(Error::UndefinedCorrelation(a, b)) => log::warn!("no full-period tree: {a}-{b} undefined"),
        Err(e) => return Err(e),
    }

    let mut half_lives = Vec::new();
    for &w in &widths {
        let window = crate::corr::WindowSpec::new(w, cfg.step)?;
        let rolling = rolling_msts(&panel, window)?;
        let ext = cfg.format.extension();
        match cfg.format {
            OutputFormat::Csv => out.write(&format!("mst_edges_w{w}.{ext}"), |f| write_edges_csv(f, &rolling.trees))?,
            OutputFormat::Json => {
                let rows: Vec<_> = rolling
                    .trees
                    .iter()
                    .flat_map(|t| {
                        t.edges.iter().map(move |e| {
                            serde_json::json!({
                                "window_end": t.window_end,
                                "ticker_i": t.tickers[e.i],
                                "ticker_j": t.tickers[e.j],
                                "distance": e.distance,
                            })
                        })
                    })
                    .collect();
                out.json(&format!("mst_edges_w{w}.{ext}"), &rows)?
            }
        }
        let half_life = if rolling.trees.len() >= 2 {
            let curve = survival_curve_up_to(&rolling.trees, window, cfg.max_lag.unwrap_or(usize::MAX))?;
            match cfg.format {
                OutputFormat::Csv => out.write(&format!("survival_w{w}.{ext}"), |f| curve.write_csv(f))?,
                OutputFormat::Json => out.json(&format!("survival_w{w}.{ext}"), &curve.points)?,
            }
            curve.half_life
        } else {
            log::warn!("width {w}: fewer than 2 trees, no survival curve");
            None
        };
        half_lives.push(HalfLifeRow {
            window_width: w,
            half_life,
            trees: rolling.trees.len(),
            skipped: rolling.skipped.len(),
        });
    }
    match cfg.format {
        OutputFormat::Csv => out.write("half_life.csv", |f| {
            let mut c = csv::Writer::from_writer(f);
            c.write_record(["window_width", "half_life", "trees", "skipped"])?;
            for r in &half_lives {
                c.write_record([
                    r.window_width.to_string(),
                    r.half_life.map_or_else(|| "NA".into(), |h| h.to_string()),
                    r.trees.to_string(),
                    r.skipped.to_string(),
                ])?;
            }
            c.flush().map_err(|e| Error::io("half_life.csv", e))
        })?,
        OutputFormat::Json => out.json("half_life.json", &half_lives)?,
    }
    Ok(MstReport {
        half_lives,
        files: out.written,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EppsRow {
    pub interval: f64,
    pub measured_rho: Option<f64>,
    pub true_rho: f64,
    pub samples: usize,
}

pub struct EppsReport {
    pub rows: Vec<EppsRow>,
    pub files: Vec<PathBuf>,
}

/// Measured correlation per sampling interval next to the true value.
pub fn run_epps(cfg: &RunConfig) -> Result<EppsReport> {
    let spec = cfg.epps_spec()?;
    let rows: Vec<EppsRow> = epps_experiment(&spec)?
        .into_iter()
        .map(|p| EppsRow {
            interval: p.interval,
            measured_rho: p.measured,
            true_rho: spec.true_correlation,
            samples: p.samples,
        })
        .collect();
    let mut out = Outputs::new(&cfg.out)?;
    match cfg.format {
        OutputFormat::Csv => out.write("epps.csv", |f| {
            let mut c = csv::Writer::from_writer(f);
            c.write_record(["interval", "measured_rho", "true_rho", "samples"])?;
            for r in &rows {
                c.write_record([
                    r.interval.to_string(),
                    fmt_rho(r.measured_rho),
                    r.true_rho.to_string(),
                    r.samples.to_string(),
                ])?;
            }
            c.flush().map_err(|e| Error::io("epps.csv", e))
        })?,
        OutputFormat::Json => out.json("epps.json", &rows)?,
    }
    Ok(EppsReport {
        rows,
        files: out.written,
    })
}

/// Writes a synthetic market as long-format `prices.csv`, the same layout
/// `--data` accepts.
pub fn run_synth(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg.market_spec()?;
    let market = match cfg.regime_spec()? {
        Some(second) => regime_panel(&spec, &second)?,
        None => generate_panel(&spec)?,
    };
    let mut out = Outputs::new(&cfg.out)?;
    out.write("prices.csv", |w| market.prices.write_long_csv(w))?;
    Ok(out.written)
}

//! Persistence of pairwise stock correlations.
//!
//! The crate turns daily closing prices into log-returns ([`ingest`]),
//! measures full-period and moving-window Pearson correlations ([`corr`]),
//! extracts how long pairs stay strongly correlated ([`lifetime`]), builds
//! minimum spanning trees over the correlation distance and tracks their
//! edge survival ([`mst`]), and generates synthetic markets with known
//! correlation, including asynchronously traded pairs that exhibit the Epps
//! effect ([`synth`]). The [`config`] and [`pipeline`] modules back the
//! `corrlife` command-line tool.

pub mod config;
pub mod corr;
pub mod error;
pub mod ingest;
pub mod lifetime;
pub mod mst;
pub mod pipeline;
pub mod synth;

pub use corr::{
    classify, classify_with, distance, full_period_matrix, pearson, rolling_correlation, CorrelationLevel,
    CorrelationMatrix, RollingCorrelationSeries, Rho, WindowSpec,
};
pub use error::{Error, ErrorKind, Result};
pub use ingest::{align_panel, load_prices, log_returns, AlignPolicy, CsvLayout, PricePanel, PriceSeries, ReturnPanel};
pub use lifetime::{extract_runs, mltc, mltc_curve, portfolio_mltc, stddev_curve, LifetimeParams, LifetimeRun, PortfolioLifetime};
pub use mst::{build_mst, rolling_msts, survival_curve, SpanningTree, SurvivalCurve};
pub use synth::{epps_experiment, generate_panel, regime_panel, AsyncTradeSpec, MarketSpec, SyntheticMarket};

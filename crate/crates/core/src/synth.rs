//! Synthetic markets with a known correlation structure, and asynchronously
//! traded price pairs for measuring the Epps effect.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`; normal deviates use the Box-Muller transform written out
//! here, so generated fixtures depend only on the ChaCha8 keystream and not on
//! the sampling algorithms of any distribution crate.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::corr::{pearson, Rho};
use crate::error::{Error, Result};
use crate::ingest::{business_days, default_start_date, log_returns, PricePanel, ReturnPanel};

/// Starting price of every synthetic path.
pub const BASE_PRICE: f64 = 100.0;

/// Pivots below this are treated as zero by the semi-definite factorization.
const PSD_TOLERANCE: f64 = 1e-10;

/// Seeded source of uniform and standard-normal deviates.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (u, v) = (self.uniform(), self.uniform());
        let r = (-2.0 * u.ln()).sqrt();
        let theta = std::f64::consts::TAU * v;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Exponential with the given rate.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform().ln() / rate
    }
}

/// Lower-triangular `L` with `L L^T = c` for a symmetric positive
/// semi-definite `c`. Zero pivots give zero columns.
pub fn semidefinite_cholesky(c: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = c.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = c[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if d < -PSD_TOLERANCE || d.is_nan() {
            return Err(Error::NotPositiveSemiDefinite { pivot: j, value: d });
        }
        if d <= PSD_TOLERANCE {
            for i in j + 1..n {
                let rest = c[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if rest.abs() > 1e-8 {
                    return Err(Error::NotPositiveSemiDefinite { pivot: j, value: d });
                }
            }
            continue;
        }
        let pivot = d.sqrt();
        l[j][j] = pivot;
        for i in j + 1..n {
            let rest = c[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = rest / pivot;
        }
    }
    Ok(l)
}

/// Gaussian market with a target correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketSpec {
    pub tickers: Vec<String>,
    pub target_correlation: Vec<Vec<f64>>,
    pub daily_volatility: Vec<f64>,
    /// Number of trading days (price observations).
    pub length: usize,
    pub seed: u64,
}

impl MarketSpec {
    /// Every off-diagonal correlation equal to `rho`.
    pub fn uniform(tickers: Vec<String>, rho: f64, volatility: f64, length: usize, seed: u64) -> Self {
        let n = tickers.len();
        let target_correlation = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect();
        Self {
            tickers,
            target_correlation,
            daily_volatility: vec![volatility; n],
            length,
            seed,
        }
    }

    /// Tickers `S00, S01, ...`.
    pub fn numbered_tickers(n: usize) -> Vec<String> {
        (0..n).map(|k| format!("S{k:02}")).collect()
    }

    pub fn with_pair(mut self, i: usize, j: usize, rho: f64) -> Self {
        self.target_correlation[i][j] = rho;
        self.target_correlation[j][i] = rho;
        self
    }

    pub fn validate(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.tickers.len();
        if n == 0 {
            return Err(Error::InvalidParameter("market has no tickers".into()));
        }
        if self.daily_volatility.len() != n || self.target_correlation.len() != n {
            return Err(Error::InvalidParameter("spec dimensions disagree with ticker count".into()));
        }
        if let Some(v) = self.daily_volatility.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("volatility {v} must be positive")));
        }
        let c = &self.target_correlation;
        for i in 0..n {
            if c[i].len() != n {
                return Err(Error::InvalidParameter("target correlation is not square".into()));
            }
            if c[i][i] != 1.0 {
                return Err(Error::InvalidParameter(format!("target correlation diagonal {i} is not 1")));
            }
            for j in 0..i {
                if c[i][j] != c[j][i] {
                    return Err(Error::InvalidParameter("target correlation is not symmetric".into()));
                }
                if !(-1.0..=1.0).contains(&c[i][j]) {
                    return Err(Error::InvalidParameter(format!("target correlation {} outside [-1, 1]", c[i][j])));
                }
            }
        }
        semidefinite_cholesky(c)
    }
}

/// Generated prices and the log-returns derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub prices: PricePanel,
    pub returns: ReturnPanel,
}

fn draw_returns(spec: &MarketSpec, factor: &[Vec<f64>], stream: &mut Stream, days: usize, out: &mut [Vec<f64>]) {
    let n = spec.tickers.len();
    let mut z = vec![0.0; n];
    for _ in 0..days {
        for v in z.iter_mut() {
            *v = stream.normal();
        }
        for i in 0..n {
            let mixed: f64 = factor[i][..=i].iter().zip(&z).map(|(a, b)| a * b).sum();
            out[i].push(spec.daily_volatility[i] * mixed);
        }
    }
}

fn assemble(tickers: Vec<String>, raw: Vec<Vec<f64>>) -> Result<SyntheticMarket> {
    let days = raw.first().map_or(0, Vec::len);
    let closes: Vec<Vec<f64>> = raw
        .iter()
        .map(|row| {
            let mut level = 0.0;
            row.iter()
                .map(|r| {
                    level += r;
                    BASE_PRICE * level.exp()
                })
                .collect()
        })
        .collect();
    let prices = PricePanel::new(tickers, business_days(default_start_date(), days), closes)?;
    let returns = log_returns(&prices)?;
    Ok(SyntheticMarket { prices, returns })
}

/// Prices `100 * exp(cumulative return)` over `spec.length` days and their
/// `spec.length - 1` log-returns. Same spec, same bits.
pub fn generate_panel(spec: &MarketSpec) -> Result<SyntheticMarket> {
    let factor = spec.validate()?;
    if spec.length < 2 {
        return Err(Error::InvalidParameter(format!("length {} < 2", spec.length)));
    }
    let mut raw = vec![Vec::with_capacity(spec.length); spec.tickers.len()];
    draw_returns(spec, &factor, &mut Stream::new(spec.seed), spec.length, &mut raw);
    assemble(spec.tickers.clone(), raw)
}

/// `a.length` days under `a` followed by `b.length` days under `b`.
/// When both seeds agree the second segment continues the first segment's
/// random stream; otherwise it starts a fresh stream from `b.seed`.
pub fn regime_panel(a: &MarketSpec, b: &MarketSpec) -> Result<SyntheticMarket> {
    if a.tickers != b.tickers {
        return Err(Error::InvalidParameter("regime specs have different tickers".into()));
    }
    if a.daily_volatility != b.daily_volatility {
        return Err(Error::InvalidParameter("regime specs have different volatilities".into()));
    }
    let (fa, fb) = (a.validate()?, b.validate()?);
    if a.length + b.length < 2 {
        return Err(Error::InvalidParameter("regime panel needs at least 2 days".into()));
    }
    let mut raw = vec![Vec::with_capacity(a.length + b.length); a.tickers.len()];
    let mut stream = Stream::new(a.seed);
    draw_returns(a, &fa, &mut stream, a.length, &mut raw);
    if b.seed != a.seed {
        stream = Stream::new(b.seed);
    }
    draw_returns(b, &fb, &mut stream, b.length, &mut raw);
    assemble(a.tickers.clone(), raw)
}

/// Two latent correlated random walks observed only at their own Poisson
/// trade times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsyncTradeSpec {
    pub true_correlation: f64,
    /// Mean trades per day per ticker.
    pub trade_intensity: f64,
    /// Sampling intervals in minutes.
    pub sampling_intervals: Vec<f64>,
    /// Simulated span in trading days.
    pub horizon_days: f64,
    pub minutes_per_day: f64,
    pub seed: u64,
}

/// Sampling intervals with fewer returns than this are reported undefined.
pub const MIN_EPPS_SAMPLES: usize = 100;

impl Default for AsyncTradeSpec {
    fn default() -> Self {
        Self {
            true_correlation: 0.7,
            trade_intensity: 50.0,
            sampling_intervals: vec![1.0, 2.0, 5.0, 10.0, 15.0, 30.0, 65.0, 130.0, 195.0, 390.0],
            horizon_days: 2000.0,
            minutes_per_day: 390.0,
            seed: 1979,
        }
    }
}

impl AsyncTradeSpec {
    pub fn horizon_minutes(&self) -> f64 {
        self.horizon_days * self.minutes_per_day
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.true_correlation > -1.0 && self.true_correlation < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "true correlation {} must lie in (-1, 1)",
                self.true_correlation
            )));
        }
        if !(self.trade_intensity > 0.0) || !self.trade_intensity.is_finite() {
            return Err(Error::InvalidParameter("trade intensity must be positive".into()));
        }
        if !(self.minutes_per_day > 0.0) {
            return Err(Error::InvalidParameter("minutes per day must be positive".into()));
        }
        if self.sampling_intervals.is_empty() || self.sampling_intervals.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidParameter("sampling intervals must be non-empty and positive".into()));
        }
        let max = self.sampling_intervals.iter().copied().fold(0.0, f64::max);
        if !(self.horizon_minutes() > max) {
            return Err(Error::InvalidParameter(format!(
                "horizon of {} minutes does not exceed the largest sampling interval {max}",
                self.horizon_minutes()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EppsPoint {
    /// Minutes.
    pub interval: f64,
    pub measured: Rho,
    pub samples: usize,
}

impl EppsPoint {
    /// Large-sample standard error `(1 - r^2) / sqrt(m)`.
    pub fn standard_error(&self) -> Option<f64> {
        self.measured.map(|r| (1.0 - r * r) / (self.samples as f64).sqrt())
    }
}

/// Latent log-price observed at trade times; `times[k]` carries `values[k]`.
struct TradedPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TradedPath {
    /// Last traded value at or before `t` (the start value 0 before any trade).
    fn previous_tick(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }
}

fn poisson_times(stream: &mut Stream, rate: f64, horizon: f64) -> Vec<f64> {
    let mut times = Vec::with_capacity((rate * horizon * 1.1) as usize + 16);
    let mut t = stream.exponential(rate);
    while t <= horizon {
        times.push(t);
        t += stream.exponential(rate);
    }
    times
}

fn simulate_pair(spec: &AsyncTradeSpec) -> (TradedPath, TradedPath) {
    let mut stream = Stream::new(spec.seed);
    let horizon = spec.horizon_minutes();
    let rate = spec.trade_intensity / spec.minutes_per_day;
    let times_a = poisson_times(&mut stream, rate, horizon);
    let times_b = poisson_times(&mut stream, rate, horizon);

    // unit variance per trading day
    let var_per_minute = 1.0 / spec.minutes_per_day;
    let rho = spec.true_correlation;
    let ortho = (1.0 - rho * rho).sqrt();
    let (mut x, mut y, mut now) = (0.0, 0.0, 0.0);
    let mut a = TradedPath {
        values: Vec::with_capacity(times_a.len()),
        times: times_a,
    };
    let mut b = TradedPath {
        values: Vec::with_capacity(times_b.len()),
        times: times_b,
    };
    let (mut ia, mut ib) = (0, 0);
    while ia < a.times.len() || ib < b.times.len() {
        let next_a = a.times.get(ia).copied().unwrap_or(f64::INFINITY);
        let next_b = b.times.get(ib).copied().unwrap_or(f64::INFINITY);
        let t = next_a.min(next_b);
        let scale = ((t - now) * var_per_minute).sqrt();
        let (z1, z2) = (stream.normal(), stream.normal());
        x += scale * z1;
        y += scale * (rho * z1 + ortho * z2);
        now = t;
        if next_a <= next_b {
            a.values.push(x);
            ia += 1;
        }
        if next_b <= next_a {
            b.values.push(y);
            ib += 1;
        }
    }
    (a, b)
}

/// Correlation of previous-tick sampled returns for every sampling interval.
pub fn epps_experiment(spec: &AsyncTradeSpec) -> Result<Vec<EppsPoint>> {
    spec.validate()?;
    let (a, b) = simulate_pair(spec);
    let horizon = spec.horizon_minutes();
    spec.sampling_intervals
        .iter()
        .map(|&interval| {
            let count = (horizon / interval).floor() as usize;
            if count < MIN_EPPS_SAMPLES {
                return Ok(EppsPoint {
                    interval,
                    measured: None,
                    samples: count,
                });
            }
            let sample = |path: &TradedPath| -> Vec<f64> {
                let levels: Vec<f64> = (0..=count).map(|k| path.previous_tick(k as f64 * interval)).collect();
                levels.windows(2).map(|w| w[1] - w[0]).collect()
            };
            let measured = pearson(&sample(&a), &sample(&b))?;
            Ok(EppsPoint {
                interval,
                measured,
                samples: count,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_reproducible_and_in_range() {
        let mut a = Stream::new(7);
        let mut b = Stream::new(7);
        for _ in 0..1000 {
            let u = a.uniform();
            assert!(u > 0.0 && u < 1.0);
            assert_eq!(u.to_bits(), b.uniform().to_bits());
        }
        let z: Vec<f64> = (0..20000).map(|_| a.normal()).collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 0.03, "{mean}");
        assert!((var - 1.0).abs() < 0.04, "{var}");
    }

    #[test]
    fn factorization_of_degenerate_and_invalid_matrices() {
        let l = semidefinite_cholesky(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(l, vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        let c = vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]];
        assert!(matches!(semidefinite_cholesky(&c), Err(Error::NotPositiveSemiDefinite { .. })));
        let c = vec![vec![1.0, 0.3, 0.2], vec![0.3, 1.0, 0.5], vec![0.2, 0.5, 1.0]];
        let l = semidefinite_cholesky(&c).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - c[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn perfectly_correlated_pair() {
        let spec = MarketSpec::uniform(MarketSpec::numbered_tickers(2), 1.0, 0.01, 500, 3);
        let m = generate_panel(&spec).unwrap();
        assert_eq!(pearson(m.returns.row(0), m.returns.row(1)).unwrap(), Some(1.0));
        assert_eq!(m.prices.n_days(), 500);
        assert_eq!(m.returns.len(), 499);
    }

    #[test]
    fn prices_start_near_base_and_returns_match_prices() {
        let spec = MarketSpec::uniform(MarketSpec::numbered_tickers(3), 0.2, 0.02, 50, 11);
        let m = generate_panel(&spec).unwrap();
        for row in &m.prices.closes {
            assert!((row[0] / BASE_PRICE).ln().abs() < 0.2);
        }
        assert_eq!(m.returns, log_returns(&m.prices).unwrap());
    }

    #[test]
    fn spec_validation() {
        let good = MarketSpec::uniform(MarketSpec::numbered_tickers(2), 0.5, 0.01, 10, 0);
        let mut bad = good.clone();
        bad.daily_volatility[0] = 0.0;
        assert!(generate_panel(&bad).is_err());
        let mut bad = good.clone();
        bad.target_correlation[0][1] = 0.4;
        assert!(generate_panel(&bad).is_err());
        let mut bad = good.clone();
        bad.length = 1;
        assert!(generate_panel(&bad).is_err());
        let three = MarketSpec::uniform(MarketSpec::numbered_tickers(3), 0.0, 0.01, 10, 0)
            .with_pair(0, 1, 0.9)
            .with_pair(1, 2, 0.9)
            .with_pair(0, 2, -0.9);
        assert!(matches!(generate_panel(&three), Err(Error::NotPositiveSemiDefinite { .. })));
    }

    #[test]
    fn regime_splice_edge_cases() {
        let tickers = MarketSpec::numbered_tickers(2);
        let a = MarketSpec::uniform(tickers.clone(), 0.9, 0.01, 0, 5);
        let b = MarketSpec::uniform(tickers.clone(), -0.9, 0.01, 40, 6);
        assert_eq!(regime_panel(&a, &b).unwrap(), generate_panel(&b).unwrap());

        let half = MarketSpec::uniform(tickers.clone(), 0.3, 0.01, 30, 9);
        let mut whole = half.clone();
        whole.length = 60;
        assert_eq!(regime_panel(&half, &half).unwrap(), generate_panel(&whole).unwrap());

        let other = MarketSpec::uniform(MarketSpec::numbered_tickers(3), 0.3, 0.01, 30, 9);
        assert!(regime_panel(&half, &other).is_err());
    }

    #[test]
    fn epps_spec_validation() {
        let mut s = AsyncTradeSpec::default();
        assert!(s.validate().is_ok());
        s.horizon_days = 0.5;
        assert!(s.validate().is_err());
        let s = AsyncTradeSpec {
            trade_intensity: 0.0,
            ..AsyncTradeSpec::default()
        };
        assert!(s.validate().is_err());
        let s = AsyncTradeSpec {
            true_correlation: 1.0,
            ..AsyncTradeSpec::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn too_few_samples_are_undefined() {
        let s = AsyncTradeSpec {
            horizon_days: 50.0,
            sampling_intervals: vec![10.0, 390.0],
            ..AsyncTradeSpec::default()
        };
        let pts = epps_experiment(&s).unwrap();
        assert!(pts[0].measured.is_some());
        assert_eq!(pts[1].measured, None);
        assert_eq!(pts[1].samples, 50);
    }
}

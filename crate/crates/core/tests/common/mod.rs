//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use corrlife::corr::CorrelationLevel;
use corrlife::synth::Stream;

/// Pearson coefficient straight from temporal averages:
/// `(<xy> - <x><y>) / sqrt((<x^2> - <x>^2)(<y^2> - <y>^2))`.
pub fn pearson_raw_moments(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mean = |v: &mut dyn Iterator<Item = f64>| v.sum::<f64>() / m;
    let ex = mean(&mut x.iter().copied());
    let ey = mean(&mut y.iter().copied());
    let exy = mean(&mut x.iter().zip(y).map(|(a, b)| a * b));
    let exx = mean(&mut x.iter().map(|a| a * a));
    let eyy = mean(&mut y.iter().map(|b| b * b));
    (exy - ex * ey) / ((exx - ex * ex) * (eyy - ey * ey)).sqrt()
}

/// Every maximal constant segment `[a, b]` of `level`, by exhaustive search
/// over all segments.
pub fn brute_force_runs(levels: &[CorrelationLevel], level: CorrelationLevel) -> Vec<(usize, usize)> {
    let n = levels.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a..n {
            let inside = levels[a..=b].iter().all(|&l| l == level);
            let left_closed = a == 0 || levels[a - 1] != level;
            let right_closed = b + 1 == n || levels[b + 1] != level;
            if inside && left_closed && right_closed {
                out.push((a, b));
            }
        }
    }
    out
}

/// Decodes a Pruefer sequence into the edge list of a labeled tree on
/// `seq.len() + 2` nodes.
pub fn pruefer_decode(seq: &[usize]) -> Vec<(usize, usize)> {
    let n = seq.len() + 2;
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&k| degree[k] == 1).expect("a leaf exists");
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&k| degree[k] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Minimum total weight over all `n^(n-2)` labeled spanning trees, plus the
/// number of trees visited.
pub fn exhaustive_min_spanning_weight(weight: &[Vec<f64>]) -> (f64, usize) {
    let n = weight.len();
    assert!(n >= 2);
    if n == 2 {
        return (weight[0][1], 1);
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut best = f64::INFINITY;
    let mut visited = 0;
    loop {
        let w: f64 = pruefer_decode(&seq).iter().map(|&(i, j)| weight[i][j]).sum();
        best = best.min(w);
        visited += 1;
        // odometer increment
        let mut k = 0;
        loop {
            if k == len {
                return (best, visited);
            }
            seq[k] += 1;
            if seq[k] < n {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
    }
}

/// `n` rows of `t` i.i.d. normal returns scaled by `scale`.
pub fn random_rows(stream: &mut Stream, n: usize, t: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..t).map(|_| scale * stream.normal()).collect()).collect()
}

/// Rows with a random one-factor structure so correlations span a wide range.
pub fn random_factor_rows(stream: &mut Stream, n: usize, t: usize) -> Vec<Vec<f64>> {
    let loadings: Vec<f64> = (0..n).map(|_| 2.0 * stream.uniform() - 1.0).collect();
    let factor: Vec<f64> = (0..t).map(|_| stream.normal()).collect();
    loadings
        .iter()
        .map(|&b| factor.iter().map(|f| b * f + 0.5 * stream.normal()).collect())
        .collect()
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("T{k}")).collect()
}

/// Coefficient of determination of the least-squares line through the
/// origin, measured against the centered total sum of squares.
pub fn r_squared_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let slope = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    (slope, 1.0 - ss_res / ss_tot)
}

/// Directory holding the bundled fixtures.
pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Runs synth, corr, lifetime, mst and epps on the bundled config, writing
/// everything into `out`.
pub fn run_fixture_pipeline(out: &std::path::Path) -> corrlife::Result<()> {
    use corrlife::config::{RunConfig, Settings};
    use corrlife::pipeline;

    let mut settings = Settings::from_file(&fixture_dir().join("pipeline.conf"))?;
    settings.set("out", out.to_str().expect("utf-8 path"))?;
    pipeline::run_synth(&RunConfig::from_settings(settings.clone())?)?;
    settings.set("data", out.join("prices.csv").to_str().expect("utf-8 path"))?;
    let cfg = RunConfig::from_settings(settings)?;
    pipeline::run_corr(&cfg)?;
    pipeline::run_lifetime(&cfg)?;
    pipeline::run_mst(&cfg)?;
    pipeline::run_epps(&cfg)?;
    Ok(())
}

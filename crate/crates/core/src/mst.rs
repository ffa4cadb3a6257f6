//! Minimum spanning trees over the correlation-distance graph, rolling trees
//! and the survival of tree edges across window positions.

use std::cmp::Ordering;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::corr::{distance, rolling_matrices, CorrelationMatrix, WindowSpec};
use crate::error::{Error, Result};
use crate::ingest::ReturnPanel;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeEdge {
    /// Always `i < j`.
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub window_end: Option<NaiveDate>,
    pub tickers: Vec<String>,
    /// `n - 1` edges sorted by `(i, j)`.
    pub edges: Vec<TreeEdge>,
}

impl SpanningTree {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.distance).sum()
    }

    /// Unordered pairs of the edge set, sorted.
    pub fn edge_keys(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }

    /// `n - 1` edges, connected and acyclic.
    pub fn is_spanning_tree(&self) -> bool {
        let n = self.tickers.len();
        if self.edges.len() + 1 != n {
            return false;
        }
        let mut uf = UnionFind::new(n);
        self.edges.iter().all(|e| e.i < n && e.j < n && uf.union(e.i, e.j))
    }

    /// One `ticker_i ticker_j distance` line per edge.
    pub fn write_edgelist<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.edges {
            writeln!(out, "{} {} {}", self.tickers[e.i], self.tickers[e.j], e.distance)
                .map_err(|err| Error::io("<edgelist>", err))?;
        }
        Ok(())
    }
}

/// Kruskal over the complete graph weighted by `sqrt(2 (1 - rho))`.
/// Equal weights are taken in lexicographic `(ticker_i, ticker_j)` order.
pub fn build_mst(matrix: &CorrelationMatrix) -> Result<SpanningTree> {
    let n = matrix.n();
    if n < 2 {
        return Err(Error::TooFewSeries(n));
    }
    let mut candidates = Vec::with_capacity(n * (n - 1) / 2);
    for (i, j, rho) in matrix.pairs() {
        let rho = rho.ok_or_else(|| Error::UndefinedCorrelation(matrix.tickers[i].clone(), matrix.tickers[j].clone()))?;
        candidates.push(TreeEdge {
            i,
            j,
            distance: distance(rho)?,
        });
    }
    let names = &matrix.tickers;
    let key = |e: &TreeEdge| {
        let (a, b) = (&names[e.i], &names[e.j]);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    };
    candidates.sort_by(|x, y| {
        x.distance
            .total_cmp(&y.distance)
            .then_with(|| key(x).cmp(&key(y)))
    });

    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for e in candidates {
        if uf.union(e.i, e.j) {
            edges.push(e);
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    edges.sort_by_key(|a| (a.i, a.j));
    Ok(SpanningTree {
        window_end: None,
        tickers: matrix.tickers.clone(),
        edges,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingTrees {
    pub window: WindowSpec,
    pub trees: Vec<SpanningTree>,
    /// Window end dates skipped because some pair had no defined correlation.
    pub skipped: Vec<NaiveDate>,
}

/// One tree per window position; windows with an undefined pair are skipped.
pub fn rolling_msts(panel: &ReturnPanel, window: WindowSpec) -> Result<RollingTrees> {
    let matrices = rolling_matrices(panel, window)?;
    let built: Vec<(NaiveDate, Option<SpanningTree>)> = matrices
        .into_par_iter()
        .map(|(end, m)| {
            if !m.undefined_pairs().is_empty() {
                return Ok((end, None));
            }
            let mut tree = build_mst(&m)?;
            tree.window_end = Some(end);
            Ok((end, Some(tree)))
        })
        .collect::<Result<_>>()?;
    let mut trees = Vec::with_capacity(built.len());
    let mut skipped = Vec::new();
    for (end, tree) in built {
        match tree {
            Some(t) => trees.push(t),
            None => skipped.push(end),
        }
    }
    if !skipped.is_empty() {
        log::warn!(
            "skipped {} of {} windows (width {}) with undefined correlations",
            skipped.len(),
            skipped.len() + trees.len(),
            window.width
        );
    }
    Ok(RollingTrees {
        window,
        trees,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalPoint {
    /// Trading days (window positions times step).
    pub lag: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub window_width: usize,
    pub step: usize,
    pub points: Vec<SurvivalPoint>,
    /// Smallest lag, in trading days, whose mean ratio is at most 1/2.
    pub half_life: Option<usize>,
}

impl SurvivalCurve {
    pub fn half_life_positions(&self) -> Option<usize> {
        self.half_life.map(|h| h / self.step)
    }

    /// `lag,ratio`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lag", "ratio"])?;
        for p in &self.points {
            w.write_record([p.lag.to_string(), p.ratio.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn shared_edges(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    let (mut x, mut y, mut n) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            Ordering::Less => x += 1,
            Ordering::Greater => y += 1,
            Ordering::Equal => {
                n += 1;
                x += 1;
                y += 1;
            }
        }
    }
    n
}

/// Mean fraction of edges of the tree at position `t0` still present at
/// `t0 + lag`, averaged over every valid `t0`, for every lag up to the
/// series length. Edges are compared as unordered ticker pairs.
pub fn survival_curve(trees: &[SpanningTree], window: WindowSpec) -> Result<SurvivalCurve> {
    survival_curve_up_to(trees, window, usize::MAX)
}

/// [`survival_curve`] restricted to lags of at most `max_lag_positions`.
pub fn survival_curve_up_to(trees: &[SpanningTree], window: WindowSpec, max_lag_positions: usize) -> Result<SurvivalCurve> {
    if trees.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: trees.len(),
        });
    }
    let tickers = &trees[0].tickers;
    if trees.iter().any(|t| &t.tickers != tickers) {
        return Err(Error::InvalidParameter("trees span different ticker sets".into()));
    }
    let edge_count = (tickers.len() - 1) as f64;
    let keys: Vec<Vec<(usize, usize)>> = trees.iter().map(SpanningTree::edge_keys).collect();
    let max_lag = (trees.len() - 1).min(max_lag_positions);

    let ratios: Vec<f64> = (0..=max_lag)
        .into_par_iter()
        .map(|lag| {
            let starts = keys.len() - lag;
            let shared: usize = (0..starts).map(|t0| shared_edges(&keys[t0], &keys[t0 + lag])).sum();
            shared as f64 / (starts as f64 * edge_count)
        })
        .collect();

    let points: Vec<SurvivalPoint> = ratios
        .iter()
        .enumerate()
        .map(|(lag, &ratio)| SurvivalPoint {
            lag: lag * window.step,
            ratio,
        })
        .collect();
    let half_life = points.iter().skip(1).find(|p| p.ratio <= 0.5).map(|p| p.lag);
    Ok(SurvivalCurve {
        window_width: window.width,
        step: window.step,
        points,
        half_life,
    })
}

/// `window_end,ticker_i,ticker_j,distance`
pub fn write_edges_csv<W: Write>(out: W, trees: &[SpanningTree]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_end", "ticker_i", "ticker_j", "distance"])?;
    for t in trees {
        let end = t.window_end.map_or_else(|| "NA".to_string(), |d| d.to_string());
        for e in &t.edges {
            w.write_record([
                end.as_str(),
                t.tickers[e.i].as_str(),
                t.tickers[e.j].as_str(),
                e.distance.to_string().as_str(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix_from_distances(names: &[&str], d: &[(usize, usize, f64)]) -> CorrelationMatrix {
        let n = names.len();
        let mut rho = vec![vec![Some(0.0); n]; n];
        for (k, row) in rho.iter_mut().enumerate() {
            row[k] = Some(1.0);
        }
        for &(i, j, dist) in d {
            let r = 1.0 - dist * dist / 2.0;
            rho[i][j] = Some(r);
            rho[j][i] = Some(r);
        }
        CorrelationMatrix::new(names.iter().map(|s| s.to_string()).collect(), rho).unwrap()
    }

    fn tree(keys: &[(usize, usize)], n: usize) -> SpanningTree {
        SpanningTree {
            window_end: None,
            tickers: (0..n).map(|k| format!("T{k}")).collect(),
            edges: keys.iter().map(|&(i, j)| TreeEdge { i, j, distance: 1.0 }).collect(),
        }
    }

    #[test]
    fn triangle_drops_heaviest_edge() {
        let m = matrix_from_distances(&["A", "B", "C"], &[(0, 1, 0.5), (1, 2, 0.7), (0, 2, 0.9)]);
        let t = build_mst(&m).unwrap();
        assert_eq!(t.edge_keys(), vec![(0, 1), (1, 2)]);
        assert!(t.is_spanning_tree());
    }

    #[test]
    fn two_tickers_single_edge() {
        let m = matrix_from_distances(&["A", "B"], &[(0, 1, 1.2)]);
        let t = build_mst(&m).unwrap();
        assert_eq!(t.edges.len(), 1);
        assert!((t.edges[0].distance - 1.2).abs() < 1e-12);
    }

    #[test]
    fn ties_break_lexicographically_by_ticker() {
        // all distances equal: Kruskal takes (A,B), (A,C), (A,D) in name order
        let m = matrix_from_distances(&["D", "C", "B", "A"], &[]);
        let t = build_mst(&m).unwrap();
        let mut names: Vec<(String, String)> = t
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (t.tickers[e.i].clone(), t.tickers[e.j].clone());
                if a < b { (a, b) } else { (b, a) }
            })
            .collect();
        names.sort();
        let want: Vec<(String, String)> = [("A", "B"), ("A", "C"), ("A", "D")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(names, want);
    }

    #[test]
    fn undefined_entry_is_an_error() {
        let m = CorrelationMatrix::new(
            vec!["A".into(), "B".into()],
            vec![vec![Some(1.0), None], vec![None, Some(1.0)]],
        )
        .unwrap();
        assert!(matches!(build_mst(&m), Err(Error::UndefinedCorrelation(..))));
    }

    #[test]
    fn survival_of_identical_trees() {
        let trees = vec![tree(&[(0, 1), (1, 2)], 3); 5];
        let c = survival_curve(&trees, WindowSpec { width: 10, step: 2 }).unwrap();
        assert!(c.points.iter().all(|p| p.ratio == 1.0));
        assert_eq!(c.points.last().unwrap().lag, 8);
        assert_eq!(c.half_life, None);
    }

    #[test]
    fn survival_of_disjoint_trees() {
        // two edge-disjoint spanning trees of K4, alternating
        let a = tree(&[(0, 1), (1, 2), (2, 3)], 4);
        let b = tree(&[(0, 2), (0, 3), (1, 3)], 4);
        let c = survival_curve(&[a, b], WindowSpec { width: 3, step: 1 }).unwrap();
        assert_eq!(c.points[0].ratio, 1.0);
        assert_eq!(c.points[1].ratio, 0.0);
        assert_eq!(c.half_life, Some(1));
        assert_eq!(c.half_life_positions(), Some(1));
    }

    #[test]
    fn stars_on_different_centres_share_one_edge() {
        let stars: Vec<SpanningTree> = (0..5)
            .map(|c| {
                let keys: Vec<(usize, usize)> = (0..5).filter(|&k| k != c).map(|k| (c.min(k), c.max(k))).collect();
                tree(&keys, 5)
            })
            .collect();
        let c = survival_curve(&stars, WindowSpec { width: 3, step: 1 }).unwrap();
        assert!(c.points[1..].iter().all(|p| (p.ratio - 0.25).abs() < 1e-15));
        assert_eq!(c.half_life, Some(1));
    }

    #[test]
    fn survival_needs_two_trees() {
        assert!(survival_curve(&[tree(&[(0, 1)], 2)], WindowSpec { width: 2, step: 1 }).is_err());
    }

    #[test]
    fn edge_exports() {
        let m = matrix_from_distances(&["A", "B", "C"], &[(0, 1, 0.5), (1, 2, 0.75), (0, 2, 1.0)]);
        let mut t = build_mst(&m).unwrap();
        let mut buf = Vec::new();
        t.write_edgelist(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "A B 0.5\nB C 0.75\n");
        t.window_end = NaiveDate::from_ymd_opt(2020, 1, 2);
        let mut buf = Vec::new();
        write_edges_csv(&mut buf, &[t]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "window_end,ticker_i,ticker_j,distance\n2020-01-02,A,B,0.5\n2020-01-02,B,C,0.75\n"
        );
    }
}

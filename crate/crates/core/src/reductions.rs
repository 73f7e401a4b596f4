//! Turning other problems and raw data into clique partitioning instances.

use std::io::Read;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Partition, WeightedGraph};
use crate::scalar::Scalar;

/// Row sums of the symmetric matrix with self-loops counted twice, and
/// their total.
fn modularity_degrees<S: Scalar>(g: &WeightedGraph<S>) -> Result<(Vec<S>, S)> {
    let n = g.node_count();
    let mut d = vec![S::zero(); n];
    for (i, j, w) in g.edges() {
        if w < S::zero() {
            return Err(Error::InvalidInput(format!("negative weight {w} on ({i}, {j})")));
        }
        if i == j {
            d[i] = d[i] + w + w;
        } else {
            d[i] = d[i] + w;
            d[j] = d[j] + w;
        }
    }
    let total: S = d.iter().copied().sum();
    if total <= S::zero() {
        return Err(Error::InvalidInput("graph has zero total weight".into()));
    }
    Ok((d, total))
}

/// Modularity matrix entry for the ordered pair `(i, j)`.
fn modularity_entry<S: Scalar>(g: &WeightedGraph<S>, d: &[S], total: S, gamma: S, i: usize, j: usize) -> S {
    let a = if i == j { g.self_loop(i) + g.self_loop(i) } else { g.weight(i, j) };
    a - gamma * d[i] * d[j] / total
}

/// Graph whose partition weights equal modularity times total weight:
/// pair `(i, j)` gets `2·b_ij` and node `i` a loop of `b_ii`.
pub fn modularity_to_cp<S: Scalar>(g: &WeightedGraph<S>, gamma: S) -> Result<WeightedGraph<S>> {
    let (d, total) = modularity_degrees(g)?;
    let n = g.node_count();
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, i, modularity_entry(g, &d, total, gamma, i, i)));
        for j in i + 1..n {
            let b = modularity_entry(g, &d, total, gamma, i, j);
            edges.push((i, j, b + b));
        }
    }
    let out = WeightedGraph::from_summed_edges(n, edges);
    Ok(match g.labels() {
        Some(l) => out.with_labels(l.to_vec()),
        None => out,
    })
}

/// Modularity of `p`, summing over ordered node pairs.
pub fn modularity<S: Scalar>(g: &WeightedGraph<S>, p: &Partition, gamma: S) -> Result<S> {
    let (d, total) = modularity_degrees(g)?;
    let n = g.node_count();
    if p.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: p.len() });
    }
    let mut q = S::zero();
    for i in 0..n {
        for j in 0..n {
            if p.same_cluster(i, j) {
                q = q + modularity_entry(g, &d, total, gamma, i, j);
            }
        }
    }
    Ok(q / total)
}

/// Objects described by categorical attributes; `None` marks a missing cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeMatrix {
    pub labels: Option<Vec<String>>,
    pub cells: Vec<Vec<Option<String>>>,
}

impl AttributeMatrix {
    pub fn new(cells: Vec<Vec<Option<String>>>) -> Result<Self> {
        if cells.len() < 2 {
            return Err(Error::InvalidInput("need at least two objects".into()));
        }
        let q = cells[0].len();
        if q == 0 {
            return Err(Error::InvalidInput("need at least one attribute".into()));
        }
        if let Some(row) = cells.iter().find(|r| r.len() != q) {
            return Err(Error::LengthMismatch { expected: q, got: row.len() });
        }
        Ok(Self { labels: None, cells })
    }

    /// Reads comma-separated categorical tokens, one object per row. Empty
    /// cells and `?` are missing. With `label_column`, the first column
    /// names the object instead of being an attribute.
    pub fn from_csv<R: Read>(reader: R, has_header: bool, label_column: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(has_header).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let mut cells = Vec::new();
        let mut labels = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut fields = rec.iter();
            if label_column {
                labels.push(fields.next().unwrap_or_default().to_string());
            }
            cells.push(fields.map(|f| (!f.is_empty() && f != "?").then(|| f.to_string())).collect());
        }
        let mut m = Self::new(cells)?;
        if label_column {
            m.labels = Some(labels);
        }
        Ok(m)
    }

    pub fn object_count(&self) -> usize {
        self.cells.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.cells[0].len()
    }
}

/// Agreement graph: `w_ij = 2·(attributes where i and j agree) - q`; pairs
/// agreeing on exactly half are left without an edge.
pub fn abr_to_cp<S: Scalar>(a: &AttributeMatrix) -> Result<WeightedGraph<S>> {
    for (r, row) in a.cells.iter().enumerate() {
        if let Some(c) = row.iter().position(Option::is_none) {
            return Err(Error::Unsupported(format!("missing value at object {r}, attribute {c}")));
        }
    }
    let z = a.object_count();
    let q = a.attribute_count() as i64;
    let mut edges = Vec::new();
    for i in 0..z {
        for j in i + 1..z {
            let agree = a.cells[i].iter().zip(&a.cells[j]).filter(|(x, y)| x == y).count() as i64;
            let w = 2 * agree - q;
            if w != 0 {
                edges.push((i, j, S::of(w as f64)));
            }
        }
    }
    let g = WeightedGraph::from_edges(z, edges)?;
    Ok(match &a.labels {
        Some(l) => g.with_labels(l.clone()),
        None => g,
    })
}

/// Asset returns, one row per period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnsMatrix {
    pub assets: Vec<String>,
    pub periods: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ReturnsMatrix {
    pub fn new(assets: Vec<String>, periods: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidInput(format!("need at least 3 periods, got {}", values.len())));
        }
        if periods.len() != values.len() {
            return Err(Error::LengthMismatch { expected: values.len(), got: periods.len() });
        }
        if let Some(row) = values.iter().find(|r| r.len() != assets.len()) {
            return Err(Error::LengthMismatch { expected: assets.len(), got: row.len() });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = assets.iter().find(|a| !seen.insert(a.as_str())) {
            return Err(Error::InvalidInput(format!("duplicate asset id {dup}")));
        }
        Ok(Self { assets, periods, values })
    }

    /// CSV with a header of asset ids and the period label in the first
    /// column.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let assets: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut periods = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut fields = rec.iter();
            periods.push(fields.next().unwrap_or_default().to_string());
            let row = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|e| Error::Parse { line: line + 2, msg: format!("bad return {f:?}: {e}") })
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Self::new(assets, periods, values)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }
}

/// Pearson correlation; `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Largest transformed magnitude, used for perfectly correlated pairs.
pub fn z_cap() -> f64 {
    (1.0 - 1e-12f64).atanh()
}

/// Fisher transform `0.5·ln((1 + r) / (1 - r))`, clamped to `±z_cap()`.
pub fn fisher_z(r: f64) -> f64 {
    let cap = z_cap();
    if r >= 1.0 {
        cap
    } else if r <= -1.0 {
        -cap
    } else {
        r.atanh().clamp(-cap, cap)
    }
}

#[derive(Clone, Debug)]
pub struct PortfolioGraph<S> {
    pub graph: WeightedGraph<S>,
    /// Column of the returns matrix behind each graph node.
    pub id_map: Vec<usize>,
}

/// Correlation network keeping only pairs whose Fisher-transformed
/// correlation lies more than two (population) standard deviations from
/// the mean. Edges carry the raw correlation; isolated assets are dropped.
pub fn fisher_portfolio_graph<S: Scalar>(r: &ReturnsMatrix) -> Result<PortfolioGraph<S>> {
    let k = r.assets.len();
    let cols: Vec<Vec<f64>> = (0..k).map(|j| r.column(j)).collect();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let rho = pearson(&cols[i], &cols[j])
                .ok_or_else(|| Error::InvalidInput(format!("asset {} or {} has zero variance", r.assets[i], r.assets[j])))?;
            pairs.push((i, j, rho, fisher_z(rho)));
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("need at least two assets".into()));
    }
    let m = pairs.len() as f64;
    let mean = pairs.iter().map(|p| p.3).sum::<f64>() / m;
    let sd = (pairs.iter().map(|p| (p.3 - mean).powi(2)).sum::<f64>() / m).sqrt();
    let kept: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .filter(|p| (p.3 - mean).abs() > 2.0 * sd && p.2 != 0.0)
        .map(|(i, j, rho, _)| (i, j, rho))
        .collect();
    let mut used = vec![false; k];
    for &(i, j, _) in &kept {
        used[i] = true;
        used[j] = true;
    }
    let id_map: Vec<usize> = (0..k).filter(|&v| used[v]).collect();
    let mut local = vec![usize::MAX; k];
    for (new, &old) in id_map.iter().enumerate() {
        local[old] = new;
    }
    let graph = WeightedGraph::from_edges(id_map.len(), kept.into_iter().map(|(i, j, w)| (local[i], local[j], S::of(w))))?
        .with_labels(id_map.iter().map(|&v| r.assets[v].clone()).collect());
    Ok(PortfolioGraph { graph, id_map })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaParams {
    pub nodes: (usize, usize),
    pub attach: (usize, usize),
    pub weights: (i64, i64),
}

impl Default for BaParams {
    fn default() -> Self {
        Self { nodes: (100, 150), attach: (3, 6), weights: (-10, 10) }
    }
}

/// Preferential-attachment graph grown from a clique, with nonzero integer
/// weights drawn uniformly from the weight range.
pub fn gen_ba_weighted<S: Scalar>(params: BaParams, seed: u64) -> Result<WeightedGraph<S>> {
    let (nl, nh) = params.nodes;
    let (al, ah) = params.attach;
    let (wl, wh) = params.weights;
    if nl > nh || al > ah || al == 0 || wl > wh || (wl == 0 && wh == 0) {
        return Err(Error::InvalidInput(format!("bad generator ranges {params:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(nl..=nh);
    let m = rng.gen_range(al..=ah);
    if n < m + 1 {
        return Err(Error::InvalidInput(format!("{n} nodes cannot host attachment {m}")));
    }
    let weight = |rng: &mut ChaCha8Rng| loop {
        let w = rng.gen_range(wl..=wh);
        if w != 0 {
            return S::of(w as f64);
        }
    };
    let mut edges = Vec::new();
    // Every endpoint occurrence, so sampling from it is degree-proportional.
    let mut ends = Vec::new();
    for i in 0..=m {
        for j in i + 1..=m {
            edges.push((i, j, weight(&mut rng)));
            ends.extend([i, j]);
        }
    }
    for v in m + 1..n {
        let mut targets = Vec::with_capacity(m);
        while targets.len() < m {
            let t = *ends.choose(&mut rng).expect("core is nonempty");
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push((t, v, weight(&mut rng)));
            ends.extend([t, v]);
        }
    }
    WeightedGraph::from_edges(n, edges)
}

/// Complete graph weighted by correlations between the columns of a
/// `rows × n` matrix of uniform random entries.
pub fn gen_correlation_instance<S: Scalar>(n: usize, rows: usize, seed: u64) -> Result<WeightedGraph<S>> {
    if rows < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 rows, got {rows}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<Vec<f64>> = (0..rows).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| data.iter().map(|r| r[j]).collect()).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let r = pearson(&cols[i], &cols[j]).unwrap_or(0.0);
            if r != 0.0 {
                edges.push((i, j, S::of(r)));
            }
        }
    }
    WeightedGraph::from_edges(n, edges)
}

/// Complete ±1 graph where each pair is negative with probability
/// `neg_fraction`.
pub fn gen_clusedit_instance<S: Scalar>(n: usize, neg_fraction: f64, seed: u64) -> Result<WeightedGraph<S>> {
    if !(neg_fraction > 0.0 && neg_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("negative fraction {neg_fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = if rng.gen_bool(neg_fraction) { -1.0 } else { 1.0 };
            edges.push((i, j, S::of(w)));
        }
    }
    WeightedGraph::from_edges(n, edges)
}

//! Text formats for weighted graphs.
//!
//! * Edge list: header `n m`, then `m` lines `i j w`.
//! * Lower triangle: header `n`, then `n - 1` lines where line `r` (node `r`,
//!   1-based) holds `w_r0 .. w_r(r-1)`; zero cells mean "no edge".
//!
//! Blank lines and lines starting with `#` or `%` are ignored.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFormat {
    #[default]
    Auto,
    EdgeList,
    LowerTriangle,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "edge-list" | "edgelist" | "edges" => Ok(Self::EdgeList),
            "lower-triangle" | "triangle" | "matrix" => Ok(Self::LowerTriangle),
            other => Err(Error::InvalidInput(format!("unknown graph format '{other}'"))),
        }
    }
}

/// A parsed graph plus any non-fatal notes (for example id remapping).
#[derive(Clone, Debug)]
pub struct LoadedGraph<S> {
    pub graph: WeightedGraph<S>,
    pub warnings: Vec<String>,
}

pub fn load_graph<S: Scalar>(path: impl AsRef<Path>, format: GraphFormat) -> Result<LoadedGraph<S>> {
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text, format)
}

pub fn parse_graph<S: Scalar>(text: &str, format: GraphFormat) -> Result<LoadedGraph<S>> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty input".into() })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let format = match format {
        GraphFormat::Auto => match tokens.len() {
            2 => GraphFormat::EdgeList,
            1 => GraphFormat::LowerTriangle,
            k => {
                return Err(Error::Parse {
                    line: header_line,
                    msg: format!("cannot detect format from a {k}-token header"),
                })
            }
        },
        f => f,
    };
    match format {
        GraphFormat::EdgeList => parse_edge_list(header_line, &tokens, lines),
        GraphFormat::LowerTriangle => parse_lower_triangle(header_line, &tokens, lines),
        GraphFormat::Auto => unreachable!(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, l)| {
        let t = l.trim();
        (!t.is_empty() && !t.starts_with('#') && !t.starts_with('%')).then_some((k + 1, t))
    })
}

fn parse_num<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::Parse { line, msg: format!("invalid {what} '{tok}'") })
}

fn parse_weight<S: Scalar>(tok: &str, line: usize) -> Result<S> {
    let w: f64 = parse_num(tok, line, "weight")?;
    if !w.is_finite() {
        return Err(Error::Parse { line, msg: format!("non-finite weight '{tok}'") });
    }
    Ok(S::of(w))
}

fn parse_edge_list<'a, S: Scalar>(
    header_line: usize,
    header: &[&str],
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<LoadedGraph<S>> {
    if header.len() != 2 {
        return Err(Error::Parse { line: header_line, msg: "expected header 'n m'".into() });
    }
    let n: usize = parse_num(header[0], header_line, "node count")?;
    let m: usize = parse_num(header[1], header_line, "edge count")?;
    if n == 0 {
        return Err(Error::Parse { line: header_line, msg: "graph needs at least one node".into() });
    }

    let mut raw = Vec::with_capacity(m);
    let mut seen = HashSet::new();
    for (line, text) in lines {
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse { line, msg: "expected 'i j w'".into() });
        }
        let i: i64 = parse_num(toks[0], line, "node id")?;
        let j: i64 = parse_num(toks[1], line, "node id")?;
        let w: S = parse_weight(toks[2], line)?;
        if w == S::zero() {
            return Err(Error::Parse { line, msg: format!("edge ({i}, {j}) has zero weight") });
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(Error::DuplicateEdge(i.to_string(), j.to_string()));
        }
        raw.push((i, j, w));
    }
    if raw.len() != m {
        return Err(Error::Parse {
            line: header_line,
            msg: format!("header declares {m} edges but {} were read", raw.len()),
        });
    }

    let ids: BTreeSet<i64> = raw.iter().flat_map(|&(i, j, _)| [i, j]).collect();
    let mut warnings = Vec::new();
    let in_range = |v: i64| v >= 0 && (v as usize) < n;
    let (edges, labels): (Vec<_>, Option<Vec<String>>) = if ids.iter().all(|&v| in_range(v)) {
        let edges = raw.iter().map(|&(i, j, w)| (i as usize, j as usize, w)).collect();
        (edges, None)
    } else if ids.iter().all(|&v| v >= 1 && v as usize <= n) {
        warnings.push("node ids look 1-based; shifted to 0-based".to_string());
        let edges = raw.iter().map(|&(i, j, w)| (i as usize - 1, j as usize - 1, w)).collect();
        let labels = (1..=n).map(|v| v.to_string()).collect();
        (edges, Some(labels))
    } else {
        if ids.len() > n {
            return Err(Error::Parse {
                line: header_line,
                msg: format!("{} distinct node ids exceed declared n = {n}", ids.len()),
            });
        }
        warnings.push(format!("non-contiguous node ids remapped onto 0..{}", n - 1));
        let order: Vec<i64> = ids.into_iter().collect();
        let index = |v: i64| order.binary_search(&v).expect("id collected above");
        let edges = raw.iter().map(|&(i, j, w)| (index(i), index(j), w)).collect();
        let mut labels: Vec<String> = order.iter().map(|v| v.to_string()).collect();
        let mut pad = 0;
        while labels.len() < n {
            labels.push(format!("_isolated{pad}"));
            pad += 1;
        }
        (edges, Some(labels))
    };

    let mut graph = WeightedGraph::from_edges(n, edges)?;
    if let Some(labels) = labels {
        graph = graph.with_labels(labels);
    }
    Ok(LoadedGraph { graph, warnings })
}

fn parse_lower_triangle<'a, S: Scalar>(
    header_line: usize,
    header: &[&str],
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<LoadedGraph<S>> {
    if header.len() != 1 {
        return Err(Error::Parse { line: header_line, msg: "expected header 'n'".into() });
    }
    let n: usize = parse_num(header[0], header_line, "node count")?;
    if n == 0 {
        return Err(Error::Parse { line: header_line, msg: "graph needs at least one node".into() });
    }
    let mut edges = Vec::new();
    let mut row = 1;
    for (line, text) in lines {
        if row >= n {
            return Err(Error::Parse { line, msg: "more rows than the header allows".into() });
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != row {
            return Err(Error::Parse {
                line,
                msg: format!("row for node {row} needs {row} entries, found {}", toks.len()),
            });
        }
        for (col, tok) in toks.iter().enumerate() {
            let w: S = parse_weight(tok, line)?;
            if w != S::zero() {
                edges.push((row, col, w));
            }
        }
        row += 1;
    }
    if row != n {
        return Err(Error::Parse {
            line: header_line,
            msg: format!("expected {} rows, found {}", n - 1, row - 1),
        });
    }
    Ok(LoadedGraph { graph: WeightedGraph::from_edges(n, edges)?, warnings: Vec::new() })
}

/// Serialises a graph in edge-list format (self-loops included).
pub fn to_edge_list<S: Scalar>(g: &WeightedGraph<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.node_count(), g.edge_count());
    for (i, j, w) in g.edges() {
        let _ = writeln!(out, "{i} {j} {}", w.as_f64());
    }
    out
}

pub fn write_edge_list<S: Scalar>(g: &WeightedGraph<S>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_edge_list(g))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_basic() {
        let g = parse_graph::<f64>("3 2\n0 1 1.5\n1 2 -2.0\n", GraphFormat::Auto).unwrap().graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight(0, 1), 1.5);
        assert_eq!(g.weight(1, 2), -2.0);
    }

    #[test]
    fn duplicate_pair_is_an_error() {
        let r = parse_graph::<f64>("2 2\n0 1 1.0\n1 0 2.0\n", GraphFormat::Auto);
        assert!(matches!(r, Err(Error::DuplicateEdge(..))));
    }

    #[test]
    fn lower_triangle_zero_means_absent() {
        let g = parse_graph::<f64>("3\n1\n0 -1\n", GraphFormat::Auto).unwrap().graph;
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 2), -1.0);
        assert_eq!(g.weight(0, 2), 0.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let r = parse_graph::<f64>("2 1\n# comment\n0 x 1.0\n", GraphFormat::Auto);
        match r {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let zero = parse_graph::<f64>("2 1\n0 1 0\n", GraphFormat::Auto);
        assert!(matches!(zero, Err(Error::Parse { line: 2, .. })));
        let count = parse_graph::<f64>("3 2\n0 1 1\n", GraphFormat::Auto);
        assert!(matches!(count, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn one_based_ids_are_shifted() {
        let loaded = parse_graph::<f64>("3 2\n1 2 1\n2 3 -1\n", GraphFormat::EdgeList).unwrap();
        assert_eq!(loaded.warnings.len(), 1);
        assert_eq!(loaded.graph.weight(0, 1), 1.0);
        assert_eq!(loaded.graph.label(2), "3");
    }

    #[test]
    fn sparse_ids_are_remapped() {
        let loaded = parse_graph::<f64>("3 2\n10 20 1\n20 30 -1\n", GraphFormat::EdgeList).unwrap();
        assert_eq!(loaded.warnings.len(), 1);
        assert_eq!(loaded.graph.label(0), "10");
        assert_eq!(loaded.graph.weight(1, 2), -1.0);
    }

    #[test]
    fn format_override() {
        assert_eq!("edge-list".parse::<GraphFormat>().unwrap(), GraphFormat::EdgeList);
        assert!("bogus".parse::<GraphFormat>().is_err());
        let r = parse_graph::<f64>("3\n1\n0 -1\n", GraphFormat::EdgeList);
        assert!(r.is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = WeightedGraph::<f64>::from_edges(4, [(0, 1, 0.1), (2, 2, -3.25), (1, 3, 7.0)])
            .unwrap();
        let back = parse_graph::<f64>(&to_edge_list(&g), GraphFormat::Auto).unwrap().graph;
        assert_eq!(back, g);
    }
}

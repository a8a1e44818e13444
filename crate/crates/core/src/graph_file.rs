//! `herdsim-graph v1` text format.
//!
//! ```text
//! herdsim-graph v1 <n> <directed|undirected>
//! <from> <to> [weight]
//! ```
//!
//! Indices are 0-based. Directed lines require a weight. Undirected files
//! either omit every weight (uniform `1/deg` influence) or give every edge a
//! symmetric raw weight. Blank lines and lines starting with `#` are ignored.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::g17;
use crate::graph::WeightedGraph;

pub const MAGIC: &str = "herdsim-graph";
pub const VERSION: &str = "v1";

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::GraphFormat { line, message: message.into() }
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| format_err(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != MAGIC || fields[1] != VERSION {
        return Err(format_err(hline, format!("expected `{MAGIC} {VERSION} <n> <directed|undirected>`")));
    }
    let n: usize = fields[2].parse().map_err(|_| format_err(hline, format!("bad agent count `{}`", fields[2])))?;
    let directed = match fields[3] {
        "directed" => true,
        "undirected" => false,
        other => return Err(format_err(hline, format!("unknown orientation `{other}`"))),
    };

    let mut edges = Vec::new();
    let mut weighted = None;
    for (line, text) in lines {
        let parts: Vec<&str> = text.split_whitespace().collect();
        let index = |s: &str| s.parse::<usize>().map_err(|_| format_err(line, format!("bad index `{s}`")));
        let (from, to, weight) = match parts.as_slice() {
            [a, b] => (index(a)?, index(b)?, None),
            [a, b, w] => {
                let w: f64 = w.parse().map_err(|_| format_err(line, format!("bad weight `{w}`")))?;
                (index(a)?, index(b)?, Some(w))
            }
            _ => return Err(format_err(line, "expected `from to [weight]`")),
        };
        if directed && weight.is_none() {
            return Err(format_err(line, "directed edges need a weight"));
        }
        match weighted {
            None => weighted = Some(weight.is_some()),
            Some(w) if w != weight.is_some() => {
                return Err(format_err(line, "either every edge has a weight or none does"))
            }
            _ => {}
        }
        edges.push((from, to, weight.unwrap_or(1.0)));
    }
    if directed {
        WeightedGraph::from_edges(n, &edges)
    } else {
        WeightedGraph::undirected_weighted(n, &edges)
    }
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    parse_graph(&std::fs::read_to_string(path)?)
}

/// Every nonzero weight of `g`, row-major, at 17 significant digits.
pub fn write_directed(g: &WeightedGraph) -> String {
    let mut out = format!("{MAGIC} {VERSION} {} directed\n", g.n());
    for (from, to, w) in g.entries() {
        out.push_str(&format!("{from} {to} {}\n", g17(w)));
    }
    out
}

/// Uniform-weight undirected edge list.
pub fn write_undirected(n: usize, edges: &[(usize, usize)]) -> String {
    let mut out = format!("{MAGIC} {VERSION} {n} undirected\n");
    for (a, b) in edges {
        out.push_str(&format!("{a} {b}\n"));
    }
    out
}

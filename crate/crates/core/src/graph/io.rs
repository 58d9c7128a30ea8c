//! Whitespace-separated edge lists.
//!
//! ```text
//! # comment
//! n=5
//! 0 1
//! 3 4
//! ```
//!
//! Indices are 0-based unless [`EdgeListOptions::one_based`] is set. The
//! optional `n=<count>` header must precede the first edge; without it the
//! node count is `max index + 1`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SparseGraph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default)]
pub struct EdgeListOptions {
    /// Indices in the file start at 1.
    pub one_based: bool,
    /// Node count override; takes precedence over an `n=` header.
    pub n: Option<usize>,
}

fn parse_index(tok: &str, line: usize, one_based: bool) -> Result<usize> {
    let v: i64 = tok
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("expected an integer node index, found {tok:?}") })?;
    let v = if one_based { v - 1 } else { v };
    if v < 0 {
        return Err(Error::Parse { line, message: format!("negative node index {tok}") });
    }
    Ok(v as usize)
}

pub fn parse_edge_list<R: Read>(reader: R, opts: EdgeListOptions) -> Result<SparseGraph> {
    let mut header_n = None;
    let mut edges = Vec::new();
    let mut max_index = None::<usize>;
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if let Some(rest) = text.strip_prefix("n=") {
            if header_n.is_some() || !edges.is_empty() {
                return Err(Error::Parse { line: line_no, message: "node-count header must appear once, before any edge".into() });
            }
            let n = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse { line: line_no, message: format!("invalid node count {rest:?}") })?;
            header_n = Some(n);
            continue;
        }
        let mut toks = text.split_whitespace();
        let (a, b) = match (toks.next(), toks.next(), toks.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse { line: line_no, message: format!("expected two node indices, found {text:?}") })
            }
        };
        let i = parse_index(a, line_no, opts.one_based)?;
        let j = parse_index(b, line_no, opts.one_based)?;
        max_index = Some(max_index.unwrap_or(0).max(i).max(j));
        edges.push((i, j));
    }
    let implied = max_index.map_or(0, |m| m + 1);
    let n = opts.n.or(header_n).unwrap_or(implied);
    if n < implied {
        return Err(Error::invalid(format!("node count {n} is smaller than max index + 1 = {implied}")));
    }
    SparseGraph::from_edges(n, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>, opts: EdgeListOptions) -> Result<SparseGraph> {
    parse_edge_list(File::open(path)?, opts)
}

/// Writes the `n=` header followed by each undirected edge once (`i < j`).
pub fn write_edge_list<W: Write>(graph: &SparseGraph, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "n={}", graph.n())?;
    for (i, j) in graph.edges() {
        writeln!(w, "{i} {j}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_edge_list(graph: &SparseGraph, path: impl AsRef<Path>) -> Result<()> {
    write_edge_list(graph, File::create(path)?)
}

//! Sparse binary graphs, the mixed-membership probability model, edge-list
//! ingestion and subsample extraction.

mod io;
mod model;
mod subsample;

pub use io::{load_edge_list, parse_edge_list, save_edge_list, write_edge_list, EdgeListOptions};
pub(crate) use model::dot as model_dot;
pub use model::{generate_mmsb, generate_mmsb_with_signature, perturbed_model, sample_adjacency, ProbabilityModel};
pub use subsample::{
    common_degree_filter, degree_filter, extract_blocks, inclusion_subsample, uniform_subsample,
    IndexMap, SubsampleIndex,
};

use crate::error::{Error, Result};
use crate::par;

/// Binary sparse matrix in compressed-row form. Column indices within a row
/// are strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBlock {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
}

impl SparseBlock {
    pub fn empty(rows: usize, cols: usize) -> Self {
        SparseBlock { rows, cols, offsets: vec![0; rows + 1], indices: Vec::new() }
    }

    /// Build from `(row, col)` pairs. Duplicates are merged.
    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(u32, u32)]) -> Self {
        let mut counts = vec![0usize; rows + 1];
        for &(r, _) in pairs {
            counts[r as usize + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut indices = vec![0u32; pairs.len()];
        for &(r, c) in pairs {
            let slot = &mut fill[r as usize];
            indices[*slot] = c;
            *slot += 1;
        }
        // sort + dedup each row, compacting in place
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        let mut write = 0;
        for i in 0..rows {
            let (lo, hi) = (counts[i], counts[i + 1]);
            indices[lo..hi].sort_unstable();
            let mut last = None;
            for k in lo..hi {
                let c = indices[k];
                if last != Some(c) {
                    indices[write] = c;
                    write += 1;
                    last = Some(c);
                }
            }
            offsets.push(write);
        }
        indices.truncate(write);
        SparseBlock { rows, cols, offsets, indices }
    }

    /// Build from per-row column lists that are already strictly increasing.
    pub(crate) fn from_sorted_rows(cols: usize, rows: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let total = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(total);
        for r in &rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            indices.extend_from_slice(r);
            offsets.push(indices.len());
        }
        SparseBlock { rows: rows.len(), cols, offsets, indices }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&(j as u32)).is_ok()
    }

    /// All stored `(row, col)` pairs in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j as usize)))
    }

    /// `y = self · x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        par::for_each_chunk_mut(y, ROW_CHUNK, |c, out| {
            let base = c * ROW_CHUNK;
            for (k, yi) in out.iter_mut().enumerate() {
                *yi = self.row(base + k).iter().map(|&j| x[j as usize]).sum();
            }
        });
    }

    /// Product with a dense row-major `cols × width` matrix, returned row-major.
    pub fn mul_dense(&self, rhs: &[f64], width: usize) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.cols * width);
        let mut out = vec![0.0; self.rows * width];
        if width == 0 {
            return out;
        }
        par::for_each_chunk_mut(&mut out, ROW_CHUNK * width, |c, chunk| {
            let base = c * ROW_CHUNK;
            for (k, orow) in chunk.chunks_mut(width).enumerate() {
                for &j in self.row(base + k) {
                    let src = &rhs[j as usize * width..(j as usize + 1) * width];
                    for (o, s) in orow.iter_mut().zip(src) {
                        *o += s;
                    }
                }
            }
        });
        out
    }

    pub fn transpose(&self) -> SparseBlock {
        let pairs: Vec<(u32, u32)> = self.entries().map(|(i, j)| (j as u32, i as u32)).collect();
        SparseBlock::from_pairs(self.cols, self.rows, &pairs)
    }
}

/// Rows processed per parallel work item.
pub(crate) const ROW_CHUNK: usize = 256;

/// Symmetric, hollow, binary adjacency matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseGraph {
    adj: SparseBlock,
}

impl SparseGraph {
    pub fn empty(n: usize) -> Self {
        SparseGraph { adj: SparseBlock::empty(n, n) }
    }

    /// Build from undirected edges. Self-loops and duplicates are dropped;
    /// every edge is stored in both directions.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::invalid(format!("node count {n} exceeds u32 range")));
        }
        let mut pairs = Vec::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i != j {
                pairs.push((i as u32, j as u32));
                pairs.push((j as u32, i as u32));
            }
        }
        Ok(SparseGraph { adj: SparseBlock::from_pairs(n, n, &pairs) })
    }

    /// Wrap a block the caller guarantees is square, symmetric and hollow.
    pub(crate) fn from_block_unchecked(adj: SparseBlock) -> Self {
        debug_assert_eq!(adj.rows, adj.cols);
        SparseGraph { adj }
    }

    /// Build from strictly-upper-triangular row lists (`j > i` in row `i`).
    pub(crate) fn from_upper_rows(n: usize, upper: &[Vec<u32>]) -> Self {
        let mut degree = vec![0usize; n];
        for (i, row) in upper.iter().enumerate() {
            degree[i] += row.len();
            for &j in row {
                degree[j as usize] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut indices = vec![0u32; offsets[n]];
        // lower entries first: row j receives i < j in increasing i order
        for (i, row) in upper.iter().enumerate() {
            for &j in row {
                let s = &mut fill[j as usize];
                indices[*s] = i as u32;
                *s += 1;
            }
        }
        for (i, row) in upper.iter().enumerate() {
            let s = fill[i];
            indices[s..s + row.len()].copy_from_slice(row);
            fill[i] += row.len();
        }
        SparseGraph { adj: SparseBlock { rows: n, cols: n, offsets, indices } }
    }

    pub fn n(&self) -> usize {
        self.adj.rows
    }

    pub fn num_edges(&self) -> usize {
        self.adj.nnz() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj.row(i).len()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        self.adj.row(i)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj.contains(i, j)
    }

    /// Undirected edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj.entries().filter(|&(i, j)| i < j)
    }

    pub fn as_block(&self) -> &SparseBlock {
        &self.adj
    }

    /// Full structural check of the symmetric/hollow invariants.
    pub fn check_invariants(&self) -> bool {
        (0..self.n()).all(|i| {
            let row = self.neighbors(i);
            row.windows(2).all(|w| w[0] < w[1])
                && row.iter().all(|&j| j as usize != i && self.has_edge(j as usize, i))
        })
    }
}

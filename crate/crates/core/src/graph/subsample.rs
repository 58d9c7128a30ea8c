use rand::seq::index;
use rand::Rng;

use super::{SparseBlock, SparseGraph};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// A vertex subsample `S` with its complement.
///
/// The stacked order is `S` ascending followed by `Sᶜ` ascending;
/// `position[v]` is the slot of original node `v` in that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsampleIndex {
    n: usize,
    sample: Vec<usize>,
    complement: Vec<usize>,
    position: Vec<usize>,
}

impl SubsampleIndex {
    /// Build from arbitrary distinct in-range indices.
    pub fn from_indices(n: usize, mut sample: Vec<usize>) -> Result<Self> {
        sample.sort_unstable();
        if sample.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("subsample indices are not distinct"));
        }
        if sample.last().is_some_and(|&v| v >= n) {
            return Err(Error::invalid(format!("subsample index out of range for n = {n}")));
        }
        let mut in_sample = vec![false; n];
        sample.iter().for_each(|&v| in_sample[v] = true);
        let complement: Vec<usize> = (0..n).filter(|&v| !in_sample[v]).collect();
        let mut position = vec![0; n];
        for (k, &v) in sample.iter().chain(&complement).enumerate() {
            position[v] = k;
        }
        Ok(SubsampleIndex { n, sample, complement, position })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.sample.len()
    }

    /// `S`, ascending.
    pub fn sample(&self) -> &[usize] {
        &self.sample
    }

    /// `Sᶜ`, ascending.
    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    /// Original node at each slot of the stacked `(S, Sᶜ)` order.
    pub fn stacked_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.sample.iter().chain(&self.complement).copied()
    }

    /// Slot of node `v` in the stacked order.
    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }

    pub fn contains(&self, v: usize) -> bool {
        self.position[v] < self.sample.len()
    }
}

/// `m` distinct nodes drawn uniformly without replacement.
pub fn uniform_subsample(n: usize, m: usize, seed: u64) -> Result<SubsampleIndex> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!("subsample size m = {m} outside [1, {n}]")));
    }
    let mut rng = rng::stream(seed, &[tag::SUBSAMPLE]);
    let picked = if m == n { (0..n).collect() } else { index::sample(&mut rng, n, m).into_vec() };
    SubsampleIndex::from_indices(n, picked)
}

/// Independent inclusion: every node is kept with probability `prob`.
/// The result may be empty.
pub fn inclusion_subsample(n: usize, prob: f64, seed: u64) -> Result<SubsampleIndex> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::invalid(format!("inclusion probability {prob} outside [0, 1]")));
    }
    let mut rng = rng::stream(seed, &[tag::INCLUSION]);
    let picked = (0..n).filter(|_| rng.random::<f64>() < prob).collect();
    SubsampleIndex::from_indices(n, picked)
}

/// Split `A` into the induced subgraph `A_S` (nodes relabelled by their
/// rank in `S`) and the cross block `A_{Sᶜ,S}` whose row `r` is node
/// `complement[r]` and column `c` is node `sample[c]`.
///
/// Only rows of sampled nodes are scanned, so the cost is `O(Σ_{v∈S} deg v + n)`.
pub fn extract_blocks(graph: &SparseGraph, s: &SubsampleIndex) -> Result<(SparseGraph, SparseBlock)> {
    if graph.n() != s.n() {
        return Err(Error::shape(format!("graph has {} nodes, subsample is over {}", graph.n(), s.n())));
    }
    let m = s.m();
    let mut inner = Vec::with_capacity(m);
    let mut cross_pairs = Vec::new();
    for (c, &v) in s.sample().iter().enumerate() {
        let mut row = Vec::new();
        for &u in graph.neighbors(v) {
            let pos = s.position(u as usize);
            if pos < m {
                row.push(pos as u32);
            } else {
                cross_pairs.push(((pos - m) as u32, c as u32));
            }
        }
        inner.push(row);
    }
    let sub = SparseGraph::from_block_unchecked(SparseBlock::from_sorted_rows(m, inner));
    let cross = SparseBlock::from_pairs(s.n() - m, m, &cross_pairs);
    Ok((sub, cross))
}

/// Relabelling produced by node filters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexMap {
    pub old_to_new: Vec<Option<usize>>,
    pub new_to_old: Vec<usize>,
}

impl IndexMap {
    fn from_keep(n: usize, keep: Vec<usize>) -> Self {
        let mut old_to_new = vec![None; n];
        for (new, &old) in keep.iter().enumerate() {
            old_to_new[old] = Some(new);
        }
        IndexMap { old_to_new, new_to_old: keep }
    }
}

fn induced(graph: &SparseGraph, map: &IndexMap) -> SparseGraph {
    let rows = map
        .new_to_old
        .iter()
        .map(|&old| {
            graph
                .neighbors(old)
                .iter()
                .filter_map(|&u| map.old_to_new[u as usize].map(|x| x as u32))
                .collect()
        })
        .collect();
    SparseGraph::from_block_unchecked(SparseBlock::from_sorted_rows(map.new_to_old.len(), rows))
}

/// Drop every node whose degree is below `min_degree`, in one pass over the
/// original degrees (not iterated to a core).
pub fn degree_filter(graph: &SparseGraph, min_degree: usize) -> (SparseGraph, IndexMap) {
    let keep = (0..graph.n()).filter(|&v| graph.degree(v) >= min_degree).collect();
    let map = IndexMap::from_keep(graph.n(), keep);
    (induced(graph, &map), map)
}

/// Keep nodes whose degree is at least `min_degree` in *both* graphs, then
/// restrict both graphs to that common node set. Graphs of different size
/// are compared over `max(n1, n2)` nodes, missing nodes having degree 0.
pub fn common_degree_filter(a: &SparseGraph, b: &SparseGraph, min_degree: usize) -> (SparseGraph, SparseGraph, IndexMap) {
    let n = a.n().max(b.n());
    let deg = |g: &SparseGraph, v: usize| if v < g.n() { g.degree(v) } else { 0 };
    let keep: Vec<usize> = (0..n).filter(|&v| deg(a, v) >= min_degree && deg(b, v) >= min_degree).collect();
    let map = IndexMap::from_keep(n, keep);
    let restrict = |g: &SparseGraph| {
        let local = IndexMap {
            old_to_new: map.old_to_new[..g.n()].to_vec(),
            new_to_old: map.new_to_old.clone(),
        };
        induced(g, &local)
    };
    (restrict(a), restrict(b), map)
}

//! Scalable estimation and two-sample testing for generalized random dot
//! product graphs (GRDPG) by predictive subsampling.
//!
//! The pipeline embeds a random induced subgraph with a signed adjacency
//! spectral embedding and extends the embedding to every remaining node
//! through its edges into the subsample. Probability-matrix estimates stay in
//! factorized form so that distances, pooling and Bernoulli resampling never
//! touch an `n × n` matrix.

pub mod error;
pub mod eval;
pub mod graph;
pub mod lowrank;
pub mod par;
pub mod predsub;
pub mod rng;
pub mod spectral;
pub mod testing;

pub use error::{Error, Result};
pub use graph::{ProbabilityModel, SparseBlock, SparseGraph, SubsampleIndex};
pub use lowrank::LowRankP;
pub use predsub::{predsub_estimate, PredSubResult};
pub use spectral::{ase, Embedding, SpectralPair};
pub use testing::{predsub_test, puresub_test, StatisticKind, TestReport};

/// Subsample size `⌈(log n)^(1 + a)⌉`, capped at `n`.
pub fn subsample_size(n: usize, a: f64) -> usize {
    if n <= 1 {
        return n;
    }
    let m = (n as f64).ln().powf(1.0 + a).ceil();
    if m >= n as f64 {
        n
    } else {
        (m as usize).max(1)
    }
}

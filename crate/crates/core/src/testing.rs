//! Two-sample tests of `H₀: P⁽¹⁾ = P⁽²⁾` by parametric bootstrap.
//!
//! Both tests draw one subsample `S`, estimate each probability matrix,
//! and compare the observed distance with distances between pairs of
//! graphs resampled from the pooled estimate. The PredSub test resamples
//! only the entries PredSub reads (the `S × S` block and the `Sᶜ × S`
//! block); the PureSub test works on the `m × m` subgraph alone.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{extract_blocks, uniform_subsample, SubsampleIndex};
use crate::lowrank::{frob_distance, pooled_average, sample_rectangular, sample_symmetric, two_inf_distance, LowRankP};
use crate::par;
use crate::predsub::{predsub_from_blocks, predsub_with_subsample, AdjacencySource};
use crate::rng::tag;
use crate::spectral::{ase_with_spectrum, EigsOptions, SymmetricOperator};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    #[default]
    Frobenius,
    TwoToInfinity,
}

impl StatisticKind {
    pub fn compute(self, a: &LowRankP, b: &LowRankP) -> Result<f64> {
        match self {
            StatisticKind::Frobenius => frob_distance(a, b),
            StatisticKind::TwoToInfinity => two_inf_distance(a, b),
        }
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" | "frob" | "f" => Ok(StatisticKind::Frobenius),
            "two-to-infinity" | "two_to_infinity" | "2inf" => Ok(StatisticKind::TwoToInfinity),
            other => Err(Error::invalid(format!("unknown statistic `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    PredSub,
    PureSub,
}

#[derive(Clone, Debug)]
pub struct TestParams {
    pub m: usize,
    pub d: usize,
    /// Number of bootstrap replicates `B`.
    pub bootstrap: usize,
    pub statistic: StatisticKind,
    pub eigs: EigsOptions,
}

impl TestParams {
    pub fn new(m: usize, d: usize, bootstrap: usize) -> Self {
        TestParams { m, d, bootstrap, statistic: StatisticKind::default(), eigs: EigsOptions::default() }
    }

    pub fn with_statistic(mut self, statistic: StatisticKind) -> Self {
        self.statistic = statistic;
        self
    }
}

/// Observed distances scaled by the rates in the consistency results.
/// The constants in those results are unknown, so these are diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    pub n: usize,
    pub m: usize,
    /// `‖X̂⁽¹⁾‖_F + ‖X̂⁽²⁾‖_F`.
    pub r_f: f64,
    /// `‖X̂⁽¹⁾‖_{2→∞} + ‖X̂⁽²⁾‖_{2→∞}`.
    pub r_two_inf: f64,
    pub t_f: f64,
    pub t_two_inf: f64,
    /// `T_F / (R_F √(n/m))`.
    pub ratio_f: f64,
    /// `T_{2→∞} / (R_{2→∞} √(n log n / m))`.
    pub ratio_two_inf: f64,
    /// `T_{2→∞} / (R_S √(log m))`, for estimates on the subgraph only.
    pub ratio_s: Option<f64>,
}

fn ratio(t: f64, scale: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t / scale
    }
}

pub fn theorem_normalizers(p1: &LowRankP, p2: &LowRankP, n: usize, m: usize) -> Result<Normalizers> {
    let (a, b) = (p1.norms(), p2.norms());
    let r_f = a.factor_frobenius + b.factor_frobenius;
    let r_two_inf = a.factor_two_to_infinity + b.factor_two_to_infinity;
    let t_f = frob_distance(p1, p2)?;
    let t_two_inf = two_inf_distance(p1, p2)?;
    let (nf, mf) = (n as f64, m as f64);
    Ok(Normalizers {
        n,
        m,
        r_f,
        r_two_inf,
        t_f,
        t_two_inf,
        ratio_f: ratio(t_f, r_f * (nf / mf).sqrt()),
        ratio_two_inf: ratio(t_two_inf, r_two_inf * (nf * nf.ln() / mf).sqrt()),
        ratio_s: (p1.n() == m).then(|| ratio(t_two_inf, r_two_inf * mf.ln().sqrt())),
    })
}

/// `#{b : T*_b > T₀} / B`.
pub fn bootstrap_pvalue(t0: f64, boots: &[f64]) -> Result<f64> {
    if boots.is_empty() {
        return Err(Error::invalid("no bootstrap statistics"));
    }
    Ok(boots.iter().filter(|&&t| t > t0).count() as f64 / boots.len() as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TestTimings {
    pub estimate: f64,
    pub bootstrap: f64,
}

#[derive(Clone, Debug)]
pub struct TestReport {
    pub method: TestMethod,
    pub statistic: StatisticKind,
    pub observed: f64,
    pub bootstrap: Vec<f64>,
    pub p_value: f64,
    pub normalizers: Normalizers,
    /// Estimated signatures `(p̂, q̂)` of the two inputs.
    pub signatures: [(usize, usize); 2],
    pub subsample: SubsampleIndex,
    pub timings: TestTimings,
}

impl TestReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn check_inputs<A: AdjacencySource + ?Sized>(a1: &A, a2: &A, params: &TestParams) -> Result<usize> {
    let n = a1.n();
    if a2.n() != n {
        return Err(Error::shape(format!("graphs have {} and {} nodes", n, a2.n())));
    }
    if params.bootstrap == 0 {
        return Err(Error::invalid("bootstrap count B must be at least 1"));
    }
    if params.d == 0 || params.m < params.d || params.m > n {
        return Err(Error::invalid(format!("need 1 ≤ d ≤ m ≤ n, got d = {}, m = {}, n = {n}", params.d, params.m)));
    }
    Ok(n)
}

fn replicate<T>(index: usize, sample: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Replicate { index, sample, source: Box::new(e) })
}

fn signature(p: &LowRankP) -> (usize, usize) {
    (p.p(), p.q())
}

/// Bootstrap test with PredSub estimates on one shared subsample.
pub fn predsub_test<A: AdjacencySource + ?Sized>(a1: &A, a2: &A, params: &TestParams, seed: u64) -> Result<TestReport> {
    let n = check_inputs(a1, a2, params)?;
    let t = Instant::now();
    let s = uniform_subsample(n, params.m, seed)?;
    let est = |a: &A, j: usize| replicate(0, j, predsub_with_subsample(a, &s, params.d, &params.eigs)).map(|r| r.estimate());
    let p1 = est(a1, 1)?;
    let p2 = est(a2, 2)?;
    let observed = params.statistic.compute(&p1, &p2)?;
    let estimate_time = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let pooled = pooled_average(&p1, &p2)?;
    let boots = par::try_map_range(params.bootstrap, |b| {
        let draw = |j: usize| -> Result<LowRankP> {
            let tags = |part: u64| [tag::BOOTSTRAP, j as u64, b as u64, part];
            let sub = sample_symmetric(&pooled, s.sample(), seed, &tags(0))?;
            let cross = sample_rectangular(&pooled, s.complement(), s.sample(), seed, &tags(1))?;
            Ok(predsub_from_blocks(&sub, &cross, &s, params.d, &params.eigs)?.estimate())
        };
        let x1 = replicate(b, 1, draw(1))?;
        let x2 = replicate(b, 2, draw(2))?;
        params.statistic.compute(&x1, &x2)
    })?;
    let bootstrap_time = t.elapsed().as_secs_f64();

    Ok(TestReport {
        method: TestMethod::PredSub,
        statistic: params.statistic,
        observed,
        p_value: bootstrap_pvalue(observed, &boots)?,
        bootstrap: boots,
        normalizers: theorem_normalizers(&p1, &p2, n, params.m)?,
        signatures: [signature(&p1), signature(&p2)],
        subsample: s,
        timings: TestTimings { estimate: estimate_time, bootstrap: bootstrap_time },
    })
}

fn subgraph_estimate<O: SymmetricOperator + ?Sized>(op: &O, d: usize, opts: &EigsOptions) -> Result<LowRankP> {
    Ok(LowRankP::from_embedding(&ase_with_spectrum(op, d, opts)?.0))
}

/// Bootstrap test on the induced subgraph of one shared subsample.
pub fn puresub_test(
    a1: &crate::graph::SparseGraph,
    a2: &crate::graph::SparseGraph,
    params: &TestParams,
    seed: u64,
) -> Result<TestReport> {
    let n = check_inputs(a1, a2, params)?;
    let t = Instant::now();
    let s = uniform_subsample(n, params.m, seed)?;
    let p1 = replicate(0, 1, extract_blocks(a1, &s).and_then(|(g, _)| subgraph_estimate(&g, params.d, &params.eigs)))?;
    let p2 = replicate(0, 2, extract_blocks(a2, &s).and_then(|(g, _)| subgraph_estimate(&g, params.d, &params.eigs)))?;
    let observed = params.statistic.compute(&p1, &p2)?;
    let estimate_time = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let pooled = pooled_average(&p1, &p2)?;
    let all: Vec<usize> = (0..params.m).collect();
    let boots = par::try_map_range(params.bootstrap, |b| {
        let draw = |j: usize| -> Result<LowRankP> {
            let g = sample_symmetric(&pooled, &all, seed, &[tag::BOOTSTRAP, j as u64, b as u64, 0])?;
            subgraph_estimate(&g, params.d, &params.eigs)
        };
        let x1 = replicate(b, 1, draw(1))?;
        let x2 = replicate(b, 2, draw(2))?;
        params.statistic.compute(&x1, &x2)
    })?;
    let bootstrap_time = t.elapsed().as_secs_f64();

    Ok(TestReport {
        method: TestMethod::PureSub,
        statistic: params.statistic,
        observed,
        p_value: bootstrap_pvalue(observed, &boots)?,
        bootstrap: boots,
        normalizers: theorem_normalizers(&p1, &p2, n, params.m)?,
        signatures: [signature(&p1), signature(&p2)],
        subsample: s,
        timings: TestTimings { estimate: estimate_time, bootstrap: bootstrap_time },
    })
}

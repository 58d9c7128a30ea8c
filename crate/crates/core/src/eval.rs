//! Diagnostics connecting estimates to the theory: coherence, condition
//! numbers, eigenvalue scaling under subsampling, regime checks and
//! empirical error curves.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{inclusion_subsample, sample_adjacency, uniform_subsample, ProbabilityModel, SubsampleIndex};
use crate::lowrank::{model_eigenvalues, model_spectrum, relative_frob_error};
use crate::par;
use crate::predsub::{predsub_with_subsample, scaling_matrix, AdjacencySource, CrossBlock, PredSubResult};
use crate::rng::{self, tag};
use crate::spectral::{align_orthogonal, ase_with_spectrum, two_to_infinity, EigsOptions};
use crate::subsample_size;

/// Named scalars, curves and pass/fail flags. Every entry carries a short
/// note saying which property it checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub scalars: BTreeMap<String, Scalar>,
    pub curves: BTreeMap<String, Curve>,
    /// `true` means the check passed.
    pub checks: BTreeMap<String, bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub value: f64,
    pub checks: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub checks: String,
}

impl DiagnosticsReport {
    pub fn scalar(&mut self, key: &str, value: f64, checks: &str) {
        self.scalars.insert(key.to_string(), Scalar { value, checks: checks.to_string() });
    }

    pub fn curve(&mut self, key: &str, x: Vec<f64>, y: Vec<f64>, checks: &str) {
        debug_assert_eq!(x.len(), y.len());
        self.curves.insert(key.to_string(), Curve { x, y, checks: checks.to_string() });
    }

    pub fn check(&mut self, key: &str, passed: bool) {
        self.checks.insert(key.to_string(), passed);
    }

    pub fn merge(&mut self, other: DiagnosticsReport) {
        self.scalars.extend(other.scalars);
        self.curves.extend(other.curves);
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.values().all(|&v| v)
    }
}

/// `√n · ‖U‖_{2→∞}` for an orthonormal `U`.
pub fn coherence(u: &DMatrix<f64>) -> Result<f64> {
    let gram = u.transpose() * u;
    let dev = (gram - DMatrix::identity(u.ncols(), u.ncols())).abs().max();
    if dev > 1e-8 {
        return Err(Error::NotOrthonormal(dev));
    }
    Ok((u.nrows() as f64).sqrt() * two_to_infinity(u))
}

/// Coherence of the top-`d` eigenvectors of the model's `P`.
pub fn model_coherence(model: &ProbabilityModel) -> Result<f64> {
    coherence(&model_spectrum(model, model.d())?.1.vectors)
}

/// `max|λ| / min|λ|`.
pub fn condition_number(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("no eigenvalues"));
    }
    let lo = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let hi = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lo == 0.0 {
        return Err(Error::RankDeficient { value: 0.0, tol: 0.0 });
    }
    Ok(hi / lo)
}

fn singular_values(model: &ProbabilityModel, d: usize) -> Vec<f64> {
    let mut s: Vec<f64> = model_eigenvalues(model).into_iter().map(f64::abs).collect();
    s.resize(d, 0.0);
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingCheck {
    /// Per trial: `max_i |σᵢ(P) − (n/m) σᵢ(P_S)| / (nρ)` over `i ≤ d`.
    pub deviations: Vec<f64>,
    /// Realized `|S|` per trial.
    pub sizes: Vec<usize>,
}

impl ScalingCheck {
    pub fn max(&self) -> f64 {
        self.deviations.iter().fold(0.0, |m: f64, v| m.max(*v))
    }

    pub fn mean(&self) -> f64 {
        self.deviations.iter().sum::<f64>() / self.deviations.len() as f64
    }

    pub fn count_within(&self, eps: f64) -> usize {
        self.deviations.iter().filter(|&&v| v <= eps).count()
    }
}

/// Subsampled singular values rescaled by `n/m` against the full ones, with
/// `S` drawn by independent inclusion at rate `m/n`.
pub fn eigen_scaling_check(model: &ProbabilityModel, m: usize, trials: usize, seed: u64) -> Result<ScalingCheck> {
    let n = model.n();
    if m == 0 || m > n {
        return Err(Error::invalid(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    let d = model.d();
    let full = singular_values(model, d);
    let scale = n as f64 / m as f64;
    let norm = n as f64 * model.rho();
    let runs = par::try_map_range(trials, |t| -> Result<(f64, usize)> {
        let s = inclusion_subsample(n, m as f64 / n as f64, rng::derive(seed, &[tag::REPLICATION, t as u64]))?;
        let sub = singular_values(&model.restrict(s.sample()), d);
        let dev = full.iter().zip(&sub).map(|(a, b)| (a - scale * b).abs()).fold(0.0, f64::max) / norm;
        Ok((dev, s.m()))
    })?;
    Ok(ScalingCheck { deviations: runs.iter().map(|r| r.0).collect(), sizes: runs.iter().map(|r| r.1).collect() })
}

/// Noiseless PredSub reference for subsample `s`: `X_S` is the exact ASE of
/// `P_S` and the other rows are `P_{Sᶜ,S} C`. It satisfies
/// `X I_{p,q} Xᵀ = P` exactly when `rank(P_S) = d`.
pub fn noiseless_reference(model: &ProbabilityModel, s: &SubsampleIndex, d: usize) -> Result<DMatrix<f64>> {
    let (_, cross) = model.split(s)?;
    let (e_s, pair) = model_spectrum(&model.restrict(s.sample()), d)?;
    let x_c = cross.times(&scaling_matrix(&pair, e_s.p()));
    let mut x = DMatrix::zeros(model.n(), d);
    for (r, &v) in s.sample().iter().enumerate() {
        x.row_mut(v).copy_from(&e_s.x().row(r));
    }
    for (r, &v) in s.complement().iter().enumerate() {
        x.row_mut(v).copy_from(&x_c.row(r));
    }
    Ok(x)
}

/// Errors of one PredSub estimate against the model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateErrors {
    /// `‖P̂ − P‖_F / ‖P‖_F`.
    pub relative_frob: f64,
    /// `‖X̂_S W − X_S‖_{2→∞}` with `W` the Procrustes fit on the rows of `S`.
    pub subgraph_two_inf: f64,
    /// `‖X̂ W − X‖_{2→∞}` over all nodes, same `W`, against the noiseless
    /// PredSub reference for the same `S`.
    pub two_inf: f64,
    /// `‖X̂ W' − U_P|D_P|^{1/2}‖_{2→∞}` with `W'` fitted on all rows.
    pub two_inf_canonical: f64,
}

pub fn estimate_errors(result: &PredSubResult, model: &ProbabilityModel, canonical: &DMatrix<f64>) -> Result<EstimateErrors> {
    let s = &result.subsample;
    let d = result.embedding.d();
    let x_ref = noiseless_reference(model, s, d)?;
    let x_hat = result.embedding.x();
    let (w, _) = align_orthogonal(&x_hat.select_rows(s.sample()), &x_ref.select_rows(s.sample()))?;
    let aligned = x_hat * &w;
    let diff = &aligned - &x_ref;
    let (w2, _) = align_orthogonal(x_hat, canonical)?;
    Ok(EstimateErrors {
        relative_frob: relative_frob_error(&result.estimate(), model)?,
        subgraph_two_inf: two_to_infinity(&diff.select_rows(s.sample())),
        two_inf: two_to_infinity(&diff),
        two_inf_canonical: two_to_infinity(&(x_hat * w2 - canonical)),
    })
}

/// Mean and sample standard deviation.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, _) = mean_sd(&lx);
    let (my, _) = mean_sd(&ly);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    /// `None` for the full-ASE baseline (`m = n`).
    pub a: Option<f64>,
    pub m: usize,
    pub errors: Vec<EstimateErrors>,
    pub seconds: Vec<f64>,
}

impl ErrorRow {
    fn column(&self, f: impl Fn(&EstimateErrors) -> f64) -> Vec<f64> {
        self.errors.iter().map(f).collect()
    }

    pub fn relative_frob(&self) -> (f64, f64) {
        mean_sd(&self.column(|e| e.relative_frob))
    }

    pub fn two_inf(&self) -> (f64, f64) {
        mean_sd(&self.column(|e| e.two_inf))
    }

    pub fn subgraph_two_inf(&self) -> (f64, f64) {
        mean_sd(&self.column(|e| e.subgraph_two_inf))
    }

    pub fn two_inf_canonical(&self) -> (f64, f64) {
        mean_sd(&self.column(|e| e.two_inf_canonical))
    }

    pub fn mean_seconds(&self) -> f64 {
        mean_sd(&self.seconds).0
    }
}

#[derive(Clone, Debug)]
pub struct CurveOptions {
    /// Feed the model's `P` instead of sampled graphs.
    pub noiseless: bool,
    /// Add the full-ASE row.
    pub include_full: bool,
    pub eigs: EigsOptions,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { noiseless: false, include_full: true, eigs: EigsOptions::default() }
    }
}

/// PredSub errors over a grid of `a` (with `m = ⌈(log n)^{1+a}⌉`), `reps`
/// sampled graphs per grid point; the same graphs serve every grid point.
pub fn error_curve(
    model: &ProbabilityModel,
    d: usize,
    a_grid: &[f64],
    reps: usize,
    seed: u64,
    opts: &CurveOptions,
) -> Result<Vec<ErrorRow>> {
    if a_grid.is_empty() && !opts.include_full {
        return Err(Error::invalid("empty grid"));
    }
    let n = model.n();
    let canonical = model_spectrum(model, d)?.0.into_x();
    let mut plan: Vec<(Option<f64>, usize)> = a_grid.iter().map(|&a| (Some(a), subsample_size(n, a))).collect();
    if opts.include_full {
        plan.push((None, n));
    }
    let per_rep = par::try_map_range(reps, |r| -> Result<Vec<(EstimateErrors, f64)>> {
        let graph = (!opts.noiseless).then(|| sample_adjacency(model, rng::derive(seed, &[tag::REPLICATION, r as u64])));
        plan.iter()
            .enumerate()
            .map(|(k, &(_, m))| {
                let t = Instant::now();
                let s = uniform_subsample(n, m, rng::derive(seed, &[tag::SUBSAMPLE, r as u64, k as u64]))?;
                let res = match &graph {
                    Some(g) => predsub_with_subsample(g, &s, d, &opts.eigs)?,
                    None => predsub_with_subsample(model, &s, d, &opts.eigs)?,
                };
                let secs = t.elapsed().as_secs_f64();
                Ok((estimate_errors(&res, model, &canonical)?, secs))
            })
            .collect()
    })?;
    Ok(plan
        .iter()
        .enumerate()
        .map(|(k, &(a, m))| ErrorRow {
            a,
            m,
            errors: per_rep.iter().map(|rep| rep[k].0).collect(),
            seconds: per_rep.iter().map(|rep| rep[k].1).collect(),
        })
        .collect())
}

/// Collect an error curve into a report, including the log-log slope of
/// the mean aligned subgraph error against `m`.
pub fn error_curve_report(rows: &[ErrorRow]) -> DiagnosticsReport {
    let mut rep = DiagnosticsReport::default();
    let grid: Vec<&ErrorRow> = rows.iter().filter(|r| r.a.is_some()).collect();
    let ms: Vec<f64> = grid.iter().map(|r| r.m as f64).collect();
    let series = |f: &dyn Fn(&ErrorRow) -> f64| grid.iter().map(|r| f(r)).collect::<Vec<f64>>();
    rep.curve("relative_frob_vs_m", ms.clone(), series(&|r| r.relative_frob().0), "estimation error decreasing in m");
    rep.curve("subgraph_two_inf_vs_m", ms.clone(), series(&|r| r.subgraph_two_inf().0), "subgraph rate sqrt(log m / m)");
    rep.curve("two_inf_vs_m", ms.clone(), series(&|r| r.two_inf().0), "row-wise error of the full estimate");
    rep.curve("seconds_vs_m", ms.clone(), series(&|r| r.mean_seconds()), "cost O(m^2 d + n m d)");
    if ms.len() >= 2 {
        let slope = log_log_slope(&ms, &series(&|r| r.subgraph_two_inf().0));
        rep.scalar("subgraph_two_inf_slope", slope, "subgraph rate sqrt(log m / m)");
        rep.check("subgraph_two_inf_slope_in_range", (-0.65..=-0.35).contains(&slope));
    }
    if let Some(full) = rows.iter().find(|r| r.a.is_none()) {
        rep.scalar("full_ase_relative_frob", full.relative_frob().0, "baseline error");
        rep.scalar("full_ase_seconds", full.mean_seconds(), "baseline cost");
    }
    rep
}

/// Mean aligned `‖X̂_S W − X_S‖_{2→∞}` for subgraphs of size `m` drawn
/// directly from `P_S`, where `X_S` is the exact ASE of `P_S`.
pub fn subgraph_rate(model: &ProbabilityModel, d: usize, m_grid: &[usize], reps: usize, seed: u64) -> Result<Vec<(usize, f64, f64)>> {
    m_grid
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let errs = par::try_map_range(reps, |r| -> Result<f64> {
                let key = [tag::REPLICATION, k as u64, r as u64];
                let s = uniform_subsample(model.n(), m, rng::derive(seed, &key))?;
                let p_s = model.restrict(s.sample());
                let a_s = sample_adjacency(&p_s, rng::derive(seed, &[tag::ADJACENCY, k as u64, r as u64]));
                let x_hat = ase_with_spectrum(&a_s, d, &EigsOptions::default())?.0;
                let x = model_spectrum(&p_s, d)?.0;
                let (w, _) = align_orthogonal(x_hat.x(), x.x())?;
                Ok(two_to_infinity(&(x_hat.x() * w - x.x())))
            })?;
            let (mean, sd) = mean_sd(&errs);
            Ok((m, mean, sd))
        })
        .collect()
}

/// Thresholds for [`assumption_report`].
#[derive(Clone, Debug)]
pub struct AssumptionThresholds {
    /// Entries must lie in `[c1 ρ, c2 ρ]`.
    pub c1: f64,
    pub c2: f64,
    pub max_condition: f64,
    /// Entries scanned per axis of the evenly spaced grid.
    pub grid: usize,
}

impl Default for AssumptionThresholds {
    fn default() -> Self {
        AssumptionThresholds { c1: 1e-3, c2: 1.0, max_condition: 1e3, grid: 200 }
    }
}

/// Regime checks for a model, declared rank `d` and subsample size `m`.
pub fn assumption_report(model: &ProbabilityModel, d: usize, m: usize, th: &AssumptionThresholds) -> DiagnosticsReport {
    let mut rep = DiagnosticsReport::default();
    let n = model.n();
    let rho = model.rho();

    let ev = model_eigenvalues(model);
    let top = ev.first().map_or(0.0, |v| v.abs());
    let rank = ev.iter().filter(|v| v.abs() > 1e-10 * top).count();
    rep.scalar("rank", rank as f64, "P has rank d");
    rep.scalar("declared_d", d as f64, "P has rank d");
    rep.check("rank_matches_d", rank >= d && d >= 1);

    let k = th.grid.min(n).max(1);
    let idx: Vec<usize> = (0..k).map(|t| t * n / k).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let e = model.entry(i, j);
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    if lo.is_finite() {
        rep.scalar("min_entry_over_rho", lo / rho, "entries of order rho");
        rep.scalar("max_entry_over_rho", hi / rho, "entries of order rho");
        rep.check("entries_within_bounds", lo >= th.c1 * rho && hi <= th.c2 * rho);
    }

    if rank >= d && d >= 1 {
        let kappa = condition_number(&ev[..d]).unwrap_or(f64::INFINITY);
        rep.scalar("condition_number", kappa, "bounded condition number");
        rep.check("condition_number_bounded", kappa <= th.max_condition);
    } else {
        rep.check("condition_number_bounded", false);
    }

    let lnn = (n as f64).ln();
    let implied_a = (m as f64).ln() / lnn.ln() - 1.0;
    rep.scalar("m", m as f64, "m = (log n)^(1+a)");
    rep.scalar("implied_a", implied_a, "m = (log n)^(1+a)");
    rep.check("m_at_most_n", m <= n && m >= d);

    let m_rho = m as f64 * rho;
    let log_m = (m.max(1) as f64).ln();
    rep.scalar("m_rho", m_rho, "m rho grows faster than log m");
    rep.scalar("log_m", log_m, "m rho grows faster than log m");
    rep.check("m_rho_exceeds_log_m", m_rho >= log_m);
    rep
}

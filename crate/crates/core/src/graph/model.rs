use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{SparseGraph, ROW_CHUNK};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{self, tag};

/// Mixed-membership block model `P = ρ Π B Πᵀ`, held in factorized form.
///
/// Memberships are stored row-major together with the pre-multiplied rows
/// `ρ πᵢ B`, so a single entry costs `d` multiply-adds.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityModel {
    n: usize,
    d: usize,
    rho: f64,
    b: DMatrix<f64>,
    pi: Vec<f64>,
    weighted: Vec<f64>,
}

impl ProbabilityModel {
    /// Validate and wrap `(Π, B, ρ)`.
    pub fn new(pi: DMatrix<f64>, b: DMatrix<f64>, rho: f64) -> Result<Self> {
        let (n, d) = pi.shape();
        if b.shape() != (d, d) {
            return Err(Error::shape(format!("B is {:?}, expected {d}x{d}", b.shape())));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid(format!("rho = {rho} outside (0, 1]")));
        }
        if (0..d).any(|k| (0..d).any(|l| b[(k, l)] != b[(l, k)])) {
            return Err(Error::invalid("B is not symmetric"));
        }
        for i in 0..n {
            let row = pi.row(i);
            if row.iter().any(|&v| v < 0.0) || (row.sum() - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("membership row {i} is not a probability vector")));
            }
        }
        let rows: Vec<f64> = (0..n).flat_map(|i| pi.row(i).iter().copied().collect::<Vec<_>>()).collect();
        Ok(Self::from_rows(n, d, rho, b, rows))
    }

    fn from_rows(n: usize, d: usize, rho: f64, b: DMatrix<f64>, pi: Vec<f64>) -> Self {
        let mut weighted = vec![0.0; n * d];
        for i in 0..n {
            let src = &pi[i * d..(i + 1) * d];
            for l in 0..d {
                weighted[i * d + l] = rho * (0..d).map(|k| src[k] * b[(k, l)]).sum::<f64>();
            }
        }
        ProbabilityModel { n, d, rho, b, pi, weighted }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Membership matrix `Π` (`n × d`).
    pub fn memberships(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.pi)
    }

    pub fn membership_row(&self, i: usize) -> &[f64] {
        &self.pi[i * self.d..(i + 1) * self.d]
    }

    /// `ρ πᵢ B`.
    pub fn weighted_row(&self, i: usize) -> &[f64] {
        &self.weighted[i * self.d..(i + 1) * self.d]
    }

    /// `ρ πᵢ B πⱼᵀ`; symmetric in `(i, j)` bit for bit.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        dot(self.weighted_row(i), self.membership_row(j))
    }

    /// Dense `n × n` probability matrix, diagonal included. Test/diagnostic scale only.
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }

    /// Model restricted to the nodes in `idx` (in that order).
    pub fn restrict(&self, idx: &[usize]) -> ProbabilityModel {
        let d = self.d;
        let mut pi = Vec::with_capacity(idx.len() * d);
        let mut weighted = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            pi.extend_from_slice(self.membership_row(i));
            weighted.extend_from_slice(self.weighted_row(i));
        }
        ProbabilityModel { n: idx.len(), d, rho: self.rho, b: self.b.clone(), pi, weighted }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(n: usize, d: usize, rho: f64, alpha: f64) -> Result<()> {
    if d == 0 || n < d {
        return Err(Error::invalid(format!("need n >= d >= 1, got n = {n}, d = {d}")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid(format!("rho = {rho} outside (0, 1]")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("Dirichlet concentration {alpha} must be positive")));
    }
    Ok(())
}

fn draw_mixing(d: usize, seed: u64, attempt: u64) -> DMatrix<f64> {
    let mut rng = rng::stream(seed, &[tag::MIXING, attempt]);
    let mut b = DMatrix::from_element(d, d, 0.5);
    for k in 0..d {
        b[(k, k)] = rng.random::<f64>();
    }
    b
}

fn draw_memberships(n: usize, d: usize, alpha: f64, seed: u64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated");
    let mut pi = vec![0.0; n * d];
    par::for_each_chunk_mut(&mut pi, ROW_CHUNK * d, |c, chunk| {
        let mut rng = rng::stream(seed, &[tag::MEMBERSHIP, c as u64]);
        for row in chunk.chunks_mut(d) {
            loop {
                let mut total = 0.0;
                for v in row.iter_mut() {
                    *v = gamma.sample(&mut rng);
                    total += *v;
                }
                if total > 0.0 && total.is_finite() {
                    row.iter_mut().for_each(|v| *v /= total);
                    break;
                }
            }
        }
    });
    pi
}

/// Mixed-membership model: `B` has off-diagonal entries `0.5` and iid
/// `Uniform(0, 1)` diagonal, rows of `Π` are iid `Dirichlet(α, …, α)`.
pub fn generate_mmsb(n: usize, d: usize, rho: f64, alpha: f64, seed: u64) -> Result<ProbabilityModel> {
    check_dims(n, d, rho, alpha)?;
    let b = draw_mixing(d, seed, 0);
    let pi = draw_memberships(n, d, alpha, seed);
    Ok(ProbabilityModel::from_rows(n, d, rho, b, pi))
}

/// Inertia `(positive, negative)` of a symmetric matrix, ignoring eigenvalues
/// below `1e-10` relative to the largest.
pub(crate) fn inertia(b: &DMatrix<f64>) -> (usize, usize) {
    let ev = SymmetricEigen::new(b.clone()).eigenvalues;
    let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * scale;
    (ev.iter().filter(|&&v| v > tol).count(), ev.iter().filter(|&&v| v < -tol).count())
}

/// As [`generate_mmsb`], but redraws the diagonal of `B` until `B` has
/// exactly `p` positive and `d − p` negative eigenvalues. With `Π` of full
/// column rank, `P` inherits that signature.
pub fn generate_mmsb_with_signature(
    n: usize,
    d: usize,
    p: usize,
    rho: f64,
    alpha: f64,
    seed: u64,
) -> Result<ProbabilityModel> {
    check_dims(n, d, rho, alpha)?;
    if p > d {
        return Err(Error::invalid(format!("p = {p} exceeds d = {d}")));
    }
    if p == 0 {
        return Err(Error::invalid("B has a positive diagonal, so at least one eigenvalue is positive"));
    }
    const MAX_ATTEMPTS: u64 = 100_000;
    let b = (0..MAX_ATTEMPTS)
        .map(|attempt| draw_mixing(d, seed, attempt))
        .find(|b| inertia(b) == (p, d - p))
        .ok_or_else(|| Error::invalid(format!("no mixing matrix with signature ({p}, {}) found", d - p)))?;
    let pi = draw_memberships(n, d, alpha, seed);
    Ok(ProbabilityModel::from_rows(n, d, rho, b, pi))
}

/// Replace `B` by `B + εJ`. Since membership rows sum to one, every entry
/// of `P` grows by exactly `ρε`.
pub fn perturbed_model(model: &ProbabilityModel, epsilon: f64) -> Result<ProbabilityModel> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon = {epsilon} must be >= 0")));
    }
    if epsilon == 0.0 {
        return Ok(model.clone());
    }
    let b = model.b.add_scalar(epsilon);
    // memberships are convex weights, so the largest entry of B bounds P / rho
    let bound = model.rho * b.max();
    if bound > 1.0 {
        return Err(Error::EntryOverflow { value: bound });
    }
    Ok(ProbabilityModel::from_rows(model.n, model.d, model.rho, b, model.pi.clone()))
}

/// Draw a symmetric hollow adjacency matrix with independent
/// `Bernoulli(P_ij)` upper-triangular entries.
///
/// Rows are sampled by thinning: candidates arrive at the row's upper bound
/// `q_i = max_k (ρ πᵢ B)_k ≥ P_ij` through geometric gaps and are accepted
/// with probability `P_ij / q_i`, which is an exact Bernoulli draw per entry.
pub fn sample_adjacency(model: &ProbabilityModel, seed: u64) -> SparseGraph {
    let n = model.n;
    let chunks = n.div_ceil(ROW_CHUNK);
    let upper: Vec<Vec<Vec<u32>>> = par::map_range(chunks, |c| {
        let mut rng = rng::stream(seed, &[tag::ADJACENCY, c as u64]);
        let lo = c * ROW_CHUNK;
        let hi = (lo + ROW_CHUNK).min(n);
        (lo..hi)
            .map(|i| {
                let w = model.weighted_row(i);
                let q = w.iter().fold(0.0f64, |m, &v| m.max(v)).min(1.0);
                let mut row = Vec::new();
                rng::thinned_bernoulli(&mut rng, i + 1, n, q, |j| dot(w, model.membership_row(j)), |j| {
                    row.push(j as u32)
                });
                row
            })
            .collect()
    });
    let upper: Vec<Vec<u32>> = upper.into_iter().flatten().collect();
    SparseGraph::from_upper_rows(n, &upper)
}

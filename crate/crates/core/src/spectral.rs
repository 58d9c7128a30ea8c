//! Truncated symmetric eigendecomposition and signed adjacency spectral
//! embedding.
//!
//! Eigenpairs are the `d` largest in modulus. Ties in `|λ|` prefer the
//! positive eigenvalue, then the lower position in the ascending spectrum.
//! Every eigenvector is scaled so its largest-magnitude entry (lowest index
//! on ties) is positive, which makes the output deterministic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{ProbabilityModel, SparseGraph, ROW_CHUNK};
use crate::par;
use crate::rng::{self, tag};

/// A symmetric linear map on `R^n`. Symmetry is the implementor's obligation.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            out.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        out
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let out = self * DVector::from_column_slice(x);
        y.copy_from_slice(out.as_slice());
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl SymmetricOperator for SparseGraph {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.as_block().matvec(x, y)
    }
}

/// The full probability matrix `P` (diagonal included) applied implicitly in `O(nd)`.
impl SymmetricOperator for ProbabilityModel {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let d = self.d();
        let mut t = vec![0.0; d];
        for (i, &xi) in x.iter().enumerate() {
            for (tk, pk) in t.iter_mut().zip(self.membership_row(i)) {
                *tk += pk * xi;
            }
        }
        par::for_each_chunk_mut(y, ROW_CHUNK, |c, out| {
            for (k, yi) in out.iter_mut().enumerate() {
                *yi = crate::graph::model_dot(self.weighted_row(c * ROW_CHUNK + k), &t);
            }
        });
    }
}

/// Solver settings. `Default` gives the library defaults.
#[derive(Clone, Debug)]
pub struct EigsOptions {
    /// Residual tolerance relative to the largest returned `|λ|`.
    pub tol: f64,
    /// Restart cap; `None` means `50 · d`.
    pub max_restarts: Option<usize>,
    /// Operators of at most this dimension are decomposed densely.
    pub dense_cutoff: usize,
    /// Krylov basis size; `None` picks one from `d`.
    pub basis_size: Option<usize>,
    /// Eigenvalues with `|λ| ≤ zero_tol · max|λ|` count as zero.
    pub zero_tol: f64,
}

pub const DEFAULT_DENSE_CUTOFF: usize = 512;

impl Default for EigsOptions {
    fn default() -> Self {
        EigsOptions { tol: 1e-10, max_restarts: None, dense_cutoff: DEFAULT_DENSE_CUTOFF, basis_size: None, zero_tol: 1e-10 }
    }
}

/// `d` eigenpairs with orthonormal eigenvectors as the columns of `vectors`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralPair {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SpectralPair {
    pub fn d(&self) -> usize {
        self.values.len()
    }

    fn select(&self, cols: &[usize]) -> SpectralPair {
        SpectralPair {
            values: cols.iter().map(|&c| self.values[c]).collect(),
            vectors: self.vectors.select_columns(cols),
        }
    }
}

/// Order candidate indices by `|λ|` descending, positive first, then index.
pub(crate) fn modulus_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (values[a], values[b]);
        y.abs()
            .total_cmp(&x.abs())
            .then_with(|| (y > 0.0).cmp(&(x > 0.0)))
            .then_with(|| a.cmp(&b))
    });
    idx
}

pub(crate) fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col.len() > 0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Eigendecomposition sorted ascending, so positions are canonical.
pub(crate) fn sorted_dense_eigen(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    (values, eig.eigenvectors.select_columns(&idx))
}

/// The `d` eigenpairs of `op` largest in modulus.
pub fn truncated_eigs<O: SymmetricOperator + ?Sized>(op: &O, d: usize, opts: &EigsOptions) -> Result<SpectralPair> {
    let n = op.dim();
    if d == 0 || d > n {
        return Err(Error::invalid(format!("requested d = {d} eigenpairs of a {n}x{n} operator")));
    }
    let mut pair = if n <= opts.dense_cutoff {
        let (values, vectors) = sorted_dense_eigen(op.to_dense());
        let order = modulus_order(&values);
        SpectralPair { values, vectors }.select(&order[..d])
    } else {
        krylov_schur(op, d, opts)?
    };
    fix_signs(&mut pair.vectors);
    Ok(pair)
}

fn default_basis(d: usize) -> usize {
    (2 * d + 1).max(d + 30)
}

/// Column-major `n × cap` basis.
struct Basis {
    n: usize,
    data: Vec<f64>,
}

impl Basis {
    fn col(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    fn col_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.n..(k + 1) * self.n]
    }

    /// Two passes of classical Gram–Schmidt of `w` against columns `0..k`;
    /// returns the accumulated coefficients.
    fn orthogonalize(&self, k: usize, w: &mut [f64]) -> Vec<f64> {
        let mut total = vec![0.0; k];
        for _ in 0..2 {
            let h = par::map_range(k, |j| dot(self.col(j), w));
            let n = self.n;
            par::for_each_chunk_mut(w, ROW_CHUNK, |c, out| {
                let base = c * ROW_CHUNK;
                for (r, wi) in out.iter_mut().enumerate() {
                    let row = base + r;
                    let mut s = 0.0;
                    for (j, hj) in h.iter().enumerate() {
                        s += self.data[j * n + row] * hj;
                    }
                    *wi -= s;
                }
            });
            total.iter_mut().zip(&h).for_each(|(t, x)| *t += x);
        }
        total
    }

    /// Columns `0..k` combined by the `k × cols` matrix `y`.
    fn combine(&self, k: usize, y: &DMatrix<f64>) -> Vec<f64> {
        let cols = y.ncols();
        let n = self.n;
        let mut out = vec![0.0; n * cols];
        // row-major staging keeps each output row local to one worker
        let mut staged = vec![0.0; n * cols];
        par::for_each_chunk_mut(&mut staged, ROW_CHUNK * cols, |c, chunk| {
            let base = c * ROW_CHUNK;
            for (r, orow) in chunk.chunks_mut(cols).enumerate() {
                let row = base + r;
                for (q, o) in orow.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for j in 0..k {
                        s += self.data[j * n + row] * y[(j, q)];
                    }
                    *o = s;
                }
            }
        });
        for row in 0..n {
            for q in 0..cols {
                out[q * n + row] = staged[row * cols + q];
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Thick-restart Lanczos (Krylov–Schur form) with full reorthogonalization.
///
/// Keeps the relation `A V = V H + f bᵀ` with `f ⟂ V`. Each expansion step
/// computes the full column `Vᵀ A v`, so the projected matrix after a restart
/// is rebuilt without special arrowhead bookkeeping.
fn krylov_schur<O: SymmetricOperator + ?Sized>(op: &O, d: usize, opts: &EigsOptions) -> Result<SpectralPair> {
    let n = op.dim();
    let cap = opts.basis_size.unwrap_or_else(|| default_basis(d)).max(d + 1).min(n);
    let keep_target = (d + (cap - d) / 2).min(cap - 1).max(d);
    let max_restarts = opts.max_restarts.unwrap_or(50 * d).max(1);

    let mut basis = Basis { n, data: vec![0.0; n * cap] };
    let mut h = DMatrix::<f64>::zeros(cap, cap);
    let mut fresh = 0u64;
    let random_vector = |fresh: &mut u64| -> Vec<f64> {
        let mut rng = rng::stream(n as u64, &[tag::START_VECTOR, d as u64, *fresh]);
        *fresh += 1;
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    };
    let mut f = random_vector(&mut fresh);
    let mut k = 0usize;
    let mut scale = 0.0f64;
    let mut w = vec![0.0; n];

    for restart in 0..=max_restarts {
        let mut exhausted = false;
        while k < cap {
            let mut beta = norm(&f);
            if beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) || beta == 0.0 {
                // invariant subspace found; continue with a fresh direction
                let mut v = random_vector(&mut fresh);
                basis.orthogonalize(k, &mut v);
                let nv = norm(&v);
                if nv <= 1e-8 {
                    exhausted = true;
                    f.iter_mut().for_each(|x| *x = 0.0);
                    break;
                }
                f = v;
                beta = nv;
            }
            f.iter_mut().for_each(|x| *x /= beta);
            basis.col_mut(k).copy_from_slice(&f);
            op.apply(basis.col(k), &mut w);
            let coeffs = basis.orthogonalize(k + 1, &mut w);
            for (i, &c) in coeffs.iter().enumerate() {
                h[(i, k)] = c;
                h[(k, i)] = c;
            }
            scale = scale.max(coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())));
            std::mem::swap(&mut f, &mut w);
            k += 1;
        }

        let proj = h.view((0, 0), (k, k)).into_owned();
        let (theta, y) = sorted_dense_eigen(proj);
        let order = modulus_order(&theta);
        let beta = if exhausted { 0.0 } else { norm(&f) };
        let top = theta[order[0]].abs();
        let worst = order[..d.min(k)]
            .iter()
            .map(|&i| beta * y[(k - 1, i)].abs())
            .fold(0.0f64, f64::max);
        let converged = k >= d && (top == 0.0 || worst <= opts.tol * top);

        if converged || exhausted || k == n || restart == max_restarts {
            if !converged && !(exhausted || k == n) {
                return Err(Error::NoConvergence { iterations: restart, residual: worst / top.max(f64::MIN_POSITIVE) });
            }
            if k < d {
                return Err(Error::invalid(format!("operator admits only {k} independent directions, {d} requested")));
            }
            let sel = &order[..d];
            let coeff = y.select_columns(sel);
            let vectors = DMatrix::from_column_slice(n, d, &basis.combine(k, &coeff));
            return Ok(SpectralPair { values: sel.iter().map(|&i| theta[i]).collect(), vectors });
        }

        let sel = &order[..keep_target];
        let coeff = y.select_columns(sel);
        let kept = basis.combine(k, &coeff);
        basis.data[..n * keep_target].copy_from_slice(&kept);
        h.fill(0.0);
        for (j, &i) in sel.iter().enumerate() {
            h[(j, j)] = theta[i];
        }
        k = keep_target;
    }
    unreachable!("loop returns on the final restart")
}

/// Count positive eigenvalues and reorder: positives by descending value,
/// then negatives by descending `|λ|`. Fails if any `|λ| ≤ zero_tol · max|λ|`.
pub fn split_signature(pair: &SpectralPair, zero_tol: f64) -> Result<(usize, SpectralPair)> {
    let top = pair.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = zero_tol * top;
    if let Some(&v) = pair.values.iter().find(|v| v.abs() <= tol) {
        return Err(Error::RankDeficient { value: v, tol });
    }
    let mut pos: Vec<usize> = (0..pair.d()).filter(|&i| pair.values[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..pair.d()).filter(|&i| pair.values[i] < 0.0).collect();
    pos.sort_by(|&a, &b| pair.values[b].total_cmp(&pair.values[a]).then(a.cmp(&b)));
    neg.sort_by(|&a, &b| pair.values[a].total_cmp(&pair.values[b]).then(a.cmp(&b)));
    let p = pos.len();
    pos.extend(neg);
    Ok((p, pair.select(&pos)))
}

/// Latent positions `X` (`n × d`) with signature `(p, d − p)`: the first `p`
/// columns carry the positive part of the indefinite inner product.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    x: DMatrix<f64>,
    p: usize,
}

impl Embedding {
    pub fn new(x: DMatrix<f64>, p: usize) -> Result<Self> {
        if p > x.ncols() {
            return Err(Error::invalid(format!("signature p = {p} exceeds d = {}", x.ncols())));
        }
        Ok(Embedding { x, p })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn into_x(self) -> DMatrix<f64> {
        self.x
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.d() - self.p
    }

    /// Diagonal of `I_{p,q}`.
    pub fn metric(&self) -> Vec<f64> {
        (0..self.d()).map(|k| if k < self.p { 1.0 } else { -1.0 }).collect()
    }
}

/// `U |D|^{1/2}` from a signature-ordered spectral pair.
pub fn embedding_from_spectrum(pair: &SpectralPair, p: usize) -> Embedding {
    let mut x = pair.vectors.clone();
    for (k, mut col) in x.column_iter_mut().enumerate() {
        col *= pair.values[k].abs().sqrt();
    }
    Embedding { x, p }
}

/// Signed adjacency spectral embedding together with the signature-ordered
/// eigenpairs it came from.
pub fn ase_with_spectrum<O: SymmetricOperator + ?Sized>(op: &O, d: usize, opts: &EigsOptions) -> Result<(Embedding, SpectralPair)> {
    let pair = truncated_eigs(op, d, opts)?;
    let (p, ordered) = split_signature(&pair, opts.zero_tol)?;
    Ok((embedding_from_spectrum(&ordered, p), ordered))
}

/// Signed adjacency spectral embedding `X = U |D|^{1/2}`.
pub fn ase<O: SymmetricOperator + ?Sized>(op: &O, d: usize) -> Result<Embedding> {
    Ok(ase_with_spectrum(op, d, &EigsOptions::default())?.0)
}

/// Orthogonal Procrustes: the `W ∈ O(d)` minimizing `‖X̂ W − X_ref‖_F`,
/// i.e. the polar factor of `X̂ᵀ X_ref`, and the attained distance.
pub fn align_orthogonal(x_hat: &DMatrix<f64>, x_ref: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if x_hat.shape() != x_ref.shape() {
        return Err(Error::shape(format!("{:?} vs {:?}", x_hat.shape(), x_ref.shape())));
    }
    let m = x_hat.transpose() * x_ref;
    let svd = m.svd(true, true);
    let w = svd.u.expect("requested") * svd.v_t.expect("requested");
    let residual = (x_hat * &w - x_ref).norm();
    Ok((w, residual))
}

/// Maximum Euclidean row norm.
pub fn two_to_infinity(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

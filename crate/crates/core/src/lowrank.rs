//! Probability matrices kept in factorized form `P = X I_{p,q} Xᵀ`.
//!
//! Differences and norms of such matrices are computed on a thin QR factor:
//! for `M = Z K Zᵀ` with `Z = QR`, `‖M‖_F = ‖R K Rᵀ‖_F` and the `i`-th row
//! norm is `‖R K zᵢᵀ‖`. Nothing of size `n × n` is formed, and no large
//! quantities are subtracted entrywise.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{ProbabilityModel, SparseBlock, SparseGraph, ROW_CHUNK};
use crate::par;
use crate::rng;
use crate::spectral::{
    embedding_from_spectrum, fix_signs, modulus_order, sorted_dense_eigen, split_signature, Embedding, SpectralPair,
    SymmetricOperator,
};

/// `P = X I_{p,q} Xᵀ` with the `p` positive columns of `X` first.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankP {
    x: DMatrix<f64>,
    p: usize,
}

impl LowRankP {
    pub fn new(x: DMatrix<f64>, p: usize) -> Result<Self> {
        if p > x.ncols() {
            return Err(Error::invalid(format!("signature p = {p} exceeds d = {}", x.ncols())));
        }
        Ok(LowRankP { x, p })
    }

    pub fn from_embedding(e: &Embedding) -> Self {
        LowRankP { x: e.x().clone(), p: e.p() }
    }

    /// Exact factorization of the model's `P = ρ Π B Πᵀ`. Fails if `P` has
    /// rank below `d`.
    pub fn from_model(model: &ProbabilityModel) -> Result<Self> {
        let (e, _) = Factored::of_model(model).ase(model.d())?;
        Ok(LowRankP::from_embedding(&e))
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
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

    fn sign(&self, k: usize) -> f64 {
        if k < self.p {
            1.0
        } else {
            -1.0
        }
    }

    /// `P_ij`, unclamped.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        (0..self.d()).map(|k| self.sign(k) * self.x[(i, k)] * self.x[(j, k)]).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut xj = self.x.clone();
        for k in self.p..self.d() {
            xj.column_mut(k).neg_mut();
        }
        xj * self.x.transpose()
    }

    /// The principal submatrix on `idx`.
    pub fn restrict(&self, idx: &[usize]) -> LowRankP {
        LowRankP { x: self.x.select_rows(idx), p: self.p }
    }

    /// `X` multiplied by `t`, so `P` scales by `t²`.
    pub fn scaled(self, t: f64) -> Self {
        LowRankP { x: self.x * t, p: self.p }
    }

    /// Nonzero-capable eigenvalues (at most `d`), descending in modulus.
    pub fn eigenvalues(&self) -> Vec<f64> {
        Factored::of(self).eigenvalues()
    }

    pub fn frob_norm(&self) -> f64 {
        Factored::of(self).frob()
    }

    pub fn norms(&self) -> Norms {
        let f = Factored::of(self);
        Norms {
            frobenius: f.frob(),
            two_to_infinity: f.two_inf(),
            factor_frobenius: self.x.norm(),
            factor_two_to_infinity: crate::spectral::two_to_infinity(&self.x),
        }
    }

    /// Exact signed spectral embedding of dimension `d` of this matrix.
    pub fn spectrum(&self, d: usize) -> Result<(Embedding, SpectralPair)> {
        Factored::of(self).ase(d)
    }
}

impl SymmetricOperator for LowRankP {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, v: &[f64], y: &mut [f64]) {
        let d = self.d();
        let t: Vec<f64> = (0..d).map(|k| self.sign(k) * crate::graph::model_dot(self.x.column(k).as_slice(), v)).collect();
        par::for_each_chunk_mut(y, ROW_CHUNK, |c, out| {
            let base = c * ROW_CHUNK;
            for (r, yi) in out.iter_mut().enumerate() {
                let i = base + r;
                *yi = (0..d).map(|k| self.x[(i, k)] * t[k]).sum();
            }
        });
    }

    fn to_dense(&self) -> DMatrix<f64> {
        LowRankP::to_dense(self)
    }
}

/// Norms of `P` and of its factor `X`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Norms {
    pub frobenius: f64,
    pub two_to_infinity: f64,
    pub factor_frobenius: f64,
    pub factor_two_to_infinity: f64,
}

/// Exact signed spectral embedding of dimension `d` of the model's `P`.
pub fn model_spectrum(model: &ProbabilityModel, d: usize) -> Result<(Embedding, SpectralPair)> {
    Factored::of_model(model).ase(d)
}

/// All eigenvalues of the model's `P` that can be nonzero (at most `d`),
/// in descending order of modulus.
pub fn model_eigenvalues(model: &ProbabilityModel) -> Vec<f64> {
    if model.n() == 0 {
        return vec![0.0; model.d()];
    }
    Factored::of_model(model).eigenvalues()
}

/// `Z K Zᵀ` with `K` symmetric and small.
struct Factored {
    z: DMatrix<f64>,
    k: DMatrix<f64>,
}

impl Factored {
    fn of(p: &LowRankP) -> Self {
        let metric = DVector::from_iterator(p.d(), (0..p.d()).map(|k| p.sign(k)));
        Factored { z: p.x.clone(), k: DMatrix::from_diagonal(&metric) }
    }

    fn of_model(model: &ProbabilityModel) -> Self {
        Factored { z: model.memberships() * model.rho().sqrt(), k: model.mixing().clone() }
    }

    /// `self − other`.
    fn minus(self, other: Factored) -> Result<Self> {
        if self.z.nrows() != other.z.nrows() {
            return Err(Error::shape(format!("{} vs {} rows", self.z.nrows(), other.z.nrows())));
        }
        let (r1, r2) = (self.z.ncols(), other.z.ncols());
        let mut z = DMatrix::zeros(self.z.nrows(), r1 + r2);
        z.columns_mut(0, r1).copy_from(&self.z);
        z.columns_mut(r1, r2).copy_from(&other.z);
        let mut k = DMatrix::zeros(r1 + r2, r1 + r2);
        k.view_mut((0, 0), (r1, r1)).copy_from(&self.k);
        k.view_mut((r1, r1), (r2, r2)).copy_from(&(-other.k));
        Ok(Factored { z, k })
    }

    fn qr(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let qr = self.z.clone().qr();
        (qr.q(), qr.r())
    }

    fn frob(&self) -> f64 {
        let (_, r) = self.qr();
        (&r * &self.k * r.transpose()).norm()
    }

    fn two_inf(&self) -> f64 {
        let (_, r) = self.qr();
        let g = &self.z * &self.k * r.transpose();
        crate::spectral::two_to_infinity(&g)
    }

    fn eigenvalues(&self) -> Vec<f64> {
        let (_, r) = self.qr();
        let (values, _) = sorted_dense_eigen(&r * &self.k * r.transpose());
        modulus_order(&values).into_iter().map(|i| values[i]).collect()
    }

    fn ase(&self, d: usize) -> Result<(Embedding, SpectralPair)> {
        let n = self.z.nrows();
        if d == 0 || d > n {
            return Err(Error::invalid(format!("requested d = {d} eigenpairs of a {n}x{n} matrix")));
        }
        let (q, r) = self.qr();
        let small = &r * &self.k * r.transpose();
        let small = (&small + small.transpose()) * 0.5;
        let (values, w) = sorted_dense_eigen(small);
        if d > values.len() {
            return Err(Error::RankDeficient { value: 0.0, tol: 0.0 });
        }
        let order = modulus_order(&values);
        let sel = &order[..d];
        let mut vectors = q * w.select_columns(sel);
        fix_signs(&mut vectors);
        let pair = SpectralPair { values: sel.iter().map(|&i| values[i]).collect(), vectors };
        let (p, ordered) = split_signature(&pair, crate::spectral::EigsOptions::default().zero_tol)?;
        Ok((embedding_from_spectrum(&ordered, p), ordered))
    }
}

/// Deterministic order on estimates so symmetric operations are computed
/// identically whichever argument comes first.
fn canonical<'a>(a: &'a LowRankP, b: &'a LowRankP) -> (&'a LowRankP, &'a LowRankP) {
    let key = a
        .p
        .cmp(&b.p)
        .then(a.x.shape().cmp(&b.x.shape()))
        .then_with(|| {
            a.x.iter()
                .zip(b.x.iter())
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
    if key == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    }
}

/// `‖P_a − P_b‖_F`.
pub fn frob_distance(a: &LowRankP, b: &LowRankP) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (a, b) = canonical(a, b);
    Ok(Factored::of(a).minus(Factored::of(b))?.frob())
}

/// `‖P_a − P_b‖_{2→∞}`, the largest row norm of the difference.
pub fn two_inf_distance(a: &LowRankP, b: &LowRankP) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (a, b) = canonical(a, b);
    Ok(Factored::of(a).minus(Factored::of(b))?.two_inf())
}

/// `‖P̂ − P‖_F / ‖P‖_F` against the model's probability matrix.
pub fn relative_frob_error(estimate: &LowRankP, model: &ProbabilityModel) -> Result<f64> {
    let truth = Factored::of_model(model);
    let denom = truth.frob();
    let num = Factored::of(estimate).minus(truth)?.frob();
    Ok(num / denom)
}

/// `(P_a + P_b) / 2`, represented exactly by stacking both factors.
pub fn pooled_average(a: &LowRankP, b: &LowRankP) -> Result<LowRankP> {
    if a.n() != b.n() {
        return Err(Error::shape(format!("{} vs {} rows", a.n(), b.n())));
    }
    let (a, b) = canonical(a, b);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let cols: Vec<_> = (0..a.p)
        .map(|k| a.x.column(k) * h)
        .chain((0..b.p).map(|k| b.x.column(k) * h))
        .chain((a.p..a.d()).map(|k| a.x.column(k) * h))
        .chain((b.p..b.d()).map(|k| b.x.column(k) * h))
        .collect();
    let x = DMatrix::from_columns(&cols);
    LowRankP::new(x, a.p + b.p)
}

/// Row-major copy of the selected rows with per-row norms of the positive and
/// negative parts, used to bound `P_ij` from above for thinning.
struct RowPack {
    d: usize,
    p: usize,
    data: Vec<f64>,
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl RowPack {
    fn new(lr: &LowRankP, idx: &[usize]) -> Result<Self> {
        let d = lr.d();
        let mut data = Vec::with_capacity(idx.len() * d);
        let mut pos = Vec::with_capacity(idx.len());
        let mut neg = Vec::with_capacity(idx.len());
        for &i in idx {
            if i >= lr.n() {
                return Err(Error::invalid(format!("row {i} out of range for n = {}", lr.n())));
            }
            let row: Vec<f64> = (0..d).map(|k| lr.x[(i, k)]).collect();
            pos.push(row[..lr.p].iter().map(|v| v * v).sum::<f64>().sqrt());
            neg.push(row[lr.p..].iter().map(|v| v * v).sum::<f64>().sqrt());
            data.extend(row);
        }
        Ok(RowPack { d, p: lr.p, data, pos, neg })
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.d..(r + 1) * self.d]
    }

    fn entry(&self, a: &[f64], other: &RowPack, c: usize) -> f64 {
        let b = other.row(c);
        let plus: f64 = a[..self.p].iter().zip(&b[..self.p]).map(|(u, v)| u * v).sum();
        let minus: f64 = a[self.p..].iter().zip(&b[self.p..]).map(|(u, v)| u * v).sum();
        plus - minus
    }

    fn max_parts(&self) -> (f64, f64) {
        (self.pos.iter().fold(0.0, |m: f64, v| m.max(*v)), self.neg.iter().fold(0.0, |m: f64, v| m.max(*v)))
    }
}

fn chunk_stream(seed: u64, tags: &[u64], chunk: usize) -> rng::StreamRng {
    let mut all = tags.to_vec();
    all.push(chunk as u64);
    rng::stream(seed, &all)
}

/// Symmetric hollow Bernoulli graph on `idx × idx` with edge probabilities
/// `clamp(P_{idx[r], idx[c]}, 0, 1)`. Node `r` of the result is `idx[r]`.
pub fn sample_symmetric(lr: &LowRankP, idx: &[usize], seed: u64, tags: &[u64]) -> Result<SparseGraph> {
    let pack = RowPack::new(lr, idx)?;
    let m = idx.len();
    let (mp, mn) = pack.max_parts();
    let upper: Vec<Vec<Vec<u32>>> = par::map_range(m.div_ceil(ROW_CHUNK), |c| {
        let mut rng = chunk_stream(seed, tags, c);
        let lo = c * ROW_CHUNK;
        (lo..(lo + ROW_CHUNK).min(m))
            .map(|r| {
                let a = pack.row(r);
                let q = (pack.pos[r] * mp + pack.neg[r] * mn).min(1.0);
                let mut row = Vec::new();
                rng::thinned_bernoulli(&mut rng, r + 1, m, q, |c| pack.entry(a, &pack, c), |c| row.push(c as u32));
                row
            })
            .collect()
    });
    let upper: Vec<Vec<u32>> = upper.into_iter().flatten().collect();
    Ok(SparseGraph::from_upper_rows(m, &upper))
}

/// Independent Bernoulli block with entries `clamp(P_{rows[r], cols[c]}, 0, 1)`.
/// The caller keeps `rows` and `cols` disjoint when symmetry matters.
pub fn sample_rectangular(lr: &LowRankP, rows: &[usize], cols: &[usize], seed: u64, tags: &[u64]) -> Result<SparseBlock> {
    rectangular_filtered(lr, rows, cols, seed, tags, |_, _| true)
}

/// Rectangular sampling where candidates failing `eligible(r, c)` are
/// discarded; those entries are never set.
fn rectangular_filtered<F>(lr: &LowRankP, rows: &[usize], cols: &[usize], seed: u64, tags: &[u64], eligible: F) -> Result<SparseBlock>
where
    F: Fn(usize, usize) -> bool + Sync,
{
    let rpack = RowPack::new(lr, rows)?;
    let cpack = RowPack::new(lr, cols)?;
    let (mp, mn) = cpack.max_parts();
    let m = cols.len();
    let out: Vec<Vec<Vec<u32>>> = par::map_range(rows.len().div_ceil(ROW_CHUNK), |c| {
        let mut rng = chunk_stream(seed, tags, c);
        let lo = c * ROW_CHUNK;
        (lo..(lo + ROW_CHUNK).min(rows.len()))
            .map(|r| {
                let a = rpack.row(r);
                let q = (rpack.pos[r] * mp + rpack.neg[r] * mn).min(1.0);
                let mut row = Vec::new();
                rng::thinned_bernoulli(
                    &mut rng,
                    0,
                    m,
                    q,
                    |c| if eligible(r, c) { rpack.entry(a, &cpack, c) } else { 0.0 },
                    |c| row.push(c as u32),
                );
                row
            })
            .collect()
    });
    Ok(SparseBlock::from_sorted_rows(m, out.into_iter().flatten().collect()))
}

/// Bernoulli block on `rows × cols` with entries `clamp(P_ij, 0, 1)` for
/// `i ≠ j`. Where the two index lists overlap, the overlapping square part is
/// symmetric and hollow: each unordered pair is drawn once.
pub fn sample_bernoulli_block(lr: &LowRankP, rows: &[usize], cols: &[usize], seed: u64) -> Result<SparseBlock> {
    let n = lr.n();
    let mut col_pos = vec![usize::MAX; n];
    for (c, &j) in cols.iter().enumerate() {
        if j >= n || col_pos[j] != usize::MAX {
            return Err(Error::invalid(format!("column index {j} repeated or out of range")));
        }
        col_pos[j] = c;
    }
    let mut in_rows = vec![false; n];
    for &i in rows {
        if i >= n || in_rows[i] {
            return Err(Error::invalid(format!("row index {i} repeated or out of range")));
        }
        in_rows[i] = true;
    }
    let overlap: Vec<usize> = (0..n).filter(|&v| in_rows[v] && col_pos[v] != usize::MAX).collect();
    let mut overlap_pos = vec![usize::MAX; n];
    for (k, &v) in overlap.iter().enumerate() {
        overlap_pos[v] = k;
    }
    let square = sample_symmetric(lr, &overlap, seed, &[rng::tag::BLOCK, 0])?;
    let both = |r: usize, c: usize| overlap_pos[rows[r]] != usize::MAX && overlap_pos[cols[c]] != usize::MAX;
    let rect = rectangular_filtered(lr, rows, cols, seed, &[rng::tag::BLOCK, 1], |r, c| !both(r, c))?;
    let merged = rows
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let mut row: Vec<u32> = rect.row(r).to_vec();
            if overlap_pos[i] != usize::MAX {
                row.extend(square.neighbors(overlap_pos[i]).iter().map(|&k| col_pos[overlap[k as usize]] as u32));
                row.sort_unstable();
            }
            row
        })
        .collect();
    Ok(SparseBlock::from_sorted_rows(cols.len(), merged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_mmsb_with_signature;
    use approx::assert_relative_eq;

    fn sample_lr(n: usize, d: usize, p: usize, seed: u64) -> LowRankP {
        let mut rng = rng::stream(seed, &[42]);
        use rand::Rng;
        LowRankP::new(DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 0.3), p).unwrap()
    }

    #[test]
    fn entries_match_dense() {
        let lr = sample_lr(12, 3, 2, 1);
        let dense = lr.to_dense();
        for i in 0..12 {
            for j in 0..12 {
                assert_relative_eq!(lr.entry(i, j), dense[(i, j)], epsilon = 1e-15);
            }
        }
        let mut y = vec![0.0; 12];
        let v: Vec<f64> = (0..12).map(|i| i as f64).collect();
        lr.apply(&v, &mut y);
        let yd = &dense * DVector::from_vec(v);
        for i in 0..12 {
            assert_relative_eq!(y[i], yd[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn distances_match_dense() {
        let a = sample_lr(40, 3, 1, 2);
        let b = sample_lr(40, 2, 2, 3);
        let diff = a.to_dense() - b.to_dense();
        assert_relative_eq!(frob_distance(&a, &b).unwrap(), diff.norm(), max_relative = 1e-10);
        let rows = diff.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
        assert_relative_eq!(two_inf_distance(&a, &b).unwrap(), rows, max_relative = 1e-10);
        assert_relative_eq!(a.frob_norm(), a.to_dense().norm(), max_relative = 1e-10);
    }

    #[test]
    fn distance_is_symmetric_bitwise_and_zero_on_self() {
        let a = sample_lr(30, 3, 2, 4);
        let b = sample_lr(30, 3, 2, 5);
        assert_eq!(frob_distance(&a, &b).unwrap().to_bits(), frob_distance(&b, &a).unwrap().to_bits());
        assert_eq!(frob_distance(&a, &a).unwrap(), 0.0);
        assert!(frob_distance(&a, &a.clone().scaled(1.0 + 1e-15)).unwrap() <= 1e-12 * a.frob_norm());
        assert!(frob_distance(&a, &sample_lr(31, 3, 2, 5)).is_err());
    }

    #[test]
    fn pooled_average_is_exact_and_symmetric() {
        let a = sample_lr(20, 3, 2, 6);
        let b = sample_lr(20, 2, 1, 7);
        let avg = pooled_average(&a, &b).unwrap();
        assert_eq!(avg, pooled_average(&b, &a).unwrap());
        assert_eq!((avg.p(), avg.q()), (3, 2));
        let want = (a.to_dense() + b.to_dense()) * 0.5;
        assert_relative_eq!(avg.to_dense(), want, epsilon = 1e-14);
    }

    #[test]
    fn model_factor_matches_dense_probabilities() {
        let model = generate_mmsb_with_signature(60, 3, 2, 0.3, 0.5, 8).unwrap();
        let lr = LowRankP::from_model(&model).unwrap();
        assert_eq!((lr.p(), lr.q()), (2, 1));
        assert_relative_eq!(lr.to_dense(), model.to_dense(), epsilon = 1e-12);
        assert!(relative_frob_error(&lr, &model).unwrap() < 1e-12);
    }

    #[test]
    fn exact_spectrum_matches_dense_ase() {
        let lr = sample_lr(50, 3, 2, 9);
        let (e, pair) = lr.spectrum(3).unwrap();
        let (e2, pair2) = crate::spectral::ase_with_spectrum(&lr.to_dense(), 3, &Default::default()).unwrap();
        assert_eq!(e.p(), e2.p());
        for k in 0..3 {
            assert_relative_eq!(pair.values[k], pair2.values[k], max_relative = 1e-10);
        }
        assert_relative_eq!(e.x(), e2.x(), epsilon = 1e-8);
        assert!(matches!(lr.spectrum(4), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn symmetric_sampling_is_hollow_and_unbiased() {
        let lr = sample_lr(300, 2, 1, 10);
        let idx: Vec<usize> = (0..300).step_by(2).collect();
        let g = sample_symmetric(&lr, &idx, 1, &[3]).unwrap();
        assert!(g.check_invariants());
        assert!((0..g.n()).all(|i| !g.has_edge(i, i)));
        assert_eq!(g, sample_symmetric(&lr, &idx, 1, &[3]).unwrap());

        let mut mean = 0.0;
        let mut var = 0.0;
        for r in 0..idx.len() {
            for c in r + 1..idx.len() {
                let p = lr.entry(idx[r], idx[c]).clamp(0.0, 1.0);
                mean += p;
                var += p * (1.0 - p);
            }
        }
        let reps = 20;
        let total: usize = (0..reps).map(|s| sample_symmetric(&lr, &idx, s, &[3]).unwrap().num_edges()).sum();
        let sd = (var / reps as f64).sqrt();
        assert!(((total as f64 / reps as f64) - mean).abs() < 4.0 * sd, "{total} vs {mean}");
    }

    #[test]
    fn rectangular_sampling_is_unbiased() {
        let lr = sample_lr(400, 3, 2, 11);
        let rows: Vec<usize> = (0..250).collect();
        let cols: Vec<usize> = (250..400).collect();
        let mut mean = 0.0;
        let mut var = 0.0;
        for &i in &rows {
            for &j in &cols {
                let p = lr.entry(i, j).clamp(0.0, 1.0);
                mean += p;
                var += p * (1.0 - p);
            }
        }
        let reps = 20;
        let total: usize = (0..reps).map(|s| sample_rectangular(&lr, &rows, &cols, s, &[4]).unwrap().nnz()).sum();
        let sd = (var / reps as f64).sqrt();
        assert!(((total as f64 / reps as f64) - mean).abs() < 4.0 * sd, "{total} vs {mean}");
        let blk = sample_rectangular(&lr, &rows, &cols, 0, &[4]).unwrap();
        assert_eq!((blk.nrows(), blk.ncols()), (250, 150));
        assert!(sample_rectangular(&lr, &[400], &cols, 0, &[4]).is_err());
    }

    #[test]
    fn norms_of_identity_factor() {
        let lr = LowRankP::new(DMatrix::identity(2, 2), 2).unwrap();
        let nm = lr.norms();
        assert_relative_eq!(nm.factor_frobenius, 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(nm.factor_two_to_infinity, 1.0, epsilon = 1e-15);
        assert_relative_eq!(nm.frobenius, 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(nm.two_to_infinity, 1.0, epsilon = 1e-14);
        let zero = LowRankP::new(DMatrix::zeros(3, 2), 1).unwrap().norms();
        assert_eq!(zero.frobenius + zero.two_to_infinity + zero.factor_frobenius + zero.factor_two_to_infinity, 0.0);
    }

    #[test]
    fn overlapping_block_is_symmetric_on_overlap() {
        let lr = LowRankP::new(DMatrix::from_element(30, 1, 0.7), 1).unwrap();
        let rows: Vec<usize> = (0..20).collect();
        let cols: Vec<usize> = (10..30).rev().collect();
        let blk = sample_bernoulli_block(&lr, &rows, &cols, 5).unwrap();
        assert_eq!(blk, sample_bernoulli_block(&lr, &rows, &cols, 5).unwrap());
        let at = |i: usize, j: usize| blk.contains(i, cols.iter().position(|&c| c == j).unwrap());
        for i in 10..20 {
            assert!(!at(i, i));
            for j in 10..20 {
                assert_eq!(at(i, j), at(j, i));
            }
        }
        let full = LowRankP::new(DMatrix::from_element(30, 1, 1.0), 1).unwrap();
        let blk = sample_bernoulli_block(&full, &rows, &cols, 5).unwrap();
        assert_eq!(blk.nnz(), 20 * 20 - 10);
        assert!(sample_bernoulli_block(&full, &[1, 1], &cols, 5).is_err());
    }

    #[test]
    fn certain_and_impossible_entries() {
        let ones = LowRankP::new(DMatrix::from_element(10, 1, 1.0), 1).unwrap();
        let idx: Vec<usize> = (0..10).collect();
        assert_eq!(sample_symmetric(&ones, &idx, 0, &[]).unwrap().num_edges(), 45);
        let neg = LowRankP::new(DMatrix::from_element(10, 1, 1.0), 0).unwrap();
        assert_eq!(sample_symmetric(&neg, &idx, 0, &[]).unwrap().num_edges(), 0);
    }
}

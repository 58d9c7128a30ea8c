//! Estimation by predictive subsampling.
//!
//! A uniform subsample `S` of `m` nodes is embedded with the signed ASE of
//! the induced subgraph `A_S`; every other node `i` is then placed by linear
//! interpolation through its edges into `S`:
//! `x̂ᵢ = A_{i,S} X̂_S (X̂_Sᵀ X̂_S)⁻¹ I_{p,q}`. Because `X̂_Sᵀ X̂_S = |D_{A_S}|`,
//! the map is `C = U |D|^{-1/2} I_{p,q}` and no Gram matrix is inverted.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{extract_blocks, uniform_subsample, ProbabilityModel, SparseBlock, SparseGraph, SubsampleIndex};
use crate::lowrank::LowRankP;
use crate::spectral::{ase_with_spectrum, EigsOptions, Embedding, SpectralPair, SymmetricOperator};

/// The out-of-sample block `A_{Sᶜ,S}` (or a noiseless stand-in).
pub trait CrossBlock: Sync {
    fn nrows(&self) -> usize;

    fn ncols(&self) -> usize;

    /// `self · c` for an `m × d` matrix `c`.
    fn times(&self, c: &DMatrix<f64>) -> DMatrix<f64>;
}

impl CrossBlock for SparseBlock {
    fn nrows(&self) -> usize {
        SparseBlock::nrows(self)
    }

    fn ncols(&self) -> usize {
        SparseBlock::ncols(self)
    }

    fn times(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let width = c.ncols();
        let rhs: Vec<f64> = c.transpose().as_slice().to_vec();
        DMatrix::from_row_slice(SparseBlock::nrows(self), width, &self.mul_dense(&rhs, width))
    }
}

impl CrossBlock for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn times(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        self * c
    }
}

/// `left · rightᵀ` with thin factors.
#[derive(Clone, Debug)]
pub struct FactorCross {
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

impl CrossBlock for FactorCross {
    fn nrows(&self) -> usize {
        self.left.nrows()
    }

    fn ncols(&self) -> usize {
        self.right.nrows()
    }

    fn times(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        &self.left * (self.right.transpose() * c)
    }
}

/// Anything PredSub can read: an observed graph, or a probability matrix
/// for noiseless checks.
pub trait AdjacencySource: Sync {
    type Sub: SymmetricOperator;
    type Cross: CrossBlock;

    fn n(&self) -> usize;

    /// The subgraph block on `S` and the cross block `Sᶜ × S`, rows in
    /// ascending complement order.
    fn split(&self, s: &SubsampleIndex) -> Result<(Self::Sub, Self::Cross)>;
}

impl AdjacencySource for SparseGraph {
    type Sub = SparseGraph;
    type Cross = SparseBlock;

    fn n(&self) -> usize {
        SparseGraph::n(self)
    }

    fn split(&self, s: &SubsampleIndex) -> Result<(SparseGraph, SparseBlock)> {
        extract_blocks(self, s)
    }
}

impl AdjacencySource for DMatrix<f64> {
    type Sub = DMatrix<f64>;
    type Cross = DMatrix<f64>;

    fn n(&self) -> usize {
        self.nrows()
    }

    fn split(&self, s: &SubsampleIndex) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        check_n(self.nrows(), s)?;
        let rows = self.select_rows(s.sample());
        let cross = self.select_rows(s.complement()).select_columns(s.sample());
        Ok((rows.select_columns(s.sample()), cross))
    }
}

/// The probability matrix itself, diagonal included.
impl AdjacencySource for ProbabilityModel {
    type Sub = ProbabilityModel;
    type Cross = FactorCross;

    fn n(&self) -> usize {
        ProbabilityModel::n(self)
    }

    fn split(&self, s: &SubsampleIndex) -> Result<(ProbabilityModel, FactorCross)> {
        check_n(ProbabilityModel::n(self), s)?;
        let d = self.d();
        let left = DMatrix::from_fn(s.n() - s.m(), d, |r, k| self.weighted_row(s.complement()[r])[k]);
        let right = DMatrix::from_fn(s.m(), d, |r, k| self.membership_row(s.sample()[r])[k]);
        Ok((self.restrict(s.sample()), FactorCross { left, right }))
    }
}

/// A factorized matrix, diagonal included.
impl AdjacencySource for LowRankP {
    type Sub = LowRankP;
    type Cross = FactorCross;

    fn n(&self) -> usize {
        LowRankP::n(self)
    }

    fn split(&self, s: &SubsampleIndex) -> Result<(LowRankP, FactorCross)> {
        check_n(LowRankP::n(self), s)?;
        let mut left = self.x().select_rows(s.complement());
        for k in self.p()..self.d() {
            left.column_mut(k).neg_mut();
        }
        let sub = self.restrict(s.sample());
        let right = sub.x().clone();
        Ok((sub, FactorCross { left, right }))
    }
}

fn check_n(n: usize, s: &SubsampleIndex) -> Result<()> {
    if n != s.n() {
        return Err(Error::shape(format!("source has {n} nodes, subsample is over {}", s.n())));
    }
    Ok(())
}

/// Wall-clock seconds per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub sample: f64,
    pub eig: f64,
    pub out_of_sample: f64,
    pub assemble: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.sample + self.eig + self.out_of_sample + self.assemble
    }
}

#[derive(Clone, Debug)]
pub struct PredSubResult {
    /// Latent positions for all nodes, in original node order.
    pub embedding: Embedding,
    pub subsample: SubsampleIndex,
    /// Signature-ordered eigenpairs of the subgraph block.
    pub spectrum: SpectralPair,
    /// Out-of-sample nodes with no edge into `S`; their rows are zero.
    pub isolated: usize,
    pub timings: StageTimings,
}

impl PredSubResult {
    pub fn p_hat(&self) -> usize {
        self.embedding.p()
    }

    /// `P̂ = X̂ I_{p̂,q̂} X̂ᵀ`.
    pub fn estimate(&self) -> LowRankP {
        LowRankP::from_embedding(&self.embedding)
    }

    /// Rows of the embedding belonging to `S`, in ascending node order.
    pub fn subsample_rows(&self) -> DMatrix<f64> {
        self.embedding.x().select_rows(self.subsample.sample())
    }
}

/// `C = U |D|^{-1/2} I_{p,q}` for a signature-ordered spectrum.
pub fn scaling_matrix(spectrum: &SpectralPair, p: usize) -> DMatrix<f64> {
    let mut c = spectrum.vectors.clone();
    for (k, mut col) in c.column_iter_mut().enumerate() {
        let s = if k < p { 1.0 } else { -1.0 };
        col *= s / spectrum.values[k].abs().sqrt();
    }
    c
}

/// `cross · X_S (X_Sᵀ X_S)⁻¹ I_{p,q}` for an arbitrary embedding of `S`.
pub fn out_of_sample_rows<C: CrossBlock + ?Sized>(cross: &C, x_s: &Embedding) -> Result<DMatrix<f64>> {
    if cross.ncols() != x_s.n() {
        return Err(Error::shape(format!("cross block has {} columns, embedding {} rows", cross.ncols(), x_s.n())));
    }
    let gram = x_s.x().transpose() * x_s.x();
    let chol = gram.clone().cholesky().ok_or(Error::RankDeficient { value: 0.0, tol: 0.0 })?;
    let mut c = x_s.x() * chol.inverse();
    for k in x_s.p()..x_s.d() {
        c.column_mut(k).neg_mut();
    }
    Ok(cross.times(&c))
}

/// PredSub on a fresh uniform subsample of size `m`.
pub fn predsub_estimate<A: AdjacencySource + ?Sized>(source: &A, m: usize, d: usize, seed: u64) -> Result<PredSubResult> {
    let t = Instant::now();
    if m < d {
        return Err(Error::invalid(format!("subsample size m = {m} is below d = {d}")));
    }
    let s = uniform_subsample(source.n(), m, seed)?;
    let sample_time = t.elapsed().as_secs_f64();
    let mut out = predsub_with_subsample(source, &s, d, &EigsOptions::default())?;
    out.timings.sample += sample_time;
    Ok(out)
}

/// PredSub for a given subsample.
pub fn predsub_with_subsample<A: AdjacencySource + ?Sized>(
    source: &A,
    s: &SubsampleIndex,
    d: usize,
    opts: &EigsOptions,
) -> Result<PredSubResult> {
    let t = Instant::now();
    let (sub, cross) = source.split(s)?;
    let split_time = t.elapsed().as_secs_f64();
    let mut out = predsub_from_blocks(&sub, &cross, s, d, opts)?;
    out.timings.sample += split_time;
    Ok(out)
}

/// PredSub from already-extracted blocks (`sub` on `S`, `cross` on `Sᶜ × S`).
pub fn predsub_from_blocks<O, C>(sub: &O, cross: &C, s: &SubsampleIndex, d: usize, opts: &EigsOptions) -> Result<PredSubResult>
where
    O: SymmetricOperator + ?Sized,
    C: CrossBlock + ?Sized,
{
    let m = s.m();
    if sub.dim() != m || cross.ncols() != m || cross.nrows() != s.n() - m {
        return Err(Error::shape(format!(
            "blocks {}x{} and {}x{} do not match m = {m}, n = {}",
            sub.dim(),
            sub.dim(),
            cross.nrows(),
            cross.ncols(),
            s.n()
        )));
    }
    if m < d {
        return Err(Error::invalid(format!("subsample size m = {m} is below d = {d}")));
    }
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let (x_s, spectrum) = ase_with_spectrum(sub, d, opts)?;
    timings.eig = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let p = x_s.p();
    let x_c = cross.times(&scaling_matrix(&spectrum, p));
    timings.out_of_sample = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let isolated = x_c.row_iter().filter(|r| r.iter().all(|&v| v == 0.0)).count();
    let mut x = DMatrix::zeros(s.n(), d);
    for (r, &v) in s.sample().iter().enumerate() {
        x.row_mut(v).copy_from(&x_s.x().row(r));
    }
    for (r, &v) in s.complement().iter().enumerate() {
        x.row_mut(v).copy_from(&x_c.row(r));
    }
    timings.assemble = t.elapsed().as_secs_f64();

    Ok(PredSubResult { embedding: Embedding::new(x, p)?, subsample: s.clone(), spectrum, isolated, timings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_mmsb_with_signature, sample_adjacency};
    use crate::lowrank::relative_frob_error;
    use crate::spectral::ase;
    use approx::assert_relative_eq;

    #[test]
    fn full_sample_equals_ase() {
        let model = generate_mmsb_with_signature(120, 3, 2, 0.5, 0.5, 1).unwrap();
        let g = sample_adjacency(&model, 2);
        let r = predsub_estimate(&g, 120, 3, 7).unwrap();
        let e = ase(&g, 3).unwrap();
        assert_eq!(r.embedding, e);
        assert_eq!(r.isolated, 0);
    }

    #[test]
    fn noiseless_model_is_recovered() {
        let model = generate_mmsb_with_signature(150, 3, 2, 0.4, 0.5, 3).unwrap();
        for m in [3, 10, 60] {
            let r = predsub_estimate(&model, m, 3, 11).unwrap();
            assert!(relative_frob_error(&r.estimate(), &model).unwrap() < 1e-8, "m = {m}");
        }
        let lr = LowRankP::from_model(&model).unwrap();
        let r = predsub_estimate(&lr, 20, 3, 12).unwrap();
        assert!(relative_frob_error(&r.estimate(), &model).unwrap() < 1e-8);
    }

    #[test]
    fn zero_cross_row_gives_zero_position() {
        let x = Embedding::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.3, 1.0, 0.5, -0.4]), 1).unwrap();
        let cross = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let out = out_of_sample_rows(&cross, &x).unwrap();
        assert_eq!(out.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
    }

    #[test]
    fn interpolation_recovers_in_sample_row() {
        let x = DMatrix::from_fn(8, 3, |i, k| (((i + 1) * (k + 1)) as f64 * 0.61).sin());
        let lr = LowRankP::new(x.clone(), 2).unwrap();
        let x_s = Embedding::new(x.rows(0, 6).into_owned(), 2).unwrap();
        // P_{j,S} for j = 7, S = first six rows
        let row = DMatrix::from_fn(1, 6, |_, c| lr.entry(7, c));
        let got = out_of_sample_rows(&row, &x_s).unwrap();
        assert_relative_eq!(got, x.rows(7, 1).into_owned(), epsilon = 1e-10);
    }

    #[test]
    fn sparse_cross_matches_dense_product() {
        let model = generate_mmsb_with_signature(100, 3, 2, 0.6, 0.5, 4).unwrap();
        let g = sample_adjacency(&model, 5);
        let s = uniform_subsample(100, 40, 6).unwrap();
        let (sub, cross) = extract_blocks(&g, &s).unwrap();
        let x_s = ase(&sub, 3).unwrap();
        let dense = DMatrix::from_fn(60, 40, |r, c| f64::from(cross.contains(r, c) as u8));
        let gram_inv = (x_s.x().transpose() * x_s.x()).try_inverse().unwrap();
        let j = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(x_s.metric()));
        let want = &dense * x_s.x() * gram_inv * j;
        assert_relative_eq!(out_of_sample_rows(&cross, &x_s).unwrap(), want, epsilon = 1e-10);

        let r = predsub_with_subsample(&g, &s, 3, &EigsOptions::default()).unwrap();
        assert_relative_eq!(r.embedding.x().select_rows(s.complement()), want, epsilon = 1e-10);
        assert_eq!(r.subsample_rows(), *x_s.x());
    }

    #[test]
    fn rejects_bad_sizes() {
        let g = SparseGraph::empty(10);
        assert!(predsub_estimate(&g, 2, 3, 0).is_err());
        assert!(predsub_estimate(&g, 11, 3, 0).is_err());
        assert!(matches!(predsub_estimate(&g, 5, 1, 0), Err(Error::RankDeficient { .. })));
    }
}

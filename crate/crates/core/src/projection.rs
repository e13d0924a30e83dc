//! Projection pairs (Pb, Pp).
//!
//! Rows of `pb` express the subspace basis in the full basis window, rows of
//! `pp` give the subspace coordinates of a full coefficient vector. A valid
//! pair has Pb·Ppᵀ = I, so Π = Pbᵀ·Pp is a projector on the window.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::basis::{count, IndexSet, MultiIndex};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionPair {
    pub pb: DMatrix<f64>,
    pub pp: DMatrix<f64>,
    pub dim: usize,
    /// Highest basis degree represented by the columns.
    pub window_cap: usize,
    pub label: String,
}

impl ProjectionPair {
    pub fn subspace_dim(&self) -> usize {
        self.pb.nrows()
    }

    pub fn window_len(&self) -> usize {
        self.pb.ncols()
    }

    /// Π = Pbᵀ·Pp.
    pub fn projector(&self) -> DMatrix<f64> {
        self.pb.transpose() * &self.pp
    }
}

fn truncation(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Pb = Pp = T = (I 0) selecting all indices of degree ≤ `m`, on a window of
/// degree `m + 2`.
pub fn cutoff_projection(m: usize, dim: usize) -> Result<ProjectionPair> {
    cutoff_projection_in(m, dim, m + 2)
}

pub fn cutoff_projection_in(m: usize, dim: usize, window_cap: usize) -> Result<ProjectionPair> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("cut-off order must be at least 2, got {m}")));
    }
    if dim == 0 || window_cap < m {
        return Err(Error::InvalidParameter("window smaller than the retained degree".into()));
    }
    let t = truncation(count(m, dim), count(window_cap, dim));
    Ok(ProjectionPair { pb: t.clone(), pp: t, dim, window_cap, label: format!("cutoff(M={m}, D={dim})") })
}

/// Ordered moment hierarchy of order `m`: the span of 𝓗_α for |α| ≤ m−1 plus
/// the contractions Σ_d 𝓗_{α+2e_d} for |α| = m−2, with the orthogonal Pp of
/// the Maxwellian-weighted Hermite basis. The Gram matrix is diag(α!/θ^|α|);
/// every contraction lives in a single degree, so Pp does not depend on θ.
pub fn ordered_hierarchy_projection(m: usize, dim: usize) -> Result<ProjectionPair> {
    if m < 2 || dim == 0 {
        return Err(Error::InvalidParameter(format!("ordered hierarchy needs M ≥ 2 and D ≥ 1, got M={m}, D={dim}")));
    }
    let window_cap = m + 2;
    let set = IndexSet::new(dim, window_cap);
    let head = count(m - 1, dim);
    let tail: Vec<MultiIndex> = set.degree_range(m - 2).map(|i| set.get(i).clone()).collect();
    let n = head + tail.len();
    let mut pb = DMatrix::zeros(n, set.len());
    for i in 0..head {
        pb[(i, i)] = 1.0;
    }
    for (r, alpha) in tail.iter().enumerate() {
        for d in 0..dim {
            let col = set.ordinal(&alpha.add_unit(d, 2)).expect("within window");
            pb[(head + r, col)] = 1.0;
        }
    }
    let gram = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(set.len(), set.iter().map(|a| a.factorial())));
    let gram_sub = &pb * &gram * pb.transpose();
    let mut pp = orthogonal_pp_from_gram(&pb, &gram_sub, &gram)?;
    // Exact zeros and ones where the structure dictates them.
    pp.iter_mut().for_each(|v| {
        if v.abs() < 1e-15 {
            *v = 0.0;
        }
    });
    for i in 0..head {
        pp.row_mut(i).fill(0.0);
        pp[(i, i)] = 1.0;
    }
    Ok(ProjectionPair { pb, pp, dim, window_cap, label: format!("ordered(M={m}, D={dim})") })
}

/// Pp = G_sub⁻¹·Pb·G_full, the orthogonal projection for the given Gram matrices.
pub fn orthogonal_pp_from_gram(pb: &DMatrix<f64>, gram_sub: &DMatrix<f64>, gram_full: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if gram_sub.nrows() != pb.nrows() || gram_full.nrows() != pb.ncols() {
        return Err(Error::DimensionMismatch { expected: pb.nrows(), found: gram_sub.nrows() });
    }
    let svd = gram_sub.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Singular("subspace Gram matrix".into()));
    }
    let lu = gram_sub.clone().lu();
    lu.solve(&(pb * gram_full)).ok_or_else(|| Error::Singular("subspace Gram matrix".into()))
}

/// (T, T − ((M+1)/θ)·E_{M+1,M+3}) for the 1D Hermite basis, 1-based indices.
pub fn shifted_projection(m: usize, theta: f64) -> Result<ProjectionPair> {
    shifted_projection_in(m, theta, m + 2)
}

pub fn shifted_projection_in(m: usize, theta: f64, window_cap: usize) -> Result<ProjectionPair> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!("shifted projection needs M ≥ 3, got {m}")));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    if window_cap < m + 2 {
        return Err(Error::InvalidParameter(format!(
            "window of degree {window_cap} cannot hold column {} of the shifted projection",
            m + 3
        )));
    }
    let mut p = cutoff_projection_in(m, 1, window_cap)?;
    p.pp[(m, m + 2)] = -((m + 1) as f64) / theta;
    p.label = format!("shifted(M={m}, theta={theta})");
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionVerdict {
    pub pass: bool,
    pub full_row_rank: bool,
    /// max |Pb·Ppᵀ − I|
    pub biorthogonality_residual: f64,
    /// max |Π² − Π|
    pub idempotence_residual: f64,
    pub max_residual: f64,
}

pub const PROJECTION_TOL: f64 = 1e-12;

pub fn validate_projection(p: &ProjectionPair) -> ProjectionVerdict {
    let n = p.subspace_dim();
    let sv = p.pb.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|s| **s > 1e-10 * smax).count();
    let full_row_rank = smax > 0.0 && rank == n;
    let bi = (&p.pb * p.pp.transpose() - DMatrix::<f64>::identity(n, n)).abs().max();
    let pi = p.projector();
    let idem = (&pi * &pi - &pi).abs().max();
    let max_residual = bi.max(idem);
    ProjectionVerdict {
        pass: full_row_rank && max_residual <= PROJECTION_TOL,
        full_row_rank,
        biorthogonality_residual: bi,
        idempotence_residual: idem,
        max_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{gram_matrix, BasisFamily};

    #[test]
    fn cutoff_is_truncation() {
        let p = cutoff_projection(3, 1).unwrap();
        assert_eq!(p.pb.nrows(), 4);
        assert_eq!(p.pb.ncols(), 6);
        assert_eq!(p.pb, p.pp);
        let v = validate_projection(&p);
        assert!(v.pass);
        assert_eq!(v.max_residual, 0.0);
        let f = nalgebra::DVector::from_fn(6, |i, _| i as f64 + 1.0);
        let pf = p.projector() * f;
        assert_eq!(pf.as_slice(), &[1.0, 2.0, 3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn thirteen_moment_weights() {
        let p = ordered_hierarchy_projection(3, 3).unwrap();
        assert_eq!(p.subspace_dim(), 13);
        let set = IndexSet::new(3, 5);
        let col = |c: [usize; 3]| set.ordinal(&MultiIndex::new(c.to_vec())).unwrap();
        assert_eq!(p.pp[(10, col([3, 0, 0]))], 0.6);
        assert_eq!(p.pp[(10, col([1, 2, 0]))], 0.2);
        assert_eq!(p.pp[(10, col([1, 0, 2]))], 0.2);
        assert_eq!(p.pp[(12, col([0, 0, 3]))], 0.6);
        assert!(validate_projection(&p).pass);
    }

    #[test]
    fn hierarchy_sizes() {
        let sizes: Vec<usize> = (2..=5).map(|m| ordered_hierarchy_projection(m, 3).unwrap().subspace_dim()).collect();
        assert_eq!(sizes, vec![5, 13, 26, 45]);
    }

    #[test]
    fn gram_construction_reproduces_hierarchy() {
        for (m, d) in [(3, 3), (4, 2), (5, 3), (2, 3)] {
            let p = ordered_hierarchy_projection(m, d).unwrap();
            let fam = BasisFamily::hermite(vec![0.2; d], 1.7).unwrap();
            let g = gram_matrix(&fam, m + 2).unwrap();
            let gs = &p.pb * &g * p.pb.transpose();
            let pp = orthogonal_pp_from_gram(&p.pb, &gs, &g).unwrap();
            let e = (pp - &p.pp).abs().max(); assert!(e < 1e-12, "{m} {d} {e}");
        }
    }

    #[test]
    fn gram_construction_of_cutoff() {
        let p = cutoff_projection(4, 2).unwrap();
        let fam = BasisFamily::hermite(vec![0.0, 1.0], 0.6).unwrap();
        let g = gram_matrix(&fam, 6).unwrap();
        let gs = &p.pb * &g * p.pb.transpose();
        let pp = orthogonal_pp_from_gram(&p.pb, &gs, &g).unwrap();
        assert!((pp - &p.pp).abs().max() < 1e-12);
    }

    #[test]
    fn rank_deficient_basis_is_rejected() {
        let mut pb = cutoff_projection(3, 1).unwrap().pb;
        let row = pb.row(0).clone_owned();
        pb.set_row(1, &row);
        let g = DMatrix::identity(6, 6);
        let gs = &pb * &g * pb.transpose();
        assert!(matches!(orthogonal_pp_from_gram(&pb, &gs, &g), Err(Error::Singular(_))));
    }

    #[test]
    fn shifted_entry() {
        let p = shifted_projection(3, 1.0).unwrap();
        assert_eq!(p.pp[(3, 5)], -4.0);
        let q = shifted_projection(3, 2.0).unwrap();
        assert_eq!(q.pp[(3, 5)], -2.0);
        assert!(validate_projection(&p).pass);
        assert!(shifted_projection_in(3, 1.0, 4).is_err());
    }

    #[test]
    fn scaled_pp_fails() {
        let mut p = cutoff_projection(3, 1).unwrap();
        p.pp *= 2.0;
        let v = validate_projection(&p);
        assert!(!v.pass);
        assert!((v.biorthogonality_residual - 1.0).abs() < 1e-15);
    }
}

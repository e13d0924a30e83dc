//! Multi-indices and the weighted Hermite families used as expansion bases.
//!
//! Coefficient vectors are indexed by α ∈ ℕᴰ in graded lexicographic order:
//! lower total degree first, and inside one degree the first component runs
//! from high to low. In 2D that is (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), …
//! so truncating at degree M keeps a prefix of length `count(M, D)`.
//!
//! Three families are supported:
//!
//! * `HermiteUTheta`: 𝓗_α = (−1)^|α| ∂^α ω with the Maxwellian weight
//!   ω = (2πθ)^{−D/2} exp(−|ξ−u|²/2θ),
//! * `GaussianHermite`: the same construction with an anisotropic Gaussian
//!   of covariance Θ,
//! * `ScaledHermite`: 𝒽_α(v) with the standard normal weight in v.
//!
//! The infinite matrices of the recurrence and derivative relations are
//! materialised as finite [`MatrixWindow`]s.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of multi-indices in `dim` dimensions with degree ≤ `max_degree`.
pub fn count(max_degree: usize, dim: usize) -> usize {
    binomial(max_degree + dim, dim)
}

/// Number of multi-indices in `dim` dimensions with degree exactly `degree`.
pub fn count_of_degree(degree: usize, dim: usize) -> usize {
    if dim == 0 {
        return usize::from(degree == 0);
    }
    binomial(degree + dim - 1, dim - 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    /// `times · e_d`.
    pub fn unit(dim: usize, d: usize, times: usize) -> Self {
        let mut c = vec![0; dim];
        c[d] = times;
        MultiIndex(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, d: usize) -> usize {
        self.0[d]
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut c = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            c.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(c))
    }

    pub fn add_unit(&self, d: usize, times: usize) -> MultiIndex {
        let mut c = self.0.clone();
        c[d] += times;
        MultiIndex(c)
    }

    pub fn sub_unit(&self, d: usize, times: usize) -> Option<MultiIndex> {
        let mut c = self.0.clone();
        c[d] = c[d].checked_sub(times)?;
        Some(MultiIndex(c))
    }

    /// α! = Π α_d!
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn rank_in_degree(c: &[usize], degree: usize) -> usize {
    if c.len() <= 1 {
        return 0;
    }
    let rest = c.len() - 1;
    let before: usize = (c[0] + 1..=degree)
        .map(|k| count_of_degree(degree - k, rest))
        .sum();
    before + rank_in_degree(&c[1..], degree - c[0])
}

fn unrank_in_degree(mut r: usize, degree: usize, dim: usize) -> Vec<usize> {
    if dim == 1 {
        return vec![degree];
    }
    for k in (0..=degree).rev() {
        let block = count_of_degree(degree - k, dim - 1);
        if r < block {
            let mut c = vec![k];
            c.extend(unrank_in_degree(r, degree - k, dim - 1));
            return c;
        }
        r -= block;
    }
    unreachable!("rank out of range for degree block")
}

/// Ordinal N(α) in the graded lexicographic ordering.
pub fn index_of(alpha: &MultiIndex, dim: usize) -> Result<usize> {
    if alpha.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: alpha.dim() });
    }
    let n = alpha.degree();
    let below = if n == 0 { 0 } else { count(n - 1, dim) };
    Ok(below + rank_in_degree(alpha.components(), n))
}

/// Inverse of [`index_of`]. Panics if `dim == 0`.
pub fn index_from_ordinal(n: usize, dim: usize) -> MultiIndex {
    assert!(dim > 0, "multi-indices need at least one dimension");
    let mut degree = 0;
    while count(degree, dim) <= n {
        degree += 1;
    }
    let below = if degree == 0 { 0 } else { count(degree - 1, dim) };
    MultiIndex(unrank_in_degree(n - below, degree, dim))
}

/// All multi-indices of degree ≤ `cap`, in order, with a reverse lookup.
#[derive(Clone, Debug)]
pub struct IndexSet {
    dim: usize,
    cap: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl IndexSet {
    pub fn new(dim: usize, cap: usize) -> Self {
        let n = count(cap, dim);
        let indices: Vec<MultiIndex> = (0..n).map(|i| index_from_ordinal(i, dim)).collect();
        let lookup = indices.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        IndexSet { dim, cap, indices, lookup }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &MultiIndex> {
        self.indices.iter()
    }

    /// `None` when α lies beyond the cap.
    pub fn ordinal(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Ordinal of `times · e_d`.
    pub fn unit(&self, d: usize, times: usize) -> usize {
        self.ordinal(&MultiIndex::unit(self.dim, d, times))
            .expect("unit index beyond cap")
    }

    /// Ordinals of degree exactly `degree`, as a range.
    pub fn degree_range(&self, degree: usize) -> std::ops::Range<usize> {
        let lo = if degree == 0 { 0 } else { count(degree - 1, self.dim) };
        lo..count(degree, self.dim).min(self.len())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    HermiteUTheta,
    GaussianHermite,
    ScaledHermite,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::HermiteUTheta => "HermiteUTheta",
            FamilyKind::GaussianHermite => "GaussianHermite",
            FamilyKind::ScaledHermite => "ScaledHermite",
        }
    }
}

/// A basis family together with the macroscopic parameters its weight uses.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisFamily {
    HermiteUTheta { u: Vec<f64>, theta: f64 },
    GaussianHermite { u: Vec<f64>, theta: DMatrix<f64> },
    ScaledHermite { dim: usize },
}

impl BasisFamily {
    pub fn hermite(u: Vec<f64>, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
        }
        if u.is_empty() {
            return Err(Error::InvalidParameter("empty velocity".into()));
        }
        Ok(BasisFamily::HermiteUTheta { u, theta })
    }

    pub fn gaussian(u: Vec<f64>, theta: DMatrix<f64>) -> Result<Self> {
        let d = u.len();
        if theta.nrows() != d || theta.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: theta.nrows() });
        }
        check_spd(&theta)?;
        Ok(BasisFamily::GaussianHermite { u, theta })
    }

    pub fn scaled(dim: usize) -> Self {
        BasisFamily::ScaledHermite { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            BasisFamily::HermiteUTheta { u, .. } | BasisFamily::GaussianHermite { u, .. } => u.len(),
            BasisFamily::ScaledHermite { dim } => *dim,
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            BasisFamily::HermiteUTheta { .. } => FamilyKind::HermiteUTheta,
            BasisFamily::GaussianHermite { .. } => FamilyKind::GaussianHermite,
            BasisFamily::ScaledHermite { .. } => FamilyKind::ScaledHermite,
        }
    }

    /// Per-axis centre and variance for the isotropic families.
    fn axis_params(&self) -> Result<(Vec<f64>, f64)> {
        match self {
            BasisFamily::HermiteUTheta { u, theta } => Ok((u.clone(), *theta)),
            BasisFamily::ScaledHermite { dim } => Ok((vec![0.0; *dim], 1.0)),
            BasisFamily::GaussianHermite { .. } => Err(Error::UnsupportedFamily("GaussianHermite")),
        }
    }
}

pub(crate) fn check_spd(theta: &DMatrix<f64>) -> Result<()> {
    let asym = (theta - theta.transpose()).abs().max();
    if asym > 1e-12 * theta.abs().max().max(1.0) {
        return Err(Error::InvalidParameter("temperature tensor is not symmetric".into()));
    }
    if theta.clone().cholesky().is_none() {
        return Err(Error::InvalidParameter("temperature tensor is not positive definite".into()));
    }
    Ok(())
}

/// A dense finite section of one of the infinite basis matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixWindow {
    pub entries: DMatrix<f64>,
    pub dim: usize,
    pub row_cap: usize,
    pub col_cap: usize,
}

impl MatrixWindow {
    pub fn zeros(dim: usize, row_cap: usize, col_cap: usize) -> Self {
        MatrixWindow {
            entries: DMatrix::zeros(count(row_cap, dim), count(col_cap, dim)),
            dim,
            row_cap,
            col_cap,
        }
    }
}

/// 1D factors h_0..h_n of 𝓗/ω at `x`: h_0 = 1, h_{k+1} = ((x−u) h_k − k h_{k−1}) / θ.
fn poly_factors(x: f64, u: f64, theta: f64, n: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(1.0);
    if n >= 1 {
        h.push((x - u) / theta);
    }
    for k in 1..n {
        let next = ((x - u) * h[k] - k as f64 * h[k - 1]) / theta;
        h.push(next);
    }
    h
}

/// 𝓗_α(ξ)/ω(ξ), the polynomial part of a basis function.
pub fn hermite_poly(alpha: &MultiIndex, family: &BasisFamily, xi: &[f64]) -> Result<f64> {
    let (u, theta) = family.axis_params()?;
    check_point(alpha, xi, u.len())?;
    Ok(alpha
        .components()
        .iter()
        .enumerate()
        .map(|(d, &a)| poly_factors(xi[d], u[d], theta, a)[a])
        .product())
}

fn check_point(alpha: &MultiIndex, xi: &[f64], dim: usize) -> Result<()> {
    if alpha.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: alpha.dim() });
    }
    if xi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: xi.len() });
    }
    Ok(())
}

/// Pointwise value of 𝓗_α (or 𝒽_α), seeded with 𝓗₀ = ω and advanced by the
/// three-term recurrence along each axis.
pub fn hermite_eval(alpha: &MultiIndex, family: &BasisFamily, xi: &[f64]) -> Result<f64> {
    let (u, theta) = family.axis_params()?;
    check_point(alpha, xi, u.len())?;
    let mut value = 1.0;
    for (d, &a) in alpha.components().iter().enumerate() {
        let z = xi[d] - u[d];
        let mut prev = 0.0;
        let mut cur = (-z * z / (2.0 * theta)).exp() / (2.0 * std::f64::consts::PI * theta).sqrt();
        for k in 0..a {
            let next = (z * cur - k as f64 * prev) / theta;
            prev = cur;
            cur = next;
        }
        value *= cur;
    }
    Ok(value)
}

/// Multiplication-by-velocity matrix M_d: v_d Φ = M_dᵀ Φ on the window, so
/// column N(α) holds the expansion of v_d·Φ_α.
pub fn recurrence_matrix(d: usize, family: &BasisFamily, cap: usize) -> Result<MatrixWindow> {
    let dim = family.dim();
    if d >= dim {
        return Err(Error::DimensionMismatch { expected: dim, found: d + 1 });
    }
    let set = IndexSet::new(dim, cap);
    let mut w = MatrixWindow::zeros(dim, cap, cap);
    let m = &mut w.entries;
    for (col, alpha) in set.iter().enumerate() {
        let lower = alpha.sub_unit(d, 1).and_then(|b| set.ordinal(&b));
        if let Some(row) = lower {
            m[(row, col)] += alpha.get(d) as f64;
        }
        match family {
            BasisFamily::HermiteUTheta { u, theta } => {
                m[(col, col)] += u[d];
                if let Some(row) = set.ordinal(&alpha.add_unit(d, 1)) {
                    m[(row, col)] += theta;
                }
            }
            BasisFamily::GaussianHermite { u, theta } => {
                m[(col, col)] += u[d];
                for j in 0..dim {
                    if let Some(row) = set.ordinal(&alpha.add_unit(j, 1)) {
                        m[(row, col)] += theta[(j, d)];
                    }
                }
            }
            BasisFamily::ScaledHermite { .. } => {
                if let Some(row) = set.ordinal(&alpha.add_unit(d, 1)) {
                    m[(row, col)] += 1.0;
                }
            }
        }
    }
    Ok(w)
}

/// Windows describing how the basis functions change.
#[derive(Clone, Debug, PartialEq)]
pub enum DerivativeMatrix {
    /// ScaledHermite: ∂Φ/∂v_d = −D_dᵀ Φ, one window per direction.
    Velocity(Vec<MatrixWindow>),
    /// Parametric families: ∂Φ_α/∂s = Σ_d ∂u_d/∂s (C_d Φ)_α + Σ_k ∂τ_k/∂s (T_k Φ)_α,
    /// stored like M_d (column N(α) is the expansion of the derivative of Φ_α).
    /// For HermiteUTheta there is one temperature window (τ = θ); for
    /// GaussianHermite one per pair i ≤ j with τ = θ_ij / (1 + δ_ij).
    Parameters { velocity: Vec<MatrixWindow>, temperature: Vec<MatrixWindow> },
}

fn shift_window(dim: usize, cap: usize, by: &MultiIndex, weight: f64) -> MatrixWindow {
    let set = IndexSet::new(dim, cap);
    let mut w = MatrixWindow::zeros(dim, cap, cap);
    for (col, alpha) in set.iter().enumerate() {
        if let Some(row) = set.ordinal(&alpha.plus(by)) {
            w.entries[(row, col)] += weight;
        }
    }
    w
}

/// Ordered pairs (i, j), i ≤ j, matching the ordinal order of e_i + e_j.
pub fn symmetric_pairs(dim: usize) -> Vec<(usize, usize)> {
    (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect()
}

pub fn derivative_matrix(family: &BasisFamily, cap: usize) -> Result<DerivativeMatrix> {
    let dim = family.dim();
    let units: Vec<MatrixWindow> = (0..dim)
        .map(|d| shift_window(dim, cap, &MultiIndex::unit(dim, d, 1), 1.0))
        .collect();
    match family {
        BasisFamily::ScaledHermite { .. } => Ok(DerivativeMatrix::Velocity(units)),
        BasisFamily::HermiteUTheta { .. } => {
            let mut t = MatrixWindow::zeros(dim, cap, cap);
            for d in 0..dim {
                t.entries += shift_window(dim, cap, &MultiIndex::unit(dim, d, 2), 0.5).entries;
            }
            Ok(DerivativeMatrix::Parameters { velocity: units, temperature: vec![t] })
        }
        BasisFamily::GaussianHermite { .. } => {
            let temperature = symmetric_pairs(dim)
                .into_iter()
                .map(|(i, j)| {
                    let by = MultiIndex::unit(dim, i, 1).add_unit(j, 1);
                    shift_window(dim, cap, &by, 1.0)
                })
                .collect();
            Ok(DerivativeMatrix::Parameters { velocity: units, temperature })
        }
    }
}

/// Probabilists' Gauss–Hermite rule (weight e^{−z²/2}/√(2π), weights sum to 1),
/// from the eigen-decomposition of the Jacobi matrix.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut jac = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Tensor-product nodes and weights in `dim` dimensions.
pub fn tensor_rule(n: usize, dim: usize) -> Vec<(Vec<f64>, f64)> {
    let (z, w) = gauss_hermite(n);
    let mut rule = vec![(Vec::new(), 1.0)];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(rule.len() * n);
        for (p, pw) in &rule {
            for k in 0..n {
                let mut q = p.clone();
                q.push(z[k]);
                next.push((q, pw * w[k]));
            }
        }
        rule = next;
    }
    rule
}

/// (Φ_i, Φ_j)_ω = ∫ Φ_i Φ_j / ω dξ by Gauss–Hermite quadrature.
pub fn inner_product(i: usize, j: usize, family: &BasisFamily) -> Result<f64> {
    let (u, theta) = family.axis_params()?;
    let dim = u.len();
    let a = index_from_ordinal(i, dim);
    let b = index_from_ordinal(j, dim);
    let degree_sum = a.degree() + b.degree();
    let nodes = (degree_sum + 3).div_ceil(2) + 2;
    let s = theta.sqrt();
    let mut acc = 0.0;
    for (z, w) in tensor_rule(nodes, dim) {
        let xi: Vec<f64> = z.iter().zip(&u).map(|(z, u)| u + s * z).collect();
        acc += w * hermite_poly(&a, family, &xi)? * hermite_poly(&b, family, &xi)?;
    }
    Ok(acc)
}

/// Coefficients of Π_j (Σ_i c_{ji} y_i)^{β_j}, a homogeneous polynomial of
/// degree |β|, indexed by position inside that degree block.
pub(crate) fn product_of_linear_forms(c: &DMatrix<f64>, beta: &MultiIndex, set: &IndexSet) -> Vec<f64> {
    let dim = beta.dim();
    let mut poly: HashMap<MultiIndex, f64> = HashMap::new();
    poly.insert(MultiIndex::zero(dim), 1.0);
    for (j, &power) in beta.components().iter().enumerate() {
        for _ in 0..power {
            let mut next: HashMap<MultiIndex, f64> = HashMap::new();
            for (g, v) in &poly {
                for i in 0..dim {
                    let cji = c[(j, i)];
                    if cji != 0.0 {
                        *next.entry(g.add_unit(i, 1)).or_insert(0.0) += v * cji;
                    }
                }
            }
            poly = next;
        }
    }
    let range = set.degree_range(beta.degree());
    let mut out = vec![0.0; range.len()];
    for (g, v) in poly {
        let k = set.ordinal(&g).expect("degree within cap") - range.start;
        out[k] += v;
    }
    out
}

/// Gram matrix (Φ_α, Φ_β)_ω on the window of degree ≤ `cap`.
///
/// Diagonal for the isotropic families. For GaussianHermite it is block
/// diagonal by degree, with (𝓗_α, 𝓗_β) = α! [x^α] Π_j ((Θ⁻¹x)_j)^{β_j}
/// for |α| = |β|, obtained by integrating ∂^α by parts.
pub fn gram_matrix(family: &BasisFamily, cap: usize) -> Result<DMatrix<f64>> {
    let dim = family.dim();
    let set = IndexSet::new(dim, cap);
    let n = set.len();
    let mut g = DMatrix::zeros(n, n);
    match family {
        BasisFamily::HermiteUTheta { theta, .. } => {
            for (i, a) in set.iter().enumerate() {
                g[(i, i)] = a.factorial() / theta.powi(a.degree() as i32);
            }
        }
        BasisFamily::ScaledHermite { .. } => {
            for (i, a) in set.iter().enumerate() {
                g[(i, i)] = a.factorial();
            }
        }
        BasisFamily::GaussianHermite { theta, .. } => {
            let p = theta
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Singular("temperature tensor".into()))?;
            for (j, b) in set.iter().enumerate() {
                let range = set.degree_range(b.degree());
                let lead = product_of_linear_forms(&p, b, &set);
                for (k, i) in range.enumerate() {
                    g[(i, j)] = set.get(i).factorial() * lead[k];
                }
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_examples() {
        let mi = |v: &[usize]| MultiIndex::new(v.to_vec());
        assert_eq!(index_of(&mi(&[0, 0]), 2).unwrap(), 0);
        assert_eq!(index_of(&mi(&[1, 0]), 2).unwrap(), 1);
        assert_eq!(index_of(&mi(&[0, 1]), 2).unwrap(), 2);
        assert_eq!(index_of(&mi(&[2, 0, 0]), 3).unwrap(), 4);
        assert_eq!(index_from_ordinal(9, 3), mi(&[0, 0, 2]));
        assert_eq!(index_from_ordinal(2, 2), mi(&[0, 1]));
        assert!(index_of(&mi(&[1, 0]), 3).is_err());
    }

    #[test]
    fn degree_three_order_in_3d() {
        let set = IndexSet::new(3, 3);
        let block: Vec<_> = set.degree_range(3).map(|i| set.get(i).clone()).collect();
        let expect = [
            [3, 0, 0], [2, 1, 0], [2, 0, 1], [1, 2, 0], [1, 1, 1],
            [1, 0, 2], [0, 3, 0], [0, 2, 1], [0, 1, 2], [0, 0, 3],
        ];
        for (a, e) in block.iter().zip(expect.iter()) {
            assert_eq!(a.components(), e);
        }
    }

    #[test]
    fn pointwise_values() {
        let f = BasisFamily::hermite(vec![0.0], 1.0).unwrap();
        let v0 = hermite_eval(&MultiIndex::new(vec![0]), &f, &[0.0]).unwrap();
        assert!((v0 - 0.398_942_280_401_432_7).abs() < 1e-15);
        let v1 = hermite_eval(&MultiIndex::new(vec![1]), &f, &[1.0]).unwrap();
        assert!((v1 - 0.241_970_724_519_143_37).abs() < 1e-15);
    }

    #[test]
    fn gaussian_family_has_no_pointwise_values() {
        let f = BasisFamily::gaussian(vec![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(
            hermite_eval(&MultiIndex::zero(2), &f, &[0.0, 0.0]),
            Err(Error::UnsupportedFamily(_))
        ));
        assert!(inner_product(0, 0, &f).is_err());
    }

    #[test]
    fn recurrence_column_of_h0() {
        let f = BasisFamily::hermite(vec![0.5], 2.0).unwrap();
        let m = recurrence_matrix(0, &f, 3).unwrap().entries;
        assert_eq!(m[(1, 0)], 2.0);
        assert_eq!(m[(0, 0)], 0.5);
        assert_eq!(m.column(0).iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn scaled_recurrence_and_derivative_entries() {
        let f = BasisFamily::scaled(1);
        let m = recurrence_matrix(0, &f, 5).unwrap().entries;
        let DerivativeMatrix::Velocity(dv) = derivative_matrix(&f, 5).unwrap() else {
            panic!("expected velocity windows")
        };
        for i in 1..=6usize {
            for j in 1..=6usize {
                // 1-based: m_{i,i+1} = i, m_{i+1,i} = 1, d_{ij} = δ_{i,j+1}
                let expect_m = if j == i + 1 {
                    i as f64
                } else if i == j + 1 {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(m[(i - 1, j - 1)], expect_m);
                assert_eq!(dv[0].entries[(i - 1, j - 1)], if i == j + 1 { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn gaussian_identity_reduces_to_isotropic() {
        let g = BasisFamily::gaussian(vec![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let h = BasisFamily::hermite(vec![0.0, 0.0], 1.0).unwrap();
        for d in 0..2 {
            assert_eq!(
                recurrence_matrix(d, &g, 4).unwrap().entries,
                recurrence_matrix(d, &h, 4).unwrap().entries
            );
        }
        assert_eq!(gram_matrix(&g, 4).unwrap(), gram_matrix(&h, 4).unwrap());
    }

    #[test]
    fn inner_product_examples() {
        let f = BasisFamily::hermite(vec![0.3], 2.0).unwrap();
        assert!((inner_product(2, 2, &f).unwrap() - 0.5).abs() < 1e-14);
        assert!(inner_product(2, 4, &f).unwrap().abs() < 1e-12);
        let g = BasisFamily::hermite(vec![-1.0], 0.7).unwrap();
        assert!((inner_product(0, 0, &g).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_rule_integrates_moments() {
        let (z, w) = gauss_hermite(6);
        let m = |p: i32| z.iter().zip(&w).map(|(z, w)| w * z.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-14);
        assert!(m(3).abs() < 1e-14);
        assert!((m(4) - 3.0).abs() < 1e-13);
        assert!((m(10) - 945.0).abs() < 1e-9);
    }
}

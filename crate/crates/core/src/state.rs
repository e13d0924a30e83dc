//! Macroscopic parameters plus expansion coefficients.
//!
//! A [`StateVector`] always stores coefficients of the distribution in the
//! ξ-space basis: 𝓗_α^{[u,θ]} for scalar temperature and 𝓗_α^{[u,Θ]} for a
//! temperature tensor, normalised so that f₀ = ρ. Models built on the scaled
//! basis 𝒽_α(v) convert when packing their variables. Constrained
//! coefficients (f_{e_d} = 0, the trace slot f_{2e₁}, and all degree-two
//! coefficients for a tensor temperature) have no storage.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::ModelSpec;
use crate::basis::{check_spd, count, hermite_poly, tensor_rule, BasisFamily, IndexSet, MultiIndex};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Temperature {
    Scalar(f64),
    Tensor(DMatrix<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateJson", try_from = "StateJson")]
pub struct StateVector {
    pub rho: f64,
    pub u: Vec<f64>,
    pub temperature: Temperature,
    /// f_α keyed by ordinal N(α).
    pub coeffs: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct StateJson {
    rho: f64,
    u: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(rename = "Theta", default, skip_serializing_if = "Option::is_none")]
    theta_tensor: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    f: BTreeMap<usize, f64>,
}

impl From<StateVector> for StateJson {
    fn from(s: StateVector) -> Self {
        let (theta, theta_tensor) = match &s.temperature {
            Temperature::Scalar(t) => (Some(*t), None),
            Temperature::Tensor(m) => {
                (None, Some((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()))
            }
        };
        StateJson { rho: s.rho, u: s.u, theta, theta_tensor, f: s.coeffs }
    }
}

impl TryFrom<StateJson> for StateVector {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        let d = j.u.len();
        let temperature = match (j.theta, j.theta_tensor) {
            (Some(t), None) => Temperature::Scalar(t),
            (None, Some(rows)) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Parse(format!("Theta must be {d}x{d}")));
                }
                Temperature::Tensor(DMatrix::from_fn(d, d, |i, k| rows[i][k]))
            }
            _ => return Err(Error::Parse("exactly one of 'theta' and 'Theta' is required".into())),
        };
        let s = StateVector { rho: j.rho, u: j.u, temperature, coeffs: j.f };
        s.validate()?;
        Ok(s)
    }
}

impl std::fmt::Display for StateVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", serde_json::to_string(self).map_err(|_| std::fmt::Error)?)
    }
}

/// True for ordinals that the representation leaves out.
pub fn is_constrained(alpha: &MultiIndex, tensor: bool) -> bool {
    let deg = alpha.degree();
    if tensor {
        return deg <= 2;
    }
    deg <= 1 || *alpha == MultiIndex::unit(alpha.dim(), 0, 2)
}

impl StateVector {
    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn is_tensor(&self) -> bool {
        matches!(self.temperature, Temperature::Tensor(_))
    }

    /// Scalar temperature, or tr Θ / D for a tensor.
    pub fn theta(&self) -> f64 {
        match &self.temperature {
            Temperature::Scalar(t) => *t,
            Temperature::Tensor(m) => m.trace() / m.nrows() as f64,
        }
    }

    pub fn theta_tensor(&self) -> DMatrix<f64> {
        match &self.temperature {
            Temperature::Scalar(t) => DMatrix::identity(self.dim(), self.dim()) * *t,
            Temperature::Tensor(m) => m.clone(),
        }
    }

    pub fn coeff(&self, ordinal: usize) -> f64 {
        self.coeffs.get(&ordinal).copied().unwrap_or(0.0)
    }

    /// Highest degree carried by the stored coefficients (at least 2).
    pub fn order(&self) -> usize {
        let d = self.dim();
        self.coeffs
            .keys()
            .map(|&k| crate::basis::index_from_ordinal(k, d).degree())
            .max()
            .unwrap_or(2)
            .max(2)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidState("velocity has no components".into()));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidState(format!("rho must be positive, got {}", self.rho)));
        }
        if self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite velocity".into()));
        }
        match &self.temperature {
            Temperature::Scalar(t) => {
                if !(*t > 0.0) || !t.is_finite() {
                    return Err(Error::InvalidState(format!("theta must be positive, got {t}")));
                }
            }
            Temperature::Tensor(m) => {
                if m.nrows() != d || m.ncols() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
                }
                check_spd(m).map_err(|e| Error::InvalidState(e.to_string()))?;
            }
        }
        let tensor = self.is_tensor();
        for (&k, v) in &self.coeffs {
            if !v.is_finite() {
                return Err(Error::InvalidState(format!("non-finite coefficient at ordinal {k}")));
            }
            let alpha = crate::basis::index_from_ordinal(k, d);
            if is_constrained(&alpha, tensor) {
                return Err(Error::InvalidState(format!(
                    "ordinal {k} = {alpha} is fixed by the constraints and cannot be stored"
                )));
            }
        }
        Ok(())
    }

    /// Full coefficient vector of degree ≤ `cap`, constraints filled in:
    /// f₀ = ρ, f_{e_d} = 0, f_{2e₁} = −Σ_{d≥2} f_{2e_d} (degree two is zero for
    /// a tensor temperature).
    pub fn coefficient_vector(&self, cap: usize) -> DVector<f64> {
        let d = self.dim();
        let n = count(cap, d);
        let mut f = DVector::zeros(n);
        f[0] = self.rho;
        for (&k, &v) in self.coeffs.range(..n) {
            f[k] = v;
        }
        if !self.is_tensor() && cap >= 2 {
            let set = IndexSet::new(d, 2);
            let trace: f64 = (1..d).map(|k| f[set.unit(k, 2)]).sum();
            f[set.unit(0, 2)] = -trace;
        }
        f
    }

    /// Inverse of [`coefficient_vector`]: keeps the free entries with
    /// 2 ≤ degree ≤ `order`.
    pub fn from_coefficients(rho: f64, u: Vec<f64>, temperature: Temperature, f: &DVector<f64>, order: usize) -> Self {
        let d = u.len();
        let tensor = matches!(temperature, Temperature::Tensor(_));
        let n = count(order, d).min(f.len());
        let mut coeffs = BTreeMap::new();
        for k in 0..n {
            let alpha = crate::basis::index_from_ordinal(k, d);
            if !is_constrained(&alpha, tensor) {
                coeffs.insert(k, f[k]);
            }
        }
        StateVector { rho, u, temperature, coeffs }
    }
}

/// Local Maxwellian: f₀ = ρ and every free coefficient up to `order` zero.
pub fn maxwellian_state(rho: f64, u: Vec<f64>, theta: f64, order: usize) -> Result<StateVector> {
    let d = u.len();
    let s = StateVector::from_coefficients(rho, u, Temperature::Scalar(theta), &DVector::zeros(count(order, d)), order);
    s.validate()?;
    Ok(s)
}

/// Gaussian equilibrium with temperature tensor Θ.
pub fn gaussian_state(rho: f64, u: Vec<f64>, theta: DMatrix<f64>, order: usize) -> Result<StateVector> {
    let d = u.len();
    let s = StateVector::from_coefficients(rho, u, Temperature::Tensor(theta), &DVector::zeros(count(order, d)), order);
    s.validate()?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedMoments {
    pub pressure: Vec<Vec<f64>>,
    /// Stress deviator σ_ij.
    pub stress: Vec<Vec<f64>>,
    pub heat_flux: Vec<f64>,
    /// Contractions Δ_α = ½ ∫ f Σ_d 𝓗_{α+2e_d} / ω dξ for |α| = order − 2,
    /// as (ordinal of α, value). Empty for a tensor temperature.
    pub contractions: Vec<(usize, f64)>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn derived_moments(w: &StateVector) -> Result<DerivedMoments> {
    w.validate()?;
    let order = w.order();
    if order < 3 {
        return Err(Error::InvalidState("heat flux needs coefficients of degree 3".into()));
    }
    let d = w.dim();
    let set = IndexSet::new(d, order);
    let f = w.coefficient_vector(order);
    let (pressure, stress) = match &w.temperature {
        Temperature::Scalar(theta) => {
            let mut sigma = DMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..d {
                    let pair = MultiIndex::unit(d, i, 1).add_unit(j, 1);
                    let scale = if i == j { 2.0 } else { 1.0 };
                    sigma[(i, j)] = scale * f[set.ordinal(&pair).unwrap()];
                }
            }
            let p = DMatrix::identity(d, d) * (w.rho * theta) + &sigma;
            (p, sigma)
        }
        Temperature::Tensor(theta) => {
            let p = theta * w.rho;
            let mean = p.trace() / d as f64;
            let sigma = &p - DMatrix::identity(d, d) * mean;
            (p, sigma)
        }
    };
    // q_i = ½ Σ_d ∫ (ξ_d−u_d)² (ξ_i−u_i) f dξ = ½ Σ_d (e_i+2e_d)! f_{e_i+2e_d}
    let heat_flux = (0..d)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let a = MultiIndex::unit(d, i, 1).add_unit(k, 2);
                    0.5 * a.factorial() * f[set.ordinal(&a).unwrap()]
                })
                .sum()
        })
        .collect();
    let contractions = match &w.temperature {
        Temperature::Scalar(theta) => set
            .degree_range(order - 2)
            .map(|k| {
                let alpha = set.get(k);
                let v: f64 = (0..d)
                    .map(|dd| {
                        let b = alpha.add_unit(dd, 2);
                        b.factorial() / theta.powi(b.degree() as i32) * f[set.ordinal(&b).unwrap()]
                    })
                    .sum();
                (k, 0.5 * v)
            })
            .collect(),
        Temperature::Tensor(_) => Vec::new(),
    };
    Ok(DerivedMoments { pressure: rows(&pressure), stress: rows(&stress), heat_flux, contractions })
}

/// Action of a rotation on the degree-k coefficient block: if g(ξ) = f(Rᵀξ)
/// then g's block is Tᵀ times f's block, with
/// T_{αβ} = E[p_α(Rᵀz) p_β(z)] / β! and p_α the standard Hermite products.
/// The expectation is evaluated by tensor Gauss–Hermite quadrature, exact for
/// the degree-2k integrand.
pub fn rotation_representation(r: &DMatrix<f64>, degree: usize) -> DMatrix<f64> {
    let d = r.nrows();
    let set = IndexSet::new(d, degree);
    let range = set.degree_range(degree);
    let n = range.len();
    let std = BasisFamily::scaled(d);
    let mut t = DMatrix::zeros(n, n);
    let rt = r.transpose();
    for (z, wt) in tensor_rule(degree + 2, d) {
        let zr = &rt * DVector::from_column_slice(&z);
        let pa: Vec<f64> = range.clone().map(|k| hermite_poly(set.get(k), &std, zr.as_slice()).unwrap()).collect();
        let pb: Vec<f64> = range.clone().map(|k| hermite_poly(set.get(k), &std, &z).unwrap()).collect();
        for a in 0..n {
            for b in 0..n {
                t[(a, b)] += wt * pa[a] * pb[b];
            }
        }
    }
    for (b, k) in range.enumerate() {
        let fact = set.get(k).factorial();
        for a in 0..n {
            t[(a, b)] /= fact;
        }
    }
    t
}

fn check_rotation(r: &DMatrix<f64>, d: usize) -> Result<()> {
    if r.nrows() != d || r.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: r.nrows() });
    }
    let err = (r.transpose() * r - DMatrix::<f64>::identity(d, d)).abs().max();
    if err > 1e-12 || (r.determinant() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("rotation must be orthogonal with determinant 1".into()));
    }
    Ok(())
}

/// The state of the rotated distribution g(ξ) = f(Rᵀξ).
pub fn rotate_state(w: &StateVector, r: &DMatrix<f64>) -> Result<StateVector> {
    let d = w.dim();
    check_rotation(r, d)?;
    let order = w.order();
    let set = IndexSet::new(d, order);
    let f = w.coefficient_vector(order);
    let mut g = f.clone();
    for k in 2..=order {
        let range = set.degree_range(k);
        let t = rotation_representation(r, k);
        let block = f.rows(range.start, range.len()).clone_owned();
        g.rows_mut(range.start, range.len()).copy_from(&(t.transpose() * block));
    }
    let u = (r * DVector::from_column_slice(&w.u)).as_slice().to_vec();
    let temperature = match &w.temperature {
        Temperature::Scalar(t) => Temperature::Scalar(*t),
        Temperature::Tensor(m) => {
            let rm = r * m * r.transpose();
            Temperature::Tensor((&rm + rm.transpose()) * 0.5)
        }
    };
    let mut out = StateVector::from_coefficients(w.rho, u, temperature, &g, order);
    out.coeffs.retain(|k, _| w.coeffs.contains_key(k) || g[*k] != 0.0);
    Ok(out)
}

pub fn galilean_shift(w: &StateVector, du: &[f64]) -> Result<StateVector> {
    if du.len() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), found: du.len() });
    }
    let mut out = w.clone();
    for (u, s) in out.u.iter_mut().zip(du) {
        *u += s;
    }
    Ok(out)
}

/// Random state for scans: ρ, θ ∈ [0.5, 2], u ∈ [−1, 1]ᴰ, free coefficients
/// uniform in ±amplitude·ρθ^{|α|/2}, then projected onto the model's subspace.
/// A tensor temperature is L·Lᵀ with diag(L)² ∈ [0.5, 2] and |L_ij| ≤ 0.3.
pub fn sample_state(seed: u64, model: &ModelSpec, amplitude: f64) -> Result<StateVector> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude must be non-negative, got {amplitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.dim;
    let rho = rng.gen_range(0.5..=2.0);
    let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let temperature = if model.uses_tensor_temperature() {
        let mut l = DMatrix::zeros(d, d);
        for i in 0..d {
            let diag: f64 = rng.gen_range(0.5..=2.0);
            l[(i, i)] = diag.sqrt();
            for j in 0..i {
                l[(i, j)] = rng.gen_range(-0.3..=0.3);
            }
        }
        let m = &l * l.transpose();
        Temperature::Tensor((&m + m.transpose()) * 0.5)
    } else {
        Temperature::Scalar(rng.gen_range(0.5..=2.0))
    };
    let theta = match &temperature {
        Temperature::Scalar(t) => *t,
        Temperature::Tensor(m) => m.trace() / d as f64,
    };
    let tensor = matches!(temperature, Temperature::Tensor(_));
    let order = model.order;
    let set = IndexSet::new(d, order);
    let mut f = DVector::zeros(set.len());
    for (k, alpha) in set.iter().enumerate() {
        if is_constrained(alpha, tensor) {
            continue;
        }
        let x: f64 = rng.gen_range(-1.0..=1.0);
        f[k] = amplitude * x * rho * theta.powf(alpha.degree() as f64 / 2.0);
    }
    let s = StateVector::from_coefficients(rho, u, temperature, &f, order);
    model.closure(&s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxwellian_layout() {
        let s = maxwellian_state(1.0, vec![0.0], 1.0, 3).unwrap();
        assert_eq!(s.coeffs.keys().copied().collect::<Vec<_>>(), vec![3]);
        assert_eq!(s.coefficient_vector(3).as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        assert!(maxwellian_state(0.0, vec![0.0], 1.0, 3).is_err());
        assert!(maxwellian_state(1.0, vec![0.0], -1.0, 3).is_err());
    }

    #[test]
    fn maxwellian_moments() {
        let s = maxwellian_state(1.3, vec![0.1, 0.2, 0.3], 0.7, 3).unwrap();
        let m = derived_moments(&s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.3 * 0.7 } else { 0.0 };
                assert_eq!(m.pressure[i][j], expect);
                assert_eq!(m.stress[i][j], 0.0);
            }
            assert_eq!(m.heat_flux[i], 0.0);
        }
    }

    #[test]
    fn stress_from_pair_coefficients() {
        let set = IndexSet::new(3, 3);
        let mut s = maxwellian_state(1.0, vec![0.0; 3], 1.0, 3).unwrap();
        s.coeffs.insert(set.ordinal(&MultiIndex::new(vec![1, 1, 0])).unwrap(), 0.1);
        assert!((derived_moments(&s).unwrap().stress[0][1] - 0.1).abs() < 1e-15);

        let mut s = maxwellian_state(1.0, vec![0.0; 3], 1.0, 3).unwrap();
        s.coeffs.insert(set.unit(1, 2), 0.1);
        let m = derived_moments(&s).unwrap();
        assert!((m.stress[1][1] - 0.2).abs() < 1e-15);
        assert!((m.stress[0][0] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn constrained_slots_are_rejected() {
        let mut s = maxwellian_state(1.0, vec![0.0, 0.0], 1.0, 3).unwrap();
        s.coeffs.insert(3, 0.5);
        assert!(s.validate().is_err());
        let mut g = gaussian_state(1.0, vec![0.0, 0.0], DMatrix::identity(2, 2), 3).unwrap();
        g.coeffs.insert(4, 0.5);
        assert!(g.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let s = maxwellian_state(1.0, vec![0.5], 2.0, 4).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"rho":1.0,"u":[0.5],"theta":2.0,"f":{"3":0.0,"4":0.0}}"#);
        let back: StateVector = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let g = gaussian_state(1.0, vec![0.0, 0.0], DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]), 2).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.contains(r#""Theta":[[1.0,0.2],[0.2,2.0]]"#));
        assert!(serde_json::from_str::<StateVector>(r#"{"rho":1.0,"u":[0.0],"f":{}}"#).is_err());
    }

    #[test]
    fn rotation_of_first_degree_is_the_matrix() {
        let a = 0.4f64;
        let r = DMatrix::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
        let t = rotation_representation(&r, 1);
        assert!((t - r.transpose()).abs().max() < 1e-14);
    }

    #[test]
    fn quarter_turn_flips_shear() {
        let r = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let set = IndexSet::new(3, 3);
        let mut s = maxwellian_state(1.0, vec![0.0; 3], 1.0, 3).unwrap();
        s.coeffs.insert(set.ordinal(&MultiIndex::new(vec![1, 1, 0])).unwrap(), 0.1);
        s.coeffs.insert(set.unit(1, 2), 0.05);
        let rs = rotate_state(&s, &r).unwrap();
        let sig = DMatrix::from_fn(3, 3, |i, j| derived_moments(&s).unwrap().stress[i][j]);
        let sig_r = DMatrix::from_fn(3, 3, |i, j| derived_moments(&rs).unwrap().stress[i][j]);
        assert!((sig_r - &r * sig * r.transpose()).abs().max() < 1e-14);
        assert!((derived_moments(&rs).unwrap().stress[0][1] + 0.1).abs() < 1e-14);
    }

    #[test]
    fn shift_moves_velocity_only() {
        let s = maxwellian_state(1.0, vec![0.0], 1.0, 3).unwrap();
        let t = galilean_shift(&s, &[2.0]).unwrap();
        assert_eq!(t, maxwellian_state(1.0, vec![2.0], 1.0, 3).unwrap());
        assert_eq!(galilean_shift(&s, &[0.0]).unwrap(), s);
    }
}

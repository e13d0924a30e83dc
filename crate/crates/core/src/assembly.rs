//! Model specifications and assembly of the quasi-linear moment system
//! B(w) ∂ₜw + Σ_d F_d(w) ∂ₓ_d w = source.
//!
//! The matrices are built on a window of basis degree M + 2. The
//! time-derivative matrix D maps changes of the parameter slots to changes of
//! the expansion coefficients; M_d multiplies the expansion by ξ_d. With the
//! projection pair (Pb, Pp):
//!
//! * regularized models: B = Pp·D·Ew, A_d = Pp·M_d·Pbᵀ, F_d = A_d·B,
//! * Grad-type models:   B = Pp·D·Ew, F_d = Pp·M_d·D·Ew,
//!
//! where Ew embeds the model variables into the window (normally Pbᵀ).
//! Closure is applied before anything is evaluated, so every matrix depends
//! only on the projected variables.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{
    count, derivative_matrix, recurrence_matrix, BasisFamily, DerivativeMatrix, FamilyKind, IndexSet, MatrixWindow,
    MultiIndex,
};
use crate::error::{Error, Result};
use crate::projection::{cutoff_projection, ordered_hierarchy_projection, shifted_projection, ProjectionPair};
use crate::state::{StateVector, Temperature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquationForm {
    ConventionalBoltzmann,
    ScaledBoltzmann,
}

/// Whether the θ-column of the scaled-velocity derivative matrix projects
/// between differentiating and multiplying by v.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerProjection {
    WithInnerProjection,
    WithoutInnerProjection,
}

/// Strategy for multiplying by the advection velocity. Every supported form
/// is linear in the basis variable, so a single factor suffices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VelocityStrategy {
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionKind {
    Cutoff,
    OrderedHierarchy,
    /// 1D Hermite cut-off whose derivative projection subtracts
    /// (M+1)/θ times the degree M+2 coefficient from the last row.
    Shifted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub order: usize,
    pub dim: usize,
    pub equation_form: EquationForm,
    pub family: FamilyKind,
    pub projection: ProjectionKind,
    pub ps1: InnerProjection,
    pub ps2: VelocityStrategy,
    pub regularized: bool,
}

pub const PRESETS: &[&str] = &[
    "Grad1D",
    "GradND",
    "HME1D",
    "HMEND",
    "AHME",
    "G13",
    "HR13",
    "OrderedGrad",
    "OrderedRegularized",
    "QBME1D",
    "QBMEND",
    "QBMEAltProjection",
];

pub fn preset(name: &str, order: usize, dim: usize) -> Result<ModelSpec> {
    use EquationForm::*;
    use ProjectionKind::*;
    let (form, family, projection, regularized) = match name {
        "Grad1D" | "GradND" => (ConventionalBoltzmann, FamilyKind::HermiteUTheta, Cutoff, false),
        "HME1D" | "HMEND" => (ConventionalBoltzmann, FamilyKind::HermiteUTheta, Cutoff, true),
        "AHME" => (ConventionalBoltzmann, FamilyKind::GaussianHermite, Cutoff, true),
        "G13" | "OrderedGrad" => (ConventionalBoltzmann, FamilyKind::HermiteUTheta, OrderedHierarchy, false),
        "HR13" | "OrderedRegularized" => (ConventionalBoltzmann, FamilyKind::HermiteUTheta, OrderedHierarchy, true),
        "QBME1D" | "QBMEND" => (ScaledBoltzmann, FamilyKind::ScaledHermite, Cutoff, true),
        "QBMEAltProjection" => (ConventionalBoltzmann, FamilyKind::HermiteUTheta, Shifted, true),
        _ => {
            return Err(Error::UnknownModel { name: name.to_string(), available: PRESETS.join(", ") });
        }
    };
    if (name.ends_with("1D") || name == "QBMEAltProjection") && dim != 1 {
        return Err(Error::InconsistentModel(format!("{name} is one-dimensional, got D={dim}")));
    }
    if matches!(name, "G13" | "HR13") && (order != 3 || dim != 3) {
        return Err(Error::InconsistentModel(format!("{name} requires M=3 and D=3, got M={order}, D={dim}")));
    }
    let spec = ModelSpec {
        name: name.to_string(),
        order,
        dim,
        equation_form: form,
        family,
        projection,
        ps1: InnerProjection::WithInnerProjection,
        ps2: VelocityStrategy::Linear,
        regularized,
    };
    spec.validate()?;
    Ok(spec)
}

/// Role of a window slot in the parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Density,
    Velocity(usize),
    /// θ/2 for HermiteUTheta, θ for ScaledHermite.
    Temperature,
    /// θ_ij / (1 + δ_ij).
    TensorEntry(usize, usize),
    Free,
}

impl ModelSpec {
    pub fn with_ps1(mut self, ps1: InnerProjection) -> Self {
        self.ps1 = ps1;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InconsistentModel(m));
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.order < 2 {
            return bad(format!("order must be at least 2, got {}", self.order));
        }
        let scaled_form = self.equation_form == EquationForm::ScaledBoltzmann;
        if scaled_form != (self.family == FamilyKind::ScaledHermite) {
            return bad("the scaled equation form goes with the scaled Hermite family and only with it".into());
        }
        if self.family == FamilyKind::ScaledHermite && self.order < 3 {
            return bad(format!("scaled-velocity models need M >= 3, got {}", self.order));
        }
        match self.projection {
            ProjectionKind::Cutoff => {}
            ProjectionKind::OrderedHierarchy => {
                if self.family != FamilyKind::HermiteUTheta {
                    return bad("the ordered hierarchy is defined for the Maxwellian Hermite basis".into());
                }
            }
            ProjectionKind::Shifted => {
                if self.family != FamilyKind::HermiteUTheta || self.dim != 1 || self.order < 3 || !self.regularized {
                    return bad("the shifted projection needs a regularized 1D Hermite model with M >= 3".into());
                }
            }
        }
        Ok(())
    }

    pub fn uses_tensor_temperature(&self) -> bool {
        self.family == FamilyKind::GaussianHermite
    }

    pub fn window_cap(&self) -> usize {
        self.order + 2
    }

    pub fn index_set(&self) -> IndexSet {
        IndexSet::new(self.dim, self.window_cap())
    }

    /// Number of model variables.
    pub fn system_size(&self) -> usize {
        match self.projection {
            ProjectionKind::OrderedHierarchy => {
                count(self.order - 1, self.dim) + crate::basis::count_of_degree(self.order - 2, self.dim)
            }
            _ => count(self.order, self.dim),
        }
    }

    /// Projection pair at temperature θ (only the shifted pair depends on it).
    pub fn projection_at(&self, theta: f64) -> Result<ProjectionPair> {
        match self.projection {
            ProjectionKind::Cutoff => cutoff_projection(self.order, self.dim),
            ProjectionKind::OrderedHierarchy => ordered_hierarchy_projection(self.order, self.dim),
            ProjectionKind::Shifted => shifted_projection(self.order, theta),
        }
    }

    fn slot(&self, alpha: &MultiIndex) -> Slot {
        let deg = alpha.degree();
        let nz: Vec<usize> = (0..self.dim).filter(|&d| alpha.get(d) > 0).collect();
        match deg {
            0 => Slot::Density,
            1 => Slot::Velocity(nz[0]),
            2 if self.uses_tensor_temperature() => {
                let i = nz[0];
                let j = *nz.last().unwrap();
                Slot::TensorEntry(i, j)
            }
            2 if alpha.get(0) == 2 => Slot::Temperature,
            _ => Slot::Free,
        }
    }

    /// (Ew, Rw): model variables w = Rw·w_window, closed window Ew·w.
    fn variable_maps(&self, p: &ProjectionPair) -> (DMatrix<f64>, DMatrix<f64>) {
        match self.projection {
            ProjectionKind::Shifted => (p.pb.transpose(), p.pb.clone()),
            ProjectionKind::OrderedHierarchy if self.order == 2 => {
                // The only contraction row is Σ_d 𝓗_{2e_d}, whose slots are the
                // temperature and the trace-constrained entries: take θ/2.
                let mut ew = p.pb.transpose();
                let mut rw = p.pp.clone();
                let row = p.subspace_dim() - 1;
                let t = IndexSet::new(self.dim, 2).unit(0, 2);
                rw.row_mut(row).fill(0.0);
                rw[(row, t)] = 1.0;
                ew.column_mut(row).fill(0.0);
                ew[(t, row)] = 1.0;
                (ew, rw)
            }
            _ => (p.pb.transpose(), p.pp.clone()),
        }
    }

    fn check_state(&self, s: &StateVector) -> Result<()> {
        if s.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: s.dim() });
        }
        if s.is_tensor() != self.uses_tensor_temperature() {
            return Err(Error::InvalidState(format!(
                "{} expects a {} temperature",
                self.name,
                if self.uses_tensor_temperature() { "tensor" } else { "scalar" }
            )));
        }
        s.validate()
    }

    /// Parameter slots on the whole window (not closed).
    pub fn window_parameters(&self, s: &StateVector) -> Result<DVector<f64>> {
        self.check_state(s)?;
        let set = self.index_set();
        let f = s.coefficient_vector(set.cap());
        let theta = s.theta();
        let dd = self.dim as f64;
        let scaled = self.family == FamilyKind::ScaledHermite;
        let theta_tensor = s.theta_tensor();
        let mut w = DVector::zeros(set.len());
        for (k, alpha) in set.iter().enumerate() {
            w[k] = match self.slot(alpha) {
                Slot::Density if scaled => s.rho * theta.powf(-dd / 2.0),
                Slot::Density => s.rho,
                Slot::Velocity(d) => s.u[d],
                Slot::Temperature if scaled => theta,
                Slot::Temperature => theta / 2.0,
                Slot::TensorEntry(i, j) => theta_tensor[(i, j)] / if i == j { 2.0 } else { 1.0 },
                Slot::Free if alpha.degree() > self.order => 0.0,
                Slot::Free if scaled => f[k] * theta.powf(-(alpha.degree() as f64 + dd) / 2.0),
                Slot::Free => f[k],
            };
        }
        Ok(w)
    }

    /// Model variable vector w (length [`system_size`]).
    pub fn pack(&self, s: &StateVector) -> Result<DVector<f64>> {
        let p = self.projection_at(s.theta())?;
        let (_, rw) = self.variable_maps(&p);
        Ok(rw * self.window_parameters(s)?)
    }

    fn state_from_window(&self, full: &DVector<f64>) -> Result<StateVector> {
        let set = self.index_set();
        let d = self.dim;
        let scaled = self.family == FamilyKind::ScaledHermite;
        let u: Vec<f64> = (0..d).map(|k| full[set.unit(k, 1)]).collect();
        let temperature = if self.uses_tensor_temperature() {
            let mut m = DMatrix::zeros(d, d);
            for i in 0..d {
                for j in i..d {
                    let k = set.ordinal(&MultiIndex::unit(d, i, 1).add_unit(j, 1)).unwrap();
                    let v = full[k] * if i == j { 2.0 } else { 1.0 };
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Temperature::Tensor(m)
        } else {
            let t = full[set.unit(0, 2)];
            Temperature::Scalar(if scaled { t } else { 2.0 * t })
        };
        let theta = match &temperature {
            Temperature::Scalar(t) => *t,
            Temperature::Tensor(m) => m.trace() / d as f64,
        };
        if !(theta > 0.0) {
            return Err(Error::InvalidState(format!("temperature must be positive, got {theta}")));
        }
        let dd = d as f64;
        let rho = if scaled { full[0] * theta.powf(dd / 2.0) } else { full[0] };
        let mut f = full.clone();
        f[0] = rho;
        if scaled {
            for (k, alpha) in set.iter().enumerate().skip(1) {
                f[k] *= theta.powf((alpha.degree() as f64 + dd) / 2.0);
            }
        }
        let s = StateVector::from_coefficients(rho, u, temperature, &f, self.order);
        s.validate()?;
        Ok(s)
    }

    /// Inverse of [`pack`] on the model subspace.
    pub fn unpack(&self, w: &DVector<f64>) -> Result<StateVector> {
        let n = self.system_size();
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: w.len() });
        }
        let set = IndexSet::new(self.dim, 2);
        let t = w[set.unit(0, 2)];
        let theta = if self.family == FamilyKind::ScaledHermite { t } else { 2.0 * t };
        let p = self.projection_at(if theta > 0.0 { theta } else { 1.0 })?;
        let (ew, _) = self.variable_maps(&p);
        self.state_from_window(&(ew * w))
    }

    /// The state reconstructed from the model's own variables.
    pub fn closure(&self, s: &StateVector) -> Result<StateVector> {
        self.unpack(&self.pack(s)?)
    }

    /// Short label for each model variable.
    pub fn variable_labels(&self) -> Result<Vec<String>> {
        let p = self.projection_at(1.0)?;
        let (_, rw) = self.variable_maps(&p);
        let set = self.index_set();
        let mut out = Vec::with_capacity(rw.nrows());
        for r in 0..rw.nrows() {
            let cols: Vec<usize> = (0..rw.ncols()).filter(|&c| rw[(r, c)] != 0.0).collect();
            let label = if cols.len() == 1 {
                let alpha = set.get(cols[0]);
                match self.slot(alpha) {
                    Slot::Density if self.family == FamilyKind::ScaledHermite => "rho*theta^(-D/2)".to_string(),
                    Slot::Density => "rho".to_string(),
                    Slot::Velocity(d) => format!("u{}", d + 1),
                    Slot::Temperature if self.family == FamilyKind::ScaledHermite => "theta".to_string(),
                    Slot::Temperature => "theta/2".to_string(),
                    Slot::TensorEntry(i, j) if i == j => format!("Theta{}{}/2", i + 1, j + 1),
                    Slot::TensorEntry(i, j) => format!("Theta{}{}", i + 1, j + 1),
                    Slot::Free => format!("f{alpha}"),
                }
            } else {
                let terms: Vec<String> = cols.iter().map(|&c| format!("{}*f{}", rw[(r, c)], set.get(c))).collect();
                terms.join("+")
            };
            out.push(label);
        }
        Ok(out)
    }
}

/// Everything evaluated at one closed state.
struct Evaluation {
    set: IndexSet,
    proj: ProjectionPair,
    ew: DMatrix<f64>,
    /// Closed window parameters.
    full: DVector<f64>,
    u: Vec<f64>,
    theta: f64,
    theta_tensor: DMatrix<f64>,
    /// Closed coefficients in the family's own normalization.
    f: DVector<f64>,
}

fn evaluate(spec: &ModelSpec, s: &StateVector) -> Result<Evaluation> {
    spec.validate()?;
    let raw = spec.window_parameters(s)?;
    let proj = spec.projection_at(s.theta())?;
    let (ew, rw) = spec.variable_maps(&proj);
    let full = &ew * (&rw * raw);
    let closed = spec.state_from_window(&full)?;
    let set = spec.index_set();
    let mut f = full.clone();
    for (k, alpha) in set.iter().enumerate() {
        match spec.slot(alpha) {
            Slot::Velocity(_) | Slot::TensorEntry(..) | Slot::Temperature => f[k] = 0.0,
            _ => {}
        }
    }
    if !spec.uses_tensor_temperature() {
        let t = set.unit(0, 2);
        f[t] = -(1..spec.dim).map(|k| full[set.unit(k, 2)]).sum::<f64>();
    }
    Ok(Evaluation {
        set,
        proj,
        ew,
        full,
        u: closed.u.clone(),
        theta: closed.theta(),
        theta_tensor: closed.theta_tensor(),
        f,
    })
}

fn family_at(spec: &ModelSpec, ev: &Evaluation) -> Result<BasisFamily> {
    match spec.family {
        FamilyKind::HermiteUTheta => BasisFamily::hermite(ev.u.clone(), ev.theta),
        FamilyKind::GaussianHermite => BasisFamily::gaussian(ev.u.clone(), ev.theta_tensor.clone()),
        FamilyKind::ScaledHermite => Ok(BasisFamily::scaled(spec.dim)),
    }
}

fn time_derivative(spec: &ModelSpec, ev: &Evaluation) -> Result<DMatrix<f64>> {
    let set = &ev.set;
    let cap = set.cap();
    let n = set.len();
    let family = family_at(spec, ev)?;
    let mut dm = DMatrix::zeros(n, n);
    let t_first = if spec.uses_tensor_temperature() { None } else { Some(set.unit(0, 2)) };
    match derivative_matrix(&family, cap)? {
        DerivativeMatrix::Parameters { velocity, temperature } => {
            let pairs = crate::basis::symmetric_pairs(spec.dim);
            for (col, alpha) in set.iter().enumerate() {
                match spec.slot(alpha) {
                    Slot::Velocity(d) => dm.set_column(col, &(&velocity[d].entries * &ev.f)),
                    Slot::Temperature => dm.set_column(col, &(&temperature[0].entries * &ev.f * 2.0)),
                    Slot::TensorEntry(i, j) => {
                        let k = pairs.iter().position(|&p| p == (i, j)).unwrap();
                        dm.set_column(col, &(&temperature[k].entries * &ev.f));
                    }
                    Slot::Density | Slot::Free => free_column(&mut dm, col, alpha, t_first),
                }
            }
        }
        DerivativeMatrix::Velocity(dv) => {
            let pi = ev.proj.projector();
            let tf = &pi * &ev.f;
            let sq = ev.theta.sqrt();
            for (col, alpha) in set.iter().enumerate() {
                match spec.slot(alpha) {
                    Slot::Velocity(d) => dm.set_column(col, &(&dv[d].entries * &tf / sq)),
                    Slot::Temperature => {
                        let mut c = DVector::zeros(n);
                        for k in 0..spec.dim {
                            let mv = recurrence_matrix(k, &family, cap)?.entries;
                            let g = &dv[k].entries * &tf;
                            let g = match spec.ps1 {
                                InnerProjection::WithInnerProjection => &pi * g,
                                InnerProjection::WithoutInnerProjection => g,
                            };
                            c += mv * g;
                        }
                        dm.set_column(col, &(c / (2.0 * ev.theta)));
                    }
                    _ => free_column(&mut dm, col, alpha, t_first),
                }
            }
        }
    }
    Ok(dm)
}

/// Unit column, minus the trace slot for the constrained f_{2e_d}, d ≥ 2.
fn free_column(dm: &mut DMatrix<f64>, col: usize, alpha: &MultiIndex, trace_slot: Option<usize>) {
    dm[(col, col)] = 1.0;
    if let Some(t) = trace_slot {
        if alpha.degree() == 2 && (1..alpha.dim()).any(|d| alpha.get(d) == 2) {
            dm[(t, col)] -= 1.0;
        }
    }
}

fn velocity_windows(spec: &ModelSpec, ev: &Evaluation) -> Result<Vec<MatrixWindow>> {
    let family = family_at(spec, ev)?;
    let cap = ev.set.cap();
    (0..spec.dim)
        .map(|d| {
            let mut w = recurrence_matrix(d, &family, cap)?;
            if spec.family == FamilyKind::ScaledHermite {
                w.entries *= ev.theta.sqrt();
                for i in 0..w.entries.nrows() {
                    w.entries[(i, i)] += ev.u[d];
                }
            }
            Ok(w)
        })
        .collect()
}

/// Windowed D(w) at the closed state: column j is the change of the expansion
/// coefficients per unit change of window slot j.
pub fn build_time_derivative_matrix(spec: &ModelSpec, s: &StateVector) -> Result<MatrixWindow> {
    let ev = evaluate(spec, s)?;
    let entries = time_derivative(spec, &ev)?;
    let cap = ev.set.cap();
    Ok(MatrixWindow { entries, dim: spec.dim, row_cap: cap, col_cap: cap })
}

/// Windowed multiplication-by-ξ_d matrices at the closed state.
pub fn build_velocity_matrices(spec: &ModelSpec, s: &StateVector) -> Result<Vec<MatrixWindow>> {
    let ev = evaluate(spec, s)?;
    velocity_windows(spec, &ev)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Regularized,
    GradType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSystem {
    pub kind: SystemKind,
    pub b: DMatrix<f64>,
    /// A_d for regularized systems, the flux block F_d for Grad-type ones.
    pub a: Vec<DMatrix<f64>>,
    /// Right-hand side B·r of the BGK relaxation; zero unless assembled with τ.
    pub source: DVector<f64>,
    /// Model variables at which the system was evaluated.
    pub w: DVector<f64>,
}

fn lu_checked(b: &DMatrix<f64>) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let lu = b.clone().lu();
    let u = lu.u();
    let diag = u.diagonal().abs();
    let max = diag.max();
    if !(diag.min() > 1e-13 * max) {
        return Err(Error::Singular(format!("B is singular (pivot ratio {:.3e})", diag.min() / max)));
    }
    Ok(lu)
}

impl MomentSystem {
    pub fn size(&self) -> usize {
        self.b.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// F_d, the matrix multiplying ∂ₓ_d w.
    pub fn flux(&self, d: usize) -> DMatrix<f64> {
        match self.kind {
            SystemKind::Regularized => &self.a[d] * &self.b,
            SystemKind::GradType => self.a[d].clone(),
        }
    }

    /// J_d = B⁻¹·F_d.
    pub fn jacobian(&self, d: usize) -> Result<DMatrix<f64>> {
        self.solve_b(&self.flux(d))
    }

    pub fn solve_b(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let lu = lu_checked(&self.b)?;
        lu.solve(rhs).ok_or_else(|| Error::Singular("B".into()))
    }

    /// 2-norm condition number of B.
    pub fn b_condition(&self) -> f64 {
        let sv = self.b.clone().svd(false, false).singular_values;
        sv.max() / sv.min()
    }
}

/// Builds the quasi-linear system at `s` without collision source.
pub fn assemble_system(spec: &ModelSpec, s: &StateVector) -> Result<MomentSystem> {
    let ev = evaluate(spec, s)?;
    let dm = time_derivative(spec, &ev)?;
    let mv = velocity_windows(spec, &ev)?;
    let pp_der = &ev.proj.pp;
    // The shifted pair uses plain truncation for the velocity product.
    let pp_vel = match spec.projection {
        ProjectionKind::Shifted => &ev.proj.pb,
        _ => &ev.proj.pp,
    };
    let d_ew = &dm * &ev.ew;
    let b = pp_der * &d_ew;
    lu_checked(&b)?;
    let pbt = ev.proj.pb.transpose();
    let a = mv
        .iter()
        .map(|m| if spec.regularized { pp_vel * &m.entries * &pbt } else { pp_vel * &m.entries * &d_ew })
        .collect();
    let (_, rw) = spec.variable_maps(&ev.proj);
    let w = rw * &ev.full;
    let n = b.nrows();
    Ok(MomentSystem {
        kind: if spec.regularized { SystemKind::Regularized } else { SystemKind::GradType },
        b,
        a,
        source: DVector::zeros(n),
        w,
    })
}

/// Same as [`assemble_system`] with the BGK right-hand side filled in.
pub fn assemble_system_bgk(spec: &ModelSpec, s: &StateVector, tau: f64) -> Result<MomentSystem> {
    let mut sys = assemble_system(spec, s)?;
    let r = bgk_source(spec, s, tau)?;
    sys.source = &sys.b * r;
    Ok(sys)
}

/// Relaxation rates ∂ₜw of the model variables under BGK with time τ:
/// −w_α/τ on non-conserved coefficient slots, 0 on ρ, u, θ. For a tensor
/// temperature the deviatoric part of Θ relaxes at the same rate.
pub fn bgk_source(spec: &ModelSpec, s: &StateVector, tau: f64) -> Result<DVector<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("relaxation time must be positive, got {tau}")));
    }
    let full = spec.window_parameters(s)?;
    let set = spec.index_set();
    let theta_bar = s.theta();
    let mut r = DVector::zeros(set.len());
    for (k, alpha) in set.iter().enumerate() {
        r[k] = match spec.slot(alpha) {
            Slot::Free if alpha.degree() >= 2 => -full[k] / tau,
            Slot::TensorEntry(i, j) if i == j => -(full[k] - theta_bar / 2.0) / tau,
            Slot::TensorEntry(..) => -full[k] / tau,
            _ => 0.0,
        };
    }
    let p = spec.projection_at(theta_bar)?;
    let (_, rw) = spec.variable_maps(&p);
    Ok(rw * r)
}

/// Pp·M_d·(I − Pbᵀ·Pp)·D·Ew for every direction: the part of the Grad-type
/// flux that the regularization drops.
pub fn grad_vs_regularized_delta(spec: &ModelSpec, s: &StateVector) -> Result<Vec<DMatrix<f64>>> {
    let ev = evaluate(spec, s)?;
    let dm = time_derivative(spec, &ev)?;
    let mv = velocity_windows(spec, &ev)?;
    let n = ev.set.len();
    let rest = DMatrix::<f64>::identity(n, n) - ev.proj.projector();
    let tail = rest * dm * &ev.ew;
    Ok(mv.iter().map(|m| &ev.proj.pp * &m.entries * &tail).collect())
}

/// Change of variables between a cut-off Hermite model and the scaled-velocity
/// model of the same order. Returns (R, J) with
/// R = diag(θ^{−(|α|+D)/2}) relating the equation rows (the expansions in the
/// two bases) and J = ∂w_scaled/∂w_hermite, so that B_s·J = R·B_h and
/// F_s·J = R·F_h when both describe the same system.
pub fn scaled_change_of_variables(order: usize, dim: usize, s: &StateVector) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let set = IndexSet::new(dim, order);
    let n = set.len();
    let theta = s.theta();
    let f = s.coefficient_vector(order);
    let dd = dim as f64;
    let t = set.unit(0, 2);
    let mut r = DMatrix::zeros(n, n);
    let mut j = DMatrix::zeros(n, n);
    for (k, alpha) in set.iter().enumerate() {
        let e = (alpha.degree() as f64 + dd) / 2.0;
        let scale = theta.powf(-e);
        r[(k, k)] = scale;
        match alpha.degree() {
            1 => j[(k, k)] = 1.0,
            _ if k == t => j[(k, k)] = 2.0,
            _ => {
                j[(k, k)] = scale;
                // ∂/∂(θ/2) of θ^{−e} f_α
                j[(k, t)] = -2.0 * e * theta.powf(-e - 1.0) * f[k];
            }
        }
    }
    Ok((r, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::maxwellian_state;

    #[test]
    fn presets_reject_inconsistent_parameters() {
        assert!(preset("G13", 3, 2).is_err());
        assert!(preset("HME1D", 3, 2).is_err());
        assert!(preset("QBME1D", 2, 1).is_err());
        assert!(matches!(preset("Levermore", 3, 1), Err(Error::UnknownModel { .. })));
        let s = preset("QBME1D", 4, 1).unwrap();
        assert_eq!(s.family, FamilyKind::ScaledHermite);
        assert_eq!(s.ps1, InnerProjection::WithInnerProjection);
        let h = preset("HR13", 3, 3).unwrap();
        assert_eq!(h.projection, ProjectionKind::OrderedHierarchy);
        assert!(h.regularized);
        assert_eq!(h.system_size(), 13);
    }

    #[test]
    fn pack_maxwellian() {
        let spec = preset("HME1D", 3, 1).unwrap();
        let s = maxwellian_state(1.0, vec![0.0], 1.0, 3).unwrap();
        assert_eq!(spec.pack(&s).unwrap().as_slice(), &[1.0, 0.0, 0.5, 0.0]);
        assert_eq!(spec.closure(&s).unwrap(), s);
    }

    #[test]
    fn scaled_derivative_entries() {
        let spec = preset("QBME1D", 3, 1).unwrap();
        let s = maxwellian_state(1.0, vec![0.0], 1.0, 3).unwrap();
        let d = build_time_derivative_matrix(&spec, &s).unwrap().entries;
        assert_eq!(d[(1, 1)], 1.0);
        assert_eq!(d[(0, 2)], 0.5);
    }

    #[test]
    fn temperature_block_determinant() {
        let spec = preset("HMEND", 3, 2).unwrap();
        let s = maxwellian_state(2.0, vec![0.0, 0.0], 1.0, 3).unwrap();
        let d = build_time_derivative_matrix(&spec, &s).unwrap().entries;
        let set = spec.index_set();
        let idx = [set.unit(0, 2), set.unit(1, 2)];
        let block = DMatrix::from_fn(2, 2, |i, j| d[(idx[i], idx[j])]);
        assert!((block.determinant() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn grad_derivative_is_lower_triangular() {
        let spec = preset("Grad1D", 3, 1).unwrap();
        let s = maxwellian_state(1.0, vec![0.0], 1.0, 3).unwrap();
        let sys = assemble_system(&spec, &s).unwrap();
        for i in 0..4 {
            assert!(sys.b[(i, i)] != 0.0);
            for j in i + 1..4 {
                assert_eq!(sys.b[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn bgk_rates() {
        let spec = preset("HME1D", 3, 1).unwrap();
        let mut s = maxwellian_state(1.0, vec![0.3], 1.2, 3).unwrap();
        assert_eq!(bgk_source(&spec, &s, 1.0).unwrap().as_slice(), &[0.0; 4]);
        s.coeffs.insert(3, 0.1);
        assert_eq!(bgk_source(&spec, &s, 2.0).unwrap()[3], -0.05);
        assert!(bgk_source(&spec, &s, 0.0).is_err());
    }

    #[test]
    fn delta_vanishes_at_order_two_and_equilibrium() {
        let spec = preset("HME1D", 2, 1).unwrap();
        let mut s = maxwellian_state(1.0, vec![0.0], 1.0, 2).unwrap();
        assert!(grad_vs_regularized_delta(&spec, &s).unwrap()[0].abs().max() == 0.0);
        let spec = preset("HME1D", 3, 1).unwrap();
        s = maxwellian_state(1.0, vec![0.0], 1.0, 3).unwrap();
        assert!(grad_vs_regularized_delta(&spec, &s).unwrap()[0].abs().max() == 0.0);
        s.coeffs.insert(3, 0.3);
        let delta = &grad_vs_regularized_delta(&spec, &s).unwrap()[0];
        assert!(delta.abs().max() > 0.0);
        assert!(delta.rows(0, 3).abs().max() == 0.0);
    }
}

//! First-order finite-volume solver for 1D moment systems with BGK relaxation.
//!
//! Each step freezes the Jacobian J = B⁻¹F at the midpoint of every
//! interface and splits the jump Δ = w_R − w_L into fluctuations
//! ½(J ± λI)Δ, a path-conservative Rusanov scheme for the quasi-linear form.
//! Mass, momentum and energy are advanced with the equivalent Rusanov flux
//! of their conservation laws so that they are conserved to roundoff. The
//! BGK source is applied afterwards as exact exponential decay.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{eigenvalues, spectrum, Verdict};
use crate::assembly::{assemble_system, bgk_source, ModelSpec};
use crate::basis::FamilyKind;
use crate::error::{Error, Result};
use crate::state::{maxwellian_state, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Copy,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub cells: Vec<StateVector>,
    pub dx: f64,
    pub x0: f64,
}

impl Grid1D {
    pub fn new(cells: Vec<StateVector>, dx: f64, x0: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidParameter("grid has no cells".into()));
        }
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidParameter(format!("cell width must be positive, got {dx}")));
        }
        for (i, c) in cells.iter().enumerate() {
            if c.dim() != 1 {
                return Err(Error::InvalidState(format!("cell {i} is not one-dimensional")));
            }
            c.validate().map_err(|e| Error::InvalidState(format!("cell {i}: {e}")))?;
        }
        Ok(Grid1D { cells, dx, x0 })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialCondition {
    Uniform { rho: f64, u: f64, theta: f64 },
    /// Left state (1, 0, 1), right state (0.125, 0, 0.8), jump at x = 0.5.
    Sod,
    /// Sod data with f₃ = amplitude·ρθ^{3/2} in the left half.
    SodHeatFlux { amplitude: f64 },
    /// Periodic smooth wave around (1, 0.3, 1) with relative amplitude `amplitude`.
    Wave { amplitude: f64 },
    Grid { grid: Grid1D },
}

/// Cells on [0, 1] for a named initial condition.
pub fn initial_grid(ic: &InitialCondition, model: &ModelSpec, cells: usize) -> Result<Grid1D> {
    if model.dim != 1 {
        return Err(Error::InconsistentModel(format!("the solver is one-dimensional, {} has D={}", model.name, model.dim)));
    }
    if let InitialCondition::Grid { grid } = ic {
        let cells = grid.cells.iter().map(|c| model.closure(c)).collect::<Result<Vec<_>>>()?;
        return Grid1D::new(cells, grid.dx, grid.x0);
    }
    if cells == 0 {
        return Err(Error::InvalidParameter("at least one cell is required".into()));
    }
    let dx = 1.0 / cells as f64;
    let m = model.order;
    let mut out = Vec::with_capacity(cells);
    for i in 0..cells {
        let x = (i as f64 + 0.5) * dx;
        let left = x < 0.5;
        let s = match ic {
            InitialCondition::Uniform { rho, u, theta } => maxwellian_state(*rho, vec![*u], *theta, m)?,
            InitialCondition::Sod => sod_cell(left, m)?,
            InitialCondition::SodHeatFlux { amplitude } => {
                let mut s = sod_cell(left, m)?;
                if left && m >= 3 {
                    s.coeffs.insert(3, amplitude * s.rho * s.theta().powf(1.5));
                }
                s
            }
            InitialCondition::Wave { amplitude } => {
                let ph = 2.0 * std::f64::consts::PI * x;
                maxwellian_state(1.0 + amplitude * ph.sin(), vec![0.3 + amplitude * ph.cos()], 1.0 + 0.5 * amplitude * ph.sin(), m)?
            }
            InitialCondition::Grid { .. } => unreachable!(),
        };
        out.push(model.closure(&s)?);
    }
    Grid1D::new(out, dx, 0.0)
}

fn sod_cell(left: bool, order: usize) -> Result<StateVector> {
    if left {
        maxwellian_state(1.0, vec![0.0], 1.0, order)
    } else {
        maxwellian_state(0.125, vec![0.0], 0.8, order)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

/// Σ (ρ, ρu, ½ρu² + ½ρθ)·dx.
pub fn conserved_totals(grid: &Grid1D) -> Totals {
    let mut t = Totals { mass: 0.0, momentum: 0.0, energy: 0.0 };
    for c in &grid.cells {
        let [r, m, e] = conserved(c);
        t.mass += r * grid.dx;
        t.momentum += m * grid.dx;
        t.energy += e * grid.dx;
    }
    t
}

fn conserved(c: &StateVector) -> [f64; 3] {
    let u = c.u[0];
    [c.rho, c.rho * u, 0.5 * c.rho * u * u + 0.5 * c.rho * c.theta()]
}

/// Physical fluxes of mass, momentum and energy.
fn conserved_flux(c: &StateVector) -> [f64; 3] {
    let u = c.u[0];
    let p = c.rho * c.theta();
    let q = 3.0 * c.coeff(3);
    let e = 0.5 * c.rho * u * u + 0.5 * p;
    [c.rho * u, c.rho * u * u + p, u * (e + p) + q]
}

fn check_model(model: &ModelSpec) -> Result<()> {
    model.validate()?;
    if model.dim != 1 {
        return Err(Error::InconsistentModel(format!("the solver is one-dimensional, {} has D={}", model.name, model.dim)));
    }
    Ok(())
}

/// Largest spectral radius of the cell Jacobians; fails on the first
/// non-hyperbolic cell.
fn max_cell_speed(grid: &Grid1D, model: &ModelSpec, step: usize, time: f64) -> Result<f64> {
    let speeds: Vec<Result<f64>> = grid
        .cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let sys = assemble_system(model, c)?;
            let r = spectrum(&sys.jacobian(0)?);
            if r.verdict != Verdict::Hyperbolic {
                return Err(Error::NonHyperbolicCell { cell: i, step, time });
            }
            Ok(r.spectral_radius)
        })
        .collect();
    let mut max: f64 = 0.0;
    for s in speeds {
        max = max.max(s?);
    }
    Ok(max)
}

/// dt = cfl·dx / max spectral radius over the cells.
pub fn cfl_dt(grid: &Grid1D, model: &ModelSpec, cfl: f64) -> Result<f64> {
    cfl_dt_at(grid, model, cfl, 0, 0.0)
}

fn cfl_dt_at(grid: &Grid1D, model: &ModelSpec, cfl: f64, step: usize, time: f64) -> Result<f64> {
    check_model(model)?;
    if !(cfl > 0.0 && cfl < 1.0) {
        return Err(Error::InvalidParameter(format!("CFL number must lie in (0, 1), got {cfl}")));
    }
    let speed = max_cell_speed(grid, model, step, time)?;
    if !(speed > 0.0) {
        return Err(Error::InvalidState("all characteristic speeds vanish".into()));
    }
    Ok(cfl * grid.dx / speed)
}

/// Writes ρ, u, θ into the macroscopic slots of a packed 1D vector.
fn set_macroscopic(model: &ModelSpec, w: &mut DVector<f64>, rho: f64, u: f64, theta: f64) {
    if model.family == FamilyKind::ScaledHermite {
        w[0] = rho / theta.sqrt();
        w[2] = theta;
    } else {
        w[0] = rho;
        w[2] = theta / 2.0;
    }
    w[1] = u;
}

/// J·Δ, Δ, conserved-variable flux and spectral radius at one interface.
type Interface = (DVector<f64>, DVector<f64>, [f64; 3], f64);

/// One transport step followed by BGK relaxation. `tau = ∞` disables the
/// collision term.
pub fn step(grid: &Grid1D, model: &ModelSpec, dt: f64, tau: f64, boundary: Boundary) -> Result<Grid1D> {
    step_at(grid, model, dt, tau, boundary, 0, 0.0)
}

fn step_at(
    grid: &Grid1D,
    model: &ModelSpec,
    dt: f64,
    tau: f64,
    boundary: Boundary,
    step_index: usize,
    time: f64,
) -> Result<Grid1D> {
    check_model(model)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("relaxation time must be positive, got {tau}")));
    }
    let n = grid.len();
    let w: Vec<DVector<f64>> = grid.cells.iter().map(|c| model.pack(c)).collect::<Result<_>>()?;
    // Extended with one ghost cell on each side.
    let (left, right) = match boundary {
        Boundary::Copy => (0, n - 1),
        Boundary::Periodic => (n - 1, 0),
    };
    let ext = |k: usize| -> usize {
        match k {
            0 => left,
            k if k == n + 1 => right,
            k => k - 1,
        }
    };
    // Interface k sits between extended cells k and k+1, k = 0..=n.
    let interfaces: Vec<Result<Interface>> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let (l, r) = (ext(k), ext(k + 1));
            let delta = &w[r] - &w[l];
            let mid = model.unpack(&((&w[l] + &w[r]) * 0.5))?;
            let sys = assemble_system(model, &mid)?;
            let j = sys.jacobian(0)?;
            let lambda = eigenvalues(&j)
                .ok_or(Error::NonHyperbolicCell { cell: l, step: step_index, time })?
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            let jd = j * &delta;
            Ok((jd, delta, [0.0; 3], lambda))
        })
        .collect();
    let mut interfaces: Vec<Interface> = interfaces.into_iter().collect::<Result<_>>()?;
    let lambda = interfaces.iter().map(|i| i.3).fold(0.0, f64::max);
    for (k, it) in interfaces.iter_mut().enumerate() {
        let (l, r) = (&grid.cells[ext(k)], &grid.cells[ext(k + 1)]);
        let (fl, fr) = (conserved_flux(l), conserved_flux(r));
        let (ul, ur) = (conserved(l), conserved(r));
        for q in 0..3 {
            it.2[q] = 0.5 * (fl[q] + fr[q]) - 0.5 * lambda * (ur[q] - ul[q]);
        }
    }
    let ratio = dt / grid.dx;
    let decay = if tau.is_infinite() { 0.0 } else { 1.0 - (-dt / tau).exp() };
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let (jl, dl, fl, _) = &interfaces[i];
        let (jr, dr, fr, _) = &interfaces[i + 1];
        // Right-going fluctuation from the left interface, left-going from the right one.
        let plus = (jl + dl * lambda) * 0.5;
        let minus = (jr - dr * lambda) * 0.5;
        let mut wn = &w[i] - (plus + minus) * ratio;
        let c = &grid.cells[i];
        let (rho, u, theta) = (c.rho, c.u[0], c.theta());
        let d: Vec<f64> = (0..3).map(|q| -ratio * (fr[q] - fl[q])).collect();
        let rho_n = rho + d[0];
        let u_n = u + (d[1] - u * d[0]) / rho_n;
        let theta_n = theta + (theta * (rho - rho_n) + 2.0 * d[2] - (rho_n * u_n * u_n - rho * u * u)) / rho_n;
        if !(rho_n > 0.0) || !(theta_n > 0.0) {
            return Err(Error::Positivity { cell: i, step: step_index, time, rho: rho_n, theta: theta_n });
        }
        set_macroscopic(model, &mut wn, rho_n, u_n, theta_n);
        let s = model.unpack(&wn).map_err(|_| Error::Positivity {
            cell: i,
            step: step_index,
            time,
            rho: rho_n,
            theta: theta_n,
        })?;
        let s = if decay > 0.0 {
            let rates = bgk_source(model, &s, 1.0)?;
            model.unpack(&(wn + rates * decay))?
        } else {
            s
        };
        cells.push(s);
    }
    Grid1D::new(cells, grid.dx, grid.x0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub model: ModelSpec,
    pub cfl: f64,
    /// Relaxation time; `f64::INFINITY` switches collisions off.
    pub tau: f64,
    pub t_end: f64,
    pub boundary: Boundary,
    pub initial: InitialCondition,
    /// Cells for named initial conditions (ignored for an explicit grid).
    pub cells: usize,
    /// Number of evenly spaced output times after t = 0.
    pub snapshots: usize,
    pub max_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub grid: Grid1D,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbortReport {
    /// "non-hyperbolic", "positivity" or "step-limit".
    pub reason: String,
    pub cell: Option<usize>,
    pub step: usize,
    pub time: f64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub model: String,
    pub order: usize,
    pub steps: usize,
    pub final_time: f64,
    pub completed: bool,
    pub abort: Option<AbortReport>,
    /// Largest characteristic speed seen over the run.
    pub max_speed: f64,
    pub min_rho: f64,
    pub min_theta: f64,
    pub initial_totals: Totals,
    pub final_totals: Totals,
    /// |final − initial| / |initial| per conserved quantity.
    pub relative_drift: Totals,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Diagnostics,
}

fn drift(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        (b - a).abs()
    } else {
        ((b - a) / a).abs()
    }
}

/// Time loop of [`cfl_dt`] and [`step`]. A non-hyperbolic or non-positive
/// cell ends the run early; the trajectory up to that point is returned with
/// the abort recorded in the diagnostics.
pub fn run(config: &SolverConfig) -> Result<Trajectory> {
    let model = &config.model;
    check_model(model)?;
    if !(config.cfl > 0.0 && config.cfl < 1.0) {
        return Err(Error::InvalidParameter(format!("CFL number must lie in (0, 1), got {}", config.cfl)));
    }
    if !(config.tau > 0.0) {
        return Err(Error::InvalidParameter(format!("relaxation time must be positive, got {}", config.tau)));
    }
    if !(config.t_end >= 0.0) || !config.t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("end time must be finite and non-negative, got {}", config.t_end)));
    }
    let mut grid = initial_grid(&config.initial, model, config.cells)?;
    let initial_totals = conserved_totals(&grid);
    let outputs: Vec<f64> = (1..=config.snapshots.max(1))
        .map(|k| config.t_end * k as f64 / config.snapshots.max(1) as f64)
        .collect();
    let mut snapshots = vec![Snapshot { time: 0.0, grid: grid.clone() }];
    let mut next = 0;
    let mut t = 0.0;
    let mut steps = 0;
    let mut max_speed: f64 = 0.0;
    let mut min_rho = f64::INFINITY;
    let mut min_theta = f64::INFINITY;
    let mut abort = None;
    let track = |g: &Grid1D, min_rho: &mut f64, min_theta: &mut f64| {
        for c in &g.cells {
            *min_rho = min_rho.min(c.rho);
            *min_theta = min_theta.min(c.theta());
        }
    };
    track(&grid, &mut min_rho, &mut min_theta);
    while next < outputs.len() && config.t_end > 0.0 {
        if steps >= config.max_steps {
            abort = Some(AbortReport {
                reason: "step-limit".into(),
                cell: None,
                step: steps,
                time: t,
                message: format!("stopped after {steps} steps"),
            });
            break;
        }
        let dt = match cfl_dt_at(&grid, model, config.cfl, steps, t) {
            Ok(dt) => dt,
            Err(e @ Error::NonHyperbolicCell { cell, .. }) => {
                abort = Some(AbortReport {
                    reason: "non-hyperbolic".into(),
                    cell: Some(cell),
                    step: steps,
                    time: t,
                    message: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        max_speed = max_speed.max(config.cfl * grid.dx / dt);
        let target = outputs[next];
        let (dt, hit) = if t + dt >= target { (target - t, true) } else { (dt, false) };
        match step_at(&grid, model, dt, config.tau, config.boundary, steps, t) {
            Ok(g) => grid = g,
            Err(e @ Error::Positivity { cell, .. }) => {
                abort = Some(AbortReport {
                    reason: "positivity".into(),
                    cell: Some(cell),
                    step: steps,
                    time: t,
                    message: e.to_string(),
                });
                break;
            }
            Err(e) => return Err(e),
        }
        steps += 1;
        t = if hit { target } else { t + dt };
        track(&grid, &mut min_rho, &mut min_theta);
        if hit {
            snapshots.push(Snapshot { time: t, grid: grid.clone() });
            next += 1;
        }
    }
    // The final state must also pass the hyperbolicity check.
    if abort.is_none() {
        if let Err(e @ Error::NonHyperbolicCell { cell, .. }) = max_cell_speed(&grid, model, steps, t) {
            abort = Some(AbortReport {
                reason: "non-hyperbolic".into(),
                cell: Some(cell),
                step: steps,
                time: t,
                message: e.to_string(),
            });
        }
    }
    let final_totals = conserved_totals(&grid);
    let relative_drift = Totals {
        mass: drift(initial_totals.mass, final_totals.mass),
        momentum: drift(initial_totals.momentum, final_totals.momentum),
        energy: drift(initial_totals.energy, final_totals.energy),
    };
    Ok(Trajectory {
        snapshots,
        diagnostics: Diagnostics {
            model: model.name.clone(),
            order: model.order,
            steps,
            final_time: t,
            completed: abort.is_none(),
            abort,
            max_speed,
            min_rho,
            min_theta,
            initial_totals,
            final_totals,
            relative_drift,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::preset;

    #[test]
    fn cfl_examples() {
        let model = preset("HME1D", 3, 1).unwrap();
        let cells = vec![maxwellian_state(1.0, vec![0.0], 1.0, 3).unwrap(); 10];
        let grid = Grid1D::new(cells, 0.01, 0.0).unwrap();
        let dt = cfl_dt(&grid, &model, 0.5).unwrap();
        assert!((dt - 0.5 * 0.01 / 2.3344142183389773).abs() < 1e-15);
        assert!(cfl_dt(&grid, &model, 0.0).is_err());
        let hot = Grid1D::new(vec![maxwellian_state(1.0, vec![0.0], 2.0, 3).unwrap(); 10], 0.01, 0.0).unwrap();
        let ratio = cfl_dt(&hot, &model, 0.5).unwrap() / dt;
        assert!((ratio - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn uniform_totals() {
        let cells = vec![maxwellian_state(2.0, vec![0.5], 1.5, 3).unwrap(); 4];
        let t = conserved_totals(&Grid1D::new(cells, 0.25, 0.0).unwrap());
        assert!((t.mass - 2.0).abs() < 1e-15);
        assert!((t.momentum - 1.0).abs() < 1e-15);
        assert!((t.energy - (0.25 + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn stiff_relaxation_removes_heat_flux() {
        let model = preset("HME1D", 3, 1).unwrap();
        let mut s = maxwellian_state(1.0, vec![0.0], 1.0, 3).unwrap();
        s.coeffs.insert(3, 0.2);
        let grid = Grid1D::new(vec![s; 8], 0.1, 0.0).unwrap();
        let out = step(&grid, &model, 1e-3, 1e-12, Boundary::Periodic).unwrap();
        assert!(out.cells.iter().all(|c| c.coeff(3).abs() < 1e-300));
    }
}

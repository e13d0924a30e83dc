//! CSV and JSON renderings of matrices, systems, spectra and snapshots.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::SpectrumReport;
use crate::assembly::{ModelSpec, MomentSystem, SystemKind};
use crate::basis::IndexSet;
use crate::solver::Grid1D;
use crate::state::StateVector;

/// 17 significant digits, enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Row-major CSV, one matrix row per line.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_float(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn vector_csv(v: &DVector<f64>) -> String {
    v.iter().map(|x| format_float(*x) + "\n").collect()
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Ordinal ↔ multi-index table of the model's window.
pub fn ordering_table(spec: &ModelSpec) -> Vec<(usize, Vec<usize>)> {
    let set = IndexSet::new(spec.dim, spec.window_cap());
    set.iter().enumerate().map(|(k, a)| (k, a.components().to_vec())).collect()
}

pub fn ordering_csv(spec: &ModelSpec) -> String {
    let mut out = String::from("ordinal,alpha\n");
    for (k, a) in ordering_table(spec) {
        let parts: Vec<String> = a.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("{k},{}\n", parts.join(" ")));
    }
    out
}

/// Full description of an assembled system.
pub fn system_json(spec: &ModelSpec, state: &StateVector, sys: &MomentSystem) -> Value {
    let ordering: Vec<Value> = ordering_table(spec).into_iter().map(|(k, a)| json!({"ordinal": k, "alpha": a})).collect();
    let a_key = match sys.kind {
        SystemKind::Regularized => "A",
        SystemKind::GradType => "F",
    };
    let flux: Vec<Vec<Vec<f64>>> = (0..sys.dim()).map(|d| matrix_rows(&sys.flux(d))).collect();
    let blocks: Vec<Vec<Vec<f64>>> = sys.a.iter().map(matrix_rows).collect();
    json!({
        "model": spec,
        "state": state,
        "variables": spec.variable_labels().unwrap_or_default(),
        "w": sys.w.as_slice(),
        "kind": sys.kind,
        "B": matrix_rows(&sys.b),
        a_key: blocks,
        "flux": flux,
        "source": sys.source.as_slice(),
        "ordering": ordering,
    })
}

pub fn spectrum_csv(r: &SpectrumReport) -> String {
    let mut out = String::from("re,im\n");
    for e in &r.eigenvalues {
        out.push_str(&format!("{},{}\n", format_float(e.re), format_float(e.im)));
    }
    out
}

/// Columns x, rho, u, theta, then f_k for k = 3..=order (physical
/// normalization, f₀ = ρ).
pub fn snapshot_csv(grid: &Grid1D, order: usize) -> String {
    let mut out = String::from("x,rho,u,theta");
    for k in 3..=order {
        out.push_str(&format!(",f_{k}"));
    }
    out.push('\n');
    for (i, c) in grid.cells.iter().enumerate() {
        let mut row = vec![format_float(grid.center(i)), format_float(c.rho), format_float(c.u[0]), format_float(c.theta())];
        for k in 3..=order {
            row.push(format_float(c.coeff(k)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

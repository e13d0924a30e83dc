//! Spectra, hyperbolicity verdicts, scans and symmetry checks.

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_system, MomentSystem, ModelSpec, ProjectionKind, SystemKind};
use crate::basis::{gram_matrix, BasisFamily, FamilyKind};
use crate::error::{Error, Result};
use crate::state::{galilean_shift, rotate_state, sample_state, StateVector};

pub const TOL_IMAG: f64 = 1e-9;
pub const TOL_COND: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Hyperbolic,
    NonReal,
    Defective,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub imag: f64,
    pub cond: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { imag: TOL_IMAG, cond: TOL_COND }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by (re, im).
    pub eigenvalues: Vec<Eigenvalue>,
    /// max |Im λ| divided by the spectral radius.
    pub max_imag: f64,
    pub spectral_radius: f64,
    /// Condition number of the eigenvector matrix; absent when the spectrum
    /// is not real or the eigensolver failed.
    pub condition: Option<f64>,
    pub verdict: Verdict,
    /// Set when the eigenvalue iteration did not converge.
    pub failure: Option<String>,
}

impl SpectrumReport {
    pub fn is_hyperbolic(&self) -> bool {
        self.verdict == Verdict::Hyperbolic
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.re).collect()
    }
}

/// Σ n_d A_d for regularized systems, Σ n_d B⁻¹F_d for Grad-type ones.
pub fn directional_matrix(sys: &MomentSystem, n: &[f64]) -> Result<DMatrix<f64>> {
    if n.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: n.len() });
    }
    let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("direction must be a unit vector, |n| = {norm}")));
    }
    let k = sys.size();
    let mut acc = DMatrix::zeros(k, k);
    for (d, &nd) in n.iter().enumerate() {
        if nd != 0.0 {
            acc += &sys.a[d] * nd;
        }
    }
    match sys.kind {
        SystemKind::Regularized => Ok(acc),
        SystemKind::GradType => sys.solve_b(&acc),
    }
}

/// Eigenvalues of a real square matrix, or None if the QR iteration fails.
pub fn eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let n = m.nrows();
    if n == 0 {
        return Some(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let ev = fm.eigenvalues().ok()?;
    Some(ev.into_iter().map(|z| Complex::new(z.re, z.im)).collect())
}

pub fn spectrum(m: &DMatrix<f64>) -> SpectrumReport {
    spectrum_with(m, Tolerances::default())
}

pub fn spectrum_with(m: &DMatrix<f64>, tol: Tolerances) -> SpectrumReport {
    let scale = m.abs().max();
    let Some(mut eig) = eigenvalues(m) else {
        return SpectrumReport {
            eigenvalues: Vec::new(),
            max_imag: f64::NAN,
            spectral_radius: f64::NAN,
            condition: None,
            verdict: Verdict::Defective,
            failure: Some("eigenvalue iteration did not converge".into()),
        };
    };
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let imag = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let max_imag = if radius > 0.0 { imag / radius } else { 0.0 };
    let eigenvalues = eig.iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect();
    if max_imag > tol.imag {
        return SpectrumReport {
            eigenvalues,
            max_imag,
            spectral_radius: radius,
            condition: None,
            verdict: Verdict::NonReal,
            failure: None,
        };
    }
    let real: Vec<f64> = eig.iter().map(|z| z.re).collect();
    let condition = eigenvector_condition(m, &real, scale.max(radius));
    let verdict = if condition <= tol.cond { Verdict::Hyperbolic } else { Verdict::Defective };
    SpectrumReport { eigenvalues, max_imag, spectral_radius: radius, condition: Some(condition), verdict, failure: None }
}

/// Condition number of an eigenvector basis built by inverse iteration.
/// Nearly equal eigenvalues are grouped and their vectors orthogonalized
/// against each other; a group that cannot be spanned by true eigenvectors
/// (a Jordan block) leaves a large residual and is reported as infinite.
fn eigenvector_condition(m: &DMatrix<f64>, sorted_real: &[f64], scale: f64) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    let gap = 1e-7 * scale;
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for &l in sorted_real {
        match clusters.last_mut() {
            Some(c) if l - c[c.len() - 1] <= gap => c.push(l),
            _ => clusters.push(vec![l]),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(n);
    for cluster in clusters {
        let centre = cluster.iter().sum::<f64>() / cluster.len() as f64;
        let spread = cluster[cluster.len() - 1] - cluster[0];
        let mut shift = centre + 1e-10 * scale;
        let mut lu = None;
        for _ in 0..8 {
            let shifted = m - DMatrix::<f64>::identity(n, n) * shift;
            let cand = shifted.lu();
            let diag = cand.u().diagonal().abs();
            if diag.min() > 0.0 && diag.iter().all(|v| v.is_finite()) {
                lu = Some(cand);
                break;
            }
            shift += 1e-9 * scale;
        }
        let Some(lu) = lu else { return f64::INFINITY };
        let first = vectors.len();
        for _ in 0..cluster.len() {
            let mut x = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            for _ in 0..3 {
                x = match lu.solve(&x) {
                    Some(y) => y,
                    None => return f64::INFINITY,
                };
                for _ in 0..2 {
                    for v in &vectors[first..] {
                        let c = v.dot(&x);
                        x -= v * c;
                    }
                }
                let norm = x.norm();
                if !(norm > 0.0) || !norm.is_finite() {
                    return f64::INFINITY;
                }
                x /= norm;
            }
            let residual = (m * &x - &x * centre).norm();
            if residual > 1e-6 * scale + 2.0 * spread {
                return f64::INFINITY;
            }
            vectors.push(x);
        }
    }
    let v = DMatrix::from_columns(&vectors);
    let sv = v.svd(false, false).singular_values;
    let smin = sv.min();
    if smin > 0.0 {
        sv.max() / smin
    } else {
        f64::INFINITY
    }
}

/// Largest pairwise distance after sorting both spectra by (re, im).
pub fn multiset_distance(a: &[Eigenvalue], b: &[Eigenvalue]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let sorted = |v: &[Eigenvalue]| {
        let mut v = v.to_vec();
        v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        v
    };
    sorted(a)
        .iter()
        .zip(sorted(b).iter())
        .map(|(x, y)| (x.re - y.re).hypot(x.im - y.im))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: u64,
    /// Seed from which the state and direction are regenerated.
    pub trial_seed: u64,
    pub state: StateVector,
    pub direction: Vec<f64>,
    pub verdict: Verdict,
    pub max_imag: f64,
    pub condition: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub model: String,
    pub order: usize,
    pub dim: usize,
    pub trials: u64,
    pub seed: u64,
    /// Amplitude used for every trial.
    pub amplitude: f64,
    pub hyperbolic: u64,
    pub non_real: u64,
    pub defective: u64,
    /// Trials where B could not be inverted.
    pub singular: u64,
    pub hyperbolic_fraction: f64,
    /// Largest symmetrization residual seen, when requested.
    pub max_symmetrization_residual: Option<f64>,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub max_witnesses: usize,
    pub symmetrization: bool,
    pub tolerances: Tolerances,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { max_witnesses: 10, symmetrization: false, tolerances: Tolerances::default() }
    }
}

/// Seed of trial `t`, a SplitMix64 step away from the scan seed.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniformly distributed unit direction.
pub fn sample_direction(seed: u64, dim: usize) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    loop {
        // Box–Muller pairs give Gaussian components.
        let g: Vec<f64> = (0..dim)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return g.iter().map(|v| v / norm).collect();
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrialOutcome {
    Checked { state: StateVector, direction: Vec<f64>, report: SpectrumReport, symmetrization: Option<f64> },
    Singular { state: StateVector, direction: Vec<f64> },
}

/// Regenerates and checks one scan trial from its seed.
pub fn replay_trial(spec: &ModelSpec, amplitude: f64, seed: u64, options: &ScanOptions) -> Result<TrialOutcome> {
    let state = sample_state(seed, spec, amplitude)?;
    let direction = sample_direction(seed, spec.dim);
    let sys = match assemble_system(spec, &state) {
        Ok(s) => s,
        Err(Error::Singular(_)) => return Ok(TrialOutcome::Singular { state, direction }),
        Err(e) => return Err(e),
    };
    let m = match directional_matrix(&sys, &direction) {
        Ok(m) => m,
        Err(Error::Singular(_)) => return Ok(TrialOutcome::Singular { state, direction }),
        Err(e) => return Err(e),
    };
    let report = spectrum_with(&m, options.tolerances);
    let symmetrization = if options.symmetrization { Some(symmetrization_residual(spec, &state, &sys)?) } else { None };
    Ok(TrialOutcome::Checked { state, direction, report, symmetrization })
}

pub fn hyperbolicity_scan(spec: &ModelSpec, trials: u64, amplitude: f64, seed: u64) -> Result<ScanReport> {
    hyperbolicity_scan_with(spec, trials, amplitude, seed, &ScanOptions::default())
}

pub fn hyperbolicity_scan_with(
    spec: &ModelSpec,
    trials: u64,
    amplitude: f64,
    seed: u64,
    options: &ScanOptions,
) -> Result<ScanReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("a scan needs at least one trial".into()));
    }
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude must be non-negative, got {amplitude}")));
    }
    spec.validate()?;
    let outcomes: Vec<Result<TrialOutcome>> =
        (0..trials).into_par_iter().map(|t| replay_trial(spec, amplitude, trial_seed(seed, t), options)).collect();
    let mut report = ScanReport {
        model: spec.name.clone(),
        order: spec.order,
        dim: spec.dim,
        trials,
        seed,
        amplitude,
        hyperbolic: 0,
        non_real: 0,
        defective: 0,
        singular: 0,
        hyperbolic_fraction: 0.0,
        max_symmetrization_residual: None,
        witnesses: Vec::new(),
    };
    for (t, outcome) in outcomes.into_iter().enumerate() {
        let t = t as u64;
        match outcome? {
            TrialOutcome::Checked { state, direction, report: r, symmetrization } => {
                if let Some(res) = symmetrization {
                    let cur = report.max_symmetrization_residual.unwrap_or(0.0);
                    report.max_symmetrization_residual = Some(cur.max(res));
                }
                match r.verdict {
                    Verdict::Hyperbolic => report.hyperbolic += 1,
                    Verdict::NonReal => report.non_real += 1,
                    Verdict::Defective => report.defective += 1,
                }
                if r.verdict != Verdict::Hyperbolic && report.witnesses.len() < options.max_witnesses {
                    report.witnesses.push(Witness {
                        trial: t,
                        trial_seed: trial_seed(seed, t),
                        state,
                        direction,
                        verdict: r.verdict,
                        max_imag: r.max_imag,
                        condition: r.condition,
                    });
                }
            }
            TrialOutcome::Singular { .. } => report.singular += 1,
        }
    }
    report.hyperbolic_fraction = report.hyperbolic as f64 / trials as f64;
    Ok(report)
}

/// Gram matrix of the basis at the model's state, on its window.
fn model_gram(spec: &ModelSpec, s: &StateVector) -> Result<DMatrix<f64>> {
    let cap = spec.window_cap();
    let family = match spec.family {
        FamilyKind::HermiteUTheta => BasisFamily::hermite(s.u.clone(), s.theta())?,
        FamilyKind::GaussianHermite => BasisFamily::gaussian(s.u.clone(), s.theta_tensor())?,
        FamilyKind::ScaledHermite => BasisFamily::scaled(spec.dim),
    };
    gram_matrix(&family, cap)
}

fn symmetrization_residual(spec: &ModelSpec, s: &StateVector, sys: &MomentSystem) -> Result<f64> {
    if spec.projection == ProjectionKind::Shifted {
        // The derivative projection is oblique by construction.
        let p = spec.projection_at(s.theta())?;
        let dev = (&p.pp - &p.pb).abs().max();
        return Err(Error::NonOrthogonalProjection(dev));
    }
    let closed = spec.closure(s)?;
    let g = model_gram(spec, &closed)?;
    let p = spec.projection_at(closed.theta())?;
    let gs = &p.pb * &g * p.pb.transpose();
    let chol = gs
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("subspace Gram matrix".into()))?;
    let orth = chol.solve(&(&p.pb * &g));
    let dev = (&orth - &p.pp).abs().max() / p.pp.abs().max();
    if dev > 1e-10 {
        return Err(Error::NonOrthogonalProjection(dev));
    }
    let l = chol.l();
    let lt = l.transpose();
    let mut worst: f64 = 0.0;
    for d in 0..sys.dim() {
        // K_d = F_d·B⁻¹ acts on the equation side (equal to A_d when regularized).
        let k = match sys.kind {
            SystemKind::Regularized => sys.a[d].clone(),
            SystemKind::GradType => {
                let bt = sys.b.transpose().lu();
                bt.solve(&sys.a[d].transpose())
                    .ok_or_else(|| Error::Singular("B".into()))?
                    .transpose()
            }
        };
        // S = Lᵀ·K·L⁻ᵀ, with K·L⁻ᵀ = (L⁻¹·Kᵀ)ᵀ
        let x = l
            .solve_lower_triangular(&k.transpose())
            .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
        let sm = &lt * x.transpose();
        let asym = (&sm - sm.transpose()).abs().max();
        let size = sm.abs().max();
        if size > 0.0 {
            worst = worst.max(asym / size);
        }
    }
    Ok(worst)
}

/// Largest relative asymmetry of Q·K_d·Q⁻¹ over directions, with Q the
/// orthonormalizing change of basis of the subspace Gram matrix.
pub fn symmetrization_check(spec: &ModelSpec, s: &StateVector) -> Result<f64> {
    let sys = assemble_system(spec, s)?;
    symmetrization_residual(spec, s, &sys)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    /// Multiset distance between the spectra in the original and rotated frame.
    pub rotation_error: f64,
    /// Distance between the shifted spectrum and the original one plus n·Δu.
    pub galilean_error: f64,
}

impl InvarianceReport {
    pub fn max_error(&self) -> f64 {
        self.rotation_error.max(self.galilean_error)
    }
}

fn directional_spectrum(spec: &ModelSpec, s: &StateVector, n: &[f64]) -> Result<SpectrumReport> {
    let sys = assemble_system(spec, s)?;
    Ok(spectrum(&directional_matrix(&sys, n)?))
}

pub fn invariance_suite(
    spec: &ModelSpec,
    s: &StateVector,
    r: &DMatrix<f64>,
    du: &[f64],
    n: &[f64],
) -> Result<InvarianceReport> {
    let base = directional_spectrum(spec, s, n)?;
    let rotated = rotate_state(s, r)?;
    let rn: Vec<f64> = (r * DVector::from_column_slice(n)).iter().copied().collect();
    let rot = directional_spectrum(spec, &rotated, &rn)?;
    let shifted = galilean_shift(s, du)?;
    let gal = directional_spectrum(spec, &shifted, n)?;
    let ndu: f64 = n.iter().zip(du).map(|(a, b)| a * b).sum();
    let expected: Vec<Eigenvalue> = base.eigenvalues.iter().map(|e| Eigenvalue { re: e.re + ndu, im: e.im }).collect();
    Ok(InvarianceReport {
        rotation_error: multiset_distance(&base.eigenvalues, &rot.eigenvalues),
        galilean_error: multiset_distance(&expected, &gal.eigenvalues),
    })
}

/// Random rotation from the QR factorization of a Gaussian matrix, with the
/// sign fixed so that det = +1.
pub fn random_rotation(seed: u64, dim: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let qr = g.qr();
    let mut q = qr.q();
    let rdiag = qr.r().diagonal();
    for j in 0..dim {
        if rdiag[j] < 0.0 {
            let c = -q.column(j);
            q.set_column(j, &c);
        }
    }
    if q.determinant() < 0.0 {
        let c = -q.column(0);
        q.set_column(0, &c);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_matrix_is_hyperbolic() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let r = spectrum(&m);
        assert_eq!(r.max_imag, 0.0);
        assert_eq!(r.verdict, Verdict::Hyperbolic);
    }

    #[test]
    fn rotation_block_is_non_real() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert_eq!(spectrum(&m).verdict, Verdict::NonReal);
    }

    #[test]
    fn jordan_block_is_defective() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(spectrum(&m).verdict, Verdict::Defective);
        let id = DMatrix::<f64>::identity(4, 4) * 3.0;
        let r = spectrum(&id);
        assert_eq!(r.verdict, Verdict::Hyperbolic);
        assert!((r.condition.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multiset_distance_is_order_free() {
        let a = [Eigenvalue { re: 1.0, im: 0.0 }, Eigenvalue { re: -1.0, im: 0.0 }];
        let b = [Eigenvalue { re: -1.0, im: 0.0 }, Eigenvalue { re: 1.0 + 1e-3, im: 0.0 }];
        assert!((multiset_distance(&a, &b) - 1e-3).abs() < 1e-15);
        assert_eq!(multiset_distance(&a, &a[..1]), f64::INFINITY);
    }

    #[test]
    fn random_rotation_is_proper() {
        for seed in 0..5 {
            let q = random_rotation(seed, 3);
            assert!((q.transpose() * &q - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-14);
            assert!((q.determinant() - 1.0).abs() < 1e-14);
        }
    }
}

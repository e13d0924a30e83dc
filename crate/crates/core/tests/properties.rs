use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use moment_forge::analysis::{directional_matrix, hyperbolicity_scan, spectrum, Verdict};
use moment_forge::assembly::{assemble_system, preset};
use moment_forge::solver::{conserved_totals, step, Boundary, Grid1D};
use moment_forge::state::{galilean_shift, maxwellian_state, rotate_state, sample_state, StateVector};

fn hme_state(rho: f64, u: f64, theta: f64, f: &[f64]) -> StateVector {
    let mut s = maxwellian_state(rho, vec![u], theta, 2 + f.len()).unwrap();
    for (k, v) in f.iter().enumerate() {
        s.coeffs.insert(3 + k, *v);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hme_is_hyperbolic_everywhere(
        rho in 0.1f64..5.0,
        u in -3.0f64..3.0,
        theta in 0.1f64..5.0,
        f in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let spec = preset("HME1D", 5, 1).unwrap();
        let s = hme_state(rho, u, theta, &f);
        let sys = assemble_system(&spec, &s).unwrap();
        let r = spectrum(&directional_matrix(&sys, &[1.0]).unwrap());
        prop_assert_eq!(r.verdict, Verdict::Hyperbolic);
    }

    #[test]
    fn unpack_inverts_pack(seed in any::<u64>(), amplitude in 0.0f64..1.0) {
        for (name, m, d) in [("HME1D", 4, 1), ("QBME1D", 4, 1), ("HMEND", 3, 2), ("AHME", 3, 2), ("HR13", 3, 3)] {
            let spec = preset(name, m, d).unwrap();
            let s = sample_state(seed, &spec, amplitude).unwrap();
            let w = spec.pack(&s).unwrap();
            let back = spec.pack(&spec.unpack(&w).unwrap()).unwrap();
            prop_assert!((w - back).amax() < 1e-12);
        }
    }

    #[test]
    fn galilean_shift_moves_every_speed(seed in any::<u64>(), du in -2.0f64..2.0) {
        let spec = preset("QBME1D", 4, 1).unwrap();
        let s = sample_state(seed, &spec, 0.5).unwrap();
        let base = spectrum(&assemble_system(&spec, &s).unwrap().jacobian(0).unwrap());
        let moved = galilean_shift(&s, &[du]).unwrap();
        let shifted = spectrum(&assemble_system(&spec, &moved).unwrap().jacobian(0).unwrap());
        for (a, b) in base.eigenvalues.iter().zip(&shifted.eigenvalues) {
            prop_assert!((a.re + du - b.re).abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_preserves_macroscopic_invariants(seed in any::<u64>(), angle in 0.0f64..6.3) {
        let spec = preset("HMEND", 4, 2).unwrap();
        let s = sample_state(seed, &spec, 0.5).unwrap();
        let r = DMatrix::from_row_slice(2, 2, &[angle.cos(), -angle.sin(), angle.sin(), angle.cos()]);
        let t = rotate_state(&s, &r).unwrap();
        assert_relative_eq!(t.rho, s.rho, max_relative = 1e-14);
        assert_relative_eq!(t.theta(), s.theta(), max_relative = 1e-14);
        let speed = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_relative_eq!(speed(&t.u), speed(&s.u), epsilon = 1e-13);
    }

    #[test]
    fn step_conserves_mass_momentum_energy(
        seed in any::<u64>(),
        cells in 4usize..12,
        tau in prop_oneof![Just(f64::INFINITY), 0.01f64..1.0],
    ) {
        let spec = preset("HME1D", 4, 1).unwrap();
        let states: Vec<StateVector> = (0..cells)
            .map(|i| spec.closure(&sample_state(seed.wrapping_add(i as u64), &spec, 0.2).unwrap()).unwrap())
            .collect();
        let grid = Grid1D::new(states, 0.1, 0.0).unwrap();
        let next = step(&grid, &spec, 1e-3, tau, Boundary::Periodic).unwrap();
        let (a, b) = (conserved_totals(&grid), conserved_totals(&next));
        prop_assert!((a.mass - b.mass).abs() < 1e-13 * a.mass.abs().max(1.0));
        prop_assert!((a.momentum - b.momentum).abs() < 1e-13 * a.momentum.abs().max(1.0));
        prop_assert!((a.energy - b.energy).abs() < 1e-13 * a.energy.abs().max(1.0));
    }
}

#[test]
fn scans_are_reproducible_from_the_seed() {
    let spec = preset("Grad1D", 3, 1).unwrap();
    let a = hyperbolicity_scan(&spec, 300, 1.0, 42).unwrap();
    let b = hyperbolicity_scan(&spec, 300, 1.0, 42).unwrap();
    assert_eq!(a, b);
    let c = hyperbolicity_scan(&spec, 300, 1.0, 43).unwrap();
    assert_ne!(a.witnesses, c.witnesses);
}

#[test]
fn grad_agrees_with_hme_at_equilibrium() {
    let s = maxwellian_state(1.4, vec![0.3], 0.8, 4).unwrap();
    let grad = assemble_system(&preset("Grad1D", 4, 1).unwrap(), &s).unwrap();
    let hme = assemble_system(&preset("HME1D", 4, 1).unwrap(), &s).unwrap();
    let diff = grad.jacobian(0).unwrap() - hme.jacobian(0).unwrap();
    assert!(diff.amax() < 1e-13);
}

//! Slower harness-level studies: global order of the first-order scheme,
//! reference self-consistency, and trajectory relaxation properties.

use chsplit_core::field::dealiased_cube;
use chsplit_core::*;

#[test]
fn lie_scheme_converges_at_first_order() {
    let grid = Grid::new(256);
    let spec = ExperimentSpec {
        initial_data: InitialData::SingleMode {
            amplitude: 0.1,
            wavenumber: 1,
        },
        nu: 1.0,
        horizon: 1.0,
        scheme: SchemeKind::LieFirstOrder,
        tolerance_band: (0.85, 1.15),
    };
    let taus: Vec<f64> = (5..=10).map(|i| 0.5f64.powi(i)).collect();
    let report =
        convergence_study(&spec, &grid, &taus, &SubstepControl::default()).expect("study runs");
    assert!(
        report.pass,
        "first-order scheme fitted order {:.4} outside [0.85, 1.15]",
        report.fitted_order
    );
}

#[test]
fn scheme_is_exact_against_itself_at_the_reference_step() {
    let grid = Grid::new(64);
    let u0 = RealField::from_fn(&grid, |x| 0.1 * x.cos());
    let nu = 1.0;
    let horizon = 0.25;
    let ctl = SubstepControl::default();
    let reference = reference_solve(&u0, nu, horizon, &ctl).expect("reference converges");
    let tau_ref = reference.certificate.tau_ref;

    let spec = ExperimentSpec {
        initial_data: InitialData::SingleMode {
            amplitude: 0.1,
            wavenumber: 1,
        },
        nu,
        horizon,
        scheme: SchemeKind::StrangLnl,
        tolerance_band: (1.85, 2.15),
    };
    let taus = vec![8.0 * tau_ref, 4.0 * tau_ref, 2.0 * tau_ref, tau_ref];
    let report = convergence_study(&spec, &grid, &taus, &ctl).expect("study runs");
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    // the smallest rung reruns the reference computation exactly
    let err_at_ref = *report.errors.last().unwrap();
    assert!(
        err_at_ref < 1e-12,
        "self-comparison error {err_at_ref:.3e} should vanish"
    );
}

#[test]
fn reference_solution_satisfies_the_flow_equation() {
    // forward difference in time vs the right side ∂_xx(-ν∂_xx u + u³ - u):
    // the defect is O(δ) and halves with δ
    let grid = Grid::new(128);
    let u0 = RealField::from_fn(&grid, |x| 0.1 * x.cos());
    let nu = 1.0;
    let t_final = 0.1;
    let ctl = SubstepControl::default();

    let rhs = |u: &RealField| -> RealField {
        let hat = u.to_spectral();
        let cube_xx = dealiased_cube(u)
            .to_spectral()
            .derivative(2)
            .to_real_unchecked();
        let u_xx = hat.derivative(2).to_real_unchecked();
        let u_xxxx = hat.derivative(4).to_real_unchecked();
        &(&cube_xx - &u_xx) - &(&u_xxxx * nu)
    };

    let u_t = reference_solve(&u0, nu, t_final, &ctl).expect("reference converges");
    let defect = |delta: f64| -> f64 {
        let u_prev = reference_solve(&u0, nu, t_final - delta, &ctl).expect("reference converges");
        let fd = &(&u_t.field - &u_prev.field) * (1.0 / delta);
        (&fd - &rhs(&u_prev.field)).l2_norm()
    };

    let e1 = defect(1e-3);
    let e2 = defect(5e-4);
    assert!(e1 < 1e-6, "first-order defect too large: {e1:.3e}");
    let ratio = e1 / e2;
    assert!(
        (1.7..=2.3).contains(&ratio),
        "defect ratio {ratio:.3} not O(delta)"
    );
}

#[test]
fn long_relaxation_approaches_a_discrete_steady_state() {
    // kink-forming data relaxes until the steady-state residual is small
    let grid = Grid::new(256);
    let u0 = RealField::from_fn(&grid, f64::cos);
    let cfg = SchemeConfig {
        nu: 0.2,
        tau: 1e-3,
        scheme: SchemeKind::StrangLnl,
        n_steps: 10_000,
        grid_points: 256,
        substep: SubstepControl::default(),
    };
    let traj = run(&u0, &cfg, 0);
    assert!(traj.failure.is_none(), "{:?}", traj.failure);
    let last = traj.final_record();
    assert!(
        last.diagnostics.residual < 1e-2,
        "residual after relaxation: {:.3e}",
        last.diagnostics.residual
    );
    // the relaxed profile saturates toward the pure phases
    assert!(last.diagnostics.linf > 0.9 && last.diagnostics.linf <= 1.05);
}

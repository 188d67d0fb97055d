use cbp_core::csbpdi::values_at;
use cbp_core::mechanisms::{Atom, JumpRate, LimitParams, StateRate};
use cbp_core::stats::{mean_estimate, variance_estimate, Estimate};
use cbp_core::{feller_laplace, feller_moments, laplace_mc, simulate_csbpdi_path_on_grid, PathSample, StreamKey};

fn run(params: &LimitParams<f64>, z0: f64, dt: f64, paths: u64, domain: u64) -> Vec<PathSample<f64>> {
    (0..paths)
        .map(|i| {
            let mut rng = StreamKey::new(2024, domain, i).rng();
            simulate_csbpdi_path_on_grid(params, z0, 1.0, dt, 0.5, &mut rng).unwrap()
        })
        .collect()
}

fn feller(m: f64, a: f64, b: f64, alpha: f64) -> LimitParams<f64> {
    LimitParams::new(m, 1.0).with_branching(a, b, vec![]).with_immigration(
        StateRate::Constant(alpha),
        vec![],
        JumpRate::Constant(0.0),
    )
}

#[test]
fn monte_carlo_reproduces_closed_form_moments_and_laplace_transform() {
    // m = 1.5 and gamma0 sigma0 = 0.2 exercise every coefficient.
    let params = feller(1.5, 0.6, 0.9, 0.8).with_control_limits(0.3, 0.2);
    let z0 = 1.2;
    let paths = run(&params, z0, 2e-3, 100_000, 1);
    let values = values_at(&paths, 1.0).unwrap();
    let (mean, var) = feller_moments(&params, z0, 1.0).unwrap();
    let m = mean_estimate(&values);
    let v = variance_estimate(&values);
    assert!(m.z_score(&Estimate::exact(mean)) < 3.0, "{m:?} vs {mean}");
    assert!(v.z_score(&Estimate::exact(var)) < 3.0, "{v:?} vs {var}");
    for lambda in [0.5, 1.0, 3.0] {
        let est = laplace_mc(&paths, 1.0, lambda).unwrap();
        let exact = feller_laplace(&params, z0, 1.0, lambda).unwrap();
        assert!(
            est.z_score(&Estimate::exact(exact)) < 3.0,
            "{lambda}: {est:?} vs {exact}"
        );
    }
}

#[test]
fn paths_started_near_zero_stay_nonnegative() {
    let params = feller(1.0, 1.0, 1.5, 0.1);
    let paths = run(&params, 0.01, 1e-3, 2_000, 2);
    assert!(paths.iter().all(|p| p.values.iter().all(|v| *v >= 0.0)));
}

#[test]
fn halving_dt_keeps_the_mean() {
    let params = feller(1.0, 0.5, 1.0, 1.0);
    let coarse = mean_estimate(&values_at(&run(&params, 0.5, 0.02, 10_000, 3), 1.0).unwrap());
    let fine = mean_estimate(&values_at(&run(&params, 0.5, 0.01, 10_000, 4), 1.0).unwrap());
    assert!(coarse.z_score(&fine) < 2.0, "{coarse:?} {fine:?}");
}

#[test]
fn compensated_branching_jumps_leave_the_mean_ode_unchanged() {
    let params = LimitParams::new(1.0, 1.0).with_branching(0.3, 0.5, vec![Atom::new(0.5, 2.0).unwrap()]);
    let z0 = 2.0;
    let est = mean_estimate(&values_at(&run(&params, z0, 1e-3, 10_000, 5), 1.0).unwrap());
    let exact = z0 * (-0.3_f64).exp();
    assert!(est.z_score(&Estimate::exact(exact)) < 3.0, "{est:?} vs {exact}");
}

#[test]
fn immigration_jumps_are_scaled_by_m() {
    // Atom (u, w) with rate r(x) = r0 + r1 x jumps by m u at rate w r(x):
    // M' = m alpha - kappa M + w m u (r0 + r1 M).
    let (m, a, alpha, u, w, r0, r1) = (2.0, 1.0, 0.2, 0.25, 1.0, 0.5, 0.4);
    let params = LimitParams::new(m, 1.0)
        .with_branching(a, 0.3, vec![])
        .with_immigration(
            StateRate::Constant(alpha),
            vec![Atom::new(u, w).unwrap()],
            JumpRate::Affine {
                intercept: r0,
                slope: r1,
            },
        );
    let z0 = 1.0;
    let c = m * alpha + w * m * u * r0;
    let kappa: f64 = a - w * m * u * r1;
    let exact = z0 * (-kappa).exp() + c / kappa * (1.0 - (-kappa).exp());
    let est = mean_estimate(&values_at(&run(&params, z0, 1e-3, 10_000, 6), 1.0).unwrap());
    assert!(est.z_score(&Estimate::exact(exact)) < 3.0, "{est:?} vs {exact}");
}

use cbp_core::families::{
    binomial_family, negbin_family, poisson_family, verify_immigration_growth, verify_moment_assumption, GammaRule,
    Immigration, SupMode,
};
use cbp_core::{ControlFamily, LatticeLaw};

const KS: [u64; 3] = [100, 1000, 10_000];

fn linear() -> GammaRule<f64> {
    GammaRule::Linear { c: 1.0 }
}

#[test]
fn poisson_instance_first_moment_deviation_is_one_over_log_k() {
    let fam = poisson_family(1.0, linear(), Immigration::None).unwrap();
    let report = verify_moment_assumption(&fam, 1.0, |k| k as f64, &KS, 10_000).unwrap();
    for row in &report.rows {
        let expected = 1.0 / (row.k as f64).ln();
        assert!(
            (row.dev1.value - expected).abs() < 1e-10,
            "k = {}: {:?}",
            row.k,
            row.dev1
        );
        assert_eq!(row.dev1.grid.argmax_j, 1);
        assert_eq!(row.dev1.mode, SupMode::GridAndLimit);
        // The j -> inf root has r = (1 - 2/k)/m, so the second-moment sup is its deviation.
        let r = 1.0 - 2.0 / row.k as f64;
        assert!((row.dev2.value - (1.0 - r * r)).abs() < 1e-12, "{:?}", row.dev2);
    }
    let expected = [0.2171, 0.1448, 0.1086];
    for (row, e) in report.rows.iter().zip(expected) {
        assert!((row.dev1.value - e).abs() < 5e-5);
    }
}

#[test]
fn worked_instances_have_shrinking_deviations() {
    for m in [0.5, 1.0, 2.0] {
        let families = [
            poisson_family(m, linear(), Immigration::None).unwrap(),
            binomial_family(m, linear(), Immigration::None).unwrap(),
            negbin_family(m, linear(), Immigration::None).unwrap(),
        ];
        for fam in &families {
            let report = verify_moment_assumption(fam, m, |k| k as f64, &KS, 10_000).unwrap();
            assert!(
                report.dev1_monotone && report.dev2_monotone,
                "{}: {report:?}",
                fam.name()
            );
            let last = report.rows.last().unwrap();
            assert!(
                last.dev1.value < 0.25 && last.dev2.value < 0.25,
                "{}: {last:?}",
                fam.name()
            );
        }
    }
}

#[test]
fn binomial_and_negbin_deviations_match_hand_formulas() {
    // Binomial: gamma_k [1 - m N p] + gamma0 = -1/(j k) at gamma_k = k, largest at j = 1.
    let fam = binomial_family(1.0, linear(), Immigration::None).unwrap();
    let report = verify_moment_assumption(&fam, 1.0, |k| k as f64, &[100], 1000).unwrap();
    assert!((report.rows[0].dev1.value - 0.01).abs() < 1e-12);
    // Geometric: k (1 - e^{-(j+k)^-2}), largest at j = 1.
    let fam = negbin_family(1.0, linear(), Immigration::None).unwrap();
    let report = verify_moment_assumption(&fam, 1.0, |k| k as f64, &[100], 1000).unwrap();
    let expected = 100.0 * -(-1.0 / 101.0_f64.powi(2)).exp_m1();
    assert!((report.rows[0].dev1.value - expected).abs() < 1e-12);
    let expected = 2.0 * -(-2.0 / 101.0_f64.powi(2)).exp_m1();
    assert!((report.rows[0].dev2.value - expected).abs() < 1e-12);
}

#[test]
fn root_convolutions_match_superposition_laws() {
    let (k, j) = (100u64, 10u64);
    let m = 1.3;
    let poisson = poisson_family(m, linear(), Immigration::None).unwrap();
    let root = poisson.root_law(k, j).unwrap();
    let LatticeLaw::Poisson(r) = root else {
        panic!("{root:?}")
    };
    let conv = root.convolve_power(j, 10_000).unwrap();
    let (target, _) = LatticeLaw::poisson(r * j as f64).unwrap().materialize(10_000);
    let conv = conv.pmf().unwrap();
    for (i, t) in target.iter().enumerate() {
        assert!((conv.get(i).copied().unwrap_or(0.0) - t).abs() < 1e-10, "{i}");
    }

    let binomial = binomial_family(m, linear(), Immigration::None).unwrap();
    let root = binomial.root_law(k, j).unwrap();
    let LatticeLaw::Binomial { n, p } = root else {
        panic!("{root:?}")
    };
    assert_eq!(n, 1 + j * k * (k + 1));
    let conv = root.convolve_power(j, 10_000).unwrap();
    let (target, _) = LatticeLaw::binomial(n * j, p).unwrap().materialize(10_000);
    let conv = conv.pmf().unwrap();
    for (i, t) in target.iter().enumerate() {
        assert!(
            (conv.get(i).copied().unwrap_or(0.0) - t).abs() < 1e-10,
            "{i}: {:?} vs {t}",
            conv.get(i)
        );
    }
}

#[test]
fn root_power_equals_aggregate_pgf() {
    let s_grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    for (k, j) in [(10u64, 1u64), (100, 10), (1000, 37)] {
        let poisson = poisson_family(1.0, linear(), Immigration::None).unwrap();
        let binomial = binomial_family(1.0, linear(), Immigration::None).unwrap();
        let negbin = negbin_family(1.0, linear(), Immigration::None).unwrap();
        for s in &s_grid {
            let jf = j as f64;
            let kf = k as f64;
            let r = (1.0 - 2.0 / kf + 1.0 / (jf * kf * kf.ln())) * jf;
            let agg = (r * (s - 1.0)).exp();
            assert!((poisson.root_law(k, j).unwrap().pgf_eval(*s).unwrap().powi(j as i32) - agg).abs() < 1e-10);

            let n = (1 + j * k * (k + 1)) as f64 * jf;
            let p = 1.0 / (jf * kf * kf);
            let agg = (n * (p * (s - 1.0)).ln_1p()).exp();
            assert!((binomial.root_law(k, j).unwrap().pgf_eval(*s).unwrap().powi(j as i32) - agg).abs() < 1e-10);

            let e = (1.0 / ((j + k) as f64).powi(2)).exp();
            let p = e / (1.0 + e);
            let agg = (p / (1.0 - (1.0 - p) * s)).powf(jf);
            assert!((negbin.root_law(k, j).unwrap().pgf_eval(*s).unwrap().powi(j as i32) - agg).abs() < 1e-10);
        }
    }
}

#[test]
fn default_immigration_gives_constant_growth_constant() {
    for gamma in [GammaRule::Linear { c: 2.0_f64 }, GammaRule::Power { c: 1.0, p: 0.5 }] {
        let fam = negbin_family(1.0, gamma, Immigration::poisson(0.8)).unwrap();
        let k = 400;
        let report = verify_immigration_growth(&fam, k, gamma.gamma_k(k), &[0.0, 1.0, 5.0]).unwrap();
        assert!((report.k1_hat - 0.8).abs() < 1e-12);
        assert_eq!(report.argmax_x, 0.0);
    }
}

#[test]
fn growth_constant_matches_hand_evaluation() {
    // h^(j) = Poisson(j k / gamma_k): (gamma_k / k) h'(1) = floor(k x).
    let (k, gamma_k) = (10u64, 20.0);
    let fam = ControlFamily::new(
        "hand",
        |_, _| Ok(LatticeLaw::Dirac(1)),
        move |k, j| LatticeLaw::poisson(j as f64 * k as f64 / gamma_k),
    );
    let report = verify_immigration_growth(&fam, k, gamma_k, &[0.25, 1.0, 2.05]).unwrap();
    // floor(2.5)/1.25 = 1.6, 10/2 = 5, floor(20.5)/3.05 = 6.557...
    assert!((report.k1_hat - 20.0 / 3.05).abs() < 1e-12);
    assert_eq!(report.argmax_x, 2.05);
}

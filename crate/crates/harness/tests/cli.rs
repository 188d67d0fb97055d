use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cbp_harness::report::Cell;
use cbp_harness::{run_distribution_comparison, Experiment, HarnessError};

fn cbp(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbp"))
        .args(args)
        .arg("--quiet")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
seed = 99

[model]
m = 1.0
gamma = { rule = "linear", c = 1.0 }
offspring = { kind = "binary", b = 0.8 }
family = { kind = "negbin" }
immigration = { kind = "poisson", beta = 0.5 }

[limit]
b = 0.8

[study]
k_list = [20, 40]
lambda_grid = [0.0, 1.0]
t_grid = [0.5, 1.0]
paths = 300
z0_rule = "poisson"
j_max = 50
"#;

#[test]
fn empty_k_list_is_a_validation_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.toml", &SMALL.replace("[20, 40]", "[]"));
    let out = dir.path().join("out.csv");
    let result = cbp(&["converge"], &config, &out);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("bad.toml:15") && stderr.contains("k_list"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn random_studies_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.toml", SMALL);
    for command in ["simulate", "compare"] {
        let outputs: Vec<Vec<u8>> = ["1", "3"]
            .iter()
            .map(|threads| {
                let out = dir.path().join(format!("{command}_{threads}.csv"));
                let r = cbp(&[command, "--threads", threads], &config, &out);
                assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
                std::fs::read(out).unwrap()
            })
            .collect();
        assert!(outputs[0].len() > 100);
        assert_eq!(outputs[0], outputs[1], "{command}");
    }
}

#[test]
fn seed_flag_changes_paths_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.toml", SMALL);
    let read = |seed: &str| {
        let out = dir.path().join(format!("sim_{seed}.csv"));
        assert!(cbp(&["simulate", "--seed", seed], &config, &out).status.success());
        let text = std::fs::read_to_string(out).unwrap();
        let hashes: Vec<String> = text
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().to_string())
            .collect();
        (text, hashes)
    };
    let (a, ha) = read("1");
    let (b, hb) = read("2");
    assert_ne!(a, b);
    assert!(ha.iter().all(|h| *h == ha[0] && h.len() == 16));
    assert_ne!(ha[0], hb[0]);
}

#[test]
fn invariant_violations_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // Root mean 0.9 with m = 1: gamma_k (1 - m f'(1)) grows linearly in k.
    let drifting = r#"
[model]
gamma = { rule = "linear", c = 1.0 }
offspring = { kind = "binary", b = 0.8 }
family = { kind = "fixed", root = { law = "poisson", rate = 0.9 } }

[limit]
b = 0.8
rho0 = 0.0
sigma0 = 0.81

[study]
k_list = [20, 40]
j_max = 5
"#;
    let config = write_config(dir.path(), "drift.toml", drifting);
    let out = dir.path().join("check.csv");
    let r = cbp(&["check"], &config, &out);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
    // The table is still written for inspection.
    assert!(std::fs::read_to_string(&out).unwrap().contains("moment_dev1"));

    // With zero tolerance, rounding in G_k at large k registers as a violation.
    let strict = SMALL.replace("[20, 40]", "[1000]") + "\n[monotone]\ntol = 0.0\n";
    let config = write_config(dir.path(), "strict.toml", &strict);
    let r = cbp(&["monotone"], &config, &dir.path().join("m.csv"));
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn population_overflow_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[model]
m = 4.0
gamma = { rule = "linear", c = 1.0 }
offspring = { kind = "explicit", pmf = [0.0, 0.0, 0.0, 0.0, 1.0] }

[study]
k_list = [10]
t_grid = [3.0]
paths = 1
"#;
    let config = write_config(dir.path(), "boom.toml", text);
    let out = dir.path().join("boom.csv");
    let r = cbp(&["simulate"], &config, &out);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(!out.exists());
}

#[test]
fn missing_config_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let r = cbp(&["converge"], &dir.path().join("nope.toml"), &dir.path().join("o.csv"));
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("nope.toml"));
}

fn floats(table: &cbp_harness::Table, column: &str) -> Vec<f64> {
    let c = table.column(column).unwrap();
    table
        .rows
        .iter()
        .map(|r| match r[c] {
            Cell::Float(v) => v,
            _ => f64::NAN,
        })
        .collect()
}

#[test]
fn identity_model_matches_frozen_limit_exactly() {
    let text = r#"
[model]
gamma = { rule = "linear", c = 1.0 }
offspring = { kind = "identity" }

[study]
k_list = [10, 100]
lambda_grid = [0.0, 0.5, 3.0]
t_grid = [1.0, 2.0]
paths = 20
z0 = 1.5
"#;
    let exp = Experiment::parse(text, "identity", None).unwrap();
    let table = run_distribution_comparison(&exp).unwrap();
    assert_eq!(table.rows.len(), 2 * 2 * 5);
    for (d, z) in floats(&table, "difference").iter().zip(floats(&table, "z_score")) {
        assert_eq!((*d, z), (0.0, 0.0));
    }
    let lambda = floats(&table, "lambda");
    let limit = floats(&table, "limit_estimate");
    for (l, v) in lambda.iter().zip(&limit) {
        if !l.is_nan() {
            assert!((v - (-l * 1.5).exp()).abs() < 1e-15);
        }
    }
}

#[test]
fn limits_without_closed_form_are_simulated() {
    let text = SMALL.replace("[limit]\nb = 0.8\n", "[limit]\nb = 0.8\nnu_atoms = [[0.5, 0.4]]\n");
    let exp = Experiment::parse(&text, "atoms", None).unwrap();
    let table = run_distribution_comparison(&exp).unwrap();
    let se = floats(&table, "limit_std_error");
    let lambda = floats(&table, "lambda");
    // Every cell but the lambda = 0 Laplace transform carries Monte-Carlo error.
    for (s, l) in se.iter().zip(&lambda) {
        assert_eq!(*s == 0.0, *l == 0.0, "{se:?}");
    }
}

#[test]
fn library_errors_carry_exit_codes() {
    let e = HarnessError::Core(cbp_core::Error::Numeric("x".into()));
    assert_eq!(e.exit_code(), 2);
    let e = HarnessError::Core(cbp_core::Error::InvariantViolation("x".into()));
    assert_eq!(e.exit_code(), 3);
    let e = Experiment::parse("nonsense", "x", None).unwrap_err();
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn generator_gap_decreases_in_k_for_each_lambda() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/generator_convergence.toml");
    let exp = Experiment::load(&path, None).unwrap();
    let table = cbp_harness::run_convergence_study(&exp).unwrap();
    let (d, l, v) = (
        table.column("diagnostic").unwrap(),
        table.column("lambda").unwrap(),
        table.column("value").unwrap(),
    );
    for lambda in &exp.config.study.lambda_grid {
        let gaps: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r[d] == Cell::from("generator_gap") && r[l] == Cell::Float(*lambda))
            .map(|r| match r[v] {
                Cell::Float(x) => x,
                _ => f64::NAN,
            })
            .collect();
        assert_eq!(gaps.len(), exp.config.study.k_list.len());
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "lambda = {lambda}: {gaps:?}");
    }
}

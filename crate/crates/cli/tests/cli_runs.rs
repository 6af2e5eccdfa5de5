use std::f64::consts::PI;
use std::process::Command;

use capax_cli::{
    run, CompareResult, ConvergeResult, Envelope, Mode, NewtonianResult, Options, RunConfig,
};
use capax_core::eigen::EigenReport;

fn cfg(text: &str) -> RunConfig {
    RunConfig::parse(text).unwrap()
}

fn artifact(arts: &[capax_cli::Artifact], suffix: &str) -> String {
    arts.iter().find(|a| a.name.ends_with(suffix)).unwrap().contents.clone()
}

fn prolate_area(a: f64, b: f64) -> f64 {
    let e = (1.0 - b * b / (a * a)).sqrt();
    2.0 * PI * b * b * (1.0 + a / (b * e) * e.asin())
}

#[test]
fn newtonian_unit_sphere_json_round_trips() {
    let arts = run(&cfg("[inner]\nkind = \"sphere\"\nradius = 1.0"), &Options::new(Mode::Newtonian)).unwrap();
    let text = artifact(&arts, ".json");
    let env: Envelope<NewtonianResult> = serde_json::from_str(&text).unwrap();
    assert!((env.result.capacity - 4.0 * PI).abs() < 1e-10);
    assert_eq!(serde_json::to_string_pretty(&env).unwrap() + "\n", text);
    let again: Envelope<NewtonianResult> = serde_json::from_str(&serde_json::to_string(&env).unwrap()).unwrap();
    assert_eq!(again, env);
}

#[test]
fn compare_condenser_has_closed_form_column() {
    let arts = run(&cfg("epsilons = [0.02, 0.05, 0.1]\nquad_order = 8"), &Options::new(Mode::Compare)).unwrap();
    let csv = artifact(&arts, ".csv");
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256: "));
    assert_eq!(lines.next().unwrap(), "epsilon,direct,series,analytic,rel_series_direct,rel_direct_analytic,rel_series_analytic,agree");
    let env: Envelope<CompareResult> = serde_json::from_str(&artifact(&arts, ".json")).unwrap();
    for row in &env.result.rows {
        let e = row.epsilon;
        assert!((row.analytic.unwrap() - 4.0 * PI * e / (1.0 - e)).abs() < 1e-14);
        assert!(row.rel_direct_analytic.unwrap() < 1e-10);
        assert!(row.agree);
    }
    assert!(csv.contains(&env.config_hash));
}

#[test]
fn compare_without_closed_form_leaves_cells_empty() {
    let text = "epsilons = [0.05]\nquad_order = 8\n[inner]\nkind = \"ellipsoid\"\naxes = [2.0, 1.0, 1.0]";
    let arts = run(&cfg(text), &Options::new(Mode::Compare)).unwrap();
    let row = artifact(&arts, ".csv").lines().nth(2).unwrap().to_string();
    let cells: Vec<&str> = row.split(',').collect();
    assert_eq!(cells[3], "");
    assert_eq!(cells[5], "");
}

#[test]
fn eigen_report_round_trips() {
    let text = "epsilons = [0.01, 0.05]\nquad_order = 8\n[eigen]\nscenario = \"ball_first\"";
    let arts = run(&cfg(text), &Options::new(Mode::Eigen)).unwrap();
    let env: Envelope<EigenReport> = serde_json::from_str(&artifact(&arts, ".json")).unwrap();
    assert_eq!(env.result.multiplicity, 1);
    assert!((env.result.blocks[0].mu[0] - 2.0 * PI * PI).abs() < 1e-8);
    let oracle = env.result.oracle.as_ref().unwrap();
    assert!(oracle[0].relative_error < 0.03 && oracle[1].relative_error < 0.1);
    let back: Envelope<EigenReport> = serde_json::from_str(&serde_json::to_string(&env).unwrap()).unwrap();
    assert_eq!(back, env);
}

#[test]
fn custom_eigen_space_with_bad_gram_is_a_config_error() {
    let text = "epsilons = [0.01]\n[eigen]\nscenario = \"custom\"\neigenvalue = 1.0\ngram = [[1.0]]\n\
                [[eigen.basis]]\nterms = [{ beta = [1, 0, 0], coeff = 1.0 }]\n\
                [[eigen.basis]]\nterms = [{ beta = [0, 1, 0], coeff = 1.0 }]";
    let err = run(&cfg(text), &Options::new(Mode::Eigen)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("eigen.gram"));
}

#[test]
fn converge_icosphere_newtonian_order() {
    let text = "[converge]\nquantity = \"newtonian\"\nlevels = [1, 2, 3]\ndeclared_order = 2.0\n\
                reference = 12.566370614359172\ngeometry = { kind = \"icosphere\", level = 1 }";
    let arts = run(&cfg(text), &Options::new(Mode::Converge)).unwrap();
    let env: Envelope<ConvergeResult> = serde_json::from_str(&artifact(&arts, ".json")).unwrap();
    let rows = &env.result.rows;
    assert_eq!(rows.len(), 3);
    assert!(rows[2].observed_order.unwrap() >= 1.5, "{:?}", rows[2].observed_order);
    assert!(rows[2].nodes > rows[1].nodes);
    // Extrapolation improves on the finest raw value.
    let r = rows[2].richardson.unwrap();
    assert!((r - 4.0 * PI).abs() < (rows[2].value - 4.0 * PI).abs());
}

#[test]
fn converge_ellipsoid_area_decreases() {
    let reference = prolate_area(2.0, 1.0);
    let text = format!(
        "[converge]\nquantity = \"area\"\nlevels = [2, 4, 8]\nreference = {reference:e}\n\
         geometry = {{ kind = \"ellipsoid\", axes = [2.0, 1.0, 1.0] }}"
    );
    let arts = run(&cfg(&text), &Options::new(Mode::Converge)).unwrap();
    let env: Envelope<ConvergeResult> = serde_json::from_str(&artifact(&arts, ".json")).unwrap();
    let errs: Vec<f64> = env.result.rows.iter().map(|r| r.relative_error.unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn converge_needs_two_levels() {
    let text = "[converge]\nquantity = \"area\"\nlevels = [4]";
    let err = run(&cfg(text), &Options::new(Mode::Converge)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("at least 2"), "{err}");
}

#[test]
fn oversized_hole_is_rejected() {
    let err = run(&cfg("epsilons = [1.5]\nquad_order = 6"), &Options::new(Mode::Direct)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn taylor_degree_cap_enforced() {
    let err = RunConfig::parse("[u_a]\nterms = [{ beta = [13, 0, 0], coeff = 1.0 }]")
        .unwrap()
        .validate(Mode::Series)
        .unwrap_err();
    assert!(err.to_string().starts_with("u_a:"), "{err}");
}

#[test]
fn repeated_runs_are_identical() {
    let text = "epsilons = [0.05, 0.1]\nquad_order = 6\nk_max = 4\n[u_a]\nconstant = 1.0\nterms = [{ beta = [1, 0, 0], coeff = 1.0 }]";
    let a = run(&cfg(text), &Options::new(Mode::Compare)).unwrap();
    let b = run(&cfg(text), &Options { jobs: 3, ..Options::new(Mode::Compare) }).unwrap();
    assert_eq!(a, b);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "epsilon = [0.1]\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_capax"))
        .args(["direct", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));

    let missing = Command::new(env!("CARGO_BIN_EXE_capax"))
        .args(["newtonian", "--config", "/nonexistent/capax.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let good = dir.path().join("good.toml");
    std::fs::write(&good, "[inner]\nkind = \"sphere\"\norder = 6\n").unwrap();
    let ok = Command::new(env!("CARGO_BIN_EXE_capax"))
        .args(["newtonian", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(dir.path().join("o/newtonian.json").exists());
}

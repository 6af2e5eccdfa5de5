use capax_core::direct::ExteriorSolver;
use capax_core::eigen::*;
use capax_core::geometry::make_sphere;
use capax_core::layer_ops::AssemblyOptions;
use capax_core::TaylorPoly;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::PI;

fn hole() -> ExteriorSolver {
    ExteriorSolver::from_surface(make_sphere(1.0, 8).unwrap(), AssemblyOptions::default()).unwrap()
}

fn orthogonal(seed: [f64; 9]) -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &seed).qr().q()
}

fn recombine(basis: &[AdmissibleFunction], q: &DMatrix<f64>) -> Vec<AdmissibleFunction> {
    (0..q.ncols())
        .map(|j| {
            let t = (0..basis.len()).fold(TaylorPoly::zero(3), |acc, i| &acc + &basis[i].taylor.scaled(q[(i, j)]));
            AdmissibleFunction::new(t, format!("r{j}"))
        })
        .collect()
}

fn mixed_basis() -> Vec<AdmissibleFunction> {
    let x = |j| TaylorPoly::coordinate(3, j);
    vec![
        AdmissibleFunction::new(&TaylorPoly::constant(3, 1.5) + &(&x(0) * &x(0)), "a"),
        AdmissibleFunction::new(&x(1) + &(&x(0) * &x(2)), "b"),
        AdmissibleFunction::new(&(&x(0) * &x(1)) + &(&(&x(2) * &x(2)) * &x(0)), "c"),
    ]
}

#[test]
fn simple_prediction_tracks_the_shell() {
    let h = hole();
    let pred = predict_simple(PI * PI, &ball_first_mode(5), &h, &[0.01, 0.02, 0.05]).unwrap();
    let mut last = f64::INFINITY;
    for e in [0.05, 0.02, 0.01] {
        let exact = shell_eigenvalue_oracle(e, 0, 1).unwrap() - PI * PI;
        let err = (pred.shift(e) - exact).abs() / exact;
        assert!(err < last, "error must shrink with eps");
        last = err;
    }
    assert!(last < 0.03);
}

#[test]
fn doubly_degenerate_with_distinct_orders() {
    let x = |j| TaylorPoly::coordinate(3, j);
    let space = EigenSpace {
        eigenvalue: 5.0,
        basis: vec![AdmissibleFunction::new(TaylorPoly::constant(3, 1.0), "u"), AdmissibleFunction::new(&x(0) * &x(1), "v")],
        gram: None,
    };
    let pred = predict_multiple(&space, &hole(), &[0.01]).unwrap();
    let exps: Vec<usize> = pred.branches.iter().map(|b| b.exponent).collect();
    assert_eq!(exps, vec![5, 1]);
    assert!(pred.branches.iter().all(|b| b.prefactor > 0.0));
}

#[test]
fn report_round_trips_through_json() {
    let modes = ball_l1_modes(3).unwrap();
    let space = EigenSpace { eigenvalue: 20.19, basis: modes, gram: None };
    let report = predict_multiple(&space, &hole(), &[0.01, 0.05]).unwrap().report(None);
    let text = serde_json::to_string(&report).unwrap();
    let back: EigenReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decomposition_and_spectrum_survive_recombination(seed in prop::array::uniform9(-1.0f64..1.0)) {
        let q = orthogonal(seed);
        prop_assume!(q.determinant().abs() > 0.5);
        let h = hole();
        let base = EigenSpace { eigenvalue: 7.0, basis: mixed_basis(), gram: None };
        let mixed = EigenSpace { eigenvalue: 7.0, basis: recombine(&base.basis, &q), gram: Some(q.transpose() * &q) };
        let a = predict_multiple(&base, &h, &[]).unwrap();
        let b = predict_multiple(&mixed, &h, &[]).unwrap();
        let shape = |p: &EigenPrediction| p.blocks.iter().map(|b| (b.order, b.dim)).collect::<Vec<_>>();
        prop_assert_eq!(shape(&a), shape(&b));
        for (x, y) in a.branches.iter().zip(&b.branches) {
            prop_assert!((x.prefactor - y.prefactor).abs() <= 1e-8 * x.prefactor.abs().max(1.0));
        }
    }
}

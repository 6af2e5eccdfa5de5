use std::sync::Arc;

use capax_core::geometry::{make_ellipsoid, make_icosphere, make_sphere, Surface};
use capax_core::layer_ops::{
    double_layer_trace, eval_double_layer, normal_derivative_trace, AssemblyOptions, Side, SurfaceOperators,
};
use nalgebra::DVector;

fn ops(s: Surface) -> SurfaceOperators {
    SurfaceOperators::new(Arc::new(s), AssemblyOptions::default()).unwrap()
}

// max |W[1] - 1/2| and |int W* phi - int phi / 2| for phi = 1 + x_1
fn gauss_errors(o: &SurfaceOperators) -> (f64, f64) {
    let one = DVector::from_element(o.len(), 1.0);
    let w1 = (o.w.apply(&one).add_scalar(-0.5)).amax();
    let phi = o.sample(|x| 1.0 + x[0]);
    let lhs = o.surface.integrate(o.ws.apply(&phi).as_slice());
    let rhs = 0.5 * o.surface.integrate(phi.as_slice());
    (w1, (lhs - rhs).abs())
}

#[test]
fn gauss_identities_improve_under_refinement_on_ellipsoid() {
    let coarse = gauss_errors(&ops(make_ellipsoid(2.0, 1.0, 1.0, 8).unwrap()));
    let fine = gauss_errors(&ops(make_ellipsoid(2.0, 1.0, 1.0, 12).unwrap()));
    assert!(coarse.0 < 1e-4 && fine.0 < coarse.0, "{coarse:?} {fine:?}");
    assert!(fine.1 < 1e-6 && fine.1 < coarse.1 || fine.1 < 1e-12, "{coarse:?} {fine:?}");
}

// || u/2 - W u + V d_nu u || for the harmonic u = x1 x2 + x3
fn green_residual(o: &SurfaceOperators) -> f64 {
    let u = o.sample(|p| p[0] * p[1] + p[2]);
    let du = o.sample_normal(|p| [p[1], p[0], 1.0]);
    let r = u.scale(0.5) - o.w.apply(&u) + o.v.apply(&du);
    o.surface.integrate(r.component_mul(&r).as_slice()).sqrt()
}

#[test]
fn mesh_identities_exact_and_green_residual_shrinks() {
    let coarse = ops(make_icosphere(1.0, 2).unwrap());
    let fine = ops(make_icosphere(1.0, 3).unwrap());
    // W[1] and the adjoint identity are exact by construction on meshes
    for o in [&coarse, &fine] {
        let (w1, adj) = gauss_errors(o);
        assert!(w1 < 1e-12 && adj < 1e-12, "{w1:e} {adj:e}");
    }
    let (rc, rf) = (green_residual(&coarse), green_residual(&fine));
    assert!(rf < 0.5 * rc, "{rc:e} {rf:e}");
}

#[test]
fn green_residual_shrinks_on_spectral_grids() {
    let rc = green_residual(&ops(make_ellipsoid(2.0, 1.0, 1.0, 8).unwrap()));
    let rf = green_residual(&ops(make_ellipsoid(2.0, 1.0, 1.0, 12).unwrap()));
    assert!(rf < 0.1 * rc && rf < 1e-4, "{rc:e} {rf:e}");
}

#[test]
fn jump_relations_hold_at_matrix_level() {
    let o = ops(make_ellipsoid(1.5, 1.0, 0.8, 8).unwrap());
    let psi = o.sample(|x| x[0] * x[1] + x[2].sin());
    let jump_w = double_layer_trace(Side::Interior, &o.w, &psi) - double_layer_trace(Side::Exterior, &o.w, &psi);
    let jump_v = normal_derivative_trace(Side::Exterior, &o.ws, &psi) - normal_derivative_trace(Side::Interior, &o.ws, &psi);
    for i in 0..o.len() {
        assert!((jump_w[i] - psi[i]).abs() <= 4.0 * f64::EPSILON * psi[i].abs().max(1.0));
        assert!((jump_v[i] - psi[i]).abs() <= 4.0 * f64::EPSILON * psi[i].abs().max(1.0));
    }
}

#[test]
fn double_layer_of_one_is_an_indicator() {
    let s = make_sphere(1.0, 12).unwrap();
    let one = vec![1.0; s.len()];
    let v = eval_double_layer(&s, &one, &[[0.1, 0.2, -0.3], [2.0, 1.0, 0.5]]).unwrap();
    assert!((v[0] - 1.0).abs() < 1e-9 && v[1].abs() < 1e-9, "{v:?}");
    assert!(eval_double_layer(&s, &one, &[[1.0, 0.0, 0.0]]).is_err());
}

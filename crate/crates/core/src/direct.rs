//! Fixed-epsilon solves: the coupled density systems for the perforated
//! domain, the rescaled potential, direct capacities, and exterior problems
//! for the hole alone (Newtonian capacity, exterior energies).
//!
//! Densities on the hole live on the *unscaled* surface; every `eps`
//! dependence is explicit in the cross-interaction blocks. The hole's
//! operators are therefore assembled once and shared across `eps` and with
//! the series module.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CapaxError, Result};
use crate::exec::Exec;
use crate::geometry::{check_hole, dot, scale_pt, sub, Point, Surface};
use crate::kernels::d3;
use crate::layer_ops::{
    double_layer_trace, eval_double_layer, eval_single_layer, hessian_s_times, normal_derivative_trace,
    AssemblyOptions, Density, Side, SurfaceOperators,
};
use crate::linalg::Factored;
use crate::poly::TaylorPoly;

/// `[A 1; w^T 0]`: a Lagrange column of ones and a row of quadrature weights.
pub fn bordered(a: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        m[(i, n)] = 1.0;
        m[(n, i)] = weights[i];
    }
    m
}

fn shifted(a: &DMatrix<f64>, diag: f64, sign: f64) -> DMatrix<f64> {
    let mut m = a * sign;
    for i in 0..m.nrows() {
        m[(i, i)] += diag;
    }
    m
}

/// Evaluates a Taylor polynomial at `eps * t` for every node `t`.
pub fn sample_scaled(p: &TaylorPoly, nodes: &[Point], eps: f64) -> DVector<f64> {
    DVector::from_iterator(nodes.len(), nodes.iter().map(|t| p.eval(&scale_pt(*t, eps))))
}

fn grad_at(p: &[TaylorPoly], x: &[f64]) -> Point {
    [p[0].eval(x), p[1].eval(x), p[2].eval(x)]
}

fn check_dim(p: &TaylorPoly) -> Result<()> {
    if p.dim() != 3 {
        return Err(CapaxError::InvalidArgument(format!("expected a polynomial in 3 variables, got {}", p.dim())));
    }
    Ok(())
}

/// Solution of the `rho` system at one `eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityPair {
    pub epsilon: f64,
    pub rho_o: Density,
    pub rho_i: Density,
    /// `int rho_i dsigma` (equal to 1 up to rounding).
    pub constraint_value: f64,
    /// Lagrange multiplier of the bordered system; small for a converged discretization.
    pub multiplier: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaPair {
    pub epsilon: f64,
    pub theta_o: Density,
    pub theta_i: Density,
    pub multiplier: f64,
}

/// Outer domain and hole with their boundary operators.
#[derive(Debug)]
pub struct HoleProblem {
    pub outer: Arc<SurfaceOperators>,
    pub inner: Arc<SurfaceOperators>,
    pub exec: Exec,
}

impl HoleProblem {
    pub fn new(outer: Surface, inner: Surface, opts: AssemblyOptions) -> Result<Self> {
        let outer = Arc::new(SurfaceOperators::new(Arc::new(outer), opts)?);
        let inner = Arc::new(SurfaceOperators::new(Arc::new(inner), opts)?);
        Ok(HoleProblem { outer, inner, exec: opts.exec })
    }

    pub fn from_operators(outer: Arc<SurfaceOperators>, inner: Arc<SurfaceOperators>, exec: Exec) -> Self {
        HoleProblem { outer, inner, exec }
    }

    pub fn outer_surface(&self) -> &Surface {
        &self.outer.surface
    }

    pub fn inner_surface(&self) -> &Surface {
        &self.inner.surface
    }

    pub fn check_epsilon(&self, eps: f64) -> Result<()> {
        check_hole(self.inner_surface(), eps, self.outer_surface())
    }

    /// Cross block `rows x cols` with entries `f(row, col)`, rows filled in parallel.
    fn cross(&self, rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64 + Sync + Send) -> DMatrix<f64> {
        let mut buf = vec![0.0; rows * cols];
        self.exec.fill_chunks(&mut buf, cols, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(i, j);
            }
        });
        DMatrix::from_row_slice(rows, cols, &buf)
    }

    /// Assembles and solves the bordered `rho` system.
    pub fn solve_rho(&self, eps: f64) -> Result<DensityPair> {
        self.check_epsilon(eps)?;
        let (so, si) = (self.outer_surface(), self.inner_surface());
        let (no, ni) = (so.len(), si.len());
        let mut a = DMatrix::zeros(no + ni + 1, no + ni + 1);
        a.view_mut((0, 0), (no, no)).copy_from(&shifted(&self.outer.ws.matrix, 0.5, 1.0));
        a.view_mut((0, no), (no, ni)).copy_from(&self.cross(no, ni, |x, s| {
            si.weights()[s] * dot(so.normals()[x], d3::grad_s(sub(so.nodes()[x], scale_pt(si.nodes()[s], eps))))
        }));
        let e2 = eps * eps;
        a.view_mut((no, 0), (ni, no)).copy_from(&self.cross(ni, no, |t, y| {
            -e2 * so.weights()[y] * dot(si.normals()[t], d3::grad_s(sub(scale_pt(si.nodes()[t], eps), so.nodes()[y])))
        }));
        a.view_mut((no, no), (ni + 1, ni + 1))
            .copy_from(&bordered(&shifted(&self.inner.ws.matrix, 0.5, -1.0), si.weights()));
        let mut b = DVector::zeros(no + ni + 1);
        b[no + ni] = 1.0;
        let x = Factored::new(a, "rho system")?.solve(&b);
        let rho_o = DVector::from_iterator(no, x.rows(0, no).iter().cloned());
        let rho_i = DVector::from_iterator(ni, x.rows(no, ni).iter().cloned());
        let constraint_value = si.integrate(rho_i.as_slice());
        Ok(DensityPair {
            epsilon: eps,
            rho_o: Density::new(rho_o),
            rho_i: Density::new(rho_i),
            constraint_value,
            multiplier: x[no + ni],
        })
    }

    /// `int u^a(eps s) rho_i(s) dsigma_s`.
    pub fn coupling(&self, eps: f64, u_a: &TaylorPoly, rho: &DensityPair) -> f64 {
        let si = self.inner_surface();
        let ua = sample_scaled(u_a, si.nodes(), eps);
        si.integrate(ua.component_mul(&rho.rho_i.values).as_slice())
    }

    /// Assembles and solves the bordered `theta` system for boundary data `u_a(eps t)`.
    pub fn solve_theta(&self, eps: f64, u_a: &TaylorPoly, rho: &DensityPair) -> Result<ThetaPair> {
        check_dim(u_a)?;
        self.check_epsilon(eps)?;
        let (so, si) = (self.outer_surface(), self.inner_surface());
        let (no, ni) = (so.len(), si.len());
        let e2 = eps * eps;
        let mut a = DMatrix::zeros(no + ni + 1, no + ni + 1);
        a.view_mut((0, 0), (no, no)).copy_from(&shifted(&self.outer.w.matrix, 0.5, 1.0));
        a.view_mut((0, no), (no, ni)).copy_from(&self.cross(no, ni, |x, s| {
            e2 * si.weights()[s] * dot(si.normals()[s], d3::grad_s(sub(so.nodes()[x], scale_pt(si.nodes()[s], eps))))
        }));
        a.view_mut((no, 0), (ni, no)).copy_from(&self.cross(ni, no, |t, y| {
            -so.weights()[y] * dot(so.normals()[y], d3::grad_s(sub(scale_pt(si.nodes()[t], eps), so.nodes()[y])))
        }));
        a.view_mut((no, no), (ni + 1, ni + 1))
            .copy_from(&bordered(&shifted(&self.inner.w.matrix, 0.5, -1.0), si.weights()));
        let g = self.coupling(eps, u_a, rho);
        let ua = sample_scaled(u_a, si.nodes(), eps);
        let mut b = DVector::zeros(no + ni + 1);
        for t in 0..ni {
            b[no + t] = ua[t] - g;
        }
        let x = Factored::new(a, "theta system")?.solve(&b);
        let theta_o = DVector::from_iterator(no, x.rows(0, no).iter().cloned());
        let theta_i = DVector::from_iterator(ni, x.rows(no, ni).iter().cloned());
        Ok(ThetaPair {
            epsilon: eps,
            theta_o: Density::new(theta_o),
            theta_i: Density { values: theta_i, mean_zero: true },
            multiplier: x[no + ni],
        })
    }

    pub fn rescaled_potential(&self, eps: f64, u_a: &TaylorPoly) -> Result<RescaledPotential> {
        let rho = self.solve_rho(eps)?;
        let theta = self.solve_theta(eps, u_a, &rho)?;
        let (so, si) = (self.outer_surface(), self.inner_surface());
        let scaled: Vec<Point> = si.nodes().iter().map(|t| scale_pt(*t, eps)).collect();

        // Outer layer potentials and their gradients at eps * t, by node quadrature.
        let mut vo = DVector::zeros(si.len());
        let mut dvo = DVector::zeros(si.len());
        let mut wo = DVector::zeros(si.len());
        let mut dwo = DVector::zeros(si.len());
        for (t, x) in scaled.iter().enumerate() {
            let nu_t = si.normals()[t];
            for y in 0..so.len() {
                let z = sub(*x, so.nodes()[y]);
                let wr = so.weights()[y] * rho.rho_o.values[y];
                let wt = so.weights()[y] * theta.theta_o.values[y];
                let nu_y = so.normals()[y];
                let gs = d3::grad_s(z);
                vo[t] += wr * d3::s(z);
                dvo[t] += wr * dot(nu_t, gs);
                wo[t] -= wt * dot(nu_y, gs);
                dwo[t] -= wt * dot(nu_t, hessian_s_times(z, nu_y));
            }
        }
        let vi = self.inner.v.apply(&rho.rho_i.values);
        let normalizer_field = &vo * eps + &vi;
        let normalizer = si.integrate(normalizer_field.as_slice()) / si.area();
        let coupling = self.coupling(eps, u_a, &rho);
        let ratio = coupling / normalizer;

        let wi_ext = double_layer_trace(Side::Exterior, &self.inner.w, &theta.theta_i.values);
        let boundary_inner = &wo - &wi_ext + &normalizer_field * ratio;
        // exterior-side normal derivative of u(eps t) in t
        let flux = &dwo * eps - self.inner.dtn(&wi_ext)
            + (&dvo * (eps * eps) + normal_derivative_trace(Side::Exterior, &self.inner.ws, &rho.rho_i.values)) * ratio;

        Ok(RescaledPotential {
            epsilon: eps,
            rho,
            theta,
            coupling,
            normalizer,
            boundary_inner,
            flux,
            outer: self.outer.surface.clone(),
            inner: self.inner.surface.clone(),
            outer_ops: self.outer.clone(),
        })
    }

    /// Generalized capacity computed from one direct solve at `eps`.
    pub fn capacity_direct(&self, eps: f64, u_a: &TaylorPoly, u_b: &TaylorPoly) -> Result<f64> {
        check_dim(u_b)?;
        let rp = self.rescaled_potential(eps, u_a)?;
        Ok(rp.capacity(u_a, u_b))
    }
}

/// `u^a_eps(eps t)` for `t` outside the hole, represented by the four densities.
#[derive(Debug, Clone)]
pub struct RescaledPotential {
    pub epsilon: f64,
    pub rho: DensityPair,
    pub theta: ThetaPair,
    /// `int u^a(eps s) rho_i dsigma`.
    pub coupling: f64,
    /// Mean over the hole boundary of `eps v[outer, rho_o](eps s) + v[hole, rho_i](s)`.
    pub normalizer: f64,
    /// Values on the hole boundary (exterior traces).
    pub boundary_inner: DVector<f64>,
    /// Exterior normal derivative on the hole boundary, in the rescaled variable.
    pub flux: DVector<f64>,
    outer: Arc<Surface>,
    inner: Arc<Surface>,
    outer_ops: Arc<SurfaceOperators>,
}

impl RescaledPotential {
    /// Evaluates at rescaled points `t`; targets must keep one mesh width from both boundaries.
    pub fn eval(&self, targets: &[Point]) -> Result<Vec<f64>> {
        let eps = self.epsilon;
        let scaled: Vec<Point> = targets.iter().map(|t| scale_pt(*t, eps)).collect();
        let wo = eval_double_layer(&self.outer, self.theta.theta_o.values.as_slice(), &scaled)?;
        let vo = eval_single_layer(&self.outer, self.rho.rho_o.values.as_slice(), &scaled)?;
        let wi = eval_double_layer(&self.inner, self.theta.theta_i.values.as_slice(), targets)?;
        let vi = eval_single_layer(&self.inner, self.rho.rho_i.values.as_slice(), targets)?;
        let ratio = self.coupling / self.normalizer;
        Ok((0..targets.len()).map(|k| wo[k] - wi[k] + ratio * (eps * vo[k] + vi[k])).collect())
    }

    /// Values at the outer boundary nodes (interior traces); zero up to discretization error.
    pub fn boundary_outer(&self) -> Result<DVector<f64>> {
        let eps = self.epsilon;
        let so = &self.outer;
        let rescaled: Vec<Point> = so.nodes().iter().map(|x| scale_pt(*x, 1.0 / eps)).collect();
        let wo = double_layer_trace(Side::Interior, &self.outer_ops.w, &self.theta.theta_o.values);
        let vo = self.outer_ops.v.apply(&self.rho.rho_o.values);
        let wi = eval_double_layer(&self.inner, self.theta.theta_i.values.as_slice(), &rescaled)?;
        let vi = eval_single_layer(&self.inner, self.rho.rho_i.values.as_slice(), &rescaled)?;
        let ratio = self.coupling / self.normalizer;
        Ok(DVector::from_iterator(
            so.len(),
            (0..so.len()).map(|k| wo[k] - wi[k] + ratio * (eps * vo[k] + vi[k])),
        ))
    }

    /// `-eps int nu . grad(u^a_eps(eps t)) u^b(eps t) dsigma_t + eps^3 int_hole grad u^a . grad u^b (eps t) dt`.
    pub fn capacity(&self, u_a: &TaylorPoly, u_b: &TaylorPoly) -> f64 {
        let eps = self.epsilon;
        let ub = sample_scaled(u_b, self.inner.nodes(), eps);
        let boundary = -eps * self.inner.integrate(self.flux.component_mul(&ub).as_slice());
        boundary + eps.powi(3) * volume_gradient_pairing(&self.inner, u_a, u_b, eps)
    }
}

/// `int_hole grad p(eps t) . grad q(eps t) dt` (gradients in the unscaled variable).
pub fn volume_gradient_pairing(surface: &Surface, p: &TaylorPoly, q: &TaylorPoly, eps: f64) -> f64 {
    let gp = p.gradient();
    let gq = q.gradient();
    if gp.iter().all(|g| g.is_zero()) || gq.iter().all(|g| g.is_zero()) {
        return 0.0;
    }
    surface
        .volume_rule()
        .iter()
        .map(|(t, w)| {
            let x = scale_pt(*t, eps);
            w * dot(grad_at(&gp, &x), grad_at(&gq, &x))
        })
        .sum()
}

/// Exterior problems for the hole alone.
#[derive(Debug)]
pub struct ExteriorSolver {
    pub ops: Arc<SurfaceOperators>,
    /// Equilibrium density: `(1/2 - W*) rho = const`, `int rho = 1`.
    pub rho0: DVector<f64>,
    /// Mean of `V rho0` over the boundary.
    pub r0: f64,
    mu_lu: Factored,
}

/// Exterior Dirichlet solution `u = w^-[mu] + c v^-[rho0]`.
#[derive(Debug, Clone)]
pub struct ExteriorSolution {
    pub mu: DVector<f64>,
    pub c: f64,
    /// `lim |t| u(t)`.
    pub limit: f64,
    /// Exterior normal derivative on the boundary.
    pub normal_derivative: DVector<f64>,
    surface: Arc<Surface>,
    rho0: DVector<f64>,
}

impl ExteriorSolution {
    pub fn eval(&self, targets: &[Point]) -> Result<Vec<f64>> {
        let w = eval_double_layer(&self.surface, self.mu.as_slice(), targets)?;
        let v = eval_single_layer(&self.surface, self.rho0.as_slice(), targets)?;
        Ok(w.iter().zip(&v).map(|(a, b)| a + self.c * b).collect())
    }
}

impl ExteriorSolver {
    pub fn new(ops: Arc<SurfaceOperators>) -> Result<Self> {
        let s = ops.surface.clone();
        let n = s.len();
        let a = bordered(&shifted(&ops.ws.matrix, 0.5, -1.0), s.weights());
        let mut b = DVector::zeros(n + 1);
        b[n] = 1.0;
        let x = Factored::new(a, "equilibrium density system")?.solve(&b);
        let rho0 = DVector::from_iterator(n, x.rows(0, n).iter().cloned());
        let r0 = s.integrate(ops.v.apply(&rho0).as_slice()) / s.area();
        let mu_lu = Factored::new(bordered(&shifted(&ops.w.matrix, -0.5, 1.0), s.weights()), "exterior double layer system")?;
        Ok(ExteriorSolver { ops, rho0, r0, mu_lu })
    }

    pub fn from_surface(surface: Surface, opts: AssemblyOptions) -> Result<Self> {
        Self::new(Arc::new(SurfaceOperators::new(Arc::new(surface), opts)?))
    }

    pub fn surface(&self) -> &Surface {
        &self.ops.surface
    }

    /// `-1 / r0`.
    pub fn newtonian_capacity(&self) -> f64 {
        -1.0 / self.r0
    }

    /// Decaying exterior harmonic function with boundary values `g` at the nodes.
    pub fn solve(&self, g: &DVector<f64>) -> ExteriorSolution {
        let s = self.surface();
        let n = s.len();
        let c = s.integrate(g.component_mul(&self.rho0).as_slice()) / self.r0;
        let mut b = DVector::zeros(n + 1);
        for i in 0..n {
            b[i] = g[i] - c * self.r0;
        }
        let x = self.mu_lu.solve(&b);
        ExteriorSolution {
            mu: DVector::from_iterator(n, x.rows(0, n).iter().cloned()),
            c,
            limit: c * d3::s([1.0, 0.0, 0.0]) * s.integrate(self.rho0.as_slice()),
            normal_derivative: self.ops.dtn(g),
            surface: self.ops.surface.clone(),
            rho0: self.rho0.clone(),
        }
    }

    /// Exterior-plus-interior energy pairing of two homogeneous polynomials.
    pub fn frak_c(&self, p_a: &TaylorPoly, p_b: &TaylorPoly) -> Result<f64> {
        check_dim(p_a)?;
        check_dim(p_b)?;
        p_a.homogeneous_degree()?;
        p_b.homogeneous_degree()?;
        let s = self.surface();
        let ga = self.ops.sample(|x| p_a.eval(&x));
        let gb = self.ops.sample(|x| p_b.eval(&x));
        let exterior = -s.integrate(self.ops.dtn(&ga).component_mul(&gb).as_slice());
        Ok(exterior + volume_gradient_pairing(s, p_a, p_b, 1.0))
    }

    /// `int_hole grad p . grad q` by the boundary reduction `int p_b dp_a/dnu`; valid when `p_a` is harmonic.
    pub fn interior_energy_by_boundary(&self, p_a: &TaylorPoly, p_b: &TaylorPoly) -> f64 {
        let grad = p_a.gradient();
        let dn = self.ops.sample_normal(|x| grad_at(&grad, &x));
        let gb = self.ops.sample(|x| p_b.eval(&x));
        self.surface().integrate(dn.component_mul(&gb).as_slice())
    }
}

fn default_problem(outer: &Surface, inner: &Surface) -> Result<HoleProblem> {
    HoleProblem::new(outer.clone(), inner.clone(), AssemblyOptions::default())
}

pub fn solve_rho(outer: &Surface, inner: &Surface, eps: f64) -> Result<DensityPair> {
    default_problem(outer, inner)?.solve_rho(eps)
}

pub fn solve_theta(outer: &Surface, inner: &Surface, eps: f64, u_a: &TaylorPoly, rho: &DensityPair) -> Result<ThetaPair> {
    default_problem(outer, inner)?.solve_theta(eps, u_a, rho)
}

pub fn rescaled_potential(outer: &Surface, inner: &Surface, eps: f64, u_a: &TaylorPoly) -> Result<RescaledPotential> {
    default_problem(outer, inner)?.rescaled_potential(eps, u_a)
}

pub fn capacity_direct(outer: &Surface, inner: &Surface, eps: f64, u_a: &TaylorPoly, u_b: &TaylorPoly) -> Result<f64> {
    default_problem(outer, inner)?.capacity_direct(eps, u_a, u_b)
}

pub fn newtonian_capacity(inner: &Surface) -> Result<f64> {
    Ok(ExteriorSolver::from_surface(inner.clone(), AssemblyOptions::default())?.newtonian_capacity())
}

pub fn exterior_dirichlet(inner: &Surface, g: &DVector<f64>) -> Result<ExteriorSolution> {
    Ok(ExteriorSolver::from_surface(inner.clone(), AssemblyOptions::default())?.solve(g))
}

pub fn frak_c(inner: &Surface, p_a: &TaylorPoly, p_b: &TaylorPoly) -> Result<f64> {
    ExteriorSolver::from_surface(inner.clone(), AssemblyOptions::default())?.frak_c(p_a, p_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ellipsoid, make_sphere};
    use std::f64::consts::PI;

    fn one() -> TaylorPoly {
        TaylorPoly::constant(3, 1.0)
    }

    fn balls(n: usize) -> HoleProblem {
        HoleProblem::new(make_sphere(1.0, n).unwrap(), make_sphere(1.0, n).unwrap(), AssemblyOptions::default()).unwrap()
    }

    #[test]
    fn newtonian_capacity_of_sphere_and_prolate() {
        let c = newtonian_capacity(&make_sphere(1.0, 8).unwrap()).unwrap();
        assert!((c - 4.0 * PI).abs() < 1e-12 * 4.0 * PI, "{c}");
        let c = newtonian_capacity(&make_ellipsoid(2.0, 1.0, 1.0, 16).unwrap()).unwrap();
        let exact = 4.0 * PI * 3f64.sqrt() / (2.0 + 3f64.sqrt()).ln();
        assert!((c - exact).abs() < 1e-8 * exact, "{c} {exact}");
    }

    #[test]
    fn concentric_condenser() {
        let p = balls(8);
        for eps in [0.05, 0.1, 0.3] {
            let cap = p.capacity_direct(eps, &one(), &one()).unwrap();
            let exact = 4.0 * PI * eps / (1.0 - eps);
            assert!((cap - exact).abs() < 1e-8 * exact, "eps={eps}: {cap} vs {exact}");
        }
    }

    #[test]
    fn condenser_potential_and_traces() {
        let p = balls(8);
        let rp = p.rescaled_potential(0.1, &one()).unwrap();
        let u = rp.eval(&[[5.0, 0.0, 0.0], [0.0, 3.0, 4.0]]).unwrap();
        for v in u {
            // off-surface values use plain node quadrature
            assert!((v - 1.0 / 9.0).abs() < 1e-6, "{v}");
        }
        assert!(rp.boundary_inner.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(rp.boundary_outer().unwrap().amax() < 1e-10);
        assert!((rp.rho.constraint_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_hole() {
        let p = balls(4);
        assert!(p.solve_rho(1.0).is_err());
    }

    #[test]
    fn exterior_dirichlet_on_sphere() {
        let s = make_sphere(1.0, 16).unwrap();
        let ext = ExteriorSolver::from_surface(s, AssemblyOptions::default()).unwrap();
        let g = ext.ops.sample(|_| 1.0);
        let sol = ext.solve(&g);
        let u2 = sol.eval(&[[2.0, 0.0, 0.0]]).unwrap()[0];
        assert!((u2 - 0.5).abs() < 1e-8, "{u2} c={} L={}", sol.c, sol.limit);
        assert!((sol.limit - 1.0).abs() < 1e-12);
        assert!(sol.normal_derivative.iter().all(|v| (v + 1.0).abs() < 1e-12));
        let g = ext.ops.sample(|x| x[0]);
        let sol = ext.solve(&g);
        let u2 = sol.eval(&[[2.0, 0.0, 0.0]]).unwrap()[0];
        assert!((u2 - 0.25).abs() < 1e-8, "{u2}");
        assert!(sol.limit.abs() < 1e-12);
    }

    #[test]
    fn frak_c_on_sphere() {
        let ext = ExteriorSolver::from_surface(make_sphere(1.0, 8).unwrap(), AssemblyOptions::default()).unwrap();
        let x1 = TaylorPoly::coordinate(3, 0);
        assert!((ext.frak_c(&one(), &one()).unwrap() - 4.0 * PI).abs() < 1e-11);
        assert!((ext.frak_c(&x1, &x1).unwrap() - 4.0 * PI).abs() < 1e-11);
        assert!(ext.frak_c(&one(), &x1).unwrap().abs() < 1e-12);
        let mixed = &one() + &x1;
        assert!(ext.frak_c(&mixed, &one()).is_err());
    }
}

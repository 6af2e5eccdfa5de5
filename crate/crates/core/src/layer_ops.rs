//! Single and double layer potentials and their boundary operators.
//!
//! Conventions (d = 3, `S(z) = -1 / (4 pi |z|)`):
//!
//! ```text
//! v[phi](x)  =  int phi(y) S(x - y) dsigma_y
//! w[psi](x)  = -int psi(y) nu(y) . grad S(x - y) dsigma_y
//! W*[phi](x) =  int phi(y) nu(x) . grad S(x - y) dsigma_y
//! w^+/- = +/- psi / 2 + W psi,     nu . grad v^+/- = -/+ phi / 2 + W* phi
//! ```
//!
//! `+` is the interior side. On the unit sphere `V[1] = -1` and `W[1] = W*[1] = 1/2`.
//!
//! Parametric surfaces are discretized with a spectral Nystrom scheme: the
//! density is interpolated by spherical harmonics of the grid degree and each
//! row integrates the kernel on a grid rotated so the target sits at its pole,
//! where the `sin(theta)` Jacobian cancels the weak singularity. Meshes use
//! centroid collocation with piecewise-constant densities.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CapaxError, Result};
use crate::exec::Exec;
use crate::geometry::{cross, dot, norm, scale_pt, sub, Patches, Point, SpectralPatch, Surface, TriangleMesh};
use crate::kernels::d3;
use crate::linalg::Factored;
use crate::quadrature::{gauss_legendre_interval, harmonic_count, real_harmonics, triangle_rule_6};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    /// `V`
    SingleLayer,
    /// `W`
    DoubleLayer,
    /// `W*`
    AdjointDoubleLayer,
}

impl OperatorKind {
    fn code(self) -> u32 {
        match self {
            OperatorKind::SingleLayer => 0,
            OperatorKind::DoubleLayer => 1,
            OperatorKind::AdjointDoubleLayer => 2,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        match c {
            0 => Some(OperatorKind::SingleLayer),
            1 => Some(OperatorKind::DoubleLayer),
            2 => Some(OperatorKind::AdjointDoubleLayer),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
}

/// Dense boundary operator acting on node values.
#[derive(Debug, Clone)]
pub struct BoundaryOperator {
    pub kind: OperatorKind,
    pub matrix: DMatrix<f64>,
    pub surface: Arc<Surface>,
}

impl BoundaryOperator {
    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.matrix * f
    }
}

/// Node values of a density on a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub values: DVector<f64>,
    /// Whether the density is constrained to have zero integral.
    pub mean_zero: bool,
}

impl Density {
    pub fn new(values: DVector<f64>) -> Self {
        Density { values, mean_zero: false }
    }

    pub fn constant(surface: &Surface, c: f64) -> Self {
        Density::new(DVector::from_element(surface.len(), c))
    }

    /// Density with zero integral; checks `|sum w f| <= 1e-10 sum w |f|`.
    pub fn mean_zero(surface: &Surface, values: DVector<f64>) -> Result<Self> {
        let d = Density { values, mean_zero: true };
        if !d.satisfies_mean_zero(surface) {
            return Err(CapaxError::InvalidArgument(format!(
                "density integral {:e} is not zero",
                d.integral(surface)
            )));
        }
        Ok(d)
    }

    pub fn integral(&self, surface: &Surface) -> f64 {
        surface.integrate(self.values.as_slice())
    }

    pub fn satisfies_mean_zero(&self, surface: &Surface) -> bool {
        let abs: f64 = surface.weights().iter().zip(self.values.iter()).map(|(w, v)| w * v.abs()).sum();
        self.integral(surface).abs() <= 1e-10 * abs.max(f64::MIN_POSITIVE)
    }
}

/// Polar-grid sizes for the spectral singular rule. `None` picks defaults from the grid degree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyOptions {
    pub exec: Exec,
    pub polar_theta: Option<usize>,
    pub polar_phi: Option<usize>,
}

impl AssemblyOptions {
    pub fn with_exec(exec: Exec) -> Self {
        AssemblyOptions { exec, ..Default::default() }
    }
}

pub fn assemble(kind: OperatorKind, surface: &Arc<Surface>, exec: Exec) -> Result<BoundaryOperator> {
    let mut ops = assemble_kinds(&[kind], surface, AssemblyOptions::with_exec(exec))?;
    Ok(ops.pop().unwrap())
}

/// Assembles several kinds at once, sharing kernel and harmonic evaluations.
pub fn assemble_kinds(
    kinds: &[OperatorKind],
    surface: &Arc<Surface>,
    opts: AssemblyOptions,
) -> Result<Vec<BoundaryOperator>> {
    let mats = match surface.patches() {
        Patches::Spectral(p) => spectral_assembly(kinds, surface, p, opts),
        Patches::Mesh(m) => mesh_assembly(kinds, surface, m, opts.exec),
    };
    Ok(kinds
        .iter()
        .zip(mats)
        .map(|(&kind, matrix)| BoundaryOperator { kind, matrix, surface: surface.clone() })
        .collect())
}

/// Orthonormal frame `(e1, e2)` perpendicular to the unit vector `p`.
fn frame(p: Point) -> (Point, Point) {
    let a = if p[0].abs() <= p[1].abs() && p[0].abs() <= p[2].abs() {
        [1.0, 0.0, 0.0]
    } else if p[1].abs() <= p[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = cross(p, a);
    let e1 = scale_pt(e1, 1.0 / norm(e1));
    (e1, cross(p, e1))
}

#[inline]
fn kernel(kind: OperatorKind, x: Point, nu_x: Point, y: Point, nu_y: Point) -> f64 {
    let z = sub(x, y);
    match kind {
        OperatorKind::SingleLayer => d3::s(z),
        OperatorKind::DoubleLayer => -dot(nu_y, d3::grad_s(z)),
        OperatorKind::AdjointDoubleLayer => dot(nu_x, d3::grad_s(z)),
    }
}

fn spectral_assembly(
    kinds: &[OperatorKind],
    surface: &Surface,
    patch: &SpectralPatch,
    opts: AssemblyOptions,
) -> Vec<DMatrix<f64>> {
    let n = patch.degree;
    let nn = surface.len();
    let l = harmonic_count(n);
    let nt = opts.polar_theta.unwrap_or(n + 8);
    let np = opts.polar_phi.unwrap_or(2 * n + 4);
    let (th, wth) = gauss_legendre_interval(nt, 0.0, std::f64::consts::PI);
    let dphi = 2.0 * std::f64::consts::PI / np as f64;
    let mut local = Vec::with_capacity(nt * np);
    for (t, wt) in th.iter().zip(&wth) {
        let (s, c) = t.sin_cos();
        for k in 0..np {
            let (sp, cp) = (dphi * k as f64).sin_cos();
            local.push(([s * cp, s * sp, c], wt * s * dphi));
        }
    }

    let nk = kinds.len();
    let mut g = vec![0.0; nn * nk * l];
    opts.exec.fill_chunks(&mut g, nk * l, |i, row| {
        let p = patch.params[i];
        let x = surface.nodes()[i];
        let nu_x = surface.normals()[i];
        let (e1, e2) = frame(p);
        let mut y = vec![0.0; l];
        for &(c, w) in &local {
            let q = [
                c[0] * e1[0] + c[1] * e2[0] + c[2] * p[0],
                c[0] * e1[1] + c[1] * e2[1] + c[2] * p[1],
                c[0] * e1[2] + c[1] * e2[2] + c[2] * p[2],
            ];
            let (yq, nu_y, jac) = patch.frame(q);
            real_harmonics(n, q, &mut y);
            for (k, &kind) in kinds.iter().enumerate() {
                let kv = kernel(kind, x, nu_x, yq, nu_y) * jac * w;
                let out = &mut row[k * l..(k + 1) * l];
                for (o, yv) in out.iter_mut().zip(&y) {
                    *o += kv * yv;
                }
            }
        }
    });

    // Interpolation: density -> harmonic coefficients is Y^T diag(w), so A = G Y^T diag(w).
    let mut ynodes = DMatrix::zeros(l, nn);
    let mut y = vec![0.0; l];
    for (j, q) in patch.params.iter().enumerate() {
        real_harmonics(n, *q, &mut y);
        for (a, v) in y.iter().enumerate() {
            ynodes[(a, j)] = v * patch.param_weights[j];
        }
    }
    (0..nk)
        .map(|k| {
            let gk = DMatrix::from_fn(nn, l, |i, a| g[i * nk * l + k * l + a]);
            gk * &ynodes
        })
        .collect()
}

/// `int_T 1 / |x - y| dA_y` for `x` in the plane of the flat triangle `T` and inside it.
pub fn flat_triangle_inverse_distance(x: Point, tri: [Point; 3]) -> f64 {
    let mut total = 0.0;
    for k in 0..3 {
        let a = tri[k];
        let b = tri[(k + 1) % 3];
        let e = sub(b, a);
        let len = norm(e);
        let u = scale_pt(e, 1.0 / len);
        let s1 = dot(sub(a, x), u);
        let s2 = dot(sub(b, x), u);
        let foot = sub(sub(a, x), scale_pt(u, s1));
        let h = norm(foot);
        if h < 1e-300 {
            continue;
        }
        let r1 = norm(sub(a, x));
        let r2 = norm(sub(b, x));
        total += h * ((r2 + s2) / (r1 + s1)).ln();
    }
    total
}

fn mesh_assembly(kinds: &[OperatorKind], surface: &Surface, mesh: &TriangleMesh, exec: Exec) -> Vec<DMatrix<f64>> {
    let n = surface.len();
    let rule = triangle_rule_6();
    let tri_size: Vec<f64> = (0..n)
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            norm(sub(a, b)).max(norm(sub(b, c))).max(norm(sub(c, a)))
        })
        .collect();
    let need_w = kinds.iter().any(|k| *k != OperatorKind::SingleLayer);
    let mut v = if kinds.contains(&OperatorKind::SingleLayer) { Some(vec![0.0; n * n]) } else { None };
    let mut w = if need_w { Some(vec![0.0; n * n]) } else { None };

    let row = |kind: OperatorKind, i: usize, out: &mut [f64]| {
        let x = surface.nodes()[i];
        for j in 0..n {
            if i == j {
                continue;
            }
            let nu_y = surface.normals()[j];
            let c = surface.nodes()[j];
            let val = if norm(sub(x, c)) < 3.0 * tri_size[j] {
                let [p0, p1, p2] = mesh.corners(j);
                rule.iter()
                    .map(|(b, wq)| {
                        let y = [
                            b[0] * p0[0] + b[1] * p1[0] + b[2] * p2[0],
                            b[0] * p0[1] + b[1] * p1[1] + b[2] * p2[1],
                            b[0] * p0[2] + b[1] * p1[2] + b[2] * p2[2],
                        ];
                        wq * kernel(kind, x, [0.0; 3], y, nu_y)
                    })
                    .sum::<f64>()
                    * surface.weights()[j]
            } else {
                kernel(kind, x, [0.0; 3], c, nu_y) * surface.weights()[j]
            };
            out[j] = val;
        }
        out[i] = match kind {
            OperatorKind::SingleLayer => -d3::INV_4PI * flat_triangle_inverse_distance(x, mesh.corners(i)),
            // row-sum identity W[1] = 1/2
            _ => 0.5 - out.iter().sum::<f64>(),
        };
    };
    if let Some(v) = v.as_mut() {
        exec.fill_chunks(v, n, |i, out| row(OperatorKind::SingleLayer, i, out));
    }
    if let Some(w) = w.as_mut() {
        exec.fill_chunks(w, n, |i, out| row(OperatorKind::DoubleLayer, i, out));
    }
    let wts = surface.weights();
    kinds
        .iter()
        .map(|k| match k {
            OperatorKind::SingleLayer => DMatrix::from_row_slice(n, n, v.as_ref().unwrap()),
            OperatorKind::DoubleLayer => DMatrix::from_row_slice(n, n, w.as_ref().unwrap()),
            // weighted adjoint: W*_ij = W_ji w_j / w_i
            OperatorKind::AdjointDoubleLayer => {
                let w = w.as_ref().unwrap();
                DMatrix::from_fn(n, n, |i, j| w[j * n + i] * wts[j] / wts[i])
            }
        })
        .collect()
}

fn check_targets(surface: &Surface, targets: &[Point]) -> Result<()> {
    let h = surface.mesh_width();
    for t in targets {
        let d = surface.distance_to_nodes(*t);
        if d < h {
            return Err(CapaxError::NearField { distance: d, h });
        }
    }
    Ok(())
}

fn eval_with<F>(surface: &Surface, density: &[f64], targets: &[Point], f: F) -> Result<Vec<f64>>
where
    F: Fn(Point, Point, Point) -> f64,
{
    check_targets(surface, targets)?;
    Ok(targets
        .iter()
        .map(|&x| {
            (0..surface.len())
                .map(|j| surface.weights()[j] * density[j] * f(x, surface.nodes()[j], surface.normals()[j]))
                .sum()
        })
        .collect())
}

/// `v[phi]` at off-surface targets.
pub fn eval_single_layer(surface: &Surface, density: &[f64], targets: &[Point]) -> Result<Vec<f64>> {
    eval_with(surface, density, targets, |x, y, _| d3::s(sub(x, y)))
}

/// `w[psi]` at off-surface targets.
pub fn eval_double_layer(surface: &Surface, density: &[f64], targets: &[Point]) -> Result<Vec<f64>> {
    eval_with(surface, density, targets, |x, y, nu| -dot(nu, d3::grad_s(sub(x, y))))
}

fn eval_vec_with<F>(surface: &Surface, density: &[f64], targets: &[Point], f: F) -> Result<Vec<Point>>
where
    F: Fn(Point, Point, Point) -> Point,
{
    check_targets(surface, targets)?;
    Ok(targets
        .iter()
        .map(|&x| {
            let mut g = [0.0; 3];
            for j in 0..surface.len() {
                let c = surface.weights()[j] * density[j];
                let k = f(x, surface.nodes()[j], surface.normals()[j]);
                for m in 0..3 {
                    g[m] += c * k[m];
                }
            }
            g
        })
        .collect())
}

/// Hessian of `S` applied to `v`: `(|z|^2 v - 3 z (z.v)) / (4 pi |z|^5)`.
#[inline]
pub fn hessian_s_times(z: Point, v: Point) -> Point {
    let r2 = dot(z, z);
    let r = r2.sqrt();
    let c = d3::INV_4PI / (r2 * r2 * r);
    let zv = dot(z, v);
    [
        c * (r2 * v[0] - 3.0 * z[0] * zv),
        c * (r2 * v[1] - 3.0 * z[1] * zv),
        c * (r2 * v[2] - 3.0 * z[2] * zv),
    ]
}

pub fn eval_grad_single_layer(surface: &Surface, density: &[f64], targets: &[Point]) -> Result<Vec<Point>> {
    eval_vec_with(surface, density, targets, |x, y, _| d3::grad_s(sub(x, y)))
}

pub fn eval_grad_double_layer(surface: &Surface, density: &[f64], targets: &[Point]) -> Result<Vec<Point>> {
    eval_vec_with(surface, density, targets, |x, y, nu| scale_pt(hessian_s_times(sub(x, y), nu), -1.0))
}

/// `nu . grad v^+/-[phi]` on the surface: `(-/+ 1/2) phi + W* phi`.
pub fn normal_derivative_trace(side: Side, adjoint: &BoundaryOperator, density: &DVector<f64>) -> DVector<f64> {
    assert_eq!(adjoint.kind, OperatorKind::AdjointDoubleLayer);
    let half = match side {
        Side::Interior => -0.5,
        Side::Exterior => 0.5,
    };
    adjoint.apply(density) + density * half
}

/// `w^+/-[psi]` on the surface: `(+/- 1/2) psi + W psi`.
pub fn double_layer_trace(side: Side, double: &BoundaryOperator, density: &DVector<f64>) -> DVector<f64> {
    assert_eq!(double.kind, OperatorKind::DoubleLayer);
    let half = match side {
        Side::Interior => 0.5,
        Side::Exterior => -0.5,
    };
    double.apply(density) + density * half
}

const DUMP_MAGIC: &[u8; 4] = b"CPXM";

/// Writes a 16-byte header (magic, kind as u32, N as u64) then the matrix row-major, all little-endian.
pub fn write_matrix(op: &BoundaryOperator, path: impl AsRef<Path>) -> Result<()> {
    let n = op.matrix.nrows();
    let mut buf = Vec::with_capacity(16 + 8 * n * n);
    buf.extend_from_slice(DUMP_MAGIC);
    buf.extend_from_slice(&op.kind.code().to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        for j in 0..n {
            buf.extend_from_slice(&op.matrix[(i, j)].to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<(OperatorKind, DMatrix<f64>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| CapaxError::InvalidArgument(format!("matrix dump: {m}"));
    if bytes.len() < 16 || &bytes[0..4] != DUMP_MAGIC {
        return Err(bad("bad header"));
    }
    let kind = OperatorKind::from_code(u32::from_le_bytes(bytes[4..8].try_into().unwrap()))
        .ok_or_else(|| bad("unknown operator kind"))?;
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() != 16 + 8 * n * n {
        return Err(bad("length does not match header"));
    }
    let vals: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((kind, DMatrix::from_row_slice(n, n, &vals)))
}

/// `V`, `W`, `W*` on one surface plus a factorization of `V` for the
/// exterior Dirichlet-to-Neumann map.
#[derive(Debug)]
pub struct SurfaceOperators {
    pub surface: Arc<Surface>,
    pub v: BoundaryOperator,
    pub w: BoundaryOperator,
    pub ws: BoundaryOperator,
    v_solver: SingleLayerSolver,
}

/// Solver for the first-kind equation `V phi = g`.
///
/// On spectral grids the nodal `V` has rank `(n + 1)^2` (half the node count),
/// so the equation is solved for the harmonic coefficients of `phi`:
/// `(P V Y) c = P g`, `phi = Y c`, with `P` the discrete harmonic transform
/// and `Y` the synthesis matrix.
#[derive(Debug)]
enum SingleLayerSolver {
    Nodal(Factored),
    Spectral { analysis: DMatrix<f64>, synthesis: DMatrix<f64>, lu: Factored },
}

impl SingleLayerSolver {
    fn new(surface: &Surface, v: &DMatrix<f64>) -> Result<Self> {
        match surface.patches() {
            Patches::Mesh(_) => Ok(SingleLayerSolver::Nodal(Factored::new(v.clone(), "single layer operator")?)),
            Patches::Spectral(p) => {
                let (analysis, synthesis) = harmonic_transform(p);
                let vhat = &analysis * v * &synthesis;
                let lu = Factored::new(vhat, "single layer operator (harmonic coefficients)")?;
                Ok(SingleLayerSolver::Spectral { analysis, synthesis, lu })
            }
        }
    }

    fn solve(&self, g: &DVector<f64>) -> DVector<f64> {
        match self {
            SingleLayerSolver::Nodal(lu) => lu.solve(g),
            SingleLayerSolver::Spectral { analysis, synthesis, lu } => synthesis * lu.solve(&(analysis * g)),
        }
    }
}

/// `(P, Y)`: `P = Y^T diag(w)` maps node values to harmonic coefficients
/// (exact for band-limited data), `Y` evaluates harmonics at the nodes.
pub fn harmonic_transform(patch: &SpectralPatch) -> (DMatrix<f64>, DMatrix<f64>) {
    let l = harmonic_count(patch.degree);
    let nn = patch.params.len();
    let mut synthesis = DMatrix::zeros(nn, l);
    let mut y = vec![0.0; l];
    for (j, q) in patch.params.iter().enumerate() {
        real_harmonics(patch.degree, *q, &mut y);
        for (a, v) in y.iter().enumerate() {
            synthesis[(j, a)] = *v;
        }
    }
    let w = DVector::from_column_slice(&patch.param_weights);
    let mut analysis = synthesis.transpose();
    for j in 0..nn {
        analysis.column_mut(j).scale_mut(w[j]);
    }
    (analysis, synthesis)
}

impl SurfaceOperators {
    pub fn new(surface: Arc<Surface>, opts: AssemblyOptions) -> Result<Self> {
        use OperatorKind::*;
        let mut ops = assemble_kinds(&[SingleLayer, DoubleLayer, AdjointDoubleLayer], &surface, opts)?;
        let ws = ops.pop().unwrap();
        let w = ops.pop().unwrap();
        let v = ops.pop().unwrap();
        let v_solver = SingleLayerSolver::new(&surface, &v.matrix)?;
        Ok(SurfaceOperators { surface, v, w, ws, v_solver })
    }

    pub fn len(&self) -> usize {
        self.surface.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surface.is_empty()
    }

    /// Exterior normal derivative of the decaying harmonic function with Dirichlet data `g`:
    /// `(1/2 + W*) V^{-1} g`. Avoids the hypersingular operator.
    pub fn dtn(&self, g: &DVector<f64>) -> DVector<f64> {
        let phi = self.v_solver.solve(g);
        normal_derivative_trace(Side::Exterior, &self.ws, &phi)
    }

    /// Solves `V phi = g`.
    pub fn solve_single_layer(&self, g: &DVector<f64>) -> DVector<f64> {
        self.v_solver.solve(g)
    }

    /// Node values of `f`.
    pub fn sample(&self, f: impl Fn(Point) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.surface.nodes().iter().map(|x| f(*x)))
    }

    /// Node values of `nu . grad f`.
    pub fn sample_normal(&self, f: impl Fn(Point) -> Point) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.surface.nodes().iter().zip(self.surface.normals()).map(|(x, n)| dot(*n, f(*x))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_icosphere, make_sphere};
    use std::f64::consts::PI;

    fn ops(n: usize) -> SurfaceOperators {
        SurfaceOperators::new(Arc::new(make_sphere(1.0, n).unwrap()), AssemblyOptions::default()).unwrap()
    }

    #[test]
    fn sphere_identities() {
        let o = ops(10);
        let one = DVector::from_element(o.len(), 1.0);
        let w1 = o.w.apply(&one);
        let ws1 = o.ws.apply(&one);
        let v1 = o.v.apply(&one);
        for i in 0..o.len() {
            assert!((w1[i] - 0.5).abs() < 1e-10, "W[1] = {}", w1[i]);
            assert!((ws1[i] - 0.5).abs() < 1e-10, "W*[1] = {}", ws1[i]);
            assert!((v1[i] + 1.0).abs() < 1e-10, "V[1] = {}", v1[i]);
        }
        let int = normal_derivative_trace(Side::Interior, &o.ws, &one);
        let ext = normal_derivative_trace(Side::Exterior, &o.ws, &one);
        assert!(int.amax() < 1e-10);
        assert!((ext.add_scalar(-1.0)).amax() < 1e-10);
        // the jump is the identity at matrix level, up to rounding of the diagonal shift
        assert!((ext - int - one).amax() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn harmonic_eigenvalues_on_sphere() {
        // V Y_l = -Y_l / (2l + 1), W Y_l = Y_l / (2(2l + 1))
        let o = ops(10);
        let f = o.sample(|x| x[2]);
        let vf = o.v.apply(&f);
        let wf = o.w.apply(&f);
        assert!((vf + &f / 3.0).amax() < 1e-10);
        assert!((wf - &f / 6.0).amax() < 1e-10);
    }

    #[test]
    fn off_surface_potentials() {
        let s = make_sphere(1.0, 16).unwrap();
        let one = vec![1.0; s.len()];
        let out = eval_single_layer(&s, &one, &[[2.0, 0.0, 0.0], [0.0, 0.3, 0.4]]).unwrap();
        assert!((out[0] + 0.5).abs() < 1e-9);
        assert!((out[1] + 1.0).abs() < 1e-9);
        let dl = eval_double_layer(&s, &one, &[[0.1, 0.2, 0.3], [0.0, 0.0, 3.0]]).unwrap();
        assert!((dl[0] - 1.0).abs() < 1e-9 && dl[1].abs() < 1e-9);
        let far = eval_single_layer(&s, &one, &[[10.0, 0.0, 0.0]]).unwrap();
        assert!((out[0] / far[0] - 5.0).abs() < 1e-3);
        let g = eval_grad_single_layer(&s, &one, &[[0.0, 2.0, 0.0]]).unwrap();
        // point charge -1/|x|: gradient x/|x|^3
        assert!((g[0][1] - 0.25).abs() < 1e-4 && g[0][0].abs() < 1e-12);
        assert!(matches!(
            eval_single_layer(&s, &one, &[[1.0 + 1e-3, 0.0, 0.0]]),
            Err(CapaxError::NearField { .. })
        ));
    }

    #[test]
    fn grad_double_layer_matches_difference_quotient() {
        let s = make_sphere(1.0, 8).unwrap();
        let psi: Vec<f64> = s.nodes().iter().map(|x| x[0] + x[1] * x[2]).collect();
        let x = [0.2, -0.1, 0.3];
        let g = eval_grad_double_layer(&s, &psi, &[x]).unwrap()[0];
        let h = 1e-5;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (eval_double_layer(&s, &psi, &[xp]).unwrap()[0] - eval_double_layer(&s, &psi, &[xm]).unwrap()[0])
                / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn dtn_of_constant_on_sphere() {
        // exterior solution 1/r has normal derivative -1
        let o = ops(8);
        let d = o.dtn(&DVector::from_element(o.len(), 1.0));
        assert!((d.add_scalar(1.0)).amax() < 1e-10);
    }

    #[test]
    fn mesh_operators() {
        let s = Arc::new(make_icosphere(1.0, 2).unwrap());
        let o = SurfaceOperators::new(s.clone(), AssemblyOptions::default()).unwrap();
        let one = DVector::from_element(o.len(), 1.0);
        assert!((o.w.apply(&one).add_scalar(-0.5)).amax() < 1e-12);
        // weighted duality <W f, g> = <f, W* g>
        let f = o.sample(|x| x[0] + 2.0 * x[2]);
        let g = o.sample(|x| x[1] * x[1]);
        let wts = DVector::from_column_slice(s.weights());
        let lhs = o.w.apply(&f).component_mul(&wts).dot(&g);
        let rhs = f.component_mul(&wts).dot(&o.ws.apply(&g));
        assert!((lhs - rhs).abs() < 1e-12);
        let v1 = o.v.apply(&one);
        assert!((v1.mean() + 1.0).abs() < 0.05);
    }

    #[test]
    fn flat_triangle_self_integral() {
        // right isosceles triangle, point at centroid: compare with a fine midpoint sum
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let x = [1.0 / 3.0, 1.0 / 3.0, 0.0];
        let exact = flat_triangle_inverse_distance(x, tri);
        let m = 1500;
        let h = 1.0 / m as f64;
        let mut sum = 0.0;
        for i in 0..m {
            for j in 0..m - i {
                for (a, b) in [(i as f64 + 1.0 / 3.0, j as f64 + 1.0 / 3.0), (i as f64 + 2.0 / 3.0, j as f64 + 2.0 / 3.0)] {
                    if a + b > m as f64 {
                        continue;
                    }
                    let y = [a * h, b * h, 0.0];
                    sum += 0.5 * h * h / norm(sub(x, y));
                }
            }
        }
        assert!((exact - sum).abs() / exact < 2e-3, "{exact} {sum}");
        assert!(exact > 0.0 && exact < 2.0 * PI);
    }

    #[test]
    fn dump_round_trip() {
        let s = Arc::new(make_sphere(1.0, 3).unwrap());
        let op = assemble(OperatorKind::DoubleLayer, &s, Exec::Sequential).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.bin");
        write_matrix(&op, &p).unwrap();
        let (k, m) = read_matrix(&p).unwrap();
        assert_eq!(k, OperatorKind::DoubleLayer);
        assert_eq!(m, op.matrix);
        assert_eq!(std::fs::metadata(&p).unwrap().len() as usize, 16 + 8 * s.len() * s.len());
    }
}

//! Power series of the generalized capacity in the hole size.
//!
//! All density coefficients are stored divided by `k!` (they are the plain
//! Taylor coefficients in `eps`), so the recursions carry `1/beta!` weights
//! instead of binomials and nothing overflows. Each order is a triangular
//! solve against four factorizations built once:
//! `1/2 + W*` and `1/2 + W` on the outer boundary, and the bordered
//! `1/2 - W*`, `1/2 - W` on the hole boundary.
//!
//! Kernel expansions used throughout (`S` is even, so `D^b S(-y) = (-1)^|b| D^b S(y)`):
//!   S(x - eps s) = sum_b (-eps)^|b| s^b / b! D^b S(x)
//!   S(eps t - y) = sum_b (-eps)^|b| t^b / b! D^b S(y)

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::direct::{bordered, HoleProblem};
use crate::error::{CapaxError, Result};
use crate::exec::Exec;
use crate::geometry::{dot, Point, Surface};
use crate::kernels::{KernelCache, DEFAULT_MAX_ORDER};
use crate::layer_ops::{double_layer_trace, eval_double_layer, eval_single_layer, normal_derivative_trace, Side};
use crate::linalg::Factored;
use crate::poly::{MultiIndex, TaylorPoly};

pub const DEFAULT_K_MAX: usize = 8;

fn sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `D^b S`, `grad D^b S` and `nu . grad D^b S` at the outer nodes for `|b| <= order`.
struct KernelTable {
    betas: Vec<MultiIndex>,
    /// offsets[j] = first index of order j in `betas`
    offsets: Vec<usize>,
    value: Vec<Vec<f64>>,
    grad: Vec<Vec<Point>>,
    normal: Vec<Vec<f64>>,
}

impl KernelTable {
    fn new(outer: &Surface, order: usize, exec: Exec) -> Result<Self> {
        let cache = KernelCache::new(3, order + 1)?;
        cache.prepopulate(order + 1)?;
        let betas = MultiIndex::up_to(3, order);
        let mut offsets = vec![0];
        for j in 0..=order {
            offsets.push(offsets[j] + MultiIndex::of_order(3, j).len());
        }
        let rows = exec.map(betas.len(), |b| -> Result<(Vec<f64>, Vec<Point>, Vec<f64>)> {
            let beta = &betas[b];
            let kd = cache.get(beta)?;
            let parts = [cache.get(&beta.plus_unit(0))?, cache.get(&beta.plus_unit(1))?, cache.get(&beta.plus_unit(2))?];
            let mut v = Vec::with_capacity(outer.len());
            let mut g = Vec::with_capacity(outer.len());
            let mut n = Vec::with_capacity(outer.len());
            for (x, nu) in outer.nodes().iter().zip(outer.normals()) {
                let r = crate::geometry::norm(*x);
                if r < 1e-12 {
                    return Err(CapaxError::Singularity { norm: r, threshold: 1e-12 });
                }
                v.push(kd.eval_unchecked(x, r));
                let gr = [parts[0].eval_unchecked(x, r), parts[1].eval_unchecked(x, r), parts[2].eval_unchecked(x, r)];
                n.push(dot(*nu, gr));
                g.push(gr);
            }
            Ok((v, g, n))
        });
        let mut value = Vec::new();
        let mut grad = Vec::new();
        let mut normal = Vec::new();
        for row in rows {
            let (v, g, n) = row?;
            value.push(v);
            grad.push(g);
            normal.push(n);
        }
        Ok(KernelTable { betas, offsets, value, grad, normal })
    }

    fn of_order(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }
}

/// Density coefficients (divided by `k!`) and cached moments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientTables {
    pub k_max: usize,
    pub rho_o: Vec<DVector<f64>>,
    pub rho_i: Vec<DVector<f64>>,
    pub theta_o: Vec<DVector<f64>>,
    pub theta_i: Vec<DVector<f64>>,
    /// Multipliers of the bordered hole systems, per order.
    pub lambda_rho: Vec<f64>,
    pub lambda_theta: Vec<f64>,
    /// Multi-indices in graded-lex order, indexing the moment tables.
    pub betas: Vec<MultiIndex>,
    /// `int rho_i_k s^b dsigma`, `[k][b]`.
    pub moments_rho: Vec<Vec<f64>>,
    /// `int theta_i_k nu s^b dsigma`, `[k][b]`.
    pub moments_theta: Vec<Vec<Point>>,
    /// `g^a_k = sum_l int u^a_{#,l} rho_i_{k-l}`.
    pub g_a: Vec<f64>,
    /// `int theta_o_k nu . grad D^b S dsigma`, `[k][b]`.
    #[serde(skip)]
    ao: Vec<Vec<f64>>,
    /// `int rho_o_k D^b S dsigma`, `[k][b]`.
    #[serde(skip)]
    so: Vec<Vec<f64>>,
}

/// `poly(t) - w[hole, theta](t)`: one coefficient of the outer-corrected theta potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UmField {
    pub poly: TaylorPoly,
    pub theta_i: DVector<f64>,
}

/// `poly(t) + v[hole, rho](t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VmField {
    pub poly: TaylorPoly,
    pub rho_i: DVector<f64>,
}

impl UmField {
    pub fn eval(&self, hole: &Surface, targets: &[Point]) -> Result<Vec<f64>> {
        let w = eval_double_layer(hole, self.theta_i.as_slice(), targets)?;
        Ok(targets.iter().zip(w).map(|(t, w)| self.poly.eval(t) - w).collect())
    }
}

impl VmField {
    pub fn eval(&self, hole: &Surface, targets: &[Point]) -> Result<Vec<f64>> {
        let v = eval_single_layer(hole, self.rho_i.as_slice(), targets)?;
        Ok(targets.iter().zip(v).map(|(t, v)| self.poly.eval(t) + v).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuxSequences {
    pub u_m: Vec<UmField>,
    pub v_m: Vec<VmField>,
    pub g_a: Vec<f64>,
    pub r: Vec<f64>,
    /// `sum_l (nu . grad u_{m,l}) u^b_{#,k-l}` on the hole boundary.
    pub u_tilde: Vec<DVector<f64>>,
    /// Exterior normal derivative of `v_{m,k}`.
    pub v_tilde: Vec<DVector<f64>>,
    pub g_tilde: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacitySeries {
    pub k_max: usize,
    pub c: Vec<f64>,
    pub r: Vec<f64>,
    pub g_a: Vec<f64>,
    pub xi: Vec<f64>,
    pub a_tilde: Vec<DVector<f64>>,
    pub lambda_tilde: Vec<DVector<f64>>,
    pub lambda_tilde_integrals: Vec<f64>,
    /// Ratio-test heuristic from the last two nonzero coefficients; not a proven bound.
    pub empirical_radius: Option<f64>,
    pub aux: AuxSequences,
}

impl CapacitySeries {
    pub fn eval(&self, eps: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, c| acc * eps + c)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,c_n\n");
        for (n, c) in self.c.iter().enumerate() {
            s.push_str(&format!("{n},{c:.17e}\n"));
        }
        s
    }

    pub fn summary(&self) -> SeriesSummary {
        SeriesSummary {
            k_max: self.k_max,
            c: self.c.clone(),
            r: self.r.clone(),
            g_a: self.g_a.clone(),
            xi: self.xi.clone(),
            lambda_tilde_integrals: self.lambda_tilde_integrals.clone(),
            empirical_radius: self.empirical_radius,
            empirical_radius_kind: "heuristic ratio test; not a proven bound".into(),
        }
    }
}

/// Scalar part of a series, for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub k_max: usize,
    pub c: Vec<f64>,
    pub r: Vec<f64>,
    pub g_a: Vec<f64>,
    pub xi: Vec<f64>,
    pub lambda_tilde_integrals: Vec<f64>,
    pub empirical_radius: Option<f64>,
    pub empirical_radius_kind: String,
}

pub fn eval_series(series: &CapacitySeries, eps: f64) -> f64 {
    series.eval(eps)
}

/// Factorizations and kernel tables shared by all orders.
pub struct SeriesSolver<'a> {
    problem: &'a HoleProblem,
    k_max: usize,
    outer_ws: Factored,
    outer_w: Factored,
    inner_ws: Factored,
    inner_w: Factored,
    table: KernelTable,
    /// `t^b / b!` at the hole nodes.
    mono: Vec<DVector<f64>>,
}

impl<'a> SeriesSolver<'a> {
    pub fn new(problem: &'a HoleProblem, k_max: usize) -> Result<Self> {
        if k_max + 1 > DEFAULT_MAX_ORDER {
            return Err(CapaxError::OrderCap { order: k_max + 1, max: DEFAULT_MAX_ORDER });
        }
        let (o, i) = (&problem.outer, &problem.inner);
        let shift = |m: &nalgebra::DMatrix<f64>, d: f64, s: f64| {
            let mut a = m * s;
            for k in 0..a.nrows() {
                a[(k, k)] += d;
            }
            a
        };
        let outer_ws = Factored::new(shift(&o.ws.matrix, 0.5, 1.0), "outer 1/2 + W*")?;
        let outer_w = Factored::new(shift(&o.w.matrix, 0.5, 1.0), "outer 1/2 + W")?;
        let wi = i.surface.weights();
        let inner_ws = Factored::new(bordered(&shift(&i.ws.matrix, 0.5, -1.0), wi), "hole 1/2 - W* (bordered)")?;
        let inner_w = Factored::new(bordered(&shift(&i.w.matrix, 0.5, -1.0), wi), "hole 1/2 - W (bordered)")?;
        let table = KernelTable::new(&o.surface, k_max, problem.exec)?;
        let mono = table
            .betas
            .iter()
            .map(|b| {
                let f = b.factorial();
                DVector::from_iterator(i.len(), i.surface.nodes().iter().map(|t| b.monomial(t) / f))
            })
            .collect();
        Ok(SeriesSolver { problem, k_max, outer_ws, outer_w, inner_ws, inner_w, table, mono })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    fn inner(&self) -> &Surface {
        &self.problem.inner.surface
    }

    fn outer(&self) -> &Surface {
        &self.problem.outer.surface
    }

    fn solve_bordered(lu: &Factored, rhs: &DVector<f64>, constraint: f64) -> (DVector<f64>, f64) {
        let n = rhs.len();
        let mut b = DVector::zeros(n + 1);
        b.rows_mut(0, n).copy_from(rhs);
        b[n] = constraint;
        let x = lu.solve(&b);
        (DVector::from_iterator(n, x.rows(0, n).iter().cloned()), x[n])
    }

    /// `sum_y w_y f_y table[b][y]` for every `b` of order `<= max_order`.
    fn outer_moments<T: Copy>(&self, f: &DVector<f64>, table: &[Vec<T>], max_order: usize, fold: impl Fn(&mut T, f64, T)) -> Vec<T>
    where
        T: Default,
    {
        let w = self.outer().weights();
        (0..self.table.offsets[max_order + 1])
            .map(|b| {
                let mut acc = T::default();
                for y in 0..w.len() {
                    fold(&mut acc, w[y] * f[y], table[b][y]);
                }
                acc
            })
            .collect()
    }

    /// Outer densities `rho_o_k`, hole densities `rho_i_k` for `k = 0..=k_max`.
    pub fn rho_coefficients(&self) -> Result<CoefficientTables> {
        let k_max = self.k_max;
        let (si, so) = (self.inner(), self.outer());
        let (ni, no) = (si.len(), so.len());
        let nb = self.table.betas.len();
        let mut rho_o: Vec<DVector<f64>> = Vec::new();
        let mut rho_i: Vec<DVector<f64>> = Vec::new();
        let mut lambda = Vec::new();
        let mut mi: Vec<Vec<f64>> = Vec::new();
        // go[m][b] = sum_y w_y rho_o_m(y) grad D^b S(y)
        let mut go: Vec<Vec<Point>> = Vec::new();
        let mut so_mom: Vec<Vec<f64>> = Vec::new();
        for k in 0..=k_max {
            let mut rhs = DVector::zeros(ni);
            for j in 0..=k.saturating_sub(2) {
                if k < 2 {
                    break;
                }
                let m = k - 2 - j;
                for b in self.table.of_order(j) {
                    let g = go[m][b];
                    for t in 0..ni {
                        rhs[t] -= sign(j) * self.mono[b][t] * dot(si.normals()[t], g);
                    }
                }
            }
            let (pi, lam) = Self::solve_bordered(&self.inner_ws, &rhs, if k == 0 { 1.0 } else { 0.0 });
            let mom: Vec<f64> = (0..nb)
                .map(|b| {
                    let f = self.table.betas[b].factorial();
                    (0..ni).map(|t| si.weights()[t] * pi[t] * self.mono[b][t] * f).sum()
                })
                .collect();
            mi.push(mom);
            rho_i.push(pi);
            lambda.push(lam);

            let mut rhs = DVector::zeros(no);
            for j in 0..=k {
                let m = k - j;
                for b in self.table.of_order(j) {
                    let c = sign(j) / self.table.betas[b].factorial() * mi[m][b];
                    if c == 0.0 {
                        continue;
                    }
                    for x in 0..no {
                        rhs[x] -= c * self.table.normal[b][x];
                    }
                }
            }
            let po = self.outer_ws.solve(&rhs);
            go.push(if k + 2 <= k_max {
                self.outer_moments(&po, &self.table.grad, k_max - 2 - k, |acc, c, g| {
                    acc[0] += c * g[0];
                    acc[1] += c * g[1];
                    acc[2] += c * g[2];
                })
            } else {
                Vec::new()
            });
            so_mom.push(if k < k_max {
                self.outer_moments(&po, &self.table.value, k_max - 1 - k, |acc, c, v| *acc += c * v)
            } else {
                Vec::new()
            });
            rho_o.push(po);
        }
        Ok(CoefficientTables {
            k_max,
            rho_o,
            rho_i,
            theta_o: Vec::new(),
            theta_i: Vec::new(),
            lambda_rho: lambda,
            lambda_theta: Vec::new(),
            betas: self.table.betas.clone(),
            moments_rho: mi,
            moments_theta: Vec::new(),
            g_a: Vec::new(),
            ao: Vec::new(),
            so: so_mom,
        })
    }

    /// Fills the theta part of `tables` for boundary data `u_a`.
    pub fn theta_coefficients(&self, u_a: &TaylorPoly, tables: &mut CoefficientTables) -> Result<()> {
        check_poly(u_a, self.k_max)?;
        let k_max = self.k_max;
        let (si, so) = (self.inner(), self.outer());
        let (ni, no) = (si.len(), so.len());
        let nb = self.table.betas.len();
        let slices: Vec<DVector<f64>> = (0..=k_max)
            .map(|k| {
                let p = u_a.homogeneous_part(k);
                DVector::from_iterator(ni, si.nodes().iter().map(|t| p.eval(t)))
            })
            .collect();
        let mut theta_o: Vec<DVector<f64>> = Vec::new();
        let mut theta_i: Vec<DVector<f64>> = Vec::new();
        let mut lambda = Vec::new();
        let mut g_a = Vec::new();
        let mut mt: Vec<Vec<Point>> = Vec::new();
        let mut ao: Vec<Vec<f64>> = Vec::new();
        for k in 0..=k_max {
            let g: f64 = (0..=k)
                .map(|l| si.integrate(slices[l].component_mul(&tables.rho_i[k - l]).as_slice()))
                .sum();
            g_a.push(g);

            let mut rhs = DVector::zeros(no);
            if k >= 2 {
                for j in 0..=k - 2 {
                    let m = k - 2 - j;
                    for b in self.table.of_order(j) {
                        let mv = mt[m][b];
                        let c = sign(j) / self.table.betas[b].factorial();
                        for x in 0..no {
                            rhs[x] -= c * dot(self.table.grad[b][x], mv);
                        }
                    }
                }
            }
            let to = self.outer_w.solve(&rhs);
            ao.push(self.outer_moments(&to, &self.table.normal, k_max - k, |acc, c, v| *acc += c * v));
            theta_o.push(to);

            let mut rhs = slices[k].add_scalar(-g);
            for j in 0..=k {
                let m = k - j;
                for b in self.table.of_order(j) {
                    let c = sign(j) * ao[m][b];
                    if c == 0.0 {
                        continue;
                    }
                    rhs.axpy(-c, &self.mono[b], 1.0);
                }
            }
            let (ti, lam) = Self::solve_bordered(&self.inner_w, &rhs, 0.0);
            let mom: Vec<Point> = (0..nb)
                .map(|b| {
                    let f = self.table.betas[b].factorial();
                    let mut acc = [0.0; 3];
                    for t in 0..ni {
                        let c = si.weights()[t] * ti[t] * self.mono[b][t] * f;
                        let nu = si.normals()[t];
                        acc[0] += c * nu[0];
                        acc[1] += c * nu[1];
                        acc[2] += c * nu[2];
                    }
                    acc
                })
                .collect();
            mt.push(mom);
            theta_i.push(ti);
            lambda.push(lam);
        }
        tables.theta_o = theta_o;
        tables.theta_i = theta_i;
        tables.lambda_theta = lambda;
        tables.g_a = g_a;
        tables.moments_theta = mt;
        tables.ao = ao;
        Ok(())
    }

    pub fn aux_sequences(&self, tables: &CoefficientTables, u_b: &TaylorPoly) -> Result<AuxSequences> {
        check_poly(u_b, self.k_max)?;
        if tables.theta_i.len() != self.k_max + 1 {
            return Err(CapaxError::InvalidArgument("theta coefficients have not been computed".into()));
        }
        let k_max = self.k_max;
        let ops = &self.problem.inner;
        let si = self.inner();
        let ub: Vec<DVector<f64>> = (0..=k_max)
            .map(|k| {
                let p = u_b.homogeneous_part(k);
                ops.sample(|t| p.eval(&t))
            })
            .collect();
        let poly_normal = |p: &TaylorPoly| {
            let g = p.gradient();
            ops.sample_normal(|t| [g[0].eval(&t), g[1].eval(&t), g[2].eval(&t)])
        };

        let mut u_m = Vec::new();
        let mut v_m = Vec::new();
        let mut dn_um = Vec::new();
        let mut r = Vec::new();
        let mut v_tilde = Vec::new();
        for k in 0..=k_max {
            let poly = TaylorPoly::from_terms(
                3,
                (0..=k).flat_map(|j| {
                    self.table.of_order(j).map(move |b| {
                        let beta = &self.table.betas[b];
                        (beta.clone(), sign(j) / beta.factorial() * tables.ao[k - j][b])
                    })
                }),
            );
            let th = &tables.theta_i[k];
            let ext = double_layer_trace(Side::Exterior, &ops.w, th);
            dn_um.push(poly_normal(&poly) - ops.dtn(&ext));
            u_m.push(UmField { poly, theta_i: th.clone() });

            let polyv = if k == 0 {
                TaylorPoly::zero(3)
            } else {
                TaylorPoly::from_terms(
                    3,
                    (0..k).flat_map(|j| {
                        self.table.of_order(j).map(move |b| {
                            let beta = &self.table.betas[b];
                            (beta.clone(), sign(j) / beta.factorial() * tables.so[k - 1 - j][b])
                        })
                    }),
                )
            };
            let pi = &tables.rho_i[k];
            let on_boundary = ops.sample(|t| polyv.eval(&t)) + ops.v.apply(pi);
            r.push(si.integrate(on_boundary.as_slice()) / si.area());
            v_tilde.push(poly_normal(&polyv) + normal_derivative_trace(Side::Exterior, &ops.ws, pi));
            v_m.push(VmField { poly: polyv, rho_i: pi.clone() });
        }
        let n = si.len();
        let u_tilde = (0..=k_max)
            .map(|k| (0..=k).fold(DVector::zeros(n), |acc, l| acc + dn_um[l].component_mul(&ub[k - l])))
            .collect();
        let g_tilde = (0..=k_max)
            .map(|k| (0..=k).fold(DVector::zeros(n), |acc, l| acc + &ub[k - l] * tables.g_a[l]))
            .collect();
        Ok(AuxSequences { u_m, v_m, g_a: tables.g_a.clone(), r, u_tilde, v_tilde, g_tilde })
    }

    pub fn capacity_series(&self, u_a: &TaylorPoly, u_b: &TaylorPoly) -> Result<CapacitySeries> {
        let mut tables = self.rho_coefficients()?;
        self.theta_coefficients(u_a, &mut tables)?;
        let aux = self.aux_sequences(&tables, u_b)?;
        let (a_tilde, lambda_tilde) = lambda_tilde(&aux)?;
        let xi = xi_coefficients(u_a, u_b, self.inner(), self.k_max);
        let si = self.inner();
        let integrals: Vec<f64> = lambda_tilde.iter().map(|l| si.integrate(l.as_slice())).collect();
        let c: Vec<f64> = (0..=self.k_max)
            .map(|n| if n == 0 { 0.0 } else { -integrals[n - 1] + xi[n] })
            .collect();
        let empirical_radius = empirical_radius(&c);
        Ok(CapacitySeries {
            k_max: self.k_max,
            c,
            r: aux.r.clone(),
            g_a: aux.g_a.clone(),
            xi,
            a_tilde,
            lambda_tilde,
            lambda_tilde_integrals: integrals,
            empirical_radius,
            aux,
        })
    }
}

fn check_poly(p: &TaylorPoly, k_max: usize) -> Result<()> {
    if p.dim() != 3 {
        return Err(CapaxError::InvalidArgument(format!("expected a polynomial in 3 variables, got {}", p.dim())));
    }
    if p.degree() > DEFAULT_MAX_ORDER {
        return Err(CapaxError::OrderCap { order: p.degree(), max: DEFAULT_MAX_ORDER });
    }
    let _ = k_max;
    Ok(())
}

/// Coefficients of `1 / sum_k r_k eps^k` through compositions:
/// `q_m = sum_{j=1}^m (-1)^j / r_0^{j+1} sum_{compositions of m into j parts} prod r`.
pub fn reciprocal_coefficients(r: &[f64]) -> Result<Vec<f64>> {
    let r0 = *r.first().ok_or_else(|| CapaxError::InvalidArgument("empty series".into()))?;
    if r0 == 0.0 {
        return Err(CapaxError::SingularSystem { what: "reciprocal series (r_0 = 0)".into(), cond: f64::INFINITY });
    }
    let n = r.len();
    // comp[k][j]: sum over compositions of k into j positive parts of prod r
    let mut comp = vec![vec![0.0; n]; n];
    for k in 1..n {
        comp[k][1] = r[k];
        for j in 2..=k {
            comp[k][j] = (1..=k - j + 1).map(|m| r[m] * comp[k - m][j - 1]).sum();
        }
    }
    Ok((0..n)
        .map(|m| {
            if m == 0 {
                1.0 / r0
            } else {
                (1..=m).map(|j| sign(j) / r0.powi(j as i32 + 1) * comp[m][j]).sum()
            }
        })
        .collect())
}

/// `(a~_n, lambda~_n)` with `a~_n = sum_k g~_{n-k} v~_k` and
/// `lambda~_n = u~_n + sum_m a~_{n-m} q_m`, `q` the reciprocal of `r`.
pub fn lambda_tilde(aux: &AuxSequences) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let q = reciprocal_coefficients(&aux.r)?;
    let len = aux.r.len();
    let n = aux.v_tilde[0].len();
    let a: Vec<DVector<f64>> = (0..len)
        .map(|m| (0..=m).fold(DVector::zeros(n), |acc, k| acc + aux.g_tilde[m - k].component_mul(&aux.v_tilde[k])))
        .collect();
    let lam = (0..len)
        .map(|m| (0..=m).fold(aux.u_tilde[m].clone(), |acc, k| acc + &a[m - k] * q[k]))
        .collect();
    Ok((a, lam))
}

/// `xi_n = sum_{l+m=n-3} int_hole grad u^a_{#,l+1} . grad u^b_{#,m+1}`, `n = 0..=k_max`.
pub fn xi_coefficients(u_a: &TaylorPoly, u_b: &TaylorPoly, hole: &Surface, k_max: usize) -> Vec<f64> {
    let rule = hole.volume_rule();
    let grads = |p: &TaylorPoly| -> Vec<Vec<TaylorPoly>> { (0..=k_max).map(|k| p.homogeneous_part(k).gradient()).collect() };
    let (ga, gb) = (grads(u_a), grads(u_b));
    let zero = |g: &[TaylorPoly]| g.iter().all(|p| p.is_zero());
    let mut cache: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    (0..=k_max)
        .map(|n| {
            if n < 3 {
                return 0.0;
            }
            (0..=n - 3)
                .map(|l| {
                    let m = n - 3 - l;
                    let (a, b) = (&ga[l + 1], &gb[m + 1]);
                    if zero(a) || zero(b) {
                        return 0.0;
                    }
                    *cache.entry((l, m)).or_insert_with(|| {
                        rule.iter()
                            .map(|(t, w)| w * (0..3).map(|j| a[j].eval(t) * b[j].eval(t)).sum::<f64>())
                            .sum()
                    })
                })
                .sum()
        })
        .collect()
}

/// Ratio test `|c_{n-1} / c_n|` on the last pair of non-negligible coefficients; a heuristic.
pub fn empirical_radius(c: &[f64]) -> Option<f64> {
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let nz: Vec<usize> = (1..c.len()).filter(|&n| c[n].abs() > 1e-12 * scale).collect();
    match nz.as_slice() {
        [.., a, b] => {
            let ratio = (c[*a].abs() / c[*b].abs()).powf(1.0 / (b - a) as f64);
            ratio.is_finite().then_some(ratio)
        }
        _ => None,
    }
}

pub fn capacity_series(problem: &HoleProblem, u_a: &TaylorPoly, u_b: &TaylorPoly, k_max: usize) -> Result<CapacitySeries> {
    SeriesSolver::new(problem, k_max)?.capacity_series(u_a, u_b)
}

/// Lowest order of a nonzero homogeneous block (absolute tolerance relative to the largest coefficient).
pub fn vanishing_order_of(p: &TaylorPoly, rel_tol: f64) -> Result<usize> {
    let scale = p.max_abs_coeff();
    if scale == 0.0 {
        return Err(CapaxError::IdenticallyZero(rel_tol));
    }
    (0..=p.degree())
        .find(|&k| p.block_norm(k) > rel_tol * scale)
        .ok_or(CapaxError::IdenticallyZero(rel_tol))
}

/// `(kappa_a + kappa_b + 1, frak_c(principal parts))` in three dimensions.
pub fn leading_coefficient_vanishing(
    exterior: &crate::direct::ExteriorSolver,
    u_a: &TaylorPoly,
    u_b: &TaylorPoly,
) -> Result<(usize, f64)> {
    let ka = vanishing_order_of(u_a, 1e-10)?;
    let kb = vanishing_order_of(u_b, 1e-10)?;
    let c = exterior.frak_c(&u_a.homogeneous_part(ka), &u_b.homogeneous_part(kb))?;
    Ok((ka + kb + 1, c))
}

use std::f64::consts::PI;
use std::sync::Arc;

use capax_core::direct::{ExteriorSolver, HoleProblem};
use capax_core::eigen::{
    ball_first_mode, ball_l1_modes, predict_multiple, shell_eigenvalue_oracle, AdmissibleFunction, EigenReport,
    EigenSpace, OracleRow,
};
use capax_core::geometry::Surface;
use capax_core::layer_ops::{AssemblyOptions, SurfaceOperators};
use capax_core::series::{capacity_series, SeriesSummary};
use capax_core::{Exec, MultiIndex, TaylorPoly};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{EigenSpec, GeometrySpec, Mode, Quantity};
use crate::{sha256_hex, Artifact, Cell, CliError, Context};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonianResult {
    pub capacity: f64,
    pub r0: f64,
    pub nodes: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryInfo {
    pub description: String,
    pub nodes: usize,
    /// SHA-256 of the node/weight/normal table.
    pub sha256: String,
}

impl GeometryInfo {
    fn of(s: &Surface) -> Self {
        GeometryInfo { description: s.describe(), nodes: s.len(), sha256: sha256_hex(&s.to_csv()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectRow {
    pub epsilon: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectResult {
    pub outer: GeometryInfo,
    pub inner: GeometryInfo,
    pub rows: Vec<DirectRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    pub outer: GeometryInfo,
    pub inner: GeometryInfo,
    pub summary: SeriesSummary,
    /// Truncated sums at the configured epsilons.
    pub evaluations: Vec<DirectRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub epsilon: f64,
    pub direct: f64,
    pub series: f64,
    pub analytic: Option<f64>,
    pub rel_series_direct: f64,
    pub rel_direct_analytic: Option<f64>,
    pub rel_series_analytic: Option<f64>,
    /// `|series - direct| <= max(relative * |direct|, absolute)`.
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResult {
    pub outer: GeometryInfo,
    pub inner: GeometryInfo,
    pub k_max: usize,
    pub rows: Vec<CompareRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    pub level: usize,
    pub nodes: usize,
    pub value: f64,
    pub richardson: Option<f64>,
    pub observed_order: Option<f64>,
    pub reference: Option<f64>,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeResult {
    pub quantity: Quantity,
    pub rows: Vec<ConvergeRow>,
}

pub(crate) fn dispatch(ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    match ctx.opts.mode {
        Mode::Newtonian => newtonian(ctx),
        Mode::Direct => direct(ctx),
        Mode::Series => series(ctx),
        Mode::Compare => compare(ctx),
        Mode::Eigen => eigen(ctx),
        Mode::Converge => converge(ctx),
    }
}

impl Context {
    fn exec(&self) -> Exec {
        Exec::from_jobs(self.opts.jobs)
    }

    fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions { exec: self.exec(), polar_theta: self.cfg.polar_theta, polar_phi: self.cfg.polar_phi }
    }

    fn build(&self, g: &GeometrySpec) -> Result<Surface, CliError> {
        g.build(self.cfg.quad_order(), &self.opts.base_dir)
    }

    fn hole_problem(&self) -> Result<HoleProblem, CliError> {
        let outer = self.build(&self.cfg.outer())?;
        let inner = self.build(&self.cfg.inner())?;
        Ok(HoleProblem::new(outer, inner, self.assembly())?)
    }

    fn exterior(&self, g: &GeometrySpec) -> Result<ExteriorSolver, CliError> {
        let ops = SurfaceOperators::new(Arc::new(self.build(g)?), self.assembly())?;
        Ok(ExteriorSolver::new(Arc::new(ops))?)
    }

    fn functions(&self) -> Result<(TaylorPoly, TaylorPoly), CliError> {
        Ok((self.cfg.u_a().to_poly("u_a")?, self.cfg.u_b().to_poly("u_b")?))
    }

    fn epsilons(&self) -> Result<Vec<f64>, CliError> {
        self.cfg.epsilon_list()
    }
}

fn newtonian(ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let hole = ctx.exterior(&ctx.cfg.inner())?;
    let res = NewtonianResult {
        capacity: hole.newtonian_capacity(),
        r0: hole.r0,
        nodes: hole.surface().len(),
        surface: hole.surface().describe(),
    };
    Ok(vec![ctx.json(res)?])
}

/// `capacity_direct` over the epsilon list, one independent solve per value.
fn direct_sweep(ctx: &Context, problem: &HoleProblem, ua: &TaylorPoly, ub: &TaylorPoly) -> Result<Vec<DirectRow>, CliError> {
    let eps = ctx.epsilons()?;
    for &e in &eps {
        problem.check_epsilon(e)?;
    }
    ctx.exec()
        .map(eps.len(), |i| problem.capacity_direct(eps[i], ua, ub).map(|c| DirectRow { epsilon: eps[i], capacity: c }))
        .into_iter()
        .map(|r| r.map_err(CliError::from))
        .collect()
}

fn direct(ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let problem = ctx.hole_problem()?;
    let (ua, ub) = ctx.functions()?;
    let rows = direct_sweep(ctx, &problem, &ua, &ub)?;
    let table: Vec<Vec<Cell>> = rows.iter().map(|r| vec![Cell::Num(r.epsilon), Cell::Num(r.capacity)]).collect();
    let csv = ctx.csv(&["epsilon", "capacity"], &table);
    let res = DirectResult {
        outer: GeometryInfo::of(problem.outer_surface()),
        inner: GeometryInfo::of(problem.inner_surface()),
        rows,
    };
    Ok(vec![csv, ctx.json(res)?])
}

fn series(ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let problem = ctx.hole_problem()?;
    let (ua, ub) = ctx.functions()?;
    let s = capacity_series(&problem, &ua, &ub, ctx.cfg.k_max())?;
    let table: Vec<Vec<Cell>> = s.c.iter().enumerate().map(|(n, c)| vec![Cell::Int(n), Cell::Num(*c)]).collect();
    let csv = ctx.csv(&["n", "c_n"], &table);
    let evaluations = ctx.epsilons()?.into_iter().map(|e| DirectRow { epsilon: e, capacity: s.eval(e) }).collect();
    let res = SeriesResult {
        outer: GeometryInfo::of(problem.outer_surface()),
        inner: GeometryInfo::of(problem.inner_surface()),
        summary: s.summary(),
        evaluations,
    };
    Ok(vec![csv, ctx.json(res)?])
}

fn constant_value(p: &TaylorPoly) -> Option<f64> {
    (p.degree() == 0).then(|| p.coeff(&MultiIndex::zero(3)))
}

/// Closed form for concentric spheres at the origin and constant data:
/// `a b 4 pi / (1/(eps r) - 1/R)`.
fn analytic_capacity(ctx: &Context, ua: &TaylorPoly, ub: &TaylorPoly, eps: f64) -> Option<f64> {
    let big = ctx.cfg.outer().centered_sphere_radius()?;
    let small = ctx.cfg.inner().centered_sphere_radius()?;
    let (a, b) = (constant_value(ua)?, constant_value(ub)?);
    Some(a * b * 4.0 * PI / (1.0 / (eps * small) - 1.0 / big))
}

fn rel(x: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        (x - reference).abs()
    } else {
        ((x - reference) / reference).abs()
    }
}

fn compare(ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let problem = ctx.hole_problem()?;
    let (ua, ub) = ctx.functions()?;
    let direct = direct_sweep(ctx, &problem, &ua, &ub)?;
    let s = capacity_series(&problem, &ua, &ub, ctx.cfg.k_max())?;
    let tol = &ctx.cfg.tolerances;
    let rows: Vec<CompareRow> = direct
        .iter()
        .map(|d| {
            let e = d.epsilon;
            let series = s.eval(e);
            let analytic = analytic_capacity(ctx, &ua, &ub, e);
            CompareRow {
                epsilon: e,
                direct: d.capacity,
                series,
                analytic,
                rel_series_direct: rel(series, d.capacity),
                rel_direct_analytic: analytic.map(|a| rel(d.capacity, a)),
                rel_series_analytic: analytic.map(|a| rel(series, a)),
                agree: (series - d.capacity).abs() <= (tol.relative * d.capacity.abs()).max(tol.absolute),
            }
        })
        .collect();
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.epsilon),
                Cell::Num(r.direct),
                Cell::Num(r.series),
                Cell::Opt(r.analytic),
                Cell::Num(r.rel_series_direct),
                Cell::Opt(r.rel_direct_analytic),
                Cell::Opt(r.rel_series_analytic),
                Cell::Text(r.agree.to_string()),
            ]
        })
        .collect();
    let csv = ctx.csv(
        &["epsilon", "direct", "series", "analytic", "rel_series_direct", "rel_direct_analytic", "rel_series_analytic", "agree"],
        &table,
    );
    let res = CompareResult {
        outer: GeometryInfo::of(problem.outer_surface()),
        inner: GeometryInfo::of(problem.inner_surface()),
        k_max: ctx.cfg.k_max(),
        rows,
    };
    Ok(vec![csv, ctx.json(res)?])
}

fn eigen(ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let spec = ctx.cfg.eigen.as_ref().expect("validated");
    let pi2 = PI * PI;
    let (space, shell_l) = match spec {
        EigenSpec::BallFirst { taylor_degree } => {
            let u = ball_first_mode(taylor_degree / 2);
            (EigenSpace { eigenvalue: pi2, basis: vec![u], gram: None }, Some(0))
        }
        EigenSpec::BallSecond { taylor_degree } => {
            let basis = ball_l1_modes(taylor_degree.saturating_sub(1) / 2)?;
            let k = capax_core::eigen::first_bessel_zero(1)?;
            (EigenSpace { eigenvalue: k * k, basis, gram: None }, Some(1))
        }
        EigenSpec::Custom { eigenvalue, basis, gram } => {
            let basis = basis
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let label = f.label.clone().unwrap_or_else(|| format!("u{}", i + 1));
                    Ok(AdmissibleFunction::new(f.to_poly(&format!("eigen.basis[{i}]"))?, label))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let gram = match gram {
                None => None,
                Some(rows) => {
                    let n = basis.len();
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(CliError::Config(format!("eigen.gram: must be {n} x {n}")));
                    }
                    Some(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
                }
            };
            (EigenSpace { eigenvalue: *eigenvalue, basis, gram }, None)
        }
    };
    let eps = ctx.epsilons()?;
    let hole = ctx.exterior(&ctx.cfg.inner())?;
    let prediction = predict_multiple(&space, &hole, &eps)?;
    // The shell oracle applies when the hole is the unit ball at the origin.
    let oracle = match shell_l {
        Some(l) if ctx.cfg.inner().centered_sphere_radius() == Some(1.0) => Some(
            prediction
                .predictions
                .iter()
                .map(|p| {
                    let exact = shell_eigenvalue_oracle(p.epsilon, l, 1)? - space.eigenvalue;
                    let predicted = p.value - space.eigenvalue;
                    Ok(OracleRow {
                        epsilon: p.epsilon,
                        branch: p.branch,
                        predicted_shift: predicted,
                        exact_shift: exact,
                        relative_error: rel(predicted, exact),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?,
        ),
        _ => None,
    };
    let report: EigenReport = prediction.report(oracle);
    Ok(vec![ctx.json(report)?])
}

fn converge(ctx: &Context) -> Result<Vec<Artifact>, CliError> {
    let spec = ctx.cfg.converge.as_ref().expect("validated");
    let geometry = spec.geometry.clone().unwrap_or_else(|| ctx.cfg.inner());
    let mut samples = Vec::new();
    for &level in &spec.levels {
        let g = geometry.at_level(level)?;
        let (value, surface) = match spec.quantity {
            Quantity::Area => {
                let s = ctx.build(&g)?;
                (s.area(), s)
            }
            Quantity::Newtonian => {
                let hole = ctx.exterior(&g)?;
                (hole.newtonian_capacity(), hole.surface().clone())
            }
            Quantity::Capacity => {
                let outer = ctx.build(&ctx.cfg.outer())?;
                let problem = HoleProblem::new(outer, ctx.build(&g)?, ctx.assembly())?;
                let (ua, ub) = ctx.functions()?;
                let e = ctx.epsilons()?[0];
                (problem.capacity_direct(e, &ua, &ub)?, problem.inner_surface().clone())
            }
        };
        log::debug!("level {level}: {value:e}");
        samples.push((level, surface.len(), surface.mesh_width(), value));
    }
    let rows = richardson_table(&samples, spec.declared_order, spec.reference);
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::Int(r.level),
                Cell::Int(r.nodes),
                Cell::Num(r.value),
                Cell::Opt(r.richardson),
                Cell::Opt(r.observed_order),
                Cell::Opt(r.reference),
                Cell::Opt(r.relative_error),
            ]
        })
        .collect();
    let csv = ctx.csv(&["level", "nodes", "value", "richardson", "observed_order", "reference", "relative_error"], &table);
    Ok(vec![csv, ctx.json(ConvergeResult { quantity: spec.quantity, rows })?])
}

/// Rows of a refinement study from `(level, nodes, h, value)` samples.
///
/// The observed order at row `i` uses rows `i-2..=i`; Richardson extrapolation
/// uses it when available and `declared` otherwise.
pub fn richardson_table(samples: &[(usize, usize, f64, f64)], declared: Option<f64>, reference: Option<f64>) -> Vec<ConvergeRow> {
    let mut rows = Vec::with_capacity(samples.len());
    for (i, &(level, nodes, h, value)) in samples.iter().enumerate() {
        let observed = (i >= 2).then(|| {
            let d1 = samples[i - 1].3 - samples[i - 2].3;
            let d2 = value - samples[i - 1].3;
            (d1.abs() / d2.abs()).ln() / (samples[i - 1].2 / h).ln()
        });
        let observed = observed.filter(|p| p.is_finite());
        let richardson = (i >= 1)
            .then(|| observed.or(declared))
            .flatten()
            .map(|p| {
                let ratio = (samples[i - 1].2 / h).powf(p);
                value + (value - samples[i - 1].3) / (ratio - 1.0)
            })
            .filter(|r| r.is_finite());
        rows.push(ConvergeRow {
            level,
            nodes,
            value,
            richardson,
            observed_order: observed,
            reference,
            relative_error: reference.map(|r| rel(value, r)),
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_recovers_power_law() {
        // v(h) = 1 + h^2
        let s: Vec<_> = [0.4, 0.2, 0.1].iter().enumerate().map(|(i, &h)| (i, 10 * (i + 1), h, 1.0 + h * h)).collect();
        let rows = richardson_table(&s, Some(2.0), Some(1.0));
        assert!((rows[2].observed_order.unwrap() - 2.0).abs() < 1e-12);
        assert!((rows[1].richardson.unwrap() - 1.0).abs() < 1e-12);
        assert!(rows[0].richardson.is_none());
        assert!(rows[2].relative_error.unwrap() < rows[1].relative_error.unwrap());
    }
}

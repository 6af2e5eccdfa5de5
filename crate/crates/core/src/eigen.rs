//! Dirichlet eigenvalue shifts caused by a small hole, predicted from local
//! Taylor data of the unperturbed eigenfunctions, plus closed-form oracles
//! for the ball and spherical shells.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::direct::{ExteriorSolver, HoleProblem};
use crate::error::{CapaxError, Result};
use crate::poly::{MultiIndex, TaylorPoly};
use crate::quadrature::gauss_legendre_interval;

/// A coefficient block is zero when its max-norm is below this times the largest coefficient.
pub const VANISHING_TOL: f64 = 1e-10;
/// Relative singular-value cutoff for the order decomposition.
pub const RANK_TOL: f64 = 1e-9;
/// Allowed `max |G - I|` for a caller-supplied Gram matrix.
pub const GRAM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleFunction {
    pub taylor: TaylorPoly,
    pub label: String,
}

impl AdmissibleFunction {
    pub fn new(taylor: TaylorPoly, label: impl Into<String>) -> Self {
        AdmissibleFunction { taylor, label: label.into() }
    }

    pub fn vanishing_order(&self) -> Result<usize> {
        vanishing_order(self)
    }

    pub fn principal_part(&self) -> Result<TaylorPoly> {
        principal_part(self)
    }
}

pub fn vanishing_order(f: &AdmissibleFunction) -> Result<usize> {
    let p = &f.taylor;
    let scale = p.max_abs_coeff();
    if scale == 0.0 {
        return Err(CapaxError::IdenticallyZero(VANISHING_TOL));
    }
    (0..=p.degree())
        .find(|&k| block_max(p, k) > VANISHING_TOL * scale)
        .ok_or(CapaxError::IdenticallyZero(VANISHING_TOL))
}

fn block_max(p: &TaylorPoly, k: usize) -> f64 {
    p.terms().filter(|(b, _)| b.order() == k).fold(0.0, |m, (_, c)| m.max(c.abs()))
}

pub fn principal_part(f: &AdmissibleFunction) -> Result<TaylorPoly> {
    Ok(f.taylor.homogeneous_part(vanishing_order(f)?))
}

/// `Cap(eps w, u, v) ~ prefactor * eps^exponent`; `exponent` is `None` for identically zero input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityAsymptotics {
    pub exponent: Option<usize>,
    pub prefactor: f64,
}

pub fn capacity_asymptotics_pair(
    hole: &ExteriorSolver,
    u: &AdmissibleFunction,
    v: &AdmissibleFunction,
) -> Result<CapacityAsymptotics> {
    let (ku, kv) = match (vanishing_order(u), vanishing_order(v)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(CapaxError::IdenticallyZero(_)), _) | (_, Err(CapaxError::IdenticallyZero(_))) => {
            return Ok(CapacityAsymptotics { exponent: None, prefactor: 0.0 })
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let q = hole.frak_c(&u.taylor.homogeneous_part(ku), &v.taylor.homogeneous_part(kv))?;
    Ok(CapacityAsymptotics { exponent: Some(ku + kv + 1), prefactor: q })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftPrediction {
    pub epsilon: f64,
    pub branch: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplePrediction {
    pub eigenvalue: f64,
    pub order: usize,
    pub exponent: usize,
    pub prefactor: f64,
    pub predictions: Vec<ShiftPrediction>,
}

impl SimplePrediction {
    pub fn shift(&self, eps: f64) -> f64 {
        self.prefactor * eps.powi(self.exponent as i32)
    }
}

/// `lambda + frak_c(hole, u_#) eps^{2 kappa + 1}` for a simple eigenvalue with eigenfunction `u`.
pub fn predict_simple(lambda: f64, u: &AdmissibleFunction, hole: &ExteriorSolver, eps_list: &[f64]) -> Result<SimplePrediction> {
    let k = vanishing_order(u)?;
    let p = u.taylor.homogeneous_part(k);
    let prefactor = hole.frak_c(&p, &p)?;
    let exponent = 2 * k + 1;
    let predictions = eps_list
        .iter()
        .map(|&e| ShiftPrediction { epsilon: e, branch: 1, value: lambda + prefactor * e.powi(exponent as i32) })
        .collect();
    Ok(SimplePrediction { eigenvalue: lambda, order: k, exponent, prefactor, predictions })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSpace {
    pub eigenvalue: f64,
    /// L2-orthonormal basis, given through Taylor data at the hole center.
    pub basis: Vec<AdmissibleFunction>,
    /// Optional Gram matrix of `basis`, checked against the identity.
    pub gram: Option<DMatrix<f64>>,
}

impl EigenSpace {
    pub fn multiplicity(&self) -> usize {
        self.basis.len()
    }
}

/// One block of constant vanishing order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderBlock {
    pub order: usize,
    /// Columns: coefficients of the block's orthonormal basis in the input basis.
    pub coefficients: DMatrix<f64>,
    pub basis: Vec<AdmissibleFunction>,
}

impl OrderBlock {
    pub fn dim(&self) -> usize {
        self.coefficients.ncols()
    }
}

fn combine(basis: &[AdmissibleFunction], c: &[f64], label: String) -> AdmissibleFunction {
    let dim = basis[0].taylor.dim();
    let taylor = basis
        .iter()
        .zip(c)
        .fold(TaylorPoly::zero(dim), |acc, (f, w)| &acc + &f.taylor.scaled(*w));
    AdmissibleFunction::new(taylor, label)
}

/// Right singular vectors of `m` (rows x d), split by the cutoff: (above, below).
fn split_right_vectors(m: &DMatrix<f64>, cutoff: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = m.ncols();
    let rows = m.nrows().max(d);
    let mut padded = DMatrix::zeros(rows, d);
    padded.view_mut((0, 0), (m.nrows(), d)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut above = Vec::new();
    let mut below = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        let v: DVector<f64> = vt.row(i).transpose();
        if *s > cutoff {
            above.push(v);
        } else {
            below.push(v);
        }
    }
    let pack = |cols: Vec<DVector<f64>>| if cols.is_empty() { DMatrix::zeros(d, 0) } else { DMatrix::from_columns(&cols) };
    (pack(above), pack(below))
}

/// Splits the eigenspace into blocks of strictly decreasing vanishing order.
pub fn order_decomposition(space: &EigenSpace) -> Result<Vec<OrderBlock>> {
    let m = space.multiplicity();
    if m == 0 {
        return Err(CapaxError::InvalidArgument("empty eigenspace basis".into()));
    }
    if let Some(g) = &space.gram {
        if g.nrows() != m || g.ncols() != m {
            return Err(CapaxError::InvalidArgument(format!("Gram matrix is {}x{}, basis has {m} elements", g.nrows(), g.ncols())));
        }
        let dev = (g - DMatrix::<f64>::identity(m, m)).amax();
        if dev > GRAM_TOL {
            return Err(CapaxError::NotOrthonormal(dev));
        }
    }
    let dim = space.basis[0].taylor.dim();
    let degree = space.basis.iter().map(|f| f.taylor.degree()).max().unwrap_or(0);
    let betas = MultiIndex::up_to(dim, degree);
    let full = DMatrix::from_fn(betas.len(), m, |r, c| space.basis[c].taylor.coeff(&betas[r]));
    let scale = full.clone().svd(false, false).singular_values.max();
    if scale == 0.0 {
        return Err(CapaxError::IdenticallyZero(RANK_TOL));
    }
    let cutoff = RANK_TOL * scale;

    let mut remaining = DMatrix::<f64>::identity(m, m);
    let mut blocks = Vec::new();
    for k in 0..=degree {
        if remaining.ncols() == 0 {
            break;
        }
        let rows: Vec<usize> = (0..betas.len()).filter(|&r| betas[r].order() == k).collect();
        let ck = DMatrix::from_fn(rows.len(), m, |r, c| full[(rows[r], c)]);
        let (above, below) = split_right_vectors(&(&ck * &remaining), cutoff);
        if above.ncols() > 0 {
            let coefficients = &remaining * &above;
            blocks.push((k, coefficients));
        }
        remaining = &remaining * &below;
    }
    if remaining.ncols() > 0 {
        return Err(CapaxError::InvalidArgument(format!(
            "{} basis combinations vanish to all available Taylor orders",
            remaining.ncols()
        )));
    }
    blocks.reverse();
    Ok(blocks
        .into_iter()
        .map(|(order, coefficients)| {
            let basis = (0..coefficients.ncols())
                .map(|j| combine(&space.basis, coefficients.column(j).as_slice(), format!("E(order {order})[{j}]")))
                .collect();
            OrderBlock { order, coefficients, basis }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    /// Position within the eigenvalue cluster, starting at 1.
    pub index: usize,
    pub exponent: usize,
    pub prefactor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockReport {
    pub order: usize,
    pub dim: usize,
    pub mu: Vec<f64>,
    /// The pairing matrix of the block in its orthonormal basis.
    pub q: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPrediction {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub blocks: Vec<BlockReport>,
    pub branches: Vec<Branch>,
    pub basis_out: Vec<AdmissibleFunction>,
    pub predictions: Vec<ShiftPrediction>,
}

/// Symmetric eigenpairs sorted by ascending eigenvalue.
fn sorted_eigen(q: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = q.nrows();
    let eig = SymmetricEigen::new(q);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

pub fn predict_multiple(space: &EigenSpace, hole: &ExteriorSolver, eps_list: &[f64]) -> Result<EigenPrediction> {
    let blocks = order_decomposition(space)?;
    let mut reports = Vec::new();
    let mut branches = Vec::new();
    let mut basis_out = Vec::new();
    for block in &blocks {
        let parts: Vec<TaylorPoly> = block.basis.iter().map(|f| f.taylor.homogeneous_part(block.order)).collect();
        let d = parts.len();
        let mut q = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let v = hole.frak_c(&parts[a], &parts[b])?;
                q[(a, b)] = v;
                q[(b, a)] = v;
            }
        }
        let (mu, vecs) = sorted_eigen(q.clone());
        if let Some(bad) = mu.iter().find(|m| **m <= 0.0) {
            return Err(CapaxError::InvalidArgument(format!("pairing form is not positive definite (eigenvalue {bad:e})")));
        }
        for (l, m) in mu.iter().enumerate() {
            branches.push(Branch { index: branches.len() + 1, exponent: 2 * block.order + 1, prefactor: *m });
            basis_out.push(combine(&block.basis, vecs.column(l).as_slice(), format!("v{}", branches.len())));
        }
        reports.push(BlockReport {
            order: block.order,
            dim: d,
            mu,
            q: (0..d).map(|r| q.row(r).iter().cloned().collect()).collect(),
        });
    }
    let predictions = eps_list
        .iter()
        .flat_map(|&e| {
            branches.iter().map(move |b| ShiftPrediction {
                epsilon: e,
                branch: b.index,
                value: space.eigenvalue + b.prefactor * e.powi(b.exponent as i32),
            })
        })
        .collect();
    Ok(EigenPrediction {
        eigenvalue: space.eigenvalue,
        multiplicity: space.multiplicity(),
        blocks: reports,
        branches,
        basis_out,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub epsilon: f64,
    pub branch: usize,
    pub predicted_shift: f64,
    pub exact_shift: f64,
    pub relative_error: f64,
}

/// Report layout shared with the command line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub eigenvalue: f64,
    pub multiplicity: usize,
    pub blocks: Vec<ReportBlock>,
    pub predictions: Vec<ShiftPrediction>,
    pub oracle: Option<Vec<OracleRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBlock {
    pub order: usize,
    pub dim: usize,
    pub mu: Vec<f64>,
}

impl EigenPrediction {
    pub fn report(&self, oracle: Option<Vec<OracleRow>>) -> EigenReport {
        EigenReport {
            eigenvalue: self.eigenvalue,
            multiplicity: self.multiplicity,
            blocks: self.blocks.iter().map(|b| ReportBlock { order: b.order, dim: b.dim, mu: b.mu.clone() }).collect(),
            predictions: self.predictions.clone(),
            oracle,
        }
    }
}

// ---------------------------------------------------------------------------
// Spherical Bessel functions and shell eigenvalues

fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

fn check_l(l: usize) -> Result<()> {
    if l > 2 {
        return Err(CapaxError::InvalidArgument(format!("spherical Bessel functions are implemented for l <= 2, got {l}")));
    }
    Ok(())
}

/// `j_l(x) = x^l sum_m (-x^2/2)^m / (m! (2l+2m+1)!!)`, used below `x = 1`.
fn spherical_j_series(l: usize, x: f64) -> f64 {
    let mut term = x.powi(l as i32) / double_factorial(2 * l as i64 + 1);
    let mut sum = term;
    for m in 1..30 {
        term *= -x * x / (2.0 * m as f64 * (2 * l + 2 * m + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

pub fn spherical_j(l: usize, x: f64) -> Result<f64> {
    check_l(l)?;
    if x.abs() < 1.0 {
        return Ok(spherical_j_series(l, x));
    }
    let (s, c) = x.sin_cos();
    Ok(match l {
        0 => s / x,
        1 => s / (x * x) - c / x,
        _ => (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x),
    })
}

pub fn spherical_y(l: usize, x: f64) -> Result<f64> {
    check_l(l)?;
    if x <= 0.0 {
        return Err(CapaxError::InvalidArgument(format!("y_l needs x > 0, got {x}")));
    }
    let (s, c) = x.sin_cos();
    Ok(match l {
        0 => -c / x,
        1 => -c / (x * x) - s / x,
        _ => (-3.0 / (x * x) + 1.0) * c / x - 3.0 * s / (x * x),
    })
}

/// Radial equation of the shell `eps < r < 1`: `j_l(k) y_l(k eps) - j_l(k eps) y_l(k)`.
pub fn shell_cross_product(l: usize, eps: f64, k: f64) -> Result<f64> {
    Ok(spherical_j(l, k)? * spherical_y(l, k * eps)? - spherical_j(l, k * eps)? * spherical_y(l, k)?)
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa * fb > 0.0 {
        return Err(CapaxError::Bracketing(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// `n`-th Dirichlet eigenvalue of angular order `l` on the shell `eps < r < 1`.
pub fn shell_eigenvalue_oracle(eps: f64, l: usize, n: usize) -> Result<f64> {
    check_l(l)?;
    if !(eps > 0.0 && eps < 1.0) || n == 0 {
        return Err(CapaxError::InvalidArgument(format!("need 0 < eps < 1 and n >= 1 (eps = {eps}, n = {n})")));
    }
    let f = |k: f64| shell_cross_product(l, eps, k);
    let spacing = std::f64::consts::PI / (1.0 - eps);
    let step = spacing / 64.0;
    let limit = spacing * (n + l + 4) as f64;
    let mut found = 0;
    let mut a = step;
    let mut fa = f(a)?;
    while a < limit {
        let b = a + step;
        let fb = f(b)?;
        if fa == 0.0 || fa * fb < 0.0 {
            found += 1;
            if found == n {
                let k = if fa == 0.0 { a } else { bisect(f, a, b)? };
                return Ok(k * k);
            }
        }
        a = b;
        fa = fb;
    }
    Err(CapaxError::Bracketing(format!("root {n} of the l = {l} shell equation not found below k = {limit}")))
}

/// First positive zero of `j_l`.
pub fn first_bessel_zero(l: usize) -> Result<f64> {
    check_l(l)?;
    let f = |x: f64| spherical_j(l, x);
    let mut a: f64 = 1.0;
    while f(a)? * f(a + 0.1)? > 0.0 {
        a += 0.1;
        if a > 20.0 {
            return Err(CapaxError::Bracketing("first zero of j_l".into()));
        }
    }
    bisect(f, a, a + 0.1)
}

// ---------------------------------------------------------------------------
// Unit-ball Dirichlet modes as Taylor data at the center

/// `sum_m a_m |x|^{2m}` for `m <= max_m`.
fn radial_poly(coeffs: &[f64]) -> TaylorPoly {
    let mut acc = TaylorPoly::zero(3);
    let mut power = TaylorPoly::constant(3, 1.0);
    for c in coeffs {
        acc = &acc + &power.scaled(*c);
        power = power.times_norm_squared();
    }
    acc
}

/// First mode `sin(pi r) / (r sqrt(2 pi))` (eigenvalue `pi^2`), Taylor degree `2 * max_m`.
pub fn ball_first_mode(max_m: usize) -> AdmissibleFunction {
    let pi = std::f64::consts::PI;
    let norm = 1.0 / (2.0 * pi).sqrt();
    let coeffs: Vec<f64> = (0..=max_m)
        .map(|m| {
            let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
            norm * sgn * pi.powi(2 * m as i32 + 1) / crate::poly::factorial(2 * m + 1)
        })
        .collect();
    AdmissibleFunction::new(radial_poly(&coeffs), "ball mode l=0")
}

/// `(k, c)` for the normalized modes `c j_1(k r) x_i / r` of the second eigenvalue `k^2`.
pub fn ball_l1_constants() -> Result<(f64, f64)> {
    let k = first_bessel_zero(1)?;
    let (x, w) = gauss_legendre_interval(60, 0.0, 1.0);
    let mut int = 0.0;
    for (r, wr) in x.iter().zip(&w) {
        int += wr * spherical_j(1, k * r)?.powi(2) * r * r;
    }
    Ok((k, 1.0 / (4.0 * std::f64::consts::PI / 3.0 * int).sqrt()))
}

/// The three normalized `l = 1` modes, Taylor degree `2 * max_m + 1`.
pub fn ball_l1_modes(max_m: usize) -> Result<Vec<AdmissibleFunction>> {
    let (k, c) = ball_l1_constants()?;
    // j_1(k r)/r = k sum_m (-k^2 r^2/2)^m / (m! (2m+3)!!)
    let mut coeffs = Vec::new();
    let mut term = c * k / 3.0;
    for m in 0..=max_m {
        coeffs.push(term);
        term *= -k * k / (2.0 * (m + 1) as f64 * (2 * m + 5) as f64);
    }
    let radial = radial_poly(&coeffs);
    Ok((0..3).map(|i| AdmissibleFunction::new(radial.times_coordinate(i), format!("ball mode l=1, x{}", i + 1))).collect())
}

// ---------------------------------------------------------------------------
// Fits

/// Least-squares `log y = log(prefactor) + exponent log x`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 || points.iter().any(|(x, y)| *x <= 0.0 || *y <= 0.0) {
        return Err(CapaxError::InvalidArgument("log-log fit needs at least two positive points".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, (my - slope * mx).exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsFit {
    pub points: Vec<(f64, f64)>,
    pub exponent: f64,
    pub prefactor: f64,
    pub expected_exponent: usize,
    pub expected_prefactor: f64,
}

/// Fits `capacity_direct(eps, u, u)` over `eps_list` and compares with the blow-up limit.
pub fn general_capacity_asymptotics_check(
    problem: &HoleProblem,
    hole: &ExteriorSolver,
    u: &AdmissibleFunction,
    eps_list: &[f64],
) -> Result<AsymptoticsFit> {
    let lo = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().cloned().fold(0.0, f64::max);
    if eps_list.len() < 4 || hi < 4.0 * lo {
        return Err(CapaxError::InvalidArgument("need at least 4 epsilon values spanning a factor of 4".into()));
    }
    let points = eps_list
        .iter()
        .map(|&e| Ok((e, problem.capacity_direct(e, &u.taylor, &u.taylor)?)))
        .collect::<Result<Vec<_>>>()?;
    let (exponent, prefactor) = loglog_fit(&points)?;
    let k = vanishing_order(u)?;
    let p = u.taylor.homogeneous_part(k);
    Ok(AsymptoticsFit { points, exponent, prefactor, expected_exponent: 2 * k + 1, expected_prefactor: hole.frak_c(&p, &p)? })
}

//! Fundamental solution of the Laplacian and its multi-index derivatives.
//!
//! With `S_d(x) = 1 / ((2 - d) s_d |x|^(d-2))`, every derivative has the form
//!
//! ```text
//! D^beta S_d(x) = P_beta(x) / ((2 - d) s_d |x|^(d - 2 + 2|beta|))
//! ```
//!
//! where the numerator polynomials obey
//! `P_{beta + e_j} = |x|^2 d_j P_beta - (d - 2 + 2|beta|) x_j P_beta`, `P_0 = 1`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use crate::error::{CapaxError, Result};
use crate::poly::{MultiIndex, TaylorPoly};

/// Distances below this are treated as hitting the kernel singularity.
pub const SINGULARITY_THRESHOLD: f64 = 1e-14;

/// Default cap on derivative order.
pub const DEFAULT_MAX_ORDER: usize = 12;

/// Gamma function for positive half-integers and integers, which is all `s_d` needs.
fn gamma_half_integer(x: f64) -> f64 {
    // x = k/2 for integer k >= 1
    let twice = (2.0 * x).round() as i64;
    debug_assert!(twice >= 1 && ((2.0 * x) - twice as f64).abs() < 1e-12);
    if twice % 2 == 0 {
        (1..(twice / 2)).map(|k| k as f64).product()
    } else {
        // Gamma(n + 1/2) = (2n)! / (4^n n!) sqrt(pi)
        let n = (twice - 1) / 2;
        let mut g = PI.sqrt();
        for k in 0..n {
            g *= k as f64 + 0.5;
        }
        g
    }
}

/// `s_d = 2 pi^(d/2) / Gamma(d/2)`, the (d-1)-measure of the unit sphere in R^d.
pub fn unit_sphere_measure(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(CapaxError::InvalidArgument(format!("dimension d = {d} must be at least 3")));
    }
    let h = d as f64 / 2.0;
    Ok(2.0 * PI.powf(h) / gamma_half_integer(h))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_point(x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r < SINGULARITY_THRESHOLD {
        return Err(CapaxError::Singularity { norm: r, threshold: SINGULARITY_THRESHOLD });
    }
    Ok(r)
}

/// `S_d(x)`.
pub fn fundamental_solution(x: &[f64], d: usize) -> Result<f64> {
    let sd = unit_sphere_measure(d)?;
    let r = check_point(x)?;
    Ok(1.0 / ((2.0 - d as f64) * sd * r.powi(d as i32 - 2)))
}

/// `D^beta S_d` in closed form.
#[derive(Debug, Clone)]
pub struct KernelDerivative {
    pub beta: MultiIndex,
    pub numerator: TaylorPoly,
    /// Exponent of `|x|` in the denominator: `d - 2 + 2|beta|`.
    pub power: i32,
    /// `(2 - d) s_d`.
    pub normalization: f64,
}

impl KernelDerivative {
    pub fn dim(&self) -> usize {
        self.beta.dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let r = check_point(x)?;
        Ok(self.eval_unchecked(x, r))
    }

    /// Evaluates with a precomputed `|x|`; no singularity check.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], r: f64) -> f64 {
        self.numerator.eval(x) / (self.normalization * r.powi(self.power))
    }

    /// Polynomial numerator of `Delta (D^beta S_d)` over `|x|^(power + 2)`; identically zero.
    pub fn laplacian_numerator(&self) -> TaylorPoly {
        let d = self.dim() as f64;
        let p = self.power as f64;
        let lap = self.numerator.laplacian().times_norm_squared();
        let mut radial = TaylorPoly::zero(self.dim());
        for j in 0..self.dim() {
            radial = &radial + &self.numerator.derivative(j).times_coordinate(j);
        }
        let lhs = &lap - &radial.scaled(2.0 * p);
        &lhs + &self.numerator.scaled(p * (p + 2.0 - d))
    }
}

/// Numerator recursion step `P_beta -> P_{beta + e_j}`.
fn differentiate(kd: &KernelDerivative, j: usize) -> KernelDerivative {
    let p = kd.power as f64;
    let term1 = kd.numerator.derivative(j).times_norm_squared();
    let term2 = kd.numerator.times_coordinate(j).scaled(p);
    KernelDerivative {
        beta: kd.beta.plus_unit(j),
        numerator: &term1 - &term2,
        power: kd.power + 2,
        normalization: kd.normalization,
    }
}

/// Memoized table of `D^beta S_d` keyed by `beta`. Safe to share across threads.
#[derive(Debug)]
pub struct KernelCache {
    dim: usize,
    max_order: usize,
    normalization: f64,
    table: RwLock<HashMap<MultiIndex, Arc<KernelDerivative>>>,
}

impl KernelCache {
    pub fn new(dim: usize, max_order: usize) -> Result<Self> {
        let sd = unit_sphere_measure(dim)?;
        Ok(KernelCache {
            dim,
            max_order,
            normalization: (2.0 - dim as f64) * sd,
            table: RwLock::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Fills the table for every `|beta| <= order` so later reads never take the write lock.
    pub fn prepopulate(&self, order: usize) -> Result<()> {
        for b in MultiIndex::up_to(self.dim, order) {
            self.get(&b)?;
        }
        Ok(())
    }

    pub fn get(&self, beta: &MultiIndex) -> Result<Arc<KernelDerivative>> {
        if beta.order() > self.max_order {
            return Err(CapaxError::OrderCap { order: beta.order(), max: self.max_order });
        }
        if let Some(k) = self.table.read().expect("kernel cache poisoned").get(beta) {
            return Ok(k.clone());
        }
        let kd = Arc::new(self.build(beta));
        self.table
            .write()
            .expect("kernel cache poisoned")
            .insert(beta.clone(), kd.clone());
        Ok(kd)
    }

    fn build(&self, beta: &MultiIndex) -> KernelDerivative {
        if beta.order() == 0 {
            return KernelDerivative {
                beta: beta.clone(),
                numerator: TaylorPoly::constant(self.dim, 1.0),
                power: self.dim as i32 - 2,
                normalization: self.normalization,
            };
        }
        // Peel off the last nonzero coordinate; parent comes from the cache.
        let j = (0..self.dim).rev().find(|&j| beta.exponents()[j] > 0).unwrap();
        let mut parent = beta.exponents().to_vec();
        parent[j] -= 1;
        let parent = self.get(&MultiIndex::new(parent)).expect("parent order within cap");
        differentiate(&parent, j)
    }

    /// Gradient of `D^beta S_d`: components are `D^{beta + e_j} S_d`.
    pub fn grad(&self, beta: &MultiIndex, x: &[f64]) -> Result<Vec<f64>> {
        let r = check_point(x)?;
        (0..self.dim)
            .map(|j| Ok(self.get(&beta.plus_unit(j))?.eval_unchecked(x, r)))
            .collect()
    }
}

/// Builds `D^beta S_d` from scratch (no cache).
pub fn kernel_derivative(beta: &MultiIndex, d: usize, max_order: usize) -> Result<KernelDerivative> {
    let cache = KernelCache::new(d, max_order)?;
    Ok((*cache.get(beta)?).clone())
}

pub fn eval_kernel_derivative(kd: &KernelDerivative, x: &[f64]) -> Result<f64> {
    kd.eval(x)
}

/// Gradient of `D^beta S_d` at `x`, by differentiating the numerator once more.
pub fn grad_kernel_derivative(kd: &KernelDerivative, x: &[f64]) -> Result<Vec<f64>> {
    let r = check_point(x)?;
    Ok((0..kd.dim()).map(|j| differentiate(kd, j).eval_unchecked(x, r)).collect())
}

/// 3-D kernels in plain form, used on the hot assembly paths.
pub mod d3 {
    use std::f64::consts::PI;

    pub const INV_4PI: f64 = 1.0 / (4.0 * PI);

    /// `S_3(z) = -1 / (4 pi |z|)`.
    #[inline]
    pub fn s(z: [f64; 3]) -> f64 {
        -INV_4PI / (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt()
    }

    /// `grad S_3(z) = z / (4 pi |z|^3)`.
    #[inline]
    pub fn grad_s(z: [f64; 3]) -> [f64; 3] {
        let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
        let c = INV_4PI / (r2 * r2.sqrt());
        [c * z[0], c * z[1], c * z[2]]
    }
}

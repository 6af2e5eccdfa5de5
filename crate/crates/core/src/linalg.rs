//! Dense LU with a cheap singularity diagnostic.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{CapaxError, Result};

/// Pivot ratios above this are treated as numerically singular.
pub const MAX_PIVOT_RATIO: f64 = 1e13;

#[derive(Debug, Clone)]
pub struct Factored {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pivot_ratio: f64,
}

impl Factored {
    pub fn new(a: DMatrix<f64>, what: &str) -> Result<Self> {
        assert!(a.is_square());
        let lu = a.lu();
        let u = lu.u();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..u.nrows() {
            let d = u[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let pivot_ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !pivot_ratio.is_finite() || pivot_ratio > MAX_PIVOT_RATIO {
            return Err(CapaxError::SingularSystem { what: what.to_string(), cond: pivot_ratio });
        }
        Ok(Factored { lu, pivot_ratio })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(b).expect("factorization checked nonsingular")
    }

    /// Ratio of largest to smallest pivot: a lower bound on the condition number.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }
}

/// Factors and solves once.
pub fn solve_dense(a: DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    Ok(Factored::new(a, what)?.solve(b))
}

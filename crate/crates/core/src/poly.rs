//! Multi-indices and multivariate polynomials stored by Taylor coefficient.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CapaxError, Result};

/// Exponent tuple `beta` in `d` variables. Ordered graded-lexicographically:
/// first by total degree, then by the first exponent descending, and so on.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, j: usize) -> Self {
        let mut e = vec![0; dim];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `beta!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as usize)).product()
    }

    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn plus_unit(&self, j: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[j] += 1;
        MultiIndex(e)
    }

    /// `x^beta`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product()
    }

    /// All multi-indices of total order `j` in `dim` variables, graded-lex order.
    pub fn of_order(dim: usize, j: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; dim];
        fill(dim, 0, j, &mut cur, &mut out);
        out
    }

    /// All multi-indices with order `<= max_order`, graded-lex order.
    pub fn up_to(dim: usize, max_order: usize) -> Vec<MultiIndex> {
        (0..=max_order).flat_map(|j| Self::of_order(dim, j)).collect()
    }
}

fn fill(dim: usize, pos: usize, remaining: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == dim {
        cur[pos] = remaining as u32;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e as u32;
        fill(dim, pos + 1, remaining - e, cur, out);
    }
    cur[pos] = 0;
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Polynomial `sum_beta a_beta x^beta` in `dim` variables.
///
/// Holds admissible functions (as Taylor data `D^beta u(0) / beta!`), their
/// principal parts, and the numerators of kernel derivatives.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorPoly {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl TaylorPoly {
    pub fn zero(dim: usize) -> Self {
        TaylorPoly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    /// The coordinate function `x_j`.
    pub fn coordinate(dim: usize, j: usize) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::unit(dim, j), 1.0);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Self {
        let mut p = Self::zero(dim);
        for (b, c) in terms {
            assert_eq!(b.dim(), dim, "multi-index dimension mismatch");
            p.add_term(b, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_term(&mut self, beta: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        let e = self.terms.entry(beta).or_insert(0.0);
        *e += c;
    }

    pub fn coeff(&self, beta: &MultiIndex) -> f64 {
        self.terms.get(beta).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }

    /// Highest total degree with a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(b, _)| b.order())
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let deg = self.degree();
        let mut pows = vec![1.0; self.dim * (deg + 1)];
        for (i, &xi) in x.iter().enumerate() {
            for e in 1..=deg {
                pows[i * (deg + 1) + e] = pows[i * (deg + 1) + e - 1] * xi;
            }
        }
        self.terms
            .iter()
            .map(|(b, &c)| {
                c * b
                    .exponents()
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| pows[i * (deg + 1) + e as usize])
                    .product::<f64>()
            })
            .sum()
    }

    /// `d/dx_j`.
    pub fn derivative(&self, j: usize) -> TaylorPoly {
        let mut out = Self::zero(self.dim);
        for (b, &c) in &self.terms {
            let e = b.exponents()[j];
            if e > 0 {
                let mut nb = b.exponents().to_vec();
                nb[j] -= 1;
                out.add_term(MultiIndex(nb), c * e as f64);
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<TaylorPoly> {
        (0..self.dim).map(|j| self.derivative(j)).collect()
    }

    pub fn laplacian(&self) -> TaylorPoly {
        let mut out = Self::zero(self.dim);
        for j in 0..self.dim {
            out = &out + &self.derivative(j).derivative(j);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> TaylorPoly {
        let mut out = Self::zero(self.dim);
        for (b, &c) in &self.terms {
            out.add_term(b.clone(), c * s);
        }
        out
    }

    /// Degree-`k` homogeneous slice `u_{#,k}`.
    pub fn homogeneous_part(&self, k: usize) -> TaylorPoly {
        Self::from_terms(
            self.dim,
            self.terms.iter().filter(|(b, _)| b.order() == k).map(|(b, &c)| (b.clone(), c)),
        )
    }

    /// Max-norm of the degree-`k` coefficient block.
    pub fn block_norm(&self, k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(b, _)| b.order() == k)
            .fold(0.0, |m, (_, c)| m.max(c.abs()))
    }

    /// Returns the common degree if the polynomial is homogeneous.
    pub fn homogeneous_degree(&self) -> Result<usize> {
        let mut deg: Option<usize> = None;
        for (b, &c) in &self.terms {
            if c == 0.0 {
                continue;
            }
            match deg {
                None => deg = Some(b.order()),
                Some(d) if d != b.order() => return Err(CapaxError::NotHomogeneous(d, b.order())),
                _ => {}
            }
        }
        Ok(deg.unwrap_or(0))
    }

    /// Multiplies by `|x|^2`.
    pub fn times_norm_squared(&self) -> TaylorPoly {
        let mut out = Self::zero(self.dim);
        for (b, &c) in &self.terms {
            for j in 0..self.dim {
                out.add_term(b.plus_unit(j).plus_unit(j), c);
            }
        }
        out
    }

    /// Multiplies by `x_j`.
    pub fn times_coordinate(&self, j: usize) -> TaylorPoly {
        Self::from_terms(self.dim, self.terms.iter().map(|(b, &c)| (b.plus_unit(j), c)))
    }

    /// Removes coefficients with magnitude `<= tol`.
    pub fn pruned(&self, tol: f64) -> TaylorPoly {
        Self::from_terms(
            self.dim,
            self.terms.iter().filter(|(_, &c)| c.abs() > tol).map(|(b, &c)| (b.clone(), c)),
        )
    }
}

impl std::ops::Add for &TaylorPoly {
    type Output = TaylorPoly;
    fn add(self, rhs: &TaylorPoly) -> TaylorPoly {
        let mut out = self.clone();
        for (b, &c) in &rhs.terms {
            out.add_term(b.clone(), c);
        }
        out
    }
}

impl std::ops::Sub for &TaylorPoly {
    type Output = TaylorPoly;
    fn sub(self, rhs: &TaylorPoly) -> TaylorPoly {
        self + &rhs.scaled(-1.0)
    }
}

impl std::ops::Mul for &TaylorPoly {
    type Output = TaylorPoly;
    fn mul(self, rhs: &TaylorPoly) -> TaylorPoly {
        let mut out = TaylorPoly::zero(self.dim);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                out.add_term(a.plus(b), ca * cb);
            }
        }
        out
    }
}

impl fmt::Debug for TaylorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|(b, c)| format!("{c:+e}*x^{b:?}")).collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn enumeration_is_complete_and_graded_lex() {
        for d in 1..=4 {
            for j in 0..=6 {
                let all = MultiIndex::of_order(d, j);
                assert_eq!(all.len() as f64, binomial(j + d - 1, d - 1));
                let mut sorted = all.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted, all, "d={d} j={j}");
            }
        }
        let o2 = MultiIndex::of_order(3, 2);
        assert_eq!(o2[0].exponents(), &[2, 0, 0]);
        assert_eq!(o2[1].exponents(), &[1, 1, 0]);
        assert_eq!(o2[5].exponents(), &[0, 0, 2]);
    }

    #[test]
    fn homogeneous_slices_and_derivatives() {
        let p = TaylorPoly::from_terms(
            3,
            [
                (MultiIndex::new(vec![0, 0, 0]), 3.0),
                (MultiIndex::new(vec![1, 0, 0]), 1.0),
                (MultiIndex::new(vec![1, 1, 0]), 2.0),
            ],
        );
        assert_eq!(p.degree(), 2);
        assert_eq!(p.homogeneous_part(0).eval(&[5.0, 5.0, 5.0]), 3.0);
        let dx = p.derivative(0);
        assert_eq!(dx.eval(&[0.0, 2.0, 0.0]), 5.0);
        assert!(p.homogeneous_degree().is_err());
        assert_eq!(p.homogeneous_part(2).homogeneous_degree().unwrap(), 2);
    }

    proptest! {
        #[test]
        fn product_evaluates_pointwise(
            ca in proptest::collection::vec(-2.0f64..2.0, 10),
            cb in proptest::collection::vec(-2.0f64..2.0, 10),
            x in proptest::array::uniform3(-1.5f64..1.5),
        ) {
            let basis = MultiIndex::up_to(3, 2);
            let a = TaylorPoly::from_terms(3, basis.iter().cloned().zip(ca));
            let b = TaylorPoly::from_terms(3, basis.iter().cloned().zip(cb));
            let lhs = (&a * &b).eval(&x);
            let rhs = a.eval(&x) * b.eval(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}

//! Sparse multivariate polynomials over `ℝ[X_1, …, X_d]`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub type Exponent = Vec<u32>;

/// Polynomial stored as a map from exponent multi-index to coefficient.
/// Zero coefficients are never stored.
#[derive(Clone, PartialEq, Default)]
pub struct MultiPoly {
    d: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl MultiPoly {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: f64) -> Self {
        let mut p = Self::zero(d);
        p.add_term(vec![0; d], c);
        p
    }

    /// The coordinate `X_i`.
    pub fn variable(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::IndexOutOfRange { index: i, d });
        }
        let mut e = vec![0; d];
        e[i] = 1;
        let mut p = Self::zero(d);
        p.add_term(e, 1.0);
        Ok(p)
    }

    pub fn monomial(exponent: Exponent, c: f64) -> Self {
        let mut p = Self::zero(exponent.len());
        p.add_term(exponent, c);
        p
    }

    /// `r² = X_1² + … + X_d²`.
    pub fn r2(d: usize) -> Self {
        let mut p = Self::zero(d);
        for i in 0..d {
            let mut e = vec![0; d];
            e[i] = 2;
            p.add_term(e, 1.0);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponent, f64)>>(d: usize, terms: I) -> Result<Self> {
        let mut p = Self::zero(d);
        for (e, c) in terms {
            if e.len() != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Exponent, c: f64) {
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &[u32]) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    /// Largest total degree among stored terms; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|e| total(e)).max()
    }

    /// `Some(degree)` when every term has the same total degree. The zero
    /// polynomial is homogeneous of degree 0 here.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut degs = self.terms.keys().map(|e| total(e));
        match degs.next() {
            None => Some(0),
            Some(first) => degs.all(|g| g == first).then_some(first),
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops coefficients with `|c| ≤ tol · max|c|`.
    pub fn pruned(mut self, rel_tol: f64) -> Self {
        let cut = rel_tol * self.max_abs_coefficient();
        self.terms.retain(|_, c| c.abs() > cut);
        self
    }

    pub fn scale(&self, s: f64) -> Self {
        if s == 0.0 {
            return Self::zero(self.d);
        }
        Self {
            d: self.d,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            Err(Error::DimensionMismatch {
                left: self.d,
                right: other.d,
            })
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -*c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zero(self.d);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    /// `∂p/∂X_i`.
    pub fn partial(&self, i: usize) -> Result<Self> {
        if i >= self.d {
            return Err(Error::IndexOutOfRange {
                index: i,
                d: self.d,
            });
        }
        let mut out = Self::zero(self.d);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut ne = e.clone();
                ne[i] -= 1;
                out.add_term(ne, c * e[i] as f64);
            }
        }
        Ok(out)
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.d)
            .map(|i| self.partial(i).expect("index in range"))
            .collect()
    }

    /// `∇²p = Σ_i ∂_i² p`.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.d);
        for (e, c) in &self.terms {
            for i in 0..self.d {
                if e[i] >= 2 {
                    let mut ne = e.clone();
                    ne[i] -= 2;
                    out.add_term(ne, c * (e[i] * (e[i] - 1)) as f64);
                }
            }
        }
        out
    }

    /// `r^{2k} p`.
    pub fn times_r2_power(&self, k: usize) -> Self {
        let r2 = Self::r2(self.d);
        (0..k).fold(self.clone(), |acc, _| &acc * &r2)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                left: self.d,
                right: x.len(),
            });
        }
        let table = PowerTable::new(x, self.degree().unwrap_or(0));
        Ok(self.eval_with(&table))
    }

    /// Evaluation against precomputed powers of the point.
    pub fn eval_with(&self, table: &PowerTable) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| table.pow(i, k))
                    .product::<f64>()
            })
            .sum()
    }

    /// Coefficient-wise maximum difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for (e, c) in &self.terms {
            m = m.max((c - other.coefficient(e)).abs());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                m = m.max(c.abs());
            }
        }
        m
    }
}

/// Flattened form of a [`MultiPoly`] for repeated evaluation: each term
/// keeps only its nonzero exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    pub fn new(p: &MultiPoly) -> Self {
        let terms = p
            .terms
            .iter()
            .map(|(e, &c)| {
                (
                    c,
                    e.iter()
                        .enumerate()
                        .filter(|(_, &k)| k > 0)
                        .map(|(i, &k)| (i, k))
                        .collect(),
                )
            })
            .collect();
        Self { terms }
    }

    #[inline]
    pub fn eval_with(&self, table: &PowerTable) -> f64 {
        self.terms
            .iter()
            .map(|(c, vars)| vars.iter().fold(*c, |acc, &(i, k)| acc * table.pow(i, k)))
            .sum()
    }
}

fn total(e: &[u32]) -> usize {
    e.iter().map(|&k| k as usize).sum()
}

/// `x_i^k` for `k ≤ max_degree`.
#[derive(Debug, Clone)]
pub struct PowerTable {
    stride: usize,
    data: Vec<f64>,
}

impl PowerTable {
    pub fn new(x: &[f64], max_degree: usize) -> Self {
        let stride = max_degree + 1;
        let mut data = vec![1.0; x.len() * stride];
        for (i, &xi) in x.iter().enumerate() {
            for k in 1..stride {
                data[i * stride + k] = data[i * stride + k - 1] * xi;
            }
        }
        Self { stride, data }
    }

    #[inline]
    pub fn pow(&self, i: usize, k: u32) -> f64 {
        let k = k as usize;
        if k < self.stride {
            self.data[i * self.stride + k]
        } else {
            self.data[i * self.stride + 1].powi(k as i32)
        }
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultiPoly(d={}; ", self.d)?;
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (n, (e, c)) in self.terms.iter().rev().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{}", i + 1, k)?,
                }
            }
        }
        write!(f, ")")
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&MultiPoly> for &MultiPoly {
            type Output = MultiPoly;

            /// Panics on a dimension mismatch; see the `checked_*` variants.
            fn $method(self, rhs: &MultiPoly) -> MultiPoly {
                self.$checked(rhs).expect("polynomial dimensions differ")
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &MultiPoly {
    type Output = MultiPoly;

    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

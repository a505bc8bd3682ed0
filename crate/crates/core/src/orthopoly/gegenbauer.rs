//! Zonal polynomials `P_l` on `[−√d, √d]`, orthonormal under the
//! single-coordinate density and normalized so that `P_l(√d) = √đ_l`.

use super::quadrature::{CoordinateQuadrature, DEFAULT_NODES};
use crate::error::{Error, Result};

/// Default ceiling on the basis degree; beyond it the discretized
/// recurrence slowly loses digits.
pub const DEFAULT_LMAX_CEILING: usize = 64;

fn binomial(n: i64, k: i64) -> Option<u128> {
    if k < 0 || n < k {
        return Some(0);
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Dimension `đ_l` of degree-`l` spherical harmonics in `d` variables.
pub fn harmonic_dim(d: usize, l: usize) -> Result<u64> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: d });
    }
    let (d, l) = (d as i64, l as i64);
    let big = binomial(d + l - 1, d - 1);
    let small = binomial(d + l - 3, d - 1);
    match (big, small) {
        (Some(b), Some(s)) => u64::try_from(b - s)
            .map_err(|_| Error::InvalidParameter(format!("đ_{l} overflows for d = {d}"))),
        _ => Err(Error::InvalidParameter(format!(
            "đ_{l} overflows for d = {d}"
        ))),
    }
}

/// Value and the two recurrence-differentiated derivatives of `P_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// `P_l'(√d)` two ways: the ODE identity `l(l+d−2)/((d−1)√d)·√đ_l` and the
/// differentiated recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootDerivative {
    pub analytic: f64,
    pub recurrence: f64,
}

impl RootDerivative {
    pub fn relative_gap(&self) -> f64 {
        (self.analytic - self.recurrence).abs() / self.analytic.abs().max(f64::MIN_POSITIVE)
    }
}

/// Orthonormal recurrence `t P_k = b_{k+1} P_{k+1} + α_k P_k + b_k P_{k−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GegenbauerBasis {
    d: usize,
    lmax: usize,
    alpha: Vec<f64>,
    /// `b[k]` couples degrees `k − 1` and `k`; `b[0]` is unused and zero.
    b: Vec<f64>,
    values_at_root: Vec<f64>,
    quadrature: CoordinateQuadrature,
}

impl GegenbauerBasis {
    /// Stieltjes procedure against the coordinate quadrature.
    pub fn new(d: usize, lmax: usize) -> Result<Self> {
        let nodes = DEFAULT_NODES.max(4 * (lmax + 1) + d);
        let quadrature = CoordinateQuadrature::new(d, nodes)?;
        Self::with_quadrature(quadrature, lmax)
    }

    pub fn with_quadrature(quadrature: CoordinateQuadrature, lmax: usize) -> Result<Self> {
        let d = quadrature.d;
        if quadrature.len() < 2 * lmax + 2 {
            return Err(Error::QuadratureTooSmall {
                nodes: quadrature.len(),
                required: 2 * lmax + 2,
            });
        }
        let t = quadrature.nodes();
        let w = quadrature.weights();
        let mass: f64 = w.iter().sum();
        let mut prev = vec![0.0; t.len()];
        let mut cur = vec![mass.sqrt().recip(); t.len()];
        let mut alpha = Vec::with_capacity(lmax + 1);
        let mut b = vec![0.0];
        for k in 0..=lmax {
            let a: f64 = (0..t.len()).map(|i| w[i] * t[i] * cur[i] * cur[i]).sum();
            alpha.push(a);
            if k == lmax {
                break;
            }
            let next: Vec<f64> = (0..t.len())
                .map(|i| (t[i] - a) * cur[i] - b[k] * prev[i])
                .collect();
            let beta: f64 = (0..t.len()).map(|i| w[i] * next[i] * next[i]).sum();
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::RecurrenceBreakdown {
                    degree: k + 1,
                    value: beta,
                });
            }
            let bk = beta.sqrt();
            b.push(bk);
            prev = cur;
            cur = next.into_iter().map(|v| v / bk).collect();
        }
        let mut basis = Self {
            d,
            lmax,
            alpha,
            b,
            values_at_root: Vec::new(),
            quadrature,
        };
        basis.values_at_root = basis.eval_all((d as f64).sqrt());
        Ok(basis)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn quadrature(&self) -> &CoordinateQuadrature {
        &self.quadrature
    }

    /// Recurrence coefficients `(α_k, b_k)`.
    pub fn recurrence(&self) -> (&[f64], &[f64]) {
        (&self.alpha, &self.b)
    }

    pub fn values_at_root(&self) -> &[f64] {
        &self.values_at_root
    }

    fn check(&self, l: usize) -> Result<()> {
        if l > self.lmax {
            Err(Error::DegreeOutOfRange {
                degree: l,
                lmax: self.lmax,
            })
        } else {
            Ok(())
        }
    }

    pub fn eval(&self, l: usize, t: f64) -> Result<f64> {
        self.check(l)?;
        Ok(self.eval_upto(l, t)[l])
    }

    /// `P_0(t), …, P_lmax(t)`.
    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        self.eval_upto(self.lmax, t)
    }

    fn eval_upto(&self, l: usize, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(l + 1);
        let mut prev = 0.0;
        let mut cur = self.values_unit();
        out.push(cur);
        for k in 0..l {
            let next = ((t - self.alpha[k]) * cur - self.b[k] * prev) / self.b[k + 1];
            prev = cur;
            cur = next;
            out.push(cur);
        }
        out
    }

    /// Monomial coefficients of `P_0, …, P_l`, lowest degree first.
    pub fn monomial_coefficients(&self, l: usize) -> Result<Vec<Vec<f64>>> {
        self.check(l)?;
        let mut out = vec![vec![self.values_unit()]];
        let mut prev = vec![0.0];
        for k in 0..l {
            let cur = &out[k];
            let mut next = vec![0.0; k + 2];
            for (i, c) in cur.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= self.alpha[k] * c;
            }
            for (i, c) in prev.iter().enumerate() {
                next[i] -= self.b[k] * c;
            }
            next.iter_mut().for_each(|c| *c /= self.b[k + 1]);
            prev = cur.clone();
            out.push(next);
        }
        Ok(out)
    }

    fn values_unit(&self) -> f64 {
        let mass: f64 = self.quadrature.weights().iter().sum();
        mass.sqrt().recip()
    }

    pub fn jet(&self, l: usize, t: f64) -> Result<Jet> {
        self.check(l)?;
        let (mut p0, mut d0, mut s0) = (0.0, 0.0, 0.0);
        let (mut p1, mut d1, mut s1) = (self.values_unit(), 0.0, 0.0);
        for k in 0..l {
            let (a, bk, bn) = (self.alpha[k], self.b[k], self.b[k + 1]);
            let p2 = ((t - a) * p1 - bk * p0) / bn;
            let d2 = ((t - a) * d1 + p1 - bk * d0) / bn;
            let s2 = ((t - a) * s1 + 2.0 * d1 - bk * s0) / bn;
            (p0, d0, s0) = (p1, d1, s1);
            (p1, d1, s1) = (p2, d2, s2);
        }
        Ok(Jet {
            value: p1,
            first: d1,
            second: s1,
        })
    }

    /// Residual of `(d − t²)P'' − (d − 1)t P' + l(l + d − 2)P` at `t`.
    pub fn ode_residual(&self, l: usize, t: f64) -> Result<f64> {
        let jet = self.jet(l, t)?;
        let df = self.d as f64;
        let lf = l as f64;
        Ok((df - t * t) * jet.second - (df - 1.0) * t * jet.first
            + lf * (lf + df - 2.0) * jet.value)
    }

    pub fn derivative_at_root(&self, l: usize) -> Result<RootDerivative> {
        if l == 0 {
            return Err(Error::InvalidParameter(
                "derivative at the root needs l >= 1".into(),
            ));
        }
        let df = self.d as f64;
        let lf = l as f64;
        let dim = harmonic_dim(self.d, l)? as f64;
        let analytic = lf * (lf + df - 2.0) / ((df - 1.0) * df.sqrt()) * dim.sqrt();
        let recurrence = self.jet(l, df.sqrt())?.first;
        Ok(RootDerivative {
            analytic,
            recurrence,
        })
    }

    /// `⟨P_l, P_l'⟩` under the density, by the basis quadrature.
    pub fn inner(&self, l: usize, lp: usize) -> Result<f64> {
        self.check(l.max(lp))?;
        let top = l.max(lp);
        Ok(self.quadrature.integrate(|t| {
            let v = self.eval_upto(top, t);
            v[l] * v[lp]
        }))
    }
}

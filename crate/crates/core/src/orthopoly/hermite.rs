//! Orthonormal probabilists' Hermite polynomials and the closed-form
//! Hermite coefficients of ReLU and erf.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermiteBasis {
    pub lmax: usize,
}

impl HermiteBasis {
    pub fn new(lmax: usize) -> Self {
        Self { lmax }
    }

    pub fn eval(&self, l: usize, x: f64) -> Result<f64> {
        if l > self.lmax {
            return Err(Error::DegreeOutOfRange {
                degree: l,
                lmax: self.lmax,
            });
        }
        Ok(hermite_values(l, x)[l])
    }

    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        hermite_values(self.lmax, x)
    }
}

/// `h_0(x), …, h_l(x)` via `h_{k+1} = (x h_k − √k h_{k−1}) / √(k+1)`.
pub fn hermite_values(l: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l + 1);
    out.push(1.0);
    if l == 0 {
        return out;
    }
    out.push(x);
    for k in 1..l {
        let kf = k as f64;
        let next = (x * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
        out.push(next);
    }
    out
}

/// Monomial coefficients of `h_0, …, h_l`.
pub fn hermite_monomials(l: usize) -> Vec<Vec<f64>> {
    let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
    if l == 0 {
        return polys;
    }
    polys.push(vec![0.0, 1.0]);
    for k in 1..l {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (i, &c) in polys[k].iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &c) in polys[k - 1].iter().enumerate() {
            next[i] -= kf.sqrt() * c;
        }
        let s = (kf + 1.0).sqrt();
        next.iter_mut().for_each(|c| *c /= s);
        polys.push(next);
    }
    polys
}

/// Hermite coefficients of ReLU: `a_0 = 1/√(2π)`, `a_1 = 1/2`, and for even
/// `l ≥ 2`, `a_l = (−1)^{l/2−1} √(l!) / (√(2π) (l/2)! 2^{l/2} (l − 1))`.
pub fn relu_hermite_coeffs(lmax: usize) -> Vec<f64> {
    (0..=lmax)
        .map(|l| match l {
            0 => (2.0 * PI).sqrt().recip(),
            1 => 0.5,
            _ if l % 2 == 1 => 0.0,
            _ => {
                let lf = l as f64;
                let half = lf / 2.0;
                let sign = if (l / 2 - 1) % 2 == 0 { 1.0 } else { -1.0 };
                let log_mag = 0.5 * libm::lgamma(lf + 1.0)
                    - libm::lgamma(half + 1.0)
                    - half * std::f64::consts::LN_2;
                sign * log_mag.exp() / ((2.0 * PI).sqrt() * (lf - 1.0))
            }
        })
        .collect()
}

/// Hermite coefficients of erf: zero for even `l`, and for odd `l`
/// `a_l = 2(−1)^{(l−1)/2} √((l−1)!) / (√(πl) √3^l ((l−1)/2)!)`.
pub fn erf_hermite_coeffs(lmax: usize) -> Vec<f64> {
    (0..=lmax)
        .map(|l| {
            if l % 2 == 0 {
                return 0.0;
            }
            let lf = l as f64;
            let half = (lf - 1.0) / 2.0;
            let sign = if ((l - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let log_mag = 0.5 * libm::lgamma(lf) - libm::lgamma(half + 1.0) - 0.5 * lf * 3f64.ln();
            2.0 * sign * log_mag.exp() / (PI * lf).sqrt()
        })
        .collect()
}

/// `Σ_{l > k} a_l²` for ReLU, summing even `l` up to 10⁶ with the ratio
/// `a_{l+2}²/a_l² = (l−1)²/((l+1)(l+2))` and closing with the asymptotic
/// `a_l² ≈ l^{−5/2}/(π√(2π))` remainder.
pub(crate) fn relu_tail(k: usize) -> f64 {
    const LAST: usize = 1_000_000;
    let mut tail = 0.0;
    if k == 0 {
        tail += 0.25;
    }
    let mut l = 2usize;
    let mut sq = 1.0 / (4.0 * PI);
    let mut parts = Vec::new();
    while l <= LAST {
        if l > k {
            parts.push(sq);
        }
        let lf = l as f64;
        sq *= (lf - 1.0) * (lf - 1.0) / ((lf + 1.0) * (lf + 2.0));
        l += 2;
    }
    // smallest terms first
    tail += parts.iter().rev().sum::<f64>();
    let c = 1.0 / (PI * (2.0 * PI).sqrt());
    let start = (LAST.max(k) + 1) as f64;
    tail + c / 3.0 * start.powf(-1.5)
}

/// `Σ_{l > k} a_l²` for erf via `a_{l+2}²/a_l² = 4l²/(9(l+1)(l+2))`.
pub(crate) fn erf_tail(k: usize) -> f64 {
    let mut l = 1usize;
    let mut sq = 4.0 / (3.0 * PI);
    let mut parts = Vec::new();
    loop {
        if l > k {
            parts.push(sq);
            if sq < 1e-300 || (parts.len() > 4 && sq < 1e-20 * parts[0]) {
                break;
            }
        }
        let lf = l as f64;
        sq *= 4.0 * lf * lf / (9.0 * (lf + 1.0) * (lf + 2.0));
        l += 2;
    }
    parts.iter().rev().sum()
}

/// `E[erf(N)²] = (2/π) arcsin(2/3)`.
pub fn erf_gaussian_second_moment() -> f64 {
    2.0 / PI * (2.0f64 / 3.0).asin()
}

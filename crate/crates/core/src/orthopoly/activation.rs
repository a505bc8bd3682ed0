//! Activations and their Gegenbauer/Hermite expansions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::gegenbauer::GegenbauerBasis;
use super::hermite::{
    erf_hermite_coeffs, erf_tail, hermite_monomials, hermite_values, relu_hermite_coeffs, relu_tail,
};
use super::quadrature::{gauss_hermite, CoordinateQuadrature};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    /// Monomial coefficients `c_0 + c_1 t + …`, trailing coefficient nonzero
    /// (the empty vector is the zero function).
    Polynomial(Vec<f64>),
    Relu,
    Erf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSpec {
    pub kind: Activation,
    /// Subtract the degree-0 Gegenbauer mode `E[φ(x₁)]`.
    pub centered: bool,
}

impl ActivationSpec {
    pub fn polynomial(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coeffs = coeffs.into();
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidActivation(format!(
                "non-finite coefficient {bad}"
            )));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Ok(Self {
            kind: Activation::Polynomial(coeffs),
            centered: false,
        })
    }

    pub fn relu() -> Self {
        Self {
            kind: Activation::Relu,
            centered: false,
        }
    }

    pub fn erf() -> Self {
        Self {
            kind: Activation::Erf,
            centered: false,
        }
    }

    /// The polynomial `Σ_{l ≤ k} a_l h_l` from Hermite coefficients.
    pub fn hermite_truncation(coeffs: &[f64]) -> Result<Self> {
        let Some(top) = coeffs.len().checked_sub(1) else {
            return Self::polynomial(Vec::new());
        };
        let polys = hermite_monomials(top);
        let mut mono = vec![0.0; top + 1];
        for (a, p) in coeffs.iter().zip(&polys) {
            for (i, c) in p.iter().enumerate() {
                mono[i] += a * c;
            }
        }
        Self::polynomial(mono)
    }

    /// The polynomial `Σ_{l ≤ k} φ̂_l P_l` from Gegenbauer coefficients.
    pub fn gegenbauer_truncation(basis: &GegenbauerBasis, coeffs: &[f64]) -> Result<Self> {
        let Some(top) = coeffs.len().checked_sub(1) else {
            return Self::polynomial(Vec::new());
        };
        let polys = basis.monomial_coefficients(top)?;
        let mut mono = vec![0.0; top + 1];
        for (a, p) in coeffs.iter().zip(&polys) {
            for (i, c) in p.iter().enumerate() {
                mono[i] += a * c;
            }
        }
        Self::polynomial(mono)
    }

    pub fn centered(mut self, centered: bool) -> Self {
        self.centered = centered;
        self
    }

    pub fn degree(&self) -> Option<usize> {
        match &self.kind {
            Activation::Polynomial(c) => Some(c.len().saturating_sub(1)),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.kind, Activation::Polynomial(c) if c.is_empty())
    }

    /// `φ(t)` without centering.
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            Activation::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci),
            Activation::Relu => t.max(0.0),
            Activation::Erf => libm::erf(t),
        }
    }

    /// `φ'(t)`; ReLU uses the indicator of `t > 0`.
    pub fn derivative(&self, t: f64) -> f64 {
        match &self.kind {
            Activation::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, &ci)| acc * t + i as f64 * ci),
            Activation::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Erf => 2.0 / PI.sqrt() * (-t * t).exp(),
        }
    }

    /// Offset subtracted by centering in dimension `d`: `E[φ(x₁)]` or zero.
    pub fn centering_offset(&self, d: usize) -> Result<f64> {
        if !self.centered {
            return Ok(0.0);
        }
        let q = CoordinateQuadrature::with_default_nodes(d)?;
        Ok(q.integrate(|t| self.eval(t)))
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Activation::Relu => write!(f, "relu")?,
            Activation::Erf => write!(f, "erf")?,
            Activation::Polynomial(c) => {
                write!(f, "poly:")?;
                if c.is_empty() {
                    write!(f, "0")?;
                }
                for (i, v) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
            }
        }
        if self.centered {
            write!(f, "+centered")?;
        }
        Ok(())
    }
}

impl FromStr for ActivationSpec {
    type Err = Error;

    /// `relu`, `erf` or `poly:c0,c1,...`, optionally suffixed with `+centered`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, centered) = match s.strip_suffix("+centered") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let spec = match body {
            "relu" => Self::relu(),
            "erf" => Self::erf(),
            _ => {
                let Some(list) = body.strip_prefix("poly:") else {
                    return Err(Error::InvalidActivation(format!(
                        "unknown activation `{s}`"
                    )));
                };
                let coeffs = list
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidActivation(format!("bad coefficient `{c}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::polynomial(coeffs)?
            }
        };
        Ok(spec.centered(centered))
    }
}

/// Coefficients of an activation in both bases.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationExpansion {
    pub spec: ActivationSpec,
    pub d: usize,
    /// `φ̂_l`, `l = 0..=truncation_degree`; `φ̂_0 = 0` when centered.
    pub gegenbauer: Vec<f64>,
    /// `a_l` of the (centered, if requested) activation.
    pub hermite: Vec<f64>,
    pub truncation_degree: usize,
    /// Degree-0 mode removed by centering (zero otherwise).
    pub constant_mode: f64,
}

impl ActivationExpansion {
    /// `Σ_l φ̂_l²` over the stored coefficients.
    pub fn l2_norm_squared(&self) -> f64 {
        self.gegenbauer.iter().map(|c| c * c).sum()
    }

    pub fn is_centered(&self) -> bool {
        self.gegenbauer.first().is_none_or(|c| *c == 0.0)
    }

    /// CSV rows `(l, φ̂_l, a_l)`.
    pub fn rows(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.gegenbauer
            .iter()
            .zip(&self.hermite)
            .enumerate()
            .map(|(l, (g, h))| (l, *g, *h))
    }
}

/// Raw `φ̂_l = ∫ φ P_l ξ` for `l ≤ basis.lmax()`, uncentered.
pub fn expand_activation_gegenbauer(
    spec: &ActivationSpec,
    basis: &GegenbauerBasis,
) -> Result<Vec<f64>> {
    let q = basis.quadrature();
    let required = 2 * basis.lmax() + spec.degree().unwrap_or(0) + 2;
    if q.len() < required {
        return Err(Error::QuadratureTooSmall {
            nodes: q.len(),
            required,
        });
    }
    let mut coeffs = vec![0.0; basis.lmax() + 1];
    for (&t, &w) in q.nodes().iter().zip(q.weights()) {
        let f = w * spec.eval(t);
        for (c, p) in coeffs.iter_mut().zip(basis.eval_all(t)) {
            *c += f * p;
        }
    }
    Ok(coeffs)
}

/// Hermite coefficients `a_0..=a_lmax` of the uncentered activation.
pub fn hermite_coeffs(spec: &ActivationSpec, lmax: usize) -> Vec<f64> {
    match &spec.kind {
        Activation::Relu => relu_hermite_coeffs(lmax),
        Activation::Erf => erf_hermite_coeffs(lmax),
        Activation::Polynomial(c) => {
            let deg = c.len().saturating_sub(1);
            let rule = gauss_hermite(deg + lmax + 2);
            let mut out = vec![0.0; lmax + 1];
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let f = w * spec.eval(x);
                for (a, h) in out.iter_mut().zip(hermite_values(lmax, x)) {
                    *a += f * h;
                }
            }
            // exact zeros above the degree
            out.iter_mut().skip(deg + 1).for_each(|a| *a = 0.0);
            out
        }
    }
}

/// Expansion in both bases up to degree `lmax`.
pub fn expand_activation(
    spec: &ActivationSpec,
    d: usize,
    lmax: usize,
) -> Result<ActivationExpansion> {
    if let Some(deg) = spec.degree() {
        if lmax < deg {
            return Err(Error::InvalidParameter(format!(
                "lmax {lmax} is below the polynomial degree {deg}"
            )));
        }
    }
    let basis = GegenbauerBasis::new(d, lmax)?;
    expand_activation_with_basis(spec, &basis)
}

pub fn expand_activation_with_basis(
    spec: &ActivationSpec,
    basis: &GegenbauerBasis,
) -> Result<ActivationExpansion> {
    let mut gegenbauer = expand_activation_gegenbauer(spec, basis)?;
    let mut hermite = hermite_coeffs(spec, basis.lmax());
    let constant_mode = if spec.centered {
        let c = gegenbauer[0];
        gegenbauer[0] = 0.0;
        hermite[0] -= c;
        c
    } else {
        0.0
    };
    if let Some(deg) = spec.degree() {
        gegenbauer.iter_mut().skip(deg + 1).for_each(|c| *c = 0.0);
    }
    Ok(ActivationExpansion {
        spec: spec.clone(),
        d: basis.d(),
        gegenbauer,
        hermite,
        truncation_degree: basis.lmax(),
        constant_mode,
    })
}

/// `E[(φ(x₁) − offset)²]` for `x ~ √d·U(S^{d−1})`, offset from centering.
pub fn coordinate_second_moment(spec: &ActivationSpec, d: usize) -> Result<f64> {
    let q = CoordinateQuadrature::with_default_nodes(d)?;
    let offset = if spec.centered {
        q.integrate(|t| spec.eval(t))
    } else {
        0.0
    };
    Ok(q.integrate(|t| {
        let v = spec.eval(t) - offset;
        v * v
    }))
}

/// `E[φ'(N(0,1))²]`.
pub fn gaussian_deriv_moment(spec: &ActivationSpec) -> f64 {
    match &spec.kind {
        Activation::Relu => 0.5,
        Activation::Erf => 4.0 / (PI * 5f64.sqrt()),
        Activation::Polynomial(c) => {
            let rule = gauss_hermite(c.len() + 1);
            rule.integrate(|x| spec.derivative(x).powi(2))
        }
    }
}

/// A computed `L²` tail with the matching analytic bound, when one exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    pub k: usize,
    pub computed: f64,
    pub bound: Option<f64>,
}

impl TailReport {
    pub fn within_bound(&self) -> Option<bool> {
        self.bound.map(|b| self.computed <= b)
    }
}

/// Analytic tail bound: `(2/21)k^{−3/2}` (ReLU, `k ≥ 1`) or `2(2/3)^k` (erf).
fn hermite_tail_bound(spec: &ActivationSpec, k: usize) -> Option<f64> {
    let kf = k as f64;
    match &spec.kind {
        Activation::Relu => (k >= 1).then(|| 2.0 / 21.0 * kf.powf(-1.5)),
        Activation::Erf => Some(2.0 * (2.0f64 / 3.0).powi(k as i32)),
        Activation::Polynomial(c) => (k + 1 >= c.len()).then_some(0.0),
    }
}

/// `Σ_{l>k} a_l²` together with the analytic bound when one exists.
pub fn hermite_tail_l2(spec: &ActivationSpec, k: usize) -> TailReport {
    let computed = match &spec.kind {
        Activation::Relu => relu_tail(k),
        Activation::Erf => erf_tail(k),
        Activation::Polynomial(c) => {
            let deg = c.len().saturating_sub(1);
            if k >= deg {
                0.0
            } else {
                hermite_coeffs(spec, deg)[k + 1..]
                    .iter()
                    .map(|v| v * v)
                    .sum()
            }
        }
    };
    TailReport {
        k,
        computed,
        bound: hermite_tail_bound(spec, k),
    }
}

/// `Σ_{l>k} φ̂_l²` by the Parseval complement, with bound `5·(Hermite bound)`
/// from `ξ(t) ≤ 5/√(2π)·e^{−t²/2}` (valid for `d ≥ 3`).
pub fn gegenbauer_tail_l2(spec: &ActivationSpec, d: usize, k: usize) -> Result<TailReport> {
    let hermite_bound = hermite_tail_l2(spec, k).bound;
    let bound = if d >= 3 {
        hermite_bound.map(|b| 5.0 * b)
    } else {
        None
    };
    if matches!(spec.degree(), Some(deg) if k >= deg) {
        return Ok(TailReport {
            k,
            computed: 0.0,
            bound: Some(0.0),
        });
    }
    let raw = spec.clone().centered(false);
    let basis = GegenbauerBasis::new(d, k)?;
    let coeffs = expand_activation_gegenbauer(&raw, &basis)?;
    let total = coordinate_second_moment(&raw, d)?;
    let head: f64 = coeffs.iter().map(|c| c * c).sum();
    Ok(TailReport {
        k,
        computed: (total - head).max(0.0),
        bound,
    })
}

/// Smallest `k₀ ≥ 1` such that the Hermite tail is within its analytic bound
/// for every `k` in `k₀..=kmax`. One tail evaluation at `kmax`, then
/// `tail(k) = tail(k + 1) + a_{k+1}²` downwards.
pub fn hermite_tail_crossover(spec: &ActivationSpec, kmax: usize) -> Option<usize> {
    let a = hermite_coeffs(spec, kmax + 1);
    let mut tail = hermite_tail_l2(spec, kmax).computed;
    let mut crossover = None;
    for k in (1..=kmax).rev() {
        if k < kmax {
            tail += a[k + 1] * a[k + 1];
        }
        match hermite_tail_bound(spec, k) {
            Some(b) if tail <= b => crossover = Some(k),
            _ => break,
        }
    }
    crossover
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gegenbauer_truncation_round_trip() {
        let basis = GegenbauerBasis::new(3, 4).unwrap();
        let relu = expand_activation_with_basis(&ActivationSpec::relu(), &basis).unwrap();
        let poly = ActivationSpec::gegenbauer_truncation(&basis, &relu.gegenbauer).unwrap();
        assert_eq!(poly.degree(), Some(4));
        let back = expand_activation_with_basis(&poly, &basis).unwrap();
        for (a, b) in relu.gegenbauer.iter().zip(&back.gegenbauer) {
            assert!((a - b).abs() < 1e-12);
        }
        // P_2 for d = 3 is (√5/2)(t² − 1)
        let p2 = ActivationSpec::gegenbauer_truncation(&basis, &[0.0, 0.0, 1.0]).unwrap();
        let h = 5f64.sqrt() / 2.0;
        match p2.kind {
            Activation::Polynomial(c) => {
                assert!((c[0] + h).abs() < 1e-13 && c[1].abs() < 1e-13 && (c[2] - h).abs() < 1e-13)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn parse_and_display() {
        let s: ActivationSpec = "poly:0,0,1".parse().unwrap();
        assert_eq!(s.degree(), Some(2));
        assert_eq!(s.to_string(), "poly:0,0,1");
        let z: ActivationSpec = "poly:0".parse().unwrap();
        assert!(z.is_zero());
        assert_eq!(
            "relu+centered".parse::<ActivationSpec>().unwrap(),
            ActivationSpec::relu().centered(true)
        );
        assert!("tanh".parse::<ActivationSpec>().is_err());
        assert!("poly:1,x".parse::<ActivationSpec>().is_err());
        assert!(ActivationSpec::polynomial(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn eval_and_derivative() {
        let p = ActivationSpec::polynomial(vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(p.eval(2.0), 9.0);
        assert_eq!(p.derivative(2.0), 10.0);
        assert_eq!(ActivationSpec::relu().eval(-1.0), 0.0);
        assert_eq!(ActivationSpec::relu().derivative(0.5), 1.0);
    }

    #[test]
    fn expansion_examples() {
        let sqrt5 = 5f64.sqrt();
        // P_2 = (√5/2)(t² − 1) for d = 3
        let p2 = ActivationSpec::polynomial(vec![-sqrt5 / 2.0, 0.0, sqrt5 / 2.0]).unwrap();
        let e = expand_activation(&p2, 3, 6).unwrap();
        for (l, c) in e.gegenbauer.iter().enumerate() {
            let want = if l == 2 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-12, "l = {l}: {c}");
        }
        let lin = ActivationSpec::polynomial(vec![0.0, 1.0]).unwrap();
        let e = expand_activation(&lin, 5, 4).unwrap();
        assert!((e.gegenbauer[1] - 1.0).abs() < 1e-12);
        assert!(e
            .gegenbauer
            .iter()
            .enumerate()
            .all(|(l, c)| l == 1 || c.abs() < 1e-12));
        let relu = expand_activation(&ActivationSpec::relu(), 3, 8).unwrap();
        assert_relative_eq!(relu.gegenbauer[0], 3f64.sqrt() / 4.0, max_relative = 1e-12);
        // t² = 1 + (2/√5) P_2
        let sq = ActivationSpec::polynomial(vec![0.0, 0.0, 1.0]).unwrap();
        let e = expand_activation(&sq, 3, 4).unwrap();
        assert_relative_eq!(e.gegenbauer[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(e.gegenbauer[2], 2.0 / sqrt5, max_relative = 1e-12);
        assert!(expand_activation(&sq, 3, 1).is_err());
    }

    #[test]
    fn centering_records_constant_mode() {
        let sq = ActivationSpec::polynomial(vec![0.0, 0.0, 1.0])
            .unwrap()
            .centered(true);
        let e = expand_activation(&sq, 3, 4).unwrap();
        assert_eq!(e.gegenbauer[0], 0.0);
        assert_relative_eq!(e.constant_mode, 1.0, max_relative = 1e-12);
        assert!(e.is_centered());
        assert_relative_eq!(sq.centering_offset(3).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn derivative_moments() {
        assert_relative_eq!(
            gaussian_deriv_moment(&ActivationSpec::polynomial(vec![0.0, 1.0]).unwrap()),
            1.0,
            max_relative = 1e-13
        );
        assert_eq!(gaussian_deriv_moment(&ActivationSpec::relu()), 0.5);
        assert_relative_eq!(
            gaussian_deriv_moment(&ActivationSpec::erf()),
            0.569_410_034_733_741_6,
            max_relative = 1e-12
        );
        // Quadrature route for erf': E[(4/π) e^{−2x²}]
        let q = gauss_hermite(80).integrate(|x| ActivationSpec::erf().derivative(x).powi(2));
        assert_relative_eq!(
            q,
            gaussian_deriv_moment(&ActivationSpec::erf()),
            max_relative = 1e-12
        );
    }

    #[test]
    fn polynomial_tails_vanish_past_degree() {
        let p = ActivationSpec::polynomial(vec![0.2, 1.0, 0.0, -0.5]).unwrap();
        assert_eq!(hermite_tail_l2(&p, 3).computed, 0.0);
        assert_eq!(gegenbauer_tail_l2(&p, 4, 5).unwrap().computed, 0.0);
        assert!(hermite_tail_l2(&p, 1).computed > 0.0);
    }

    #[test]
    fn hermite_truncation_reproduces_coefficients() {
        let a = relu_hermite_coeffs(6);
        let poly = ActivationSpec::hermite_truncation(&a).unwrap();
        let back = hermite_coeffs(&poly, 6);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

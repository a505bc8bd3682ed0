//! Gauss rules and the quadrature for the single-coordinate density.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre rule with `n` nodes on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton on the Legendre recurrence.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, pm1) = legendre_pair(n, x);
            let dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (p, pm1) = legendre_pair(n, x);
        let dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = mid;
    }
    Rule { nodes, weights }
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss–Hermite rule for the standard normal weight `e^{-x²/2}/√(2π)`.
///
/// Golub–Welsch on the Jacobi matrix of the probabilists' polynomials, then
/// Newton on each node. Weights sum to one; exact for polynomials of degree
/// `2n − 1`.
pub fn gauss_hermite(n: usize) -> Rule {
    if n == 0 {
        return Rule {
            nodes: Vec::new(),
            weights: Vec::new(),
        };
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            (
                hermite_newton(n, eig.eigenvalues[i]),
                eig.eigenvectors[(0, i)].powi(2),
            )
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-x, w);
        pairs[j] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    }
}

/// Newton steps on `He_n` from `x`, with the orthonormal recurrence rescaled
/// so large `|x|` cannot overflow (only the ratio `h_n/h_n'` is used).
fn hermite_newton(n: usize, mut x: f64) -> f64 {
    for _ in 0..3 {
        let (mut prev, mut cur) = (0.0, 1.0);
        for k in 0..n {
            let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
            prev = cur;
            cur = next;
            if cur.abs() > 1e150 {
                prev *= 1e-150;
                cur *= 1e-150;
            }
        }
        let deriv = (n as f64).sqrt() * prev;
        if deriv == 0.0 {
            break;
        }
        let step = cur / deriv;
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Normalizing constant `Γ(d/2) / (Γ((d−1)/2) √(πd))` of the coordinate density.
pub fn density_constant(d: usize) -> f64 {
    let df = d as f64;
    (libm::lgamma(df / 2.0) - libm::lgamma((df - 1.0) / 2.0)).exp() / (PI * df).sqrt()
}

/// Density of one coordinate of a uniform point on the sphere of radius `√d`.
pub fn coordinate_density(d: usize, t: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: d });
    }
    let df = d as f64;
    if t.is_nan() || t.abs() > df.sqrt() {
        return Ok(0.0);
    }
    let u = 1.0 - t * t / df;
    let exponent = (df - 3.0) / 2.0;
    if u <= 0.0 {
        return match d {
            2 => Err(Error::SingularEndpoint { d, t }),
            3 => Ok(density_constant(d)),
            _ => Ok(0.0),
        };
    }
    Ok(density_constant(d) * u.powf(exponent))
}

/// Quadrature for integrals `∫ f(t) ξ(t) dt` over `[−√d, √d]`.
///
/// Uses `t = √d cos θ`, under which `ξ(t) dt = c_d √d sin^{d−2}θ dθ` has
/// no endpoint singularity for any `d ≥ 2`, and Gauss–Legendre on each of
/// the panels `θ ∈ [0, π/2]` and `[π/2, π]` so that integrands with a kink
/// at `t = 0` (ReLU) stay smooth on every panel. The second panel mirrors the
/// first, so nodes are exactly symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateQuadrature {
    pub d: usize,
    pub rule: Rule,
}

pub const DEFAULT_NODES: usize = 256;

impl CoordinateQuadrature {
    pub fn new(d: usize, nodes: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall { min: 2, got: d });
        }
        if nodes < 2 {
            return Err(Error::QuadratureTooSmall { nodes, required: 2 });
        }
        let per_panel = nodes.div_ceil(2);
        let panel = gauss_legendre(per_panel, 0.0, FRAC_PI_2);
        let df = d as f64;
        let scale = density_constant(d) * df.sqrt();
        let mut t = Vec::with_capacity(2 * per_panel);
        let mut w = Vec::with_capacity(2 * per_panel);
        for (&theta, &gw) in panel.nodes.iter().zip(&panel.weights) {
            t.push(df.sqrt() * theta.cos());
            w.push(scale * theta.sin().powi(d as i32 - 2) * gw);
        }
        for i in (0..per_panel).rev() {
            t.push(-t[i]);
            w.push(w[i]);
        }
        // ascending in t
        let mut idx: Vec<usize> = (0..t.len()).collect();
        idx.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
        Ok(Self {
            d,
            rule: Rule {
                nodes: idx.iter().map(|&i| t[i]).collect(),
                weights: idx.iter().map(|&i| w[i]).collect(),
            },
        })
    }

    pub fn with_default_nodes(d: usize) -> Result<Self> {
        Self::new(d, DEFAULT_NODES)
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F) -> f64 {
        self.rule.integrate(f)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }
}

/// `∫_{−√d}^{√d} g(t) (1 − t²/d)^{p} dt` for half-integer or integer `p ≥ 0`,
/// by the same substitution (`√d ∫ g(√d cos θ) sin^{2p+1}θ dθ`).
pub fn integrate_weighted_power<F: FnMut(f64) -> f64>(
    d: usize,
    power: f64,
    nodes: usize,
    mut g: F,
) -> f64 {
    let per_panel = nodes.div_ceil(2).max(1);
    let panel = gauss_legendre(per_panel, 0.0, FRAC_PI_2);
    let sd = (d as f64).sqrt();
    let mut total = 0.0;
    for (&theta, &gw) in panel.nodes.iter().zip(&panel.weights) {
        let t = sd * theta.cos();
        let s = theta.sin().powf(2.0 * power + 1.0);
        total += gw * s * (g(t) + g(-t));
    }
    sd * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(10, -1.0, 2.0);
        let exact = (2.0_f64.powi(20) - 1.0) / 20.0;
        assert_relative_eq!(rule.integrate(|x| x.powi(19)), exact, max_relative = 1e-13);
        assert_relative_eq!(rule.weights.iter().sum::<f64>(), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn hermite_moments() {
        let rule = gauss_hermite(30);
        assert_relative_eq!(rule.integrate(|_| 1.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(rule.integrate(|x| x * x), 1.0, max_relative = 1e-12);
        assert_relative_eq!(rule.integrate(|x| x.powi(4)), 3.0, max_relative = 1e-12);
        assert_relative_eq!(rule.integrate(|x| x.powi(10)), 945.0, max_relative = 1e-11);
        assert!(rule.integrate(|x| x.powi(5)).abs() < 1e-11);
    }

    #[test]
    fn hermite_large_rules() {
        for n in [1, 2, 7, 200, 400] {
            let rule = gauss_hermite(n);
            assert_relative_eq!(rule.integrate(|_| 1.0), 1.0, max_relative = 1e-13);
            if n > 1 {
                assert_relative_eq!(rule.integrate(|x| x * x), 1.0, max_relative = 1e-12);
            }
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
        let rule = gauss_hermite(200);
        let e = rule.integrate(|x| (x / 2.0).cos());
        assert_relative_eq!(e, (-0.125f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn density_values() {
        assert_relative_eq!(
            coordinate_density(3, 0.0).unwrap(),
            0.5 / 3f64.sqrt(),
            max_relative = 1e-14
        );
        assert_eq!(coordinate_density(5, 5f64.sqrt()).unwrap(), 0.0);
        assert_eq!(coordinate_density(5, -5f64.sqrt()).unwrap(), 0.0);
        assert_eq!(coordinate_density(4, 3.0).unwrap(), 0.0);
        assert!(matches!(
            coordinate_density(2, 2f64.sqrt()),
            Err(Error::SingularEndpoint { .. })
        ));
        assert!(coordinate_density(1, 0.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for d in [2usize, 3, 4, 5, 7, 10, 50] {
            let q = CoordinateQuadrature::with_default_nodes(d).unwrap();
            assert!((q.integrate(|_| 1.0) - 1.0).abs() < 1e-10, "d = {d}");
            // E[x1²] = 1
            assert!((q.integrate(|t| t * t) - 1.0).abs() < 1e-10, "d = {d}");
        }
    }

    #[test]
    fn density_quadrature_matches_direct_integration() {
        // Independent route: plain Gauss–Legendre in t against the density (d = 5, smooth weight).
        let d = 5;
        let sd = (d as f64).sqrt();
        let gl = gauss_legendre(200, -sd, sd);
        let direct = gl.integrate(|t| t.powi(4) * coordinate_density(d, t).unwrap());
        let q = CoordinateQuadrature::with_default_nodes(d).unwrap();
        assert_relative_eq!(q.integrate(|t| t.powi(4)), direct, max_relative = 1e-12);
        assert_relative_eq!(direct, 3.0 * 5.0 / 7.0, max_relative = 1e-12);
    }
}

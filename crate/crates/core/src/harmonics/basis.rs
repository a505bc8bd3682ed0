//! Harmonic decomposition, the sphere inner product, explicit orthonormal
//! bases of `H_l`, and the rotation generators `L_ab`.

use super::poly::{Exponent, MultiPoly};
use crate::error::{Error, Result};
use crate::orthopoly::{harmonic_dim, GegenbauerBasis};

pub const MAX_EXPLICIT_D: usize = 5;
pub const MAX_EXPLICIT_L: usize = 8;

/// Writes a homogeneous `p` of degree `L` as `Σ_i r^{2i} f_i` with each
/// `f_i` harmonic and homogeneous of degree `L − 2i`.
///
/// Recurses on `∇²p`: if `∇²p = Σ r^{2i} g_i` then
/// `f_{i+1} = g_i / (2(i+1)(2L − 2i − 4 + d))` and `f_0 = p − Σ r^{2i+2} f_{i+1}`.
pub fn harmonic_decompose(p: &MultiPoly) -> Result<Vec<MultiPoly>> {
    let degree = p.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
    Ok(decompose(p, degree))
}

fn decompose(p: &MultiPoly, degree: usize) -> Vec<MultiPoly> {
    let d = p.d();
    let lap = p.laplacian();
    if degree < 2 || lap.is_zero() {
        return vec![p.clone()];
    }
    let inner = decompose(&lap, degree - 2);
    let l = degree as f64;
    let df = d as f64;
    let mut parts = Vec::with_capacity(inner.len() + 1);
    let mut rest = MultiPoly::zero(d);
    for (i, g) in inner.iter().enumerate() {
        let fi = i as f64;
        let f = g.scale(1.0 / (2.0 * (fi + 1.0) * (2.0 * l - 2.0 * fi - 4.0 + df)));
        rest = &rest + &f.times_r2_power(i + 1);
        parts.push(f);
    }
    let f0 = (p - &rest).pruned(1e-14);
    let mut out = vec![f0];
    out.extend(parts);
    out
}

/// `E[∏ x_i^{e_i}]` for `x ~ √d·U(S^{d−1})`: zero unless every exponent is
/// even, otherwise `d^{|k|} ∏(2k_i − 1)!! / (d(d+2)⋯(d + 2|k| − 2))` with `e = 2k`.
pub fn sphere_moment(d: usize, exponent: &[u32]) -> f64 {
    if exponent.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    let df = d as f64;
    let mut value = 1.0;
    let mut j = 0u32;
    for &e in exponent {
        for m in 0..e / 2 {
            // (2m+1) contributes to the double factorial, paired with d/(d+2j)
            value *= (2 * m + 1) as f64 * df / (df + 2.0 * j as f64);
            j += 1;
        }
    }
    value
}

/// `E[p(x) q(x)]` under the uniform measure on `√d·S^{d−1}`.
pub fn sphere_inner(p: &MultiPoly, q: &MultiPoly) -> Result<f64> {
    if p.d() != q.d() {
        return Err(Error::DimensionMismatch {
            left: p.d(),
            right: q.d(),
        });
    }
    let d = p.d();
    let mut e = vec![0u32; d];
    let mut total = 0.0;
    for (ea, ca) in p.terms() {
        for (eb, cb) in q.terms() {
            for i in 0..d {
                e[i] = ea[i] + eb[i];
            }
            total += ca * cb * sphere_moment(d, &e);
        }
    }
    Ok(total)
}

pub fn sphere_mean(p: &MultiPoly) -> f64 {
    p.terms().map(|(e, c)| c * sphere_moment(p.d(), e)).sum()
}

/// Degree-`l` exponents in `d` variables, descending lexicographic order
/// (`X_1^l` first).
pub fn monomial_exponents(d: usize, l: usize) -> Vec<Exponent> {
    fn rec(d: usize, left: u32, prefix: &mut Exponent, out: &mut Vec<Exponent>) {
        if prefix.len() + 1 == d {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(d, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    rec(d, l as u32, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Orthonormal basis `Y_{l,1..đ_l}` of degree-`l` spherical harmonics.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicBasis {
    pub d: usize,
    pub l: usize,
    pub elements: Vec<MultiPoly>,
}

impl HarmonicBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Basis export rows `(l, m, exponent, coefficient)`, `m` from 1.
    pub fn rows(&self) -> Vec<(usize, usize, Exponent, f64)> {
        let mut rows = Vec::new();
        for (m, y) in self.elements.iter().enumerate() {
            for (e, c) in y.terms() {
                rows.push((self.l, m + 1, e.clone(), c));
            }
        }
        rows
    }
}

/// Harmonic projections of the degree-`l` monomials (descending lex order),
/// Gram–Schmidt orthonormalized under [`sphere_inner`].
pub fn build_harmonic_basis(d: usize, l: usize) -> Result<HarmonicBasis> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: d });
    }
    if d > MAX_EXPLICIT_D || l > MAX_EXPLICIT_L {
        return Err(Error::ExplicitRegimeExceeded {
            d,
            l,
            max_d: MAX_EXPLICIT_D,
            max_l: MAX_EXPLICIT_L,
        });
    }
    let expected = harmonic_dim(d, l)? as usize;
    let mut elements: Vec<MultiPoly> = Vec::with_capacity(expected);
    for e in monomial_exponents(d, l) {
        if elements.len() == expected {
            break;
        }
        let h = decompose(&MultiPoly::monomial(e, 1.0), l).swap_remove(0);
        let h_norm = sphere_inner(&h, &h)?;
        if h_norm <= 0.0 {
            continue;
        }
        let mut v = h;
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for y in &elements {
                let c = sphere_inner(&v, y)?;
                v = &v - &y.scale(c);
            }
        }
        let n2 = sphere_inner(&v, &v)?;
        if n2 > 1e-10 * h_norm {
            elements.push(v.scale(n2.sqrt().recip()).pruned(1e-14));
        }
    }
    if elements.len() != expected {
        return Err(Error::RankDeficient {
            d,
            l,
            found: elements.len(),
            expected,
        });
    }
    Ok(HarmonicBasis { d, l, elements })
}

/// `L_ab p = X_a ∂_b p − X_b ∂_a p`.
pub fn apply_rotation_generator(a: usize, b: usize, p: &MultiPoly) -> Result<MultiPoly> {
    let d = p.d();
    for i in [a, b] {
        if i >= d {
            return Err(Error::IndexOutOfRange { index: i, d });
        }
    }
    if a == b {
        return Err(Error::DegenerateGenerator(a));
    }
    let xa = MultiPoly::variable(d, a)?;
    let xb = MultiPoly::variable(d, b)?;
    Ok(&(&xa * &p.partial(b)?) - &(&xb * &p.partial(a)?))
}

/// `∂_r p = Σ X_i ∂_i p`.
pub fn radial_derivative(p: &MultiPoly) -> MultiPoly {
    let d = p.d();
    (0..d).fold(MultiPoly::zero(d), |acc, i| {
        let xi = MultiPoly::variable(d, i).expect("index in range");
        &acc + &(&xi * &p.partial(i).expect("index in range"))
    })
}

/// `L²p = r²∇²p − n(n + d − 2)p` for homogeneous `p` of degree `n`.
pub fn laplace_beltrami(p: &MultiPoly) -> Result<MultiPoly> {
    let n = p.homogeneous_degree().ok_or(Error::NotHomogeneous)? as f64;
    let d = p.d() as f64;
    let r2_lap = &MultiPoly::r2(p.d()) * &p.laplacian();
    Ok(&r2_lap - &p.scale(n * (n + d - 2.0)))
}

/// `L²p = Σ_{a<b} L_ab² p`, directly from the generators.
pub fn laplace_beltrami_generators(p: &MultiPoly) -> MultiPoly {
    let d = p.d();
    let mut out = MultiPoly::zero(d);
    for a in 0..d {
        for b in a + 1..d {
            let once = apply_rotation_generator(a, b, p).expect("valid generator");
            let twice = apply_rotation_generator(a, b, &once).expect("valid generator");
            out = &out + &twice;
        }
    }
    out
}

fn check_on_sphere(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: x.len(),
        });
    }
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if (norm2 - d as f64).abs() > 1e-9 * d as f64 {
        return Err(Error::OffSphere { norm2, d });
    }
    Ok(())
}

/// `|(1/√đ_l) Σ_m Y_{l,m}(x) Y_{l,m}(x') − P_l(x·x'/√d)|`.
pub fn addition_theorem_residual(
    basis: &HarmonicBasis,
    gegenbauer: &GegenbauerBasis,
    x: &[f64],
    xp: &[f64],
) -> Result<f64> {
    let d = basis.d;
    if gegenbauer.d() != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: gegenbauer.d(),
        });
    }
    check_on_sphere(x, d)?;
    check_on_sphere(xp, d)?;
    let mut sum = 0.0;
    for y in &basis.elements {
        sum += y.eval(x)? * y.eval(xp)?;
    }
    let zonal = sum / (basis.len() as f64).sqrt();
    let dot: f64 = x.iter().zip(xp).map(|(a, b)| a * b).sum();
    let p = gegenbauer.eval(basis.l, dot / (d as f64).sqrt())?;
    Ok((zonal - p).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn x(d: usize, i: usize) -> MultiPoly {
        MultiPoly::variable(d, i).unwrap()
    }

    #[test]
    fn decomposition_examples() {
        let parts = harmonic_decompose(&MultiPoly::r2(3)).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(parts[0].max_abs_coefficient() < 1e-15);
        assert_eq!(parts[1], MultiPoly::constant(3, 1.0));

        let p = &x(3, 0) * &x(3, 1);
        assert_eq!(harmonic_decompose(&p).unwrap(), vec![p]);

        let x1sq = MultiPoly::monomial(vec![2, 0, 0], 1.0);
        let parts = harmonic_decompose(&x1sq).unwrap();
        let want0 = &x1sq - &MultiPoly::r2(3).scale(1.0 / 3.0);
        assert!(parts[0].max_abs_diff(&want0) < 1e-15);
        assert!((parts[1].coefficient(&[0, 0, 0]) - 1.0 / 3.0).abs() < 1e-15);

        let bad = &x(2, 0) + &MultiPoly::constant(2, 1.0);
        assert_eq!(harmonic_decompose(&bad), Err(Error::NotHomogeneous));
    }

    #[test]
    fn moments() {
        assert_relative_eq!(sphere_inner(&x(3, 0), &x(3, 0)).unwrap(), 1.0);
        let x1sq = MultiPoly::monomial(vec![2, 0, 0], 1.0);
        assert_relative_eq!(
            sphere_inner(&x1sq, &x1sq).unwrap(),
            9.0 / 5.0,
            max_relative = 1e-15
        );
        assert_eq!(sphere_inner(&x(3, 0), &x(3, 1)).unwrap(), 0.0);
        // E[x1² x2²] = d²/(d(d+2)) = d/(d+2)
        assert_relative_eq!(
            sphere_moment(4, &[2, 2, 0, 0]),
            4.0 / 6.0,
            max_relative = 1e-15
        );
        // Σ_i E[x_i²] = d on every sphere size
        assert_relative_eq!(sphere_mean(&MultiPoly::r2(5)), 5.0, max_relative = 1e-15);
        // E[r⁴] = d²
        let r4 = MultiPoly::r2(3).times_r2_power(1);
        assert_relative_eq!(sphere_mean(&r4), 9.0, max_relative = 1e-14);
    }

    #[test]
    fn monomial_order() {
        let e = monomial_exponents(3, 2);
        assert_eq!(e.len(), 6);
        assert_eq!(e[0], vec![2, 0, 0]);
        assert_eq!(e[1], vec![1, 1, 0]);
        assert_eq!(e[5], vec![0, 0, 2]);
    }

    #[test]
    fn basis_examples() {
        let b = build_harmonic_basis(3, 1).unwrap();
        assert_eq!(b.elements, vec![x(3, 0), x(3, 1), x(3, 2)]);

        let b = build_harmonic_basis(2, 2).unwrap();
        let s = 2f64.sqrt();
        let y1 = MultiPoly::from_terms(2, [(vec![2, 0], 1.0 / s), (vec![0, 2], -1.0 / s)]).unwrap();
        let y2 = MultiPoly::monomial(vec![1, 1], s);
        assert!(b.elements[0].max_abs_diff(&y1) < 1e-14);
        assert!(b.elements[1].max_abs_diff(&y2) < 1e-14);

        let b = build_harmonic_basis(3, 2).unwrap();
        assert_eq!(b.len(), 5);
        for y in &b.elements {
            assert!(y.laplacian().max_abs_coefficient() < 1e-12);
        }
        for (i, a) in b.elements.iter().enumerate() {
            for (j, c) in b.elements.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((sphere_inner(a, c).unwrap() - want).abs() < 1e-10);
            }
        }
        assert!(matches!(
            build_harmonic_basis(6, 2),
            Err(Error::ExplicitRegimeExceeded { .. })
        ));
        assert!(matches!(
            build_harmonic_basis(3, 9),
            Err(Error::ExplicitRegimeExceeded { .. })
        ));
    }

    #[test]
    fn generators() {
        assert_eq!(
            apply_rotation_generator(0, 1, &x(2, 0)).unwrap(),
            x(2, 1).scale(-1.0)
        );
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert!(apply_rotation_generator(a, b, &MultiPoly::r2(3))
                .unwrap()
                .is_zero());
        }
        let want = MultiPoly::from_terms(3, [(vec![2, 0, 0], 1.0), (vec![0, 2, 0], -1.0)]).unwrap();
        assert_eq!(
            apply_rotation_generator(0, 1, &(&x(3, 0) * &x(3, 1))).unwrap(),
            want
        );
        assert_eq!(
            apply_rotation_generator(1, 1, &x(3, 0)),
            Err(Error::DegenerateGenerator(1))
        );
        assert!(apply_rotation_generator(0, 3, &x(3, 0)).is_err());
    }

    #[test]
    fn laplace_beltrami_examples() {
        assert_eq!(laplace_beltrami(&x(3, 0)).unwrap(), x(3, 0).scale(-2.0));
        assert!(
            laplace_beltrami(&MultiPoly::r2(3))
                .unwrap()
                .max_abs_coefficient()
                < 1e-14
        );
        assert!(laplace_beltrami_generators(&MultiPoly::r2(3)).is_zero());
        let b = build_harmonic_basis(4, 3).unwrap();
        for y in &b.elements {
            let lb = laplace_beltrami(y).unwrap();
            assert!(lb.max_abs_diff(&y.scale(-(3.0 * 5.0))) < 1e-10);
            assert!(laplace_beltrami_generators(y).max_abs_diff(&lb) < 1e-10);
        }
    }

    #[test]
    fn addition_theorem_d2_fourier() {
        let b = build_harmonic_basis(2, 3).unwrap();
        let g = GegenbauerBasis::new(2, 3).unwrap();
        let s = 2f64.sqrt();
        let (t, tp) = (0.4_f64, 1.9_f64);
        let x = [s * t.cos(), s * t.sin()];
        let xp = [s * tp.cos(), s * tp.sin()];
        let zonal: f64 = b
            .elements
            .iter()
            .map(|y| y.eval(&x).unwrap() * y.eval(&xp).unwrap())
            .sum::<f64>()
            / s;
        assert!((zonal - s * (3.0 * (t - tp)).cos()).abs() < 1e-12);
        assert!(addition_theorem_residual(&b, &g, &x, &xp).unwrap() < 1e-10);
        assert!(matches!(
            addition_theorem_residual(&b, &g, &[1.0, 0.0], &xp),
            Err(Error::OffSphere { .. })
        ));
    }
}

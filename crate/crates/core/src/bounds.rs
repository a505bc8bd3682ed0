//! Closed-form discrepancy, Wasserstein and rate bounds.

use crate::error::{Error, Result};
use crate::netsim::SLaw;
use crate::orthopoly::quadrature::{density_constant, integrate_weighted_power};
use crate::orthopoly::{
    coordinate_second_moment, gaussian_deriv_moment, harmonic_dim, hermite_tail_crossover,
    hermite_tail_l2, Activation, ActivationExpansion, ActivationSpec,
};

/// Outer-weight moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentProfile {
    pub e_s2: f64,
    pub e_s4: f64,
    pub var_s2: f64,
}

impl MomentProfile {
    pub fn new(e_s2: f64, e_s4: f64) -> Result<Self> {
        if !(e_s2 > 0.0 && e_s2.is_finite() && e_s4.is_finite()) {
            return Err(Error::InvalidMoments(format!(
                "E s² = {e_s2}, E s⁴ = {e_s4}"
            )));
        }
        let var_s2 = e_s4 - e_s2 * e_s2;
        if var_s2 < -1e-12 * e_s4.abs().max(1.0) {
            return Err(Error::InvalidMoments(format!(
                "E s⁴ = {e_s4} < (E s²)² = {}",
                e_s2 * e_s2
            )));
        }
        Ok(Self {
            e_s2,
            e_s4,
            var_s2: var_s2.max(0.0),
        })
    }

    pub fn rademacher() -> Self {
        Self {
            e_s2: 1.0,
            e_s4: 1.0,
            var_s2: 0.0,
        }
    }

    pub fn gaussian() -> Self {
        Self {
            e_s2: 1.0,
            e_s4: 3.0,
            var_s2: 2.0,
        }
    }

    pub fn from_law(law: SLaw) -> Result<Self> {
        let (e_s2, e_s4) = law.moments();
        Self::new(e_s2, e_s4)
    }
}

fn check_d(d: usize, min: usize) -> Result<()> {
    if d < min {
        Err(Error::DimensionTooSmall { min, got: d })
    } else {
        Ok(())
    }
}

fn eigen(d: usize, l: usize) -> f64 {
    (l * (l + d - 2)) as f64
}

/// `Σ_{m,m'} τ_{l,m;l',m'}² = φ̂_l²φ̂_{l'}²/(d−1) · l'(l'+d−2)/(l(l+d−2))`.
/// Not symmetric in `(l, l')`.
pub fn block_hs_norm(coeffs: &[f64], d: usize, l: usize, lp: usize) -> Result<f64> {
    check_d(d, 2)?;
    if l == 0 || lp == 0 {
        return Err(Error::ZeroDegreeMode);
    }
    let top = coeffs.len().saturating_sub(1);
    for deg in [l, lp] {
        if deg > top {
            return Err(Error::DegreeOutOfRange {
                degree: deg,
                lmax: top,
            });
        }
    }
    let (a, b) = (coeffs[l], coeffs[lp]);
    Ok(a * a * b * b / (d as f64 - 1.0) * eigen(d, lp) / eigen(d, l))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionSum {
    /// `Σ_{l=1}^k đ_l / (l(l+d−2))`.
    pub exact: f64,
    /// `2d(d+k)^{d−2}/(d−1)!`.
    pub bound: f64,
}

pub fn dimension_sum(d: usize, k: usize) -> Result<DimensionSum> {
    check_d(d, 2)?;
    if k == 0 {
        return Err(Error::ZeroDegreeMode);
    }
    let mut exact = 0.0;
    for l in 1..=k {
        exact += harmonic_dim(d, l)? as f64 / eigen(d, l);
    }
    Ok(DimensionSum {
        exact,
        bound: 2.0 * geometric_factor(d, k),
    })
}

/// `d(d+k)^{d−2}/(d−1)!`, in direct arithmetic while it stays finite.
fn geometric_factor(d: usize, k: usize) -> f64 {
    let df = d as f64;
    let direct =
        df * (df + k as f64).powi(d as i32 - 2) / (1..d).map(|i| i as f64).product::<f64>();
    if direct.is_finite() {
        direct
    } else {
        (df.ln() + (df - 2.0) * (df + k as f64).ln() - libm::lgamma(df)).exp()
    }
}

/// `Σ_l φ̂_l² l(l+d−2)`.
pub fn dirichlet_form(coeffs: &[f64], d: usize) -> Result<f64> {
    check_d(d, 2)?;
    Ok(coeffs
        .iter()
        .enumerate()
        .map(|(l, c)| c * c * eigen(d, l))
        .sum())
}

/// `(Γ(d/2)/Γ((d−1)/2))·√(d/π)·∫ φ'(t)² (1−t²/d)^{(d−1)/2} dt`.
pub fn dirichlet_integral(spec: &ActivationSpec, d: usize, nodes: usize) -> Result<f64> {
    check_d(d, 2)?;
    let df = d as f64;
    // Γ(d/2)/Γ((d−1)/2)·√(d/π) = c_d · d with c_d the density constant
    let pre = density_constant(d) * df;
    let integral =
        integrate_weighted_power(d, (df - 1.0) / 2.0, nodes, |t| spec.derivative(t).powi(2));
    Ok(pre * integral)
}

/// `2√(d(d−1))·E[φ'(N)²]`.
pub fn dirichlet_bound(spec: &ActivationSpec, d: usize) -> f64 {
    let df = d as f64;
    2.0 * (df * (df - 1.0)).sqrt() * gaussian_deriv_moment(spec)
}

/// `S(sX)² ≤ (E s⁴/E s²)·S(X)² + (var[s²]/E s²)·E‖X‖²`.
pub fn scaling_discrepancy(s2: f64, e_norm2: f64, moments: &MomentProfile) -> Result<f64> {
    if moments.e_s2 <= 0.0 {
        return Err(Error::InvalidMoments(format!("E s² = {}", moments.e_s2)));
    }
    if s2 < 0.0 || e_norm2 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "S² = {s2}, E‖X‖² = {e_norm2}"
        )));
    }
    Ok((moments.e_s4 * s2 + moments.var_s2 * e_norm2) / moments.e_s2)
}

/// `W₂ ≤ S/√n`.
pub fn clt_w2_bound(s: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(s / (n as f64).sqrt())
}

/// Theorem-level constants for a centered degree-`k` activation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub d: usize,
    pub n: usize,
    pub k: usize,
    /// `C²`, the stated constant.
    pub c2: f64,
    pub c: f64,
    /// `C/√n`.
    pub w2_bound: f64,
    /// `(1/(d−1))·dimension_sum·dirichlet_form`, the discrepancy of the
    /// unscaled embedding before any simplification.
    pub internal_s2: f64,
    /// Internal discrepancy after outer-weight scaling.
    pub internal_scaled_s2: f64,
    /// `√internal_scaled_s2 / √n`.
    pub internal_w2_bound: f64,
    pub dimension_sum: DimensionSum,
    pub dirichlet_form: f64,
    pub dirichlet_bound: f64,
    pub derivative_moment: f64,
    /// `E[φ(x₁)²]` of the centered activation.
    pub second_moment: f64,
    /// `Σ_{l=1}^k φ̂_l²`.
    pub embedding_norm2: f64,
    pub moments: MomentProfile,
}

pub fn theorem1_constant(
    d: usize,
    k: usize,
    expansion: &ActivationExpansion,
    moments: &MomentProfile,
    n: usize,
) -> Result<BoundReport> {
    check_d(d, 2)?;
    if expansion.d != d {
        return Err(Error::DimensionMismatch {
            left: d,
            right: expansion.d,
        });
    }
    if k == 0 {
        return Err(Error::ZeroDegreeMode);
    }
    let phi0 = expansion.gegenbauer.first().copied().unwrap_or(0.0);
    if phi0 != 0.0 {
        return Err(Error::NotCentered(phi0));
    }
    if expansion.gegenbauer.len() <= k {
        return Err(Error::DegreeOutOfRange {
            degree: k,
            lmax: expansion.gegenbauer.len().saturating_sub(1),
        });
    }
    let coeffs = &expansion.gegenbauer[..=k];
    let spec = &expansion.spec;
    let dim = dimension_sum(d, k)?;
    let dir = dirichlet_form(coeffs, d)?;
    let derivative_moment = gaussian_deriv_moment(spec);
    let second_moment = coordinate_second_moment(spec, d)?;
    let df = d as f64;
    let geom = 6.0 * geometric_factor(d, k);
    let c2 = geom * moments.e_s4 * derivative_moment + moments.var_s2 * second_moment;
    let internal_s2 = dim.exact * dir / (df - 1.0);
    let embedding_norm2: f64 = coeffs[1..].iter().map(|c| c * c).sum();
    let internal_scaled_s2 = scaling_discrepancy(internal_s2, embedding_norm2, moments)?;
    let c = c2.sqrt();
    Ok(BoundReport {
        d,
        n,
        k,
        c2,
        c,
        w2_bound: clt_w2_bound(c, n)?,
        internal_s2,
        internal_scaled_s2,
        internal_w2_bound: clt_w2_bound(internal_scaled_s2.sqrt(), n)?,
        dimension_sum: dim,
        dirichlet_form: dir,
        dirichlet_bound: dirichlet_bound(spec, d),
        derivative_moment,
        second_moment,
        embedding_norm2,
        moments: *moments,
    })
}

/// The two terms of the truncation inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationBound {
    pub k: usize,
    /// `√(5 Σ_{l>k} a_l²)` with the numerically summed tail.
    pub tail_term: f64,
    /// Same with the analytic tail bound.
    pub tail_term_analytic: f64,
    /// `√(3e^d k^{d−2} E[φ'(N)²] / n)`.
    pub clt_term: f64,
    /// `clt_term` with `E[φ'²] ≤ 1` (erf only).
    pub clt_term_unit: Option<f64>,
    pub total: f64,
    pub total_analytic: f64,
}

pub fn truncation_bound(
    spec: &ActivationSpec,
    d: usize,
    n: usize,
    k: usize,
) -> Result<TruncationBound> {
    check_d(d, 2)?;
    if k == 0 {
        return Err(Error::ZeroDegreeMode);
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if matches!(spec.kind, Activation::Polynomial(_)) {
        return Err(Error::InvalidActivation(
            "truncation bounds apply to relu and erf".into(),
        ));
    }
    let tail = hermite_tail_l2(spec, k);
    let tail_term = (5.0 * tail.computed).sqrt();
    let tail_term_analytic = (5.0 * tail.bound.expect("analytic bound for relu/erf")).sqrt();
    let df = d as f64;
    let geom = 3.0 * (df + (df - 2.0) * (k as f64).ln()).exp() / n as f64;
    let clt_term = (geom * gaussian_deriv_moment(spec)).sqrt();
    let clt_term_unit = matches!(spec.kind, Activation::Erf).then(|| geom.sqrt());
    Ok(TruncationBound {
        k,
        tail_term,
        tail_term_analytic,
        clt_term,
        clt_term_unit,
        total: tail_term + clt_term,
        total_analytic: tail_term_analytic + clt_term,
    })
}

/// A Theorem 2 rate with the truncation degree behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub n: usize,
    pub d: usize,
    pub rate: f64,
    pub k: usize,
    /// `k` lies in the admissible window (ReLU) and past the measured tail
    /// crossover; the rate is only claimed for such `n`.
    pub valid: bool,
    pub crossover: Option<usize>,
    pub truncation: TruncationBound,
}

/// Largest degree scanned when measuring a tail crossover.
pub const CROSSOVER_SCAN: usize = 400;

/// `7 n^{−3/(2(2d−1))}` with `k` the smallest integer above `n^{2/(2d−1)}/3`.
pub fn relu_rate(n: usize, d: usize) -> Result<RateReport> {
    check_d(d, 3)?;
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    let nf = n as f64;
    let a = 2.0 / (2.0 * d as f64 - 1.0);
    let scale = nf.powf(a);
    let k = ((scale / 3.0).floor() as usize + 1).max(1);
    let in_window = (k as f64) < scale / std::f64::consts::E;
    let spec = ActivationSpec::relu();
    let crossover = hermite_tail_crossover(&spec, CROSSOVER_SCAN.max(k));
    let past = crossover.is_some_and(|c| k >= c);
    Ok(RateReport {
        n,
        d,
        rate: 7.0 * nf.powf(-1.5 / (2.0 * d as f64 - 1.0)),
        k,
        valid: in_window && past,
        crossover,
        truncation: truncation_bound(&spec, d, n, k)?,
    })
}

/// `√(e/log(3/2))^d (log n)^{(d−2)/2} / √n` with `k = ⌈log n / log(3/2)⌉`.
pub fn erf_rate(n: usize, d: usize) -> Result<RateReport> {
    check_d(d, 3)?;
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    let nf = n as f64;
    let df = d as f64;
    let l32 = 1.5f64.ln();
    let k = ((nf.ln() / l32).ceil() as usize).max(1);
    let spec = ActivationSpec::erf();
    let crossover = hermite_tail_crossover(&spec, CROSSOVER_SCAN.max(k));
    Ok(RateReport {
        n,
        d,
        rate: (std::f64::consts::E / l32).sqrt().powf(df) * nf.ln().powf((df - 2.0) / 2.0)
            / nf.sqrt(),
        k,
        valid: crossover.is_some_and(|c| k >= c),
        crossover,
        truncation: truncation_bound(&spec, d, n, k)?,
    })
}

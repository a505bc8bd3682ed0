//! The random network `P_n(x) = (1/√n) Σ s_i φ(w_i·x/√d)` on finite point
//! sets, the covariance of its Gaussian limit, and GP sampling.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orthopoly::{harmonic_dim, ActivationExpansion, ActivationSpec, GegenbauerBasis};
use crate::rng::{self, tags};

/// Jitter ladder tried by [`cholesky_with_jitter`], relative to the mean
/// diagonal.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// `count` i.i.d. uniform points on `√d·S^{d−1}`; point `i` uses stream `i`.
pub fn sample_sphere(d: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: d });
    }
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, tags::SPHERE, i as u64);
            let mut x = vec![0.0; d];
            rng::fill_sphere_point(&mut rng, &mut x);
            x
        })
        .collect())
}

/// Law of the outer weights `s_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SLaw {
    Rademacher,
    Gaussian,
    /// Moments only; usable for bounds but not for sampling.
    Generic {
        e_s2: f64,
        e_s4: f64,
    },
}

impl SLaw {
    /// `(E s², E s⁴)`.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            SLaw::Rademacher => (1.0, 1.0),
            SLaw::Gaussian => (1.0, 3.0),
            SLaw::Generic { e_s2, e_s4 } => (e_s2, e_s4),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            SLaw::Rademacher => Ok(if rng.random::<bool>() { 1.0 } else { -1.0 }),
            SLaw::Gaussian => Ok(rng.sample(StandardNormal)),
            SLaw::Generic { .. } => Err(Error::UnsupportedSampling(
                "generic outer-weight laws carry moments only".into(),
            )),
        }
    }
}

impl std::str::FromStr for SLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rademacher" => Ok(SLaw::Rademacher),
            "gaussian" | "normal" => Ok(SLaw::Gaussian),
            other => {
                let rest = other.strip_prefix("generic:").ok_or_else(|| {
                    Error::InvalidParameter(format!("unknown outer-weight law `{s}`"))
                })?;
                let v: Vec<f64> = rest
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::InvalidParameter(format!("generic law `{s}`: {e}")))?;
                match v[..] {
                    [e_s2, e_s4] => Ok(SLaw::Generic { e_s2, e_s4 }),
                    _ => Err(Error::InvalidParameter(format!(
                        "generic law `{s}` needs E s², E s⁴"
                    ))),
                }
            }
        }
    }
}

impl std::fmt::Display for SLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SLaw::Rademacher => write!(f, "rademacher"),
            SLaw::Gaussian => write!(f, "gaussian"),
            SLaw::Generic { e_s2, e_s4 } => write!(f, "generic:{e_s2},{e_s4}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub d: usize,
    pub n: usize,
    pub activation: ActivationSpec,
    pub s_law: SLaw,
    pub seed: u64,
}

fn check_points(d: usize, points: &[Vec<f64>]) -> Result<()> {
    for x in points {
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
    }
    Ok(())
}

/// `draws × points` matrix of independent network realizations. Draw `r`
/// uses stream `r`, so the output is independent of thread scheduling.
pub fn simulate_network(
    config: &NetworkConfig,
    points: &[Vec<f64>],
    draws: usize,
) -> Result<DMatrix<f64>> {
    let d = config.d;
    if d < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: d });
    }
    if config.n == 0 {
        return Err(Error::InvalidParameter("width n must be positive".into()));
    }
    check_points(d, points)?;
    if let SLaw::Generic { .. } = config.s_law {
        config.s_law.sample(&mut rng::stream(0, 0, 0))?;
    }
    let offset = config.activation.centering_offset(d)?;
    let m = points.len();
    let inv_sqrt_d = (d as f64).sqrt().recip();
    let inv_sqrt_n = (config.n as f64).sqrt().recip();
    let rows: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, tags::NETWORK, r as u64);
            let mut w = vec![0.0; d];
            let mut out = vec![0.0; m];
            for _ in 0..config.n {
                rng::fill_sphere_point(&mut rng, &mut w);
                let s = config.s_law.sample(&mut rng).expect("sampleable law");
                for (o, x) in out.iter_mut().zip(points) {
                    let t: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() * inv_sqrt_d;
                    *o += s * (config.activation.eval(t) - offset);
                }
            }
            out.iter_mut().for_each(|v| *v *= inv_sqrt_n);
            out
        })
        .collect();
    Ok(DMatrix::from_fn(draws, m, |r, p| rows[r][p]))
}

/// Covariance of the limiting Gaussian process on a point set.
#[derive(Debug, Clone)]
pub struct GPKernel {
    pub points: Vec<Vec<f64>>,
    pub matrix: DMatrix<f64>,
    /// `Σ_l φ̂_l²`.
    pub diag_value: f64,
    factor: DMatrix<f64>,
    jitter: f64,
}

/// `K(x, x') = Σ_l (φ̂_l²/√đ_l) P_l(x·x'/√d)`.
pub fn zonal_kernel(coeffs: &[f64], basis: &GegenbauerBasis, dot: f64) -> f64 {
    let d = basis.d() as f64;
    let t = (dot / d.sqrt()).clamp(-d.sqrt(), d.sqrt());
    let p = basis.eval_all(t);
    coeffs
        .iter()
        .enumerate()
        .map(|(l, c)| c * c / (harmonic_dim(basis.d(), l).expect("valid d") as f64).sqrt() * p[l])
        .sum()
}

pub fn gp_kernel(expansion: &ActivationExpansion, points: &[Vec<f64>]) -> Result<GPKernel> {
    let d = expansion.d;
    check_points(d, points)?;
    let coeffs = &expansion.gegenbauer;
    let basis = GegenbauerBasis::new(d, coeffs.len().saturating_sub(1))?;
    let m = points.len();
    let mut matrix = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let dot: f64 = if i == j {
                d as f64
            } else {
                points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum()
            };
            let v = zonal_kernel(coeffs, &basis, dot);
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    let diag_value = expansion.l2_norm_squared();
    GPKernel::from_matrix(points.to_vec(), matrix, diag_value)
}

impl GPKernel {
    /// Wraps a symmetric matrix, factoring it with the jitter ladder.
    pub fn from_matrix(
        points: Vec<Vec<f64>>,
        matrix: DMatrix<f64>,
        diag_value: f64,
    ) -> Result<Self> {
        let (factor, jitter) = cholesky_with_jitter(&matrix)?;
        Ok(Self {
            points,
            matrix,
            diag_value,
            factor,
            jitter,
        })
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lower Cholesky factor of `K + jitter·scale·I`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Relative jitter that was needed for the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

/// Cholesky factor of `k + j·s·I` for the first `j` in [`JITTER_LADDER`]
/// that succeeds, `s` the mean diagonal. The zero matrix factors as zero.
pub fn cholesky_with_jitter(k: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let m = k.nrows();
    if k.ncols() != m {
        return Err(Error::DimensionMismatch {
            left: m,
            right: k.ncols(),
        });
    }
    if k.iter().all(|v| *v == 0.0) {
        return Ok((DMatrix::zeros(m, m), 0.0));
    }
    let scale = (k.trace() / m as f64).abs().max(f64::MIN_POSITIVE);
    for &j in &JITTER_LADDER {
        let shifted = k + DMatrix::identity(m, m) * (j * scale);
        if let Some(c) = Cholesky::new(shifted) {
            return Ok((c.l(), j));
        }
    }
    Err(Error::CholeskyFailed(
        *JITTER_LADDER.last().expect("nonempty"),
    ))
}

/// `draws × m` samples of `N(0, K)`; draw `r` uses stream `r`.
pub fn sample_gp(kernel: &GPKernel, draws: usize, seed: u64) -> DMatrix<f64> {
    let m = kernel.len();
    let rows: Vec<DVector<f64>> = (0..draws)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, tags::GP, r as u64);
            let z = DVector::from_fn(m, |_, _| rng.sample(StandardNormal));
            &kernel.factor * z
        })
        .collect();
    DMatrix::from_fn(draws, m, |r, p| rows[r][p])
}

/// Entrywise second moment `E[X_p X_q]` of the rows of `samples` with its
/// standard error. Both the network and the GP have mean zero, so the
/// second moment is the covariance.
#[derive(Debug, Clone)]
pub struct EmpiricalCovariance {
    pub matrix: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
    pub draws: usize,
}

pub fn empirical_covariance(samples: &DMatrix<f64>) -> EmpiricalCovariance {
    let (n, m) = samples.shape();
    let nf = n as f64;
    let mut matrix = DMatrix::zeros(m, m);
    let mut stderr = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in p..m {
            let (mut s, mut s2) = (0.0, 0.0);
            for r in 0..n {
                let v = samples[(r, p)] * samples[(r, q)];
                s += v;
                s2 += v * v;
            }
            let mean = s / nf;
            let var = ((s2 / nf - mean * mean) * nf / (nf - 1.0).max(1.0)).max(0.0);
            let se = (var / nf).sqrt();
            matrix[(p, q)] = mean;
            matrix[(q, p)] = mean;
            stderr[(p, q)] = se;
            stderr[(q, p)] = se;
        }
    }
    EmpiricalCovariance {
        matrix,
        stderr,
        draws: n,
    }
}

pub fn mc_network_covariance(
    config: &NetworkConfig,
    points: &[Vec<f64>],
    draws: usize,
) -> Result<EmpiricalCovariance> {
    Ok(empirical_covariance(&simulate_network(
        config, points, draws,
    )?))
}

/// Largest `|a − b| / stderr` over entries (`stderr = 0` counts only if the
/// entries differ by more than `1e−12`).
pub fn max_z_score(empirical: &EmpiricalCovariance, target: &DMatrix<f64>) -> f64 {
    empirical
        .matrix
        .iter()
        .zip(target.iter())
        .zip(empirical.stderr.iter())
        .map(|((a, b), s)| {
            let diff = (a - b).abs();
            if *s > 0.0 {
                diff / s
            } else if diff <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

//! The Stein-identity suite and the convergence-rate sweep.

use std::time::Instant;

use rayon::prelude::*;

use crate::bounds::{theorem1_constant, MomentProfile};
use crate::error::{Error, Result};
use crate::harmonics::{
    build_stein_kernel, stein_identity_suite, Pairs, SteinKernelField, SteinReport, TestFunction,
};
use crate::netsim::{
    empirical_covariance, gp_kernel, sample_gp, sample_sphere, simulate_network, NetworkConfig,
    SLaw,
};
use crate::orthopoly::{expand_activation, ActivationSpec};
use crate::rng;
use crate::transport::{
    sphere_l2_cost, w2_empirical_exact, w2_gaussian, SampleCloud, ASSIGNMENT_LIMIT,
};

/// Residual threshold in standard errors.
/// Relative size below which an expansion coefficient counts as zero.
pub const COEFF_CUTOFF: f64 = 1e-12;

pub const STEIN_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct SteinCheck {
    /// Identity map, every `(i, c)` pair: `E[ỹỹᵀ]` against `E[τ]`.
    pub identity: SteinReport,
    /// Constant map and the random polynomial maps, diagonal pairs.
    pub suite: SteinReport,
    /// Identity map against the kernel with the diagonal entry of the
    /// largest-variance coordinate scaled by 1.1.
    pub corrupted: SteinReport,
}

impl SteinCheck {
    pub fn passed(&self) -> bool {
        self.identity.all_within(STEIN_SIGMAS) && self.suite.all_within(STEIN_SIGMAS)
    }

    /// The corrupted kernel must be rejected.
    pub fn control_rejected(&self) -> bool {
        !self.corrupted.all_within(STEIN_SIGMAS)
    }
}

/// `tests` random polynomial maps of degree ≤ `degree` with three monomials
/// per component.
pub fn random_test_functions(
    dim: usize,
    tests: usize,
    degree: u32,
    seed: u64,
) -> Vec<TestFunction> {
    (0..tests)
        .map(|t| TestFunction::random(format!("random-{t}"), dim, degree, 3, seed, t as u64))
        .collect()
}

/// Runs the identity, constant and random-cubic checks on one kernel, plus
/// the corrupted-kernel negative control, all on `samples` points.
pub fn run_stein_check(
    field: &SteinKernelField,
    tests: usize,
    samples: usize,
    seed: u64,
) -> Result<SteinCheck> {
    let dim = field.dim();
    let identity = stein_identity_suite(
        field,
        &[TestFunction::identity(dim)],
        samples,
        seed,
        Pairs::All,
    )?;
    let mut functions = vec![TestFunction::constant(dim, 1.0)];
    functions.extend(random_test_functions(dim, tests, 3, seed));
    let suite = stein_identity_suite(field, &functions, samples, seed, Pairs::Diagonal)?;
    let target = (0..dim)
        .max_by(|&a, &b| {
            field
                .embedding_covariance(a, a)
                .total_cmp(&field.embedding_covariance(b, b))
        })
        .filter(|&a| field.embedding_covariance(a, a) > 0.0)
        .ok_or_else(|| Error::InvalidParameter("all embedding coefficients vanish".into()))?;
    let corrupted = field.clone().corrupted(target, target, 1.1)?;
    let corrupted = stein_identity_suite(
        &corrupted,
        &[TestFunction::identity(dim)],
        samples,
        rng::mix(seed, 1),
        Pairs::Diagonal,
    )?;
    let active: Vec<bool> = (0..dim)
        .map(|a| field.embedding_covariance(a, a) > 0.0)
        .collect();
    let keep = |mut r: SteinReport| {
        r.rows.retain(|row| {
            active[row.coordinate] && active.get(row.component).copied().unwrap_or(true)
        });
        r
    };
    Ok(SteinCheck {
        identity: keep(identity),
        suite: keep(suite),
        corrupted: keep(corrupted),
    })
}

/// Zeroes coefficients at or below `COEFF_CUTOFF` times the largest one.
/// Quadrature leaves roundoff in modes an activation does not have.
pub fn significant_coefficients(coeffs: &[f64]) -> Vec<f64> {
    let top = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    coeffs
        .iter()
        .map(|&c| {
            if c.abs() <= COEFF_CUTOFF * top {
                0.0
            } else {
                c
            }
        })
        .collect()
}

/// Stein check for the centered degree-`k` expansion of `spec`.
pub fn stein_check_for(
    spec: &ActivationSpec,
    d: usize,
    k: usize,
    tests: usize,
    samples: usize,
    seed: u64,
) -> Result<SteinCheck> {
    let e = expand_activation(&spec.clone().centered(true), d, k)?;
    let field = build_stein_kernel(d, &significant_coefficients(&e.gegenbauer), k)?;
    run_stein_check(&field, tests, samples, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSweepConfig {
    pub d: usize,
    /// Polynomial activation; centered before use.
    pub activation: ActivationSpec,
    pub s_law: SLaw,
    pub widths: Vec<usize>,
    /// Draws per cloud `N`.
    pub samples: usize,
    /// Evaluation grid size `m`.
    pub grid: usize,
    pub seed: u64,
    /// Replace the network cloud by a third independent GP cloud.
    pub gaussian_control: bool,
}

/// One width of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub n: usize,
    pub w2_raw: f64,
    /// `√max(w2_raw² − bias_floor², 0)`.
    pub w2_debias: f64,
    pub bound_c_over_sqrt_n: f64,
    pub bias_floor: f64,
    /// Bures distance between `K` and the empirical covariance of the network cloud.
    pub w2_gauss_cov: f64,
    /// Wall-clock seconds; not part of any reproducible output.
    pub runtime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSweep {
    pub config: RateSweepConfig,
    pub grid_points: Vec<Vec<f64>>,
    pub c: f64,
    pub records: Vec<RateRecord>,
    /// Least-squares slope of `log w2_debias` on `log n`, smallest width
    /// excluded, over records with positive `w2_debias`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub fitted_points: usize,
}

/// Acceptance band for the fitted slope.
pub const SLOPE_BAND: (f64, f64) = (-0.65, -0.35);

impl RateSweep {
    pub fn slope_in_band(&self) -> bool {
        self.slope
            .is_some_and(|s| (SLOPE_BAND.0..=SLOPE_BAND.1).contains(&s))
    }

    /// `w2_raw ≤ C/√n + 2·bias_floor` for every width.
    pub fn raw_within_bound(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.w2_raw <= r.bound_c_over_sqrt_n + 2.0 * r.bias_floor)
    }
}

mod seeds {
    pub const GRID: u64 = 0x6772_6964;
    pub const NETWORK: u64 = 0x6e65_7477;
    pub const GP_A: u64 = 0x6770_5f61;
    pub const GP_B: u64 = 0x6770_5f62;
    pub const GP_C: u64 = 0x6770_5f63;
}

/// Least-squares fit `y = a + b x`; `None` below two points.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

pub fn rate_sweep(config: &RateSweepConfig) -> Result<RateSweep> {
    let d = config.d;
    if config.widths.len() < 4 {
        return Err(Error::InvalidParameter(
            "a rate sweep needs at least four widths".into(),
        ));
    }
    if config.widths.windows(2).any(|w| w[0] >= w[1]) || config.widths[0] == 0 {
        return Err(Error::InvalidParameter(
            "widths must be positive and strictly increasing".into(),
        ));
    }
    if config.samples > ASSIGNMENT_LIMIT {
        return Err(Error::AssignmentTooLarge {
            size: config.samples,
            limit: ASSIGNMENT_LIMIT,
        });
    }
    if config.samples == 0 || config.grid == 0 {
        return Err(Error::InvalidParameter(
            "samples and grid must be positive".into(),
        ));
    }
    let degree = config.activation.degree().ok_or_else(|| {
        Error::InvalidActivation("rate sweeps need a polynomial activation".into())
    })?;
    if degree == 0 {
        return Err(Error::InvalidActivation(
            "the centered activation vanishes".into(),
        ));
    }
    let spec = config.activation.clone().centered(true);
    let expansion = expand_activation(&spec, d, degree)?;
    let moments = MomentProfile::from_law(config.s_law)?;
    let c = theorem1_constant(d, degree, &expansion, &moments, 1)?.c;
    let grid_points = sample_sphere(d, config.grid, rng::mix(config.seed, seeds::GRID))?;
    let kernel = gp_kernel(&expansion, &grid_points)?;

    let records = config
        .widths
        .par_iter()
        .map(|&n| -> Result<RateRecord> {
            let start = Instant::now();
            let cell = rng::mix(config.seed, n as u64);
            let gp_a = sample_gp(&kernel, config.samples, rng::mix(cell, seeds::GP_A));
            let gp_b = sample_gp(&kernel, config.samples, rng::mix(cell, seeds::GP_B));
            let net = if config.gaussian_control {
                sample_gp(&kernel, config.samples, rng::mix(cell, seeds::GP_C))
            } else {
                let net_config = NetworkConfig {
                    d,
                    n,
                    activation: spec.clone(),
                    s_law: config.s_law,
                    seed: rng::mix(cell, seeds::NETWORK),
                };
                simulate_network(&net_config, &grid_points, config.samples)?
            };
            let w2_gauss_cov = w2_gaussian(&kernel.matrix, &empirical_covariance(&net).matrix)?;
            let (a, b, x) = (
                SampleCloud::from_matrix(&gp_a)?,
                SampleCloud::from_matrix(&gp_b)?,
                SampleCloud::from_matrix(&net)?,
            );
            let w2_raw = w2_empirical_exact(&sphere_l2_cost(&x, &a)?)?;
            let bias_floor = w2_empirical_exact(&sphere_l2_cost(&a, &b)?)?;
            Ok(RateRecord {
                n,
                w2_raw,
                w2_debias: (w2_raw * w2_raw - bias_floor * bias_floor).max(0.0).sqrt(),
                bound_c_over_sqrt_n: c / (n as f64).sqrt(),
                bias_floor,
                w2_gauss_cov,
                runtime: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .skip(1)
        .filter(|r| r.w2_debias > 0.0)
        .map(|r| ((r.n as f64).ln(), r.w2_debias.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys);
    Ok(RateSweep {
        config: config.clone(),
        grid_points,
        c,
        records,
        slope: fit.map(|f| f.1),
        intercept: fit.map(|f| f.0),
        fitted_points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> ActivationSpec {
        let h = 5f64.sqrt() / 2.0;
        ActivationSpec::polynomial(vec![-h, 0.0, h]).unwrap()
    }

    #[test]
    fn line_fit() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.5 * x).collect();
        let (a, b) = fit_line(&xs, &ys).unwrap();
        assert!((a - 1.5).abs() < 1e-14 && (b + 0.5).abs() < 1e-14);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let cfg = RateSweepConfig {
            d: 3,
            activation: p2(),
            s_law: SLaw::Rademacher,
            widths: vec![2, 4, 8, 16],
            samples: 64,
            grid: 4,
            seed: 5,
            gaussian_control: false,
        };
        let a = rate_sweep(&cfg).unwrap();
        let b = rate_sweep(&cfg).unwrap();
        assert_eq!(a.c, b.c);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(
                (x.w2_raw, x.bias_floor, x.w2_gauss_cov),
                (y.w2_raw, y.bias_floor, y.w2_gauss_cov)
            );
            assert!(x.w2_debias <= x.w2_raw);
        }
        assert!((a.c - 15.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_validation() {
        let cfg = RateSweepConfig {
            d: 3,
            activation: p2(),
            s_law: SLaw::Rademacher,
            widths: vec![2, 4, 4, 16],
            samples: 8,
            grid: 2,
            seed: 1,
            gaussian_control: false,
        };
        assert!(rate_sweep(&cfg).is_err());
        let cfg = RateSweepConfig {
            widths: vec![1, 2, 3],
            ..cfg
        };
        assert!(rate_sweep(&cfg).is_err());
        let cfg = RateSweepConfig {
            widths: vec![1, 2, 3, 4],
            activation: ActivationSpec::relu(),
            ..cfg
        };
        assert!(matches!(rate_sweep(&cfg), Err(Error::InvalidActivation(_))));
    }

    #[test]
    fn stein_check_small() {
        let check = stein_check_for(&p2(), 3, 2, 3, 20_000, 3).unwrap();
        assert!(check.passed());
        assert!(check.control_rejected());
    }
}

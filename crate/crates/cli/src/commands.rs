//! The five subcommands. Each writes its tables under `config.out` and
//! reports whether its criterion held.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use spherenet::bounds::{erf_rate, relu_rate, theorem1_constant, MomentProfile, RateReport};
use spherenet::experiment::{
    rate_sweep, stein_check_for, RateSweep, RateSweepConfig, STEIN_SIGMAS,
};
use spherenet::harmonics::SteinReport;
use spherenet::netsim::{gp_kernel, sample_sphere};
use spherenet::orthopoly::{expand_activation, Activation, ActivationSpec};

use crate::config::{Command, ExperimentConfig};
use crate::output::{loglog_svg, num, write_file, Series, Table};

/// Degree used when a non-polynomial activation is expanded without `lmax`.
pub const DEFAULT_LMAX: usize = 20;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    match config.command {
        Command::Expand => cmd_expand(config),
        Command::Bounds => cmd_bounds(config),
        Command::SteinCheck => cmd_stein_check(config),
        Command::RateSweep => cmd_rate_sweep(config),
        Command::Kernel => cmd_kernel(config),
    }
}

fn expansion_degree(config: &ExperimentConfig) -> usize {
    config
        .lmax
        .or(config.activation.degree())
        .unwrap_or(DEFAULT_LMAX)
}

pub fn expansion_table(config: &ExperimentConfig) -> Result<Table> {
    let e = expand_activation(&config.activation, config.d, expansion_degree(config))?;
    let mut t = Table::new(["l", "phi_hat_l", "a_l"]);
    t.note(format!(
        "d={}, activation={}, constant_mode={}",
        config.d,
        config.activation,
        num(e.constant_mode)
    ));
    for (l, g, h) in e.rows() {
        t.push(vec![l.to_string(), num(g), num(h)]);
    }
    Ok(t)
}

pub fn cmd_expand(config: &ExperimentConfig) -> Result<Outcome> {
    let path = expansion_table(config)?.write(config, "expansion.csv")?;
    Ok(Outcome {
        passed: true,
        files: vec![path],
        summary: Vec::new(),
    })
}

fn polynomial_bounds(config: &ExperimentConfig, moments: &MomentProfile) -> Result<Table> {
    let k = config.activation.degree().expect("polynomial");
    if k == 0 {
        bail!("a constant activation has no centered part");
    }
    let e = expand_activation(&config.activation.clone().centered(true), config.d, k)?;
    let mut t = Table::new([
        "d",
        "n",
        "k",
        "S",
        "C",
        "w2_bound",
        "internal_s2",
        "internal_w2_bound",
        "dimension_sum",
        "dimension_sum_bound",
        "dirichlet_form",
        "dirichlet_bound",
        "derivative_moment",
        "second_moment",
    ]);
    t.note("S is the internal discrepancy after outer-weight scaling; C is the stated constant");
    for &n in &config.widths {
        let r = theorem1_constant(config.d, k, &e, moments, n)?;
        t.push(vec![
            r.d.to_string(),
            n.to_string(),
            k.to_string(),
            num(r.internal_scaled_s2.sqrt()),
            num(r.c),
            num(r.w2_bound),
            num(r.internal_s2),
            num(r.internal_w2_bound),
            num(r.dimension_sum.exact),
            num(r.dimension_sum.bound),
            num(r.dirichlet_form),
            num(r.dirichlet_bound),
            num(r.derivative_moment),
            num(r.second_moment),
        ]);
    }
    Ok(t)
}

fn rate_bounds(
    config: &ExperimentConfig,
    rate: fn(usize, usize) -> spherenet::Result<RateReport>,
) -> Result<Table> {
    let mut t = Table::new([
        "d",
        "n",
        "k",
        "rate",
        "valid",
        "crossover",
        "tail_term",
        "tail_term_analytic",
        "clt_term",
        "truncation_total",
    ]);
    for &n in &config.widths {
        let r = rate(n, config.d)?;
        t.push(vec![
            r.d.to_string(),
            n.to_string(),
            r.k.to_string(),
            num(r.rate),
            r.valid.to_string(),
            r.crossover.map_or_else(String::new, |c| c.to_string()),
            num(r.truncation.tail_term),
            num(r.truncation.tail_term_analytic),
            num(r.truncation.clt_term),
            num(r.truncation.total),
        ]);
    }
    Ok(t)
}

pub fn bounds_table(config: &ExperimentConfig) -> Result<Table> {
    let moments = MomentProfile::from_law(config.s_law)?;
    match config.activation.kind {
        Activation::Polynomial(_) => polynomial_bounds(config, &moments),
        Activation::Relu => rate_bounds(config, relu_rate),
        Activation::Erf => rate_bounds(config, erf_rate),
    }
}

pub fn cmd_bounds(config: &ExperimentConfig) -> Result<Outcome> {
    let table = bounds_table(config)?;
    let path = table.write(config, "bounds.csv")?;
    Ok(Outcome {
        passed: true,
        files: vec![path],
        summary: Vec::new(),
    })
}

fn stein_rows(t: &mut Table, prefix: &str, report: &SteinReport) {
    for r in &report.rows {
        let id = if prefix.is_empty() {
            r.test_id.clone()
        } else {
            format!("{prefix}{}", r.test_id)
        };
        t.push(vec![
            id,
            format!("{}:{}", r.coordinate, r.component),
            num(r.lhs),
            num(r.rhs),
            num(r.residual),
            num(r.stderr),
        ]);
    }
}

pub fn cmd_stein_check(config: &ExperimentConfig) -> Result<Outcome> {
    let degree = config
        .activation
        .degree()
        .context("stein-check needs a polynomial activation")?;
    let k = config.lmax.unwrap_or(degree);
    if !(1..=3).contains(&k) {
        bail!("stein-check supports kernel degrees 1..=3, got {k}");
    }
    let check = stein_check_for(
        &config.activation,
        config.d,
        k,
        config.tests,
        config.samples,
        config.seed,
    )?;
    let mut t = Table::new(["test_id", "coordinate", "lhs", "rhs", "residual", "stderr"]);
    t.note(format!(
        "d={}, k={k}, samples={}, threshold={STEIN_SIGMAS} stderr; coordinate is i:c for E[y_i f_c(y)]",
        config.d, config.samples
    ));
    stein_rows(&mut t, "", &check.identity);
    stein_rows(&mut t, "", &check.suite);
    stein_rows(&mut t, "corrupted:", &check.corrupted);
    let path = t.write(config, "stein_check.csv")?;
    let summary = vec![
        format!("identity worst z = {:.3}", check.identity.worst_z()),
        format!(
            "suite worst z = {:.3} over {} rows",
            check.suite.worst_z(),
            check.suite.rows.len()
        ),
        format!(
            "corrupted kernel worst z = {:.3} (must exceed {STEIN_SIGMAS})",
            check.corrupted.worst_z()
        ),
    ];
    Ok(Outcome {
        passed: check.passed() && check.control_rejected(),
        files: vec![path],
        summary,
    })
}

pub fn sweep_config(config: &ExperimentConfig) -> RateSweepConfig {
    RateSweepConfig {
        d: config.d,
        activation: config.activation.clone(),
        s_law: config.s_law,
        widths: config.widths.clone(),
        samples: config.samples,
        grid: config.grid,
        seed: config.seed,
        gaussian_control: config.control,
    }
}

pub fn sweep_table(sweep: &RateSweep) -> Table {
    let mut t = Table::new([
        "n",
        "N_samples",
        "grid_m",
        "w2_raw",
        "w2_debias",
        "bound_C_over_sqrt_n",
        "bias_floor",
        "w2_gauss_cov",
    ]);
    let slope = sweep.slope.map_or_else(|| "none".to_string(), num);
    t.note(format!(
        "C={}, slope={slope} over {} points (smallest width excluded), gaussian_control={}",
        num(sweep.c),
        sweep.fitted_points,
        sweep.config.gaussian_control
    ));
    for r in &sweep.records {
        t.push(vec![
            r.n.to_string(),
            sweep.config.samples.to_string(),
            sweep.config.grid.to_string(),
            num(r.w2_raw),
            num(r.w2_debias),
            num(r.bound_c_over_sqrt_n),
            num(r.bias_floor),
            num(r.w2_gauss_cov),
        ]);
    }
    t
}

pub fn sweep_svg(sweep: &RateSweep) -> String {
    let raw: Vec<(f64, f64)> = sweep
        .records
        .iter()
        .map(|r| (r.n as f64, r.w2_raw))
        .collect();
    let debias: Vec<(f64, f64)> = sweep
        .records
        .iter()
        .map(|r| (r.n as f64, r.w2_debias))
        .collect();
    let bound: Vec<(f64, f64)> = sweep
        .records
        .iter()
        .map(|r| (r.n as f64, r.bound_c_over_sqrt_n))
        .collect();
    let fit: Vec<(f64, f64)> = match (sweep.slope, sweep.intercept) {
        (Some(b), Some(a)) => sweep
            .records
            .iter()
            .map(|r| (r.n as f64, (a + b * (r.n as f64).ln()).exp()))
            .collect(),
        _ => Vec::new(),
    };
    loglog_svg(
        "W2 against width",
        &[
            Series {
                label: "raw W2",
                colour: "#888888",
                points: raw,
                line: false,
            },
            Series {
                label: "debiased W2",
                colour: "#1f77b4",
                points: debias,
                line: false,
            },
            Series {
                label: "least-squares fit",
                colour: "#1f77b4",
                points: fit,
                line: true,
            },
            Series {
                label: "C/sqrt(n)",
                colour: "#d62728",
                points: bound,
                line: true,
            },
        ],
    )
}

pub fn cmd_rate_sweep(config: &ExperimentConfig) -> Result<Outcome> {
    let sweep = rate_sweep(&sweep_config(config))?;
    let csv_path = sweep_table(&sweep).write(config, "rate_sweep.csv")?;
    let svg_path = config.out.join("rate_sweep.svg");
    write_file(&svg_path, &sweep_svg(&sweep))?;
    for r in &sweep.records {
        eprintln!("n={} runtime={:.2}s", r.n, r.runtime);
    }
    let summary = vec![
        format!(
            "slope = {:?} (band {:?})",
            sweep.slope,
            spherenet::experiment::SLOPE_BAND
        ),
        format!(
            "raw within C/sqrt(n) + 2 floor: {}",
            sweep.raw_within_bound()
        ),
    ];
    let passed = if config.control {
        true
    } else {
        sweep.slope_in_band() && sweep.raw_within_bound()
    };
    Ok(Outcome {
        passed,
        files: vec![csv_path, svg_path],
        summary,
    })
}

pub fn kernel_table(config: &ExperimentConfig) -> Result<(Table, f64)> {
    let spec: &ActivationSpec = &config.activation;
    let e = expand_activation(spec, config.d, expansion_degree(config))?;
    let points = sample_sphere(config.d, config.grid, config.seed)?;
    let k = gp_kernel(&e, &points)?;
    let mut header: Vec<String> = vec!["point".into()];
    header.extend((0..config.d).map(|i| format!("x{i}")));
    header.extend((0..points.len()).map(|j| format!("k{j}")));
    let mut t = Table::new(header);
    t.note(format!(
        "diag_value={}, cholesky_jitter={}",
        num(k.diag_value),
        num(k.jitter())
    ));
    for (i, x) in points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(x.iter().map(|v| num(*v)));
        row.extend((0..points.len()).map(|j| num(k.matrix[(i, j)])));
        t.push(row);
    }
    Ok((t, k.jitter()))
}

pub fn cmd_kernel(config: &ExperimentConfig) -> Result<Outcome> {
    let (t, jitter) = kernel_table(config)?;
    let path = t.write(config, "kernel.csv")?;
    Ok(Outcome {
        passed: true,
        files: vec![path],
        summary: vec![format!(
            "PSD: Cholesky succeeded with relative jitter {jitter:e}"
        )],
    })
}

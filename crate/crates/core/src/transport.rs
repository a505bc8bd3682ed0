//! 2-Wasserstein distances: Bures between centered Gaussians, exact
//! assignment between equal-size clouds, and log-domain Sinkhorn.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::netsim::{sample_gp, GPKernel};
use crate::rng;

/// Largest cloud accepted by [`w2_empirical_exact`].
pub const ASSIGNMENT_LIMIT: usize = 8192;

/// Tolerance (relative to the largest eigenvalue) for treating a slightly
/// negative eigenvalue as zero.
const PSD_TOL: f64 = 1e-9;

fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if min < -PSD_TOL * top.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    let sqrt = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose())
}

fn is_diagonal(a: &DMatrix<f64>) -> bool {
    a.iter()
        .enumerate()
        .all(|(idx, v)| idx % (a.nrows() + 1) == 0 || *v == 0.0)
}

/// `√(Tr Σ₁ + Tr Σ₂ − 2 Tr (Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2})`.
pub fn w2_gaussian(cov1: &DMatrix<f64>, cov2: &DMatrix<f64>) -> Result<f64> {
    if cov1.shape() != cov2.shape() {
        return Err(Error::DimensionMismatch {
            left: cov1.nrows(),
            right: cov2.nrows(),
        });
    }
    if cov1.nrows() != cov1.ncols() {
        return Err(Error::DimensionMismatch {
            left: cov1.nrows(),
            right: cov1.ncols(),
        });
    }
    if is_diagonal(cov1) && is_diagonal(cov2) {
        // commuting case: Σ (√λ − √μ)²
        let mut s = 0.0;
        for i in 0..cov1.nrows() {
            let (a, b) = (cov1[(i, i)], cov2[(i, i)]);
            if a < 0.0 || b < 0.0 {
                return Err(Error::NotPositiveSemidefinite(a.min(b)));
            }
            s += (a.sqrt() - b.sqrt()).powi(2);
        }
        return Ok(s.sqrt());
    }
    let sym = |a: &DMatrix<f64>| (a + a.transpose()) * 0.5;
    let (c1, c2) = (sym(cov1), sym(cov2));
    // Tr (Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2} is the nuclear norm of Σ₁^{1/2} Σ₂^{1/2};
    // taking singular values avoids squaring small eigenvalues
    let cross = (psd_sqrt(&c1)? * psd_sqrt(&c2)?).singular_values().sum();
    Ok((c1.trace() + c2.trace() - 2.0 * cross).max(0.0).sqrt())
}

/// `N` function samples on a shared grid of `m` points, uniform weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl SampleCloud {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.is_empty() {
            return Err(Error::InvalidParameter(
                "a sample cloud needs at least one sample".into(),
            ));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                left: m,
                right: r.len(),
            });
        }
        Ok(Self {
            n: rows.len(),
            m,
            data: rows.concat(),
        })
    }

    /// Rows of a `draws × m` matrix.
    pub fn from_matrix(samples: &DMatrix<f64>) -> Result<Self> {
        let (n, m) = samples.shape();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "a sample cloud needs at least one sample".into(),
            ));
        }
        let mut data = Vec::with_capacity(n * m);
        for r in 0..n {
            data.extend(samples.row(r).iter());
        }
        Ok(Self { n, m, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            n: self.n,
            m: self.m,
            data: self.data.iter().map(|v| v * lambda).collect(),
        }
    }
}

/// Squared sphere-`L²` costs `(1/m) Σ_p (A_i(p) − B_j(p))²`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len().max(1) as f64
    }
}

pub fn sphere_l2_cost(a: &SampleCloud, b: &SampleCloud) -> Result<CostMatrix> {
    if a.m != b.m {
        return Err(Error::DimensionMismatch {
            left: a.m,
            right: b.m,
        });
    }
    let inv_m = 1.0 / a.m.max(1) as f64;
    let data: Vec<f64> = (0..a.n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = a.sample(i);
            (0..b.n).map(move |j| {
                let y = b.sample(j);
                x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() * inv_m
            })
        })
        .collect();
    Ok(CostMatrix {
        rows: a.n,
        cols: b.n,
        data,
    })
}

/// Minimum-cost perfect matching of a square matrix by successive shortest
/// augmenting paths with dual potentials. Returns the column of each row.
pub fn solve_assignment(cost: &CostMatrix) -> Result<Vec<usize>> {
    let n = cost.rows;
    if cost.cols != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: cost.cols,
        });
    }
    if n > ASSIGNMENT_LIMIT {
        return Err(Error::AssignmentTooLarge {
            size: n,
            limit: ASSIGNMENT_LIMIT,
        });
    }
    // 1-based columns; column 0 is the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let crow = cost.row(i0 - 1);
            let ui0 = u[i0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = crow[j - 1] - ui0 - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    Ok(assignment)
}

/// `√(min_π (1/N) Σ_i cost(i, π(i)))`.
pub fn w2_empirical_exact(cost: &CostMatrix) -> Result<f64> {
    let assignment = solve_assignment(cost)?;
    let total: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost.get(i, j))
        .sum();
    Ok((total / cost.rows.max(1) as f64).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// `√⟨P, C⟩` for the entropic plan `P`; biased upward relative to exact OT.
    pub value: f64,
    pub iterations: usize,
    /// `Σ_i |Σ_j P_ij − 1/N|` at termination.
    pub violation: f64,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Entropic OT with uniform marginals, solved in the log domain with
/// ε-scaling from `max(cost)` down to `epsilon`. `max_iter` bounds the
/// iterations spent at the target `epsilon`.
pub fn w2_sinkhorn(
    cost: &CostMatrix,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SinkhornResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (r, c) = (cost.rows, cost.cols);
    let log_a = -(r as f64).ln();
    let log_b = -(c as f64).ln();
    let mut f = vec![0.0; r];
    let mut g = vec![0.0; c];
    let cmax = cost.data.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut eps = epsilon.max(cmax);
    let mut iterations = 0;
    loop {
        let at_target = eps <= epsilon;
        let budget = if at_target { max_iter } else { 100 };
        let mut violation = f64::INFINITY;
        for _ in 0..budget {
            iterations += 1;
            for (i, fi) in f.iter_mut().enumerate() {
                let row = cost.row(i);
                *fi = eps * log_a - eps * log_sum_exp((0..c).map(|j| (g[j] - row[j]) / eps));
            }
            for (j, gj) in g.iter_mut().enumerate() {
                *gj =
                    eps * log_b - eps * log_sum_exp((0..r).map(|i| (f[i] - cost.get(i, j)) / eps));
            }
            violation = (0..r)
                .map(|i| {
                    let row = cost.row(i);
                    let s: f64 = (0..c).map(|j| ((f[i] + g[j] - row[j]) / eps).exp()).sum();
                    (s - 1.0 / r as f64).abs()
                })
                .sum();
            if violation <= tol {
                break;
            }
        }
        if at_target {
            if violation > tol {
                return Err(Error::SinkhornNotConverged {
                    iterations,
                    tol,
                    violation,
                });
            }
            let mut total = 0.0;
            for (i, fi) in f.iter().enumerate() {
                for (gj, cij) in g.iter().zip(cost.row(i)) {
                    total += ((fi + gj - cij) / eps).exp() * cij;
                }
            }
            return Ok(SinkhornResult {
                value: total.max(0.0).sqrt(),
                iterations,
                violation,
            });
        }
        eps = (eps * 0.5).max(epsilon);
    }
}

/// Exact W₂ between two independent `N`-draw GP clouds with seeds derived
/// from `seed`.
pub fn bias_floor(kernel: &GPKernel, draws: usize, seed: u64) -> Result<f64> {
    bias_floor_with_seeds(kernel, draws, rng::mix(seed, 0xA), rng::mix(seed, 0xB))
}

pub fn bias_floor_with_seeds(
    kernel: &GPKernel,
    draws: usize,
    seed_a: u64,
    seed_b: u64,
) -> Result<f64> {
    if draws > ASSIGNMENT_LIMIT {
        return Err(Error::AssignmentTooLarge {
            size: draws,
            limit: ASSIGNMENT_LIMIT,
        });
    }
    let a = SampleCloud::from_matrix(&sample_gp(kernel, draws, seed_a))?;
    let b = SampleCloud::from_matrix(&sample_gp(kernel, draws, seed_b))?;
    w2_empirical_exact(&sphere_l2_cost(&a, &b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_cloud(n: usize, m: usize, seed: u64) -> SampleCloud {
        let mut r = rng::stream(seed, 99, 0);
        SampleCloud::new(
            (0..n)
                .map(|_| (0..m).map(|_| r.random::<f64>()).collect())
                .collect(),
        )
        .unwrap()
    }

    fn brute_force(cost: &CostMatrix) -> f64 {
        fn rec(cost: &CostMatrix, i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if i == cost.rows() {
                *best = best.min(acc);
                return;
            }
            for j in 0..cost.cols() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, i + 1, used, acc + cost.get(i, j), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.cols()], 0.0, &mut best);
        (best / cost.rows() as f64).sqrt()
    }

    #[test]
    fn bures_reductions() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(w2_gaussian(&a, &a).unwrap() < 1e-7);
        let one = |v| DMatrix::from_element(1, 1, v);
        assert_eq!(w2_gaussian(&one(4.0), &one(9.0)).unwrap(), 1.0);
        let d1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0, 0.25]));
        let d2 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0, 1.0]));
        assert_eq!(w2_gaussian(&d1, &d2).unwrap(), (1.0f64 + 1.0 + 0.25).sqrt());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            w2_gaussian(&bad, &a),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 3.0]);
        let (x, y) = (w2_gaussian(&a, &b).unwrap(), w2_gaussian(&b, &a).unwrap());
        assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn cost_examples() {
        let a = SampleCloud::new(vec![vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap();
        let b = SampleCloud::new(vec![vec![0.0, 0.0]]).unwrap();
        let c = sphere_l2_cost(&a, &b).unwrap();
        assert_eq!((c.get(0, 0), c.get(1, 0)), (1.0, 9.0));
        assert_eq!(sphere_l2_cost(&a, &a).unwrap().get(1, 1), 0.0);
        let bad = SampleCloud::new(vec![vec![0.0]]).unwrap();
        assert!(sphere_l2_cost(&a, &bad).is_err());
        assert!(SampleCloud::new(vec![vec![0.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn assignment_matches_brute_force() {
        for n in 1..=6 {
            for seed in 0..5 {
                let (a, b) = (random_cloud(n, 3, seed), random_cloud(n, 3, seed + 100));
                let c = sphere_l2_cost(&a, &b).unwrap();
                assert!((w2_empirical_exact(&c).unwrap() - brute_force(&c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_sorted_matching() {
        let (a, b) = (random_cloud(50, 1, 1), random_cloud(50, 1, 2));
        let mut x: Vec<f64> = (0..50).map(|i| a.sample(i)[0]).collect();
        let mut y: Vec<f64> = (0..50).map(|i| b.sample(i)[0]).collect();
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        let want = (x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / 50.0).sqrt();
        let got = w2_empirical_exact(&sphere_l2_cost(&a, &b).unwrap()).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn sinkhorn_close_to_exact() {
        let (a, b) = (random_cloud(64, 4, 5), random_cloud(64, 4, 6));
        let c = sphere_l2_cost(&a, &b).unwrap();
        let exact = w2_empirical_exact(&c).unwrap();
        let s = w2_sinkhorn(&c, 1e-3 * c.mean(), 1e-6, 20_000).unwrap();
        assert!(s.value >= exact - 1e-9);
        assert!((s.value - exact) / exact < 0.02, "{} vs {exact}", s.value);
        let wide = w2_sinkhorn(&c, 1e6, 1e-12, 1000).unwrap();
        assert!((wide.value - c.mean().sqrt()).abs() < 1e-5);
    }

    #[test]
    fn size_limit() {
        let c = CostMatrix::from_fn(ASSIGNMENT_LIMIT + 1, 1, |_, _| 0.0);
        assert!(solve_assignment(&c).is_err());
    }
}

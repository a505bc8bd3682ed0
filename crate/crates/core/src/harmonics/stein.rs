//! The Stein kernel of the harmonic embedding
//! `ỹ_{l,m}(w) = (φ̂_l/√đ_l) Y_{l,m}(w)`, `1 ≤ l ≤ k`, built from the
//! tangent gradients `∇Y_{l,m} − (l/d) Y_{l,m} w`, and a Monte-Carlo check of
//! the identity `E[ỹ_i g(ỹ)] = Σ_j E[τ_ij ∂_j g(ỹ)]`.

use rayon::prelude::*;

use super::basis::{build_harmonic_basis, radial_derivative, sphere_inner, HarmonicBasis};
use super::poly::{CompiledPoly, MultiPoly, PowerTable};
use crate::error::{Error, Result};
use crate::rng::{self, tags};

/// Samples per Monte-Carlo chunk; each chunk owns one random stream.
pub const CHUNK: usize = 8192;

/// `τ_{l,m;l',m'}` for `1 ≤ l, l' ≤ k` as polynomials in `w`.
#[derive(Debug, Clone)]
pub struct SteinKernelField {
    d: usize,
    k: usize,
    coeffs: Vec<f64>,
    bases: Vec<HarmonicBasis>,
    index: Vec<(usize, usize)>,
    entries: Vec<Vec<MultiPoly>>,
    values: Vec<CompiledPoly>,
    gradients: Vec<Vec<CompiledPoly>>,
    scale: Vec<Vec<f64>>,
}

/// Builds the kernel for `φ̂_1..φ̂_k`; `coeffs[0]` (the constant mode) is
/// not part of the embedding and is ignored.
pub fn build_stein_kernel(d: usize, coeffs: &[f64], k: usize) -> Result<SteinKernelField> {
    if k == 0 {
        return Err(Error::ZeroDegreeMode);
    }
    if coeffs.len() <= k {
        return Err(Error::DegreeOutOfRange {
            degree: k,
            lmax: coeffs.len().saturating_sub(1),
        });
    }
    let bases = (1..=k)
        .map(|l| build_harmonic_basis(d, l))
        .collect::<Result<Vec<_>>>()?;
    let mut index = Vec::new();
    let mut polys = Vec::new();
    for b in &bases {
        for (m, y) in b.elements.iter().enumerate() {
            index.push((b.l, m + 1));
            polys.push(y);
        }
    }
    let gradients: Vec<Vec<MultiPoly>> = polys.iter().map(|y| y.gradient()).collect();
    let df = d as f64;
    let w: Vec<MultiPoly> = (0..d)
        .map(|i| MultiPoly::variable(d, i))
        .collect::<Result<_>>()?;
    let dim = index.len();
    let mut entries = vec![vec![MultiPoly::zero(d); dim]; dim];
    for a in 0..dim {
        let (l, _) = index[a];
        let ya = polys[a];
        let tangent: Vec<MultiPoly> = (0..d)
            .map(|i| &gradients[a][i] - &(&w[i] * ya).scale(l as f64 / df))
            .collect();
        let c_l = coeffs[l] / (harmonic_dim(d, l) as f64).sqrt();
        let pre = df / (l as f64 * (l as f64 + df - 2.0));
        for b in 0..dim {
            let (lp, _) = index[b];
            let c = c_l * coeffs[lp] / (harmonic_dim(d, lp) as f64).sqrt() * pre;
            if c == 0.0 {
                continue;
            }
            let dot = (0..d).fold(MultiPoly::zero(d), |acc, i| {
                &acc + &(&tangent[i] * &gradients[b][i])
            });
            entries[a][b] = dot.scale(c).pruned(1e-14);
        }
    }
    let values = polys.iter().map(|y| CompiledPoly::new(y)).collect();
    let gradients = gradients
        .iter()
        .map(|g| g.iter().map(CompiledPoly::new).collect())
        .collect();
    Ok(SteinKernelField {
        d,
        k,
        coeffs: coeffs[..=k].to_vec(),
        bases,
        index,
        entries,
        values,
        gradients,
        scale: vec![vec![1.0; dim]; dim],
    })
}

fn harmonic_dim(d: usize, l: usize) -> u64 {
    crate::orthopoly::harmonic_dim(d, l).expect("validated dimension")
}

/// One point's embedding and kernel.
#[derive(Debug, Clone)]
pub struct KernelSample {
    pub y: Vec<f64>,
    pub tau: Vec<f64>,
}

impl SteinKernelField {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn bases(&self) -> &[HarmonicBasis] {
        &self.bases
    }

    /// Embedding dimension `Σ_{l=1}^k đ_l`.
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// `(l, m)` of each embedding coordinate, `m` from 1.
    pub fn index(&self) -> &[(usize, usize)] {
        &self.index
    }

    pub fn entry(&self, a: usize, b: usize) -> &MultiPoly {
        &self.entries[a][b]
    }

    /// Multiplies one entry by `factor` everywhere it is used. With any
    /// factor other than 1 the result is no longer a Stein kernel.
    pub fn corrupted(mut self, a: usize, b: usize, factor: f64) -> Result<Self> {
        let dim = self.dim();
        for i in [a, b] {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, d: dim });
            }
        }
        self.entries[a][b] = self.entries[a][b].scale(factor);
        self.scale[a][b] *= factor;
        Ok(self)
    }

    fn embedding_scale(&self, a: usize) -> f64 {
        let l = self.index[a].0;
        self.coeffs[l] / (harmonic_dim(self.d, l) as f64).sqrt()
    }

    /// `ỹ(w)` and `τ(w)` (row-major) from the basis values and gradients,
    /// using `w·∇Y_{l',m'} = l' Y_{l',m'}`.
    pub fn evaluate(&self, w: &[f64]) -> Result<KernelSample> {
        if w.len() != self.d {
            return Err(Error::DimensionMismatch {
                left: self.d,
                right: w.len(),
            });
        }
        let table = PowerTable::new(w, self.k);
        Ok(self.evaluate_with(&table))
    }

    fn evaluate_with(&self, table: &PowerTable) -> KernelSample {
        let dim = self.dim();
        let d = self.d;
        let df = d as f64;
        let yval: Vec<f64> = self.values.iter().map(|y| y.eval_with(table)).collect();
        let grads: Vec<f64> = self
            .gradients
            .iter()
            .flatten()
            .map(|g| g.eval_with(table))
            .collect();
        let emb: Vec<f64> = (0..dim).map(|a| self.embedding_scale(a)).collect();
        let mut tau = vec![0.0; dim * dim];
        for a in 0..dim {
            let l = self.index[a].0 as f64;
            let pre = emb[a] * df / (l * (l + df - 2.0));
            if pre == 0.0 {
                continue;
            }
            for c in 0..dim {
                if emb[c] == 0.0 {
                    continue;
                }
                let lp = self.index[c].0 as f64;
                let dot: f64 = (0..d).map(|i| grads[a * d + i] * grads[c * d + i]).sum();
                let value = dot - l / df * yval[a] * lp * yval[c];
                tau[a * dim + c] = pre * emb[c] * value * self.scale[a][c];
            }
        }
        let y = yval.iter().zip(&emb).map(|(v, s)| v * s).collect();
        KernelSample { y, tau }
    }

    /// `max_m |(∇Y_{l,m} − (l/d) Y_{l,m} w)·w|` at `w`.
    pub fn tangency_residual(&self, w: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let df = self.d as f64;
        for basis in &self.bases {
            for y in &basis.elements {
                let radial = radial_derivative(y).eval(w)?;
                let norm2: f64 = w.iter().map(|v| v * v).sum();
                let r = radial - basis.l as f64 / df * y.eval(w)? * norm2;
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }

    /// `Σ_{m,m'} τ_{l,m;l',m'}(w)²`.
    pub fn block_sum_squares(&self, w: &[f64], l: usize, lp: usize) -> Result<f64> {
        if l == 0 || lp == 0 {
            return Err(Error::ZeroDegreeMode);
        }
        for deg in [l, lp] {
            if deg > self.k {
                return Err(Error::DegreeOutOfRange {
                    degree: deg,
                    lmax: self.k,
                });
            }
        }
        let sample = self.evaluate(w)?;
        let dim = self.dim();
        let mut sum = 0.0;
        for a in (0..dim).filter(|&a| self.index[a].0 == l) {
            for b in (0..dim).filter(|&b| self.index[b].0 == lp) {
                sum += sample.tau[a * dim + b].powi(2);
            }
        }
        Ok(sum)
    }

    /// `E[τ_ab]` by the exact moment formula.
    pub fn expected_entry(&self, a: usize, b: usize) -> Result<f64> {
        sphere_inner(&self.entries[a][b], &MultiPoly::constant(self.d, 1.0))
    }

    /// `cov(ỹ_a, ỹ_b) = φ̂_l²/đ_l` on the diagonal, zero elsewhere.
    pub fn embedding_covariance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.embedding_scale(a).powi(2)
        } else {
            0.0
        }
    }
}

/// Vector-valued polynomial test function `f: ℝ^D → ℝ^C` with its Jacobian.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub name: String,
    components: Vec<MultiPoly>,
    compiled: Vec<CompiledPoly>,
    jacobian: Vec<Vec<(usize, CompiledPoly)>>,
    max_degree: usize,
}

impl TestFunction {
    pub fn new(name: impl Into<String>, components: Vec<MultiPoly>) -> Result<Self> {
        let dim = components.first().map_or(0, |p| p.d());
        if let Some(p) = components.iter().find(|p| p.d() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: p.d(),
            });
        }
        let jacobian = components
            .iter()
            .map(|p| {
                (0..dim)
                    .filter_map(|j| {
                        let dp = p.partial(j).expect("index in range");
                        (!dp.is_zero()).then(|| (j, CompiledPoly::new(&dp)))
                    })
                    .collect()
            })
            .collect();
        let max_degree = components
            .iter()
            .filter_map(|p| p.degree())
            .max()
            .unwrap_or(0);
        let compiled = components.iter().map(CompiledPoly::new).collect();
        Ok(Self {
            name: name.into(),
            components,
            compiled,
            jacobian,
            max_degree,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let comps = (0..dim)
            .map(|i| MultiPoly::variable(dim, i).expect("index in range"))
            .collect();
        Self::new("identity", comps).expect("consistent dimensions")
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self::new("constant", vec![MultiPoly::constant(dim, value); dim])
            .expect("consistent dimensions")
    }

    /// `dim` components, each a sum of `terms` monomials of degree 1..=`degree`
    /// with standard-normal coefficients.
    pub fn random(
        name: impl Into<String>,
        dim: usize,
        degree: u32,
        terms: usize,
        seed: u64,
        id: u64,
    ) -> Self {
        use rand::Rng;
        use rand_distr::StandardNormal;
        let mut rng = rng::stream(seed, tags::TEST_FUNCTION, id);
        let comps = (0..dim)
            .map(|_| {
                let mut p = MultiPoly::zero(dim);
                for _ in 0..terms {
                    let deg = rng.random_range(1..=degree);
                    let mut e = vec![0u32; dim];
                    for _ in 0..deg {
                        e[rng.random_range(0..dim)] += 1;
                    }
                    let c: f64 = rng.sample(StandardNormal);
                    p = &p + &MultiPoly::monomial(e, c);
                }
                p
            })
            .collect();
        Self::new(name, comps).expect("consistent dimensions")
    }

    pub fn components(&self) -> &[MultiPoly] {
        &self.components
    }
}

/// Residual of one coordinate pair: `lhs = E[ỹ_i f_c(ỹ)]`,
/// `rhs = Σ_j E[τ_ij ∂_j f_c(ỹ)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinResidual {
    pub test_id: String,
    pub coordinate: usize,
    pub component: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub stderr: f64,
}

impl SteinResidual {
    pub fn within(&self, sigmas: f64) -> bool {
        self.residual.abs() <= sigmas * self.stderr + 1e-12
    }
}

#[derive(Debug, Clone)]
pub struct SteinReport {
    pub samples: usize,
    pub rows: Vec<SteinResidual>,
}

impl SteinReport {
    pub fn all_within(&self, sigmas: f64) -> bool {
        self.rows.iter().all(|r| r.within(sigmas))
    }

    /// Largest `|residual| / stderr`.
    pub fn worst_z(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                if r.stderr > 0.0 {
                    r.residual.abs() / r.stderr
                } else if r.residual == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Which `(i, c)` pairs are reported: the diagonal `c = i` (so the sum over
/// rows is `E[ỹ·f] − E⟨τ, Jac f⟩`) or every pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairs {
    Diagonal,
    All,
}

#[derive(Clone, Default)]
struct Acc {
    lhs: f64,
    rhs: f64,
    z: f64,
    z2: f64,
}

/// Monte-Carlo residuals of every test function over one shared sample of
/// `samples` points. Chunks of [`CHUNK`] points draw from independent streams
/// and are reduced in chunk order.
pub fn stein_identity_suite(
    field: &SteinKernelField,
    tests: &[TestFunction],
    samples: usize,
    seed: u64,
    pairs: Pairs,
) -> Result<SteinReport> {
    let dim = field.dim();
    if let Some(t) = tests
        .iter()
        .find(|t| t.components.first().is_some_and(|p| p.d() != dim))
    {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: t.components[0].d(),
        });
    }
    let layout: Vec<Vec<(usize, usize)>> = tests
        .iter()
        .map(|t| {
            (0..dim)
                .flat_map(|i| {
                    let comps: Vec<usize> = match pairs {
                        Pairs::Diagonal => vec![i],
                        Pairs::All => (0..t.components.len()).collect(),
                    };
                    comps
                        .into_iter()
                        .filter(|&c| c < t.components.len())
                        .map(move |c| (i, c))
                })
                .collect()
        })
        .collect();
    let slots: usize = layout.iter().map(Vec::len).sum();
    let chunks = samples.div_ceil(CHUNK);
    let max_degree = tests.iter().map(|t| t.max_degree).max().unwrap_or(0);

    let partials: Vec<Vec<Acc>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng::stream(seed, tags::STEIN, chunk as u64);
            let count = CHUNK.min(samples - chunk * CHUNK);
            let mut acc = vec![Acc::default(); slots];
            let mut w = vec![0.0; field.d];
            let mut fvals = Vec::new();
            let mut jac = Vec::new();
            for _ in 0..count {
                rng::fill_sphere_point(&mut rng, &mut w);
                let s = field.evaluate_with(&PowerTable::new(&w, field.k));
                let table = PowerTable::new(&s.y, max_degree);
                let mut slot = 0;
                for (t, pairs) in tests.iter().zip(&layout) {
                    fvals.clear();
                    fvals.extend(t.compiled.iter().map(|p| p.eval_with(&table)));
                    jac.clear();
                    jac.extend(t.jacobian.iter().map(|row| {
                        row.iter()
                            .map(|(j, p)| (*j, p.eval_with(&table)))
                            .collect::<Vec<_>>()
                    }));
                    for &(i, c) in pairs {
                        let lhs = s.y[i] * fvals[c];
                        let rhs: f64 = jac[c].iter().map(|&(j, v)| s.tau[i * dim + j] * v).sum();
                        let z = lhs - rhs;
                        let a = &mut acc[slot];
                        a.lhs += lhs;
                        a.rhs += rhs;
                        a.z += z;
                        a.z2 += z * z;
                        slot += 1;
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = vec![Acc::default(); slots];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.lhs += p.lhs;
            t.rhs += p.rhs;
            t.z += p.z;
            t.z2 += p.z2;
        }
    }
    let n = samples as f64;
    let mut rows = Vec::with_capacity(slots);
    let mut slot = 0;
    for (t, pairs) in tests.iter().zip(&layout) {
        for &(i, c) in pairs {
            let a = &total[slot];
            let mean = a.z / n;
            let var = ((a.z2 / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
            rows.push(SteinResidual {
                test_id: t.name.clone(),
                coordinate: i,
                component: c,
                lhs: a.lhs / n,
                rhs: a.rhs / n,
                residual: mean,
                stderr: (var / n).sqrt(),
            });
            slot += 1;
        }
    }
    Ok(SteinReport { samples, rows })
}

/// Single-function form of [`stein_identity_suite`] with diagonal pairs.
pub fn stein_identity_residual(
    field: &SteinKernelField,
    f: &TestFunction,
    samples: usize,
    seed: u64,
) -> Result<SteinReport> {
    stein_identity_suite(
        field,
        std::slice::from_ref(f),
        samples,
        seed,
        Pairs::Diagonal,
    )
}

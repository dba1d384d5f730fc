use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{ForecastDistribution, ScenarioSet};
use crate::error::{Error, Result};

/// Eigenvalues down to this are accepted as numerical zero and clipped.
const PSD_TOLERANCE: f64 = 1e-10;
const DIAGONAL_TOLERANCE: f64 = 1e-9;
/// Uniforms are kept away from {0, 1} so every marginal sees an interior level.
const UNIFORM_CLAMP: f64 = 1e-12;

/// Correlation structure of the latent Gaussian vector behind a set of
/// marginals (lead times of one forecast, or plants of an aggregation).
#[derive(Clone, Debug)]
pub struct CopulaSpec {
    correlation: DMatrix<f64>,
    /// `factor * factor^T == correlation`, from the clipped eigendecomposition.
    factor: DMatrix<f64>,
}

impl PartialEq for CopulaSpec {
    fn eq(&self, other: &Self) -> bool {
        self.correlation == other.correlation
    }
}

impl CopulaSpec {
    pub fn new(correlation: DMatrix<f64>) -> Result<Self> {
        let n = correlation.nrows();
        if n == 0 || correlation.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "correlation must be a non-empty square matrix, got {}x{}",
                correlation.nrows(),
                correlation.ncols()
            )));
        }
        for i in 0..n {
            if (correlation[(i, i)] - 1.0).abs() > DIAGONAL_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "correlation diagonal entry {i} is {}, expected 1",
                    correlation[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (correlation[(i, j)], correlation[(j, i)]);
                if !a.is_finite() || (a - b).abs() > DIAGONAL_TOLERANCE {
                    return Err(Error::InvalidInput(format!(
                        "correlation is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let eigen = SymmetricEigen::new(correlation.clone());
        let min_eig = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite(min_eig));
        }
        let roots = eigen.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = &eigen.eigenvectors * DMatrix::from_diagonal(&roots);
        Ok(Self { correlation, factor })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim)).expect("identity is a valid correlation")
    }

    /// All-ones correlation: every coordinate moves together.
    pub fn comonotone(dim: usize) -> Self {
        Self::new(DMatrix::from_element(dim, dim, 1.0)).expect("all-ones is PSD")
    }

    /// `rho_ij = exp(-|i - j| / length)`; `length <= 0` gives the identity.
    pub fn exponential(dim: usize, length: f64) -> Self {
        if length <= 0.0 {
            return Self::identity(dim);
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| (-(i.abs_diff(j) as f64) / length).exp());
        Self::new(m).expect("exponential kernel is PSD")
    }

    /// Equicorrelated matrix with off-diagonal `rho` in [0, 1].
    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { rho }))
    }

    pub fn dim(&self) -> usize {
        self.correlation.nrows()
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    /// Leading `dim x dim` block, for horizons truncated at the end of data.
    pub fn leading(&self, dim: usize) -> Result<Self> {
        if dim > self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: dim,
            });
        }
        Self::new(self.correlation.view((0, 0), (dim, dim)).into_owned())
    }

    /// Draws one correlated standard-normal vector.
    pub(crate) fn sample_latent<R: rand::Rng>(&self, rng: &mut R) -> DVector<f64> {
        let eps = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        &self.factor * eps
    }
}

pub(crate) fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub(crate) fn to_uniform(normal: &Normal, z: f64) -> f64 {
    normal.cdf(z).clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP)
}

/// Draws `n` joint trajectories whose per-step marginals are `marginals` and
/// whose rank dependence is the Gaussian copula `copula`.
pub fn generate_scenarios(
    marginals: &[ForecastDistribution],
    copula: &CopulaSpec,
    n: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    if copula.dim() != marginals.len() {
        return Err(Error::DimensionMismatch {
            expected: copula.dim(),
            actual: marginals.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("scenario count must be at least 1".into()));
    }
    let normal = standard_normal();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| {
            let z = copula.sample_latent(&mut rng);
            marginals
                .iter()
                .zip(z.iter())
                .map(|(m, &z)| m.quantile_unchecked(to_uniform(&normal, z)))
                .collect()
        })
        .collect();
    ScenarioSet::uniform(values)
}

/// Estimates the copula correlation from a history of normalized forecast
/// errors (rows are past forecasts, columns are lead times).
///
/// Each column is transformed to normal scores through its ranks, the Pearson
/// correlation of the scores is taken, and the result is projected onto the
/// nearest unit-diagonal positive-semidefinite matrix.
pub fn fit_copula(normalized_error_history: &[Vec<f64>]) -> Result<CopulaSpec> {
    let rows = normalized_error_history.len();
    if rows < 2 {
        return Err(Error::InvalidInput(format!(
            "copula fit needs at least 2 history rows, got {rows}"
        )));
    }
    let cols = normalized_error_history[0].len();
    if cols == 0 {
        return Err(Error::InvalidInput("copula fit needs at least one column".into()));
    }
    for r in normalized_error_history {
        if r.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: r.len(),
            });
        }
    }
    let normal = standard_normal();
    let scores: Vec<Vec<f64>> = (0..cols)
        .map(|c| {
            let column: Vec<f64> = normalized_error_history.iter().map(|r| r[c]).collect();
            average_ranks(&column)
                .into_iter()
                .map(|r| normal.inverse_cdf(r / (rows as f64 + 1.0)))
                .collect()
        })
        .collect();

    let mut corr = DMatrix::identity(cols, cols);
    for i in 0..cols {
        for j in 0..i {
            let rho = pearson(&scores[i], &scores[j]);
            corr[(i, j)] = rho;
            corr[(j, i)] = rho;
        }
    }
    CopulaSpec::new(nearest_correlation(&corr))
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        // A constant column carries no dependence information.
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

fn psd_projection(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eigen = SymmetricEigen::new(m.clone());
    let clipped = eigen.eigenvalues.map(|l| l.max(0.0));
    let v = &eigen.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Alternating projections with Dykstra's correction onto the PSD cone and
/// the unit-diagonal affine set.
fn nearest_correlation(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut correction = DMatrix::zeros(n, n);
    for _ in 0..200 {
        let r = &y - &correction;
        let x = psd_projection(&r);
        correction = &x - &r;
        let mut next = x.clone();
        for i in 0..n {
            next[(i, i)] = 1.0;
        }
        let change = (&next - &y).norm();
        y = next;
        if change < 1e-12 && (&y - &x).norm() < 1e-10 {
            break;
        }
    }
    // Final clip and rescale so the eigenvalue check has margin.
    let x = psd_projection(&y);
    let d: Vec<f64> = (0..n).map(|i| x[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { x[(i, j)] / (d[i] * d[j]) })
}

//! State estimates from outcome records: direct inversion, grid maximum
//! likelihood with local refinement, and Bayesian mean over a discretized
//! simplex.
//!
//! MLE and BME share the same log-likelihood vector over the grid; the
//! `*_with_loglik` variants let callers compute it once per record.

use nalgebra::{Matrix3, Vector3};
#[cfg(test)]
use nalgebra::Matrix4;

use crate::measurements::{LikelihoodTerm, OutcomeRecord, RecordData, Strategy};
use crate::states::{is_physical, t_to_theta, BellDiagonalState};
use crate::{Error, Result};

/// Discretization of the physical simplex: all theta = k/m with integer k.
#[derive(Debug, Clone)]
pub struct StateGrid {
    resolution: u32,
    points: Vec<BellDiagonalState>,
}

/// Default resolution; 9880 points, matching a 1e4-state discretization.
pub const DEFAULT_GRID_RESOLUTION: u32 = 37;

/// Builds the lattice grid at resolution `m`, `C(m+3, 3)` points in
/// lexicographic order of (k1, k2, k3).
pub fn build_grid(resolution: u32) -> StateGrid {
    let m = resolution as i64;
    let count = ((m + 1) * (m + 2) * (m + 3) / 6) as usize;
    let mut points = Vec::with_capacity(count);
    for k1 in 0..=m {
        for k2 in 0..=(m - k1) {
            for k3 in 0..=(m - k1 - k2) {
                let k4 = m - k1 - k2 - k3;
                let theta = [
                    k1 as f64 / m as f64,
                    k2 as f64 / m as f64,
                    k3 as f64 / m as f64,
                    k4 as f64 / m as f64,
                ];
                points.push(BellDiagonalState::from_theta(theta).expect("lattice point"));
            }
        }
    }
    StateGrid { resolution, points }
}

impl StateGrid {
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn points(&self) -> &[BellDiagonalState] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Dirichlet prior over the simplex.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PriorSpec {
    dirichlet_alpha: [f64; 4],
}

impl PriorSpec {
    pub fn new(dirichlet_alpha: [f64; 4]) -> Result<Self> {
        if dirichlet_alpha.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidPrior);
        }
        Ok(Self { dirichlet_alpha })
    }

    /// Uniform prior on the simplex, Dirichlet(1, 1, 1, 1).
    pub fn uniform() -> Self {
        Self {
            dirichlet_alpha: [1.0; 4],
        }
    }

    /// Jeffreys prior, Dirichlet(1/2, ..., 1/2).
    pub fn jeffreys() -> Self {
        Self {
            dirichlet_alpha: [0.5; 4],
        }
    }

    pub fn alpha(&self) -> [f64; 4] {
        self.dirichlet_alpha
    }

    /// Unnormalized log density at a grid point. Boundary points (some
    /// theta_i = 0) get zero weight for alpha_i != 1: the diverging density
    /// of alpha < 1 is not representable on the lattice.
    fn log_density(&self, theta: &[f64; 4]) -> f64 {
        let mut acc = 0.0;
        for (th, a) in theta.iter().zip(self.dirichlet_alpha.iter()) {
            if *th <= 0.0 {
                if (*a - 1.0).abs() < 1e-15 {
                    continue;
                }
                return f64::NEG_INFINITY;
            }
            acc += (a - 1.0) * th.ln();
        }
        acc
    }
}

/// An estimator output. `theta_hat` may be unphysical for direct inversion;
/// the flag records physicality of the associated correlation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub theta_hat: [f64; 4],
    pub physical: bool,
    pub posterior_cov: Option<[[f64; 4]; 4]>,
}

impl Estimate {
    fn new(theta_hat: [f64; 4]) -> Self {
        let t = crate::states::t_of_theta_unchecked(theta_hat);
        Self {
            theta_hat,
            physical: is_physical(t),
            posterior_cov: None,
        }
    }
}

const BARYCENTER: [f64; 4] = [0.25; 4];

/// Direct inversion estimate. Bell plans invert the multinomial mean
/// exactly; parity plans use the per-axis parity formula with the zero-data
/// convention `t_i = 0`; every other plan solves the weighted least-squares
/// fit of `t` from the affine Born model, with the minimum-norm solution in
/// rank-deficient cases.
pub fn direct_inversion(record: &OutcomeRecord) -> Result<Estimate> {
    match record.strategy() {
        Strategy::Bell => {
            let n = record.total_shots();
            if n == 0 {
                return Err(Error::EmptyRecord);
            }
            let counts = match record.data() {
                RecordData::FixedBases(blocks) => blocks[0].counts,
                _ => return Err(Error::EmptyRecord),
            };
            Ok(Estimate::new(counts.map(|c| c as f64 / n as f64)))
        }
        Strategy::ParityOrdered | Strategy::ParityRandom => {
            let (even, odd) = record.parity_counts().expect("parity record");
            let t = std::array::from_fn(|i| {
                let y = even[i] + odd[i];
                if y == 0 {
                    0.0
                } else {
                    2.0 * even[i] as f64 / y as f64 - 1.0
                }
            });
            Ok(Estimate::new(t_to_theta(t)))
        }
        _ => {
            if record.total_shots() == 0 {
                return Err(Error::EmptyRecord);
            }
            Ok(Estimate::new(t_to_theta(least_squares_t(record))))
        }
    }
}

/// Weighted least-squares fit of t: minimize
/// `sum_bases w_b sum_k [f_bk - (1 + a_bk . t)/4]^2` with `w_b` the shots in
/// basis `b` and `f_bk` its empirical outcome frequencies.
fn least_squares_t(record: &OutcomeRecord) -> [f64; 3] {
    let mut gram = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    let mut add = |w: f64, a: [f64; 3], f: f64| {
        let av = Vector3::from_column_slice(&a);
        gram += av * av.transpose() * w;
        rhs += av * (4.0 * w * (f - 0.25));
    };
    match record.data() {
        RecordData::FixedBases(blocks) => {
            for block in blocks {
                let w = block.shots() as f64;
                if w == 0.0 {
                    continue;
                }
                for (k, &c) in block.counts.iter().enumerate() {
                    add(w, block.basis.outcome_bloch(k), c as f64 / w);
                }
            }
        }
        RecordData::RandomBases(shots) => {
            for (basis, outcome) in shots {
                for k in 0..4 {
                    let f = if k == *outcome { 1.0 } else { 0.0 };
                    add(1.0, basis.outcome_bloch(k), f);
                }
            }
        }
        _ => unreachable!("parity records are handled by the closed form"),
    }
    // minimum-norm solve via spectral decomposition of the Gram matrix
    let eig = gram.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let tol = lmax * 1e-9;
    let mut t = Vector3::zeros();
    for i in 0..3 {
        let l = eig.eigenvalues[i];
        if l > tol {
            let u = eig.eigenvectors.column(i);
            t += u * (u.dot(&rhs) / l);
        }
    }
    [t[0], t[1], t[2]]
}

/// Log-likelihood of the record at every grid point (natural log, constant
/// multinomial factors dropped; `-inf` where an observed outcome has zero
/// probability).
pub fn grid_log_likelihood(record: &OutcomeRecord, grid: &StateGrid) -> Vec<f64> {
    let terms: Vec<LikelihoodTerm> = record
        .likelihood_terms()
        .into_iter()
        .filter(|t| !t.is_uninformative())
        .collect();
    grid.points()
        .iter()
        .map(|point| log_likelihood_at(&terms, &point.theta()))
        .collect()
}

fn log_likelihood_at(terms: &[LikelihoodTerm], theta: &[f64; 4]) -> f64 {
    let mut acc = 0.0;
    for term in terms {
        let p = term.beta[0] * theta[0]
            + term.beta[1] * theta[1]
            + term.beta[2] * theta[2]
            + term.beta[3] * theta[3];
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += term.count * p.ln();
    }
    acc
}

/// Maximum-likelihood estimate: grid argmax (ties broken by lowest index)
/// refined by golden-section line searches along the pairwise simplex
/// directions `e_i - e_j`, which keeps iterates inside the physical set.
pub fn mle(record: &OutcomeRecord, grid: &StateGrid) -> Result<Estimate> {
    let ll = grid_log_likelihood(record, grid);
    mle_with_loglik(record, grid, &ll)
}

/// As [`mle`], reusing a precomputed [`grid_log_likelihood`] vector.
pub fn mle_with_loglik(record: &OutcomeRecord, grid: &StateGrid, ll: &[f64]) -> Result<Estimate> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if record.total_shots() == 0 {
        return Ok(Estimate::new(BARYCENTER));
    }
    let mut best = 0;
    for (i, &v) in ll.iter().enumerate() {
        if v > ll[best] {
            best = i;
        }
    }
    let terms: Vec<LikelihoodTerm> = record
        .likelihood_terms()
        .into_iter()
        .filter(|t| !t.is_uninformative())
        .collect();
    let theta = refine_on_simplex(grid.points()[best].theta(), &terms);
    Ok(Estimate::new(theta))
}

/// Coordinate ascent over the six probability-transfer directions of the
/// simplex; the log-likelihood is concave, so with exact line searches this
/// converges to the constrained maximizer.
fn refine_on_simplex(start: [f64; 4], terms: &[LikelihoodTerm]) -> [f64; 4] {
    let mut theta = start;
    let mut current = log_likelihood_at(terms, &theta);
    for _ in 0..200 {
        let before = current;
        for i in 0..4 {
            for j in (i + 1)..4 {
                // theta_i += d, theta_j -= d
                let (lo, hi) = (-theta[i], theta[j]);
                if hi - lo < 1e-15 {
                    continue;
                }
                let eval = |d: f64| {
                    let mut th = theta;
                    th[i] += d;
                    th[j] -= d;
                    log_likelihood_at(terms, &th)
                };
                let d = golden_section_max(eval, lo, hi, 1e-11);
                let cand = eval(d);
                if cand > current {
                    theta[i] += d;
                    theta[j] -= d;
                    theta[i] = theta[i].clamp(0.0, 1.0);
                    theta[j] = theta[j].clamp(0.0, 1.0);
                    current = cand;
                }
            }
        }
        if current - before < 1e-12 {
            break;
        }
    }
    theta
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Bayesian mean estimate over the grid with a Dirichlet prior, including
/// the posterior covariance of theta.
pub fn bme(record: &OutcomeRecord, grid: &StateGrid, prior: &PriorSpec) -> Result<Estimate> {
    let ll = grid_log_likelihood(record, grid);
    bme_with_loglik(grid, prior, &ll)
}

/// As [`bme`], reusing a precomputed [`grid_log_likelihood`] vector.
pub fn bme_with_loglik(grid: &StateGrid, prior: &PriorSpec, ll: &[f64]) -> Result<Estimate> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let log_weights: Vec<f64> = grid
        .points()
        .iter()
        .zip(ll.iter())
        .map(|(point, &l)| l + prior.log_density(&point.theta()))
        .collect();
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::ZeroPosteriorMass);
    }
    // fixed sequential summation order keeps results deterministic
    let mut total = 0.0;
    let mut mean = [0.0; 4];
    for (point, &lw) in grid.points().iter().zip(log_weights.iter()) {
        let w = (lw - max).exp();
        total += w;
        for (m, th) in mean.iter_mut().zip(point.theta().iter()) {
            *m += w * th;
        }
    }
    if total <= 0.0 {
        return Err(Error::ZeroPosteriorMass);
    }
    for m in mean.iter_mut() {
        *m /= total;
    }
    let mut cov = [[0.0; 4]; 4];
    for (point, &lw) in grid.points().iter().zip(log_weights.iter()) {
        let w = (lw - max).exp() / total;
        let theta = point.theta();
        for i in 0..4 {
            for j in 0..4 {
                cov[i][j] += w * (theta[i] - mean[i]) * (theta[j] - mean[j]);
            }
        }
    }
    let mut est = Estimate::new(mean);
    est.posterior_cov = Some(cov);
    Ok(est)
}

/// Posterior covariance of theta under the grid posterior.
pub fn posterior_covariance(
    record: &OutcomeRecord,
    grid: &StateGrid,
    prior: &PriorSpec,
) -> Result<[[f64; 4]; 4]> {
    Ok(bme(record, grid, prior)?
        .posterior_cov
        .expect("bme always attaches a covariance"))
}

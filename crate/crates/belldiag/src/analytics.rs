//! Closed-form risks, bounds, and loss functions for Bell diagonal state
//! estimation.
//!
//! All risks are Hilbert-Schmidt risks in the theta coordinates,
//! `E sum_i (theta_hat_i - theta_i)^2`. Averages are over the uniform
//! (Dirichlet(1,1,1,1)) prior on the simplex.

use nalgebra::Matrix3;

use crate::{Error, Result};

fn sum_sq(theta: &[f64; 4]) -> f64 {
    theta.iter().map(|x| x * x).sum()
}

fn check_parity_shots(n: u64) -> Result<()> {
    if n % 3 != 0 {
        return Err(Error::Divisibility {
            strategy: "parity",
            shots: n,
            divisor: 3,
        });
    }
    Ok(())
}

/// Squared Hilbert-Schmidt distance in theta coordinates.
pub fn hs_loss(theta_hat: &[f64; 4], theta: &[f64; 4]) -> f64 {
    theta_hat
        .iter()
        .zip(theta.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Infidelity 1 - F for commuting (simultaneously diagonal) states,
/// `1 - (sum_i sqrt(theta_hat_i theta_i))^2`.
pub fn infidelity_loss(theta_hat: &[f64; 4], theta: &[f64; 4]) -> Result<f64> {
    for &x in theta_hat.iter().chain(theta.iter()) {
        if x < 0.0 {
            return Err(Error::NegativeComponent(x));
        }
    }
    let root_f: f64 = theta_hat
        .iter()
        .zip(theta.iter())
        .map(|(a, b)| (a * b).sqrt())
        .sum();
    Ok((1.0 - root_f * root_f).clamp(0.0, 1.0))
}

/// Fidelity range compatible with a given Hilbert-Schmidt loss `L`:
/// `(max(0, 1 - sqrt(L))^2, 1 - L/2)`.
pub fn fidelity_bounds(loss: f64) -> (f64, f64) {
    let lower = (1.0 - loss.sqrt()).max(0.0);
    (lower * lower, 1.0 - loss / 2.0)
}

/// Quantum Cramér-Rao lower bound on the HS risk of any N-copy separable
/// estimation scheme: `(1 - sum theta_i^2)/N`.
pub fn qcrb_bound(theta: &[f64; 4], n: u64) -> f64 {
    (1.0 - sum_sq(theta)) / n as f64
}

/// Quantum Fisher information matrix in the (theta_1, theta_2, theta_3)
/// chart, restricted to the support of the state: terms with theta_i = 0
/// are excluded.
pub fn qfi_matrix(theta: &[f64; 4]) -> Matrix3<f64> {
    let mut f = Matrix3::zeros();
    for i in 0..3 {
        if theta[i] > 0.0 {
            f[(i, i)] += 1.0 / theta[i];
        }
    }
    if theta[3] > 0.0 {
        f += Matrix3::from_element(1.0 / theta[3]);
    }
    f
}

/// Pointwise risk of direct inversion with Bell state measurements.
pub fn risk_bsm_di(theta: &[f64; 4], n: u64) -> f64 {
    (1.0 - sum_sq(theta)) / n as f64
}

/// Uniform-prior average of [`risk_bsm_di`]: `3/(5N)`.
pub fn avg_risk_bsm_di(n: u64) -> f64 {
    3.0 / (5.0 * n as f64)
}

/// Pointwise risk of the Bayesian mean with Bell state measurements.
pub fn risk_bsm_bme(theta: &[f64; 4], n: u64) -> f64 {
    let s = sum_sq(theta);
    let nf = n as f64;
    (nf * (1.0 - s) + 4.0 * (4.0 * s - 1.0)) / ((nf + 4.0) * (nf + 4.0))
}

/// Uniform-prior average of [`risk_bsm_bme`]: `3/(5(N + 4))`.
pub fn avg_risk_bsm_bme(n: u64) -> f64 {
    3.0 / (5.0 * (n as f64 + 4.0))
}

/// The terminating hypergeometric sum 3F2(1, 1, 1-N; 2, 2; -1/2), by term
/// recurrence; all partial terms stay bounded, so plain f64 is fine.
pub fn g_hyp(n: u64) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let nf = n as f64;
    let mut term = 1.0;
    let mut acc = 1.0;
    for k in 0..(n - 1) {
        let kf = k as f64;
        term *= -0.5 * (kf + 1.0) * (kf + 1.0) * (1.0 - nf + kf)
            / ((kf + 2.0) * (kf + 2.0) * (kf + 1.0));
        acc += term;
    }
    acc
}

// The closed forms carry a common (2/3)^N factor; for large N both it and
// (N/2) g(N) era underflow/overflow-prone, so past this threshold the
// combination S = (2/3)^N (N/2) g(N) is evaluated as its equivalent
// binomial sum sum_{y>=1} C(N,y) (1/3)^y (2/3)^(N-y) / y via logsumexp.
const LARGE_N: u64 = 1000;

fn binomial_inverse_moment(n: u64) -> f64 {
    let nf = n as f64;
    let ln_p = (1.0f64 / 3.0).ln();
    let ln_q = (2.0f64 / 3.0).ln();
    // cumulative log-factorials up to N
    let mut ln_fact = vec![0.0f64; n as usize + 1];
    for k in 1..=n as usize {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let mut terms = Vec::with_capacity(n as usize);
    let mut max = f64::NEG_INFINITY;
    for y in 1..=n {
        let yf = y as f64;
        let lt = ln_fact[n as usize] - ln_fact[y as usize] - ln_fact[(n - y) as usize]
            + yf * ln_p
            + (nf - yf) * ln_q
            - yf.ln();
        max = max.max(lt);
        terms.push(lt);
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn parity_random_core(n: u64) -> (f64, f64) {
    // returns (S, (2/3)^N) with S = (2/3)^N (N/2) g(N)
    let nf = n as f64;
    if n > LARGE_N {
        let pow = (nf * (2.0f64 / 3.0).ln()).exp();
        (binomial_inverse_moment(n).exp(), pow)
    } else {
        let pow = (2.0f64 / 3.0).powi(n as i32);
        (pow * 0.5 * nf * g_hyp(n), pow)
    }
}

/// Pointwise risk of direct inversion with uniformly random parity checks:
/// `(2/3)^N {(1 - sum theta^2)[N/2 g(N) - 1] + 3/4}`; at N = 0 this is the
/// no-data risk `sum theta^2 - 1/4`.
pub fn risk_parity_random_di(theta: &[f64; 4], n: u64) -> f64 {
    let s = sum_sq(theta);
    if n == 0 {
        return s - 0.25;
    }
    let (big_s, pow) = parity_random_core(n);
    (1.0 - s) * (big_s - pow) + 0.75 * pow
}

/// Uniform-prior average of [`risk_parity_random_di`]:
/// `(2/3)^N [3N/10 g(N) + 3/20]`, i.e. the pointwise formula at the prior
/// moment E[sum theta^2] = 2/5.
pub fn avg_risk_parity_random_di(n: u64) -> f64 {
    if n == 0 {
        return 3.0 / 20.0;
    }
    let (big_s, pow) = parity_random_core(n);
    0.6 * big_s + 0.15 * pow
}

/// Pointwise risk of direct inversion with ordered parity checks (N/3 per
/// axis): `3(1 - sum theta^2)/N`.
pub fn risk_parity_ordered_di(theta: &[f64; 4], n: u64) -> Result<f64> {
    check_parity_shots(n)?;
    Ok(3.0 * (1.0 - sum_sq(theta)) / n as f64)
}

/// Uniform-prior average of [`risk_parity_ordered_di`]: `9/(5N)`.
pub fn avg_risk_parity_ordered_di(n: u64) -> Result<f64> {
    check_parity_shots(n)?;
    Ok(9.0 / (5.0 * n as f64))
}

/// Pointwise risk of the adjusted per-axis Bayesian estimator
/// `t_hat_i = (2 x_{i,0} - N/3)/(2 + N/3)` under ordered parity checks:
/// `[N/3 - 1 + (4 - N/3) sum theta^2]/(N/3 + 2)^2`.
pub fn bme_parity_pointwise(theta: &[f64; 4], n: u64) -> Result<f64> {
    check_parity_shots(n)?;
    let m = n as f64 / 3.0;
    Ok((m - 1.0 + (4.0 - m) * sum_sq(theta)) / ((m + 2.0) * (m + 2.0)))
}

/// Uniform-prior average of [`bme_parity_pointwise`], an upper bound for the
/// BME risk with ordered parity checks: `(N+3)/(5 (N/3 + 2)^2)`.
pub fn bme_parity_upper_bound(n: u64) -> Result<f64> {
    check_parity_shots(n)?;
    let m = n as f64 / 3.0;
    Ok((n as f64 + 3.0) / (5.0 * (m + 2.0) * (m + 2.0)))
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64; 4]) -> [f64; 4] {
    let mut sorted = *v;
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let cand = (cumsum - 1.0) / (k as f64 + 1.0);
        if u - cand > 0.0 {
            tau = cand;
        }
    }
    v.map(|x| (x - tau).max(0.0))
}

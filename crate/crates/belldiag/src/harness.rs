//! Seeded Monte Carlo experiment runner, analytic-curve pairing, and report
//! emission.
//!
//! Determinism contract: a config (including its seed) fixes the output
//! bytes. Each trial gets its own rng seeded from (seed, N index, trial
//! index) through a splitmix64 mixer, and aggregation happens in fixed
//! index order, so the result does not depend on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::estimators::{self, PriorSpec, DEFAULT_GRID_RESOLUTION};
use crate::measurements::{sample_outcomes, MeasurementPlan, Strategy};
use crate::states::BellDiagonalState;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Direct inversion of observed frequencies; possibly unphysical.
    Di,
    /// Grid maximum likelihood with local refinement.
    Mle,
    /// Bayesian mean over the grid posterior.
    Bme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Squared Hilbert-Schmidt distance.
    Hs,
    /// One minus fidelity; unphysical estimates are projected first.
    Infidelity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub estimator: Estimator,
    pub loss: Loss,
    pub prior: PriorSpec,
    pub n_values: Vec<u64>,
    pub samples: u64,
    pub grid_resolution: u32,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(strategy: Strategy, estimator: Estimator, n_values: Vec<u64>) -> Self {
        Self {
            strategy,
            estimator,
            loss: Loss::Hs,
            prior: PriorSpec::uniform(),
            n_values,
            samples: 1000,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidConfig("samples must be at least 1".into()));
        }
        if self.grid_resolution == 0 {
            return Err(Error::InvalidConfig("grid resolution must be at least 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidConfig("at least one value of N is required".into()));
        }
        for &n in &self.n_values {
            MeasurementPlan::new(self.strategy, n).validate()?;
            if n == 0
                && self.estimator == Estimator::Di
                && !matches!(self.strategy, Strategy::ParityOrdered | Strategy::ParityRandom)
            {
                return Err(Error::InvalidConfig(
                    "direct inversion needs data for this strategy; N = 0 is only \
                     meaningful for parity checks"
                        .into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRef {
    pub value: f64,
    /// True when the reference is only an upper bound on the average risk.
    pub upper_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub n: u64,
    pub mean_risk: f64,
    pub std_error: f64,
    pub analytic: Option<AnalyticRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub config: ExperimentConfig,
    pub points: Vec<RiskPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_seed(seed: u64, n_idx: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ n_idx) ^ trial)
}

/// Draws theta uniformly on the simplex (Dirichlet(1,1,1,1)) via normalized
/// exponentials.
pub fn sample_prior_state(rng: &mut impl Rng) -> BellDiagonalState {
    let raw: [f64; 4] = std::array::from_fn(|_| {
        // inverse-CDF exponential; 1 - u avoids ln(0)
        -(1.0 - rng.random::<f64>()).ln()
    });
    let sum: f64 = raw.iter().sum();
    BellDiagonalState::from_theta(raw.map(|x| x / sum)).expect("normalized exponentials")
}

fn analytic_value(strategy: Strategy, estimator: Estimator, n: u64) -> Option<AnalyticRef> {
    let eq = |value: f64| Some(AnalyticRef { value, upper_bound: false });
    match (strategy, estimator) {
        (Strategy::Bell, Estimator::Di) if n >= 1 => eq(analytics::avg_risk_bsm_di(n)),
        (Strategy::Bell, Estimator::Bme) => eq(analytics::avg_risk_bsm_bme(n)),
        (Strategy::ParityRandom, Estimator::Di) => eq(analytics::avg_risk_parity_random_di(n)),
        (Strategy::ParityOrdered, Estimator::Di) if n >= 3 => {
            eq(analytics::avg_risk_parity_ordered_di(n).ok()?)
        }
        (Strategy::ParityOrdered, Estimator::Bme) => Some(AnalyticRef {
            value: analytics::bme_parity_upper_bound(n).ok()?,
            upper_bound: true,
        }),
        _ => None,
    }
}

/// Closed-form average-risk curve for a strategy/estimator pair, or an
/// error when no closed form is known.
pub fn analytic_curve(
    strategy: Strategy,
    estimator: Estimator,
    n_values: &[u64],
) -> Result<Vec<(u64, AnalyticRef)>> {
    n_values
        .iter()
        .map(|&n| {
            MeasurementPlan::new(strategy, n).validate()?;
            analytic_value(strategy, estimator, n)
                .map(|a| (n, a))
                .ok_or(Error::NoClosedForm {
                    strategy: strategy.name(),
                    estimator: match estimator {
                        Estimator::Di => "di",
                        Estimator::Mle => "mle",
                        Estimator::Bme => "bme",
                    },
                })
        })
        .collect()
}

fn trial_loss(
    config: &ExperimentConfig,
    grid: Option<&estimators::StateGrid>,
    n: u64,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let state = sample_prior_state(&mut rng);
    let record = sample_outcomes(&state, &MeasurementPlan::new(config.strategy, n), &mut rng)?;
    let estimate = match config.estimator {
        Estimator::Di => estimators::direct_inversion(&record)?,
        Estimator::Mle => estimators::mle(&record, grid.expect("grid built"))?,
        Estimator::Bme => estimators::bme(&record, grid.expect("grid built"), &config.prior)?,
    };
    let theta = state.theta();
    match config.loss {
        Loss::Hs => Ok(analytics::hs_loss(&estimate.theta_hat, &theta)),
        Loss::Infidelity => {
            let hat = if estimate.theta_hat.iter().any(|&x| x < 0.0) {
                analytics::project_to_simplex(&estimate.theta_hat)
            } else {
                estimate.theta_hat
            };
            analytics::infidelity_loss(&hat, &theta)
        }
    }
}

/// Runs the Monte Carlo experiment described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RiskCurve> {
    config.validate()?;
    let grid = match config.estimator {
        Estimator::Di => None,
        _ => Some(estimators::build_grid(config.grid_resolution)),
    };
    let mut points = Vec::with_capacity(config.n_values.len());
    for (n_idx, &n) in config.n_values.iter().enumerate() {
        let mut losses = Vec::with_capacity(config.samples as usize);
        for trial in 0..config.samples {
            let seed = trial_seed(config.seed, n_idx as u64, trial);
            losses.push(trial_loss(config, grid.as_ref(), n, seed)?);
        }
        let samples = config.samples as f64;
        let mean: f64 = losses.iter().sum::<f64>() / samples;
        let std_error = if config.samples > 1 {
            let var =
                losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (samples - 1.0);
            (var / samples).sqrt()
        } else {
            0.0
        };
        let analytic = match config.loss {
            Loss::Hs => analytic_value(config.strategy, config.estimator, n),
            Loss::Infidelity => None,
        };
        points.push(RiskPoint {
            n,
            mean_risk: mean,
            std_error,
            analytic,
        });
    }
    Ok(RiskCurve {
        config: config.clone(),
        points,
    })
}

/// Serializes a curve as UTF-8 bytes, either a JSON object
/// `{config, points}` or a CSV table `n,mean_risk,std_error,analytic`.
pub fn emit_report(curve: &RiskCurve, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(curve)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut out = String::from("n,mean_risk,std_error,analytic\n");
            for p in &curve.points {
                let analytic = p
                    .analytic
                    .map(|a| a.value.to_string())
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    p.n, p.mean_risk, p.std_error, analytic
                ));
            }
            Ok(out.into_bytes())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_moments() {
        let mut rng = ChaCha12Rng::seed_from_u64(121);
        let n = 100_000;
        let mut th = [0.0f64; 4];
        let mut th2 = [0.0f64; 4];
        let mut t2 = [0.0f64; 3];
        let mut t4 = [0.0f64; 3];
        for _ in 0..n {
            let s = sample_prior_state(&mut rng);
            for i in 0..4 {
                th[i] += s.theta()[i];
                th2[i] += s.theta()[i] * s.theta()[i];
            }
            for i in 0..3 {
                t2[i] += s.t()[i] * s.t()[i];
                t4[i] += s.t()[i].powi(4);
            }
        }
        let nf = n as f64;
        // exact Dirichlet(1,1,1,1) moments: var(theta) = 3/80,
        // var(theta^2) = E[theta^4] - 1/100 = 1/35 - 1/100
        let se_th = (3.0 / 80.0 / nf).sqrt();
        let se_th2 = ((1.0 / 35.0 - 0.01) / nf).sqrt();
        for i in 0..4 {
            assert!((th[i] / nf - 0.25).abs() < 3.0 * se_th);
            assert!((th2[i] / nf - 0.1).abs() < 3.0 * se_th2);
        }
        for i in 0..3 {
            let mean = t2[i] / nf;
            let se = ((t4[i] / nf - mean * mean) / nf).sqrt();
            assert!((mean - 0.2).abs() < 3.0 * se, "E[t^2] = {mean}");
        }
    }

    #[test]
    fn bell_di_matches_closed_form() {
        let mut config =
            ExperimentConfig::new(Strategy::Bell, Estimator::Di, vec![10]);
        config.samples = 4000;
        config.seed = 7;
        let curve = run_experiment(&config).unwrap();
        let p = &curve.points[0];
        let analytic = p.analytic.unwrap();
        assert_eq!(analytic.value, 0.06);
        assert!(!analytic.upper_bound);
        assert!(
            (p.mean_risk - 0.06).abs() < 3.0 * p.std_error,
            "mean {} se {}",
            p.mean_risk,
            p.std_error
        );
    }

    #[test]
    fn parity_random_initial_rise() {
        let mut config =
            ExperimentConfig::new(Strategy::ParityRandom, Estimator::Di, vec![0, 1]);
        config.samples = 4000;
        config.seed = 11;
        let curve = run_experiment(&config).unwrap();
        assert!(curve.points[1].mean_risk > curve.points[0].mean_risk);
        assert_eq!(curve.points[0].analytic.unwrap().value, 0.15);
        assert!((curve.points[1].analytic.unwrap().value - 3.0 / 10.0).abs() < 1e-15);
    }

    #[test]
    fn determinism() {
        let mut config = ExperimentConfig::new(Strategy::Mub, Estimator::Di, vec![5, 10]);
        config.samples = 50;
        config.seed = 99;
        let a = run_experiment(&config).unwrap();
        let b = run_experiment(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            emit_report(&a, ReportFormat::Json).unwrap(),
            emit_report(&b, ReportFormat::Json).unwrap()
        );
        assert_eq!(
            emit_report(&a, ReportFormat::Csv).unwrap(),
            emit_report(&b, ReportFormat::Csv).unwrap()
        );
    }

    #[test]
    fn std_error_scales_with_samples() {
        let mut small = ExperimentConfig::new(Strategy::Bell, Estimator::Di, vec![10]);
        small.samples = 1000;
        small.seed = 3;
        let mut big = small.clone();
        big.samples = 4000;
        let se_small = run_experiment(&small).unwrap().points[0].std_error;
        let se_big = run_experiment(&big).unwrap().points[0].std_error;
        let ratio = se_small / se_big;
        assert!((1.5..2.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn json_round_trip() {
        let mut config = ExperimentConfig::new(Strategy::Bell, Estimator::Di, vec![4]);
        config.samples = 20;
        let curve = run_experiment(&config).unwrap();
        let bytes = emit_report(&curve, ReportFormat::Json).unwrap();
        let parsed: RiskCurve = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(parsed, curve);
    }

    #[test]
    fn csv_shape() {
        let mut config = ExperimentConfig::new(Strategy::Bell, Estimator::Di, vec![4, 8, 16]);
        config.samples = 5;
        let curve = run_experiment(&config).unwrap();
        let text = String::from_utf8(emit_report(&curve, ReportFormat::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,mean_risk,std_error,analytic");
        assert_eq!(lines.len(), 4);
        for line in &lines {
            assert_eq!(line.split(',').count(), 4);
        }
        assert!(text.ends_with('\n'));

        let empty = RiskCurve {
            config,
            points: vec![],
        };
        let text = String::from_utf8(emit_report(&empty, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(text, "n,mean_risk,std_error,analytic\n");
        let json = emit_report(&empty, ReportFormat::Json).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(parsed["points"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn analytic_curve_examples() {
        let pts = analytic_curve(Strategy::Bell, Estimator::Di, &[5, 10]).unwrap();
        assert_eq!(pts[0].0, 5);
        assert!((pts[0].1.value - 0.12).abs() < 1e-15);
        assert!((pts[1].1.value - 0.06).abs() < 1e-15);

        let pts = analytic_curve(Strategy::ParityOrdered, Estimator::Di, &[9]).unwrap();
        assert!((pts[0].1.value - 0.2).abs() < 1e-15);

        assert!(matches!(
            analytic_curve(Strategy::Mub, Estimator::Bme, &[5]),
            Err(Error::NoClosedForm { .. })
        ));
        let bound = analytic_curve(Strategy::ParityOrdered, Estimator::Bme, &[6]).unwrap();
        assert!(bound[0].1.upper_bound);
        assert!((bound[0].1.value - 9.0 / 80.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let config = ExperimentConfig::new(Strategy::Pauli, Estimator::Di, vec![10]);
        assert!(config.validate().is_err());
        let mut config = ExperimentConfig::new(Strategy::Bell, Estimator::Di, vec![10]);
        config.samples = 0;
        assert!(config.validate().is_err());
        let config = ExperimentConfig::new(Strategy::Bell, Estimator::Di, vec![0]);
        assert!(config.validate().is_err());
        let config = ExperimentConfig::new(Strategy::ParityRandom, Estimator::Di, vec![0]);
        assert!(config.validate().is_ok());
    }

    #[test]
    fn trial_seeds_are_spread_out() {
        let mut seen = std::collections::HashSet::new();
        for n_idx in 0..4u64 {
            for trial in 0..1000u64 {
                assert!(seen.insert(trial_seed(42, n_idx, trial)));
            }
        }
    }
}

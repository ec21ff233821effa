//! Monte-Carlo MSE of the heterodyne phase estimator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::estimation::c_het_tilde_from_c2;
use crate::qre::taylor_c2;
use crate::scenario::SensingScenario;

pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), stream = trial index";
pub const MIN_TRIALS: usize = 1000;
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Draw the n-mode averaged noise directly.
    Averaged,
    /// Draw all n per-mode outcomes and average them. Slow; for validation.
    PerMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub mse: f64,
    pub standard_error: f64,
    pub sigma_het_sq: f64,
    pub trials: usize,
    pub seed: u64,
    pub noise_model: NoiseModel,
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    const EMPTY: Moments = Moments {
        count: 0.0,
        mean: 0.0,
        m2: 0.0,
    };

    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.count == 0.0 {
            return b;
        }
        if b.count == 0.0 {
            return a;
        }
        let count = a.count + b.count;
        let d = b.mean - a.mean;
        Moments {
            count,
            mean: a.mean + d * b.count / count,
            m2: a.m2 + b.m2 + d * d * a.count * b.count / count,
        }
    }
}

fn tree_merge(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::EMPTY,
        1 => parts[0],
        k => {
            let (l, r) = parts.split_at(k / 2);
            Moments::merge(tree_merge(l), tree_merge(r))
        }
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// MSE of `atan2(sin + Z_Q, cos + Z_I)` for the scenario's covert budget.
pub fn simulate_heterodyne_mse(
    s: &SensingScenario,
    theta: f64,
    epsilon: f64,
    n: u64,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    simulate_heterodyne_mse_with(s, theta, epsilon, n, trials, seed, NoiseModel::Averaged)
}

pub fn simulate_heterodyne_mse_with(
    s: &SensingScenario,
    theta: f64,
    epsilon: f64,
    n: u64,
    trials: usize,
    seed: u64,
    model: NoiseModel,
) -> Result<MonteCarloResult> {
    let c2 = taylor_c2(s)?;
    let c_het_tilde = c_het_tilde_from_c2(&s.effective(), c2)?;
    let sigma_het_sq = crate::estimation::mse_bound(c_het_tilde, epsilon, n)?;
    simulate_with_variance(theta, sigma_het_sq, n, trials, seed, model)
}

/// Estimator MSE for a given averaged noise variance `sigma_het_sq`.
pub fn simulate_with_variance(
    theta: f64,
    sigma_het_sq: f64,
    n: u64,
    trials: usize,
    seed: u64,
    model: NoiseModel,
) -> Result<MonteCarloResult> {
    if trials < MIN_TRIALS {
        return Err(domain(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    if !(sigma_het_sq > 0.0) || !sigma_het_sq.is_finite() {
        return Err(domain(format!(
            "noise variance {sigma_het_sq} must be positive"
        )));
    }
    if !theta.is_finite() || n == 0 {
        return Err(domain("theta must be finite and n >= 1"));
    }
    let (sn, cs) = theta.sin_cos();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let sd = sigma_het_sq.sqrt();
    let sigma_sq = sigma_het_sq * n as f64;
    let (sd1, sd2) = ((sigma_sq + cs * cs).sqrt(), (sigma_sq + sn * sn).sqrt());

    let chunks: Vec<(usize, usize)> = (0..trials)
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK).min(trials)))
        .collect();
    let parts: Vec<Moments> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut m = Moments::EMPTY;
            for t in start..end {
                let mut rng = base.clone();
                rng.set_stream(t as u64);
                let (zi, zq) = match model {
                    NoiseModel::Averaged => {
                        let zi: f64 = rng.sample(StandardNormal);
                        let zq: f64 = rng.sample(StandardNormal);
                        (sd * zi, sd * zq)
                    }
                    NoiseModel::PerMode => {
                        let (mut si, mut sq) = (0.0, 0.0);
                        for _ in 0..n {
                            let a: f64 = rng.sample(StandardNormal);
                            let b: f64 = rng.sample(StandardNormal);
                            si += sd1 * a;
                            sq += sd2 * b;
                        }
                        (si / n as f64, sq / n as f64)
                    }
                };
                let est = (sn + zq).atan2(cs + zi);
                let err = wrap_angle(est - theta);
                m.push(err * err);
            }
            m
        })
        .collect();
    let total = tree_merge(&parts);
    let var = total.m2 / (total.count - 1.0);
    Ok(MonteCarloResult {
        mse: total.mean,
        standard_error: (var / total.count).sqrt(),
        sigma_het_sq,
        trials,
        seed,
        noise_model: model,
    })
}

/// Exact MSE of the estimator with isotropic Gaussian noise of variance
/// `sigma_het_sq` per quadrature, by quadrature over the phase density of
/// `1 + Z`.
pub fn exact_estimator_mse(sigma_het_sq: f64) -> Result<f64> {
    if !(sigma_het_sq > 0.0) || !sigma_het_sq.is_finite() {
        return Err(domain(format!(
            "noise variance {sigma_het_sq} must be positive"
        )));
    }
    let rho = 1.0 / (2.0 * sigma_het_sq);
    let pi = std::f64::consts::PI;
    let density = |phi: f64| {
        let c = phi.cos();
        let s = phi.sin();
        let tail = (pi * rho).sqrt() * c * (-rho * s * s).exp() * (1.0 + libm::erf(rho.sqrt() * c));
        ((-rho).exp() + tail) / (2.0 * pi)
    };
    let intervals = 40_000;
    let h = 2.0 * pi / intervals as f64;
    let mut sum = 0.0;
    for k in 0..=intervals {
        let phi = -pi + k as f64 * h;
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * phi * phi * density(phi);
    }
    Ok(sum * h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert!((wrap_angle(-std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-15);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn deterministic() {
        let a = simulate_with_variance(0.5, 0.01, 1, 5000, 9, NoiseModel::Averaged).unwrap();
        let b = simulate_with_variance(0.5, 0.01, 1, 5000, 9, NoiseModel::Averaged).unwrap();
        assert_eq!(a.mse.to_bits(), b.mse.to_bits());
        assert_eq!(a.standard_error.to_bits(), b.standard_error.to_bits());
        let c = simulate_with_variance(0.5, 0.01, 1, 5000, 10, NoiseModel::Averaged).unwrap();
        assert_ne!(a.mse.to_bits(), c.mse.to_bits());
    }

    #[test]
    fn thread_count_independent() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    simulate_with_variance(1.0, 0.02, 1, 7000, 3, NoiseModel::Averaged).unwrap()
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn tiny_noise_tiny_mse() {
        let r = simulate_with_variance(0.5, 1e-12, 1, 2000, 1, NoiseModel::Averaged).unwrap();
        assert!(r.mse < 1e-11);
    }

    #[test]
    fn exact_mse_small_noise() {
        // Small-noise expansion: s^2 + s^4 + O(s^6).
        let s2 = 1e-3;
        let m = exact_estimator_mse(s2).unwrap();
        assert!((m - (s2 + s2 * s2)).abs() < 1e-8);
    }

    #[test]
    fn per_mode_leading_order() {
        // Small noise: the phase error is the noise component perpendicular
        // to (cos, sin), with variance s_h^2 + 2 sin^2 cos^2 / n.
        let (theta, s2, n) = (0.5f64, 1e-4, 1000u64);
        let a = simulate_with_variance(theta, s2, n, 20000, 5, NoiseModel::PerMode).unwrap();
        let perp = s2 + 2.0 * (theta.sin() * theta.cos()).powi(2) / n as f64;
        assert!((a.mse - perp).abs() < 4.0 * a.standard_error);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(simulate_with_variance(0.5, 0.01, 1, 10, 1, NoiseModel::Averaged).is_err());
        assert!(simulate_with_variance(0.5, 0.0, 1, 2000, 1, NoiseModel::Averaged).is_err());
        assert!(exact_estimator_mse(-1.0).is_err());
    }
}

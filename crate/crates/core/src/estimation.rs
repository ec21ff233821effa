//! Alice's estimation limits: fidelity, quantum Fisher information,
//! heterodyne statistics and the coherent-state baseline.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, domain, Error, Result};
use crate::gaussian::{omega, CovarianceMatrix};
use crate::numerics::second_derivative;
use crate::qre::{covert_budget_from_c2, taylor_c2};
use crate::scenario::{alice_cm, EffectiveChannel, ProbeSettings, SensingScenario};

/// Root fidelity between two zero-mean two-mode Gaussian states.
pub fn gaussian_fidelity(va: &CovarianceMatrix, vb: &CovarianceMatrix) -> Result<f64> {
    if va.n_modes() != 2 || vb.n_modes() != 2 {
        return Err(domain("fidelity formula needs two-mode states"));
    }
    let a = va.entries();
    let b = vb.entries();
    let w = omega(2);
    let delta = (a + b).determinant();
    let gamma = 16.0 * (&w * a * &w * b - DMatrix::identity(4, 4) * 0.25).determinant();
    let lambda = 16.0 * det_plus_half_omega(a) * det_plus_half_omega(b);
    let gamma = clamp_small("Gamma", gamma, delta)?;
    let lambda = clamp_small("Lambda", lambda, delta)?;
    let s = gamma.sqrt() + lambda.sqrt();
    let inner = clamp_small("radicand", s * s - delta, delta)?;
    // s - sqrt(s^2 - Delta) written without the cancellation.
    let denom = delta / (s + inner.sqrt());
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Numeric(format!(
            "fidelity denominator {denom} is not positive"
        )));
    }
    Ok(1.0 / denom.sqrt())
}

/// `det(V + i Omega / 2)`, real for a symmetric `V`.
fn det_plus_half_omega(v: &DMatrix<f64>) -> f64 {
    let n = v.nrows();
    let w = omega(n / 2);
    let m = DMatrix::from_fn(n, n, |i, j| Complex::new(v[(i, j)], 0.5 * w[(i, j)]));
    m.determinant().re
}

fn clamp_small(name: &str, x: f64, scale: f64) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x >= -1e-10 * scale.abs().max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::Numeric(format!(
            "{name} = {x} is negative; unphysical input"
        )))
    }
}

/// Fisher information at finite and infinite local-oscillator strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qfi {
    pub finite_lo: f64,
    pub bright_lo: f64,
}

pub fn qfi_closed(s: &SensingScenario, ns: f64, nlo: f64) -> Result<Qfi> {
    s.validate()?;
    check_nonnegative("ns", ns)?;
    check_nonnegative("nlo", nlo)?;
    let e = s.effective();
    let (eta, nb) = (e.eta_eff, e.nb_eff);
    let finite = if ns == 0.0 || nlo == 0.0 {
        0.0
    } else {
        4.0 * nlo * ns * eta / (nlo + (1.0 - eta) * nb * (1.0 + 2.0 * nlo) + eta * ns)
    };
    let bright = 4.0 * ns * eta / (1.0 + 2.0 * nb * (1.0 - eta));
    Ok(Qfi {
        finite_lo: finite,
        bright_lo: bright,
    })
}

pub const QFI_STEP: f64 = 1e-3;

/// `-4 d^2 F / d omega^2` at zero from the fidelity of `V_A(theta)` and
/// `V_A(theta + omega)`.
pub fn qfi_numeric(s: &SensingScenario, p: &ProbeSettings) -> Result<f64> {
    let v0 = alice_cm(s, p)?;
    let f = |w: f64| {
        let q = ProbeSettings {
            theta: p.theta + w,
            ..*p
        };
        gaussian_fidelity(&v0, &alice_cm(s, &q)?)
    };
    Ok(-4.0 * second_derivative(f, 0.0, QFI_STEP, 1)?)
}

/// `c_ASE` from a known `c2`.
pub fn c_ase_from_c2(eff: &EffectiveChannel, c2: f64) -> Result<f64> {
    check_channel(eff)?;
    Ok((1.0 + 2.0 * eff.nb_eff * (1.0 - eff.eta_eff)) * c2.sqrt() / (16.0 * eff.eta_eff))
}

/// `c~_het` from a known `c2`.
pub fn c_het_tilde_from_c2(eff: &EffectiveChannel, c2: f64) -> Result<f64> {
    check_channel(eff)?;
    Ok((1.0 + eff.nb_eff * (1.0 - eff.eta_eff)) * c2.sqrt() / (8.0 * eff.eta_eff))
}

fn check_channel(eff: &EffectiveChannel) -> Result<()> {
    if !(eff.eta_eff > 0.0) {
        return Err(domain("eta_eff must be positive"));
    }
    Ok(())
}

/// MSE lower bound `c / (epsilon sqrt(n))`.
pub fn mse_bound(c: f64, epsilon: f64, n: u64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(domain(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
    }
    if n == 0 {
        return Err(domain("number of modes must be at least 1"));
    }
    Ok(c / (epsilon * (n as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qcrb {
    pub c2: f64,
    pub c_ase: f64,
    pub b: f64,
}

/// Quantum Cramer-Rao bound with the covert budget applied.
pub fn qcrb_ase(s: &SensingScenario, epsilon: f64, n: u64) -> Result<Qcrb> {
    let c2 = taylor_c2(s)?;
    let c_ase = c_ase_from_c2(&s.effective(), c2)?;
    Ok(Qcrb {
        c2,
        c_ase,
        b: mse_bound(c_ase, epsilon, n)?,
    })
}

/// Normalized heterodyne moments in the bright local-oscillator limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterodyneStats {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma_sq: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma_het_sq: f64,
}

pub fn heterodyne_stats(
    eff: &EffectiveChannel,
    theta: f64,
    ns: f64,
    n: u64,
) -> Result<HeterodyneStats> {
    check_channel(eff)?;
    if !(ns > 0.0) || !ns.is_finite() {
        return Err(domain("heterodyne statistics need a positive signal"));
    }
    if n == 0 {
        return Err(domain("number of modes must be at least 1"));
    }
    let (sn, cs) = theta.sin_cos();
    let sigma_sq = (1.0 + (1.0 - eff.eta_eff) * eff.nb_eff) / (2.0 * eff.eta_eff * ns);
    Ok(HeterodyneStats {
        mu1: cs,
        mu2: sn,
        sigma_sq,
        sigma1_sq: sigma_sq + cs * cs,
        sigma2_sq: sigma_sq + sn * sn,
        sigma_het_sq: sigma_sq / n as f64,
    })
}

/// Unnormalized dual-homodyne moments at finite local-oscillator strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteLoMoments {
    pub mu13: f64,
    pub mu42: f64,
    pub sigma13_sq: f64,
    pub sigma42_sq: f64,
}

impl FiniteLoMoments {
    /// Moments divided by `k = sqrt(eta_eff ns nlo)` and `k^2`.
    pub fn normalized(&self, eff: &EffectiveChannel, ns: f64, nlo: f64) -> (f64, f64, f64, f64) {
        let k2 = eff.eta_eff * ns * nlo;
        let k = k2.sqrt();
        (
            self.mu13 / k,
            self.mu42 / k,
            self.sigma13_sq / k2,
            self.sigma42_sq / k2,
        )
    }
}

/// Photon-number moments of the four heterodyne ports.
pub fn finite_lo_moments(
    eff: &EffectiveChannel,
    theta: f64,
    ns: f64,
    nlo: f64,
) -> Result<FiniteLoMoments> {
    check_nonnegative("ns", ns)?;
    check_nonnegative("nlo", nlo)?;
    let a11 = (1.0 - eff.eta_eff) * eff.nb_eff + eff.eta_eff * ns + 0.5;
    let a12 = -(eff.eta_eff * ns * nlo).sqrt();
    let a22 = nlo + 0.5;
    let (sn, cs) = theta.sin_cos();
    let t = a11 + a22;
    let n1 = 0.25 * (t - 2.0 * a12 * cs - 1.0);
    let n2 = 0.25 * (t + 2.0 * a12 * sn - 1.0);
    let n3 = 0.25 * (t + 2.0 * a12 * cs - 1.0);
    let n4 = 0.25 * (t - 2.0 * a12 * sn - 1.0);
    let sq = |m: f64| 0.5 * m * (4.0 * m + 2.0);
    let n1n3_base = 1.0 + 2.0 * (a11 - 1.0) * a11 + 2.0 * (a22 - 1.0) * a22;
    let c2t = (2.0 * theta).cos();
    let n1n3 = (n1n3_base - 4.0 * a12 * a12 * c2t) / 16.0;
    let n4n2 = (n1n3_base + 4.0 * a12 * a12 * c2t) / 16.0;
    Ok(FiniteLoMoments {
        mu13: n1 - n3,
        mu42: n4 - n2,
        sigma13_sq: sq(n1) - n1 * n1 + sq(n3) - n3 * n3 - 2.0 * (n1n3 - n1 * n3),
        sigma42_sq: sq(n4) - n4 * n4 + sq(n2) - n2 * n2 - 2.0 * (n4n2 - n4 * n2),
    })
}

/// Coherent-state probe: budget, heterodyne and optimal-receiver coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentBaseline {
    pub ns: f64,
    pub c_het: f64,
    pub c_coh: f64,
}

pub fn coherent_baseline(eta: f64, nb: f64, epsilon: f64, n: u64) -> Result<CoherentBaseline> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::DegenerateCovertness(format!(
            "coherent baseline needs 0 < eta_eff < 1, got {eta}"
        )));
    }
    if !(nb > 0.0) || !nb.is_finite() {
        return Err(Error::DegenerateCovertness(format!(
            "coherent baseline needs a thermal background, got {nb}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) || n == 0 {
        return Err(domain("need 0 < epsilon < 1/2 and n >= 1"));
    }
    let root = (eta * nb * (1.0 + eta * nb)).sqrt();
    Ok(CoherentBaseline {
        ns: 4.0 * epsilon * root / ((n as f64).sqrt() * (1.0 - eta)),
        c_het: (1.0 - eta) * (1.0 + nb * (1.0 - eta)) / (8.0 * eta * root),
        c_coh: (1.0 - eta) * (1.0 + 2.0 * nb * (1.0 - eta)) / (16.0 * eta * root),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceComparison {
    pub mu: f64,
    pub mu_c: f64,
    pub mu_w: f64,
}

/// Ratio of the ASE bound to the coherent-state bound at the same `epsilon`
/// and interrogation time.
pub fn source_comparison(
    s: &SensingScenario,
    bandwidth_ase: f64,
    bandwidth_coh: f64,
    time: f64,
    epsilon: f64,
) -> Result<SourceComparison> {
    let c2 = taylor_c2(s)?;
    source_comparison_from_c2(
        &s.effective(),
        c2,
        bandwidth_ase,
        bandwidth_coh,
        time,
        epsilon,
    )
}

pub fn source_comparison_from_c2(
    eff: &EffectiveChannel,
    c2: f64,
    bandwidth_ase: f64,
    bandwidth_coh: f64,
    time: f64,
    epsilon: f64,
) -> Result<SourceComparison> {
    for (name, v) in [
        ("bandwidth_ase", bandwidth_ase),
        ("bandwidth_coh", bandwidth_coh),
        ("time", time),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(domain(format!("{name} = {v} must be positive")));
        }
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(domain(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
    }
    let c_ase = c_ase_from_c2(eff, c2)?;
    let c_coh = coherent_baseline(eff.eta_eff, eff.nb_eff, epsilon, 1)?.c_coh;
    let mu_c = c_ase / c_coh;
    let mu_w = bandwidth_ase / bandwidth_coh;
    Ok(SourceComparison {
        mu: mu_c / mu_w.sqrt(),
        mu_c,
        mu_w,
    })
}

/// Inputs for a full estimation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportInputs {
    pub epsilon: f64,
    pub bandwidth_ase: f64,
    pub bandwidth_coh: f64,
    pub time: f64,
    pub nlo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub eta_eff: f64,
    pub nb_eff: f64,
    pub n: u64,
    pub c2: f64,
    pub ns: f64,
    #[serde(rename = "F_A")]
    pub f_a: f64,
    #[serde(rename = "F_A_finite_lo")]
    pub f_a_finite_lo: f64,
    pub c_ase: f64,
    pub c_het_tilde: f64,
    pub c_coh: f64,
    pub c_het: f64,
    pub qcrb: f64,
    pub mse_het: f64,
    pub mu: f64,
    pub mu_c: f64,
    pub mu_w: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

pub fn estimation_report(s: &SensingScenario, inp: &ReportInputs) -> Result<EstimationReport> {
    let n = crate::qre::modes_from_bandwidth(inp.bandwidth_ase, inp.time)?;
    let eff = s.effective();
    let c2 = taylor_c2(s)?;
    let budget = covert_budget_from_c2(c2, inp.epsilon, n, None)?;
    let qfi = qfi_closed(s, budget.ns, inp.nlo)?;
    let c_ase = c_ase_from_c2(&eff, c2)?;
    let c_het_tilde = c_het_tilde_from_c2(&eff, c2)?;
    let coh = coherent_baseline(eff.eta_eff, eff.nb_eff, inp.epsilon, n)?;
    let cmp = source_comparison_from_c2(
        &eff,
        c2,
        inp.bandwidth_ase,
        inp.bandwidth_coh,
        inp.time,
        inp.epsilon,
    )?;
    let b = mse_bound(c_ase, inp.epsilon, n)?;
    Ok(EstimationReport {
        eta_eff: eff.eta_eff,
        nb_eff: eff.nb_eff,
        n,
        c2,
        ns: budget.ns,
        f_a: qfi.bright_lo,
        f_a_finite_lo: qfi.finite_lo,
        c_ase,
        c_het_tilde,
        c_coh: coh.c_coh,
        c_het: coh.c_het,
        qcrb: b,
        mse_het: mse_bound(c_het_tilde, inp.epsilon, n)?,
        mu: cmp.mu,
        mu_c: cmp.mu_c,
        mu_w: cmp.mu_w,
        b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::thermal_cm;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn eq_bath() -> SensingScenario {
        SensingScenario::symmetric(0.5, 1.0).unwrap()
    }

    #[test]
    fn fidelity_identities() {
        let v = alice_cm(&eq_bath(), &ProbeSettings::new(0.1, 2.0, 0.4).unwrap()).unwrap();
        assert_abs_diff_eq!(gaussian_fidelity(&v, &v).unwrap(), 1.0, epsilon = 1e-10);
        let vac = thermal_cm(&[0.0, 0.0]).unwrap();
        let th = thermal_cm(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(
            gaussian_fidelity(&vac, &th).unwrap(),
            0.5f64.sqrt(),
            max_relative = 1e-12
        );
        assert!(gaussian_fidelity(&thermal_cm(&[1.0]).unwrap(), &th).is_err());
    }

    #[test]
    fn qfi_examples() {
        let q = qfi_closed(&eq_bath(), 0.1, 1.0).unwrap();
        assert_relative_eq!(q.bright_lo, 0.04, max_relative = 1e-14);
        assert_relative_eq!(q.finite_lo, 0.1 / 3.275, max_relative = 1e-14);
        let z = qfi_closed(&eq_bath(), 0.0, 1.0).unwrap();
        assert_eq!((z.finite_lo, z.bright_lo), (0.0, 0.0));
    }

    #[test]
    fn qfi_numeric_matches() {
        let s = SensingScenario::new(0.7, 0.6, 0.5, 1.5).unwrap();
        let p = ProbeSettings::new(0.08, 20.0, 0.3).unwrap();
        let num = qfi_numeric(&s, &p).unwrap();
        let closed = qfi_closed(&s, p.ns, p.nlo).unwrap().finite_lo;
        assert_relative_eq!(num, closed, max_relative = 1e-4);
        let z = qfi_numeric(&s, &ProbeSettings::new(0.0, 20.0, 0.3).unwrap()).unwrap();
        assert_abs_diff_eq!(z, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn qcrb_example() {
        let q = qcrb_ase(&eq_bath(), 1e-3, 3_000_000_000_000).unwrap();
        assert_relative_eq!(q.c_ase, 0.838525491562421, max_relative = 1e-8);
        assert_relative_eq!(
            q.b,
            0.838525491562421 / (1e-3 * 3e12f64.sqrt()),
            max_relative = 1e-8
        );
    }

    #[test]
    fn heterodyne_examples() {
        let eff = eq_bath().effective();
        let h = heterodyne_stats(&eff, 0.0, 0.1, 10).unwrap();
        assert_eq!((h.mu1, h.mu2), (1.0, 0.0));
        assert_relative_eq!(h.sigma_sq, 35.0, max_relative = 1e-14);
        assert_relative_eq!(h.sigma1_sq, 36.0, max_relative = 1e-14);
        assert_relative_eq!(h.sigma_het_sq, 3.5, max_relative = 1e-14);
        assert!(heterodyne_stats(&eff, 0.0, 0.0, 10).is_err());
    }

    #[test]
    fn finite_lo_limit() {
        let eff = SensingScenario::new(0.7, 0.6, 0.5, 1.5)
            .unwrap()
            .effective();
        let (ns, nlo, theta) = (0.05, 1e6, 0.7);
        let m = finite_lo_moments(&eff, theta, ns, nlo).unwrap();
        let (m1, m2, s1, s2) = m.normalized(&eff, ns, nlo);
        let h = heterodyne_stats(&eff, theta, ns, 1).unwrap();
        assert_relative_eq!(m1, h.mu1, max_relative = 1e-12);
        assert_relative_eq!(m2, h.mu2, max_relative = 1e-12);
        assert_relative_eq!(s1, h.sigma1_sq, max_relative = 1.0 / nlo);
        assert_relative_eq!(s2, h.sigma2_sq, max_relative = 1.0 / nlo);
    }

    #[test]
    fn finite_lo_matches_printed_variance() {
        let eff = SensingScenario::new(0.7, 0.6, 0.5, 1.5)
            .unwrap()
            .effective();
        let (ns, nlo, theta) = (0.3, 7.0, 1.1);
        let m = finite_lo_moments(&eff, theta, ns, nlo).unwrap();
        let (eta, nb) = (eff.eta_eff, eff.nb_eff);
        let base = 0.5 * (nlo + nb * (1.0 - eta) + nb * (1.0 - eta) * nlo + ns * eta);
        assert_relative_eq!(
            m.sigma13_sq,
            base + nlo * ns * eta * theta.cos().powi(2),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            m.sigma42_sq,
            base + nlo * ns * eta * theta.sin().powi(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn coherent_examples() {
        let c = coherent_baseline(0.25, 1.0, 1e-3, 100).unwrap();
        assert_relative_eq!(c.c_het, 1.3125 / 1.25f64.sqrt() / 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.c_coh, 1.875 / 5f64.sqrt(), max_relative = 1e-12);
        assert!(coherent_baseline(1.0, 1.0, 1e-3, 100).is_err());
        assert!(coherent_baseline(0.5, 0.0, 1e-3, 100).is_err());
    }

    #[test]
    fn comparison_examples() {
        let c = source_comparison(&eq_bath(), 3e12, 3e9, 1.0, 1e-3).unwrap();
        assert_relative_eq!(c.mu_c, 1.0, max_relative = 1e-8);
        assert_relative_eq!(c.mu, 1e-3f64.sqrt(), max_relative = 1e-8);
        assert!(source_comparison(&eq_bath(), 0.0, 3e9, 1.0, 1e-3).is_err());
    }

    #[test]
    fn report_fields() {
        let inp = ReportInputs {
            epsilon: 1e-3,
            bandwidth_ase: 3e12,
            bandwidth_coh: 3e9,
            time: 1.0,
            nlo: 1e6,
        };
        let r = estimation_report(&eq_bath(), &inp).unwrap();
        assert!(r.c_het_tilde <= 2.0 * r.c_ase + 1e-12);
        assert!(r.c_coh <= r.c_het && r.c_het <= 2.0 * r.c_coh + 1e-12);
        assert_relative_eq!(r.b, r.qcrb, max_relative = 0.0);
    }
}

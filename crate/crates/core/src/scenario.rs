//! Covariance matrices of the sensing setup.
//!
//! Global mode order: Willie's two taps (return-path environment, then
//! forward-path environment), Alice's signal mode, Alice's local oscillator.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, check_unit_interval, domain, Error, Result};
use crate::gaussian::{
    apply_beam_splitter, apply_phase, apply_thermal_channel, ase_two_mode_cm, thermal_cm,
    CovarianceMatrix,
};

/// Forward channel `(eta1, nb1)` to the target and return channel `(eta2, nb2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingScenario {
    pub eta1: f64,
    pub eta2: f64,
    pub nb1: f64,
    pub nb2: f64,
}

/// Signal occupancy, local-oscillator occupancy and target phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub ns: f64,
    pub nlo: f64,
    pub theta: f64,
}

/// Single thermal channel equivalent to the round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannel {
    pub eta_eff: f64,
    pub nb_eff: f64,
    /// Set when `eta1 * eta2 == 1`, where `nb_eff` would be 0/0.
    pub identity: bool,
}

impl SensingScenario {
    pub fn new(eta1: f64, eta2: f64, nb1: f64, nb2: f64) -> Result<Self> {
        let s = SensingScenario {
            eta1,
            eta2,
            nb1,
            nb2,
        };
        s.validate()?;
        Ok(s)
    }

    /// Same transmissivity and background on both paths.
    pub fn symmetric(eta: f64, nb: f64) -> Result<Self> {
        Self::new(eta, eta, nb, nb)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("eta1", self.eta1)?;
        check_unit_interval("eta2", self.eta2)?;
        check_nonnegative("nb1", self.nb1)?;
        check_nonnegative("nb2", self.nb2)?;
        Ok(())
    }

    pub fn effective(&self) -> EffectiveChannel {
        let eta_eff = self.eta1 * self.eta2;
        if eta_eff >= 1.0 {
            return EffectiveChannel {
                eta_eff: 1.0,
                nb_eff: 0.0,
                identity: true,
            };
        }
        let num = (1.0 - self.eta1) * self.eta2 * self.nb1 + (1.0 - self.eta2) * self.nb2;
        EffectiveChannel {
            eta_eff,
            nb_eff: num / (1.0 - eta_eff),
            identity: false,
        }
    }
}

impl ProbeSettings {
    pub fn new(ns: f64, nlo: f64, theta: f64) -> Result<Self> {
        let p = ProbeSettings { ns, nlo, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonnegative("ns", self.ns)?;
        check_nonnegative("nlo", self.nlo)?;
        if !self.theta.is_finite() {
            return Err(domain("theta must be finite"));
        }
        Ok(())
    }
}

pub fn effective_channel(eta1: f64, eta2: f64, nb1: f64, nb2: f64) -> Result<EffectiveChannel> {
    Ok(SensingScenario::new(eta1, eta2, nb1, nb2)?.effective())
}

/// Entries of Willie's state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WillieElements {
    pub w11: f64,
    pub w12: f64,
    pub w22: f64,
}

pub fn willie_elements(s: &SensingScenario, ns: f64) -> WillieElements {
    let n = willie_excess(s, ns);
    WillieElements {
        w11: n.w11 + 0.5,
        w12: n.w12,
        w22: n.w22 + 0.5,
    }
}

/// Willie's elements with the vacuum contribution removed.
pub fn willie_excess(s: &SensingScenario, ns: f64) -> WillieElements {
    let (e1, e2) = (s.eta1, s.eta2);
    WillieElements {
        w11: (1.0 - e2) * e1 * ns + (1.0 - e1) * (1.0 - e2) * s.nb1 + e2 * s.nb2,
        w12: ((1.0 - e2) * e1 * (1.0 - e1)).sqrt() * (s.nb1 - ns),
        w22: e1 * s.nb1 + (1.0 - e1) * ns,
    }
}

/// `[[x11, -x12 cos, 0, x12 sin], [.., x22, -x12 sin, 0], ..]`.
fn rotated_pair(x11: f64, x12: f64, x22: f64, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            x11,
            -x12 * c,
            0.0,
            x12 * s, //
            -x12 * c,
            x22,
            -x12 * s,
            0.0, //
            0.0,
            -x12 * s,
            x11,
            -x12 * c, //
            x12 * s,
            0.0,
            -x12 * c,
            x22,
        ],
    )
}

/// Willie's state without range checks on `ns`; negative values are used
/// by finite-difference stencils around zero.
pub(crate) fn willie_cm_unchecked(
    s: &SensingScenario,
    ns: f64,
    theta: f64,
) -> Result<CovarianceMatrix> {
    let w = willie_elements(s, ns);
    CovarianceMatrix::from_raw(rotated_pair(w.w11, w.w12, w.w22, theta))
}

/// Willie's two-mode state; `ns = 0` gives the no-sensing state.
pub fn willie_cm(s: &SensingScenario, ns: f64, theta: f64) -> Result<CovarianceMatrix> {
    s.validate()?;
    check_nonnegative("ns", ns)?;
    if !theta.is_finite() {
        return Err(domain("theta must be finite"));
    }
    let cm = willie_cm_unchecked(s, ns, theta)?;
    cm.check_physical(&Default::default())?;
    Ok(cm)
}

/// Alice's two-mode state from the effective-channel elements.
pub fn alice_cm(s: &SensingScenario, p: &ProbeSettings) -> Result<CovarianceMatrix> {
    s.validate()?;
    p.validate()?;
    let eff = s.effective();
    let a11 = (1.0 - eff.eta_eff) * eff.nb_eff + eff.eta_eff * p.ns + 0.5;
    let a12 = -(eff.eta_eff * p.ns * p.nlo).sqrt();
    let a22 = p.nlo + 0.5;
    CovarianceMatrix::from_raw(rotated_pair(a11, a12, a22, p.theta))
}

/// Alice's state by composing forward channel, phase and return channel.
pub fn alice_cm_via_channels(s: &SensingScenario, p: &ProbeSettings) -> Result<CovarianceMatrix> {
    s.validate()?;
    p.validate()?;
    let v = ase_two_mode_cm(p.ns, p.nlo)?;
    let v = apply_thermal_channel(&v, 0, s.eta1, s.nb1)?;
    let v = apply_phase(&v, 0, p.theta)?;
    apply_thermal_channel(&v, 0, s.eta2, s.nb2)
}

/// Global four-mode state built from the optical circuit.
pub fn global_cm_circuit(s: &SensingScenario, p: &ProbeSettings) -> Result<CovarianceMatrix> {
    s.validate()?;
    p.validate()?;
    let env = thermal_cm(&[s.nb2, s.nb1])?;
    let v = env.tensor(&ase_two_mode_cm(p.ns, p.nlo)?);
    let v = apply_beam_splitter(&v, 1, 2, s.eta1)?;
    let v = apply_phase(&v, 2, p.theta)?;
    apply_beam_splitter(&v, 0, 2, s.eta2)
}

/// Global state, with Willie's and Alice's blocks checked against the
/// closed-form matrix elements. The printed Alice-Willie cross blocks carry
/// a typo and are taken from the circuit without a check.
pub fn build_global_cm(s: &SensingScenario, p: &ProbeSettings) -> Result<CovarianceMatrix> {
    let v = global_cm_circuit(s, p)?;
    let tol = 1e-12 * v.entries().amax().max(1.0);
    let w = willie_cm_unchecked(s, p.ns, p.theta)?;
    let a = printed_alice_cm(s, p)?;
    let dw = v.reduced(&[0, 1])?.max_abs_diff(&w);
    let da = v.reduced(&[2, 3])?.max_abs_diff(&a);
    if dw > tol || da > tol {
        return Err(Error::Numeric(format!(
            "circuit and closed-form blocks disagree (willie {dw:e}, alice {da:e})"
        )));
    }
    Ok(v)
}

/// Alice's block written with the two-channel elements rather than the
/// effective channel.
fn printed_alice_cm(s: &SensingScenario, p: &ProbeSettings) -> Result<CovarianceMatrix> {
    let (e1, e2) = (s.eta1, s.eta2);
    let a11 = (1.0 - e1) * e2 * s.nb1 + (1.0 - e2) * s.nb2 + e1 * e2 * p.ns + 0.5;
    let c = (e1 * e2 * p.ns * p.nlo).sqrt();
    let (sn, cs) = p.theta.sin_cos();
    let a22 = p.nlo + 0.5;
    CovarianceMatrix::from_raw(DMatrix::from_row_slice(
        4,
        4,
        &[
            a11,
            c * cs,
            0.0,
            -c * sn, //
            c * cs,
            a22,
            c * sn,
            0.0, //
            0.0,
            c * sn,
            a11,
            c * cs, //
            -c * sn,
            0.0,
            c * cs,
            a22,
        ],
    ))
}

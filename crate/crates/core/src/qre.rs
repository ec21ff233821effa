//! Relative entropy between Willie's hypotheses, its small-signal expansion
//! and the covert photon budget.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonnegative, domain, Error, Result};
use crate::gaussian::{symplectic_spectrum_with, CovarianceMatrix, Tolerances};
use crate::numerics::{second_derivative, third_derivative};
use crate::scenario::{willie_cm, willie_excess, SensingScenario};

/// Symplectic eigenvalues closer to 1/2 than this are treated as pure.
const PURE_TOL: f64 = 1e-12;
/// Weight on a pure direction below which its divergent log is dropped.
const PURE_WEIGHT_TOL: f64 = 1e-8;
/// Finite-difference step as a fraction of the distance to the nearest
/// unphysical signal value.
pub const STEP_FRACTION: f64 = 0.05;
const RICHARDSON_LEVELS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QreBreakdown {
    /// `D(rho0 || rho1)` in nats.
    pub d: f64,
    /// `Sigma(V0, V0)`, the entropy of `rho0`.
    pub sigma00: f64,
    /// `Sigma(V0, V1)`.
    pub sigma01: f64,
    /// Symplectic eigenvalues of `V1`.
    pub u: Vec<f64>,
    /// Symplectic eigenvalues of `V0`.
    pub u0: Vec<f64>,
    /// Diagonal of `V0` in the frame where `V1` is diagonal.
    pub dk: Vec<f64>,
}

/// `1/2 sum (1 + 2d) ln(u + 1/2) + (1 - 2d) ln(u - 1/2)`.
fn sigma(u: &[f64], d: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (&uk, &dk) in u.iter().zip(d) {
        let hi = (1.0 + 2.0 * dk) * (uk + 0.5).ln();
        let gap = uk - 0.5;
        let weight = 1.0 - 2.0 * dk;
        let lo = if gap <= PURE_TOL {
            if weight.abs() <= PURE_WEIGHT_TOL {
                0.0
            } else {
                return Err(Error::InfiniteQre { eigenvalue: uk });
            }
        } else {
            weight * gap.ln()
        };
        total += 0.5 * (hi + lo);
    }
    Ok(total)
}

/// Relative entropy `D(rho0 || rho1)` of zero-mean Gaussian states.
pub fn qre_gaussian(v0: &CovarianceMatrix, v1: &CovarianceMatrix) -> Result<QreBreakdown> {
    qre_gaussian_with(v0, v1, &Tolerances::default())
}

pub fn qre_gaussian_with(
    v0: &CovarianceMatrix,
    v1: &CovarianceMatrix,
    tol: &Tolerances,
) -> Result<QreBreakdown> {
    if v0.n_modes() != v1.n_modes() {
        return Err(domain(format!(
            "dimension mismatch: {} vs {} modes",
            v0.n_modes(),
            v1.n_modes()
        )));
    }
    let s0 = symplectic_spectrum_with(v0, None, tol)?;
    let s1 = symplectic_spectrum_with(v1, Some(v0), tol)?;
    let u0 = s0.eigenvalues;
    let dk = s1.relative_diagonal.expect("reference supplied");
    let sigma00 = sigma(&u0, &u0)?;
    let sigma01 = sigma(&s1.eigenvalues, &dk)?;
    Ok(QreBreakdown {
        d: sigma01 - sigma00,
        sigma00,
        sigma01,
        u: s1.eigenvalues,
        u0,
        dk,
    })
}

/// Single-mode-pair relative entropy between Willie's states without and
/// with Alice's probe. Multiply by the number of modes for `n` uses.
///
/// Both hypotheses are phase-insensitive with the same phase, so the value
/// does not depend on `theta` and is computed from the excess number
/// matrices `N = H - 1/2`.
pub fn willie_qre(s: &SensingScenario, ns: f64, theta: f64) -> Result<f64> {
    willie_cm(s, ns, theta)?;
    if ns == 0.0 {
        return Ok(0.0);
    }
    number_matrix_qre(&excess(s, 0.0), &excess(s, ns))
}

/// Real symmetric `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy)]
struct Sym2 {
    a: f64,
    b: f64,
    c: f64,
}

fn excess(s: &SensingScenario, ns: f64) -> Sym2 {
    let n = willie_excess(s, ns);
    Sym2 {
        a: n.w11,
        b: -n.w12,
        c: n.w22,
    }
}

impl Sym2 {
    /// Eigenvalues in decreasing order with unit eigenvectors. The smaller
    /// eigenvalue is taken from the determinant to keep relative accuracy.
    fn eigen(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let mean = 0.5 * (self.a + self.c);
        let rad = (0.25 * (self.a - self.c).powi(2) + self.b * self.b).sqrt();
        let big = mean + rad;
        let small = if big > 0.0 {
            (self.a * self.c - self.b * self.b) / big
        } else {
            mean - rad
        };
        let vecs = if rad > 0.0 {
            let angle = 0.5 * (2.0 * self.b).atan2(self.a - self.c);
            let (sn, cs) = angle.sin_cos();
            [[cs, sn], [-sn, cs]]
        } else {
            [[1.0, 0.0], [0.0, 1.0]]
        };
        ([big, small], vecs)
    }

    fn quad(&self, v: &[f64; 2]) -> f64 {
        self.a * v[0] * v[0] + 2.0 * self.b * v[0] * v[1] + self.c * v[1] * v[1]
    }

    fn trace(&self) -> f64 {
        self.a + self.c
    }
}

/// `(1 + x) ln(1 + x) - x ln x`.
fn bose_entropy(x: f64) -> f64 {
    let x = x.max(0.0);
    let lo = if x > 0.0 { x * x.ln() } else { 0.0 };
    (1.0 + x) * x.ln_1p() - lo
}

/// `D` between thermal-like states with number matrices `n0`, `n1`:
/// `-S(n0) + tr[n0 ln(1 + 1/n1)] + ln det(1 + n1)`.
fn number_matrix_qre(n0: &Sym2, n1: &Sym2) -> Result<f64> {
    let (l0, _) = n0.eigen();
    let (l1, v1) = n1.eigen();
    let floor = 1e-15 * n0.trace().max(n1.trace()).max(1.0);
    let mut d = -(bose_entropy(l0[0]) + bose_entropy(l0[1]));
    for (l, v) in l1.iter().zip(v1.iter()) {
        let q = n0.quad(v);
        if *l <= floor {
            if q > floor {
                return Err(Error::InfiniteQre {
                    eigenvalue: 0.5 + l,
                });
            }
        } else {
            d += q * (l.ln_1p() - l.ln());
        }
        d += l.max(0.0).ln_1p();
    }
    Ok(d)
}

/// Largest `h` such that Willie's state stays physical at signal `-h`.
///
/// Willie's state is `H0 + ns g g^dagger` in the complex picture, so the
/// margin is `1 / (g^dagger (H0 - 1/2)^+ g)`. A signal component along a
/// pure direction of `H0` makes the relative entropy linear in `ns`.
pub fn signal_margin(s: &SensingScenario) -> Result<f64> {
    s.validate()?;
    let g = [((1.0 - s.eta2) * s.eta1).sqrt(), (1.0 - s.eta1).sqrt()];
    let g2 = g[0] * g[0] + g[1] * g[1];
    if g2 <= 1e-15 {
        return Err(Error::DegenerateCovertness(
            "lossless channels: no signal reaches Willie".into(),
        ));
    }
    let k = excess(s, 0.0);
    let (lam, vecs) = k.eigen();
    let floor = 1e-15 * k.trace().max(1.0);
    let mut quad = 0.0;
    for (l, v) in lam.iter().zip(vecs.iter()) {
        let proj = v[0] * g[0] + v[1] * g[1];
        if *l <= floor {
            if proj * proj > 1e-20 * g2 {
                return Err(Error::DegenerateCovertness(
                    "signal enters a pure mode of Willie's background; the relative entropy is linear in the signal".into(),
                ));
            }
        } else {
            quad += proj * proj / l;
        }
    }
    Ok(1.0 / quad)
}

fn derivative_setup(s: &SensingScenario) -> Result<(f64, Sym2)> {
    let margin = signal_margin(s)?;
    Ok((STEP_FRACTION * margin, excess(s, 0.0)))
}

/// `d^2 D / d ns^2` at zero signal.
pub fn taylor_c2(s: &SensingScenario) -> Result<f64> {
    let (h, n0) = derivative_setup(s)?;
    let c2 = second_derivative(
        |x| number_matrix_qre(&n0, &excess(s, x)),
        0.0,
        h,
        RICHARDSON_LEVELS,
    )?;
    if !(c2 > 0.0) {
        return Err(Error::DegenerateCovertness(format!(
            "second-order coefficient {c2} is not positive"
        )));
    }
    Ok(c2)
}

/// `d^3 D / d ns^3` at zero signal.
pub fn taylor_c3(s: &SensingScenario) -> Result<f64> {
    let (h, n0) = derivative_setup(s)?;
    third_derivative(
        |x| number_matrix_qre(&n0, &excess(s, x)),
        0.0,
        h,
        RICHARDSON_LEVELS,
    )
}

/// Relative entropy for equal backgrounds. Willie's view reduces to one
/// thermal mode with occupancy `a = eta nb` against `b = a + (1 - eta) ns`.
pub fn equal_bath_qre(eta_eff: f64, nb: f64, ns: f64) -> Result<f64> {
    check_equal_bath(eta_eff, nb)?;
    check_nonnegative("ns", ns)?;
    let a = eta_eff * nb;
    let b = a + (1.0 - eta_eff) * ns;
    Ok(a * (a * (1.0 + b) / (b * (1.0 + a))).ln() + ((1.0 + b) / (1.0 + a)).ln())
}

pub fn equal_bath_c2(eta_eff: f64, nb: f64) -> Result<f64> {
    check_equal_bath(eta_eff, nb)?;
    let a = eta_eff * nb;
    Ok((1.0 - eta_eff).powi(2) / (a * (1.0 + a)))
}

pub fn equal_bath_c3(eta_eff: f64, nb: f64) -> Result<f64> {
    check_equal_bath(eta_eff, nb)?;
    let a = eta_eff * nb;
    Ok(-2.0 * (1.0 - eta_eff).powi(3) * (1.0 + 2.0 * a) / (a * a * (1.0 + a).powi(2)))
}

fn check_equal_bath(eta_eff: f64, nb: f64) -> Result<()> {
    if !(eta_eff > 0.0 && eta_eff < 1.0) {
        return Err(domain(format!("eta_eff = {eta_eff} must lie in (0, 1)")));
    }
    if !(nb > 0.0) || !nb.is_finite() {
        return Err(domain(format!("nb = {nb} must be positive")));
    }
    Ok(())
}

/// Per-mode photon budget that keeps Willie's error above `1/2 - epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertBudget {
    pub epsilon: f64,
    pub n: u64,
    pub c2: f64,
    pub ns: f64,
    pub willie_error_lb: f64,
    /// Set when `ns` is not small against the weaker background.
    pub small_signal_warning: bool,
}

pub fn covert_budget(s: &SensingScenario, epsilon: f64, n: u64) -> Result<CovertBudget> {
    let c2 = taylor_c2(s)?;
    covert_budget_from_c2(c2, epsilon, n, Some(s.nb1.min(s.nb2)))
}

pub fn covert_budget_from_c2(
    c2: f64,
    epsilon: f64,
    n: u64,
    weakest_background: Option<f64>,
) -> Result<CovertBudget> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(domain(format!("epsilon = {epsilon} must lie in (0, 1/2)")));
    }
    if n == 0 {
        return Err(domain("number of modes must be at least 1"));
    }
    if !(c2 > 0.0) || !c2.is_finite() {
        return Err(Error::DegenerateCovertness(format!(
            "second-order coefficient {c2} is not positive"
        )));
    }
    let nf = n as f64;
    let ns = 4.0 * epsilon / (c2.sqrt() * nf.sqrt());
    let small_signal_warning = weakest_background.is_some_and(|nb| ns >= 0.1 * nb);
    Ok(CovertBudget {
        epsilon,
        n,
        c2,
        ns,
        willie_error_lb: willie_error_lower_bound(c2, n, ns),
        small_signal_warning,
    })
}

/// Pinsker lower bound on Willie's error probability after `n` modes.
pub fn willie_error_lower_bound(c2: f64, n: u64, ns: f64) -> f64 {
    (0.5 - c2.sqrt() / 4.0 * (n as f64).sqrt() * ns).max(0.0)
}

/// Number of modes `floor(W T)`.
pub fn modes_from_bandwidth(bandwidth_hz: f64, time_s: f64) -> Result<u64> {
    let n = (bandwidth_hz * time_s).floor();
    if !(n >= 1.0) || !n.is_finite() {
        return Err(domain(format!(
            "bandwidth {bandwidth_hz} Hz and time {time_s} s give fewer than one mode"
        )));
    }
    Ok(n as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::thermal_cm;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn identical_states_zero() {
        let v = thermal_cm(&[0.3, 1.2]).unwrap();
        let q = qre_gaussian(&v, &v).unwrap();
        assert_abs_diff_eq!(q.d, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_against_thermal() {
        let v0 = thermal_cm(&[0.0, 0.0]).unwrap();
        let v1 = thermal_cm(&[1.0, 1.0]).unwrap();
        let q = qre_gaussian(&v0, &v1).unwrap();
        assert_relative_eq!(q.d, 2.0 * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn pure_reference_diverges() {
        let v0 = thermal_cm(&[1.0]).unwrap();
        let v1 = thermal_cm(&[0.0]).unwrap();
        assert!(matches!(
            qre_gaussian(&v0, &v1),
            Err(Error::InfiniteQre { .. })
        ));
        let v2 = thermal_cm(&[0.0, 0.0, 0.0]).unwrap();
        assert!(qre_gaussian(&v0, &v2).is_err());
    }

    #[test]
    fn equal_bath_golden_values() {
        assert_relative_eq!(equal_bath_c2(0.25, 1.0).unwrap(), 1.8, max_relative = 1e-14);
        assert_relative_eq!(equal_bath_c2(0.5, 0.5).unwrap(), 0.8, max_relative = 1e-14);
        assert_relative_eq!(
            equal_bath_c3(0.25, 1.0).unwrap(),
            -12.96,
            max_relative = 1e-14
        );
        assert_eq!(equal_bath_qre(0.25, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn willie_qre_matches_equal_bath() {
        let s = SensingScenario::symmetric(0.5, 1.0).unwrap();
        let d = willie_qre(&s, 0.1, 0.3).unwrap();
        assert_relative_eq!(
            d,
            equal_bath_qre(0.25, 1.0, 0.1).unwrap(),
            max_relative = 1e-10
        );
        assert_eq!(willie_qre(&s, 0.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn number_matrix_path_matches_covariance_path() {
        let s = SensingScenario::new(0.7, 0.35, 0.4, 1.3).unwrap();
        for (ns, theta) in [(0.05, 0.0), (0.3, 1.1), (1e-3, -2.0)] {
            let v0 = willie_cm(&s, 0.0, theta).unwrap();
            let v1 = willie_cm(&s, ns, theta).unwrap();
            let general = qre_gaussian(&v0, &v1).unwrap().d;
            assert_relative_eq!(
                willie_qre(&s, ns, theta).unwrap(),
                general,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn c2_accurate_for_faint_background() {
        let s = SensingScenario::symmetric(0.7, 1e-6).unwrap();
        let exact = equal_bath_c2(0.49, 1e-6).unwrap();
        assert_relative_eq!(taylor_c2(&s).unwrap(), exact, max_relative = 1e-8);
    }

    #[test]
    fn c2_c3_match_closed_forms() {
        let s = SensingScenario::symmetric(0.5, 1.0).unwrap();
        assert_relative_eq!(taylor_c2(&s).unwrap(), 1.8, max_relative = 1e-8);
        assert_relative_eq!(taylor_c3(&s).unwrap(), -12.96, max_relative = 1e-7);
    }

    #[test]
    fn degenerate_cases() {
        let lossless = SensingScenario::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            taylor_c2(&lossless),
            Err(Error::DegenerateCovertness(_))
        ));
        let dark = SensingScenario::new(0.5, 0.5, 0.0, 0.0).unwrap();
        assert!(matches!(
            taylor_c2(&dark),
            Err(Error::DegenerateCovertness(_))
        ));
        let d = willie_qre(&dark, 0.01, 0.0).unwrap();
        assert_relative_eq!(d, (1.0 + 0.75 * 0.01f64).ln(), max_relative = 1e-10);
    }

    #[test]
    fn untouched_pure_mode_is_fine() {
        // nb1 = 0 and eta1 = 1: Willie's second tap is vacuum and never sees the signal.
        let s = SensingScenario::new(1.0, 0.5, 0.0, 1.0).unwrap();
        let c2 = taylor_c2(&s).unwrap();
        assert_relative_eq!(c2, equal_bath_c2(0.5, 1.0).unwrap(), max_relative = 1e-8);
    }

    #[test]
    fn budget_example() {
        let b = covert_budget_from_c2(1.8, 1e-3, 1_000_000, None).unwrap();
        assert_relative_eq!(b.ns, 2.98142396999972e-6, max_relative = 1e-12);
        assert_abs_diff_eq!(b.willie_error_lb, 0.5 - 1e-3, epsilon = 1e-12);
        let b2 = covert_budget_from_c2(1.8, 1e-3, 2_000_000, None).unwrap();
        assert_relative_eq!(b.ns / b2.ns, 2f64.sqrt(), max_relative = 1e-14);
        assert!(covert_budget_from_c2(1.8, 0.5, 10, None).is_err());
        assert!(covert_budget_from_c2(1.8, 0.1, 0, None).is_err());
    }

    #[test]
    fn error_bound_example() {
        assert_eq!(willie_error_lower_bound(1.8, 1_000_000, 0.0), 0.5);
        assert_abs_diff_eq!(
            willie_error_lower_bound(1.8, 1_000_000, 1e-5),
            0.496645898033750,
            epsilon = 1e-12
        );
        assert_eq!(willie_error_lower_bound(1.8, 1_000_000, 1.0), 0.0);
    }

    #[test]
    fn bandwidth_modes() {
        assert_eq!(modes_from_bandwidth(3e12, 1.0).unwrap(), 3_000_000_000_000);
        assert_eq!(modes_from_bandwidth(2.5, 1.0).unwrap(), 2);
        assert!(modes_from_bandwidth(0.5, 1.0).is_err());
    }
}

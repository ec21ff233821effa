//! Finite differences with Richardson extrapolation and golden-section search.

use crate::error::{Error, Result};

/// Central second difference `[f(h) - 2 f(0) + f(-h)] / h^2` around `x0`.
fn second_difference<F>(f: &mut F, x0: f64, f0: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    Ok((f(x0 + h)? - 2.0 * f0 + f(x0 - h)?) / (h * h))
}

/// Central third difference `[f(2h) - 2 f(h) + 2 f(-h) - f(-2h)] / (2 h^3)`.
fn third_difference<F>(f: &mut F, x0: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let num = f(x0 + 2.0 * h)? - 2.0 * f(x0 + h)? + 2.0 * f(x0 - h)? - f(x0 - 2.0 * h)?;
    Ok(num / (2.0 * h * h * h))
}

/// Richardson table for an `O(h^2)` central formula, step halved each level.
fn richardson(estimates: &[f64]) -> f64 {
    let mut row = estimates.to_vec();
    let mut factor = 4.0;
    while row.len() > 1 {
        row = row
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        factor *= 4.0;
    }
    row[0]
}

/// Second derivative at `x0` with `levels` Richardson refinements.
pub fn second_derivative<F>(mut f: F, x0: f64, h: f64, levels: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_step(h)?;
    let f0 = f(x0)?;
    let mut est = Vec::with_capacity(levels + 1);
    let mut step = h;
    for _ in 0..=levels {
        est.push(second_difference(&mut f, x0, f0, step)?);
        step *= 0.5;
    }
    finite(richardson(&est))
}

/// Third derivative at `x0` with `levels` Richardson refinements.
pub fn third_derivative<F>(mut f: F, x0: f64, h: f64, levels: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_step(h)?;
    let mut est = Vec::with_capacity(levels + 1);
    let mut step = h;
    for _ in 0..=levels {
        est.push(third_difference(&mut f, x0, step)?);
        step *= 0.5;
    }
    finite(richardson(&est))
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("step {h} must be positive")));
    }
    Ok(())
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Numeric("derivative estimate is not finite".into()))
    }
}

/// Result of a one-dimensional minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`,
/// stopping once the bracket is narrower than `xtol`.
pub fn golden_section<F>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a < b) || !(xtol > 0.0) {
        return Err(Error::Domain(format!(
            "invalid bracket [{a}, {b}] or tolerance {xtol}"
        )));
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while hi - lo > xtol {
        iterations += 1;
        if iterations > 500 {
            return Err(Error::Numeric(
                "golden-section search did not converge".into(),
            ));
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let (x, value) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Ok(Minimum {
        x,
        value,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derivatives_of_exp() {
        let d2 = second_derivative(|x: f64| Ok(x.exp()), 0.3, 0.05, 2).unwrap();
        assert_relative_eq!(d2, 0.3f64.exp(), max_relative = 1e-10);
        let d3 = third_derivative(|x: f64| Ok(x.exp()), 0.3, 0.05, 2).unwrap();
        assert_relative_eq!(d3, 0.3f64.exp(), max_relative = 1e-8);
    }

    #[test]
    fn cubic_exact() {
        let f = |x: f64| Ok(2.0 * x * x * x - x * x + 4.0);
        assert_relative_eq!(
            second_derivative(f, 1.0, 0.1, 0).unwrap(),
            10.0,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            third_derivative(f, 1.0, 0.1, 0).unwrap(),
            12.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn bad_step_rejected() {
        assert!(second_derivative(|x: f64| Ok(x), 0.0, 0.0, 1).is_err());
        assert!(third_derivative(|x: f64| Ok(x), 0.0, -1.0, 1).is_err());
    }

    #[test]
    fn golden_parabola() {
        let m = golden_section(|x: f64| Ok((x - 1.234).powi(2) + 3.0), 0.0, 5.0, 1e-9).unwrap();
        assert!((m.x - 1.234).abs() < 1e-7);
        assert!((m.value - 3.0).abs() < 1e-15);
        assert!(golden_section(|x: f64| Ok(x), 1.0, 0.0, 1e-3).is_err());
    }

    #[test]
    fn errors_propagate() {
        let r = second_derivative(|_x: f64| Err(Error::Numeric("boom".into())), 0.0, 0.1, 1);
        assert!(r.is_err());
    }
}

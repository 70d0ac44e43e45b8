//! Adaptive Simpson quadrature.

use std::cell::Cell;

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Cap on integrand evaluations per call; deep recursion near a singularity
/// would otherwise take exponential time before hitting `MAX_DEPTH`.
const MAX_EVALS: usize = 2_000_000;

/// `int_a^b f(t) dt` to absolute tolerance `tol` (either orientation).
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let evals = Cell::new(0usize);
    let f = |t: f64| -> Result<f64> {
        evals.set(evals.get() + 1);
        if evals.get() > MAX_EVALS {
            return Err(Error::Numeric(format!(
                "adaptive Simpson exceeded {MAX_EVALS} evaluations on [{a}, {b}]"
            )));
        }
        f(t)
    };
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Numeric(format!("non-finite integrand on [{a}, {b}]")));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive Simpson did not converge on [{a}, {b}]"
        )));
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let v = adaptive_simpson(|t| Ok(t.exp()), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-11);
        let w = adaptive_simpson(|t| Ok(1.0 / t), 2.0, 1.0, 1e-12).unwrap();
        assert!((w + 2f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn singular_integrand_fails_quickly() {
        let r = adaptive_simpson(|t| Ok(1.0 / (t - 0.3).abs().sqrt().max(1e-300)), 0.0, 1.0, 1e-15);
        assert!(r.is_err());
    }

    #[test]
    fn propagates_integrand_errors() {
        let r = adaptive_simpson(|t| if t > 0.5 { Err(Error::Numeric("x".into())) } else { Ok(t) }, 0.0, 1.0, 1e-10);
        assert!(r.is_err());
    }
}

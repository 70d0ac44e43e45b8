//! Central finite differences with one Richardson extrapolation level.
//!
//! The base rule is the second-order central quotient `D(h)`; combining
//! `D(h)` and `D(h/2)` as `(4 D(h/2) - D(h)) / 3` cancels the `h^2` term and
//! gives a fourth-order derivative that is exact for cubic polynomials.

use crate::error::Result;
use crate::point::Point;

/// Relative step used by the default policy.
pub const DEFAULT_RELATIVE_STEP: f64 = 1e-4;

/// Cap on the step as a fraction of the local length scale (distance to the
/// nearest coordinate collision or zero coordinate).
pub const LOCAL_SCALE_FRACTION: f64 = 1e-3;

/// Finite-difference step policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// `1e-4 * max(1, |u|_inf)`, capped at `1e-3` times the local length scale.
    Auto,
    Fixed(f64),
}

impl Default for Step {
    fn default() -> Self {
        Step::Auto
    }
}

impl Step {
    pub fn resolve(self, p: &Point) -> f64 {
        match self {
            Step::Fixed(h) => h,
            Step::Auto => {
                let base = DEFAULT_RELATIVE_STEP * p.max_abs().max(1.0);
                let local = LOCAL_SCALE_FRACTION * p.local_scale();
                if local > 0.0 && local.is_finite() {
                    base.min(local)
                } else {
                    base
                }
            }
        }
    }
}

/// One-dimensional Richardson-extrapolated central derivative.
pub fn derivative<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let d_h = (f(x + h)? - f(x - h)?) / (2.0 * h);
    let half = 0.5 * h;
    let d_half = (f(x + half)? - f(x - half)?) / (2.0 * half);
    Ok((4.0 * d_half - d_h) / 3.0)
}

/// Partial derivatives of a vector-valued function of the point.
///
/// Returns `grad[l][a] = d f_a / d u^l`.
pub fn gradient<F>(f: F, p: &Point, h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&Point) -> Result<Vec<f64>>,
{
    let n = p.dim();
    let mut grad = Vec::with_capacity(n);
    for l in 0..n {
        let fp = f(&p.shifted(l, h))?;
        let fm = f(&p.shifted(l, -h))?;
        let fp2 = f(&p.shifted(l, 0.5 * h))?;
        let fm2 = f(&p.shifted(l, -0.5 * h))?;
        let row = (0..fp.len())
            .map(|a| {
                let d_h = (fp[a] - fm[a]) / (2.0 * h);
                let d_half = (fp2[a] - fm2[a]) / h;
                (4.0 * d_half - d_h) / 3.0
            })
            .collect();
        grad.push(row);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_exact() {
        let f = |x: f64| Ok(2.0 * x * x * x - 3.0 * x * x + 0.5 * x - 7.0);
        for &x in &[-1.3, 0.0, 0.7, 2.5] {
            let exact = 6.0 * x * x - 6.0 * x + 0.5;
            for &h in &[1e-2, 1e-3, 1e-4] {
                let d = derivative(f, x, h).unwrap();
                assert!((d - exact).abs() < 1e-10, "x={x} h={h} d={d} exact={exact}");
            }
        }
    }

    #[test]
    fn multivariate_cubic_is_exact() {
        let p = Point::new(vec![0.3, -1.1, 2.0]).unwrap();
        let f = |q: &Point| {
            let u = q.coords();
            Ok(vec![u[0] * u[1] * u[2], u[0].powi(3) - u[2] * u[2]])
        };
        let g = gradient(f, &p, 1e-3).unwrap();
        let u = p.coords();
        let expected = [
            [u[1] * u[2], 3.0 * u[0] * u[0]],
            [u[0] * u[2], 0.0],
            [u[0] * u[1], -2.0 * u[2]],
        ];
        for l in 0..3 {
            for a in 0..2 {
                assert!((g[l][a] - expected[l][a]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn auto_step_shrinks_near_collisions() {
        let far = Point::new(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(Step::Auto.resolve(&far), 4e-4);
        let near = Point::new(vec![1.0, 1.01, 4.0]).unwrap();
        assert!((Step::Auto.resolve(&near) - 1e-5).abs() < 1e-12);
        assert_eq!(Step::Fixed(0.1).resolve(&near), 0.1);
    }
}

//! Forward map to the sigma form, its residual, the parameter cubic and a
//! direct solver for `f`.

use num_complex::Complex64;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{invariants, PoleGuard, TrajectoryN3, F12, F13, F21, F23, F31, F32};
use crate::error::{Error, Result};
use crate::interp::HermiteGrid;
use crate::ode::{dopri5, Dopri5Options};

/// `f`, its first two derivatives and the constants along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaData {
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
    pub r2: f64,
    pub d: f64,
    pub params: PainleveParameters,
    /// `|F23 F32 + f - (z-1) f'|` per sample.
    pub consistency: Vec<f64>,
}

impl SigmaData {
    /// Sigma-form residual at sample `k`.
    pub fn residual_at(&self, k: usize) -> f64 {
        sigma_residual(self.z[k], self.f[k], self.fp[k], self.fpp[k], self.r2, self.d)
    }

    pub fn residuals(&self) -> Vec<f64> {
        (0..self.z.len()).map(|k| self.residual_at(k)).collect()
    }
}

/// `(f, f', f'')` at one sample: `f' = F12 F21`, `f = z f' + F13 F31 + R^2`,
/// `f'' = (F23 F31 F12 + F13 F32 F21) / (z (z-1))`.
pub fn sigma_point(z: f64, f: &[f64; 6], r2: f64) -> (f64, f64, f64) {
    let fp = f[F12] * f[F21];
    let fv = z * fp + f[F13] * f[F31] + r2;
    let fpp = (f[F23] * f[F31] * f[F12] + f[F13] * f[F32] * f[F21]) / (z * (z - 1.0));
    (fv, fp, fpp)
}

pub fn sigma_data_from_f(traj: &TrajectoryN3) -> Result<SigmaData> {
    let guard = PoleGuard::default();
    let (m_r2, d) = traj.invariants[0];
    let r2 = -m_r2;
    let n = traj.len();
    let mut sd = SigmaData {
        z: traj.z.clone(),
        f: Vec::with_capacity(n),
        fp: Vec::with_capacity(n),
        fpp: Vec::with_capacity(n),
        r2,
        d,
        params: painleve_parameters(r2, d)?,
        consistency: Vec::with_capacity(n),
    };
    for (&z, s) in traj.z.iter().zip(&traj.f) {
        guard.check(z)?;
        let (f, fp, fpp) = sigma_point(z, s, r2);
        sd.f.push(f);
        sd.fp.push(fp);
        sd.fpp.push(fpp);
        sd.consistency.push((s[F23] * s[F32] + f - (z - 1.0) * fp).abs());
    }
    Ok(sd)
}

/// `|z^2 (z-1)^2 f''^2 + 4[f'(z f' - f)^2 - f'^2 (z f' - f)] + 4 R^2 f'(z f' - f) - 4 R^2 f'^2 - D^2|`.
pub fn sigma_residual(z: f64, f: f64, fp: f64, fpp: f64, r2: f64, d: f64) -> f64 {
    let w = z * fp - f;
    let zz = z * (z - 1.0);
    (zz * zz * fpp * fpp + 4.0 * (fp * w * w - fp * fp * w) + 4.0 * r2 * fp * w
        - 4.0 * r2 * fp * fp
        - d * d)
        .abs()
}

/// Roots `x_k = v_k^2` of `x^3 - 2R^2 x^2 + R^4 x - D^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PainleveParameters {
    pub r2: f64,
    pub d: f64,
    pub roots: [Complex64; 3],
    /// `|sum x - 2R^2|`, `|sum x_i x_j - R^4|`, `|prod x - D^2|`.
    pub vieta: [f64; 3],
}

impl PainleveParameters {
    pub fn max_vieta(&self) -> f64 {
        self.vieta.iter().copied().fold(0.0, f64::max)
    }

    /// `max_k |p(x_k)|`.
    pub fn back_substitution(&self) -> f64 {
        let (r2, d) = (self.r2, self.d);
        self.roots
            .iter()
            .map(|&x| (x * x * x - x * x * (2.0 * r2) + x * (r2 * r2) - d * d).norm())
            .fold(0.0, f64::max)
    }
}

/// The roots are the squares of the roots `v` of `v^3 - R^2 v - D = 0`
/// (whose elementary symmetric functions are `0, -R^2, D`). Those are found
/// as eigenvalues of the companion matrix and refined by Newton steps. For
/// `D = 0` the answer `{0, R^2, R^2}` is returned exactly.
pub fn painleve_parameters(r2: f64, d: f64) -> Result<PainleveParameters> {
    if !(r2.is_finite() && d.is_finite()) {
        return Err(Error::Invalid("R^2 and D must be finite".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let roots = if d == 0.0 {
        [zero, Complex64::new(r2, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let companion = Matrix3::new(0.0, 0.0, d, 1.0, 0.0, r2, 0.0, 1.0, 0.0);
        let ev = companion.complex_eigenvalues();
        let mut out = [zero; 3];
        for (k, &v0) in ev.iter().enumerate() {
            let mut v = v0;
            for _ in 0..4 {
                let p = v * v * v - v * r2 - d;
                let dp = v * v * 3.0 - r2;
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                v -= step;
                if step.norm() <= 1e-17 * v.norm().max(1.0) {
                    break;
                }
            }
            out[k] = v * v;
        }
        out
    };
    let s1: Complex64 = roots.iter().sum();
    let s2 = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2];
    let s3 = roots[0] * roots[1] * roots[2];
    let vieta = [
        (s1 - 2.0 * r2).norm(),
        (s2 - r2 * r2).norm(),
        (s3 - d * d).norm(),
    ];
    Ok(PainleveParameters { r2, d, roots, vieta })
}

/// Third derivative of `f` implied by the sigma form (its derivative divided
/// by `2 f''`):
///
/// ```text
/// z^2 (z-1)^2 f''' = 2 (b c - z a c + (z-1) a b) - z (z-1)(2z-1) f''
/// ```
///
/// with `a = f'`, `b = f - z f' - R^2`, `c = (z-1) f' - f`.
pub fn third_derivative(z: f64, f: f64, fp: f64, fpp: f64, r2: f64) -> f64 {
    let a = fp;
    let b = f - z * fp - r2;
    let c = (z - 1.0) * fp - f;
    let zz = z * (z - 1.0);
    (2.0 * (b * c - z * a * c + (z - 1.0) * a * b) - zz * (2.0 * z - 1.0) * fpp) / (zz * zz)
}

/// Dense solution of the sigma form obtained by integrating the
/// third-order equation from `(f, f', f'')` at `z0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSolution {
    pub z0: f64,
    pub r2: f64,
    pub d: f64,
    grid: HermiteGrid,
}

impl SigmaSolution {
    pub fn range(&self) -> (f64, f64) {
        self.grid.range()
    }

    /// `(f, f', f'')` at `z`.
    pub fn eval(&self, z: f64) -> Result<(f64, f64, f64)> {
        let v = self.grid.eval(z)?;
        Ok((v[0], v[1], v[2]))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn solve_sigma(
    z0: f64,
    initial: (f64, f64, f64),
    r2: f64,
    d: f64,
    lo: f64,
    hi: f64,
    tol: f64,
    h_max: f64,
) -> Result<SigmaSolution> {
    let (lo, hi) = (lo.min(z0), hi.max(z0));
    let guard = PoleGuard::default();
    guard.check_interval(lo, hi)?;
    let rhs = move |z: f64, y: &[f64]| -> Result<Vec<f64>> {
        guard.check(z)?;
        Ok(vec![y[1], y[2], third_derivative(z, y[0], y[1], y[2], r2)])
    };
    let opts = Dopri5Options {
        atol: tol,
        rtol: tol,
        h_max,
        ..Default::default()
    };
    let y0 = [initial.0, initial.1, initial.2];
    let mut t = Vec::new();
    let mut y = Vec::new();
    if lo < z0 {
        let back = dopri5(rhs, z0, &y0, lo, &opts, |_, _| Ok(()))?;
        t.extend(back.t.iter().rev());
        y.extend(back.y.iter().rev().cloned());
        t.pop();
        y.pop();
    }
    if hi > z0 {
        let fwd = dopri5(rhs, z0, &y0, hi, &opts, |_, _| Ok(()))?;
        t.extend(fwd.t);
        y.extend(fwd.y);
    } else {
        t.push(z0);
        y.push(y0.to_vec());
    }
    let dy = t
        .iter()
        .zip(&y)
        .map(|(&z, s)| rhs(z, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SigmaSolution {
        z0,
        r2,
        d,
        grid: HermiteGrid::new(t, y, dy)?,
    })
}

/// Initial data `(f, f', f'')` and constants `(R^2, D)` for a state.
pub fn sigma_initial(z: f64, f: &[f64; 6]) -> ((f64, f64, f64), f64, f64) {
    let (m_r2, d) = invariants(f);
    (sigma_point(z, f, -m_r2), -m_r2, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::painleve::{integrate_span, FState, IntegrateOptions};

    #[test]
    fn reference_sigma_point() {
        let ((f, fp, fpp), r2, d) = sigma_initial(2.0, &[1.0; 6]);
        assert_eq!((r2, d), (-3.0, 0.0));
        assert_eq!((f, fp, fpp), (0.0, 1.0, 1.0));
        assert_eq!(sigma_residual(2.0, f, fp, fpp, r2, d), 0.0);
    }

    #[test]
    fn residual_controls() {
        assert_eq!(sigma_residual(0.3, 2.5, 0.0, 0.0, 0.0, 0.0), 0.0);
        // f = z^2 with R = D = 0 is not a solution.
        let z: f64 = 2.0;
        assert!(sigma_residual(z, z * z, 2.0 * z, 2.0, 0.0, 0.0) > 1.0);
    }

    #[test]
    fn parameters_reference_cases() {
        let p = painleve_parameters(3.0, 0.0).unwrap();
        assert_eq!(p.roots, [Complex64::new(0.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(3.0, 0.0)]);
        assert_eq!(p.max_vieta(), 0.0);
        let p = painleve_parameters(3.0, -16.0).unwrap();
        assert!(p.back_substitution() < 1e-9, "{}", p.back_substitution());
        assert!(p.max_vieta() < 1e-10, "{:?}", p.vieta);
    }

    #[test]
    fn trajectory_solves_sigma_form() {
        let f0 = [0.4, -0.2, 0.9, 0.1, -0.6, 0.75];
        let s0 = FState::new(0.5, f0).unwrap();
        let t = integrate_span(&s0, 0.4, 0.6, &IntegrateOptions::default()).unwrap();
        let sd = sigma_data_from_f(&t).unwrap();
        let worst = sd.residuals().into_iter().fold(0.0, f64::max);
        assert!(worst < 1e-8, "sigma residual {worst:e}");
        assert!(sd.consistency.iter().all(|&c| c < 1e-9));
        // f' is the derivative of f: trapezoid rule between samples.
        for k in 0..sd.z.len() - 1 {
            let dz = sd.z[k + 1] - sd.z[k];
            let trap = 0.5 * dz * (sd.fp[k] + sd.fp[k + 1]);
            assert!((sd.f[k + 1] - sd.f[k] - trap).abs() < 1e-9, "f' mismatch at {}", sd.z[k]);
        }
    }

    #[test]
    fn third_order_solver_tracks_trajectory() {
        let f0 = [0.4, -0.2, 0.9, 0.1, -0.6, 0.75];
        let s0 = FState::new(0.5, f0).unwrap();
        let t = integrate_span(&s0, 0.4, 0.6, &IntegrateOptions::default()).unwrap();
        let sd = sigma_data_from_f(&t).unwrap();
        let (init, r2, d) = sigma_initial(0.5, &f0);
        let sol = solve_sigma(0.5, init, r2, d, 0.4, 0.6, 1e-12, 2e-3).unwrap();
        for k in 0..sd.z.len() {
            let (f, fp, fpp) = sol.eval(sd.z[k]).unwrap();
            assert!((f - sd.f[k]).abs() < 1e-8);
            assert!((fp - sd.fp[k]).abs() < 1e-8);
            assert!((fpp - sd.fpp[k]).abs() < 1e-7);
        }
    }
}

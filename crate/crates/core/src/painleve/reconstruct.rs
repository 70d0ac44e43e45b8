//! Inverse map: from a solution `f` of the sigma form and six constants back
//! to the state `F`.
//!
//! With `a = f'`, `b = f - z f' - R^2`, `c = (z-1) f' - f` one has
//! `F12 F21 = a`, `F13 F31 = b`, `F23 F32 = c`, and
//!
//! ```text
//! F12 = sqrt(a) exp(-I12 + C12)    F21 = sqrt(a) exp(I12 + C21)
//! F13 = sqrt(b) exp(-I13 + C13)    F31 = sqrt(b) exp(I13 + C31)
//! F23 = sqrt(c) exp(-I23 + C23)    F32 = sqrt(c) exp(I23 + C32)
//! ```
//!
//! where `I12`, `I13`, `I23` are integrals from `z0` of
//! `D/(2 t (t-1) a)`, `D/(2 (t-1) b)` and `D/(2 t c)`. The constants are tied
//! together by `exp(alpha) = z(z-1) f'' - D`, `exp(beta) = z(z-1) f'' + D`,
//! `exp(gamma) = 2 sqrt(a b c)` at `z0`, leaving two free parameters `A`, `B`:
//!
//! ```text
//! C21 = A              C31 = B
//! C32 = B - A + alpha - gamma
//! C13 = -B + alpha + beta - 2 gamma
//! C23 = A - B + beta - gamma
//! C12 = -A + alpha + beta - 2 gamma
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::sigma::{sigma_point, SigmaData, SigmaSolution};
use super::{invariants, IntegratorMeta, PoleGuard, TrajectoryN3, F12, F13, F21, F23, F31, F32};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

const QUAD_TOL: f64 = 1e-11;

/// How square roots and logarithms are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branching {
    /// Real arithmetic: every radicand and every logarithm argument must stay
    /// positive (after fixing the signs of the roots from the data at `z0`).
    Real,
    /// Complex principal branches at `z0`, continued along the path by
    /// choosing the root nearest the previous sample.
    Complex,
}

impl std::str::FromStr for Branching {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Branching::Real),
            "complex" => Ok(Branching::Complex),
            other => Err(Error::Invalid(format!("unknown branching '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConstants {
    pub z0: f64,
    pub f0: f64,
    pub fp0: f64,
    pub fpp0: f64,
    pub r2: f64,
    pub d: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    /// Signs attached to `sqrt(a)`, `sqrt(b)`, `sqrt(c)`.
    pub signs: [f64; 3],
    pub mode: Branching,
}

impl ReconstructionConstants {
    /// `C_ij` in state order.
    pub fn constants(&self) -> [Complex64; 6] {
        let (a, b, al, be, ga) = (self.a, self.b, self.alpha, self.beta, self.gamma);
        let mut c = [Complex64::new(0.0, 0.0); 6];
        c[F21] = a;
        c[F31] = b;
        c[F32] = b - a + al - ga;
        c[F13] = -b + al + be - 2.0 * ga;
        c[F23] = a - b + be - ga;
        c[F12] = -a + al + be - 2.0 * ga;
        c
    }
}

fn clog(x: Complex64, what: &str, mode: Branching) -> Result<Complex64> {
    if x.norm() == 0.0 || !x.is_finite() {
        return Err(Error::DegenerateConstants(format!("log of {x} in {what}")));
    }
    if mode == Branching::Real && !(x.im == 0.0 && x.re > 0.0) {
        return Err(Error::Branch(format!("real log of non-positive {what} = {x}")));
    }
    Ok(x.ln())
}

fn sign_of(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 {
        Ok(1.0)
    } else if x < 0.0 {
        Ok(-1.0)
    } else {
        Err(Error::DegenerateConstants(format!("{what} vanishes at z0")))
    }
}

/// Determines `(A, B)` and the auxiliary constants from a state at `z0`:
/// `A = ln(F21 / sqrt(a))`, `B = ln(F31 / sqrt(b))`.
pub fn solve_constants(z0: f64, f: &[f64; 6], mode: Branching) -> Result<ReconstructionConstants> {
    PoleGuard::default().check(z0)?;
    let (m_r2, d) = invariants(f);
    let r2 = -m_r2;
    let (f0, fp0, fpp0) = sigma_point(z0, f, r2);
    let (ra, rb, rc) = radicands(z0, f0, fp0, r2);
    let signs = match mode {
        Branching::Real => {
            for (v, name) in [(ra, "a"), (rb, "b"), (rc, "c")] {
                if v <= 0.0 {
                    return Err(Error::Branch(format!("radicand {name} = {v} is not positive at z0")));
                }
            }
            [
                sign_of(f[F21], "F21")?,
                sign_of(f[F31], "F31")?,
                sign_of(f[F32], "F32")?,
            ]
        }
        Branching::Complex => [1.0; 3],
    };
    let sa = csqrt(ra) * signs[0];
    let sb = csqrt(rb) * signs[1];
    let sc = csqrt(rc) * signs[2];
    let zz = z0 * (z0 - 1.0);
    let alpha = clog(Complex64::new(zz * fpp0 - d, 0.0), "z(z-1)f'' - D", mode)?;
    let beta = clog(Complex64::new(zz * fpp0 + d, 0.0), "z(z-1)f'' + D", mode)?;
    let gamma = clog(2.0 * sa * sb * sc, "2 sqrt(abc)", mode)?;
    let a = clog(Complex64::new(f[F21], 0.0) / sa, "F21/sqrt(a)", mode)?;
    let b = clog(Complex64::new(f[F31], 0.0) / sb, "F31/sqrt(b)", mode)?;
    Ok(ReconstructionConstants {
        z0,
        f0,
        fp0,
        fpp0,
        r2,
        d,
        a,
        b,
        alpha,
        beta,
        gamma,
        signs,
        mode,
    })
}

fn radicands(z: f64, f: f64, fp: f64, r2: f64) -> (f64, f64, f64) {
    (fp, f - z * fp - r2, (z - 1.0) * fp - f)
}

fn csqrt(x: f64) -> Complex64 {
    Complex64::new(x, 0.0).sqrt()
}

/// Square roots continued along a path.
struct RootTracker {
    prev: [Complex64; 3],
    signs: [f64; 3],
    mode: Branching,
}

impl RootTracker {
    fn next(&mut self, z: f64, r: (f64, f64, f64)) -> Result<[Complex64; 3]> {
        let vals = [r.0, r.1, r.2];
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for k in 0..3 {
            out[k] = match self.mode {
                Branching::Real => {
                    if vals[k] <= 0.0 {
                        return Err(Error::Branch(format!(
                            "radicand {} changes sign near z = {z}",
                            ["a", "b", "c"][k]
                        )));
                    }
                    Complex64::new(self.signs[k] * vals[k].sqrt(), 0.0)
                }
                Branching::Complex => {
                    let s = csqrt(vals[k]);
                    if (s - self.prev[k]).norm() <= (s + self.prev[k]).norm() {
                        s
                    } else {
                        -s
                    }
                }
            };
        }
        self.prev = out;
        Ok(out)
    }
}

/// Rebuilds `F` at the strictly increasing samples `zs` from the constants
/// and a sigma-form solution covering them.
pub fn reconstruct_f(rc: &ReconstructionConstants, sol: &SigmaSolution, zs: &[f64]) -> Result<TrajectoryN3> {
    if zs.len() < 2 || zs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("reconstruction grid must be strictly increasing with ≥ 2 samples".into()));
    }
    let guard = PoleGuard::default();
    for &z in zs {
        guard.check(z)?;
    }
    guard.check_interval(zs[0].min(rc.z0), zs[zs.len() - 1].max(rc.z0))?;
    let consts = rc.constants();
    let (r2, d) = (rc.r2, rc.d);
    let radicands_at = |t: f64| -> Result<(f64, f64, f64)> {
        let (f, fp, _) = sol.eval(t)?;
        Ok(radicands(t, f, fp, r2))
    };
    let integrands = [
        |t: f64, r: (f64, f64, f64), d: f64| d / (2.0 * t * (t - 1.0) * r.0),
        |t: f64, r: (f64, f64, f64), d: f64| d / (2.0 * (t - 1.0) * r.1),
        |t: f64, r: (f64, f64, f64), d: f64| d / (2.0 * t * r.2),
    ];
    let r0 = radicands(rc.z0, rc.f0, rc.fp0, r2);
    let start = [
        csqrt(r0.0) * rc.signs[0],
        csqrt(r0.1) * rc.signs[1],
        csqrt(r0.2) * rc.signs[2],
    ];

    let split = zs.partition_point(|&z| z < rc.z0);
    let mut out: Vec<Option<[f64; 6]>> = vec![None; zs.len()];
    let forward: Vec<usize> = (split..zs.len()).collect();
    let backward: Vec<usize> = (0..split).rev().collect();
    for order in [forward, backward] {
        let mut tracker = RootTracker {
            prev: start,
            signs: rc.signs,
            mode: rc.mode,
        };
        let mut t_prev = rc.z0;
        let mut integrals = [0.0f64; 3];
        for idx in order {
            let z = zs[idx];
            for (k, g) in integrands.iter().enumerate() {
                if d != 0.0 {
                    integrals[k] += adaptive_simpson(
                        |t| {
                            let r = radicands_at(t)?;
                            let v = g(t, r, d);
                            if v.is_finite() {
                                Ok(v)
                            } else {
                                Err(Error::Branch(format!("radicand vanishes near z = {t}")))
                            }
                        },
                        t_prev,
                        z,
                        QUAD_TOL,
                    )?;
                }
            }
            let roots = tracker.next(z, radicands_at(z)?)?;
            let i = integrals;
            let mut f = [Complex64::new(0.0, 0.0); 6];
            f[F12] = roots[0] * (consts[F12] - i[0]).exp();
            f[F21] = roots[0] * (consts[F21] + i[0]).exp();
            f[F13] = roots[1] * (consts[F13] - i[1]).exp();
            f[F31] = roots[1] * (consts[F31] + i[1]).exp();
            f[F23] = roots[2] * (consts[F23] - i[2]).exp();
            f[F32] = roots[2] * (consts[F32] + i[2]).exp();
            let mut real = [0.0; 6];
            for k in 0..6 {
                if f[k].im.abs() > 1e-8 * f[k].re.abs().max(1.0) {
                    return Err(Error::Branch(format!(
                        "reconstructed state is not real at z = {z}: {}",
                        f[k]
                    )));
                }
                real[k] = f[k].re;
            }
            out[idx] = Some(real);
            t_prev = z;
        }
    }
    let f: Vec<[f64; 6]> = out.into_iter().map(|s| s.expect("every sample visited")).collect();
    let meta = IntegratorMeta {
        method: match rc.mode {
            Branching::Real => "sigma-reconstruction-real".into(),
            Branching::Complex => "sigma-reconstruction-complex".into(),
        },
        atol: QUAD_TOL,
        rtol: 0.0,
        h_max: f64::NAN,
        accepted: zs.len(),
        rejected: 0,
        drift_mr2: 0.0,
        drift_d: 0.0,
    };
    let mut t = TrajectoryN3::from_samples(format!("reconstructed(z0={})", rc.z0), zs.to_vec(), f, meta)?;
    let (dm, dd) = t.drift();
    t.meta.drift_mr2 = dm;
    t.meta.drift_d = dd;
    Ok(t)
}

/// Smallest of `|a|`, `|b|`, `|c|`, `|z(z-1) f'' - D|`, `|z(z-1) f'' + D|`
/// over the samples, or zero if any of them changes sign between two
/// consecutive samples. The inverse map degenerates when this approaches
/// zero: the quadratures diverge where one of the `F_ij` vanishes.
pub fn reconstruction_conditioning(sd: &SigmaData) -> f64 {
    let values: Vec<[f64; 5]> = (0..sd.z.len())
        .map(|k| {
            let z = sd.z[k];
            let (a, b, c) = radicands(z, sd.f[k], sd.fp[k], sd.r2);
            let q = z * (z - 1.0) * sd.fpp[k];
            [a, b, c, q - sd.d, q + sd.d]
        })
        .collect();
    let crosses = values
        .windows(2)
        .any(|w| (0..5).any(|i| w[0][i].signum() != w[1][i].signum()));
    if crosses {
        return 0.0;
    }
    values
        .iter()
        .flat_map(|v| v.iter().map(|x| x.abs()))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::painleve::sigma::{sigma_data_from_f, sigma_initial, solve_sigma};
    use crate::painleve::{integrate_span, FState, IntegrateOptions};

    const F0: [f64; 6] = [0.4, -0.2, 0.9, 0.1, -0.6, 0.75];

    #[test]
    fn constants_reproduce_state_at_z0() {
        for mode in [Branching::Complex, Branching::Real] {
            let f0 = [0.8, 0.5, 0.6, 0.7, 0.9, 0.4];
            let rc = solve_constants(0.5, &f0, mode).unwrap();
            let (init, r2, d) = sigma_initial(0.5, &f0);
            let sol = solve_sigma(0.5, init, r2, d, 0.45, 0.55, 1e-12, 1e-3).unwrap();
            let t = reconstruct_f(&rc, &sol, &[0.45, 0.5, 0.55]).unwrap();
            for k in 0..6 {
                assert!((t.f[1][k] - f0[k]).abs() < 1e-13, "{mode:?} {k}");
            }
        }
    }

    #[test]
    fn real_mode_rejects_negative_radicand() {
        // F12 F21 = 0.4 * 0.9 > 0 but F13 F31 = 0.12 > 0 and F23 F32 = 0.075 > 0;
        // flipping F21 makes a < 0.
        let mut f = F0;
        f[F21] = -0.9;
        assert!(matches!(solve_constants(0.5, &f, Branching::Real), Err(Error::Branch(_))));
        assert!(solve_constants(0.5, &f, Branching::Complex).is_ok());
    }

    #[test]
    fn round_trip_complex() {
        let s0 = FState::new(0.5, F0).unwrap();
        let t = integrate_span(&s0, 0.4, 0.6, &IntegrateOptions::default()).unwrap();
        let sd = sigma_data_from_f(&t).unwrap();
        assert!(reconstruction_conditioning(&sd) > 1e-3);
        let rc = solve_constants(0.5, &F0, Branching::Complex).unwrap();
        let (init, r2, d) = sigma_initial(0.5, &F0);
        let sol = solve_sigma(0.5, init, r2, d, 0.4, 0.6, 1e-13, 1e-3).unwrap();
        let back = reconstruct_f(&rc, &sol, &t.z).unwrap();
        let err = t
            .f
            .iter()
            .zip(&back.f)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "round trip error {err:e}");
    }
}

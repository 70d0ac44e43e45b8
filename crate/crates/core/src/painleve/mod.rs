//! The three-dimensional case: the six-equation reduction of the augmented
//! Darboux-Egorov system in `z = (u^3 - u^1)/(u^2 - u^1)`, its first integrals,
//! the map to the sigma form of Painlevé VI and back.
//!
//! State vectors are ordered `(F12, F13, F21, F23, F31, F32)`.

mod reconstruct;
mod sigma;

pub use reconstruct::{
    reconstruct_f, reconstruction_conditioning, solve_constants, Branching,
    ReconstructionConstants,
};
pub use sigma::{
    painleve_parameters, sigma_data_from_f, sigma_initial, sigma_point, sigma_residual, solve_sigma,
    third_derivative, PainleveParameters,
    SigmaData, SigmaSolution,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::darboux_egorov::RotationField;
use crate::error::{Error, Result};
use crate::interp::HermiteGrid;
use crate::ode::{dopri5, Dopri5Options};
use crate::point::{Point, DEFAULT_DELTA_SEP};

pub const F12: usize = 0;
pub const F13: usize = 1;
pub const F21: usize = 2;
pub const F23: usize = 3;
pub const F31: usize = 4;
pub const F32: usize = 5;

pub const F_NAMES: [&str; 6] = ["F12", "F13", "F21", "F23", "F31", "F32"];

/// CSV header of trajectory files.
pub const CSV_HEADER: &str = "z,F12,F13,F21,F23,F31,F32,mR2,D,sigma_res";

/// Exclusion radii around the singular points `z = 0` and `z = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleGuard {
    pub zero: f64,
    pub one: f64,
}

impl Default for PoleGuard {
    fn default() -> Self {
        Self {
            zero: 1e-3,
            one: 1e-3,
        }
    }
}

impl PoleGuard {
    pub fn check(&self, z: f64) -> Result<()> {
        if !z.is_finite() {
            return Err(Error::Invalid(format!("z = {z} is not finite")));
        }
        if z.abs() < self.zero {
            return Err(Error::Pole {
                z,
                pole: 0.0,
                guard: self.zero,
            });
        }
        if (z - 1.0).abs() < self.one {
            return Err(Error::Pole {
                z,
                pole: 1.0,
                guard: self.one,
            });
        }
        Ok(())
    }

    /// Rejects intervals that come within the guards of a pole.
    pub fn check_interval(&self, a: f64, b: f64) -> Result<()> {
        let (lo, hi) = (a.min(b), a.max(b));
        self.check(lo)?;
        self.check(hi)?;
        for (pole, guard) in [(0.0, self.zero), (1.0, self.one)] {
            if lo < pole && pole < hi {
                return Err(Error::Pole { z: pole, pole, guard });
            }
        }
        Ok(())
    }
}

/// A point of the six-dimensional system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FState {
    pub z: f64,
    pub f: [f64; 6],
}

impl FState {
    pub fn new(z: f64, f: [f64; 6]) -> Result<Self> {
        PoleGuard::default().check(z)?;
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite state {f:?}")));
        }
        Ok(Self { z, f })
    }

    /// The involution `F_ij <-> F_ji`.
    pub fn swapped(&self) -> Self {
        Self {
            z: self.z,
            f: swap(&self.f),
        }
    }
}

pub fn swap(f: &[f64; 6]) -> [f64; 6] {
    [f[F21], f[F31], f[F12], f[F32], f[F13], f[F23]]
}

/// Right-hand side of the system at `(z, F)`.
///
/// Products are written with matching operand pairs so that a state with
/// `F_ij = F_ji` evolves exactly symmetrically.
pub fn rhs_raw(z: f64, f: &[f64; 6]) -> [f64; 6] {
    let zz = z * (z - 1.0);
    [
        f[F13] * f[F32] / zz,
        -(f[F12] * f[F23]) / (z - 1.0),
        f[F31] * f[F23] / zz,
        f[F13] * f[F21] / z,
        -(f[F21] * f[F32]) / (z - 1.0),
        f[F12] * f[F31] / z,
    ]
}

pub fn rhs(s: &FState, guard: &PoleGuard) -> Result<[f64; 6]> {
    guard.check(s.z)?;
    Ok(rhs_raw(s.z, &s.f))
}

/// First integrals `(-R^2, D)`:
/// `-R^2 = F12 F21 + F13 F31 + F23 F32`, `D = F23 F31 F12 - F13 F32 F21`.
pub fn invariants(f: &[f64; 6]) -> (f64, f64) {
    let m_r2 = f[F12] * f[F21] + f[F13] * f[F31] + f[F23] * f[F32];
    let d = f[F23] * f[F31] * f[F12] - f[F13] * f[F32] * f[F21];
    (m_r2, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Largest admissible `|Delta(-R^2)|` or `|Delta D|` along the run.
    pub max_drift: f64,
    /// Step cap, which also sets the density of the interpolation grid.
    pub h_max: f64,
    pub guard: PoleGuard,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-10,
            max_drift: 1e-9,
            h_max: 2e-3,
            guard: PoleGuard::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorMeta {
    pub method: String,
    pub atol: f64,
    pub rtol: f64,
    pub h_max: f64,
    pub accepted: usize,
    pub rejected: usize,
    /// Largest observed `|Delta(-R^2)|`.
    pub drift_mr2: f64,
    /// Largest observed `|Delta D|`.
    pub drift_d: f64,
}

/// Samples of a solution on a strictly monotone `z` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryN3 {
    pub id: String,
    pub z: Vec<f64>,
    pub f: Vec<[f64; 6]>,
    /// `(-R^2, D)` at each sample.
    pub invariants: Vec<(f64, f64)>,
    pub meta: IntegratorMeta,
    grid: HermiteGrid,
}

impl TrajectoryN3 {
    /// Assembles a trajectory from samples, building the interpolant from the
    /// exact right-hand side at the nodes.
    pub fn from_samples(id: impl Into<String>, z: Vec<f64>, f: Vec<[f64; 6]>, meta: IntegratorMeta) -> Result<Self> {
        let dy = z.iter().zip(&f).map(|(&zz, s)| rhs_raw(zz, s).to_vec()).collect();
        let grid = HermiteGrid::new(z.clone(), f.iter().map(|s| s.to_vec()).collect(), dy)?;
        let invariants = f.iter().map(invariants).collect();
        Ok(Self {
            id: id.into(),
            z,
            f,
            invariants,
            meta,
            grid,
        })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        self.grid.range()
    }

    /// Cubic Hermite interpolation of `F` at `z`.
    pub fn eval(&self, z: f64) -> Result<[f64; 6]> {
        let v = self.grid.eval(z)?;
        Ok([v[0], v[1], v[2], v[3], v[4], v[5]])
    }

    /// `max_k |inv_k - inv_0|` for `(-R^2, D)`.
    pub fn drift(&self) -> (f64, f64) {
        let (m0, d0) = self.invariants[0];
        self.invariants.iter().fold((0.0, 0.0), |(a, b), &(m, d)| {
            (f64::max(a, (m - m0).abs()), f64::max(b, (d - d0).abs()))
        })
    }

    /// `max_k max_ij |F_ij - F_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.f
            .iter()
            .map(|s| {
                let t = swap(s);
                s.iter().zip(&t).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// CSV text with the fixed header; `sigma_res` holds one value per sample.
    pub fn to_csv(&self, sigma_res: &[f64]) -> String {
        let mut out = String::with_capacity(self.len() * 200);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for k in 0..self.len() {
            let f = &self.f[k];
            let (m, d) = self.invariants[k];
            let s = sigma_res.get(k).copied().unwrap_or(f64::NAN);
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.z[k], f[0], f[1], f[2], f[3], f[4], f[5], m, d, s
            ));
        }
        out
    }

    /// Rotation coefficients obtained from this trajectory.
    pub fn beta_field(&self) -> TrajectoryBeta<'_> {
        TrajectoryBeta { traj: self }
    }
}

/// Integrates from `s0` to `z1` with invariant monitoring.
pub fn integrate(s0: &FState, z1: f64, opts: &IntegrateOptions) -> Result<TrajectoryN3> {
    integrate_span(s0, z1, z1, opts).map(|mut t| {
        t.id = format!("z0={},z1={}", s0.z, z1);
        t
    })
}

/// Integrates from `s0` in both directions to cover `[lo, hi]`, which must
/// contain `s0.z`.
pub fn integrate_span(s0: &FState, lo: f64, hi: f64, opts: &IntegrateOptions) -> Result<TrajectoryN3> {
    let (lo, hi) = (lo.min(s0.z), hi.max(s0.z));
    opts.guard.check_interval(lo, hi)?;
    let (m0, d0) = invariants(&s0.f);
    let guard = opts.guard;
    let ode_opts = Dopri5Options {
        atol: opts.atol,
        rtol: opts.rtol,
        h_max: opts.h_max,
        ..Default::default()
    };
    let mut meta = IntegratorMeta {
        method: "dopri5".into(),
        atol: opts.atol,
        rtol: opts.rtol,
        h_max: opts.h_max,
        accepted: 0,
        rejected: 0,
        drift_mr2: 0.0,
        drift_d: 0.0,
    };
    let run = |target: f64, meta: &mut IntegratorMeta| -> Result<Vec<(f64, [f64; 6])>> {
        let mut drift = (0.0f64, 0.0f64);
        let sol = dopri5(
            |z, y| {
                guard.check(z)?;
                Ok(rhs_raw(z, &to6(y)).to_vec())
            },
            s0.z,
            &s0.f,
            target,
            &ode_opts,
            |z, y| {
                let (m, d) = invariants(&to6(y));
                let dm = (m - m0).abs();
                let dd = (d - d0).abs();
                drift = (drift.0.max(dm), drift.1.max(dd));
                let worst = dm.max(dd);
                if worst > opts.max_drift {
                    return Err(Error::Drift {
                        z,
                        drift: worst,
                        bound: opts.max_drift,
                    });
                }
                Ok(())
            },
        )?;
        meta.accepted += sol.accepted;
        meta.rejected += sol.rejected;
        meta.drift_mr2 = meta.drift_mr2.max(drift.0);
        meta.drift_d = meta.drift_d.max(drift.1);
        Ok(sol.t.into_iter().zip(sol.y.iter().map(|y| to6(y))).collect())
    };
    let mut samples: Vec<(f64, [f64; 6])> = Vec::new();
    if lo < s0.z {
        let mut back = run(lo, &mut meta)?;
        back.reverse();
        back.pop();
        samples.extend(back);
    }
    if hi > s0.z || samples.is_empty() {
        samples.extend(run(hi, &mut meta)?);
    } else {
        samples.push((s0.z, s0.f));
    }
    if samples.len() < 2 {
        return Err(Error::Invalid("integration interval is empty".into()));
    }
    let (z, f): (Vec<f64>, Vec<[f64; 6]>) = samples.into_iter().unzip();
    TrajectoryN3::from_samples(format!("z0={},span=[{lo},{hi}]", s0.z), z, f, meta)
}

fn to6(y: &[f64]) -> [f64; 6] {
    [y[0], y[1], y[2], y[3], y[4], y[5]]
}

/// `z(u) = (u^3 - u^1)/(u^2 - u^1)`.
pub fn z_of(u: &Point) -> Result<f64> {
    u.check_dim(3)?;
    Ok((u[2] - u[0]) / (u[1] - u[0]))
}

/// The six rotation coefficients at `u` from a trajectory:
/// `beta_12 = F12/(u^2-u^1)`, `beta_21 = F21/(u^2-u^1)`,
/// `beta_13 = F13/(u^3-u^1)`, `beta_31 = F31/(u^3-u^1)`,
/// `beta_23 = F23/(u^3-u^2)`, `beta_32 = F32/(u^3-u^2)`, with `F` at `z(u)`.
pub fn beta_from_f(traj: &TrajectoryN3, u: &Point) -> Result<DMatrix<f64>> {
    u.check_dim(3)?;
    u.check_separated(DEFAULT_DELTA_SEP)?;
    let z = z_of(u)?;
    let f = traj.eval(z)?;
    let (x21, x31, x32) = (u[1] - u[0], u[2] - u[0], u[2] - u[1]);
    let mut b = DMatrix::zeros(3, 3);
    b[(0, 1)] = f[F12] / x21;
    b[(1, 0)] = f[F21] / x21;
    b[(0, 2)] = f[F13] / x31;
    b[(2, 0)] = f[F31] / x31;
    b[(1, 2)] = f[F23] / x32;
    b[(2, 1)] = f[F32] / x32;
    Ok(b)
}

/// [`RotationField`] view of a trajectory; partials by finite differences.
pub struct TrajectoryBeta<'a> {
    traj: &'a TrajectoryN3,
}

impl RotationField for TrajectoryBeta<'_> {
    fn dim(&self) -> usize {
        3
    }
    fn provenance(&self) -> String {
        format!("trajectory({})", self.traj.id)
    }
    fn beta(&self, p: &Point) -> Result<DMatrix<f64>> {
        beta_from_f(self.traj, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_reference_values() {
        let s = FState::new(2.0, [1.0; 6]).unwrap();
        let d = rhs(&s, &PoleGuard::default()).unwrap();
        assert_eq!(d, [0.5, -1.0, 0.5, 0.5, -1.0, 0.5]);
        let s = FState {
            z: 2.0,
            f: [1.0, 0.0, 1.0, 1.0, 1.0, 0.0],
        };
        assert_eq!(rhs(&s, &PoleGuard::default()).unwrap()[F12], 0.0);
        let s = FState { z: 1.0, f: [1.0; 6] };
        assert!(matches!(rhs(&s, &PoleGuard::default()), Err(Error::Pole { pole, .. }) if pole == 1.0));
    }

    #[test]
    fn invariant_reference_values() {
        assert_eq!(invariants(&[1.0; 6]), (3.0, 0.0));
        assert_eq!(invariants(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), (37.0, -16.0));
        assert_eq!(invariants(&[1.0, 0.0, 2.0, 0.0, 0.0, 0.0]), (2.0, 0.0));
    }

    #[test]
    fn symmetric_start_stays_symmetric() {
        let f0 = [0.3, -0.7, 0.3, 0.9, -0.7, 0.9];
        let s0 = FState::new(0.5, f0).unwrap();
        let t = integrate(&s0, 0.6, &IntegrateOptions::default()).unwrap();
        assert!(t.asymmetry() <= 1e-10, "asymmetry {}", t.asymmetry());
        assert!(t.invariants.iter().all(|&(_, d)| d.abs() <= 1e-10));
    }

    #[test]
    fn conservation_and_step_doubling() {
        let f0 = [0.4, -0.2, 0.9, 0.1, -0.6, 0.75];
        let s0 = FState::new(0.5, f0).unwrap();
        let opts = IntegrateOptions::default();
        let t = integrate(&s0, 0.6, &opts).unwrap();
        let (dm, dd) = t.drift();
        assert!(dm < 1e-9 && dd < 1e-9, "drift {dm:e} {dd:e}");
        let half = IntegrateOptions {
            atol: 0.5 * opts.atol,
            rtol: 0.5 * opts.rtol,
            ..opts
        };
        let t2 = integrate(&s0, 0.6, &half).unwrap();
        let a = t.f.last().unwrap();
        let b = t2.f.last().unwrap();
        let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 10.0 * opts.atol, "endpoint change {diff:e}");
    }

    #[test]
    fn swap_flips_d() {
        let f0 = [0.4, -0.2, 0.9, 0.1, -0.6, 0.75];
        let s0 = FState::new(0.45, f0).unwrap();
        let t = integrate(&s0, 0.55, &IntegrateOptions::default()).unwrap();
        let ts = integrate(&s0.swapped(), 0.55, &IntegrateOptions::default()).unwrap();
        let (m, d) = invariants(&f0);
        let (ms, ds) = invariants(&swap(&f0));
        assert!((m - ms).abs() < 1e-15 && (d + ds).abs() < 1e-15);
        let end = swap(t.f.last().unwrap());
        let end_s = ts.f.last().unwrap();
        for k in 0..6 {
            assert!((end[k] - end_s[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_span_and_interpolation() {
        let f0 = [0.4, -0.2, 0.9, 0.1, -0.6, 0.75];
        let s0 = FState::new(0.5, f0).unwrap();
        let t = integrate_span(&s0, 0.4, 0.6, &IntegrateOptions::default()).unwrap();
        assert_eq!(t.range(), (0.4, 0.6));
        assert!(t.z.windows(2).all(|w| w[1] > w[0]));
        let mid = t.eval(0.5).unwrap();
        for k in 0..6 {
            assert!((mid[k] - f0[k]).abs() < 1e-14);
        }
        assert!(matches!(t.eval(0.7), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn pole_inside_interval_is_rejected() {
        let s0 = FState::new(0.9, [0.1; 6]).unwrap();
        assert!(matches!(
            integrate(&s0, 1.2, &IntegrateOptions::default()),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn beta_reference_points() {
        let f0 = [0.4, -0.2, 0.9, 0.1, -0.6, 0.75];
        let s0 = FState::new(0.5, f0).unwrap();
        let t = integrate_span(&s0, 0.3, 0.7, &IntegrateOptions::default()).unwrap();
        let u = Point::new(vec![0.0, 1.0, 0.45]).unwrap();
        let b = beta_from_f(&t, &u).unwrap();
        assert!((b[(0, 1)] - t.eval(0.45).unwrap()[F12]).abs() < 1e-15);
        let u = Point::new(vec![1.0, 3.0, 2.0]).unwrap();
        let b = beta_from_f(&t, &u).unwrap();
        assert!((b[(0, 1)] - f0[F12] / 2.0).abs() < 1e-14);
        // Translation and scaling behaviour.
        let shifted = beta_from_f(&t, &u.translated(0.7)).unwrap();
        assert!((&shifted - &b).amax() < 1e-14);
        let scaled = beta_from_f(&t, &u.scaled(2.5)).unwrap();
        assert!((scaled * 2.5 - &b).amax() < 1e-14);
    }
}

//! Closed-form solutions in dimension two.
//!
//! The rotation coefficients are `beta_12 = C1 / (u^1 - u^2)` and
//! `beta_21 = C2 / (u^1 - u^2)`. On top of them live three kinds of Lamé
//! coefficients:
//!
//! * [`N2NaturalLame`]: translation-invariant solutions built from
//!   `sin`/`cos` of `sqrt(C1 C2) ln(u^1 - u^2)`;
//! * [`N2DualLame`]: homogeneous solutions `H_1 = f(u^2/u^1) (u^1)^d`, either
//!   in closed form for `C1 = 1, C2 = -4` or from a numerical solution of the
//!   second-order equation for `f`;
//! * [`N2Biflat`]: power laws `H_i = D_i (u^1 - u^2)^p` solving both systems.
//!
//! The last two follow the raising convention `E(H) = +d H`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::darboux_egorov::{DegreeSign, LameField, RotationField};
use crate::error::{Error, Result};
use crate::interp::HermiteGrid;
use crate::ode::{dopri5, rk4, Dopri5Options};
use crate::point::{Point, DEFAULT_DELTA_SEP};

/// Default distance kept from the singular points `z = 0` and `z = 1`.
pub const DEFAULT_POLE_GUARD: f64 = 1e-3;

/// Relative size of an imaginary part still accepted as round-off.
const REAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct N2Model {
    pub c1: f64,
    pub c2: f64,
}

impl N2Model {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite()) || (c1 == 0.0 && c2 == 0.0) {
            return Err(Error::InvalidModel(format!(
                "C1 = {c1}, C2 = {c2}: constants must be finite and not both zero"
            )));
        }
        Ok(Self { c1, c2 })
    }

    fn gap(p: &Point) -> Result<f64> {
        p.check_dim(2)?;
        p.check_separated(DEFAULT_DELTA_SEP)?;
        Ok(p[0] - p[1])
    }
}

impl RotationField for N2Model {
    fn dim(&self) -> usize {
        2
    }

    fn provenance(&self) -> String {
        format!("n2(C1={}, C2={})", self.c1, self.c2)
    }

    fn beta(&self, p: &Point) -> Result<DMatrix<f64>> {
        let w = Self::gap(p)?;
        Ok(DMatrix::from_row_slice(2, 2, &[0.0, self.c1 / w, self.c2 / w, 0.0]))
    }

    fn beta_partials(&self, p: &Point) -> Result<Option<Vec<DMatrix<f64>>>> {
        let w = Self::gap(p)?;
        let w2 = w * w;
        let d1 = DMatrix::from_row_slice(2, 2, &[0.0, -self.c1 / w2, -self.c2 / w2, 0.0]);
        let d2 = -d1.clone();
        Ok(Some(vec![d1, d2]))
    }
}

fn real_part(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > REAL_TOL * z.norm().max(1.0) || !z.re.is_finite() {
        return Err(Error::Domain(format!(
            "{what} = {z} is not real; evaluate in complex mode"
        )));
    }
    Ok(z.re)
}

/// Translation-invariant Lamé coefficients
///
/// ```text
/// H_1 = a sin(k ln z) + b cos(k ln z)
/// H_2 = -(k / C1) (a cos(k ln z) - b sin(k ln z))
/// ```
///
/// with `z = u^1 - u^2` and `k = sqrt(C1 C2)` (principal branches). For
/// `C1 > 0` the prefactor `k / C1` equals `sqrt(C2 / C1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct N2NaturalLame {
    pub model: N2Model,
    pub a: f64,
    pub b: f64,
    /// Allow `u^1 < u^2` (complex logarithm); real evaluation still requires
    /// real results.
    pub complex: bool,
}

impl N2NaturalLame {
    pub fn new(model: N2Model, a: f64, b: f64) -> Result<Self> {
        if model.c1 == 0.0 {
            return Err(Error::InvalidModel("natural Lamé coefficients need C1 != 0".into()));
        }
        Ok(Self {
            model,
            a,
            b,
            complex: false,
        })
    }

    pub fn with_complex(mut self, complex: bool) -> Self {
        self.complex = complex;
        self
    }

    fn k(&self) -> Complex64 {
        Complex64::new(self.model.c1 * self.model.c2, 0.0).sqrt()
    }

    fn parts(&self, p: &Point) -> Result<(Complex64, Complex64, Complex64)> {
        let w = N2Model::gap(p)?;
        if w <= 0.0 && !self.complex {
            return Err(Error::Domain(format!(
                "u1 - u2 = {w} <= 0 needs the complex logarithm"
            )));
        }
        let arg = self.k() * Complex64::new(w, 0.0).ln();
        Ok((arg.sin(), arg.cos(), Complex64::new(w, 0.0)))
    }

    /// `(H_1, H_2)` over the complex numbers.
    pub fn eval_complex(&self, p: &Point) -> Result<[Complex64; 2]> {
        let (s, c, _) = self.parts(p)?;
        let k = self.k();
        let h1 = s * self.a + c * self.b;
        let h2 = -(k / self.model.c1) * (c * self.a - s * self.b);
        Ok([h1, h2])
    }

    /// `[[d_1 H_1, d_2 H_1], [d_1 H_2, d_2 H_2]]` over the complex numbers.
    pub fn partials_complex(&self, p: &Point) -> Result<[[Complex64; 2]; 2]> {
        let (s, c, w) = self.parts(p)?;
        let k = self.k();
        let d1h1 = k * (c * self.a - s * self.b) / w;
        let d1h2 = k * k / self.model.c1 * (s * self.a + c * self.b) / w;
        Ok([[d1h1, -d1h1], [d1h2, -d1h2]])
    }
}

impl LameField for N2NaturalLame {
    fn dim(&self) -> usize {
        2
    }

    fn h(&self, p: &Point) -> Result<Vec<f64>> {
        let [h1, h2] = self.eval_complex(p)?;
        Ok(vec![real_part(h1, "H1")?, real_part(h2, "H2")?])
    }

    fn h_partials(&self, p: &Point) -> Result<Option<DMatrix<f64>>> {
        let d = self.partials_complex(p)?;
        let mut m = DMatrix::zeros(2, 2);
        for i in 0..2 {
            for l in 0..2 {
                m[(i, l)] = real_part(d[i][l], "dH")?;
            }
        }
        Ok(Some(m))
    }

    fn degree(&self) -> Option<f64> {
        None
    }
}

/// How the function `f` in `H_1 = f(u^2/u^1) (u^1)^d` is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum DualMode {
    /// Closed form for `C1 = 1, C2 = -4` with integration constants `(a, b)`.
    Special { a: f64, b: f64 },
    /// Numerical solution of the second-order equation on a grid.
    Ode { grid: HermiteGrid },
}

/// Homogeneous Lamé coefficients for the dual connection,
///
/// ```text
/// H_1 = f(z) (u^1)^d,   H_2 = (u^1 - u^2) d_2 H_1 / C1 = (u^1)^d (1 - z) f'(z) / C1,
/// ```
///
/// where `z = u^2/u^1` and `f` solves
/// `z (z-1)^2 f'' + (z^2 - z - d (z-1)^2) f' + C1 C2 f = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct N2DualLame {
    pub model: N2Model,
    pub d: f64,
    pub mode: DualMode,
    pub pole_guard: f64,
}

impl N2DualLame {
    /// Closed-form case `C1 = 1, C2 = -4`.
    pub fn special(d: f64, a: f64, b: f64) -> Result<Self> {
        Ok(Self {
            model: N2Model::new(1.0, -4.0)?,
            d,
            mode: DualMode::Special { a, b },
            pole_guard: DEFAULT_POLE_GUARD,
        })
    }

    /// Integrates the equation for `f` from `(f(z0), f'(z0))` over `[lo, hi]`
    /// (which must contain `z0` and stay clear of `z = 0, 1`).
    pub fn ode(model: N2Model, d: f64, z0: f64, f0: f64, df0: f64, lo: f64, hi: f64) -> Result<Self> {
        if model.c1 == 0.0 {
            return Err(Error::InvalidModel("dual Lamé coefficients need C1 != 0".into()));
        }
        if !(lo <= z0 && z0 <= hi && lo < hi) {
            return Err(Error::Invalid(format!("z0 = {z0} not inside [{lo}, {hi}]")));
        }
        for pole in [0.0, 1.0] {
            if lo - DEFAULT_POLE_GUARD < pole && pole < hi + DEFAULT_POLE_GUARD {
                return Err(Error::Pole {
                    z: if (lo - pole).abs() < (hi - pole).abs() { lo } else { hi },
                    pole,
                    guard: DEFAULT_POLE_GUARD,
                });
            }
        }
        let c1c2 = model.c1 * model.c2;
        let rhs = move |z: f64, y: &[f64]| -> Result<Vec<f64>> { Ok(vec![y[1], second_derivative(z, y[0], y[1], d, c1c2)]) };
        let opts = Dopri5Options {
            atol: 1e-13,
            rtol: 1e-13,
            h_max: (hi - lo) / 2000.0,
            ..Default::default()
        };
        let mut t = Vec::new();
        let mut y = Vec::new();
        if z0 > lo {
            let back = dopri5(rhs, z0, &[f0, df0], lo, &opts, |_, _| Ok(()))?;
            t.extend(back.t.iter().rev());
            y.extend(back.y.iter().rev().cloned());
            t.pop();
            y.pop();
        }
        let fwd = dopri5(rhs, z0, &[f0, df0], hi, &opts, |_, _| Ok(()))?;
        t.extend(fwd.t);
        y.extend(fwd.y);
        let dy = t
            .iter()
            .zip(&y)
            .map(|(&z, s)| rhs(z, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            d,
            mode: DualMode::Ode {
                grid: HermiteGrid::new(t, y, dy)?,
            },
            pole_guard: DEFAULT_POLE_GUARD,
        })
    }

    fn guard(&self, z: f64) -> Result<()> {
        for pole in [0.0, 1.0] {
            if (z - pole).abs() < self.pole_guard {
                return Err(Error::Pole {
                    z,
                    pole,
                    guard: self.pole_guard,
                });
            }
        }
        Ok(())
    }

    /// `(f, f', f'')` at `z`.
    pub fn f_data(&self, z: f64) -> Result<(f64, f64, f64)> {
        self.guard(z)?;
        let (f, df) = match &self.mode {
            DualMode::Special { a, b } => special_f(z, self.d, *a, *b)?,
            DualMode::Ode { grid } => {
                // Cubic interpolation loses accuracy where f varies quickly
                // near z = 1, so restart from the stored node instead.
                let (t0, y0) = grid.node_below(z)?;
                let c1c2 = self.model.c1 * self.model.c2;
                let d = self.d;
                let v = if z == t0 {
                    y0.to_vec()
                } else {
                    rk4(|t, y| Ok(vec![y[1], second_derivative(t, y[0], y[1], d, c1c2)]), t0, y0, z, 8)?
                };
                (v[0], v[1])
            }
        };
        let ddf = second_derivative(z, f, df, self.d, self.model.c1 * self.model.c2);
        Ok((f, df, ddf))
    }

    fn setup(&self, p: &Point) -> Result<(f64, f64, f64, (f64, f64, f64))> {
        p.check_dim(2)?;
        p.check_separated(DEFAULT_DELTA_SEP)?;
        let u1 = p[0];
        if u1.abs() < DEFAULT_DELTA_SEP {
            return Err(Error::Domain(format!("u1 = {u1} too close to zero")));
        }
        let z = p[1] / u1;
        let pow = u1.powf(self.d - 1.0);
        if !pow.is_finite() {
            return Err(Error::Domain(format!(
                "u1^(d-1) undefined for u1 = {u1}, d = {}",
                self.d
            )));
        }
        Ok((u1, z, pow, self.f_data(z)?))
    }

    /// The printed closed-form expressions for `(H_1, H_2)` in the special case,
    /// evaluated directly (used to cross-check the assembly from `f`).
    pub fn special_display(d: f64, a: f64, b: f64, p: &Point) -> Result<[f64; 2]> {
        p.check_dim(2)?;
        let (u1, u2) = (p[0], p[1]);
        let den = (u1 - u2) * (u1 - u2);
        let h1 = -a * u2.powf(d + 1.0) * (u2 - d * u2 + 2.0 * u1 + d * u1) / den
            + b * u1.powf(d)
                * (u2 * u2 * (d * d + 3.0 * d + 2.0)
                    + u1 * u2 * (-2.0 * d - 2.0 * d * d + 4.0)
                    + u1 * u1 * (d * d - d))
                / den;
        let h2 = -4.0 * b * u1.powf(d + 1.0) * (-d * u2 + d * u1 - u1 - 2.0 * u2) / den
            - a * u2.powf(d)
                * (u2 * u2 * (d * d - d)
                    + u1 * u2 * (-2.0 * d * d - 2.0 * d + 4.0)
                    + u1 * u1 * (2.0 + 3.0 * d + d * d))
                / den;
        if !(h1.is_finite() && h2.is_finite()) {
            return Err(Error::Domain(format!("closed form undefined at {:?}", p.coords())));
        }
        Ok([h1, h2])
    }
}

/// `f''` from the second-order equation.
fn second_derivative(z: f64, f: f64, df: f64, d: f64, c1c2: f64) -> f64 {
    let zm = z - 1.0;
    -(df * (z * z - z - d * zm * zm) + c1c2 * f) / (z * zm * zm)
}

/// Closed-form `(f, f')` for `C1 = 1, C2 = -4`.
fn special_f(z: f64, d: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let zm = z - 1.0;
    let zm2 = zm * zm;
    let zm3 = zm2 * zm;
    let na = (d - 1.0) * z - (2.0 + d);
    let zp = z.powf(d + 1.0);
    let zp_1 = z.powf(d);
    let fa = na * zp / zm2;
    let dfa = ((d - 1.0) * zp + (d + 1.0) * na * zp_1) / zm2 - 2.0 * na * zp / zm3;
    let pb = (d * d + 3.0 * d + 2.0) * z * z + (-2.0 * d - 2.0 * d * d + 4.0) * z + d * d - d;
    let dpb = 2.0 * (d * d + 3.0 * d + 2.0) * z + (-2.0 * d - 2.0 * d * d + 4.0);
    let fb = pb / zm2;
    let dfb = dpb / zm2 - 2.0 * pb / zm3;
    // The a-branch carries z^(d+1); skip it when a = 0 so negative z stays
    // admissible for the b-branch alone.
    let (fa, dfa) = if a == 0.0 { (0.0, 0.0) } else { (a * fa, a * dfa) };
    let (f, df) = (fa + b * fb, dfa + b * dfb);
    if !(f.is_finite() && df.is_finite()) {
        return Err(Error::Domain(format!("closed-form f undefined at z = {z}, d = {d}")));
    }
    Ok((f, df))
}

impl LameField for N2DualLame {
    fn dim(&self) -> usize {
        2
    }

    fn h(&self, p: &Point) -> Result<Vec<f64>> {
        let (u1, z, pow, (f, df, _)) = self.setup(p)?;
        let ud = pow * u1;
        Ok(vec![f * ud, ud * (1.0 - z) * df / self.model.c1])
    }

    fn h_partials(&self, p: &Point) -> Result<Option<DMatrix<f64>>> {
        let (_, z, pow, (f, df, ddf)) = self.setup(p)?;
        let c1 = self.model.c1;
        let d = self.d;
        let g = (1.0 - z) * df / c1;
        let dg = (-df + (1.0 - z) * ddf) / c1;
        Ok(Some(DMatrix::from_row_slice(
            2,
            2,
            &[
                pow * (d * f - z * df),
                pow * df,
                pow * (d * g - z * dg),
                pow * dg,
            ],
        )))
    }

    fn degree(&self) -> Option<f64> {
        Some(self.d)
    }

    fn degree_sign(&self) -> DegreeSign {
        DegreeSign::Raising
    }
}

/// Power-law solutions `H_i = D_i (u^1 - u^2)^p` with
/// `-C1 D2/D1 = C2 D1/D2 = p`, homogeneous with `E(H) = +p H`.
///
/// Under the lowering convention the same field has degree `-p`, see
/// [`N2Biflat::normative_degree`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct N2Biflat {
    pub model: N2Model,
    pub p: f64,
    pub d1: f64,
    pub d2: f64,
}

impl N2Biflat {
    /// Picks `D1 = 1, D2 = -p / C1`; requires `p^2 = -C1 C2`.
    pub fn new(model: N2Model, p: f64) -> Result<Self> {
        if model.c1 == 0.0 || p == 0.0 {
            return Err(Error::InvalidModel("power-law solution needs C1 != 0 and p != 0".into()));
        }
        let s = Self {
            model,
            p,
            d1: 1.0,
            d2: -p / model.c1,
        };
        s.validate()?;
        Ok(s)
    }

    /// Builds the solution whose degree under `E(H) = -d H` is `d`.
    pub fn from_normative_degree(model: N2Model, d: f64) -> Result<Self> {
        Self::new(model, -d)
    }

    /// Admissible exponents `p = ±sqrt(-C1 C2)`, complex when `C1 C2 > 0`.
    pub fn exponents(model: N2Model) -> [Complex64; 2] {
        let r = Complex64::new(-model.c1 * model.c2, 0.0).sqrt();
        [r, -r]
    }

    pub fn with_constants(model: N2Model, p: f64, d1: f64, d2: f64) -> Result<Self> {
        let s = Self { model, p, d1, d2 };
        s.validate()?;
        Ok(s)
    }

    /// `max(|-C1 D2/D1 - p|, |C2 D1/D2 - p|)`.
    pub fn constraint_residual(&self) -> f64 {
        let r1 = (-self.model.c1 * self.d2 / self.d1 - self.p).abs();
        let r2 = (self.model.c2 * self.d1 / self.d2 - self.p).abs();
        r1.max(r2)
    }

    fn validate(&self) -> Result<()> {
        let r = self.constraint_residual();
        if !(r <= 1e-12 * self.p.abs().max(1.0)) {
            return Err(Error::InvalidModel(format!(
                "constraints -C1 D2/D1 = C2 D1/D2 = p violated by {r:e}"
            )));
        }
        Ok(())
    }

    pub fn normative_degree(&self) -> f64 {
        -self.p
    }

    /// Expected `(Gamma^1_12, Gamma^2_21)` at `p`: `(-d/(u^2-u^1), d/(u^2-u^1))`
    /// with `d` the normative degree.
    pub fn expected_gamma(&self, pt: &Point) -> Result<(f64, f64)> {
        pt.check_dim(2)?;
        let d = self.normative_degree();
        let w = pt[1] - pt[0];
        Ok((-d / w, d / w))
    }

    fn power(&self, pt: &Point, exponent: f64) -> Result<f64> {
        let w = N2Model::gap(pt)?;
        let v = w.powf(exponent);
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "(u1 - u2)^{exponent} undefined for u1 - u2 = {w}"
            )));
        }
        Ok(v)
    }
}

impl LameField for N2Biflat {
    fn dim(&self) -> usize {
        2
    }

    fn h(&self, pt: &Point) -> Result<Vec<f64>> {
        let w = self.power(pt, self.p)?;
        Ok(vec![self.d1 * w, self.d2 * w])
    }

    fn h_partials(&self, pt: &Point) -> Result<Option<DMatrix<f64>>> {
        let w = self.p * self.power(pt, self.p - 1.0)?;
        Ok(Some(DMatrix::from_row_slice(
            2,
            2,
            &[self.d1 * w, -self.d1 * w, self.d2 * w, -self.d2 * w],
        )))
    }

    fn degree(&self) -> Option<f64> {
        Some(self.p)
    }

    fn degree_sign(&self) -> DegreeSign {
        DegreeSign::Raising
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux_egorov::{
        build_dual_connection, build_natural_connection, lame_jacobian, lame_residuals, v_matrix,
        DEFAULT_DELTA_H,
    };
    use crate::darboux_egorov::{FnLame, LameRole};
    use crate::fd::Step;
    use crate::darboux_egorov::{DualConnection, NaturalConnection};
    use crate::geometry::riemann_curvature;

    fn pt(a: f64, b: f64) -> Point {
        Point::new(vec![a, b]).unwrap()
    }

    #[test]
    fn natural_lame_reference_values() {
        let m = N2Model::new(1.0, 4.0).unwrap();
        let l = N2NaturalLame::new(m, 1.0, 0.0).unwrap();
        let h = l.h(&pt(2.0, 1.0)).unwrap();
        assert!(h[0].abs() < 1e-15);
        assert!((h[1] + 2.0).abs() < 1e-15);
        let l = N2NaturalLame::new(m, 0.0, 1.0).unwrap();
        let h = l.h(&pt(2.0, 1.0)).unwrap();
        assert!((h[0] - 1.0).abs() < 1e-15 && h[1].abs() < 1e-15);
    }

    #[test]
    fn natural_lame_solves_l1_l2() {
        for (c1, c2) in [(1.0, 4.0), (-2.0, -0.5), (0.3, 1.7)] {
            let m = N2Model::new(c1, c2).unwrap();
            let l = N2NaturalLame::new(m, 0.7, -1.3).unwrap();
            for q in [pt(3.0, 1.0), pt(0.2, -1.9), pt(5.0, 4.5)] {
                let r = lame_residuals(&m, &l, &q, Step::Auto).unwrap();
                assert!(r.l1 < 1e-9 && r.l2 < 1e-9, "{r:?}");
                assert!(r.l3.is_none());
            }
        }
    }

    #[test]
    fn natural_lame_real_mode_guards() {
        let m = N2Model::new(1.0, 4.0).unwrap();
        let l = N2NaturalLame::new(m, 1.0, 0.0).unwrap();
        assert!(matches!(l.h(&pt(1.0, 2.0)), Err(Error::Domain(_))));
        let lc = l.with_complex(true);
        assert!(lc.eval_complex(&pt(1.0, 2.0)).is_ok());
        // C1 C2 < 0 with a != 0 gives a complex H_1.
        let m = N2Model::new(1.0, -4.0).unwrap();
        let l = N2NaturalLame::new(m, 1.0, 0.0).unwrap();
        assert!(matches!(l.h(&pt(3.0, 1.0)), Err(Error::Domain(_))));
        // With a = 0 both coefficients stay real: cosh and sinh of ln(u1 - u2).
        let l = N2NaturalLame::new(m, 0.0, 1.0).unwrap();
        let h = l.h(&pt(3.0, 1.0)).unwrap();
        let x = 2.0 * 2f64.ln();
        assert!((h[0] - x.cosh()).abs() < 1e-14 && (h[1] + 2.0 * x.sinh()).abs() < 1e-14);
    }

    #[test]
    fn special_dual_reference_values() {
        let l = N2DualLame::special(1.0, 0.0, 1.0).unwrap();
        let h = l.h(&pt(2.0, 1.0)).unwrap();
        assert!((h[0] - 12.0).abs() < 1e-12, "H1 = {}", h[0]);
        assert!((h[1] - 48.0).abs() < 1e-12, "H2 = {}", h[1]);
        let disp = N2DualLame::special_display(1.0, 0.0, 1.0, &pt(2.0, 1.0)).unwrap();
        assert!((disp[0] - 12.0).abs() < 1e-12 && (disp[1] - 48.0).abs() < 1e-12);
    }

    #[test]
    fn special_dual_matches_display_and_solves_system() {
        for (d, a, b) in [(1.0, 0.0, 1.0), (2.0, 1.0, 0.5), (0.5, -0.3, 1.1), (-1.5, 0.8, 0.0)] {
            let l = N2DualLame::special(d, a, b).unwrap();
            for q in [pt(2.0, 1.0), pt(3.0, 0.4), pt(1.5, 1.2)] {
                let h = l.h(&q).unwrap();
                let disp = N2DualLame::special_display(d, a, b, &q).unwrap();
                let scale = h[0].abs().max(h[1].abs()).max(1.0);
                assert!((h[0] - disp[0]).abs() < 1e-12 * scale, "d={d} H1 {} vs {}", h[0], disp[0]);
                assert!((h[1] - disp[1]).abs() < 1e-12 * scale, "d={d} H2 {} vs {}", h[1], disp[1]);
                let r = lame_residuals(&l.model, &l, &q, Step::Auto).unwrap();
                assert!(r.l1 < 1e-9 * scale && r.l3.unwrap() < 1e-9 * scale, "{r:?}");
                // Analytic partials agree with finite differences.
                let fd = FnLame::new(2, None, DegreeSign::Raising, LameRole::Primary, |x: &Point| l.h(x));
                let ja = lame_jacobian(&l, &q, Step::Auto).unwrap();
                let jn = lame_jacobian(&fd, &q, Step::Auto).unwrap();
                assert!((ja - jn).amax() < 1e-7 * scale);
            }
        }
    }

    #[test]
    fn ode_mode_matches_special_case() {
        let (d, a, b) = (1.0, 0.4, 1.0);
        let special = N2DualLame::special(d, a, b).unwrap();
        let (f0, df0, _) = special.f_data(0.5).unwrap();
        let ode = N2DualLame::ode(special.model, d, 0.5, f0, df0, 0.1, 0.9).unwrap();
        for k in 0..=80 {
            let z = 0.1 + 0.01 * k as f64;
            let (fs, dfs, _) = special.f_data(z).unwrap();
            let (fo, dfo, _) = ode.f_data(z).unwrap();
            assert!((fs - fo).abs() < 1e-8, "z={z}: {fs} vs {fo}");
            assert!((dfs - dfo).abs() < 1e-8 * dfs.abs().max(1.0), "z={z}: {dfs} vs {dfo}");
        }
    }

    #[test]
    fn ode_mode_rejects_poles() {
        let m = N2Model::new(1.0, -4.0).unwrap();
        assert!(matches!(
            N2DualLame::ode(m, 1.0, 0.5, 1.0, 0.0, 0.0, 0.9),
            Err(Error::Pole { .. })
        ));
        let l = N2DualLame::special(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(l.h(&pt(2.0, 0.0008)), Err(Error::Pole { .. })));
        assert!(matches!(l.h(&pt(2.0, 1.9985)), Err(Error::Pole { .. })));
    }

    #[test]
    fn biflat_family() {
        let m = N2Model::new(1.0, -4.0).unwrap();
        let s = N2Biflat::from_normative_degree(m, 2.0).unwrap();
        assert_eq!(s.p, -2.0);
        assert!(s.constraint_residual() < 1e-12);
        let q = pt(3.0, 1.0);
        let (g112, g221) = s.expected_gamma(&q).unwrap();
        assert!((g112 + 2.0 / (1.0 - 3.0)).abs() < 1e-15);
        let nat = build_natural_connection(&m, &s, &q, DEFAULT_DELTA_H).unwrap();
        assert!((nat.get(0, 0, 1) - g112).abs() < 1e-12);
        assert!((nat.get(1, 1, 0) - g221).abs() < 1e-12);
        let dual = build_dual_connection(&m, &s, &q, DEFAULT_DELTA_H, 1e-3).unwrap();
        assert!((dual.get(0, 0, 1) - g112).abs() < 1e-12);
        let r = lame_residuals(&m, &s, &q, Step::Auto).unwrap();
        assert!(r.l1 < 1e-12 && r.l2 < 1e-12 && r.l3.unwrap() < 1e-12, "{r:?}");
        let v = v_matrix(&m, &q).unwrap();
        assert!(v.relation_residual(&s.h(&q).unwrap(), s.p) < 1e-12);
        let nat_conn = NaturalConnection::new(&m, &s);
        let dual_conn = DualConnection::new(&m, &s);
        assert!(riemann_curvature(&nat_conn, &q, Step::Auto).unwrap().max_abs() < 1e-7);
        assert!(riemann_curvature(&dual_conn, &q, Step::Auto).unwrap().max_abs() < 1e-7);
    }

    #[test]
    fn biflat_rejects_bad_constants() {
        let m = N2Model::new(1.0, -4.0).unwrap();
        assert!(N2Biflat::new(m, 3.0).is_err());
        assert!(N2Biflat::with_constants(m, 2.0, 1.0, -2.0 + 1e-6).is_err());
        let e = N2Biflat::exponents(N2Model::new(1.0, 4.0).unwrap());
        assert!((e[0].im.abs() - 2.0).abs() < 1e-15);
    }
}

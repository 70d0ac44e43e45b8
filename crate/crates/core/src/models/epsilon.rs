//! The ε-system family: Lamé coefficients
//! `H_i = |prod_{l != i} (u^i - u^l)|^(-eps)` for any `n`, together with the
//! rotation coefficients `beta_ij = d_j H_i / H_j`, the adjoint solutions and
//! the characteristic velocities `X^i = u^i - eps sum_k u^k`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::darboux_egorov::{DegreeSign, LameField, LameRole, RotationField};
use crate::error::{Error, Result};
use crate::geometry::VectorField;
use crate::point::{Point, DEFAULT_DELTA_SEP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonModel {
    pub n: usize,
    pub eps: f64,
    #[serde(default = "default_sep")]
    pub delta_sep: f64,
}

fn default_sep() -> f64 {
    DEFAULT_DELTA_SEP
}

impl EpsilonModel {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!("dimension {n} < 2")));
        }
        if !eps.is_finite() {
            return Err(Error::InvalidModel("eps must be finite".into()));
        }
        Ok(Self {
            n,
            eps,
            delta_sep: DEFAULT_DELTA_SEP,
        })
    }

    /// Homogeneity degree under the lowering convention `E(H) = -d H`.
    pub fn degree(&self) -> f64 {
        (self.n as f64 - 1.0) * self.eps
    }

    fn check(&self, p: &Point) -> Result<()> {
        p.check_dim(self.n)?;
        p.check_separated(self.delta_sep)
    }

    /// `d_k ln|H_i|` as a matrix `[(i, k)]`.
    fn log_h_gradient(&self, u: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let eps = self.eps;
        DMatrix::from_fn(n, n, |i, k| {
            if i == k {
                -eps * (0..n).filter(|&l| l != i).map(|l| 1.0 / (u[i] - u[l])).sum::<f64>()
            } else {
                eps / (u[i] - u[k])
            }
        })
    }

    fn h_values(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let prod: f64 = (0..self.n).filter(|&l| l != i).map(|l| u[i] - u[l]).product();
                prod.abs().powf(-self.eps)
            })
            .collect()
    }

    pub fn adjoint(&self) -> EpsilonAdjoint {
        EpsilonAdjoint {
            model: *self,
            control: false,
        }
    }

    /// `K_i = u^i / H_i`, which violates the adjoint system; used as a
    /// negative control.
    pub fn adjoint_control(&self) -> EpsilonAdjoint {
        EpsilonAdjoint {
            model: *self,
            control: true,
        }
    }

    pub fn velocity(&self) -> EpsilonVelocity {
        EpsilonVelocity { n: self.n, eps: self.eps }
    }
}

impl RotationField for EpsilonModel {
    fn dim(&self) -> usize {
        self.n
    }

    fn provenance(&self) -> String {
        format!("epsilon(n={}, eps={})", self.n, self.eps)
    }

    fn beta(&self, p: &Point) -> Result<DMatrix<f64>> {
        self.check(p)?;
        let u = p.coords();
        let h = self.h_values(u);
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| {
            if i == j {
                0.0
            } else {
                self.eps * h[i] / (h[j] * (u[i] - u[j]))
            }
        }))
    }

    fn beta_partials(&self, p: &Point) -> Result<Option<Vec<DMatrix<f64>>>> {
        let b = self.beta(p)?;
        let u = p.coords();
        let g = self.log_h_gradient(u);
        let n = self.n;
        let partials = (0..n)
            .map(|k| {
                DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        return 0.0;
                    }
                    let mut dlog = g[(i, k)] - g[(j, k)];
                    if k == i {
                        dlog -= 1.0 / (u[i] - u[j]);
                    } else if k == j {
                        dlog += 1.0 / (u[i] - u[j]);
                    }
                    b[(i, j)] * dlog
                })
            })
            .collect();
        Ok(Some(partials))
    }
}

impl LameField for EpsilonModel {
    fn dim(&self) -> usize {
        self.n
    }

    fn h(&self, p: &Point) -> Result<Vec<f64>> {
        self.check(p)?;
        Ok(self.h_values(p.coords()))
    }

    fn h_partials(&self, p: &Point) -> Result<Option<DMatrix<f64>>> {
        self.check(p)?;
        let u = p.coords();
        let h = self.h_values(u);
        let g = self.log_h_gradient(u);
        Ok(Some(DMatrix::from_fn(self.n, self.n, |i, k| h[i] * g[(i, k)])))
    }

    fn degree(&self) -> Option<f64> {
        Some(EpsilonModel::degree(self))
    }

    fn degree_sign(&self) -> DegreeSign {
        DegreeSign::Lowering
    }
}

/// Solutions of the adjoint system for the ε-model.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonAdjoint {
    model: EpsilonModel,
    control: bool,
}

impl LameField for EpsilonAdjoint {
    fn dim(&self) -> usize {
        self.model.n
    }

    fn h(&self, p: &Point) -> Result<Vec<f64>> {
        let h = self.model.h(p)?;
        let u = p.coords();
        Ok(h.iter()
            .enumerate()
            .map(|(i, hi)| if self.control { u[i] / hi } else { 1.0 / hi })
            .collect())
    }

    fn h_partials(&self, p: &Point) -> Result<Option<DMatrix<f64>>> {
        let k = self.h(p)?;
        let g = self.model.log_h_gradient(p.coords());
        let u = p.coords();
        let n = self.model.n;
        Ok(Some(DMatrix::from_fn(n, n, |i, l| {
            let mut d = -k[i] * g[(i, l)];
            if self.control && i == l {
                d += k[i] / u[i];
            }
            d
        })))
    }

    fn degree(&self) -> Option<f64> {
        None
    }

    fn role(&self) -> LameRole {
        LameRole::Adjoint
    }
}

/// Characteristic velocities `X^i = u^i - eps sum_k u^k` of the ε-system.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonVelocity {
    pub n: usize,
    pub eps: f64,
}

impl VectorField for EpsilonVelocity {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        format!("eps-velocity(eps={})", self.eps)
    }

    fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        let s: f64 = p.coords().iter().sum();
        Ok(p.coords().iter().map(|x| x - self.eps * s).collect())
    }

    fn jacobian(&self, _p: &Point) -> Result<Option<DMatrix<f64>>> {
        let n = self.n;
        Ok(Some(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0 - self.eps
            } else {
                -self.eps
            }
        })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darboux_egorov::{
        beta_gradient, build_dual_connection, build_natural_connection, de_residuals,
        lame_jacobian, lame_residuals, DEFAULT_DELTA_H,
    };
    use crate::fd::Step;

    fn p() -> Point {
        Point::new(vec![1.0, 2.0, 4.0]).unwrap()
    }

    #[test]
    fn h_value_at_reference_point() {
        let m = EpsilonModel::new(3, 0.5).unwrap();
        let h = m.h(&p()).unwrap();
        assert!((h[0] - 3f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(EpsilonModel::degree(&m), 1.0);
    }

    #[test]
    fn natural_connection_reference_values() {
        let m = EpsilonModel::new(3, 0.5).unwrap();
        let g = build_natural_connection(&m, &m, &p(), DEFAULT_DELTA_H).unwrap();
        assert!((g.get(0, 0, 1) + 0.5).abs() < 1e-14);
        assert_eq!(g.get(0, 1, 2), 0.0);
        assert!((g.get(0, 0, 0) - 2.0 / 3.0).abs() < 1e-14);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let u = p();
                    assert!((g.get(i, i, j) - 0.5 / (u[i] - u[j])).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn dual_connection_reference_values() {
        let m = EpsilonModel::new(3, 0.5).unwrap();
        let g = build_dual_connection(&m, &m, &p(), DEFAULT_DELTA_H, 1e-3).unwrap();
        assert!((g.get(0, 1, 1) - 0.25).abs() < 1e-14);
        assert!((g.get(0, 0, 0) - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(g.get(0, 1, 2), 0.0);
        assert_eq!(g.get(2, 0, 1), 0.0);
    }

    #[test]
    fn zero_eps_is_trivial() {
        let m = EpsilonModel::new(4, 0.0).unwrap();
        let q = Point::new(vec![0.3, -1.2, 0.9, 1.7]).unwrap();
        assert_eq!(m.beta(&q).unwrap().amax(), 0.0);
        assert!(m.h(&q).unwrap().iter().all(|&x| x == 1.0));
        assert_eq!(EpsilonModel::degree(&m), 0.0);
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let m = EpsilonModel::new(4, -0.25).unwrap();
        let q = Point::new(vec![0.3, -1.2, 0.9, 1.7]).unwrap();
        let analytic = beta_gradient(&m, &q, Step::Auto).unwrap();
        let fd_beta = crate::darboux_egorov::FnRotation::new(4, "fd", |x: &Point| m.beta(x));
        let numeric = beta_gradient(&fd_beta, &q, Step::Auto).unwrap();
        for l in 0..4 {
            assert!((&analytic[l] - &numeric[l]).amax() < 1e-8);
        }
        let ja = lame_jacobian(&m, &q, Step::Auto).unwrap();
        let fd_h = crate::darboux_egorov::FnLame::new(
            4,
            None,
            DegreeSign::Lowering,
            LameRole::Primary,
            |x: &Point| m.h(x),
        );
        let jn = lame_jacobian(&fd_h, &q, Step::Auto).unwrap();
        assert!((ja - jn).amax() < 1e-8);
    }

    #[test]
    fn residuals_at_reference_point() {
        let m = EpsilonModel::new(3, 0.5).unwrap();
        let de = de_residuals(&m, &p(), Step::Auto).unwrap();
        assert!(de.max() < 1e-12, "{de:?}");
        let l = lame_residuals(&m, &m, &p(), Step::Auto).unwrap();
        assert!(l.l1 < 1e-12 && l.l2 < 1e-12 && l.l3.unwrap() < 1e-12, "{l:?}");
        let adj = lame_residuals(&m, &m.adjoint(), &p(), Step::Auto).unwrap();
        assert!(adj.l1 < 1e-12 && adj.l2 < 1e-12);
        let ctl = lame_residuals(&m, &m.adjoint_control(), &p(), Step::Auto).unwrap();
        assert!(ctl.l1 > 1e-3);
    }
}

//! Rotation and Lamé coefficients: residuals of the augmented Darboux-Egorov
//! and Lamé systems, the natural and dual connections built from them, the
//! `V` matrix of homogeneous solutions and the flat 1-forms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{self, Step};
use crate::geometry::{Christoffel, Connection, ResidualReport};
use crate::point::{Point, DEFAULT_DELTA_SEP};
use crate::tensor::Tensor3;

/// Default lower bound on `|H_i|` for the connection builders.
pub const DEFAULT_DELTA_H: f64 = 1e-10;

/// Off-diagonal rotation coefficients `beta_ij(u)`.
///
/// Matrices are indexed `[(i, j)]`; diagonal entries are ignored.
pub trait RotationField: Send + Sync {
    fn dim(&self) -> usize;
    /// Model name or trajectory id.
    fn provenance(&self) -> String;
    fn beta(&self, p: &Point) -> Result<DMatrix<f64>>;
    /// `d_l beta` for each `l`, when known analytically.
    fn beta_partials(&self, _p: &Point) -> Result<Option<Vec<DMatrix<f64>>>> {
        Ok(None)
    }
}

/// Sign convention for the homogeneity condition on Lamé coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DegreeSign {
    /// `E(H_i) = -d H_i`.
    #[default]
    Lowering,
    /// `E(H_i) = +d H_i`.
    Raising,
}

impl DegreeSign {
    /// The Euler eigenvalue `lambda` with `E(H_i) = lambda H_i` for degree `d`.
    pub fn euler_eigenvalue(self, d: f64) -> f64 {
        match self {
            DegreeSign::Lowering => -d,
            DegreeSign::Raising => d,
        }
    }
}

impl std::str::FromStr for DegreeSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lowering" | "-" | "minus" => Ok(DegreeSign::Lowering),
            "raising" | "+" | "plus" => Ok(DegreeSign::Raising),
            other => Err(Error::Invalid(format!("unknown degree sign '{other}'"))),
        }
    }
}

/// Whether a field holds Lamé coefficients `H` or solutions `K` of the
/// adjoint system `d_j K_i = beta_ji K_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LameRole {
    #[default]
    Primary,
    Adjoint,
}

pub trait LameField: Send + Sync {
    fn dim(&self) -> usize;
    fn h(&self, p: &Point) -> Result<Vec<f64>>;
    /// `J[(i, l)] = d_l H_i`, when known analytically.
    fn h_partials(&self, _p: &Point) -> Result<Option<DMatrix<f64>>> {
        Ok(None)
    }
    /// Homogeneity degree; `None` when the field is not homogeneous and the
    /// Euler condition should be skipped.
    fn degree(&self) -> Option<f64>;
    fn degree_sign(&self) -> DegreeSign {
        DegreeSign::Lowering
    }
    fn role(&self) -> LameRole {
        LameRole::Primary
    }
}

impl<T: RotationField + ?Sized> RotationField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn provenance(&self) -> String {
        (**self).provenance()
    }
    fn beta(&self, p: &Point) -> Result<DMatrix<f64>> {
        (**self).beta(p)
    }
    fn beta_partials(&self, p: &Point) -> Result<Option<Vec<DMatrix<f64>>>> {
        (**self).beta_partials(p)
    }
}

impl<T: LameField + ?Sized> LameField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn h(&self, p: &Point) -> Result<Vec<f64>> {
        (**self).h(p)
    }
    fn h_partials(&self, p: &Point) -> Result<Option<DMatrix<f64>>> {
        (**self).h_partials(p)
    }
    fn degree(&self) -> Option<f64> {
        (**self).degree()
    }
    fn degree_sign(&self) -> DegreeSign {
        (**self).degree_sign()
    }
    fn role(&self) -> LameRole {
        (**self).role()
    }
}

/// Rotation coefficients given by a closure; partials by finite differences.
pub struct FnRotation<F> {
    n: usize,
    name: String,
    f: F,
}

impl<F> FnRotation<F>
where
    F: Fn(&Point) -> Result<DMatrix<f64>> + Send + Sync,
{
    pub fn new(n: usize, name: impl Into<String>, f: F) -> Self {
        Self {
            n,
            name: name.into(),
            f,
        }
    }
}

impl<F> RotationField for FnRotation<F>
where
    F: Fn(&Point) -> Result<DMatrix<f64>> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn provenance(&self) -> String {
        self.name.clone()
    }
    fn beta(&self, p: &Point) -> Result<DMatrix<f64>> {
        (self.f)(p)
    }
}

/// Lamé coefficients given by a closure; partials by finite differences.
pub struct FnLame<F> {
    n: usize,
    degree: Option<f64>,
    sign: DegreeSign,
    role: LameRole,
    f: F,
}

impl<F> FnLame<F>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Send + Sync,
{
    pub fn new(n: usize, degree: Option<f64>, sign: DegreeSign, role: LameRole, f: F) -> Self {
        Self {
            n,
            degree,
            sign,
            role,
            f,
        }
    }
}

impl<F> LameField for FnLame<F>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn h(&self, p: &Point) -> Result<Vec<f64>> {
        (self.f)(p)
    }
    fn degree(&self) -> Option<f64> {
        self.degree
    }
    fn degree_sign(&self) -> DegreeSign {
        self.sign
    }
    fn role(&self) -> LameRole {
        self.role
    }
}

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n * n).map(|a| m[(a / n, a % n)]).collect()
}

/// `d_l beta`, analytic when available.
pub fn beta_gradient(beta: &dyn RotationField, p: &Point, h: Step) -> Result<Vec<DMatrix<f64>>> {
    if let Some(g) = beta.beta_partials(p)? {
        return Ok(g);
    }
    let n = beta.dim();
    let grad = fd::gradient(|q| Ok(flatten(&beta.beta(q)?)), p, h.resolve(p))?;
    Ok(grad
        .into_iter()
        .map(|g| DMatrix::from_fn(n, n, |i, j| g[i * n + j]))
        .collect())
}

/// `J[(i, l)] = d_l H_i`, analytic when available.
pub fn lame_jacobian(lame: &dyn LameField, p: &Point, h: Step) -> Result<DMatrix<f64>> {
    if let Some(j) = lame.h_partials(p)? {
        return Ok(j);
    }
    let n = lame.dim();
    let grad = fd::gradient(|q| lame.h(q), p, h.resolve(p))?;
    Ok(DMatrix::from_fn(n, n, |i, l| grad[l][i]))
}

/// Residuals of the augmented Darboux-Egorov system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeResiduals {
    /// `max |d_k beta_ij - beta_ik beta_kj|` over distinct `i, j, k`.
    pub ed1: f64,
    /// `max |e(beta_ij)|`.
    pub ed2: f64,
    /// `max |E(beta_ij) + beta_ij|`.
    pub ed3: f64,
}

impl DeResiduals {
    pub fn max(&self) -> f64 {
        self.ed1.max(self.ed2).max(self.ed3)
    }

    pub fn reports(&self, tol: f64, p: &Point) -> Vec<ResidualReport> {
        vec![
            ResidualReport::new("ED1", self.ed1, tol, p),
            ResidualReport::new("ED2", self.ed2, tol, p),
            ResidualReport::new("ED3", self.ed3, tol, p),
        ]
    }
}

pub fn de_residuals(beta: &dyn RotationField, p: &Point, h: Step) -> Result<DeResiduals> {
    let n = beta.dim();
    p.check_dim(n)?;
    p.check_separated(DEFAULT_DELTA_SEP)?;
    let b = beta.beta(p)?;
    let db = beta_gradient(beta, p, h)?;
    let u = p.coords();
    let (mut ed1, mut ed2, mut ed3): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..n {
                if k != i && k != j {
                    ed1 = ed1.max((db[k][(i, j)] - b[(i, k)] * b[(k, j)]).abs());
                }
            }
            let e: f64 = (0..n).map(|l| db[l][(i, j)]).sum();
            let euler: f64 = (0..n).map(|l| u[l] * db[l][(i, j)]).sum();
            ed2 = ed2.max(e.abs());
            ed3 = ed3.max((euler + b[(i, j)]).abs());
        }
    }
    Ok(DeResiduals { ed1, ed2, ed3 })
}

/// Residuals of the Lamé system (or of the adjoint system for fields tagged
/// [`LameRole::Adjoint`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameResiduals {
    pub l1: f64,
    pub l2: f64,
    /// Absent when the field carries no homogeneity degree.
    pub l3: Option<f64>,
}

impl LameResiduals {
    pub fn reports(&self, tol: f64, p: &Point) -> Vec<ResidualReport> {
        let mut out = vec![
            ResidualReport::new("L1", self.l1, tol, p),
            ResidualReport::new("L2", self.l2, tol, p),
        ];
        if let Some(l3) = self.l3 {
            out.push(ResidualReport::new("L3", l3, tol, p));
        }
        out
    }
}

pub fn lame_residuals(
    beta: &dyn RotationField,
    lame: &dyn LameField,
    p: &Point,
    h: Step,
) -> Result<LameResiduals> {
    let n = beta.dim();
    if lame.dim() != n {
        return Err(Error::Invalid("rotation and Lamé fields differ in dimension".into()));
    }
    p.check_dim(n)?;
    let b = beta.beta(p)?;
    let hv = lame.h(p)?;
    let jac = lame_jacobian(lame, p, h)?;
    let u = p.coords();
    let adjoint = lame.role() == LameRole::Adjoint;
    let lambda = lame.degree().map(|d| lame.degree_sign().euler_eigenvalue(d));
    let (mut l1, mut l2, mut l3): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let coeff = if adjoint { b[(j, i)] } else { b[(i, j)] };
                l1 = l1.max((jac[(i, j)] - coeff * hv[j]).abs());
            }
        }
        let e: f64 = (0..n).map(|l| jac[(i, l)]).sum();
        l2 = l2.max(e.abs());
        if let Some(lambda) = lambda {
            let euler: f64 = (0..n).map(|l| u[l] * jac[(i, l)]).sum();
            l3 = l3.max((euler - lambda * hv[i]).abs());
        }
    }
    Ok(LameResiduals {
        l1,
        l2,
        l3: lambda.map(|_| l3),
    })
}

fn checked_h(lame: &dyn LameField, p: &Point, delta_h: f64) -> Result<Vec<f64>> {
    let h = lame.h(p)?;
    for (index, &value) in h.iter().enumerate() {
        if !(value.abs() >= delta_h) {
            return Err(Error::Degenerate {
                index,
                value,
                threshold: delta_h,
            });
        }
    }
    Ok(h)
}

/// The coefficients `Gamma^i_ij = (H_j / H_i) beta_ij`, shared by both
/// connections, as a matrix `[(i, j)]` with zero diagonal.
fn mixed_coefficients(b: &DMatrix<f64>, h: &[f64]) -> DMatrix<f64> {
    let n = h.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { h[j] / h[i] * b[(i, j)] })
}

/// Natural connection at `p`:
///
/// * `Gamma^i_jk = 0` for distinct indices,
/// * `Gamma^i_ij = Gamma^i_ji = (H_j / H_i) beta_ij`,
/// * `Gamma^i_jj = -Gamma^i_ij`,
/// * `Gamma^i_ii = -sum_{l != i} Gamma^i_li`.
pub fn build_natural_connection(
    beta: &dyn RotationField,
    lame: &dyn LameField,
    p: &Point,
    delta_h: f64,
) -> Result<Christoffel> {
    let n = beta.dim();
    p.check_dim(n)?;
    let h = checked_h(lame, p, delta_h)?;
    let g = mixed_coefficients(&beta.beta(p)?, &h);
    let mut t = Tensor3::zeros(n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            t.set(i, i, j, g[(i, j)]);
            t.set(i, j, i, g[(i, j)]);
            t.set(i, j, j, -g[(i, j)]);
            diag -= g[(i, j)];
        }
        t.set(i, i, i, diag);
    }
    Christoffel::new(t)
}

/// Dual connection at `p`: as the natural one except
/// `Gamma^i_jj = -(u^i / u^j) Gamma^i_ij` and
/// `Gamma^i_ii = -sum_{l != i} (u^l / u^i) Gamma^i_li - 1 / u^i`.
pub fn build_dual_connection(
    beta: &dyn RotationField,
    lame: &dyn LameField,
    p: &Point,
    delta_h: f64,
    delta_sep: f64,
) -> Result<Christoffel> {
    let n = beta.dim();
    p.check_dim(n)?;
    p.check_nonzero(delta_sep)?;
    let h = checked_h(lame, p, delta_h)?;
    let g = mixed_coefficients(&beta.beta(p)?, &h);
    let u = p.coords();
    let mut t = Tensor3::zeros(n);
    for i in 0..n {
        let mut diag = -1.0 / u[i];
        for j in 0..n {
            if j == i {
                continue;
            }
            t.set(i, i, j, g[(i, j)]);
            t.set(i, j, i, g[(i, j)]);
            t.set(i, j, j, -(u[i] / u[j]) * g[(i, j)]);
            diag -= (u[j] / u[i]) * g[(i, j)];
        }
        t.set(i, i, i, diag);
    }
    Christoffel::new(t)
}

/// The natural connection of `(beta, H)` as a field on the domain.
pub struct NaturalConnection<'a> {
    pub beta: &'a dyn RotationField,
    pub lame: &'a dyn LameField,
    pub delta_h: f64,
}

impl<'a> NaturalConnection<'a> {
    pub fn new(beta: &'a dyn RotationField, lame: &'a dyn LameField) -> Self {
        Self {
            beta,
            lame,
            delta_h: DEFAULT_DELTA_H,
        }
    }
}

impl Connection for NaturalConnection<'_> {
    fn dim(&self) -> usize {
        self.beta.dim()
    }
    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        build_natural_connection(self.beta, self.lame, p, self.delta_h)
    }
}

/// The dual connection of `(beta, H)` as a field on the domain.
pub struct DualConnection<'a> {
    pub beta: &'a dyn RotationField,
    pub lame: &'a dyn LameField,
    pub delta_h: f64,
    pub delta_sep: f64,
}

impl<'a> DualConnection<'a> {
    pub fn new(beta: &'a dyn RotationField, lame: &'a dyn LameField) -> Self {
        Self {
            beta,
            lame,
            delta_h: DEFAULT_DELTA_H,
            delta_sep: DEFAULT_DELTA_SEP,
        }
    }
}

impl Connection for DualConnection<'_> {
    fn dim(&self) -> usize {
        self.beta.dim()
    }
    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        build_dual_connection(self.beta, self.lame, p, self.delta_h, self.delta_sep)
    }
}

/// `V_ij = (u^j - u^i) beta_ij` with its eigen-decomposition.
///
/// A homogeneous solution of the Lamé system with `E(H) = lambda H` satisfies
/// `V H = lambda H`, so the eigenvalues are the admissible Euler eigenvalues.
/// Under the lowering convention `E(H) = -d H` the degree is `d = -lambda`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VMatrix {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm eigenvectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<Complex64>>,
}

impl VMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max_i |(V H)_i - lambda H_i|`.
    pub fn relation_residual(&self, h: &[f64], lambda: f64) -> f64 {
        let v = DVector::from_column_slice(h);
        let r = &self.matrix * &v - v * lambda;
        r.amax()
    }

    /// `max_k |V x_k - lambda_k x_k|` over the stored eigenpairs.
    pub fn eigen_residual(&self) -> f64 {
        let vc = self.matrix.map(|x| Complex64::new(x, 0.0));
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(&lambda, x)| {
                let x = DVector::from_column_slice(x);
                let r = &vc * &x - x * lambda;
                r.iter().fold(0.0f64, |m, z| m.max(z.norm()))
            })
            .fold(0.0, f64::max)
    }

    /// Largest distance from an eigenvalue's conjugate to the spectrum.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| {
                self.eigenvalues
                    .iter()
                    .map(|m| (m - l.conj()).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Real eigenvalues (imaginary part below `tol`), ascending.
    pub fn real_eigenvalues(&self, tol: f64) -> Vec<f64> {
        let mut r: Vec<f64> = self
            .eigenvalues
            .iter()
            .filter(|l| l.im.abs() <= tol)
            .map(|l| l.re)
            .collect();
        r.sort_by(|a, b| a.total_cmp(b));
        r
    }
}

pub fn v_matrix(beta: &dyn RotationField, p: &Point) -> Result<VMatrix> {
    let n = beta.dim();
    p.check_dim(n)?;
    let b = beta.beta(p)?;
    let u = p.coords();
    let matrix = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (u[j] - u[i]) * b[(i, j)] });
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite V matrix".into()));
    }
    let eigenvalues: Vec<Complex64> = matrix.complex_eigenvalues().iter().copied().collect();
    if eigenvalues.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
        return Err(Error::Numeric("eigenvalue solver failed".into()));
    }
    let eigenvectors = eigenvalues
        .iter()
        .map(|&lambda| null_vector(&matrix, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(VMatrix {
        matrix,
        eigenvalues,
        eigenvectors,
    })
}

/// Right singular vector of `V - lambda I` for the smallest singular value.
fn null_vector(v: &DMatrix<f64>, lambda: Complex64) -> Result<Vec<Complex64>> {
    let n = v.nrows();
    let a = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(v[(i, j)], 0.0) - if i == j { lambda } else { Complex64::new(0.0, 0.0) }
    });
    let svd = a.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Numeric("SVD did not return right singular vectors".into()))?;
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut x: Vec<Complex64> = vt.row(k).iter().map(|z| z.conj()).collect();
    // Fix the phase so the largest component is real and positive.
    if let Some(big) = x.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())) {
        if big.norm() > 0.0 {
            let phase = big.conj() / big.norm();
            for z in &mut x {
                *z *= phase;
            }
        }
    }
    Ok(x)
}

/// Flat 1-form `omega_i = K_i H_i` with its closedness and covariant-constancy
/// residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatForm {
    pub omega: Vec<f64>,
    /// `max_{i<j} |d_j omega_i - d_i omega_j|`.
    pub closedness: f64,
    /// `max_{i,j} |d_j omega_i - Gamma^s_ji omega_s|` for the natural connection.
    pub covariant: f64,
}

pub fn flat_form_and_closedness(
    beta: &dyn RotationField,
    k: &dyn LameField,
    lame: &dyn LameField,
    p: &Point,
    h: Step,
) -> Result<FlatForm> {
    let n = beta.dim();
    p.check_dim(n)?;
    let form = |q: &Point| -> Result<Vec<f64>> {
        let kv = k.h(q)?;
        let hv = lame.h(q)?;
        Ok(kv.iter().zip(&hv).map(|(a, b)| a * b).collect())
    };
    let omega = form(p)?;
    let grad = fd::gradient(form, p, h.resolve(p))?;
    let gamma = build_natural_connection(beta, lame, p, DEFAULT_DELTA_H)?;
    let mut closedness: f64 = 0.0;
    let mut covariant: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i < j {
                closedness = closedness.max((grad[j][i] - grad[i][j]).abs());
            }
            let mut v = grad[j][i];
            for s in 0..n {
                v -= gamma.get(s, j, i) * omega[s];
            }
            covariant = covariant.max(v.abs());
        }
    }
    Ok(FlatForm {
        omega,
        closedness,
        covariant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_beta(n: usize, c: f64) -> impl RotationField {
        FnRotation::new(n, "constant", move |_p: &Point| {
            Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { c }))
        })
    }

    #[test]
    fn constant_beta_residuals() {
        let c = 0.7;
        let beta = constant_beta(3, c);
        let p = Point::new(vec![1.0, 2.0, 4.0]).unwrap();
        let r = de_residuals(&beta, &p, Step::Auto).unwrap();
        assert!((r.ed1 - c * c).abs() < 1e-12);
        assert_eq!(r.ed2, 0.0);
        assert!((r.ed3 - c).abs() < 1e-12);
    }

    #[test]
    fn trivial_lame_system() {
        let beta = constant_beta(3, 0.0);
        let lame = FnLame::new(3, Some(0.0), DegreeSign::Lowering, LameRole::Primary, |_p: &Point| {
            Ok(vec![1.0; 3])
        });
        let p = Point::new(vec![-1.0, 0.5, 1.5]).unwrap();
        let r = lame_residuals(&beta, &lame, &p, Step::Auto).unwrap();
        assert_eq!(r.l1, 0.0);
        assert_eq!(r.l2, 0.0);
        assert_eq!(r.l3, Some(0.0));
        let g = build_natural_connection(&beta, &lame, &p, DEFAULT_DELTA_H).unwrap();
        assert_eq!(g.tensor().max_abs(), 0.0);
        let f = flat_form_and_closedness(&beta, &lame, &lame, &p, Step::Auto).unwrap();
        assert_eq!(f.closedness, 0.0);
        assert_eq!(f.covariant, 0.0);
    }

    #[test]
    fn degenerate_h_is_rejected() {
        let beta = constant_beta(2, 0.1);
        let lame = FnLame::new(2, None, DegreeSign::Lowering, LameRole::Primary, |_p: &Point| {
            Ok(vec![1.0, 0.0])
        });
        let p = Point::new(vec![1.0, 2.0]).unwrap();
        let err = build_natural_connection(&beta, &lame, &p, DEFAULT_DELTA_H).unwrap_err();
        assert!(matches!(err, Error::Degenerate { index: 1, .. }));
    }

    #[test]
    fn v_matrix_n2() {
        let (c1, c2) = (1.0, -4.0);
        let beta = FnRotation::new(2, "n2", move |p: &Point| {
            let w = p[0] - p[1];
            Ok(DMatrix::from_row_slice(2, 2, &[0.0, c1 / w, c2 / w, 0.0]))
        });
        let p = Point::new(vec![3.0, 1.0]).unwrap();
        let v = v_matrix(&beta, &p).unwrap();
        assert_eq!(v.matrix, DMatrix::from_row_slice(2, 2, &[0.0, -c1, c2, 0.0]));
        let ev = v.real_eigenvalues(1e-12);
        assert_eq!(ev.len(), 2);
        assert!((ev[0] + 2.0).abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);
        assert!(v.eigen_residual() < 1e-12);
        assert!(v.conjugation_defect() < 1e-12);
    }

    #[test]
    fn v_matrix_complex_pair() {
        let beta = FnRotation::new(2, "n2", |p: &Point| {
            let w = p[0] - p[1];
            Ok(DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / w, 4.0 / w, 0.0]))
        });
        let p = Point::new(vec![3.0, 1.0]).unwrap();
        let v = v_matrix(&beta, &p).unwrap();
        for l in &v.eigenvalues {
            assert!(l.re.abs() < 1e-12 && (l.im.abs() - 2.0).abs() < 1e-12);
        }
        assert!(v.eigen_residual() < 1e-12);
        assert!(v.conjugation_defect() < 1e-12);
    }
}

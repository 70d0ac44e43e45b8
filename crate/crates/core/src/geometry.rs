//! Pointwise tensor algebra in canonical coordinates: curvature, product
//! axioms and the residual checks defining flat and bi-flat F-manifolds.
//!
//! Conventions: `nabla_j X^i = d_j X^i + Gamma^i_js X^s` and
//!
//! ```text
//! R^i_jkl = d_k Gamma^i_lj - d_l Gamma^i_kj + Gamma^i_ks Gamma^s_lj - Gamma^i_ls Gamma^s_kj
//! ```
//!
//! Derivatives of connection coefficients and structure constants are taken
//! with the Richardson-extrapolated central differences of [`crate::fd`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{self, Step};
use crate::point::{Point, DEFAULT_DELTA_SEP};
use crate::tensor::{Tensor3, Tensor4};

/// Connection coefficients `Gamma^i_jk` at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Christoffel(Tensor3);

impl Christoffel {
    /// Wraps a tensor, rejecting non-finite entries and lower-index asymmetry
    /// above `1e-12` relative to the largest entry.
    pub fn new(t: Tensor3) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::Numeric("non-finite connection coefficient".into()));
        }
        let asym = t.lower_asymmetry();
        if asym > 1e-12 * t.max_abs().max(1.0) {
            return Err(Error::Invalid(format!(
                "connection is not symmetric in its lower indices (defect {asym:e})"
            )));
        }
        Ok(Self(t))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Tensor3::zeros(n))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0.get(i, j, k)
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor3 {
        self.0
    }
}

/// A (torsion-free) affine connection given by its coefficients in canonical
/// coordinates.
pub trait Connection: Send + Sync {
    fn dim(&self) -> usize;
    fn christoffel(&self, p: &Point) -> Result<Christoffel>;
}

impl<C: Connection + ?Sized> Connection for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        (**self).christoffel(p)
    }
}

impl<C: Connection + ?Sized> Connection for std::sync::Arc<C> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        (**self).christoffel(p)
    }
}

/// Connection defined by a closure.
pub struct FnConnection<F> {
    n: usize,
    f: F,
}

impl<F> FnConnection<F>
where
    F: Fn(&Point) -> Result<Christoffel> + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> Connection for FnConnection<F>
where
    F: Fn(&Point) -> Result<Christoffel> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        p.check_dim(self.n)?;
        (self.f)(p)
    }
}

/// `Gamma_2 = Gamma_1 + c`: the connection obtained by adding the structure
/// constants of a product to the coefficients of another connection.
pub struct ShiftedConnection<'a> {
    pub base: &'a dyn Connection,
    pub product: &'a dyn ProductStructure,
}

impl Connection for ShiftedConnection<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        let g = self.base.christoffel(p)?;
        let c = self.product.structure(p)?;
        Christoffel::new(g.tensor().plus(&c))
    }
}

/// A commutative associative product `(X o Y)^i = c^i_jk X^j Y^k`.
pub trait ProductStructure: Send + Sync {
    fn dim(&self) -> usize;
    fn structure(&self, p: &Point) -> Result<Tensor3>;
    /// `d_l c^i_jk` for each `l`, when known in closed form.
    fn structure_partials(&self, _p: &Point) -> Result<Option<Vec<Tensor3>>> {
        Ok(None)
    }
    /// The unit vector field of the product.
    fn unit(&self, p: &Point) -> Result<Vec<f64>>;
}

impl<P: ProductStructure + ?Sized> ProductStructure for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn structure(&self, p: &Point) -> Result<Tensor3> {
        (**self).structure(p)
    }
    fn structure_partials(&self, p: &Point) -> Result<Option<Vec<Tensor3>>> {
        (**self).structure_partials(p)
    }
    fn unit(&self, p: &Point) -> Result<Vec<f64>> {
        (**self).unit(p)
    }
}

impl<P: ProductStructure + ?Sized> ProductStructure for std::sync::Arc<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn structure(&self, p: &Point) -> Result<Tensor3> {
        (**self).structure(p)
    }
    fn structure_partials(&self, p: &Point) -> Result<Option<Vec<Tensor3>>> {
        (**self).structure_partials(p)
    }
    fn unit(&self, p: &Point) -> Result<Vec<f64>> {
        (**self).unit(p)
    }
}

/// `c^i_jk = delta^i_j delta^i_k`, unit `e = (1, ..., 1)`.
#[derive(Debug, Clone, Copy)]
pub struct CanonicalProduct {
    pub n: usize,
}

impl ProductStructure for CanonicalProduct {
    fn dim(&self) -> usize {
        self.n
    }
    fn structure(&self, _p: &Point) -> Result<Tensor3> {
        Ok(Tensor3::from_fn(self.n, |i, j, k| {
            if i == j && j == k {
                1.0
            } else {
                0.0
            }
        }))
    }
    fn structure_partials(&self, _p: &Point) -> Result<Option<Vec<Tensor3>>> {
        Ok(Some(vec![Tensor3::zeros(self.n); self.n]))
    }
    fn unit(&self, _p: &Point) -> Result<Vec<f64>> {
        Ok(vec![1.0; self.n])
    }
}

/// The dual product `X * Y = X o Y o E^{-1}`: `c*^i_jk = delta^i_j delta^i_k / u^i`,
/// with unit `E = (u^1, ..., u^n)`.
#[derive(Debug, Clone, Copy)]
pub struct DualProduct {
    pub n: usize,
    pub delta_sep: f64,
}

impl DualProduct {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            delta_sep: DEFAULT_DELTA_SEP,
        }
    }
}

impl ProductStructure for DualProduct {
    fn dim(&self) -> usize {
        self.n
    }
    fn structure(&self, p: &Point) -> Result<Tensor3> {
        p.check_dim(self.n)?;
        p.check_nonzero(self.delta_sep)?;
        let u = p.coords();
        Ok(Tensor3::from_fn(self.n, |i, j, k| {
            if i == j && j == k {
                1.0 / u[i]
            } else {
                0.0
            }
        }))
    }
    fn structure_partials(&self, p: &Point) -> Result<Option<Vec<Tensor3>>> {
        p.check_nonzero(self.delta_sep)?;
        let u = p.coords();
        let n = self.n;
        Ok(Some(
            (0..n)
                .map(|l| {
                    let mut t = Tensor3::zeros(n);
                    t.set(l, l, l, -1.0 / (u[l] * u[l]));
                    t
                })
                .collect(),
        ))
    }
    fn unit(&self, p: &Point) -> Result<Vec<f64>> {
        Ok(p.coords().to_vec())
    }
}

/// Product given by a closure, e.g. a perturbed field used as a negative control.
pub struct FnProduct<F> {
    n: usize,
    f: F,
    unit: Vec<f64>,
}

impl<F> FnProduct<F>
where
    F: Fn(&Point) -> Result<Tensor3> + Send + Sync,
{
    pub fn new(n: usize, unit: Vec<f64>, f: F) -> Self {
        Self { n, f, unit }
    }
}

impl<F> ProductStructure for FnProduct<F>
where
    F: Fn(&Point) -> Result<Tensor3> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn structure(&self, p: &Point) -> Result<Tensor3> {
        (self.f)(p)
    }
    fn unit(&self, _p: &Point) -> Result<Vec<f64>> {
        Ok(self.unit.clone())
    }
}

/// A vector field `X(u)`; the optional Jacobian is `J[(i, j)] = d_j X^i`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn label(&self) -> String {
        "X".to_string()
    }
    fn eval(&self, p: &Point) -> Result<Vec<f64>>;
    fn jacobian(&self, _p: &Point) -> Result<Option<DMatrix<f64>>> {
        Ok(None)
    }
}

impl<V: VectorField + ?Sized> VectorField for &V {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        (**self).eval(p)
    }
    fn jacobian(&self, p: &Point) -> Result<Option<DMatrix<f64>>> {
        (**self).jacobian(p)
    }
}

impl<V: VectorField + ?Sized> VectorField for std::sync::Arc<V> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        (**self).eval(p)
    }
    fn jacobian(&self, p: &Point) -> Result<Option<DMatrix<f64>>> {
        (**self).jacobian(p)
    }
}

/// `e = sum d/du^i`.
#[derive(Debug, Clone, Copy)]
pub struct UnitField {
    pub n: usize,
}

impl VectorField for UnitField {
    fn dim(&self) -> usize {
        self.n
    }
    fn label(&self) -> String {
        "e".into()
    }
    fn eval(&self, _p: &Point) -> Result<Vec<f64>> {
        Ok(vec![1.0; self.n])
    }
    fn jacobian(&self, _p: &Point) -> Result<Option<DMatrix<f64>>> {
        Ok(Some(DMatrix::zeros(self.n, self.n)))
    }
}

/// `E = sum u^i d/du^i`.
#[derive(Debug, Clone, Copy)]
pub struct EulerField {
    pub n: usize,
}

impl VectorField for EulerField {
    fn dim(&self) -> usize {
        self.n
    }
    fn label(&self) -> String {
        "E".into()
    }
    fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        Ok(p.coords().to_vec())
    }
    fn jacobian(&self, _p: &Point) -> Result<Option<DMatrix<f64>>> {
        Ok(Some(DMatrix::identity(self.n, self.n)))
    }
}

/// Vector field given by closures.
pub struct FnVectorField<F> {
    n: usize,
    label: String,
    f: F,
}

impl<F> FnVectorField<F>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Send + Sync,
{
    pub fn new(n: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            n,
            label: label.into(),
            f,
        }
    }
}

impl<F> VectorField for FnVectorField<F>
where
    F: Fn(&Point) -> Result<Vec<f64>> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }
    fn label(&self) -> String {
        self.label.clone()
    }
    fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        (self.f)(p)
    }
}

/// Analytic Jacobian when the field supplies one, finite differences otherwise.
pub fn jacobian_or_fd(x: &dyn VectorField, p: &Point, h: Step) -> Result<DMatrix<f64>> {
    if let Some(j) = x.jacobian(p)? {
        return Ok(j);
    }
    let n = x.dim();
    let grad = fd::gradient(|q| x.eval(q), p, h.resolve(p))?;
    Ok(DMatrix::from_fn(n, p.dim(), |i, j| grad[j][i]))
}

/// One named residual check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub point: Vec<f64>,
}

impl ResidualReport {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64, p: &Point) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
            point: p.coords().to_vec(),
        }
    }
}

/// Residual tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Checks that rely on finite differences.
    pub fd: f64,
    /// Algebraic identities evaluated without differentiation.
    pub algebraic: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fd: 1e-6,
            algebraic: 1e-10,
        }
    }
}

fn christoffel_gradient(conn: &dyn Connection, p: &Point, h: f64) -> Result<Vec<Tensor3>> {
    let n = conn.dim();
    let grad = fd::gradient(|q| Ok(conn.christoffel(q)?.into_tensor().into_flat()), p, h)?;
    Ok(grad.into_iter().map(|g| Tensor3::from_flat(n, g)).collect())
}

fn structure_gradient(c: &dyn ProductStructure, p: &Point, h: f64) -> Result<Vec<Tensor3>> {
    if let Some(g) = c.structure_partials(p)? {
        return Ok(g);
    }
    let n = c.dim();
    let grad = fd::gradient(|q| Ok(c.structure(q)?.into_flat()), p, h)?;
    Ok(grad.into_iter().map(|g| Tensor3::from_flat(n, g)).collect())
}

/// Riemann tensor `R^i_jkl` of a connection at `p`.
///
/// Antisymmetry in `(k, l)` holds exactly: the `(k, l)` and `(l, k)` entries
/// are built from the same two terms with opposite signs.
pub fn riemann_curvature(conn: &dyn Connection, p: &Point, h: Step) -> Result<Tensor4> {
    let n = conn.dim();
    p.check_dim(n)?;
    let gamma = conn.christoffel(p)?;
    let dgamma = christoffel_gradient(conn, p, h.resolve(p))?;
    let mut r = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in (k + 1)..n {
                    let mut quad_kl = 0.0;
                    let mut quad_lk = 0.0;
                    for s in 0..n {
                        quad_kl += gamma.get(i, k, s) * gamma.get(s, l, j);
                        quad_lk += gamma.get(i, l, s) * gamma.get(s, k, j);
                    }
                    let lin = dgamma[k].get(i, l, j) - dgamma[l].get(i, k, j);
                    let v = lin + (quad_kl - quad_lk);
                    r.set(i, j, k, l, v);
                    r.set(i, j, l, k, -v);
                }
            }
        }
    }
    Ok(r)
}

/// `max |R^i_jkl + R^i_klj + R^i_ljk|`.
pub fn first_bianchi_residual(r: &Tensor4) -> f64 {
    let n = r.dim();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r.get(i, j, k, l) + r.get(i, k, l, j) + r.get(i, l, j, k);
                    m = m.max(v.abs());
                }
            }
        }
    }
    m
}

/// Hertling-Manin condition in coordinates,
///
/// ```text
/// (d_s c^k_jl) c^s_im + (d_j c^s_il) c^k_sm - c^k_js (d_l c^s_im)
///   - (d_s c^k_im) c^s_jl - (d_i c^s_jl) c^k_sm + c^k_is (d_l c^s_jm) = 0,
/// ```
///
/// returned as the max-abs over all index tuples.
pub fn hertling_manin_residual(c: &dyn ProductStructure, p: &Point, h: Step) -> Result<f64> {
    let n = c.dim();
    p.check_dim(n)?;
    let ct = c.structure(p)?;
    let dc = structure_gradient(c, p, h.resolve(p))?;
    let mut m: f64 = 0.0;
    for k in 0..n {
        for j in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for mm in 0..n {
                        let mut v = 0.0;
                        for s in 0..n {
                            v += dc[s].get(k, j, l) * ct.get(s, i, mm)
                                + dc[j].get(s, i, l) * ct.get(k, s, mm)
                                - ct.get(k, j, s) * dc[l].get(s, i, mm)
                                - dc[s].get(k, i, mm) * ct.get(s, j, l)
                                - dc[i].get(s, j, l) * ct.get(k, s, mm)
                                + ct.get(k, i, s) * dc[l].get(s, j, mm);
                        }
                        m = m.max(v.abs());
                    }
                }
            }
        }
    }
    Ok(m)
}

/// Commutativity, associativity and unit defects of a product at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductAxioms {
    pub commutativity: f64,
    pub associativity: f64,
    pub unit: f64,
}

pub fn product_axioms(c: &dyn ProductStructure, p: &Point) -> Result<ProductAxioms> {
    let n = c.dim();
    let ct = c.structure(p)?;
    let e = c.unit(p)?;
    let commutativity = ct.lower_asymmetry();
    let mut assoc: f64 = 0.0;
    let mut unit: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = 0.0;
                    for s in 0..n {
                        v += ct.get(s, j, k) * ct.get(i, s, l) - ct.get(s, k, l) * ct.get(i, j, s);
                    }
                    assoc = assoc.max(v.abs());
                }
            }
            let ce: f64 = (0..n).map(|k| ct.get(i, j, k) * e[k]).sum();
            let delta = if i == j { 1.0 } else { 0.0 };
            unit = unit.max((ce - delta).abs());
        }
    }
    Ok(ProductAxioms {
        commutativity,
        associativity: assoc,
        unit,
    })
}

/// `max |nabla_l c^i_jk - nabla_j c^i_lk|` with the full covariant derivative
/// of the (1,2)-tensor.
pub fn compatibility_residual(
    conn: &dyn Connection,
    c: &dyn ProductStructure,
    p: &Point,
    h: Step,
) -> Result<f64> {
    let n = conn.dim();
    p.check_dim(n)?;
    let g = conn.christoffel(p)?;
    let ct = c.structure(p)?;
    let dc = structure_gradient(c, p, h.resolve(p))?;
    let cov = |l: usize, i: usize, j: usize, k: usize| -> f64 {
        let mut v = dc[l].get(i, j, k);
        for s in 0..n {
            v += g.get(i, l, s) * ct.get(s, j, k)
                - g.get(s, l, j) * ct.get(i, s, k)
                - g.get(s, l, k) * ct.get(i, j, s);
        }
        v
    };
    let mut m: f64 = 0.0;
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    m = m.max((cov(l, i, j, k) - cov(j, i, l, k)).abs());
                }
            }
        }
    }
    Ok(m)
}

/// `max_{i,j} |d_j X^i + Gamma^i_js X^s|`.
pub fn parallel_vector_residual(
    conn: &dyn Connection,
    x: &dyn VectorField,
    p: &Point,
    h: Step,
) -> Result<f64> {
    let n = conn.dim();
    p.check_dim(n)?;
    let g = conn.christoffel(p)?;
    let xv = x.eval(p)?;
    let jac = jacobian_or_fd(x, p, h)?;
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut v = jac[(i, j)];
            for s in 0..n {
                v += g.get(i, j, s) * xv[s];
            }
            m = m.max(v.abs());
        }
    }
    Ok(m)
}

/// `max_{i != j} |Gamma(1)^i_ij - Gamma(2)^i_ij|`, the canonical-coordinate
/// form of almost hydrodynamic equivalence.
pub fn almost_equivalence_residual(
    conn1: &dyn Connection,
    conn2: &dyn Connection,
    p: &Point,
) -> Result<f64> {
    let n = conn1.dim();
    if conn2.dim() != n {
        return Err(Error::Invalid("connections of different dimension".into()));
    }
    let g1 = conn1.christoffel(p)?;
    let g2 = conn2.christoffel(p)?;
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m = m.max((g1.get(i, i, j) - g2.get(i, i, j)).abs());
            }
        }
    }
    Ok(m)
}

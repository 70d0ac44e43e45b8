//! Integrable hierarchies of hydrodynamic type attached to an F-manifold with
//! compatible connection: the symmetry equation `d_nabla(X o) = 0`, the
//! recursion schemes that generate new symmetries by integrating a first-order
//! system along paths, and flows on a periodic grid for commutation tests.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{self, Step};
use crate::geometry::{jacobian_or_fd, Connection, ProductStructure, VectorField};
use crate::ode::rk4_step;
use crate::point::{Point, DEFAULT_DELTA_SEP};

/// `max_{i,j,k} |nabla_j T^i_k - nabla_k T^i_j|` for `T^i_k = c^i_ks X^s`.
///
/// The Christoffel terms acting on the lower index cancel by symmetry of the
/// connection, so only `d_j T^i_k + Gamma^i_js T^s_k` is antisymmetrized.
pub fn symmetry_residual(
    conn: &dyn Connection,
    c: &dyn ProductStructure,
    x: &dyn VectorField,
    p: &Point,
    h: Step,
) -> Result<f64> {
    let n = conn.dim();
    p.check_dim(n)?;
    let endo = |q: &Point| -> Result<Vec<f64>> {
        let ct = c.structure(q)?;
        let xv = x.eval(q)?;
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                t[i * n + k] = (0..n).map(|s| ct.get(i, k, s) * xv[s]).sum();
            }
        }
        Ok(t)
    };
    let t = endo(p)?;
    let dt = fd::gradient(endo, p, h.resolve(p))?;
    let g = conn.christoffel(p)?;
    let half = |i: usize, j: usize, k: usize| -> f64 {
        dt[j][i * n + k] + (0..n).map(|s| g.get(i, j, s) * t[s * n + k]).sum::<f64>()
    };
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in (j + 1)..n {
                m = m.max((half(i, j, k) - half(i, k, j)).abs());
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `nabla_1 X_next = X_prev o`.
    Principal,
    /// `nabla_1 X_next = nabla_2 X_prev` with `nabla_2 = nabla_1 + c`.
    Equivalent,
    /// `nabla_1 X_next = nabla_2 (E o X_prev)`.
    Dual,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "principal" => Ok(Scheme::Principal),
            "equivalent" => Ok(Scheme::Equivalent),
            "dual" => Ok(Scheme::Dual),
            other => Err(Error::Invalid(format!("unknown recursion scheme '{other}'"))),
        }
    }
}

/// Geometric data shared by all steps of one recursion.
#[derive(Clone, Copy)]
pub struct Recursion<'a> {
    pub scheme: Scheme,
    pub conn1: &'a dyn Connection,
    /// Required by the equivalent and dual schemes.
    pub conn2: Option<&'a dyn Connection>,
    pub product: &'a dyn ProductStructure,
    /// Eventual identity used by the dual scheme.
    pub euler: &'a dyn VectorField,
    /// RK4 steps per straight segment.
    pub steps: usize,
    /// Finite-difference policy for derivatives of the previous field.
    pub h: Step,
    pub delta_sep: f64,
}

impl<'a> Recursion<'a> {
    pub fn new(
        scheme: Scheme,
        conn1: &'a dyn Connection,
        conn2: Option<&'a dyn Connection>,
        product: &'a dyn ProductStructure,
        euler: &'a dyn VectorField,
    ) -> Self {
        Self {
            scheme,
            conn1,
            conn2,
            product,
            euler,
            steps: 200,
            h: Step::Auto,
            delta_sep: DEFAULT_DELTA_SEP,
        }
    }

    fn conn2(&self) -> Result<&'a dyn Connection> {
        self.conn2
            .ok_or_else(|| Error::Invalid(format!("{:?} scheme needs a second connection", self.scheme)))
    }

    /// The prescribed value `S^i_j` of `nabla_1_j X_next^i` at `q`.
    pub fn source(&self, prev: &dyn VectorField, q: &Point) -> Result<DMatrix<f64>> {
        let n = self.conn1.dim();
        match self.scheme {
            Scheme::Principal => {
                let c = self.product.structure(q)?;
                let xp = prev.eval(q)?;
                Ok(DMatrix::from_fn(n, n, |i, j| (0..n).map(|s| c.get(i, j, s) * xp[s]).sum()))
            }
            Scheme::Equivalent => covariant_derivative(self.conn2()?, prev, q, self.h),
            Scheme::Dual => {
                let product = self.product;
                let euler = self.euler;
                let w = ProductField { product, a: euler, b: prev };
                covariant_derivative(self.conn2()?, &w, q, self.h)
            }
        }
    }

    /// Integrates `nabla_1 X = S` along the polyline `path`, starting from
    /// `x_start` at `path[0]`, and returns `X` at the last vertex.
    pub fn integrate_path(&self, prev: &dyn VectorField, path: &[Point], x_start: &[f64]) -> Result<Vec<f64>> {
        let n = self.conn1.dim();
        if path.is_empty() || x_start.len() != n {
            return Err(Error::Invalid("recursion needs a path and an n-vector start value".into()));
        }
        let mut x = x_start.to_vec();
        for seg in path.windows(2) {
            let (a, b) = (&seg[0], &seg[1]);
            a.check_dim(n)?;
            b.check_dim(n)?;
            let v: Vec<f64> = (0..n).map(|j| b[j] - a[j]).collect();
            let at = |t: f64| -> Result<Point> {
                let q = Point::new((0..n).map(|j| a[j] + t * v[j]).collect())?;
                q.check_separated(self.delta_sep)?;
                Ok(q)
            };
            let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
                let q = at(t)?;
                let g = self.conn1.christoffel(&q)?;
                let s = self.source(prev, &q)?;
                Ok((0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let gx: f64 = (0..n).map(|r| g.get(i, j, r) * y[r]).sum();
                                v[j] * (s[(i, j)] - gx)
                            })
                            .sum()
                    })
                    .collect())
            };
            let h = 1.0 / self.steps.max(1) as f64;
            for k in 0..self.steps.max(1) {
                x = rk4_step(&rhs, k as f64 * h, &x, h)?;
            }
        }
        Ok(x)
    }

    /// One recursion step along the straight segment `base -> target`.
    pub fn step(&self, prev: &dyn VectorField, base: &Point, x_base: &[f64], target: &Point) -> Result<Vec<f64>> {
        self.integrate_path(prev, &[base.clone(), target.clone()], x_base)
    }
}

/// `(nabla_j Y)^i = d_j Y^i + Gamma^i_js Y^s` as a matrix `[(i, j)]`.
pub fn covariant_derivative(conn: &dyn Connection, y: &dyn VectorField, q: &Point, h: Step) -> Result<DMatrix<f64>> {
    let n = conn.dim();
    let g = conn.christoffel(q)?;
    let yv = y.eval(q)?;
    let jac = jacobian_or_fd(y, q, h)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        jac[(i, j)] + (0..n).map(|s| g.get(i, j, s) * yv[s]).sum::<f64>()
    }))
}

/// The product `A o B` of two vector fields as a vector field.
pub struct ProductField<'a> {
    pub product: &'a dyn ProductStructure,
    pub a: &'a dyn VectorField,
    pub b: &'a dyn VectorField,
}

impl VectorField for ProductField<'_> {
    fn dim(&self) -> usize {
        self.product.dim()
    }
    fn label(&self) -> String {
        format!("{} o {}", self.a.label(), self.b.label())
    }
    fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        let n = self.product.dim();
        let c = self.product.structure(p)?;
        let a = self.a.eval(p)?;
        let b = self.b.eval(p)?;
        Ok((0..n)
            .map(|i| {
                let mut v = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        v += c.get(i, j, k) * a[j] * b[k];
                    }
                }
                v
            })
            .collect())
    }
}

/// Label of a member of a hierarchy: frame index `p`, level `alpha` and the
/// scheme that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowLabel {
    pub p: usize,
    pub alpha: usize,
    pub scheme: Scheme,
}

/// The output of a recursion step as a vector field: evaluating at `q`
/// integrates along the straight segment from the base point.
pub struct RecursionField<'a> {
    pub recursion: Recursion<'a>,
    pub prev: &'a dyn VectorField,
    pub base: Point,
    pub x_base: Vec<f64>,
    pub label: FlowLabel,
}

impl VectorField for RecursionField<'_> {
    fn dim(&self) -> usize {
        self.recursion.conn1.dim()
    }
    fn label(&self) -> String {
        format!("X({},{})[{:?}]", self.label.p, self.label.alpha, self.label.scheme)
    }
    fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        self.recursion.step(self.prev, &self.base, &self.x_base, p)
    }
}

/// Outcome of the linear-dependence test of a new chain member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// Relative least-squares residual of the new field against the span of
    /// the earlier ones over the sample points.
    pub residual: f64,
    pub resonant: bool,
}

pub const RESONANCE_THRESHOLD: f64 = 1e-8;

pub fn resonance_check(chain: &[&dyn VectorField], candidate: &dyn VectorField, samples: &[Point]) -> Result<Resonance> {
    let mut rows_b = Vec::new();
    for q in samples {
        rows_b.extend(candidate.eval(q)?);
    }
    let b = DVector::from_vec(rows_b);
    let norm_b = b.norm();
    if chain.is_empty() || norm_b == 0.0 {
        return Ok(Resonance {
            residual: if norm_b == 0.0 { 0.0 } else { 1.0 },
            resonant: norm_b == 0.0,
        });
    }
    let mut a = DMatrix::zeros(b.len(), chain.len());
    for (col, field) in chain.iter().enumerate() {
        let mut r = 0;
        for q in samples {
            for v in field.eval(q)? {
                a[(r, col)] = v;
                r += 1;
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let coeffs = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numeric(format!("least squares failed: {e}")))?;
    let residual = (&a * coeffs - &b).norm() / norm_b;
    Ok(Resonance {
        residual,
        resonant: residual < RESONANCE_THRESHOLD,
    })
}

/// Periodic one-dimensional grid of `u`-vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub n: usize,
    pub length: f64,
    pub cells: Vec<Vec<f64>>,
}

pub const MIN_CELLS: usize = 16;

impl GridState {
    pub fn new(n: usize, length: f64, cells: Vec<Vec<f64>>) -> Result<Self> {
        if cells.len() < MIN_CELLS {
            return Err(Error::Invalid(format!("grid needs at least {MIN_CELLS} cells, got {}", cells.len())));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Invalid(format!("grid length {length} must be positive")));
        }
        let s = Self { n, length, cells };
        s.check()?;
        Ok(s)
    }

    /// Samples `f(x)` at `x_m = m L / cells`.
    pub fn from_fn(n: usize, cells: usize, length: f64, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let dx = length / cells as f64;
        Self::new(n, length, (0..cells).map(|m| f(m as f64 * dx)).collect())
    }

    pub fn m(&self) -> usize {
        self.cells.len()
    }

    pub fn dx(&self) -> f64 {
        self.length / self.m() as f64
    }

    /// Every cell has dimension `n`, finite entries and distinct coordinates.
    pub fn check(&self) -> Result<()> {
        for (k, c) in self.cells.iter().enumerate() {
            if c.len() != self.n {
                return Err(Error::Invalid(format!("cell {k} has dimension {}", c.len())));
            }
            let p = Point::new(c.clone())?;
            if p.min_gap() <= 0.0 {
                return Err(Error::Domain(format!("cell {k} has coinciding coordinates")));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &GridState) -> f64 {
        self.cells
            .iter()
            .zip(&other.cells)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Discretization of `d/dx` on the periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialDerivative {
    /// Fourth-order central differences.
    #[default]
    Central4,
    /// Fourier differentiation (Nyquist mode dropped).
    Spectral,
}

impl std::str::FromStr for SpatialDerivative {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central4" => Ok(Self::Central4),
            "spectral" => Ok(Self::Spectral),
            other => Err(Error::Invalid(format!("unknown spatial derivative '{other}'"))),
        }
    }
}

impl SpatialDerivative {
    /// Derivative of one periodic component.
    pub fn apply(self, v: &[f64], length: f64) -> Vec<f64> {
        let m = v.len();
        match self {
            Self::Central4 => {
                let dx = length / m as f64;
                (0..m)
                    .map(|k| {
                        let at = |o: isize| v[(k as isize + o).rem_euclid(m as isize) as usize];
                        (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * dx)
                    })
                    .collect()
            }
            Self::Spectral => {
                let mut planner = FftPlanner::<f64>::new();
                let fwd = planner.plan_fft_forward(m);
                let inv = planner.plan_fft_inverse(m);
                let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                fwd.process(&mut buf);
                let scale = 2.0 * std::f64::consts::PI / length;
                for (k, z) in buf.iter_mut().enumerate() {
                    let wave = if 2 * k < m {
                        k as f64
                    } else if 2 * k == m {
                        0.0
                    } else {
                        k as f64 - m as f64
                    };
                    *z *= Complex64::new(0.0, wave * scale);
                }
                inv.process(&mut buf);
                buf.iter().map(|z| z.re / m as f64).collect()
            }
        }
    }
}

/// `u^i_t = c^i_jk(u) X^j(u) u^k_x` in every cell.
pub fn flow_rhs(
    c: &dyn ProductStructure,
    x: &dyn VectorField,
    state: &GridState,
    deriv: SpatialDerivative,
) -> Result<Vec<Vec<f64>>> {
    let n = state.n;
    let m = state.m();
    let mut ux = vec![vec![0.0; n]; m];
    for k in 0..n {
        let comp: Vec<f64> = state.cells.iter().map(|cell| cell[k]).collect();
        for (cell, d) in ux.iter_mut().zip(deriv.apply(&comp, state.length)) {
            cell[k] = d;
        }
    }
    state
        .cells
        .iter()
        .zip(&ux)
        .map(|(cell, d)| {
            let p = Point::new(cell.clone())?;
            let ct = c.structure(&p)?;
            let xv = x.eval(&p)?;
            Ok((0..n)
                .map(|i| {
                    let mut v = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            v += ct.get(i, j, k) * xv[j] * d[k];
                        }
                    }
                    v
                })
                .collect())
        })
        .collect()
}

/// Advances `state` by `dt` along the flow of `x` with `steps` RK4 steps.
pub fn evolve(
    c: &dyn ProductStructure,
    x: &dyn VectorField,
    state: &GridState,
    dt: f64,
    steps: usize,
    deriv: SpatialDerivative,
) -> Result<GridState> {
    let n = state.n;
    let pack = |s: &GridState| s.cells.concat();
    let unpack = |y: &[f64]| GridState {
        n,
        length: state.length,
        cells: y.chunks(n).map(|c| c.to_vec()).collect(),
    };
    let f = |_t: f64, y: &[f64]| -> Result<Vec<f64>> { Ok(flow_rhs(c, x, &unpack(y), deriv)?.concat()) };
    let steps = steps.max(1);
    let h = dt / steps as f64;
    let mut y = pack(state);
    for k in 0..steps {
        y = rk4_step(f, k as f64 * h, &y, h)?;
    }
    let out = unpack(&y);
    out.check()?;
    Ok(out)
}

/// Sup-norm distance between `(X for dt, then Y for dt)` and
/// `(Y for dt, then X for dt)` applied to `state`.
pub fn commutator_check(
    c: &dyn ProductStructure,
    x: &dyn VectorField,
    y: &dyn VectorField,
    state: &GridState,
    dt: f64,
    steps: usize,
    deriv: SpatialDerivative,
) -> Result<f64> {
    let xy = evolve(c, y, &evolve(c, x, state, dt, steps, deriv)?, dt, steps, deriv)?;
    let yx = evolve(c, x, &evolve(c, y, state, dt, steps, deriv)?, dt, steps, deriv)?;
    Ok(xy.max_abs_diff(&yx))
}

/// Commutator norms over a sequence of time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorSweep {
    pub dt: Vec<f64>,
    pub norm: Vec<f64>,
}

impl CommutatorSweep {
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        c: &dyn ProductStructure,
        x: &dyn VectorField,
        y: &dyn VectorField,
        state: &GridState,
        dts: &[f64],
        steps: usize,
        deriv: SpatialDerivative,
    ) -> Result<Self> {
        let norm = dts
            .iter()
            .map(|&dt| commutator_check(c, x, y, state, dt, steps, deriv))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dt: dts.to_vec(), norm })
    }

    /// Least-squares slope of `log(norm)` against `log(dt)`.
    pub fn fitted_order(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.dt.iter().zip(&self.norm).map(|(d, n)| (d.ln(), n.ln())).collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    /// Ratios `norm[k] / norm[k+1]` of consecutive entries.
    pub fn ratios(&self) -> Vec<f64> {
        self.norm.windows(2).map(|w| w[0] / w[1]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt,commutator\n");
        for (d, n) in self.dt.iter().zip(&self.norm) {
            s.push_str(&format!("{d:.17e},{n:.17e}\n"));
        }
        s
    }
}

/// A constant vector field.
#[derive(Debug, Clone)]
pub struct ConstantField(pub Vec<f64>);

impl VectorField for ConstantField {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn label(&self) -> String {
        format!("const{:?}", self.0)
    }
    fn eval(&self, _p: &Point) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
    fn jacobian(&self, _p: &Point) -> Result<Option<DMatrix<f64>>> {
        let n = self.0.len();
        Ok(Some(DMatrix::zeros(n, n)))
    }
}

/// Shared handle used by chains of recursion outputs.
pub type SharedField = Arc<dyn VectorField>;

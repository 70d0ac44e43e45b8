//! Piecewise cubic Hermite interpolation of vector-valued samples with known
//! derivatives at the nodes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteGrid {
    /// Strictly increasing nodes.
    t: Vec<f64>,
    y: Vec<Vec<f64>>,
    dy: Vec<Vec<f64>>,
}

impl HermiteGrid {
    /// Builds the interpolant; nodes may be strictly increasing or strictly
    /// decreasing.
    pub fn new(mut t: Vec<f64>, mut y: Vec<Vec<f64>>, mut dy: Vec<Vec<f64>>) -> Result<Self> {
        if t.len() < 2 || y.len() != t.len() || dy.len() != t.len() {
            return Err(Error::Invalid("Hermite grid needs matching samples on ≥ 2 nodes".into()));
        }
        if t[1] < t[0] {
            t.reverse();
            y.reverse();
            dy.reverse();
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("Hermite nodes are not strictly monotone".into()));
        }
        Ok(Self { t, y, dy })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OutOfRange { z: x, lo, hi });
        }
        let k = self.t.partition_point(|&s| s <= x);
        Ok(k.clamp(1, self.t.len() - 1) - 1)
    }

    /// Interpolated value and derivative at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.locate(x)?;
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let h = t1 - t0;
        let s = (x - t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let (y0, y1, m0, m1) = (&self.y[k], &self.y[k + 1], &self.dy[k], &self.dy[k + 1]);
        let val = (0..y0.len())
            .map(|a| h00 * y0[a] + h10 * h * m0[a] + h01 * y1[a] + h11 * h * m1[a])
            .collect();
        let der = (0..y0.len())
            .map(|a| d00 * y0[a] + d10 * m0[a] + d01 * y1[a] + d11 * m1[a])
            .collect();
        Ok((val, der))
    }

    /// The node at or to the left of `x` (the first node for `x` below the
    /// range) and the stored sample there.
    pub fn node_below(&self, x: f64) -> Result<(f64, &[f64])> {
        let k = self.locate(x)?;
        let k = if x >= self.t[k + 1] { k + 1 } else { k };
        Ok((self.t[k], &self.y[k]))
    }

    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        Ok(self.eval_with_derivative(x)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x + 1.0;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let t: Vec<f64> = (0..6).map(|k| 0.4 * k as f64 - 1.0).collect();
        let g = HermiteGrid::new(
            t.iter().rev().copied().collect(),
            t.iter().rev().map(|&x| vec![f(x)]).collect(),
            t.iter().rev().map(|&x| vec![df(x)]).collect(),
        )
        .unwrap();
        for &x in &[-1.0, -0.77, 0.0, 0.33, 1.0] {
            let (v, d) = g.eval_with_derivative(x).unwrap();
            assert!((v[0] - f(x)).abs() < 1e-13);
            assert!((d[0] - df(x)).abs() < 1e-12);
        }
        assert!(matches!(g.eval(1.5), Err(Error::OutOfRange { .. })));
        assert_eq!(g.node_below(0.33).unwrap().0, t[3]);
        assert_eq!(g.node_below(1.0).unwrap().0, 1.0);
    }
}

//! Not-a-knot cubic spline. Reproduces cubic polynomials exactly, which is
//! what the resampling tests rely on.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::shape("spline knots", xs.len(), ys.len()));
        }
        if xs.is_empty() {
            return Err(Error::Parameter("spline needs at least one knot".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("spline knots must be strictly increasing".into()));
        }
        let k = xs.len();
        let m = match k {
            1 | 2 => vec![0.0; k],
            3 => {
                // the not-a-knot spline through three points is the interpolating parabola
                let d0 = (ys[1] - ys[0]) / (xs[1] - xs[0]);
                let d1 = (ys[2] - ys[1]) / (xs[2] - xs[1]);
                let c = 2.0 * (d1 - d0) / (xs[2] - xs[0]);
                vec![c; 3]
            }
            _ => second_derivatives(xs, ys)?,
        };
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    /// Evaluates the spline; outside the knot range the end pieces are extended.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.xs.len();
        if k == 1 {
            return self.ys[0];
        }
        let i = match self.xs.iter().position(|&xi| xi > x) {
            Some(0) => 0,
            Some(p) => (p - 1).min(k - 2),
            None => k - 2,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let a = x1 - x;
        let b = x - x0;
        m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (self.ys[i] / h - m0 * h / 6.0) * a
            + (self.ys[i + 1] / h - m1 * h / 6.0) * b
    }
}

fn second_derivatives(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let k = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..k - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut a = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    a[0][0] = h[1];
    a[0][1] = -(h[0] + h[1]);
    a[0][2] = h[0];
    for i in 1..k - 1 {
        a[i][i - 1] = h[i - 1];
        a[i][i] = 2.0 * (h[i - 1] + h[i]);
        a[i][i + 1] = h[i];
        rhs[i] = 6.0 * (d[i] - d[i - 1]);
    }
    a[k - 1][k - 3] = h[k - 2];
    a[k - 1][k - 2] = -(h[k - 3] + h[k - 2]);
    a[k - 1][k - 1] = h[k - 3];
    solve_dense(a, rhs)
}

/// Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Numeric("singular spline system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// Resamples `values` (taken at unit spacing) onto `new_len` uniformly spaced
/// points spanning the same interval.
pub fn resample_cubic(values: &[f64], new_len: usize) -> Result<Vec<f64>> {
    if values.is_empty() || new_len == 0 {
        return Err(Error::Parameter("cannot resample an empty sequence".into()));
    }
    if new_len == 1 || values.len() == 1 {
        return Ok(vec![values[0]; new_len]);
    }
    let xs: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
    let spline = CubicSpline::new(&xs, values)?;
    let step = (values.len() - 1) as f64 / (new_len - 1) as f64;
    Ok((0..new_len)
        .map(|j| {
            if j + 1 == new_len {
                values[values.len() - 1]
            } else {
                spline.eval(j as f64 * step)
            }
        })
        .collect())
}

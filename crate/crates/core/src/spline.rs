//! Not-a-knot cubic splines on increasing abscissae.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Not-a-knot interpolant through `(x, y)`; reproduces cubics exactly.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() || n < 4 {
            return Err(Error::Domain(format!(
                "spline needs at least 4 matching samples, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("spline abscissae must increase".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("spline ordinates must be finite".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let rhs: Vec<f64> = (1..n - 1)
            .map(|i| 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]))
            .collect();
        // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} eliminated through the
        // not-a-knot conditions (continuous third derivative at x_1, x_{n-2}).
        let k = n - 2;
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        for r in 0..k {
            let i = r + 1;
            sub[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            sup[r] = h[i];
        }
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 * (h0 + h1) / h1;
        sup[0] -= h0 * h0 / h1;
        let (ha, hb) = (h[n - 3], h[n - 2]);
        diag[k - 1] += hb * (ha + hb) / ha;
        sub[k - 1] -= hb * hb / ha;
        let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&inner);
        m[0] = ((h0 + h1) * m[1] - h0 * m[2]) / h1;
        m[n - 1] = ((ha + hb) * m[n - 2] - hb * m[n - 3]) / ha;
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn knot_second_derivatives(&self) -> &[f64] {
        &self.m
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn cell(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn coefficients(&self, i: usize) -> (f64, f64, f64, f64, f64) {
        let h = self.x[i + 1] - self.x[i];
        let b = (self.y[i + 1] - self.y[i]) / h - h * (2.0 * self.m[i] + self.m[i + 1]) / 6.0;
        let d = (self.m[i + 1] - self.m[i]) / (6.0 * h);
        (self.y[i], b, 0.5 * self.m[i], d, h)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.cell(t);
        let (a, b, c, d, _) = self.coefficients(i);
        let s = t - self.x[i];
        a + s * (b + s * (c + s * d))
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let i = self.cell(t);
        let (_, b, c, d, _) = self.coefficients(i);
        let s = t - self.x[i];
        b + s * (2.0 * c + 3.0 * d * s)
    }

    pub fn second_deriv(&self, t: f64) -> f64 {
        let i = self.cell(t);
        let (_, _, c, d, _) = self.coefficients(i);
        2.0 * c + 6.0 * d * (t - self.x[i])
    }

    /// Slope range `[s'(x_first), s'(x_last)]`.
    pub fn slope_range(&self) -> (f64, f64) {
        let (a, b) = self.domain();
        (self.deriv(a), self.deriv(b))
    }

    /// Solves `s'(x) = slope` for a spline with positive knot curvature
    /// (so that `s'` is strictly increasing). `None` outside the slope range.
    pub fn inverse_derivative(&self, slope: f64) -> Option<f64> {
        let n = self.x.len();
        let (lo, hi) = self.slope_range();
        if !(slope >= lo && slope <= hi) {
            return None;
        }
        // binary search on knot slopes
        let (mut a, mut b) = (0usize, n - 1);
        while b - a > 1 {
            let mid = (a + b) / 2;
            if self.deriv(self.x[mid]) <= slope {
                a = mid;
            } else {
                b = mid;
            }
        }
        let (_, bcoef, c, d, h) = self.coefficients(a);
        // 3 d s^2 + 2 c s + (b - slope) = 0 with 2c = M_a > 0
        let qa = 3.0 * d;
        let qb = 2.0 * c;
        let qc = bcoef - slope;
        let s = if qa.abs() < 1e-300 {
            -qc / qb
        } else {
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
            -2.0 * qc / (qb + disc.sqrt())
        };
        Some(self.x[a] + s.clamp(0.0, h))
    }
}

/// Thomas algorithm; `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::LinearSolve("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 {
            return Err(Error::LinearSolve("zero pivot in tridiagonal solve".into()));
        }
        c[i] = if i + 1 < n { sup[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics() {
        let x: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64 + 0.01 * (i % 3) as f64).collect();
        let f = |t: f64| 2.0 * t.powi(3) - t * t + 0.5 * t - 3.0;
        let y = x.iter().map(|&t| f(t)).collect();
        let s = CubicSpline::new(x, y).unwrap();
        for t in [-0.93, -0.2, 0.0, 0.41, 1.0] {
            assert!((s.eval(t) - f(t)).abs() < 1e-12);
            assert!((s.deriv(t) - (6.0 * t * t - 2.0 * t + 0.5)).abs() < 1e-11);
            assert!((s.second_deriv(t) - (12.0 * t - 2.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_derivative_of_parabola() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let y = x.iter().map(|t| 1.5 * t * t).collect();
        let s = CubicSpline::new(x, y).unwrap();
        let t = s.inverse_derivative(1.2).unwrap();
        assert!((t - 0.4).abs() < 1e-13);
        assert!(s.inverse_derivative(3.5).is_none());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CubicSpline::new(vec![0.0, 1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4]).is_err());
    }
}

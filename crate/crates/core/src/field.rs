//! Scalar fields on disc grids: evaluation, interpolation, anchoring, the
//! finite-difference Hessian determinant, and the text/CSV formats.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DiscGrid, GridKind, NodeKind};
use crate::regime::Regime;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: DiscGrid,
    pub values: Vec<f64>,
    /// `grad u(0)` once the field has been anchored at the origin.
    pub gradient_origin: Option<[f64; 2]>,
}

/// Where to subtract the supporting plane when anchoring a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// The degenerate point of the right-hand side.
    Origin,
    /// The discrete minimiser of the field.
    Minimizer,
}

/// What was subtracted by [`ScalarField::anchored`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnchorInfo {
    pub point: [f64; 2],
    pub value: f64,
    pub gradient: [f64; 2],
    /// Distance of the anchor point from the origin.
    pub shift: f64,
}

impl ScalarField {
    pub fn new(grid: DiscGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            gradient_origin: None,
        })
    }

    /// Samples `f` at every node of `grid`.
    pub fn from_fn(grid: DiscGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid,
            values,
            gradient_origin: None,
        }
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Largest deviation from `f` over nodes accepted by `filter`.
    pub fn sup_error(&self, f: impl Fn([f64; 2]) -> f64, filter: impl Fn([f64; 2]) -> bool) -> f64 {
        (0..self.grid.len())
            .map(|i| (i, self.grid.point(i)))
            .filter(|&(i, p)| filter(p) && self.values[i].is_finite())
            .map(|(i, p)| (self.values[i] - f(p)).abs())
            .fold(0.0, f64::max)
    }

    /// Interpolated value at an arbitrary point: tensor cubic Lagrange on
    /// Cartesian and rectangular grids; cubic in `r` and periodic cubic in
    /// `theta` on polar grids. Nodal values are reproduced exactly.
    pub fn sample(&self, p: [f64; 2]) -> Result<f64> {
        let out = || Error::OutOfDomain { x: p[0], y: p[1] };
        let v = match self.grid.kind {
            GridKind::Polar {
                n_r, n_theta, r_min, ..
            } => {
                let (dr, dth) = self.grid.spacing();
                let r = p[0].hypot(p[1]);
                let tol = 1e-12 * self.grid.radius;
                if r < r_min - tol || r > self.grid.radius + tol {
                    return Err(out());
                }
                let (i0, wr) = lagrange4((r - r_min) / dr, n_r + 1);
                let th = p[1].atan2(p[0]).rem_euclid(2.0 * PI) / dth;
                let j_base = th.floor();
                let s = th - j_base;
                let wt = lagrange4_local(s);
                let j_base = j_base as isize;
                let mut acc = 0.0;
                for (a, w_r) in wr.iter().enumerate() {
                    if *w_r == 0.0 {
                        continue;
                    }
                    for (b, w_t) in wt.iter().enumerate() {
                        let j = (j_base - 1 + b as isize).rem_euclid(n_theta as isize) as usize;
                        acc += w_r * w_t * self.values[self.grid.index(i0 + a, j)];
                    }
                }
                acc
            }
            _ => {
                let (h1, h2) = self.grid.spacing();
                let c = self.grid.origin_corner();
                let (cols, rows) = self.grid.shape();
                let u = (p[0] - c[0]) / h1;
                let v = (p[1] - c[1]) / h2;
                let eps = 1e-9;
                if u < -eps || v < -eps || u > (cols - 1) as f64 + eps || v > (rows - 1) as f64 + eps
                {
                    return Err(out());
                }
                let (j0, wu) = lagrange4(u, cols);
                let (i0, wv) = lagrange4(v, rows);
                let mut acc = 0.0;
                for (a, w_v) in wv.iter().enumerate() {
                    if *w_v == 0.0 {
                        continue;
                    }
                    for (b, w_u) in wu.iter().enumerate() {
                        if *w_u == 0.0 {
                            continue;
                        }
                        acc += w_v * w_u * self.values[self.grid.index(i0 + a, j0 + b)];
                    }
                }
                acc
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(out())
        }
    }

    /// Centered-difference `u11 u22 - u12^2` at the node nearest to `point`.
    ///
    /// On polar grids the Hessian is assembled from polar differences.
    pub fn hessian_determinant_fd(&self, point: [f64; 2]) -> Result<f64> {
        let h = self.hessian_fd(point)?;
        Ok(h[0][0] * h[1][1] - h[0][1] * h[1][0])
    }

    /// Centered-difference Cartesian Hessian at the node nearest to `point`.
    pub fn hessian_fd(&self, point: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        let out = || Error::OutOfDomain {
            x: point[0],
            y: point[1],
        };
        let (row, col) = self.grid.nearest_node(point).ok_or_else(out)?;
        match self.grid.kind {
            GridKind::Polar { n_r, n_theta, .. } => {
                if row == 0 || row >= n_r {
                    return Err(out());
                }
                let (dr, dth) = self.grid.spacing();
                let (r, th) = self.grid.polar_coords(row, col);
                let jp = (col + 1) % n_theta;
                let jm = (col + n_theta - 1) % n_theta;
                let u = |i: usize, j: usize| self.values[self.grid.index(i, j)];
                let c = u(row, col);
                let u_r = (u(row + 1, col) - u(row - 1, col)) / (2.0 * dr);
                let u_rr = (u(row + 1, col) - 2.0 * c + u(row - 1, col)) / (dr * dr);
                let u_t = (u(row, jp) - u(row, jm)) / (2.0 * dth);
                let u_tt = (u(row, jp) - 2.0 * c + u(row, jm)) / (dth * dth);
                let u_rt = (u(row + 1, jp) - u(row + 1, jm) - u(row - 1, jp) + u(row - 1, jm))
                    / (4.0 * dr * dth);
                let h_rr = u_rr;
                let h_tt = u_r / r + u_tt / (r * r);
                let h_rt = u_rt / r - u_t / (r * r);
                let (cs, sn) = (th.cos(), th.sin());
                // rotate from the (e_r, e_theta) frame to Cartesian axes
                let h11 = cs * cs * h_rr - 2.0 * cs * sn * h_rt + sn * sn * h_tt;
                let h22 = sn * sn * h_rr + 2.0 * cs * sn * h_rt + cs * cs * h_tt;
                let h12 = cs * sn * (h_rr - h_tt) + (cs * cs - sn * sn) * h_rt;
                finite_hessian([[h11, h12], [h12, h22]], out())
            }
            _ => {
                let (cols, rows) = self.grid.shape();
                if row == 0 || col == 0 || row + 1 >= rows || col + 1 >= cols {
                    return Err(out());
                }
                let (h1, h2) = self.grid.spacing();
                let u = |i: usize, j: usize| self.values[self.grid.index(i, j)];
                let c = u(row, col);
                let u11 = (u(row, col + 1) - 2.0 * c + u(row, col - 1)) / (h1 * h1);
                let u22 = (u(row + 1, col) - 2.0 * c + u(row - 1, col)) / (h2 * h2);
                let u12 = (u(row + 1, col + 1) - u(row + 1, col - 1) - u(row - 1, col + 1)
                    + u(row - 1, col - 1))
                    / (4.0 * h1 * h2);
                finite_hessian([[u11, u12], [u12, u22]], out())
            }
        }
    }

    /// Centered-difference gradient at a tensor-grid node.
    pub fn gradient_fd_at_node(&self, row: usize, col: usize) -> Result<[f64; 2]> {
        let (cols, rows) = self.grid.shape();
        let p = self.grid.point(self.grid.index(row, col));
        let out = Error::OutOfDomain { x: p[0], y: p[1] };
        if matches!(self.grid.kind, GridKind::Polar { .. })
            || row == 0
            || col == 0
            || row + 1 >= rows
            || col + 1 >= cols
        {
            return Err(out);
        }
        let (h1, h2) = self.grid.spacing();
        let u = |i: usize, j: usize| self.values[self.grid.index(i, j)];
        let g = [
            (u(row, col + 1) - u(row, col - 1)) / (2.0 * h1),
            (u(row + 1, col) - u(row - 1, col)) / (2.0 * h2),
        ];
        if g[0].is_finite() && g[1].is_finite() {
            Ok(g)
        } else {
            Err(out)
        }
    }

    /// Node of smallest finite value.
    pub fn argmin(&self) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }

    /// Subtracts the supporting plane `u(x*) + grad u(x*) . (x - x*)` at the
    /// anchor node; the gradient is the centered difference there.
    pub fn anchored(&self, anchor: Anchor) -> Result<(ScalarField, AnchorInfo)> {
        let idx = match anchor {
            Anchor::Origin => self.grid.origin_node().ok_or_else(|| {
                Error::Domain("origin anchoring needs a Cartesian grid with a node at 0".into())
            })?,
            Anchor::Minimizer => self
                .argmin()
                .ok_or_else(|| Error::Degeneracy("field has no finite values".into()))?,
        };
        let (row, col) = self.grid.row_col(idx);
        let gradient = self.gradient_fd_at_node(row, col)?;
        let point = self.grid.point(idx);
        let value = self.values[idx];
        let values = (0..self.grid.len())
            .map(|i| {
                let p = self.grid.point(i);
                self.values[i]
                    - value
                    - gradient[0] * (p[0] - point[0])
                    - gradient[1] * (p[1] - point[1])
            })
            .collect();
        let shift = point[0].hypot(point[1]);
        let field = ScalarField {
            grid: self.grid,
            values,
            gradient_origin: (shift == 0.0).then_some([0.0, 0.0]),
        };
        Ok((
            field,
            AnchorInfo {
                point,
                value,
                gradient,
                shift,
            },
        ))
    }

    /// Minimum second difference along grid lines scaled by `h^2` over
    /// finite interior nodes (negative values flag non-convexity).
    pub fn grid_line_convexity_margin(&self) -> f64 {
        if matches!(self.grid.kind, GridKind::Polar { .. }) {
            return f64::NAN;
        }
        let (cols, rows) = self.grid.shape();
        let u = |i: usize, j: usize| self.values[self.grid.index(i, j)];
        let mut margin = f64::INFINITY;
        for i in 1..rows - 1 {
            for j in 1..cols - 1 {
                let d1 = u(i, j + 1) - 2.0 * u(i, j) + u(i, j - 1);
                let d2 = u(i + 1, j) - 2.0 * u(i, j) + u(i - 1, j);
                for d in [d1, d2] {
                    if d.is_finite() {
                        margin = margin.min(d);
                    }
                }
            }
        }
        margin
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 24);
        s.push_str(&self.grid.header());
        s.push('\n');
        for v in &self.values {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty field file".into()))?;
        let grid = DiscGrid::parse_header(header.trim())?;
        let values = lines
            .map(|l| {
                let l = l.trim();
                l.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value '{l}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        ScalarField::new(grid, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// CSV export with columns `x1,x2,u` (finite nodes only).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "x1,x2,u").map_err(|e| Error::io(path, e))?;
        for (i, v) in self.values.iter().enumerate() {
            if v.is_finite() {
                let p = self.grid.point(i);
                writeln!(w, "{},{},{}", p[0], p[1], v).map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Nodes flagged `Inside` or `Boundary`.
    pub fn in_disc_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.len()).filter(|&i| self.grid.node_kind(i) != NodeKind::Outside)
    }
}

fn finite_hessian(h: [[f64; 2]; 2], err: Error) -> Result<[[f64; 2]; 2]> {
    if h.iter().flatten().all(|v| v.is_finite()) {
        Ok(h)
    } else {
        Err(err)
    }
}

/// Four-point Lagrange weights for fractional index `x` on `0..n`, with the
/// stencil clamped inside the node range. Returns the first stencil index.
fn lagrange4(x: f64, n: usize) -> (usize, [f64; 4]) {
    debug_assert!(n >= 4);
    let base = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let s = x - base as f64 - 1.0;
    (base, lagrange4_local(s))
}

/// Weights for nodes at local positions -1, 0, 1, 2 evaluated at `s`.
fn lagrange4_local(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// `u0 = c_alpha |x|^beta` on every node, anchored at the origin.
pub fn radial_solution(regime: &Regime, grid: DiscGrid) -> ScalarField {
    let mut f = ScalarField::from_fn(grid, |p| regime.radial_value(p[0].hypot(p[1])));
    f.gradient_origin = Some([0.0, 0.0]);
    f
}

/// The anisotropic model `a |x1|^(2+alpha)/((alpha+2)(alpha+1)) + x2^2/(2a)`.
pub fn nonradial_model(alpha: f64, a: f64, grid: DiscGrid) -> ScalarField {
    let k = a / ((alpha + 2.0) * (alpha + 1.0));
    let mut f = ScalarField::from_fn(grid, |p| {
        k * p[0].abs().powf(2.0 + alpha) + p[1] * p[1] / (2.0 * a)
    });
    f.gradient_origin = Some([0.0, 0.0]);
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(p: [f64; 2]) -> f64 {
        0.5 * p[0] * p[0] + 0.5 * p[1] * p[1]
    }

    #[test]
    fn hessian_of_quadratics_is_exact() {
        let g = DiscGrid::cartesian(40, 1.0).unwrap();
        let f = ScalarField::from_fn(g, quadratic);
        for p in [[0.0, 0.0], [0.3, -0.2], [-0.5, 0.55]] {
            assert!((f.hessian_determinant_fd(p).unwrap() - 1.0).abs() < 1e-12);
        }
        let q = ScalarField::from_fn(g, |p| 1.5 * p[0] * p[0] + 0.4 * p[0] * p[1] + 2.0 * p[1] * p[1] - p[0]);
        let exact = 3.0 * 4.0 - 0.4 * 0.4;
        assert!((q.hessian_determinant_fd([0.1, 0.25]).unwrap() - exact).abs() < 1e-11);
    }

    #[test]
    fn hessian_stencil_must_stay_on_grid() {
        let g = DiscGrid::cartesian(10, 1.0).unwrap();
        let f = ScalarField::from_fn(g, quadratic);
        assert!(matches!(
            f.hessian_determinant_fd([1.0, 1.0]),
            Err(Error::OutOfDomain { .. })
        ));
        assert!(f.hessian_determinant_fd([3.0, 0.0]).is_err());
    }

    #[test]
    fn nonradial_model_determinant() {
        // a = 1, alpha = 2: x1^4/12 + x2^2/2 has det D^2 = x1^2
        let g = DiscGrid::cartesian(200, 1.0).unwrap();
        let f = nonradial_model(2.0, 1.0, g);
        let p = [0.5, 0.3];
        let det = f.hessian_determinant_fd(p).unwrap();
        assert!((det - 0.25).abs() < 1e-3, "{det}");
    }

    #[test]
    fn radial_solution_values() {
        let reg = Regime::new(2.0).unwrap();
        let g = DiscGrid::cartesian(20, 1.0).unwrap();
        let u = radial_solution(&reg, g);
        let east = g.index(10, 20);
        assert!((u.value(east) - reg.c_alpha).abs() < 1e-15);
        let i1 = g.index(10, 12); // x = 0.2
        let i2 = g.index(10, 14); // x = 0.4
        let ratio = u.value(i2) / u.value(i1);
        assert!((ratio - 2f64.powf(reg.beta)).abs() < 1e-12);
    }

    #[test]
    fn polar_hessian_matches_cartesian() {
        let reg = Regime::new(2.0).unwrap();
        let g = DiscGrid::polar_default(400, 800, 1.0).unwrap();
        let u = radial_solution(&reg, g);
        let (row, col) = g.nearest_node([0.6, 0.0]).unwrap();
        let r = g.polar_coords(row, col).0;
        let det = u.hessian_determinant_fd([0.6, 0.0]).unwrap();
        assert!((det - r * r).abs() < 1e-4, "{det}");
        let q = ScalarField::from_fn(g, |p| p[0] * p[0] + 0.3 * p[0] * p[1] + 0.5 * p[1] * p[1]);
        let det = q.hessian_determinant_fd([0.3, 0.4]).unwrap();
        assert!((det - (2.0 - 0.09)).abs() < 1e-4, "{det}");
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let g = DiscGrid::cartesian(16, 1.0).unwrap();
        let cubic = |p: [f64; 2]| p[0].powi(3) - 2.0 * p[0] * p[1] * p[1] + p[1] + 0.3;
        let f = ScalarField::from_fn(g, cubic);
        for p in [[0.013, -0.71], [0.5, 0.5], [-0.99, 0.99], [1.0, -1.0]] {
            assert!((f.sample(p).unwrap() - cubic(p)).abs() < 1e-12);
        }
        assert!(f.sample([1.01, 0.0]).is_err());
    }

    #[test]
    fn polar_interpolation_is_periodic() {
        let g = DiscGrid::polar(40, 64, 0.1, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0] * p[0] + p[1]);
        let a = f.sample([0.5, -1e-9]).unwrap();
        let b = f.sample([0.5, 1e-9]).unwrap();
        assert!((a - b).abs() < 1e-8);
        assert!((f.sample([0.3, 0.4]).unwrap() - (0.09 + 0.4)).abs() < 1e-4);
        assert!(f.sample([0.05, 0.0]).is_err());
    }

    #[test]
    fn anchoring_removes_tilt() {
        let reg = Regime::new(2.0).unwrap();
        let g = DiscGrid::cartesian(64, 1.0).unwrap();
        let u0 = radial_solution(&reg, g);
        let tilted = ScalarField::from_fn(g, |p| reg.radial_value(p[0].hypot(p[1])) + 0.3 * p[0] - 0.7 * p[1] + 2.0);
        let (a, info) = tilted.anchored(Anchor::Origin).unwrap();
        assert_eq!(info.shift, 0.0);
        assert!((info.gradient[0] - 0.3).abs() < 1e-12);
        assert_eq!(a.gradient_origin, Some([0.0, 0.0]));
        let err = a
            .values
            .iter()
            .zip(&u0.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn text_format_round_trip() {
        let g = DiscGrid::polar(6, 12, 0.2, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0] - 3.0 * p[1]);
        let back = ScalarField::from_text(&f.to_text()).unwrap();
        assert_eq!(back.grid, f.grid);
        assert_eq!(back.values, f.values);
        assert!(ScalarField::from_text("grid cartesian n=4 radius=1\n1\n2\n").is_err());
    }
}

//! Partial Legendre transform in `x2` and the degenerate linear equation
//! `w11 + c |y1|^alpha w22 = 0` satisfied by transformed solutions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{DiscGrid, GridKind};
use crate::linalg::SparseSystem;
use crate::spline::CubicSpline;

/// A field convex in `x2` and its partial Legendre transform
/// `u*(y1, y2) = x2 y2 - u(x1, x2)` with `y1 = x1`, `y2 = du/dx2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialLegendrePair {
    pub primal: ScalarField,
    /// Transform on a rectangular `(y1, y2)` grid; NaN outside the image.
    pub dual: ScalarField,
    /// `(y1, y2)` image of every primal node (NaN where not transformed).
    pub domain_map: Vec<[f64; 2]>,
}

/// Axes of a tensor grid: `(x1 nodes, x2 nodes)`.
fn tensor_axes(grid: &DiscGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    if matches!(grid.kind, GridKind::Polar { .. }) {
        return Err(Error::GridMismatch(
            "partial Legendre transform needs a Cartesian or rectangular grid".into(),
        ));
    }
    let (h1, h2) = grid.spacing();
    let c = grid.origin_corner();
    let (cols, rows) = grid.shape();
    Ok((
        (0..cols).map(|j| c[0] + j as f64 * h1).collect(),
        (0..rows).map(|i| c[1] + i as f64 * h2).collect(),
    ))
}

/// Interpolating spline of one vertical slice, over its longest run of
/// finite values; `None` when the run is too short to transform.
fn slice_spline(field: &ScalarField, col: usize, x2: &[f64]) -> Result<Option<(CubicSpline, usize)>> {
    let vals: Vec<f64> = (0..x2.len())
        .map(|i| field.values[field.grid.index(i, col)])
        .collect();
    let (mut best, mut start) = ((0usize, 0usize), None);
    for i in 0..=vals.len() {
        let finite = i < vals.len() && vals[i].is_finite();
        match (finite, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    let (a, b) = best;
    if b - a < 4 {
        return Ok(None);
    }
    let s = CubicSpline::new(x2[a..b].to_vec(), vals[a..b].to_vec())?;
    for (k, &m) in s.knot_second_derivatives().iter().enumerate() {
        if !(m > 0.0) {
            let (h1, _) = field.grid.spacing();
            let x1 = field.grid.origin_corner()[0] + col as f64 * h1;
            return Err(Error::Degeneracy(format!(
                "slice x1 = {x1:.6} (column {col}) is not strictly convex in x2 near x2 = {:.6}",
                x2[a + k]
            )));
        }
    }
    Ok(Some((s, a)))
}

/// Transforms every vertical slice and samples the result on the `y2` axis
/// `[lo2, hi2]` with `n2` cells. Columns keep their `x1` positions.
pub fn partial_legendre_onto(field: &ScalarField, lo2: f64, hi2: f64, n2: usize) -> Result<ScalarField> {
    let (x1, x2) = tensor_axes(&field.grid)?;
    let n1 = x1.len() - 1;
    let grid = DiscGrid::rect(n1, n2, [x1[0], lo2], [x1[n1], hi2])?;
    let dy = (hi2 - lo2) / n2 as f64;
    let mut values = vec![f64::NAN; grid.len()];
    for col in 0..=n1 {
        let Some((s, _)) = slice_spline(field, col, &x2)? else {
            continue;
        };
        for row in 0..=n2 {
            let y2 = lo2 + row as f64 * dy;
            if let Some(x) = s.inverse_derivative(y2) {
                values[grid.index(row, col)] = x * y2 - s.eval(x);
            }
        }
    }
    ScalarField::new(grid, values)
}

/// Partial Legendre transform onto the smallest `y2` interval containing
/// every slice's slope range, with as many `y2` cells as the input has rows.
pub fn partial_legendre(field: &ScalarField) -> Result<PartialLegendrePair> {
    let (x1, x2) = tensor_axes(&field.grid)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut domain_map = vec![[f64::NAN; 2]; field.grid.len()];
    for col in 0..x1.len() {
        let Some((s, first)) = slice_spline(field, col, &x2)? else {
            continue;
        };
        let (a, b) = s.slope_range();
        lo = lo.min(a);
        hi = hi.max(b);
        for (k, &x) in s.knots().iter().enumerate() {
            domain_map[field.grid.index(first + k, col)] = [x1[col], s.deriv(x)];
        }
    }
    if !(hi > lo) {
        return Err(Error::Degeneracy("no transformable slice".into()));
    }
    let dual = partial_legendre_onto(field, lo, hi, x2.len() - 1)?;
    Ok(PartialLegendrePair {
        primal: field.clone(),
        dual,
        domain_map,
    })
}

/// `|y1|^(2+alpha) / ((alpha+2)(alpha+1))`, whose second derivative is `|y1|^alpha`.
pub fn power_block(y1: f64, alpha: f64) -> f64 {
    y1.abs().powf(2.0 + alpha) / ((alpha + 2.0) * (alpha + 1.0))
}

/// Solves `w11 + c |y1|^alpha w22 = 0` in the disc of a Cartesian grid with
/// Dirichlet data `boundary` on the circle.
///
/// Five-point scheme with Shortley-Weller arms cut at the circle. The
/// coefficient at a node is the hat-weighted average of `|y1|^alpha` over its
/// `y1` stencil cell, i.e. the non-uniform second difference of
/// [`power_block`]; all off-diagonal weights are positive, so the discrete
/// maximum principle holds.
pub fn solve_degenerate_linear(
    alpha: f64,
    c: f64,
    boundary: impl Fn([f64; 2]) -> f64,
    grid: DiscGrid,
) -> Result<ScalarField> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("degenerate linear solver needs alpha > 0, got {alpha}")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("coefficient c must be positive, got {c}")));
    }
    let GridKind::Cartesian { n } = grid.kind else {
        return Err(Error::GridMismatch("degenerate linear solver needs a Cartesian grid".into()));
    };
    let radius = grid.radius;
    let h = grid.h();
    let unknown: Vec<Option<usize>> = {
        let mut k = 0;
        (0..grid.len())
            .map(|i| {
                grid.in_disc(grid.point(i)).then(|| {
                    k += 1;
                    k - 1
                })
            })
            .collect()
    };
    let count = unknown.iter().flatten().count();
    let mut sys = SparseSystem::new(count);
    let mut rhs = vec![0.0; count];
    let g_block = |y1: f64| power_block(y1, alpha);
    for idx in 0..grid.len() {
        let Some(me) = unknown[idx] else { continue };
        let (row, col) = grid.row_col(idx);
        let p = grid.point(idx);
        // arm lengths and neighbour references along +x1, -x1, +x2, -x2
        let mut arms = [(h, None::<usize>, 0.0); 4];
        for (a, (dr, dc)) in [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)].into_iter().enumerate() {
            let dir = [dc as f64, dr as f64];
            let (rr, cc) = (row as i64 + dr, col as i64 + dc);
            let inside = rr >= 0 && cc >= 0 && rr <= n as i64 && cc <= n as i64 && {
                let k = grid.index(rr as usize, cc as usize);
                unknown[k].is_some()
            };
            if inside {
                let k = grid.index(rr as usize, cc as usize);
                arms[a] = (h, unknown[k], 0.0);
            } else {
                let s = circle_exit(p, dir, radius).min(h);
                let q = [p[0] + s * dir[0], p[1] + s * dir[1]];
                arms[a] = (s, None, boundary(q));
            }
        }
        let (sp, sm) = (arms[0].0, arms[1].0);
        let coef = {
            let second = 2.0 / (sp + sm)
                * ((g_block(p[0] + sp) - g_block(p[0])) / sp + (g_block(p[0] - sm) - g_block(p[0])) / sm);
            c * second
        };
        let (tp, tm) = (arms[2].0, arms[3].0);
        let weights = [
            2.0 / (sp * (sp + sm)),
            2.0 / (sm * (sp + sm)),
            coef * 2.0 / (tp * (tp + tm)),
            coef * 2.0 / (tm * (tp + tm)),
        ];
        let mut diag = 0.0;
        for (a, w) in weights.iter().enumerate() {
            diag += w;
            match arms[a].1 {
                Some(k) => sys.add(me, k, *w),
                None => rhs[me] -= w * arms[a].2,
            }
        }
        sys.add(me, me, -diag);
    }
    let sol = sys.solve(&rhs)?;
    let values = (0..grid.len())
        .map(|i| match unknown[i] {
            Some(k) => sol[k],
            None => f64::NAN,
        })
        .collect();
    ScalarField::new(grid, values)
}

/// Distance from `p` along the unit vector `dir` to the circle of radius `r`.
pub(crate) fn circle_exit(p: [f64; 2], dir: [f64; 2], r: f64) -> f64 {
    let b = p[0] * dir[0] + p[1] * dir[1];
    let c = p[0] * p[0] + p[1] * p[1] - r * r;
    let disc = (b * b - c).max(0.0);
    // larger root, written to avoid cancellation
    if b >= 0.0 {
        let q = b + disc.sqrt();
        if q > 0.0 {
            -c / q
        } else {
            0.0
        }
    } else {
        -b + disc.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowFit {
    /// Window `{|y1|^(2+alpha) + y2^2 < rho^2}`.
    pub rho: f64,
    pub nodes: usize,
    /// Largest deviation of the field from the fitted model on the window.
    pub residual: f64,
    pub coefficients: [f64; 5],
}

/// Coefficients of `w = a0 + a1.y + a2 y1 y2 + a3 (y2^2/2 - |y1|^(2+alpha)/((alpha+2)(alpha+1))) + R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub a0: f64,
    pub a1: [f64; 2],
    pub a2: f64,
    pub a3: f64,
    /// Fitted `1 + delta` in `|R| ~ (y2^2 + |y1|^(2+alpha))^(1+delta)`;
    /// `None` when every window residual sits at the rounding floor.
    pub remainder_exponent: Option<f64>,
    pub fit_window: [f64; 2],
    pub windows: Vec<WindowFit>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionOptions {
    /// Dyadic window exponents: `rho = 2^-k` for `k` in `k_min..=k_max`.
    pub k_min: u32,
    pub k_max: u32,
    /// Coefficient `c` of the equation; the quadratic block becomes
    /// `y2^2/2 - c |y1|^(2+alpha)/(...)`.
    pub c: f64,
    pub min_nodes: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 6,
            c: 1.0,
            min_nodes: 12,
        }
    }
}

fn basis(y: [f64; 2], alpha: f64, c: f64) -> [f64; 5] {
    [
        1.0,
        y[0],
        y[1],
        y[0] * y[1],
        0.5 * y[1] * y[1] - c * power_block(y[0], alpha),
    ]
}

/// Least-squares fit of the expansion model on dyadic anisotropic windows
/// centred at the origin. Coefficients come from the smallest window; the
/// remainder exponent from the decay of window residuals in `rho^2`.
pub fn expansion_coefficients(field: &ScalarField, alpha: f64, opts: &ExpansionOptions) -> Result<ExpansionReport> {
    let mut windows = Vec::new();
    let scale = field
        .values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for k in opts.k_min..=opts.k_max {
        let rho = 0.5f64.powi(k as i32);
        let pts: Vec<([f64; 2], f64)> = (0..field.grid.len())
            .filter_map(|i| {
                let y = field.grid.point(i);
                let v = field.values[i];
                let m = y[0].abs().powf(2.0 + alpha) + y[1] * y[1];
                (v.is_finite() && m < rho * rho).then_some((y, v))
            })
            .collect();
        if pts.len() < opts.min_nodes {
            if windows.is_empty() {
                return Err(Error::Fit(format!(
                    "window rho = {rho:e} holds only {} nodes",
                    pts.len()
                )));
            }
            break;
        }
        let coefficients = fit_window(&pts, alpha, opts.c)?;
        let residual = pts
            .iter()
            .map(|(y, v)| {
                let b = basis(*y, alpha, opts.c);
                (v - b.iter().zip(&coefficients).map(|(p, q)| p * q).sum::<f64>()).abs()
            })
            .fold(0.0, f64::max);
        windows.push(WindowFit {
            rho,
            nodes: pts.len(),
            residual,
            coefficients,
        });
    }
    let last = *windows.last().expect("at least one window");
    let floor = 1e-12 * scale;
    let usable: Vec<(f64, f64)> = windows
        .iter()
        .filter(|w| w.residual > floor)
        .map(|w| ((w.rho * w.rho).ln(), w.residual.ln()))
        .collect();
    let remainder_exponent = (usable.len() >= 2).then(|| slope(&usable));
    let c = last.coefficients;
    Ok(ExpansionReport {
        a0: c[0],
        a1: [c[1], c[2]],
        a2: c[3],
        a3: c[4],
        remainder_exponent,
        fit_window: [last.rho, windows[0].rho],
        windows,
    })
}

fn fit_window(pts: &[([f64; 2], f64)], alpha: f64, c: f64) -> Result<[f64; 5]> {
    // columns are rescaled to unit norm so that the anisotropic window does not
    // make the normal equations lopsided
    let a = DMatrix::from_fn(pts.len(), 5, |i, j| basis(pts[i].0, alpha, c)[j]);
    let norms: Vec<f64> = (0..5).map(|j| a.column(j).norm()).collect();
    if norms.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Fit("a basis function vanishes on the window".into()));
    }
    let scaled = DMatrix::from_fn(pts.len(), 5, |i, j| a[(i, j)] / norms[j]);
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let svd = scaled.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-10 * smax) {
        return Err(Error::Fit(format!(
            "ill-conditioned window (singular values {smin:e} / {smax:e})"
        )));
    }
    let x = svd
        .solve(&b, 1e-14 * smax)
        .map_err(|e| Error::Fit(e.to_string()))?;
    Ok([0, 1, 2, 3, 4].map(|j| x[j] / norms[j]))
}

/// Least-squares slope of `y` against `x`.
pub(crate) fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_distance() {
        assert!((circle_exit([0.0, 0.0], [1.0, 0.0], 1.0) - 1.0).abs() < 1e-15);
        assert!((circle_exit([0.5, 0.0], [-1.0, 0.0], 1.0) - 1.5).abs() < 1e-15);
        let d = circle_exit([0.6, 0.7], [0.0, 1.0], 1.0);
        assert!((0.6f64.hypot(0.7 + d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_in_x2_transforms_exactly() {
        let g = DiscGrid::rect(20, 40, [-1.0, -1.0], [1.0, 1.0]).unwrap();
        let u = ScalarField::from_fn(g, |p| p[0] * p[0] + 0.5 * p[0] * p[1] + p[1] * p[1]);
        let pair = partial_legendre(&u).unwrap();
        let dual = &pair.dual;
        for i in 0..dual.grid.len() {
            let v = dual.values[i];
            if v.is_finite() {
                let y = dual.grid.point(i);
                let exact = (y[1] - 0.5 * y[0]).powi(2) / 4.0 - y[0] * y[0];
                assert!((v - exact).abs() < 1e-12);
            }
        }
        let m = pair.domain_map[g.index(5, 7)];
        let p = g.point(g.index(5, 7));
        assert_eq!(m[0], p[0]);
        assert!((m[1] - (0.5 * p[0] + 2.0 * p[1])).abs() < 1e-12);
    }

    #[test]
    fn flat_slice_is_rejected() {
        let g = DiscGrid::rect(8, 8, [-1.0, -1.0], [1.0, 1.0]).unwrap();
        let u = ScalarField::from_fn(g, |p| if p[0] > 0.5 { p[1] } else { p[1] * p[1] });
        match partial_legendre(&u) {
            Err(Error::Degeneracy(msg)) => assert!(msg.contains("column")),
            other => panic!("{other:?}"),
        }
    }
}

//! Section geometry: sub-level sets `S_t`, centered sections `T_t`, John
//! frames, eccentricity traces, the radial/non-radial classifier, and the
//! measure `|x|^alpha dx` on polygons.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::GridKind;
use crate::quadrature::Quadrature;
use crate::regime::Regime;

/// A discrete section `{u(x) < u(x0) + tilt . (x - x0) + t}` stored as the
/// convex hull of its marching-squares contour (counter-clockwise).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionShape {
    pub center: [f64; 2],
    pub t: f64,
    pub tilt: [f64; 2],
    pub polygon: Vec<[f64; 2]>,
    /// Whether the tilt was chosen to put the centroid at `center`.
    pub centered: bool,
}

impl SectionShape {
    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon)
    }

    pub fn centroid(&self) -> [f64; 2] {
        polygon_centroid(&self.polygon)
    }

    /// Support function `max_{v in polygon} dir . (v - center)`.
    pub fn support(&self, dir: [f64; 2]) -> f64 {
        self.polygon
            .iter()
            .map(|v| dir[0] * (v[0] - self.center[0]) + dir[1] * (v[1] - self.center[1]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest width over 360 directions.
    pub fn min_width(&self) -> f64 {
        (0..180)
            .map(|k| {
                let th = k as f64 * std::f64::consts::PI / 180.0;
                let d = [th.cos(), th.sin()];
                self.support(d) + self.support([-d[0], -d[1]])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from the center to the nearest edge line.
    pub fn inner_radius(&self) -> f64 {
        edges(&self.polygon)
            .map(|(a, b)| {
                let (n, off) = edge_line(a, b);
                off - (n[0] * self.center[0] + n[1] * self.center[1])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from the center to the farthest vertex.
    pub fn outer_radius(&self) -> f64 {
        self.polygon
            .iter()
            .map(|v| (v[0] - self.center[0]).hypot(v[1] - self.center[1]))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        edges(&self.polygon).all(|(a, b)| {
            let (n, off) = edge_line(a, b);
            n[0] * p[0] + n[1] * p[1] < off
        })
    }

    /// Largest turn against the counter-clockwise orientation, as a signed
    /// cross product of consecutive unit edges (0 for a convex polygon).
    pub fn convexity_defect(&self) -> f64 {
        let m = self.polygon.len();
        (0..m)
            .map(|i| {
                let a = self.polygon[i];
                let b = self.polygon[(i + 1) % m];
                let c = self.polygon[(i + 2) % m];
                let e1 = unit([b[0] - a[0], b[1] - a[1]]);
                let e2 = unit([c[0] - b[0], c[1] - b[1]]);
                (-(e1[0] * e2[1] - e1[1] * e2[0])).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn edges(poly: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    let m = poly.len();
    (0..m).map(move |i| (poly[i], poly[(i + 1) % m]))
}

/// Outward unit normal and offset of the edge line of a counter-clockwise
/// polygon: interior points satisfy `n . x < off`.
fn edge_line(a: [f64; 2], b: [f64; 2]) -> ([f64; 2], f64) {
    let n = unit([b[1] - a[1], a[0] - b[0]]);
    (n, n[0] * a[0] + n[1] * a[1])
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    0.5 * edges(poly).map(|(a, b)| a[0] * b[1] - a[1] * b[0]).sum::<f64>()
}

pub fn polygon_centroid(poly: &[[f64; 2]]) -> [f64; 2] {
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut a2 = 0.0;
    for (a, b) in edges(poly) {
        let cr = a[0] * b[1] - a[1] * b[0];
        a2 += cr;
        cx += (a[0] + b[0]) * cr;
        cy += (a[1] + b[1]) * cr;
    }
    [cx / (3.0 * a2), cy / (3.0 * a2)]
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Value and gradient of the supporting plane at `center`: the stored
/// origin gradient of an anchored field, otherwise centered differences of
/// the interpolant with step `h`.
fn tangent(field: &ScalarField, center: [f64; 2]) -> Result<(f64, [f64; 2])> {
    let value = field.sample(center)?;
    if let (Some(g), true) = (field.gradient_origin, center == [0.0, 0.0]) {
        return Ok((value, g));
    }
    let h = field.grid.h();
    let d = |e: [f64; 2]| -> Result<f64> {
        let p = field.sample([center[0] + h * e[0], center[1] + h * e[1]])?;
        let m = field.sample([center[0] - h * e[0], center[1] - h * e[1]])?;
        Ok((p - m) / (2.0 * h))
    };
    Ok((value, [d([1.0, 0.0])?, d([0.0, 1.0])?]))
}

/// The section `S_t` at `center` with the field's own tangent plane.
pub fn section(field: &ScalarField, center: [f64; 2], t: f64) -> Result<SectionShape> {
    let (_, tilt) = tangent(field, center)?;
    section_with_tilt(field, center, tilt, t)
}

/// `{u(x) < u(center) + tilt . (x - center) + t}`: the connected component
/// of grid nodes containing the node nearest `center`, its boundary crossings
/// located on grid edges (linear guess refined on the cubic interpolant),
/// and their convex hull.
pub fn section_with_tilt(field: &ScalarField, center: [f64; 2], tilt: [f64; 2], t: f64) -> Result<SectionShape> {
    if matches!(field.grid.kind, GridKind::Polar { .. }) {
        return Err(Error::Domain("sections need a tensor grid".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("section height must be positive, got {t}")));
    }
    let grid = field.grid;
    let base = field.sample(center)?;
    let level = |p: [f64; 2]| base + tilt[0] * (p[0] - center[0]) + tilt[1] * (p[1] - center[1]) + t;
    let v: Vec<f64> = (0..grid.len())
        .map(|i| field.values[i] - level(grid.point(i)))
        .collect();
    let (cols, rows) = grid.shape();
    let (r0, c0) = grid
        .nearest_node(center)
        .ok_or(Error::OutOfDomain { x: center[0], y: center[1] })?;
    let start = grid.index(r0, c0);
    if !(v[start] < 0.0) {
        return Err(Error::Resolution(format!(
            "section at height t = {t:e} does not contain a grid node near its center"
        )));
    }
    let mut inside = vec![false; grid.len()];
    inside[start] = true;
    let mut stack = vec![(r0, c0)];
    let mut crossings = Vec::new();
    while let Some((r, c)) = stack.pop() {
        let i = grid.index(r, c);
        for (dr, dc) in [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)] {
            let rn = r as i64 + dr;
            let cn = c as i64 + dc;
            if rn < 0 || cn < 0 || rn >= rows as i64 || cn >= cols as i64 {
                return Err(Error::Truncation { t });
            }
            let j = grid.index(rn as usize, cn as usize);
            let vj = v[j];
            if !vj.is_finite() {
                return Err(Error::Truncation { t });
            }
            if vj < 0.0 {
                if !inside[j] {
                    inside[j] = true;
                    stack.push((rn as usize, cn as usize));
                }
            } else {
                crossings.push(refine_crossing(field, &level, grid.point(i), grid.point(j), v[i], vj));
            }
        }
    }
    let polygon = convex_hull(&crossings);
    if polygon.len() < 3 || polygon_area(&polygon) <= 0.0 {
        return Err(Error::Degeneracy(format!("section at t = {t:e} has empty interior")));
    }
    Ok(SectionShape {
        center,
        t,
        tilt,
        polygon,
        centered: false,
    })
}

/// Zero of `u - level` on the segment `[a, b]` with `fa < 0 <= fb`: a
/// linear guess followed by a few regula falsi steps on the interpolant.
fn refine_crossing(
    field: &ScalarField,
    level: &impl Fn([f64; 2]) -> f64,
    a: [f64; 2],
    b: [f64; 2],
    fa: f64,
    fb: f64,
) -> [f64; 2] {
    let at = |s: f64| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
    let (mut lo, mut hi, mut flo, mut fhi) = (0.0, 1.0, fa, fb);
    let mut s = fa / (fa - fb);
    for _ in 0..4 {
        let f = match field.sample(at(s)) {
            Ok(u) => u - level(at(s)),
            Err(_) => break,
        };
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = s;
            flo = f;
        } else {
            hi = s;
            fhi = f;
        }
        s = lo + (hi - lo) * flo / (flo - fhi);
    }
    at(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteredOptions {
    pub damping: f64,
    pub max_iterations: usize,
    /// Stop once `|centroid - center| < centroid_cells * h`.
    pub centroid_cells: f64,
}

impl Default for CenteredOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iterations: 200,
            centroid_cells: 0.25,
        }
    }
}

/// The centered section `T_t` about the origin: the tilt `p_t` is adjusted by
/// damped fixed-point iteration until the centroid sits at the origin.
pub fn centered_section(field: &ScalarField, t: f64) -> Result<SectionShape> {
    centered_section_with(field, [0.0, 0.0], t, &CenteredOptions::default())
}

pub fn centered_section_with(
    field: &ScalarField,
    center: [f64; 2],
    t: f64,
    opts: &CenteredOptions,
) -> Result<SectionShape> {
    let (_, mut p) = tangent(field, center)?;
    let stop = opts.centroid_cells * field.grid.h();
    let mut offset = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let mut s = section_with_tilt(field, center, p, t)?;
        let g = s.centroid();
        let d = [g[0] - center[0], g[1] - center[1]];
        offset = d[0].hypot(d[1]);
        if offset < stop {
            s.centered = true;
            return Ok(s);
        }
        // For a quadratic section the covariance of the uniform measure is
        // t H^{-1} / 2, which gives the Hessian needed to move the centroid.
        let cov = polygon_covariance(&s.polygon);
        let det = cov[0] * cov[2] - cov[1] * cov[1];
        let k = 0.5 * t / det;
        let hd = [k * (cov[2] * d[0] - cov[1] * d[1]), k * (-cov[1] * d[0] + cov[0] * d[1])];
        p = [p[0] - opts.damping * hd[0], p[1] - opts.damping * hd[1]];
    }
    Err(Error::Iteration {
        iterations: opts.max_iterations,
        residual: offset,
        reason: format!("centroid of the section at t = {t:e} did not reach the center"),
    })
}

/// Covariance `[s11, s12, s22]` of the uniform measure on a polygon.
pub fn polygon_covariance(poly: &[[f64; 2]]) -> [f64; 3] {
    let c = polygon_centroid(poly);
    let (mut a, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0);
    for (p, q) in edges(poly) {
        let (x0, y0, x1, y1) = (p[0] - c[0], p[1] - c[1], q[0] - c[0], q[1] - c[1]);
        let cr = x0 * y1 - x1 * y0;
        a += 0.5 * cr;
        sxx += cr * (x0 * x0 + x0 * x1 + x1 * x1) / 12.0;
        syy += cr * (y0 * y0 + y0 * y1 + y1 * y1) / 12.0;
        sxy += cr * (x0 * y1 + 2.0 * x0 * y0 + 2.0 * x1 * y1 + x1 * y0) / 24.0;
    }
    [sxx / a, sxy / a, syy / a]
}

/// An ellipse `center + r A B_1` with `A` unimodular and lower triangular
/// with positive diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JohnFrame {
    pub center: [f64; 2],
    /// `[[a11, 0], [a21, a22]]`.
    pub a: [[f64; 2]; 2],
    pub r: f64,
    /// Smallest `k` found with `k^-1 E ⊂ shape ⊂ k E` (both about the center).
    pub sandwich_constant: f64,
}

impl JohnFrame {
    /// Frame of the ellipse `{x : x^T Q^{-1} x <= 1}` (`Q = L L^T`).
    pub fn from_q(center: [f64; 2], q: [f64; 3]) -> Result<Self> {
        let l11 = q[0].sqrt();
        let l21 = q[1] / l11;
        let l22 = (q[2] - l21 * l21).sqrt();
        let det = l11 * l22;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Degeneracy("ellipse matrix is not positive definite".into()));
        }
        let r = det.sqrt();
        Ok(Self {
            center,
            a: [[l11 / r, 0.0], [l21 / r, l22 / r]],
            r,
            sandwich_constant: f64::NAN,
        })
    }

    /// `Q = r^2 A A^T` as `[q11, q12, q22]`.
    pub fn q(&self) -> [f64; 3] {
        let [[a11, _], [a21, a22]] = self.a;
        let r2 = self.r * self.r;
        [r2 * a11 * a11, r2 * a11 * a21, r2 * (a21 * a21 + a22 * a22)]
    }

    /// Operator norm `|A|_2`.
    pub fn norm(&self) -> f64 {
        let [[a11, _], [a21, a22]] = self.a;
        let (p, q, s) = (a11 * a11, a11 * a21, a21 * a21 + a22 * a22);
        let tr = p + s;
        let disc = ((p - s) * (p - s) + 4.0 * q * q).sqrt();
        (0.5 * (tr + disc)).sqrt()
    }

    /// Axis ratio of the ellipse, `|A|_2^2`.
    pub fn eccentricity(&self) -> f64 {
        self.norm().powi(2)
    }

    /// Semi-axes `(long, short)` and the unit direction of the long axis.
    pub fn axes(&self) -> (f64, f64, [f64; 2]) {
        let [q11, q12, q22] = self.q();
        let tr = q11 + q22;
        let disc = ((q11 - q22) * (q11 - q22) + 4.0 * q12 * q12).sqrt();
        let l1 = 0.5 * (tr + disc);
        let l2 = (q11 * q22 - q12 * q12) / l1;
        let dir = if q12.abs() > 1e-300 {
            unit([l1 - q22, q12])
        } else if q11 >= q22 {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        };
        (l1.sqrt(), l2.sqrt(), dir)
    }

    /// Support function of the ellipse about its center.
    pub fn support(&self, dir: [f64; 2]) -> f64 {
        let [q11, q12, q22] = self.q();
        (q11 * dir[0] * dir[0] + 2.0 * q12 * dir[0] * dir[1] + q22 * dir[1] * dir[1]).sqrt()
    }
}

/// Maximal-area ellipse inscribed in the polygon and centered at the shape's
/// center, found by a barrier method in the three entries of `Q`.
pub fn john_ellipse(shape: &SectionShape) -> Result<JohnFrame> {
    let c = shape.center;
    let mut rows = Vec::with_capacity(shape.polygon.len());
    let min_edge = 1e-12 * shape.outer_radius();
    for (a, b) in edges(&shape.polygon) {
        if (b[0] - a[0]).hypot(b[1] - a[1]) <= min_edge {
            continue;
        }
        let (n, off) = edge_line(a, b);
        let d = off - (n[0] * c[0] + n[1] * c[1]);
        if !(d > 0.0) {
            return Err(Error::Degeneracy("the center is not interior to the polygon".into()));
        }
        rows.push((n, d));
    }
    if rows.len() < 3 {
        return Err(Error::Degeneracy("polygon has fewer than three edges".into()));
    }
    let scale = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    if !(scale > 1e-14 * shape.outer_radius()) {
        return Err(Error::Degeneracy("polygon has near-zero width".into()));
    }
    // constraint a_i . q <= b_i in coordinates scaled by `scale`
    let cons: Vec<(Vector3<f64>, f64)> = rows
        .iter()
        .map(|(n, d)| {
            let dd = d / scale;
            (Vector3::new(n[0] * n[0], 2.0 * n[0] * n[1], n[1] * n[1]), dd * dd)
        })
        .collect();
    let mut q = Vector3::new(0.5, 0.0, 0.5);
    let phi = |q: &Vector3<f64>, tau: f64| -> Option<f64> {
        let det = q[0] * q[2] - q[1] * q[1];
        if !(det > 0.0 && q[0] > 0.0) {
            return None;
        }
        let mut f = -tau * det.ln();
        for (a, b) in &cons {
            let g = b - a.dot(q);
            if !(g > 0.0) {
                return None;
            }
            f -= g.ln();
        }
        Some(f)
    };
    let m = cons.len() as f64;
    let mut tau = 1.0;
    while m / tau > 1e-13 {
        for _ in 0..100 {
            let det = q[0] * q[2] - q[1] * q[1];
            let p = [[q[2] / det, -q[1] / det], [-q[1] / det, q[0] / det]];
            let mut grad = Vector3::new(-tau * p[0][0], -tau * 2.0 * p[0][1], -tau * p[1][1]);
            let e = [
                [[1.0, 0.0], [0.0, 0.0]],
                [[0.0, 1.0], [1.0, 0.0]],
                [[0.0, 0.0], [0.0, 1.0]],
            ];
            let pe: Vec<[[f64; 2]; 2]> = e.iter().map(|ea| mat_mul(p, *ea)).collect();
            let mut hess = Matrix3::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    let mm = mat_mul(pe[i], pe[j]);
                    hess[(i, j)] = tau * (mm[0][0] + mm[1][1]);
                }
            }
            for (a, b) in &cons {
                let g = b - a.dot(&q);
                grad += a / g;
                hess += a * a.transpose() / (g * g);
            }
            let Some(step) = hess.cholesky().map(|ch| -ch.solve(&grad)) else {
                return Err(Error::Degeneracy("barrier Hessian lost definiteness".into()));
            };
            let decrement = -grad.dot(&step);
            if decrement < 1e-14 {
                break;
            }
            let f0 = phi(&q, tau).expect("iterate stays feasible");
            let mut s = 1.0;
            loop {
                let trial = q + step * s;
                if let Some(f) = phi(&trial, tau) {
                    if f <= f0 - 0.25 * s * decrement {
                        q = trial;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-12 {
                    break;
                }
            }
            if s < 1e-12 {
                break;
            }
        }
        tau *= 10.0;
    }
    let s2 = scale * scale;
    let mut frame = JohnFrame::from_q(c, [q[0] * s2, q[1] * s2, q[2] * s2])?;
    frame.sandwich_constant = sandwich(shape, &frame);
    Ok(frame)
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Ratio bounds of the support functions over 720 directions.
fn sandwich(shape: &SectionShape, frame: &JohnFrame) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for k in 0..720 {
        let th = k as f64 * std::f64::consts::PI / 360.0;
        let d = [th.cos(), th.sin()];
        let ratio = shape.support(d) / frame.support(d);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    hi.max(1.0 / lo)
}

/// Which family of sections a trace uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    /// `S_t` with the tangent plane at the center.
    Sublevel,
    /// `T_t` with centroid at the center.
    Centered,
}

impl SectionKind {
    /// `T_t` for `alpha <= -1`, where `|x|^alpha dx` stops being doubling.
    pub fn default_for(regime: &Regime) -> Self {
        if regime.alpha <= -1.0 {
            SectionKind::Centered
        } else {
            SectionKind::Sublevel
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub frame: JohnFrame,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Half-widths of the section along the long and short frame axes.
    pub half_widths: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EccentricityTrace {
    pub kind: SectionKind,
    pub center: [f64; 2],
    pub points: Vec<TracePoint>,
    pub warnings: Vec<String>,
}

/// Minimum number of cells a section must span in every direction.
pub const MIN_SECTION_CELLS: f64 = 8.0;

/// John frames of the sections at the given heights (largest first).
/// Sections touching the grid edge are skipped; the trace stops at the
/// first section narrower than [`MIN_SECTION_CELLS`] cells.
pub fn eccentricity_trace(
    field: &ScalarField,
    center: [f64; 2],
    t_values: &[f64],
    kind: SectionKind,
) -> Result<EccentricityTrace> {
    if t_values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("section heights must be strictly decreasing".into()));
    }
    let h = field.grid.h();
    let mut trace = EccentricityTrace {
        kind,
        center,
        points: Vec::new(),
        warnings: Vec::new(),
    };
    for &t in t_values {
        let shape = match kind {
            SectionKind::Sublevel => section(field, center, t),
            SectionKind::Centered => centered_section_with(field, center, t, &CenteredOptions::default()),
        };
        let shape = match shape {
            Ok(s) => s,
            Err(Error::Truncation { .. }) => {
                trace.warnings.push(format!("t = {t:e}: section touches the grid edge, skipped"));
                continue;
            }
            Err(Error::Resolution(m)) => {
                trace.warnings.push(format!("t = {t:e}: {m}; trace truncated"));
                break;
            }
            Err(e) => return Err(e),
        };
        if shape.min_width() < MIN_SECTION_CELLS * h {
            trace.warnings.push(format!(
                "t = {t:e}: section spans fewer than {MIN_SECTION_CELLS} cells; trace truncated"
            ));
            break;
        }
        let frame = john_ellipse(&shape)?;
        let (_, _, dir) = frame.axes();
        let perp = [-dir[1], dir[0]];
        let hw = |d: [f64; 2]| 0.5 * (shape.support(d) + shape.support([-d[0], -d[1]]));
        trace.points.push(TracePoint {
            t,
            frame,
            inner_radius: shape.inner_radius(),
            outer_radius: shape.outer_radius(),
            half_widths: [hw(dir), hw(perp)],
        });
    }
    Ok(trace)
}

impl EccentricityTrace {
    /// CSV columns `t, a11, a21, a22, r, norm_A, sandwich_k`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        w.write_record(["t", "a11", "a21", "a22", "r", "norm_A", "sandwich_k"])?;
        for p in &self.points {
            let f = &p.frame;
            w.serialize((p.t, f.a[0][0], f.a[1][0], f.a[1][1], f.r, f.norm(), f.sandwich_constant))?;
        }
        w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
        Ok(())
    }
}

/// Thresholds of the behavior classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifierOptions {
    /// Largest axis ratio compatible with radial behavior.
    pub e_max: f64,
    /// Minimum coefficient of determination for a trend to count.
    pub r2_min: f64,
    /// Slopes of log(axis ratio) against log(1/t) at or above this, with a
    /// good fit, are non-radial.
    pub slope_nonradial: f64,
    /// Slopes at or below this are flat.
    pub slope_flat: f64,
    /// The trace must span this many decades of t.
    pub min_decades: f64,
    /// The trend is fitted over this many decades at the small-t end.
    pub fit_decades: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self {
            e_max: 10.0,
            r2_min: 0.9,
            slope_nonradial: 0.1,
            slope_flat: 0.03,
            min_decades: 1.5,
            fit_decades: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Least-squares line through `(x, y)` pairs.
pub fn fit_line(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
        n: points.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// `c |x|^beta <= u <= C |x|^beta` on the traced sections.
    Radial { c_fit: f64, big_c_fit: f64 },
    /// Anisotropic profile `a |x1|^(2+alpha)/((alpha+2)(alpha+1)) + x2^2/(2a)`
    /// in the frame of the smallest section.
    NonRadial {
        a: f64,
        frame: JohnFrame,
        slope_fit: f64,
        /// `2(2+alpha)(1+alpha) b1 b2` for the fitted coefficients; 1 for an
        /// exact profile.
        product_relation: f64,
    },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BehaviorReport {
    pub verdict: Verdict,
    /// `(t, axis ratio)` per traced section.
    pub trace: Vec<(f64, f64)>,
    pub fit: LineFit,
    pub max_eccentricity: f64,
    pub options: ClassifierOptions,
}

impl BehaviorReport {
    pub fn is_radial(&self) -> bool {
        matches!(self.verdict, Verdict::Radial { .. })
    }

    pub fn is_nonradial(&self) -> bool {
        matches!(self.verdict, Verdict::NonRadial { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self.verdict, Verdict::Inconclusive { .. })
    }
}

/// Radial, non-radial or inconclusive, from the growth of the axis ratio as
/// `t` decreases.
pub fn classify_behavior(
    trace: &EccentricityTrace,
    regime: &Regime,
    opts: &ClassifierOptions,
) -> Result<BehaviorReport> {
    let pts = &trace.points;
    if pts.len() < 3 {
        return Err(Error::Resolution(format!("trace has {} sections", pts.len())));
    }
    let t_max = pts[0].t;
    let t_min = pts[pts.len() - 1].t;
    let decades = (t_max / t_min).log10();
    if decades < opts.min_decades - 1e-9 {
        return Err(Error::Resolution(format!(
            "trace spans {decades:.2} decades of t, need {}",
            opts.min_decades
        )));
    }
    let series: Vec<(f64, f64)> = pts.iter().map(|p| (p.t, p.frame.eccentricity())).collect();
    let tail: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t <= t_min * 10f64.powf(opts.fit_decades) * (1.0 + 1e-12))
        .map(|(t, e)| ((1.0 / t).ln(), e.ln()))
        .collect();
    let fit = if tail.len() >= 3 {
        fit_line(&tail)
    } else {
        let all: Vec<(f64, f64)> = series.iter().map(|(t, e)| ((1.0 / t).ln(), e.ln())).collect();
        fit_line(&all)
    };
    let max_e = series.iter().map(|s| s.1).fold(0.0, f64::max);
    let trending = fit.slope > opts.slope_flat;
    let verdict = if max_e <= opts.e_max && !trending {
        let c_fit = pts
            .iter()
            .map(|p| p.t / p.outer_radius.powf(regime.beta))
            .fold(f64::INFINITY, f64::min);
        let big_c_fit = pts
            .iter()
            .map(|p| p.t / p.inner_radius.powf(regime.beta))
            .fold(0.0, f64::max);
        Verdict::Radial { c_fit, big_c_fit }
    } else if max_e > opts.e_max || (fit.slope >= opts.slope_nonradial && fit.r2 >= opts.r2_min) {
        let last = &pts[pts.len() - 1];
        let (a, product_relation) = profile_coefficient(last, regime);
        Verdict::NonRadial {
            a,
            frame: last.frame,
            slope_fit: fit.slope,
            product_relation,
        }
    } else {
        Verdict::Inconclusive {
            reason: format!(
                "axis ratio grows with slope {:.3} (R^2 = {:.2}) while staying below {}",
                fit.slope, fit.r2, opts.e_max
            ),
        }
    };
    Ok(BehaviorReport {
        verdict,
        trace: series,
        fit,
        max_eccentricity: max_e,
        options: *opts,
    })
}

/// Reads `b1 |x1|^(2+alpha) + b2 x2^2 = t` off the half-widths of a section
/// (the long axis is `x1` for `alpha > 0`) and returns the geometric mean of
/// the two estimates of `a` and the product relation.
fn profile_coefficient(p: &TracePoint, regime: &Regime) -> (f64, f64) {
    let alpha = regime.alpha;
    let [long, short] = p.half_widths;
    let (w1, w2) = if alpha >= 0.0 { (long, short) } else { (short, long) };
    let b1 = p.t / w1.powf(2.0 + alpha);
    let b2 = p.t / (w2 * w2);
    let a_from_b1 = b1 * (alpha + 2.0) * (alpha + 1.0);
    let a_from_b2 = 1.0 / (2.0 * b2);
    ((a_from_b1 * a_from_b2).sqrt(), 2.0 * (2.0 + alpha) * (1.0 + alpha) * b1 * b2)
}

/// `mu(P) = int_P |x|^alpha dx` over a counter-clockwise polygon, summed over
/// the signed fan from the origin. Integrating `r^(alpha+1)` exactly along
/// each ray leaves, for the edge `[a, b]`,
/// `(a x b)/(alpha+2) int_0^1 |a + s(b - a)|^alpha ds`, which is integrated
/// adaptively with a break at the point nearest the origin.
pub fn mu_measure(polygon: &[[f64; 2]], alpha: f64) -> Result<f64> {
    if alpha <= -2.0 {
        return Err(Error::Domain(format!("|x|^alpha is not locally integrable for alpha = {alpha}")));
    }
    let mut total = 0.0;
    for (a, b) in edges(polygon) {
        let cross = a[0] * b[1] - a[1] * b[0];
        let (ra, rb) = (a[0].hypot(a[1]), b[0].hypot(b[1]));
        let far = ra.max(rb);
        // a fan triangle with a vertex at the origin has measure of the
        // order of that vertex's distance
        if cross == 0.0 || ra.min(rb) <= 1e-12 * far {
            continue;
        }
        let e = [b[0] - a[0], b[1] - a[1]];
        let len2 = e[0] * e[0] + e[1] * e[1];
        let nearest = -(a[0] * e[0] + a[1] * e[1]) / len2;
        let quad = Quadrature::with_tolerance(1e-16 * far.powf(alpha), 1e-12);
        let f = |s: f64| (a[0] + s * e[0]).hypot(a[1] + s * e[1]).powf(alpha);
        let r = quad.integrate_with_breaks(f, 0.0, 1.0, &[nearest])?;
        total += cross * r.value / (alpha + 2.0);
    }
    Ok(total)
}

/// `center + R(angle) diag(semi_axes) B_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    pub angle: f64,
}

impl Ellipse {
    /// Counter-clockwise polygon with `n` vertices on the ellipse.
    pub fn polygon(&self, n: usize) -> Vec<[f64; 2]> {
        let (s, c) = self.angle.sin_cos();
        (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let x = self.semi_axes[0] * th.cos();
                let y = self.semi_axes[1] * th.sin();
                [self.center[0] + c * x - s * y, self.center[1] + s * x + c * y]
            })
            .collect()
    }

    pub fn dilated(&self, k: f64) -> Self {
        Self {
            semi_axes: [k * self.semi_axes[0], k * self.semi_axes[1]],
            ..*self
        }
    }
}

/// Sutherland-Hodgman clip of `subject` against the convex counter-clockwise
/// polygon `clip`.
pub fn clip_polygon(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = subject.to_vec();
    for (a, b) in edges(clip) {
        if out.is_empty() {
            break;
        }
        let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut out);
        let m = input.len();
        for i in 0..m {
            let p = input[i];
            let q = input[(i + 1) % m];
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let s = sp / (sp - sq);
                out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
            }
        }
    }
    out
}

/// Vertices used to polygonize ellipses and the unit disc.
pub const ELLIPSE_VERTICES: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingReport {
    pub alpha: f64,
    /// `mu(E) / mu(2E ∩ B_1)` per family member.
    pub ratios: Vec<f64>,
    pub infimum: f64,
}

/// Doubling ratios `mu(x0 + E) / mu((x0 + 2E) ∩ B_1)`.
pub fn doubling_check(alpha: f64, family: &[Ellipse]) -> Result<DoublingReport> {
    let disc = Ellipse {
        center: [0.0, 0.0],
        semi_axes: [1.0, 1.0],
        angle: 0.0,
    }
    .polygon(ELLIPSE_VERTICES);
    let mut ratios = Vec::with_capacity(family.len());
    for e in family {
        let small = clip_polygon(&e.polygon(ELLIPSE_VERTICES), &disc);
        let big = clip_polygon(&e.dilated(2.0).polygon(ELLIPSE_VERTICES), &disc);
        if small.len() < 3 || big.len() < 3 {
            return Err(Error::Domain(format!("ellipse at {:?} misses the unit disc", e.center)));
        }
        ratios.push(mu_measure(&small, alpha)? / mu_measure(&big, alpha)?);
    }
    let infimum = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DoublingReport { alpha, ratios, infimum })
}

/// Ellipses with semi-axes `(length, length 10^-k)` along `x1`, centered at
/// `(1.5 length, 0)`: the set misses the origin while its double contains it.
pub fn thin_ellipse_family(length: f64, exponents: &[f64]) -> Vec<Ellipse> {
    exponents
        .iter()
        .map(|k| Ellipse {
            center: [1.5 * length, 0.0],
            semi_axes: [length, length * 10f64.powf(-k)],
            angle: 0.0,
        })
        .collect()
}

/// For each aspect exponent, the offset (in units of `length`) from
/// `offsets` whose ellipse minimizes the doubling ratio.
pub fn witness_search(alpha: f64, length: f64, exponents: &[f64], offsets: &[f64]) -> Result<Vec<(Ellipse, f64)>> {
    exponents
        .iter()
        .map(|&k| {
            let candidates: Vec<Ellipse> = offsets
                .iter()
                .map(|&o| Ellipse {
                    center: [o * length, 0.0],
                    semi_axes: [length, length * 10f64.powf(-k)],
                    angle: 0.0,
                })
                .collect();
            let report = doubling_check(alpha, &candidates)?;
            let (i, r) = report
                .ratios
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("offsets are not empty");
            Ok((candidates[i], *r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DiscGrid;

    #[test]
    fn hull_and_area() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.5, 0.0]];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!((polygon_area(&h) - 1.0).abs() < 1e-15);
        let c = polygon_centroid(&h);
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        let cov = polygon_covariance(&h);
        assert!((cov[0] - 1.0 / 12.0).abs() < 1e-14 && cov[1].abs() < 1e-14);
    }

    #[test]
    fn quadratic_section_is_an_ellipse() {
        let g = DiscGrid::cartesian(200, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |p| 0.5 * (p[0] * p[0] + 4.0 * p[1] * p[1]));
        let s = section(&f, [0.0, 0.0], 0.02).unwrap();
        assert!((s.support([1.0, 0.0]) - 0.2).abs() < 1e-4);
        assert!((s.support([0.0, 1.0]) - 0.1).abs() < 1e-4);
        let fr = john_ellipse(&s).unwrap();
        assert!((fr.eccentricity() - 2.0).abs() < 1e-2);
    }

    #[test]
    fn truncated_sections_error() {
        let g = DiscGrid::cartesian(40, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0] * p[0] + p[1] * p[1]);
        assert!(matches!(section(&f, [0.0, 0.0], 2.0), Err(Error::Truncation { .. })));
    }

    #[test]
    fn clip_square_by_square() {
        let a = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        let b = [[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]];
        assert!((polygon_area(&clip_polygon(&a, &b)) - 1.0).abs() < 1e-15);
    }
}

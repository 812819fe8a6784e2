//! Dirichlet solver for `det D^2 u = f` on a disc.
//!
//! The discrete operator is the monotone wide-stencil determinant
//!
//! ```text
//! MA_h u = min over orthogonal direction pairs (e, e') of F(D_e u, D_e' u),
//! F(a, b) = max(a, 0) max(b, 0) + min(a, 0) + min(b, 0),
//! ```
//!
//! where `D_e` is a second difference along `e` whose arms are cut at the
//! circle (Shortley-Weller) and closed with the Dirichlet data. The nonlinear
//! system is solved by damped Newton from the solution of `Lap u = 2 sqrt(f)`.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::ScalarField;
use crate::grid::{DiscGrid, GridKind};
use crate::legendre::circle_exit;
use crate::linalg::SparseSystem;
use crate::quadrature::Quadrature;

pub type BoundaryFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Dirichlet data on the circle.
#[derive(Clone)]
pub enum Boundary {
    /// Any function of the boundary point.
    Function(BoundaryFn),
    /// Values at `theta_j = 2 pi j / n`, interpolated by periodic cubics.
    Samples(Vec<f64>),
}

impl std::fmt::Debug for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Function(_) => write!(f, "Boundary::Function"),
            Boundary::Samples(s) => write!(f, "Boundary::Samples({} values)", s.len()),
        }
    }
}

impl Boundary {
    pub fn from_fn(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Boundary::Function(Arc::new(f))
    }

    pub fn from_expr(e: Expr) -> Self {
        Self::from_fn(move |p| e.eval(p).unwrap_or(f64::NAN))
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            Boundary::Function(f) => f(p),
            Boundary::Samples(v) => {
                let n = v.len();
                let t = p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU) * n as f64
                    / std::f64::consts::TAU;
                let j = t.floor();
                let s = t - j;
                let j = j as isize;
                let at = |k: isize| v[(j + k).rem_euclid(n as isize) as usize];
                // cubic Lagrange through j-1, j, j+1, j+2
                let w = [
                    -s * (s - 1.0) * (s - 2.0) / 6.0,
                    (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
                    -(s + 1.0) * s * (s - 2.0) / 2.0,
                    (s + 1.0) * s * (s - 1.0) / 6.0,
                ];
                w[0] * at(-1) + w[1] * at(0) + w[2] * at(1) + w[3] * at(2)
            }
        }
    }

    /// Largest jump between `n` consecutive samples on the unit-radius circle
    /// of the given radius.
    pub fn max_jump(&self, radius: f64, n: usize) -> f64 {
        let pt = |k: usize| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        };
        (0..n)
            .map(|k| (self.eval(pt(k + 1)) - self.eval(pt(k))).abs())
            .fold(0.0, f64::max)
    }
}

/// Right-hand side of the equation.
#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    /// `c |x|^alpha`.
    Power { c: f64, alpha: f64 },
    /// `c |x1|^alpha`.
    PowerX1 { c: f64, alpha: f64 },
    /// Nodal values on the problem grid.
    Grid(ScalarField),
}

/// Mean of `|x|^alpha` over the square `[-h/2, h/2]^2`.
pub fn origin_cell_average(alpha: f64, h: f64) -> f64 {
    let half = 0.5 * h;
    // eight triangles with apex at the origin, integrated in polar coordinates
    let angular = Quadrature::default()
        .integrate(|phi: f64| phi.cos().powf(-(alpha + 2.0)), 0.0, FRAC_PI_4)
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    8.0 * half.powf(alpha + 2.0) / (alpha + 2.0) * angular / (h * h)
}

impl Rhs {
    /// True for `c |x|^alpha` with `alpha < 0`.
    pub fn singular_at_origin(&self) -> bool {
        matches!(self, Rhs::Power { alpha, .. } if *alpha < 0.0)
    }

    /// Nodal right-hand side; the node at the origin (or on `x1 = 0` for
    /// [`Rhs::PowerX1`] with `alpha < 0`) receives the exact cell average.
    pub fn node_values(&self, grid: &DiscGrid) -> Result<Vec<f64>> {
        let h = grid.h();
        let near = |v: f64| v.abs() < 1e-9 * h;
        match self {
            Rhs::Power { c, alpha } => {
                let avg = origin_cell_average(*alpha, h);
                Ok((0..grid.len())
                    .map(|i| {
                        let p = grid.point(i);
                        if near(p[0]) && near(p[1]) {
                            c * avg
                        } else {
                            c * p[0].hypot(p[1]).powf(*alpha)
                        }
                    })
                    .collect())
            }
            Rhs::PowerX1 { c, alpha } => {
                let avg = if *alpha < 0.0 {
                    (0.5 * h).powf(*alpha) / (alpha + 1.0)
                } else {
                    0.0
                };
                if *alpha <= -1.0 {
                    return Err(Error::Domain("|x1|^alpha is not integrable for alpha <= -1".into()));
                }
                Ok((0..grid.len())
                    .map(|i| {
                        let p = grid.point(i);
                        if near(p[0]) && *alpha < 0.0 {
                            c * avg
                        } else {
                            c * p[0].abs().powf(*alpha)
                        }
                    })
                    .collect())
            }
            Rhs::Grid(f) => {
                if f.grid != *grid {
                    return Err(Error::GridMismatch(format!(
                        "right-hand side on {} but problem on {}",
                        f.grid, grid
                    )));
                }
                Ok(f.values.clone())
            }
        }
    }
}

/// `det D^2 u = rhs` in the disc of `grid`, `u = boundary` on its circle.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub rhs: Rhs,
    pub boundary: Boundary,
    pub grid: DiscGrid,
}

impl DirichletProblem {
    pub fn new(rhs: Rhs, boundary: Boundary, grid: DiscGrid) -> Result<Self> {
        if !grid.is_cartesian() {
            return Err(Error::GridMismatch("the Monge-Ampere solver needs a Cartesian grid".into()));
        }
        if let Rhs::Power { alpha, .. } | Rhs::PowerX1 { alpha, .. } = rhs {
            if !(alpha > -2.0) {
                return Err(Error::Domain(format!("alpha must exceed -2, got {alpha}")));
            }
        }
        let problem = Self { rhs, boundary, grid };
        let f = problem.rhs.node_values(&grid)?;
        for i in 0..grid.len() {
            let p = grid.point(i);
            if grid.in_disc(p) && !(f[i] >= 0.0 && f[i].is_finite()) {
                return Err(Error::Domain(format!(
                    "right-hand side {} at ({:.4}, {:.4}) is not a finite non-negative number",
                    f[i], p[0], p[1]
                )));
            }
        }
        let jump = problem.boundary.max_jump(grid.radius, 4096);
        if !jump.is_finite() {
            return Err(Error::Domain("boundary data is not finite".into()));
        }
        Ok(problem)
    }

    /// Parses a key-value problem description:
    ///
    /// ```text
    /// alpha = 2
    /// c = 1                       # optional, default 1
    /// rhs = power                 # or power_x1
    /// boundary = 0.2357*r^3 - 0.05*cos(2*theta)
    /// grid = cartesian n=256 radius=1
    /// ```
    ///
    /// `boundary = samples: v0, v1, ...` gives equally spaced values in `theta`;
    /// `grid = 256` is short for a unit-disc Cartesian grid.
    pub fn parse(text: &str) -> Result<Self> {
        let mut alpha = None;
        let mut c = 1.0;
        let mut kind = "power".to_string();
        let mut boundary = None;
        let mut grid = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: `{v}` is not a number", lineno + 1)))
            };
            match key {
                "alpha" => alpha = Some(num(value)?),
                "c" => c = num(value)?,
                "rhs" => kind = value.to_string(),
                "boundary" => {
                    boundary = Some(if let Some(list) = value.strip_prefix("samples:") {
                        let v = list
                            .split(|ch: char| ch == ',' || ch.is_whitespace())
                            .filter(|s| !s.is_empty())
                            .map(num)
                            .collect::<Result<Vec<_>>>()?;
                        if v.len() < 4 {
                            return Err(Error::Parse("boundary samples need at least 4 values".into()));
                        }
                        Boundary::Samples(v)
                    } else {
                        Boundary::from_expr(Expr::parse(value.strip_prefix("expr:").unwrap_or(value).trim())?)
                    })
                }
                "grid" => {
                    grid = Some(if let Ok(n) = value.parse::<usize>() {
                        DiscGrid::cartesian(n, 1.0)?
                    } else {
                        DiscGrid::parse_header(&format!("grid {value}"))?
                    })
                }
                other => {
                    return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1)))
                }
            }
        }
        let alpha = alpha.ok_or_else(|| Error::Parse("missing `alpha`".into()))?;
        let rhs = match kind.as_str() {
            "power" => Rhs::Power { c, alpha },
            "power_x1" => Rhs::PowerX1 { c, alpha },
            other => return Err(Error::Parse(format!("unknown rhs `{other}`"))),
        };
        Self::new(
            rhs,
            boundary.ok_or_else(|| Error::Parse("missing `boundary`".into()))?,
            grid.ok_or_else(|| Error::Parse("missing `grid`".into()))?,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Newton stops once the largest update is below `tol * h^2`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Directions are the primitive integer vectors of sup-norm at most this
    /// width: 1 gives the 9-point stencil, 2 (default) eight directions.
    pub stencil_width: usize,
    /// Residuals are reported on nodes at least this many cells away from
    /// the origin and from the circle.
    pub trust_cells: f64,
    /// When the right-hand side is singular at the origin, nodes within this
    /// many cells of it use only the axis pair (default: the origin node
    /// alone). Where `u` is not smooth, arms of
    /// different lengths see the kink at different scales and the minimum over
    /// pairs would select arm length rather than direction.
    pub origin_axis_cells: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iterations: 500,
            stencil_width: 2,
            trust_cells: 3.0,
            origin_axis_cells: 0.5,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Discrete convex solution with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexSolution {
    #[serde(skip)]
    pub field: ScalarField,
    pub residual_sup: f64,
    pub iterations: usize,
    /// Smallest directional second difference times `h^2`.
    pub convexity_margin: f64,
    pub converged: bool,
    pub last_update: f64,
}

impl ConvexSolution {
    /// Writes the field in the text format and a JSON sidecar with the
    /// diagnostics next to it (`<path>.json`).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.field.save(path)?;
        let side = path.with_extension("json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&side, text).map_err(|e| Error::io(&side, e))
    }
}

const NO_NODE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Arm {
    len: f64,
    target: u32,
    value: f64,
}

/// Stencil geometry of a problem, shared by the operator and its Jacobian.
struct Discretization {
    grid: DiscGrid,
    /// Grid index of every unknown.
    nodes: Vec<usize>,
    n_dirs: usize,
    /// Number of direction pairs used at each unknown.
    active_pairs: Vec<u8>,
    /// `arms[(k * n_dirs + d) * 2 + side]`, side 0 forward, 1 backward.
    arms: Vec<Arm>,
    rhs: Vec<f64>,
    trusted: Vec<bool>,
    /// Values at grid nodes that are not unknowns but lie on or very near the circle.
    rim: Vec<(usize, f64)>,
}

/// Orthogonal direction pairs `(e, e')` of a width-`w` stencil.
pub fn direction_pairs(width: usize) -> Vec<([i64; 2], [i64; 2])> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let w = width.max(1) as i64;
    let mut out = Vec::new();
    for a in 1..=w {
        for b in 0..=w {
            if gcd(a, b) == 1 {
                out.push(([a, b], [-b, a]));
            }
        }
    }
    out.sort_by(|p, q| {
        let ang = |v: [i64; 2]| (v[1] as f64).atan2(v[0] as f64);
        ang(p.0).total_cmp(&ang(q.0))
    });
    out
}

impl Discretization {
    fn new(problem: &DirichletProblem, opts: &SolverOptions) -> Result<Self> {
        let grid = problem.grid;
        let GridKind::Cartesian { n } = grid.kind else {
            return Err(Error::GridMismatch("Cartesian grid required".into()));
        };
        let h = grid.h();
        let radius = grid.radius;
        let f_all = problem.rhs.node_values(&grid)?;
        let mut unknown = vec![NO_NODE; grid.len()];
        let mut nodes = Vec::new();
        let mut rim = Vec::new();
        for i in 0..grid.len() {
            let p = grid.point(i);
            let dist = radius - p[0].hypot(p[1]);
            if dist > 1e-3 * h {
                unknown[i] = nodes.len() as u32;
                nodes.push(i);
            } else if dist > -h {
                rim.push((i, problem.boundary.eval(p)));
            }
        }
        let pairs = direction_pairs(opts.stencil_width);
        let dirs: Vec<[i64; 2]> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
        let n_dirs = dirs.len();
        let mut arms = Vec::with_capacity(nodes.len() * n_dirs * 2);
        for &idx in &nodes {
            let (row, col) = grid.row_col(idx);
            let p = grid.point(idx);
            for e in &dirs {
                let len_full = h * ((e[0] * e[0] + e[1] * e[1]) as f64).sqrt();
                for sign in [1i64, -1] {
                    let (dc, dr) = (sign * e[0], sign * e[1]);
                    let (rr, cc) = (row as i64 + dr, col as i64 + dc);
                    let target = if rr >= 0 && cc >= 0 && rr <= n as i64 && cc <= n as i64 {
                        unknown[grid.index(rr as usize, cc as usize)]
                    } else {
                        NO_NODE
                    };
                    if target != NO_NODE {
                        arms.push(Arm {
                            len: len_full,
                            target,
                            value: 0.0,
                        });
                    } else {
                        let unit = [dc as f64 * h / len_full, dr as f64 * h / len_full];
                        let s = circle_exit(p, unit, radius).min(len_full).max(1e-3 * h);
                        let q = [p[0] + s * unit[0], p[1] + s * unit[1]];
                        let value = problem.boundary.eval(q);
                        if !value.is_finite() {
                            return Err(Error::Domain(format!(
                                "boundary data is not finite at ({:.4}, {:.4})",
                                q[0], q[1]
                            )));
                        }
                        arms.push(Arm {
                            len: s,
                            target: NO_NODE,
                            value,
                        });
                    }
                }
            }
        }
        let layer = opts.trust_cells * h;
        let trusted = nodes
            .iter()
            .map(|&i| {
                let r = grid.point(i)[0].hypot(grid.point(i)[1]);
                r >= layer && radius - r >= layer
            })
            .collect();
        let rhs = nodes.iter().map(|&i| f_all[i]).collect();
        let axis_radius = if problem.rhs.singular_at_origin() {
            opts.origin_axis_cells * h * (1.0 + 1e-9)
        } else {
            -1.0
        };
        let active_pairs = nodes
            .iter()
            .map(|&i| {
                let p = grid.point(i);
                if p[0].hypot(p[1]) <= axis_radius {
                    1
                } else {
                    pairs.len() as u8
                }
            })
            .collect();
        Ok(Self {
            grid,
            nodes,
            n_dirs,
            active_pairs,
            arms,
            rhs,
            trusted,
            rim,
        })
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Second difference of `u` at unknown `k` along direction `d`, and the
    /// weights `(w_forward, w_backward)` of the two arms.
    fn second_difference(&self, u: &[f64], k: usize, d: usize) -> (f64, f64, f64, Arm, Arm) {
        let base = (k * self.n_dirs + d) * 2;
        let (fw, bw) = (self.arms[base], self.arms[base + 1]);
        let val = |a: &Arm| if a.target == NO_NODE { a.value } else { u[a.target as usize] };
        let sum = fw.len + bw.len;
        let cp = 2.0 / (fw.len * sum);
        let cm = 2.0 / (bw.len * sum);
        let uk = u[k];
        (cp * (val(&fw) - uk) + cm * (val(&bw) - uk), cp, cm, fw, bw)
    }

    /// `MA_h u - f` at every unknown, optionally with the Jacobian of the
    /// active direction pair.
    fn residual(&self, u: &[f64], jac: Option<&mut SparseSystem>) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let mut jac = jac;
        for k in 0..self.len() {
            let mut best = f64::INFINITY;
            let mut best_pair = 0;
            let mut best_ab = (0.0, 0.0);
            for pair in 0..self.active_pairs[k] as usize {
                let a = self.second_difference(u, k, 2 * pair).0;
                let b = self.second_difference(u, k, 2 * pair + 1).0;
                let v = pair_operator(a, b);
                if v < best {
                    best = v;
                    best_pair = pair;
                    best_ab = (a, b);
                }
            }
            out[k] = best - self.rhs[k];
            if let Some(sys) = jac.as_deref_mut() {
                let (a, b) = best_ab;
                let da = if a > 0.0 { b.max(0.0) } else { 1.0 };
                let db = if b > 0.0 { a.max(0.0) } else { 1.0 };
                for (d, weight) in [(2 * best_pair, da), (2 * best_pair + 1, db)] {
                    if weight == 0.0 {
                        continue;
                    }
                    let (_, cp, cm, fw, bw) = self.second_difference(u, k, d);
                    sys.add(k, k, -weight * (cp + cm));
                    if fw.target != NO_NODE {
                        sys.add(k, fw.target as usize, weight * cp);
                    }
                    if bw.target != NO_NODE {
                        sys.add(k, bw.target as usize, weight * cm);
                    }
                }
            }
        }
        out
    }

    /// Solution of `D_x u + D_y u = 2 sqrt(f)` with the Dirichlet data.
    fn poisson_start(&self) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.len()];
        let mut sys = SparseSystem::new(self.len());
        let mut rhs = vec![0.0; self.len()];
        // directions 0 and 1 are the coordinate axes
        for k in 0..self.len() {
            rhs[k] = 2.0 * self.rhs[k].sqrt();
            for d in 0..2 {
                let (_, cp, cm, fw, bw) = self.second_difference(&zero, k, d);
                sys.add(k, k, -(cp + cm));
                for (arm, w) in [(fw, cp), (bw, cm)] {
                    if arm.target == NO_NODE {
                        rhs[k] -= w * arm.value;
                    } else {
                        sys.add(k, arm.target as usize, w);
                    }
                }
            }
        }
        sys.solve(&rhs)
    }

    fn convexity_margin(&self, u: &[f64]) -> f64 {
        let h2 = self.grid.h().powi(2);
        let mut m = f64::INFINITY;
        for k in 0..self.len() {
            for d in 0..self.n_dirs {
                m = m.min(self.second_difference(u, k, d).0 * h2);
            }
        }
        m
    }

    fn trusted_sup(&self, r: &[f64]) -> f64 {
        r.iter()
            .zip(&self.trusted)
            .filter(|(_, t)| **t)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }

    fn to_field(&self, u: &[f64]) -> ScalarField {
        let mut values = vec![f64::NAN; self.grid.len()];
        for (k, &i) in self.nodes.iter().enumerate() {
            values[i] = u[k];
        }
        for &(i, v) in &self.rim {
            values[i] = v;
        }
        ScalarField {
            grid: self.grid,
            values,
            gradient_origin: None,
        }
    }

    fn unknowns_of(&self, field: &ScalarField) -> Result<Vec<f64>> {
        if field.grid != self.grid {
            return Err(Error::GridMismatch(format!(
                "solution on {} but problem on {}",
                field.grid, self.grid
            )));
        }
        Ok(self.nodes.iter().map(|&i| field.values[i]).collect())
    }
}

fn pair_operator(a: f64, b: f64) -> f64 {
    a.max(0.0) * b.max(0.0) + a.min(0.0) + b.min(0.0)
}

/// Damped Newton iteration; returns the last iterate even without convergence.
pub fn solve_unchecked(problem: &DirichletProblem, opts: &SolverOptions) -> Result<ConvexSolution> {
    let disc = Discretization::new(problem, opts)?;
    let h2 = disc.grid.h().powi(2);
    let mut u = disc.poisson_start()?;
    let mut r = disc.residual(&u, None);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut res = sup(&r);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_update = f64::INFINITY;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut jac = SparseSystem::new(disc.len());
        disc.residual(&u, Some(&mut jac));
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = jac.solve(&neg)?;
        let step = sup(&delta);
        let mut tau = 1.0;
        let (u_next, r_next, res_next) = loop {
            let cand: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a + tau * b).collect();
            let rc = disc.residual(&cand, None);
            let rs = sup(&rc);
            if rs <= res || tau < 1.0 / 1024.0 {
                break (cand, rc, rs);
            }
            tau *= 0.5;
        };
        u = u_next;
        r = r_next;
        res = res_next;
        last_update = tau * step;
        if last_update < opts.tol * h2 {
            converged = true;
            break;
        }
    }
    Ok(ConvexSolution {
        field: disc.to_field(&u),
        residual_sup: disc.trusted_sup(&r),
        iterations,
        convexity_margin: disc.convexity_margin(&u),
        converged,
        last_update,
    })
}

/// Solves the Dirichlet problem; fails with an iteration error when Newton
/// does not meet the update tolerance within the iteration cap.
pub fn solve(problem: &DirichletProblem, opts: &SolverOptions) -> Result<ConvexSolution> {
    let sol = solve_unchecked(problem, opts)?;
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::Iteration {
            iterations: sol.iterations,
            residual: sol.residual_sup,
            reason: format!("last damped update {:e} above tolerance", sol.last_update),
        })
    }
}

/// Sup over trusted interior nodes of `|MA_h u - f|` for a field on the problem grid.
pub fn residual(field: &ScalarField, problem: &DirichletProblem, opts: &SolverOptions) -> Result<f64> {
    let disc = Discretization::new(problem, opts)?;
    let u = disc.unknowns_of(field)?;
    Ok(disc.trusted_sup(&disc.residual(&u, None)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_pairs() {
        let p = direction_pairs(1);
        assert_eq!(p, vec![([1, 0], [0, 1]), ([1, 1], [-1, 1])]);
        let p = direction_pairs(2);
        assert_eq!(p.len(), 4);
        for (a, b) in p {
            assert_eq!(a[0] * b[0] + a[1] * b[1], 0);
        }
        assert_eq!(direction_pairs(3).len(), 8);
    }

    #[test]
    fn cell_average() {
        assert!((origin_cell_average(0.0, 0.1) - 1.0).abs() < 1e-14);
        // |x|^2 = x^2 + y^2 averages to h^2/6 over the square
        let h = 0.2;
        assert!((origin_cell_average(2.0, h) - h * h / 6.0).abs() < 1e-15);
        assert!(origin_cell_average(-1.5, 0.01).is_finite());
    }

    #[test]
    fn pair_operator_is_monotone() {
        let vals = [-2.0, -0.5, 0.0, 0.3, 1.0, 4.0];
        for &a in &vals {
            for &b in &vals {
                for &d in &[0.1, 1.0] {
                    assert!(pair_operator(a + d, b) >= pair_operator(a, b));
                    assert!(pair_operator(a, b + d) >= pair_operator(a, b));
                }
            }
        }
        assert_eq!(pair_operator(2.0, 3.0), 6.0);
    }

    #[test]
    fn boundary_samples_interpolate() {
        let n = 64;
        let v: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::TAU * j as f64 / n as f64).cos())
            .collect();
        let b = Boundary::Samples(v);
        let t: f64 = 0.37;
        assert!((b.eval([t.cos(), t.sin()]) - (2.0 * t).cos()).abs() < 1e-4);
    }

    #[test]
    fn problem_file() {
        let text = "alpha = 2\n# comment\nrhs = power\nboundary = 0.2357*r^3 - 0.05*cos(2*theta)\ngrid = 16\n";
        let p = DirichletProblem::parse(text).unwrap();
        assert_eq!(p.grid, DiscGrid::cartesian(16, 1.0).unwrap());
        assert!((p.boundary.eval([1.0, 0.0]) - (0.2357 - 0.05)).abs() < 1e-12);
        let p = DirichletProblem::parse("alpha=0\nboundary=samples:1,1,1,1,1\ngrid=cartesian n=8 radius=2").unwrap();
        assert!((p.boundary.eval([0.3, 2.0]) - 1.0).abs() < 1e-14);
        assert!(DirichletProblem::parse("alpha=1\ngrid=8").is_err());
        assert!(DirichletProblem::parse("alpha=1\nboundary=r\ngrid=8\nfoo=1").is_err());
        assert!(DirichletProblem::parse("alpha=-3\nboundary=r\ngrid=8").is_err());
    }
}

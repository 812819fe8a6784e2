//! Node layouts for discrete fields.
//!
//! Cartesian grids cover the square `[-R, R]^2` with `n` cells per side and
//! flag nodes against the disc of radius `R`. Polar grids mesh the annulus
//! `r_min <= r <= R`; the origin is never a polar node. Rectangular grids are
//! tensor grids without a disc mask and carry partial Legendre duals.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    /// `(n + 1)^2` nodes on `[-R, R]^2`, spacing `h = 2R/n`.
    Cartesian { n: usize },
    /// `(n_r + 1) * n_theta` nodes, `r_i = r_min + i dr`, `theta_j = 2 pi j / n_theta`.
    Polar {
        n_r: usize,
        n_theta: usize,
        r_min: f64,
    },
    /// `(n1 + 1) * (n2 + 1)` nodes on `[lo1, hi1] x [lo2, hi2]`.
    Rect {
        n1: usize,
        n2: usize,
        lo: [f64; 2],
        hi: [f64; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscGrid {
    pub kind: GridKind,
    pub radius: f64,
}

impl DiscGrid {
    pub fn cartesian(n: usize, radius: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::Domain(format!("cartesian grid needs n >= 4, got {n}")));
        }
        check_radius(radius)?;
        Ok(Self {
            kind: GridKind::Cartesian { n },
            radius,
        })
    }

    pub fn polar(n_r: usize, n_theta: usize, r_min: f64, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        if n_r < 4 || n_theta < 8 {
            return Err(Error::Domain(format!(
                "polar grid needs n_r >= 4 and n_theta >= 8, got {n_r} x {n_theta}"
            )));
        }
        if !(r_min > 0.0 && r_min < radius) {
            return Err(Error::Domain(format!(
                "polar grid needs 0 < r_min < radius, got r_min = {r_min}"
            )));
        }
        Ok(Self {
            kind: GridKind::Polar {
                n_r,
                n_theta,
                r_min,
            },
            radius,
        })
    }

    /// Polar grid with the default punctured core `r_min = 2 dr`.
    pub fn polar_default(n_r: usize, n_theta: usize, radius: f64) -> Result<Self> {
        // r_i = r_min + i (R - r_min)/n_r with r_min = 2 (R - r_min)/n_r
        let r_min = 2.0 * radius / (n_r as f64 + 2.0);
        Self::polar(n_r, n_theta, r_min, radius)
    }

    pub fn rect(n1: usize, n2: usize, lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        if n1 < 2 || n2 < 2 || !(hi[0] > lo[0]) || !(hi[1] > lo[1]) {
            return Err(Error::Domain("degenerate rectangular grid".into()));
        }
        let radius = lo
            .iter()
            .chain(hi.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            kind: GridKind::Rect { n1, n2, lo, hi },
            radius,
        })
    }

    pub fn len(&self) -> usize {
        match self.kind {
            GridKind::Cartesian { n } => (n + 1) * (n + 1),
            GridKind::Polar { n_r, n_theta, .. } => (n_r + 1) * n_theta,
            GridKind::Rect { n1, n2, .. } => (n1 + 1) * (n2 + 1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_cartesian(&self) -> bool {
        matches!(self.kind, GridKind::Cartesian { .. })
    }

    /// Node spacing `(h1, h2)`; for polar grids `(dr, dtheta)`.
    pub fn spacing(&self) -> (f64, f64) {
        match self.kind {
            GridKind::Cartesian { n } => {
                let h = 2.0 * self.radius / n as f64;
                (h, h)
            }
            GridKind::Polar {
                n_r,
                n_theta,
                r_min,
            } => ((self.radius - r_min) / n_r as f64, 2.0 * PI / n_theta as f64),
            GridKind::Rect { n1, n2, lo, hi } => {
                ((hi[0] - lo[0]) / n1 as f64, (hi[1] - lo[1]) / n2 as f64)
            }
        }
    }

    /// Cartesian cell size; for polar grids the radial step.
    pub fn h(&self) -> f64 {
        self.spacing().0
    }

    /// Number of nodes along each tensor axis `(columns, rows)`; polar grids
    /// report `(n_theta, n_r + 1)`.
    pub fn shape(&self) -> (usize, usize) {
        match self.kind {
            GridKind::Cartesian { n } => (n + 1, n + 1),
            GridKind::Polar { n_r, n_theta, .. } => (n_theta, n_r + 1),
            GridKind::Rect { n1, n2, .. } => (n1 + 1, n2 + 1),
        }
    }

    /// Lower-left corner of a tensor grid.
    pub fn origin_corner(&self) -> [f64; 2] {
        match self.kind {
            GridKind::Cartesian { .. } => [-self.radius, -self.radius],
            GridKind::Rect { lo, .. } => lo,
            GridKind::Polar { r_min, .. } => [r_min, 0.0],
        }
    }

    /// Row-major index for tensor grids (`row` runs along x2).
    pub fn index(&self, row: usize, col: usize) -> usize {
        let (cols, _) = self.shape();
        row * cols + col
    }

    pub fn row_col(&self, idx: usize) -> (usize, usize) {
        let (cols, _) = self.shape();
        (idx / cols, idx % cols)
    }

    /// Cartesian coordinates of a node.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (row, col) = self.row_col(idx);
        match self.kind {
            GridKind::Polar { .. } => {
                let (r, th) = self.polar_coords(row, col);
                [r * th.cos(), r * th.sin()]
            }
            _ => {
                let (h1, h2) = self.spacing();
                let c = self.origin_corner();
                [c[0] + col as f64 * h1, c[1] + row as f64 * h2]
            }
        }
    }

    /// `(r, theta)` of polar node `(i, j)`.
    pub fn polar_coords(&self, i: usize, j: usize) -> (f64, f64) {
        match self.kind {
            GridKind::Polar { r_min, .. } => {
                let (dr, dth) = self.spacing();
                (r_min + i as f64 * dr, j as f64 * dth)
            }
            _ => {
                let p = self.point(self.index(i, j));
                (p[0].hypot(p[1]), p[1].atan2(p[0]))
            }
        }
    }

    pub fn node_kind(&self, idx: usize) -> NodeKind {
        let (row, col) = self.row_col(idx);
        match self.kind {
            GridKind::Polar { n_r, .. } => {
                if row == 0 || row == n_r {
                    NodeKind::Boundary
                } else {
                    NodeKind::Inside
                }
            }
            GridKind::Rect { n1, n2, .. } => {
                if row == 0 || col == 0 || row == n2 || col == n1 {
                    NodeKind::Boundary
                } else {
                    NodeKind::Inside
                }
            }
            GridKind::Cartesian { n } => {
                if !self.in_disc(self.point(idx)) {
                    return NodeKind::Outside;
                }
                if row == 0 || col == 0 || row == n || col == n {
                    return NodeKind::Boundary;
                }
                let neighbours = [
                    self.index(row + 1, col),
                    self.index(row - 1, col),
                    self.index(row, col + 1),
                    self.index(row, col - 1),
                ];
                if neighbours.iter().all(|&k| self.in_disc(self.point(k))) {
                    NodeKind::Inside
                } else {
                    NodeKind::Boundary
                }
            }
        }
    }

    pub fn mask(&self) -> Vec<NodeKind> {
        (0..self.len()).map(|i| self.node_kind(i)).collect()
    }

    /// Strictly inside the disc of this grid.
    pub fn in_disc(&self, p: [f64; 2]) -> bool {
        p[0].hypot(p[1]) < self.radius * (1.0 - 1e-12)
    }

    /// Index of the Cartesian node at the origin, when there is one.
    pub fn origin_node(&self) -> Option<usize> {
        match self.kind {
            GridKind::Cartesian { n } if n % 2 == 0 => Some(self.index(n / 2, n / 2)),
            _ => None,
        }
    }

    /// Index of the node nearest to `p` (tensor grids) together with its
    /// `(row, col)` position.
    pub fn nearest_node(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        match self.kind {
            GridKind::Polar {
                n_r, n_theta, r_min, ..
            } => {
                let (dr, dth) = self.spacing();
                let r = p[0].hypot(p[1]);
                let th = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
                let i = ((r - r_min) / dr).round();
                if i < 0.0 || i > n_r as f64 {
                    return None;
                }
                let j = (th / dth).round() as usize % n_theta;
                Some((i as usize, j))
            }
            _ => {
                let (h1, h2) = self.spacing();
                let c = self.origin_corner();
                let (cols, rows) = self.shape();
                let col = ((p[0] - c[0]) / h1).round();
                let row = ((p[1] - c[1]) / h2).round();
                if col < 0.0 || row < 0.0 || col >= cols as f64 || row >= rows as f64 {
                    return None;
                }
                Some((row as usize, col as usize))
            }
        }
    }

    /// Header line of the text field format.
    pub fn header(&self) -> String {
        match self.kind {
            GridKind::Cartesian { n } => format!("grid cartesian n={n} radius={}", self.radius),
            GridKind::Polar {
                n_r,
                n_theta,
                r_min,
            } => format!(
                "grid polar n_r={n_r} n_theta={n_theta} r_min={r_min} radius={}",
                self.radius
            ),
            GridKind::Rect { n1, n2, lo, hi } => format!(
                "grid rect n1={n1} n2={n2} x1={}:{} x2={}:{}",
                lo[0], hi[0], lo[1], hi[1]
            ),
        }
    }

    pub fn parse_header(line: &str) -> Result<Self> {
        let mut words = line.split_whitespace();
        if words.next() != Some("grid") {
            return Err(Error::Parse(format!("expected 'grid' header, got '{line}'")));
        }
        let kind = words
            .next()
            .ok_or_else(|| Error::Parse("missing grid kind".into()))?;
        let mut params = std::collections::HashMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed grid parameter '{w}'")))?;
            params.insert(k, v);
        }
        let get = |k: &str| -> Result<&str> {
            params
                .get(k)
                .copied()
                .ok_or_else(|| Error::Parse(format!("grid header missing '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{k}: {e}")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{k}: {e}")))
        };
        let range = |k: &str| -> Result<(f64, f64)> {
            let s = get(k)?;
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("{k} must be lo:hi")))?;
            let a = a.parse::<f64>().map_err(|e| Error::Parse(format!("{k}: {e}")))?;
            let b = b.parse::<f64>().map_err(|e| Error::Parse(format!("{k}: {e}")))?;
            Ok((a, b))
        };
        match kind {
            "cartesian" => Self::cartesian(int("n")?, num("radius")?),
            "polar" => Self::polar(int("n_r")?, int("n_theta")?, num("r_min")?, num("radius")?),
            "rect" => {
                let (a1, b1) = range("x1")?;
                let (a2, b2) = range("x2")?;
                Self::rect(int("n1")?, int("n2")?, [a1, a2], [b1, b2])
            }
            other => Err(Error::Parse(format!("unknown grid kind '{other}'"))),
        }
    }
}

impl fmt::Display for DiscGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.header())
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("grid radius must be positive, got {radius}")))
    }
}

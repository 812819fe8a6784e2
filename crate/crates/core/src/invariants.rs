//! The scale-invariant quantity `J_u = Δu (r^2 u_rr)^gamma`, blow-up
//! rescaling, ring-wise limits of `J` at the origin, and the location of the
//! maximum of `|J - J0|` on annuli.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{DiscGrid, GridKind, NodeKind};
use crate::regime::Regime;

/// `Δu` and `r^2 u_rr` at a point. Cartesian and rectangular grids use the
/// five-point Laplacian and the radial second difference with step `h`, both
/// on the cubic interpolant (so at nodes the Laplacian uses node values only).
/// Polar grids use native differences in `r` and `theta`.
pub fn laplacian_and_radial(field: &ScalarField, p: [f64; 2]) -> Result<(f64, f64)> {
    let r = p[0].hypot(p[1]);
    let u = |q: [f64; 2]| field.sample(q);
    let c = u(p)?;
    match field.grid.kind {
        GridKind::Polar { .. } => {
            let (dr, dth) = field.grid.spacing();
            let th = p[1].atan2(p[0]);
            let at = |rr: f64, tt: f64| u([rr * tt.cos(), rr * tt.sin()]);
            let (up, um) = (at(r + dr, th)?, at(r - dr, th)?);
            let urr = (up - 2.0 * c + um) / (dr * dr);
            let ur = (up - um) / (2.0 * dr);
            let utt = (at(r, th + dth)? - 2.0 * c + at(r, th - dth)?) / (dth * dth);
            Ok((urr + ur / r + utt / (r * r), r * r * urr))
        }
        _ => {
            let h = field.grid.h();
            let lap = (u([p[0] + h, p[1]])? + u([p[0] - h, p[1]])? + u([p[0], p[1] + h])? + u([p[0], p[1] - h])?
                - 4.0 * c)
                / (h * h);
            if r == 0.0 {
                return Ok((lap, 0.0));
            }
            let e = [p[0] / r, p[1] / r];
            let urr = (u([p[0] + h * e[0], p[1] + h * e[1]])? - 2.0 * c + u([p[0] - h * e[0], p[1] - h * e[1]])?)
                / (h * h);
            Ok((lap, r * r * urr))
        }
    }
}

/// `J_u(p) = Δu (r^2 u_rr)^gamma`.
pub fn j_value(field: &ScalarField, p: [f64; 2], regime: &Regime) -> Result<f64> {
    let (lap, r2urr) = laplacian_and_radial(field, p)?;
    if regime.gamma == 0.0 {
        return Ok(lap);
    }
    if !(r2urr > 0.0) {
        return Err(Error::Degeneracy(format!(
            "r^2 u_rr = {r2urr:e} is not positive at ({:.6}, {:.6})",
            p[0], p[1]
        )));
    }
    Ok(lap * r2urr.powf(regime.gamma))
}

/// `M_u = log J_u`.
pub fn m_value(field: &ScalarField, p: [f64; 2], regime: &Regime) -> Result<f64> {
    let j = j_value(field, p, regime)?;
    if !(j > 0.0) {
        return Err(Error::Degeneracy(format!("J = {j:e} is not positive at ({:.6}, {:.6})", p[0], p[1])));
    }
    Ok(j.ln())
}

/// `v(x) = r^-beta u(r x)` sampled on `target`. Nodes outside the target
/// disc are NaN.
pub fn blowup(field: &ScalarField, r: f64, regime: &Regime, target: DiscGrid) -> Result<ScalarField> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("blow-up scale must be positive, got {r}")));
    }
    let reach = r * target.radius;
    if reach > field.grid.radius * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "blow-up at r = {r} reaches radius {reach}, beyond the source radius {}",
            field.grid.radius
        )));
    }
    let cells = reach / field.grid.h();
    if cells < MIN_BLOWUP_CELLS {
        return Err(Error::Resolution(format!(
            "blow-up at r = {r:e} covers {cells:.1} source cells, need {MIN_BLOWUP_CELLS}"
        )));
    }
    let scale = r.powf(-regime.beta);
    let mut values = Vec::with_capacity(target.len());
    for i in 0..target.len() {
        let x = target.point(i);
        if target.is_cartesian() && target.node_kind(i) == NodeKind::Outside {
            values.push(f64::NAN);
            continue;
        }
        values.push(scale * field.sample([r * x[0], r * x[1]])?);
    }
    let mut out = ScalarField::new(target, values)?;
    out.gradient_origin = field.gradient_origin.map(|g| [g[0] * r * scale, g[1] * r * scale]);
    Ok(out)
}

/// Source cells a blown-up disc must span.
pub const MIN_BLOWUP_CELLS: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingStats {
    pub r: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: f64,
}

impl RingStats {
    pub fn oscillation(&self) -> f64 {
        self.max - self.min
    }
}

/// `J` on equally spaced points of the circle of radius `r`.
pub fn j_ring(field: &ScalarField, regime: &Regime, r: f64, n_points: usize) -> Result<RingStats> {
    let values = (0..n_points)
        .map(|k| {
            let th = 2.0 * PI * (k as f64 + 0.5) / n_points as f64;
            j_value(field, [r * th.cos(), r * th.sin()], regime)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats(r, &values))
}

/// `J` on points of the ray at angle `theta` between `r_in` and `r_out`.
pub fn j_ray(field: &ScalarField, regime: &Regime, theta: f64, r_in: f64, r_out: f64, n_points: usize) -> Result<RingStats> {
    let values = (0..n_points)
        .map(|k| {
            let r = r_in + (r_out - r_in) * k as f64 / (n_points - 1) as f64;
            j_value(field, [r * theta.cos(), r * theta.sin()], regime)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats(theta, &values))
}

fn stats(r: f64, values: &[f64]) -> RingStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    RingStats {
        r,
        mean,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        std_dev: var.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JTrace {
    /// Outermost ring first.
    pub rings: Vec<RingStats>,
    pub annulus: (f64, f64),
    pub j_limit_estimate: Option<f64>,
    /// Fitted exponent `p` in `mean(r) ≈ L + C r^p`, when the differences
    /// of ring means allow one.
    pub fitted_order: Option<f64>,
    pub oscillation_decreasing: bool,
    /// Set when the oscillation fails to decrease inward above the noise
    /// floor.
    pub inconclusive: bool,
}

impl JTrace {
    pub fn oscillation_per_ring(&self) -> Vec<(f64, f64)> {
        self.rings.iter().map(|s| (s.r, s.oscillation())).collect()
    }

    /// CSV columns `r, J_mean, J_min, J_max`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        w.write_record(["r", "J_mean", "J_min", "J_max"])?;
        for s in &self.rings {
            w.serialize((s.r, s.mean, s.min, s.max))?;
        }
        w.flush().map_err(|e| Error::io(path.as_ref(), e))?;
        Ok(())
    }
}

/// Relative oscillation treated as discretization noise.
pub const J_NOISE_FLOOR: f64 = 1e-6;

/// Ring means and oscillations of `J` on the given radii (outermost first),
/// and an extrapolated limit at the origin.
///
/// The limit uses Aitken's transformation of the last three means, which
/// assumes geometric convergence without fixing its rate; the rate implied by
/// the data is reported as `fitted_order` for geometric ring sequences.
pub fn j_limit_estimate(field: &ScalarField, regime: &Regime, radii: &[f64], n_points: usize) -> Result<JTrace> {
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("ring radii must be strictly decreasing, at least two".into()));
    }
    let rings = radii
        .iter()
        .map(|&r| j_ring(field, regime, r, n_points))
        .collect::<Result<Vec<_>>>()?;
    let m: Vec<f64> = rings.iter().map(|s| s.mean).collect();
    let n = m.len();
    let floor = J_NOISE_FLOOR * m[n - 1].abs();
    let (mut limit, mut order) = (Some(m[n - 1]), None);
    if n >= 3 {
        let (a, b, c) = (m[n - 3], m[n - 2], m[n - 1]);
        let (d1, d2) = (b - a, c - b);
        let curvature = d2 - d1;
        if d1.abs() > floor && d2.abs() > floor && d1 * d2 > 0.0 && curvature.abs() > 1e-3 * d1.abs() {
            limit = Some(c - d2 * d2 / curvature);
            order = Some((d1 / d2).ln() / (radii[n - 2] / radii[n - 1]).ln());
        }
    }
    let osc: Vec<f64> = rings.iter().map(|s| s.oscillation()).collect();
    let decreasing = osc.windows(2).all(|w| w[1] <= w[0] + floor);
    let inconclusive = !decreasing && osc[n - 1] > floor;
    Ok(JTrace {
        annulus: (radii[n - 1], radii[0]),
        rings,
        j_limit_estimate: limit,
        fitted_order: order,
        oscillation_decreasing: decreasing,
        inconclusive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxLocation {
    pub annulus: (f64, f64),
    pub point: [f64; 2],
    pub r: f64,
    /// `max |J - J0|` over the annulus nodes.
    pub max_deviation: f64,
    pub min_deviation: f64,
    /// Within one cell of either bounding circle.
    pub on_boundary: bool,
    /// `max - min` of `|J - J0|` below the tolerance.
    pub constant: bool,
}

/// Where `|J - J0|` is largest over the grid nodes of an annulus.
pub fn interior_max_check(
    field: &ScalarField,
    regime: &Regime,
    annulus: (f64, f64),
    constant_tol: f64,
) -> Result<MaxLocation> {
    let (r_in, r_out) = annulus;
    if !(r_in > 0.0 && r_out > r_in) {
        return Err(Error::Domain(format!("invalid annulus [{r_in}, {r_out}]")));
    }
    let h = field.grid.h();
    let mut best: Option<(f64, usize)> = None;
    let mut min_dev = f64::INFINITY;
    for i in 0..field.grid.len() {
        let p = field.grid.point(i);
        let r = p[0].hypot(p[1]);
        if r < r_in || r > r_out || !field.values[i].is_finite() {
            continue;
        }
        let dev = (j_value(field, p, regime)? - regime.j0).abs();
        min_dev = min_dev.min(dev);
        if best.is_none_or(|(b, _)| dev > b) {
            best = Some((dev, i));
        }
    }
    let (max_dev, idx) = best.ok_or_else(|| Error::Resolution("no grid nodes in the annulus".into()))?;
    let point = field.grid.point(idx);
    let r = point[0].hypot(point[1]);
    Ok(MaxLocation {
        annulus,
        point,
        r,
        max_deviation: max_dev,
        min_deviation: min_dev,
        on_boundary: r - r_in <= h || r_out - r <= h,
        constant: max_dev - min_dev <= constant_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::radial_solution;

    #[test]
    fn quadratic_with_gamma_zero() {
        let reg = Regime::new(0.0).unwrap();
        let g = DiscGrid::cartesian(64, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |p| 0.5 * (p[0] * p[0] + p[1] * p[1]));
        for p in [[0.0, 0.0], [0.3, 0.1], [-0.2, 0.55]] {
            assert!((j_value(&u, p, &reg).unwrap() - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_blowup_is_a_fixed_point() {
        let reg = Regime::new(2.0).unwrap();
        let g = DiscGrid::cartesian(128, 1.0).unwrap();
        let u = radial_solution(&reg, g);
        let v = blowup(&u, 0.5, &reg, DiscGrid::cartesian(64, 1.0).unwrap()).unwrap();
        assert!(v.sup_error(|p| reg.radial_value(p[0].hypot(p[1])), |_| true) < 1e-12);
    }
}

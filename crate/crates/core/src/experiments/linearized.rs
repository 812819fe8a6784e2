//! The linearization at the radial solution: `v_rr + (beta - 1)(v_r/r +
//! v_thth/r^2) = 0` and its separated mode `r^rho cos(2 theta)`.

use std::path::Path;

use serde::Serialize;

use super::{write_rows, ExperimentConfig, Report};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::DiscGrid;
use crate::linalg::SparseSystem;
use crate::regime::Regime;
use crate::sections::{fit_line, LineFit};

/// The decaying root `(2 - beta + sqrt(beta^2 + 12 beta - 12))/2` of
/// `rho (rho - 1) + (beta - 1)(rho - 4) = 0`.
pub fn rho_exponent(regime: &Regime) -> Result<f64> {
    if regime.alpha <= 0.0 {
        return Err(Error::Domain(format!("the exponent rho needs alpha > 0, got {}", regime.alpha)));
    }
    let b = regime.beta;
    Ok(0.5 * (2.0 - b + (b * b + 12.0 * b - 12.0).sqrt()))
}

/// The other root, negative for `beta > 2`.
pub fn rho_rejected(regime: &Regime) -> f64 {
    let b = regime.beta;
    0.5 * (2.0 - b - (b * b + 12.0 * b - 12.0).sqrt())
}

fn quadratic(rho: f64, beta: f64) -> f64 {
    rho * (rho - 1.0) + (beta - 1.0) * (rho - 4.0)
}

/// Data on the inner circle of the annulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerData {
    /// `r_in^rho cos(2 theta)`: the separated solution itself.
    Mode,
    /// `v = 0`.
    Zero,
}

/// Solves the linearized equation on the polar annulus `[r_in, 1]` with
/// `v = cos(2 theta)` outside and the chosen inner data, by centered
/// differences and a sparse direct solve. Returns the field and the
/// `cos(2 theta)` amplitude per radius.
pub fn solve_linearized(
    regime: &Regime,
    n_r: usize,
    n_theta: usize,
    r_in: f64,
    inner: InnerData,
) -> Result<(ScalarField, Vec<(f64, f64)>)> {
    let rho = rho_exponent(regime)?;
    let grid = DiscGrid::polar(n_r, n_theta, r_in, 1.0)?;
    let (dr, dth) = grid.spacing();
    let k = regime.beta - 1.0;
    let unknown = |i: usize, j: usize| (i - 1) * n_theta + j;
    let n = (n_r - 1) * n_theta;
    let mut sys = SparseSystem::new(n);
    let mut rhs = vec![0.0; n];
    let edge = |i: usize, th: f64| -> f64 {
        if i == n_r {
            (2.0 * th).cos()
        } else {
            match inner {
                InnerData::Mode => r_in.powf(rho) * (2.0 * th).cos(),
                InnerData::Zero => 0.0,
            }
        }
    };
    for i in 1..n_r {
        let r = r_in + i as f64 * dr;
        let c_out = 1.0 / (dr * dr) + k / (2.0 * r * dr);
        let c_in = 1.0 / (dr * dr) - k / (2.0 * r * dr);
        let c_th = k / (r * r * dth * dth);
        for j in 0..n_theta {
            let row = unknown(i, j);
            sys.add(row, row, -2.0 / (dr * dr) - 2.0 * c_th);
            for (ii, c) in [(i + 1, c_out), (i - 1, c_in)] {
                if ii == 0 || ii == n_r {
                    rhs[row] -= c * edge(ii, j as f64 * dth);
                } else {
                    sys.add(row, unknown(ii, j), c);
                }
            }
            sys.add(row, unknown(i, (j + 1) % n_theta), c_th);
            sys.add(row, unknown(i, (j + n_theta - 1) % n_theta), c_th);
        }
    }
    let sol = sys.solve(&rhs)?;
    let values: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let (i, j) = grid.row_col(idx);
            if i == 0 || i == n_r {
                edge(i, j as f64 * dth)
            } else {
                sol[unknown(i, j)]
            }
        })
        .collect();
    let field = ScalarField::new(grid, values)?;
    let decay = (0..=n_r)
        .map(|i| {
            let amp = (0..n_theta)
                .map(|j| field.values[grid.index(i, j)] * (2.0 * j as f64 * dth).cos())
                .sum::<f64>()
                * 2.0
                / n_theta as f64;
            (r_in + i as f64 * dr, amp)
        })
        .collect();
    Ok((field, decay))
}

/// Slope of `log amplitude` against `log r` over `[r_lo, 1)`.
fn fit_decay(decay: &[(f64, f64)], r_lo: f64) -> LineFit {
    let pts: Vec<(f64, f64)> = decay
        .iter()
        .filter(|(r, a)| *r >= r_lo && *r < 1.0 && *a > 0.0)
        .map(|(r, a)| (r.ln(), a.ln()))
        .collect();
    fit_line(&pts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizedReport {
    pub alpha: f64,
    pub beta: f64,
    pub rho_closed_form: f64,
    pub rho_rejected: f64,
    /// `|rho (rho - 1) + (beta - 1)(rho - 4)|` at the closed form.
    pub quadratic_residual: f64,
    /// From the solve with zero inner data.
    pub rho_fitted: f64,
    pub rho_relative_error: f64,
    /// From the solve with the separated mode as inner data.
    pub rho_manufactured: f64,
    /// `sup |v - r^rho cos(2 theta)|` for that solve.
    pub manufactured_max_error: f64,
    pub r_in: f64,
    pub fit_from: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// `(r, amplitude)` of the zero-inner-data solve.
    pub decay: Vec<(f64, f64)>,
}

impl Report for LinearizedReport {
    fn write_tables(&self, dir: &Path) -> Result<()> {
        write_rows(&dir.join("decay.csv"), &["r", "amplitude", "mode"], self.decay.iter().map(|(r, a)| {
            (r, a, r.powf(self.rho_closed_form))
        }))
    }
}

/// Inner radius of the zero-data run and the start of its fit window.
const R_IN: f64 = 0.02;
const FIT_FROM: f64 = 0.1;

pub fn run_linearized(config: &ExperimentConfig) -> Result<LinearizedReport> {
    config.validate()?;
    let regime = Regime::new(config.alpha)?;
    let rho = rho_exponent(&regime)?;
    let n = config.grid_n;
    let (field, decay_mode) = solve_linearized(&regime, n, n, 0.25, InnerData::Mode)?;
    let manufactured_max_error = field.sup_error(
        |p| p[0].hypot(p[1]).powf(rho) * (2.0 * p[1].atan2(p[0])).cos(),
        |_| true,
    );
    let rho_manufactured = fit_decay(&decay_mode, 0.0).slope;
    let (_, decay) = solve_linearized(&regime, n, n, R_IN, InnerData::Zero)?;
    let rho_fitted = fit_decay(&decay, FIT_FROM).slope;
    Ok(LinearizedReport {
        alpha: regime.alpha,
        beta: regime.beta,
        rho_closed_form: rho,
        rho_rejected: rho_rejected(&regime),
        quadratic_residual: quadratic(rho, regime.beta).abs(),
        rho_fitted,
        rho_relative_error: (rho_fitted / rho - 1.0).abs(),
        rho_manufactured,
        manufactured_max_error,
        r_in: R_IN,
        fit_from: FIT_FROM,
        n_r: n,
        n_theta: n,
        decay,
    })
}


//! Drivers that run the headline experiments end to end and write
//! machine-readable reports (`report.json` plus CSV tables).

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::DiscGrid;
use crate::masolver::ConvexSolution;

mod blowup;
mod catalog;
mod instability;
mod linearized;
mod negative;

pub use blowup::{catalog_entries, run_blowup, BlowupReport, BlowupStep, CatalogEntry};
pub use catalog::{catalog_for, run_catalog, CatalogReport, CatalogRow, CatalogStatus};
pub use instability::{instability_run, run_instability, InstabilityReport, InstabilityRun, DEFAULT_EPSILONS};
pub use linearized::{rho_exponent, rho_rejected, run_linearized, solve_linearized, InnerData, LinearizedReport};
pub use negative::{run_negative_alpha, NegativeReport, RingRatio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Instability,
    NegativeAlpha,
    Blowup,
    Catalog,
    Linearized,
}

/// Parameters shared by all experiments; each driver reads the fields it
/// needs and [`ExperimentConfig::validate`] checks them against the name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    pub alpha: f64,
    /// Catalog exponents.
    pub alpha_list: Vec<f64>,
    pub k_max: u32,
    /// Instability amplitudes.
    pub epsilons: Vec<f64>,
    /// Relative amplitude of the `cos(theta)` perturbation in the
    /// negative-alpha boundary data.
    pub perturbation: f64,
    /// Cells per side of the Cartesian solver grid.
    pub grid_n: usize,
    /// Section heights, decreasing.
    pub t_range: Vec<f64>,
    /// Ring or blow-up radii, decreasing.
    pub r_range: Vec<f64>,
    /// Field to blow up.
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// `n` log-spaced values from `hi` down to `lo`.
pub fn log_range(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| hi * (lo / hi).powf(k as f64 / (n.max(2) - 1) as f64))
        .collect()
}

impl ExperimentConfig {
    /// Defaults for each experiment.
    pub fn new(name: ExperimentName) -> Self {
        let mut c = Self {
            name,
            alpha: 2.0,
            alpha_list: vec![-1.0, 0.0, 2.0, 6.0],
            k_max: 6,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            perturbation: 0.2,
            grid_n: 512,
            t_range: log_range(1e-1, 1e-3, 13),
            r_range: vec![0.4, 0.2, 0.1, 0.05],
            input: None,
            out: None,
        };
        match name {
            ExperimentName::NegativeAlpha => {
                c.alpha = -1.0;
                c.t_range = log_range(0.3, 1e-3, 16);
                c.r_range = log_range(0.8, 0.02, 17);
            }
            ExperimentName::Linearized => c.grid_n = 256,
            ExperimentName::Blowup => c.r_range = vec![0.4, 0.2, 0.1],
            _ => {}
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if !(self.alpha > -2.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must exceed -2, got {}", self.alpha));
        }
        let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]) && v.iter().all(|x| *x > 0.0);
        match self.name {
            ExperimentName::Instability => {
                if self.alpha <= 0.0 {
                    return bad(format!("instability needs alpha > 0, got {}", self.alpha));
                }
                if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e >= 0.0)) {
                    return bad("epsilon values must be non-negative".into());
                }
            }
            ExperimentName::NegativeAlpha => {
                if self.alpha >= 0.0 {
                    return bad(format!("negative_alpha needs -2 < alpha < 0, got {}", self.alpha));
                }
                if !(self.perturbation.abs() < 1.0) {
                    return bad("perturbation must be below 1 in magnitude".into());
                }
            }
            ExperimentName::Linearized => {
                if self.alpha <= 0.0 {
                    return bad(format!("linearized needs alpha > 0, got {}", self.alpha));
                }
            }
            ExperimentName::Blowup => {
                if self.input.is_none() {
                    return bad("blowup needs an input field".into());
                }
            }
            ExperimentName::Catalog => {
                if self.alpha_list.iter().any(|a| !(*a > -2.0)) || self.k_max == 0 {
                    return bad("catalog needs alpha > -2 and k_max >= 1".into());
                }
            }
        }
        if !decreasing(&self.t_range) || !decreasing(&self.r_range) {
            return bad("t and r ranges must be positive and strictly decreasing".into());
        }
        if self.grid_n < 8 {
            return bad(format!("grid needs at least 8 cells per side, got {}", self.grid_n));
        }
        Ok(())
    }

    pub(crate) fn solver_grid(&self) -> Result<DiscGrid> {
        DiscGrid::cartesian(self.grid_n, 1.0)
    }
}

/// Solver diagnostics copied into reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveSummary {
    pub residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub convexity_margin: f64,
}

impl From<&ConvexSolution> for SolveSummary {
    fn from(s: &ConvexSolution) -> Self {
        Self {
            residual_sup: s.residual_sup,
            iterations: s.iterations,
            converged: s.converged,
            convexity_margin: s.convexity_margin,
        }
    }
}

/// What a finished experiment hands back to the CLI.
pub trait Report: Serialize {
    /// True when some verdict could not be decided at the resolved scales.
    fn inconclusive(&self) -> bool {
        false
    }

    /// CSV tables written next to `report.json`.
    fn write_tables(&self, _dir: &Path) -> Result<()> {
        Ok(())
    }

    fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.write_tables(dir)
    }
}

/// Writes rows with a header to `path`.
pub(crate) fn write_rows<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

//! Table of homogeneous solutions `r^beta g(theta)` by exponent and
//! symmetry order.

use std::path::Path;

use serde::Serialize;

use super::{write_rows, ExperimentConfig, Report};
use crate::error::Result;
use crate::homogeneous::{find_profile, reconstruct_profile, tangency_c0, SearchOptions, SearchOutcome};
use crate::regime::Regime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogStatus {
    /// The radial solution `c_alpha |x|^beta`.
    Radial,
    /// A non-radial profile of principal period `2 pi / k`.
    Found,
    /// `pi / k` lies outside the range of the period integral.
    Absent,
    /// The period integral equals `pi / k` identically.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogRow {
    pub alpha: f64,
    pub k: u32,
    pub status: CatalogStatus,
    pub c_star: Option<f64>,
    /// Range of `I_c` over the scan.
    pub i_min: Option<f64>,
    pub i_max: Option<f64>,
    pub ode_residual: Option<f64>,
    pub closure_defect: Option<f64>,
    pub j_constant: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogReport {
    pub rows: Vec<CatalogRow>,
}

impl Report for CatalogReport {
    fn write_tables(&self, dir: &Path) -> Result<()> {
        write_rows(
            &dir.join("catalog.csv"),
            &["alpha", "k", "status", "c_star", "i_min", "i_max", "ode_residual", "j_constant", "note"],
            self.rows.iter().map(|r| {
                (
                    r.alpha,
                    r.k,
                    r.status,
                    r.c_star,
                    r.i_min,
                    r.i_max,
                    r.ode_residual,
                    r.j_constant,
                    &r.note,
                )
            }),
        )
    }
}

/// Samples per principal period of reconstructed profiles.
const PROFILE_SAMPLES: usize = 4096;

/// Catalog rows for one exponent: the radial row, then for `alpha >= 0`
/// one row per `k = 2..=k_max`.
pub fn catalog_for(alpha: f64, k_max: u32, opts: &SearchOptions) -> Result<Vec<CatalogRow>> {
    let regime = Regime::new(alpha)?;
    let mut rows = vec![CatalogRow {
        alpha,
        k: 1,
        status: CatalogStatus::Radial,
        c_star: Some(tangency_c0(&regime).c0),
        i_min: None,
        i_max: None,
        ode_residual: Some(0.0),
        closure_defect: Some(0.0),
        j_constant: Some(regime.j0),
        note: if alpha < 0.0 {
            "alpha < 0: the radial solution is the only homogeneous solution".into()
        } else {
            "radial solution".into()
        },
    }];
    if alpha < 0.0 {
        return Ok(rows);
    }
    for k in 2..=k_max {
        let search = find_profile(k, &regime, opts)?;
        let mut row = CatalogRow {
            alpha,
            k,
            status: CatalogStatus::Absent,
            c_star: None,
            i_min: Some(search.i_min),
            i_max: Some(search.i_max),
            ode_residual: None,
            closure_defect: None,
            j_constant: None,
            note: String::new(),
        };
        match &search.outcome {
            SearchOutcome::Found { c_star, roots } => {
                let p = reconstruct_profile(*c_star, k, &regime, PROFILE_SAMPLES)?;
                row.status = CatalogStatus::Found;
                row.c_star = Some(*c_star);
                row.ode_residual = Some(p.ode_residual_max());
                row.closure_defect = Some(p.closure_defect());
                row.j_constant = Some(p.j_constant());
                if roots.len() > 1 {
                    row.note = format!("{} roots on the scan; smallest reported", roots.len());
                }
            }
            SearchOutcome::Absent => {
                row.note = format!(
                    "pi/{k} = {:.6} outside the sampled range [{:.6}, {:.6}]",
                    search.target, search.i_min, search.i_max
                );
            }
            SearchOutcome::Degenerate => {
                row.status = CatalogStatus::Degenerate;
                row.note = format!(
                    "I_c = pi/{k} for every c: not attained by the interior criterion \
                     (the quadratic solutions exist classically)"
                );
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn run_catalog(config: &ExperimentConfig) -> Result<CatalogReport> {
    config.validate()?;
    let opts = SearchOptions::default();
    let mut rows = Vec::new();
    for &alpha in &config.alpha_list {
        rows.extend(catalog_for(alpha, config.k_max, &opts)?);
    }
    Ok(CatalogReport { rows })
}

//! Blow-ups `r^-beta u(r x)` compared with the catalog of homogeneous
//! solutions.

use std::path::Path;

use serde::Serialize;

use super::{write_rows, ExperimentConfig, Report};
use crate::error::{Error, Result};
use crate::field::{Anchor, ScalarField};
use crate::grid::DiscGrid;
use crate::homogeneous::{
    find_profile, homogeneous_value, reconstruct_profile, tangency_c0, HomogeneousProfile, SearchOptions,
};
use crate::invariants::blowup;
use crate::regime::Regime;

/// A homogeneous solution of the catalog; `k = 1` is the radial one.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub k: u32,
    pub profile: HomogeneousProfile,
}

/// The radial solution and every non-radial profile with `k <= k_max`.
pub fn catalog_entries(regime: &Regime, k_max: u32) -> Result<Vec<CatalogEntry>> {
    let mut out = vec![CatalogEntry {
        k: 1,
        profile: reconstruct_profile(tangency_c0(regime).c0, 1, regime, 64)?,
    }];
    if regime.alpha > 0.0 {
        for k in 2..=k_max {
            if let Some(c) = find_profile(k, regime, &SearchOptions::default())?.c_star() {
                out.push(CatalogEntry {
                    k,
                    profile: reconstruct_profile(c, k, regime, 4096)?,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupStep {
    pub r: f64,
    pub best_k: u32,
    pub best_phase: f64,
    pub distance: f64,
    /// `(k, distance)` for every catalog entry.
    pub distances: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub alpha: f64,
    pub input: String,
    pub target_n: usize,
    pub annulus: (f64, f64),
    pub steps: Vec<BlowupStep>,
    /// `distance(r_i) / distance(r_{i+1})`.
    pub ratios: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Report for BlowupReport {
    fn write_tables(&self, dir: &Path) -> Result<()> {
        write_rows(
            &dir.join("blowup.csv"),
            &["r", "best_k", "best_phase", "distance"],
            self.steps.iter().map(|s| (s.r, s.best_k, s.best_phase, s.distance)),
        )
    }
}

/// Cells per side of the target grid and the annulus where distances are
/// measured.
pub const TARGET_N: usize = 128;
pub const ANNULUS: (f64, f64) = (0.5, 1.0);

/// Sup distance over the annulus nodes of `v` to the rotated entry.
fn distance(v: &ScalarField, entry: &CatalogEntry, phase: f64) -> f64 {
    let (lo, hi) = ANNULUS;
    (0..v.grid.len())
        .filter_map(|i| {
            let p = v.grid.point(i);
            let r = p[0].hypot(p[1]);
            (r >= lo && r <= hi && v.values[i].is_finite())
                .then(|| (v.values[i] - homogeneous_value(&entry.profile, p, phase)).abs())
        })
        .fold(0.0, f64::max)
}

/// Phase minimizing the distance: a scan of 32 phases over one period,
/// then golden-section search in the bracket around the best.
fn best_phase(v: &ScalarField, entry: &CatalogEntry) -> (f64, f64) {
    if entry.profile.radial {
        return (0.0, distance(v, entry, 0.0));
    }
    let period = entry.profile.period;
    let n = 32;
    let step = period / n as f64;
    let (mut best, mut best_d) = (0.0, f64::INFINITY);
    for j in 0..n {
        let ph = j as f64 * step;
        let d = distance(v, entry, ph);
        if d < best_d {
            best = ph;
            best_d = d;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best - step, best + step);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (distance(v, entry, x1), distance(v, entry, x2));
    while b - a > 1e-8 * period {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = distance(v, entry, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = distance(v, entry, x2);
        }
    }
    let (ph, d) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if d < best_d {
        (ph.rem_euclid(period), d)
    } else {
        (best, best_d)
    }
}

/// Distances of the blow-ups at each radius to the nearest catalog entry.
/// Radii too small for the source grid end the sequence with a warning.
pub fn blowup_sequence(
    field: &ScalarField,
    regime: &Regime,
    entries: &[CatalogEntry],
    radii: &[f64],
) -> Result<(Vec<BlowupStep>, Vec<String>)> {
    let target = DiscGrid::cartesian(TARGET_N, 1.0)?;
    let mut steps = Vec::new();
    let mut warnings = Vec::new();
    for &r in radii {
        let v = match blowup(field, r, regime, target) {
            Ok(v) => v,
            Err(Error::Resolution(m)) => {
                warnings.push(m);
                break;
            }
            Err(e) => return Err(e),
        };
        let mut distances = Vec::with_capacity(entries.len());
        let mut best = (0, 0.0, f64::INFINITY);
        for e in entries {
            let (ph, d) = best_phase(&v, e);
            distances.push((e.k, d));
            if d < best.2 {
                best = (e.k, ph, d);
            }
        }
        steps.push(BlowupStep {
            r,
            best_k: best.0,
            best_phase: best.1,
            distance: best.2,
            distances,
        });
    }
    Ok((steps, warnings))
}

pub fn run_blowup(config: &ExperimentConfig) -> Result<BlowupReport> {
    config.validate()?;
    let regime = Regime::new(config.alpha)?;
    let path = config.input.as_ref().expect("validated");
    let field = ScalarField::load(path)?;
    let field = if field.gradient_origin.is_some() {
        field
    } else {
        field.anchored(Anchor::Origin)?.0
    };
    let entries = catalog_entries(&regime, config.k_max)?;
    let (steps, warnings) = blowup_sequence(&field, &regime, &entries, &config.r_range)?;
    let ratios = steps.windows(2).map(|w| w[0].distance / w[1].distance).collect();
    Ok(BlowupReport {
        alpha: regime.alpha,
        input: path.display().to_string(),
        target_n: TARGET_N,
        annulus: ANNULUS,
        steps,
        ratios,
        warnings,
    })
}

//! `-2 < alpha < 0` with perturbed radial boundary data: the ratio `u/u0`
//! on shrinking rings and the section classifier.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use super::{write_rows, ExperimentConfig, Report, SolveSummary};
use crate::error::Result;
use crate::field::{Anchor, AnchorInfo};
use crate::masolver::{solve_unchecked, Boundary, DirichletProblem, Rhs, SolverOptions};
use crate::regime::Regime;
use crate::sections::{
    classify_behavior, eccentricity_trace, BehaviorReport, ClassifierOptions, EccentricityTrace, SectionKind,
};

/// `u/u0` sampled on a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingRatio {
    pub r: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Mean ratio of the control solve with boundary data exactly `u0`.
    pub control_mean: f64,
}

impl RingRatio {
    pub fn deviation(&self) -> f64 {
        (self.mean - 1.0).abs()
    }

    /// Discretization floor: the control's deviation from 1.
    pub fn floor(&self) -> f64 {
        (self.control_mean - 1.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeReport {
    pub alpha: f64,
    pub perturbation: f64,
    pub grid_n: usize,
    pub solver: SolveSummary,
    pub anchor: AnchorInfo,
    pub sup_deviation_from_radial: f64,
    /// Resolved rings (radius at least [`MIN_RING_CELLS`] cells), outermost
    /// first.
    pub rings: Vec<RingRatio>,
    pub innermost_ratio: Option<RingRatio>,
    /// `|mean - 1|` never increases inward over the last decade of rings.
    pub deviation_monotone: bool,
    /// Over the last decade, each inward step either does not increase
    /// `|mean - 1|` or stays within the control's discretization floor.
    pub trend_toward_one: bool,
    pub control_solver: SolveSummary,
    pub trace: EccentricityTrace,
    pub behavior: Option<BehaviorReport>,
    pub classification_error: Option<String>,
}

impl Report for NegativeReport {
    fn inconclusive(&self) -> bool {
        self.behavior.as_ref().is_none_or(|b| b.is_inconclusive())
    }

    fn write_tables(&self, dir: &Path) -> Result<()> {
        write_rows(
            &dir.join("ring_ratio.csv"),
            &["r", "ratio_mean", "ratio_min", "ratio_max", "control_mean"],
            self.rings.iter().map(|r| (r.r, r.mean, r.min, r.max, r.control_mean)),
        )?;
        self.trace.write_csv(dir.join("trace.csv"))
    }
}

/// Rings closer to the origin than this many cells are not reported.
pub const MIN_RING_CELLS: f64 = 4.0;

/// Points per ring.
const RING_POINTS: usize = 64;

pub fn run_negative_alpha(config: &ExperimentConfig) -> Result<NegativeReport> {
    config.validate()?;
    let reg = Regime::new(config.alpha)?;
    let grid = config.solver_grid()?;
    let delta = config.perturbation;
    let boundary = Boundary::from_fn(move |p| {
        reg.radial_value(p[0].hypot(p[1])) * (1.0 + delta * p[1].atan2(p[0]).cos())
    });
    let problem = DirichletProblem::new(Rhs::Power { c: 1.0, alpha: reg.alpha }, boundary, grid)?;
    let sol = solve_unchecked(&problem, &SolverOptions::default())?;
    let control_problem = DirichletProblem::new(
        Rhs::Power { c: 1.0, alpha: reg.alpha },
        Boundary::from_fn(move |p| reg.radial_value(p[0].hypot(p[1]))),
        grid,
    )?;
    let control = solve_unchecked(&control_problem, &SolverOptions::default())?;
    let sup_dev = sol
        .field
        .sup_error(|p| reg.radial_value(p[0].hypot(p[1])), |p| grid.in_disc(p));
    // the degenerate point is pinned at the singularity of the right-hand side
    let (anchored, anchor) = sol.field.anchored(Anchor::Origin)?;
    let (control_anchored, _) = control.field.anchored(Anchor::Origin)?;
    let h = grid.h();
    let ring = |f: &crate::field::ScalarField, r: f64| -> Result<Vec<f64>> {
        let u0 = reg.radial_value(r);
        (0..RING_POINTS)
            .map(|k| {
                let th = 2.0 * PI * (k as f64 + 0.5) / RING_POINTS as f64;
                f.sample([r * th.cos(), r * th.sin()]).map(|u| u / u0)
            })
            .collect()
    };
    let mut rings = Vec::new();
    for &r in config.r_range.iter().filter(|&&r| r >= MIN_RING_CELLS * h && r < 1.0) {
        let ratios = ring(&anchored, r)?;
        let control_ratios = ring(&control_anchored, r)?;
        let n = RING_POINTS as f64;
        rings.push(RingRatio {
            r,
            mean: ratios.iter().sum::<f64>() / n,
            min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            max: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            control_mean: control_ratios.iter().sum::<f64>() / n,
        });
    }
    let innermost = rings.last().copied();
    let tail: Vec<RingRatio> = match innermost {
        Some(last) => rings.iter().copied().filter(|g| g.r <= 10.0 * last.r).collect(),
        None => Vec::new(),
    };
    let deviation_monotone = tail.len() >= 2 && tail.windows(2).all(|w| w[1].deviation() <= w[0].deviation());
    let trend_toward_one = tail.len() >= 2
        && tail
            .windows(2)
            .all(|w| w[1].deviation() <= w[0].deviation().max(w[1].floor() * (1.0 + 1e-3) + 1e-9));
    let trace = eccentricity_trace(&anchored, [0.0, 0.0], &config.t_range, SectionKind::default_for(&reg))?;
    let (behavior, classification_error) = match classify_behavior(&trace, &reg, &ClassifierOptions::default()) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(NegativeReport {
        alpha: reg.alpha,
        perturbation: delta,
        grid_n: config.grid_n,
        solver: SolveSummary::from(&sol),
        anchor,
        sup_deviation_from_radial: sup_dev,
        rings,
        innermost_ratio: innermost,
        deviation_monotone,
        trend_toward_one,
        control_solver: SolveSummary::from(&control),
        trace,
        behavior,
        classification_error,
    })
}

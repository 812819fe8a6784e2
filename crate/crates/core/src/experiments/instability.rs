//! Dirichlet data `u0 - eps cos(2 theta)` for `alpha > 0`: the behavior of the
//! solution near its minimum as `eps` varies.

use std::path::Path;

use serde::Serialize;

use super::{ExperimentConfig, Report, SolveSummary};
use crate::error::Result;
use crate::field::{Anchor, AnchorInfo};
use crate::grid::DiscGrid;
use crate::invariants::{interior_max_check, MaxLocation};
use crate::masolver::{solve_unchecked, Boundary, DirichletProblem, Rhs, SolverOptions};
use crate::regime::Regime;
use crate::sections::{
    classify_behavior, eccentricity_trace, fit_line, BehaviorReport, ClassifierOptions, EccentricityTrace,
    SectionKind,
};

/// Amplitudes swept when none are given.
pub const DEFAULT_EPSILONS: [f64; 5] = [0.0, 0.0125, 0.025, 0.05, 0.1];

/// Annulus of the `|J - J0|` maximum check.
const J_ANNULUS: (f64, f64) = (0.2, 0.6);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityRun {
    pub epsilon: f64,
    pub solver: SolveSummary,
    pub anchor: AnchorInfo,
    /// `sup |u - u0|` over the disc before anchoring.
    pub sup_deviation_from_radial: f64,
    pub trace: EccentricityTrace,
    pub behavior: Option<BehaviorReport>,
    /// Why no verdict could be formed, when `behavior` is absent.
    pub classification_error: Option<String>,
    /// `alpha / (2 (2 + alpha))`.
    pub predicted_slope: f64,
    /// Slope of log(axis ratio) against log(1/t) over the whole trace.
    pub measured_slope: Option<f64>,
    pub j_check: Option<MaxLocation>,
}

impl InstabilityRun {
    pub fn is_radial(&self) -> bool {
        self.behavior.as_ref().is_some_and(|b| b.is_radial())
    }

    pub fn is_nonradial(&self) -> bool {
        self.behavior.as_ref().is_some_and(|b| b.is_nonradial())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityReport {
    pub alpha: f64,
    pub grid_n: usize,
    pub t_range: Vec<f64>,
    pub runs: Vec<InstabilityRun>,
}

impl Report for InstabilityReport {
    fn inconclusive(&self) -> bool {
        self.runs
            .iter()
            .any(|r| r.behavior.as_ref().is_none_or(|b| b.is_inconclusive()))
    }

    fn write_tables(&self, dir: &Path) -> Result<()> {
        for r in &self.runs {
            r.trace.write_csv(dir.join(format!("trace_eps_{}.csv", r.epsilon)))?;
        }
        Ok(())
    }
}

/// Solve, anchor at the minimizer, trace sections and classify.
pub fn instability_run(regime: &Regime, epsilon: f64, grid: DiscGrid, t_range: &[f64]) -> Result<InstabilityRun> {
    let reg = *regime;
    let boundary = Boundary::from_fn(move |p| reg.radial_value(p[0].hypot(p[1])) - epsilon * (2.0 * p[1].atan2(p[0])).cos());
    let problem = DirichletProblem::new(Rhs::Power { c: 1.0, alpha: reg.alpha }, boundary, grid)?;
    let sol = solve_unchecked(&problem, &SolverOptions::default())?;
    let sup_dev = sol
        .field
        .sup_error(|p| reg.radial_value(p[0].hypot(p[1])), |p| grid.in_disc(p));
    let (anchored, anchor) = sol.field.anchored(Anchor::Minimizer)?;
    let trace = eccentricity_trace(&anchored, anchor.point, t_range, SectionKind::default_for(regime))?;
    let (behavior, classification_error) = match classify_behavior(&trace, regime, &ClassifierOptions::default()) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let measured_slope = (trace.points.len() >= 2).then(|| {
        let pts: Vec<(f64, f64)> = trace
            .points
            .iter()
            .map(|p| ((1.0 / p.t).ln(), p.frame.eccentricity().ln()))
            .collect();
        fit_line(&pts).slope
    });
    let j_check = interior_max_check(&anchored, regime, J_ANNULUS, 1e-3 * regime.j0).ok();
    Ok(InstabilityRun {
        epsilon,
        solver: SolveSummary::from(&sol),
        anchor,
        sup_deviation_from_radial: sup_dev,
        trace,
        behavior,
        classification_error,
        predicted_slope: regime.alpha / (2.0 * (2.0 + regime.alpha)),
        measured_slope,
        j_check,
    })
}

pub fn run_instability(config: &ExperimentConfig) -> Result<InstabilityReport> {
    config.validate()?;
    let regime = Regime::new(config.alpha)?;
    let grid = config.solver_grid()?;
    let runs = config
        .epsilons
        .iter()
        .map(|&eps| instability_run(&regime, eps, grid, &config.t_range))
        .collect::<Result<Vec<_>>>()?;
    Ok(InstabilityReport {
        alpha: config.alpha,
        grid_n: config.grid_n,
        t_range: config.t_range.clone(),
        runs,
    })
}

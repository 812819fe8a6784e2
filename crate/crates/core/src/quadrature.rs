//! Adaptive composite Gauss-Legendre quadrature.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

const RULE_DEGREE: usize = 20;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(RULE_DEGREE).expect("nonzero")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: usize,
    /// Refinement stops once this many integrand evaluations have been spent;
    /// the remaining intervals keep their current estimates.
    pub max_evaluations: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_depth: 48,
            max_evaluations: 400_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]`, splitting first at the given interior
    /// breakpoints.
    pub fn integrate_with_breaks<F>(&self, f: F, a: f64, b: f64, breaks: &[f64]) -> Result<QuadResult>
    where
        F: Fn(f64) -> f64,
    {
        let mut points = vec![a];
        points.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
        points.push(b);
        points.sort_by(f64::total_cmp);
        let mut total = QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
        let span = (b - a).abs().max(f64::MIN_POSITIVE);
        for w in points.windows(2) {
            let frac = (w[1] - w[0]).abs() / span;
            let sub = Quadrature {
                abs_tol: self.abs_tol * frac.max(1e-3),
                ..*self
            };
            let r = sub.integrate(&f, w[0], w[1])?;
            total.value += r.value;
            total.error += r.error;
            total.evaluations += r.evaluations;
        }
        Ok(total)
    }

    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<QuadResult>
    where
        F: Fn(f64) -> f64,
    {
        if a == b {
            return Ok(QuadResult {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            });
        }
        let whole = rule().integrate(a, b, &f);
        let mut evaluations = RULE_DEGREE;
        let mut stack = vec![(a, b, whole, 0usize)];
        let mut value = 0.0;
        let mut error = 0.0;
        let mut failed = false;
        let span = (b - a).abs();
        while let Some((lo, hi, est, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = rule().integrate(lo, mid, &f);
            let right = rule().integrate(mid, hi, &f);
            evaluations += 2 * RULE_DEGREE;
            let refined = left + right;
            let diff = (refined - est).abs();
            let local_tol = (self.abs_tol * (hi - lo).abs() / span).max(self.rel_tol * refined.abs());
            if !refined.is_finite() {
                return Err(Error::Accuracy {
                    estimate: refined,
                    error: f64::INFINITY,
                });
            }
            let exhausted = depth >= self.max_depth || evaluations >= self.max_evaluations;
            if diff <= local_tol || exhausted {
                if diff > local_tol {
                    failed = true;
                }
                value += refined;
                error += diff;
            } else {
                stack.push((lo, mid, left, depth + 1));
                stack.push((mid, hi, right, depth + 1));
            }
        }
        if failed && error > self.abs_tol.max(self.rel_tol * value.abs()) * 1e3 {
            return Err(Error::Accuracy {
                estimate: value,
                error,
            });
        }
        Ok(QuadResult {
            value,
            error,
            evaluations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn smooth_integrands() {
        let q = Quadrature::default();
        let r = q.integrate(|x: f64| x.sin(), 0.0, PI).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        let r = q.integrate(|x: f64| (-x * x).exp(), -8.0, 8.0).unwrap();
        assert!((r.value - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_is_refined() {
        let q = Quadrature::with_tolerance(1e-12, 1e-12);
        let r = q.integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{}", r.value);
    }

    #[test]
    fn breakpoints_help_kinks() {
        let q = Quadrature::default();
        let r = q
            .integrate_with_breaks(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3])
            .unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
    }
}

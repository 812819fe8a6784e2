//! Exponent-dependent constants of `det D^2 u = |x|^alpha`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All constants derived from the exponent `alpha > -2`.
///
/// * `beta = 2 + alpha/2` is the homogeneity degree of the radial solution,
/// * `gamma = 2/beta - 1` is the exponent of the J-invariant,
/// * `c_alpha = 1/(beta sqrt(beta - 1))` is the radial coefficient, so that
///   `u0 = c_alpha |x|^beta` solves the equation,
/// * `j0` is the (constant) value of the J-invariant on `u0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c_alpha: f64,
    pub j0: f64,
}

impl Regime {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= -2.0 {
            return Err(Error::Domain(format!("alpha must exceed -2, got {alpha}")));
        }
        let beta = 2.0 + 0.5 * alpha;
        let gamma = 2.0 / beta - 1.0;
        let c_alpha = 1.0 / (beta * (beta - 1.0).sqrt());
        let j0 = c_alpha * beta * beta * (c_alpha * beta * (beta - 1.0)).powf(gamma);
        Ok(Self {
            alpha,
            beta,
            gamma,
            c_alpha,
            j0,
        })
    }

    /// `u0(x) = c_alpha |x|^beta`.
    pub fn radial_value(&self, r: f64) -> f64 {
        self.c_alpha * r.abs().powf(self.beta)
    }

    /// `|x|^alpha` at radius `r`.
    pub fn density(&self, r: f64) -> f64 {
        r.abs().powf(self.alpha)
    }

    /// Whether `|x|^alpha dx` is doubling with respect to all ellipsoids.
    pub fn is_doubling(&self) -> bool {
        self.alpha > -1.0
    }
}

/// Convenience wrapper matching the operation name used by the CLI and FFI.
pub fn regime_from_alpha(alpha: f64) -> Result<Regime> {
    Regime::new(alpha)
}

//! Homogeneous solutions `w = r^beta g(theta)`.
//!
//! On an arc where `g` increases, `g' = sqrt(2 h_c(g))` with the envelope
//!
//! ```text
//! 2 h_c(t) = c t^(2 - 2/beta) - beta^2 t^2 - 1/(beta - 1)^2,
//! ```
//!
//! and the half period of `g` is `I_c = integral over {h_c > 0} of dt / sqrt(2 h_c)`.
//! A `2 pi / k` periodic profile exists exactly when `I_c = pi / k`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::DiscGrid;
use crate::quadrature::Quadrature;
use crate::regime::Regime;

fn exponent(beta: f64) -> f64 {
    2.0 * (1.0 - 1.0 / beta)
}

fn two_h(t: f64, c: f64, beta: f64) -> f64 {
    let b1 = beta - 1.0;
    c * t.powf(exponent(beta)) - beta * beta * t * t - 1.0 / (b1 * b1)
}

/// `h_c(t)`, half of the displayed envelope quantity.
pub fn envelope_value(t: f64, c: f64, regime: &Regime) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("envelope needs t > 0, got {t}")));
    }
    Ok(0.5 * two_h(t, c, regime.beta))
}

/// `h_c'(t)`.
pub fn envelope_derivative(t: f64, c: f64, regime: &Regime) -> f64 {
    let beta = regime.beta;
    let q = exponent(beta);
    0.5 * (c * q * t.powf(q - 1.0) - 2.0 * beta * beta * t)
}

/// The parameter `c0` at which `c t^(2-2/beta)` touches `beta^2 t^2 + 1/(beta-1)^2`,
/// and the touching abscissa `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tangency {
    pub c0: f64,
    pub t0: f64,
}

/// Solves the two tangency conditions `f1 = f2`, `f1' = f2'`.
///
/// Equal slopes force `c = beta^2 t^(2/beta) / (1 - 1/beta)`; substituting into
/// `f1 = f2` leaves a single increasing function of `t`, bracketed and bisected.
pub fn tangency_c0(regime: &Regime) -> Tangency {
    let beta = regime.beta;
    let c_of = |t: f64| beta * beta * t.powf(2.0 / beta) / (1.0 - 1.0 / beta);
    let gap = |t: f64| two_h(t, c_of(t), beta);
    let (mut lo, mut hi) = (1.0, 1.0);
    while gap(lo) >= 0.0 {
        lo *= 0.5;
    }
    while gap(hi) < 0.0 {
        hi *= 2.0;
    }
    let t0 = bisect(gap, lo, hi);
    Tangency { c0: c_of(t0), t0 }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The envelope `h_c` together with its positivity window `(t_minus, t_plus)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileEnvelope {
    pub c: f64,
    #[serde(skip)]
    pub regime: Regime,
    pub t_minus: f64,
    pub t_plus: f64,
}

impl ProfileEnvelope {
    pub fn new(c: f64, regime: &Regime) -> Result<Self> {
        let tan = tangency_c0(regime);
        if !(c > tan.c0) {
            return Err(Error::EmptyPositivitySet { c, c0: tan.c0 });
        }
        let beta = regime.beta;
        let h = |t: f64| two_h(t, c, beta);
        if !(h(tan.t0) > 0.0) {
            // c is above c0 only by rounding
            return Err(Error::EmptyPositivitySet { c, c0: tan.c0 });
        }
        let mut lo = tan.t0;
        while h(lo) > 0.0 {
            lo *= 0.5;
        }
        let mut hi = tan.t0;
        while h(hi) > 0.0 {
            hi *= 2.0;
        }
        let t_minus = bisect(h, lo, tan.t0);
        let t_plus = bisect(h, tan.t0, hi);
        Ok(Self {
            c,
            regime: *regime,
            t_minus,
            t_plus,
        })
    }

    pub fn h(&self, t: f64) -> f64 {
        0.5 * two_h(t, self.c, self.regime.beta)
    }

    pub fn h_prime(&self, t: f64) -> f64 {
        envelope_derivative(t, self.c, &self.regime)
    }

    /// Maximiser of `h_c`; used as the split point of the period integral.
    pub fn peak(&self) -> f64 {
        let beta = self.regime.beta;
        let q = exponent(beta);
        let t = (self.c * q / (2.0 * beta * beta)).powf(beta / 2.0);
        t.clamp(self.t_minus, self.t_plus)
    }

    /// `2 h_c(t_minus + s^2) / s^2`, evaluated without cancellation at the root.
    fn ratio_left(&self, s: f64) -> f64 {
        let beta = self.regime.beta;
        let q = exponent(beta);
        let tm = self.t_minus;
        let s2 = s * s;
        let x = s2 / tm;
        let lead = if x < 1e-300 {
            self.c * tm.powf(q) * q / tm
        } else {
            self.c * tm.powf(q) * (q * x.ln_1p()).exp_m1() / s2
        };
        lead - beta * beta * (2.0 * tm + s2)
    }

    /// `2 h_c(t_plus - s^2) / s^2`.
    fn ratio_right(&self, s: f64) -> f64 {
        let beta = self.regime.beta;
        let q = exponent(beta);
        let tp = self.t_plus;
        let s2 = s * s;
        let x = s2 / tp;
        let lead = if x < 1e-300 {
            -self.c * tp.powf(q) * q / tp
        } else {
            self.c * tp.powf(q) * (q * (-x).ln_1p()).exp_m1() / s2
        };
        lead + beta * beta * (2.0 * tp - s2)
    }

    fn left_span(&self) -> f64 {
        (self.peak() - self.t_minus).max(0.0).sqrt()
    }

    fn right_span(&self) -> f64 {
        (self.t_plus - self.peak()).max(0.0).sqrt()
    }

    /// The two desingularised halves of the period integral.
    fn period_parts(&self, quad: &Quadrature) -> Result<(f64, f64, f64)> {
        let fl = |s: f64| 2.0 / self.ratio_left(s).sqrt();
        let fr = |s: f64| 2.0 / self.ratio_right(s).sqrt();
        let l = quad.integrate(fl, 0.0, self.left_span())?;
        let r = quad.integrate(fr, 0.0, self.right_span())?;
        Ok((l.value, r.value, l.error + r.error))
    }

    /// `I_c`, the length of one monotone arc of `g`.
    pub fn period_integral(&self) -> Result<f64> {
        let (l, r, _) = self.period_parts(&Quadrature::default())?;
        Ok(l + r)
    }

    /// `J_w` of every homogeneous solution built on this envelope:
    /// `c (1 - 1/beta) (beta (beta - 1))^gamma`.
    pub fn j_constant(&self) -> f64 {
        j_constant_for(self.c, &self.regime)
    }
}

fn j_constant_for(c: f64, regime: &Regime) -> f64 {
    let beta = regime.beta;
    c * (1.0 - 1.0 / beta) * (beta * (beta - 1.0)).powf(regime.gamma)
}

/// `I_c` for `c > c0(alpha)`, computed with the substitutions
/// `t = t_minus + s^2` and `t = t_plus - s^2` on either side of the peak of
/// `h_c` and adaptive Gauss-Legendre on the smooth transformed integrands.
pub fn period_integral(c: f64, regime: &Regime) -> Result<f64> {
    ProfileEnvelope::new(c, regime)?.period_integral()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Scan starts at `c0 (1 + c_min_offset)`.
    pub c_min_offset: f64,
    /// Scan ends at `c0 * c_max_factor`.
    pub c_max_factor: f64,
    pub n_scan: usize,
    /// `|I_c - pi/k|` below this on the whole scan marks an identity, not a root.
    pub degenerate_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            c_min_offset: 1e-6,
            c_max_factor: 1e6,
            n_scan: 160,
            degenerate_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    /// Every root of `I_c = pi/k` found on the scan; `c_star` is the smallest.
    Found { c_star: f64, roots: Vec<f64> },
    /// `pi/k` lies outside the sampled range of `I_c`.
    Absent,
    /// `I_c = pi/k` identically on the scan (the quadratic case `alpha = 0`, `k = 2`).
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSearch {
    pub k: u32,
    pub target: f64,
    pub outcome: SearchOutcome,
    pub i_min: f64,
    pub i_max: f64,
    pub c0: f64,
}

impl ProfileSearch {
    pub fn c_star(&self) -> Option<f64> {
        match self.outcome {
            SearchOutcome::Found { c_star, .. } => Some(c_star),
            _ => None,
        }
    }
}

/// Samples `I_c` on a log-spaced grid of `c` in `(c0, c0 * c_max_factor]`.
pub fn sample_period_curve(regime: &Regime, opts: &SearchOptions) -> Result<Vec<(f64, f64)>> {
    let c0 = tangency_c0(regime).c0;
    let lo = (c0 * (1.0 + opts.c_min_offset)).ln();
    let hi = (c0 * opts.c_max_factor).ln();
    let n = opts.n_scan.max(2);
    (0..n)
        .map(|i| {
            let c = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            Ok((c, period_integral(c, regime)?))
        })
        .collect()
}

/// Looks for `c > c0` with `I_c = pi / k`.
///
/// No monotonicity of `I_c` is assumed: every sign change of `I_c - pi/k`
/// on the scan is bisected.
pub fn find_profile(k: u32, regime: &Regime, opts: &SearchOptions) -> Result<ProfileSearch> {
    if k == 0 {
        return Err(Error::Domain("k must be a positive integer".into()));
    }
    let target = PI / k as f64;
    let curve = sample_period_curve(regime, opts)?;
    let c0 = tangency_c0(regime).c0;
    let i_min = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let i_max = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let outcome = if curve.iter().all(|p| (p.1 - target).abs() < opts.degenerate_tol) {
        SearchOutcome::Degenerate
    } else {
        let mut roots = Vec::new();
        for w in curve.windows(2) {
            let (d0, d1) = (w[0].1 - target, w[1].1 - target);
            if d0 == 0.0 {
                roots.push(w[0].0);
            } else if d0 * d1 < 0.0 {
                let f = |log_c: f64| period_integral(log_c.exp(), regime).map(|v| v - target).unwrap_or(f64::NAN);
                roots.push(bisect(f, w[0].0.ln(), w[1].0.ln()).exp());
            }
        }
        match roots.first() {
            Some(&c_star) => SearchOutcome::Found { c_star, roots },
            None => SearchOutcome::Absent,
        }
    };
    Ok(ProfileSearch {
        k,
        target,
        outcome,
        i_min,
        i_max,
        c0,
    })
}

/// One principal period of a homogeneous profile, sampled uniformly in
/// `theta` with `g` minimal at `theta = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneousProfile {
    pub envelope: ProfileEnvelope,
    pub k: u32,
    /// Principal period `2 I_c` (`2 pi / k` for the radial profile).
    pub period: f64,
    pub theta: Vec<f64>,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub radial: bool,
}

impl HomogeneousProfile {
    pub fn regime(&self) -> &Regime {
        &self.envelope.regime
    }

    fn step(&self) -> f64 {
        self.period / (self.theta.len() - 1) as f64
    }

    /// `(g, g')` at any angle by cubic Hermite interpolation of the samples.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        if self.radial {
            return (self.g[0], 0.0);
        }
        let n = self.theta.len() - 1;
        let dt = self.step();
        let x = theta.rem_euclid(self.period) / dt;
        let j = (x.floor() as usize).min(n - 1);
        let s = x - j as f64;
        let (g0, g1) = (self.g[j], self.g[j + 1]);
        let (d0, d1) = (self.dg[j] * dt, self.dg[j + 1] * dt);
        let s2 = s * s;
        let s3 = s2 * s;
        let g = (2.0 * s3 - 3.0 * s2 + 1.0) * g0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * g1
            + (s3 - s2) * d1;
        let dgds = (6.0 * s2 - 6.0 * s) * g0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * g1
            + (3.0 * s2 - 2.0 * s) * d1;
        (g, dgds / dt)
    }

    /// Sup over samples of `beta g (g'' + beta g) - (beta-1) g'^2 - 1/(beta-1)`,
    /// with `g''` from fourth-order periodic differences of the samples.
    pub fn ode_residual_max(&self) -> f64 {
        let beta = self.regime().beta;
        let n = self.theta.len() - 1;
        let dt = self.step();
        let g = |j: isize| self.g[j.rem_euclid(n as isize) as usize];
        (0..n as isize)
            .map(|j| {
                let d2 = (-g(j + 2) + 16.0 * g(j + 1) - 30.0 * g(j) + 16.0 * g(j - 1) - g(j - 2))
                    / (12.0 * dt * dt);
                let gj = g(j);
                let dg = self.dg[j as usize];
                (beta * gj * (d2 + beta * gj) - (beta - 1.0) * dg * dg - 1.0 / (beta - 1.0)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Sup over samples of `|g'^2 - 2 h_c(g)|`.
    pub fn envelope_residual_max(&self) -> f64 {
        self.g
            .iter()
            .zip(&self.dg)
            .map(|(&g, &d)| (d * d - 2.0 * self.envelope.h(g).max(0.0)).abs())
            .fold(0.0, f64::max)
    }

    /// `|k * period - 2 pi|`.
    pub fn closure_defect(&self) -> f64 {
        (self.k as f64 * self.period - 2.0 * PI).abs()
    }

    pub fn j_constant(&self) -> f64 {
        self.envelope.j_constant()
    }

    pub fn g_min(&self) -> f64 {
        self.g.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn g_max(&self) -> f64 {
        self.g.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds `g` over one principal period by inverting
/// `theta(g) = integral from t_minus to g of dt / sqrt(2 h_c)` on the increasing
/// arc and reflecting it. `c_star <= c0` yields the radial profile.
pub fn reconstruct_profile(c_star: f64, k: u32, regime: &Regime, n_samples: usize) -> Result<HomogeneousProfile> {
    if k == 0 {
        return Err(Error::Domain("k must be positive".into()));
    }
    let n = n_samples.max(8) & !1; // even, so the top of the arc is a sample
    let tan = tangency_c0(regime);
    if c_star <= tan.c0 * (1.0 + 1e-12) {
        let envelope = ProfileEnvelope {
            c: tan.c0,
            regime: *regime,
            t_minus: regime.c_alpha,
            t_plus: regime.c_alpha,
        };
        let period = 2.0 * PI / k as f64;
        return Ok(HomogeneousProfile {
            envelope,
            k,
            period,
            theta: (0..=n).map(|j| period * j as f64 / n as f64).collect(),
            g: vec![regime.c_alpha; n + 1],
            dg: vec![0.0; n + 1],
            radial: true,
        });
    }
    let env = ProfileEnvelope::new(c_star, regime)?;
    let quad = Quadrature::default();
    let (i_left, i_right, _) = env.period_parts(&quad)?;
    let half = i_left + i_right;
    let period = 2.0 * half;
    let dt = period / n as f64;
    let m = n / 2;

    let fl = |s: f64| 2.0 / env.ratio_left(s).sqrt();
    let fr = |s: f64| 2.0 / env.ratio_right(s).sqrt();
    let mut g = vec![0.0; n + 1];
    let mut dg = vec![0.0; n + 1];

    // Left piece: theta in [0, i_left], measured from the minimum.
    let mut arc = ArcInverter::new(&fl, env.left_span());
    // Right piece: distance from the top, I - theta in [0, i_right].
    let mut arc_r = ArcInverter::new(&fr, env.right_span());
    let mut right_positions = Vec::new();
    for j in 0..=m {
        let theta = j as f64 * dt;
        if theta <= i_left {
            let s = arc.solve(theta, &quad)?;
            g[j] = env.t_minus + s * s;
            dg[j] = s * env.ratio_left(s).max(0.0).sqrt();
        } else {
            right_positions.push(j);
        }
    }
    for &j in right_positions.iter().rev() {
        let dist = (half - j as f64 * dt).max(0.0);
        let s = arc_r.solve(dist, &quad)?;
        g[j] = env.t_plus - s * s;
        dg[j] = s * env.ratio_right(s).max(0.0).sqrt();
    }
    for j in m + 1..=n {
        g[j] = g[n - j];
        dg[j] = -dg[n - j];
    }
    Ok(HomogeneousProfile {
        envelope: env,
        k,
        period,
        theta: (0..=n).map(|j| j as f64 * dt).collect(),
        g,
        dg,
        radial: false,
    })
}

/// Sequential inversion of `F(s) = integral_0^s f` for increasing targets.
struct ArcInverter<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    span: f64,
    s: f64,
    value: f64,
}

impl<'a, F: Fn(f64) -> f64> ArcInverter<'a, F> {
    fn new(f: &'a F, span: f64) -> Self {
        Self {
            f,
            span,
            s: 0.0,
            value: 0.0,
        }
    }

    fn solve(&mut self, target: f64, quad: &Quadrature) -> Result<f64> {
        if target <= 0.0 {
            return Ok(0.0);
        }
        let (s_prev, v_prev) = (self.s, self.value);
        let mut s = (s_prev + (target - v_prev) / (self.f)(s_prev.max(1e-300))).min(self.span);
        let mut v = v_prev;
        for _ in 0..60 {
            v = v_prev + quad.integrate(self.f, s_prev, s)?.value;
            let step = (v - target) / (self.f)(s);
            let next = (s - step).clamp(s_prev, self.span);
            if (next - s).abs() <= 1e-15 * self.span.max(1e-300) {
                s = next;
                break;
            }
            s = next;
        }
        if !s.is_finite() {
            return Err(Error::Accuracy {
                estimate: v,
                error: f64::INFINITY,
            });
        }
        self.s = s;
        self.value = v_prev + quad.integrate(self.f, s_prev, s)?.value;
        Ok(s)
    }
}

/// `w(x) = r^beta g(theta - phase)` on every node of `grid`.
pub fn assemble_homogeneous(profile: &HomogeneousProfile, grid: DiscGrid) -> ScalarField {
    assemble_rotated(profile, grid, 0.0)
}

pub fn assemble_rotated(profile: &HomogeneousProfile, grid: DiscGrid, phase: f64) -> ScalarField {
    let beta = profile.regime().beta;
    let mut f = ScalarField::from_fn(grid, |p| {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return 0.0;
        }
        r.powf(beta) * profile.eval(p[1].atan2(p[0]) - phase).0
    });
    f.gradient_origin = Some([0.0, 0.0]);
    f
}

/// `r^beta g(theta - phase)` at a single point.
pub fn homogeneous_value(profile: &HomogeneousProfile, p: [f64; 2], phase: f64) -> f64 {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return 0.0;
    }
    r.powf(profile.regime().beta) * profile.eval(p[1].atan2(p[0]) - phase).0
}

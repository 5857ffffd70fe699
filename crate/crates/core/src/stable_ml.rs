//! One-sided stable laws, stable subordinators and Mittag-Leffler paths.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::paths::{generalized_inverse, PiecewisePath};

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// One-sided stable law with `E[exp(-w Z)] = exp(-laplace_scale * w^alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    alpha: f64,
    laplace_scale: f64,
}

impl StableSpec {
    pub fn new(alpha: f64, laplace_scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain(format!("alpha = {alpha} must lie in (0, 1)"));
        }
        if !(laplace_scale > 0.0 && laplace_scale.is_finite()) {
            return domain(format!("laplace scale {laplace_scale} must be positive"));
        }
        Ok(StableSpec { alpha, laplace_scale })
    }

    /// `lambda = Gamma(1 - alpha)`, so that `P(Z > x) ~ x^{-alpha}`.
    pub fn canonical(alpha: f64) -> Result<Self> {
        Self::new(alpha, gamma(1.0 - alpha))
    }

    /// `lambda = 1`.
    pub fn unit(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    /// `lambda = Gamma(3 - alpha) / (alpha (1 - alpha))`, the normalization
    /// used for the range of the subordinator in the covering theory.
    pub fn feller(alpha: f64) -> Result<Self> {
        Self::new(alpha, gamma(3.0 - alpha) / (alpha * (1.0 - alpha)))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn laplace_scale(&self) -> f64 {
        self.laplace_scale
    }

    pub fn laplace_transform(&self, w: f64) -> f64 {
        (-self.laplace_scale * w.powf(self.alpha)).exp()
    }

    /// `E[Z^{-s}] = Gamma(s/alpha) / (alpha Gamma(s) lambda^{s/alpha})` for `s > 0`.
    pub fn negative_moment(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        let a = self.alpha;
        gamma(s / a) / (a * gamma(s) * self.laplace_scale.powf(s / a))
    }

    /// Mean of the Mittag-Leffler variable `Z^{-alpha}`:
    /// `1 / (lambda Gamma(1 + alpha))`.
    pub fn ml_mean(&self) -> f64 {
        1.0 / (self.laplace_scale * gamma(1.0 + self.alpha))
    }

    /// Second moment of `Z^{-alpha}`: `2 / (lambda^2 Gamma(1 + 2 alpha))`.
    pub fn ml_second_moment(&self) -> f64 {
        2.0 / (self.laplace_scale.powi(2) * gamma(1.0 + 2.0 * self.alpha))
    }
}

/// Kanter's representation with `U = pi u`, `u` in (0, 1), and `e` a unit
/// exponential, returned on the log scale.
pub fn ln_stable_from_uniforms(spec: &StableSpec, u: f64, e: f64) -> f64 {
    let a = spec.alpha;
    let th = std::f64::consts::PI * u;
    let ln_unit = (a * th).sin().ln() - th.sin().ln() / a
        + (1.0 - a) / a * (((1.0 - a) * th).sin().ln() - e.ln());
    ln_unit + spec.laplace_scale.ln() / a
}

pub fn stable_from_uniforms(spec: &StableSpec, u: f64, e: f64) -> f64 {
    ln_stable_from_uniforms(spec, u, e).exp()
}

pub fn sample_ln_stable<R: Rng + ?Sized>(spec: &StableSpec, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let e: f64 = rng.sample(Exp1);
    ln_stable_from_uniforms(spec, u, e)
}

pub fn sample_stable<R: Rng + ?Sized>(spec: &StableSpec, rng: &mut R) -> f64 {
    sample_ln_stable(spec, rng).exp()
}

/// `Z^{-alpha}`, Mittag-Leffler distributed with mean [`StableSpec::ml_mean`].
pub fn sample_ml<R: Rng + ?Sized>(spec: &StableSpec, rng: &mut R) -> f64 {
    (-spec.alpha * sample_ln_stable(spec, rng)).exp()
}

/// Exact simulation of the subordinator on a strictly increasing grid that
/// contains 0. Increments over a cell of length `d` are `d^{1/alpha} Z(1)`.
/// The result is a step path through the grid values.
pub fn simulate_subordinator<R: Rng + ?Sized>(
    spec: &StableSpec,
    grid: &[f64],
    rng: &mut R,
) -> Result<PiecewisePath> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain("subordinator grid must be strictly increasing");
    }
    let Some(zero) = grid.iter().position(|&t| t == 0.0) else {
        return domain("subordinator grid must contain 0");
    };
    let inv = 1.0 / spec.alpha;
    let mut values = vec![0.0; grid.len()];
    for k in zero + 1..grid.len() {
        let d = grid[k] - grid[k - 1];
        values[k] = values[k - 1] + d.powf(inv) * sample_stable(spec, rng);
    }
    for k in (0..zero).rev() {
        let d = grid[k + 1] - grid[k];
        values[k] = values[k + 1] - d.powf(inv) * sample_stable(spec, rng);
    }
    PiecewisePath::step(grid.to_vec(), values)
}

/// `0, step, 2 step, ..., t_max`.
pub fn uniform_grid(t_max: f64, step: f64) -> Vec<f64> {
    let n = (t_max / step).ceil() as usize;
    (0..=n).map(|k| (k as f64 * step).min(t_max)).collect()
}

/// `0` followed by geometrically spaced points from `t_min` to `t_max` with
/// `per_efold` points per factor of `e`.
pub fn geometric_grid(t_min: f64, t_max: f64, per_efold: usize) -> Vec<f64> {
    let span = (t_max / t_min).ln();
    let n = (span * per_efold as f64).ceil().max(1.0) as usize;
    let mut g = Vec::with_capacity(n + 2);
    g.push(0.0);
    g.extend((0..=n).map(|k| t_min * (span * k as f64 / n as f64).exp()));
    *g.last_mut().unwrap() = t_max;
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MlApproximant {
    /// Interpolates the knots `(Z(t_i), t_i)`.
    Linear,
    /// The exact generalized inverse of the step path.
    Step,
}

/// Mittag-Leffler path `Z^` from a simulated subordinator step path.
pub fn mittag_leffler_path(z: &PiecewisePath, approximant: MlApproximant) -> Result<PiecewisePath> {
    match approximant {
        MlApproximant::Step => generalized_inverse(z),
        MlApproximant::Linear => {
            // Increments below floating resolution produce repeated values;
            // keep the latest time for each value.
            let mut bps: Vec<f64> = Vec::with_capacity(z.values().len());
            let mut vals: Vec<f64> = Vec::with_capacity(z.values().len());
            for (&t, &v) in z.breakpoints().iter().zip(z.values()) {
                if bps.last() == Some(&v) {
                    *vals.last_mut().unwrap() = t;
                } else {
                    bps.push(v);
                    vals.push(t);
                }
            }
            PiecewisePath::linear(bps, vals)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantTable {
    pub alpha: f64,
    /// `sin(pi alpha) / (pi alpha)`.
    pub c: f64,
    /// `alpha^{1-alpha} (1-alpha)^alpha / Gamma(3 - alpha)`.
    pub c_alpha: f64,
    /// `Gamma(3 - alpha) / (alpha (1 - alpha))`.
    pub c_check: f64,
    /// `1 / c_check`.
    pub c_hat: f64,
    /// `alpha^alpha (1-alpha)^{1-alpha}`.
    pub c_tilde: f64,
}

pub fn constants(alpha: f64) -> Result<ConstantTable> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("alpha = {alpha} must lie in (0, 1)"));
    }
    let a = alpha;
    let pa = std::f64::consts::PI * a;
    let c_check = gamma(3.0 - a) / (a * (1.0 - a));
    Ok(ConstantTable {
        alpha,
        c: pa.sin() / pa,
        c_alpha: a.powf(1.0 - a) * (1.0 - a).powf(a) / gamma(3.0 - a),
        c_check,
        c_hat: 1.0 / c_check,
        c_tilde: a.powf(a) * (1.0 - a).powf(1.0 - a),
    })
}

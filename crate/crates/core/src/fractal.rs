//! Hausdorff gauges, order-two densities of local time, and cover estimates
//! for the range of a subordinator.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::{log_average_power, LogAverage};
use crate::paths::{PathKind, PiecewisePath};
use crate::renewal::counting_path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeValue {
    pub value: f64,
    /// Set when `t >= 1/e`, where the iterated logarithm is not positive and
    /// the gauge is replaced by `t^alpha`.
    pub clamped: bool,
}

/// `psi(t) = t^alpha (log log 1/t)^{1 - alpha}`. For `alpha = 1` this is `t`.
pub fn gauge_psi(t: f64, alpha: f64) -> Result<GaugeValue> {
    if !(t > 0.0) {
        return domain(format!("gauge argument t = {t} must be positive"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha = {alpha} must lie in (0, 1]"));
    }
    if alpha == 1.0 {
        return Ok(GaugeValue { value: t, clamped: false });
    }
    if t >= (-1.0f64).exp() {
        return Ok(GaugeValue { value: t.powf(alpha), clamped: true });
    }
    let ll = (-t.ln()).ln();
    Ok(GaugeValue { value: t.powf(alpha) * ll.powf(1.0 - alpha), clamped: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gauge {
    /// `t^alpha`.
    Power { alpha: f64 },
    /// [`gauge_psi`].
    Psi { alpha: f64 },
}

impl Gauge {
    pub fn eval(&self, t: f64) -> Result<f64> {
        match *self {
            Gauge::Power { alpha } => Ok(t.powf(alpha)),
            Gauge::Psi { alpha } => Ok(gauge_psi(t, alpha)?.value),
        }
    }
}

/// Paths whose log-scale integrals `int Z(e^{-s}) e^{alpha s} ds` have a
/// closed form.
pub trait LogScaleIntegrable {
    /// Smallest `y > 0` down to which the path is resolved.
    fn finest_scale(&self) -> f64;
    /// `int_{s0}^{s1} Z(e^{-s}) e^{alpha s} ds`.
    fn log_scale_integral(&self, s0: f64, s1: f64, alpha: f64) -> Result<f64>;
}

/// Deterministic `y -> coeff * y^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub coeff: f64,
    pub exponent: f64,
}

impl LogScaleIntegrable for PowerProfile {
    fn finest_scale(&self) -> f64 {
        0.0
    }

    fn log_scale_integral(&self, s0: f64, s1: f64, alpha: f64) -> Result<f64> {
        let k = alpha - self.exponent;
        Ok(if k == 0.0 {
            self.coeff * (s1 - s0)
        } else {
            self.coeff * ((k * s1).exp() - (k * s0).exp()) / k
        })
    }
}

impl LogScaleIntegrable for PiecewisePath {
    fn finest_scale(&self) -> f64 {
        self.breakpoints().iter().copied().find(|&b| b > 0.0).unwrap_or(f64::INFINITY)
    }

    fn log_scale_integral(&self, s0: f64, s1: f64, alpha: f64) -> Result<f64> {
        let (y_lo, y_hi) = ((-s1).exp(), (-s0).exp());
        if !(self.window().contains(y_lo) && self.window().contains(y_hi)) {
            return domain(format!("path window {:?} does not cover [{y_lo:e}, {y_hi}]", self.window()));
        }
        let b = self.breakpoints();
        let v = self.values();
        let mut total = 0.0;
        let mut i = b.partition_point(|&x| x <= y_lo).saturating_sub(1);
        let mut lo = y_lo;
        while lo < y_hi {
            let hi = if i + 1 < b.len() { b[i + 1].min(y_hi) } else { y_hi };
            if hi > lo {
                // On this piece Z(y) = a + c y; with y = e^{-s} the integrand is
                // a e^{alpha s} + c e^{(alpha - 1) s}.
                let (sa, sb) = (-hi.ln(), -lo.ln());
                let (a, c) = match self.kind() {
                    PathKind::Step => (v[i], 0.0),
                    PathKind::Linear => {
                        if i + 1 < b.len() {
                            let c = (v[i + 1] - v[i]) / (b[i + 1] - b[i]);
                            (v[i] - c * b[i], c)
                        } else {
                            (v[i], 0.0)
                        }
                    }
                };
                total += a * ((alpha * sb).exp() - (alpha * sa).exp()) / alpha;
                if c != 0.0 {
                    let k = alpha - 1.0;
                    total += c * ((k * sb).exp() - (k * sa).exp()) / k;
                }
            }
            lo = hi;
            i += 1;
            if i >= b.len() {
                break;
            }
        }
        Ok(total)
    }
}

/// `(1/S) int_0^S Z(e^{-s}) e^{alpha s} ds`, exact on each piece.
pub fn order_two_density<P: LogScaleIntegrable + ?Sized>(path: &P, alpha: f64, s_max: f64) -> Result<f64> {
    if !(s_max > 0.0) {
        return domain("log-scale horizon must be positive");
    }
    let requested = (-s_max).exp();
    let finest = path.finest_scale();
    if finest > requested {
        return Err(Error::Unresolved { requested, finest });
    }
    Ok(path.log_scale_integral(0.0, s_max, alpha)? / s_max)
}

/// Greedy cover of sorted points by clusters of diameter at most `delta`;
/// returns `sum gauge(max(diameter, min_diameter))`.
pub fn hausdorff_cover_estimate(points: &[f64], gauge: &Gauge, delta: f64, min_diameter: f64) -> Result<f64> {
    if !(delta > 0.0 && min_diameter > 0.0) {
        return domain("cover scales must be positive");
    }
    if points.windows(2).any(|w| w[0] > w[1]) {
        return domain("cover points must be sorted");
    }
    let mut total = 0.0;
    let mut i = 0;
    while i < points.len() {
        let start = points[i];
        let mut j = i;
        while j + 1 < points.len() && points[j + 1] - start <= delta {
            j += 1;
        }
        total += gauge.eval((points[j] - start).max(min_diameter))?;
        i = j + 1;
    }
    Ok(total)
}

/// Order-two average of an integer renewal set with `a_hat(t) = t^alpha`:
/// the counting path of `events` fed to the exact power-law log average.
pub fn integer_order_two(events: &[f64], alpha: f64, t: f64) -> Result<LogAverage> {
    let n: PiecewisePath = counting_path(events, t)?;
    log_average_power(&n, alpha, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn gauge_values() {
        let t = (-E).exp();
        let g = gauge_psi(t, 0.5).unwrap();
        assert!((g.value - (-E / 2.0).exp()).abs() < 1e-15);
        assert!(!g.clamped);
        assert!(gauge_psi(0.0, 0.5).is_err());
        assert!(gauge_psi(0.5, 0.5).unwrap().clamped);
        assert_eq!(gauge_psi(0.01, 1.0).unwrap().value, 0.01);
    }

    #[test]
    fn density_of_power_profile() {
        let p = PowerProfile { coeff: 0.7, exponent: 0.4 };
        assert!((order_two_density(&p, 0.4, 3.0).unwrap() - 0.7).abs() < 1e-15);
        let zero = PiecewisePath::linear(vec![0.0, 1e-9, 2.0], vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(order_two_density(&zero, 0.5, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn density_needs_resolution() {
        let p = PiecewisePath::linear(vec![0.0, 0.1, 2.0], vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(order_two_density(&p, 0.5, 10.0), Err(Error::Unresolved { .. })));
    }

    #[test]
    fn linear_piece_integral_matches_quadrature() {
        let p = PiecewisePath::linear(vec![0.0, 1e-5, 0.3, 1.5], vec![0.0, 0.2, 0.9, 1.1]).unwrap();
        let exact = p.log_scale_integral(0.0, 10.0, 0.6).unwrap();
        let n = 200_000;
        let h = 10.0 / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let s = k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += w * p.evaluate((-s).exp()).unwrap() * (0.6 * s).exp();
        }
        assert!((acc * h - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn covers() {
        let g = Gauge::Power { alpha: 0.5 };
        assert_eq!(hausdorff_cover_estimate(&[], &g, 0.1, 1e-3).unwrap(), 0.0);
        assert!((hausdorff_cover_estimate(&[0.3], &g, 0.1, 1e-4).unwrap() - 0.01).abs() < 1e-15);
        let pts: Vec<f64> = (0..=100_000).map(|k| k as f64 * 1e-5).collect();
        let v = hausdorff_cover_estimate(&pts, &Gauge::Power { alpha: 1.0 }, 0.01, 1e-6).unwrap();
        assert!((v - 1.0).abs() < 0.01);
    }
}

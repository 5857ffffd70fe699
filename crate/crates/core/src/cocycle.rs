//! Cocycles over flows on path space and over shift transformations, with
//! Monte Carlo estimators for their integrals.
//!
//! Orbit points are concrete paths; the flow is the increment flow
//! `eta_s`, which on counting paths of renewal processes is the renewal flow.

use std::sync::Arc;

use rand::distr::Open01;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::paths::{hahn_decompose, increment_flow, PathKind, PiecewisePath};
use crate::renewal::{renewal_times, sample_size_biased, substream, two_sided_counting_path, GapLaw, Horizon};
use crate::stable_ml::{mittag_leffler_path, simulate_subordinator, uniform_grid, MlApproximant, StableSpec};

pub trait Flow {
    type Point;
    fn act(&self, x: &Self::Point, s: f64) -> Result<Self::Point>;
}

pub trait Cocycle<P> {
    fn eval(&self, x: &P, t: f64) -> Result<f64>;
}

/// The increment flow `eta_s` on paths.
#[derive(Debug, Clone, Copy, Default)]
pub struct IncrementFlow;

impl Flow for IncrementFlow {
    type Point = PiecewisePath;

    fn act(&self, x: &PiecewisePath, s: f64) -> Result<PiecewisePath> {
        increment_flow(x, s)
    }
}

/// `Phi(x, t) = x(t) - x(0)`. On primal paths this is `f(t)`, on dual paths
/// under the plain increment flow it is `f^(t)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Coordinate;

impl Cocycle<PiecewisePath> for Coordinate {
    fn eval(&self, x: &PiecewisePath, t: f64) -> Result<f64> {
        Ok(x.evaluate(t)? - x.evaluate(0.0)?)
    }
}

/// Number of visits to the section "the path jumps at 0": jumps in `(0, t]`
/// for `t >= 0`, minus the jumps in `(t, 0]` for `t < 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Counting;

fn jump_times(x: &PiecewisePath) -> impl Iterator<Item = f64> + '_ {
    let b = x.breakpoints();
    let v = x.values();
    (1..b.len()).filter(move |&i| v[i] != v[i - 1]).map(move |i| b[i])
}

impl Cocycle<PiecewisePath> for Counting {
    fn eval(&self, x: &PiecewisePath, t: f64) -> Result<f64> {
        if x.kind() != PathKind::Step {
            return domain("counting cocycle needs a step path");
        }
        if !(x.in_domain(t) && x.in_domain(0.0)) {
            return domain(format!("t = {t} or 0 outside {:?}", x.window()));
        }
        let n = if t >= 0.0 {
            jump_times(x).filter(|&s| s > 0.0 && s <= t).count() as f64
        } else {
            -(jump_times(x).filter(|&s| s > t && s <= 0.0).count() as f64)
        };
        Ok(n)
    }
}

/// Cocycles `Phi(x, t) = int_0^t phi(eta_s x) ds` for observables with an
/// exact antiderivative along the orbit.
#[derive(Debug, Clone, Copy)]
pub enum FunctionGenerated {
    /// `phi = c`: `Phi(x, t) = c t`.
    Constant(f64),
    /// `phi(x) = x(h) - x(0)`: `Phi(x, t) = int_t^{t+h} x - int_0^h x`.
    ForwardIncrement { h: f64 },
}

impl Cocycle<PiecewisePath> for FunctionGenerated {
    fn eval(&self, x: &PiecewisePath, t: f64) -> Result<f64> {
        match *self {
            FunctionGenerated::Constant(c) => Ok(c * t),
            FunctionGenerated::ForwardIncrement { h } => {
                Ok(x.integral(t, t + h)? - x.integral(0.0, h)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HahnSign {
    Positive,
    Negative,
}

/// Positive or negative part of the coordinate cocycle: `H(x)(t) - H(x)(0)`
/// with `x - x(t_min) = H+ - H-`.
#[derive(Debug, Clone, Copy)]
pub struct HahnPart(pub HahnSign);

impl Cocycle<PiecewisePath> for HahnPart {
    fn eval(&self, x: &PiecewisePath, t: f64) -> Result<f64> {
        let (plus, minus) = hahn_decompose(x)?;
        let part = match self.0 {
            HahnSign::Positive => plus,
            HahnSign::Negative => minus,
        };
        Ok(part.evaluate(t)? - part.evaluate(0.0)?)
    }
}

/// Max over cases of `|Phi(x, s + t) - Phi(x, s) - Phi(flow_s x, t)|`.
pub fn verify_cocycle_law<F, C>(flow: &F, cocycle: &C, cases: &[(F::Point, f64, f64)]) -> Result<f64>
where
    F: Flow,
    C: Cocycle<F::Point>,
{
    let mut worst: f64 = 0.0;
    for (x, s, t) in cases {
        let moved = flow.act(x, *s)?;
        let r = cocycle.eval(x, s + t)? - cocycle.eval(x, *s)? - cocycle.eval(&moved, *t)?;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// A finite window of a bi-infinite symbol sequence with a marked origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolWord {
    symbols: Arc<[u64]>,
    origin: usize,
}

impl SymbolWord {
    pub fn new(symbols: Vec<u64>, origin: usize) -> Result<Self> {
        if origin >= symbols.len() {
            return domain("origin outside the word");
        }
        Ok(SymbolWord { symbols: symbols.into(), origin })
    }

    /// Symbol at offset `n` from the origin.
    pub fn at(&self, n: i64) -> Result<u64> {
        let i = self.origin as i64 + n;
        if i < 0 || i >= self.symbols.len() as i64 {
            return domain(format!("offset {n} outside the word window"));
        }
        Ok(self.symbols[i as usize])
    }

    /// The left shift applied `n` times.
    pub fn shift(&self, n: i64) -> Result<SymbolWord> {
        let i = self.origin as i64 + n;
        if i < 0 || i >= self.symbols.len() as i64 {
            return domain(format!("shift by {n} leaves the word window"));
        }
        Ok(SymbolWord { symbols: self.symbols.clone(), origin: i as usize })
    }
}

/// `Psi(x, n) = sum_{i=0}^{n-1} phi(T^i x)` for `n > 0`,
/// `-sum_{i=n}^{-1} phi(T^i x)` for `n < 0`, and 0 at `n = 0`.
pub struct DiscreteGenerated<F: Fn(u64) -> f64> {
    pub phi: F,
}

impl<F: Fn(u64) -> f64> DiscreteGenerated<F> {
    pub fn eval(&self, x: &SymbolWord, n: i64) -> Result<f64> {
        let mut acc = 0.0;
        if n > 0 {
            for i in 0..n {
                acc += (self.phi)(x.at(i)?);
            }
        } else {
            for i in n..0 {
                acc -= (self.phi)(x.at(i)?);
            }
        }
        Ok(acc)
    }

    /// Max over cases of `|Psi(x, n + m) - Psi(x, n) - Psi(T^n x, m)|`.
    pub fn verify_law(&self, cases: &[(SymbolWord, i64, i64)]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (x, n, m) in cases {
            let r = self.eval(x, n + m)? - self.eval(x, *n)? - self.eval(&x.shift(*n)?, *m)?;
            worst = worst.max(r.abs());
        }
        Ok(worst)
    }
}

/// A measure on path space sampled as `mass` times a probability law.
pub trait MeasureSampler {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<PiecewisePath>;
    fn mass(&self) -> f64;
}

/// Invariant measure of the renewal flow for a finite-mean integer gap law:
/// time 0 is uniform inside a size-biased gap. Total mass `E[X]` relative to
/// the section measure.
#[derive(Debug, Clone)]
pub struct StationaryRenewal {
    pub law: GapLaw,
    /// Paths cover `[-reach, reach]`.
    pub reach: f64,
}

impl MeasureSampler for StationaryRenewal {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<PiecewisePath> {
        let k = sample_size_biased(&self.law, rng)?;
        let u = k * rng.sample::<f64, _>(Open01);
        let mut after = vec![k - u];
        let more = renewal_times(&self.law, Horizon::ByTime(self.reach), rng)?;
        after.extend(more.iter().map(|s| s + k - u));
        let mut neg = substream(rng);
        let mut before = vec![u];
        let more = renewal_times(&self.law, Horizon::ByTime(self.reach), &mut neg)?;
        before.extend(more.iter().map(|s| s + u));
        stationary_path(&before, &after, -self.reach, self.reach)
    }

    fn mass(&self) -> f64 {
        self.law.mean().unwrap_or(f64::INFINITY)
    }
}

/// Counting path with renewals at `-before[k]` and `after[k]`, no renewal at
/// 0, normalised to `N(0) = 0`.
fn stationary_path(before: &[f64], after: &[f64], t_lo: f64, t_hi: f64) -> Result<PiecewisePath> {
    let mut bps = vec![t_lo];
    let k_lo = before.iter().take_while(|&&d| -d > t_lo).count();
    let mut vals = vec![-(k_lo as f64)];
    for k in (0..k_lo).rev() {
        bps.push(-before[k]);
        vals.push(-(k as f64));
    }
    bps.push(0.0);
    vals.push(0.0);
    let mut n = 0.0;
    for &s in after.iter().take_while(|&&s| s <= t_hi) {
        n += 1.0;
        bps.push(s);
        vals.push(n);
    }
    if *bps.last().unwrap() < t_hi {
        bps.push(t_hi);
        vals.push(n);
    }
    PiecewisePath::step(bps, vals)
}

/// Law of Mittag-Leffler paths `Z^` on `[0, reach]`, from the subordinator on
/// a uniform grid of the given step.
#[derive(Debug, Clone)]
pub struct MittagLefflerPaths {
    pub spec: StableSpec,
    pub reach: f64,
    pub grid_step: f64,
}

impl MeasureSampler for MittagLefflerPaths {
    fn sample(&self, rng: &mut dyn RngCore) -> Result<PiecewisePath> {
        let mut t_max = 1.0;
        loop {
            let z = simulate_subordinator(&self.spec, &uniform_grid(t_max, self.grid_step), rng)?;
            if z.values().last().copied().unwrap_or(0.0) >= self.reach {
                return mittag_leffler_path(&z, MlApproximant::Linear);
            }
            t_max *= 2.0;
        }
    }

    fn mass(&self) -> f64 {
        1.0
    }
}

/// A cross-section of the flow with its (probability) section measure.
pub trait CrossSection {
    fn sample_base(&self, rng: &mut dyn RngCore) -> Result<PiecewisePath>;
    /// First return time `r(x) > 0` to the section.
    fn return_time(&self, x: &PiecewisePath) -> Result<f64>;
}

/// Section "renewal at time 0" of the renewal flow; the base measure is the
/// law of the i.i.d. gap sequence.
#[derive(Debug, Clone)]
pub struct RenewalSection {
    pub law: GapLaw,
    pub events: usize,
}

impl CrossSection for RenewalSection {
    fn sample_base(&self, rng: &mut dyn RngCore) -> Result<PiecewisePath> {
        let after = renewal_times(&self.law, Horizon::ByEvents(self.events), rng)?;
        let mut neg = substream(rng);
        let before = renewal_times(&self.law, Horizon::ByEvents(self.events), &mut neg)?;
        two_sided_counting_path(&before, &after, -before.last().unwrap(), *after.last().unwrap())
    }

    fn return_time(&self, x: &PiecewisePath) -> Result<f64> {
        jump_times(x)
            .find(|&s| s > 0.0)
            .ok_or(Error::NotYetRecurrent(x.t_max()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum IntegralEstimate {
    Finite {
        value: f64,
        se: Option<f64>,
        n: usize,
    },
    /// The sample tail index is below 1, so the mean is infinite; running
    /// means at doubling sample sizes are kept as a diagnostic.
    Divergent {
        growth: Vec<(usize, f64)>,
        tail_index: f64,
    },
}

impl IntegralEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            IntegralEstimate::Finite { value, .. } => Some(*value),
            IntegralEstimate::Divergent { .. } => None,
        }
    }

    pub fn se(&self) -> Option<f64> {
        match self {
            IntegralEstimate::Finite { se, .. } => *se,
            IntegralEstimate::Divergent { .. } => None,
        }
    }
}

/// Number of Hill standard errors by which the tail index must fall below 1
/// before a nonnegative sample is reported as having infinite mean.
pub const DIVERGENCE_Z: f64 = 2.0;

/// Hill estimate of the tail index from the top `k = floor(sqrt(n))` order
/// statistics, with `k`. `None` if fewer than 16 positive values.
pub fn hill_tail_index(xs: &[f64]) -> Option<(f64, usize)> {
    let mut pos: Vec<f64> = xs.iter().copied().filter(|&x| x > 0.0).collect();
    if pos.len() < 16 {
        return None;
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    let k = (pos.len() as f64).sqrt() as usize;
    let base = pos[k].ln();
    let mean_log = pos[..k].iter().map(|x| x.ln() - base).sum::<f64>() / k as f64;
    Some((if mean_log > 0.0 { 1.0 / mean_log } else { f64::INFINITY }, k))
}

fn summarize(xs: &[f64]) -> IntegralEstimate {
    let n = xs.len();
    if n >= 64 && xs.iter().all(|&x| x >= 0.0) {
        if let Some((tail_index, k)) = hill_tail_index(xs) {
            if tail_index * (1.0 + DIVERGENCE_Z / (k as f64).sqrt()) < 1.0 {
                let mut growth = Vec::new();
                let mut m = (n >> 5).max(1);
                while m <= n {
                    growth.push((m, xs[..m].iter().sum::<f64>() / m as f64));
                    m *= 2;
                }
                return IntegralEstimate::Divergent { growth, tail_index };
            }
        }
    }
    let est = crate::renewal::McEstimate::from_samples(xs);
    IntegralEstimate::Finite { value: est.mean, se: est.se, n }
}

/// Monte Carlo estimate of `(1/t) int Phi(x, t) dmu(x)`.
pub fn integral_flow_average<C: Cocycle<PiecewisePath>>(
    cocycle: &C,
    measure: &dyn MeasureSampler,
    t: f64,
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<IntegralEstimate> {
    if !(t > 0.0) {
        return domain("flow-average time must be positive");
    }
    let mass = measure.mass();
    let mut xs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x = measure.sample(rng)?;
        xs.push(mass * cocycle.eval(&x, t)? / t);
    }
    Ok(summarize(&xs))
}

/// Monte Carlo estimate of `int_B Phi(x, r(x)) dmu_B(x)`.
pub fn integral_cross_section<C: Cocycle<PiecewisePath>>(
    cocycle: &C,
    section: &dyn CrossSection,
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<IntegralEstimate> {
    let mut xs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x = section.sample_base(rng)?;
        let r = section.return_time(&x)?;
        xs.push(cocycle.eval(&x, r)?);
    }
    Ok(summarize(&xs))
}

/// `Phi(x, T) / T`.
pub fn birkhoff_cocycle<C: Cocycle<PiecewisePath>>(cocycle: &C, x: &PiecewisePath, t: f64) -> Result<f64> {
    if t == 0.0 {
        return domain("Birkhoff average at T = 0");
    }
    Ok(cocycle.eval(x, t)? / t)
}

/// `Phi(x, T) / Psi(x, T)`.
pub fn hopf_ratio<A, B>(phi: &A, psi: &B, x: &PiecewisePath, t: f64) -> Result<f64>
where
    A: Cocycle<PiecewisePath>,
    B: Cocycle<PiecewisePath>,
{
    let den = psi.eval(x, t)?;
    if den == 0.0 {
        return Err(Error::NotYetRecurrent(t));
    }
    Ok(phi.eval(x, t)? / den)
}

/// Ratio of visit counts along a state sequence: `#{n < steps : phi}` over
/// `#{n < steps : psi}`.
pub fn discrete_hopf_ratio<I, P, Q>(states: I, phi: P, psi: Q, steps: usize) -> Result<f64>
where
    I: IntoIterator<Item = u64>,
    P: Fn(u64) -> f64,
    Q: Fn(u64) -> f64,
{
    let (mut num, mut den) = (0.0, 0.0);
    for x in states.into_iter().take(steps) {
        num += phi(x);
        den += psi(x);
    }
    if den == 0.0 {
        return Err(Error::NotYetRecurrent(steps as f64));
    }
    Ok(num / den)
}

//! Order-two ergodic averages, Cesàro distances between flow orbits, moment
//! convergence, and a reproducible parallel ensemble runner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::paths::{PathKind, PiecewisePath};
use crate::renewal::{GapLaw, McEstimate};
use crate::stable_ml::{sample_ln_stable, StableSpec};

/// Cumulative log-average at the end of one log-time block
/// `[u_lo, u_hi]`, `u = log t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockValue {
    pub u_lo: f64,
    pub u_hi: f64,
    /// Contribution of this block to `int_1^T N(t) dt / (a_hat(t) t)`.
    pub increment: f64,
    /// Average over `[1, e^{u_hi}]`, normalised by `u_hi`.
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogAverage {
    pub value: f64,
    pub blocks: Vec<BlockValue>,
}

/// Dyadic block edges in log time: `0, 1, 2, 4, 8, ...`, ending at `log T`.
pub fn dyadic_log_blocks(log_t: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut e = 1.0;
    while e < log_t {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(log_t);
    edges
}

fn check_counting(n: &PiecewisePath, t: f64) -> Result<()> {
    if n.kind() != PathKind::Step {
        return domain("log averages take a step counting path");
    }
    if !(t > 1.0) {
        return domain(format!("horizon T = {t} must exceed 1"));
    }
    if n.t_min() > 1.0 || n.t_max() < t {
        return domain(format!("path window {:?} does not cover [1, {t}]", n.window()));
    }
    Ok(())
}

/// Walks the constancy intervals of `n` inside `[1, T]`, calling
/// `f(value, lo, hi)`.
fn for_each_piece(n: &PiecewisePath, t: f64, mut f: impl FnMut(f64, f64, f64) -> Result<()>) -> Result<()> {
    let b = n.breakpoints();
    let v = n.values();
    let start = b.partition_point(|&x| x <= 1.0).saturating_sub(1);
    let mut lo = 1.0;
    let mut i = start;
    while lo < t {
        let hi = if i + 1 < b.len() { b[i + 1].min(t) } else { t };
        if hi > lo && v[i] != 0.0 {
            f(v[i], lo, hi)?;
        }
        lo = hi.max(lo);
        i += 1;
        if i >= b.len() {
            break;
        }
    }
    Ok(())
}

fn assemble_blocks(per_block: &[f64], edges: &[f64]) -> Vec<BlockValue> {
    let mut acc = 0.0;
    per_block
        .iter()
        .enumerate()
        .map(|(k, &inc)| {
            acc += inc;
            let u_hi = edges[k + 1];
            BlockValue { u_lo: edges[k], u_hi, increment: inc, cumulative: if u_hi > 0.0 { acc / u_hi } else { 0.0 } }
        })
        .collect()
}

/// `(1 / log T) int_1^T N(t) t^{-alpha - 1} dt`, integrated exactly piece by
/// piece: `k (s_lo^{-alpha} - s_hi^{-alpha}) / alpha` on each constancy
/// interval. Pieces straddling a block edge are split there.
pub fn log_average_power(n: &PiecewisePath, alpha: f64, t: f64) -> Result<LogAverage> {
    check_counting(n, t)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return domain(format!("alpha = {alpha} must lie in (0, 1]"));
    }
    let edges = dyadic_log_blocks(t.ln());
    let tedges: Vec<f64> = edges.iter().map(|u| u.exp()).collect();
    let mut per_block = vec![0.0; edges.len() - 1];
    let mut blk = 0;
    let piece = |k: f64, lo: f64, hi: f64| k * (lo.powf(-alpha) - hi.powf(-alpha)) / alpha;
    for_each_piece(n, t, |k, mut lo, hi| {
        while blk + 1 < per_block.len() && lo >= tedges[blk + 1] {
            blk += 1;
        }
        while blk + 1 < per_block.len() && hi > tedges[blk + 1] {
            per_block[blk] += piece(k, lo, tedges[blk + 1]);
            lo = tedges[blk + 1];
            blk += 1;
        }
        per_block[blk] += piece(k, lo, hi);
        Ok(())
    })?;
    let value = per_block.iter().sum::<f64>() / t.ln();
    Ok(LogAverage { value, blocks: assemble_blocks(&per_block, &edges) })
}

/// Adaptive Simpson quadrature to relative tolerance `rel_tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-15 * a.abs().max(1.0) {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Tolerance(format!("quadrature on [{a}, {b}] did not converge")));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `(1 / log T) int_1^T f(t) dt / (a_hat(t) t)` for a step or linear path
/// `f`, by adaptive quadrature in `u = log t` on each piece of `f`.
pub fn log_average_general(
    f: &PiecewisePath,
    a_hat: &dyn Fn(f64) -> f64,
    t: f64,
    rel_tol: f64,
) -> Result<LogAverage> {
    if !(t > 1.0) {
        return domain(format!("horizon T = {t} must exceed 1"));
    }
    if f.t_min() > 1.0 || f.t_max() < t {
        return domain(format!("path window {:?} does not cover [1, {t}]", f.window()));
    }
    let edges = dyadic_log_blocks(t.ln());
    let mut per_block = vec![0.0; edges.len() - 1];
    let b = f.breakpoints();
    // Piece boundaries in log time, merged with block edges.
    let mut cuts: Vec<f64> = b.iter().filter(|&&x| x > 1.0 && x < t).map(|x| x.ln()).collect();
    cuts.extend_from_slice(&edges);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut blk = 0;
    for w in cuts.windows(2) {
        let (u0, u1) = (w[0], w[1]);
        if u1 <= u0 {
            continue;
        }
        while blk + 1 < per_block.len() && u0 >= edges[blk + 1] {
            blk += 1;
        }
        let (t0, t1) = (u0.exp(), u1.exp());
        let mid = (0.5 * (u0 + u1)).exp();
        let idx = b.partition_point(|&x| x <= mid).saturating_sub(1);
        let part = match f.kind() {
            PathKind::Step => {
                let k = f.values()[idx];
                if k == 0.0 {
                    0.0
                } else {
                    k * adaptive_simpson(&|u: f64| 1.0 / a_hat(u.exp()), u0, u1, rel_tol)?
                }
            }
            PathKind::Linear => {
                let g = |u: f64| {
                    let x = u.exp().clamp(t0, t1);
                    f.evaluate(x).unwrap_or(0.0) / a_hat(x)
                };
                adaptive_simpson(&g, u0, u1, rel_tol)?
            }
        };
        per_block[blk] += part;
    }
    let value = per_block.iter().sum::<f64>() / t.ln();
    Ok(LogAverage { value, blocks: assemble_blocks(&per_block, &edges) })
}

/// `D(u) = sup_{[0, u]} |p - q|` at every merged breakpoint, as a running
/// maximum. Returns the breakpoints and the running maxima.
fn running_sup_distance(p: &PiecewisePath, q: &PiecewisePath, upto: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.t_max() < upto || q.t_max() < upto || p.t_min() > 0.0 || q.t_min() > 0.0 {
        return domain(format!("paths must cover [0, {upto}]"));
    }
    let mut xs: Vec<f64> = p
        .breakpoints()
        .iter()
        .chain(q.breakpoints())
        .copied()
        .filter(|&x| (0.0..=upto).contains(&x))
        .collect();
    xs.push(0.0);
    xs.push(upto);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut run = Vec::with_capacity(xs.len());
    let mut best: f64 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        if k > 0 {
            best = best.max((p.left_limit(x)? - q.left_limit(x)?).abs());
        }
        if x < upto || (p.in_domain(x) && q.in_domain(x)) {
            best = best.max((p.evaluate(x)? - q.evaluate(x)?).abs());
        }
        run.push(best);
    }
    Ok((xs, run))
}

fn trapezoid_log_time(t_max: f64, density: usize, g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if !(t_max > 0.0) || density == 0 {
        return domain("log-time horizon and grid density must be positive");
    }
    let n = (t_max * density as f64).ceil() as usize;
    let h = t_max / n as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * g(k as f64 * h)?;
    }
    Ok(acc * h / t_max)
}

/// `(1/T) int_0^T sup_{x in [0,1]} |tau_t ml(x) - tau_t g(x)| dt`
/// `= (1/T) int_0^T e^{-alpha t} sup_{[0, e^t]} |ml - g| dt`, trapezoid rule
/// with `density` points per unit of log time and exact inner suprema.
pub fn cesaro_orbit_distance(
    ml: &PiecewisePath,
    g: &PiecewisePath,
    alpha: f64,
    t_max: f64,
    density: usize,
) -> Result<f64> {
    let (xs, run) = running_sup_distance(ml, g, t_max.exp())?;
    trapezoid_log_time(t_max, density, |t| {
        let u = t.exp();
        let k = xs.partition_point(|&x| x <= u);
        // sup over [0, u]: all breakpoints up to u plus the left limit at u.
        let mut d = if k > 0 { run[k - 1] } else { 0.0 };
        if k < xs.len() {
            d = d.max((ml.left_limit(u.min(ml.t_max()))? - g.left_limit(u.min(g.t_max()))?).abs());
        }
        Ok((-alpha * t).exp() * d)
    })
}

/// `(1/T) int_0^T e^{-alpha t} |ml(e^t) - (ml(e^t + r) - ml(r))| dt`.
pub fn cesaro_horocycle_check(ml: &PiecewisePath, r: f64, alpha: f64, t_max: f64, density: usize) -> Result<f64> {
    if ml.t_max() < t_max.exp() + r {
        return domain(format!("path must cover [0, e^T + r] = [0, {}]", t_max.exp() + r));
    }
    let base = ml.evaluate(r)?;
    trapezoid_log_time(t_max, density, |t| {
        let u = t.exp();
        Ok((-alpha * t).exp() * (ml.evaluate(u)? - (ml.evaluate(u + r)? - base)).abs())
    })
}

/// `(1/log T) int_1^T |N(t + r) - N(r) - N(t)| dt / (a_hat(t) t)`, exact on
/// the step path of differences.
pub fn renewal_horocycle_check(
    n: &PiecewisePath,
    r: f64,
    a_hat: &dyn Fn(f64) -> f64,
    t: f64,
    rel_tol: f64,
) -> Result<f64> {
    if n.t_max() < t + r || n.t_min() > 0.0 {
        return domain(format!("path must cover [0, T + r] = [0, {}]", t + r));
    }
    let base = n.evaluate(r)?;
    let mut xs: Vec<f64> = n
        .breakpoints()
        .iter()
        .flat_map(|&b| [b, b - r])
        .filter(|&x| x > 0.0 && x < t)
        .collect();
    xs.push(0.0);
    xs.push(t);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vals: Vec<f64> = xs
        .iter()
        .map(|&x| Ok((n.evaluate(x + r)? - base - n.evaluate(x)?).abs()))
        .collect::<Result<_>>()?;
    let diff = PiecewisePath::step(xs, vals)?;
    Ok(log_average_general(&diff, a_hat, t, rel_tol)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: u64,
    pub p: f64,
    /// `E[(a(k) / S_k)^p]`.
    pub lhs: McEstimate,
    /// `E[Z^{-p}]` by simulation.
    pub rhs: McEstimate,
    /// `Gamma(p/alpha) / (alpha Gamma(p) lambda^{p/alpha})`.
    pub rhs_exact: f64,
}

impl MomentRow {
    /// `(lhs - rhs) / sqrt(se_lhs^2 + se_rhs^2)`.
    pub fn z(&self) -> Option<f64> {
        let s = (self.lhs.se? * self.lhs.se? + self.rhs.se? * self.rhs.se?).sqrt();
        (s > 0.0).then(|| (self.lhs.mean - self.rhs.mean) / s)
    }
}

/// Compares `E[(a(k)/S_k)^p]` with `E[Z^{-p}]` for each `k`.
pub fn moment_convergence<R: Rng + ?Sized>(
    law: &GapLaw,
    spec: &StableSpec,
    a: &dyn Fn(f64) -> f64,
    ks: &[u64],
    p: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<MomentRow>> {
    if p < 0.0 {
        return domain("moment order must be nonnegative");
    }
    let sampler = law.sampler();
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        if p == 0.0 {
            let one = McEstimate { mean: 1.0, se: Some(0.0), n: n_samples };
            rows.push(MomentRow { k, p, lhs: one, rhs: one, rhs_exact: 1.0 });
            continue;
        }
        let ak = a(k as f64);
        let lhs: Vec<f64> = (0..n_samples)
            .map(|_| {
                let mut s = 0.0;
                for _ in 0..k {
                    s += sampler.sample(rng);
                }
                (ak / s).powf(p)
            })
            .collect();
        let rhs: Vec<f64> = (0..n_samples).map(|_| (-p * sample_ln_stable(spec, rng)).exp()).collect();
        rows.push(MomentRow {
            k,
            p,
            lhs: McEstimate::from_samples(&lhs),
            rhs: McEstimate::from_samples(&rhs),
            rhs_exact: spec.negative_moment(p),
        });
    }
    Ok(rows)
}

/// Generator for work item `index` under `master_seed`: one ChaCha8 stream
/// per item, so results do not depend on scheduling.
pub fn stream_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Runs `f(index, rng)` for `index in 0..n_paths` on `workers` threads and
/// returns the results in index order.
pub fn run_ensemble<T, F>(f: F, n_paths: usize, master_seed: u64, workers: usize) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(master_seed, i);
                f(i, &mut rng)
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub label: String,
    pub mean: f64,
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub target: Option<f64>,
    /// Standard error of the target when it is itself a Monte Carlo estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_se: Option<f64>,
    pub mean: f64,
    /// `None` for fewer than two paths.
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub n_paths: usize,
    pub blocks: Vec<BlockSummary>,
    pub values: Vec<f64>,
}

impl EnsembleResult {
    pub fn from_values(values: Vec<f64>, target: Option<f64>, target_se: Option<f64>) -> Self {
        let est = McEstimate::from_samples(&values);
        let z = match (target, est.se) {
            (Some(t), Some(se)) => {
                let s = (se * se + target_se.unwrap_or(0.0).powi(2)).sqrt();
                (s > 0.0).then(|| (est.mean - t) / s)
            }
            _ => None,
        };
        EnsembleResult { target, target_se, mean: est.mean, se: est.se, z, n_paths: values.len(), blocks: Vec::new(), values }
    }

    /// Adds one summary per column of `columns[path][column]`.
    pub fn with_blocks(mut self, labels: &[String], columns: &[Vec<f64>]) -> Self {
        self.blocks = labels
            .iter()
            .enumerate()
            .map(|(c, label)| {
                let xs: Vec<f64> = columns.iter().map(|row| row[c]).collect();
                let est = McEstimate::from_samples(&xs);
                BlockSummary { label: label.clone(), mean: est.mean, se: est.se }
            })
            .collect();
        self
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.target.map(|t| ((self.mean - t) / t).abs())
    }
}

//! Renewal processes with heavy-tailed gaps and their normalizing sequences.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::paths::{generalized_inverse, PiecewisePath};
use crate::stable_ml::{mittag_leffler_path, sample_stable, MlApproximant, StableSpec};

/// Law of the gaps between successive renewals.
#[derive(Debug, Clone, PartialEq)]
pub enum GapLaw {
    /// Continuous Pareto on `[1, inf)`: `P(X > x) = x^{-alpha}`.
    ParetoContinuous { alpha: f64 },
    /// Integer valued: `P(X > n) = (n + 1)^{-alpha}` for `n >= 0`.
    ParetoInteger { alpha: f64 },
    /// Gaps distributed as `Z(1)` for the given stable law.
    StableGaps(StableSpec),
    /// Geometric on `{1, 2, ...}` with success probability `q`, mean `1/q`.
    Geometric { q: f64 },
    /// `P(X = k) = pmf[k - 1]` for `k = 1..=K`.
    Table { pmf: Vec<f64> },
}

/// Config form of a [`GapLaw`]: `{"law": "pareto", "alpha": 0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawDescriptor {
    pub law: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplace_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<f64>>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("alpha = {alpha} must lie in (0, 1)"))
    }
}

impl GapLaw {
    pub fn pareto(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(GapLaw::ParetoContinuous { alpha })
    }

    pub fn pareto_integer(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(GapLaw::ParetoInteger { alpha })
    }

    pub fn geometric(q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return domain(format!("geometric parameter {q} must lie in (0, 1]"));
        }
        Ok(GapLaw::Geometric { q })
    }

    pub fn table(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() || pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return domain("table pmf must be nonempty with nonnegative entries");
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return domain(format!("table pmf sums to {total}, not 1"));
        }
        Ok(GapLaw::Table { pmf })
    }

    /// Parses `name[:param]`, e.g. `pareto`, `pareto-int:0.6`,
    /// `geometric:0.5`, `table:0.5,0.3,0.2`. A missing exponent falls back
    /// to `default_alpha`.
    pub fn parse(s: &str, default_alpha: f64) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let d: LawDescriptor = serde_json::from_str(s)?;
            return GapLaw::try_from(&d);
        }
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let num = |p: Option<&str>, default: f64| -> Result<f64> {
            match p {
                None => Ok(default),
                Some(p) => p.parse().map_err(|_| Error::Config(format!("bad law parameter '{p}'"))),
            }
        };
        match name {
            "pareto" => GapLaw::pareto(num(param, default_alpha)?),
            "pareto-int" | "pareto-integer" => GapLaw::pareto_integer(num(param, default_alpha)?),
            "stable" => Ok(GapLaw::StableGaps(StableSpec::canonical(num(param, default_alpha)?)?)),
            "geometric" => GapLaw::geometric(num(param, 0.5)?),
            "table" => {
                let p = param.ok_or_else(|| Error::Config("table law needs probabilities".into()))?;
                let pmf = p
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Config(format!("bad table '{p}'")))?;
                GapLaw::table(pmf)
            }
            other => Err(Error::Config(format!("unknown gap law '{other}'"))),
        }
    }

    pub fn descriptor(&self) -> LawDescriptor {
        let mut d = LawDescriptor { law: String::new(), alpha: None, q: None, laplace_scale: None, pmf: None };
        match self {
            GapLaw::ParetoContinuous { alpha } => {
                d.law = "pareto".into();
                d.alpha = Some(*alpha);
            }
            GapLaw::ParetoInteger { alpha } => {
                d.law = "pareto-int".into();
                d.alpha = Some(*alpha);
            }
            GapLaw::StableGaps(spec) => {
                d.law = "stable".into();
                d.alpha = Some(spec.alpha());
                d.laplace_scale = Some(spec.laplace_scale());
            }
            GapLaw::Geometric { q } => {
                d.law = "geometric".into();
                d.q = Some(*q);
            }
            GapLaw::Table { pmf } => {
                d.law = "table".into();
                d.pmf = Some(pmf.clone());
            }
        }
        d
    }

    /// Tail index for the heavy-tailed variants.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            GapLaw::ParetoContinuous { alpha } | GapLaw::ParetoInteger { alpha } => Some(*alpha),
            GapLaw::StableGaps(s) => Some(s.alpha()),
            _ => None,
        }
    }

    pub fn is_integer_valued(&self) -> bool {
        matches!(self, GapLaw::ParetoInteger { .. } | GapLaw::Geometric { .. } | GapLaw::Table { .. })
    }

    /// `P(X <= x)` where a closed form exists.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        match self {
            GapLaw::ParetoContinuous { alpha } => Some(if x < 1.0 { 0.0 } else { 1.0 - x.powf(-alpha) }),
            GapLaw::ParetoInteger { alpha } => {
                Some(if x < 1.0 { 0.0 } else { 1.0 - (x.floor() + 1.0).powf(-alpha) })
            }
            GapLaw::Geometric { q } => Some(if x < 1.0 { 0.0 } else { 1.0 - (1.0 - q).powf(x.floor()) }),
            GapLaw::Table { pmf } => {
                let k = x.floor();
                if k < 1.0 {
                    Some(0.0)
                } else {
                    Some(pmf.iter().take(k.min(pmf.len() as f64) as usize).sum::<f64>().min(1.0))
                }
            }
            GapLaw::StableGaps(_) => None,
        }
    }

    /// `P(X = k)` for integer-valued laws.
    pub fn pmf(&self, k: u64) -> Option<f64> {
        if k == 0 {
            return self.is_integer_valued().then_some(0.0);
        }
        match self {
            GapLaw::ParetoInteger { alpha } => {
                Some((k as f64).powf(-alpha) - (k as f64 + 1.0).powf(-alpha))
            }
            GapLaw::Geometric { q } => Some(q * (1.0 - q).powf(k as f64 - 1.0)),
            GapLaw::Table { pmf } => Some(pmf.get(k as usize - 1).copied().unwrap_or(0.0)),
            _ => None,
        }
    }

    /// `E[X]`; `None` when the mean is infinite.
    pub fn mean(&self) -> Option<f64> {
        match self {
            GapLaw::Geometric { q } => Some(1.0 / q),
            GapLaw::Table { pmf } => Some(pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()),
            _ => None,
        }
    }

    pub fn sampler(&self) -> GapSampler {
        let kind = match self {
            GapLaw::ParetoContinuous { alpha } => SamplerKind::Pareto { inv_alpha: 1.0 / alpha },
            GapLaw::ParetoInteger { alpha } => SamplerKind::ParetoInteger { inv_alpha: 1.0 / alpha },
            GapLaw::StableGaps(spec) => SamplerKind::Stable(*spec),
            GapLaw::Geometric { q } => SamplerKind::Geometric { ln_fail: (1.0 - q).ln() },
            GapLaw::Table { pmf } => {
                let mut acc = 0.0;
                let mut cdf: Vec<f64> = pmf
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                *cdf.last_mut().unwrap() = f64::INFINITY;
                SamplerKind::Table { cdf }
            }
        };
        GapSampler { kind }
    }
}

impl TryFrom<&LawDescriptor> for GapLaw {
    type Error = Error;

    fn try_from(d: &LawDescriptor) -> Result<Self> {
        let alpha = || d.alpha.ok_or_else(|| Error::Config(format!("law '{}' needs alpha", d.law)));
        match d.law.as_str() {
            "pareto" => GapLaw::pareto(alpha()?),
            "pareto-int" | "pareto-integer" => GapLaw::pareto_integer(alpha()?),
            "stable" => {
                let a = alpha()?;
                let spec = match d.laplace_scale {
                    Some(l) => StableSpec::new(a, l)?,
                    None => StableSpec::canonical(a)?,
                };
                Ok(GapLaw::StableGaps(spec))
            }
            "geometric" => GapLaw::geometric(d.q.unwrap_or(0.5)),
            "table" => GapLaw::table(d.pmf.clone().ok_or_else(|| Error::Config("table law needs pmf".into()))?),
            other => Err(Error::Config(format!("unknown gap law '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Pareto { inv_alpha: f64 },
    ParetoInteger { inv_alpha: f64 },
    Stable(StableSpec),
    Geometric { ln_fail: f64 },
    Table { cdf: Vec<f64> },
}

/// Gap sampler with precomputed constants (cumulative sums for tables).
#[derive(Debug, Clone)]
pub struct GapSampler {
    kind: SamplerKind,
}

/// Uniform on (0, 1].
#[inline]
fn unit_open_below<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

#[inline]
fn pareto_from_uniform(u: f64, inv_alpha: f64) -> f64 {
    if inv_alpha == 2.0 {
        1.0 / (u * u)
    } else {
        u.powf(-inv_alpha)
    }
}

impl GapSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Pareto { inv_alpha } => pareto_from_uniform(unit_open_below(rng), *inv_alpha),
            SamplerKind::ParetoInteger { inv_alpha } => {
                pareto_from_uniform(unit_open_below(rng), *inv_alpha).floor()
            }
            SamplerKind::Stable(spec) => sample_stable(spec, rng),
            SamplerKind::Geometric { ln_fail } => {
                if *ln_fail == f64::NEG_INFINITY {
                    1.0
                } else {
                    (unit_open_below(rng).ln() / ln_fail).floor() + 1.0
                }
            }
            SamplerKind::Table { .. } => self.from_uniform(rng.random::<f64>()),
        }
    }

    /// Inverse-CDF draw from a uniform `u` in [0, 1). Integer laws return the
    /// smallest `k` with `F(k) > u`.
    pub fn from_uniform(&self, u: f64) -> f64 {
        match &self.kind {
            SamplerKind::Table { cdf } => (cdf.partition_point(|&c| c <= u) + 1) as f64,
            SamplerKind::Pareto { inv_alpha } => pareto_from_uniform(1.0 - u, *inv_alpha),
            SamplerKind::ParetoInteger { inv_alpha } => pareto_from_uniform(1.0 - u, *inv_alpha).floor(),
            SamplerKind::Geometric { ln_fail } => {
                if *ln_fail == f64::NEG_INFINITY {
                    1.0
                } else {
                    ((1.0 - u).ln() / ln_fail).floor() + 1.0
                }
            }
            SamplerKind::Stable(_) => f64::NAN,
        }
    }
}

pub fn sample_gap<R: Rng + ?Sized>(law: &GapLaw, rng: &mut R) -> f64 {
    law.sampler().sample(rng)
}

/// Size-biased integer gap `P(K = k) = k p_k / E[X]`, for laws with finite mean.
pub fn sample_size_biased<R: Rng + ?Sized>(law: &GapLaw, rng: &mut R) -> Result<f64> {
    match law {
        GapLaw::Geometric { .. } => {
            let s = law.sampler();
            Ok(s.sample(rng) + s.sample(rng) - 1.0)
        }
        GapLaw::Table { pmf } => {
            let mean = law.mean().unwrap();
            let biased: Vec<f64> = pmf.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p / mean).collect();
            Ok(GapLaw::Table { pmf: biased }.sampler().sample(rng))
        }
        _ => domain("size-biased sampling needs a finite-mean integer law"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// Simulate up to time `T`.
    ByTime(f64),
    /// Simulate exactly `n` renewals.
    ByEvents(usize),
}

/// Independent generator derived from `rng`.
pub fn substream<R: RngCore + ?Sized>(rng: &mut R) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(rng.next_u64())
}

/// Renewal times `S_1 < S_2 < ...` from the gaps, stopped by the horizon.
pub fn renewal_times<R: Rng + ?Sized>(law: &GapLaw, horizon: Horizon, rng: &mut R) -> Result<Vec<f64>> {
    let sampler = law.sampler();
    let mut times = Vec::new();
    let mut s = 0.0;
    match horizon {
        Horizon::ByTime(t) => {
            if !(t > 0.0) {
                return domain(format!("time horizon {t} must be positive"));
            }
            loop {
                s += sampler.sample(rng);
                if s > t {
                    break;
                }
                times.push(s);
            }
        }
        Horizon::ByEvents(n) => {
            if n == 0 {
                return domain("event horizon must be at least one renewal");
            }
            times.reserve(n);
            for _ in 0..n {
                s += sampler.sample(rng);
                times.push(s);
            }
        }
    }
    Ok(times)
}

/// Counting path `N(t) = #{k >= 1 : S_k <= t}` on `[0, t_max]`.
pub fn counting_path(times: &[f64], t_max: f64) -> Result<PiecewisePath> {
    let mut bps = Vec::with_capacity(times.len() + 2);
    let mut vals = Vec::with_capacity(times.len() + 2);
    bps.push(0.0);
    vals.push(0.0);
    for (k, &s) in times.iter().enumerate() {
        if s > t_max {
            break;
        }
        if s > 0.0 {
            bps.push(s);
            vals.push((k + 1) as f64);
        }
    }
    if *bps.last().unwrap() < t_max {
        bps.push(t_max);
        vals.push(*vals.last().unwrap());
    }
    PiecewisePath::step(bps, vals)
}

/// Two-sided counting path. `before` holds `|S_{-1}| < |S_{-2}| < ...`; there
/// is a renewal at 0, and `N(t) = -#{k <= 0 : S_k in (t, 0]}` for `t < 0`.
pub fn two_sided_counting_path(before: &[f64], after: &[f64], t_lo: f64, t_hi: f64) -> Result<PiecewisePath> {
    let mut bps = vec![t_lo];
    let mut k_lo = before.iter().take_while(|&&d| -d >= t_lo).count();
    let mut vals = vec![-(k_lo as f64) - 1.0];
    if k_lo > 0 && -before[k_lo - 1] == t_lo {
        vals[0] = -(k_lo as f64);
        k_lo -= 1;
    }
    for k in (0..k_lo).rev() {
        bps.push(-before[k]);
        vals.push(-(k as f64) - 1.0);
    }
    let forward = counting_path(after, t_hi)?;
    if t_lo == 0.0 {
        return Ok(forward);
    }
    bps.extend_from_slice(forward.breakpoints());
    vals.extend_from_slice(forward.values());
    PiecewisePath::step(bps, vals)
}

/// Simulates the counting path of the renewal process, right-continuous with
/// `N(0) = 0`. The two-sided variant draws the negative-time gaps from an
/// independent substream and places a renewal at 0.
pub fn simulate_renewal<R: RngCore + ?Sized>(
    law: &GapLaw,
    horizon: Horizon,
    two_sided: bool,
    rng: &mut R,
) -> Result<PiecewisePath> {
    let after = renewal_times(law, horizon, rng)?;
    let t_hi = match horizon {
        Horizon::ByTime(t) => t,
        Horizon::ByEvents(_) => *after.last().unwrap(),
    };
    if !two_sided {
        return counting_path(&after, t_hi);
    }
    let mut neg = substream(rng);
    let before = renewal_times(law, horizon, &mut neg)?;
    let t_lo = match horizon {
        Horizon::ByTime(t) => -t,
        Horizon::ByEvents(_) => -*before.last().unwrap(),
    };
    two_sided_counting_path(&before, &after, t_lo, t_hi)
}

/// Counting path through the generalized inverse of `n -> S_n`:
/// `N = (S-bar)^ - 1` on `[0, S_n)`.
pub fn renewal_via_inverse(gaps: &[f64]) -> Result<PiecewisePath> {
    let mut s = 0.0;
    let mut values = vec![0.0];
    for g in gaps {
        s += g;
        values.push(s);
    }
    let bps: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
    let inv = generalized_inverse(&PiecewisePath::step(bps, values)?)?;
    let shifted: Vec<f64> = inv.values().iter().map(|v| v - 1.0).collect();
    Ok(PiecewisePath::step(inv.breakpoints().to_vec(), shifted)?.open_right())
}

/// Number of renewals in `(0, t]`, without building the path.
pub fn count_renewals<R: Rng + ?Sized>(sampler: &GapSampler, t: f64, rng: &mut R) -> u64 {
    let mut s = 0.0;
    let mut n = 0;
    loop {
        s += sampler.sample(rng);
        if s > t {
            return n;
        }
        n += 1;
    }
}

/// Closed-form normalizers `a_hat`, `a = a_hat^{-1}` and `h = a^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormalizerTriple {
    /// `a_hat(t) = t^alpha`, `a(t) = t^{1/alpha}`, `h(t) = t`.
    Power { alpha: f64 },
    /// `a_hat(t) = (t + 1)^alpha`, `a(t) = t^{1/alpha} - 1`, `h(t) = a(t)^alpha`.
    IntegerPareto { alpha: f64 },
}

impl NormalizerTriple {
    pub fn alpha(&self) -> f64 {
        match self {
            NormalizerTriple::Power { alpha } | NormalizerTriple::IntegerPareto { alpha } => *alpha,
        }
    }

    pub fn a_hat(&self, t: f64) -> f64 {
        match self {
            NormalizerTriple::Power { alpha } => t.powf(*alpha),
            NormalizerTriple::IntegerPareto { alpha } => (t + 1.0).powf(*alpha),
        }
    }

    pub fn a(&self, t: f64) -> f64 {
        match self {
            NormalizerTriple::Power { alpha } => t.powf(1.0 / alpha),
            NormalizerTriple::IntegerPareto { alpha } => t.powf(1.0 / alpha) - 1.0,
        }
    }

    pub fn h(&self, t: f64) -> f64 {
        match self {
            NormalizerTriple::Power { .. } => t,
            NormalizerTriple::IntegerPareto { alpha } => self.a(t).max(0.0).powf(*alpha),
        }
    }
}

/// Normalizers for laws in the domain of attraction of a one-sided stable law.
pub fn normalizers(law: &GapLaw) -> Result<NormalizerTriple> {
    match law {
        GapLaw::ParetoContinuous { alpha } => Ok(NormalizerTriple::Power { alpha: *alpha }),
        GapLaw::StableGaps(spec) => Ok(NormalizerTriple::Power { alpha: spec.alpha() }),
        GapLaw::ParetoInteger { alpha } => Ok(NormalizerTriple::IntegerPareto { alpha: *alpha }),
        GapLaw::Geometric { .. } | GapLaw::Table { .. } => Err(Error::NotInDomainOfAttraction(format!(
            "{:?} has finite mean; ergodic averages normalise by t",
            law.descriptor().law
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error; `None` for fewer than two samples.
    pub se: Option<f64>,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n.max(1) as f64;
        let se = (n > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        McEstimate { mean, se, n }
    }
}

/// Monte Carlo estimate of `E[N(n)]` over independent paths.
pub fn return_sequence_mc<R: Rng + ?Sized>(law: &GapLaw, n: f64, n_paths: usize, rng: &mut R) -> McEstimate {
    if n <= 0.0 {
        return McEstimate { mean: 0.0, se: Some(0.0), n: n_paths };
    }
    let sampler = law.sampler();
    let xs: Vec<f64> = (0..n_paths).map(|_| count_renewals(&sampler, n, rng) as f64).collect();
    McEstimate::from_samples(&xs)
}

/// A Mittag-Leffler path and the renewal path built from the same
/// subordinator: `S_n = Z(n)`, gaps `Z(n+1) - Z(n)`.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub ml: PiecewisePath,
    pub renewal: PiecewisePath,
    pub renewal_times: Vec<f64>,
}

/// Simulates the subordinator on the grid `k / substeps` until the horizon is
/// reached (in renewals, or in time `S_n >= T`).
pub fn coupled_pair<R: Rng + ?Sized>(
    spec: &StableSpec,
    horizon: Horizon,
    substeps: usize,
    rng: &mut R,
) -> Result<CoupledPair> {
    if substeps == 0 {
        return domain("substeps must be positive");
    }
    let m = substeps;
    let cell = (1.0 / m as f64).powf(1.0 / spec.alpha());
    let mut grid = vec![0.0];
    let mut z = vec![0.0];
    let mut times = Vec::new();
    let mut k = 0usize;
    loop {
        k += 1;
        let v = z.last().unwrap() + cell * sample_stable(spec, rng);
        grid.push(k as f64 / m as f64);
        z.push(v);
        if k.is_multiple_of(m) {
            times.push(v);
            let done = match horizon {
                Horizon::ByEvents(n) => times.len() >= n,
                Horizon::ByTime(t) => v >= t,
            };
            if done {
                break;
            }
        }
    }
    let zpath = PiecewisePath::step(grid, z)?;
    let ml = mittag_leffler_path(&zpath, MlApproximant::Linear)?;
    let t_hi = match horizon {
        Horizon::ByEvents(_) => *times.last().unwrap(),
        Horizon::ByTime(t) => t,
    };
    let renewal = counting_path(&times, t_hi)?;
    Ok(CoupledPair { ml, renewal, renewal_times: times })
}

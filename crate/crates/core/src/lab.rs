//! Experiment registry, configuration, execution and result emission.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::{Cocycle, Counting, MeasureSampler, StationaryRenewal};
use crate::error::{Error, Result};
use crate::estimators::{
    cesaro_horocycle_check, cesaro_orbit_distance, log_average_general, log_average_power, run_ensemble,
    EnsembleResult,
};
use crate::fractal::{hausdorff_cover_estimate, order_two_density, Gauge};
use crate::paths::PiecewisePath;
use crate::renewal::{
    count_renewals, coupled_pair, normalizers, simulate_renewal, GapLaw, Horizon, LawDescriptor, NormalizerTriple,
};
use crate::shift_models::{
    discrete_order_two, isomorphism_map, step, ModelState, RenewalShiftChain, ShiftOrbit, MODEL_KINDS,
};
use crate::stable_ml::{
    constants, gamma, mittag_leffler_path, sample_ln_stable, sample_ml, sample_stable, MlApproximant, StableSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `|z| <= 3`, or relative error within `--tol` when given.
    ZScore,
    /// Relative error within the tolerance.
    Relative,
    /// Mean equals the target exactly.
    Exact,
    /// Block means strictly decrease.
    Decreasing,
    /// Every block mean within a factor 10 of the target.
    OrderOfMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// What the ensemble mean is compared with.
    pub target: &'static str,
    pub default_law: &'static str,
    pub default_horizon: f64,
    pub default_paths: usize,
    pub default_tol: f64,
    pub check: CheckKind,
}

const REGISTRY: [ExperimentInfo; 13] = [
    ExperimentInfo {
        name: "constants",
        summary: "constant table; c from its sine form against 1/(Gamma(1-alpha) Gamma(1+alpha))",
        target: "c = 1/(Gamma(1-alpha) Gamma(1+alpha))",
        default_law: "pareto",
        default_horizon: 0.0,
        default_paths: 1,
        default_tol: 1e-12,
        check: CheckKind::Relative,
    },
    ExperimentInfo {
        name: "ml-mean",
        summary: "batch means of Z^{-alpha} for the canonical stable law",
        target: "c = sin(πα)/(πα)",
        default_law: "stable",
        default_horizon: 0.0,
        default_paths: 100,
        default_tol: 0.01,
        check: CheckKind::ZScore,
    },
    ExperimentInfo {
        name: "return-sequence",
        summary: "N(n)/a_hat(n) over independent renewal paths",
        target: "c = sin(πα)/(πα)",
        default_law: "pareto",
        default_horizon: 1e6,
        default_paths: 500,
        default_tol: 0.03,
        check: CheckKind::ZScore,
    },
    ExperimentInfo {
        name: "logavg-renewal",
        summary: "(1/log T) int_1^T N(t) dt/(a_hat(t) t) per renewal path",
        target: "c = sin(πα)/(πα)",
        default_law: "pareto",
        default_horizon: 1e12,
        default_paths: 100,
        default_tol: 0.05,
        check: CheckKind::ZScore,
    },
    ExperimentInfo {
        name: "logavg-discrete",
        summary: "discrete order-two average of visits to a state of the renewal shift",
        target: "c·π_state = c·state^{-α}",
        default_law: "pareto-int",
        default_horizon: 1e6,
        default_paths: 100,
        default_tol: 0.05,
        check: CheckKind::ZScore,
    },
    ExperimentInfo {
        name: "coupling-cesaro",
        summary: "Cesàro distance between the scaling orbits of a coupled Mittag-Leffler path and renewal path",
        target: "strictly decreasing in T",
        default_law: "stable",
        default_horizon: 20.0,
        default_paths: 100,
        default_tol: 0.0,
        check: CheckKind::Decreasing,
    },
    ExperimentInfo {
        name: "horocycle-decay",
        summary: "Cesàro distance between scaling orbits of Z^ and its increment by r = 1",
        target: "strictly decreasing in T",
        default_law: "stable",
        default_horizon: 20.0,
        default_paths: 100,
        default_tol: 0.0,
        check: CheckKind::Decreasing,
    },
    ExperimentInfo {
        name: "cocycle-integrals",
        summary: "flow average of the counting cocycle under the stationary renewal flow",
        target: "1 (cross-section integral of the counting cocycle)",
        default_law: "geometric:0.5",
        default_horizon: 1.0,
        default_paths: 10000,
        default_tol: 0.02,
        check: CheckKind::ZScore,
    },
    ExperimentInfo {
        name: "hopf-ratio",
        summary: "visits to state 2 over visits to state 1 along the renewal shift",
        target: "π_2 = 2^{-α}",
        default_law: "pareto-int",
        default_horizon: 1e7,
        default_paths: 1,
        default_tol: 0.05,
        check: CheckKind::Relative,
    },
    ExperimentInfo {
        name: "shift-isomorphism",
        summary: "mismatches of map∘step against step∘map over all model pairs",
        target: "exact conjugacy",
        default_law: "pareto-int",
        default_horizon: 1e5,
        default_paths: 1,
        default_tol: 0.0,
        check: CheckKind::Exact,
    },
    ExperimentInfo {
        name: "order2-density",
        summary: "(1/S) int_0^S Z^(e^{-s}) e^{αs} ds per Mittag-Leffler path",
        target: "c = sin(πα)/(πα)",
        default_law: "stable",
        default_horizon: 10.0,
        default_paths: 200,
        default_tol: 0.10,
        check: CheckKind::ZScore,
    },
    ExperimentInfo {
        name: "moment-convergence",
        summary: "(a(k)/S_k)^p per sample against simulated E[Z^{-p}]",
        target: "E[Z^{-p}] = Γ(p/α)/(αΓ(p)λ^{p/α})",
        default_law: "pareto",
        default_horizon: 1e5,
        default_paths: 100000,
        default_tol: 0.0,
        check: CheckKind::ZScore,
    },
    ExperimentInfo {
        name: "cover-diagnostic",
        summary: "greedy ψ-gauge covers of the subordinator range at δ = 2^-8 .. 2^-14",
        target: "c~ t = α^α(1-α)^{1-α}",
        default_law: "stable",
        default_horizon: 1.0,
        default_paths: 32,
        default_tol: 0.0,
        check: CheckKind::OrderOfMagnitude,
    },
];

pub fn list_experiments() -> &'static [ExperimentInfo] {
    &REGISTRY
}

pub fn experiment_info(name: &str) -> Result<&'static ExperimentInfo> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Config(format!("unknown experiment '{name}'")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Short(String),
    Full(LawDescriptor),
}

/// Experiment configuration as read from JSON; every field except the
/// experiment name is optional and filled from the registry defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: String,
    pub alpha: Option<f64>,
    pub law: Option<LawSpec>,
    pub horizon: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub n_samples: Option<f64>,
    pub p: Option<f64>,
    pub state: Option<u64>,
    pub substeps: Option<usize>,
    pub density: Option<usize>,
    pub shift: Option<f64>,
    pub tol: Option<f64>,
    pub check: Option<bool>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Fields set in `flags` win over fields set here.
    pub fn merged(self, flags: ExperimentConfig) -> ExperimentConfig {
        macro_rules! pick {
            ($($f:ident),*) => { ExperimentConfig { $($f: flags.$f.or(self.$f),)*
                experiment: if flags.experiment.is_empty() { self.experiment } else { flags.experiment } } };
        }
        pick!(alpha, law, horizon, paths, seed, workers, n_samples, p, state, substeps, density, shift, tol, check, format, out, checkpoint)
    }

    pub fn resolve(&self) -> Result<RunPlan> {
        let info = experiment_info(&self.experiment)?;
        let alpha = self.alpha.unwrap_or(0.5);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let law = match &self.law {
            None => GapLaw::parse(info.default_law, alpha)?,
            Some(LawSpec::Short(s)) => GapLaw::parse(s, alpha)?,
            Some(LawSpec::Full(d)) => GapLaw::try_from(d)?,
        };
        let horizon = self.horizon.unwrap_or(info.default_horizon);
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::Config(format!("horizon {horizon} must be finite and nonnegative")));
        }
        let paths = self.paths.unwrap_or(info.default_paths);
        if paths == 0 {
            return Err(Error::Config("paths must be at least 1".into()));
        }
        let n_samples = self.n_samples.unwrap_or(1e6);
        if !(n_samples >= 1.0) || n_samples.fract() != 0.0 {
            return Err(Error::Config(format!("n-samples {n_samples} must be a positive integer")));
        }
        Ok(RunPlan {
            info,
            alpha,
            law,
            horizon,
            paths,
            seed: self.seed.unwrap_or(0),
            workers: self.workers.unwrap_or(1).max(1),
            n_samples: n_samples as u64,
            p: self.p.unwrap_or(1.0),
            state: self.state.unwrap_or(1).max(1),
            substeps: self.substeps.unwrap_or(16).max(1),
            density: self.density.unwrap_or(64).max(1),
            shift: self.shift.unwrap_or(1.0),
            tol: self.tol,
            checkpoint: self.checkpoint.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunPlan {
    pub info: &'static ExperimentInfo,
    pub alpha: f64,
    pub law: GapLaw,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
    pub n_samples: u64,
    pub p: f64,
    pub state: u64,
    pub substeps: usize,
    pub density: usize,
    pub shift: f64,
    pub tol: Option<f64>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub kind: CheckKind,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub experiment: String,
    pub alpha: f64,
    pub horizon: f64,
    pub law: LawDescriptor,
    #[serde(flatten)]
    pub result: EnsembleResult,
    pub check: Option<CheckOutcome>,
}

/// Per-path output: a headline value and optional per-block columns.
#[derive(Debug, Clone, PartialEq)]
struct PathRow {
    value: f64,
    columns: Vec<f64>,
}

fn row(value: f64) -> PathRow {
    PathRow { value, columns: Vec::new() }
}

fn read_checkpoint(path: &Path) -> Result<Vec<(u64, PathRow)>> {
    let Ok(f) = File::open(path) else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        let mut it = line.split(',');
        let parse = |s: Option<&str>| -> Option<f64> { s?.parse().ok() };
        let Some(idx) = it.next().and_then(|s| s.parse::<u64>().ok()) else { continue };
        let Some(value) = parse(it.next()) else { continue };
        let columns: Option<Vec<f64>> = it.map(|s| s.parse().ok()).collect();
        let Some(columns) = columns else { continue };
        out.push((idx, PathRow { value, columns }));
    }
    Ok(out)
}

/// Runs the per-path closure over the ensemble, appending completed rows to
/// the checkpoint file (if any) chunk by chunk and skipping rows already
/// recorded there.
fn run_paths<F>(plan: &RunPlan, f: F) -> Result<Vec<PathRow>>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<PathRow> + Sync,
{
    let Some(cp) = &plan.checkpoint else {
        return run_ensemble(f, plan.paths, plan.seed, plan.workers);
    };
    let mut rows: Vec<Option<PathRow>> = vec![None; plan.paths];
    for (i, r) in read_checkpoint(cp)? {
        if (i as usize) < plan.paths {
            rows[i as usize] = Some(r);
        }
    }
    let todo: Vec<u64> = (0..plan.paths as u64).filter(|&i| rows[i as usize].is_none()).collect();
    let mut file = OpenOptions::new().create(true).append(true).open(cp)?;
    let chunk = (plan.workers * 8).max(16);
    for ids in todo.chunks(chunk) {
        let done = run_ensemble(
            |k, _| {
                let i = ids[k as usize];
                let mut rng = crate::estimators::stream_rng(plan.seed, i);
                f(i, &mut rng)
            },
            ids.len(),
            plan.seed,
            plan.workers,
        )?;
        for (&i, r) in ids.iter().zip(done) {
            let mut line = format!("{i},{}", r.value);
            for c in &r.columns {
                line.push_str(&format!(",{c}"));
            }
            writeln!(file, "{line}")?;
            rows[i as usize] = Some(r);
        }
        file.flush()?;
    }
    Ok(rows.into_iter().map(|r| r.unwrap()).collect())
}

fn ensemble(rows: Vec<PathRow>, target: Option<f64>, target_se: Option<f64>, labels: &[String]) -> EnsembleResult {
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let columns: Vec<Vec<f64>> = rows.into_iter().map(|r| r.columns).collect();
    let res = EnsembleResult::from_values(values, target, target_se);
    if labels.is_empty() {
        res
    } else {
        res.with_blocks(labels, &columns)
    }
}

fn canonical(alpha: f64) -> Result<StableSpec> {
    StableSpec::canonical(alpha)
}

/// Log-time checkpoints `5, 10, ...` up to and including `T`.
fn log_time_checkpoints(t: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (1..).map(|k| 5.0 * k as f64).take_while(|&x| x < t).collect();
    v.push(t);
    v
}

/// Subordinator on a geometric grid from `t_min` up to where it exceeds
/// `level`, for Mittag-Leffler paths resolved on `[e^{-s_max}, level]`.
pub fn resolved_ml_path<R: Rng + ?Sized>(spec: &StableSpec, s_max: f64, level: f64, per_efold: usize, rng: &mut R) -> Result<PiecewisePath> {
    let a = spec.alpha();
    let t_min = (-a * (s_max + 40.0)).exp();
    let ratio = (1.0 / per_efold as f64).exp();
    let mut grid = vec![0.0, t_min];
    let mut z = vec![0.0, t_min.powf(1.0 / a) * sample_stable(spec, rng)];
    while *z.last().unwrap() < level {
        let t0 = *grid.last().unwrap();
        let t1 = t0 * ratio;
        let inc = (t1 - t0).powf(1.0 / a) * sample_stable(spec, rng);
        grid.push(t1);
        z.push(z.last().unwrap() + inc);
    }
    let zpath = PiecewisePath::step(grid, z)?;
    mittag_leffler_path(&zpath, MlApproximant::Linear)
}

pub const COVER_DELTAS: [i32; 7] = [8, 9, 10, 11, 12, 13, 14];

/// Executes a resolved plan.
pub fn run_plan(plan: &RunPlan) -> Result<RunOutput> {
    let alpha = plan.alpha;
    let c = constants(alpha)?.c;
    let result = match plan.info.name {
        "constants" => {
            let t = constants(alpha)?;
            let target = 1.0 / (gamma(1.0 - alpha) * gamma(1.0 + alpha));
            let labels: Vec<String> = ["c", "c_alpha", "c_check", "c_hat", "c_tilde"].iter().map(|s| s.to_string()).collect();
            ensemble(
                vec![PathRow { value: t.c, columns: vec![t.c, t.c_alpha, t.c_check, t.c_hat, t.c_tilde] }],
                Some(target),
                None,
                &labels,
            )
        }
        "ml-mean" => {
            let spec = canonical(alpha)?;
            let per = (plan.n_samples / plan.paths as u64).max(1);
            let rows = run_paths(plan, |_, rng| {
                let s: f64 = (0..per).map(|_| sample_ml(&spec, rng)).sum();
                Ok(row(s / per as f64))
            })?;
            ensemble(rows, Some(spec.ml_mean()), None, &[])
        }
        "return-sequence" => {
            let norm = normalizers(&plan.law)?;
            let n = plan.horizon;
            let sampler = plan.law.sampler();
            let rows = run_paths(plan, |_, rng| Ok(row(count_renewals(&sampler, n, rng) as f64 / norm.a_hat(n))))?;
            ensemble(rows, Some(c), None, &[])
        }
        "logavg-renewal" => {
            let norm = normalizers(&plan.law)?;
            let t = plan.horizon;
            let edges = crate::estimators::dyadic_log_blocks(t.ln());
            let labels: Vec<String> = edges[1..].iter().map(|u| format!("log t <= {u:.4}")).collect();
            let rows = run_paths(plan, |_, rng| {
                let n = simulate_renewal(&plan.law, Horizon::ByTime(t), false, rng)?;
                let la = match norm {
                    NormalizerTriple::Power { alpha } => log_average_power(&n, alpha, t)?,
                    NormalizerTriple::IntegerPareto { .. } => log_average_general(&n, &|x| norm.a_hat(x), t, 1e-10)?,
                };
                Ok(PathRow { value: la.value, columns: la.blocks.iter().map(|b| b.cumulative).collect() })
            })?;
            ensemble(rows, Some(c), None, &labels)
        }
        "logavg-discrete" => {
            let norm = normalizers(&plan.law)?;
            let a = norm.alpha();
            let state = plan.state;
            let k = plan.horizon as usize;
            let pi_state = (state as f64).powf(-a);
            let labels = vec!["log-average form".to_string(), "normalized-sum form".to_string()];
            let rows = run_paths(plan, |_, rng| {
                let chain = RenewalShiftChain::new(&plan.law, rng.clone())?;
                let d = discrete_order_two(chain, |x| (x == state) as u8 as f64, k, |n| norm.a_hat(n))?;
                Ok(PathRow { value: d.log_average, columns: vec![d.log_average, d.normalized_sum] })
            })?;
            ensemble(rows, Some(constants(a)?.c * pi_state), None, &labels)
        }
        "coupling-cesaro" | "horocycle-decay" => {
            let spec = canonical(alpha)?;
            let cps = log_time_checkpoints(plan.horizon.max(1.0));
            let t_max = *cps.last().unwrap();
            let labels: Vec<String> = cps.iter().map(|t| format!("T = {t}")).collect();
            let coupling = plan.info.name == "coupling-cesaro";
            let r = plan.shift;
            let rows = run_paths(plan, |_, rng| {
                let pair = coupled_pair(&spec, Horizon::ByTime(t_max.exp() + r + 1.0), plan.substeps, rng)?;
                let cols = cps
                    .iter()
                    .map(|&t| {
                        if coupling {
                            cesaro_orbit_distance(&pair.ml, &pair.renewal, alpha, t, plan.density)
                        } else {
                            cesaro_horocycle_check(&pair.ml, r, alpha, t, plan.density)
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(PathRow { value: *cols.last().unwrap(), columns: cols })
            })?;
            ensemble(rows, None, None, &labels)
        }
        "cocycle-integrals" => {
            let t = if plan.horizon > 0.0 { plan.horizon } else { 1.0 };
            let ts = [0.5, 1.0, 2.0];
            let measure = StationaryRenewal { law: plan.law.clone(), reach: t.max(2.0) + 1.0 };
            let mass = measure.mass();
            if !mass.is_finite() {
                return Err(Error::Config("cocycle-integrals needs a finite-mean gap law".into()));
            }
            let labels: Vec<String> = ts.iter().map(|t| format!("t = {t}")).collect();
            let rows = run_paths(plan, |_, rng| {
                let x = measure.sample(rng)?;
                let cols = ts.iter().map(|&s| Ok(mass * Counting.eval(&x, s)? / s)).collect::<Result<Vec<f64>>>()?;
                Ok(PathRow { value: mass * Counting.eval(&x, t)? / t, columns: cols })
            })?;
            ensemble(rows, Some(1.0), None, &labels)
        }
        "hopf-ratio" => {
            let a = plan.law.alpha().ok_or_else(|| Error::Config("hopf-ratio needs a Pareto law".into()))?;
            let steps = plan.horizon as usize;
            let rows = run_paths(plan, |_, rng| {
                let chain = RenewalShiftChain::new(&plan.law, rng.clone())?;
                let ratio = crate::cocycle::discrete_hopf_ratio(
                    chain,
                    |x| (x == 2) as u8 as f64,
                    |x| (x == 1) as u8 as f64,
                    steps,
                )?;
                Ok(row(ratio))
            })?;
            ensemble(rows, Some(2f64.powf(-a)), None, &[])
        }
        "shift-isomorphism" => {
            let steps = plan.horizon as usize;
            let rows = run_paths(plan, |_, rng| Ok(row(conjugacy_mismatches(&plan.law, steps, rng)? as f64)))?;
            ensemble(rows, Some(0.0), None, &[])
        }
        "order2-density" => {
            let spec = canonical(alpha)?;
            let s = plan.horizon;
            let rows = run_paths(plan, |_, rng| {
                let ml = resolved_ml_path(&spec, s, 1.0, 200, rng)?;
                Ok(row(order_two_density(&ml, alpha, s)?))
            })?;
            ensemble(rows, Some(spec.ml_mean()), None, &[])
        }
        "moment-convergence" => {
            let norm = normalizers(&plan.law)?;
            let spec = canonical(norm.alpha())?;
            let k = plan.horizon as u64;
            let p = plan.p;
            let ak = norm.a(k as f64);
            let sampler = plan.law.sampler();
            let rows = run_paths(plan, |_, rng| {
                let mut s = 0.0;
                for _ in 0..k {
                    s += sampler.sample(rng);
                }
                let rhs = (-p * sample_ln_stable(&spec, rng)).exp();
                Ok(PathRow { value: (ak / s).powf(p), columns: vec![rhs] })
            })?;
            let rhs: Vec<f64> = rows.iter().map(|r| r.columns[0]).collect();
            let rhs = crate::renewal::McEstimate::from_samples(&rhs);
            let labels = vec!["E[Z^{-p}] sample".to_string()];
            ensemble(rows, Some(rhs.mean), rhs.se, &labels)
        }
        "cover-diagnostic" => {
            let spec = StableSpec::unit(alpha)?;
            let t = if plan.horizon > 0.0 { plan.horizon } else { 1.0 };
            let gauge = Gauge::Psi { alpha };
            let labels: Vec<String> = COVER_DELTAS.iter().map(|k| format!("delta = 2^-{k}")).collect();
            let rows = run_paths(plan, |_, rng| {
                let pts = range_points(&spec, t, 1usize << 16, rng);
                let cols = COVER_DELTAS
                    .iter()
                    .map(|&k| {
                        let d = 2f64.powi(-k);
                        hausdorff_cover_estimate(&pts, &gauge, d, d / 64.0)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(PathRow { value: *cols.last().unwrap(), columns: cols })
            })?;
            ensemble(rows, Some(constants(alpha)?.c_tilde * t), None, &labels)
        }
        other => return Err(Error::Config(format!("unknown experiment '{other}'"))),
    };
    Ok(RunOutput {
        experiment: plan.info.name.to_string(),
        alpha,
        horizon: plan.horizon,
        law: plan.law.descriptor(),
        result,
        check: None,
    })
}

/// Values of the subordinator at `cells + 1` equally spaced times in `[0, t]`.
pub fn range_points<R: Rng + ?Sized>(spec: &StableSpec, t: f64, cells: usize, rng: &mut R) -> Vec<f64> {
    let scale = (t / cells as f64).powf(1.0 / spec.alpha());
    let mut z = 0.0;
    let mut pts = Vec::with_capacity(cells + 1);
    pts.push(0.0);
    for _ in 0..cells {
        z += scale * sample_stable(spec, rng);
        pts.push(z);
    }
    pts
}

/// Simulates gaps covering `steps + 1` time units and counts failures of
/// `map(step(x)) == step(map(x))` and of event-window agreement, over all
/// ordered pairs of models.
pub fn conjugacy_mismatches<R: Rng + ?Sized>(law: &GapLaw, steps: usize, rng: &mut R) -> Result<u64> {
    let sampler = law.sampler();
    let mut gaps = Vec::new();
    let mut total = 0u64;
    while total < steps as u64 + 2 {
        let g = (sampler.sample(rng) as u64).min(steps as u64 + 2);
        gaps.push(g);
        total += g;
    }
    let orbit = Arc::new(ShiftOrbit::from_gaps(gaps)?);
    let mut states: Vec<ModelState> = MODEL_KINDS.iter().map(|&k| ModelState::start(k, orbit.clone())).collect();
    let mut bad = 0u64;
    for _ in 0..steps {
        for a in &states {
            let stepped = step(a)?;
            for &kb in &MODEL_KINDS {
                let lhs = isomorphism_map(&stepped, kb);
                let rhs = step(&isomorphism_map(a, kb))?;
                if lhs != rhs {
                    bad += 1;
                }
            }
        }
        let w0 = states[0].event_window(1)?;
        let m0 = states[0].markov_state();
        for s in &states[1..] {
            if s.event_window(1)? != w0 || (s.kind() != crate::shift_models::ModelKind::Event
                && s.kind() != crate::shift_models::ModelKind::Increment
                && s.markov_state() != m0)
            {
                bad += 1;
            }
        }
        states = states.iter().map(step).collect::<Result<_>>()?;
    }
    Ok(bad)
}

/// Applies the registry check to a finished run.
pub fn evaluate_check(out: &RunOutput, info: &ExperimentInfo, tol: Option<f64>) -> CheckOutcome {
    let r = &out.result;
    let (passed, detail) = match info.check {
        CheckKind::ZScore => match (tol, r.z, r.target) {
            (Some(tol), _, Some(t)) => {
                let rel = ((r.mean - t) / t).abs();
                (rel <= tol, format!("relative error {rel:.4} vs tolerance {tol}"))
            }
            (None, Some(z), _) => (z.abs() <= 3.0, format!("z = {z:.3}")),
            (None, None, Some(t)) => {
                let rel = ((r.mean - t) / t).abs();
                (rel <= info.default_tol, format!("relative error {rel:.4} vs tolerance {}", info.default_tol))
            }
            _ => (false, "no target".to_string()),
        },
        CheckKind::Relative => {
            let t = r.target.unwrap_or(f64::NAN);
            let tol = tol.unwrap_or(info.default_tol);
            let rel = ((r.mean - t) / t).abs();
            (rel <= tol, format!("relative error {rel:.3e} vs tolerance {tol}"))
        }
        CheckKind::Exact => (Some(r.mean) == r.target, format!("mean {} vs target {:?}", r.mean, r.target)),
        CheckKind::Decreasing => {
            let ok = r.blocks.windows(2).all(|w| w[1].mean < w[0].mean);
            let means: Vec<String> = r.blocks.iter().map(|b| format!("{:.4}", b.mean)).collect();
            (ok && !r.blocks.is_empty(), format!("block means {}", means.join(" > ")))
        }
        CheckKind::OrderOfMagnitude => {
            let t = r.target.unwrap_or(f64::NAN);
            let ok = r.blocks.iter().all(|b| b.mean >= t / 10.0 && b.mean <= t * 10.0);
            let means: Vec<String> = r.blocks.iter().map(|b| format!("{:.3}", b.mean)).collect();
            (ok, format!("block means [{}] vs target {t}", means.join(", ")))
        }
    };
    CheckOutcome { kind: info.check, passed, detail }
}

/// Resolves, runs and (when requested) checks a configuration.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let plan = config.resolve()?;
    let mut out = run_plan(&plan)?;
    if config.check.unwrap_or(false) {
        out.check = Some(evaluate_check(&out, plan.info, plan.tol));
    }
    Ok(out)
}

/// Serializes a run as CSV (`experiment,alpha,horizon,path_id,value` rows
/// plus a `summary` row with the mean) or JSON.
pub fn render(out: &RunOutput, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(out)?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(["experiment", "alpha", "horizon", "path_id", "value"])?;
            let (a, h) = (out.alpha.to_string(), out.horizon.to_string());
            for (i, v) in out.result.values.iter().enumerate() {
                w.write_record([out.experiment.as_str(), &a, &h, &i.to_string(), &v.to_string()])?;
            }
            if !out.result.values.is_empty() {
                w.write_record([out.experiment.as_str(), &a, &h, "summary", &out.result.mean.to_string()])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

pub fn parse_json_output(text: &str) -> Result<RunOutput> {
    Ok(serde_json::from_str(text)?)
}

/// Writes the rendered run to `path`, or returns it for stdout.
pub fn emit_results(out: &RunOutput, format: OutputFormat, path: Option<&Path>) -> Result<Option<String>> {
    let text = render(out, format)?;
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

/// Names of the config keys accepted in JSON files.
pub fn config_keys() -> BTreeSet<&'static str> {
    [
        "experiment", "alpha", "law", "horizon", "paths", "seed", "workers", "n_samples", "p", "state", "substeps",
        "density", "shift", "tol", "check", "format", "out", "checkpoint",
    ]
    .into_iter()
    .collect()
}

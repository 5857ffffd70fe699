//! Discrete-time renewal shift: four conjugate models of the same system
//! (tower over the gap shift, event words, increment words, the Markov
//! countdown chain), its invariant vector, and discrete order-two averages.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invariant, Result};
use crate::renewal::{GapLaw, GapSampler};

/// Gap distribution on `{1, ..., K}`; for unbounded laws the tail beyond `K`
/// is folded into `p_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapPmf {
    p: Vec<f64>,
    folded_tail: f64,
}

impl GapPmf {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&x| !(x >= 0.0)) {
            return domain("pmf must be nonempty and nonnegative");
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return domain(format!("pmf sums to {total}"));
        }
        Ok(GapPmf { p, folded_tail: 0.0 })
    }

    /// Truncation of an integer-valued law at `k_max`.
    pub fn from_law(law: &GapLaw, k_max: usize) -> Result<Self> {
        if !law.is_integer_valued() {
            return domain("truncated pmf needs an integer-valued law");
        }
        if k_max == 0 {
            return domain("truncation level must be at least 1");
        }
        let mut p: Vec<f64> = (1..=k_max as u64).map(|k| law.pmf(k).unwrap()).collect();
        let head: f64 = p.iter().sum();
        let tail = match law {
            GapLaw::ParetoInteger { alpha } => (k_max as f64 + 1.0).powf(-alpha),
            _ => (1.0 - head).max(0.0),
        };
        *p.last_mut().unwrap() += tail;
        Ok(GapPmf { p, folded_tail: tail })
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    /// Probability mass moved onto `p_K` by truncation.
    pub fn folded_tail(&self) -> f64 {
        self.folded_tail
    }

    pub fn total_mass(&self) -> f64 {
        self.p.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }
}

/// `pi_k = sum_{i >= k} p_i`, normalised by `pi_1 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantVector {
    pub pi: Vec<f64>,
}

pub fn invariant_vector(pmf: &GapPmf) -> InvariantVector {
    let mut pi = vec![0.0; pmf.p.len()];
    let mut acc = 0.0;
    for k in (0..pmf.p.len()).rev() {
        acc += pmf.p[k];
        pi[k] = acc;
    }
    InvariantVector { pi }
}

/// `max_j |(pi P)_j - pi_j|` for the countdown chain `1 -> k` w.p. `p_k`,
/// `k -> k - 1` otherwise.
pub fn stationarity_residual(pmf: &GapPmf, v: &InvariantVector) -> f64 {
    let pi = &v.pi;
    let n = pi.len();
    (0..n)
        .map(|j| {
            let inflow = pi[0] * pmf.p[j] + if j + 1 < n { pi[j + 1] } else { 0.0 };
            (inflow - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TotalMass {
    Finite { value: f64 },
    /// Partial sums `sum_{k <= K} k p_k` at increasing `K`.
    Divergent { partial_sums: Vec<(u64, f64)> },
}

/// Total mass `sum_k k p_k` of the invariant measure.
pub fn total_mass(law: &GapLaw) -> Result<TotalMass> {
    match law {
        GapLaw::Geometric { q } => Ok(TotalMass::Finite { value: 1.0 / q }),
        GapLaw::Table { .. } => Ok(TotalMass::Finite { value: law.mean().unwrap() }),
        GapLaw::ParetoInteger { alpha } => {
            // sum_{k <= K} k p_k = sum_{n < K} (n+1)^{-alpha} - K (K+1)^{-alpha}
            let mut partial_sums = Vec::new();
            let mut acc = 0.0;
            let mut next = 10u64;
            for n in 0..1_000_000u64 {
                acc += (n as f64 + 1.0).powf(-alpha);
                let k = n + 1;
                if k == next {
                    partial_sums.push((k, acc - k as f64 * (k as f64 + 1.0).powf(-alpha)));
                    next *= 10;
                }
            }
            // Partial sums grow like K^{1 - alpha}.
            Ok(TotalMass::Divergent { partial_sums })
        }
        _ => domain("total mass is defined for integer-valued gap laws"),
    }
}

/// Event word from gaps: a 1 at each renewal time `S_i`, 0 elsewhere, over
/// `[0, S_m)`.
pub fn gaps_to_event(gaps: &[u64]) -> Vec<u8> {
    let len: u64 = gaps.iter().sum();
    let mut y = vec![0u8; len as usize];
    let mut s = 0usize;
    for &g in gaps {
        y[s] = 1;
        s += g as usize;
    }
    y
}

/// Gaps between successive 1s; the end of the word closes the last gap.
pub fn event_to_gaps(event: &[u8]) -> Result<Vec<u64>> {
    if event.first() != Some(&1) {
        return domain("event word must start with a renewal");
    }
    let ones: Vec<usize> = event.iter().enumerate().filter(|(_, &y)| y == 1).map(|(i, _)| i).collect();
    let mut gaps: Vec<u64> = ones.windows(2).map(|w| (w[1] - w[0]) as u64).collect();
    gaps.push((event.len() - ones.last().unwrap()) as u64);
    Ok(gaps)
}

/// `N_n = sum_{i < n} Y_i` for `n = 0..=len`.
pub fn event_to_increment(event: &[u8]) -> Vec<u64> {
    let mut n = Vec::with_capacity(event.len() + 1);
    let mut acc = 0u64;
    n.push(0);
    for &y in event {
        acc += y as u64;
        n.push(acc);
    }
    n
}

pub fn increment_to_event(increments: &[u64]) -> Result<Vec<u8>> {
    increments
        .windows(2)
        .map(|w| match w[1].checked_sub(w[0]) {
            Some(d @ (0 | 1)) => Ok(d as u8),
            _ => invariant("increment word must rise by 0 or 1 per step"),
        })
        .collect()
}

/// Countdown states: 1 at renewals, `S_{i+1} - n + 1` strictly between.
pub fn gaps_to_markov(gaps: &[u64]) -> Vec<u64> {
    let mut x = Vec::with_capacity(gaps.iter().sum::<u64>() as usize);
    for &g in gaps {
        x.push(1);
        for j in 1..g {
            x.push(g - j + 1);
        }
    }
    x
}

pub fn markov_to_event(markov: &[u64]) -> Vec<u8> {
    markov.iter().map(|&x| (x == 1) as u8).collect()
}

/// Inverse of [`markov_to_event`]; the end of the word counts as the next
/// renewal.
pub fn event_to_markov(event: &[u8]) -> Vec<u64> {
    let mut x = vec![0u64; event.len()];
    let mut next = event.len();
    for n in (0..event.len()).rev() {
        x[n] = if event[n] == 1 { 1 } else { (next - n + 1) as u64 };
        if event[n] == 1 {
            next = n;
        }
    }
    x
}

/// Reads gaps from the state after each renewal, checking the countdown.
pub fn markov_to_gaps(markov: &[u64]) -> Result<Vec<u64>> {
    if markov.first() != Some(&1) {
        return domain("markov word must start in state 1");
    }
    for w in markov.windows(2) {
        if w[0] > 1 && w[1] != w[0] - 1 {
            return invariant("states above 1 must count down by one");
        }
    }
    let len = markov.len();
    let mut gaps = Vec::new();
    for (n, &x) in markov.iter().enumerate() {
        if x == 1 {
            gaps.push(if n + 1 < len { markov[n + 1] } else { 1 });
        }
    }
    Ok(gaps)
}

/// One finite orbit segment held in all four representations.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOrbit {
    gaps: Vec<u64>,
    starts: Vec<u64>,
    event: Vec<u8>,
    increments: Vec<u64>,
    markov: Vec<u64>,
}

impl ShiftOrbit {
    pub fn from_gaps(gaps: Vec<u64>) -> Result<Self> {
        if gaps.is_empty() || gaps.contains(&0) {
            return domain("gaps must be a nonempty sequence of positive integers");
        }
        let mut starts = Vec::with_capacity(gaps.len() + 1);
        let mut s = 0;
        starts.push(0);
        for g in &gaps {
            s += g;
            starts.push(s);
        }
        let event = gaps_to_event(&gaps);
        let increments = event_to_increment(&event);
        let markov = gaps_to_markov(&gaps);
        Ok(ShiftOrbit { gaps, starts, event, increments, markov })
    }

    pub fn from_event_word(event: Vec<u8>) -> Result<Self> {
        Self::from_gaps(event_to_gaps(&event)?)
    }

    pub fn from_markov_word(markov: Vec<u64>) -> Result<Self> {
        Self::from_gaps(markov_to_gaps(&markov)?)
    }

    pub fn from_increment_word(increments: Vec<u64>) -> Result<Self> {
        Self::from_event_word(increment_to_event(&increments)?)
    }

    pub fn len(&self) -> usize {
        self.event.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event.is_empty()
    }

    pub fn gaps(&self) -> &[u64] {
        &self.gaps
    }

    pub fn event(&self) -> &[u8] {
        &self.event
    }

    pub fn increments(&self) -> &[u64] {
        &self.increments
    }

    pub fn markov(&self) -> &[u64] {
        &self.markov
    }

    /// Tower coordinates `(i, j)` of time `n`: `n = S_i + j`, `j < gap_i`.
    fn tower_coords(&self, n: usize) -> (usize, u64) {
        let i = self.starts.partition_point(|&s| s <= n as u64) - 1;
        (i, n as u64 - self.starts[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tower,
    Event,
    Increment,
    Markov,
}

pub const MODEL_KINDS: [ModelKind; 4] = [ModelKind::Tower, ModelKind::Event, ModelKind::Increment, ModelKind::Markov];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Position {
    Tower { i: usize, j: u64 },
    Time(usize),
}

/// A point of one of the four models, given as an orbit segment and a
/// position in that model's own coordinates.
#[derive(Debug, Clone)]
pub struct ModelState {
    kind: ModelKind,
    orbit: Arc<ShiftOrbit>,
    pos: Position,
}

impl PartialEq for ModelState {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.pos == other.pos
            && (Arc::ptr_eq(&self.orbit, &other.orbit) || self.orbit == other.orbit)
    }
}

impl ModelState {
    /// The point of `kind` at time 0 of the orbit.
    pub fn start(kind: ModelKind, orbit: Arc<ShiftOrbit>) -> Self {
        let pos = match kind {
            ModelKind::Tower => Position::Tower { i: 0, j: 0 },
            _ => Position::Time(0),
        };
        ModelState { kind, orbit, pos }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Time along the orbit, read from the model's own coordinates.
    pub fn time(&self) -> usize {
        match self.pos {
            Position::Tower { i, j } => (self.orbit.starts[i] + j) as usize,
            Position::Time(n) => n,
        }
    }

    /// Next `len` symbols of the event word seen from this point, computed
    /// from the model's own representation.
    pub fn event_window(&self, len: usize) -> Result<Vec<u8>> {
        let o = &self.orbit;
        match self.pos {
            Position::Tower { mut i, mut j } => {
                let mut out = Vec::with_capacity(len);
                for _ in 0..len {
                    if i >= o.gaps.len() {
                        return domain("event window runs past the tower segment");
                    }
                    out.push((j == 0) as u8);
                    j += 1;
                    if j == o.gaps[i] {
                        i += 1;
                        j = 0;
                    }
                }
                Ok(out)
            }
            Position::Time(n) => {
                if n + len > o.len() {
                    return domain("event window runs past the orbit segment");
                }
                Ok(match self.kind {
                    ModelKind::Event => o.event[n..n + len].to_vec(),
                    ModelKind::Increment => o.increments[n..=n + len].windows(2).map(|w| (w[1] - w[0]) as u8).collect(),
                    ModelKind::Markov => o.markov[n..n + len].iter().map(|&x| (x == 1) as u8).collect(),
                    ModelKind::Tower => unreachable!(),
                })
            }
        }
    }

    /// Current Markov state, from the model's own representation.
    pub fn markov_state(&self) -> u64 {
        match self.pos {
            Position::Tower { i, j } => {
                if j == 0 {
                    1
                } else {
                    self.orbit.gaps[i] - j + 1
                }
            }
            Position::Time(n) => match self.kind {
                ModelKind::Markov => self.orbit.markov[n],
                ModelKind::Event => event_to_markov(&self.orbit.event[n..])[0],
                ModelKind::Increment => {
                    let ev = increment_to_event(&self.orbit.increments[n..]).unwrap_or_default();
                    event_to_markov(&ev)[0]
                }
                ModelKind::Tower => unreachable!(),
            },
        }
    }
}

/// One step of the model's dynamics.
pub fn step(state: &ModelState) -> Result<ModelState> {
    let o = &state.orbit;
    let pos = match state.pos {
        Position::Tower { i, j } => {
            if j + 1 < o.gaps[i] {
                Position::Tower { i, j: j + 1 }
            } else if i + 1 < o.gaps.len() {
                Position::Tower { i: i + 1, j: 0 }
            } else {
                return domain("tower step leaves the simulated gap window");
            }
        }
        Position::Time(n) => {
            if n + 1 >= o.len() {
                return domain("shift leaves the simulated word window");
            }
            Position::Time(n + 1)
        }
    };
    Ok(ModelState { kind: state.kind, orbit: state.orbit.clone(), pos })
}

/// Conjugacy between any two of the models.
pub fn isomorphism_map(state: &ModelState, target: ModelKind) -> ModelState {
    let n = state.time();
    let pos = match target {
        ModelKind::Tower => {
            let (i, j) = state.orbit.tower_coords(n);
            Position::Tower { i, j }
        }
        _ => Position::Time(n),
    };
    ModelState { kind: target, orbit: state.orbit.clone(), pos }
}

/// One transition of the countdown chain driven by a uniform `u` in [0, 1).
pub fn markov_step(state: u64, u: f64, sampler: &GapSampler) -> u64 {
    if state > 1 {
        state - 1
    } else {
        sampler.from_uniform(u) as u64
    }
}

/// The countdown chain started in state 1, as an iterator of states
/// `x_0 = 1, x_1, ...`.
pub struct RenewalShiftChain<R: Rng> {
    sampler: GapSampler,
    state: u64,
    rng: R,
}

impl<R: Rng> RenewalShiftChain<R> {
    pub fn new(law: &GapLaw, rng: R) -> Result<Self> {
        if !law.is_integer_valued() {
            return domain("the renewal shift needs an integer-valued gap law");
        }
        Ok(RenewalShiftChain { sampler: law.sampler(), state: 1, rng })
    }
}

impl<R: Rng> Iterator for RenewalShiftChain<R> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let current = self.state;
        self.state = if current > 1 { current - 1 } else { self.sampler.sample(&mut self.rng) as u64 };
        Some(current)
    }
}

/// Both discrete order-two averages of `phi` along `x_0, x_1, ..., x_k`:
/// `(1/log k) sum_{n=1}^k S_n phi / (a_hat(n) n)` and
/// `(1/log a_hat(k)) sum_{n=1}^k phi(x_n) / a_hat(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteOrderTwo {
    pub log_average: f64,
    pub normalized_sum: f64,
}

pub fn discrete_order_two<I, P, A>(states: I, phi: P, k: usize, a_hat: A) -> Result<DiscreteOrderTwo>
where
    I: IntoIterator<Item = u64>,
    P: Fn(u64) -> f64,
    A: Fn(f64) -> f64,
{
    if k < 2 {
        return domain("order-two averages need k >= 2");
    }
    let mut it = states.into_iter();
    let mut birkhoff = 0.0;
    let mut first = 0.0;
    let mut second = 0.0;
    let x0 = it.next().ok_or_else(|| crate::error::Error::Domain("empty orbit".into()))?;
    let mut prev_phi = phi(x0);
    for n in 1..=k {
        let x = it.next().ok_or_else(|| crate::error::Error::Domain(format!("orbit shorter than {k}")))?;
        birkhoff += prev_phi;
        let an = a_hat(n as f64);
        first += birkhoff / (an * n as f64);
        let f = phi(x);
        second += f / an;
        prev_phi = f;
    }
    Ok(DiscreteOrderTwo {
        log_average: first / (k as f64).ln(),
        normalized_sum: second / a_hat(k as f64).ln(),
    })
}

/// Writes `n,state,Y_n,N_n` rows for the first `steps` states.
pub fn write_orbit_csv<W: Write, I: IntoIterator<Item = u64>>(out: W, states: I, steps: usize) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["n", "state", "Y_n", "N_n"])?;
    let mut count = 0u64;
    for (n, x) in states.into_iter().take(steps).enumerate() {
        let y = (x == 1) as u64;
        w.write_record([n.to_string(), x.to_string(), y.to_string(), count.to_string()])?;
        count += y;
    }
    w.flush()?;
    Ok(())
}

//! Piecewise paths on finite windows and the flows acting on them.
//!
//! A [`PiecewisePath`] is either a right-continuous step function or a
//! continuous piecewise-linear function, given by breakpoints and the values
//! at those breakpoints. The scaling flow, the increment flow, the generalized
//! inverse and completed graphs are all computed exactly on this
//! representation.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invariant, Error, Result};

/// Breakpoints closer than this (relative to their magnitude) are treated as
/// the same point when two paths are compared.
pub const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    /// Right-continuous, constant between breakpoints.
    Step,
    /// Continuous, linear between breakpoints.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Nondecreasing,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_min: f64,
    pub t_max: f64,
}

impl Window {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite()) || t_min >= t_max {
            return domain(format!("window [{t_min}, {t_max}] is empty or not finite"));
        }
        Ok(Window { t_min, t_max })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }

    pub fn intersect(&self, other: &Window) -> Option<Window> {
        Window::new(self.t_min.max(other.t_min), self.t_max.min(other.t_max)).ok()
    }

    pub fn len(&self) -> f64 {
        self.t_max - self.t_min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePath {
    kind: PathKind,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    monotone: Monotonicity,
    right_open: bool,
}

#[derive(Serialize, Deserialize)]
struct PathRecord {
    kind: PathKind,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    right_open: bool,
}

impl Serialize for PiecewisePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PathRecord {
            kind: self.kind,
            breakpoints: self.breakpoints.clone(),
            values: self.values.clone(),
            right_open: self.right_open,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewisePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = PathRecord::deserialize(d)?;
        let p = PiecewisePath::new(rec.kind, rec.breakpoints, rec.values)
            .map_err(serde::de::Error::custom)?;
        Ok(if rec.right_open { p.open_right() } else { p })
    }
}

impl PiecewisePath {
    pub fn new(kind: PathKind, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return domain("a path needs at least two breakpoints");
        }
        if breakpoints.len() != values.len() {
            return domain(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            ));
        }
        if breakpoints.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return domain("breakpoints and values must be finite");
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return domain("breakpoints must be strictly increasing");
        }
        let monotone = if values.windows(2).all(|w| w[0] <= w[1]) {
            Monotonicity::Nondecreasing
        } else {
            Monotonicity::General
        };
        Ok(PiecewisePath { kind, breakpoints, values, monotone, right_open: false })
    }

    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(PathKind::Step, breakpoints, values)
    }

    pub fn linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(PathKind::Linear, breakpoints, values)
    }

    /// Marks the right endpoint as excluded from the window. For step paths
    /// the stored final value is replaced by the left limit.
    pub fn open_right(mut self) -> Self {
        if self.kind == PathKind::Step {
            let n = self.values.len();
            self.values[n - 1] = self.values[n - 2];
            if self.values.windows(2).all(|w| w[0] <= w[1]) {
                self.monotone = Monotonicity::Nondecreasing;
            }
        }
        self.right_open = true;
        self
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotone
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.monotone == Monotonicity::Nondecreasing
    }

    pub fn is_right_open(&self) -> bool {
        self.right_open
    }

    pub fn window(&self) -> Window {
        Window { t_min: self.breakpoints[0], t_max: *self.breakpoints.last().unwrap() }
    }

    pub fn t_min(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn in_domain(&self, t: f64) -> bool {
        t >= self.t_min() && (t < self.t_max() || (t == self.t_max() && !self.right_open))
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if self.in_domain(t) {
            Ok(())
        } else {
            let close = if self.right_open { ")" } else { "]" };
            domain(format!(
                "t = {t} outside window [{}, {}{close}",
                self.t_min(),
                self.t_max()
            ))
        }
    }

    /// Index `i` with `breakpoints[i] <= t < breakpoints[i + 1]`, or the last
    /// index when `t` is the right endpoint.
    fn locate(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t).saturating_sub(1)
    }

    fn eval_at(&self, i: usize, t: f64) -> f64 {
        match self.kind {
            PathKind::Step => self.values[i],
            PathKind::Linear => {
                if i + 1 == self.breakpoints.len() || t == self.breakpoints[i] {
                    self.values[i]
                } else {
                    let (b0, b1) = (self.breakpoints[i], self.breakpoints[i + 1]);
                    let (v0, v1) = (self.values[i], self.values[i + 1]);
                    v0 + (v1 - v0) * (t - b0) / (b1 - b0)
                }
            }
        }
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.eval_at(self.locate(t), t))
    }

    /// Left limit `p(t-)`; equals `p(t_min)` at the left endpoint.
    pub fn left_limit(&self, t: f64) -> Result<f64> {
        if !self.window().contains(t) {
            return domain(format!("t = {t} outside window {:?}", self.window()));
        }
        match self.kind {
            PathKind::Linear => Ok(self.eval_at(self.locate(t), t)),
            PathKind::Step => {
                let i = self.locate(t);
                if i > 0 && t == self.breakpoints[i] {
                    Ok(self.values[i - 1])
                } else {
                    Ok(self.values[i])
                }
            }
        }
    }

    /// Exact integral of the path over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Ok(-self.integral(b, a)?);
        }
        if !(self.window().contains(a) && self.window().contains(b)) {
            return domain(format!("[{a}, {b}] not inside window {:?}", self.window()));
        }
        let mut total = 0.0;
        let mut i = self.locate(a);
        let mut lo = a;
        while lo < b {
            let hi = if i + 1 < self.breakpoints.len() { self.breakpoints[i + 1].min(b) } else { b };
            total += match self.kind {
                PathKind::Step => self.values[i] * (hi - lo),
                PathKind::Linear => 0.5 * (self.eval_at(i, lo) + self.eval_at(i, hi)) * (hi - lo),
            };
            lo = hi;
            i += 1;
        }
        Ok(total)
    }

    /// Restriction to a subwindow; breakpoints outside are dropped.
    pub fn restrict(&self, window: Window) -> Result<PiecewisePath> {
        if !(self.window().contains(window.t_min) && self.window().contains(window.t_max)) {
            return domain(format!("{window:?} not inside {:?}", self.window()));
        }
        let mut bps = vec![window.t_min];
        let mut vals = vec![self.eval_at(self.locate(window.t_min), window.t_min)];
        for (&b, &v) in self.breakpoints.iter().zip(&self.values) {
            if b > window.t_min && b < window.t_max {
                bps.push(b);
                vals.push(v);
            }
        }
        bps.push(window.t_max);
        vals.push(self.eval_at(self.locate(window.t_max), window.t_max));
        let p = PiecewisePath::new(self.kind, bps, vals)?;
        Ok(if self.right_open && window.t_max == self.t_max() { p.open_right() } else { p })
    }

    /// `x -> value_scale * p(x / time_scale + time_shift) + value_shift`
    /// realised by moving breakpoints and values.
    fn affine(&self, time: impl Fn(f64) -> f64, value: impl Fn(f64) -> f64) -> Result<PiecewisePath> {
        let bps: Vec<f64> = self.breakpoints.iter().map(|&b| time(b)).collect();
        let vals: Vec<f64> = self.values.iter().map(|&v| value(v)).collect();
        let p = PiecewisePath::new(self.kind, bps, vals)?;
        Ok(if self.right_open { p.open_right() } else { p })
    }

    /// Same knots, linear interpolation between them.
    pub fn linear_interpolant(&self) -> PiecewisePath {
        PiecewisePath {
            kind: PathKind::Linear,
            breakpoints: self.breakpoints.clone(),
            values: self.values.clone(),
            monotone: self.monotone,
            right_open: false,
        }
    }
}

/// Generalized inverse `p^(t) = inf{s : p(s) > t}`.
///
/// Step paths map to step paths on the right-open window `[p(t_min), sup p)`.
/// Linear paths must be strictly increasing and map to the linear path with
/// breakpoints and values swapped.
pub fn generalized_inverse(p: &PiecewisePath) -> Result<PiecewisePath> {
    if !p.is_nondecreasing() {
        return invariant("generalized inverse requires a nondecreasing path");
    }
    match p.kind {
        PathKind::Linear => {
            if p.values.windows(2).any(|w| w[0] >= w[1]) {
                return invariant(
                    "linear path has a flat piece; its inverse jumps and is not linear",
                );
            }
            PiecewisePath::linear(p.values.clone(), p.breakpoints.clone())
        }
        PathKind::Step => {
            let mut levels: Vec<f64> = Vec::new();
            let mut hits: Vec<f64> = Vec::new();
            for (&b, &v) in p.breakpoints.iter().zip(&p.values) {
                if levels.last().is_none_or(|&last| v > last) {
                    levels.push(v);
                    hits.push(b);
                }
            }
            if levels.len() < 2 {
                return domain("constant path: inverse window is empty");
            }
            // On [levels[j], levels[j+1]) the first time above the level is
            // the first breakpoint reaching levels[j+1].
            let mut vals: Vec<f64> = hits[1..].to_vec();
            vals.push(*vals.last().unwrap());
            Ok(PiecewisePath::step(levels, vals)?.open_right())
        }
    }
}

/// `(tau_t f)(x) = f(e^t x) / e^{beta t}`.
pub fn scaling_flow(p: &PiecewisePath, t: f64, beta: f64) -> Result<PiecewisePath> {
    let (tx, vx) = ((-t).exp(), (-beta * t).exp());
    p.affine(|b| b * tx, |v| v * vx)
}

/// `(eta_s f)(x) = f(x + s) - f(s)`.
pub fn increment_flow(p: &PiecewisePath, s: f64) -> Result<PiecewisePath> {
    let base = p.evaluate(s)?;
    p.affine(|b| b - s, |v| v - base)
}

/// Shift of a dual path: `g(y) = f^(y + dy) - ds`. With `dy = f(s)` and
/// `ds = s` this is the dual increment subflow induced by `eta_s`.
pub fn dual_increment(f_hat: &PiecewisePath, dy: f64, ds: f64) -> Result<PiecewisePath> {
    f_hat.affine(|b| b - dy, |v| v - ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowPair {
    /// `(tau, eta)` with scaling index `1/alpha`.
    Primal,
    /// `(tau^, eta^)` on dual paths, scaling index `alpha`.
    Dual,
}

/// Sup-distance between `tau_t . eta_s` and `eta_{e^{-kt} s} . tau_t` on the
/// common window, with `k = 1` for the primal pair and `k = alpha` for the dual
/// pair. `p` is the primal (nondecreasing for the dual check) path.
pub fn commutation_check(p: &PiecewisePath, s: f64, t: f64, alpha: f64, pair: FlowPair) -> Result<f64> {
    match pair {
        FlowPair::Primal => {
            let beta = 1.0 / alpha;
            let lhs = scaling_flow(&increment_flow(p, s)?, t, beta)?;
            let rhs = increment_flow(&scaling_flow(p, t, beta)?, (-t).exp() * s)?;
            sup_distance_common(&lhs, &rhs)
        }
        FlowPair::Dual => {
            let f_hat = generalized_inverse(p)?;
            let lhs = scaling_flow(&dual_increment(&f_hat, p.evaluate(s)?, s)?, t, alpha)?;
            let scaled_hat = scaling_flow(&f_hat, t, alpha)?;
            let s2 = (-alpha * t).exp() * s;
            let scaled_primal = scaling_flow(p, alpha * t, 1.0 / alpha)?;
            let rhs = dual_increment(&scaled_hat, scaled_primal.evaluate(s2)?, s2)?;
            sup_distance_common(&lhs, &rhs)
        }
    }
}

fn snap_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= SNAP_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Sup-distance of two paths over their common window.
pub fn sup_distance_common(p: &PiecewisePath, q: &PiecewisePath) -> Result<f64> {
    let w = p
        .window()
        .intersect(&q.window())
        .ok_or_else(|| Error::Domain("paths have disjoint windows".into()))?;
    sup_distance(p, q, w)
}

/// Exact `sup_{t in window} |p(t) - q(t)|`, evaluated at merged breakpoints
/// including left limits at jumps. Breakpoints within [`SNAP_TOL`] of each
/// other are identified. If either path is right-open at the window's right
/// end, only left limits are compared there.
pub fn sup_distance(p: &PiecewisePath, q: &PiecewisePath, window: Window) -> Result<f64> {
    for r in [p, q] {
        if window.t_min < r.t_min() || window.t_max > r.t_max() {
            return domain(format!("window {window:?} not covered by path window {:?}", r.window()));
        }
    }
    let open_end = (p.right_open && window.t_max == p.t_max()) || (q.right_open && window.t_max == q.t_max());

    let mut pts: Vec<(f64, u8)> = vec![(window.t_min, 0), (window.t_max, 0)];
    for (tag, r) in [(1u8, p), (2u8, q)] {
        pts.extend(
            r.breakpoints
                .iter()
                .filter(|&&b| {
                    (b > window.t_min && b < window.t_max) || snap_close(b, window.t_min) || snap_close(b, window.t_max)
                })
                .map(|&b| (b, tag)),
        );
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut clusters: Vec<Vec<(f64, u8)>> = Vec::new();
    for pt in pts {
        match clusters.last_mut() {
            Some(c) if snap_close(c[0].0, pt.0) => c.push(pt),
            _ => clusters.push(vec![pt]),
        }
    }

    let n = clusters.len();
    let mut d: f64 = 0.0;
    for (k, c) in clusters.iter().enumerate() {
        let rep = c[0].0;
        let own = |tag: u8| c.iter().find(|x| x.1 == tag).map(|x| x.0).unwrap_or(rep);
        let (xp, xq) = (own(1), own(2));
        let clamp = |r: &PiecewisePath, x: f64| x.clamp(r.t_min(), r.t_max());
        let (xp, xq) = (clamp(p, xp), clamp(q, xq));
        let last = k + 1 == n;
        if !(last && open_end) {
            let pv = p.eval_at(p.locate(xp), xp);
            let qv = q.eval_at(q.locate(xq), xq);
            d = d.max((pv - qv).abs());
        }
        if k > 0 {
            d = d.max((p.left_limit(xp)? - q.left_limit(xq)?).abs());
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSegment {
    pub start: (f64, f64),
    pub end: (f64, f64),
}

impl GraphSegment {
    pub fn is_vertical(&self) -> bool {
        self.start.0 == self.end.0 && self.start.1 != self.end.1
    }

    fn is_degenerate(&self) -> bool {
        self.start == self.end
    }

    fn direction(&self) -> (f64, f64) {
        (self.end.0 - self.start.0, self.end.1 - self.start.1)
    }
}

/// Completed graph `{(x, y) : p(x-) <= y <= p(x)}` of a nondecreasing path as
/// a monotone polyline: path arcs plus vertical segments at jumps.
pub fn completed_graph(p: &PiecewisePath) -> Result<Vec<GraphSegment>> {
    if !p.is_nondecreasing() {
        return invariant("completed graph requires a nondecreasing path");
    }
    let mut segs = Vec::new();
    let n = p.breakpoints.len();
    for i in 0..n - 1 {
        let (b0, b1) = (p.breakpoints[i], p.breakpoints[i + 1]);
        match p.kind {
            PathKind::Step => {
                segs.push(GraphSegment { start: (b0, p.values[i]), end: (b1, p.values[i]) });
                if p.values[i + 1] > p.values[i] {
                    segs.push(GraphSegment { start: (b1, p.values[i]), end: (b1, p.values[i + 1]) });
                }
            }
            PathKind::Linear => {
                segs.push(GraphSegment { start: (b0, p.values[i]), end: (b1, p.values[i + 1]) });
            }
        }
    }
    Ok(normalize_graph(&segs))
}

/// Reflection `(x, y) -> (y, x)`.
pub fn dual_graph(segs: &[GraphSegment]) -> Vec<GraphSegment> {
    segs.iter()
        .map(|s| GraphSegment { start: (s.start.1, s.start.0), end: (s.end.1, s.end.0) })
        .collect()
}

pub fn translate_graph(segs: &[GraphSegment], dx: f64, dy: f64) -> Vec<GraphSegment> {
    segs.iter()
        .map(|s| GraphSegment {
            start: (s.start.0 + dx, s.start.1 + dy),
            end: (s.end.0 + dx, s.end.1 + dy),
        })
        .collect()
}

/// Drops zero-length segments and merges consecutive collinear ones.
pub fn normalize_graph(segs: &[GraphSegment]) -> Vec<GraphSegment> {
    let mut out: Vec<GraphSegment> = Vec::new();
    for s in segs.iter().filter(|s| !s.is_degenerate()) {
        if let Some(last) = out.last_mut() {
            let (a, b) = (last.direction(), s.direction());
            let cross = a.0 * b.1 - a.1 * b.0;
            let scale = (a.0.abs() + a.1.abs()) * (b.0.abs() + b.1.abs());
            if last.end == s.start && cross.abs() <= 1e-12 * scale && a.0 * b.0 + a.1 * b.1 > 0.0 {
                last.end = s.end;
                continue;
            }
        }
        out.push(*s);
    }
    out
}

/// Removes vertical segments at either end of a graph. The dual of a graph
/// starting or ending on a flat piece has such segments, which lie outside
/// the resolved window of the inverse path.
pub fn trim_boundary_verticals(segs: &[GraphSegment]) -> Vec<GraphSegment> {
    let mut v = normalize_graph(segs);
    while v.first().is_some_and(|s| s.is_vertical()) {
        v.remove(0);
    }
    while v.last().is_some_and(|s| s.is_vertical()) {
        v.pop();
    }
    v
}

/// Largest endpoint discrepancy between two normalized graphs; infinite if
/// they have different numbers of segments.
pub fn graph_distance(a: &[GraphSegment], b: &[GraphSegment]) -> f64 {
    let (a, b) = (normalize_graph(a), normalize_graph(b));
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(&b)
        .map(|(s, t)| {
            [
                (s.start.0 - t.start.0).abs(),
                (s.start.1 - t.start.1).abs(),
                (s.end.0 - t.end.0).abs(),
                (s.end.1 - t.end.1).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Splits `p - p(t_min)` into nondecreasing parts `p+ - p-`, both starting at 0
/// on the same breakpoints, with disjoint increment supports.
pub fn hahn_decompose(p: &PiecewisePath) -> Result<(PiecewisePath, PiecewisePath)> {
    let n = p.values.len();
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    let (mut up, mut down) = (0.0, 0.0);
    pos.push(0.0);
    neg.push(0.0);
    for w in p.values.windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 {
            up += d;
        } else {
            down -= d;
        }
        pos.push(up);
        neg.push(down);
    }
    let plus = PiecewisePath::new(p.kind, p.breakpoints.clone(), pos)?;
    let minus = PiecewisePath::new(p.kind, p.breakpoints.clone(), neg)?;
    Ok(if p.right_open { (plus.open_right(), minus.open_right()) } else { (plus, minus) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> PiecewisePath {
        PiecewisePath::step(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 5.0]).unwrap()
    }

    #[test]
    fn step_evaluation_is_right_continuous() {
        let p = example();
        assert_eq!(p.evaluate(1.0).unwrap(), 2.0);
        assert_eq!(p.evaluate(0.999).unwrap(), 0.0);
        assert_eq!(p.evaluate(2.0).unwrap(), 5.0);
        assert_eq!(p.left_limit(1.0).unwrap(), 0.0);
        assert!(matches!(p.evaluate(2.5), Err(Error::Domain(_))));
        assert!(matches!(p.evaluate(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn linear_evaluation_interpolates() {
        let p = PiecewisePath::linear(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(p.evaluate(0.5).unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(PiecewisePath::step(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(PiecewisePath::step(vec![0.0], vec![1.0]).is_err());
        assert!(PiecewisePath::step(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn inverse_of_small_step_path() {
        let f = PiecewisePath::step(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 2.0, 5.0, 5.0]).unwrap();
        let g = generalized_inverse(&f).unwrap();
        assert_eq!(g.breakpoints(), &[0.0, 2.0, 5.0]);
        assert!(g.is_right_open());
        assert_eq!(g.evaluate(0.0).unwrap(), 1.0);
        assert_eq!(g.evaluate(1.99).unwrap(), 1.0);
        assert_eq!(g.evaluate(2.0).unwrap(), 2.0);
        assert_eq!(g.evaluate(4.99).unwrap(), 2.0);
        assert!(g.evaluate(5.0).is_err());

        let back = generalized_inverse(&g).unwrap();
        let w = Window::new(1.0, 2.0).unwrap();
        assert_eq!(sup_distance(&back, &f, w).unwrap(), 0.0);
    }

    #[test]
    fn inverse_rejects_decreasing_and_constant_paths() {
        let p = PiecewisePath::step(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0]).unwrap();
        assert!(matches!(generalized_inverse(&p), Err(Error::Invariant(_))));
        let c = PiecewisePath::step(vec![0.0, 1.0], vec![3.0, 3.0]).unwrap();
        assert!(matches!(generalized_inverse(&c), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_of_identity_is_identity() {
        let id = PiecewisePath::linear(vec![0.0, 10.0], vec![0.0, 10.0]).unwrap();
        assert_eq!(generalized_inverse(&id).unwrap(), id);
    }

    #[test]
    fn scaling_flow_example() {
        let q = scaling_flow(&example(), std::f64::consts::LN_2, 1.0).unwrap();
        let expect_b = [0.0, 0.5, 1.0];
        let expect_v = [0.0, 1.0, 2.5];
        for i in 0..3 {
            assert!((q.breakpoints()[i] - expect_b[i]).abs() < 1e-15);
            assert!((q.values()[i] - expect_v[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn increment_flow_example() {
        // f(1) = 2, so the shifted path is f(x + 1) - 2.
        let q = increment_flow(&example(), 1.0).unwrap();
        assert_eq!(q.breakpoints(), &[-1.0, 0.0, 1.0]);
        assert_eq!(q.evaluate(-0.5).unwrap(), -2.0);
        assert_eq!(q.evaluate(0.0).unwrap(), 0.0);
        assert_eq!(q.evaluate(0.5).unwrap(), 0.0);
        assert_eq!(q.evaluate(1.0).unwrap(), 3.0);
        assert!(increment_flow(&example(), 3.0).is_err());
    }

    #[test]
    fn sup_distance_example() {
        let p = example();
        let q = PiecewisePath::step(vec![0.0, 1.0, 2.0], vec![0.0, 3.0, 5.0]).unwrap();
        assert_eq!(sup_distance(&p, &q, p.window()).unwrap(), 1.0);
        assert!(sup_distance(&p, &q, Window::new(0.0, 3.0).unwrap()).is_err());
    }

    #[test]
    fn sup_distance_sees_left_limits() {
        // Jumps at different places: the difference is 1 on [1, 1.5).
        let p = PiecewisePath::step(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).unwrap();
        let q = PiecewisePath::step(vec![0.0, 1.5, 2.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(sup_distance_common(&p, &q).unwrap(), 1.0);
    }

    #[test]
    fn hahn_example() {
        let p = PiecewisePath::step(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 2.0, 1.0, 4.0]).unwrap();
        let (plus, minus) = hahn_decompose(&p).unwrap();
        assert_eq!(plus.values(), &[0.0, 2.0, 2.0, 5.0]);
        assert_eq!(minus.values(), &[0.0, 0.0, 1.0, 1.0]);
        let mono = PiecewisePath::step(vec![0.0, 1.0], vec![3.0, 4.0]).unwrap();
        let (plus, minus) = hahn_decompose(&mono).unwrap();
        assert_eq!(plus.values(), &[0.0, 1.0]);
        assert_eq!(minus.values(), &[0.0, 0.0]);
    }

    #[test]
    fn json_round_trip() {
        let p = example();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"kind":"step","breakpoints":[0.0,1.0,2.0],"values":[0.0,2.0,5.0]}"#);
        let back: PiecewisePath = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"kind":"step","breakpoints":[1.0,0.0],"values":[0.0,2.0]}"#;
        assert!(serde_json::from_str::<PiecewisePath>(bad).is_err());
    }

    #[test]
    fn integral_is_exact() {
        let p = example();
        assert_eq!(p.integral(0.0, 2.0).unwrap(), 2.0);
        assert_eq!(p.integral(0.5, 1.5).unwrap(), 1.0);
        let l = PiecewisePath::linear(vec![0.0, 2.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(l.integral(0.0, 2.0).unwrap(), 2.0);
    }

    #[test]
    fn completed_graph_of_step() {
        let f = PiecewisePath::step(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 2.0, 5.0, 5.0]).unwrap();
        let g = completed_graph(&f).unwrap();
        assert_eq!(g.len(), 5);
        assert!(g[1].is_vertical());
        let inv = generalized_inverse(&f).unwrap();
        let dual = trim_boundary_verticals(&dual_graph(&g));
        assert_eq!(graph_distance(&dual, &completed_graph(&inv).unwrap()), 0.0);
    }
}

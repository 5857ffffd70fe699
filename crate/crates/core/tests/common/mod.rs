#![allow(dead_code)]

use ergoflow::paths::PiecewisePath;
use rand::Rng;

/// Breakpoints `0 = b_0 < b_1 < ... ` with gaps in `[0.05, 2]`.
pub fn random_breakpoints<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    for _ in 1..n {
        let last = *b.last().unwrap();
        b.push(last + rng.random_range(0.05..2.0));
    }
    b
}

/// Nondecreasing step path with `f(0) = 0` and some flat pieces.
pub fn random_counting_like<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PiecewisePath {
    let b = random_breakpoints(rng, n);
    let mut v = vec![0.0];
    for _ in 1..n {
        let last = *v.last().unwrap();
        let jump = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.1..3.0) };
        v.push(last + jump);
    }
    // Keep at least two levels so the inverse is defined.
    if v[n - 1] == 0.0 {
        v[n - 1] = 1.0;
    }
    PiecewisePath::step(b, v).unwrap()
}

/// Strictly increasing continuous piecewise-linear path through the origin.
pub fn random_linear_increasing<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PiecewisePath {
    let b = random_breakpoints(rng, n);
    let mut v = vec![0.0];
    for _ in 1..n {
        let last = *v.last().unwrap();
        v.push(last + rng.random_range(0.05..3.0));
    }
    PiecewisePath::linear(b, v).unwrap()
}

/// Arbitrary step path on `[0, L]`.
pub fn random_step<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PiecewisePath {
    let b = random_breakpoints(rng, n);
    let v = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    PiecewisePath::step(b, v).unwrap()
}

/// Arbitrary continuous piecewise-linear path on `[0, L]`.
pub fn random_linear<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PiecewisePath {
    let b = random_breakpoints(rng, n);
    let v = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    PiecewisePath::linear(b, v).unwrap()
}

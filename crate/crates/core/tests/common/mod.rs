//! Helpers shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use srwlab::cadlag::{Polyline, StepFunction};

pub fn random_step(rng: &mut impl Rng, max_jumps: usize, lo: f64, hi: f64) -> StepFunction {
    let k = rng.random_range(0..=max_jumps);
    let jumps: Vec<(f64, f64)> = (0..k)
        .map(|_| (rng.random_range(lo..hi), rng.random_range(-1.0..1.0)))
        .collect();
    StepFunction::from_jumps(rng.random_range(-0.5..0.5), &jumps).unwrap()
}

/// Points along the path, at most `h` apart in both coordinates, keeping
/// every vertex.
pub fn densify(p: &Polyline, h: f64) -> Vec<(f64, f64)> {
    let v = p.vertices();
    let mut out = vec![v[0]];
    for w in v.windows(2) {
        let span = (w[1].0 - w[0].0).abs().max((w[1].1 - w[0].1).abs());
        let k = (span / h).ceil().max(1.0) as usize;
        for i in 1..=k {
            let s = i as f64 / k as f64;
            out.push((
                w[0].0 + s * (w[1].0 - w[0].0),
                w[0].1 + s * (w[1].1 - w[0].1),
            ));
        }
    }
    out
}

/// Discrete Fréchet distance under the Chebyshev metric.
pub fn discrete_frechet(p: &[(f64, f64)], q: &[(f64, f64)]) -> f64 {
    let d = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs().max((a.1 - b.1).abs());
    let mut prev = vec![f64::INFINITY; q.len()];
    for (i, &a) in p.iter().enumerate() {
        let mut row = vec![f64::INFINITY; q.len()];
        for (j, &b) in q.iter().enumerate() {
            let reach = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => row[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(prev[j - 1]).min(row[j - 1]),
            };
            row[j] = reach.max(d(a, b));
        }
        prev = row;
    }
    prev[q.len() - 1]
}

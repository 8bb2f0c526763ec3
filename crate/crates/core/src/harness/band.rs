use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fields::FluctuationParams;
use crate::replicate_rng;
use crate::stats::normal_quantile;

/// Band parameters chosen from the limit law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandChoice {
    pub delta1: f64,
    pub delta2: f64,
    /// Monte Carlo `P(exists y in [c - delta2, c] : |B_y| <= 3 delta1)`.
    pub near_zero: f64,
    /// No candidate met the level; `delta2` is the smallest candidate.
    pub fallback: bool,
}

/// Largest `delta1` with `P(|B_c| <= 4 delta1) <= 1/8`, where
/// `B_c ~ N(0, var_rho |c - x|)`.
pub fn choose_delta1(p: &FluctuationParams) -> f64 {
    let sd = (p.var_rho * (p.reach() - p.walk.x).abs()).sqrt();
    sd * normal_quantile(0.5 + 1.0 / 16.0) / 4.0
}

/// Largest `delta2` among `theta k / candidates`, `0 < k < candidates`, with
/// the Monte Carlo probability that the limit comes within `3 delta1` of zero
/// on `[c - delta2, c]` at most `level`. Paths are sampled with step `h`.
#[allow(clippy::too_many_arguments)]
pub fn choose_delta2(
    p: &FluctuationParams,
    delta1: f64,
    level: f64,
    paths: u64,
    h: f64,
    candidates: usize,
    seed: u64,
    tag: u64,
) -> BandChoice {
    let (c, x, theta) = (p.reach(), p.walk.x, p.walk.theta);
    let candidates = candidates.max(2);
    let start = c - theta * (candidates - 1) as f64 / candidates as f64;
    let near = 3.0 * delta1;
    // Last grid point of [start, c] where |B| <= 3 delta1, per path.
    let last: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = replicate_rng(seed, tag, k);
            let z: f64 = rng.sample(StandardNormal);
            let mut b = (p.var_rho * (start - x)).sqrt() * z;
            let mut y = start;
            let mut hit = if b.abs() <= near {
                y
            } else {
                f64::NEG_INFINITY
            };
            while y < c {
                let next = (y + h).min(c);
                let z: f64 = rng.sample(StandardNormal);
                b += (p.var_rho * (next - y)).sqrt() * z;
                y = next;
                if b.abs() <= near {
                    hit = y;
                }
            }
            hit
        })
        .collect();
    let prob = |d2: f64| last.iter().filter(|t| **t >= c - d2).count() as f64 / paths as f64;
    for k in (1..candidates).rev() {
        let d2 = theta * k as f64 / candidates as f64;
        let q = prob(d2);
        if q <= level {
            return BandChoice {
                delta1,
                delta2: d2,
                near_zero: q,
                fallback: false,
            };
        }
    }
    let d2 = theta / candidates as f64;
    BandChoice {
        delta1,
        delta2: d2,
        near_zero: prob(d2),
        fallback: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{Sign, WalkParams};

    #[test]
    fn delta1_quantile() {
        let p = FluctuationParams::new(WalkParams::new(100, 1.0, 0.5, Sign::Minus).unwrap(), 0.5)
            .unwrap();
        let d1 = choose_delta1(&p);
        let cdf = crate::stats::normal_cdf(0.5);
        assert!((cdf(4.0 * d1) - cdf(-4.0 * d1) - 0.125).abs() < 1e-9);
        let band = choose_delta2(&p, d1, 0.25, 2000, 1e-3, 50, 1, 2);
        assert!(!band.fallback && band.delta2 < 0.5 && band.near_zero <= 0.25);
        // the next candidate up exceeds the level
        let wider = choose_delta2(&p, d1, band.near_zero - 1e-12, 2000, 1e-3, 50, 1, 2);
        assert!(wider.delta2 < band.delta2 || wider.fallback);
    }
}

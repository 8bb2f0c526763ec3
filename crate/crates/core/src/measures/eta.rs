use std::collections::HashMap;

use rand::{Rng, RngCore};

use super::distribution::{DiscreteDistribution, Lattice};
use super::weight::WeightFunction;
use super::MeasureError;
use crate::scalar::Scalar;

/// Cap on upward excursions in a single η step and on lattice growth.
pub const ITERATION_CAP: usize = 1_000_000;

/// Default truncation tolerance for all lattice computations.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// One-step law of η from state `k`:
/// `P(η' = k+g-1) = prod_{j<g} p_up(k+j) * p_down(k+g)`.
pub fn eta_kernel_row<T: Scalar>(
    w: &WeightFunction<T>,
    k: i64,
    tail_tol: T,
) -> Result<DiscreteDistribution<T>, MeasureError> {
    check_tol(tail_tol)?;
    let mut masses = Vec::new();
    let mut climb = T::one();
    let mut g = 0i64;
    loop {
        let (up, down) = w.xi_step_probs(k + g);
        masses.push(climb * down);
        climb = climb * up;
        g += 1;
        if climb < tail_tol {
            break;
        }
        if g as usize >= ITERATION_CAP {
            return Err(MeasureError::TruncationOverflow {
                what: "eta kernel row",
            });
        }
    }
    DiscreteDistribution::from_masses(Lattice::Integer, k - 1, masses)
}

/// Law of `η(n)` given `η(0) = 0`, by iterating kernel rows. Edge mass below
/// `tail_tol` is trimmed after every step.
pub fn eta_nstep_dist<T: Scalar>(
    w: &WeightFunction<T>,
    n: usize,
    tail_tol: T,
) -> Result<DiscreteDistribution<T>, MeasureError> {
    check_tol(tail_tol)?;
    let mut rows = HashMap::new();
    let mut d = DiscreteDistribution::point_mass(Lattice::Integer, 0);
    for _ in 0..n {
        d = push_forward(w, &d, tail_tol, &mut rows)?.trimmed(tail_tol);
    }
    Ok(d)
}

fn push_forward<T: Scalar>(
    w: &WeightFunction<T>,
    d: &DiscreteDistribution<T>,
    tail_tol: T,
    rows: &mut HashMap<i64, DiscreteDistribution<T>>,
) -> Result<DiscreteDistribution<T>, MeasureError> {
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for (k, _, _) in d.iter() {
        if let std::collections::hash_map::Entry::Vacant(e) = rows.entry(k) {
            e.insert(eta_kernel_row(w, k, tail_tol)?);
        }
        let r = &rows[&k];
        lo = lo.min(r.min_index());
        hi = hi.max(r.max_index());
    }
    let mut out = vec![T::zero(); (hi - lo + 1) as usize];
    for (k, _, p) in d.iter() {
        for (j, _, q) in rows[&k].iter() {
            let slot = &mut out[(j - lo) as usize];
            *slot = *slot + p * q;
        }
    }
    DiscreteDistribution::from_masses(Lattice::Integer, lo, out)
}

/// Invariant law of η on `Z`:
/// `rho_(i) ∝ prod_{j=1}^{m} w(-j)/w(j)` with `m = i` for `i >= 0`, `m = -1-i` otherwise.
///
/// The products are accumulated in log space. The two halves are filled from
/// the same half-table so the reflection `rho_(i) = rho_(-1-i)` is exact.
pub fn rho_minus<T: Scalar>(
    w: &WeightFunction<T>,
    tail_tol: T,
) -> Result<DiscreteDistribution<T>, MeasureError> {
    check_tol(tail_tol)?;
    let log_tol = tail_tol.ln();
    let mut logs = vec![T::zero()];
    let mut acc = T::zero();
    let mut m = 0i64;
    while acc >= log_tol {
        m += 1;
        acc = acc + w.eval(-m).ln() - w.eval(m).ln();
        logs.push(acc);
        if m as usize >= ITERATION_CAP {
            return Err(MeasureError::TruncationOverflow {
                what: "rho_minus support",
            });
        }
    }
    let half: Vec<T> = logs.iter().map(|l| l.exp()).collect();
    let mut masses: Vec<T> = half.iter().rev().copied().collect();
    masses.extend_from_slice(&half);
    DiscreteDistribution::from_masses(Lattice::Integer, -(half.len() as i64), masses)
}

/// `rho_0(z) = rho_(z - 1/2)` on the half-integer lattice.
pub fn rho_zero<T: Scalar>(
    w: &WeightFunction<T>,
    tail_tol: T,
) -> Result<DiscreteDistribution<T>, MeasureError> {
    rho_minus(w, tail_tol)?.shift_half()
}

/// `||rho K - rho||_1` with kernel rows truncated at `tail_tol`.
pub fn stationarity_residual<T: Scalar>(
    w: &WeightFunction<T>,
    rho: &DiscreteDistribution<T>,
    tail_tol: T,
) -> Result<T, MeasureError> {
    let pushed = push_forward(w, rho, tail_tol, &mut HashMap::new())?;
    pushed.l1_distance(rho)
}

fn check_tol<T: Scalar>(tol: T) -> Result<(), MeasureError> {
    if tol > T::zero() && tol < T::one() {
        Ok(())
    } else {
        Err(MeasureError::BadTolerance { tol: tol.as_f64() })
    }
}

/// Samples `η(n+1)` given `η(n) = k` by running the difference chain up
/// until its first down step.
pub fn eta_step<T: Scalar, R: Rng + ?Sized>(
    w: &WeightFunction<T>,
    k: i64,
    rng: &mut R,
) -> Result<i64, MeasureError> {
    let mut m = k;
    for _ in 0..ITERATION_CAP {
        if rng.random::<f64>() < w.p_up(m).as_f64() {
            m += 1;
        } else {
            return Ok(m - 1);
        }
    }
    Err(MeasureError::NonTermination { start: k })
}

fn to_threshold(c: f64) -> u64 {
    if c >= 1.0 {
        u64::MAX
    } else {
        (c * 18_446_744_073_709_551_616.0) as u64
    }
}

fn cdf_thresholds(probs: impl Iterator<Item = f64>) -> Vec<u64> {
    let mut acc = 0.0;
    let mut out: Vec<u64> = probs
        .map(|p| {
            acc += p;
            to_threshold(acc)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = u64::MAX;
    }
    out
}

/// Fast sampler for the η chain of a fixed weight.
///
/// Single steps use cumulative tables for `|k| <= table_radius` and fall back to
/// explicit stepping outside, or when the uniform lands beyond the tabulated
/// part of a row. Long runs use the dyadic powers `K^(2^j)` of the kernel
/// restricted to `[-state_radius, state_radius]`.
#[derive(Debug, Clone)]
pub struct EtaSampler {
    weight: WeightFunction<f64>,
    table_radius: i64,
    /// Per start state: thresholds for `G = 0, 1, ...`; `u` past the last
    /// entry means `G >= len`.
    step_rows: Vec<Vec<u64>>,
    state_radius: i64,
    /// `powers[j][a]`: thresholds of `K^(2^j)(a, .)` over the state window.
    powers: Vec<Vec<Vec<u64>>>,
}

impl EtaSampler {
    pub const TABLE_RADIUS: i64 = 64;
    const POWER_LEVELS: usize = 48;
    const MAX_STATE_RADIUS: i64 = 200;

    pub fn new<T: Scalar>(w: &WeightFunction<T>) -> Result<Self, MeasureError> {
        let weight = w.cast::<f64>();
        let table_radius = Self::TABLE_RADIUS;
        let step_rows = (-table_radius..=table_radius)
            .map(|k| {
                let mut probs = Vec::new();
                let mut climb = 1.0;
                let mut g = 0i64;
                while climb > 1e-18 && g < 4096 {
                    let (up, down) = weight.xi_step_probs(k + g);
                    probs.push(climb * down);
                    climb *= up;
                    g += 1;
                }
                let mut acc = 0.0;
                probs
                    .into_iter()
                    .map(|p| {
                        acc += p;
                        to_threshold(acc)
                    })
                    .collect()
            })
            .collect();

        let rho = rho_minus(&weight, 1e-15)?;
        let state_radius = (rho.max_index() + 8).min(Self::MAX_STATE_RADIUS);
        let width = (2 * state_radius + 1) as usize;
        let mut matrix = vec![vec![0.0f64; width]; width];
        for (a, row) in matrix.iter_mut().enumerate() {
            let k = a as i64 - state_radius;
            let law = eta_kernel_row(&weight, k, 1e-17)?;
            for (j, _, p) in law.iter() {
                if (-state_radius..=state_radius).contains(&j) {
                    row[(j + state_radius) as usize] += p;
                }
            }
            normalize(row);
        }
        let mut powers = Vec::with_capacity(Self::POWER_LEVELS);
        for level in 0..Self::POWER_LEVELS {
            if level > 0 {
                matrix = square(&matrix);
            }
            powers.push(
                matrix
                    .iter()
                    .map(|r| cdf_thresholds(r.iter().copied()))
                    .collect(),
            );
        }
        Ok(Self {
            weight,
            table_radius,
            step_rows,
            state_radius,
            powers,
        })
    }

    pub fn weight(&self) -> &WeightFunction<f64> {
        &self.weight
    }

    /// Half-width of the window on which multi-step jumps are tabulated.
    pub fn state_radius(&self) -> i64 {
        self.state_radius
    }

    /// One step of η from `k`.
    pub fn step<R: RngCore + ?Sized>(&self, k: i64, rng: &mut R) -> Result<i64, MeasureError> {
        if k.abs() <= self.table_radius {
            let row = &self.step_rows[(k + self.table_radius) as usize];
            let u = rng.next_u64();
            if let Some(g) = row.iter().position(|&t| u < t) {
                return Ok(k + g as i64 - 1);
            }
            return self.climb_from(k, k + row.len() as i64, rng);
        }
        self.climb_from(k, k, rng)
    }

    fn climb_from<R: RngCore + ?Sized>(
        &self,
        start: i64,
        mut m: i64,
        rng: &mut R,
    ) -> Result<i64, MeasureError> {
        for _ in 0..ITERATION_CAP {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u < self.weight.p_up(m) {
                m += 1;
            } else {
                return Ok(m - 1);
            }
        }
        Err(MeasureError::NonTermination { start })
    }

    /// `η(steps)` for a chain started at `start`, one step at a time.
    pub fn run_stepped<R: RngCore + ?Sized>(
        &self,
        start: i64,
        steps: u64,
        rng: &mut R,
    ) -> Result<i64, MeasureError> {
        let mut k = start;
        for _ in 0..steps {
            k = self.step(k, rng)?;
        }
        Ok(k)
    }

    /// `η(steps)` for a chain started at `start`, using the dyadic kernel
    /// powers once the chain is inside the state window.
    pub fn advance<R: RngCore + ?Sized>(
        &self,
        start: i64,
        steps: u64,
        rng: &mut R,
    ) -> Result<i64, MeasureError> {
        let mut k = start;
        let mut left = steps;
        while left > 0 && k.abs() > self.state_radius {
            k = self.step(k, rng)?;
            left -= 1;
        }
        let mut level = 0;
        while left > 0 {
            if left & 1 == 1 {
                let row = &self.powers[level.min(Self::POWER_LEVELS - 1)]
                    [(k + self.state_radius) as usize];
                let u = rng.next_u64();
                let j = row.partition_point(|&t| t <= u).min(row.len() - 1);
                k = j as i64 - self.state_radius;
            }
            left >>= 1;
            level += 1;
        }
        Ok(k)
    }
}

fn normalize(row: &mut [f64]) {
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
}

fn square(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut out = vec![vec![0.0; n]; n];
    for (i, row) in m.iter().enumerate() {
        let target = &mut out[i];
        for (k, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (t, &q) in target.iter_mut().zip(&m[k]) {
                *t += p * q;
            }
        }
        normalize(target);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn expw() -> WeightFunction<f64> {
        WeightFunction::exponential(1.0, 10).unwrap()
    }

    #[test]
    fn kernel_row_at_zero() {
        let row = eta_kernel_row(&expw(), 0, 1e-12).unwrap();
        assert_relative_eq!(row.prob(-1), 0.5, epsilon = 1e-12);
        let e = std::f64::consts::E;
        assert_relative_eq!(row.prob(0), 0.5 * e / (e + 1.0 / e), epsilon = 1e-12);
        assert_relative_eq!(row.prob(0), 0.44039853898894116, epsilon = 1e-12);
        let total: f64 = row.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_minus_oracle_values() {
        let rho = rho_minus(&expw(), 1e-12).unwrap();
        let direct: f64 = 2.0 * (0..20).map(|i| (-(i * (i + 1)) as f64).exp()).sum::<f64>();
        assert_relative_eq!(direct, 2.275640363, epsilon = 1e-8);
        assert_relative_eq!(rho.prob(0), 1.0 / direct, epsilon = 1e-12);
        assert_relative_eq!(rho.mean(), -0.5, epsilon = 1e-12);
        for i in 0..rho.max_index() {
            assert_eq!(rho.prob(i), rho.prob(-1 - i));
        }
        let zero = rho_zero(&expw(), 1e-12).unwrap();
        assert!(zero.mean().abs() < 1e-12);
        assert_relative_eq!(zero.variance(), 0.5010210804, epsilon = 1e-9);
    }

    #[test]
    fn stationarity_holds() {
        for w in [
            expw(),
            WeightFunction::exponential(0.5, 12).unwrap(),
            WeightFunction::bounded(1.0, 3.0, 4).unwrap(),
        ] {
            let rho = rho_minus(&w, 1e-12).unwrap();
            assert!(stationarity_residual(&w, &rho, 1e-14).unwrap() < 1e-8);
        }
    }

    #[test]
    fn nstep_tv_decreases() {
        let w = expw();
        let rho = rho_minus(&w, 1e-12).unwrap();
        assert_eq!(eta_nstep_dist(&w, 0, 1e-12).unwrap().probs(), &[1.0]);
        let tvs: Vec<f64> = [1, 2, 4, 8, 16]
            .iter()
            .map(|&n| {
                eta_nstep_dist(&w, n, 1e-12)
                    .unwrap()
                    .tv_distance(&rho)
                    .unwrap()
            })
            .collect();
        for pair in tvs.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-10, "{tvs:?}");
        }
        assert!(tvs[4] < tvs[0]);
    }

    #[test]
    fn sampler_matches_kernel() {
        let w = expw();
        let s = EtaSampler::new(&w).unwrap();
        let mut rng = crate::rng::seeded(11);
        let n = 200_000;
        let mut hits_m1 = 0;
        let mut hits_0 = 0;
        for _ in 0..n {
            match s.step(0, &mut rng).unwrap() {
                -1 => hits_m1 += 1,
                0 => hits_0 += 1,
                _ => {}
            }
        }
        assert!((hits_m1 as f64 / n as f64 - 0.5).abs() < 0.005);
        assert!((hits_0 as f64 / n as f64 - 0.4404).abs() < 0.005);

        // Dyadic jumps against the exact n-step law.
        let law = eta_nstep_dist(&w, 5, 1e-14).unwrap();
        let mut counts = HashMap::new();
        for _ in 0..n {
            *counts
                .entry(s.advance(0, 5, &mut rng).unwrap())
                .or_insert(0usize) += 1;
        }
        for (k, _, p) in law.iter() {
            let f = *counts.get(&k).unwrap_or(&0) as f64 / n as f64;
            assert!(
                (f - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-4,
                "k={k}"
            );
        }
    }

    #[test]
    fn explicit_step_terminates() {
        let w = expw();
        let mut rng = crate::rng::seeded(3);
        for k in [-200, -3, 0, 5, 300] {
            let v = eta_step(&w, k, &mut rng).unwrap();
            assert!(v >= k - 1);
        }
    }
}

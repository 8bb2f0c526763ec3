use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MeasureError;
use crate::scalar::{normalization_tolerance, Scalar};

/// Lattice a distribution lives on: `Z` or `1/2 + Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lattice {
    Integer,
    HalfInteger,
}

impl Lattice {
    pub fn offset(self) -> f64 {
        match self {
            Lattice::Integer => 0.0,
            Lattice::HalfInteger => 0.5,
        }
    }
}

/// Finitely supported probability mass function on a lattice. Entry `j` of
/// `probs` is the mass of the point `min_index + j + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<T> {
    lattice: Lattice,
    min_index: i64,
    probs: Vec<T>,
}

impl<T: Scalar> DiscreteDistribution<T> {
    /// Checks non-negativity and unit mass.
    pub fn new(lattice: Lattice, min_index: i64, probs: Vec<T>) -> Result<Self, MeasureError> {
        if probs.is_empty() {
            return Err(MeasureError::EmptySupport);
        }
        if probs.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
            return Err(MeasureError::NegativeMass);
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > normalization_tolerance::<T>() {
            return Err(MeasureError::NotNormalized {
                total: total.as_f64(),
            });
        }
        Ok(Self {
            lattice,
            min_index,
            probs,
        })
    }

    /// Normalizes non-negative masses.
    pub fn from_masses(
        lattice: Lattice,
        min_index: i64,
        masses: Vec<T>,
    ) -> Result<Self, MeasureError> {
        let total: T = masses.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(MeasureError::EmptySupport);
        }
        Self::new(
            lattice,
            min_index,
            masses.into_iter().map(|m| m / total).collect(),
        )
    }

    pub fn point_mass(lattice: Lattice, index: i64) -> Self {
        Self {
            lattice,
            min_index: index,
            probs: vec![T::one()],
        }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn min_index(&self) -> i64 {
        self.min_index
    }

    pub fn max_index(&self) -> i64 {
        self.min_index + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// Mass at lattice index `i` (point `i + offset`).
    pub fn prob(&self, i: i64) -> T {
        let j = i - self.min_index;
        if j < 0 || j >= self.probs.len() as i64 {
            T::zero()
        } else {
            self.probs[j as usize]
        }
    }

    /// Location of lattice index `i`.
    pub fn point(&self, i: i64) -> T {
        T::of(i as f64 + self.lattice.offset())
    }

    /// `(index, point, mass)` triples over the stored support.
    pub fn iter(&self) -> impl Iterator<Item = (i64, T, T)> + '_ {
        self.probs.iter().enumerate().map(move |(j, &p)| {
            let i = self.min_index + j as i64;
            (i, self.point(i), p)
        })
    }

    pub fn mean(&self) -> T {
        self.iter().map(|(_, z, p)| z * p).sum()
    }

    pub fn variance(&self) -> T {
        dist_variance(self)
    }

    /// Mass on the two extreme points of the stored support.
    pub fn boundary_mass(&self) -> T {
        let n = self.probs.len();
        if n == 1 {
            self.probs[0]
        } else {
            self.probs[0] + self.probs[n - 1]
        }
    }

    /// Shift by `+1/2`: integer lattice to half-integer lattice.
    pub fn shift_half(&self) -> Result<Self, MeasureError> {
        match self.lattice {
            Lattice::Integer => Ok(Self {
                lattice: Lattice::HalfInteger,
                min_index: self.min_index,
                probs: self.probs.clone(),
            }),
            Lattice::HalfInteger => Err(MeasureError::LatticeMismatch),
        }
    }

    /// `sum_i |p(i) - q(i)|`.
    pub fn l1_distance(&self, other: &Self) -> Result<T, MeasureError> {
        if self.lattice != other.lattice {
            return Err(MeasureError::LatticeMismatch);
        }
        let lo = self.min_index.min(other.min_index);
        let hi = self.max_index().max(other.max_index());
        Ok((lo..=hi)
            .map(|i| (self.prob(i) - other.prob(i)).abs())
            .sum())
    }

    /// Total variation distance, `l1 / 2`.
    pub fn tv_distance(&self, other: &Self) -> Result<T, MeasureError> {
        Ok(self.l1_distance(other)? / T::of(2.0))
    }

    /// Drops boundary points while the removed mass stays below `tol`, then
    /// renormalizes.
    pub fn trimmed(&self, tol: T) -> Self {
        let mut lo = 0usize;
        let mut hi = self.probs.len();
        let mut removed = T::zero();
        while hi - lo > 1 {
            let (cand, at_lo) = if self.probs[lo] <= self.probs[hi - 1] {
                (self.probs[lo], true)
            } else {
                (self.probs[hi - 1], false)
            };
            if removed + cand >= tol {
                break;
            }
            removed = removed + cand;
            if at_lo {
                lo += 1;
            } else {
                hi -= 1;
            }
        }
        let kept = &self.probs[lo..hi];
        let total: T = kept.iter().copied().sum();
        Self {
            lattice: self.lattice,
            min_index: self.min_index + lo as i64,
            probs: kept.iter().map(|&p| p / total).collect(),
        }
    }

    /// CSV with header `index,probability`; `index` is the lattice point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,probability\n");
        for (_, z, p) in self.iter() {
            let _ = writeln!(out, "{},{:e}", z.as_f64(), p.as_f64());
        }
        out
    }

    /// Inverse-CDF sampler over lattice indices.
    pub fn sampler(&self) -> DiscreteSampler {
        let mut acc = 0.0;
        let cdf = self
            .probs
            .iter()
            .map(|p| {
                acc += p.as_f64();
                acc
            })
            .collect();
        DiscreteSampler {
            min_index: self.min_index,
            cdf,
        }
    }
}

/// `sum p(z) (z - mean)^2`.
pub fn dist_variance<T: Scalar>(d: &DiscreteDistribution<T>) -> T {
    let m = d.mean();
    d.iter().map(|(_, z, p)| p * (z - m) * (z - m)).sum()
}

/// Draws lattice indices from a fixed distribution.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    min_index: i64,
    cdf: Vec<f64>,
}

impl DiscreteSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        let j = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        self.min_index + j as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn variance_of_simple_laws() {
        let pm = DiscreteDistribution::<f64>::point_mass(Lattice::Integer, 3);
        assert_eq!(dist_variance(&pm), 0.0);
        let pm = DiscreteDistribution::new(Lattice::Integer, -1, vec![0.5, 0.0, 0.5]).unwrap();
        assert_relative_eq!(dist_variance(&pm), 1.0);
        let half = pm.shift_half().unwrap();
        assert_relative_eq!(half.mean(), 0.5);
        assert_relative_eq!(dist_variance(&half), 1.0);
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(DiscreteDistribution::new(Lattice::Integer, 0, vec![0.5, 0.4]).is_err());
        assert!(DiscreteDistribution::new(Lattice::Integer, 0, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn tv_and_trim() {
        let a = DiscreteDistribution::new(Lattice::Integer, 0, vec![0.5, 0.5]).unwrap();
        let b = DiscreteDistribution::new(Lattice::Integer, 1, vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(a.tv_distance(&b).unwrap(), 0.5);
        let c =
            DiscreteDistribution::new(Lattice::Integer, -2, vec![1e-14, 0.5, 0.5 - 2e-14, 1e-14])
                .unwrap();
        let t = c.trimmed(1e-12);
        assert_eq!(t.min_index(), -1);
        assert_eq!(t.probs().len(), 2);
    }

    #[test]
    fn sampler_hits_support() {
        let d = DiscreteDistribution::new(Lattice::Integer, -1, vec![0.25, 0.5, 0.25]).unwrap();
        let s = d.sampler();
        let mut rng = crate::rng::seeded(1);
        let mut counts = [0usize; 3];
        for _ in 0..40_000 {
            counts[(s.sample(&mut rng) + 1) as usize] += 1;
        }
        assert!((counts[1] as f64 / 40_000.0 - 0.5).abs() < 0.02);
    }
}

//! Direct simulation of the walk and the local-time profile it leaves at the
//! stopping time.

mod profile;
mod simulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::MeasureError;

pub use profile::{hitting_indices, LocalTimeProfile, ProfileMetadata};
pub use simulate::{simulate_to_t, simulate_to_t_with_budget};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("invalid walk parameters: {0}")]
    InvalidParams(String),
    #[error("walk did not stop within {budget} steps")]
    StepBudgetExceeded { budget: u64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Which directed edge count stops the walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

impl Sign {
    pub fn as_i64(self) -> i64 {
        match self {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "-" | "minus" | "m" => Ok(Sign::Minus),
            "+" | "plus" | "p" => Ok(Sign::Plus),
            other => Err(format!("unknown sign `{other}`, expected + or -")),
        }
    }
}

/// Scale `N`, target site scale `x`, threshold scale `theta` and stopping edge
/// direction `iota`. The walk stops the first time `ell^iota(floor(N x))`
/// reaches `floor(N theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    pub n: u64,
    pub x: f64,
    pub theta: f64,
    pub iota: Sign,
}

impl WalkParams {
    pub fn new(n: u64, x: f64, theta: f64, iota: Sign) -> Result<Self, WalkError> {
        let p = Self { n, x, theta, iota };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        if self.n == 0 {
            return Err(WalkError::InvalidParams("N must be at least 1".into()));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() || !self.x.is_finite() {
            return Err(WalkError::InvalidParams(
                "theta must be positive and x finite".into(),
            ));
        }
        if self.threshold() == 0 {
            return Err(WalkError::InvalidParams(format!(
                "floor(N theta) = 0 for N={}, theta={}",
                self.n, self.theta
            )));
        }
        Ok(())
    }

    /// `floor(N theta)`.
    pub fn threshold(&self) -> u64 {
        (self.n as f64 * self.theta).floor() as u64
    }

    /// `floor(N x)`.
    pub fn site(&self) -> i64 {
        (self.n as f64 * self.x).floor() as i64
    }

    /// Position of the walk at the stopping time: one step past the site in
    /// direction `iota`.
    pub fn end_site(&self) -> i64 {
        self.site() + self.iota.as_i64()
    }

    /// Starting site of the site-indexed recursions.
    pub fn chi(&self) -> i64 {
        match self.iota {
            Sign::Minus => self.site(),
            Sign::Plus => self.site() + 1,
        }
    }

    /// `|x| + 2 theta`.
    pub fn reach(&self) -> f64 {
        self.x.abs() + 2.0 * self.theta
    }

    /// `100 N^2 (|x| + 2 theta)^2`, at least `10^4`.
    pub fn default_step_budget(&self) -> u64 {
        let n = self.n as f64;
        (100.0 * n * n * self.reach().powi(2)).max(1e4) as u64
    }
}

/// Deterministic limit of `ell(floor(N y)) / N`: `((|x| - |y|)/2 + theta)_+`.
pub fn triangle_limit(x: f64, theta: f64, y: f64) -> f64 {
    ((x.abs() - y.abs()) / 2.0 + theta).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_values() {
        assert_eq!(triangle_limit(1.0, 0.5, 2.0), 0.0);
        assert_eq!(triangle_limit(1.0, 0.5, -2.0), 0.0);
        assert_eq!(triangle_limit(1.0, 0.5, 0.0), 1.0);
        assert_eq!(triangle_limit(1.0, 0.5, 1.0), 0.5);
        assert_eq!(triangle_limit(1.0, 0.5, 5.0), 0.0);
    }

    #[test]
    fn chi_convention() {
        let p = WalkParams::new(10, 1.0, 0.5, Sign::Minus).unwrap();
        assert_eq!((p.site(), p.chi(), p.end_site()), (10, 10, 9));
        let p = WalkParams::new(10, 1.0, 0.5, Sign::Plus).unwrap();
        assert_eq!((p.chi(), p.end_site()), (11, 11));
        assert!(WalkParams::new(10, 1.0, 0.01, Sign::Plus).is_err());
        assert!(WalkParams::new(0, 1.0, 0.5, Sign::Plus).is_err());
    }
}

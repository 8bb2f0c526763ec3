//! Monte Carlo laboratory for the self-repelling random walk with directed edges.

// `!(x > 0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cadlag;
pub mod fields;
pub mod harness;
pub mod measures;
pub mod ray_knight;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod walk;

pub use rng::{replicate_rng, RandomSource};
pub use scalar::Scalar;

pub type Weight = measures::WeightFunction<f64>;
pub type Distribution = measures::DiscreteDistribution<f64>;
pub type Step = cadlag::StepFunction<f64>;
pub type Path = cadlag::Polyline<f64>;

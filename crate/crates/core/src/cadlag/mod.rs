//! Càdlàg step and piecewise linear functions, completed graphs and the
//! uniform, M1 and J1 distances.

mod band;
mod j1;
mod m1;
mod param;
mod polyline;
mod step;

use thiserror::Error;

pub use band::{band_entry, BandSpec};
pub use j1::{j1_dist_interval, j1_dist_interval_with, J1Bracket, J1Search, J1_EXACT_LIMIT};
pub use m1::{
    frechet_decision, frechet_distance, m1_dist_interval, m1_dist_on, m1_dist_whole,
    m1_whole_upper, M1_TOL,
};
pub use param::{canonical_param, paired_max_gap, Parametrization};
pub use polyline::{
    boundary_sensitive, completed_graph, integrate, uniform_dist, AsPath, Polyline,
};
pub use step::StepFunction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("interval [{a}, {b}] is empty or not finite")]
    DegenerateInterval { a: f64, b: f64 },
    #[error("{count} jumps exceed the exhaustive search limit {limit}")]
    TooManyJumps { count: usize, limit: usize },
    #[error("positions must be strictly increasing (non-decreasing for paths)")]
    NotIncreasing,
    #[error("lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("path has no vertices")]
    Empty,
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("grid of {grid} cells is coarser than {needed} breakpoints")]
    GridTooCoarse { grid: usize, needed: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Parses a two-column CSV with the given header.
fn parse_pairs(text: &str, first: &str, second: &str) -> Result<Vec<(f64, f64)>, MetricError> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(MetricError::Parse {
                line: n + 1,
                msg: "expected two columns".into(),
            });
        };
        if n == 0 && a == first && b == second {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| MetricError::Parse {
                line: n + 1,
                msg: format!("`{s}`: {e}"),
            })
        };
        rows.push((parse(a)?, parse(b)?));
    }
    Ok(rows)
}

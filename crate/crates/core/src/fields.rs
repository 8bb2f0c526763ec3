//! Rescaled fluctuation fields of the local-time profile and samples of their
//! Brownian limit.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cadlag::{MetricError, Polyline, StepFunction};
use crate::walk::{triangle_limit, LocalTimeProfile, Sign, WalkParams};

pub use crate::cadlag::integrate;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("profile was sampled with {profile:?}, fields requested for {requested:?}")]
    InconsistentParams {
        profile: WalkParams,
        requested: WalkParams,
    },
    #[error("zeta covers [{lo}, {hi}] but sites [{need_lo}, {need_hi}] are needed")]
    WindowTooSmall {
        lo: i64,
        hi: i64,
        need_lo: i64,
        need_hi: i64,
    },
    #[error("var_rho must be positive and finite, got {0}")]
    BadVariance(f64),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Walk parameters plus the diffusion coefficient of the limit field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationParams {
    #[serde(flatten)]
    pub walk: WalkParams,
    pub var_rho: f64,
}

impl FluctuationParams {
    pub fn new(walk: WalkParams, var_rho: f64) -> Result<Self, FieldError> {
        if !(var_rho > 0.0 && var_rho.is_finite()) {
            return Err(FieldError::BadVariance(var_rho));
        }
        Ok(Self { walk, var_rho })
    }

    /// `|x| + 2 theta`.
    pub fn reach(&self) -> f64 {
        self.walk.reach()
    }

    fn scale(&self) -> f64 {
        self.walk.n as f64
    }

    /// Lattice cells `k` (covering `[k/N, (k+1)/N)`) that meet `[-c, c)`.
    fn cells(&self) -> (i64, i64) {
        let (n, c) = (self.scale(), self.reach());
        ((-c * n).floor() as i64, (c * n).ceil() as i64 - 1)
    }
}

/// Largest deviation of [`y_pm`], which samples the triangle at cell left
/// edges, from [`y_pm_exact`]: the triangle has slope 1/2, so `1 / (2 sqrt N)`.
pub fn left_edge_error(n: u64) -> f64 {
    0.5 / (n as f64).sqrt()
}

fn check_profile(profile: &LocalTimeProfile, p: &FluctuationParams) -> Result<(), FieldError> {
    if profile.params != p.walk {
        return Err(FieldError::InconsistentParams {
            profile: profile.params,
            requested: p.walk,
        });
    }
    Ok(())
}

/// Sites where `Y_N^±` can be non-zero, with one spare cell on each side.
fn field_cells(profile: &LocalTimeProfile, p: &FluctuationParams) -> (i64, i64) {
    let (lo, hi) = p.cells();
    (profile.lo.min(lo) - 1, profile.hi.max(hi) + 1)
}

/// `Y_N^±(y) = (ell^±(floor(N y)) - N tri(y)) / sqrt N` as a step function.
pub fn y_pm(
    profile: &LocalTimeProfile,
    sign: Sign,
    p: &FluctuationParams,
) -> Result<StepFunction, FieldError> {
    check_profile(profile, p)?;
    let (n, c) = (p.scale(), p.reach());
    let (x, theta) = (p.walk.x, p.walk.theta);
    let root = n.sqrt();
    let (lo, hi) = field_cells(profile, p);
    let mut breakpoints = Vec::with_capacity((hi - lo + 3) as usize);
    let mut values = Vec::with_capacity(breakpoints.capacity());
    for i in lo..=hi {
        let y = i as f64 / n;
        let ell = profile.ell_at(sign, i) as f64;
        breakpoints.push(y);
        values.push((ell - n * triangle_limit(x, theta, y)) / root);
        // The support edges of the triangle inside a cell.
        for edge in [-c, c] {
            if edge > y && edge < (i + 1) as f64 / n {
                breakpoints.push(edge);
                values.push((ell - n * triangle_limit(x, theta, edge)) / root);
            }
        }
    }
    Ok(StepFunction::new(breakpoints, values, 0.0)?.simplified())
}

/// `Y_N^±` exactly, linear in `y` inside each cell, as a path with jumps at
/// lattice points.
pub fn y_pm_exact(
    profile: &LocalTimeProfile,
    sign: Sign,
    p: &FluctuationParams,
) -> Result<Polyline, FieldError> {
    check_profile(profile, p)?;
    let (n, c) = (p.scale(), p.reach());
    let (x, theta) = (p.walk.x, p.walk.theta);
    let root = n.sqrt();
    let (lo, hi) = field_cells(profile, p);
    let value = |ell: f64, y: f64| (ell - n * triangle_limit(x, theta, y)) / root;
    let mut pts = Vec::with_capacity(3 * (hi - lo + 1) as usize);
    for i in lo..=hi {
        let (y0, y1) = (i as f64 / n, (i + 1) as f64 / n);
        let ell = profile.ell_at(sign, i) as f64;
        pts.push((y0, value(ell, y0)));
        for kink in [-c, 0.0, c] {
            if kink > y0 && kink < y1 {
                pts.push((kink, value(ell, kink)));
            }
        }
        pts.push((y1, value(ell, y1)));
    }
    Ok(Polyline::new(pts)?)
}

fn zeta_window(zeta: &[f64], zeta_lo: i64, need_lo: i64, need_hi: i64) -> Result<(), FieldError> {
    let hi = zeta_lo + zeta.len() as i64 - 1;
    if need_lo < zeta_lo || need_hi > hi {
        return Err(FieldError::WindowTooSmall {
            lo: zeta_lo,
            hi,
            need_lo,
            need_hi,
        });
    }
    Ok(())
}

/// Partial sums of `zeta` anchored at `chi`: for `k < chi` the sum over
/// `k+1..chi-1`, for `k >= chi` the sum over `chi..k-1`, scaled by `1/sqrt N`.
fn lattice_sums(zeta: &[f64], zeta_lo: i64, chi: i64, k_lo: i64, k_hi: i64, n: f64) -> Vec<f64> {
    let z = |i: i64| zeta[(i - zeta_lo) as usize];
    let root = n.sqrt();
    let mut out = vec![0.0; (k_hi - k_lo + 1) as usize];
    let mut acc = 0.0;
    for k in (k_lo..chi.min(k_hi + 1)).rev() {
        if k < chi - 1 {
            acc += z(k + 1);
        }
        out[(k - k_lo) as usize] = acc / root;
    }
    acc = 0.0;
    for k in chi.max(k_lo)..=k_hi {
        if k > chi {
            acc += z(k - 1);
        }
        out[(k - k_lo) as usize] = acc / root;
    }
    out
}

/// `Y_N` built from the coupled `zeta` field: a step function with
/// breakpoints on the lattice, zero outside `[-c, c)`.
pub fn y_from_zeta(
    zeta: &[f64],
    zeta_lo: i64,
    p: &FluctuationParams,
) -> Result<StepFunction, FieldError> {
    let (n, c) = (p.scale(), p.reach());
    let chi = p.walk.chi();
    let (k_lo, k_hi) = p.cells();
    zeta_window(zeta, zeta_lo, (k_lo + 1).min(chi), (k_hi - 1).max(chi))?;
    let sums = lattice_sums(zeta, zeta_lo, chi, k_lo, k_hi, n);
    let mut breakpoints = vec![-c];
    let mut values = vec![sums[0]];
    for k in k_lo + 1..=k_hi {
        let y = k as f64 / n;
        if y > -c && y < c {
            breakpoints.push(y);
            values.push(sums[(k - k_lo) as usize]);
        }
    }
    breakpoints.push(c);
    values.push(0.0);
    Ok(StepFunction::new(breakpoints, values, 0.0)?)
}

/// `Y_N'`: the lattice partial sums linearly interpolated, on the lattice
/// points from `floor(-c N)` to `ceil(c N)`.
pub fn y_prime(zeta: &[f64], zeta_lo: i64, p: &FluctuationParams) -> Result<Polyline, FieldError> {
    let n = p.scale();
    let chi = p.walk.chi();
    let (k_lo, k_hi) = p.cells();
    let k_hi = k_hi + 1;
    zeta_window(zeta, zeta_lo, (k_lo + 1).min(chi), (k_hi - 1).max(chi))?;
    let sums = lattice_sums(zeta, zeta_lo, chi, k_lo, k_hi, n);
    let pts = (k_lo..=k_hi)
        .zip(sums)
        .map(|(k, v)| (k as f64 / n, v))
        .collect();
    Ok(Polyline::new(pts)?)
}

/// `Y_N'' = Y_N' 1_{[-c, c)}`.
pub fn y_double_prime(
    zeta: &[f64],
    zeta_lo: i64,
    p: &FluctuationParams,
) -> Result<Polyline, FieldError> {
    let c = p.reach();
    let prime = y_prime(zeta, zeta_lo, p)?;
    let mut pts = vec![(-c, 0.0), (-c, prime.eval(-c))];
    pts.extend(
        prime
            .vertices()
            .iter()
            .copied()
            .filter(|(u, _)| *u > -c && *u < c),
    );
    pts.push((c, prime.eval(c)));
    pts.push((c, 0.0));
    Ok(Polyline::new(pts)?)
}

/// One draw of the limit field on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFieldSample {
    pub grid: Vec<f64>,
    /// `B^x_y` without the indicator.
    pub raw: Vec<f64>,
    /// `B^x_y 1_{[-c, c)}(y)`.
    pub values: Vec<f64>,
    pub reach: f64,
}

impl LimitFieldSample {
    /// The field as a path: the Brownian values on `[-c, c]` interpolated,
    /// with jumps to zero at `±c` when they are grid points.
    pub fn to_polyline(&self) -> Result<Polyline, MetricError> {
        let c = self.reach;
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(self.grid.len() + 2);
        for (&y, &b) in self.grid.iter().zip(&self.raw) {
            if y < -c || y > c {
                continue;
            }
            if y == -c {
                pts.push((y, 0.0));
            }
            pts.push((y, b));
            if y == c {
                pts.push((y, 0.0));
            }
        }
        if pts.is_empty() {
            pts.push((0.0, 0.0));
        }
        Polyline::new(pts)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,value\n");
        for (y, v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(out, "{y},{v}");
        }
        out
    }
}

/// Two-sided Brownian motion with `B_x = 0` and `Var(B_y - B_z) = var_rho |y - z|`,
/// built from independent increments outward from `x`, times the indicator
/// of `[-c, c)`.
pub fn sample_limit_field<R: Rng + ?Sized>(
    p: &FluctuationParams,
    grid: &[f64],
    rng: &mut R,
) -> LimitFieldSample {
    let x = p.walk.x;
    let c = p.reach();
    let sd = |dy: f64| (p.var_rho * dy).sqrt();
    let split = grid.partition_point(|y| *y < x);
    let mut raw = vec![0.0; grid.len()];
    let mut prev = (x, 0.0);
    for k in split..grid.len() {
        let z: f64 = rng.sample(StandardNormal);
        prev = (grid[k], prev.1 + sd(grid[k] - prev.0) * z);
        raw[k] = prev.1;
    }
    prev = (x, 0.0);
    for k in (0..split).rev() {
        let z: f64 = rng.sample(StandardNormal);
        prev = (grid[k], prev.1 + sd(prev.0 - grid[k]) * z);
        raw[k] = prev.1;
    }
    let values = grid
        .iter()
        .zip(&raw)
        .map(|(y, b)| if *y >= -c && *y < c { *b } else { 0.0 })
        .collect();
    LimitFieldSample {
        grid: grid.to_vec(),
        raw,
        values,
        reach: c,
    }
}

/// Uniform grid of `[-c, c]` with spacing at most `h`, containing `x`.
pub fn limit_grid(p: &FluctuationParams, h: f64) -> Vec<f64> {
    let c = p.reach();
    let cells = ((2.0 * c) / h).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..=cells)
        .map(|k| -c + 2.0 * c * k as f64 / cells as f64)
        .collect();
    *grid.last_mut().unwrap() = c;
    let x = p.walk.x;
    let at = grid.partition_point(|y| *y < x);
    if grid.get(at) != Some(&x) {
        grid.insert(at, x);
    }
    grid
}

/// Path of a standard Brownian motion on `[0, y]` with `steps` increments.
pub fn brownian_path<R: Rng + ?Sized>(y: f64, steps: usize, rng: &mut R) -> Polyline {
    let h = y / steps as f64;
    let sd = h.sqrt();
    let mut b = 0.0;
    let mut pts = Vec::with_capacity(steps + 1);
    pts.push((0.0, 0.0));
    for k in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        b += sd * z;
        pts.push((k as f64 * h, b));
    }
    Polyline::from_vertices_unchecked(pts)
}

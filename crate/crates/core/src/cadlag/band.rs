use serde::{Deserialize, Serialize};

use super::{AsPath, MetricError};
use crate::scalar::Scalar;

/// Window `[center - delta2, center + delta2]` and band `[delta1, 2 delta1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec<T = f64> {
    pub delta1: T,
    pub delta2: T,
    pub center: T,
}

impl<T: Scalar> BandSpec<T> {
    pub fn new(delta1: T, delta2: T, center: T) -> Result<Self, MetricError> {
        if !(delta1 > T::zero() && delta2 > T::zero() && delta1.is_finite() && delta2.is_finite()) {
            return Err(MetricError::BadTolerance);
        }
        if !center.is_finite() {
            return Err(MetricError::NonFinite);
        }
        Ok(Self {
            delta1,
            delta2,
            center,
        })
    }

    pub fn window(&self) -> (T, T) {
        (self.center - self.delta2, self.center + self.delta2)
    }

    fn hits(&self, lo: T, hi: T) -> bool {
        lo <= self.delta1 * T::of(2.0) && hi >= self.delta1
    }
}

/// Whether `|f(y)|` or `|f(y-)|` lies in `[delta1, 2 delta1]` for some `y` in
/// the window. Points on vertical jump segments do not count.
pub fn band_entry<T: Scalar, F: AsPath<T> + ?Sized>(f: &F, band: &BandSpec<T>) -> bool {
    let f = f.as_path();
    let (lo, hi) = band.window();
    let single = |v: T| band.hits(v.abs(), v.abs());
    if single(f.left_limit(lo)) || single(f.eval(hi)) {
        return true;
    }
    let mut cuts = vec![lo];
    cuts.extend(f.nodes().into_iter().filter(|u| *u > lo && *u < hi));
    cuts.push(hi);
    cuts.windows(2).any(|w| {
        // Linear from f(w0) to f(w1-) with no node in between.
        let (x, y) = (f.eval(w[0]), f.left_limit(w[1]));
        let (m, big) = if x.signum() != y.signum() && x != T::zero() && y != T::zero() {
            (T::zero(), x.abs().max(y.abs()))
        } else {
            (x.abs().min(y.abs()), x.abs().max(y.abs()))
        };
        band.hits(m, big)
    })
}

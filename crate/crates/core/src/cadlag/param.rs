use super::{MetricError, Polyline, StepFunction};
use crate::scalar::Scalar;

/// Parametric representation `t -> (u(t), r(t))` of a completed graph, linear
/// between consecutive nodes, with `t` running over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parametrization<T = f64> {
    pub t: Vec<T>,
    pub points: Vec<(T, T)>,
}

impl<T: Scalar> Parametrization<T> {
    pub fn at(&self, s: T) -> (T, T) {
        let k = self.t.partition_point(|v| *v <= s);
        if k == 0 {
            return self.points[0];
        }
        if k == self.t.len() {
            return self.points[k - 1];
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let (p0, p1) = (self.points[k - 1], self.points[k]);
        let w = (s - t0) / (t1 - t0);
        (p0.0 + w * (p1.0 - p0.0), p0.1 + w * (p1.1 - p0.1))
    }

    /// The traversed graph.
    pub fn polyline(&self) -> Polyline<T> {
        Polyline::from_vertices_unchecked(self.points.clone())
    }
}

/// Representation on a uniform grid of `grid_n` cells: slot `2k` follows the
/// graph across cell `k` at constant speed along its arc, slot `2k + 1`
/// traverses the jump at the right edge of the cell.
pub fn canonical_param<T: Scalar>(
    f: &StepFunction<T>,
    a: T,
    b: T,
    grid_n: usize,
) -> Result<Parametrization<T>, MetricError> {
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(MetricError::DegenerateInterval {
            a: a.as_f64(),
            b: b.as_f64(),
        });
    }
    let needed = f
        .breakpoints()
        .iter()
        .filter(|s| **s > a && **s <= b)
        .count();
    if grid_n == 0 || grid_n < needed {
        return Err(MetricError::GridTooCoarse {
            grid: grid_n,
            needed,
        });
    }
    let n = T::of(grid_n as f64);
    let slot = T::one() / (T::of(2.0) * n);
    let edge = |k: usize| {
        if k == grid_n {
            b
        } else {
            a + (b - a) * T::of(k as f64) / n
        }
    };
    let mut t = vec![T::zero()];
    let mut points = vec![(a, f.eval(a))];
    for k in 0..grid_n {
        let (u0, u1) = (edge(k), edge(k + 1));
        let t0 = T::of((2 * k) as f64) * slot;
        // Graph of the open cell, then its right-edge jump.
        let mut leg = vec![(u0, f.eval(u0))];
        for &s in f.breakpoints() {
            if s > u0 && s < u1 {
                leg.push((s, f.left_limit(s)));
                leg.push((s, f.eval(s)));
            }
        }
        leg.push((u1, f.left_limit(u1)));
        let lengths: Vec<T> = leg
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).abs().max((w[1].1 - w[0].1).abs()))
            .collect();
        let total: T = lengths.iter().copied().sum();
        let mut acc = T::zero();
        for (p, len) in leg[1..].iter().zip(&lengths) {
            acc = acc + *len;
            t.push(t0 + slot * acc / total);
            points.push(*p);
        }
        t.push(t0 + T::of(2.0) * slot);
        points.push((u1, f.eval(u1)));
    }
    *t.last_mut().unwrap() = T::one();
    Ok(Parametrization { t, points })
}

/// `sup_t max(|u_1(t) - u_2(t)|, |r_1(t) - r_2(t)|)` for two representations;
/// an upper bound on the M1 distance of the traversed graphs.
pub fn paired_max_gap<T: Scalar>(p: &Parametrization<T>, q: &Parametrization<T>) -> T {
    let mut ts: Vec<T> = p.t.iter().chain(&q.t).copied().collect();
    ts.sort_by(|x, y| x.partial_cmp(y).expect("finite parameters"));
    ts.dedup();
    ts.into_iter()
        .map(|s| {
            let (x, y) = (p.at(s), q.at(s));
            (x.0 - y.0).abs().max((x.1 - y.1).abs())
        })
        .fold(T::zero(), T::max)
}

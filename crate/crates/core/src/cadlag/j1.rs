use serde::{Deserialize, Serialize};

use super::{MetricError, StepFunction};
use crate::scalar::Scalar;

/// Largest jump count per function for [`J1Search::Exact`].
pub const J1_EXACT_LIMIT: usize = 12;

/// How the monotone matchings of jumps are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum J1Search {
    /// Every predecessor pair; fails with `TooManyJumps` past [`J1_EXACT_LIMIT`].
    Exact,
    /// Predecessors restricted to the previous `w` jumps of each function.
    Beam(usize),
    /// `Exact` when both functions have few enough jumps, `Beam(4)` otherwise.
    Auto,
}

/// Certified bracket `lower <= d_J1 <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct J1Bracket<T = f64> {
    pub lower: T,
    pub upper: T,
}

fn interior_jumps<T: Scalar>(f: &StepFunction<T>, a: T, b: T) -> Vec<(T, T)> {
    f.jumps()
        .into_iter()
        .filter(|(s, _)| *s > a && *s < b)
        .collect()
}

fn jump_at<T: Scalar>(f: &StepFunction<T>, y: T) -> T {
    f.eval(y) - f.left_limit(y)
}

/// `sup |f(lambda(t)) - g(t)|` over `[t0, t1)` (`[t0, t1]` when `closed`) for
/// the affine `lambda` with `lambda(t0) = s0`, `lambda(t1) = s1`.
fn segment_cost<T: Scalar>(
    f: &StepFunction<T>,
    g: &StepFunction<T>,
    from: (T, T),
    to: (T, T),
    closed: bool,
) -> T {
    let ((s0, t0), (s1, t1)) = (from, to);
    let slope = (t1 - t0) / (s1 - s0);
    // (time in g's clock, is_f, position in own clock)
    let mut events: Vec<(T, bool, T)> = Vec::new();
    for &b in f.breakpoints() {
        if b > s0 && b < s1 {
            events.push((t0 + (b - s0) * slope, true, b));
        }
    }
    for &b in g.breakpoints() {
        if b > t0 && b < t1 {
            events.push((b, false, b));
        }
    }
    events.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite breakpoints"));
    let mut fv = f.eval(s0);
    let mut gv = g.eval(t0);
    let mut cost = (fv - gv).abs();
    let mut k = 0;
    while k < events.len() {
        let t = events[k].0;
        while k < events.len() && events[k].0 == t {
            let (_, is_f, pos) = events[k];
            if is_f {
                fv = f.eval(pos);
            } else {
                gv = g.eval(pos);
            }
            k += 1;
        }
        cost = cost.max((fv - gv).abs());
    }
    if closed {
        cost = cost.max((f.eval(s1) - g.eval(t1)).abs());
    }
    cost
}

/// Skorohod J1 distance of `f` and `g` restricted to `[a, b]`, bracketed.
pub fn j1_dist_interval<T: Scalar>(
    f: &StepFunction<T>,
    g: &StepFunction<T>,
    a: T,
    b: T,
) -> Result<J1Bracket<T>, MetricError> {
    j1_dist_interval_with(f, g, a, b, J1Search::Auto)
}

/// [`j1_dist_interval`] with an explicit search strategy.
///
/// The upper bound is the best time change that is piecewise linear through a
/// monotone set of matched jump pairs; unmatched jumps are left in place.
/// Since the cost of such a time change is the maximum of per-segment costs,
/// a dynamic program over matched pairs finds the best one.
pub fn j1_dist_interval_with<T: Scalar>(
    f: &StepFunction<T>,
    g: &StepFunction<T>,
    a: T,
    b: T,
    search: J1Search,
) -> Result<J1Bracket<T>, MetricError> {
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(MetricError::DegenerateInterval {
            a: a.as_f64(),
            b: b.as_f64(),
        });
    }
    let fj = interior_jumps(f, a, b);
    let gj = interior_jumps(g, a, b);
    let count = fj.len().max(gj.len());
    let window = match search {
        J1Search::Exact if count > J1_EXACT_LIMIT => {
            return Err(MetricError::TooManyJumps {
                count,
                limit: J1_EXACT_LIMIT,
            })
        }
        J1Search::Exact => usize::MAX,
        J1Search::Beam(w) => w.max(1),
        J1Search::Auto if count <= J1_EXACT_LIMIT => usize::MAX,
        J1Search::Auto => 4,
    };

    let (nf, ng) = (fj.len(), gj.len());
    let start = (a, a);
    let inf = T::infinity();
    // best[k][l]: cost of the best time change through the pair (fj[k], gj[l]).
    let mut best = vec![vec![inf; ng]; nf];
    for k in 0..nf {
        for l in 0..ng {
            let node = (fj[k].0, gj[l].0);
            let shift = (node.0 - node.1).abs();
            let mut v = segment_cost(f, g, start, node, false).max(shift);
            for kp in k.saturating_sub(window)..k {
                for lp in l.saturating_sub(window)..l {
                    if best[kp][lp] >= v {
                        continue;
                    }
                    let prev = (fj[kp].0, gj[lp].0);
                    v = v.min(
                        best[kp][lp]
                            .max(segment_cost(f, g, prev, node, false))
                            .max(shift),
                    );
                }
            }
            best[k][l] = v;
        }
    }
    let end = (b, b);
    let mut upper = segment_cost(f, g, start, end, true);
    for k in 0..nf {
        for l in 0..ng {
            if best[k][l] < upper {
                let node = (fj[k].0, gj[l].0);
                upper = upper.min(best[k][l].max(segment_cost(f, g, node, end, true)));
            }
        }
    }

    let lower = lower_bound(f, g, &fj, &gj, a, b).min(upper);
    Ok(J1Bracket { lower, upper })
}

/// Necessary conditions on any time change: endpoint values are fixed, and
/// each jump must either be matched by a jump of the other function within
/// the distance in time and within twice the distance in size, or be at most
/// twice the distance itself.
fn lower_bound<T: Scalar>(
    f: &StepFunction<T>,
    g: &StepFunction<T>,
    fj: &[(T, T)],
    gj: &[(T, T)],
    a: T,
    b: T,
) -> T {
    let two = T::of(2.0);
    let mut lo = (f.eval(a) - g.eval(a))
        .abs()
        .max((f.eval(b) - g.eval(b)).abs())
        .max((f.left_limit(b) - g.left_limit(b)).abs());
    lo = lo.max((jump_at(f, b) - jump_at(g, b)).abs() / two);
    for (mine, theirs) in [(fj, gj), (gj, fj)] {
        for &(s, size) in mine {
            let mut need = size.abs() / two;
            for &(t, other) in theirs {
                need = need.min((t - s).abs().max((size - other).abs() / two));
            }
            lo = lo.max(need);
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(jumps: &[(f64, f64)]) -> StepFunction<f64> {
        StepFunction::from_jumps(0.0, jumps).unwrap()
    }

    #[test]
    fn identical_and_shift() {
        let f = step(&[(0.5, 1.0), (1.2, -0.4)]);
        assert_eq!(
            j1_dist_interval(&f, &f, 0.0, 2.0).unwrap(),
            J1Bracket {
                lower: 0.0,
                upper: 0.0
            }
        );
        let br = j1_dist_interval(&step(&[(1.0, 1.0)]), &step(&[(1.3, 1.0)]), 0.0, 2.0).unwrap();
        assert!(
            (br.lower - 0.3).abs() < 1e-12 && (br.upper - 0.3).abs() < 1e-12,
            "{br:?}"
        );
    }

    #[test]
    fn split_jump_stays_far() {
        for h in [0.1, 0.01, 0.001] {
            let br = j1_dist_interval(
                &step(&[(1.0, 1.0)]),
                &step(&[(1.0, 0.5), (1.0 + h, 0.5)]),
                0.0,
                2.0,
            )
            .unwrap();
            assert!(br.lower >= 0.25 && br.lower <= br.upper, "{br:?}");
            assert!((br.upper - 0.5).abs() < 1e-12, "{br:?}");
        }
    }

    #[test]
    fn unmatched_jumps() {
        let br =
            j1_dist_interval(&step(&[(1.0, 0.2)]), &StepFunction::constant(0.0), 0.0, 2.0).unwrap();
        assert!(
            (br.lower - 0.2).abs() < 1e-12 && (br.upper - 0.2).abs() < 1e-12,
            "{br:?}"
        );
        let br = j1_dist_interval(
            &step(&[(1.0, 0.2), (1.5, -0.2)]),
            &StepFunction::constant(0.0),
            0.0,
            2.0,
        )
        .unwrap();
        assert!(
            (br.lower - 0.1).abs() < 1e-12 && (br.upper - 0.2).abs() < 1e-12,
            "{br:?}"
        );
    }

    #[test]
    fn exact_limit_and_beam() {
        let many: Vec<(f64, f64)> = (0..20).map(|i| (0.05 * (i + 1) as f64, 0.1)).collect();
        let f = step(&many);
        let g = step(&many.iter().map(|(s, h)| (s + 0.01, *h)).collect::<Vec<_>>());
        assert!(matches!(
            j1_dist_interval_with(&f, &g, 0.0, 2.0, J1Search::Exact),
            Err(MetricError::TooManyJumps { count: 20, .. })
        ));
        let br = j1_dist_interval(&f, &g, 0.0, 2.0).unwrap();
        assert!(
            (br.upper - 0.01).abs() < 1e-9 && br.lower <= br.upper,
            "{br:?}"
        );
    }
}

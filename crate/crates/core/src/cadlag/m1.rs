use super::polyline::{completed_graph, uniform_dist, AsPath, Polyline};
use super::MetricError;
use crate::scalar::Scalar;

/// Default tolerance of the distance search.
pub const M1_TOL: f64 = 1e-6;

type Interval<T> = Option<(T, T)>;

/// Parameters `t in [0, 1]` with `max(|p - q(t)|_inf) <= eps` along the
/// segment `q0 -> q1`.
fn free_interval<T: Scalar>(p: (T, T), q0: (T, T), q1: (T, T), eps: T) -> Interval<T> {
    let mut lo = T::zero();
    let mut hi = T::one();
    for (c, d) in [(p.0 - q0.0, q1.0 - q0.0), (p.1 - q0.1, q1.1 - q0.1)] {
        if d == T::zero() {
            if c.abs() > eps {
                return None;
            }
            continue;
        }
        let (a, b) = ((c - eps) / d, (c + eps) / d);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        lo = lo.max(a);
        hi = hi.min(b);
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

fn cheb<T: Scalar>(p: (T, T), q: (T, T)) -> T {
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

fn touches_one<T: Scalar>(iv: Interval<T>) -> bool {
    matches!(iv, Some((_, hi)) if hi >= T::one() - T::of(1e-12))
}

/// Free-space reachability: is the Fréchet distance between the two
/// `u`-monotone paths, under the ground metric `max(|du|, |dr|)`, at most `eps`?
///
/// Only cells whose `u` ranges come within `eps` of each other can be free,
/// so each row of the diagram is restricted to a contiguous band of columns.
pub fn frechet_decision<T: Scalar>(p: &[(T, T)], q: &[(T, T)], eps: T) -> bool {
    let eps = eps * (T::one() + T::of(1e-12)) + T::of(1e-15);
    if cheb(p[0], q[0]) > eps || cheb(p[p.len() - 1], q[q.len() - 1]) > eps {
        return false;
    }
    if p.len() == 1 || q.len() == 1 {
        // A single point against a path.
        let (pt, path) = if p.len() == 1 { (p[0], q) } else { (q[0], p) };
        return path.iter().all(|v| cheb(pt, *v) <= eps);
    }
    let n = p.len() - 1;
    let m = q.len() - 1;
    // Columns j whose segment u-range [q_j.u, q_{j+1}.u] is within eps of
    // the row segment [p_i.u, p_{i+1}.u].
    let band = |i: usize| -> (usize, usize) {
        let lo_u = p[i].0 - eps;
        let hi_u = p[i + 1].0 + eps;
        let jlo = q[1..].partition_point(|v| v.0 < lo_u);
        let jhi = q[..m].partition_point(|v| v.0 <= hi_u);
        (jlo, jhi)
    };

    // The diagram's left (bottom) boundary is reachable as long as p[0]
    // (q[0]) stays within eps of the other path's vertices.
    let left_reach = q.iter().take_while(|v| cheb(p[0], **v) <= eps).count();
    let bottom_reach = p.iter().take_while(|v| cheb(q[0], **v) <= eps).count();

    // Reachable parts of the right edges of the previous row, by column.
    let (mut prev_lo, mut prev_hi) = (0usize, 0usize);
    let mut prev_right: Vec<Interval<T>> = Vec::new();

    for i in 0..n {
        let (jlo, jhi) = band(i);
        if jlo >= jhi {
            return false;
        }
        let mut right = vec![None; jhi - jlo];
        // Top output of the cell below the current one.
        let mut carry: Interval<T> = None;
        for j in jlo..jhi {
            let left: Interval<T> = if i == 0 {
                if j < left_reach {
                    free_interval(p[0], q[j], q[j + 1], eps)
                } else {
                    None
                }
            } else if j >= prev_lo && j < prev_hi {
                prev_right[j - prev_lo]
            } else {
                None
            };
            let bottom: Interval<T> = if j == 0 {
                if i < bottom_reach {
                    free_interval(q[0], p[i], p[i + 1], eps)
                } else {
                    None
                }
            } else if j == jlo {
                None
            } else {
                carry
            };
            let free_right = free_interval(p[i + 1], q[j], q[j + 1], eps);
            let free_top = free_interval(q[j + 1], p[i], p[i + 1], eps);
            right[j - jlo] = match (bottom, left) {
                (Some(_), _) => free_right,
                (None, Some((lo, _))) => clip_below(free_right, lo),
                (None, None) => None,
            };
            carry = match (left, bottom) {
                (Some(_), _) => free_top,
                (None, Some((lo, _))) => clip_below(free_top, lo),
                (None, None) => None,
            };
            if i == n - 1 && j == m - 1 {
                return touches_one(right[j - jlo]) || touches_one(carry);
            }
        }
        prev_lo = jlo;
        prev_hi = jhi;
        prev_right = right;
    }
    false
}

fn clip_below<T: Scalar>(iv: Interval<T>, lo: T) -> Interval<T> {
    match iv {
        Some((a, b)) if b >= lo => Some((a.max(lo), b)),
        _ => None,
    }
}

/// Fréchet distance between two `u`-monotone paths under the Chebyshev ground
/// metric, by bisection on [`frechet_decision`]. The returned value is feasible
/// and within `tol` of the infimum.
pub fn frechet_distance<T: Scalar>(
    p: &Polyline<T>,
    q: &Polyline<T>,
    lower: T,
    upper: T,
    tol: T,
) -> T {
    // Fixed argument order so the result is exactly symmetric.
    let (pv, qv) = match p.vertices().partial_cmp(q.vertices()) {
        Some(std::cmp::Ordering::Greater) => (q.vertices(), p.vertices()),
        _ => (p.vertices(), q.vertices()),
    };
    let mut lo = lower
        .max(cheb(pv[0], qv[0]))
        .max(cheb(pv[pv.len() - 1], qv[qv.len() - 1]));
    let mut hi = upper.max(lo);
    let mut guard = 0;
    while !frechet_decision(pv, qv, hi) {
        hi = hi * T::of(2.0) + tol;
        guard += 1;
        assert!(guard < 200, "decision never succeeds");
    }
    if frechet_decision(pv, qv, lo) {
        return lo;
    }
    while hi - lo > tol {
        let mid = (lo + hi) / T::of(2.0);
        if frechet_decision(pv, qv, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// M1 distance of `f` and `g` restricted to `[-a, a]`.
pub fn m1_dist_interval<T: Scalar, F: AsPath<T> + ?Sized, G: AsPath<T> + ?Sized>(
    f: &F,
    g: &G,
    a: T,
    tol: T,
) -> Result<T, MetricError> {
    m1_dist_on(f, g, -a, a, tol)
}

/// M1 distance of `f` and `g` restricted to `[lo, hi]`.
pub fn m1_dist_on<T: Scalar, F: AsPath<T> + ?Sized, G: AsPath<T> + ?Sized>(
    f: &F,
    g: &G,
    lo: T,
    hi: T,
    tol: T,
) -> Result<T, MetricError> {
    if !(tol > T::zero()) {
        return Err(MetricError::BadTolerance);
    }
    let gf = completed_graph(f, lo, hi)?;
    let gg = completed_graph(g, lo, hi)?;
    let upper = uniform_dist(f, g, lo, hi)?;
    Ok(frechet_distance(&gf, &gg, T::zero(), upper, tol))
}

fn magnitudes<T: Scalar>(f: &Polyline<T>, g: &Polyline<T>) -> Vec<T> {
    let mut m: Vec<T> = f
        .nodes()
        .into_iter()
        .chain(g.nodes())
        .map(|u| u.abs())
        .collect();
    m.push(T::zero());
    m.sort_by(|x, y| x.partial_cmp(y).expect("finite nodes"));
    m.dedup();
    m
}

/// Whole-line M1 distance `int_0^inf e^{-a} (d_{M1,a} ∧ 1) da`.
///
/// The integrand is evaluated strictly between consecutive node magnitudes
/// with adaptive Simpson; past the largest magnitude `A` it is constant and
/// the tail is `e^{-A} (d_{M1,A+} ∧ 1)`.
pub fn m1_dist_whole<T: Scalar, F: AsPath<T> + ?Sized, G: AsPath<T> + ?Sized>(
    f: &F,
    g: &G,
) -> Result<T, MetricError> {
    let f = f.as_path();
    let g = g.as_path();
    let mags = magnitudes(&f, &g);
    let big_a = *mags.last().unwrap();
    let tol = T::of(M1_TOL);
    let shrink = T::of(1e-9) * (T::one() + big_a);
    let integrand = |a: T| -> T {
        let d = m1_dist_interval(&*f, &*g, a, tol).expect("positive interval");
        (-a).exp() * d.min(T::one())
    };
    let pieces = mags.len().max(2) - 1;
    let budget = T::of(5e-5) / T::of(pieces as f64);
    let mut total = T::zero();
    for w in mags.windows(2) {
        let (lo, hi) = (w[0] + shrink, w[1] - shrink);
        if hi > lo {
            total = total + adaptive_simpson(&integrand, lo, hi, budget, 24);
        }
    }
    let tail_a = big_a + T::one();
    let tail = (-big_a).exp() * m1_dist_interval(&*f, &*g, tail_a, tol)?.min(T::one());
    // Quadrature error can push a capped integrand past its bound.
    Ok((total + tail).max(T::zero()).min(T::one()))
}

/// Certified upper bound `int e^{-a} min(1, sup_{[-a,a]} |f - g|) da`, using
/// the value of the non-decreasing sup at the right end of each piece.
pub fn m1_whole_upper<T: Scalar, F: AsPath<T> + ?Sized, G: AsPath<T> + ?Sized>(
    f: &F,
    g: &G,
) -> Result<T, MetricError> {
    let f = f.as_path();
    let g = g.as_path();
    let gap = |u: T| {
        (f.eval(u) - g.eval(u))
            .abs()
            .max((f.left_limit(u) - g.left_limit(u)).abs())
    };
    // |f - g| is linear between merged nodes, so the sup over [-a, a] is
    // attained at a node inside or at an end.
    let mut nodes: Vec<(T, T)> = f
        .nodes()
        .into_iter()
        .chain(g.nodes())
        .map(|u| (u.abs(), gap(u)))
        .collect();
    nodes.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite nodes"));
    let mags = magnitudes(&f, &g);
    let big_a = *mags.last().unwrap();
    let mut total = T::zero();
    let mut sup = gap(T::zero());
    let mut k = 0;
    for w in mags.windows(2) {
        while k < nodes.len() && nodes[k].0 <= w[1] {
            sup = sup.max(nodes[k].1);
            k += 1;
        }
        sup = sup.max(gap(w[1])).max(gap(-w[1]));
        total = total + ((-w[0]).exp() - (-w[1]).exp()) * sup.min(T::one());
    }
    let far = big_a + T::one();
    sup = sup.max(uniform_dist(&*f, &*g, -far, far)?);
    Ok(total + (-big_a).exp() * sup.min(T::one()))
}

fn adaptive_simpson<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T, eps: T, depth: u32) -> T {
    let m = (a + b) / T::of(2.0);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / T::of(6.0) * (fa + T::of(4.0) * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, eps, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Scalar>(
    f: &impl Fn(T) -> T,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    eps: T,
    depth: u32,
) -> T {
    let m = (a + b) / T::of(2.0);
    let (lm, rm) = ((a + m) / T::of(2.0), (m + b) / T::of(2.0));
    let (flm, frm) = (f(lm), f(rm));
    let six = T::of(6.0);
    let four = T::of(4.0);
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::of(15.0) * eps {
        return left + right + delta / T::of(15.0);
    }
    let half = eps / T::of(2.0);
    simpson_step(f, a, m, fa, flm, fm, left, half, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, half, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cadlag::StepFunction;

    fn step(at: f64) -> StepFunction<f64> {
        StepFunction::from_jumps(0.0, &[(at, 1.0)]).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let f = StepFunction::from_jumps(0.3, &[(0.2, 1.0), (0.5, -2.0)]).unwrap();
        assert_eq!(m1_dist_on(&f, &f, 0.0, 2.0, 1e-6).unwrap(), 0.0);
        assert_eq!(m1_dist_whole(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn shifted_steps() {
        let d = m1_dist_on(&step(1.0), &step(1.3), 0.0, 2.0, 1e-7).unwrap();
        assert!((d - 0.3).abs() < 1e-6, "{d}");
    }

    #[test]
    fn staircase_is_close() {
        for k in [2usize, 5, 20] {
            let eps = 0.05;
            let jumps: Vec<(f64, f64)> = (0..k)
                .map(|i| (1.0 + eps * i as f64 / (k - 1) as f64, 1.0 / k as f64))
                .collect();
            let stair = StepFunction::from_jumps(0.0, &jumps).unwrap();
            let d = m1_dist_on(&step(1.0), &stair, 0.0, 2.0, 1e-7).unwrap();
            assert!(d <= eps + 1e-6, "k={k} d={d}");
        }
    }

    #[test]
    fn whole_line_bounds() {
        let f = StepFunction::from_jumps(0.0, &[(0.5, 3.0), (-1.0, 1.0)]).unwrap();
        let g = StepFunction::from_jumps(0.0, &[(0.7, 2.5)]).unwrap();
        let d = m1_dist_whole(&f, &g).unwrap();
        let u = m1_whole_upper(&f, &g).unwrap();
        assert!(d <= 1.0 && d <= u + 1e-4, "{d} {u}");
        assert!(d > 0.0);
    }
}

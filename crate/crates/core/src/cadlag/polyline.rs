use std::borrow::Cow;
use std::fmt::Write as _;

use super::{MetricError, StepFunction};
use crate::scalar::Scalar;

/// Piecewise linear path through `(u, r)` vertices with non-decreasing `u`.
///
/// Read as a function it is càdlàg: consecutive vertices with equal `u` form a
/// jump from the first to the last `r` of the run, and the path is extended
/// by its end values. Read as a graph it is traversed in vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline<T = f64> {
    pts: Vec<(T, T)>,
}

/// Anything that can be viewed as a piecewise linear càdlàg path.
pub trait AsPath<T: Scalar> {
    fn as_path(&self) -> Cow<'_, Polyline<T>>;
}

impl<T: Scalar> AsPath<T> for Polyline<T> {
    fn as_path(&self) -> Cow<'_, Polyline<T>> {
        Cow::Borrowed(self)
    }
}

impl<T: Scalar> AsPath<T> for StepFunction<T> {
    fn as_path(&self) -> Cow<'_, Polyline<T>> {
        Cow::Owned(self.to_polyline())
    }
}

impl<T: Scalar> Polyline<T> {
    /// Validates and normalizes: runs of equal `u` keep only their first and
    /// last vertex, repeated points are dropped.
    pub fn new(pts: Vec<(T, T)>) -> Result<Self, MetricError> {
        if pts.is_empty() {
            return Err(MetricError::Empty);
        }
        if pts.iter().any(|(u, r)| !u.is_finite() || !r.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        if pts.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(MetricError::NotIncreasing);
        }
        Ok(Self::from_vertices_unchecked(pts))
    }

    pub(crate) fn from_vertices_unchecked(pts: Vec<(T, T)>) -> Self {
        let mut out: Vec<(T, T)> = Vec::with_capacity(pts.len());
        let mut i = 0;
        while i < pts.len() {
            let mut j = i;
            while j + 1 < pts.len() && pts[j + 1].0 == pts[i].0 {
                j += 1;
            }
            out.push(pts[i]);
            if j > i && pts[j].1 != pts[i].1 {
                out.push(pts[j]);
            }
            i = j + 1;
        }
        Self { pts: out }
    }

    /// Graph vertices used verbatim, for completed graphs whose vertical runs
    /// are already monotone.
    fn graph(pts: Vec<(T, T)>) -> Self {
        let mut out: Vec<(T, T)> = Vec::with_capacity(pts.len());
        for p in pts {
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
        Self { pts: out }
    }

    pub fn vertices(&self) -> &[(T, T)] {
        &self.pts
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Distinct `u` values of the vertices.
    pub fn nodes(&self) -> Vec<T> {
        let mut out: Vec<T> = self.pts.iter().map(|p| p.0).collect();
        out.dedup();
        out
    }

    pub fn eval(&self, y: T) -> T {
        let k = self.pts.partition_point(|p| p.0 <= y);
        if k == 0 {
            return self.pts[0].1;
        }
        if k == self.pts.len() {
            return self.pts[k - 1].1;
        }
        interpolate(self.pts[k - 1], self.pts[k], y)
    }

    pub fn left_limit(&self, y: T) -> T {
        let k = self.pts.partition_point(|p| p.0 < y);
        if k == 0 {
            return self.pts[0].1;
        }
        if k == self.pts.len() {
            return self.pts[k - 1].1;
        }
        if self.pts[k].0 == y {
            return self.pts[k].1;
        }
        interpolate(self.pts[k - 1], self.pts[k], y)
    }

    /// True when the path has a vertical segment.
    pub fn has_jumps(&self) -> bool {
        self.pts.windows(2).any(|w| w[0].0 == w[1].0)
    }

    /// Euclidean length of the path as a graph.
    pub fn length(&self) -> T {
        self.pts
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .sum()
    }

    /// Same vertices with `r` replaced by `f(u, r)`.
    pub fn map_values(&self, mut f: impl FnMut(T, T) -> T) -> Self {
        Self::from_vertices_unchecked(self.pts.iter().map(|&(u, r)| (u, f(u, r))).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,r\n");
        for (u, r) in &self.pts {
            let _ = writeln!(out, "{},{}", u.as_f64(), r.as_f64());
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, MetricError> {
        let rows = super::parse_pairs(text, "u", "r")?;
        Self::new(
            rows.into_iter()
                .map(|(u, r)| (T::of(u), T::of(r)))
                .collect(),
        )
    }
}

fn interpolate<T: Scalar>(p: (T, T), q: (T, T), y: T) -> T {
    if q.0 == p.0 {
        return q.1;
    }
    let s = (y - p.0) / (q.0 - p.0);
    p.1 + s * (q.1 - p.1)
}

fn check_interval<T: Scalar>(a: T, b: T) -> Result<(), MetricError> {
    if a < b && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(MetricError::DegenerateInterval {
            a: a.as_f64(),
            b: b.as_f64(),
        })
    }
}

/// Completed graph of `f` restricted to `[a, b]`: starts at `(a, f(a))` (no
/// jump at the left end), fills every jump in `(a, b]` with a vertical
/// segment and ends at `(b, f(b))`.
pub fn completed_graph<T: Scalar, F: AsPath<T> + ?Sized>(
    f: &F,
    a: T,
    b: T,
) -> Result<Polyline<T>, MetricError> {
    check_interval(a, b)?;
    let f = f.as_path();
    let mut pts = vec![(a, f.eval(a))];
    for u in f.nodes() {
        if u > a && u < b {
            pts.push((u, f.left_limit(u)));
            pts.push((u, f.eval(u)));
        }
    }
    pts.push((b, f.left_limit(b)));
    pts.push((b, f.eval(b)));
    Ok(Polyline::graph(pts))
}

/// True when `f` or `g` jumps exactly at `a` or `b`, where the restriction
/// convention of [`completed_graph`] decides the result.
pub fn boundary_sensitive<T: Scalar, F: AsPath<T> + ?Sized, G: AsPath<T> + ?Sized>(
    f: &F,
    g: &G,
    a: T,
    b: T,
) -> bool {
    let f = f.as_path();
    let g = g.as_path();
    [a, b]
        .iter()
        .any(|&y| f.eval(y) != f.left_limit(y) || g.eval(y) != g.left_limit(y))
}

fn merged_nodes<T: Scalar>(f: &Polyline<T>, g: &Polyline<T>, a: T, b: T) -> Vec<T> {
    let mut nodes: Vec<T> = f
        .nodes()
        .into_iter()
        .chain(g.nodes())
        .filter(|u| *u > a && *u < b)
        .collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).expect("finite nodes"));
    nodes.dedup();
    nodes
}

/// `sup_{y in [a, b]} |f(y) - g(y)|`, left limits included.
pub fn uniform_dist<T: Scalar, F: AsPath<T> + ?Sized, G: AsPath<T> + ?Sized>(
    f: &F,
    g: &G,
    a: T,
    b: T,
) -> Result<T, MetricError> {
    check_interval(a, b)?;
    let f = f.as_path();
    let g = g.as_path();
    let mut d = (f.eval(a) - g.eval(a)).abs();
    for u in merged_nodes(&f, &g, a, b) {
        d = d.max((f.left_limit(u) - g.left_limit(u)).abs());
        d = d.max((f.eval(u) - g.eval(u)).abs());
    }
    d = d.max((f.left_limit(b) - g.left_limit(b)).abs());
    d = d.max((f.eval(b) - g.eval(b)).abs());
    Ok(d)
}

/// `int_a^b f(y) dy`, exact for piecewise linear paths.
pub fn integrate<T: Scalar, F: AsPath<T> + ?Sized>(f: &F, a: T, b: T) -> Result<T, MetricError> {
    check_interval(a, b)?;
    let f = f.as_path();
    let mut nodes = vec![a];
    nodes.extend(f.nodes().into_iter().filter(|u| *u > a && *u < b));
    nodes.push(b);
    let half = T::of(0.5);
    Ok(nodes
        .windows(2)
        .map(|w| (w[1] - w[0]) * half * (f.eval(w[0]) + f.left_limit(w[1])))
        .sum())
}

use std::fmt::Write as _;

use super::{MetricError, Polyline};
use crate::scalar::Scalar;

/// Right-continuous piecewise constant function: `left_value` on
/// `(-inf, b_0)`, `values[k]` on `[b_k, b_{k+1})`, `values[last]` from the last
/// breakpoint on.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T = f64> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    left_value: T,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, left_value: T) -> Result<Self, MetricError> {
        if breakpoints.len() != values.len() {
            return Err(MetricError::LengthMismatch {
                left: breakpoints.len(),
                right: values.len(),
            });
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1]))
            || breakpoints.iter().any(|b| !b.is_finite())
        {
            return Err(MetricError::NotIncreasing);
        }
        if values.iter().any(|v| !v.is_finite()) || !left_value.is_finite() {
            return Err(MetricError::NonFinite);
        }
        Ok(Self {
            breakpoints,
            values,
            left_value,
        })
    }

    pub fn constant(c: T) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: Vec::new(),
            left_value: c,
        }
    }

    /// Sum of `height * 1_{[at, inf)}` over `(at, height)`.
    pub fn from_jumps(base: T, jumps: &[(T, T)]) -> Result<Self, MetricError> {
        let mut sorted = jumps.to_vec();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite jump positions"));
        let mut breakpoints: Vec<T> = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut level = base;
        for (at, h) in sorted {
            level = level + h;
            if breakpoints.last() == Some(&at) {
                *values.last_mut().unwrap() = level;
            } else {
                breakpoints.push(at);
                values.push(level);
            }
        }
        Self::new(breakpoints, values, base)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn left_value(&self) -> T {
        self.left_value
    }

    pub fn eval(&self, y: T) -> T {
        let k = self.breakpoints.partition_point(|b| *b <= y);
        if k == 0 {
            self.left_value
        } else {
            self.values[k - 1]
        }
    }

    pub fn left_limit(&self, y: T) -> T {
        let k = self.breakpoints.partition_point(|b| *b < y);
        if k == 0 {
            self.left_value
        } else {
            self.values[k - 1]
        }
    }

    /// `(position, size)` of every breakpoint where the value changes.
    pub fn jumps(&self) -> Vec<(T, T)> {
        let mut prev = self.left_value;
        let mut out = Vec::new();
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            if *v != prev {
                out.push((*b, *v - prev));
            }
            prev = *v;
        }
        out
    }

    /// Same function with breakpoints that carry no jump removed.
    pub fn simplified(&self) -> Self {
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        let mut prev = self.left_value;
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            if *v != prev {
                breakpoints.push(*b);
                values.push(*v);
            }
            prev = *v;
        }
        Self {
            breakpoints,
            values,
            left_value: self.left_value,
        }
    }

    /// `f * 1_{[lo, hi)}`.
    pub fn truncated(&self, lo: T, hi: T) -> Self {
        let mut breakpoints = vec![lo];
        let mut values = vec![self.eval(lo)];
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            if *b > lo && *b < hi {
                breakpoints.push(*b);
                values.push(*v);
            }
        }
        breakpoints.push(hi);
        values.push(T::zero());
        Self {
            breakpoints,
            values,
            left_value: T::zero(),
        }
        .simplified()
    }

    /// The same function as a piecewise linear càdlàg path.
    pub fn to_polyline(&self) -> Polyline<T> {
        let mut pts = Vec::with_capacity(2 * self.breakpoints.len());
        let mut prev = self.left_value;
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            pts.push((*b, prev));
            pts.push((*b, *v));
            prev = *v;
        }
        if pts.is_empty() {
            pts.push((T::zero(), self.left_value));
        }
        Polyline::from_vertices_unchecked(pts)
    }

    /// CSV `breakpoint,value`; the first row `-inf,<value>` holds the value
    /// left of every breakpoint.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("breakpoint,value\n");
        let _ = writeln!(out, "-inf,{}", self.left_value.as_f64());
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", b.as_f64(), v.as_f64());
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, MetricError> {
        let rows = super::parse_pairs(text, "breakpoint", "value")?;
        let mut it = rows.into_iter().peekable();
        let left = match it.peek() {
            Some((b, v)) if b.is_infinite() && *b < 0.0 => {
                let v = *v;
                it.next();
                v
            }
            Some((_, v)) => *v,
            None => {
                return Err(MetricError::Parse {
                    line: 0,
                    msg: "no rows".into(),
                })
            }
        };
        let (b, v): (Vec<T>, Vec<T>) = it.map(|(b, v)| (T::of(b), T::of(v))).unzip();
        Self::new(b, v, T::of(left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_limits() {
        let f = StepFunction::new(vec![0.0, 1.0], vec![2.0, -1.0], 5.0).unwrap();
        assert_eq!(f.eval(-1.0), 5.0);
        assert_eq!(f.eval(0.0), 2.0);
        assert_eq!(f.left_limit(0.0), 5.0);
        assert_eq!(f.eval(1.0), -1.0);
        assert_eq!(f.left_limit(1.0), 2.0);
        assert_eq!(f.jumps(), vec![(0.0, -3.0), (1.0, -3.0)]);
        assert!(StepFunction::new(vec![1.0, 1.0], vec![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = StepFunction::from_jumps(0.5, &[(0.25, 1.0), (-1.0, 2.0)]).unwrap();
        let back = StepFunction::<f64>::from_csv(&f.to_csv()).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn truncation() {
        let f = StepFunction::constant(2.0).truncated(-1.0, 1.0);
        assert_eq!(f.eval(-1.0), 2.0);
        assert_eq!(f.eval(0.999), 2.0);
        assert_eq!(f.eval(1.0), 0.0);
        assert_eq!(f.left_limit(-1.0), 0.0);
    }
}

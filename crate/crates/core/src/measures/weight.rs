use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum WeightError {
    #[error("expected {expected} weight values for radius {radius}, got {got}")]
    WrongLength {
        radius: usize,
        expected: usize,
        got: usize,
    },
    #[error("weight at k={k} is not positive ({value})")]
    NonPositive { k: i64, value: f64 },
    #[error("weight decreases between k={k} and k={}", k + 1)]
    NotMonotone { k: i64 },
    #[error("weight is constant; the walk needs w(M) > w(-M)")]
    Constant,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Self-repulsion weight `w : Z -> (0, inf)`, tabulated on `[-M, M]` and held
/// constant outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction<T> {
    radius: usize,
    values: Vec<T>,
}

/// Validates a weight table indexed by `k = -radius..=radius`.
pub fn make_weight<T: Scalar>(
    values: &[T],
    radius: usize,
) -> Result<WeightFunction<T>, WeightError> {
    WeightFunction::new(values.to_vec(), radius)
}

impl<T: Scalar> WeightFunction<T> {
    pub fn new(values: Vec<T>, radius: usize) -> Result<Self, WeightError> {
        let expected = 2 * radius + 1;
        if radius == 0 || values.len() != expected {
            return Err(WeightError::WrongLength {
                radius,
                expected,
                got: values.len(),
            });
        }
        let lo = -(radius as i64);
        for (j, &v) in values.iter().enumerate() {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(WeightError::NonPositive {
                    k: lo + j as i64,
                    value: v.as_f64(),
                });
            }
        }
        for (j, pair) in values.windows(2).enumerate() {
            if pair[1] < pair[0] {
                return Err(WeightError::NotMonotone { k: lo + j as i64 });
            }
        }
        if !(values[expected - 1] > values[0]) {
            return Err(WeightError::Constant);
        }
        Ok(Self { radius, values })
    }

    /// `w(k) = exp(beta * k)` on `[-radius, radius]`.
    pub fn exponential(beta: T, radius: usize) -> Result<Self, WeightError> {
        let r = radius as i64;
        let values = (-r..=r).map(|k| (beta * T::of(k as f64)).exp()).collect();
        Self::new(values, radius)
    }

    /// Two-level bounded weight: `lo` for `k < 0`, `hi` for `k > 0`, their midpoint at zero.
    pub fn bounded(lo: T, hi: T, radius: usize) -> Result<Self, WeightError> {
        let r = radius as i64;
        let mid = (lo + hi) / T::of(2.0);
        let values = (-r..=r)
            .map(|k| match k.signum() {
                -1 => lo,
                0 => mid,
                _ => hi,
            })
            .collect();
        Self::new(values, radius)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `w(k)` with saturation outside the table.
    #[inline]
    pub fn eval(&self, k: i64) -> T {
        let r = self.radius as i64;
        let idx = k.clamp(-r, r) + r;
        self.values[idx as usize]
    }

    /// Probability that the local-time difference chain steps up from `m`.
    #[inline]
    pub fn p_up(&self, m: i64) -> T {
        let a = self.eval(-m);
        let b = self.eval(m);
        a / (a + b)
    }

    /// `(p_up, p_down)` for the difference chain at state `m`.
    pub fn xi_step_probs(&self, m: i64) -> (T, T) {
        let a = self.eval(-m);
        let b = self.eval(m);
        let s = a + b;
        (a / s, b / s)
    }

    /// Same weight in another scalar type.
    pub fn cast<U: Scalar>(&self) -> WeightFunction<U> {
        WeightFunction {
            radius: self.radius,
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    /// Parses `k value` lines (blank lines and `#` comments ignored). Keys must
    /// cover a symmetric contiguous range `-M..=M`.
    pub fn parse_kv(text: &str) -> Result<Self, WeightError> {
        let mut entries: Vec<(i64, T)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(k), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(WeightError::Parse {
                    line: n + 1,
                    msg: "expected `k value`".into(),
                });
            };
            let k: i64 = k.parse().map_err(|e| WeightError::Parse {
                line: n + 1,
                msg: format!("bad key: {e}"),
            })?;
            let v: f64 = v.parse().map_err(|e| WeightError::Parse {
                line: n + 1,
                msg: format!("bad value: {e}"),
            })?;
            entries.push((k, T::of(v)));
        }
        entries.sort_by_key(|e| e.0);
        let radius = entries.last().map(|e| e.0).unwrap_or(0);
        if radius <= 0 {
            return Err(WeightError::Parse {
                line: 0,
                msg: "no positive keys".into(),
            });
        }
        for (j, (k, _)) in entries.iter().enumerate() {
            if *k != j as i64 - radius {
                return Err(WeightError::Parse {
                    line: 0,
                    msg: format!("keys must be exactly -{radius}..={radius}"),
                });
            }
        }
        Self::new(entries.into_iter().map(|e| e.1).collect(), radius as usize)
    }

    pub fn to_kv_string(&self) -> String {
        let r = self.radius as i64;
        let mut out = String::new();
        for (j, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{} {}", j as i64 - r, v.as_f64());
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WeightError> {
        Self::parse_kv(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_table_is_valid() {
        let e = std::f64::consts::E;
        let w = make_weight(&[1.0 / e, 1.0, e], 1).unwrap();
        assert_relative_eq!(w.eval(1), e);
        assert_relative_eq!(w.eval(5), e);
        assert_relative_eq!(w.eval(-7), 1.0 / e);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            make_weight(&[1.0, 1.0, 1.0], 1),
            Err(WeightError::Constant)
        ));
        assert!(matches!(
            make_weight(&[2.0, 1.0, 3.0], 1),
            Err(WeightError::NotMonotone { k: -1 })
        ));
        assert!(matches!(
            make_weight(&[0.0, 1.0, 3.0], 1),
            Err(WeightError::NonPositive { k: -1, .. })
        ));
        assert!(matches!(
            make_weight(&[1.0, 2.0], 1),
            Err(WeightError::WrongLength { .. })
        ));
    }

    #[test]
    fn xi_probabilities() {
        let w = WeightFunction::exponential(1.0f64, 10).unwrap();
        let (u, d) = w.xi_step_probs(0);
        assert_eq!((u, d), (0.5, 0.5));
        let e = std::f64::consts::E;
        let (u, d) = w.xi_step_probs(1);
        assert_relative_eq!(u, e.recip() / (e + e.recip()), epsilon = 1e-15);
        assert_relative_eq!(u, 0.1192029220221175, epsilon = 1e-12);
        assert_relative_eq!(u + d, 1.0, epsilon = 1e-15);
        let (u_neg, _) = w.xi_step_probs(-1);
        assert_relative_eq!(u_neg, 0.8807970779778824, epsilon = 1e-12);
        assert_relative_eq!(u_neg, d, epsilon = 1e-15);
    }

    #[test]
    fn kv_round_trip() {
        let w = WeightFunction::exponential(0.5f64, 3).unwrap();
        let back = WeightFunction::<f64>::parse_kv(&w.to_kv_string()).unwrap();
        for k in -5..=5 {
            assert_relative_eq!(w.eval(k), back.eval(k), max_relative = 1e-14);
        }
        let err = WeightFunction::<f64>::parse_kv("-1 1\n1 2\n").unwrap_err();
        assert!(matches!(err, WeightError::Parse { .. }));
    }
}

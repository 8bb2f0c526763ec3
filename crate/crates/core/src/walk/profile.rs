use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::WalkParams;

/// Directed-edge local times at the stopping time over the window `[lo, hi]`;
/// both counts vanish outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeProfile {
    pub params: WalkParams,
    pub lo: i64,
    pub hi: i64,
    /// `ell^-(T, i)` for `i = lo..=hi`: jumps `i -> i-1` before `T`.
    pub ell_minus: Vec<u64>,
    /// `ell^+(T, i)` for `i = lo..=hi`: jumps `i -> i+1` before `T`.
    pub ell_plus: Vec<u64>,
    pub chi: i64,
    pub t: u64,
    pub i_minus: i64,
    pub i_plus: i64,
}

/// Run metadata written next to a profile CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub params: WalkParams,
    pub seed: Option<u64>,
    pub backend: String,
    pub t: u64,
    pub chi: i64,
    pub i_minus: i64,
    pub i_plus: i64,
    /// `"positive-x"` when `x > 0`; otherwise the recursion start is taken from
    /// the same formula applied to `floor(N x)`, which is an extension.
    pub chi_convention: String,
}

impl LocalTimeProfile {
    /// Builds a profile from raw counts, filling `T`, `I-` and `I+`.
    pub fn from_counts(
        params: WalkParams,
        lo: i64,
        ell_minus: Vec<u64>,
        ell_plus: Vec<u64>,
    ) -> Self {
        assert_eq!(ell_minus.len(), ell_plus.len());
        let hi = lo + ell_minus.len() as i64 - 1;
        let t = ell_minus.iter().chain(&ell_plus).sum();
        let mut p = Self {
            params,
            lo,
            hi,
            ell_minus,
            ell_plus,
            chi: params.chi(),
            t,
            i_minus: 0,
            i_plus: 0,
        };
        let (a, b) = hitting_indices(&p);
        p.i_minus = a;
        p.i_plus = b;
        p
    }

    pub fn ell_minus_at(&self, i: i64) -> u64 {
        self.get(&self.ell_minus, i)
    }

    pub fn ell_plus_at(&self, i: i64) -> u64 {
        self.get(&self.ell_plus, i)
    }

    /// `ell^+` for `sign = +`, `ell^-` otherwise.
    pub fn ell_at(&self, sign: super::Sign, i: i64) -> u64 {
        match sign {
            super::Sign::Plus => self.ell_plus_at(i),
            super::Sign::Minus => self.ell_minus_at(i),
        }
    }

    fn get(&self, v: &[u64], i: i64) -> u64 {
        if i < self.lo || i > self.hi {
            0
        } else {
            v[(i - self.lo) as usize]
        }
    }

    /// `sup_y |ell^sign(floor(N y)) / N - tri(y)|`, exact: inside a cell the
    /// triangle is linear away from its kinks at `0` and `±(|x| + 2 theta)`.
    pub fn triangle_deviation(&self, sign: super::Sign) -> f64 {
        let p = &self.params;
        let n = p.n as f64;
        let c = p.reach();
        let tri = |y: f64| super::triangle_limit(p.x, p.theta, y);
        let lo = self.lo.min((-c * n).floor() as i64) - 1;
        let hi = self.hi.max((c * n).ceil() as i64) + 1;
        let mut sup: f64 = 0.0;
        for i in lo..=hi {
            let ell = self.ell_at(sign, i) as f64 / n;
            let (y0, y1) = (i as f64 / n, (i + 1) as f64 / n);
            sup = sup.max((ell - tri(y0)).abs()).max((ell - tri(y1)).abs());
            for kink in [-c, 0.0, c] {
                if kink > y0 && kink < y1 {
                    sup = sup.max((ell - tri(kink)).abs());
                }
            }
        }
        sup
    }

    /// Checks conservation, edge bookkeeping, the stopping value and the
    /// hitting indices. Returns the first violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        let total: u64 = self.ell_minus.iter().chain(&self.ell_plus).sum();
        if total != self.t {
            return Err(format!("sum of local times {total} != T {}", self.t));
        }
        let e = self.params.end_site();
        for i in self.lo - 1..=self.hi {
            let net = self.ell_plus_at(i) as i64 - self.ell_minus_at(i + 1) as i64;
            let expected = (0 <= i && i < e) as i64 - (e <= i && i < 0) as i64;
            if net != expected {
                return Err(format!(
                    "edge ({i},{}) has net crossing {net}, expected {expected}",
                    i + 1
                ));
            }
        }
        let s = self.params.site();
        let stop = self.ell_at(self.params.iota, s);
        if stop != self.params.threshold() {
            return Err(format!(
                "stopping count {stop} != floor(N theta) {}",
                self.params.threshold()
            ));
        }
        let (a, b) = hitting_indices(self);
        if (a, b) != (self.i_minus, self.i_plus) {
            return Err(format!(
                "stored hitting indices {:?} != {:?}",
                (self.i_minus, self.i_plus),
                (a, b)
            ));
        }
        if self.i_minus >= 0 {
            return Err(format!("I- = {} is not negative", self.i_minus));
        }
        for i in self.lo..=self.hi {
            if (i <= self.i_minus || i >= self.i_plus)
                && (self.ell_minus_at(i) > 0 || self.ell_plus_at(i) > 0)
            {
                return Err(format!("non-zero local time at {i} outside [I-, I+]"));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,ell_minus,ell_plus\n");
        for i in self.lo..=self.hi {
            let _ = writeln!(out, "{i},{},{}", self.ell_minus_at(i), self.ell_plus_at(i));
        }
        out
    }

    pub fn metadata(&self, seed: Option<u64>, backend: &str) -> ProfileMetadata {
        ProfileMetadata {
            params: self.params,
            seed,
            backend: backend.to_string(),
            t: self.t,
            chi: self.chi,
            i_minus: self.i_minus,
            i_plus: self.i_plus,
            chi_convention: if self.params.x > 0.0 {
                "positive-x"
            } else {
                "extended"
            }
            .to_string(),
        }
    }
}

/// `I+ = inf{i >= chi : ell^-(i) = 0}` and `I- = sup{i < chi : ell^+(i) = 0}`.
pub fn hitting_indices(profile: &LocalTimeProfile) -> (i64, i64) {
    let chi = profile.chi;
    let mut i_plus = chi;
    while profile.ell_minus_at(i_plus) > 0 {
        i_plus += 1;
    }
    let mut i_minus = chi - 1;
    while profile.ell_plus_at(i_minus) > 0 {
        i_minus -= 1;
    }
    (i_minus, i_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::Sign;

    #[test]
    fn first_zero_scan() {
        let params = WalkParams::new(3, 1.0, 1.0, Sign::Minus).unwrap();
        // chi = 3; ell^- = 3,2,1,0 on 3..=6
        let lo = -1;
        let mut em = vec![0u64; 9];
        let mut ep = vec![0u64; 9];
        for (k, v) in [3u64, 2, 1, 0].iter().enumerate() {
            em[(3 + k as i64 - lo) as usize] = *v;
        }
        ep[(2 - lo) as usize] = 1;
        let p = LocalTimeProfile::from_counts(params, lo, em, ep);
        assert_eq!(p.i_plus, 6);
        assert_eq!(p.i_minus, 1);
    }
}

use rand::RngCore;

use super::{LocalTimeProfile, Sign, WalkError, WalkParams};
use crate::measures::WeightFunction;
use crate::scalar::Scalar;

/// Runs the walk from 0 until `ell^iota(floor(N x))` reaches `floor(N theta)`,
/// with the default step budget.
pub fn simulate_to_t<T: Scalar, R: RngCore + ?Sized>(
    w: &WeightFunction<T>,
    p: &WalkParams,
    rng: &mut R,
) -> Result<LocalTimeProfile, WalkError> {
    simulate_to_t_with_budget(w, p, p.default_step_budget(), rng)
}

pub fn simulate_to_t_with_budget<T: Scalar, R: RngCore + ?Sized>(
    w: &WeightFunction<T>,
    p: &WalkParams,
    budget: u64,
    rng: &mut R,
) -> Result<LocalTimeProfile, WalkError> {
    p.validate()?;
    // P(step right) depends only on d = ell^- - ell^+ at the current site and
    // is constant for |d| >= M.
    let m = w.radius() as i64;
    let right: Vec<u64> = (-m..=m)
        .map(|d| {
            let a = w.eval(d).as_f64();
            let b = w.eval(-d).as_f64();
            let q = a / (a + b);
            if q >= 1.0 {
                u64::MAX
            } else {
                (q * 18_446_744_073_709_551_616.0) as u64
            }
        })
        .collect();

    let stop_site = p.site();
    let stop_count = u32::try_from(p.threshold())
        .map_err(|_| WalkError::InvalidParams("floor(N theta) exceeds u32 range".into()))?;
    let half = ((4.0 * p.reach() * p.n as f64).ceil() as i64)
        .max(stop_site.abs() + 2)
        .max(16);
    let mut offset = half;
    let mut ell_minus = vec![0u32; (2 * half + 1) as usize];
    let mut ell_plus = vec![0u32; (2 * half + 1) as usize];

    let mut pos = 0i64;
    let (mut vmin, mut vmax) = (0i64, 0i64);
    let mut steps = 0u64;
    loop {
        if steps >= budget {
            return Err(WalkError::StepBudgetExceeded { budget });
        }
        steps += 1;
        let idx = (pos + offset) as usize;
        let d = (ell_minus[idx] as i64 - ell_plus[idx] as i64).clamp(-m, m);
        if rng.next_u64() < right[(d + m) as usize] {
            ell_plus[idx] += 1;
            let done = pos == stop_site && p.iota == Sign::Plus && ell_plus[idx] == stop_count;
            pos += 1;
            if done {
                break;
            }
        } else {
            ell_minus[idx] += 1;
            let done = pos == stop_site && p.iota == Sign::Minus && ell_minus[idx] == stop_count;
            pos -= 1;
            if done {
                break;
            }
        }
        vmin = vmin.min(pos);
        vmax = vmax.max(pos);
        if pos + offset < 0 {
            let grow = ell_minus.len() as i64;
            prepend(&mut ell_minus, grow as usize);
            prepend(&mut ell_plus, grow as usize);
            offset += grow;
        } else if pos + offset >= ell_minus.len() as i64 {
            let len = ell_minus.len();
            ell_minus.resize(2 * len, 0);
            ell_plus.resize(2 * len, 0);
        }
    }

    let lo = vmin.min(pos) - 1;
    let hi = vmax.max(pos) + 1;
    let take = |v: &[u32]| -> Vec<u64> {
        (lo..=hi)
            .map(|i| {
                let j = i + offset;
                if j < 0 || j >= v.len() as i64 {
                    0
                } else {
                    v[j as usize] as u64
                }
            })
            .collect()
    };
    let profile = LocalTimeProfile::from_counts(*p, lo, take(&ell_minus), take(&ell_plus));
    debug_assert_eq!(profile.t, steps);
    Ok(profile)
}

fn prepend(v: &mut Vec<u32>, extra: usize) {
    let mut grown = vec![0u32; extra + v.len()];
    grown[extra..].copy_from_slice(v);
    *v = grown;
}

//! Local-time profiles sampled site by site from independent η chains, the
//! coupling with i.i.d. `ζ_i ~ rho_0`, and the auxiliary L chain.

use std::fmt::Write as _;

use rand::{Rng, RngCore};

use crate::measures::{
    eta_nstep_dist, rho_minus, DiscreteDistribution, DiscreteSampler, EtaSampler, MeasureError,
    WeightFunction,
};
use crate::scalar::Scalar;
use crate::walk::{LocalTimeProfile, Sign, WalkError, WalkParams};

/// How an η chain is advanced to the index a site demands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EtaMode {
    /// One η step at a time.
    Stepped,
    /// Dyadic powers of the kernel; O(log n) per site.
    #[default]
    Dyadic,
}

/// Largest `k` with `k^6 <= n`.
pub fn coupling_threshold(n: u64) -> u64 {
    let mut k = (n as f64).powf(1.0 / 6.0).floor() as u64;
    while (k + 1).pow(6) <= n {
        k += 1;
    }
    while k > 0 && k.pow(6) > n {
        k -= 1;
    }
    k
}

/// Maximal coupling of `mu` (law of `η(n)` from 0) with `nu = rho_`:
/// given a draw `a ~ mu`, keep `r = a` with probability
/// `min(mu(a), nu(a)) / mu(a)`, otherwise draw `r` from the normalized
/// residual `(nu - mu)_+ / TV`.
#[derive(Debug, Clone)]
pub struct MaximalCoupling {
    mu: DiscreteDistribution<f64>,
    nu: DiscreteDistribution<f64>,
    tv: f64,
    residual: Option<DiscreteSampler>,
}

impl MaximalCoupling {
    pub fn new(
        mu: DiscreteDistribution<f64>,
        nu: DiscreteDistribution<f64>,
    ) -> Result<Self, MeasureError> {
        let tv = mu.tv_distance(&nu)?;
        let lo = nu.min_index();
        let masses: Vec<f64> = (lo..=nu.max_index())
            .map(|i| (nu.prob(i) - mu.prob(i)).max(0.0))
            .collect();
        let residual = if masses.iter().sum::<f64>() > 0.0 {
            Some(
                DiscreteDistribution::from_masses(crate::measures::Lattice::Integer, lo, masses)?
                    .sampler(),
            )
        } else {
            None
        };
        Ok(Self {
            mu,
            nu,
            tv,
            residual,
        })
    }

    pub fn tv(&self) -> f64 {
        self.tv
    }

    pub fn mu(&self) -> &DiscreteDistribution<f64> {
        &self.mu
    }

    pub fn nu(&self) -> &DiscreteDistribution<f64> {
        &self.nu
    }

    /// Draws `r` conditionally on the `mu`-side value `a`.
    pub fn partner<R: Rng + ?Sized>(&self, a: i64, rng: &mut R) -> i64 {
        let m = self.mu.prob(a);
        let keep = if m > 0.0 {
            (self.nu.prob(a) / m).min(1.0)
        } else {
            0.0
        };
        if rng.random::<f64>() < keep {
            return a;
        }
        match &self.residual {
            Some(s) => s.sample(rng),
            None => a,
        }
    }
}

/// Profile together with the coupled `ζ` field.
#[derive(Debug, Clone)]
pub struct CoupledSample {
    pub profile: LocalTimeProfile,
    /// First site of `zeta`, `coupled` and `match_flags`.
    pub zeta_lo: i64,
    /// Half-integers `ζ_i`.
    pub zeta: Vec<f64>,
    /// `ζ_i - 1/2` equals the η value used by the profile recursion at `i`.
    pub match_flags: Vec<bool>,
    /// The coupled pair agreed at index `n_threshold`.
    pub coupled: Vec<bool>,
    /// Index demanded from the η chain at each site (0 off the support).
    pub demanded: Vec<u64>,
    pub n_threshold: u64,
}

impl CoupledSample {
    pub fn zeta_at(&self, i: i64) -> Option<f64> {
        let j = i - self.zeta_lo;
        (j >= 0 && (j as usize) < self.zeta.len()).then(|| self.zeta[j as usize])
    }

    pub fn zeta_hi(&self) -> i64 {
        self.zeta_lo + self.zeta.len() as i64 - 1
    }

    /// Fraction of sites with `demanded >= n_threshold` whose match flag fails.
    pub fn mismatch_rate(&self) -> Option<f64> {
        let (mut bad, mut total) = (0usize, 0usize);
        for (d, m) in self.demanded.iter().zip(&self.match_flags) {
            if *d >= self.n_threshold && *d > 0 {
                total += 1;
                bad += !m as usize;
            }
        }
        (total > 0).then(|| bad as f64 / total as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,ell_minus,ell_plus,zeta,matched\n");
        for (j, z) in self.zeta.iter().enumerate() {
            let i = self.zeta_lo + j as i64;
            let _ = writeln!(
                out,
                "{i},{},{},{z},{}",
                self.profile.ell_minus_at(i),
                self.profile.ell_plus_at(i),
                self.match_flags[j] as u8
            );
        }
        out
    }
}

/// Outcome of one site draw.
struct SiteDraw {
    eta: i64,
    zeta: f64,
    coupled: bool,
    matched: bool,
}

/// Shared tables for one weight: the η sampler, `rho_` and the couplings.
#[derive(Debug, Clone)]
pub struct RayKnight {
    sampler: EtaSampler,
    rho: DiscreteDistribution<f64>,
    mode: EtaMode,
    couplings: Vec<(u64, MaximalCoupling)>,
}

impl RayKnight {
    pub fn new<T: Scalar>(w: &WeightFunction<T>) -> Result<Self, MeasureError> {
        let sampler = EtaSampler::new(w)?;
        let rho = rho_minus(sampler.weight(), 1e-14)?;
        Ok(Self {
            sampler,
            rho,
            mode: EtaMode::Dyadic,
            couplings: Vec::new(),
        })
    }

    pub fn with_mode(mut self, mode: EtaMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn sampler(&self) -> &EtaSampler {
        &self.sampler
    }

    pub fn rho(&self) -> &DiscreteDistribution<f64> {
        &self.rho
    }

    /// Precomputes the coupling used at scale `n`.
    pub fn prepare_coupling(&mut self, n: u64) -> Result<&MaximalCoupling, MeasureError> {
        let n0 = coupling_threshold(n);
        if let Some(pos) = self.couplings.iter().position(|(k, _)| *k == n0) {
            return Ok(&self.couplings[pos].1);
        }
        let mu = eta_nstep_dist(self.sampler.weight(), n0 as usize, 1e-14)?;
        self.couplings
            .push((n0, MaximalCoupling::new(mu, self.rho.clone())?));
        Ok(&self.couplings.last().unwrap().1)
    }

    fn coupling_for(&self, n0: u64) -> Option<&MaximalCoupling> {
        self.couplings
            .iter()
            .find(|(k, _)| *k == n0)
            .map(|(_, c)| c)
    }

    fn advance<R: RngCore + ?Sized>(
        &self,
        start: i64,
        steps: u64,
        rng: &mut R,
    ) -> Result<i64, MeasureError> {
        match self.mode {
            EtaMode::Stepped => self.sampler.run_stepped(start, steps, rng),
            EtaMode::Dyadic => self.sampler.advance(start, steps, rng),
        }
    }

    /// Profile at the stopping time built from the site recursions.
    pub fn profile<R: RngCore + ?Sized>(
        &self,
        p: &WalkParams,
        rng: &mut R,
    ) -> Result<LocalTimeProfile, WalkError> {
        build_profile(p, &mut |d| self.advance(0, d, rng))
    }

    /// Profile plus the coupled `ζ` field over
    /// `[floor(-(|x|+2θ)N) - 1, ceil((|x|+2θ)N)]` (widened to the profile support).
    pub fn coupled<R: RngCore + ?Sized>(
        &self,
        p: &WalkParams,
        rng: &mut R,
    ) -> Result<CoupledSample, WalkError> {
        let n0 = coupling_threshold(p.n);
        let owned;
        let coupling = match self.coupling_for(n0) {
            Some(c) => c,
            None => {
                let mu = eta_nstep_dist(self.sampler.weight(), n0 as usize, 1e-14)?;
                owned = MaximalCoupling::new(mu, self.rho.clone())?;
                &owned
            }
        };
        let mut draws: Vec<(u64, SiteDraw)> = Vec::new();
        let profile = {
            let mut f = |d: u64| -> Result<i64, MeasureError> {
                let s = self.site_draw(coupling, n0, d, rng)?;
                let eta = s.eta;
                draws.push((d, s));
                Ok(eta)
            };
            build_profile(p, &mut f)?
        };
        // build_profile visits chi, chi+1, ..., I+ and then chi-1, ..., I-.
        let reach = p.reach() * p.n as f64;
        let lo = ((-reach).floor() as i64 - 1).min(profile.i_minus);
        let hi = (reach.ceil() as i64).max(profile.i_plus);
        let len = (hi - lo + 1) as usize;
        let mut zeta = vec![f64::NAN; len];
        let mut match_flags = vec![false; len];
        let mut coupled = vec![false; len];
        let mut demanded = vec![0u64; len];
        let right = (profile.i_plus - profile.chi + 1) as usize;
        for (k, (d, s)) in draws.into_iter().enumerate() {
            let i = if k < right {
                profile.chi + k as i64
            } else {
                profile.chi - 1 - (k - right) as i64
            };
            let j = (i - lo) as usize;
            zeta[j] = s.zeta;
            match_flags[j] = s.matched;
            coupled[j] = s.coupled;
            demanded[j] = d;
        }
        for j in 0..len {
            if zeta[j].is_nan() {
                let s = self.site_draw(coupling, n0, 0, rng)?;
                zeta[j] = s.zeta;
                match_flags[j] = s.matched;
                coupled[j] = s.coupled;
            }
        }
        Ok(CoupledSample {
            profile,
            zeta_lo: lo,
            zeta,
            match_flags,
            coupled,
            demanded,
            n_threshold: n0,
        })
    }

    fn site_draw<R: RngCore + ?Sized>(
        &self,
        coupling: &MaximalCoupling,
        n0: u64,
        demanded: u64,
        rng: &mut R,
    ) -> Result<SiteDraw, MeasureError> {
        if demanded <= n0 {
            let eta = self.advance(0, demanded, rng)?;
            let a = self.advance(eta, n0 - demanded, rng)?;
            let r = coupling.partner(a, rng);
            return Ok(SiteDraw {
                eta,
                zeta: r as f64 + 0.5,
                coupled: r == a,
                matched: r == eta,
            });
        }
        let a = self.advance(0, n0, rng)?;
        let r = coupling.partner(a, rng);
        let eta = self.advance(a, demanded - n0, rng)?;
        let bar = if r == a {
            eta
        } else {
            self.advance(r, demanded - n0, rng)?
        };
        Ok(SiteDraw {
            eta,
            zeta: bar as f64 + 0.5,
            coupled: r == a,
            matched: bar == eta,
        })
    }

    /// Hitting time of `(-inf, 0]` by `L(m+1) = L(m) + η_m(L(m))`, `L(0) = k0`,
    /// censored at `cap`.
    pub fn l_chain_tau<R: RngCore + ?Sized>(
        &self,
        k0: u64,
        cap: u64,
        rng: &mut R,
    ) -> Result<u64, MeasureError> {
        let mut l = k0 as i64;
        let mut m = 0;
        while l > 0 {
            if m >= cap {
                return Ok(cap);
            }
            l += self.advance(0, l as u64, rng)?;
            m += 1;
        }
        Ok(m)
    }
}

/// Runs both directional recursions. `eta(k)` must return a fresh sample of
/// `η(k)` from a chain started at 0; it is called for sites `chi, chi+1, ...`
/// then `chi-1, chi-2, ...`, once per site, including the terminal zero sites.
fn build_profile<F>(p: &WalkParams, eta: &mut F) -> Result<LocalTimeProfile, WalkError>
where
    F: FnMut(u64) -> Result<i64, MeasureError>,
{
    p.validate()?;
    let n = p.threshold() as i64;
    let s = p.site();
    let e = p.end_site();
    let chi = p.chi();
    let budget = p.default_step_budget();
    let mut total = 0u64;

    // Right of chi: ell^+(i) = ell^-(i) + η(ell^-(i)),
    // ell^-(i+1) = ell^+(i) + [e <= i < 0].
    let mut right_minus = Vec::new();
    let mut right_plus = Vec::new();
    let mut lm = match p.iota {
        Sign::Minus => n,
        Sign::Plus => n - (s >= 0) as i64,
    };
    let mut i = chi;
    loop {
        let lp = lm + eta(lm as u64)?;
        debug_assert!(lp >= 0);
        right_minus.push(lm as u64);
        right_plus.push(lp as u64);
        total += (lm + lp) as u64;
        if total > budget {
            return Err(WalkError::StepBudgetExceeded { budget });
        }
        if lm == 0 {
            break;
        }
        lm = lp + (e <= i && i < 0) as i64;
        i += 1;
    }

    // Left of chi: ell^-(i) = ell^+(i) + η(ell^+(i)),
    // ell^+(i-1) = ell^-(i) + [0 <= i-1 < e] - [e <= i-1 < 0].
    let mut left_minus = Vec::new();
    let mut left_plus = Vec::new();
    let mut lp = match p.iota {
        Sign::Minus => n - (s <= 0) as i64,
        Sign::Plus => n,
    };
    let mut i = chi - 1;
    loop {
        let lm = lp + eta(lp as u64)?;
        debug_assert!(lm >= 0);
        left_plus.push(lp as u64);
        left_minus.push(lm as u64);
        total += (lm + lp) as u64;
        if total > budget {
            return Err(WalkError::StepBudgetExceeded { budget });
        }
        if lp == 0 {
            break;
        }
        lp = lm + (0 < i && i - 1 < e) as i64 - (e < i && i < 1) as i64;
        i -= 1;
    }

    let lo = chi - left_plus.len() as i64;
    let mut ell_minus: Vec<u64> = left_minus.into_iter().rev().collect();
    let mut ell_plus: Vec<u64> = left_plus.into_iter().rev().collect();
    ell_minus.extend(right_minus);
    ell_plus.extend(right_plus);
    Ok(LocalTimeProfile::from_counts(*p, lo, ell_minus, ell_plus))
}

/// One profile from the η construction (builds the sampler tables each call).
pub fn profile_via_eta<T: Scalar, R: RngCore + ?Sized>(
    w: &WeightFunction<T>,
    p: &WalkParams,
    rng: &mut R,
) -> Result<LocalTimeProfile, WalkError> {
    RayKnight::new(w)?.profile(p, rng)
}

/// One coupled sample (builds the sampler tables each call).
pub fn coupled_profile<T: Scalar, R: RngCore + ?Sized>(
    w: &WeightFunction<T>,
    p: &WalkParams,
    rng: &mut R,
) -> Result<CoupledSample, WalkError> {
    RayKnight::new(w)?.coupled(p, rng)
}

/// `τ` for the L chain started at `k0`, censored at `cap`.
pub fn l_chain_tau<T: Scalar, R: RngCore + ?Sized>(
    w: &WeightFunction<T>,
    k0: u64,
    rng: &mut R,
    cap: u64,
) -> Result<u64, MeasureError> {
    RayKnight::new(w)?.l_chain_tau(k0, cap, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    fn w() -> WeightFunction<f64> {
        WeightFunction::exponential(1.0, 10).unwrap()
    }

    #[test]
    fn threshold_is_integer_sixth_root() {
        assert_eq!(coupling_threshold(1), 1);
        assert_eq!(coupling_threshold(63), 1);
        assert_eq!(coupling_threshold(64), 2);
        assert_eq!(coupling_threshold(4000), 3);
        assert_eq!(coupling_threshold(4096), 4);
    }

    #[test]
    fn starting_values() {
        let rk = RayKnight::new(&w()).unwrap();
        for (iota, start) in [(Sign::Minus, 10), (Sign::Plus, 9)] {
            let p = WalkParams::new(20, 1.0, 0.5, iota).unwrap();
            let prof = rk.profile(&p, &mut replicate_rng(1, 0, 0)).unwrap();
            assert_eq!(prof.ell_minus_at(p.chi()), start);
        }
    }

    #[test]
    fn recursion_profiles_satisfy_walk_invariants() {
        let rk = RayKnight::new(&w()).unwrap();
        let stepped = RayKnight::new(&w()).unwrap().with_mode(EtaMode::Stepped);
        let mut k = 0;
        for n in [1u64, 4, 20, 60] {
            for x in [1.0, 0.3, 0.0, -0.5, -1.0] {
                for iota in [Sign::Minus, Sign::Plus] {
                    let Ok(p) = WalkParams::new(n, x, 0.5, iota) else {
                        continue;
                    };
                    for _ in 0..20 {
                        k += 1;
                        for sampler in [&rk, &stepped] {
                            let prof = sampler.profile(&p, &mut replicate_rng(5, 0, k)).unwrap();
                            prof.check_invariants()
                                .unwrap_or_else(|e| panic!("{p:?}: {e}"));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coupled_sample_is_consistent() {
        let mut rk = RayKnight::new(&w()).unwrap();
        rk.prepare_coupling(500).unwrap();
        let p = WalkParams::new(500, 1.0, 0.5, Sign::Minus).unwrap();
        let c = rk.coupled(&p, &mut replicate_rng(9, 0, 0)).unwrap();
        c.profile.check_invariants().unwrap();
        assert!(c.zeta.iter().all(|z| (z - 0.5).fract() == 0.0));
        assert!(c.zeta_lo < -(2.0f64 * 500.0) as i64);
        assert!(c.zeta_hi() >= 1000);
        // Where the coupled pair agreed and the chain ran past the threshold,
        // the flag must hold.
        for j in 0..c.zeta.len() {
            if c.coupled[j] && c.demanded[j] >= c.n_threshold {
                assert!(c.match_flags[j]);
            }
        }
        assert!(c
            .to_csv()
            .starts_with("i,ell_minus,ell_plus,zeta,matched\n"));
    }

    #[test]
    fn l_chain_edge_cases() {
        let rk = RayKnight::new(&w()).unwrap();
        let mut rng = replicate_rng(4, 0, 0);
        assert_eq!(rk.l_chain_tau(0, 100, &mut rng).unwrap(), 0);
        assert_eq!(rk.l_chain_tau(1_000_000, 3, &mut rng).unwrap(), 3);
    }
}

use std::collections::BTreeMap;

use super::band::{choose_delta1, choose_delta2};
use super::{Context, ExperimentId, HarnessError, SampleTable, ScaleSummary, Verdict};
use crate::cadlag::{band_entry, m1_whole_upper, BandSpec};
use crate::fields::{
    brownian_path, integrate, limit_grid, sample_limit_field, y_from_zeta, y_pm_exact, y_prime,
    FluctuationParams,
};
use crate::stats::{ks_one_sample, mean, median, normal_cdf, sample_variance, variance_ci};
use crate::walk::Sign;

pub(super) struct Outcome {
    pub scales: Vec<ScaleSummary>,
    pub extra: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub samples: SampleTable,
    pub walk_steps: u64,
}

pub(super) fn default_thresholds(id: ExperimentId) -> BTreeMap<String, f64> {
    use ExperimentId::*;
    let pairs: &[(&str, f64)] = match id {
        E1 => &[("median_max", 0.05)],
        E2 => &[("relative_tolerance", 0.1)],
        E3 => &[("variance_tolerance", 0.15), ("ks_alpha", 0.01)],
        E4 => &[
            ("variance_tolerance", 0.2),
            ("zeta_variance_tolerance", 0.15),
        ],
        E5 => &[("exceed_max", 0.1), ("scale_factor", 3.0)],
        E6 => &[
            ("p_field_min", 0.4),
            ("p_limit_max", 0.3),
            ("near_zero_level", 0.25),
            ("delta2_candidates", 50.0),
            ("delta2_paths", 4000.0),
            ("path_step", 1e-3),
            ("limit_paths", 2000.0),
        ],
        E7 => &[("exceed_max", 0.05), ("exponent", 0.75)],
        E8 => &[("offset_k", 10.0), ("cap", 1e7)],
        E9 => &[
            ("y", 2.0),
            ("steps", 1000.0),
            ("variance_tolerance", 0.05),
            ("ks_alpha", 0.01),
        ],
        E10 => &[("exceed_max", 0.1), ("scale_factor", 5.0)],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub(super) fn run(ctx: &Context) -> Result<Outcome, HarnessError> {
    use ExperimentId::*;
    match ctx.cfg.experiment {
        E1 => triangle(ctx),
        E2 => t_lln(ctx),
        E3 => t_clt(ctx),
        E4 => marginals(ctx),
        E5 => m1_proximity(ctx),
        E6 => j1_obstruction(ctx),
        E7 => hitting(ctx),
        E8 => l_chain(ctx),
        E9 => bm_integral(ctx),
        E10 => t_integral(ctx),
    }
}

impl Outcome {
    fn new(columns: &[&str]) -> Self {
        Self {
            scales: Vec::new(),
            extra: BTreeMap::new(),
            verdicts: Vec::new(),
            samples: SampleTable::new(columns),
            walk_steps: 0,
        }
    }

    fn record(&mut self, n: u64, rows: &[Vec<f64>]) {
        for (rep, r) in rows.iter().enumerate() {
            self.samples.push(n, rep as u64, r.clone());
        }
    }

    fn largest(&self) -> &ScaleSummary {
        self.scales
            .iter()
            .max_by_key(|s| s.n)
            .expect("at least one scale")
    }

    /// `key` at each scale compared with the previous scale.
    fn monotone(&mut self, key: &str, strict: bool) {
        let mut sorted: Vec<&ScaleSummary> = self.scales.iter().collect();
        sorted.sort_by_key(|s| s.n);
        let mut verdicts = Vec::new();
        for w in sorted.windows(2) {
            let (a, b) = (w[0].stat(key), w[1].stat(key));
            let name = format!("{key} N={} vs N={}", w[1].n, w[0].n);
            verdicts.push(if strict {
                Verdict::below(&name, b, a)
            } else {
                Verdict::at_most(&name, b, a)
            });
        }
        self.verdicts.extend(verdicts);
    }
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

fn fraction(v: &[f64]) -> f64 {
    v.iter().filter(|x| **x != 0.0).count() as f64 / v.len() as f64
}

fn fluct_params(ctx: &Context, n: u64) -> Result<FluctuationParams, HarnessError> {
    Ok(FluctuationParams::new(ctx.cfg.walk(n)?, ctx.var_rho)?)
}

/// `(T - N^2 c^2) / N^{3/2}`.
fn t_fluctuation(t: u64, n: u64, c: f64) -> f64 {
    let n = n as f64;
    (t as f64 - n * n * c * c) / n.powf(1.5)
}

fn triangle(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["dev_plus", "dev_minus", "t"]);
    for &n in &ctx.cfg.n_list {
        let p = ctx.cfg.walk(n)?;
        let rows = ctx.replicates(|rep| {
            let prof = ctx.profile(&p, &mut ctx.rng(n, 0, rep))?;
            Ok(vec![
                prof.triangle_deviation(Sign::Plus),
                prof.triangle_deviation(Sign::Minus),
                prof.t as f64,
            ])
        })?;
        out.walk_steps += rows.iter().map(|r| r[2] as u64).sum::<u64>();
        let mut s = ScaleSummary::new(n);
        let (plus, minus) = (column(&rows, 0), column(&rows, 1));
        s.stats.insert("median_dev_plus".into(), median(&plus));
        s.stats.insert("mean_dev_plus".into(), mean(&plus));
        s.stats.insert("median_dev_minus".into(), median(&minus));
        out.record(n, &rows);
        out.scales.push(s);
    }
    out.monotone("median_dev_plus", true);
    let last = out.largest().stat("median_dev_plus");
    out.verdicts.push(Verdict::below(
        "median_dev_plus at largest N",
        last,
        ctx.threshold("median_max"),
    ));
    Ok(out)
}

fn t_lln(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["t_over_n2"]);
    let c = ctx.cfg.x.abs() + 2.0 * ctx.cfg.theta;
    let target = c * c;
    let tol = ctx.threshold("relative_tolerance");
    for &n in &ctx.cfg.n_list {
        let p = ctx.cfg.walk(n)?;
        let rows = ctx.replicates(|rep| {
            let prof = ctx.profile(&p, &mut ctx.rng(n, 0, rep))?;
            Ok((prof.t, vec![prof.t as f64 / (n * n) as f64]))
        })?;
        out.walk_steps += rows.iter().map(|r| r.0).sum::<u64>();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
        let v = column(&rows, 0);
        let mut s = ScaleSummary::new(n);
        s.stats.insert("mean".into(), mean(&v));
        s.stats.insert("sd".into(), sample_variance(&v).sqrt());
        s.stats.insert("target".into(), target);
        out.verdicts.push(Verdict::at_most(
            &format!("|mean / target - 1| N={n}"),
            (mean(&v) / target - 1.0).abs(),
            tol,
        ));
        out.record(n, &rows);
        out.scales.push(s);
    }
    Ok(out)
}

/// `32/3 Var(rho_) ((|x| + theta)^3 + theta^3)`.
pub fn t_limit_variance(var_rho: f64, x: f64, theta: f64) -> f64 {
    32.0 / 3.0 * var_rho * ((x.abs() + theta).powi(3) + theta.powi(3))
}

fn t_clt(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["fluctuation"]);
    let (x, theta) = (ctx.cfg.x, ctx.cfg.theta);
    let c = x.abs() + 2.0 * theta;
    let target = t_limit_variance(ctx.var_rho, x, theta);
    for &n in &ctx.cfg.n_list {
        let p = ctx.cfg.walk(n)?;
        let rows = ctx.replicates(|rep| {
            let prof = ctx.profile(&p, &mut ctx.rng(n, 0, rep))?;
            Ok((prof.t, vec![t_fluctuation(prof.t, n, c)]))
        })?;
        out.walk_steps += rows.iter().map(|r| r.0).sum::<u64>();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
        let v = column(&rows, 0);
        let var = sample_variance(&v);
        let ks = ks_one_sample(&v, normal_cdf(target))?;
        let mut s = ScaleSummary::new(n);
        s.stats.insert("mean".into(), mean(&v));
        s.stats.insert("variance".into(), var);
        s.stats.insert("target_variance".into(), target);
        s.variance_ci
            .insert("fluctuation".into(), variance_ci(&v, 0.95)?);
        s.ks.insert("fluctuation".into(), ks);
        out.verdicts.push(Verdict::at_most(
            &format!("|variance / target - 1| N={n}"),
            (var / target - 1.0).abs(),
            ctx.threshold("variance_tolerance"),
        ));
        out.verdicts.push(Verdict::above(
            &format!("KS p-value N={n}"),
            ks.p_value,
            ctx.threshold("ks_alpha"),
        ));
        out.record(n, &rows);
        out.scales.push(s);
    }
    Ok(out)
}

fn marginals(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&[
        "y_minus_left",
        "y_minus_right",
        "y_plus_left",
        "y_plus_right",
        "y_zeta_left",
        "y_zeta_right",
    ]);
    let (x, theta) = (ctx.cfg.x, ctx.cfg.theta);
    let c = x.abs() + 2.0 * theta;
    let probes = [(x - c) / 2.0, (x + c) / 2.0];
    out.extra.insert("probe_left".into(), probes[0]);
    out.extra.insert("probe_right".into(), probes[1]);
    for &n in &ctx.cfg.n_list {
        let fp = fluct_params(ctx, n)?;
        let rows = ctx.replicates(|rep| {
            let cs = ctx.rk.coupled(&fp.walk, &mut ctx.rng(n, 0, rep))?;
            let minus = y_pm_exact(&cs.profile, Sign::Minus, &fp)?;
            let plus = y_pm_exact(&cs.profile, Sign::Plus, &fp)?;
            let yz = y_from_zeta(&cs.zeta, cs.zeta_lo, &fp)?;
            let mut row = Vec::with_capacity(6);
            for f in [&minus, &plus] {
                row.extend(probes.iter().map(|y| f.eval(*y)));
            }
            row.extend(probes.iter().map(|y| yz.eval(*y)));
            Ok((cs.profile.t, row))
        })?;
        out.walk_steps += rows.iter().map(|r| r.0).sum::<u64>();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
        let mut s = ScaleSummary::new(n);
        let chi = fluct_params(ctx, n)?.walk.chi();
        let nf = n as f64;
        for (k, name) in out.samples.columns.clone().iter().enumerate() {
            let y = probes[k % 2];
            let v = column(&rows, k);
            let target = if k < 4 {
                ctx.var_rho * (y - x).abs()
            } else {
                // Exact number of summed terms.
                let cell = (nf * y).floor() as i64;
                let terms = if cell < chi {
                    chi - 1 - cell
                } else {
                    cell - chi
                };
                ctx.var_rho * terms as f64 / nf
            };
            let var = sample_variance(&v);
            s.stats.insert(format!("{name}_variance"), var);
            s.stats.insert(format!("{name}_target"), target);
            s.variance_ci.insert(name.clone(), variance_ci(&v, 0.95)?);
            let tol = if k < 4 {
                ctx.threshold("variance_tolerance")
            } else {
                ctx.threshold("zeta_variance_tolerance")
            };
            out.verdicts.push(Verdict::at_most(
                &format!("|{name} variance / target - 1| N={n}"),
                (var / target - 1.0).abs(),
                tol,
            ));
        }
        let (l, r) = (column(&rows, 0), column(&rows, 1));
        let (ml, mr) = (mean(&l), mean(&r));
        let cov = l
            .iter()
            .zip(&r)
            .map(|(a, b)| (a - ml) * (b - mr))
            .sum::<f64>()
            / (l.len() as f64 - 1.0);
        s.stats.insert(
            "y_minus_branch_correlation".into(),
            cov / (sample_variance(&l) * sample_variance(&r)).sqrt(),
        );
        out.record(n, &rows);
        out.scales.push(s);
    }
    Ok(out)
}

fn m1_proximity(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["d_minus", "d_plus", "exceed"]);
    let factor = ctx.threshold("scale_factor");
    for &n in &ctx.cfg.n_list {
        let fp = fluct_params(ctx, n)?;
        let level = factor * (n as f64).powf(-1.0 / 12.0);
        let rows = ctx.replicates(|rep| {
            let cs = ctx.rk.coupled(&fp.walk, &mut ctx.rng(n, 0, rep))?;
            let yz = y_from_zeta(&cs.zeta, cs.zeta_lo, &fp)?;
            let dm = m1_whole_upper(&y_pm_exact(&cs.profile, Sign::Minus, &fp)?, &yz)?;
            let dp = m1_whole_upper(&y_pm_exact(&cs.profile, Sign::Plus, &fp)?, &yz)?;
            Ok((
                cs.profile.t,
                vec![dm, dp, (dm.max(dp) > level) as u8 as f64],
            ))
        })?;
        out.walk_steps += rows.iter().map(|r| r.0).sum::<u64>();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
        let mut s = ScaleSummary::new(n);
        let (dm, dp) = (column(&rows, 0), column(&rows, 1));
        s.stats.insert("level".into(), level);
        s.stats
            .insert("exceed_prob".into(), fraction(&column(&rows, 2)));
        s.stats.insert("mean_d_minus".into(), mean(&dm));
        s.stats.insert("mean_d_plus".into(), mean(&dp));
        s.stats.insert(
            "max_d".into(),
            dm.iter().chain(&dp).fold(0.0, |a, b| a.max(*b)),
        );
        s.stats.insert(
            "mean_d".into(),
            mean(
                &dm.iter()
                    .zip(&dp)
                    .map(|(a, b)| a.max(*b))
                    .collect::<Vec<_>>(),
            ),
        );
        out.record(n, &rows);
        out.scales.push(s);
    }
    out.monotone("exceed_prob", false);
    out.monotone("mean_d", true);
    let last = out.largest().stat("exceed_prob");
    out.verdicts.push(Verdict::at_most(
        "exceed_prob at largest N",
        last,
        ctx.threshold("exceed_max"),
    ));
    Ok(out)
}

fn j1_obstruction(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["in_band_minus", "in_band_plus"]);
    let n0 = ctx.cfg.n_list[0];
    let fp = fluct_params(ctx, n0)?;
    let step = ctx.threshold("path_step");
    let delta1 = choose_delta1(&fp);
    let choice = choose_delta2(
        &fp,
        delta1,
        ctx.threshold("near_zero_level"),
        ctx.threshold("delta2_paths") as u64,
        step,
        ctx.threshold("delta2_candidates") as usize,
        ctx.cfg.master_seed,
        ctx.tag(0, 1),
    );
    let band = BandSpec::new(choice.delta1, choice.delta2, fp.reach())?;
    out.extra.insert("delta1".into(), choice.delta1);
    out.extra.insert("delta2".into(), choice.delta2);
    out.extra.insert("center".into(), band.center);
    out.extra.insert("near_zero_prob".into(), choice.near_zero);
    out.extra
        .insert("delta2_fallback".into(), choice.fallback as u8 as f64);

    let grid = limit_grid(&fp, step);
    let limit_paths = ctx.threshold("limit_paths") as u64;
    let hits: Vec<f64> = {
        use rayon::prelude::*;
        (0..limit_paths)
            .into_par_iter()
            .map(|k| {
                let s = sample_limit_field(&fp, &grid, &mut ctx.rng(0, 2, k));
                Ok(band_entry(&s.to_polyline()?, &band) as u8 as f64)
            })
            .collect::<Result<_, HarnessError>>()?
    };
    let p_limit = fraction(&hits);
    out.extra.insert("p_limit".into(), p_limit);

    for &n in &ctx.cfg.n_list {
        let fp = fluct_params(ctx, n)?;
        let rows = ctx.replicates(|rep| {
            let prof = ctx.profile(&fp.walk, &mut ctx.rng(n, 0, rep))?;
            let mut row = Vec::with_capacity(2);
            for sign in [Sign::Minus, Sign::Plus] {
                row.push(band_entry(&y_pm_exact(&prof, sign, &fp)?, &band) as u8 as f64);
            }
            Ok((prof.t, row))
        })?;
        out.walk_steps += rows.iter().map(|r| r.0).sum::<u64>();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
        let mut s = ScaleSummary::new(n);
        s.stats
            .insert("p_minus".into(), fraction(&column(&rows, 0)));
        s.stats.insert("p_plus".into(), fraction(&column(&rows, 1)));
        out.record(n, &rows);
        out.scales.push(s);
    }
    let last = out.largest().clone();
    let p_min = last.stat("p_minus").min(last.stat("p_plus"));
    out.verdicts.push(Verdict::at_least(
        "min(P(Y^- in band), P(Y^+ in band)) at largest N",
        p_min,
        ctx.threshold("p_field_min"),
    ));
    out.verdicts.push(Verdict::at_most(
        "P(limit in band)",
        p_limit,
        ctx.threshold("p_limit_max"),
    ));
    Ok(out)
}

fn hitting(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["i_plus_gap", "i_minus_gap"]);
    let c = ctx.cfg.x.abs() + 2.0 * ctx.cfg.theta;
    let exponent = ctx.threshold("exponent");
    for &n in &ctx.cfg.n_list {
        let p = ctx.cfg.walk(n)?;
        let nf = n as f64;
        let rows = ctx.replicates(|rep| {
            let prof = ctx.profile(&p, &mut ctx.rng(n, 0, rep))?;
            Ok((
                prof.t,
                vec![
                    (prof.i_plus as f64 - c * nf).abs(),
                    (prof.i_minus as f64 + c * nf).abs(),
                ],
            ))
        })?;
        out.walk_steps += rows.iter().map(|r| r.0).sum::<u64>();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
        let level = nf.powf(exponent);
        let mut s = ScaleSummary::new(n);
        s.stats.insert("level".into(), level);
        for (k, side) in ["plus", "minus"].iter().enumerate() {
            let v = column(&rows, k);
            let p = v.iter().filter(|g| **g >= level).count() as f64 / v.len() as f64;
            s.stats.insert(format!("exceed_{side}"), p);
            s.stats.insert(format!("mean_gap_{side}"), mean(&v));
            out.verdicts.push(Verdict::at_most(
                &format!(
                    "P(|I{} gap| >= N^{exponent}) N={n}",
                    if k == 0 { "+" } else { "-" }
                ),
                p,
                ctx.threshold("exceed_max"),
            ));
        }
        out.record(n, &rows);
        out.scales.push(s);
    }
    Ok(out)
}

fn l_chain(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["tau"]);
    let offset = ctx.threshold("offset_k");
    let cap = ctx.threshold("cap") as u64;
    for &k in &ctx.cfg.n_list {
        let rows = ctx.replicates(|rep| {
            Ok(vec![
                ctx.rk.l_chain_tau(k, cap, &mut ctx.rng(k, 0, rep))? as f64
            ])
        })?;
        let v = column(&rows, 0);
        let mut s = ScaleSummary::new(k);
        s.stats.insert("mean_tau".into(), mean(&v));
        s.stats.insert("sd_tau".into(), sample_variance(&v).sqrt());
        s.stats.insert(
            "censored".into(),
            v.iter().filter(|t| **t >= cap as f64).count() as f64,
        );
        s.stats.insert("bound".into(), 3.0 * k as f64 + offset);
        out.verdicts.push(Verdict::at_most(
            &format!("mean tau k={k}"),
            mean(&v),
            3.0 * k as f64 + offset,
        ));
        out.record(k, &rows);
        out.scales.push(s);
    }
    Ok(out)
}

fn bm_integral(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["integral"]);
    let y = ctx.threshold("y");
    let steps = ctx.threshold("steps") as usize;
    let target = y.powi(3) / 3.0;
    let rows = ctx.replicates(|rep| {
        let path = brownian_path(y, steps, &mut ctx.rng(steps as u64, 0, rep));
        Ok(vec![integrate(&path, 0.0, y)?])
    })?;
    let v = column(&rows, 0);
    let var = sample_variance(&v);
    let ks = ks_one_sample(&v, normal_cdf(target))?;
    let mut s = ScaleSummary::new(steps as u64);
    s.stats.insert("mean".into(), mean(&v));
    s.stats.insert("variance".into(), var);
    s.stats.insert("target_variance".into(), target);
    s.variance_ci
        .insert("integral".into(), variance_ci(&v, 0.95)?);
    s.ks.insert("integral".into(), ks);
    out.verdicts.push(Verdict::at_most(
        "|variance / target - 1|",
        (var / target - 1.0).abs(),
        ctx.threshold("variance_tolerance"),
    ));
    out.verdicts.push(Verdict::above(
        "KS p-value",
        ks.p_value,
        ctx.threshold("ks_alpha"),
    ));
    out.record(steps as u64, &rows);
    out.scales.push(s);
    Ok(out)
}

fn t_integral(ctx: &Context) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new(&["fluctuation", "twice_integral", "exceed"]);
    let factor = ctx.threshold("scale_factor");
    for &n in &ctx.cfg.n_list {
        let fp = fluct_params(ctx, n)?;
        let c = fp.reach();
        let level = factor * c * (n as f64).powf(-1.0 / 12.0);
        let rows = ctx.replicates(|rep| {
            let cs = ctx.rk.coupled(&fp.walk, &mut ctx.rng(n, 0, rep))?;
            let fluct = t_fluctuation(cs.profile.t, n, c);
            let twice = 2.0 * integrate(&y_prime(&cs.zeta, cs.zeta_lo, &fp)?, -c, c)?;
            Ok((
                cs.profile.t,
                vec![fluct, twice, ((fluct - twice).abs() > level) as u8 as f64],
            ))
        })?;
        out.walk_steps += rows.iter().map(|r| r.0).sum::<u64>();
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
        let (f, i) = (column(&rows, 0), column(&rows, 1));
        let gaps: Vec<f64> = f.iter().zip(&i).map(|(a, b)| (a - b).abs()).collect();
        let mut s = ScaleSummary::new(n);
        s.stats.insert("level".into(), level);
        s.stats
            .insert("exceed_prob".into(), fraction(&column(&rows, 2)));
        s.stats.insert("mean_gap".into(), mean(&gaps));
        s.stats.insert("median_gap".into(), median(&gaps));
        s.stats
            .insert("integral_variance".into(), sample_variance(&i));
        s.stats.insert(
            "integral_target_variance".into(),
            t_limit_variance(ctx.var_rho, fp.walk.x, fp.walk.theta),
        );
        out.record(n, &rows);
        out.scales.push(s);
    }
    let last = out.largest().stat("exceed_prob");
    out.verdicts.push(Verdict::at_most(
        "exceed_prob at largest N",
        last,
        ctx.threshold("exceed_max"),
    ));
    Ok(out)
}

use srwlab::measures::WeightFunction;
use srwlab::ray_knight::{EtaMode, RayKnight};
use srwlab::replicate_rng;
use srwlab::stats::ks_two_sample;
use srwlab::walk::{simulate_to_t, Sign, WalkParams};

fn marginals(p: &WalkParams, probes: &[i64], reps: u64, eta: Option<&RayKnight>) -> Vec<Vec<f64>> {
    let w = WeightFunction::exponential(1.0, 10).unwrap();
    let mut out = vec![Vec::new(); probes.len() + 1];
    for r in 0..reps {
        let mut rng = replicate_rng(77, eta.is_some() as u64, r);
        let prof = match eta {
            Some(rk) => rk.profile(p, &mut rng).unwrap(),
            None => simulate_to_t(&w, p, &mut rng).unwrap(),
        };
        for (k, &i) in probes.iter().enumerate() {
            out[k].push(prof.ell_minus_at(i) as f64);
        }
        out[probes.len()].push(prof.t as f64);
    }
    out
}

fn check(p: WalkParams, probes: &[i64], reps: u64, mode: EtaMode) {
    let w = WeightFunction::exponential(1.0, 10).unwrap();
    let rk = RayKnight::new(&w).unwrap().with_mode(mode);
    let direct = marginals(&p, probes, reps, None);
    let eta = marginals(&p, probes, reps, Some(&rk));
    let alpha = 0.01 / direct.len() as f64;
    for (k, (a, b)) in direct.iter().zip(&eta).enumerate() {
        let ks = ks_two_sample(a, b).unwrap();
        assert!(ks.p_value > alpha, "{p:?} probe {k}: {ks:?}");
    }
}

#[test]
fn positive_x_both_signs() {
    for iota in [Sign::Minus, Sign::Plus] {
        let p = WalkParams::new(20, 1.0, 0.5, iota).unwrap();
        check(p, &[-30, -10, 5, 10, 20, 30], 4000, EtaMode::Dyadic);
    }
}

#[test]
fn negative_and_zero_x() {
    for (x, iota) in [
        (-0.5, Sign::Minus),
        (-0.5, Sign::Plus),
        (0.0, Sign::Minus),
        (0.0, Sign::Plus),
    ] {
        let p = WalkParams::new(20, x, 0.5, iota).unwrap();
        check(p, &[-25, -10, -5, 0, 5, 15], 4000, EtaMode::Dyadic);
    }
}

#[test]
fn stepped_chains_agree() {
    let p = WalkParams::new(16, 1.0, 0.5, Sign::Minus).unwrap();
    check(p, &[-20, -5, 8, 16, 25], 3000, EtaMode::Stepped);
}

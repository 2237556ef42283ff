mod common;

use common::{corpus, table_one};
use dualdiv::barrier_value::{extend_above_barrier, resample, solve_vb_fredholm, solve_vb_ode, vb_via_duality};
use dualdiv::model::TabulatedDensity;
use dualdiv::optimal_barrier::{check_existence, Probe};
use dualdiv::*;
use proptest::prelude::*;

const BETA: f64 = 30.0;

fn beta_star(params: &ModelParams) -> f64 {
    find_beta_star(params, &SearchOptions::default()).unwrap().beta_star
}

#[test]
fn fredholm_converges_at_second_order() {
    let params = table_one(2.0);
    let reference = resample(&solve_vb_ode(&params, BETA, BETA / 8000.0).unwrap(), 50).unwrap();
    let errors: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| {
            let v = resample(&solve_vb_fredholm(&params, BETA, n).unwrap(), 50).unwrap();
            v.relative_sup_distance(&reference).unwrap()
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..2.3).contains(&order), "errors {errors:?}");
    }
}

#[test]
fn tabulated_exponential_gains_match_the_closed_form() {
    let mu = 0.05;
    let knots = (0..=4000).map(|i| {
        let z = i as f64 * 0.25;
        (z, mu * (-mu * z).exp())
    });
    let jumps = JumpLaw::Tabulated(TabulatedDensity::new(knots.collect()).unwrap());
    let tabulated = ModelParams::new(0.1, 0.1, CostFunction::p1(2.0), jumps);
    let exact = ModelParams::exponential(CostFunction::p1(2.0), 0.1, 0.1, mu);
    assert_eq!(barrier_value::applicable_methods(&tabulated), [Method::Fredholm, Method::Duality]);
    let a = resample(&solve_vb_fredholm(&tabulated, 15.0, 400).unwrap(), 60).unwrap();
    let b = resample(&solve_vb_ode(&exact, 15.0, 15.0 / 4000.0).unwrap(), 60).unwrap();
    assert!(a.relative_sup_distance(&b).unwrap() < 1e-3);
}

#[test]
fn optimal_barrier_decreases_with_discount_and_gain_rate() {
    let p1 = |q: f64, mu: f64| ModelParams::exponential(CostFunction::p1(2.0), 0.1, q, mu);
    let in_q: Vec<f64> = [0.08, 0.1, 0.12, 0.15].iter().map(|&q| beta_star(&p1(q, 0.01))).collect();
    let in_mu: Vec<f64> = [0.007, 0.01, 0.015, 0.02].iter().map(|&mu| beta_star(&p1(0.1, mu))).collect();
    assert!(in_q.windows(2).all(|w| w[1] < w[0]), "{in_q:?}");
    assert!(in_mu.windows(2).all(|w| w[1] < w[0]), "{in_mu:?}");
}

#[test]
fn optimal_barrier_lies_inside_the_existence_bracket() {
    for cost in [CostFunction::p1(2.0), CostFunction::p2(2.0), CostFunction::p3(3.0)] {
        let params = ModelParams::exponential(cost, 0.1, 0.1, 0.01);
        let existence = check_existence(&params, &Probe::default());
        let (lo, hi) = existence.bracket.expect("hypotheses hold");
        let report = find_beta_star(&params, &SearchOptions::default()).unwrap();
        assert!(lo < report.beta_star && report.beta_star < hi, "{report:?}");
        assert!(report.certificate.unwrap().holds);
    }
}

#[test]
fn value_above_the_barrier_pays_the_excess() {
    let params = table_one(2.0);
    let sol = solve_vb_ode(&params, BETA, BETA / 4000.0).unwrap();
    let vb = sol.value_at(BETA).unwrap();
    assert!((extend_above_barrier(&sol, BETA + 10.0).unwrap() - (vb + 10.0)).abs() < 1e-12);
    let est = estimate_value(&params, BETA, BETA + 10.0, &SimConfig::new(40_000, 5)).unwrap();
    assert!(est.within(vb + 10.0, 3.0), "{est:?} vs {}", vb + 10.0);
}

#[test]
fn standard_error_shrinks_like_inverse_root_paths() {
    let params = table_one(2.0);
    let points: Vec<(f64, f64)> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&n| {
            let est = estimate_value(&params, BETA, 10.0, &SimConfig::new(n, 11)).unwrap();
            ((n as f64).ln(), est.stderr.ln())
        })
        .collect();
    let slope = (points[2].1 - points[0].1) / (points[2].0 - points[0].0);
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn doubling_the_horizon_moves_the_estimate_within_the_bias_bound() {
    let params = table_one(2.0);
    let short = SimConfig { horizon: Some(15.0), ..SimConfig::new(20_000, 3) };
    let long = SimConfig { horizon: Some(30.0), ..SimConfig::new(20_000, 3) };
    let a = estimate_value(&params, BETA, 10.0, &short).unwrap();
    let b = estimate_value(&params, BETA, 10.0, &long).unwrap();
    assert!(b.mean >= a.mean);
    assert!(b.mean - a.mean <= a.bias_bound, "{a:?} {b:?}");
    assert!(b.bias_bound < a.bias_bound);
}

#[test]
fn simulation_is_reproducible_for_a_seed() {
    let params = table_one(2.0);
    let cfg = SimConfig::new(500, 99);
    assert_eq!(estimate_value(&params, BETA, 7.0, &cfg).unwrap(), estimate_value(&params, BETA, 7.0, &cfg).unwrap());
}

#[test]
fn corpus_values_are_increasing_and_bounded() {
    for point in corpus(7, 12) {
        let p = &point.params;
        let sol = vb_via_duality(p, point.beta, point.beta / 2000.0).unwrap();
        let v = sol.v.values();
        assert_eq!(v[0], 0.0);
        assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{p:?}");
        let bound = p.mean_gain_rate() / p.q;
        assert!(sol.v.xs().zip(v).all(|(x, &y)| y <= x + bound), "{p:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn methods_agree_on_random_parameters(
        c in 1.0..4.0_f64,
        kind in 0..3_usize,
        lambda in 0.05..0.2_f64,
        q in 0.05..0.2_f64,
        mu in 0.01..0.05_f64,
        beta in 3.0..40.0_f64,
    ) {
        let cost = [CostFunction::p1(c), CostFunction::p2(c), CostFunction::p3(c)][kind].clone();
        let params = ModelParams::exponential(cost, lambda, q, mu);
        let ode = resample(&solve_vb_ode(&params, beta, beta / 2000.0).unwrap(), 40).unwrap();
        let dual = resample(&vb_via_duality(&params, beta, beta / 2000.0).unwrap(), 40).unwrap();
        prop_assert!(dual.relative_sup_distance(&ode).unwrap() < 1e-3);
        prop_assert_eq!(ode.first(), 0.0);
    }

    #[test]
    fn gamma_is_positive_and_finite(c in 1.0..4.0_f64, beta in 0.5..60.0_f64) {
        let g = gamma(&table_one(c), beta).unwrap();
        prop_assert!(g.is_finite() && g > 0.0);
    }
}

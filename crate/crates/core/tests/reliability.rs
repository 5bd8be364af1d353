use approx::assert_abs_diff_eq;
use ariel_core::reliability::{
    self, alpha_chain, crosspoint_tmr_alpha, crosspoint_tmr_simplex, crosspoint_tmr_spare_simplex, evaluate, intersection_tmr_alpha_simplex, spare_chain,
    tmr, tmr_alpha, tmr_spare, MarkovChain, Model, ReliabilityParams, SPARE_USEFUL,
};
use proptest::prelude::*;

fn params(l: f64, c: f64, t: f64, r: f64) -> ReliabilityParams {
    ReliabilityParams { lambda_fail: l, coverage_c: c, transient_t: t, recover_r: r }
}

fn grid(lambda: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| 5.0 / lambda * i as f64 / (points - 1) as f64).collect()
}

#[test]
fn tmr_crosses_simplex_at_one_half() {
    let c = crosspoint_tmr_simplex();
    assert!((tmr(c) - c).abs() < 1e-9);
    assert!(tmr(0.6) > 0.6);
    assert!(tmr(0.4) < 0.4);
}

#[test]
fn spare_crosspoint_with_full_coverage() {
    let r = crosspoint_tmr_spare_simplex(1.0).unwrap();
    assert_abs_diff_eq!(r, 0.2324, epsilon = 5e-4);
    assert!((tmr_spare(r, 1.0) - r).abs() < 1e-8);
}

#[test]
fn spare_closed_form_matches_markov() {
    for c in [0.0, 0.3, 0.9, 1.0] {
        let p = params(1e-3, c, 0.0, 0.0);
        let g = grid(p.lambda_fail, 101);
        let chain = spare_chain(&p).unwrap().sum_curve(&g, &SPARE_USEFUL).unwrap();
        for (&t, &m) in g.iter().zip(&chain.values) {
            let cf = evaluate(Model::TmrSpare, &p, t).unwrap();
            assert!((cf - m).abs() < 1e-6, "C={c} t={t}: {cf} vs {m}");
        }
    }
}

#[test]
fn alpha_closed_form_matches_markov() {
    for (t, r) in [(0.0, 0.0), (0.5, 0.5), (0.9, 0.8), (1.0, 0.3)] {
        let p = params(2e-3, 1.0, t, r);
        let g = grid(p.lambda_fail, 101);
        let chain = alpha_chain(&p).unwrap().sum_curve(&g, &["3", "2"]).unwrap();
        for (&x, &m) in g.iter().zip(&chain.values) {
            let cf = evaluate(Model::TmrAlpha, &p, x).unwrap();
            assert!((cf - m).abs() < 1e-6, "T={t} R={r} t={x}: {cf} vs {m}");
        }
    }
}

#[test]
fn tmr_is_alpha_without_transients() {
    let p = ReliabilityParams::new(1e-2);
    for i in 0..50 {
        let t = i as f64 * 10.0;
        assert_abs_diff_eq!(evaluate(Model::Tmr, &p, t).unwrap(), evaluate(Model::TmrAlpha, &p, t).unwrap(), epsilon = 1e-12);
    }
}

#[test]
fn alpha_rewrites_agree() {
    let p = params(1e-3, 1.0, 0.7, 0.6);
    for i in 0..200 {
        let t = i as f64 * 25.0;
        let simplex = evaluate(Model::Simplex, &p, t).unwrap();
        assert_abs_diff_eq!(tmr_alpha(simplex, 0.6, 0.7), evaluate(Model::TmrAlpha, &p, t).unwrap(), epsilon = 1e-12);
    }
}

#[test]
fn spare_dominates_tmr_on_grid() {
    for i in 1..=100 {
        let c = i as f64 / 100.0;
        for j in 0..100 {
            let r = j as f64 / 99.0;
            assert!(tmr_spare(r, c) >= tmr(r) - 1e-15, "C={c} R={r}");
        }
    }
}

#[test]
fn alpha_crosspoints() {
    assert_abs_diff_eq!(crosspoint_tmr_alpha(0.0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
    let k = 1.0 - 0.5 * 0.6;
    let r = crosspoint_tmr_alpha(0.5, 0.6).unwrap();
    assert_abs_diff_eq!(tmr_alpha(r, 0.5, 0.6), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(r.powf(k), 0.5, epsilon = 1e-12);
    let x = intersection_tmr_alpha_simplex(0.5, 0.6).unwrap();
    assert!((tmr_alpha(x, 0.5, 0.6) - x).abs() < 1e-9);
    assert!(x < 0.5);
    assert!(crosspoint_tmr_alpha(1.0, 1.0).is_err());
}

#[test]
fn invalid_parameters_rejected() {
    assert!(evaluate(Model::Tmr, &ReliabilityParams::new(0.0), 1.0).is_err());
    assert!(evaluate(Model::Tmr, &ReliabilityParams::new(-1.0), 1.0).is_err());
    assert!(evaluate(Model::Tmr, &params(1.0, 1.5, 0.0, 0.0), 1.0).is_err());
    assert!(evaluate(Model::Tmr, &ReliabilityParams::new(1.0), -1.0).is_err());
    assert!(crosspoint_tmr_spare_simplex(2.0).is_err());
    assert!(reliability::bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9).is_err());
    assert!("tmr-spare".parse::<Model>().is_ok());
    assert!("quad".parse::<Model>().is_err());
}

#[test]
fn chain_rejects_bad_rates() {
    let mut m = MarkovChain::new(&["a", "b"], "a");
    assert!(m.add_rate("a", "b", -1.0).is_err());
    assert!(m.add_rate("a", "zz", 1.0).is_err());
}

#[test]
fn curve_spans_interval() {
    let c = reliability::curve(Model::Simplex, &ReliabilityParams::new(1.0), 2.0, 5).unwrap();
    assert_eq!(c.t, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    assert_abs_diff_eq!(c.values[4], (-2.0f64).exp(), epsilon = 1e-15);
}

proptest! {
    #[test]
    fn probabilities_conserved(l in 1e-4f64..1e-1, c in 0.0f64..=1.0, t in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let p = params(l, c, t, r);
        let g = grid(l, 21);
        for chain in [spare_chain(&p).unwrap(), alpha_chain(&p).unwrap()] {
            for probs in chain.solve(&g).unwrap() {
                let s: f64 = probs.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
                prop_assert!(probs.iter().all(|&x| x > -1e-12 && x < 1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn curves_stay_in_unit_interval(l in 1e-4f64..1.0, c in 0.0f64..=1.0, t in 0.0f64..=1.0, r in 0.0f64..=1.0, x in 0.0f64..1e4) {
        let p = params(l, c, t, r);
        for m in [Model::Simplex, Model::Tmr, Model::TmrSpare, Model::TmrAlpha] {
            let v = evaluate(m, &p, x).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v), "{:?} = {}", m, v);
        }
    }

    #[test]
    fn alpha_never_worse_than_tmr(l in 1e-4f64..1e-1, t in 0.01f64..0.99, r in 0.01f64..0.99, x in 0.0f64..1e3) {
        let p = params(l, 1.0, t, r);
        prop_assert!(evaluate(Model::TmrAlpha, &p, x).unwrap() >= evaluate(Model::Tmr, &p, x).unwrap() - 1e-12);
    }
}

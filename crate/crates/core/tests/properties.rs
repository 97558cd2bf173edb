use proptest::prelude::*;

use mslevy::charfn::{cf_lf_joint, cf_li_joint, cf_li_marginal, CfQuery};
use mslevy::decomp::{self, Block, SimplePredictable};
use mslevy::localize;
use mslevy::series::{self, draw_series, TimeGrid};
use mslevy::stable::{c_alpha, c_alpha_closed_form, stable_cf, NormTable, StableParams};
use mslevy::{AlphaFunction, AlphaKind};

fn exponent() -> impl Strategy<Value = AlphaFunction> {
    prop_oneof![
        (0.2f64..1.9).prop_map(|a| AlphaFunction::constant(a, 1.0).unwrap()),
        (0.3f64..1.2, 0.0f64..0.6).prop_map(|(a0, a1)| AlphaFunction::affine(a0, a1, 1.0).unwrap()),
        (0.5f64..1.5, 0.0f64..0.4, 0.1f64..3.0, -3.0f64..3.0)
            .prop_map(|(m, a, fr, ph)| AlphaFunction::sinusoidal(m, a, fr, ph, 1.0).unwrap()),
    ]
}

fn query(max_m: usize) -> impl Strategy<Value = CfQuery> {
    prop::collection::vec((0.0f64..=1.0, -3.0f64..3.0), 1..=max_m)
        .prop_map(|v| CfQuery::new(v.iter().map(|p| p.0).collect(), v.iter().map(|p| p.1).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponent_stays_in_declared_bounds(f in exponent()) {
        let (c, d) = f.bounds();
        for k in 0..=10_000 {
            let a = f.value(k as f64 / 10_000.0);
            prop_assert!(a >= c && a <= d);
        }
    }

    #[test]
    fn derivative_matches_central_difference(f in exponent(), k in 1usize..999) {
        let t = k as f64 / 1000.0;
        let h = 1e-5;
        let fd = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
        let d = f.eval_deriv(t).unwrap();
        prop_assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()));
    }

    #[test]
    fn normalisation_routes_agree(u in 0.05f64..1.95) {
        let q = c_alpha(u).unwrap();
        let c = c_alpha_closed_form(u).unwrap();
        prop_assert!((q - c).abs() < 1e-8);
        prop_assert!((NormTable::ln_c(u) - c.ln()).abs() < 1e-9);
    }

    #[test]
    fn stable_cf_decreases_in_theta_and_time(a in 0.1f64..1.99, t in 0.01f64..3.0, x in 0.0f64..5.0, dx in 0.01f64..1.0) {
        let p = StableParams::new(a, t).unwrap();
        let q = StableParams::new(a, t + 0.1).unwrap();
        prop_assert!(stable_cf(p, x + dx) <= stable_cf(p, x));
        prop_assert!(stable_cf(p, -x) == stable_cf(p, x));
        prop_assert!(stable_cf(q, x) <= stable_cf(p, x));
    }

    #[test]
    fn li_cf_is_real_and_bounded(f in exponent(), q in query(4)) {
        let r = cf_li_joint(&f, &q).unwrap();
        prop_assert_eq!(r.value.im, 0.0);
        prop_assert!(r.value.re >= 0.0 && r.value.re <= 1.0);
    }

    #[test]
    fn li_marginal_is_non_increasing_in_time(f in exponent(), theta in -4.0f64..4.0) {
        let mut prev = 1.0;
        for k in 0..=40 {
            let v = cf_li_marginal(&f, k as f64 / 40.0, theta).unwrap().value.re;
            prop_assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), f in exponent()) {
        let grid = TimeGrid::uniform(1.0, 33).unwrap();
        let a = series::simulate_lf_fkl(&draw_series(seed, 300, 1.0).unwrap(), &f, &grid).unwrap();
        let b = series::simulate_lf_fkl(&draw_series(seed, 300, 1.0).unwrap(), &f, &grid).unwrap();
        prop_assert_eq!(a.values, b.values);
    }

    #[test]
    fn li_path_jumps_by_its_terms(seed in any::<u64>(), f in exponent()) {
        let draw = draw_series(seed, 200, 1.0).unwrap();
        let mut pts: Vec<f64> = draw.locations().to_vec();
        pts.push(0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let grid = TimeGrid::new(pts, 1.0).unwrap();
        let path = series::simulate_li_fkl(&draw, &f, &grid).unwrap();
        let (jumps, q) = series::li_jumps(&draw, &f);
        for (i, &v) in draw.locations().iter().enumerate() {
            let k = grid.index_of(v).unwrap();
            let step = path.values[k] - if k == 0 { 0.0 } else { path.values[k - 1] };
            prop_assert_eq!(step, jumps[i]);
            let term = NormTable::term(f.value(v), draw.arrivals()[i].ln());
            prop_assert!((jumps[i].abs() - term).abs() <= q);
        }
    }

    #[test]
    fn constant_exponent_collapses_fields(seed in any::<u64>(), a in 0.2f64..1.9) {
        let f = AlphaFunction::constant(a, 1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 65).unwrap();
        let draw = draw_series(seed, 400, 1.0).unwrap();
        prop_assert_eq!(
            series::simulate_lf_fkl(&draw, &f, &grid).unwrap().values,
            series::simulate_li_fkl(&draw, &f, &grid).unwrap().values
        );
    }

    #[test]
    fn splits_reconstruct_li_exactly(seed in any::<u64>(), f in exponent()) {
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let draw = draw_series(seed, 500, 1.0).unwrap();
        let li = series::simulate_li_fkl(&draw, &f, &grid).unwrap();
        let mag = decomp::decompose_li_magnitude(&draw, &f, &grid).unwrap();
        let alt = decomp::decompose_li_alternate(&draw, &f, &grid).unwrap();
        prop_assert_eq!(mag.total(), li.values.clone());
        prop_assert_eq!(alt.total(), li.values);
        let (c, _) = f.bounds();
        prop_assert!(alt.a_terms.iter().all(|&i| ((i + 1) as f64) < 1.0 / c));
        prop_assert!(decomp::max_m_jump(&draw, &f) <= decomp::magnitude_split_jump_bound(&f));
    }

    #[test]
    fn simple_integral_is_linear_in_xi(seed in any::<u64>(), xi in -1.0f64..1.0, s in 0usize..10, len in 1usize..10) {
        let f = AlphaFunction::affine(1.2, 0.3, 1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 21).unwrap();
        let path = series::simulate_lf_fkl(&draw_series(seed, 200, 1.0).unwrap(), &f, &grid).unwrap();
        let (a, b) = (grid.points()[s], grid.points()[s + len]);
        let unit = SimplePredictable::new(0.0, vec![Block { s: a, t: b, xi: 1.0 }]).unwrap();
        let scaled = SimplePredictable::new(0.0, vec![Block { s: a, t: b, xi }]).unwrap();
        let i1 = decomp::simple_predictable_integral(&path, &unit).unwrap();
        let ix = decomp::simple_predictable_integral(&path, &scaled).unwrap();
        prop_assert!((ix - xi * i1).abs() <= 1e-12 * i1.abs().max(1.0));
    }

    #[test]
    fn levy_measure_is_symmetric(f in exponent(), x in 0.0f64..=1.0, z in 0.01f64..10.0) {
        prop_assert_eq!(decomp::levy_measure_li(&f, x, z).unwrap(), decomp::levy_measure_li(&f, x, -z).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lf_cf_is_real_and_bounded(f in exponent(), q in query(3)) {
        let r = cf_lf_joint(&f, &q).unwrap();
        prop_assert_eq!(r.value.im, 0.0);
        prop_assert!(r.value.re >= 0.0 && r.value.re <= 1.0);
    }

    #[test]
    fn lf_marginal_matches_fixed_time_law(f in exponent(), t in 0.0f64..=1.0, theta in -3.0f64..3.0) {
        let got = cf_lf_joint(&f, &CfQuery::marginal(t, theta).unwrap()).unwrap().value.re;
        let want = (-t * theta.abs().powf(f.value(t))).exp();
        prop_assert!((got - want).abs() < 1e-6);
    }

    #[test]
    fn lf_equals_li_at_constant_exponent(a in 0.3f64..1.9, q in query(3)) {
        let f = AlphaFunction::constant(a, 1.0).unwrap();
        let lf = cf_lf_joint(&f, &q).unwrap().value.re;
        let li = cf_li_joint(&f, &q).unwrap().value.re;
        prop_assert!((lf - li).abs() < 1e-8);
    }

    #[test]
    fn field_drift_matches_its_closed_form(seed in any::<u64>(), a0 in 0.6f64..1.3, a1 in -0.4f64..0.4) {
        let f = AlphaFunction::new(AlphaKind::Affine { a0, a1 }, 1.0, None).unwrap();
        let grid = TimeGrid::uniform(1.0, 40).unwrap();
        let draw = draw_series(seed, 300, 1.0).unwrap();
        let drift = decomp::compute_a_field(&draw, &f, &grid).unwrap();
        let closed = decomp::a_field_closed_form(&draw, &f, &grid).unwrap();
        for (x, y) in drift.values.iter().zip(&closed) {
            prop_assert!((x - y).abs() <= 1e-8 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn rescaled_log_cf_ratio_tends_to_one(a0 in 0.5f64..1.3, a1 in -0.5f64..0.5, theta in 0.1f64..5.0) {
        let f = AlphaFunction::new(AlphaKind::Affine { a0, a1 }, 1.0, None).unwrap();
        let r = localize::li_rescaled_log_cf_ratio(&f, 0.5, 1e-4, 1.0, theta).unwrap();
        prop_assert!((r - 1.0).abs() < 1e-3);
    }
}

use mslevy::charfn::{self, McSettings};
use mslevy::decomp;
use mslevy::rng::{path_seed, stream};
use mslevy::series::{self, draw_series, ProcessKind, TimeGrid};
use mslevy::stable::{sample_stable_oracle, NormTable};
use mslevy::{stats, AlphaFunction};

fn affine() -> AlphaFunction {
    AlphaFunction::affine(1.2, 0.3, 1.0).unwrap()
}

#[test]
fn constant_exponent_marginals_match_the_oracle() {
    let f = AlphaFunction::constant(1.6, 1.0).unwrap();
    let grid = TimeGrid::new(vec![1.0], 1.0).unwrap();
    let (li, lf): (Vec<f64>, Vec<f64>) = series::simulate_many(21, 10_000, |s| {
        let d = draw_series(s, 3000, 1.0)?;
        Ok((
            series::simulate_li_fkl(&d, &f, &grid)?.values[0],
            series::simulate_lf_fkl(&d, &f, &grid)?.values[0],
        ))
    })
    .unwrap()
    .into_iter()
    .unzip();
    assert_eq!(li, lf);
    let mut rng = stream(22, 0);
    let oracle: Vec<f64> = (0..10_000)
        .map(|_| sample_stable_oracle(1.6, 1.0, &mut rng).unwrap())
        .collect();
    let ks = stats::ks_two_sample(&li, &oracle).unwrap();
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let f = affine();
    let grid = TimeGrid::uniform(1.0, 17).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                series::simulate_many(5, 64, |s| {
                    series::simulate_lf_fkl(&draw_series(s, 500, 1.0)?, &f, &grid)
                })
                .unwrap()
                .into_iter()
                .map(|p| p.values)
                .collect::<Vec<_>>()
            })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn truncation_tail_respects_bound_on_the_event() {
    let f = AlphaFunction::constant(0.8, 1.0).unwrap();
    let n = 256;
    let bound = series::truncation_tail_bound(n, f.bounds(), 1.0).unwrap();
    let mut checked = 0;
    for k in 0..50 {
        let draw = draw_series(path_seed(31, k), 8192, 1.0).unwrap();
        if !series::tail_event_holds(&draw, n) {
            continue;
        }
        checked += 1;
        let tail: f64 = draw.arrivals()[n..]
            .iter()
            .zip(&draw.locations()[n..])
            .map(|(g, v)| NormTable::term(f.value(*v), g.ln()))
            .sum();
        assert!(tail <= bound, "{tail} > {bound}");
    }
    assert!(checked > 10);
}

#[test]
fn partial_sum_gaps_decay_for_small_exponent() {
    let f = AlphaFunction::constant(0.8, 1.0).unwrap();
    let grid = TimeGrid::uniform(1.0, 201).unwrap();
    let draws = series::simulate_many(41, 10, |s| draw_series(s, 8192, 1.0)).unwrap();
    let r = series::partial_sum_convergence(&draws, &f, &[256, 4096], &grid).unwrap();
    assert!(r.median_unit[1] < r.median_unit[0]);
    assert!(r.median_log[1] < r.median_log[0]);
}

#[test]
fn large_jump_count_matches_integrated_intensity() {
    let f = affine();
    let expected = decomp::expected_jump_count(&f, 1.0).unwrap();
    let counts: Vec<f64> = series::simulate_many(51, 10_000, |s| {
        let (jumps, _) = series::li_jumps(&draw_series(s, 30, 1.0)?, &f);
        Ok(jumps.iter().filter(|j| j.abs() > 1.0).count() as f64)
    })
    .unwrap();
    let m = stats::mean(&counts);
    assert!(
        (m - expected).abs() < 3.0 * stats::std_error(&counts),
        "{m} vs {expected}"
    );
}

#[test]
fn magnitude_split_martingale_part_is_centred() {
    let f = affine();
    let grid = TimeGrid::new(vec![0.25, 0.5, 1.0], 1.0).unwrap();
    let rows = series::simulate_many(61, 5000, |s| {
        Ok(decomp::decompose_li_magnitude(&draw_series(s, 2000, 1.0)?, &f, &grid)?
            .m_path
            .values)
    })
    .unwrap();
    for k in 0..3 {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        assert!(stats::mean(&col).abs() < 3.0 * stats::std_error(&col));
    }
}

#[test]
fn field_drift_variation_converges_under_refinement() {
    let f = affine();
    let draw = draw_series(71, 1000, 1.0).unwrap();
    let tv = |g: usize| {
        decomp::total_variation(&decomp::compute_a_field(&draw, &f, &TimeGrid::uniform(1.0, g).unwrap()).unwrap())
    };
    let (coarse, fine) = (tv(1001), tv(10_001));
    assert!((fine - coarse).abs() < 0.01 * fine);
}

#[test]
fn field_drift_is_continuous_and_carries_no_jumps() {
    let f = affine();
    let draw = draw_series(81, 500, 1.0).unwrap();
    let mut pts: Vec<f64> = draw.locations().to_vec();
    pts.push(0.0);
    pts.sort_by(f64::total_cmp);
    // a grid point just before each location isolates every jump
    let mut grid_pts: Vec<f64> = pts.iter().flat_map(|&v| [v - 1e-9, v]).filter(|&v| v >= 0.0).collect();
    grid_pts.sort_by(f64::total_cmp);
    grid_pts.dedup();
    let grid = TimeGrid::new(grid_pts, 1.0).unwrap();
    let lf = series::simulate_lf_fkl(&draw, &f, &grid).unwrap();
    let li = series::simulate_li_fkl(&draw, &f, &grid).unwrap();
    let a = decomp::compute_a_field(&draw, &f, &grid).unwrap();
    let (jumps, _) = series::li_jumps(&draw, &f);
    for (i, &v) in draw.locations().iter().enumerate() {
        let k = grid.index_of(v).unwrap();
        if k == 0 {
            continue;
        }
        let lf_minus_a = |j: usize| lf.values[j] - a.values[j];
        let step = lf_minus_a(k) - lf_minus_a(k - 1);
        assert!((step - jumps[i]).abs() < 1e-6, "{step} vs {}", jumps[i]);
        assert!((li.values[k] - li.values[k - 1] - jumps[i]).abs() < 1e-12);
        assert!((a.values[k] - a.values[k - 1]).abs() < 1e-6);
    }
}

#[test]
fn li_increments_factorise() {
    let f = affine();
    let r = charfn::increment_independence_check(
        &f,
        ProcessKind::Li,
        &[(0.0, 0.5), (0.5, 1.0)],
        McSettings {
            n_samples: 20_000,
            n_terms: 1000,
            seed: 91,
        },
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
    let c = AlphaFunction::constant(1.4, 1.0).unwrap();
    let r = charfn::increment_independence_check(
        &c,
        ProcessKind::Lf,
        &[(0.0, 0.5), (0.5, 1.0)],
        McSettings {
            n_samples: 20_000,
            n_terms: 1000,
            seed: 92,
        },
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn li_increment_cf_matches_analytic() {
    let f = affine();
    let grid = TimeGrid::new(vec![0.3, 0.8], 1.0).unwrap();
    let inc: Vec<f64> = series::simulate_many(101, 20_000, |s| {
        let p = series::simulate_li_fkl(&draw_series(s, 1000, 1.0)?, &f, &grid)?;
        Ok(p.values[1] - p.values[0])
    })
    .unwrap();
    let q = |th: f64| charfn::CfQuery::new(vec![0.3, 0.8], vec![-th, th]);
    let d = charfn::cf_distance_scalar(
        |th| Ok(charfn::cf_li_joint(&f, &q(th)?)?.value),
        &inc,
        &charfn::theta_grid(-3.0, 3.0, 21),
    )
    .unwrap();
    assert!(d <= 3.0 / (20_000f64).sqrt(), "{d}");
}

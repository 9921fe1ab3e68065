use epsdelta::extremum::{certified_max_bound, envelope, refine_extrema};
use epsdelta::function_model::{parse_function, range_bounds, Expr, Interval, RealFunction};
use epsdelta::intermediate::{bisect_boundary, classical_ivt, Class, Piece, TargetSet};
use epsdelta::optimal_delta::{
    closest_pair_in_level_set, modulus_of_continuity, modulus_on_points, optimal_delta_closed_form,
    optimal_delta_finite, optimal_delta_grid, GridConfig,
};
use epsdelta::FiniteMetricSpace;
use proptest::prelude::*;

fn coeff() -> impl Strategy<Value = f64> {
    (-40i32..=40).prop_map(|k| k as f64 / 8.0)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![Just(Expr::Var), coeff().prop_map(Expr::Const)]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_filter_map("no negated constants", |e| match e {
                Expr::Const(_) => None,
                e => Some(Expr::Neg(Box::new(e))),
            }),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::Add(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::Sub(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::Mul(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::Div(Box::new(l), Box::new(r))),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Expr::Pow(Box::new(l), Box::new(r))),
            inner.clone().prop_map(|e| Expr::Sin(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Cos(Box::new(e))),
            inner.prop_map(|e| Expr::Abs(Box::new(e))),
        ]
    })
}

fn pwl() -> impl Strategy<Value = RealFunction> {
    prop::collection::vec((0.001f64..1.0, -3.0f64..3.0), 2..8).prop_map(|steps| {
        let mut x = -0.5;
        let pts = steps
            .into_iter()
            .map(|(dx, y)| {
                x += dx;
                (x, y)
            })
            .collect();
        RealFunction::piecewise_linear(pts).unwrap()
    })
}

fn builtin() -> impl Strategy<Value = RealFunction> {
    prop_oneof![
        (0.05f64..5.0, 0.1f64..10.0).prop_map(|(a, b)| RealFunction::power(a, b).unwrap()),
        Just(RealFunction::chainsaw()),
        (prop::collection::vec(-5.0f64..5.0, 1..6), -3.0f64..0.0, 0.1f64..3.0).prop_map(
            |(c, lo, w)| RealFunction::polynomial(c)
                .with_domain(Interval::new(lo, lo + w).unwrap())
                .unwrap()
        ),
        pwl(),
        (expr(), -2.0f64..0.0, 0.1f64..2.0)
            .prop_map(|(e, lo, w)| RealFunction::expression(e, Interval::new(lo, lo + w).unwrap())),
    ]
}

/// Continuous test functions that evaluate everywhere on their domain.
fn continuous() -> impl Strategy<Value = RealFunction> {
    prop_oneof![
        (0.2f64..4.0, 0.5f64..3.0).prop_map(|(a, b)| RealFunction::power(a, b).unwrap()),
        Just(RealFunction::chainsaw()),
        (prop::collection::vec(-5.0f64..5.0, 1..6), -2.0f64..0.0, 0.1f64..3.0).prop_map(
            |(c, lo, w)| RealFunction::polynomial(c)
                .with_domain(Interval::new(lo, lo + w).unwrap())
                .unwrap()
        ),
        pwl(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_text_round_trips(f in builtin()) {
        let text = f.to_string();
        let back = parse_function(&text).unwrap();
        prop_assert_eq!(&back, &f, "text: {}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn evaluation_is_deterministic(f in builtin(), t in 0.0f64..=1.0) {
        let d = f.domain();
        let x = d.lo() + t * d.width();
        let a = f.eval(x);
        let b = f.eval(x);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn range_spread_grows_with_nested_grids(f in continuous(), k in 1u32..9) {
        let coarse = range_bounds(&f, (1 << k) + 1).unwrap();
        let fine = range_bounds(&f, (1 << (k + 1)) + 1).unwrap();
        prop_assert!(fine.1 - fine.0 >= coarse.1 - coarse.0);
        prop_assert!(coarse.0 <= coarse.1);
    }

    #[test]
    fn grid_delta_never_undershoots_closed_form(
        alpha in 0.1f64..5.0,
        b in 0.2f64..4.0,
        frac in 0.01f64..0.99,
    ) {
        let f = RealFunction::power(alpha, b).unwrap();
        let eps = frac * b.powf(alpha);
        let exact = optimal_delta_closed_form(&f, eps).unwrap().delta;
        let cfg = GridConfig { resolution: 1 << 9, ..GridConfig::default() };
        let grid = optimal_delta_grid(&f, eps, &cfg).unwrap().delta;
        prop_assert!(grid >= exact - 1e-12, "grid {} < exact {}", grid, exact);
    }

    #[test]
    fn base_grid_delta_is_monotone_in_epsilon(f in continuous(), e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
        let cfg = GridConfig { resolution: 257, refine_rounds: 0, zoom_factor: 4.0 };
        let (lo, hi) = range_bounds(&f, cfg.resolution).unwrap();
        prop_assume!(hi - lo > 1e-9);
        let (e1, e2) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let (e1, e2) = (e1 * (hi - lo), e2 * (hi - lo));
        let d1 = optimal_delta_grid(&f, e1, &cfg).unwrap().delta;
        let d2 = optimal_delta_grid(&f, e2, &cfg).unwrap().delta;
        prop_assert!(d1 <= d2);
    }

    #[test]
    fn finite_oracle_agrees_with_grid_pass(f in continuous(), k in 2usize..=12, frac in 0.01f64..1.0) {
        let xs = f.domain().uniform_grid(k).unwrap();
        let fs = f.eval_all(&xs).unwrap();
        let space = FiniteMetricSpace::from_line(&xs, &fs).unwrap();
        let spread = fs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - fs.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 0.0);
        let eps = frac * spread;
        let exact = optimal_delta_finite(&space, eps).unwrap().delta;
        let (grid, _, _) = closest_pair_in_level_set(&xs, &fs, eps).unwrap();
        prop_assert_eq!(exact, grid);
    }

    #[test]
    fn finite_spaces_satisfy_the_contrapositive(
        pts in prop::collection::vec(-5.0f64..5.0, 2..10),
        vals in prop::collection::vec(-5.0f64..5.0, 10),
        frac in 0.01f64..1.0,
    ) {
        let vals = &vals[..pts.len()];
        let space = FiniteMetricSpace::from_line(&pts, vals).unwrap();
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 0.0);
        let eps = frac * spread;
        let delta = optimal_delta_finite(&space, eps).unwrap().delta;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if space.dist(i, j) < delta {
                    prop_assert!((vals[i] - vals[j]).abs() < eps);
                }
            }
        }
    }

    #[test]
    fn sliding_modulus_matches_pair_scan(
        fs in prop::collection::vec(-10.0f64..10.0, 2..60),
        delta in 0.0f64..1.0,
    ) {
        let xs: Vec<f64> = (0..fs.len()).map(|i| i as f64 / fs.len() as f64).collect();
        let mut brute = 0.0f64;
        for i in 0..xs.len() {
            for j in i..xs.len() {
                if xs[j] - xs[i] <= delta {
                    brute = brute.max((fs[i] - fs[j]).abs());
                }
            }
        }
        prop_assert_eq!(modulus_on_points(&xs, &fs, delta), brute);
    }

    #[test]
    fn refinement_traces_are_monotone(f in continuous(), level in 0u32..12) {
        let t = refine_extrema(&f, level, 0.0).unwrap();
        prop_assert_eq!(t.levels.len() as u32, level + 1);
        for w in t.levels.windows(2) {
            prop_assert!(w[1].max >= w[0].max);
            prop_assert!(w[1].min <= w[0].min);
        }
        for r in &t.levels {
            prop_assert_eq!(f.eval(r.argmax).unwrap(), r.max);
            prop_assert_eq!(f.eval(r.argmin).unwrap(), r.min);
        }
    }

    #[test]
    fn certificate_dominates_every_grid_value(f in continuous(), level in 0u32..8) {
        let res = (1 << 12) + 1;
        let mut t = refine_extrema(&f, level, 0.0).unwrap();
        let bound = certified_max_bound(&f, &mut t, level, res).unwrap();
        prop_assert!(t.level(level).unwrap().max <= bound);
        // the net sits inside this grid, so each grid point is within one mesh of a net point
        let dense = range_bounds(&f, res).unwrap().1;
        prop_assert!(dense <= bound, "dense {} > bound {}", dense, bound);
    }

    #[test]
    fn envelope_on_the_net_matches_the_trace(f in continuous(), level in 1u32..11) {
        let env = envelope(&f, (1 << level) + 1).unwrap();
        let t = refine_extrema(&f, level, 0.0).unwrap();
        prop_assert_eq!(env.last().unwrap().1, t.last().max);
        prop_assert!(env.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn bisection_keeps_its_invariants(
        coeffs in prop::collection::vec(-3.0f64..3.0, 1..5),
        c in -3.0f64..3.0,
        steps in 1u32..40,
    ) {
        let f = RealFunction::polynomial(coeffs).with_domain(Interval::new(-2.0, 2.0).unwrap()).unwrap();
        let d = TargetSet::below(c);
        let Ok(t) = bisect_boundary(&f, &d, steps, 0.0) else {
            let (fa, fb) = (f.eval(-2.0).unwrap(), f.eval(2.0).unwrap());
            prop_assert_eq!(d.contains(fa), d.contains(fb));
            return Ok(());
        };
        for (k, s) in t.steps.iter().enumerate() {
            prop_assert_eq!(s.midpoint, s.a + (s.b - s.a) / 2.0);
            if k > 0 {
                let prev = &t.steps[k - 1];
                prop_assert_eq!(s.b - s.a, (prev.b - prev.a) / 2.0);
            }
            let (inside, outside) = if t.inside_at_left { (s.a, s.b) } else { (s.b, s.a) };
            prop_assert!(d.contains(f.eval(inside).unwrap()));
            prop_assert!(!d.contains(f.eval(outside).unwrap()));
        }
        let (a, b) = t.final_bracket;
        if t.located.is_none() {
            prop_assert_eq!(t.error_bound, 4.0 * 0.5f64.powi(steps as i32));
            prop_assert_eq!(b - a, t.error_bound);
        }
    }

    #[test]
    fn ivt_residual_is_bounded_by_the_modulus(
        coeffs in prop::collection::vec(-3.0f64..3.0, 2..5),
        t in 0.05f64..0.95,
        steps in 1u32..30,
    ) {
        let f = RealFunction::polynomial(coeffs).with_domain(Interval::new(0.0, 1.0).unwrap()).unwrap();
        let (fa, fb) = (f.eval(0.0).unwrap(), f.eval(1.0).unwrap());
        prop_assume!((fa - fb).abs() > 1e-6);
        let c = fa + t * (fb - fa);
        let trace = classical_ivt(&f, c, steps).unwrap();
        let m = trace.midpoint();
        let w = modulus_of_continuity(&f, trace.error_bound, 1 << 12).unwrap();
        let grid_step = 1.0 / 4095.0;
        let lipschitz_slack = modulus_of_continuity(&f, grid_step, 1 << 12).unwrap();
        prop_assert!((f.eval(m).unwrap() - c).abs() <= w + lipschitz_slack + 1e-12);
    }

    #[test]
    fn classification_is_a_trichotomy(
        raw in prop::collection::vec((-5i32..5, 0i32..4, any::<bool>(), any::<bool>()), 0..5),
        y in -6.0f64..6.0,
        ygrid in -12i32..12,
    ) {
        let pieces = raw
            .into_iter()
            .map(|(lo, w, lo_open, hi_open)| Piece { lo: lo as f64, hi: (lo + w) as f64, lo_open, hi_open })
            .collect();
        let d = TargetSet::new(pieces).unwrap();
        for p in d.pieces().windows(2) {
            prop_assert!(p[0].hi < p[1].lo || (p[0].hi == p[1].lo && p[0].hi_open && p[1].lo_open));
        }
        for y in [y, ygrid as f64 / 2.0] {
            match d.classify(y, 0.0) {
                Class::Interior => prop_assert!(d.contains(y)),
                Class::Exterior => {
                    prop_assert!(!d.contains(y));
                    prop_assert!(!d.boundary().contains(&y));
                }
                Class::Boundary => prop_assert!(d.boundary().contains(&y)),
            }
        }
        let back: TargetSet = d.to_string().parse().unwrap_or(d.clone());
        prop_assert_eq!(back, d);
    }
}

#[test]
fn power_grid_deltas_converge_from_above() {
    let f = RealFunction::power(2.0, 1.0).unwrap();
    let exact = optimal_delta_closed_form(&f, 0.19).unwrap().delta;
    let mut prev = f64::INFINITY;
    for k in [8, 10, 12, 14] {
        let cfg = GridConfig {
            resolution: (1 << k) + 1,
            refine_rounds: 0,
            zoom_factor: 4.0,
        };
        let d = optimal_delta_grid(&f, 0.19, &cfg).unwrap().delta;
        assert!(d <= prev, "resolution 2^{k}: {d} > {prev}");
        assert!(d >= exact - 1e-12);
        prev = d;
    }
    assert!(prev - exact < 1e-4);
}

#[test]
fn chainsaw_jump_structure() {
    let f = RealFunction::chainsaw();
    let cfg = GridConfig {
        resolution: 1 << 12,
        ..GridConfig::default()
    };
    for n in [2u64, 3] {
        let at = optimal_delta_closed_form(&f, 1.0 / n as f64).unwrap().delta;
        assert_eq!(at, 1.0 / (n * (2 * n + 1)) as f64);
        let after = optimal_delta_grid(&f, 1.0 / n as f64 + 1e-4, &cfg).unwrap().delta;
        assert!(after >= 1.0 / (n * (2 * n - 1)) as f64 - 1e-3, "n={n}: {after}");
        assert!(after > at);
    }
}

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use ogpm::analytics::{mse_closed_form_circular, mse_closed_form_classical};
use ogpm::domain::arc_distance;
use ogpm::estimation::histogram;
use ogpm::mechanisms::{ogpm_circular, ogpm_classical, ogpm_unbiased, CATALOG};
use ogpm::polar::{optimal_budget_split, perturb_polar_seeded, BudgetSplit, PolarPoint};
use ogpm::{truncate, ErrorMetric, Interval, MechanismSpec, Piece, PiecewiseDensity, Transform};

fn perturbing() -> impl Strategy<Value = MechanismSpec> {
    prop::sample::select(CATALOG.to_vec())
        .prop_filter("formula only", |n| *n != "staircase")
        .prop_map(|n| MechanismSpec::by_name(n).unwrap())
}

fn metric() -> impl Strategy<Value = ErrorMetric> {
    prop_oneof![Just(ErrorMetric::L1), Just(ErrorMetric::L2)]
}

fn point_in(d: &Interval, t: f64) -> f64 {
    (d.lo() + t * d.len()).min(d.hi())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn outputs_respect_the_privacy_bound(
        spec in perturbing(), eps in 0.01f64..10.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0,
    ) {
        let d = spec.input_domain();
        let p = spec.pdf(eps, point_in(&d, a)).unwrap();
        let q = spec.pdf(eps, point_in(&d, b)).unwrap();
        let ratio = p.max_ratio_against(&q).unwrap();
        prop_assert!(ratio <= eps.exp() * (1.0 + 1e-9), "{} ratio {ratio}", spec.name());
    }

    #[test]
    fn densities_are_normalized(spec in perturbing(), eps in 0.01f64..10.0, t in 0.0f64..=1.0) {
        let d = spec.input_domain();
        let out = spec.pdf(eps, point_in(&d, t)).unwrap();
        prop_assert!((out.cdf(out.domain().hi()) - 1.0).abs() < 1e-9);
        if let Some(p) = out.density() {
            prop_assert!((p.total_mass() - 1.0).abs() < 1e-9);
            prop_assert!(p.pieces().iter().all(|q| q.density >= 0.0));
        }
    }

    #[test]
    fn sampling_inverts_the_cdf(
        spec in perturbing(), eps in 0.01f64..10.0, t in 0.0f64..=1.0, u in 0.0f64..1.0,
    ) {
        let d = spec.input_domain();
        let out = spec.pdf(eps, point_in(&d, t)).unwrap();
        let y = out.sample(u);
        prop_assert!(out.domain().contains(y));
        if let Some(p) = out.density() {
            // F(F⁻¹(u)) = u wherever the density is positive
            prop_assert!((p.cdf(y) - u).abs() < 1e-9);
        }
    }

    #[test]
    fn unbiased_mechanism_mean(eps in 0.01f64..10.0, x in 0.0f64..=1.0) {
        let pdf = ogpm_unbiased(eps, x).unwrap();
        prop_assert!((pdf.mean() - x).abs() < 1e-9);
    }

    #[test]
    fn transforms_keep_privacy_and_scale_error(
        eps in 0.05f64..8.0, x in 0.0f64..=1.0, lo in -50.0f64..50.0, len in 0.01f64..100.0,
        m in metric(),
    ) {
        let pdf = ogpm_classical(eps, x).unwrap();
        let target = Interval::classical(lo, lo + len).unwrap();
        let t = Transform::between(&Interval::unit(), &target).unwrap();
        let moved = pdf.apply_transform(t).unwrap();
        prop_assert!((moved.ldp_ratio() - pdf.ldp_ratio()).abs() <= 1e-9 * pdf.ldp_ratio());
        let expect = pdf.expected_error(m, x).unwrap() * t.scale.powi(m.power() as i32);
        let got = moved.expected_error(m, t.apply(x)).unwrap();
        prop_assert!((got - expect).abs() <= 1e-9 * expect.max(1e-12));
    }

    #[test]
    fn merging_keeps_the_error(
        eps in 0.05f64..8.0, x in 0.0f64..=1.0, cuts in prop::collection::vec(0.0f64..1.0, 1..6),
        m in metric(),
    ) {
        let pdf = ogpm_classical(eps, x).unwrap();
        let mut pieces = Vec::new();
        for p in pdf.pieces() {
            let mut at = p.left;
            let mut fr: Vec<f64> = cuts.clone();
            fr.sort_by(f64::total_cmp);
            for f in fr {
                let c = p.left + f * p.width();
                if c > at {
                    pieces.push(Piece::new(p.density, at, c));
                    at = c;
                }
            }
            pieces.push(Piece::new(p.density, at, p.right));
        }
        let split = PiecewiseDensity::new(pieces, pdf.domain()).unwrap();
        let merged = split.merge_pieces();
        prop_assert!(merged.pieces().len() <= pdf.pieces().len());
        let before = pdf.expected_error(m, x).unwrap();
        prop_assert!((merged.expected_error(m, x).unwrap() - before).abs() < 1e-12);
    }

    #[test]
    fn circular_error_does_not_depend_on_input(eps in 0.05f64..10.0, x in 0.0f64..TAU) {
        let e = ogpm_circular(eps, x).unwrap().expected_error(ErrorMetric::L2, x).unwrap();
        prop_assert!((e - mse_closed_form_circular(eps).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn classical_square_error_matches_integration(eps in 0.05f64..10.0, x in 0.0f64..=1.0) {
        let exact = ogpm_classical(eps, x).unwrap().expected_error(ErrorMetric::L2, x).unwrap();
        prop_assert!((exact - mse_closed_form_classical(eps, x).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn truncation_keeps_mass(eps in 0.05f64..8.0, x in 0.0f64..=1.0) {
        let spec = MechanismSpec::by_name("sw").unwrap();
        let pdf = spec.pdf(eps, x).unwrap();
        let t = truncate(pdf.density().unwrap(), Interval::unit()).unwrap();
        let total = t.interior_mass() + t.lower_atom() + t.upper_atom();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!((t.cdf(1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn arc_distance_is_a_metric(a in 0.0f64..TAU, b in 0.0f64..TAU, c in 0.0f64..TAU) {
        let d = arc_distance(a, b);
        prop_assert!((0.0..=PI + 1e-12).contains(&d));
        prop_assert!((d - arc_distance(b, a)).abs() < 1e-12);
        prop_assert!(d <= arc_distance(a, c) + arc_distance(c, b) + 1e-12);
    }

    #[test]
    fn histograms_sum_to_one(values in prop::collection::vec(-1.0f64..2.0, 1..200), k in 1usize..60) {
        let h = histogram(&values, &Interval::unit(), k);
        prop_assert_eq!(h.len(), k);
        prop_assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn budget_splits_add_up(total in 1e-6f64..20.0, d in 0.1f64..10.0) {
        let s = optimal_budget_split(total, d).unwrap();
        prop_assert!(s.epsilon1 >= 0.0 && s.epsilon2 >= 0.0);
        prop_assert!((s.epsilon1 + s.epsilon2 - total).abs() < 1e-9);
    }

    #[test]
    fn polar_outputs_stay_in_range(
        r in 0.0f64..1.0, a in 0.0f64..TAU, e1 in 0.0f64..5.0, e2 in 0.0f64..5.0, seed: u64,
    ) {
        let d = 3.0;
        let pt = PolarPoint::new(r * d, a, d).unwrap();
        let split = BudgetSplit::new(e1, e1 + e2).unwrap();
        let q = perturb_polar_seeded(&pt, &split, d, seed).unwrap();
        prop_assert!(q.radius >= 0.0 && q.radius < d);
        prop_assert!(q.angle >= 0.0 && q.angle < TAU);
    }
}

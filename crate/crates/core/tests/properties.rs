use std::cmp::Ordering;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use rotascope::circle_map::{invert, CircleLift, FamilyPoint, LiftDescriptor, LiftPoint};
use rotascope::cont_frac::{
    circle_distance, closest_returns_brute_force, closest_returns_from, continued_fraction, Rational,
};
use rotascope::denjoy::return_partition;
use rotascope::measure_conj::conjugacy_from_orbit;
use rotascope::real::DoubleDouble;
use rotascope::rotation::{rotation_birkhoff, rotation_enclosure, SolverConfig};
use rotascope::staircase::plateau_endpoints;

fn enclosure(fp: &FamilyPoint, tol: f64) -> rotascope::rotation::RotationEstimate {
    rotation_enclosure(fp, tol, &SolverConfig::for_point(fp)).unwrap()
}

fn lift_strategy() -> impl Strategy<Value = LiftDescriptor> {
    (-0.07..0.07f64, -0.03..0.03f64, -0.015..0.015f64)
        .prop_map(|(s1, c1, s2)| LiftDescriptor::from_coefficients("custom", vec![s1, s2], vec![c1]).unwrap())
}

proptest! {
    #[test]
    fn convergents_alternate_and_approximate(alpha in 0.0..1.0f64) {
        let cf = continued_fraction(alpha, 40).unwrap();
        let c = &cf.convergents;
        for w in c.windows(2) {
            let det = w[1].p() as i128 * w[0].q() as i128 - w[0].p() as i128 * w[1].q() as i128;
            prop_assert_eq!(det.abs(), 1);
        }
        for r in c {
            let err = (alpha - r.value()).abs();
            prop_assert!(err <= 1.0 / (r.q() as f64).powi(2) + 1e-15, "{} err {}", r, err);
        }
    }

    #[test]
    fn exact_ratios_expand_exactly(p in 0i64..10_000, q in 1i64..10_000) {
        let r = Rational::new(p, q).unwrap();
        let cf = continued_fraction(r, 64).unwrap();
        prop_assert!(cf.exact);
        prop_assert_eq!(*cf.convergents.last().unwrap(), r);
    }

    #[test]
    fn rational_order_and_text(p1 in -500i64..500, q1 in 1i64..500, p2 in -500i64..500, q2 in 1i64..500) {
        let a = Rational::new(p1, q1).unwrap();
        let b = Rational::new(p2, q2).unwrap();
        prop_assert_eq!(a.cmp(&b), (p1 * q2).cmp(&(p2 * q1)));
        prop_assert_eq!(a.to_string().parse::<Rational>().unwrap(), a);
        if a < b {
            let m = a.mediant(&b);
            prop_assert!(a < m && m < b);
        }
        if a != b {
            prop_assert_eq!(a.cmp_real(b.value()), b.cmp(&a));
        }
        prop_assert_eq!(Rational::integer(p1).cmp_real(p1 as f64), Ordering::Equal);
    }

    #[test]
    fn closest_returns_agree(alpha in 0.0..1.0f64, q_max in 1i64..3000) {
        let cf = continued_fraction(alpha, 64).unwrap();
        prop_assert_eq!(closest_returns_brute_force(alpha, q_max), closest_returns_from(&cf, alpha, q_max));
    }

    #[test]
    fn circle_distance_is_a_seminorm(x in -10.0..10.0f64, k in -5i32..5) {
        let d = circle_distance(x);
        prop_assert!((0.0..=0.5).contains(&d));
        assert_abs_diff_eq!(circle_distance(x + k as f64), d, epsilon = 1e-12);
        assert_abs_diff_eq!(circle_distance(-x), d, epsilon = 1e-15);
    }

    #[test]
    fn lifts_commute_with_translation(lift in lift_strategy(), t in -1.0..1.0f64, x in -3.0..3.0f64) {
        let fp = FamilyPoint::new(lift, t);
        assert_abs_diff_eq!(fp.lift(x + 1.0), fp.lift(x) + 1.0, epsilon = 1e-12);
        prop_assert!(fp.derivative(x) > 0.0);
        let y = invert(&fp, fp.lift(x)).unwrap();
        assert_abs_diff_eq!(y, x, epsilon = 1e-12);
    }

    #[test]
    fn double_double_orbit_tracks_binary64(lift in lift_strategy(), t in 0.0..1.0f64, x in 0.0..1.0f64) {
        let fp = FamilyPoint::new(lift, t);
        let mut a = LiftPoint::<f64>::from_f64(x);
        let mut b = LiftPoint::<DoubleDouble>::from_f64(x);
        for _ in 0..200 {
            a = a.step(&fp);
            b = b.step(&fp);
        }
        prop_assert!((a.value() - b.value()).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn farey_enclosure_meets_birkhoff(k in 0.0..0.95f64, t in 0.0..1.0f64) {
        let fp = FamilyPoint::new(LiftDescriptor::arnold(k).unwrap(), t);
        let farey = enclosure(&fp, 1e-10);
        let n = 20_000;
        let b = rotation_birkhoff(&fp, 0.0, n).unwrap();
        let slack = 1.0 / n as f64;
        prop_assert!(farey.upper() >= b.value - slack && farey.lower() <= b.value + slack, "{:?} {:?}", farey, b);
    }

    #[test]
    fn rotation_number_is_monotone(lift in lift_strategy(), t in 0.0..1.0f64, dt in 1e-6..0.05f64) {
        let fp = FamilyPoint::new(lift, t);
        let lo = enclosure(&fp, 1e-10);
        let hi = enclosure(&fp.at(t + dt), 1e-10);
        prop_assert!(hi.upper() >= lo.lower());
    }

    #[test]
    fn reflection_negates_rotation_number(lift in lift_strategy(), t in 0.0..1.0f64) {
        let fp = FamilyPoint::new(lift, t);
        let a = enclosure(&fp, 1e-10);
        let b = enclosure(&fp.reflected(), 1e-10);
        prop_assert!(b.lower() <= -a.lower() + 1e-15 && b.upper() >= -a.upper() - 1e-15, "{:?} {:?}", a, b);
    }

    #[test]
    fn pure_rotation_number_is_the_translation(t in -2.0..2.0f64) {
        let fp = FamilyPoint::new(LiftDescriptor::identity(), t);
        let e = enclosure(&fp, 1e-13);
        prop_assert!(e.contains(t));
    }

    #[test]
    fn arnold_zero_plateau_is_closed_form(k in 0.05..0.95f64) {
        let pl = plateau_endpoints(&LiftDescriptor::arnold(k).unwrap(), Rational::integer(0), 1e-12).unwrap();
        let edge = k / std::f64::consts::TAU;
        prop_assert!((pl.t_right - edge).abs() < 1e-9 && (pl.t_left + edge).abs() < 1e-9, "{:?}", pl);
        prop_assert!(pl.midpoint_locked);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn schwarz_lower_bound(k in 0.0..0.6f64, t in 0.0..1.0f64) {
        let fp = FamilyPoint::new(LiftDescriptor::arnold(k).unwrap(), t);
        if let Ok(h) = conjugacy_from_orbit(&fp, 0.0, 512) {
            prop_assert!(h.inverse_derivative_integral() >= 1.0 - 1e-9);
            for w in h.knots.windows(2) {
                prop_assert!(w[1].0 > w[0].0 && w[1].1 > w[0].1);
            }
            prop_assert!((h.h(0.3 + 1.0) - h.h(0.3) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_partition_margins_are_positive(x in 0.0..1.0f64, n in 2usize..7) {
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let part = return_partition(&LiftDescriptor::identity(), golden, x, n).unwrap();
        prop_assert!(part.margins.min() > 1e-12, "{:?}", part.margins);
    }
}

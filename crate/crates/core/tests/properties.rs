use num_complex::Complex64;
use proptest::prelude::*;
use toruslab::estimates;
use toruslab::growth::{self, GrowthSeries, RecurrenceParams};
use toruslab::nls::{self, Alpha, SplitStep};
use toruslab::spectral::{Field, FourierGrid, SobolevWeight, TorusGeometry};
use toruslab::xsb::{self, LiftConfig};
use toruslab::{ExactForm, Rational64};

fn rational() -> impl Strategy<Value = Rational64> {
    (1i64..=20, 1i64..=8).prop_map(|(n, d)| Rational64::new(n, d))
}

fn form() -> impl Strategy<Value = ExactForm> {
    (rational(), -10i64..=10, 1i64..=4, rational()).prop_filter_map("positive definite", |(a, bn, bd, c)| {
        ExactForm::new(a, Rational64::new(bn, bd), c).ok()
    })
}

fn grid(m: usize) -> FourierGrid<f64> {
    FourierGrid::new(TorusGeometry::standard(), m).unwrap()
}

fn field(m: usize, radius: i64) -> impl Strategy<Value = Field<f64>> {
    let side = (2 * radius + 1) as usize;
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), side * side).prop_map(move |v| {
        Field::from_fn(grid(m), |a, b| {
            if a.abs() <= radius && b.abs() <= radius {
                let (re, im) = v[((a + radius) as usize) * side + (b + radius) as usize];
                Complex64::new(re, im) / (1.0 + (a * a + b * b) as f64)
            } else {
                Complex64::default()
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_are_monotone_and_ordered(q in form(), x in 0i64..400, dx in 0i64..50) {
        let x0 = Rational64::from_integer(x);
        let x1 = Rational64::from_integer(x + dx);
        let lt = q.count_lt(x0).unwrap().count;
        let le = q.count_leq(x0).unwrap().count;
        prop_assert!(lt <= le);
        prop_assert!(le <= q.count_leq(x1).unwrap().count);
        prop_assert!(le % 2 == 1, "the origin is the only unpaired point");
    }

    #[test]
    fn counts_are_scale_invariant(q in form(), x in 1i64..500, k in 2i64..7) {
        let (a, b, c) = q.coefficients();
        let k = Rational64::from_integer(k);
        let scaled = ExactForm::new(a * k, b * k, c * k).unwrap();
        let x = Rational64::from_integer(x);
        prop_assert_eq!(q.count_leq(x).unwrap(), scaled.count_leq(x * k).unwrap());
    }

    #[test]
    fn equivalent_forms_count_alike(q in form(), x in 1i64..500) {
        // (m, n) -> (m + n, n) maps a m² + b mn + c n² to a m² + (2a + b) mn + (a + b + c) n².
        let (a, b, c) = q.coefficients();
        let two = Rational64::from_integer(2);
        let p = ExactForm::new(a, two * a + b, a + b + c).unwrap();
        let x = Rational64::from_integer(x);
        prop_assert_eq!(q.count_leq(x).unwrap().count, p.count_leq(x).unwrap().count);
    }

    #[test]
    fn remainder_is_count_minus_main_term(q in form(), x in 1i64..1000) {
        let x = Rational64::from_integer(x);
        let r = q.count(x).unwrap();
        prop_assert!((r.remainder - (r.count as f64 - q.main_term(x))).abs() < 1e-9);
    }

    #[test]
    fn free_flow_is_a_unitary_group(u in field(16, 3), s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let a = u.free_flow(s).free_flow(t);
        let b = u.free_flow(s + t);
        prop_assert!(a.sub(&b).unwrap().l2_norm() <= 1e-12 * u.l2_norm().max(1.0));
        prop_assert!((u.free_flow(t).l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm().max(1.0));
        let h = u.sobolev_norm(2.0, SobolevWeight::Eigen);
        prop_assert!((u.free_flow(t).sobolev_norm(2.0, SobolevWeight::Eigen) - h).abs() <= 1e-12 * h.max(1.0));
    }

    #[test]
    fn sobolev_norms_increase_with_s(u in field(16, 4), s in 0.0f64..2.0, ds in 0.0f64..1.0) {
        for w in [SobolevWeight::Bracket, SobolevWeight::Eigen] {
            prop_assert!(u.sobolev_norm(s, w) <= u.sobolev_norm(s + ds, w) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn strang_steps_conserve_mass_and_commute_with_phase(u in field(32, 2), h in 0.001f64..0.02, phase in 0.0f64..6.3) {
        // Small data stays resolved on the grid.
        let u = u.scale(Complex64::new(0.2, 0.0));
        let mut s = SplitStep::new(u.grid(), Alpha::Defocusing, 2).unwrap();
        let m0 = nls::mass(&u);
        let mut v = u.clone();
        for _ in 0..10 {
            v = s.step_by(&v, h).unwrap();
        }
        prop_assert!((nls::mass(&v) - m0).abs() <= 1e-10 * m0.max(1e-300));
        let c = Complex64::from_polar(1.0, phase);
        let w = s.step_by(&u.scale(c), h).unwrap();
        let v1 = s.step_by(&u, h).unwrap().scale(c);
        prop_assert!(w.sub(&v1).unwrap().l2_norm() <= 1e-12 * u.l2_norm().max(1.0));
    }

    #[test]
    fn exp_sum_lhs_is_shift_invariant(seed in 0u64..1000, terms in 1usize..10, shift in -50.0f64..50.0) {
        let (a, b) = estimates::random_exp_sum_instance(seed, 0, terms, 8.0);
        let shifted: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let l0 = estimates::exp_sum_lhs(&a, &b).unwrap();
        let l1 = estimates::exp_sum_lhs(&shifted, &b).unwrap();
        prop_assert!(l0 >= 0.0);
        prop_assert!((l0 - l1).abs() <= 1e-10 * l0.max(1.0));
        prop_assert!(estimates::exp_sum_check(&a, &b).unwrap().ratio <= 10.0);
    }

    #[test]
    fn vanishing_prediction_is_sound(seed in 0u64..10_000) {
        let f = estimates::random_vanishing_configuration(grid(32), seed, 0).unwrap();
        let rep = estimates::quadrilinear_vanish_check([&f[0], &f[1], &f[2], &f[3]]).unwrap();
        prop_assert!(rep.predicted_zero && rep.integral == Complex64::default());
    }

    #[test]
    fn recurrence_constant_is_monotone_in_c(r in 0.1f64..1.0, c in 0.1f64..3.0, dc in 0.0f64..2.0) {
        let lo = growth::recurrence_bound_check(&RecurrenceParams::new(r, c, 0.5, 1.0).unwrap(), 2000).unwrap();
        let hi = growth::recurrence_bound_check(&RecurrenceParams::new(r, c + dc, 0.5, 1.0).unwrap(), 2000).unwrap();
        prop_assert!(lo.c_prime <= hi.c_prime);
    }

    #[test]
    fn growth_fit_recovers_power_laws(p in 0.0f64..3.0, scale in 0.1f64..10.0) {
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.5).collect();
        let vals = times.iter().map(|t| scale * (1.0 + t).powf(p)).collect();
        let fit = growth::fit_growth_exponent(&GrowthSeries::from_values(times, vals, 2.0).unwrap()).unwrap();
        prop_assert!((fit.exponent - p).abs() < 1e-9);
        prop_assert_eq!(fit.violated, p > fit.bound + growth::VIOLATION_MARGIN);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn xsb_norm_is_a_norm(u in field(8, 2), v in field(8, 2), c in -3.0f64..3.0, b in 0.0f64..1.0) {
        let lift = |f: &Field<f64>| xsb::lift(&xsb::free_flow_samples(f, 64), LiftConfig::default()).unwrap();
        let (x, y) = (lift(&u), lift(&v));
        let nx = x.xsb_norm(1.0, b);
        prop_assert!((x.scale(Complex64::new(c, 0.0)).xsb_norm(1.0, b) - c.abs() * nx).abs() <= 1e-12 * nx.max(1.0));
        prop_assert!(x.add(&y).unwrap().xsb_norm(1.0, b) <= (nx + y.xsb_norm(1.0, b)) * (1.0 + 1e-12));
        let total: f64 = x.dyadic_decompose().iter().map(|p| p.field.xsb_norm(1.0, b).powi(2)).sum();
        prop_assert!((total.sqrt() - nx).abs() <= 1e-10 * nx.max(1.0));
    }
}

use froblab_core::dmflow::{dm_potentials, string_flow, DescendantSeries};
use froblab_core::exact::{rat, MultiPoly, RatFunc, Rational, Registry};
use froblab_core::{NovikovSeries, EXACT};
use num_traits::{One, Zero};
use proptest::prelude::*;

type Q = NovikovSeries<Rational>;

fn poly() -> impl Strategy<Value = RatFunc> {
    proptest::collection::vec(((0u32..3, 0u32..3), -5i64..6), 1..4).prop_map(|terms| {
        let reg = Registry::new(&["a", "b"]);
        RatFunc::from_poly(MultiPoly::from_terms(&reg, terms.into_iter().map(|((i, j), c)| (vec![i, j], rat(c, 1)))))
    })
}

fn nonzero_poly() -> impl Strategy<Value = RatFunc> {
    poly().prop_filter("nonzero", |p| !p.is_zero())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn ratfunc_field_laws(a in poly(), b in nonzero_poly(), c in nonzero_poly()) {
        let x = a.try_div(&b).unwrap();
        let y = c.try_div(&b).unwrap();
        prop_assert_eq!(&(&x + &y) + &c, &x + &(&y + &c));
        prop_assert_eq!(&x * &(&y + &c), &(&x * &y) + &(&x * &c));
        prop_assert_eq!(&(&x * &y) * &c, &x * &(&y * &c));
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&(&x / &c) * &c, x.clone());
        prop_assert!((&x - &x).is_zero());
        // canonical form: common factors cancel
        prop_assert_eq!((&a * &c).try_div(&(&b * &c)).unwrap(), x);
    }
}

fn qseries(n: usize) -> impl Strategy<Value = Q> {
    proptest::collection::vec(-6i64..7, n).prop_map(|cs| Q::from_coeffs(cs.into_iter().map(|c| rat(c, 1)), EXACT))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn series_laws(a in qseries(6), b in qseries(6), c in qseries(6), k in 1i64..4) {
        let o = rat(6, 1);
        let t = |s: Q| s.truncate_q(&o);
        prop_assert_eq!(t(&(&a * &b) * &c), t(&a * &(&b * &c)));
        prop_assert_eq!(t(&a * &(&b + &c)), t(&(&a * &b) + &(&a * &c)));
        // 1 + q x is a unit
        let u = (Q::one(1) + Q::q(1, 0) * a.clone()).truncate_q(&o);
        prop_assert_eq!(u.try_mul(&u.inv().unwrap()).unwrap(), Q::one(1).truncate_q(&o));
        prop_assert_eq!(u.log().unwrap().exp().unwrap(), u.clone());
        prop_assert_eq!(u.powi(k).unwrap().pow(&rat(1, k)).unwrap(), u.clone());
        // theta is a derivation
        prop_assert_eq!(t((&a * &b).theta(0)), t(&(a.theta(0) * b.clone()) + &(a.clone() * b.theta(0))));
        // q -> q e^f and its inverse
        let f = vec![(Q::q(1, 0) * b.clone()).truncate_q(&o)];
        let g = Q::inverse_q_map(&f).unwrap();
        prop_assert_eq!(u.substitute_q(&f).unwrap().substitute_q(&g).unwrap(), u);
    }
}

fn descendant() -> impl Strategy<Value = DescendantSeries<Rational>> {
    proptest::collection::vec(proptest::collection::vec(-4i64..5, 5), 1..5).prop_map(|ts| {
        DescendantSeries::new(
            ts.into_iter()
                .map(|cs| Q::from_coeffs(std::iter::once(rat(0, 1)).chain(cs.into_iter().map(|c| rat(c, 2))), EXACT))
                .collect(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn dm_potentials_identities(t in descendant()) {
        let p = dm_potentials(&t, 6, -3).unwrap();
        let o = rat(6, 1);
        prop_assert_eq!(p.mu.truncate_q(&o), p.u.scale(&rat(1, 24)).truncate_q(&o));
        prop_assert_eq!(p.nu.truncate_q(&o), p.delta.log().unwrap().scale(&rat(1, 24)).truncate_q(&o));
        prop_assert!(p.v_identity_defect().unwrap().coeffs.values().all(|s| s.truncate_q(&o).is_zero()));
        prop_assert!(p.flowed.t[0].is_zero());
        let (again, _) = string_flow(&p.flowed, 6).unwrap();
        prop_assert!(again.is_zero());
        // s = e^{u/hbar}
        prop_assert_eq!(p.s.coeff(-2).truncate_q(&o), p.u.try_mul(&p.u).unwrap().scale(&rat(1, 2)).truncate_q(&o));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]
    #[test]
    fn dilaton_shift_matches_flow_prediction(cs in proptest::collection::vec(-1.0f64..1.0, 12)) {
        // T + eps c: t_1 gets eps; implicit differentiation of t_0(tau*) = 0 gives du/deps = u delta
        let series = |c: &[f64]| NovikovSeries::<f64>::from_coeffs(std::iter::once(0.0).chain(c.iter().copied()), EXACT);
        let t: Vec<NovikovSeries<f64>> = cs.chunks(4).map(series).collect();
        let base = DescendantSeries::new(t.clone());
        let p = dm_potentials(&base, 5, -1).unwrap();
        let h = 1e-6;
        let shifted = |eps: f64| {
            let mut tt = t.clone();
            tt[1] = tt[1].clone() + NovikovSeries::constant(1, eps);
            -&string_flow(&DescendantSeries::new(tt), 5).unwrap().0
        };
        let (up, um) = (shifted(h), shifted(-h));
        let pred = p.u.try_mul(&p.delta).unwrap();
        for k in 0..5 {
            let fd = (up.coeff_int(k) - um.coeff_int(k)) / (2.0 * h);
            prop_assert!((fd - pred.coeff_int(k)).abs() < 1e-5, "k={} fd={} pred={}", k, fd, pred.coeff_int(k));
        }
    }
}

#[test]
fn grading_weights_are_additive() {
    let reg = Registry::new(&["a", "b"]);
    let a = RatFunc::var(&reg, "a").unwrap();
    let b = RatFunc::var(&reg, "b").unwrap();
    let w = [rat(1, 1), rat(2, 1)];
    let f = (&a * &a + b.clone()).try_div(&a).unwrap();
    assert_eq!(f.homogeneous_weight(&w), Some(rat(1, 1)));
    assert_eq!((&a + &RatFunc::one()).homogeneous_weight(&w), None);
    assert!(RatFunc::zero().is_zero());
}

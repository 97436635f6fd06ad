use std::collections::BTreeMap;

use froblab_core::exact::{rat, RatFunc, Rational};
use froblab_core::frame::{CanonicalFrame, EigenOptions};
use froblab_core::frobenius::{residue_pairing, FrobeniusData};
use froblab_core::singularity::{stationary_phase_r, Jet4, MorseFamily};
use froblab_core::toric::{hypergeom_i_concave, mirror_map_extract, quantum_relation_extract, CohomJet, ToricBundleData};
use froblab_core::{HJet, NovikovSeries, EXACT};
use num_traits::{One, Zero};
use proptest::prelude::*;

type Q = NovikovSeries<Rational>;

/// Expands `exp((f3 z^3/6 + f4 z^4/24)/hbar) (w0 + w1 z + w2 z^2/2)` and integrates against the
/// Gaussian `exp(f2 z^2 / (2 hbar))`: `<z^{2k}> = (2k-1)!! (-hbar/f2)^k`. Returns the `hbar^1`
/// coefficient over `w0`.
fn gaussian_oracle(j: &Jet4<Rational>) -> Rational {
    // (z power, hbar power) -> coefficient
    type P = BTreeMap<(u32, i32), Rational>;
    let mul = |a: &P, b: &P| {
        let mut out = P::new();
        for ((za, ha), ca) in a {
            for ((zb, hb), cb) in b {
                *out.entry((za + zb, ha + hb)).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        out
    };
    let mut g = P::new();
    g.insert((3, -1), &j.f3 / rat(6, 1));
    g.insert((4, -1), &j.f4 / rat(24, 1));
    let mut amp = P::new();
    amp.insert((0, 0), j.w0.clone());
    amp.insert((1, 0), j.w1.clone());
    amp.insert((2, 0), &j.w2 / rat(2, 1));
    let mut series = amp.clone();
    let mut gp = P::from([((0, 0), Rational::one())]);
    let mut fact = Rational::one();
    for n in 1..=4 {
        gp = mul(&gp, &g);
        fact *= rat(n, 1);
        for (k, c) in mul(&gp, &amp) {
            *series.entry(k).or_insert_with(Rational::zero) += c / &fact;
        }
    }
    let s = -(Rational::one() / &j.f2);
    let mut acc = Rational::zero();
    for ((z, h), c) in series {
        if z % 2 == 1 {
            continue;
        }
        let k = (z / 2) as i32;
        if h + k != 1 {
            continue;
        }
        let dfact = (1..=k).fold(Rational::one(), |a, i| a * rat(2 * i as i64 - 1, 1));
        acc += c * dfact * (0..k).fold(Rational::one(), |a, _| a * &s);
    }
    acc / &j.w0
}

fn nonzero() -> impl Strategy<Value = Rational> {
    (1i64..40, 1i64..9, any::<bool>()).prop_map(|(n, d, neg)| rat(if neg { -n } else { n }, d))
}

fn any_rat() -> impl Strategy<Value = Rational> {
    (-40i64..40, 1i64..9).prop_map(|(n, d)| rat(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn stationary_phase_matches_gaussian_moments(
        f2 in nonzero(), f3 in any_rat(), f4 in any_rat(), w0 in nonzero(), w1 in any_rat(), w2 in any_rat()
    ) {
        let j = Jet4 { u: Rational::zero(), f2, f3, f4, w0, w1, w2 };
        prop_assert_eq!(stationary_phase_r(&j).unwrap(), gaussian_oracle(&j));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn residue_pairing_is_a_root_sum(roots in proptest::collection::btree_set(-6i64..7, 2..5), a in 0usize..5) {
        let roots: Vec<Rational> = roots.into_iter().map(|r| rat(r, 1)).collect();
        // prod (p - r_i), low to high
        let mut rel = vec![Rational::one()];
        for r in &roots {
            let mut next = vec![Rational::zero(); rel.len() + 1];
            for (k, c) in rel.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            rel = next;
        }
        let dp = |x: &Rational| rel.iter().enumerate().skip(1).fold(Rational::zero(), |acc, (k, c)| {
            acc + c * rat(k as i64, 1) * (0..k - 1).fold(Rational::one(), |p, _| p * x)
        });
        let expect = roots.iter().fold(Rational::zero(), |acc, r| {
            acc + (0..a).fold(Rational::one(), |p, _| p * r) / dp(r)
        });
        let c = |x: Rational| Q::constant(1, x);
        let rels: Vec<Q> = rel.iter().cloned().map(c).collect();
        let mut pa = vec![Q::zero(1, EXACT); a + 1];
        pa[a] = Q::one(1);
        let got = residue_pairing(&pa, &[Q::one(1)], &rels, 4).unwrap();
        prop_assert_eq!(got.constant_term(), expect);
        prop_assert!(got.terms().all(|(e, _)| e[0] == 0));
    }
}

fn conifold_coh() -> froblab_core::toric::Cohomology {
    ToricBundleData::conifold().coh
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn mirror_map_is_idempotent(c in proptest::collection::vec(-5i64..6, 9)) {
        let coh = conifold_coh();
        let order = 4;
        let ser = |cs: &[i64]| NovikovSeries::from_coeffs(
            std::iter::once(RatFunc::zero()).chain(cs.iter().map(|&x| RatFunc::from_int(x))), order);
        let mut comps: Vec<HJet<RatFunc>> = (0..2).map(|_| HJet::new(1, -3, 0, false, true)).collect();
        comps[0].set(0, NovikovSeries::one(1).truncate(order));
        comps[0].set(-1, ser(&c[0..3]));
        comps[1].set(-1, ser(&c[3..6]));
        comps[0].set(-2, ser(&c[6..9]));
        let i = CohomJet { comps };
        let (_, j) = mirror_map_extract(&i, &coh).unwrap();
        prop_assert!(j.coeff(-1).iter().all(|s| s.is_zero()));
        let (again, j2) = mirror_map_extract(&j, &coh).unwrap();
        prop_assert!(again.is_identity());
        prop_assert_eq!(j2, j);
    }
}

#[test]
fn cp1_and_cp2_wdvv() {
    let q = Q::q(1, 0);
    let eta = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]];
    let cp1 = FrobeniusData::from_relation("p", &[-q.clone(), Q::zero(1, EXACT)], eta).unwrap();
    assert!(cp1.wdvv_check(6).is_ok());
    let z = Q::zero(1, EXACT);
    let cp2 = FrobeniusData::from_relation("p", &[-q, z.clone(), z], vec![
        vec![rat(0, 1), rat(0, 1), rat(1, 1)],
        vec![rat(0, 1), rat(1, 1), rat(0, 1)],
        vec![rat(1, 1), rat(0, 1), rat(0, 1)],
    ])
    .unwrap();
    assert!(cp2.wdvv_check(6).is_ok());
}

#[test]
fn conifold_relation_matches_eigenvalue_squares() {
    let d = ToricBundleData::conifold();
    let i = hypergeom_i_concave(&d, 8, (-3, 0)).unwrap();
    let rel = quantum_relation_extract(&i, &d, &[0, 1], 8).unwrap();
    let rhs = rel.product[0].clone();
    let eta = d.localization_pairing().unwrap();
    let data = FrobeniusData::from_relation("p", &[-rhs.clone(), NovikovSeries::zero(1, EXACT)], eta).unwrap();
    let f = CanonicalFrame::build(&data, 8, &EigenOptions::default()).unwrap();
    let o = rat(8, 1);
    for a in 0..2 {
        let xi = &f.split.eigenvalues[a][1];
        assert_eq!(xi.try_mul(xi).unwrap().truncate_q(&o), rhs.truncate_q(&o));
    }
}

fn fd<F: Fn(&MorseFamily) -> Vec<f64>>(fam: &MorseFamily, k: usize, f: F) -> Vec<f64> {
    let h = 1e-5;
    let mut p = fam.params.clone();
    p[k] += h;
    let plus = f(&fam.with_params(p.clone()));
    p[k] -= 2.0 * h;
    let minus = f(&fam.with_params(p));
    plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

#[test]
fn envelope_and_hessian_ode_by_finite_differences() {
    // real critical points keep the comparison on real parts
    let fam = MorseFamily::a3(-2.0, 0.3);
    let pts = fam.points().unwrap();
    let z: Vec<_> = pts.iter().map(|p| p.z).collect();
    let dl = fam.dlog_delta(&z);
    let rhs = fam.hessian_ode_rhs().unwrap();
    for k in 1..3 {
        let du = fd(&fam, k, |f| f.points().unwrap().iter().map(|p| p.u.re).collect());
        let dlog = fd(&fam, k, |f| f.points().unwrap().iter().map(|p| p.delta.re.abs().ln()).collect());
        let dr = fd(&fam, k, |f| f.points().unwrap().iter().map(|p| p.r.re).collect());
        for a in 0..3 {
            let phi = z[a].powu(k as u32).re;
            assert!((du[a] - phi).abs() < 1e-6, "envelope {} {}", du[a], phi);
            assert!((dlog[a] - dl[a][k].re).abs() < 1e-5, "hessian {} {}", dlog[a], dl[a][k].re);
            assert!((dr[a] - rhs[a][k].re).abs() < 1e-5, "R ode {} {}", dr[a], rhs[a][k].re);
        }
    }
}

#[test]
fn floating_cp1_frame_runs_the_same_pipeline() {
    use froblab_core::elliptic::elliptic_dg_conformal;
    use froblab_core::frame::Normalization;
    let q = NovikovSeries::<f64>::q(1, 0);
    let eta = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let data = FrobeniusData::from_relation("p", &[-q, NovikovSeries::zero(1, EXACT)], eta).unwrap();
    let f = CanonicalFrame::build(&data, 6, &EigenOptions::default()).unwrap();
    let lad = f.r_ladder(1, &Normalization::Conformal).unwrap();
    let dg = elliptic_dg_conformal(&f, &lad.levels[0]).unwrap();
    let c = dg.total.dlogq(0);
    assert!((c.constant_term() + 1.0 / 24.0).abs() < 1e-12);
    assert!(c.terms().all(|(e, x)| e.iter().all(|&k| k == 0) || x.abs() < 1e-12));
    assert!(dg.total.dt0().terms().all(|(_, x)| x.abs() < 1e-12));
}

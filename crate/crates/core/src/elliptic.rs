//! Elliptic 1-form `dG` assembled from a canonical frame.
//!
//! Equivariant form: `sum d log Delta_a / 48 - sum c_{-1}^a du_a / 24 + sum R_aa du_a / 2`.
//! Conformal form drops the middle sum. Output lives on the `{dt0, dlog q_i}` co-frame.

use num_traits::Zero;

use crate::exact::{RatFunc, Rational};
use crate::frame::{CanonicalFrame, FrameError};
use crate::frobenius::Grading;
use crate::scalar::Coeff;
use crate::series::matrix::SMat;
use crate::series::{ClosednessWitness, NovikovSeries, OneForm, SeriesError, EXACT};

/// Per-summand breakdown of `dG`.
#[derive(Debug, Clone)]
pub struct EllipticForm<C> {
    pub hessian_term: OneForm<C>,
    pub c_term: OneForm<C>,
    pub r_term: OneForm<C>,
    pub total: OneForm<C>,
}

fn frac<C: Coeff>(n: i64, d: i64) -> C {
    C::from_rational(&Rational::new(n.into(), d.into()))
}

/// `d log f` with any constant or monomial prefactor dropping out.
pub fn dlog<C: Coeff>(f: &NovikovSeries<C>) -> Result<OneForm<C>, SeriesError> {
    let r = f.nvars();
    let mut comps = vec![NovikovSeries::zero(r, EXACT)];
    for j in 0..r {
        comps.push(f.theta(j).div_laurent(f)?);
    }
    Ok(OneForm::new(comps))
}

fn hessian_sum<C: Coeff>(frame: &CanonicalFrame<C>) -> Result<OneForm<C>, FrameError> {
    let mut acc = OneForm::zero(frame.nvars, EXACT);
    for d in &frame.delta {
        acc = acc.try_add(&dlog(d)?)?;
    }
    Ok(acc.scale(&frac(1, 48)))
}

fn weighted_du<C: Coeff>(frame: &CanonicalFrame<C>, w: &[NovikovSeries<C>]) -> Result<OneForm<C>, FrameError> {
    let mut acc = OneForm::zero(frame.nvars, EXACT);
    for (du, c) in frame.du.iter().zip(w) {
        acc = acc.try_add(&du.mul_series(c)?)?;
    }
    Ok(acc)
}

fn diag<C: Coeff>(r0: &SMat<C>) -> Vec<NovikovSeries<C>> {
    (0..r0.len()).map(|a| r0[a][a].clone()).collect()
}

fn consts<C: Coeff>(nvars: usize, cs: &[C]) -> Vec<NovikovSeries<C>> {
    cs.iter().map(|c| NovikovSeries::constant(nvars, c.clone())).collect()
}

fn assemble<C: Coeff>(h: OneForm<C>, c: OneForm<C>, r: OneForm<C>) -> Result<EllipticForm<C>, FrameError> {
    let total = h.try_add(&c)?.try_add(&r)?;
    Ok(EllipticForm { hessian_term: h, c_term: c, r_term: r, total })
}

/// Three-term equivariant form with `c_{-1}^a` per branch.
pub fn elliptic_dg_equivariant<C: Coeff>(
    frame: &CanonicalFrame<C>,
    r0: &SMat<C>,
    c_minus1: &[C],
) -> Result<EllipticForm<C>, FrameError> {
    let h = hessian_sum(frame)?;
    let c = weighted_du(frame, &consts(frame.nvars, c_minus1))?.scale(&frac(-1, 24));
    let r = weighted_du(frame, &diag(r0))?.scale(&frac(1, 2));
    assemble(h, c, r)
}

/// Conformal form `sum d log Delta_a / 48 + sum R_aa du_a / 2`.
pub fn elliptic_dg_conformal<C: Coeff>(frame: &CanonicalFrame<C>, r0: &SMat<C>) -> Result<EllipticForm<C>, FrameError> {
    let h = hessian_sum(frame)?;
    let r = weighted_du(frame, &diag(r0))?.scale(&frac(1, 2));
    assemble(h, OneForm::zero(frame.nvars, EXACT), r)
}

/// Two-term form `sum d log Delta_a / 48 + sum R_a du_a / 2` with `R_a = R_aa - shift_a / 12`.
pub fn elliptic_dg_two_term<C: Coeff>(
    frame: &CanonicalFrame<C>,
    r0: &SMat<C>,
    shift: &[C],
) -> Result<EllipticForm<C>, FrameError> {
    let h = hessian_sum(frame)?;
    let ra: Vec<NovikovSeries<C>> = diag(r0)
        .iter()
        .zip(shift)
        .map(|(r, s)| r.try_sub(&NovikovSeries::constant(frame.nvars, s.clone() * frac(1, 12))))
        .collect::<Result<_, _>>()?;
    let r = weighted_du(frame, &ra)?.scale(&frac(1, 2));
    assemble(h, OneForm::zero(frame.nvars, EXACT), r)
}

pub fn closedness_check<C: Coeff>(w: &OneForm<C>) -> Result<(), ClosednessWitness> {
    w.closedness_check()
}

/// Homogeneity of degree zero: the `dt0` component has weight `-1`, each `dlog q_i`
/// component weight `0`, with `deg q_i` and symbol weights from `grading`.
pub fn homogeneity_check(w: &OneForm<RatFunc>, grading: &Grading) -> Result<(), (usize, String)> {
    for (k, comp) in w.comps().iter().enumerate() {
        let expected = if k == 0 { Rational::from_integer((-1).into()) } else { Rational::zero() };
        for (e, c) in comp.terms() {
            let qdeg = e.iter().enumerate().fold(Rational::zero(), |acc, (i, &x)| {
                acc + grading.q_degrees[i].clone() * Rational::new(x.into(), (comp.lattice() as i64).into())
            });
            let weights: Vec<Rational> = c
                .registry()
                .map(|r| {
                    r.names().iter().map(|n| grading.symbol_weights.get(n).cloned().unwrap_or_else(Rational::zero)).collect()
                })
                .unwrap_or_default();
            if !c.homogeneous_weight(&weights).is_some_and(|x| x + qdeg.clone() == expected) {
                return Err((k, c.to_string()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, Registry};
    use crate::frame::{EigenOptions, Normalization};
    use crate::frobenius::FrobeniusData;
    use num_traits::One;
    use std::collections::BTreeMap;

    type S = NovikovSeries<RatFunc>;

    fn equivariant_cp1() -> (FrobeniusData<RatFunc>, RatFunc) {
        let reg = Registry::new(&["l"]);
        let l = RatFunc::var(&reg, "l").unwrap();
        let rel = vec![S::constant(1, -(&l * &l)) - S::q(1, 0), S::zero(1, EXACT)];
        let eta = vec![vec![RatFunc::zero(), RatFunc::one()], vec![RatFunc::one(), RatFunc::zero()]];
        (FrobeniusData::from_relation("p", &rel, eta).unwrap(), l)
    }

    #[test]
    fn equivariant_cp1_total() {
        let (data, l) = equivariant_cp1();
        let f = CanonicalFrame::build(&data, 8, &EigenOptions::default()).unwrap();
        let lad = f.r_ladder(1, &Normalization::ModQ).unwrap();
        let c = l.recip().unwrap().scale(&rat(1, 2));
        let cm1 = vec![c.clone(), -c.clone()];
        let dg = elliptic_dg_equivariant(&f, &lad.levels[0], &cm1).unwrap();
        let o = rat(6, 1);
        let expect = OneForm::new(vec![S::zero(1, EXACT), S::constant(1, RatFunc::constant(rat(-1, 24)))]);
        assert_eq!(dg.total.truncate_q(&o), expect.truncate_q(&o));
        assert!(closedness_check(&dg.total).is_ok());
        let two = elliptic_dg_two_term(&f, &lad.levels[0], &cm1).unwrap();
        assert_eq!(two.total.truncate_q(&o), dg.total.truncate_q(&o));
        let mut w = BTreeMap::new();
        w.insert("l".to_string(), rat(1, 1));
        let g = Grading { q_degrees: vec![rat(2, 1)], basis_degrees: vec![rat(0, 1), rat(1, 1)], symbol_weights: w };
        assert!(homogeneity_check(&dg.total.truncate_q(&o), &g).is_ok());
        // pilot independence
        let opts = EigenOptions { max_lattice: 6, pilot: Some(vec![RatFunc::from_int(3), RatFunc::from_int(-2)]) };
        let f2 = CanonicalFrame::build(&data, 8, &opts).unwrap();
        let lad2 = f2.r_ladder(1, &Normalization::ModQ).unwrap();
        let signs: Vec<RatFunc> = (0..2).map(|a| if f2.e[a] == f.e[0] { c.clone() } else { -c.clone() }).collect();
        let dg2 = elliptic_dg_equivariant(&f2, &lad2.levels[0], &signs).unwrap();
        assert_eq!(dg2.total.truncate_q(&o), expect.truncate_q(&o));
    }

    /// The two summands of the two-term form are `q/(48(l^2 + q))` and `-1/16 + l^2/(48(l^2 + q))`.
    /// At `l = 0` they become `1/48` and `-1/16`, the summands of the non-equivariant form.
    #[test]
    fn two_term_summands_have_nonequivariant_limits() {
        let (data, l) = equivariant_cp1();
        let f = CanonicalFrame::build(&data, 8, &EigenOptions::default()).unwrap();
        let lad = f.r_ladder(1, &Normalization::ModQ).unwrap();
        let c = l.recip().unwrap().scale(&rat(1, 2));
        let two = elliptic_dg_two_term(&f, &lad.levels[0], &[c.clone(), -c]).unwrap();
        let o = rat(6, 1);
        let l2 = &l * &l;
        let inv = (S::constant(1, l2.clone()) + S::q(1, 0)).truncate_q(&rat(8, 1)).inv().unwrap();
        let h = (S::q(1, 0) * inv.clone()).scale(&RatFunc::constant(rat(1, 48)));
        let r = S::constant(1, RatFunc::constant(rat(-1, 16))) + inv.scale(&l2.scale(&rat(1, 48)));
        assert_eq!(two.hessian_term.dlogq(0).truncate_q(&o), h.truncate_q(&o));
        assert_eq!(two.r_term.dlogq(0).truncate_q(&o), r.truncate_q(&o));
        assert!(two.hessian_term.dt0().truncate_q(&o).is_zero());

        let rel = vec![-S::q(1, 0), S::zero(1, EXACT)];
        let eta = vec![vec![RatFunc::zero(), RatFunc::one()], vec![RatFunc::one(), RatFunc::zero()]];
        let plain = FrobeniusData::from_relation("p", &rel, eta).unwrap();
        let g = CanonicalFrame::build(&plain, 8, &EigenOptions::default()).unwrap();
        let lg = g.r_ladder(1, &Normalization::Conformal).unwrap();
        let conf = elliptic_dg_conformal(&g, &lg.levels[0]).unwrap();
        assert_eq!(conf.hessian_term.dlogq(0).truncate_q(&o), S::constant(1, RatFunc::constant(rat(1, 48))).truncate_q(&o));
        assert_eq!(conf.r_term.dlogq(0).truncate_q(&o), S::constant(1, RatFunc::constant(rat(-1, 16))).truncate_q(&o));
    }

    #[test]
    fn ad_hoc_form_not_closed() {
        let w = OneForm::new(vec![NovikovSeries::<Rational>::q(1, 0), NovikovSeries::zero(1, EXACT)]);
        let wit = closedness_check(&w).unwrap_err();
        assert_eq!((wit.first.as_str(), wit.second.as_str()), ("t0", "log q"));
        assert!(closedness_check(&OneForm::<Rational>::zero(1, EXACT)).is_ok());
    }
}

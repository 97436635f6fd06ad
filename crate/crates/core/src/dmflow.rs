//! String flow for descendant series and the Deligne-Mumford vertex potentials.
//!
//! The flow is `t_k(tau) = sum_{n>=k} t_n (-tau)^{n-k} / (n-k)!`, with `t_0(tau)` shifted by
//! `tau`. The potentials come from the characteristics of the string equation:
//! `u = -tau*`, `delta = 1/(1 - t_1(tau*))`, `mu = u/24`, `nu = log(delta)/24`,
//! `s = e^{u/hbar}`, `v = e^{u/x + u/y}/(x + y)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exact::Rational;
use crate::scalar::Coeff;
use crate::series::{HJet, NovikovSeries, SeriesError, EXACT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmError {
    #[error("string flow does not converge q-adically")]
    NoConvergence,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `T(c) = t_0 + t_1 c + t_2 c^2 + ...`.
#[derive(Debug, Clone)]
pub struct DescendantSeries<C> {
    pub t: Vec<NovikovSeries<C>>,
}

fn in_ideal<C: Coeff>(s: &NovikovSeries<C>) -> bool {
    s.terms().all(|(e, _)| e.iter().any(|&x| x > 0) && e.iter().all(|&x| x >= 0))
}

fn fact<C: Coeff>(n: usize) -> C {
    (1..=n as i64).fold(C::one(), |a, k| a * C::from_int(k))
}

impl<C: Coeff> DescendantSeries<C> {
    pub fn new(t: Vec<NovikovSeries<C>>) -> Self {
        DescendantSeries { t }
    }

    pub fn nvars(&self) -> usize {
        self.t.first().map_or(1, |s| s.nvars())
    }

    pub fn coeff(&self, k: usize) -> NovikovSeries<C> {
        self.t.get(k).cloned().unwrap_or_else(|| NovikovSeries::zero(self.nvars(), EXACT))
    }

    /// `t_k` after flowing for time `tau` (without the `tau` shift on `t_0`).
    pub fn flowed_coeff(&self, k: usize, tau: &NovikovSeries<C>) -> Result<NovikovSeries<C>, SeriesError> {
        let m = -tau;
        let mut acc = NovikovSeries::zero(self.nvars(), EXACT);
        let mut pw = NovikovSeries::one(self.nvars());
        for n in k..self.t.len() {
            if n > k {
                pw = pw.try_mul(&m)?;
            }
            acc = acc.try_add(&self.t[n].try_mul(&pw)?.scale(&(C::one() / fact::<C>(n - k))))?;
        }
        Ok(acc)
    }

    /// `t_0(tau) = tau + sum_n t_n (-tau)^n / n!`.
    pub fn t0_at(&self, tau: &NovikovSeries<C>) -> Result<NovikovSeries<C>, SeriesError> {
        tau.try_add(&self.flowed_coeff(0, tau)?)
    }

    /// Supported convergence regimes: every `t_i` with `i > 0` vanishes mod `q`, or `t_0`
    /// does; either way `1 - t_1` must have an invertible constant term.
    pub fn support_ok(&self) -> bool {
        let higher = self.t.iter().skip(1).all(in_ideal);
        let base = self.t.first().is_none_or(in_ideal);
        let lead = C::one() - self.coeff(1).constant_term();
        (higher || base) && lead.is_unit()
    }
}

/// Solves `t_0(tau*) = 0` by Newton iteration and returns `tau*` with the flowed series.
///
/// Fails with `NoConvergence` outside the regimes accepted by [`DescendantSeries::support_ok`].
pub fn string_flow<C: Coeff>(
    t: &DescendantSeries<C>,
    order: i64,
) -> Result<(NovikovSeries<C>, DescendantSeries<C>), DmError> {
    if !t.support_ok() {
        return Err(DmError::NoConvergence);
    }
    let o = Rational::from_integer(order.into());
    let trunc = DescendantSeries::new(t.t.iter().map(|s| s.truncate_q(&o)).collect());
    let nv = t.nvars();
    let mut tau = NovikovSeries::zero(nv, EXACT).truncate_q(&o);
    // q-adic precision doubles per step once the q^0 part is fixed
    let steps = 2 * (64 - (order.max(1) as u64).leading_zeros()) + 4;
    for _ in 0..steps {
        let f = trunc.t0_at(&tau)?;
        let fp = NovikovSeries::one(nv).truncate_q(&o).try_sub(&trunc.flowed_coeff(1, &tau)?)?;
        let next = tau.try_sub(&f.try_div(&fp)?)?.truncate_q(&o);
        let done = next == tau;
        tau = next;
        if done {
            break;
        }
    }
    let flowed = (0..trunc.t.len())
        .map(|k| {
            if k == 0 {
                trunc.t0_at(&tau).map(|s| s.truncate_q(&o))
            } else {
                trunc.flowed_coeff(k, &tau).map(|s| s.truncate_q(&o))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok((tau, DescendantSeries::new(flowed)))
}

/// Laurent polynomial in `1/x`, `1/y` with series coefficients: `coeffs[(a, b)]` multiplies `x^a y^b`.
#[derive(Debug, Clone)]
pub struct TwoJet<C> {
    pub coeffs: BTreeMap<(i64, i64), NovikovSeries<C>>,
}

impl<C: Coeff> TwoJet<C> {
    fn add_at(&mut self, k: (i64, i64), s: NovikovSeries<C>) -> Result<(), SeriesError> {
        let v = match self.coeffs.remove(&k) {
            Some(old) => old.try_add(&s)?,
            None => s,
        };
        if !v.is_zero() {
            self.coeffs.insert(k, v);
        }
        Ok(())
    }

    /// `(x + y) * self`.
    pub fn times_x_plus_y(&self) -> Result<Self, SeriesError> {
        let mut out = TwoJet { coeffs: BTreeMap::new() };
        for ((a, b), s) in &self.coeffs {
            out.add_at((a + 1, *b), s.clone())?;
            out.add_at((*a, b + 1), s.clone())?;
        }
        Ok(out)
    }

    /// Restriction to `x^a y^b` with `lo <= a, b <= 0`.
    pub fn window(&self, lo: i64) -> Self {
        TwoJet { coeffs: self.coeffs.iter().filter(|((a, b), _)| *a >= lo && *b >= lo && *a <= 0 && *b <= 0).map(|(k, s)| (*k, s.clone())).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct DmPotentials<C> {
    pub tau_star: NovikovSeries<C>,
    pub flowed: DescendantSeries<C>,
    pub u: NovikovSeries<C>,
    pub delta: NovikovSeries<C>,
    pub mu: NovikovSeries<C>,
    pub nu: NovikovSeries<C>,
    /// `e^{u/hbar}` down to `hbar^lo`.
    pub s: HJet<C>,
    /// `e^{u/x + u/y}` for `x^a y^b`, `lo <= a, b <= 0`.
    pub exp_uv: TwoJet<C>,
    /// `e^{u/x + u/y} / (x + y)` expanded in `y/x`, kept where complete for `a >= lo - 1`.
    pub v: TwoJet<C>,
    pub window: i64,
}

/// Potentials from the flow, with `hbar`, `x`, `y` windows down to power `lo`.
pub fn dm_potentials<C: Coeff>(t: &DescendantSeries<C>, order: i64, lo: i64) -> Result<DmPotentials<C>, DmError> {
    let (tau_star, flowed) = string_flow(t, order)?;
    let o = Rational::from_integer(order.into());
    let nv = t.nvars();
    let u = -&tau_star;
    let one = NovikovSeries::one(nv).truncate_q(&o);
    let delta = one.try_sub(&flowed.coeff(1))?.inv()?;
    let c24 = C::one() / C::from_int(24);
    let mu = u.scale(&c24);
    let nu = delta.log()?.scale(&c24);
    let s = HJet::exp_over_hbar(&u, lo)?;
    let w = -lo;
    let mut pows = vec![NovikovSeries::one(nv)];
    for k in 1..=(3 * w + 3) as usize {
        pows.push(pows[k - 1].try_mul(&u)?.truncate_q(&o));
    }
    let coef = |i: usize, j: usize| pows[i + j].scale(&(C::one() / (fact::<C>(i) * fact::<C>(j))));
    let mut exp_uv = TwoJet { coeffs: BTreeMap::new() };
    for i in 0..=w as usize {
        for j in 0..=w as usize {
            exp_uv.add_at((-(i as i64), -(j as i64)), coef(i, j))?;
        }
    }
    // v = sum u^{i+j}/(i! j!) (-1)^n x^{-i-n-1} y^{n-j}
    let mut v = TwoJet { coeffs: BTreeMap::new() };
    for i in 0..=(w + 1) as usize {
        for n in 0..=(w + 1) as usize - i {
            for j in 0..=(2 * w + 2) as usize {
                let c = coef(i, j);
                let c = if n % 2 == 1 { -c } else { c };
                v.add_at((-(i as i64) - n as i64 - 1, n as i64 - j as i64), c)?;
            }
        }
    }
    Ok(DmPotentials { tau_star, flowed, u, delta, mu, nu, s, exp_uv, v, window: lo })
}

impl<C: Coeff> DmPotentials<C> {
    /// `(x + y) v - e^{u/x + u/y}` on the window.
    pub fn v_identity_defect(&self) -> Result<TwoJet<C>, SeriesError> {
        let lhs = self.v.times_x_plus_y()?.window(self.window);
        let mut d = lhs;
        for (k, s) in &self.exp_uv.coeffs {
            d.add_at(*k, -s)?;
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, RatFunc, Registry};

    type Q = NovikovSeries<Rational>;

    fn qs(cs: &[i64]) -> Q {
        Q::from_coeffs(cs.iter().map(|&c| rat(c, 1)), EXACT)
    }

    #[test]
    fn affine_flow_closed_form() {
        let t0 = qs(&[0, 1, 2]);
        let t1 = qs(&[0, 3]);
        let t = DescendantSeries::new(vec![t0.clone(), t1.clone()]);
        let (tau, flowed) = string_flow(&t, 6).unwrap();
        let o = rat(6, 1);
        let one = Q::one(1).truncate_q(&o);
        let expect = -(&t0.try_mul(&one.try_sub(&t1).unwrap().inv().unwrap()).unwrap());
        assert_eq!(tau, expect.truncate_q(&o));
        assert!(flowed.t[0].is_zero());
        assert_eq!(flowed.t[1], t1.truncate_q(&o));
        let p = dm_potentials(&t, 6, -3).unwrap();
        assert_eq!(p.delta, one.try_sub(&t1).unwrap().inv().unwrap());
        assert!(p.v_identity_defect().unwrap().coeffs.is_empty());
        // re-flowing gives zero time
        let (again, _) = string_flow(&flowed, 6).unwrap();
        assert!(again.is_zero());
    }

    #[test]
    fn trivial_flows() {
        let t = DescendantSeries::new(vec![qs(&[0, 0, 5])]);
        let (tau, flowed) = string_flow(&t, 5).unwrap();
        assert_eq!(tau, -&qs(&[0, 0, 5]).truncate(5));
        assert!(flowed.t.iter().all(|s| s.is_zero()));
        let z = DescendantSeries::new(vec![Q::zero(1, EXACT)]);
        assert!(string_flow(&z, 5).unwrap().0.is_zero());
        let bad = DescendantSeries::new(vec![qs(&[1]), qs(&[0, 1]), qs(&[1])]);
        assert_eq!(string_flow(&bad, 5).unwrap_err(), DmError::NoConvergence);
    }

    #[test]
    fn u_is_homogeneous() {
        // deg a = 1, deg b = 0, deg c = -1 with deg q = 0
        let reg = Registry::new(&["a", "b", "c"]);
        let v = |n: &str| RatFunc::var(&reg, n).unwrap();
        let q = NovikovSeries::<RatFunc>::q(1, 0);
        let t = DescendantSeries::new(vec![q.scale(&v("a")), q.scale(&v("b")), q.scale(&v("c"))]);
        let p = dm_potentials(&t, 5, -2).unwrap();
        let w = [rat(1, 1), rat(0, 1), rat(-1, 1)];
        for (_, c) in p.u.terms() {
            assert_eq!(c.homogeneous_weight(&w), Some(rat(1, 1)), "{}", c);
        }
        assert!(!p.u.is_zero());
        assert_eq!(p.mu, p.u.scale(&RatFunc::constant(rat(1, 24))));
    }
}

//! Truncated Novikov series with exponents on a rational lattice `(1/N)Z^r`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use super::ext::ExtFunction;
use super::SeriesError;
use crate::exact::{rint, RatFunc, Rational};
use crate::scalar::Coeff;

/// Order of a series known exactly (no truncation).
pub const EXACT: i64 = i64::MAX / 8;

fn ord_add(a: i64, b: i64) -> i64 {
    if a >= EXACT || b >= EXACT {
        EXACT
    } else {
        (a + b).min(EXACT)
    }
}

fn ord_scale(o: i64, k: i64) -> i64 {
    if o >= EXACT {
        EXACT
    } else {
        o * k
    }
}

fn deg(e: &[i64]) -> i64 {
    e.iter().sum()
}

/// Truncated series `sum c_e q^(e/N)`.
///
/// Exponents are stored in units of `1/N`. Every stored monomial has total degree below
/// `order` (also in units of `1/N`); coefficients at or above `order` are unknown.
#[derive(Clone, Debug)]
pub struct NovikovSeries<C> {
    nvars: usize,
    lattice: u32,
    terms: BTreeMap<Vec<i64>, C>,
    order: i64,
}

impl<C: Coeff> PartialEq for NovikovSeries<C> {
    fn eq(&self, o: &Self) -> bool {
        if self.nvars != o.nvars {
            return false;
        }
        let (a, b) = Self::unified(self, o);
        a.order == b.order && a.terms == b.terms
    }
}

impl<C: Coeff> NovikovSeries<C> {
    pub fn new(nvars: usize, lattice: u32, order: i64) -> Self {
        assert!(lattice > 0, "lattice denominator must be positive");
        NovikovSeries { nvars, lattice, terms: BTreeMap::new(), order }
    }

    pub fn zero(nvars: usize, order: i64) -> Self {
        Self::new(nvars, 1, order)
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::monomial(nvars, 1, vec![0; nvars], c, EXACT)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    /// `c * q^(exps/lattice)`.
    pub fn monomial(nvars: usize, lattice: u32, exps: Vec<i64>, c: C, order: i64) -> Self {
        Self::from_terms(nvars, lattice, [(exps, c)], order)
    }

    /// The Novikov variable `q_i` (exact).
    pub fn q(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, 1, e, C::one(), EXACT)
    }

    pub fn from_terms(
        nvars: usize,
        lattice: u32,
        terms: impl IntoIterator<Item = (Vec<i64>, C)>,
        order: i64,
    ) -> Self {
        let mut s = Self::new(nvars, lattice, order);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            s.add_term(e, c);
        }
        s
    }

    /// Builds a univariate series from integer-exponent coefficients `c_0, c_1, ...`.
    pub fn from_coeffs(coeffs: impl IntoIterator<Item = C>, order: i64) -> Self {
        Self::from_terms(1, 1, coeffs.into_iter().enumerate().map(|(k, c)| (vec![k as i64], c)), order)
    }

    fn add_term(&mut self, e: Vec<i64>, c: C) {
        if c.is_zero() || deg(&e) >= self.order {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn lattice(&self) -> u32 {
        self.lattice
    }
    /// Validity order in units of `1/N`.
    pub fn order(&self) -> i64 {
        self.order
    }
    /// Validity order in q-units; `None` when exact.
    pub fn order_q(&self) -> Option<Rational> {
        (self.order < EXACT).then(|| Rational::new(self.order.into(), (self.lattice as i64).into()))
    }
    pub fn is_exact(&self) -> bool {
        self.order >= EXACT
    }
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &C)> {
        self.terms.iter()
    }
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `q^(exps/N)` (exponents in this series' lattice units).
    pub fn coeff(&self, exps: &[i64]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    /// Coefficient of `q^e` for a rational exponent vector.
    pub fn coeff_q(&self, exps: &[Rational]) -> C {
        let n = Rational::from_integer((self.lattice as i64).into());
        let mut e = Vec::with_capacity(exps.len());
        for x in exps {
            let y = x * &n;
            if !y.is_integer() {
                return C::zero();
            }
            e.push(y.to_integer().to_i64().unwrap());
        }
        self.coeff(&e)
    }

    /// Univariate coefficient of `q^k` for integer `k`.
    pub fn coeff_int(&self, k: i64) -> C {
        assert_eq!(self.nvars, 1);
        self.coeff(&[k * self.lattice as i64])
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&vec![0; self.nvars])
    }

    /// Lowest total degree among stored terms (lattice units).
    pub fn valuation(&self) -> Option<i64> {
        self.terms.keys().map(|e| deg(e)).min()
    }

    /// Valuation, or the order for a zero series.
    fn val_or_order(&self) -> i64 {
        self.valuation().unwrap_or(self.order)
    }

    /// Same series on the lattice `(1/n)Z`; `n` must be a multiple of the current lattice.
    pub fn rebase(&self, n: u32) -> Self {
        assert!(n % self.lattice == 0, "lattice {} does not refine {}", n, self.lattice);
        let k = (n / self.lattice) as i64;
        if k == 1 {
            return self.clone();
        }
        NovikovSeries {
            nvars: self.nvars,
            lattice: n,
            terms: self.terms.iter().map(|(e, c)| (e.iter().map(|x| x * k).collect(), c.clone())).collect(),
            order: ord_scale(self.order, k),
        }
    }

    /// Rewrites on the coarsest lattice that holds every exponent and the order.
    pub fn compact(&self) -> Self {
        let mut g = self.lattice as i64;
        for e in self.terms.keys() {
            for &x in e {
                g = g.gcd(&x);
            }
        }
        if self.order < EXACT {
            g = g.gcd(&self.order);
        }
        if g <= 1 {
            return self.clone();
        }
        NovikovSeries {
            nvars: self.nvars,
            lattice: self.lattice / g as u32,
            terms: self.terms.iter().map(|(e, c)| (e.iter().map(|x| x / g).collect(), c.clone())).collect(),
            order: if self.order < EXACT { self.order / g } else { EXACT },
        }
    }

    pub(crate) fn unified(a: &Self, b: &Self) -> (Self, Self) {
        assert_eq!(a.nvars, b.nvars, "series over different numbers of Novikov variables");
        if a.lattice == b.lattice {
            return (a.clone(), b.clone());
        }
        let n = a.lattice.lcm(&b.lattice);
        (a.rebase(n), b.rebase(n))
    }

    /// Lowers the validity order to `o` (lattice units) and drops terms at or above it.
    pub fn truncate(&self, o: i64) -> Self {
        let order = self.order.min(o);
        NovikovSeries {
            nvars: self.nvars,
            lattice: self.lattice,
            terms: self.terms.iter().filter(|(e, _)| deg(e) < order).map(|(e, c)| (e.clone(), c.clone())).collect(),
            order,
        }
    }

    /// Truncates at q-order `o`, enlarging the lattice if `o` is fractional.
    pub fn truncate_q(&self, o: &Rational) -> Self {
        let den = o.denom().to_u32().unwrap_or(1);
        let n = self.lattice.lcm(&den);
        let s = self.rebase(n);
        let units = (o * Rational::from_integer((n as i64).into())).to_integer().to_i64().unwrap();
        s.truncate(units)
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, SeriesError> {
        if self.nvars != o.nvars {
            return Err(SeriesError::VariableMismatch(self.nvars, o.nvars));
        }
        let (a, b) = Self::unified(self, o);
        let order = a.order.min(b.order);
        let mut out = Self::new(a.nvars, a.lattice, order);
        for (e, c) in a.terms.into_iter().chain(b.terms) {
            out.add_term(e, c);
        }
        Ok(out)
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self, SeriesError> {
        self.try_add(&o.neg_ref())
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, SeriesError> {
        if self.nvars != o.nvars {
            return Err(SeriesError::VariableMismatch(self.nvars, o.nvars));
        }
        let (a, b) = Self::unified(self, o);
        let order = ord_add(a.order, b.val_or_order()).min(ord_add(b.order, a.val_or_order()));
        let mut out = Self::new(a.nvars, a.lattice, order);
        for (ea, ca) in &a.terms {
            let da = deg(ea);
            for (eb, cb) in &b.terms {
                if da + deg(eb) >= order {
                    continue;
                }
                let e: Vec<i64> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    fn neg_ref(&self) -> Self {
        self.map_coeffs(|c| -c.clone())
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::new(self.nvars, self.lattice, self.order);
        }
        self.map_coeffs(|x| x.clone() * c.clone())
    }

    /// Applies `f` to every coefficient, dropping those that become zero.
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> NovikovSeries<D> {
        let mut out = NovikovSeries::<D>::new(self.nvars, self.lattice, self.order);
        for (e, c) in &self.terms {
            let v = f(c);
            if !v.is_zero() {
                out.terms.insert(e.clone(), v);
            }
        }
        out
    }

    /// Fallible coefficient map.
    pub fn try_map_coeffs<D: Coeff, E>(&self, f: impl Fn(&C) -> Result<D, E>) -> Result<NovikovSeries<D>, E> {
        let mut out = NovikovSeries::<D>::new(self.nvars, self.lattice, self.order);
        for (e, c) in &self.terms {
            let v = f(c)?;
            if !v.is_zero() {
                out.terms.insert(e.clone(), v);
            }
        }
        Ok(out)
    }

    /// Multiplies by `q^(exps/N)` exactly (exponents in this lattice's units).
    pub fn shift(&self, exps: &[i64]) -> Self {
        let d = deg(exps);
        NovikovSeries {
            nvars: self.nvars,
            lattice: self.lattice,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().zip(exps).map(|(x, y)| x + y).collect(), c.clone()))
                .collect(),
            order: ord_add(self.order, d),
        }
    }

    fn require_bounded(&self) -> Result<(), SeriesError> {
        if self.is_exact() && self.terms.keys().any(|e| deg(e) != 0) {
            Err(SeriesError::UnboundedOrder)
        } else {
            Ok(())
        }
    }

    /// Multiplicative inverse for a series whose lowest part is a unit constant.
    pub fn inv(&self) -> Result<Self, SeriesError> {
        let zero = vec![0; self.nvars];
        let c0 = self.coeff(&zero);
        if !c0.is_unit() || self.terms.keys().any(|e| deg(e) <= 0 && *e != zero) {
            return Err(SeriesError::NonUnitDivisor);
        }
        if self.terms.len() == 1 {
            return Ok(Self::monomial(self.nvars, self.lattice, zero, C::one() / c0, self.order));
        }
        self.require_bounded()?;
        let two = Self::constant(self.nvars, C::from_int(2));
        let mut y = Self::monomial(self.nvars, self.lattice, zero, C::one() / c0, EXACT);
        // the error term's q-adic valuation doubles each step
        let v = self.terms.keys().map(|e| deg(e)).filter(|&d| d > 0).min().unwrap_or(1);
        let steps = 66 - ((self.order / v).max(1) as u64).leading_zeros();
        for _ in 0..steps {
            let next = y.try_mul(&two.try_sub(&self.try_mul(&y)?)?)?;
            if next == y {
                return Ok(next);
            }
            y = next;
        }
        Ok(y)
    }

    /// Leading part of the form `c q^e` when the lowest-degree terms form a single monomial.
    pub fn leading_monomial(&self) -> Option<(Vec<i64>, C)> {
        let v = self.valuation()?;
        let mut it = self.terms.iter().filter(|(e, _)| deg(e) == v);
        let (e, c) = it.next()?;
        if it.next().is_some() {
            return None;
        }
        Some((e.clone(), c.clone()))
    }

    /// Inverse allowing a monomial lowest term `c q^v`; the result carries `q^-v`
    /// and its order drops to `O - 2v`.
    pub fn inv_laurent(&self) -> Result<Self, SeriesError> {
        let (e, c) = self.leading_monomial().ok_or(SeriesError::NonUnitDivisor)?;
        if !c.is_unit() {
            return Err(SeriesError::NonUnitDivisor);
        }
        let neg: Vec<i64> = e.iter().map(|x| -x).collect();
        let unit = self.shift(&neg);
        Ok(unit.inv()?.shift(&neg))
    }

    pub fn try_div(&self, o: &Self) -> Result<Self, SeriesError> {
        self.try_mul(&o.inv()?)
    }

    /// Division allowing a monomial lowest term in the divisor.
    pub fn div_laurent(&self, o: &Self) -> Result<Self, SeriesError> {
        self.try_mul(&o.inv_laurent()?)
    }

    /// Integer power (negative powers use [`Self::inv_laurent`]).
    pub fn powi(&self, n: i64) -> Result<Self, SeriesError> {
        let mut base = if n < 0 { self.inv_laurent()? } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one(self.nvars);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.try_mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.try_mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// `exp(a)` for `a` without constant term.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.constant_term().is_zero() || self.valuation().is_some_and(|v| v <= 0) {
            return Err(SeriesError::ConstantTerm);
        }
        if self.is_zero() {
            return Ok(Self::one(self.nvars).truncate(self.order));
        }
        self.require_bounded()?;
        let v = self.valuation().unwrap();
        let kmax = (self.order + v - 1) / v;
        let mut acc = Self::one(self.nvars);
        let mut p = Self::one(self.nvars);
        for k in 1..=kmax {
            p = p.try_mul(self)?.scale(&C::from_rational(&Rational::new(1.into(), k.into())));
            acc = acc.try_add(&p)?;
        }
        Ok(acc.truncate(self.order))
    }

    /// `log(a)` for `a` with constant term 1.
    pub fn log(&self) -> Result<Self, SeriesError> {
        let one = Self::one(self.nvars);
        if !self.constant_term().is_one() {
            return Err(SeriesError::LogOfNonUnit);
        }
        let h = self.try_sub(&one)?;
        if h.valuation().is_some_and(|v| v <= 0) {
            return Err(SeriesError::LogOfNonUnit);
        }
        if h.is_zero() {
            return Ok(Self::zero(self.nvars, self.order).rebase(self.lattice));
        }
        h.require_bounded()?;
        let v = h.valuation().unwrap();
        let kmax = (h.order + v - 1) / v;
        let mut acc = Self::new(self.nvars, self.lattice, h.order);
        let mut p = one;
        for k in 1..=kmax {
            p = p.try_mul(&h)?;
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc = acc.try_add(&p.scale(&C::from_rational(&Rational::new(sign.into(), k.into()))))?;
        }
        Ok(acc)
    }

    /// `a^rho` for rational `rho`; the lowest part must be a monomial `c q^e` with `c^rho` in the ring.
    /// The lattice is enlarged as needed for `q^(rho e)`.
    pub fn pow(&self, rho: &Rational) -> Result<Self, SeriesError> {
        if rho.is_integer() && !rho.is_negative() {
            return self.powi(rho.to_integer().to_i64().unwrap());
        }
        let (e, c) = self.leading_monomial().ok_or(SeriesError::NonUnitDivisor)?;
        let m = rho.denom().to_u32().unwrap();
        let n = rho.numer().to_i64().unwrap();
        let root = c.try_root(m).ok_or(SeriesError::RootNotInField)?;
        let cr = root.powi(n);
        let neg: Vec<i64> = e.iter().map(|x| -x).collect();
        let unit = self.shift(&neg).scale(&(C::one() / c));
        let h = unit.try_sub(&Self::one(self.nvars))?;
        let mut acc = Self::one(self.nvars).truncate(unit.order);
        if !h.is_zero() {
            h.require_bounded()?;
            let v = h.valuation().unwrap();
            if v <= 0 {
                return Err(SeriesError::NonUnitDivisor);
            }
            let kmax = (h.order + v - 1) / v;
            let mut binom = Rational::one();
            let mut p = Self::one(self.nvars);
            for k in 1..=kmax {
                binom = binom * (rho - rint(k - 1)) / rint(k);
                p = p.try_mul(&h)?;
                acc = acc.try_add(&p.scale(&C::from_rational(&binom)))?;
            }
        }
        // exponent rho * e / N on a common lattice
        let lat = Rational::from_integer((self.lattice as i64).into());
        let mut newlat = self.lattice;
        let target: Vec<Rational> = e.iter().map(|&x| rho * Rational::from_integer(x.into()) / &lat).collect();
        for t in &target {
            newlat = newlat.lcm(&t.denom().to_u32().unwrap());
        }
        let nl = Rational::from_integer((newlat as i64).into());
        let shift: Vec<i64> = target.iter().map(|t| (t * &nl).to_integer().to_i64().unwrap()).collect();
        Ok(acc.rebase(newlat).shift(&shift).scale(&cr))
    }

    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        self.pow(&Rational::new(1.into(), 2.into()))
    }

    /// `q_i d/dq_i`.
    pub fn theta(&self, i: usize) -> Self {
        let n = self.lattice as i64;
        let mut out = Self::new(self.nvars, self.lattice, self.order);
        for (e, c) in &self.terms {
            if e[i] != 0 {
                out.terms.insert(e.clone(), c.clone() * C::from_rational(&Rational::new(e[i].into(), n.into())));
            }
        }
        out
    }

    /// Termwise inverse of [`Self::theta`]; a constant term becomes a `log q_i` coefficient.
    pub fn integrate(&self, i: usize) -> Result<ExtFunction<C>, SeriesError> {
        let n = self.lattice as i64;
        let mut series = Self::new(self.nvars, self.lattice, self.order);
        let mut logq = vec![C::zero(); self.nvars];
        for (e, c) in &self.terms {
            if e[i] != 0 {
                series.terms.insert(e.clone(), c.clone() * C::from_rational(&Rational::new(n.into(), e[i].into())));
            } else if e.iter().all(|&x| x == 0) {
                logq[i] = c.clone();
            } else {
                return Err(SeriesError::NotIntegrable);
            }
        }
        Ok(ExtFunction::new(C::zero(), logq, series))
    }

    /// Substitutes `q_i -> q_i exp(f_i)`; every `f_i` must lack a constant term.
    pub fn substitute_q(&self, f: &[Self]) -> Result<Self, SeriesError> {
        assert_eq!(f.len(), self.nvars);
        let n = Rational::from_integer((self.lattice as i64).into());
        let mut acc = Self::new(self.nvars, self.lattice, self.order);
        for (e, c) in &self.terms {
            let mut arg = Self::zero(self.nvars, EXACT);
            for (i, fi) in f.iter().enumerate() {
                if e[i] != 0 && !fi.is_zero() {
                    arg = arg.try_add(&fi.scale(&C::from_rational(&(Rational::from_integer(e[i].into()) / &n))))?;
                }
            }
            let base = Self::monomial(self.nvars, self.lattice, e.clone(), c.clone(), EXACT);
            let term = if arg.is_zero() {
                base.truncate(arg.order.min(self.order))
            } else {
                base.try_mul(&arg.truncate(self.order).exp()?)?
            };
            acc = acc.try_add(&term)?;
        }
        Ok(acc.truncate(self.order))
    }

    /// Inverse of the map `q_i -> q_i exp(f_i)`: returns `g` with `q -> q exp(g)` undoing it.
    pub fn inverse_q_map(f: &[Self]) -> Result<Vec<Self>, SeriesError> {
        let r = f.len();
        let mut g: Vec<Self> = f.iter().map(|fi| fi.neg_ref()).collect();
        // each pass fixes at least one more lattice degree
        let bound = f.iter().filter(|x| !x.is_exact()).map(|x| x.order + 2).max();
        for _ in 0..bound.unwrap_or(256).min(256) {
            let mut next = Vec::with_capacity(r);
            for fi in f {
                next.push(fi.substitute_q(&g)?.neg_ref());
            }
            if next == g {
                return Ok(g);
            }
            g = next;
        }
        match bound {
            Some(_) => Ok(g),
            None => Err(SeriesError::NoConvergence),
        }
    }

    /// Canonical text `coeff * q^e + ...` sorted by total degree then lexicographically.
    pub fn to_text(&self, names: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut keys: Vec<&Vec<i64>> = self.terms.keys().collect();
        keys.sort_by(|a, b| deg(a).cmp(&deg(b)).then(a.cmp(b)));
        let mut parts = Vec::with_capacity(keys.len());
        for e in keys {
            let c = &self.terms[e];
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0)
                .map(|(i, &x)| {
                    let r = Rational::new(x.into(), (self.lattice as i64).into());
                    if r.is_one() {
                        names[i].to_string()
                    } else if r.is_integer() {
                        format!("{}^{}", names[i], r)
                    } else {
                        format!("{}^({})", names[i], r)
                    }
                })
                .collect();
            let cs = if c.is_compound() { format!("({})", c) } else { c.to_string() };
            if mono.is_empty() {
                parts.push(cs);
            } else {
                parts.push(format!("{} * {}", cs, mono.join(" * ")));
            }
        }
        parts.join(" + ")
    }

    pub fn default_names(nvars: usize) -> Vec<String> {
        if nvars == 1 {
            vec!["q".to_string()]
        } else {
            (1..=nvars).map(|i| format!("q{}", i)).collect()
        }
    }
}

impl NovikovSeries<RatFunc> {
    /// Expands a rational function in the named Novikov variables; all other symbols stay in
    /// the coefficients. The denominator may vanish at `q = 0` only through a monomial factor.
    pub fn from_ratfunc(f: &RatFunc, qnames: &[&str], order: i64) -> Result<Self, SeriesError> {
        let nvars = qnames.len();
        let split = |p: &crate::exact::MultiPoly| -> Result<Self, SeriesError> {
            let mut s = Self::new(nvars, 1, EXACT);
            let reg = p.registry().cloned();
            for (e, c) in p.terms() {
                let mut qe = vec![0i64; nvars];
                let mut rest = e.clone();
                if let Some(reg) = &reg {
                    for (j, name) in qnames.iter().enumerate() {
                        if let Some(k) = reg.index(name) {
                            if k < e.len() {
                                qe[j] = e[k] as i64;
                                rest[k] = 0;
                            }
                        }
                    }
                }
                let coeff = match &reg {
                    Some(r) => RatFunc::from_poly(crate::exact::MultiPoly::monomial(r, rest, c.clone())),
                    None => RatFunc::constant(c.clone()),
                };
                let t = Self::monomial(nvars, 1, qe, coeff, EXACT);
                s = s.try_add(&t)?;
            }
            Ok(s)
        };
        let num = split(f.numer())?.truncate(order + 64);
        let den = split(f.denom())?;
        let dv = den.valuation().unwrap_or(0);
        let inv = den.truncate(order + 2 * dv.max(0) + 1).inv_laurent()?;
        Ok(num.try_mul(&inv)?.truncate(order))
    }
}

impl<C: Coeff> fmt::Display for NovikovSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = Self::default_names(self.nvars);
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        write!(f, "{}", self.to_text(&refs))?;
        if let Some(o) = self.order_q() {
            write!(f, " + O({})", o)?;
        }
        Ok(())
    }
}

macro_rules! series_binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl<'a, C: Coeff> $tr<&'a NovikovSeries<C>> for &'a NovikovSeries<C> {
            type Output = NovikovSeries<C>;
            fn $m(self, o: &'a NovikovSeries<C>) -> NovikovSeries<C> {
                self.$try(o).expect("series operands over different variables")
            }
        }
        impl<C: Coeff> $tr for NovikovSeries<C> {
            type Output = NovikovSeries<C>;
            fn $m(self, o: NovikovSeries<C>) -> NovikovSeries<C> {
                self.$try(&o).expect("series operands over different variables")
            }
        }
    };
}
series_binop!(Add, add, try_add);
series_binop!(Sub, sub, try_sub);
series_binop!(Mul, mul, try_mul);

impl<C: Coeff> Neg for NovikovSeries<C> {
    type Output = NovikovSeries<C>;
    fn neg(self) -> Self {
        self.neg_ref()
    }
}

impl<'a, C: Coeff> Neg for &'a NovikovSeries<C> {
    type Output = NovikovSeries<C>;
    fn neg(self) -> NovikovSeries<C> {
        self.neg_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, Registry};

    type Q = NovikovSeries<Rational>;

    fn geom(order: i64) -> Q {
        Q::from_coeffs((0..order).map(|_| rat(1, 1)), order)
    }

    #[test]
    fn telescoping() {
        let one_minus_q = Q::from_coeffs([rat(1, 1), rat(-1, 1)], EXACT);
        let p = &one_minus_q * &geom(8);
        assert_eq!(p.order(), 8);
        assert_eq!(p, Q::one(1).truncate(8));
    }

    #[test]
    fn geometric_inverse() {
        let s = Q::from_coeffs([rat(1, 1), rat(-1, 1)], EXACT).truncate(6).inv().unwrap();
        assert_eq!(s, geom(6));
    }

    #[test]
    fn q_is_not_a_unit() {
        assert_eq!(Q::q(1, 0).truncate(5).inv(), Err(SeriesError::NonUnitDivisor));
        let inv = Q::q(1, 0).truncate(5).inv_laurent().unwrap();
        assert_eq!(inv.coeff(&[-1]), rat(1, 1));
        assert_eq!(inv.order(), 3);
    }

    #[test]
    fn exp_log_roundtrip() {
        let a = Q::from_coeffs([rat(1, 1), rat(1, 1)], EXACT).truncate(7);
        let back = a.log().unwrap().exp().unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn binomial_with_symbols() {
        let reg = Registry::new(&["l", "q"]);
        let l = RatFunc::var(&reg, "l").unwrap();
        let q = RatFunc::var(&reg, "q").unwrap();
        let f = &(&l * &l) + &q;
        let s = NovikovSeries::from_ratfunc(&f, &["q"], 5).unwrap().sqrt().unwrap();
        assert_eq!(s.coeff_int(0), l.clone());
        assert_eq!(s.coeff_int(1), RatFunc::constant(rat(1, 2)) / l.clone());
        assert_eq!(s.coeff_int(2), RatFunc::constant(rat(-1, 8)) / l.powi(3));
        let sq = &s * &s;
        assert_eq!(sq, NovikovSeries::from_ratfunc(&f, &["q"], 5).unwrap());
    }

    #[test]
    fn half_lattice_root() {
        let s = Q::q(1, 0).truncate(4).sqrt().unwrap();
        assert_eq!(s.lattice(), 2);
        assert_eq!(s.coeff(&[1]), rat(1, 1));
    }

    #[test]
    fn calculus() {
        let a = Q::from_coeffs([rat(0, 1), rat(1, 1), rat(3, 1)], EXACT);
        assert_eq!(a.theta(0), Q::from_coeffs([rat(0, 1), rat(1, 1), rat(6, 1)], EXACT));
        let b = Q::from_coeffs([rat(1, 1), rat(1, 1)], EXACT);
        let ext = b.integrate(0).unwrap();
        assert_eq!(ext.logq()[0], rat(1, 1));
        assert_eq!(ext.series(), &Q::q(1, 0));
    }

    #[test]
    fn substitution_and_inverse() {
        let q = Q::q(1, 0).truncate(6);
        let f = q.clone();
        let s = q.substitute_q(&[f.clone()]).unwrap();
        assert_eq!(s.coeff_int(1), rat(1, 1));
        assert_eq!(s.coeff_int(2), rat(1, 1));
        assert_eq!(s.coeff_int(3), rat(1, 2));
        assert_eq!(s.coeff_int(4), rat(1, 6));
        let g = Q::inverse_q_map(&[f.clone()]).unwrap();
        let back = s.substitute_q(&g).unwrap();
        assert_eq!(back, q);
        assert_eq!(q.substitute_q(&[Q::zero(1, 6)]).unwrap(), q);
    }

    #[test]
    fn canonical_text() {
        let a = Q::from_coeffs([rat(1, 2), rat(0, 1), rat(-3, 1)], EXACT);
        assert_eq!(a.to_text(&["q"]), "1/2 + -3 * q^2");
    }
}

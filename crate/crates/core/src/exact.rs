//! Multivariate polynomials and rational functions over arbitrary-precision rationals.
//!
//! Monomials are ordered lexicographically by the position of their symbols in a [`Registry`].
//! Values built from different registries never mix; values with no symbols at all (plain
//! constants) carry no registry and combine with anything.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always stored reduced with a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("polynomial is not a perfect square")]
    NotAPerfectSquare,
    #[error("pole at evaluation point")]
    PoleAtPoint,
    #[error("symbol `{0}` has no assigned value")]
    MissingSymbol(String),
    #[error("values from different symbol registries were combined: {0:?} vs {1:?}")]
    RegistryMismatch(Vec<String>, Vec<String>),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rint(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact square root of a rational, if it exists.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    rational_root(r, 2)
}

/// Exact `n`-th root of a rational (positive branch for even `n`).
pub fn rational_root(r: &Rational, n: u32) -> Option<Rational> {
    if n == 1 {
        return Some(r.clone());
    }
    if r.is_zero() {
        return Some(Rational::zero());
    }
    let neg = r.is_negative();
    if neg && n % 2 == 0 {
        return None;
    }
    let num = r.numer().abs();
    let den = r.denom().clone();
    let a = num.nth_root(n);
    let b = den.nth_root(n);
    if num::pow_eq(&a, n, &num) && num::pow_eq(&b, n, &den) {
        let s = Rational::new(a, b);
        Some(if neg { -s } else { s })
    } else {
        None
    }
}

mod num {
    use num_bigint::BigInt;
    use num_traits::Pow;
    pub fn pow_eq(a: &BigInt, n: u32, target: &BigInt) -> bool {
        &Pow::pow(a, n) == target
    }
}

pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Ordered list of symbol names; its order fixes the lexicographic monomial order.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct Registry {
    names: Vec<String>,
}

impl Registry {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Arc<Registry> {
        Arc::new(Registry { names: names.iter().map(|s| s.as_ref().to_string()).collect() })
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn len(&self) -> usize {
        self.names.len()
    }
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

fn same_registry(a: &Arc<Registry>, b: &Arc<Registry>) -> bool {
    Arc::ptr_eq(a, b) || a.names == b.names
}

pub(crate) fn unify(
    a: &Option<Arc<Registry>>,
    b: &Option<Arc<Registry>>,
) -> Result<Option<Arc<Registry>>, ExactError> {
    match (a, b) {
        (None, None) => Ok(None),
        (Some(r), None) | (None, Some(r)) => Ok(Some(r.clone())),
        (Some(x), Some(y)) => {
            if same_registry(x, y) {
                Ok(Some(x.clone()))
            } else {
                Err(ExactError::RegistryMismatch(x.names.clone(), y.names.clone()))
            }
        }
    }
}

type Mono = Vec<u32>;

/// Sparse multivariate polynomial with rational coefficients.
///
/// Terms are keyed by exponent vectors; `BTreeMap` order on those vectors is exactly the
/// lexicographic order of the registry, so the leading term is the last entry.
#[derive(Clone)]
pub struct MultiPoly {
    reg: Option<Arc<Registry>>,
    terms: BTreeMap<Mono, Rational>,
}

impl PartialEq for MultiPoly {
    fn eq(&self, other: &Self) -> bool {
        if self.terms.len() != other.terms.len() {
            return false;
        }
        let nv = self.nvars().max(other.nvars());
        let a = self.padded(nv);
        let b = other.padded(nv);
        a == b
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl MultiPoly {
    pub fn zero() -> Self {
        MultiPoly { reg: None, terms: BTreeMap::new() }
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        MultiPoly { reg: None, terms }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// The polynomial consisting of a single symbol.
    pub fn var(reg: &Arc<Registry>, name: &str) -> Result<Self, ExactError> {
        let i = reg.index(name).ok_or_else(|| ExactError::UnknownSymbol(name.to_string()))?;
        let mut e = vec![0; reg.len()];
        e[i] = 1;
        Ok(Self::monomial(reg, e, Rational::one()))
    }

    pub fn monomial(reg: &Arc<Registry>, exps: Vec<u32>, c: Rational) -> Self {
        assert_eq!(exps.len(), reg.len());
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        MultiPoly { reg: Some(reg.clone()), terms }.simplified()
    }

    pub fn from_terms(reg: &Arc<Registry>, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Self {
        let mut p = MultiPoly { reg: Some(reg.clone()), terms: BTreeMap::new() };
        for (e, c) in terms {
            assert_eq!(e.len(), reg.len());
            p.add_term(e, c);
        }
        p.simplified()
    }

    pub fn registry(&self) -> Option<&Arc<Registry>> {
        self.reg.as_ref()
    }

    fn nvars(&self) -> usize {
        self.reg.as_ref().map_or(0, |r| r.len())
    }

    /// Drops the registry from polynomials that turned out to be constant.
    fn simplified(mut self) -> Self {
        if self.reg.is_some() && self.terms.keys().all(|e| e.iter().all(|&x| x == 0)) {
            let c = self.terms.values().next().cloned();
            self.terms.clear();
            if let Some(c) = c {
                self.terms.insert(Vec::new(), c);
            }
            self.reg = None;
        }
        self
    }

    fn padded(&self, nv: usize) -> BTreeMap<Mono, Rational> {
        if self.nvars() == nv {
            return self.terms.clone();
        }
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut e = e.clone();
                e.resize(nv, 0);
                (e, c.clone())
            })
            .collect()
    }

    fn lift(&self, reg: &Option<Arc<Registry>>) -> BTreeMap<Mono, Rational> {
        self.padded(reg.as_ref().map_or(0, |r| r.len()))
    }

    fn add_term(&mut self, e: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_constant() {
            Some(self.terms.values().next().cloned().unwrap_or_else(Rational::zero))
        } else {
            None
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Leading term under the lexicographic order.
    pub fn leading(&self) -> Option<(&Vec<u32>, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> Rational {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, ExactError> {
        let reg = unify(&self.reg, &o.reg)?;
        let mut terms = self.lift(&reg);
        let mut out = MultiPoly { reg: reg.clone(), terms: BTreeMap::new() };
        std::mem::swap(&mut out.terms, &mut terms);
        for (e, c) in o.lift(&reg) {
            out.add_term(e, c);
        }
        Ok(out.simplified())
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self, ExactError> {
        self.try_add(&o.neg_ref())
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self, ExactError> {
        let reg = unify(&self.reg, &o.reg)?;
        if self.is_zero() || o.is_zero() {
            return Ok(MultiPoly::zero());
        }
        let a = self.lift(&reg);
        let b = o.lift(&reg);
        let mut out = MultiPoly { reg, terms: BTreeMap::new() };
        for (ea, ca) in &a {
            for (eb, cb) in &b {
                let e: Mono = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out.simplified())
    }

    fn neg_ref(&self) -> Self {
        MultiPoly { reg: self.reg.clone(), terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return MultiPoly::zero();
        }
        MultiPoly { reg: self.reg.clone(), terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = MultiPoly::one();
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|e| e.get(v).copied().unwrap_or(0)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Coefficient of `x_v^k`, as a polynomial not involving `x_v`.
    fn coeff_in(&self, v: usize, k: u32) -> Self {
        let mut out = MultiPoly { reg: self.reg.clone(), terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            if e.get(v).copied().unwrap_or(0) == k {
                let mut e2 = e.clone();
                if v < e2.len() {
                    e2[v] = 0;
                }
                out.terms.insert(e2, c.clone());
            }
        }
        out.simplified()
    }

    fn mul_var_pow(&self, v: usize, k: u32, nv: usize, reg: &Option<Arc<Registry>>) -> Self {
        let mut out = MultiPoly { reg: reg.clone(), terms: BTreeMap::new() };
        for (e, c) in self.padded(nv) {
            let mut e = e;
            e[v] += k;
            out.terms.insert(e, c);
        }
        out
    }

    /// Smallest variable index occurring in either polynomial.
    fn first_var(a: &Self, b: &Self) -> Option<usize> {
        let nv = a.nvars().max(b.nvars());
        (0..nv).find(|&v| a.degree_in(v) > 0 || b.degree_in(v) > 0)
    }

    /// Exact division; `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        let reg = unify(&self.reg, &d.reg).ok()?;
        let nv = reg.as_ref().map_or(0, |r| r.len());
        let dt = d.padded(nv);
        let (dle, dlc) = dt.iter().next_back().map(|(e, c)| (e.clone(), c.clone()))?;
        let mut rem = MultiPoly { reg: reg.clone(), terms: self.padded(nv) };
        let mut quo = MultiPoly { reg: reg.clone(), terms: BTreeMap::new() };
        while let Some((re, rc)) = rem.terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone())) {
            if re.iter().zip(&dle).any(|(a, b)| a < b) {
                return None;
            }
            let qe: Mono = re.iter().zip(&dle).map(|(a, b)| a - b).collect();
            let qc = &rc / &dlc;
            for (e, c) in &dt {
                let e2: Mono = e.iter().zip(&qe).map(|(a, b)| a + b).collect();
                rem.add_term(e2, -(c * &qc));
            }
            quo.add_term(qe, qc);
        }
        Some(quo.simplified())
    }

    /// Scales to leading coefficient 1.
    pub fn monic(&self) -> Self {
        let lc = self.leading_coeff();
        if lc.is_zero() || lc.is_one() {
            return self.clone();
        }
        self.scale(&lc.recip())
    }

    /// Integer coefficients with unit gcd, keeping the sign of the leading term.
    fn primitive_int(&self) -> Self {
        let mut den = BigInt::one();
        let mut num = BigInt::zero();
        for c in self.terms.values() {
            den = den.lcm(c.denom());
            num = num.gcd(c.numer());
        }
        if num.is_zero() {
            return self.clone();
        }
        self.scale(&Rational::new(den, num))
    }

    fn content_in(&self, v: usize) -> Self {
        let d = self.degree_in(v);
        let mut g = MultiPoly::zero();
        for k in 0..=d {
            let c = self.coeff_in(v, k);
            if c.is_zero() {
                continue;
            }
            g = if g.is_zero() { c.monic() } else { gcd(&g, &c) };
            if g.is_constant() {
                return MultiPoly::one();
            }
        }
        g
    }

    fn pseudo_rem(a: &Self, b: &Self, v: usize, reg: &Option<Arc<Registry>>) -> Self {
        let nv = reg.as_ref().map_or(0, |r| r.len());
        let db = b.degree_in(v);
        let lb = b.coeff_in(v, db);
        let mut r = a.clone();
        while !r.is_zero() && r.degree_in(v) >= db {
            let dr = r.degree_in(v);
            let lr = r.coeff_in(v, dr);
            let t = (&lr * b).mul_var_pow(v, dr - db, nv, reg);
            r = &(&lb * &r) - &t;
        }
        r
    }

    /// Partial derivative with respect to symbol index `v`.
    pub fn derivative(&self, v: usize) -> Self {
        let mut out = MultiPoly { reg: self.reg.clone(), terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            let k = e.get(v).copied().unwrap_or(0);
            if k > 0 {
                let mut e2 = e.clone();
                e2[v] -= 1;
                out.add_term(e2, c * rint(k as i64));
            }
        }
        out.simplified()
    }

    pub fn eval(&self, assignment: &BTreeMap<String, Rational>) -> Result<Rational, ExactError> {
        let names = self.reg.as_ref().map(|r| r.names.clone()).unwrap_or_default();
        let mut vals = Vec::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if self.degree_in(i) == 0 {
                vals.push(Rational::zero());
                continue;
            }
            vals.push(assignment.get(n).cloned().ok_or_else(|| ExactError::MissingSymbol(n.clone()))?);
        }
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= num_traits::pow::Pow::pow(&vals[i], k as u32);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Substitutes polynomials for some symbols (by index); the rest are kept.
    pub fn substitute(&self, subs: &BTreeMap<usize, MultiPoly>) -> Result<Self, ExactError> {
        let mut acc = MultiPoly::zero();
        let reg = self.reg.clone();
        for (e, c) in &self.terms {
            let mut keep = e.clone();
            let mut t = MultiPoly::constant(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    if let Some(s) = subs.get(&i) {
                        keep[i] = 0;
                        t = t.try_mul(&s.pow(k))?;
                    }
                }
            }
            let mono = match &reg {
                Some(r) => MultiPoly::monomial(r, keep, Rational::one()),
                None => MultiPoly::one(),
            };
            acc = acc.try_add(&t.try_mul(&mono)?)?;
        }
        Ok(acc)
    }

    /// Re-expresses the polynomial over another registry containing all its symbols.
    pub fn rebase(&self, target: &Arc<Registry>) -> Result<Self, ExactError> {
        let Some(src) = &self.reg else { return Ok(self.clone()) };
        let map: Vec<usize> = src
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                if self.degree_in(i) == 0 {
                    Ok(usize::MAX)
                } else {
                    target.index(n).ok_or_else(|| ExactError::UnknownSymbol(n.clone()))
                }
            })
            .collect::<Result<_, _>>()?;
        let mut out = MultiPoly { reg: Some(target.clone()), terms: BTreeMap::new() };
        for (e, c) in &self.terms {
            let mut e2 = vec![0; target.len()];
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    e2[map[i]] = k;
                }
            }
            out.add_term(e2, c.clone());
        }
        Ok(out.simplified())
    }

    fn fmt_with(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = self.reg.as_ref().map(|r| r.names.clone()).unwrap_or_default();
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            for (i, &k) in e.iter().enumerate() {
                if k == 1 {
                    factors.push(names[i].clone());
                } else if k > 1 {
                    factors.push(format!("{}^{}", names[i], k));
                }
            }
            if factors.is_empty() {
                write!(f, "{}", fmt_rational(&a))?;
            } else if a.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_rational(&a), factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f)
    }
}

macro_rules! poly_binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl<'a> $tr<&'a MultiPoly> for &'a MultiPoly {
            type Output = MultiPoly;
            fn $m(self, o: &'a MultiPoly) -> MultiPoly {
                self.$try(o).expect("symbol registry mismatch")
            }
        }
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, o: MultiPoly) -> MultiPoly {
                self.$try(&o).expect("symbol registry mismatch")
            }
        }
    };
}
poly_binop!(Add, add, try_add);
poly_binop!(Sub, sub, try_sub);
poly_binop!(Mul, mul, try_mul);

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.neg_ref()
    }
}

/// Monic greatest common divisor (recursive primitive remainder sequences).
pub fn gcd(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return MultiPoly::one();
    }
    let reg = match unify(&a.reg, &b.reg) {
        Ok(r) => r,
        Err(e) => panic!("{e}"),
    };
    let nv = reg.as_ref().map_or(0, |r| r.len());
    if a.num_terms() == 1 || b.num_terms() == 1 {
        return monomial_gcd(a, b, nv, &reg);
    }
    if a == b {
        return a.monic();
    }
    let v = match MultiPoly::first_var(a, b) {
        Some(v) => v,
        None => return MultiPoly::one(),
    };
    let (da, db) = (a.degree_in(v), b.degree_in(v));
    if da == 0 {
        return gcd(a, &b.content_in(v));
    }
    if db == 0 {
        return gcd(&a.content_in(v), b);
    }
    let ca = a.content_in(v);
    let cb = b.content_in(v);
    let c = gcd(&ca, &cb);
    let mut p = a.div_exact(&ca).expect("content divides").primitive_int();
    let mut q = b.div_exact(&cb).expect("content divides").primitive_int();
    if p.degree_in(v) < q.degree_in(v) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = MultiPoly::pseudo_rem(&p, &q, v, &reg);
        if r.is_zero() {
            break;
        }
        if r.degree_in(v) == 0 {
            return c.monic();
        }
        p = q;
        let cr = r.content_in(v);
        q = r.div_exact(&cr).expect("content divides").primitive_int();
    }
    let q = q.div_exact(&q.content_in(v)).expect("content divides");
    (&c * &q).monic()
}

fn monomial_gcd(a: &MultiPoly, b: &MultiPoly, nv: usize, reg: &Option<Arc<Registry>>) -> MultiPoly {
    let mut m = vec![u32::MAX; nv];
    for p in [a, b] {
        for e in p.padded(nv).keys() {
            for i in 0..nv {
                m[i] = m[i].min(e[i]);
            }
        }
    }
    match reg {
        Some(r) if m.iter().any(|&x| x > 0) => MultiPoly::monomial(r, m, Rational::one()),
        _ => MultiPoly::one(),
    }
}

/// Square root with positive leading coefficient.
pub fn poly_sqrt(p: &MultiPoly) -> Result<MultiPoly, ExactError> {
    if p.is_zero() {
        return Ok(MultiPoly::zero());
    }
    let nv = p.nvars();
    let reg = p.reg.clone();
    let terms = p.padded(nv);
    let (le, lc) = terms.iter().next_back().map(|(e, c)| (e.clone(), c.clone())).unwrap();
    if le.iter().any(|k| k % 2 == 1) {
        return Err(ExactError::NotAPerfectSquare);
    }
    let c0 = rational_sqrt(&lc).ok_or(ExactError::NotAPerfectSquare)?;
    let bounds: Vec<u32> = (0..nv).map(|v| p.degree_in(v) / 2).collect();
    let tdeg = p.total_degree() / 2;
    let s0e: Mono = le.iter().map(|k| k / 2).collect();
    let mk = |e: Mono, c: Rational| MultiPoly { reg: reg.clone(), terms: BTreeMap::from([(e, c)]) };
    let mut s = mk(s0e.clone(), c0.clone());
    let two_lt = (s0e.clone(), &c0 * rint(2));
    loop {
        let r = p - &(&s * &s);
        if r.is_zero() {
            return Ok(s.simplified());
        }
        let rt = r.padded(nv);
        let (re, rc) = rt.iter().next_back().map(|(e, c)| (e.clone(), c.clone())).unwrap();
        if re.iter().zip(&two_lt.0).any(|(a, b)| a < b) {
            return Err(ExactError::NotAPerfectSquare);
        }
        let te: Mono = re.iter().zip(&two_lt.0).map(|(a, b)| a - b).collect();
        if te.iter().zip(&bounds).any(|(a, b)| a > b) || te.iter().sum::<u32>() > tdeg || te >= s0e {
            return Err(ExactError::NotAPerfectSquare);
        }
        if let Some((se, _)) = s.padded(nv).iter().next() {
            if &te >= se {
                return Err(ExactError::NotAPerfectSquare);
            }
        }
        s.add_term(te, &rc / &two_lt.1);
        s.reg = reg.clone();
    }
}

/// Element of the field of fractions, kept reduced with a monic denominator.
#[derive(Clone)]
pub struct RatFunc {
    num: MultiPoly,
    den: MultiPoly,
}

impl PartialEq for RatFunc {
    fn eq(&self, o: &Self) -> bool {
        self.num == o.num && self.den == o.den
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Reduces `num/den` to canonical form.
pub fn ratfunc_normalize(num: MultiPoly, den: MultiPoly) -> Result<RatFunc, ExactError> {
    if den.is_zero() {
        return Err(ExactError::ZeroDenominator);
    }
    unify(&num.reg, &den.reg)?;
    if num.is_zero() {
        return Ok(RatFunc { num: MultiPoly::zero(), den: MultiPoly::one() });
    }
    if let Some(c) = den.constant_value() {
        return Ok(RatFunc { num: num.scale(&c.recip()), den: MultiPoly::one() });
    }
    let g = gcd(&num, &den);
    let (n, d) = if g.is_constant() {
        (num, den)
    } else {
        (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
    };
    let lc = d.leading_coeff();
    Ok(RatFunc { num: n.scale(&lc.recip()), den: d.scale(&lc.recip()) })
}

/// Exact evaluation at a rational point.
pub fn ratfunc_eval(f: &RatFunc, assignment: &BTreeMap<String, Rational>) -> Result<Rational, ExactError> {
    let d = f.den.eval(assignment)?;
    if d.is_zero() {
        return Err(ExactError::PoleAtPoint);
    }
    Ok(f.num.eval(assignment)? / d)
}

impl RatFunc {
    pub fn new(num: MultiPoly, den: MultiPoly) -> Result<Self, ExactError> {
        ratfunc_normalize(num, den)
    }
    pub fn from_poly(p: MultiPoly) -> Self {
        RatFunc { num: p, den: MultiPoly::one() }
    }
    pub fn constant(c: Rational) -> Self {
        Self::from_poly(MultiPoly::constant(c))
    }
    pub fn from_int(n: i64) -> Self {
        Self::constant(rint(n))
    }
    pub fn var(reg: &Arc<Registry>, name: &str) -> Result<Self, ExactError> {
        Ok(Self::from_poly(MultiPoly::var(reg, name)?))
    }
    pub fn numer(&self) -> &MultiPoly {
        &self.num
    }
    pub fn denom(&self) -> &MultiPoly {
        &self.den
    }
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    pub fn is_one(&self) -> bool {
        self.den.constant_value().is_some_and(|c| c.is_one())
            && self.num.constant_value().is_some_and(|c| c.is_one())
    }
    pub fn constant_value(&self) -> Option<Rational> {
        let d = self.den.constant_value()?;
        Some(self.num.constant_value()? / d)
    }
    pub fn registry(&self) -> Option<&Arc<Registry>> {
        self.num.registry().or(self.den.registry())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, ExactError> {
        if self.is_zero() {
            return Ok(o.clone());
        }
        if o.is_zero() {
            return Ok(self.clone());
        }
        if self.den == o.den {
            return ratfunc_normalize(self.num.try_add(&o.num)?, self.den.clone());
        }
        let n = self.num.try_mul(&o.den)?.try_add(&o.num.try_mul(&self.den)?)?;
        ratfunc_normalize(n, self.den.try_mul(&o.den)?)
    }
    pub fn try_sub(&self, o: &Self) -> Result<Self, ExactError> {
        self.try_add(&o.neg_ref())
    }
    pub fn try_mul(&self, o: &Self) -> Result<Self, ExactError> {
        if self.is_zero() || o.is_zero() {
            return Ok(RatFunc::constant(Rational::zero()));
        }
        if let Some(c) = self.constant_value() {
            unify(&self.num.reg, &o.num.reg)?;
            return Ok(RatFunc { num: o.num.scale(&c), den: o.den.clone() });
        }
        if let Some(c) = o.constant_value() {
            return Ok(RatFunc { num: self.num.scale(&c), den: self.den.clone() });
        }
        ratfunc_normalize(self.num.try_mul(&o.num)?, self.den.try_mul(&o.den)?)
    }
    pub fn try_div(&self, o: &Self) -> Result<Self, ExactError> {
        if o.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        self.try_mul(&o.recip()?)
    }
    pub fn recip(&self) -> Result<Self, ExactError> {
        ratfunc_normalize(self.den.clone(), self.num.clone())
    }
    fn neg_ref(&self) -> Self {
        RatFunc { num: self.num.neg_ref(), den: self.den.clone() }
    }
    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return RatFunc::constant(Rational::zero());
        }
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }
    pub fn powi(&self, n: i32) -> Self {
        let base = if n < 0 { self.recip().expect("nonzero base") } else { self.clone() };
        let k = n.unsigned_abs();
        RatFunc { num: base.num.pow(k), den: base.den.pow(k) }
    }

    /// Square root with positive leading coefficients in numerator and denominator.
    pub fn sqrt(&self) -> Result<Self, ExactError> {
        let n = poly_sqrt(&self.num)?;
        let d = poly_sqrt(&self.den)?;
        ratfunc_normalize(n, d)
    }

    pub fn derivative(&self, v: usize) -> Self {
        let n = &(&self.num.derivative(v) * &self.den) - &(&self.num * &self.den.derivative(v));
        ratfunc_normalize(n, &self.den * &self.den).expect("nonzero denominator")
    }

    pub fn derivative_by_name(&self, name: &str) -> Self {
        match self.registry().and_then(|r| r.index(name)) {
            Some(v) => self.derivative(v),
            None => RatFunc::constant(Rational::zero()),
        }
    }

    pub fn eval(&self, assignment: &BTreeMap<String, Rational>) -> Result<Rational, ExactError> {
        ratfunc_eval(self, assignment)
    }

    /// Substitutes rational functions for symbols given by name.
    pub fn substitute(&self, subs: &BTreeMap<String, RatFunc>) -> Result<Self, ExactError> {
        let reg = match self.registry() {
            Some(r) => r.clone(),
            None => return Ok(self.clone()),
        };
        let eval_poly = |p: &MultiPoly| -> Result<RatFunc, ExactError> {
            let mut acc = RatFunc::constant(Rational::zero());
            for (e, c) in p.padded(reg.len()) {
                let mut t = RatFunc::constant(c);
                for (i, &k) in e.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    let name = &reg.names[i];
                    let base = match subs.get(name) {
                        Some(s) => s.clone(),
                        None => RatFunc::var(&reg, name)?,
                    };
                    t = t.try_mul(&base.powi(k as i32))?;
                }
                acc = acc.try_add(&t)?;
            }
            Ok(acc)
        };
        eval_poly(&self.num)?.try_div(&eval_poly(&self.den)?)
    }

    pub fn rebase(&self, target: &Arc<Registry>) -> Result<Self, ExactError> {
        ratfunc_normalize(self.num.rebase(target)?, self.den.rebase(target)?)
    }

    /// Total degree of numerator minus denominator when both are homogeneous
    /// under the given per-symbol weights.
    pub fn homogeneous_weight(&self, weights: &[Rational]) -> Option<Rational> {
        fn poly_w(p: &MultiPoly, w: &[Rational]) -> Option<Rational> {
            let mut out: Option<Rational> = None;
            for (e, _) in p.terms() {
                let d = e.iter().enumerate().fold(Rational::zero(), |acc, (i, &k)| {
                    acc + w.get(i).cloned().unwrap_or_else(Rational::zero) * rint(k as i64)
                });
                match &out {
                    None => out = Some(d),
                    Some(o) if *o != d => return None,
                    _ => {}
                }
            }
            Some(out.unwrap_or_else(Rational::zero))
        }
        if self.is_zero() {
            return Some(Rational::zero());
        }
        Some(poly_w(&self.num, weights)? - poly_w(&self.den, weights)?)
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() {
            return write!(f, "{}", self.num);
        }
        let wrap = |p: &MultiPoly| {
            let s = p.to_string();
            if p.num_terms() > 1 || (p.num_terms() == 1 && s.contains('/')) {
                format!("({})", s)
            } else {
                s
            }
        };
        write!(f, "{}/{}", wrap(&self.num), wrap(&self.den))
    }
}

macro_rules! rf_binop {
    ($tr:ident, $m:ident, $try:ident) => {
        impl<'a> $tr<&'a RatFunc> for &'a RatFunc {
            type Output = RatFunc;
            fn $m(self, o: &'a RatFunc) -> RatFunc {
                self.$try(o).expect("rational function operation failed")
            }
        }
        impl $tr for RatFunc {
            type Output = RatFunc;
            fn $m(self, o: RatFunc) -> RatFunc {
                self.$try(&o).expect("rational function operation failed")
            }
        }
    };
}
rf_binop!(Add, add, try_add);
rf_binop!(Sub, sub, try_sub);
rf_binop!(Mul, mul, try_mul);
rf_binop!(Div, div, try_div);

impl Neg for RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        self.neg_ref()
    }
}

impl Zero for RatFunc {
    fn zero() -> Self {
        RatFunc::constant(Rational::zero())
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RatFunc {
    fn one() -> Self {
        RatFunc::constant(Rational::one())
    }
}

/// Orders polynomials by their term lists (for deterministic sorting only).
pub fn cmp_poly(a: &MultiPoly, b: &MultiPoly) -> Ordering {
    let ta: Vec<_> = a.terms().collect();
    let tb: Vec<_> = b.terms().collect();
    ta.cmp(&tb)
}

pub fn bigint_to_i64(b: &BigInt) -> Option<i64> {
    b.to_i64()
}

pub fn is_positive_int(b: &BigInt) -> bool {
    b.sign() == Sign::Plus
}

pub fn lcm_u32(a: u32, b: u32) -> u32 {
    a.lcm(&b)
}

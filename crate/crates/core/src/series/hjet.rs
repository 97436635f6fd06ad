//! Laurent jets in `hbar` with series coefficients.

use std::collections::BTreeMap;
use std::fmt;

use super::{NovikovSeries, SeriesError};
use crate::scalar::Coeff;

/// `sum_{lo <= k <= hi} a_k hbar^k`.
///
/// Coefficients inside `[lo, hi]` are known. `lo_exact` says nothing lives below `lo`,
/// `hi_exact` says nothing lives above `hi`; otherwise that side was truncated.
#[derive(Clone, Debug)]
pub struct HJet<C> {
    nvars: usize,
    lo: i64,
    hi: i64,
    lo_exact: bool,
    hi_exact: bool,
    coeffs: BTreeMap<i64, NovikovSeries<C>>,
}

impl<C: Coeff> PartialEq for HJet<C> {
    fn eq(&self, o: &Self) -> bool {
        self.lo == o.lo
            && self.hi == o.hi
            && self.lo_exact == o.lo_exact
            && self.hi_exact == o.hi_exact
            && (self.lo..=self.hi).all(|k| self.coeff(k) == o.coeff(k))
    }
}

impl<C: Coeff> HJet<C> {
    pub fn new(nvars: usize, lo: i64, hi: i64, lo_exact: bool, hi_exact: bool) -> Self {
        HJet { nvars, lo, hi, lo_exact, hi_exact, coeffs: BTreeMap::new() }
    }

    /// A jet that is exactly the series `s` times `hbar^0`.
    pub fn from_series(s: NovikovSeries<C>) -> Self {
        let mut j = Self::new(s.nvars(), 0, 0, true, true);
        j.set(0, s);
        j
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }
    pub fn exactness(&self) -> (bool, bool) {
        (self.lo_exact, self.hi_exact)
    }

    pub fn set(&mut self, k: i64, s: NovikovSeries<C>) {
        assert!(k >= self.lo && k <= self.hi, "hbar power {} outside window", k);
        if s.is_zero() && s.is_exact() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, s);
        }
    }

    /// Coefficient of `hbar^k`; zero outside the stored terms.
    pub fn coeff(&self, k: i64) -> NovikovSeries<C> {
        self.coeffs.get(&k).cloned().unwrap_or_else(|| NovikovSeries::zero(self.nvars, super::EXACT))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&i64, &NovikovSeries<C>)> {
        self.coeffs.iter()
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, SeriesError> {
        let lo_a = if self.lo_exact { None } else { Some(self.lo) };
        let lo_b = if o.lo_exact { None } else { Some(o.lo) };
        let hi_a = if self.hi_exact { None } else { Some(self.hi) };
        let hi_b = if o.hi_exact { None } else { Some(o.hi) };
        let lo = match (lo_a, lo_b) {
            (None, None) => self.lo.min(o.lo),
            (Some(x), None) | (None, Some(x)) => x,
            (Some(x), Some(y)) => x.max(y),
        };
        let hi = match (hi_a, hi_b) {
            (None, None) => self.hi.max(o.hi),
            (Some(x), None) | (None, Some(x)) => x,
            (Some(x), Some(y)) => x.min(y),
        };
        let mut out = Self::new(self.nvars, lo, hi, lo_a.is_none() && lo_b.is_none(), hi_a.is_none() && hi_b.is_none());
        for k in lo..=hi {
            let s = self.coeff(k).try_add(&o.coeff(k))?;
            out.set(k, s);
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = -&*v;
        }
        out
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self, SeriesError> {
        self.try_add(&o.neg())
    }

    /// Product with the window rule: an unknown coefficient of one factor spoils every
    /// product power it can reach through the possible range of the other.
    pub fn try_mul(&self, o: &Self) -> Result<Self, SeriesError> {
        let pl = |j: &Self| if j.lo_exact { Some(j.lo) } else { None };
        let ph = |j: &Self| if j.hi_exact { Some(j.hi) } else { None };
        // possible range
        let plo = pl(self).zip(pl(o)).map(|(a, b)| a + b);
        let phi = ph(self).zip(ph(o)).map(|(a, b)| a + b);
        // known range, None = unbounded
        let mut klo: Option<i64> = plo;
        let mut khi: Option<i64> = phi;
        let mut lo_bound: Vec<i64> = Vec::new();
        let mut hi_bound: Vec<i64> = Vec::new();
        for (a, b) in [(self, o), (o, self)] {
            if !a.lo_exact {
                match ph(b) {
                    Some(h) => lo_bound.push(a.lo + h),
                    None => return Ok(Self::new(self.nvars, 0, -1, false, false)),
                }
            }
            if !a.hi_exact {
                match pl(b) {
                    Some(l) => hi_bound.push(a.hi + l),
                    None => return Ok(Self::new(self.nvars, 0, -1, false, false)),
                }
            }
        }
        if let Some(m) = lo_bound.iter().max() {
            klo = Some(klo.map_or(*m, |x| x.max(*m)));
        }
        if let Some(m) = hi_bound.iter().min() {
            khi = Some(khi.map_or(*m, |x| x.min(*m)));
        }
        let lo = klo.expect("bounded below");
        let hi = khi.expect("bounded above");
        let mut out = Self::new(self.nvars, lo, hi.max(lo - 1), lo_bound.is_empty(), hi_bound.is_empty());
        for k in lo..=hi {
            let mut acc = NovikovSeries::zero(self.nvars, super::EXACT);
            for (i, a) in &self.coeffs {
                if let Some(b) = o.coeffs.get(&(k - i)) {
                    acc = acc.try_add(&a.try_mul(b)?)?;
                }
            }
            out.set(k, acc);
        }
        Ok(out)
    }

    /// Multiplies every coefficient by a series.
    pub fn mul_series(&self, s: &NovikovSeries<C>) -> Result<Self, SeriesError> {
        self.map(|c| c.try_mul(s))
    }

    pub fn scale(&self, c: &C) -> Self {
        self.map(|s| Ok(s.scale(c))).expect("scaling cannot fail")
    }

    /// Multiplies by `hbar^k`.
    pub fn shift(&self, k: i64) -> Self {
        HJet {
            nvars: self.nvars,
            lo: self.lo + k,
            hi: self.hi + k,
            lo_exact: self.lo_exact,
            hi_exact: self.hi_exact,
            coeffs: self.coeffs.iter().map(|(i, s)| (i + k, s.clone())).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(&NovikovSeries<C>) -> Result<NovikovSeries<C>, SeriesError>) -> Result<Self, SeriesError> {
        let mut out = Self::new(self.nvars, self.lo, self.hi, self.lo_exact, self.hi_exact);
        for (k, s) in &self.coeffs {
            out.set(*k, f(s)?);
        }
        Ok(out)
    }

    /// Restricts the window to `[lo, hi]`, marking cut sides as truncated.
    pub fn restrict(&self, lo: i64, hi: i64) -> Self {
        let nlo = self.lo.max(lo);
        let nhi = self.hi.min(hi);
        let mut out = Self::new(self.nvars, nlo, nhi, self.lo_exact && nlo == self.lo, self.hi_exact && nhi == self.hi);
        for (k, s) in &self.coeffs {
            if *k >= nlo && *k <= nhi {
                out.coeffs.insert(*k, s.clone());
            }
        }
        out
    }

    /// Truncates every coefficient at q-order `o` (lattice units of each coefficient).
    pub fn truncate_q(&self, o: &crate::exact::Rational) -> Self {
        self.map(|s| Ok(s.truncate_q(o))).expect("truncation cannot fail")
    }

    /// `exp(x / hbar)` for a series `x`, kept down to `hbar^lo`.
    pub fn exp_over_hbar(x: &NovikovSeries<C>, lo: i64) -> Result<Self, SeriesError> {
        let mut out = Self::new(x.nvars(), lo, 0, false, true);
        let mut p = NovikovSeries::one(x.nvars());
        let mut fact = C::one();
        for n in 0..=(-lo) {
            if n > 0 {
                p = p.try_mul(x)?;
                fact = fact * C::from_int(n);
            }
            out.set(-n, p.scale(&(C::one() / fact.clone())));
        }
        Ok(out)
    }

    pub fn to_text(&self, names: &[&str]) -> String {
        let mut parts = Vec::new();
        for (k, s) in self.coeffs.iter().rev() {
            if s.is_zero() {
                continue;
            }
            let h = match k {
                0 => String::new(),
                1 => " * h".to_string(),
                _ => format!(" * h^{}", k),
            };
            parts.push(format!("({}){}", s.to_text(names), h));
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

impl<C: Coeff> fmt::Display for HJet<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = NovikovSeries::<C>::default_names(self.nvars);
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        write!(f, "{}", self.to_text(&refs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, Rational};
    use crate::series::EXACT;

    #[test]
    fn window_rule_for_negative_jets() {
        let x = NovikovSeries::<Rational>::q(1, 0).truncate(6);
        let a = HJet::exp_over_hbar(&x, -4).unwrap();
        let b = HJet::exp_over_hbar(&x.scale(&rat(-1, 1)), -4).unwrap();
        let p = a.try_mul(&b).unwrap();
        assert_eq!(p.window(), (-4, 0));
        assert_eq!(p.coeff(0), NovikovSeries::one(1));
        for k in -4..0 {
            assert!(p.coeff(k).is_zero());
        }
    }

    #[test]
    fn positive_jets() {
        let one = NovikovSeries::<Rational>::one(1);
        let mut a = HJet::new(1, 0, 2, true, false);
        a.set(0, one.clone());
        a.set(1, one.scale(&rat(2, 1)));
        let mut b = HJet::new(1, 0, 3, true, false);
        b.set(0, one.clone());
        b.set(2, one.clone());
        let p = a.try_mul(&b).unwrap();
        assert_eq!(p.window(), (0, 2));
        assert_eq!(p.coeff(2), one.clone());
        let z = NovikovSeries::<Rational>::zero(1, EXACT);
        assert_eq!(p.coeff(-1), z);
    }
}

//! Functions with a linear `t0`/`log q` part, and 1-forms on the small-slice co-frame.

use std::fmt;

use super::{NovikovSeries, SeriesError};
use crate::scalar::Coeff;

/// `a t0 + sum b_i log q_i + s(q)`.
#[derive(Clone, Debug)]
pub struct ExtFunction<C> {
    t0: C,
    logq: Vec<C>,
    series: NovikovSeries<C>,
}

impl<C: Coeff> PartialEq for ExtFunction<C> {
    fn eq(&self, o: &Self) -> bool {
        self.t0 == o.t0 && self.logq == o.logq && self.series == o.series
    }
}

impl<C: Coeff> ExtFunction<C> {
    pub fn new(t0: C, logq: Vec<C>, series: NovikovSeries<C>) -> Self {
        assert_eq!(logq.len(), series.nvars());
        ExtFunction { t0, logq, series }
    }

    pub fn from_series(series: NovikovSeries<C>) -> Self {
        let r = series.nvars();
        ExtFunction { t0: C::zero(), logq: vec![C::zero(); r], series }
    }

    pub fn t0(&self) -> &C {
        &self.t0
    }
    pub fn logq(&self) -> &[C] {
        &self.logq
    }
    pub fn series(&self) -> &NovikovSeries<C> {
        &self.series
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, SeriesError> {
        Ok(ExtFunction {
            t0: self.t0.clone() + o.t0.clone(),
            logq: self.logq.iter().zip(&o.logq).map(|(a, b)| a.clone() + b.clone()).collect(),
            series: self.series.try_add(&o.series)?,
        })
    }

    pub fn scale(&self, c: &C) -> Self {
        ExtFunction {
            t0: self.t0.clone() * c.clone(),
            logq: self.logq.iter().map(|a| a.clone() * c.clone()).collect(),
            series: self.series.scale(c),
        }
    }

    /// Adds `t0` with coefficient `c`.
    pub fn with_t0(mut self, c: C) -> Self {
        self.t0 = self.t0 + c;
        self
    }

    /// Shift `t0 -> t0 + g`.
    pub fn shift_t0(&self, g: &NovikovSeries<C>) -> Result<Self, SeriesError> {
        let mut out = self.clone();
        out.series = out.series.try_add(&g.scale(&self.t0))?;
        Ok(out)
    }

    pub fn differential(&self) -> OneForm<C> {
        let r = self.series.nvars();
        let mut comps = Vec::with_capacity(r + 1);
        comps.push(NovikovSeries::constant(r, self.t0.clone()).rebase(self.series.lattice()).truncate(self.series.order()));
        for i in 0..r {
            let c = NovikovSeries::constant(r, self.logq[i].clone());
            comps.push(self.series.theta(i).try_add(&c).expect("same variables"));
        }
        OneForm::new(comps)
    }

    pub fn to_text(&self, names: &[&str]) -> String {
        let mut parts = Vec::new();
        let wrap = |c: &C| if c.is_compound() { format!("({})", c) } else { c.to_string() };
        if !self.t0.is_zero() {
            parts.push(if self.t0.is_one() { "t0".to_string() } else { format!("{} * t0", wrap(&self.t0)) });
        }
        for (i, c) in self.logq.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("{} * log {}", wrap(c), names[i]));
            }
        }
        if !self.series.is_zero() || parts.is_empty() {
            parts.push(self.series.to_text(names));
        }
        parts.join(" + ")
    }
}

impl<C: Coeff> fmt::Display for ExtFunction<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = NovikovSeries::<C>::default_names(self.series.nvars());
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        write!(f, "{}", self.to_text(&refs))
    }
}

/// Pair of coordinates whose mixed partials disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosednessWitness {
    pub first: String,
    pub second: String,
}

/// 1-form `sum w_k dx_k` over the co-frame `{dt0, dlog q_1, ..., dlog q_r}`.
///
/// Component functions depend on `q` only, so `d/dt0` of every component vanishes.
#[derive(Clone, Debug)]
pub struct OneForm<C> {
    comps: Vec<NovikovSeries<C>>,
}

impl<C: Coeff> PartialEq for OneForm<C> {
    fn eq(&self, o: &Self) -> bool {
        self.comps == o.comps
    }
}

impl<C: Coeff> OneForm<C> {
    pub fn new(comps: Vec<NovikovSeries<C>>) -> Self {
        assert!(!comps.is_empty());
        let r = comps[0].nvars();
        assert_eq!(comps.len(), r + 1, "one component per co-frame direction");
        OneForm { comps }
    }

    pub fn zero(nvars: usize, order: i64) -> Self {
        OneForm { comps: (0..=nvars).map(|_| NovikovSeries::zero(nvars, order)).collect() }
    }

    pub fn nvars(&self) -> usize {
        self.comps.len() - 1
    }
    pub fn comps(&self) -> &[NovikovSeries<C>] {
        &self.comps
    }
    pub fn dt0(&self) -> &NovikovSeries<C> {
        &self.comps[0]
    }
    pub fn dlogq(&self, i: usize) -> &NovikovSeries<C> {
        &self.comps[i + 1]
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, SeriesError> {
        Ok(OneForm { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.try_add(b)).collect::<Result<_, _>>()? })
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self, SeriesError> {
        Ok(OneForm { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.try_sub(b)).collect::<Result<_, _>>()? })
    }

    /// Multiplies every component by a function.
    pub fn mul_series(&self, f: &NovikovSeries<C>) -> Result<Self, SeriesError> {
        Ok(OneForm { comps: self.comps.iter().map(|a| a.try_mul(f)).collect::<Result<_, _>>()? })
    }

    pub fn scale(&self, c: &C) -> Self {
        OneForm { comps: self.comps.iter().map(|a| a.scale(c)).collect() }
    }

    pub fn truncate(&self, o: i64) -> Self {
        OneForm { comps: self.comps.iter().map(|a| a.truncate(o)).collect() }
    }

    /// Truncates every component at q-order `o`.
    pub fn truncate_q(&self, o: &crate::exact::Rational) -> Self {
        OneForm { comps: self.comps.iter().map(|a| a.truncate_q(o)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    /// Lowest validity order over the components, in q-units.
    pub fn order_q(&self) -> Option<crate::exact::Rational> {
        self.comps.iter().filter_map(|c| c.order_q()).min()
    }

    pub fn coordinate_names(nvars: usize) -> Vec<String> {
        let mut v = vec!["t0".to_string()];
        for n in NovikovSeries::<C>::default_names(nvars) {
            v.push(format!("log {}", n));
        }
        v
    }

    /// Equal mixed partials over every coordinate pair.
    pub fn closedness_check(&self) -> Result<(), ClosednessWitness> {
        let r = self.nvars();
        let names = Self::coordinate_names(r);
        for i in 0..r {
            if !self.comps[0].theta(i).is_zero() {
                return Err(ClosednessWitness { first: names[0].clone(), second: names[i + 1].clone() });
            }
        }
        for i in 0..r {
            for j in i + 1..r {
                let a = self.comps[j + 1].theta(i);
                let b = self.comps[i + 1].theta(j);
                if !a.try_sub(&b).map(|d| d.is_zero()).unwrap_or(false) {
                    return Err(ClosednessWitness { first: names[i + 1].clone(), second: names[j + 1].clone() });
                }
            }
        }
        Ok(())
    }

    /// Primitive of a closed form; the `dt0` part must be constant and constant
    /// `dlog q_i` parts become `log q_i` terms.
    pub fn integrate(&self) -> Result<ExtFunction<C>, SeriesError> {
        if self.closedness_check().is_err() {
            return Err(SeriesError::NotClosed);
        }
        let r = self.nvars();
        let lattice = self.comps.iter().fold(1u32, |l, c| crate::exact::lcm_u32(l, c.lattice()));
        let order = self.comps[1..].iter().map(|c| c.rebase(lattice).order()).min().unwrap_or(super::EXACT);
        let t0 = self.comps[0].constant_term();
        let mut logq = vec![C::zero(); r];
        let mut terms = Vec::new();
        for i in 0..r {
            let c = self.comps[i + 1].rebase(lattice);
            for (e, v) in c.terms() {
                match e.iter().position(|&x| x != 0) {
                    None => logq[i] = v.clone(),
                    Some(k) if k == i => {
                        let f = crate::exact::Rational::new((lattice as i64).into(), e[i].into());
                        terms.push((e.clone(), v.clone() * C::from_rational(&f)));
                    }
                    Some(_) => {}
                }
            }
        }
        let series = NovikovSeries::from_terms(r, lattice, terms, order).compact();
        Ok(ExtFunction::new(t0, logq, series))
    }

    pub fn to_text(&self, names: &[&str]) -> String {
        let coords = Self::coordinate_names(self.nvars());
        let mut parts = Vec::new();
        for (k, c) in self.comps.iter().enumerate() {
            if !c.is_zero() {
                parts.push(format!("({}) d{}", c.to_text(names), coords[k].replace(' ', "")));
            }
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

impl<C: Coeff> fmt::Display for OneForm<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = NovikovSeries::<C>::default_names(self.nvars());
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
    fn witness_for_q_dt0() {
        let q = NovikovSeries::<Rational>::q(1, 0);
        let w = OneForm::new(vec![q, NovikovSeries::zero(1, EXACT)]);
        let err = w.closedness_check().unwrap_err();
        assert_eq!((err.first.as_str(), err.second.as_str()), ("t0", "log q"));
        assert!(OneForm::<Rational>::zero(1, 5).closedness_check().is_ok());
    }

    #[test]
    fn differential_of_ext() {
        let s = NovikovSeries::from_coeffs([rat(0, 1), rat(2, 1)], EXACT);
        let u = ExtFunction::new(rat(1, 1), vec![rat(3, 1)], s);
        let du = u.differential();
        assert_eq!(du.dt0().constant_term(), rat(1, 1));
        assert_eq!(du.dlogq(0), &NovikovSeries::from_coeffs([rat(3, 1), rat(2, 1)], EXACT));
        let back = du.integrate().unwrap();
        assert_eq!(back, u);
    }
}

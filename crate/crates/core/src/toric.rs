//! Hypergeometric series of toric bundles, mirror maps, quantum relations and the
//! conifold pipeline.
//!
//! Per-degree terms are products of linear factors `a + k hbar` with `a` in the
//! cohomology ring. Writing `x = 1/hbar`, a numerator factor is `hbar (a x + k)` and a
//! denominator factor is `x / (k + a x)`, so every term is `hbar^top` times a power series
//! in `x` with ring-valued coefficients. Truncating that series is exact bookkeeping.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::elliptic::{elliptic_dg_equivariant, EllipticForm};
use crate::exact::{rat, ExactError, RatFunc, Rational, Registry};
use crate::frame::{CanonicalFrame, EigenOptions, FrameError, Normalization, RLadder, ResidualReport};
use crate::frobenius::{FrobeniusData, FrobeniusError};
use crate::series::{HJet, NovikovSeries, OneForm, SeriesError, EXACT};

type Series = NovikovSeries<RatFunc>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToricError {
    #[error("non-negativity violated: {0}")]
    NonNegativityViolated(String),
    #[error("cohomology presentation is not a confluent normal form: {0}")]
    NormalFormDivergent(String),
    #[error("hbar^0 coefficient is not a unit multiple of 1")]
    NonUnitLeading,
    #[error("shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
}

/// Element of the cohomology ring in the declared basis.
pub type HElem = Vec<RatFunc>;

/// Finite-rank commutative algebra with unit `basis[0]`, given by its multiplication table.
#[derive(Debug, Clone)]
pub struct Cohomology {
    pub labels: Vec<String>,
    /// `table[a][b]` is `basis_a * basis_b`.
    table: Vec<Vec<HElem>>,
    /// Classes `p_1, ..., p_r` in the basis.
    pub p_classes: Vec<HElem>,
    /// Exponent vectors of the basis monomials, when built from univariate relations.
    monomials: Option<Vec<Vec<u32>>>,
}

fn zeros(n: usize) -> HElem {
    vec![RatFunc::zero(); n]
}

impl Cohomology {
    /// User-supplied basis and table; checks unit, commutativity and associativity.
    pub fn from_table(labels: Vec<String>, table: Vec<Vec<HElem>>, p_classes: Vec<HElem>) -> Result<Self, ToricError> {
        let n = labels.len();
        if n == 0 || table.len() != n || table.iter().any(|r| r.len() != n || r.iter().any(|e| e.len() != n)) {
            return Err(ToricError::Shape("multiplication table must be n x n x n".into()));
        }
        if p_classes.iter().any(|p| p.len() != n) {
            return Err(ToricError::Shape("p class has wrong length".into()));
        }
        let c = Cohomology { labels, table, p_classes, monomials: None };
        c.check()?;
        Ok(c)
    }

    /// `prod_i K[p_i]/(rel_i(p_i))` with `rel_i` given low to high and monic.
    pub fn projective_product(p_names: &[String], relations: &[Vec<RatFunc>]) -> Result<Self, ToricError> {
        if p_names.len() != relations.len() {
            return Err(ToricError::Shape("one relation per p".into()));
        }
        let mut rels = Vec::new();
        for (name, rel) in p_names.iter().zip(relations) {
            let lead = rel.last().cloned().unwrap_or_else(RatFunc::zero);
            if rel.len() < 2 || lead.constant_value().is_none_or(|c| c.is_zero()) {
                return Err(ToricError::NormalFormDivergent(format!("relation for {} has no unit leading term", name)));
            }
            let inv = lead.recip()?;
            rels.push(rel.iter().map(|c| c * &inv).collect::<Vec<_>>());
        }
        let degs: Vec<u32> = rels.iter().map(|r| (r.len() - 1) as u32).collect();
        // reduced powers p_i^e for e < 2 n_i - 1
        let mut red: Vec<Vec<HElem>> = Vec::new();
        for (i, rel) in rels.iter().enumerate() {
            let n = degs[i] as usize;
            let mut pows = Vec::new();
            for e in 0..(2 * n).max(2) {
                if e < n {
                    let mut v = zeros(n);
                    v[e] = RatFunc::one();
                    pows.push(v);
                } else {
                    let prev: &HElem = &pows[e - 1];
                    let top = prev[n - 1].clone();
                    let mut v = zeros(n);
                    for k in (1..n).rev() {
                        v[k] = prev[k - 1].clone();
                    }
                    for (k, vk) in v.iter_mut().enumerate() {
                        *vk = &*vk - &(&top * &rel[k]);
                    }
                    pows.push(v);
                }
            }
            red.push(pows);
        }
        let mut monos: Vec<Vec<u32>> = vec![vec![]];
        for &n in &degs {
            monos = monos.into_iter().flat_map(|m| (0..n).map(move |k| [m.clone(), vec![k]].concat())).collect();
        }
        monos.sort_by_key(|m| (m.iter().sum::<u32>(), m.clone()));
        let index: HashMap<Vec<u32>, usize> = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let size = monos.len();
        let expand = |e: &[u32]| -> HElem {
            let mut acc: Vec<(Vec<u32>, RatFunc)> = vec![(vec![], RatFunc::one())];
            for (i, &x) in e.iter().enumerate() {
                let v = &red[i][x as usize];
                let mut next = Vec::new();
                for (m, c) in &acc {
                    for (k, vk) in v.iter().enumerate() {
                        if !vk.is_zero() {
                            next.push(([m.clone(), vec![k as u32]].concat(), c * vk));
                        }
                    }
                }
                acc = next;
            }
            let mut out = zeros(size);
            for (m, c) in acc {
                let j = index[&m];
                out[j] = &out[j] + &c;
            }
            out
        };
        let table: Vec<Vec<HElem>> = monos
            .iter()
            .map(|a| monos.iter().map(|b| expand(&a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>())).collect())
            .collect();
        let p_classes = (0..p_names.len())
            .map(|i| {
                let mut e = vec![0u32; p_names.len()];
                e[i] = 1;
                expand(&e)
            })
            .collect();
        let labels = monos.iter().map(|m| mono_label(p_names, m)).collect();
        Ok(Cohomology { labels, table, p_classes, monomials: Some(monos) })
    }

    fn check(&self) -> Result<(), ToricError> {
        let n = self.rank();
        for a in 0..n {
            let mut ea = zeros(n);
            ea[a] = RatFunc::one();
            if self.table[0][a] != ea {
                return Err(ToricError::NormalFormDivergent(format!("basis[0] is not a unit on {}", self.labels[a])));
            }
            for b in 0..n {
                if self.table[a][b] != self.table[b][a] {
                    return Err(ToricError::NormalFormDivergent(format!("{} * {} not commutative", self.labels[a], self.labels[b])));
                }
                for c in 0..n {
                    let l = self.mul(&self.table[a][b], &self.basis(c));
                    let r = self.mul(&self.basis(a), &self.table[b][c]);
                    if l != r {
                        return Err(ToricError::NormalFormDivergent(format!(
                            "({} {}) {} differs from {} ({} {})",
                            self.labels[a], self.labels[b], self.labels[c], self.labels[a], self.labels[b], self.labels[c]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn basis(&self, a: usize) -> HElem {
        let mut e = zeros(self.rank());
        e[a] = RatFunc::one();
        e
    }

    pub fn one(&self) -> HElem {
        self.basis(0)
    }

    pub fn zero(&self) -> HElem {
        zeros(self.rank())
    }

    pub fn mul(&self, a: &[RatFunc], b: &[RatFunc]) -> HElem {
        let mut out = self.zero();
        for (i, ai) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, bj) in b.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                let c = ai * bj;
                for (k, t) in self.table[i][j].iter().enumerate() {
                    if !t.is_zero() {
                        out[k] = &out[k] + &(&c * t);
                    }
                }
            }
        }
        out
    }

    /// `c0 + sum_i c_i p_i`.
    pub fn lin(&self, c0: &RatFunc, coeffs: &[RatFunc]) -> HElem {
        let mut out = self.one().into_iter().map(|x| x * c0.clone()).collect::<Vec<_>>();
        for (c, p) in coeffs.iter().zip(&self.p_classes) {
            for (o, x) in out.iter_mut().zip(p) {
                *o = &*o + &(c * x);
            }
        }
        out
    }

    /// Series-valued product.
    pub fn mul_series(&self, a: &[Series], b: &[Series]) -> Result<Vec<Series>, ToricError> {
        let nvars = a.first().map_or(1, |s| s.nvars());
        let mut out = vec![Series::zero(nvars, EXACT); self.rank()];
        for (i, ai) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, bj) in b.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                let c = ai.try_mul(bj)?;
                for (k, t) in self.table[i][j].iter().enumerate() {
                    if !t.is_zero() {
                        out[k] = out[k].try_add(&c.scale(t))?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Values of the basis monomials at a point `p = values`.
    pub fn eval_basis(&self, values: &[RatFunc]) -> Option<Vec<RatFunc>> {
        let monos = self.monomials.as_ref()?;
        Some(
            monos
                .iter()
                .map(|m| m.iter().zip(values).fold(RatFunc::one(), |acc, (&e, v)| acc * v.powi(e as i32)))
                .collect(),
        )
    }

    /// Index of the basis element equal to `p_i`, if there is one.
    pub fn p_index(&self, i: usize) -> Option<usize> {
        (0..self.rank()).find(|&a| self.p_classes[i] == self.basis(a))
    }
}

fn mono_label(names: &[String], m: &[u32]) -> String {
    let parts: Vec<String> = m
        .iter()
        .zip(names)
        .filter(|(e, _)| **e > 0)
        .map(|(e, n)| if *e == 1 { n.clone() } else { format!("{}^{}", n, e) })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `v_j = lambda'_j - sum_i p_i l_ij`
    Concave,
    /// `v_j = sum_i p_i l_ij - lambda'_j`
    Convex,
}

/// Toric bundle data over a base with classes `p_1..p_r`.
#[derive(Debug, Clone)]
pub struct ToricBundleData {
    pub reg: Arc<Registry>,
    pub p_names: Vec<String>,
    /// `r x n`, `w_j = sum_i p_i m_ij - lambda_j`.
    pub m: Vec<Vec<i64>>,
    pub lambda: Vec<RatFunc>,
    /// `r x l`.
    pub l: Vec<Vec<i64>>,
    pub lambda_v: Vec<RatFunc>,
    pub orientation: Orientation,
    pub cone: Vec<Vec<i64>>,
    pub coh: Cohomology,
}

/// Linear factor `a + k hbar`.
#[derive(Debug, Clone)]
struct Lin {
    a: HElem,
    k: i64,
}

/// One degree of the I-series: `hbar^top * sum_n coeffs[n] hbar^{-n}`.
#[derive(Debug, Clone)]
pub struct DegreeTerm {
    pub degree: Vec<i64>,
    pub top: i64,
    pub coeffs: Vec<HElem>,
}

impl ToricBundleData {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        reg: Arc<Registry>,
        p_names: Vec<String>,
        m: Vec<Vec<i64>>,
        lambda: Vec<RatFunc>,
        l: Vec<Vec<i64>>,
        lambda_v: Vec<RatFunc>,
        orientation: Orientation,
        cone: Vec<Vec<i64>>,
        coh: Option<Cohomology>,
    ) -> Result<Self, ToricError> {
        let r = p_names.len();
        let nw = lambda.len();
        let nv = lambda_v.len();
        if m.len() != r || m.iter().any(|row| row.len() != nw) {
            return Err(ToricError::Shape(format!("m must be {} x {}", r, nw)));
        }
        if l.len() != r || l.iter().any(|row| row.len() != nv) {
            return Err(ToricError::Shape(format!("l must be {} x {}", r, nv)));
        }
        if cone.is_empty() || cone.iter().any(|g| g.len() != r || g.iter().sum::<i64>() <= 0) {
            return Err(ToricError::Shape("cone generators need length r and positive total degree".into()));
        }
        let coh = match coh {
            Some(c) => c,
            None => {
                let rels = product_relations(&p_names, &m, &lambda)?;
                Cohomology::projective_product(&p_names, &rels)?
            }
        };
        if coh.p_classes.len() != r {
            return Err(ToricError::Shape("cohomology needs one class per p".into()));
        }
        let data = ToricBundleData { reg, p_names, m, lambda, l, lambda_v, orientation, cone, coh };
        for g in &data.cone {
            if let Some(j) = data.big_l(g).iter().position(|&x| x < 0) {
                return Err(ToricError::NonNegativityViolated(format!("L_{}({:?}) < 0", j + 1, g)));
            }
            let c1 = data.c1_pairing(g);
            if c1 < 0 {
                return Err(ToricError::NonNegativityViolated(format!("<c1, {:?}> = {}", g, c1)));
            }
        }
        Ok(data)
    }

    /// `O(-1) + O(-1)` over `CP^1` with the reduced torus: `lambda_1 = l`, `lambda_2 = -l`, `lambda' = 0`.
    pub fn conifold() -> Self {
        let reg = Registry::new(&["l"]);
        let l = RatFunc::var(&reg, "l").expect("symbol");
        ToricBundleData::new(
            reg,
            vec!["p".into()],
            vec![vec![1, 1]],
            vec![l.clone(), -l],
            vec![vec![1, 1]],
            vec![RatFunc::zero(), RatFunc::zero()],
            Orientation::Concave,
            vec![vec![1]],
            None,
        )
        .expect("conifold data is valid")
    }

    pub fn with_orientation(&self, o: Orientation) -> Self {
        ToricBundleData { orientation: o, ..self.clone() }
    }

    pub fn r(&self) -> usize {
        self.p_names.len()
    }

    pub fn big_d(&self, d: &[i64]) -> Vec<i64> {
        (0..self.lambda.len()).map(|j| (0..self.r()).map(|i| d[i] * self.m[i][j]).sum()).collect()
    }

    pub fn big_l(&self, d: &[i64]) -> Vec<i64> {
        (0..self.lambda_v.len()).map(|j| (0..self.r()).map(|i| d[i] * self.l[i][j]).sum()).collect()
    }

    /// `<c1, d> = sum_j D_j(d) - sum_j L_j(d)`.
    pub fn c1_pairing(&self, d: &[i64]) -> i64 {
        self.big_d(d).iter().sum::<i64>() - self.big_l(d).iter().sum::<i64>()
    }

    pub fn w_elem(&self, j: usize) -> HElem {
        let c: Vec<RatFunc> = (0..self.r()).map(|i| RatFunc::from_int(self.m[i][j])).collect();
        self.coh.lin(&-self.lambda[j].clone(), &c)
    }

    pub fn v_elem(&self, j: usize) -> HElem {
        let s = match self.orientation {
            Orientation::Concave => -1,
            Orientation::Convex => 1,
        };
        let c: Vec<RatFunc> = (0..self.r()).map(|i| RatFunc::from_int(s * self.l[i][j])).collect();
        self.coh.lin(&(self.lambda_v[j].clone() * RatFunc::from_int(-s)), &c)
    }

    /// Degrees in the cone spanned by the generators with total degree below `order`.
    pub fn degrees(&self, order: i64) -> Vec<Vec<i64>> {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![vec![0i64; self.r()]];
        while let Some(d) = stack.pop() {
            if d.iter().sum::<i64>() >= order || !seen.insert(d.clone()) {
                continue;
            }
            for g in &self.cone {
                stack.push(d.iter().zip(g).map(|(a, b)| a + b).collect());
            }
        }
        let mut out: Vec<Vec<i64>> = seen.into_iter().collect();
        out.sort_by_key(|d| (d.iter().sum::<i64>(), d.clone()));
        out
    }

    fn factors(&self, d: &[i64]) -> Result<(Vec<Lin>, Vec<Lin>, bool), ToricError> {
        let mut num = Vec::new();
        let mut den = Vec::new();
        for (j, dj) in self.big_d(d).into_iter().enumerate() {
            let w = self.w_elem(j);
            if dj >= 0 {
                den.extend((1..=dj).map(|k| Lin { a: w.clone(), k }));
            } else {
                num.extend((dj + 1..=0).map(|k| Lin { a: w.clone(), k }));
            }
        }
        let bl = self.big_l(d);
        for (j, &lj) in bl.iter().enumerate() {
            let v = self.v_elem(j);
            match self.orientation {
                Orientation::Concave if lj >= 0 => num.extend((0..lj).map(|k| Lin { a: v.clone(), k: -k })),
                Orientation::Concave => den.extend((lj..=-1).map(|k| Lin { a: v.clone(), k: -k })),
                Orientation::Convex if lj >= 0 => num.extend((1..=lj).map(|k| Lin { a: v.clone(), k })),
                Orientation::Convex => {
                    return Err(ToricError::NonNegativityViolated(format!("L_{}({:?}) < 0 in convex data", j + 1, d)))
                }
            }
        }
        let odd = self.orientation == Orientation::Convex && bl.iter().sum::<i64>() % 2 != 0;
        Ok((num, den, odd))
    }

    /// The degree-`d` term, kept down to `hbar^lo`.
    pub fn degree_term(&self, d: &[i64], lo: i64) -> Result<DegreeTerm, ToricError> {
        let (num, den, odd) = self.factors(d)?;
        let top = num.len() as i64;
        let len = (top - lo + 1).max(0) as usize;
        let mut s = vec![self.coh.zero(); len];
        if len > 0 {
            s[0] = self.coh.one();
        }
        for f in &num {
            // (a x + k) s
            let kf = RatFunc::from_int(f.k);
            let mut out = vec![self.coh.zero(); len];
            for n in 0..len {
                let mut v: HElem = s[n].iter().map(|c| c * &kf).collect();
                if n > 0 {
                    let t = self.coh.mul(&f.a, &s[n - 1]);
                    v = v.iter().zip(&t).map(|(a, b)| a + b).collect();
                }
                out[n] = v;
            }
            s = out;
        }
        for f in &den {
            // x s / (k + a x)
            let kinv = RatFunc::from_int(f.k).recip()?;
            let mut t: Vec<HElem> = Vec::with_capacity(len);
            for n in 0..len {
                let mut v = s[n].clone();
                if n > 0 {
                    let prev = self.coh.mul(&f.a, &t[n - 1]);
                    v = v.iter().zip(&prev).map(|(a, b)| a - b).collect();
                }
                t.push(v.iter().map(|c| c * &kinv).collect());
            }
            s = (0..len).map(|n| if n == 0 { self.coh.zero() } else { t[n - 1].clone() }).collect();
        }
        if odd {
            s = s.into_iter().map(|v| v.into_iter().map(|c| -c).collect()).collect();
        }
        Ok(DegreeTerm { degree: d.to_vec(), top, coeffs: s })
    }

    /// Torus fixed points of a one-parameter base: `p = lambda_j / m_j` with the tangent weights there.
    pub fn fixed_points(&self) -> Result<Vec<FixedPoint>, ToricError> {
        if self.r() != 1 {
            return Err(ToricError::Shape("fixed points are implemented for a single p".into()));
        }
        let mut out = Vec::new();
        for j in 0..self.lambda.len() {
            if self.m[0][j] == 0 {
                continue;
            }
            let p0 = self.lambda[j].try_div(&RatFunc::from_int(self.m[0][j]))?;
            let mut weights = Vec::new();
            for k in 0..self.lambda.len() {
                if k == j {
                    continue;
                }
                let w = &(&p0 * &RatFunc::from_int(self.m[0][k])) - &self.lambda[k];
                if w.is_zero() {
                    return Err(ToricError::Shape("fixed points are not isolated".into()));
                }
                weights.push(w);
            }
            for k in 0..self.lambda_v.len() {
                let lp = &p0 * &RatFunc::from_int(self.l[0][k]);
                weights.push(match self.orientation {
                    Orientation::Concave => &self.lambda_v[k] - &lp,
                    Orientation::Convex => &lp - &self.lambda_v[k],
                });
            }
            out.push(FixedPoint { p: p0, weights });
        }
        Ok(out)
    }

    /// Equivariant pairing `sum_fixed a b / Euler` on the basis.
    pub fn localization_pairing(&self) -> Result<Vec<Vec<RatFunc>>, ToricError> {
        let n = self.coh.rank();
        let mut eta = vec![vec![RatFunc::zero(); n]; n];
        for fp in self.fixed_points()? {
            let vals = self
                .coh
                .eval_basis(std::slice::from_ref(&fp.p))
                .ok_or_else(|| ToricError::Shape("pairing needs a monomial basis".into()))?;
            let e = fp.euler().recip()?;
            for a in 0..n {
                for b in 0..n {
                    eta[a][b] = &eta[a][b] + &(&(&vals[a] * &vals[b]) * &e);
                }
            }
        }
        Ok(eta)
    }
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub p: RatFunc,
    pub weights: Vec<RatFunc>,
}

impl FixedPoint {
    pub fn euler(&self) -> RatFunc {
        self.weights.iter().fold(RatFunc::one(), |a, w| a * w.clone())
    }

    /// `c_{-1} = c_{dim-1} / c_dim = sum 1/w`.
    pub fn c_minus1(&self) -> Result<RatFunc, ToricError> {
        let mut acc = RatFunc::zero();
        for w in &self.weights {
            acc = acc.try_add(&w.recip()?)?;
        }
        Ok(acc)
    }
}

/// `prod_j w_j` over the columns touching `p_i`, when each column touches one `p`.
fn product_relations(p_names: &[String], m: &[Vec<i64>], lambda: &[RatFunc]) -> Result<Vec<Vec<RatFunc>>, ToricError> {
    let r = p_names.len();
    let mut rels: Vec<Vec<RatFunc>> = vec![vec![RatFunc::one()]; r];
    for j in 0..lambda.len() {
        let rows: Vec<usize> = (0..r).filter(|&i| m[i][j] != 0).collect();
        match rows.as_slice() {
            [] => {}
            [i] => {
                // multiply by m_ij p - lambda_j, then keep monic below
                let old = &rels[*i];
                let mut new = vec![RatFunc::zero(); old.len() + 1];
                for (k, c) in old.iter().enumerate() {
                    new[k + 1] = &new[k + 1] + &(c * &RatFunc::from_int(m[*i][j]));
                    new[k] = &new[k] - &(c * &lambda[j]);
                }
                rels[*i] = new;
            }
            _ => {
                return Err(ToricError::NormalFormDivergent(format!(
                    "column {} mixes several p; supply a basis and multiplication table",
                    j + 1
                )))
            }
        }
    }
    for (i, rel) in rels.iter().enumerate() {
        if rel.len() < 2 {
            return Err(ToricError::NormalFormDivergent(format!("no relation for {}", p_names[i])));
        }
    }
    Ok(rels)
}

/// Cohomology-valued hbar-jet: one [`HJet`] per basis element.
#[derive(Debug, Clone, PartialEq)]
pub struct CohomJet {
    pub comps: Vec<HJet<RatFunc>>,
}

impl CohomJet {
    pub fn constant(elem: &[Series]) -> Self {
        CohomJet { comps: elem.iter().map(|s| HJet::from_series(s.clone())).collect() }
    }

    pub fn window(&self) -> (i64, i64) {
        self.comps[0].window()
    }

    pub fn coeff(&self, k: i64) -> Vec<Series> {
        self.comps.iter().map(|c| c.coeff(k)).collect()
    }

    pub fn try_add(&self, o: &Self) -> Result<Self, ToricError> {
        let comps = self.comps.iter().zip(&o.comps).map(|(a, b)| a.try_add(b)).collect::<Result<_, _>>()?;
        Ok(CohomJet { comps })
    }

    pub fn mul(&self, o: &Self, coh: &Cohomology) -> Result<Self, ToricError> {
        let n = coh.rank();
        let mut out: Vec<Option<HJet<RatFunc>>> = vec![None; n];
        for i in 0..n {
            for j in 0..n {
                let prod = self.comps[i].try_mul(&o.comps[j])?;
                for (k, t) in coh.table[i][j].iter().enumerate() {
                    let term = prod.scale(t);
                    out[k] = Some(match out[k].take() {
                        None => term,
                        Some(acc) => acc.try_add(&term)?,
                    });
                }
            }
        }
        Ok(CohomJet { comps: out.into_iter().map(|c| c.expect("rank > 0")).collect() })
    }

    pub fn mul_series(&self, s: &Series) -> Result<Self, ToricError> {
        let comps = self.comps.iter().map(|c| c.mul_series(s)).collect::<Result<_, _>>()?;
        Ok(CohomJet { comps })
    }

    pub fn map(&self, f: impl Fn(&Series) -> Result<Series, SeriesError>) -> Result<Self, ToricError> {
        let comps = self.comps.iter().map(|c| c.map(&f)).collect::<Result<_, _>>()?;
        Ok(CohomJet { comps })
    }

    pub fn shift(&self, k: i64) -> Self {
        CohomJet { comps: self.comps.iter().map(|c| c.shift(k)).collect() }
    }

    pub fn restrict(&self, lo: i64, hi: i64) -> Self {
        CohomJet { comps: self.comps.iter().map(|c| c.restrict(lo, hi)).collect() }
    }

    pub fn truncate_q(&self, o: &Rational) -> Self {
        CohomJet { comps: self.comps.iter().map(|c| c.truncate_q(o)).collect() }
    }

    /// `exp(E / hbar)` for a ring-valued series `E`, kept down to `hbar^lo`.
    pub fn exp_over_hbar(e: &[Series], coh: &Cohomology, lo: i64) -> Result<Self, ToricError> {
        let nvars = e[0].nvars();
        let mut comps: Vec<HJet<RatFunc>> = (0..coh.rank()).map(|_| HJet::new(nvars, lo, 0, false, true)).collect();
        let mut cur: Vec<Series> =
            coh.one().iter().map(|c| Series::constant(nvars, c.clone())).collect();
        let mut fact = Rational::one();
        for n in 0..=(-lo) {
            if n > 0 {
                cur = coh.mul_series(&cur, e)?;
                fact *= Rational::from_integer(n.into());
            }
            let inv = RatFunc::constant(fact.recip());
            for (c, s) in comps.iter_mut().zip(&cur) {
                c.set(-n, s.scale(&inv));
            }
        }
        Ok(CohomJet { comps })
    }
}

fn assemble(data: &ToricBundleData, order: i64, lo: i64) -> Result<CohomJet, ToricError> {
    let r = data.r();
    let n = data.coh.rank();
    let mut acc: BTreeMap<(i64, usize), Series> = BTreeMap::new();
    for d in data.degrees(order) {
        let t = data.degree_term(&d, lo)?;
        for (k, c) in t.coeffs.iter().enumerate() {
            let pw = t.top - k as i64;
            for (b, x) in c.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                if pw > 0 {
                    return Err(ToricError::NonNegativityViolated(format!("degree {:?} has hbar^{}", d, pw)));
                }
                if pw < lo {
                    continue;
                }
                let mono = Series::monomial(r, 1, d.clone(), x.clone(), EXACT);
                let e = acc.entry((pw, b)).or_insert_with(|| Series::zero(r, EXACT));
                *e = e.try_add(&mono)?;
            }
        }
    }
    let mut comps: Vec<HJet<RatFunc>> = (0..n).map(|_| HJet::new(r, lo, 0, false, true)).collect();
    for k in lo..=0 {
        for (b, c) in comps.iter_mut().enumerate() {
            let s = acc.remove(&(k, b)).unwrap_or_else(|| Series::zero(r, EXACT));
            c.set(k, s.truncate(order));
        }
    }
    Ok(CohomJet { comps })
}

fn window(w: (i64, i64)) -> Result<(i64, i64), ToricError> {
    if w.0 > w.1 {
        return Err(ToricError::Shape(format!("empty hbar window {}:{}", w.0, w.1)));
    }
    Ok(w)
}

/// I-series of concave data, `q`-order `order`, hbar window `[lo, hi]`.
pub fn hypergeom_i_concave(data: &ToricBundleData, order: i64, hbar: (i64, i64)) -> Result<CohomJet, ToricError> {
    if data.orientation != Orientation::Concave {
        return Err(ToricError::Shape("concave series requested for convex data".into()));
    }
    let (lo, hi) = window(hbar)?;
    Ok(assemble(data, order, lo)?.restrict(lo, hi))
}

/// I-series of convex (super) data, with the `(-1)^{sum L_j(d)}` sign on `q^d`.
pub fn hypergeom_i_convex(data: &ToricBundleData, order: i64, hbar: (i64, i64)) -> Result<CohomJet, ToricError> {
    if data.orientation != Orientation::Convex {
        return Err(ToricError::Shape("convex series requested for concave data".into()));
    }
    let (lo, hi) = window(hbar)?;
    Ok(assemble(data, order, lo)?.restrict(lo, hi))
}

fn factorial(n: i64) -> Rational {
    (1..=n).fold(Rational::one(), |a, k| a * Rational::from_integer(k.into()))
}

fn phi_impl(data: &ToricBundleData, order: i64, signed: bool) -> Series {
    let r = data.r();
    let mut acc = Series::zero(r, order);
    for d in data.degrees(order) {
        let bl = data.big_l(&d);
        let bd = data.big_d(&d);
        if bl.iter().sum::<i64>() != bd.iter().sum::<i64>() || bd.iter().any(|&x| x < 0) || bl.iter().any(|&x| x < 0) {
            continue;
        }
        let mut c = bl.iter().fold(Rational::one(), |a, &x| a * factorial(x));
        c = bd.iter().fold(c, |a, &x| a / factorial(x));
        if signed && bl.iter().sum::<i64>() % 2 != 0 {
            c = -c;
        }
        acc = acc.try_add(&Series::monomial(r, 1, d, RatFunc::constant(c), EXACT)).expect("same shape");
    }
    acc
}

/// `phi(q) = sum_{sum L = sum D} prod L_j! / prod D_j! q^d`.
pub fn phi_series(data: &ToricBundleData, order: i64) -> Series {
    phi_impl(data, order, false)
}

/// `phi(+-q)` with `+-q^d = (-1)^{sum L_j(d)} q^d`.
pub fn phi_series_signed(data: &ToricBundleData, order: i64) -> Series {
    phi_impl(data, order, true)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorMap {
    /// Whole `t0` shift read off the `hbar^{-1}` coefficient of `1`.
    pub t0_shift: Series,
    /// Part of the shift with no equivariant symbol.
    pub f0: Series,
    /// Coefficient of each equivariant symbol in the shift (linear parts only).
    pub weight_parts: BTreeMap<String, Series>,
    /// `log q_i` shifts.
    pub f: Vec<Series>,
    pub phi: Series,
}

impl MirrorMap {
    pub fn is_identity(&self) -> bool {
        self.t0_shift.is_zero() && self.f.iter().all(|s| s.is_zero()) && self.phi.try_sub(&Series::one(self.phi.nvars())).is_ok_and(|s| s.is_zero())
    }
}

fn split_weights(s: &Series) -> Result<(Series, BTreeMap<String, Series>), ToricError> {
    let r = s.nvars();
    let mut f0 = Series::zero(r, s.order());
    let mut parts: BTreeMap<String, Series> = BTreeMap::new();
    let f0 = {
        for (e, c) in s.terms() {
            let mono = |x: RatFunc| Series::monomial(r, s.lattice(), e.clone(), x, EXACT);
            let linear = c.denom().is_constant() && c.numer().total_degree() <= 1;
            match (linear, c.registry()) {
                (true, Some(reg)) => {
                    let den = c.denom().constant_value().expect("constant");
                    for (m, k) in c.numer().terms() {
                        let v = RatFunc::constant(k / &den);
                        match m.iter().position(|&x| x == 1) {
                            None => f0 = f0.try_add(&mono(v))?,
                            Some(i) => {
                                let name = reg.names()[i].clone();
                                let e = parts.entry(name).or_insert_with(|| Series::zero(r, s.order()));
                                *e = e.try_add(&mono(v))?;
                            }
                        }
                    }
                }
                _ => f0 = f0.try_add(&mono(c.clone()))?,
            }
        }
        f0
    };
    Ok((f0, parts))
}

/// Reads the mirror map off the `hbar^0` and `hbar^{-1}` coefficients and applies it.
///
/// Returns the map and `J(q') = exp(-(C + sum p_i f_i)/hbar) I(q) / phi` with `q = q(q')`.
pub fn mirror_map_extract(i: &CohomJet, coh: &Cohomology) -> Result<(MirrorMap, CohomJet), ToricError> {
    let (lo, _) = i.window();
    let nvars = i.comps[0].nvars();
    let lead = i.coeff(0);
    let phi = lead[0].clone();
    if lead[1..].iter().any(|s| !s.is_zero()) || !phi.constant_term().is_one() || phi.valuation() != Some(0) {
        return Err(ToricError::NonUnitLeading);
    }
    let scaled = i.mul_series(&phi.inv()?)?;
    let c1 = scaled.coeff(-1);
    let t0_shift = c1[0].clone();
    let f: Vec<Series> = (0..coh.p_classes.len())
        .map(|k| coh.p_index(k).map_or_else(|| Series::zero(nvars, EXACT), |a| c1[a].clone()))
        .collect();
    let mut shift = coh.one().iter().map(|c| t0_shift.scale(c)).collect::<Vec<_>>();
    for (fk, pk) in f.iter().zip(&coh.p_classes) {
        for (s, x) in shift.iter_mut().zip(pk) {
            *s = s.try_add(&fk.scale(x))?;
        }
    }
    let neg: Vec<Series> = shift.iter().map(|s| -s).collect();
    let ex = CohomJet::exp_over_hbar(&neg, coh, lo)?;
    let mut j = ex.mul(&scaled, coh)?;
    if f.iter().any(|s| !s.is_zero()) {
        let g = Series::inverse_q_map(&f)?;
        j = j.map(|s| s.substitute_q(&g))?;
    }
    let (f0, weight_parts) = split_weights(&t0_shift)?;
    Ok((MirrorMap { t0_shift, f0, weight_parts, f, phi }, j))
}

#[derive(Debug, Clone)]
pub struct QuantumRelation {
    /// `hbar^0` part of the divisor operators applied to `I e^{(t0 + p log q)/hbar}`.
    pub product: Vec<Series>,
    pub phi: Series,
    /// Classical product of the chosen `v_j`.
    pub classical: HElem,
    pub holds: bool,
}

/// Applies `v_j -> v_j(p + hbar q d/dq)` for each listed divisor and compares the `hbar^0`
/// part with `phi(+-q) v_{j1} ... v_{jl}`.
pub fn quantum_relation_extract(
    i: &CohomJet,
    data: &ToricBundleData,
    divisors: &[usize],
    order: i64,
) -> Result<QuantumRelation, ToricError> {
    let coh = &data.coh;
    let r = data.r();
    let (lo, _) = i.window();
    if lo + divisors.len() as i64 > 0 {
        return Err(ToricError::Shape(format!("hbar window must reach {}", -(divisors.len() as i64))));
    }
    let s = match data.orientation {
        Orientation::Concave => -1,
        Orientation::Convex => 1,
    };
    let mut cur = i.clone();
    let mut classical = coh.one();
    for &j in divisors {
        let v = data.v_elem(j);
        classical = coh.mul(&classical, &v);
        let vj = CohomJet::constant(&v.iter().map(|c| Series::constant(r, c.clone())).collect::<Vec<_>>());
        let mut next = vj.mul(&cur, coh)?;
        for k in 0..r {
            if data.l[k][j] == 0 {
                continue;
            }
            let c = RatFunc::from_int(s * data.l[k][j]);
            let d = cur.map(|x| Ok(x.theta(k).scale(&c)))?.shift(1);
            next = next.try_add(&d)?;
        }
        cur = next;
    }
    let o = Rational::from_integer(order.into());
    let product: Vec<Series> = cur.coeff(0).iter().map(|x| x.truncate_q(&o)).collect();
    let phi = phi_series_signed(data, order);
    let expected: Vec<Series> = classical.iter().map(|c| phi.scale(c)).collect();
    let holds = product.iter().zip(&expected).all(|(a, b)| a.try_sub(b).is_ok_and(|d| d.truncate_q(&o).is_zero()));
    Ok(QuantumRelation { product, phi, classical, holds })
}

/// `Res_{p=inf} phi(p) dp / (p^2 (p + d hbar)^2) = -sum_{k>=3} a_k (k-2) (-d hbar)^{k-3}`.
///
/// The residue at infinity is minus the coefficient of `p^{-1}` in the Laurent expansion in `1/p`.
pub fn multiple_cover_residue(d: i64, phi: &[RatFunc], hbar: &RatFunc) -> RatFunc {
    let x = -(hbar * &RatFunc::from_int(d));
    let mut acc = RatFunc::zero();
    for (k, a) in phi.iter().enumerate().skip(3) {
        acc = acc + a * &(x.powi(k as i32 - 3) * RatFunc::from_int(k as i64 - 2));
    }
    -acc
}

/// Genus-0 contribution of the multiple covers of a degree-`big_d` class to the Yukawa
/// coupling: `sum_k Q^{k D} (-Res_k(D^3 p^3))`.
pub fn yukawa_assembly(big_d: i64, order: i64) -> NovikovSeries<Rational> {
    let reg = Registry::new(&["h"]);
    let h = RatFunc::var(&reg, "h").expect("symbol");
    let d3 = RatFunc::from_int(big_d.pow(3));
    let phi = [RatFunc::zero(), RatFunc::zero(), RatFunc::zero(), d3];
    let mut acc = NovikovSeries::zero(1, order);
    let mut k = 1;
    while k * big_d < order {
        let c = -multiple_cover_residue(k, &phi, &h);
        let c = c.constant_value().expect("residue of a cubic is constant");
        acc = acc + NovikovSeries::monomial(1, 1, vec![k * big_d], c, EXACT);
        k += 1;
    }
    acc
}

#[derive(Debug, Clone)]
pub struct ConifoldReport {
    pub order: i64,
    pub i_series: CohomJet,
    pub relation: QuantumRelation,
    pub frobenius: FrobeniusData<RatFunc>,
    pub frame: CanonicalFrame<RatFunc>,
    pub ladder: RLadder<RatFunc>,
    pub residual: ResidualReport,
    pub c_minus1: Vec<RatFunc>,
    pub dg: EllipticForm<RatFunc>,
    /// Integral of `dG - dlog q / 8`.
    pub genus1: Series,
    pub expected_dg: OneForm<RatFunc>,
    pub expected_genus1: Series,
}

impl ConifoldReport {
    pub fn dg_matches(&self) -> bool {
        let o = Rational::from_integer(self.order.into());
        self.dg.total.truncate_q(&o) == self.expected_dg.truncate_q(&o)
    }
    pub fn genus1_matches(&self) -> bool {
        let o = Rational::from_integer(self.order.into());
        self.genus1.truncate_q(&o) == self.expected_genus1.truncate_q(&o)
    }
}

/// I-series, relation, Frobenius data, frame, ladder and elliptic form for the conifold.
pub fn conifold_pipeline(order: i64) -> Result<ConifoldReport, ToricError> {
    toric_pipeline(&ToricBundleData::conifold(), order)
}

/// Same pipeline for one-parameter concave data with `l = 2`, `lambda' = 0` and basis `(1, p)`;
/// the expected closed forms are the conifold ones.
pub fn toric_pipeline(data: &ToricBundleData, order: i64) -> Result<ConifoldReport, ToricError> {
    if data.r() != 1 || data.coh.rank() != 2 || data.lambda_v.len() < 2 {
        return Err(ToricError::Shape("pipeline expects one p, rank-two cohomology and l >= 2".into()));
    }
    let l = data.lambda_v.len();
    let i_series = hypergeom_i_concave(data, order, (-(l as i64) - 2, 0))?;
    let divisors: Vec<usize> = (0..l).collect();
    let relation = quantum_relation_extract(&i_series, data, &divisors, order)?;
    // with lambda' = 0, v_1 o v_2 = c p o p for c = l_1 l_2
    if data.coh.p_index(0) != Some(1) || data.lambda_v.iter().any(|x| !x.is_zero()) || l != 2 {
        return Err(ToricError::Shape("pipeline needs basis (1, p), lambda' = 0 and l = 2".into()));
    }
    let cinv = RatFunc::from_int(data.l[0][0] * data.l[0][1]).recip()?;
    let pp: Vec<Series> = relation.product.iter().map(|s| s.scale(&cinv)).collect();
    let rel_low = vec![-&pp[0], -&pp[1]];
    let eta = data.localization_pairing()?;
    let frobenius = FrobeniusData::from_relation(&data.p_names[0], &rel_low, eta)?;
    let frame = CanonicalFrame::build(&frobenius, order + 2, &EigenOptions::default())?;
    let ladder = frame.r_ladder(2, &Normalization::ModQ)?;
    let residual = frame.assemble_and_verify(&ladder)?;
    let fps = data.fixed_points()?;
    let mut c_minus1 = Vec::new();
    for a in 0..frame.rank() {
        let xi0 = frame.split.eigenvalues[a][1].constant_term();
        let fp = fps
            .iter()
            .find(|fp| fp.p == xi0)
            .ok_or_else(|| ToricError::Shape(format!("branch {} matches no fixed point", a)))?;
        c_minus1.push(fp.c_minus1()?);
    }
    let dg = elliptic_dg_equivariant(&frame, &ladder.levels[0], &c_minus1)?;
    let eighth = RatFunc::constant(rat(1, 8));
    let shifted = OneForm::new(vec![
        dg.total.dt0().clone(),
        dg.total.dlogq(0).try_sub(&Series::constant(1, eighth.clone()))?,
    ]);
    let genus1 = shifted.integrate()?.series().clone();
    let o = Rational::from_integer(order.into());
    let q = Series::q(1, 0);
    let one_minus_q = (Series::one(1) - q.clone()).truncate_q(&o);
    let tail = q.try_mul(&one_minus_q.inv()?)?.scale(&RatFunc::constant(rat(1, 12)));
    let expected_dg =
        OneForm::new(vec![Series::zero(1, EXACT), Series::constant(1, eighth).try_add(&tail)?]);
    let expected_genus1 = one_minus_q.log()?.scale(&RatFunc::constant(rat(-1, 12)));
    Ok(ConifoldReport {
        order,
        i_series,
        relation,
        frobenius,
        frame,
        ladder,
        residual,
        c_minus1,
        dg,
        genus1,
        expected_dg,
        expected_genus1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam() -> RatFunc {
        RatFunc::var(&ToricBundleData::conifold().reg, "l").unwrap()
    }

    #[test]
    fn conifold_ring_and_pairing() {
        let d = ToricBundleData::conifold();
        assert_eq!(d.coh.labels, vec!["1", "p"]);
        let l = lam();
        let p = d.coh.p_classes[0].clone();
        assert_eq!(d.coh.mul(&p, &p), vec![&l * &l, RatFunc::zero()]);
        let eta = d.localization_pairing().unwrap();
        let li2 = (&l * &l).recip().unwrap();
        assert_eq!(eta, vec![vec![RatFunc::zero(), li2.clone()], vec![li2, RatFunc::zero()]]);
        let cs: Vec<RatFunc> = d.fixed_points().unwrap().iter().map(|f| f.c_minus1().unwrap()).collect();
        let c = l.recip().unwrap().scale(&rat(3, 2));
        assert_eq!(cs, vec![-c.clone(), c]);
    }

    #[test]
    fn conifold_first_terms() {
        let d = ToricBundleData::conifold();
        let i = hypergeom_i_concave(&d, 4, (-4, 0)).unwrap();
        // d = 0 gives 1; d >= 1 starts at hbar^-2
        assert_eq!(i.coeff(0)[0], Series::one(1).truncate(4));
        assert!(i.coeff(-1).iter().all(|s| s.is_zero()));
        // q p^2 / ((p + hbar)^2 - l^2) = q l^2 hbar^-2 (1 - 2 p/hbar + ...)
        let l2 = &lam() * &lam();
        assert_eq!(i.coeff(-2)[0].coeff(&[1]), l2);
        assert_eq!(i.coeff(-3)[1].coeff(&[1]), l2.scale(&rat(-2, 1)));
    }

    #[test]
    fn conifold_relation() {
        let d = ToricBundleData::conifold();
        let i = hypergeom_i_concave(&d, 8, (-4, 0)).unwrap();
        let rel = quantum_relation_extract(&i, &d, &[0, 1], 8).unwrap();
        assert!(rel.holds);
        let o = rat(8, 1);
        let l2 = &lam() * &lam();
        let expect = Series::from_coeffs(vec![l2; 8], 8);
        assert_eq!(rel.product[0].truncate_q(&o), expect);
        assert!(rel.product[1].is_zero());
        let (mm, _) = mirror_map_extract(&i, &d.coh).unwrap();
        assert!(mm.is_identity());
    }

    #[test]
    fn convex_ratio() {
        let conc = ToricBundleData::conifold();
        let conv = conc.with_orientation(Orientation::Convex);
        for dd in 1..4 {
            let deg = [dd];
            let lo = -5;
            let a = conc.degree_term(&deg, lo).unwrap();
            let b = conv.degree_term(&deg, lo).unwrap();
            let jet = |t: &DegreeTerm| {
                let mut comps: Vec<HJet<RatFunc>> = (0..2).map(|_| HJet::new(1, lo, t.top, false, true)).collect();
                for (k, c) in t.coeffs.iter().enumerate() {
                    for (b, x) in c.iter().enumerate() {
                        comps[b].set(t.top - k as i64, Series::constant(1, x.clone()));
                    }
                }
                CohomJet { comps }
            };
            let cst = |e: HElem, shift: i64| {
                let mut comps: Vec<HJet<RatFunc>> = Vec::new();
                for x in e {
                    let mut h = HJet::new(1, 0, shift, true, true);
                    h.set(0, Series::constant(1, x));
                    comps.push(h);
                }
                CohomJet { comps }
            };
            let coh = &conc.coh;
            let mut lhs = jet(&b);
            for j in 0..2 {
                lhs = lhs.mul(&cst(conv.v_elem(j), 0), coh).unwrap();
            }
            let mut rhs = jet(&a);
            for j in 0..2 {
                let mut f = cst(conv.v_elem(j), 1);
                f.comps[0].set(1, Series::constant(1, RatFunc::from_int(dd)));
                rhs = rhs.mul(&f, coh).unwrap();
            }
            // sign (-1)^{sum L} = +1 here
            let w = (lo + 2, 0);
            assert_eq!(lhs.restrict(w.0, w.1), rhs.restrict(w.0, w.1).restrict(w.0, w.1));
        }
        let i = hypergeom_i_convex(&conv, 6, (-2, 0)).unwrap();
        assert_eq!(i.coeff(0)[0], phi_series_signed(&conv, 6));
        assert_eq!(phi_series(&conc, 6), Series::from_coeffs(vec![RatFunc::one(); 6], 6));
    }

    #[test]
    fn artificial_mirror_map() {
        let coh = ToricBundleData::conifold().coh;
        let mut comps: Vec<HJet<RatFunc>> = (0..2).map(|_| HJet::new(1, -3, 0, false, true)).collect();
        comps[0].set(0, Series::one(1).truncate(6));
        comps[0].set(-1, Series::q(1, 0).truncate(6));
        let i = CohomJet { comps };
        let (mm, j) = mirror_map_extract(&i, &coh).unwrap();
        assert_eq!(mm.f0, Series::q(1, 0).truncate(6));
        assert!(j.coeff(-1).iter().all(|s| s.is_zero()));
        assert_eq!(j.coeff(0)[0], Series::one(1).truncate(6));
        let (again, j2) = mirror_map_extract(&j, &coh).unwrap();
        assert!(again.is_identity());
        assert_eq!(j2, j);
    }

    #[test]
    fn residues_and_yukawa() {
        let reg = Registry::new(&["h"]);
        let h = RatFunc::var(&reg, "h").unwrap();
        assert!(multiple_cover_residue(3, &[RatFunc::one()], &h).is_zero());
        let p3 = [RatFunc::zero(), RatFunc::zero(), RatFunc::zero(), RatFunc::one()];
        assert_eq!(multiple_cover_residue(2, &p3, &h), RatFunc::from_int(-1));
        let y = yukawa_assembly(1, 8);
        assert_eq!(y, NovikovSeries::from_coeffs((0..8).map(|k| rat(i64::from(k > 0), 1)), 8));
    }

    #[test]
    fn conifold_genus_one() {
        let rep = conifold_pipeline(6).unwrap();
        assert!(rep.residual.first_nonzero.is_none());
        assert!(rep.dg_matches(), "{}", rep.dg.total);
        assert!(rep.genus1_matches(), "{}", rep.genus1);
    }

    #[test]
    fn invalid_data() {
        let base = ToricBundleData::conifold();
        let bad = ToricBundleData::new(
            base.reg.clone(),
            base.p_names.clone(),
            vec![vec![1, 1]],
            base.lambda.clone(),
            vec![vec![3, 0]],
            vec![RatFunc::zero(), RatFunc::zero()],
            Orientation::Concave,
            vec![vec![1]],
            None,
        );
        assert!(matches!(bad, Err(ToricError::NonNegativityViolated(_))));
        let mixed = ToricBundleData::new(
            base.reg.clone(),
            vec!["p1".into(), "p2".into()],
            vec![vec![1, 1], vec![1, 0]],
            base.lambda.clone(),
            vec![vec![], vec![]],
            vec![],
            Orientation::Concave,
            vec![vec![1, 0], vec![0, 1]],
            None,
        );
        assert!(matches!(mixed, Err(ToricError::NormalFormDivergent(_))));
    }
}

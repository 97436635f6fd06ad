//! Frobenius-algebra data on the small quantum slice: pairing, product tables and checks.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::exact::{RatFunc, Rational};
use crate::scalar::Coeff;
use crate::series::matrix::{self, SMat, SVec};
use crate::series::{NovikovSeries, SeriesError, EXACT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrobeniusError {
    #[error("pairing is not symmetric at ({0}, {1})")]
    AsymmetricPairing(usize, usize),
    #[error("pairing is degenerate")]
    SingularPairing,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("relation has repeated roots at the working order")]
    DegenerateRelation,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Coordinate direction on the small slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirKind {
    T0,
    LogQ(usize),
}

/// A coordinate direction and the basis coordinates of the class it multiplies by.
#[derive(Debug, Clone)]
pub struct Direction<C> {
    pub name: String,
    pub kind: DirKind,
    pub class: Vec<C>,
}

/// Degrees used by the Euler-field homogeneity check.
#[derive(Debug, Clone, Default)]
pub struct Grading {
    pub q_degrees: Vec<Rational>,
    pub basis_degrees: Vec<Rational>,
    pub symbol_weights: BTreeMap<String, Rational>,
}

/// Frobenius algebra over the Novikov ring with constant pairing.
///
/// `mult[a]` is the matrix of multiplication by the basis element `a`: column `b` holds the
/// coordinates of `phi_a * phi_b`.
#[derive(Debug, Clone)]
pub struct FrobeniusData<C> {
    pub labels: Vec<String>,
    pub eta: Vec<Vec<C>>,
    pub eta_inv: Vec<Vec<C>>,
    pub mult: Vec<SMat<C>>,
    pub unit: Vec<C>,
    pub directions: Vec<Direction<C>>,
    pub grading: Option<Grading>,
    nvars: usize,
}

/// First basis triple violating associativity, with the offending component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WdvvWitness {
    pub triple: (String, String, String),
    pub component: String,
    pub difference: String,
}

/// First structure constant that is not homogeneous of the expected degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradingWitness {
    pub factor: String,
    pub argument: String,
    pub component: String,
    pub expected: String,
    pub term: String,
}

/// Inverse of a constant matrix over a field.
pub fn const_inverse<C: Coeff>(m: &[Vec<C>]) -> Option<Vec<Vec<C>>> {
    let n = m.len();
    let mut a: Vec<Vec<C>> = m.to_vec();
    let mut inv: Vec<Vec<C>> = (0..n).map(|i| (0..n).map(|j| if i == j { C::one() } else { C::zero() }).collect()).collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        inv.swap(col, p);
        let pinv = C::one() / a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].clone() * pinv.clone();
            inv[col][j] = inv[col][j].clone() * pinv.clone();
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    a[r][j] = a[r][j].clone() - f.clone() * a[col][j].clone();
                    inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
                }
            }
        }
    }
    Some(inv)
}

fn basis_vec<C: Coeff>(n: usize, k: usize) -> Vec<C> {
    (0..n).map(|i| if i == k { C::one() } else { C::zero() }).collect()
}

impl<C: Coeff> FrobeniusData<C> {
    pub fn new(
        labels: Vec<String>,
        eta: Vec<Vec<C>>,
        mult: Vec<SMat<C>>,
        unit: Vec<C>,
        directions: Vec<Direction<C>>,
        nvars: usize,
    ) -> Result<Self, FrobeniusError> {
        let n = labels.len();
        if eta.len() != n || eta.iter().any(|r| r.len() != n) {
            return Err(FrobeniusError::Shape("pairing must be square of basis size".into()));
        }
        if mult.len() != n || mult.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
            return Err(FrobeniusError::Shape("one square product matrix per basis element".into()));
        }
        if unit.len() != n || directions.iter().any(|d| d.class.len() != n) {
            return Err(FrobeniusError::Shape("vector length must equal basis size".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if eta[i][j] != eta[j][i] {
                    return Err(FrobeniusError::AsymmetricPairing(i, j));
                }
            }
        }
        let eta_inv = const_inverse(&eta).ok_or(FrobeniusError::SingularPairing)?;
        Ok(FrobeniusData { labels, eta, eta_inv, mult, unit, directions, grading: None, nvars })
    }

    /// Algebra `K[[q]][p]/(p^n + r_{n-1} p^{n-1} + ... + r_0)` in the basis `1, p, ..., p^{n-1}`,
    /// with directions `t0` and `log q` (multiplication by `p`).
    pub fn from_relation(symbol: &str, relation_low: &[NovikovSeries<C>], eta: Vec<Vec<C>>) -> Result<Self, FrobeniusError> {
        let n = relation_low.len();
        if n == 0 {
            return Err(FrobeniusError::Shape("empty relation".into()));
        }
        let nvars = relation_low[0].nvars();
        let mut comp = matrix::zeros::<C>(n, n, nvars);
        for j in 0..n - 1 {
            comp[j + 1][j] = NovikovSeries::one(nvars);
        }
        for (k, r) in relation_low.iter().enumerate() {
            comp[k][n - 1] = -r;
        }
        let mut mult = vec![matrix::identity(n, nvars)];
        for k in 1..n {
            let next = matrix::mat_mul(&comp, &mult[k - 1])?;
            mult.push(next);
        }
        let labels = (0..n)
            .map(|k| match k {
                0 => "1".to_string(),
                1 => symbol.to_string(),
                _ => format!("{}^{}", symbol, k),
            })
            .collect();
        let mut directions = vec![Direction { name: "t0".into(), kind: DirKind::T0, class: basis_vec(n, 0) }];
        if n > 1 {
            directions.push(Direction { name: "log q".into(), kind: DirKind::LogQ(0), class: basis_vec(n, 1) });
        }
        Self::new(labels, eta, mult, basis_vec(n, 0), directions, nvars)
    }

    pub fn with_grading(mut self, g: Grading) -> Self {
        self.grading = Some(g);
        self
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Matrix of multiplication by the vector `v`.
    pub fn mult_by(&self, v: &SVec<C>) -> Result<SMat<C>, FrobeniusError> {
        let n = self.rank();
        let mut acc = matrix::zeros(n, n, self.nvars);
        for (a, c) in v.iter().enumerate() {
            if c.is_zero() && c.is_exact() {
                continue;
            }
            acc = matrix::mat_add(&acc, &matrix::mat_scale(&self.mult[a], c)?)?;
        }
        Ok(acc)
    }

    fn const_vec(&self, v: &[C]) -> SVec<C> {
        v.iter().map(|c| NovikovSeries::constant(self.nvars, c.clone())).collect()
    }

    /// `A_i`: multiplication by the class of direction `i`.
    pub fn direction_matrix(&self, i: usize) -> Result<SMat<C>, FrobeniusError> {
        self.mult_by(&self.const_vec(&self.directions[i].class))
    }

    pub fn unit_vector(&self) -> SVec<C> {
        self.const_vec(&self.unit)
    }

    pub fn quantum_product(&self, a: &SVec<C>, b: &SVec<C>) -> Result<SVec<C>, FrobeniusError> {
        Ok(matrix::mat_vec(&self.mult_by(a)?, b)?)
    }

    /// `eta(u, v)`.
    pub fn pairing(&self, u: &SVec<C>, v: &SVec<C>) -> Result<NovikovSeries<C>, SeriesError> {
        let mut acc = NovikovSeries::zero(self.nvars, EXACT);
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                if self.eta[i][j].is_zero() {
                    continue;
                }
                acc = acc.try_add(&ui.try_mul(vj)?.scale(&self.eta[i][j]))?;
            }
        }
        Ok(acc)
    }

    pub fn eta_matrix(&self) -> SMat<C> {
        matrix::from_consts(&self.eta, self.nvars)
    }

    /// Re-expresses the data in a new basis whose vectors are the columns of `p` (old coordinates).
    pub fn change_basis(&self, p: &[Vec<C>], labels: Vec<String>) -> Result<Self, FrobeniusError> {
        let n = self.rank();
        let pinv = const_inverse(p).ok_or(FrobeniusError::SingularPairing)?;
        let ps = matrix::from_consts(p, self.nvars);
        let pis = matrix::from_consts(&pinv, self.nvars);
        let conv = |v: &[C]| -> Vec<C> {
            (0..n).map(|i| (0..n).fold(C::zero(), |acc, j| acc + pinv[i][j].clone() * v[j].clone())).collect()
        };
        let mut mult = Vec::with_capacity(n);
        for a in 0..n {
            let col: Vec<C> = (0..n).map(|i| p[i][a].clone()).collect();
            let m = self.mult_by(&self.const_vec(&col))?;
            mult.push(matrix::mat_mul(&pis, &matrix::mat_mul(&m, &ps)?)?);
        }
        let eta: Vec<Vec<C>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = C::zero();
                        for k in 0..n {
                            for l in 0..n {
                                acc = acc + p[k][i].clone() * self.eta[k][l].clone() * p[l][j].clone();
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let directions = self
            .directions
            .iter()
            .map(|d| Direction { name: d.name.clone(), kind: d.kind, class: conv(&d.class) })
            .collect();
        let mut out = Self::new(labels, eta, mult, conv(&self.unit), directions, self.nvars)?;
        out.grading = None;
        Ok(out)
    }

    /// Associativity `(a*b)*c = a*(b*c)` over all basis triples to q-order `order`.
    pub fn wdvv_check(&self, order: i64) -> Result<(), WdvvWitness> {
        let n = self.rank();
        let o = Rational::from_integer(order.into());
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let ea = self.const_vec(&basis_vec(n, a));
                    let eb = self.const_vec(&basis_vec(n, b));
                    let ec = self.const_vec(&basis_vec(n, c));
                    let lhs = self.quantum_product(&self.quantum_product(&ea, &eb).unwrap(), &ec).unwrap();
                    let rhs = self.quantum_product(&ea, &self.quantum_product(&eb, &ec).unwrap()).unwrap();
                    for k in 0..n {
                        let d = lhs[k].try_sub(&rhs[k]).unwrap().truncate_q(&o);
                        if !d.is_zero() {
                            return Err(WdvvWitness {
                                triple: (self.labels[a].clone(), self.labels[b].clone(), self.labels[c].clone()),
                                component: self.labels[k].clone(),
                                difference: d.to_string(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `eta(a*b, c) = eta(a, b*c)` for all basis triples: `eta M_a = M_a^T eta`.
    pub fn self_adjoint_check(&self) -> Result<(), (String, usize, usize)> {
        let eta = self.eta_matrix();
        for (a, m) in self.mult.iter().enumerate() {
            let l = matrix::mat_mul(&eta, m).unwrap();
            let r = matrix::mat_mul(&matrix::transpose(m), &eta).unwrap();
            for i in 0..self.rank() {
                for j in 0..self.rank() {
                    if !l[i][j].try_sub(&r[i][j]).unwrap().is_zero() {
                        return Err((self.labels[a].clone(), i, j));
                    }
                }
            }
        }
        Ok(())
    }

    /// `A_i A_j = A_j A_i` for every pair of directions.
    pub fn commutativity_check(&self) -> Result<(), (String, String)> {
        let mats: Vec<SMat<C>> = (0..self.directions.len()).map(|i| self.direction_matrix(i).unwrap()).collect();
        for i in 0..mats.len() {
            for j in i + 1..mats.len() {
                let d = matrix::mat_sub(&matrix::mat_mul(&mats[i], &mats[j]).unwrap(), &matrix::mat_mul(&mats[j], &mats[i]).unwrap())
                    .unwrap();
                if !matrix::is_zero_mat(&d) {
                    return Err((self.directions[i].name.clone(), self.directions[j].name.clone()));
                }
            }
        }
        Ok(())
    }
}

impl FrobeniusData<RatFunc> {
    /// Every structure constant `(M_a)_{bc}` must be homogeneous of degree `deg a + deg c - deg b`,
    /// with `deg q_i` from the grading and symbol weights for the coefficient field.
    pub fn euler_grading_check(&self) -> Result<(), GradingWitness> {
        let g = self.grading.clone().unwrap_or_default();
        let n = self.rank();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let s = &self.mult[a][b][c];
                    let expected = g.basis_degrees[a].clone() + g.basis_degrees[c].clone() - g.basis_degrees[b].clone();
                    for (e, coeff) in s.terms() {
                        let qdeg = e.iter().enumerate().fold(Rational::zero(), |acc, (i, &x)| {
                            acc + g.q_degrees[i].clone() * Rational::new(x.into(), (s.lattice() as i64).into())
                        });
                        let weights: Vec<Rational> = match coeff.registry() {
                            Some(r) => r
                                .names()
                                .iter()
                                .map(|nm| g.symbol_weights.get(nm).cloned().unwrap_or_else(Rational::zero))
                                .collect(),
                            None => Vec::new(),
                        };
                        let ok = coeff.homogeneous_weight(&weights).is_some_and(|w| w + qdeg.clone() == expected);
                        if !ok {
                            let single = NovikovSeries::from_terms(s.nvars(), s.lattice(), [(e.clone(), coeff.clone())], EXACT);
                            return Err(GradingWitness {
                                factor: self.labels[a].clone(),
                                argument: self.labels[c].clone(),
                                component: self.labels[b].clone(),
                                expected: expected.to_string(),
                                term: single.to_string(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Companion matrix of the monic polynomial with low coefficients `r_0..r_{n-1}`.
fn companion<C: Coeff>(low: &[NovikovSeries<C>]) -> SMat<C> {
    let n = low.len();
    let nvars = low[0].nvars();
    let mut m = matrix::zeros(n, n, nvars);
    for j in 0..n - 1 {
        m[j + 1][j] = NovikovSeries::one(nvars);
    }
    for (k, r) in low.iter().enumerate() {
        m[k][n - 1] = -r;
    }
    m
}

fn poly_at_matrix<C: Coeff>(coeffs: &[NovikovSeries<C>], m: &SMat<C>) -> Result<SMat<C>, SeriesError> {
    let n = m.len();
    let nvars = m[0][0].nvars();
    let mut acc = matrix::zeros(n, n, nvars);
    for c in coeffs.iter().rev() {
        acc = matrix::mat_mul(&acc, m)?;
        for (i, row) in acc.iter_mut().enumerate() {
            row[i] = row[i].try_add(c)?;
        }
    }
    Ok(acc)
}

fn poly_mul<C: Coeff>(a: &[NovikovSeries<C>], b: &[NovikovSeries<C>]) -> Result<Vec<NovikovSeries<C>>, SeriesError> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let nvars = a[0].nvars();
    let mut out = vec![NovikovSeries::zero(nvars, EXACT); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].try_add(&x.try_mul(y)?)?;
        }
    }
    Ok(out)
}

/// Residue pairing `sum over roots of phi psi / rel'`, computed as
/// `Tr(phi(C) psi(C) rel'(C)^{-1})` with `C` the companion matrix of `rel`.
///
/// `phi`, `psi`, `relation` are coefficient lists from degree 0 upward; `relation` must be monic.
/// Exact inputs are truncated at q-order `order` before inverting.
pub fn residue_pairing<C: Coeff>(
    phi: &[NovikovSeries<C>],
    psi: &[NovikovSeries<C>],
    relation: &[NovikovSeries<C>],
    order: i64,
) -> Result<NovikovSeries<C>, FrobeniusError> {
    let n = relation.len() - 1;
    if n == 0 || !relation[n].constant_term().is_one() || relation[n].num_terms() != 1 {
        return Err(FrobeniusError::Shape("relation must be monic of positive degree".into()));
    }
    let comp = companion(&relation[..n]);
    let deriv: Vec<NovikovSeries<C>> =
        (1..=n).map(|k| relation[k].scale(&C::from_int(k as i64))).collect();
    let o = Rational::from_integer(order.into());
    let dm = matrix::mat_map(&poly_at_matrix(&deriv, &comp)?, |s| s.truncate_q(&o));
    let cp = matrix::char_poly(&dm)?;
    let det = cp[0].clone();
    if det.valuation() != Some(0) || !det.constant_term().is_unit() {
        return Err(FrobeniusError::DegenerateRelation);
    }
    let dinv = matrix::inverse(&dm)?;
    let g = poly_mul(phi, psi)?;
    let gm = poly_at_matrix(&g, &comp)?;
    let prod = matrix::mat_mul(&gm, &dinv)?;
    let nvars = relation[0].nvars();
    let mut tr = NovikovSeries::zero(nvars, EXACT);
    for (i, row) in prod.iter().enumerate() {
        tr = tr.try_add(&row[i])?;
    }
    Ok(tr)
}

/// Euler-Jacobi form of the same residue sum: the top coefficient of `phi psi mod rel`.
pub fn residue_pairing_top_coeff<C: Coeff>(
    phi: &[NovikovSeries<C>],
    psi: &[NovikovSeries<C>],
    relation: &[NovikovSeries<C>],
) -> Result<NovikovSeries<C>, SeriesError> {
    let n = relation.len() - 1;
    let mut g = poly_mul(phi, psi)?;
    while g.len() > n {
        let lead = g.pop().unwrap();
        let shift = g.len() - n;
        for k in 0..n {
            g[shift + k] = g[shift + k].try_sub(&lead.try_mul(&relation[k])?)?;
        }
    }
    let nvars = relation[0].nvars();
    Ok(g.get(n - 1).cloned().unwrap_or_else(|| NovikovSeries::zero(nvars, EXACT)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use crate::exact::{rat, Registry};

    type Q = NovikovSeries<Rational>;

    fn cp2(corrupt: bool) -> FrobeniusData<Rational> {
        let z = || Q::zero(1, EXACT);
        let one = Q::one(1);
        let q = Q::q(1, 0);
        let m1 = matrix::identity::<Rational>(3, 1);
        // p*1 = p, p*p = p^2, p*p^2 = q
        let mp = vec![vec![z(), z(), q.clone()], vec![one.clone(), z(), z()], vec![z(), one.clone(), z()]];
        // p^2*1 = p^2, p^2*p = q, p^2*p^2 = q p
        let qp = if corrupt { q.scale(&rat(2, 1)) } else { q.clone() };
        let mp2 = vec![vec![z(), q.clone(), z()], vec![z(), z(), qp], vec![one.clone(), z(), z()]];
        let eta = vec![
            vec![rat(0, 1), rat(0, 1), rat(1, 1)],
            vec![rat(0, 1), rat(1, 1), rat(0, 1)],
            vec![rat(1, 1), rat(0, 1), rat(0, 1)],
        ];
        let unit = vec![rat(1, 1), rat(0, 1), rat(0, 1)];
        let dirs = vec![
            Direction { name: "t0".into(), kind: DirKind::T0, class: unit.clone() },
            Direction { name: "log q".into(), kind: DirKind::LogQ(0), class: vec![rat(0, 1), rat(1, 1), rat(0, 1)] },
        ];
        FrobeniusData::new(vec!["1".into(), "p".into(), "p^2".into()], eta, vec![m1, mp, mp2], unit, dirs, 1).unwrap()
    }

    #[test]
    fn cp2_associativity() {
        assert!(cp2(false).wdvv_check(6).is_ok());
        let w = cp2(true).wdvv_check(6).unwrap_err();
        assert_eq!(w.triple, ("p".to_string(), "p".to_string(), "p^2".to_string()));
    }

    #[test]
    fn residue_examples() {
        let reg = Registry::new(&["l"]);
        let l = RatFunc::var(&reg, "l").unwrap();
        let c = |x: RatFunc| NovikovSeries::constant(1, x);
        let q = NovikovSeries::<RatFunc>::q(1, 0);
        let rel = vec![(c(-(&l * &l))) - q.clone(), c(RatFunc::zero()), c(RatFunc::one())];
        let one = vec![c(RatFunc::one())];
        let p = vec![c(RatFunc::zero()), c(RatFunc::one())];
        let r = |a: &[NovikovSeries<RatFunc>], b: &[NovikovSeries<RatFunc>]| residue_pairing(a, b, &rel, 8).unwrap();
        assert_eq!(r(&one, &p), NovikovSeries::one(1).truncate_q(&rat(8, 1)));
        assert!(r(&one, &one).is_zero());
        assert!(r(&p, &p).is_zero());
        let degenerate = vec![-q, c(RatFunc::zero()), c(RatFunc::one())];
        assert_eq!(residue_pairing(&one, &p, &degenerate, 8), Err(FrobeniusError::DegenerateRelation));
    }
}

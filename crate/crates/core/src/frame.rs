//! Canonical frame of a semisimple Frobenius algebra over the Novikov ring and the R-matrix
//! ladder of the asymptotic fundamental solution.
//!
//! Conventions: `A_i` acts on column vectors in the declared basis; `f_alpha` are the
//! idempotents, `Delta_alpha = 1 / eta(f_alpha, f_alpha)`, `e_alpha` is the leading
//! coefficient of `Delta_alpha`, `D_alpha = (Delta_alpha / e_alpha)^{1/2}` and the columns of
//! `Psi` are `psi_alpha = D_alpha f_alpha`, so that `Psi^T eta Psi = diag(1/e)`.
//! The solution is `S = Psi (1 + hbar R^(0) + hbar^2 R^(1) + ...) exp(U/hbar)`.

use num_traits::Zero;
use thiserror::Error;

use crate::exact::{lcm_u32, Rational};
use crate::frobenius::{DirKind, FrobeniusData, FrobeniusError};
use crate::scalar::Coeff;
use crate::series::ext::ClosednessWitness;
use crate::series::matrix::{self, SMat, SVec};
use crate::series::{ExtFunction, HJet, NovikovSeries, OneForm, SeriesError, EXACT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("leading eigenvalues are not distinct within lattice 1/{0}")]
    NotSemisimpleAtOrigin(u32),
    #[error("eigenvalue of the leading term is not in the coefficient field")]
    RootNotInField,
    #[error("direction `{0}` is not diagonal in the idempotent basis")]
    NonCommutingDirections(String),
    #[error("canonical 1-form is not closed in ({}, {})", .0.first, .0.second)]
    NotClosed(ClosednessWitness),
    #[error("column norm {0} has no square root")]
    NormNotASquare(usize),
    #[error("off-diagonal entry ({0}, {1}) of level {2} disagrees between directions")]
    InconsistentOffDiagonal(usize, usize, usize),
    #[error("diagonal entry {1} of level {0} has a non-integrable 1-form")]
    NonIntegrableDiagonal(usize, usize),
    #[error("canonical co-frame is not invertible against the coordinate co-frame")]
    SingularJacobian,
    #[error(transparent)]
    Frobenius(#[from] FrobeniusError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Rule fixing the additive constants of the diagonal entries of the ladder.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalization<C> {
    /// Diagonal entries vanish modulo `q`.
    ModQ,
    /// Diagonal entries carry no weight-zero constant.
    Conformal,
    /// Constants given per level and per index (missing entries are zero).
    Explicit(Vec<Vec<C>>),
}

impl<C> Normalization<C> {
    pub fn tag(&self) -> &'static str {
        match self {
            Normalization::ModQ => "mod-q",
            Normalization::Conformal => "conformal",
            Normalization::Explicit(_) => "explicit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenOptions<C> {
    /// Largest lattice denominator allowed for fractional eigenvalue exponents.
    pub max_lattice: u32,
    /// Pilot class (basis coordinates); defaults to the first `log q` direction.
    pub pilot: Option<Vec<C>>,
}

impl<C> Default for EigenOptions<C> {
    fn default() -> Self {
        EigenOptions { max_lattice: 6, pilot: None }
    }
}

/// Idempotents and eigenvalues of all direction matrices.
#[derive(Debug, Clone)]
pub struct EigenSplit<C> {
    pub lattice: u32,
    /// Idempotent vectors `f_alpha`.
    pub idempotents: Vec<SVec<C>>,
    /// `eigenvalues[alpha][d]` for each declared direction `d`.
    pub eigenvalues: Vec<Vec<NovikovSeries<C>>>,
    /// `eta(f_alpha, f_alpha)`.
    pub norms: Vec<NovikovSeries<C>>,
}

#[derive(Debug, Clone)]
pub struct CanonicalFrame<C> {
    pub direction_names: Vec<String>,
    pub direction_kinds: Vec<DirKind>,
    pub direction_mats: Vec<SMat<C>>,
    pub eta: SMat<C>,
    pub unit: SVec<C>,
    pub split: EigenSplit<C>,
    pub u: Vec<ExtFunction<C>>,
    pub du: Vec<OneForm<C>>,
    pub psi: SMat<C>,
    pub psi_inv: SMat<C>,
    pub delta: Vec<NovikovSeries<C>>,
    pub e: Vec<C>,
    pub d: Vec<NovikovSeries<C>>,
    /// `Psi^{-1} d_i Psi` per direction.
    pub omega: Vec<SMat<C>>,
    pub nvars: usize,
}

/// `R^(0), ..., R^(K-1)` with the diagonal 1-forms used to integrate them.
#[derive(Debug, Clone)]
pub struct RLadder<C> {
    pub levels: Vec<SMat<C>>,
    pub diagonal_forms: Vec<Vec<OneForm<C>>>,
    pub rule: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualWitness {
    pub direction: String,
    pub hbar_power: usize,
    pub row: usize,
    pub col: usize,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub checked_through: usize,
    pub first_nonzero: Option<ResidualWitness>,
    pub validity: Option<Rational>,
}

fn zero<C: Coeff>(nvars: usize) -> NovikovSeries<C> {
    NovikovSeries::zero(nvars, EXACT)
}

fn qval<C: Coeff>(s: &NovikovSeries<C>) -> Option<Rational> {
    s.valuation().map(|v| Rational::new(v.into(), (s.lattice() as i64).into()))
}

fn coord_index(k: DirKind) -> usize {
    match k {
        DirKind::T0 => 0,
        DirKind::LogQ(j) => j + 1,
    }
}

/// Derivative along a direction: zero for `t0`, `theta_j` for `log q_j`.
fn deriv<C: Coeff>(s: &NovikovSeries<C>, k: DirKind) -> NovikovSeries<C> {
    match k {
        DirKind::T0 => NovikovSeries::zero(s.nvars(), s.order()).rebase(s.lattice()),
        DirKind::LogQ(j) => s.theta(j),
    }
}

fn deriv_mat<C: Coeff>(m: &SMat<C>, k: DirKind) -> SMat<C> {
    matrix::mat_map(m, |s| deriv(s, k))
}

fn has_unit_lead<C: Coeff>(s: &NovikovSeries<C>) -> bool {
    s.leading_monomial().is_some_and(|(_, c)| c.is_unit())
}

/// Roots of `c0 + c1 y + c2 y^2` (or of degree one) in the coefficient field, `+` branch first.
fn small_roots<C: Coeff>(poly: &[C], lattice: u32) -> Result<Vec<C>, FrameError> {
    let deg = poly.iter().rposition(|c| !c.is_zero()).unwrap_or(0);
    match deg {
        0 => Ok(Vec::new()),
        1 => Ok(vec![-(poly[0].clone() / poly[1].clone())]),
        2 => {
            let (a, b, c) = (poly[2].clone(), poly[1].clone(), poly[0].clone());
            let disc = b.clone() * b.clone() - C::from_int(4) * a.clone() * c;
            if disc.is_zero() {
                return Err(FrameError::NotSemisimpleAtOrigin(lattice));
            }
            let s = disc.try_sqrt().ok_or(FrameError::RootNotInField)?;
            let two_a = C::from_int(2) * a;
            Ok(vec![(s.clone() - b.clone()) / two_a.clone(), (-s - b) / two_a])
        }
        _ => Err(FrameError::RootNotInField),
    }
}

/// Lifts a simple root `y0` of the leading part of `g` to a root of `g` by Newton iteration.
fn newton_root<C: Coeff>(g: &[NovikovSeries<C>], y0: C) -> Result<NovikovSeries<C>, FrameError> {
    let nvars = g[0].nvars();
    let dg: Vec<NovikovSeries<C>> = (1..g.len()).map(|k| g[k].scale(&C::from_int(k as i64))).collect();
    let horner = |p: &[NovikovSeries<C>], y: &NovikovSeries<C>| -> Result<NovikovSeries<C>, SeriesError> {
        let mut acc = zero::<C>(nvars);
        for c in p.iter().rev() {
            acc = acc.try_mul(y)?.try_add(c)?;
        }
        Ok(acc)
    };
    let mut y = NovikovSeries::constant(nvars, y0);
    // simple root: precision doubles per step, so a bounded order needs few passes
    let order = g.iter().map(|c| c.order()).min().unwrap_or(EXACT);
    let bounded = order < EXACT;
    let steps = if bounded { 66 - (order.max(1) as u64).leading_zeros() + 2 } else { 96 };
    for _ in 0..steps {
        let gy = horner(g, &y)?;
        let dy = horner(&dg, &y)?;
        let next = y.try_sub(&gy.try_div(&dy)?)?;
        if next == y {
            return Ok(y);
        }
        y = next;
    }
    if bounded {
        Ok(y)
    } else {
        Err(SeriesError::NoConvergence.into())
    }
}

/// Eigenvalues of the pilot matrix from its characteristic polynomial: Newton polygon for the
/// leading exponents (one Novikov variable), then Newton lifting of each simple leading root.
fn pilot_eigenvalues<C: Coeff>(p: &SMat<C>, max_lattice: u32) -> Result<(Vec<NovikovSeries<C>>, u32), FrameError> {
    let n = p.len();
    let chi = matrix::char_poly(p)?;
    let nvars = chi[0].nvars();
    let k0 = chi.iter().position(|c| !c.is_zero()).unwrap_or(n);
    if k0 > 1 {
        return Err(FrameError::NotSemisimpleAtOrigin(1));
    }
    let mut roots: Vec<NovikovSeries<C>> = Vec::new();
    if k0 == 1 {
        roots.push(zero(nvars));
    }
    if nvars != 1 {
        // only the valuation-zero split
        if chi.iter().any(|c| qval(c).is_some_and(|v| v < Rational::zero())) {
            return Err(FrameError::NotSemisimpleAtOrigin(1));
        }
        let lead: Vec<C> = chi[k0..].iter().map(|c| c.constant_term()).collect();
        if lead.last().map_or(true, |c| c.is_zero()) || lead[0].is_zero() {
            return Err(FrameError::NotSemisimpleAtOrigin(1));
        }
        let ys = small_roots(&lead, 1)?;
        if ys.len() != n - k0 {
            return Err(FrameError::RootNotInField);
        }
        for y0 in ys {
            roots.push(newton_root(&chi[k0..], y0)?);
        }
        return Ok((roots, 1));
    }
    let pts: Vec<(usize, Rational)> = (k0..=n).filter_map(|k| qval(&chi[k]).map(|v| (k, v))).collect();
    // lower convex hull
    let mut edges: Vec<(usize, usize, Rational)> = Vec::new();
    let mut cur = 0;
    while cur + 1 < pts.len() {
        let (ka, va) = &pts[cur];
        let mut best: Option<(usize, Rational)> = None;
        for (idx, (kb, vb)) in pts.iter().enumerate().skip(cur + 1) {
            let s = (vb - va) / Rational::from_integer(((kb - ka) as i64).into());
            if best.as_ref().is_none_or(|(_, bs)| s <= *bs) {
                best = Some((idx, s));
            }
        }
        let (idx, s) = best.unwrap();
        edges.push((cur, idx, s));
        cur = idx;
    }
    let mut lattice = chi.iter().fold(1u32, |l, c| lcm_u32(l, c.lattice()));
    for (_, _, s) in &edges {
        let den: u32 = s.denom().try_into().unwrap_or(u32::MAX);
        lattice = lcm_u32(lattice, den);
    }
    if lattice > max_lattice {
        return Err(FrameError::NotSemisimpleAtOrigin(max_lattice));
    }
    let nl = Rational::from_integer((lattice as i64).into());
    let to_int = |r: &Rational| -> i64 { (r * &nl).to_integer().try_into().unwrap() };
    for (a, b, s) in edges {
        let (ka, va) = pts[a].clone();
        let kb = pts[b].0;
        let nu = -s.clone();
        // leading polynomial on the edge, in y^(k - ka)
        let mut edge = vec![C::zero(); kb - ka + 1];
        for (k, v) in &pts[a..=b] {
            if *v == va.clone() + s.clone() * Rational::from_integer(((k - ka) as i64).into()) {
                edge[k - ka] = chi[*k].coeff_q(&[v.clone()]);
            }
        }
        let ys = small_roots(&edge, lattice)?;
        if ys.len() != kb - ka {
            return Err(FrameError::RootNotInField);
        }
        let m = va.clone() + nu.clone() * Rational::from_integer((ka as i64).into());
        let g: Vec<NovikovSeries<C>> = (0..=n)
            .map(|k| {
                let sh = to_int(&(nu.clone() * Rational::from_integer((k as i64).into()) - m.clone()));
                chi[k].rebase(lattice).shift(&[sh])
            })
            .collect();
        for y0 in ys {
            let y = newton_root(&g, y0)?;
            roots.push(y.rebase(lattice).shift(&[to_int(&nu)]).compact());
        }
    }
    Ok((roots, lattice))
}

/// Splits the algebra into idempotents using the pilot class and computes every direction's
/// eigenvalues on them.
pub fn eigen_split<C: Coeff>(
    data: &FrobeniusData<C>,
    order: i64,
    opts: &EigenOptions<C>,
) -> Result<EigenSplit<C>, FrameError> {
    let n = data.rank();
    let nvars = data.nvars();
    let o = Rational::from_integer(order.into());
    let trunc = |m: SMat<C>| matrix::mat_map(&m, |s| s.truncate_q(&o));
    let pilot_class = match &opts.pilot {
        Some(v) => v.clone(),
        None => data
            .directions
            .iter()
            .find(|d| matches!(d.kind, DirKind::LogQ(_)))
            .or(data.directions.first())
            .map(|d| d.class.clone())
            .ok_or_else(|| FrobeniusError::Shape("no directions declared".into()))?,
    };
    let pv: SVec<C> = pilot_class.iter().map(|c| NovikovSeries::constant(nvars, c.clone())).collect();
    let p = trunc(data.mult_by(&pv)?);
    let (xi, lattice) = pilot_eigenvalues(&p, opts.max_lattice)?;
    let unit = data.unit_vector();
    let mut idempotents = Vec::with_capacity(n);
    for a in 0..n {
        let mut v = unit.clone();
        for b in 0..n {
            if a == b {
                continue;
            }
            let diff = xi[a].try_sub(&xi[b])?;
            if !has_unit_lead(&diff) {
                return Err(FrameError::NotSemisimpleAtOrigin(lattice));
            }
            let dinv = diff.inv_laurent()?;
            let pvv = matrix::mat_vec(&p, &v)?;
            v = pvv
                .iter()
                .zip(&v)
                .map(|(x, y)| x.try_sub(&y.try_mul(&xi[b])?)?.try_mul(&dinv))
                .collect::<Result<_, _>>()?;
        }
        idempotents.push(v);
    }
    let mats: Vec<SMat<C>> =
        (0..data.directions.len()).map(|i| data.direction_matrix(i).map(trunc)).collect::<Result<_, _>>()?;
    let mut eigenvalues = Vec::with_capacity(n);
    for f in &idempotents {
        let k = (0..n)
            .filter(|&k| has_unit_lead(&f[k]))
            .min_by_key(|&k| qval(&f[k]))
            .ok_or(FrameError::NotSemisimpleAtOrigin(lattice))?;
        let mut row = Vec::with_capacity(mats.len());
        for (d, m) in mats.iter().enumerate() {
            let af = matrix::mat_vec(m, f)?;
            let x = af[k].div_laurent(&f[k])?;
            for i in 0..n {
                if !af[i].try_sub(&f[i].try_mul(&x)?)?.is_zero() {
                    return Err(FrameError::NonCommutingDirections(data.directions[d].name.clone()));
                }
            }
            row.push(x);
        }
        eigenvalues.push(row);
    }
    let norms = idempotents.iter().map(|f| data.pairing(f, f)).collect::<Result<_, _>>()?;
    Ok(EigenSplit { lattice, idempotents, eigenvalues, norms })
}

/// `du_alpha` from the per-direction eigenvalues and `u_alpha` integrated with zero series constant.
pub fn canonical_coordinates<C: Coeff>(
    data: &FrobeniusData<C>,
    split: &EigenSplit<C>,
) -> Result<(Vec<ExtFunction<C>>, Vec<OneForm<C>>), FrameError> {
    let nvars = data.nvars();
    let mut us = Vec::new();
    let mut dus = Vec::new();
    for row in &split.eigenvalues {
        let mut comps: Vec<NovikovSeries<C>> = (0..=nvars).map(|_| zero(nvars)).collect();
        comps[0] = NovikovSeries::one(nvars);
        for (d, dir) in data.directions.iter().enumerate() {
            comps[coord_index(dir.kind)] = row[d].clone();
        }
        let du = OneForm::new(comps);
        du.closedness_check().map_err(FrameError::NotClosed)?;
        us.push(du.integrate()?);
        dus.push(du);
    }
    Ok((us, dus))
}

/// `Delta_alpha = 1 / eta(f_alpha, f_alpha)`.
pub fn hessians<C: Coeff>(split: &EigenSplit<C>) -> Result<Vec<NovikovSeries<C>>, FrameError> {
    Ok(split.norms.iter().map(|n| n.inv_laurent()).collect::<Result<_, _>>()?)
}

/// `Delta_alpha / e_alpha`, the Hessians with their leading constant removed.
pub fn normalized_hessians<C: Coeff>(delta: &[NovikovSeries<C>]) -> Result<Vec<NovikovSeries<C>>, FrameError> {
    delta
        .iter()
        .map(|d| {
            let (_, c) = d.leading_monomial().ok_or(SeriesError::NonUnitDivisor)?;
            Ok(d.scale(&(C::one() / c)))
        })
        .collect()
}

/// Columns `psi_alpha = D_alpha f_alpha`; returns `(Psi, e, D)`.
#[allow(clippy::type_complexity)]
pub fn psi_matrix<C: Coeff>(
    split: &EigenSplit<C>,
    delta: &[NovikovSeries<C>],
) -> Result<(SMat<C>, Vec<C>, Vec<NovikovSeries<C>>), FrameError> {
    let n = delta.len();
    let nvars = delta[0].nvars();
    let mut e = Vec::with_capacity(n);
    let mut ds = Vec::with_capacity(n);
    for (a, dl) in delta.iter().enumerate() {
        let (_, c) = dl.leading_monomial().ok_or(FrameError::NormNotASquare(a))?;
        let d = dl.scale(&(C::one() / c.clone())).sqrt().map_err(|_| FrameError::NormNotASquare(a))?;
        e.push(c);
        ds.push(d);
    }
    let mut psi = matrix::zeros(n, n, nvars);
    for a in 0..n {
        for i in 0..n {
            psi[i][a] = split.idempotents[a][i].try_mul(&ds[a])?;
        }
    }
    Ok((psi, e, ds))
}

impl<C: Coeff> CanonicalFrame<C> {
    /// Builds the frame with every input truncated at q-order `order`.
    pub fn build(data: &FrobeniusData<C>, order: i64, opts: &EigenOptions<C>) -> Result<Self, FrameError> {
        let nvars = data.nvars();
        let n = data.rank();
        let o = Rational::from_integer(order.into());
        let split = eigen_split(data, order, opts)?;
        let (u, du) = canonical_coordinates(data, &split)?;
        let delta = hessians(&split)?;
        let (psi, e, d) = psi_matrix(&split, &delta)?;
        let eta = data.eta_matrix();
        let psi_t_eta = matrix::mat_mul(&matrix::transpose(&psi), &eta)?;
        let psi_inv: SMat<C> =
            psi_t_eta.iter().zip(&e).map(|(row, ea)| row.iter().map(|x| x.scale(ea)).collect()).collect();
        let kinds: Vec<DirKind> = data.directions.iter().map(|d| d.kind).collect();
        let omega = kinds
            .iter()
            .map(|&k| matrix::mat_mul(&psi_inv, &deriv_mat(&psi, k)))
            .collect::<Result<_, _>>()?;
        let direction_mats = (0..data.directions.len())
            .map(|i| data.direction_matrix(i).map(|m| matrix::mat_map(&m, |s| s.truncate_q(&o))))
            .collect::<Result<_, _>>()?;
        let _ = n;
        Ok(CanonicalFrame {
            direction_names: data.directions.iter().map(|d| d.name.clone()).collect(),
            direction_kinds: kinds,
            direction_mats,
            eta,
            unit: data.unit_vector(),
            split,
            u,
            du,
            psi,
            psi_inv,
            delta,
            e,
            d,
            omega,
            nvars,
        })
    }

    pub fn rank(&self) -> usize {
        self.psi.len()
    }

    /// Eigenvalues of direction `d` as a diagonal.
    fn xi(&self, d: usize) -> Vec<NovikovSeries<C>> {
        self.split.eigenvalues.iter().map(|row| row[d].clone()).collect()
    }

    /// Lowest validity order (q-units) over the frame data.
    pub fn validity(&self) -> Option<Rational> {
        let mut all: Vec<Option<Rational>> = vec![matrix::min_order_q(&self.psi), matrix::min_order_q(&self.psi_inv)];
        all.extend(self.delta.iter().map(|s| s.order_q()));
        all.extend(self.du.iter().map(|f| f.order_q()));
        for m in &self.omega {
            all.push(matrix::min_order_q(m));
        }
        all.into_iter().flatten().min()
    }

    pub fn normalized_hessians(&self) -> Result<Vec<NovikovSeries<C>>, FrameError> {
        normalized_hessians(&self.delta)
    }

    /// `Psi^T eta Psi`, expected to be `diag(1/e)`.
    pub fn gram(&self) -> Result<SMat<C>, FrameError> {
        Ok(matrix::mat_mul(&matrix::mat_mul(&matrix::transpose(&self.psi), &self.eta)?, &self.psi)?)
    }

    /// `Psi^{-1}` applied to the unit equals `1/D_alpha`.
    pub fn row_sum_check(&self) -> Result<(), usize> {
        let v = matrix::mat_vec(&self.psi_inv, &self.unit).map_err(|_| 0usize)?;
        for (a, x) in v.iter().enumerate() {
            let prod = x.try_mul(&self.d[a]).map_err(|_| a)?;
            if !prod.try_sub(&NovikovSeries::one(self.nvars)).map_err(|_| a)?.is_zero() {
                return Err(a);
            }
        }
        Ok(())
    }

    /// `R^(0), ..., R^(levels-1)`.
    pub fn r_ladder(&self, levels: usize, rule: &Normalization<C>) -> Result<RLadder<C>, FrameError> {
        let n = self.rank();
        let nd = self.direction_kinds.len();
        let xis: Vec<Vec<NovikovSeries<C>>> = (0..nd).map(|d| self.xi(d)).collect();
        let mut prev = matrix::identity::<C>(n, self.nvars);
        let mut out = Vec::with_capacity(levels);
        let mut forms_out = Vec::with_capacity(levels);
        for level in 0..levels {
            let xs: Vec<SMat<C>> = (0..nd)
                .map(|d| {
                    matrix::mat_add(&matrix::mat_mul(&self.omega[d], &prev)?, &deriv_mat(&prev, self.direction_kinds[d]))
                })
                .collect::<Result<_, _>>()?;
            let mut t = matrix::zeros::<C>(n, n, self.nvars);
            for j in 0..n {
                for l in 0..n {
                    if j == l {
                        continue;
                    }
                    let diffs: Vec<NovikovSeries<C>> =
                        (0..nd).map(|d| xis[d][j].try_sub(&xis[d][l])).collect::<Result<_, _>>()?;
                    let pick = (0..nd).find(|&d| has_unit_lead(&diffs[d])).ok_or(FrameError::NotSemisimpleAtOrigin(1))?;
                    let val = xs[pick][j][l].div_laurent(&diffs[pick])?;
                    for d in 0..nd {
                        if !xs[d][j][l].try_sub(&val.try_mul(&diffs[d])?)?.is_zero() {
                            return Err(FrameError::InconsistentOffDiagonal(j, l, level));
                        }
                    }
                    t[j][l] = val;
                }
            }
            let mut forms = Vec::with_capacity(n);
            for j in 0..n {
                let mut comps: Vec<NovikovSeries<C>> = (0..=self.nvars).map(|_| zero(self.nvars)).collect();
                for (d, &k) in self.direction_kinds.iter().enumerate() {
                    let mut acc = zero::<C>(self.nvars);
                    for l in 0..n {
                        if l != j {
                            acc = acc.try_add(&self.omega[d][j][l].try_mul(&t[l][j])?)?;
                        }
                    }
                    comps[coord_index(k)] = -&acc;
                }
                let form = OneForm::new(comps);
                let prim = form.integrate().map_err(|_| FrameError::NonIntegrableDiagonal(level, j))?;
                if !prim.t0().is_zero() || prim.logq().iter().any(|c| !c.is_zero()) {
                    return Err(FrameError::NonIntegrableDiagonal(level, j));
                }
                let constant = match rule {
                    Normalization::ModQ | Normalization::Conformal => C::zero(),
                    Normalization::Explicit(cs) => cs.get(level).and_then(|r| r.get(j)).cloned().unwrap_or_else(C::zero),
                };
                t[j][j] = prim.series().try_add(&NovikovSeries::constant(self.nvars, constant))?;
                forms.push(form);
            }
            out.push(t.clone());
            forms_out.push(forms);
            prev = t;
        }
        Ok(RLadder { levels: out, diagonal_forms: forms_out, rule: rule.tag() })
    }

    /// Checks `hbar d_i S = A_i S` on the conjugated equation through `hbar^K`, where `K` is the
    /// number of ladder levels.
    pub fn assemble_and_verify(&self, ladder: &RLadder<C>) -> Result<ResidualReport, FrameError> {
        let n = self.rank();
        let k_max = ladder.levels.len();
        let mut ts = vec![matrix::identity::<C>(n, self.nvars)];
        ts.extend(ladder.levels.iter().cloned());
        let mut first = None;
        let mut validity: Option<Rational> = None;
        'outer: for k in 0..=k_max {
            for (d, &kind) in self.direction_kinds.iter().enumerate() {
                let xi = self.xi(d);
                let tk = &ts[k];
                let mut res = matrix::mat_sub(
                    &matrix::mat_mul(&self.psi, &scale_cols(tk, &xi)?)?,
                    &matrix::mat_mul(&self.direction_mats[d], &matrix::mat_mul(&self.psi, tk)?)?,
                )?;
                if k > 0 {
                    let tp = &ts[k - 1];
                    res = matrix::mat_add(&res, &matrix::mat_mul(&deriv_mat(&self.psi, kind), tp)?)?;
                    res = matrix::mat_add(&res, &matrix::mat_mul(&self.psi, &deriv_mat(tp, kind))?)?;
                }
                if let Some(v) = matrix::min_order_q(&res) {
                    validity = Some(validity.map_or(v.clone(), |w: Rational| w.min(v)));
                }
                for (i, row) in res.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        if !x.is_zero() {
                            first = Some(ResidualWitness {
                                direction: self.direction_names[d].clone(),
                                hbar_power: k,
                                row: i,
                                col: j,
                                value: x.to_string(),
                            });
                            break 'outer;
                        }
                    }
                }
            }
        }
        Ok(ResidualReport { checked_through: k_max, first_nonzero: first, validity })
    }

    /// `diag(1/e) R` is symmetric.
    pub fn symmetry_check(&self, r: &SMat<C>) -> Result<(), (usize, usize)> {
        let n = self.rank();
        for i in 0..n {
            for j in i + 1..n {
                let a = r[i][j].scale(&(C::one() / self.e[i].clone()));
                let b = r[j][i].scale(&(C::one() / self.e[j].clone()));
                if !a.try_sub(&b).map(|x| x.is_zero()).unwrap_or(false) {
                    return Err((i, j));
                }
            }
        }
        Ok(())
    }

    /// `(1 - hbar R)^T C (1 + hbar R) = C + O(hbar^2)` with `C = diag(1/e)`, on hbar-jets.
    pub fn unitarity_check(&self, r: &SMat<C>) -> Result<(), (usize, usize)> {
        let n = self.rank();
        let jet = |sign: i64, i: usize, j: usize| -> HJet<C> {
            let mut h = HJet::new(self.nvars, 0, 1, true, true);
            if i == j {
                h.set(0, NovikovSeries::one(self.nvars));
            }
            h.set(1, r[i][j].scale(&C::from_int(sign)));
            h
        };
        for i in 0..n {
            for j in 0..n {
                let mut acc = HJet::new(self.nvars, 0, 0, true, true);
                for k in 0..n {
                    let ck = C::one() / self.e[k].clone();
                    let term = jet(-1, k, i).try_mul(&jet(1, k, j)).map_err(|_| (i, j))?.scale(&ck);
                    acc = acc.try_add(&term).map_err(|_| (i, j))?;
                }
                let expect0 = if i == j { NovikovSeries::constant(self.nvars, C::one() / self.e[i].clone()) } else { zero(self.nvars) };
                let ok0 = acc.coeff(0).try_sub(&expect0).map(|x| x.is_zero()).unwrap_or(false);
                if !ok0 || !acc.coeff(1).is_zero() {
                    return Err((i, j));
                }
            }
        }
        Ok(())
    }

    /// Diagonal 1-forms `dR_alpha` from the Hessians.
    pub fn dr_from_hessians(&self) -> Result<Vec<OneForm<C>>, FrameError> {
        dr_from_hessians(&self.delta, &self.du)
    }
}

fn scale_cols<C: Coeff>(m: &SMat<C>, d: &[NovikovSeries<C>]) -> Result<SMat<C>, SeriesError> {
    m.iter().map(|row| row.iter().zip(d).map(|(x, y)| x.try_mul(y)).collect()).collect()
}

/// `dR_alpha = 1/4 sum_beta (d_alpha log Delta_beta)(d_beta log Delta_alpha)(du_beta - du_alpha)`,
/// with `d_alpha` the vector fields dual to `du`.
pub fn dr_from_hessians<C: Coeff>(delta: &[NovikovSeries<C>], du: &[OneForm<C>]) -> Result<Vec<OneForm<C>>, FrameError> {
    let n = delta.len();
    let nvars = du[0].nvars();
    if n != nvars + 1 {
        return Err(FrameError::SingularJacobian);
    }
    let jac: SMat<C> = du.iter().map(|f| f.comps().to_vec()).collect();
    let jinv = matrix::inverse(&jac).map_err(|e| match e {
        SeriesError::Singular | SeriesError::NonUnitDivisor => FrameError::SingularJacobian,
        other => other.into(),
    })?;
    // coordinate derivatives of log Delta
    let mut dlog: Vec<Vec<NovikovSeries<C>>> = Vec::with_capacity(n);
    for d in delta {
        let mut row = vec![zero::<C>(nvars)];
        for j in 0..nvars {
            row.push(d.theta(j).div_laurent(d)?);
        }
        dlog.push(row);
    }
    // partial[a][b] = d_a log Delta_b
    let mut partial = vec![vec![zero::<C>(nvars); n]; n];
    for a in 0..n {
        for b in 0..n {
            let mut acc = zero::<C>(nvars);
            for i in 0..=nvars {
                acc = acc.try_add(&jinv[i][a].try_mul(&dlog[b][i])?)?;
            }
            partial[a][b] = acc;
        }
    }
    let quarter = C::from_rational(&Rational::new(1.into(), 4.into()));
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let mut acc = OneForm::zero(nvars, EXACT);
        for b in 0..n {
            if a == b {
                continue;
            }
            let f = partial[a][b].try_mul(&partial[b][a])?.scale(&quarter);
            acc = acc.try_add(&du[b].try_sub(&du[a])?.mul_series(&f)?)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Runs `f` at `target + guard` with growing guard until its validity reaches `target`.
pub fn with_guard<T, E>(
    target: i64,
    mut f: impl FnMut(i64) -> Result<T, E>,
    validity: impl Fn(&T) -> Option<Rational>,
) -> Result<(T, i64), E> {
    let mut guard = 2;
    loop {
        let out = f(target + guard)?;
        let ok = validity(&out).is_none_or(|v| v >= Rational::from_integer(target.into()));
        if ok || guard >= 64 {
            return Ok((out, guard));
        }
        guard *= 2;
    }
}

/// Truncates every entry of a matrix at q-order `o`.
pub fn truncate_mat<C: Coeff>(m: &SMat<C>, o: i64) -> SMat<C> {
    let o = Rational::from_integer(o.into());
    matrix::mat_map(m, |s| s.truncate_q(&o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use crate::exact::{rat, RatFunc, Registry};

    type Q = NovikovSeries<Rational>;
    type S = NovikovSeries<RatFunc>;

    fn cp1() -> FrobeniusData<Rational> {
        let q = Q::q(1, 0);
        let eta = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(1, 1), rat(0, 1)]];
        FrobeniusData::from_relation("p", &[-q, Q::zero(1, EXACT)], eta).unwrap()
    }

    fn equivariant_cp1() -> (FrobeniusData<RatFunc>, RatFunc) {
        let reg = Registry::new(&["l"]);
        let l = RatFunc::var(&reg, "l").unwrap();
        let c = |x: RatFunc| S::constant(1, x);
        let rel = vec![c(-(&l * &l)) - S::q(1, 0), S::zero(1, EXACT)];
        let eta = vec![vec![RatFunc::zero(), RatFunc::one()], vec![RatFunc::one(), RatFunc::zero()]];
        (FrobeniusData::from_relation("p", &rel, eta).unwrap(), l)
    }

    #[test]
    fn cp1_frame_values() {
        let f = CanonicalFrame::build(&cp1(), 8, &EigenOptions::default()).unwrap();
        assert_eq!(f.split.lattice, 2);
        let half = Q::monomial(1, 2, vec![1], rat(1, 1), EXACT);
        assert_eq!(f.split.eigenvalues[0][1].truncate_q(&rat(4, 1)), half.truncate_q(&rat(4, 1)));
        assert_eq!(f.delta[0].truncate_q(&rat(4, 1)), half.scale(&rat(2, 1)).truncate_q(&rat(4, 1)));
        assert_eq!(f.delta[1].truncate_q(&rat(4, 1)), half.scale(&rat(-2, 1)).truncate_q(&rat(4, 1)));
        let lad = f.r_ladder(2, &Normalization::Conformal).unwrap();
        let r = &lad.levels[0];
        let mhalf = |c: Rational| Q::monomial(1, 2, vec![-1], c, EXACT).truncate_q(&rat(3, 1));
        assert_eq!(r[0][1].truncate_q(&rat(3, 1)), mhalf(rat(1, 8)));
        assert_eq!(r[1][0].truncate_q(&rat(3, 1)), mhalf(rat(-1, 8)));
        assert_eq!(r[0][0].truncate_q(&rat(3, 1)), mhalf(rat(-1, 16)));
        let rep = f.assemble_and_verify(&lad).unwrap();
        assert!(rep.first_nonzero.is_none(), "{:?}", rep);
        assert!(f.symmetry_check(r).is_ok());
        assert!(f.unitarity_check(r).is_ok());
        assert!(f.row_sum_check().is_ok());
    }

    #[test]
    fn cp1_forced_lattice() {
        let opts = EigenOptions { max_lattice: 1, pilot: None };
        assert!(matches!(CanonicalFrame::build(&cp1(), 6, &opts), Err(FrameError::NotSemisimpleAtOrigin(_))));
    }

    #[test]
    fn equivariant_cp1_ladder() {
        let (data, l) = equivariant_cp1();
        let order = 6;
        let f = CanonicalFrame::build(&data, order + 2, &EigenOptions::default()).unwrap();
        let o = rat(order, 1);
        // Delta / e = p / l with p = (l^2 + q)^{1/2}
        let lam2 = S::constant(1, &l * &l);
        let p = lam2.try_add(&S::q(1, 0)).unwrap().truncate(order + 2).sqrt().unwrap();
        let nh = f.normalized_hessians().unwrap();
        let pl = p.scale(&l.recip().unwrap());
        assert_eq!(nh[0].truncate_q(&o), pl.truncate_q(&o));
        assert_eq!(nh[1].truncate_q(&o), pl.truncate_q(&o));
        let lad = f.r_ladder(2, &Normalization::ModQ).unwrap();
        // R_{++} = -1/(16p) + l^2/(48 p^3) + 1/(24 l)
        let pinv = p.inv().unwrap();
        let expect = pinv
            .scale(&RatFunc::from_int(-16).recip().unwrap())
            .try_add(&pinv.powi(3).unwrap().scale(&(&l * &l).scale(&rat(1, 48))))
            .unwrap()
            .try_add(&S::constant(1, l.recip().unwrap().scale(&rat(1, 24))))
            .unwrap();
        assert_eq!(lad.levels[0][0][0].truncate_q(&o), expect.truncate_q(&o));
        let rep = f.assemble_and_verify(&lad).unwrap();
        assert!(rep.first_nonzero.is_none(), "{:?}", rep);
        assert!(f.row_sum_check().is_ok());
        let dr = f.dr_from_hessians().unwrap();
        for a in 0..2 {
            assert_eq!(dr[a].truncate_q(&o), lad.diagonal_forms[0][a].truncate_q(&o));
        }
        // broken diagonal normalization surfaces at hbar^2
        let mut bad = lad.clone();
        bad.levels[0][0][0] = bad.levels[0][0][0].try_add(&S::one(1)).unwrap();
        let rep = f.assemble_and_verify(&bad).unwrap();
        assert_eq!(rep.first_nonzero.map(|w| w.hbar_power), Some(2));
    }

    #[test]
    fn corrupt_direction_is_detected() {
        let mut data = cp1();
        let z = Q::zero(1, EXACT);
        data.mult[0] = vec![vec![Q::one(1), z.clone()], vec![z, Q::constant(1, rat(2, 1))]];
        let err = CanonicalFrame::build(&data, 6, &EigenOptions::default()).unwrap_err();
        assert_eq!(err, FrameError::NonCommutingDirections("t0".into()));
    }
}

//! One-variable critical points: miniversal deformations, critical values, Hessians and the
//! first stationary-phase correction from 4-jets.
//!
//! The oscillating integral is `int w(z) exp(f(z)/hbar) dz`. Around a critical point with
//! `f = u + a s^2/2 + b s^3/6 + c s^4/24 + ...` and `w = w0 + w1 s + w2 s^2/2 + ...` it expands as
//! `(2 pi hbar / -a)^{1/2} e^{u/hbar} w0 (1 + hbar R + o(hbar))`.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::exact::{rat, rational_sqrt, RatFunc, Rational, Registry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SingularityError {
    #[error("parameter point lies on the caustic")]
    OnCaustic,
    #[error("critical point is degenerate")]
    DegenerateCritical,
    #[error("critical points not located after {0} iterations")]
    RootFindingFailed(usize),
    #[error("ill-conditioned parameter point: {0}")]
    IllConditioned(String),
    #[error("family needs one deformation monomial per critical point ({0} vs {1})")]
    Shape(usize, usize),
}

/// Field operations needed by the jet formula.
pub trait Field:
    Clone + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
}

impl<T> Field for T where
    T: Clone + PartialEq + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T> + Neg<Output = T>
{
}

fn int<T: Field>(n: i64) -> T {
    let mut acc = T::zero();
    for _ in 0..n.unsigned_abs() {
        acc = acc + T::one();
    }
    if n < 0 {
        -acc
    } else {
        acc
    }
}

/// Phase and amplitude data at a critical point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet4<T> {
    pub u: T,
    pub f2: T,
    pub f3: T,
    pub f4: T,
    pub w0: T,
    pub w1: T,
    pub w2: T,
}

/// `R = f4/(8 f2^2) - 5 f3^2/(24 f2^3) + w1 f3/(2 f2^2 w0) - w2/(2 f2 w0)`.
pub fn stationary_phase_r<T: Field>(j: &Jet4<T>) -> Result<T, SingularityError> {
    if j.f2.is_zero() || j.w0.is_zero() {
        return Err(SingularityError::DegenerateCritical);
    }
    let a = j.f2.clone();
    let a2 = a.clone() * a.clone();
    let a3 = a2.clone() * a.clone();
    Ok(j.f4.clone() / (int::<T>(8) * a2.clone()) - int::<T>(5) * j.f3.clone() * j.f3.clone() / (int::<T>(24) * a3)
        + j.w1.clone() * j.f3.clone() / (int::<T>(2) * a2 * j.w0.clone())
        - j.w2.clone() / (int::<T>(2) * a * j.w0.clone()))
}

/// Closed-form A2 data for `x^3 - t1 x + t0`; values are rational in exact mode, or functions
/// of the symbol `x` with `x^2 = t1/3` in surd mode.
#[derive(Debug, Clone)]
pub struct A2Frame {
    pub exact: bool,
    pub x: [RatFunc; 2],
    pub u: [RatFunc; 2],
    pub delta: [RatFunc; 2],
    /// Stationary-phase corrections with amplitudes dual to `du`.
    pub r: [RatFunc; 2],
    /// `u = u_+ - u_-`.
    pub u_diff: RatFunc,
    /// `-1/(36 u)`.
    pub r_closed: RatFunc,
    /// `dG / du` from `d log Delta / 24 + R du / 2`.
    pub dg_du: RatFunc,
}

fn a2_jets(x: &RatFunc) -> Jet4<RatFunc> {
    // deformation monomials 1 (t0) and -x (t1); the amplitude dual to du_+ is (z - x_-)/(x_+ - x_-)
    // with x_- = -x, so w = (z + x)/(2x)
    let two = RatFunc::from_int(2);
    Jet4 {
        u: RatFunc::zero(),
        f2: RatFunc::from_int(6) * x.clone(),
        f3: RatFunc::from_int(6),
        f4: RatFunc::zero(),
        w0: RatFunc::one(),
        w1: RatFunc::one() / (two * x.clone()),
        w2: RatFunc::zero(),
    }
}

pub fn a2_frame(t0: &Rational, t1: &Rational) -> Result<A2Frame, SingularityError> {
    if t1.is_zero() {
        return Err(SingularityError::OnCaustic);
    }
    let s = t1 / rat(3, 1);
    let (xp, exact) = match rational_sqrt(&s) {
        Some(r) => (RatFunc::constant(r), true),
        None => (RatFunc::var(&Registry::new(&["x"]), "x").expect("registered"), false),
    };
    let xm = -xp.clone();
    let t0f = RatFunc::constant(t0.clone());
    let crit = |x: &RatFunc| t0f.clone() - RatFunc::from_int(2) * x.clone() * x.clone() * x.clone();
    let u = [crit(&xp), crit(&xm)];
    let delta = [RatFunc::from_int(6) * xp.clone(), RatFunc::from_int(6) * xm.clone()];
    let rp = stationary_phase_r(&a2_jets(&xp))?;
    let rm = stationary_phase_r(&a2_jets(&xm))?;
    let u_diff = u[0].clone() - u[1].clone();
    let r_closed = RatFunc::from_int(-1) / (RatFunc::from_int(36) * u_diff.clone());
    // d log Delta / du = (1/x) / (du/dx) with du/dx = -12 x^2
    let du_dx = RatFunc::from_int(-12) * xp.clone() * xp.clone();
    let dlog = RatFunc::one() / (xp.clone() * du_dx);
    let dg_du = dlog / RatFunc::from_int(24) + rp.clone() / RatFunc::from_int(2);
    Ok(A2Frame { exact, x: [xp, xm], u, delta, r: [rp, rm], u_diff, r_closed, dg_du })
}

/// Polynomial with coefficients from degree 0 upward.
pub type Poly = Vec<Complex64>;

fn eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(Complex64::zero(), |acc, c| acc * z + c)
}

fn deriv(p: &[Complex64]) -> Poly {
    p.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

/// All roots of a polynomial by Durand-Kerner iteration with a Newton polish.
pub fn poly_roots(p: &[Complex64]) -> Result<Vec<Complex64>, SingularityError> {
    let mut p = p.to_vec();
    while p.last().is_some_and(|c| c.norm() == 0.0) {
        p.pop();
    }
    let n = p.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p[n];
    let monic: Poly = p.iter().map(|c| c / lead).collect();
    let bound = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32 + 1) * bound).collect();
    const MAX: usize = 2000;
    let mut converged = false;
    for _ in 0..MAX {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::one();
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                den = Complex64::new(1e-300, 0.0);
            }
            let step = eval(&monic, z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * bound {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SingularityError::RootFindingFailed(MAX));
    }
    let dp = deriv(&monic);
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let d = eval(&dp, *zi);
            if d.norm() > 0.0 {
                *zi -= eval(&monic, *zi) / d;
            }
        }
    }
    Ok(z)
}

/// `f_lambda = base + sum lambda_k phi_k` with numeric parameters.
#[derive(Debug, Clone)]
pub struct MorseFamily {
    pub base: Vec<Rational>,
    pub monomials: Vec<Vec<Rational>>,
    pub params: Vec<f64>,
    /// Smallest admissible `|f''|` at a critical point.
    pub threshold: f64,
}

/// Per-critical-point data of a numeric run.
#[derive(Debug, Clone)]
pub struct CritPoint {
    pub z: Complex64,
    pub u: Complex64,
    pub delta: Complex64,
    pub r: Complex64,
}

#[derive(Debug, Clone)]
pub struct MorseReport {
    pub points: Vec<CritPoint>,
    /// `dG(d/d lambda_k)` for every parameter direction.
    pub dg: Vec<Complex64>,
    /// Largest `|dG|` over the requested directions.
    pub residual: f64,
}

fn to_c(r: &Rational) -> Complex64 {
    Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0)
}

fn inverse_c(m: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let n = m.len();
    let mut a = m.to_vec();
    let mut inv: Vec<Vec<Complex64>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Complex64::one() } else { Complex64::zero() }).collect()).collect();
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))?;
        if a[p][col].norm() < 1e-13 {
            return None;
        }
        a.swap(col, p);
        inv.swap(col, p);
        let piv = a[col][col];
        for j in 0..n {
            a[col][j] /= piv;
            inv[col][j] /= piv;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for j in 0..n {
                    let (x, y) = (a[col][j], inv[col][j]);
                    a[r][j] -= f * x;
                    inv[r][j] -= f * y;
                }
            }
        }
    }
    Some(inv)
}

impl MorseFamily {
    pub fn new(base: Vec<Rational>, monomials: Vec<Vec<Rational>>, params: Vec<f64>) -> Self {
        MorseFamily { base, monomials, params, threshold: 1e-6 }
    }

    /// `z^4 + a z^2 + b z` with monomials `1, z, z^2` and parameters `(t0, b, a)`.
    pub fn a3(a: f64, b: f64) -> Self {
        let m = |k: usize| -> Vec<Rational> { (0..=k).map(|i| if i == k { rat(1, 1) } else { rat(0, 1) }).collect() };
        Self::new(vec![rat(0, 1), rat(0, 1), rat(0, 1), rat(0, 1), rat(1, 1)], vec![m(0), m(1), m(2)], vec![0.0, b, a])
    }

    /// `z^3 - t1 z + t0` with monomials `1, -z` and parameters `(t0, t1)`.
    pub fn a2(t0: f64, t1: f64) -> Self {
        Self::new(vec![rat(0, 1), rat(0, 1), rat(0, 1), rat(1, 1)], vec![vec![rat(1, 1)], vec![rat(0, 1), rat(-1, 1)]], vec![t0, t1])
    }

    pub fn with_params(&self, params: Vec<f64>) -> Self {
        MorseFamily { params, ..self.clone() }
    }

    fn phis(&self) -> Vec<Poly> {
        self.monomials.iter().map(|m| m.iter().map(to_c).collect()).collect()
    }

    fn f(&self) -> Poly {
        let mut f: Poly = self.base.iter().map(to_c).collect();
        for (phi, &l) in self.phis().iter().zip(&self.params) {
            if f.len() < phi.len() {
                f.resize(phi.len(), Complex64::zero());
            }
            for (k, c) in phi.iter().enumerate() {
                f[k] += c * l;
            }
        }
        f
    }

    /// Critical points, values and `f''`, ordered by real then imaginary part.
    fn critical(&self) -> Result<(Vec<Complex64>, Poly), SingularityError> {
        let f = self.f();
        let mut z = poly_roots(&deriv(&f))?;
        z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        if z.len() != self.monomials.len() {
            return Err(SingularityError::Shape(self.monomials.len(), z.len()));
        }
        let f2 = deriv(&deriv(&f));
        for zi in &z {
            if eval(&f2, *zi).norm() < self.threshold {
                return Err(SingularityError::IllConditioned(format!("|f''| below {} at z = {}", self.threshold, zi)));
            }
        }
        Ok((z, f))
    }

    /// `J[a][k] = phi_k(z_a)` and its inverse.
    #[allow(clippy::type_complexity)]
    fn jacobian(&self, z: &[Complex64]) -> Result<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>), SingularityError> {
        let phis = self.phis();
        let j: Vec<Vec<Complex64>> = z.iter().map(|&za| phis.iter().map(|p| eval(p, za)).collect()).collect();
        let ji = inverse_c(&j).ok_or_else(|| SingularityError::IllConditioned("singular envelope Jacobian".into()))?;
        Ok((j, ji))
    }

    /// Critical points with stationary-phase corrections for amplitudes dual to `du`.
    pub fn points(&self) -> Result<Vec<CritPoint>, SingularityError> {
        let (z, f) = self.critical()?;
        let (_, ji) = self.jacobian(&z)?;
        let phis = self.phis();
        let d2 = deriv(&deriv(&f));
        let d3 = deriv(&d2);
        let d4 = deriv(&d3);
        let mut out = Vec::with_capacity(z.len());
        for (a, &za) in z.iter().enumerate() {
            // amplitude w_a = sum_k (J^-1)_{k a} phi_k
            let mut w: Poly = vec![Complex64::zero(); phis.iter().map(|p| p.len()).max().unwrap_or(1)];
            for (k, p) in phis.iter().enumerate() {
                for (i, c) in p.iter().enumerate() {
                    w[i] += ji[k][a] * c;
                }
            }
            let w1p = deriv(&w);
            let w2p = deriv(&w1p);
            let jet = Jet4 {
                u: eval(&f, za),
                f2: eval(&d2, za),
                f3: eval(&d3, za),
                f4: eval(&d4, za),
                w0: eval(&w, za),
                w1: eval(&w1p, za),
                w2: eval(&w2p, za),
            };
            let r = stationary_phase_r(&jet)?;
            out.push(CritPoint { z: za, u: jet.u, delta: jet.f2, r });
        }
        Ok(out)
    }

    /// `d_k log Delta_a = (phi_k'' - f''' phi_k' / f'') / f''` at each critical point.
    pub fn dlog_delta(&self, z: &[Complex64]) -> Vec<Vec<Complex64>> {
        let f = self.f();
        let f2 = deriv(&deriv(&f));
        let f3 = deriv(&f2);
        let phis = self.phis();
        z.iter()
            .map(|&za| {
                let (a, b) = (eval(&f2, za), eval(&f3, za));
                phis.iter()
                    .map(|p| {
                        let p1 = deriv(p);
                        let p2 = deriv(&p1);
                        (eval(&p2, za) - b * eval(&p1, za) / a) / a
                    })
                    .collect()
            })
            .collect()
    }

    /// Right-hand side of the Hessian ODE: `dR_a(d/d lambda_k)`, indexed `[a][k]`.
    pub fn hessian_ode_rhs(&self) -> Result<Vec<Vec<Complex64>>, SingularityError> {
        let (z, _) = self.critical()?;
        let (j, ji) = self.jacobian(&z)?;
        let dl = self.dlog_delta(&z);
        let n = z.len();
        // p[a][b] = d_{u_a} log Delta_b
        let p: Vec<Vec<Complex64>> =
            (0..n).map(|a| (0..n).map(|b| (0..n).map(|k| ji[k][a] * dl[b][k]).sum()).collect()).collect();
        Ok((0..n)
            .map(|a| {
                (0..n)
                    .map(|k| {
                        (0..n).filter(|&b| b != a).map(|b| p[a][b] * p[b][a] * (j[b][k] - j[a][k])).sum::<Complex64>() * 0.25
                    })
                    .collect()
            })
            .collect())
    }
}

/// `dG(d/d lambda_k) = sum_a [d_k log Delta_a / 48 + R_a phi_k(z_a) / 2]`.
pub fn numeric_morse_pipeline(family: &MorseFamily, directions: &[usize]) -> Result<MorseReport, SingularityError> {
    let points = family.points()?;
    let z: Vec<Complex64> = points.iter().map(|p| p.z).collect();
    let dl = family.dlog_delta(&z);
    let phis = family.phis();
    let dg: Vec<Complex64> = (0..phis.len())
        .map(|k| {
            points
                .iter()
                .enumerate()
                .map(|(a, p)| dl[a][k] / 48.0 + p.r * eval(&phis[k], p.z) * 0.5)
                .sum()
        })
        .collect();
    let residual = directions.iter().map(|&k| dg.get(k).map_or(f64::INFINITY, |x| x.norm())).fold(0.0, f64::max);
    Ok(MorseReport { points, dg, residual })
}

/// Critical-point table keyed by position, for reports.
pub fn point_table(points: &[CritPoint]) -> Vec<BTreeMap<&'static str, [f64; 2]>> {
    points
        .iter()
        .map(|p| {
            let mut m = BTreeMap::new();
            for (k, v) in [("z", p.z), ("u", p.u), ("delta", p.delta), ("R", p.r)] {
                m.insert(k, [v.re, v.im]);
            }
            m
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a2_exact_values() {
        let f = a2_frame(&rat(0, 1), &rat(3, 1)).unwrap();
        assert!(f.exact);
        assert_eq!(f.x[0], RatFunc::from_int(1));
        assert_eq!(f.u, [RatFunc::from_int(-2), RatFunc::from_int(2)]);
        assert_eq!(f.delta, [RatFunc::from_int(6), RatFunc::from_int(-6)]);
        assert_eq!(f.r[0], f.r_closed);
        assert_eq!(f.r[1], -f.r_closed.clone());
        assert!(f.dg_du.is_zero());
        assert_eq!(a2_frame(&rat(1, 1), &rat(0, 1)).unwrap_err(), SingularityError::OnCaustic);
    }

    #[test]
    fn a2_surd_mode() {
        let f = a2_frame(&rat(5, 1), &rat(1, 1)).unwrap();
        assert!(!f.exact);
        assert_eq!(f.r[0], f.r_closed);
        assert!(f.dg_du.is_zero());
        // Delta^3 = 216 x^3 = -54 u
        let d3 = f.delta[0].clone() * f.delta[0].clone() * f.delta[0].clone();
        assert_eq!(d3, RatFunc::from_int(-54) * f.u_diff.clone());
    }

    #[test]
    fn gaussian_is_exact() {
        let j = Jet4 { u: 0.0, f2: -2.0, f3: 0.0, f4: 0.0, w0: 1.0, w1: 0.0, w2: 0.0 };
        assert_eq!(stationary_phase_r(&j).unwrap(), 0.0);
        let bad = Jet4 { f2: 0.0, ..j };
        assert_eq!(stationary_phase_r(&bad), Err(SingularityError::DegenerateCritical));
    }

    #[test]
    fn numeric_dg_vanishes() {
        let r = numeric_morse_pipeline(&MorseFamily::a2(0.0, 3.0), &[0, 1]).unwrap();
        assert!(r.residual < 1e-9, "{:?}", r.dg);
        let r = numeric_morse_pipeline(&MorseFamily::a3(0.7, -0.45), &[1, 2]).unwrap();
        assert!(r.residual < 1e-8, "{:?}", r.dg);
        assert!(matches!(
            numeric_morse_pipeline(&MorseFamily::a2(0.0, 1e-14), &[0, 1]),
            Err(SingularityError::IllConditioned(_))
        ));
    }
}

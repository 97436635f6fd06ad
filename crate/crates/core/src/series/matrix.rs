//! Small dense matrices of series.

use super::{NovikovSeries, SeriesError, EXACT};
use crate::scalar::Coeff;

pub type SMat<C> = Vec<Vec<NovikovSeries<C>>>;
pub type SVec<C> = Vec<NovikovSeries<C>>;

pub fn identity<C: Coeff>(n: usize, nvars: usize) -> SMat<C> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { NovikovSeries::one(nvars) } else { NovikovSeries::zero(nvars, EXACT) })
                .collect()
        })
        .collect()
}

pub fn zeros<C: Coeff>(n: usize, m: usize, nvars: usize) -> SMat<C> {
    vec![vec![NovikovSeries::zero(nvars, EXACT); m]; n]
}

pub fn from_consts<C: Coeff>(m: &[Vec<C>], nvars: usize) -> SMat<C> {
    m.iter().map(|row| row.iter().map(|c| NovikovSeries::constant(nvars, c.clone())).collect()).collect()
}

pub fn mat_mul<C: Coeff>(a: &SMat<C>, b: &SMat<C>) -> Result<SMat<C>, SeriesError> {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let nvars = a.first().and_then(|r| r.first()).map_or(1, |s| s.nvars());
    let mut out = zeros(n, m, nvars);
    for i in 0..n {
        for j in 0..m {
            let mut acc = NovikovSeries::zero(nvars, EXACT);
            for l in 0..k {
                if a[i][l].is_zero() && a[i][l].is_exact() || b[l][j].is_zero() && b[l][j].is_exact() {
                    continue;
                }
                acc = acc.try_add(&a[i][l].try_mul(&b[l][j])?)?;
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

pub fn mat_vec<C: Coeff>(a: &SMat<C>, v: &SVec<C>) -> Result<SVec<C>, SeriesError> {
    let nvars = v.first().map_or(1, |s| s.nvars());
    a.iter()
        .map(|row| {
            let mut acc = NovikovSeries::zero(nvars, EXACT);
            for (x, y) in row.iter().zip(v) {
                acc = acc.try_add(&x.try_mul(y)?)?;
            }
            Ok(acc)
        })
        .collect()
}

pub fn mat_add<C: Coeff>(a: &SMat<C>, b: &SMat<C>) -> Result<SMat<C>, SeriesError> {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.try_add(y)).collect()).collect()
}

pub fn mat_sub<C: Coeff>(a: &SMat<C>, b: &SMat<C>) -> Result<SMat<C>, SeriesError> {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.try_sub(y)).collect()).collect()
}

pub fn mat_scale<C: Coeff>(a: &SMat<C>, s: &NovikovSeries<C>) -> Result<SMat<C>, SeriesError> {
    a.iter().map(|r| r.iter().map(|x| x.try_mul(s)).collect()).collect()
}

pub fn transpose<C: Coeff>(a: &SMat<C>) -> SMat<C> {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_map<C: Coeff>(a: &SMat<C>, f: impl Fn(&NovikovSeries<C>) -> NovikovSeries<C>) -> SMat<C> {
    a.iter().map(|r| r.iter().map(&f).collect()).collect()
}

pub fn is_zero_mat<C: Coeff>(a: &SMat<C>) -> bool {
    a.iter().all(|r| r.iter().all(|x| x.is_zero()))
}

/// Lowest validity order among the entries, in q-units (`None` if all exact).
pub fn min_order_q<C: Coeff>(a: &SMat<C>) -> Option<crate::exact::Rational> {
    a.iter().flatten().filter_map(|x| x.order_q()).min()
}

/// Inverse by Gaussian elimination; pivots may have monomial leading terms.
pub fn inverse<C: Coeff>(a: &SMat<C>) -> Result<SMat<C>, SeriesError> {
    let n = a.len();
    let nvars = a.first().and_then(|r| r.first()).map_or(1, |s| s.nvars());
    let mut m: SMat<C> = a.clone();
    let mut inv = identity(n, nvars);
    for col in 0..n {
        // pivot: lowest valuation with a monomial leading part
        let mut best: Option<(usize, i64)> = None;
        for (row, r) in m.iter().enumerate().skip(col) {
            let x = &r[col];
            if x.leading_monomial().is_some_and(|(_, c)| c.is_unit()) {
                let v = x.valuation().unwrap() * (1_000_000 / x.lattice() as i64);
                if best.is_none_or(|(_, bv)| v < bv) {
                    best = Some((row, v));
                }
            }
        }
        let (p, _) = best.ok_or(SeriesError::Singular)?;
        m.swap(col, p);
        inv.swap(col, p);
        let pinv = m[col][col].inv_laurent()?;
        m[col] = m[col].iter().map(|x| x.try_mul(&pinv)).collect::<Result<_, _>>()?;
        inv[col] = inv[col].iter().map(|x| x.try_mul(&pinv)).collect::<Result<_, _>>()?;
        for row in 0..n {
            if row == col || m[row][col].is_zero() {
                continue;
            }
            let f = m[row][col].clone();
            for j in 0..n {
                m[row][j] = m[row][j].try_sub(&f.try_mul(&m[col][j])?)?;
                inv[row][j] = inv[row][j].try_sub(&f.try_mul(&inv[col][j])?)?;
            }
        }
    }
    Ok(inv)
}

/// Characteristic polynomial `det(y - A)` by Faddeev-LeVerrier; returns `c_0..c_n` with `c_n = 1`.
pub fn char_poly<C: Coeff>(a: &SMat<C>) -> Result<Vec<NovikovSeries<C>>, SeriesError> {
    let n = a.len();
    let nvars = a.first().and_then(|r| r.first()).map_or(1, |s| s.nvars());
    let mut coeffs = vec![NovikovSeries::zero(nvars, EXACT); n + 1];
    coeffs[n] = NovikovSeries::one(nvars);
    let mut mk = zeros::<C>(n, n, nvars);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mat_mul(a, &mk)?;
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = row[i].try_add(&coeffs[n - k + 1])?;
        }
        mk = next;
        let am = mat_mul(a, &mk)?;
        let mut tr = NovikovSeries::zero(nvars, EXACT);
        for (i, row) in am.iter().enumerate() {
            tr = tr.try_add(&row[i])?;
        }
        coeffs[n - k] = tr.scale(&C::from_rational(&crate::exact::rat(-1, k as i64)));
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, Rational};

    type Q = NovikovSeries<Rational>;

    #[test]
    fn inverse_roundtrip() {
        let q = Q::q(1, 0).truncate(6);
        let one = Q::one(1);
        let a = vec![vec![Q::zero(1, EXACT), q.clone()], vec![one.clone(), Q::zero(1, EXACT)]];
        let ai = inverse(&a).unwrap();
        let p = mat_mul(&a, &ai).unwrap();
        assert_eq!(p[0][0].coeff(&[0]), rat(1, 1));
        assert!(p[0][1].is_zero() && p[1][0].is_zero());
    }

    #[test]
    fn charpoly_companion() {
        let q = Q::q(1, 0);
        let one = Q::one(1);
        let z = Q::zero(1, EXACT);
        let a = vec![vec![z.clone(), q.clone()], vec![one.clone(), z.clone()]];
        let c = char_poly(&a).unwrap();
        assert_eq!(c[0], q.scale(&rat(-1, 1)));
        assert!(c[1].is_zero());
        assert_eq!(c[2], one);
    }
}

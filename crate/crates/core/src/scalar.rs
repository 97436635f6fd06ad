//! Coefficient rings the series engine can run over.
//!
//! Exact work uses [`RatFunc`] (or [`Rational`] when no symbols are involved); the floating
//! types exist for quick numeric sweeps and share every algorithm with the exact path.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, ToPrimitive, Zero};

use crate::exact::{rational_root, RatFunc, Rational};

pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_rational(r: &Rational) -> Self;

    /// Square root inside the ring, if one exists.
    fn try_sqrt(&self) -> Option<Self>;

    /// `n`-th root inside the ring, if one exists.
    fn try_root(&self, n: u32) -> Option<Self>;

    fn is_unit(&self) -> bool {
        !self.is_zero()
    }

    fn from_int(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(n.into()))
    }

    /// Integer power; negative exponents invert.
    fn powi(&self, n: i64) -> Self {
        let mut base = if n < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            k >>= 1;
        }
        acc
    }

    /// Whether the value carries a leading minus sign when printed.
    fn is_negative_display(&self) -> bool {
        self.to_string().starts_with('-')
    }

    /// Whether the printed form needs parentheses as a factor.
    fn is_compound(&self) -> bool {
        let s = self.to_string();
        s[1..].contains([' ', '+']) || s.contains('/') && s.contains('*')
    }
}

impl Coeff for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn try_sqrt(&self) -> Option<Self> {
        rational_root(self, 2)
    }
    fn try_root(&self, n: u32) -> Option<Self> {
        rational_root(self, n)
    }
    fn is_compound(&self) -> bool {
        false
    }
}

impl Coeff for RatFunc {
    fn from_rational(r: &Rational) -> Self {
        RatFunc::constant(r.clone())
    }
    fn try_sqrt(&self) -> Option<Self> {
        self.sqrt().ok()
    }
    fn try_root(&self, n: u32) -> Option<Self> {
        match n {
            0 => None,
            1 => Some(self.clone()),
            _ if n % 2 == 0 => self.sqrt().ok()?.try_root(n / 2),
            _ => rational_root(&self.constant_value()?, n).map(RatFunc::constant),
        }
    }
    fn is_compound(&self) -> bool {
        self.numer().num_terms() > 1 || !self.denom().is_constant()
    }
}

macro_rules! float_coeff {
    ($t:ty) => {
        impl Coeff for $t {
            fn from_rational(r: &Rational) -> Self {
                r.to_f64().unwrap_or(f64::NAN) as $t
            }
            fn try_sqrt(&self) -> Option<Self> {
                (*self >= 0.0).then(|| self.sqrt())
            }
            fn try_root(&self, n: u32) -> Option<Self> {
                if n == 0 {
                    return None;
                }
                if *self < 0.0 {
                    if n % 2 == 0 {
                        return None;
                    }
                    return Some(-(-*self).powf(1.0 / n as $t));
                }
                Some(self.powf(1.0 / n as $t))
            }
            fn is_compound(&self) -> bool {
                false
            }
        }
    };
}
float_coeff!(f64);
float_coeff!(f32);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, Registry};

    #[test]
    fn roots() {
        assert_eq!(rat(9, 4).try_sqrt(), Some(rat(3, 2)));
        assert_eq!(rat(2, 1).try_sqrt(), None);
        assert_eq!(rat(-8, 27).try_root(3), Some(rat(-2, 3)));
        let reg = Registry::new(&["l"]);
        let l = RatFunc::var(&reg, "l").unwrap();
        let l4 = l.powi(4);
        assert_eq!(l4.try_root(4), Some(l.clone()));
        assert_eq!(4.0f64.try_sqrt(), Some(2.0));
        assert_eq!((-4.0f64).try_sqrt(), None);
    }

    #[test]
    fn powi_negative() {
        assert_eq!(rat(2, 3).powi(-2), rat(9, 4));
        assert_eq!(2.0f64.powi(-1), 0.5);
    }
}

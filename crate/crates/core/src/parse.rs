//! Recursive-descent parser for rational-function expressions such as `l^2/(1-q)`.

use std::sync::Arc;

use num_bigint::BigInt;

use crate::exact::{ExactError, RatFunc, Rational, Registry};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    reg: &'a Arc<Registry>,
}

fn err(pos: usize, msg: impl Into<String>) -> ExactError {
    ExactError::Parse { pos, msg: msg.into() }
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<RatFunc, ExactError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = acc.try_add(&self.term()?)?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = acc.try_sub(&self.term()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<RatFunc, ExactError> {
        let mut acc = self.power()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    acc = acc.try_mul(&self.power()?)?;
                }
                b'/' => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.power()?;
                    if d.is_zero() {
                        return Err(err(at, "division by zero"));
                    }
                    acc = acc.try_div(&d)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<RatFunc, ExactError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.power()?);
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let neg = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let at = self.pos;
            let n = self.integer()?;
            let n: i32 = n.try_into().map_err(|_| err(at, "exponent too large"))?;
            if neg && base.is_zero() {
                return Err(err(at, "negative power of zero"));
            }
            return Ok(base.powi(if neg { -n } else { n }));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<BigInt, ExactError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(err(start, "expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn atom(&mut self) -> Result<RatFunc, ExactError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(err(self.pos, "expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(RatFunc::constant(Rational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_' || self.src[self.pos] == b'\'')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                RatFunc::var(self.reg, name).map_err(|_| err(start, format!("unknown symbol `{}`", name)))
            }
            Some(_) => Err(err(self.pos, "unexpected character")),
            None => Err(err(self.pos, "unexpected end of input")),
        }
    }
}

/// Parses an expression over the symbols of `reg`.
pub fn parse_ratfunc(src: &str, reg: &Arc<Registry>) -> Result<RatFunc, ExactError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, reg };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(err(p.pos, "trailing input"));
    }
    Ok(e)
}

/// Parses a rational constant such as `-3/4`.
pub fn parse_rational(src: &str) -> Result<Rational, ExactError> {
    let reg = Registry::new::<&str>(&[]);
    parse_ratfunc(src, &reg)?.constant_value().ok_or_else(|| err(0, "expected a constant"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn parses_and_normalizes() {
        let reg = Registry::new(&["l", "p", "q"]);
        let a = parse_ratfunc("(p^2 - l^2)/(p - l)", &reg).unwrap();
        assert_eq!(a, parse_ratfunc("p + l", &reg).unwrap());
        let b = parse_ratfunc("2*q/4", &reg).unwrap();
        assert_eq!(b.to_string(), "1/2*q");
        assert_eq!(parse_rational("-3/6").unwrap(), rat(-1, 2));
        assert!(parse_ratfunc("x + 1", &reg).is_err());
        assert!(parse_ratfunc("1/(q-q)", &reg).is_err());
    }
}

//! Line-oriented config files: `[section]` headers, `key = value` entries, `#` comments.
//!
//! Lists separate items with `,`; matrices separate rows with `;`. See `configs/SCHEMA.md`.

use std::collections::BTreeMap;
use std::fmt;

use froblab_core::exact::{ExactError, RatFunc, Rational, Registry};
use froblab_core::parse::{parse_ratfunc, parse_rational};
use froblab_core::Series;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    /// `section.key`, or the section name alone.
    pub path: String,
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.path, self.msg)
    }
}

impl std::error::Error for SchemaError {}

#[derive(Debug, Clone)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub line: usize,
    entries: BTreeMap<String, Entry>,
}

#[derive(Debug, Clone)]
pub struct Document {
    sections: Vec<Section>,
    /// Line of the last content line, used for missing-section diagnostics.
    end: usize,
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

impl Document {
    pub fn parse(src: &str) -> Result<Self, SchemaError> {
        let mut sections: Vec<Section> = Vec::new();
        let mut end = 0;
        for (i, raw) in src.lines().enumerate() {
            let line = i + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            end = line;
            if let Some(rest) = text.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| is_ident(n))
                    .ok_or_else(|| SchemaError { path: text.into(), line, msg: "malformed section header".into() })?;
                if sections.iter().any(|s| s.name == name) {
                    return Err(SchemaError { path: name.into(), line, msg: "duplicate section".into() });
                }
                sections.push(Section { name: name.into(), line, entries: BTreeMap::new() });
                continue;
            }
            let (k, v) = text
                .split_once('=')
                .ok_or_else(|| SchemaError { path: text.into(), line, msg: "expected `key = value`".into() })?;
            let (k, v) = (k.trim(), v.trim());
            let sec = sections
                .last_mut()
                .ok_or_else(|| SchemaError { path: k.into(), line, msg: "entry before any section".into() })?;
            if !is_ident(k) {
                return Err(SchemaError { path: format!("{}.{}", sec.name, k), line, msg: "malformed key".into() });
            }
            if sec.entries.insert(k.into(), Entry { value: v.into(), line }).is_some() {
                return Err(SchemaError { path: format!("{}.{}", sec.name, k), line, msg: "duplicate key".into() });
            }
        }
        Ok(Document { sections, end })
    }

    pub fn section(&self, name: &str) -> Result<&Section, SchemaError> {
        self.optional(name)
            .ok_or_else(|| SchemaError { path: name.into(), line: self.end, msg: "missing section".into() })
    }

    pub fn optional(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Rejects sections outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<(), SchemaError> {
        match self.sections.iter().find(|s| !allowed.contains(&s.name.as_str())) {
            Some(s) => Err(SchemaError { path: s.name.clone(), line: s.line, msg: "unknown section".into() }),
            None => Ok(()),
        }
    }
}

/// A located value with typed accessors.
#[derive(Debug)]
pub struct Field<'a> {
    pub path: String,
    pub line: usize,
    pub value: &'a str,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<Field<'_>> {
        self.entries.get(key).map(|e| Field { path: format!("{}.{}", self.name, key), line: e.line, value: &e.value })
    }

    pub fn req(&self, key: &str) -> Result<Field<'_>, SchemaError> {
        self.get(key).ok_or_else(|| SchemaError {
            path: format!("{}.{}", self.name, key),
            line: self.line,
            msg: "missing key".into(),
        })
    }

    pub fn only(&self, allowed: &[&str]) -> Result<(), SchemaError> {
        match self.entries.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            Some((k, e)) => Err(SchemaError { path: format!("{}.{}", self.name, k), line: e.line, msg: "unknown key".into() }),
            None => Ok(()),
        }
    }
}

fn split_list(s: &str, sep: char) -> Vec<&str> {
    if s.trim().is_empty() {
        return Vec::new();
    }
    s.split(sep).map(str::trim).collect()
}

impl<'a> Field<'a> {
    pub fn err(&self, msg: impl Into<String>) -> SchemaError {
        SchemaError { path: self.path.clone(), line: self.line, msg: msg.into() }
    }

    fn exact(&self, e: ExactError) -> SchemaError {
        self.err(e.to_string())
    }

    pub fn str(&self) -> &'a str {
        self.value
    }

    pub fn int(&self) -> Result<i64, SchemaError> {
        self.value.parse().map_err(|_| self.err(format!("expected an integer, got `{}`", self.value)))
    }

    pub fn float(&self) -> Result<f64, SchemaError> {
        self.value.parse().map_err(|_| self.err(format!("expected a number, got `{}`", self.value)))
    }

    pub fn list(&self) -> Vec<&'a str> {
        split_list(self.value, ',')
    }

    pub fn rows(&self) -> Vec<Vec<&'a str>> {
        split_list(self.value, ';').into_iter().map(|r| split_list(r, ',')).collect()
    }

    pub fn ints(&self) -> Result<Vec<i64>, SchemaError> {
        self.list().iter().map(|x| x.parse().map_err(|_| self.err(format!("expected an integer, got `{}`", x)))).collect()
    }

    pub fn floats(&self) -> Result<Vec<f64>, SchemaError> {
        self.list().iter().map(|x| x.parse().map_err(|_| self.err(format!("expected a number, got `{}`", x)))).collect()
    }

    pub fn rationals(&self) -> Result<Vec<Rational>, SchemaError> {
        self.list().iter().map(|x| parse_rational(x).map_err(|e| self.exact(e))).collect()
    }

    /// Integer matrix with `cols` entries per row.
    pub fn int_matrix(&self, cols: Option<usize>) -> Result<Vec<Vec<i64>>, SchemaError> {
        let rows = self.rows();
        let mut out = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if let Some(c) = cols {
                if r.len() != c {
                    return Err(self.err(format!("row {} has {} entries, expected {}", i + 1, r.len(), c)));
                }
            }
            let row: Result<Vec<i64>, _> =
                r.iter().map(|x| x.parse().map_err(|_| self.err(format!("row {}: expected an integer, got `{}`", i + 1, x)))).collect();
            out.push(row?);
        }
        if cols.is_none() && out.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(self.err("rows have different lengths"));
        }
        Ok(out)
    }

    pub fn ratfunc(&self, reg: &Arc<Registry>) -> Result<RatFunc, SchemaError> {
        parse_ratfunc(self.value, reg).map_err(|e| self.exact(e))
    }

    pub fn ratfuncs(&self, reg: &Arc<Registry>) -> Result<Vec<RatFunc>, SchemaError> {
        self.list().iter().map(|x| parse_ratfunc(x, reg).map_err(|e| self.exact(e))).collect()
    }

    /// Square matrix of expressions.
    pub fn ratfunc_matrix(&self, reg: &Arc<Registry>, n: usize) -> Result<Vec<Vec<RatFunc>>, SchemaError> {
        let rows = self.rows();
        if rows.len() != n {
            return Err(self.err(format!("expected {} rows, got {}", n, rows.len())));
        }
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                if r.len() != n {
                    return Err(self.err(format!("row {} has {} entries, expected {}", i + 1, r.len(), n)));
                }
                r.iter().map(|x| parse_ratfunc(x, reg).map_err(|e| self.exact(e))).collect()
            })
            .collect()
    }

    /// Expressions in the Novikov variable, expanded to `order`; separator `sep`.
    pub fn series_list(&self, reg: &Arc<Registry>, qname: &str, order: i64, sep: char) -> Result<Vec<Series>, SchemaError> {
        split_list(self.value, sep)
            .iter()
            .map(|x| {
                let f = parse_ratfunc(x, reg).map_err(|e| self.exact(e))?;
                let s = Series::from_ratfunc(&f, &[qname], order).map_err(|e| self.err(e.to_string()))?;
                Ok(without(&s, reg, &[qname]))
            })
            .collect()
    }

    /// `a:b` with `a <= b`.
    pub fn range_f64(&self) -> Result<(f64, f64), SchemaError> {
        let (a, b) = self.value.split_once(':').ok_or_else(|| self.err("expected `a:b`"))?;
        let a: f64 = a.trim().parse().map_err(|_| self.err("expected `a:b`"))?;
        let b: f64 = b.trim().parse().map_err(|_| self.err("expected `a:b`"))?;
        if a > b {
            return Err(self.err("empty range"));
        }
        Ok((a, b))
    }

    /// `key: expression` pairs separated by `;`.
    pub fn keyed(&self) -> Result<Vec<(&'a str, &'a str)>, SchemaError> {
        split_list(self.value, ';')
            .into_iter()
            .map(|p| p.split_once(':').map(|(k, v)| (k.trim(), v.trim())).ok_or_else(|| self.err(format!("expected `key: value`, got `{}`", p))))
            .collect()
    }
}

/// Moves the coefficients of a series onto the registry without `drop`, so they share a
/// registry with the rest of the data.
pub fn without(s: &Series, reg: &Arc<Registry>, drop: &[&str]) -> Series {
    let names: Vec<&str> = reg.names().iter().map(String::as_str).filter(|n| !drop.contains(n)).collect();
    if names.len() == reg.len() {
        return s.clone();
    }
    let target = Registry::new(&names);
    s.map_coeffs(|c| c.rebase(&target).unwrap_or_else(|_| c.clone()))
}

/// Coefficients (low to high) of a polynomial in `var`, rebased onto `target`.
pub fn coeffs_in(f: &RatFunc, reg: &Arc<Registry>, var: &str, target: &Arc<Registry>) -> Result<Vec<RatFunc>, String> {
    let v = reg.index(var).ok_or_else(|| format!("unknown symbol `{}`", var))?;
    if f.denom().degree_in(v) > 0 {
        return Err(format!("not a polynomial in `{}`", var));
    }
    let deg = f.numer().degree_in(v) as i64;
    let s = Series::from_ratfunc(f, &[var], deg + 1).map_err(|e| e.to_string())?;
    (0..=deg).map(|k| s.coeff(&[k]).rebase(target).map_err(|e| e.to_string())).collect()
}

/// Symbols declared in `[symbols] names`, plus any extra names.
pub fn registry(doc: &Document, extra: &[&str]) -> Result<Arc<Registry>, SchemaError> {
    let mut names: Vec<String> = Vec::new();
    if let Some(s) = doc.optional("symbols") {
        s.only(&["names"])?;
        if let Some(f) = s.get("names") {
            for n in f.list() {
                if !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || n.is_empty() {
                    return Err(f.err(format!("bad symbol name `{}`", n)));
                }
                if names.iter().any(|x| x == n) || extra.contains(&n) {
                    return Err(f.err(format!("symbol `{}` declared twice", n)));
                }
                names.push(n.into());
            }
        }
    }
    names.extend(extra.iter().map(|s| s.to_string()));
    Ok(Registry::new(&names))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_diagnostics() {
        let d = Document::parse("# c\n[a]\nx = 1, 2 # tail\n\n[b]\ny = 1 2; 3 4\n").unwrap();
        assert_eq!(d.section("a").unwrap().req("x").unwrap().ints().unwrap(), vec![1, 2]);
        let e = d.section("a").unwrap().req("z").unwrap_err();
        assert_eq!((e.path.as_str(), e.line), ("a.z", 2));
        let e = Document::parse("[a]\nx = 1\nx = 2\n").unwrap_err();
        assert_eq!((e.path.as_str(), e.line), ("a.x", 3));
        assert!(Document::parse("x = 1\n").is_err());
        let d = Document::parse("[m]\nrows = 1, 2; 3\n").unwrap();
        let e = d.section("m").unwrap().req("rows").unwrap().int_matrix(Some(2)).unwrap_err();
        assert!(e.msg.contains("row 2"), "{}", e);
    }
}

//! JSON report helpers and the flat text rendering.
//!
//! Every report is a JSON object with sorted keys; series are written as canonical text plus
//! their truncation order, so repeated runs are byte-identical.

use froblab_core::exact::Rational;
use froblab_core::{Coeff, NovikovSeries, OneForm};
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "froblab-report/1";

pub fn rational(r: &Rational) -> Value {
    Value::String(r.to_string())
}

pub fn series<C: Coeff>(s: &NovikovSeries<C>, names: &[&str]) -> Value {
    json!({
        "text": s.to_text(names),
        "order": s.order_q().map(|o| o.to_string()),
    })
}

/// Coefficients of `q^0, q^1, ...` below `upto` (single variable, integer exponents).
pub fn coefficients<C: Coeff>(s: &NovikovSeries<C>, upto: i64) -> Value {
    let o = s.order_q();
    Value::Array(
        (0..upto)
            .take_while(|&k| o.as_ref().is_none_or(|o| Rational::from_integer(k.into()) < *o))
            .map(|k| Value::String(s.coeff_q(&[Rational::from_integer(k.into())]).to_string()))
            .collect(),
    )
}

pub fn one_form<C: Coeff>(w: &OneForm<C>, names: &[&str]) -> Value {
    let mut m = Map::new();
    for (name, c) in OneForm::<C>::coordinate_names(w.nvars()).iter().zip(w.comps()) {
        m.insert(format!("d{}", name), series(c, names));
    }
    Value::Object(m)
}

pub fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

/// One `path = value` line per leaf.
pub fn to_text(v: &Value) -> String {
    let mut out = String::new();
    flatten("", v, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{}.{}", prefix, k) };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(leaf).collect();
            out.push_str(&format!("{} = [{}]\n", prefix, items.join(", ")));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        _ => out.push_str(&format!("{} = {}\n", prefix, leaf(v))),
    }
}

fn leaf(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_is_flat() {
        let v = json!({"b": {"x": [1, 2]}, "a": "s", "c": [{"k": null}]});
        assert_eq!(to_text(&v), "a = s\nb.x = [1, 2]\nc.0.k = -\n");
    }
}

//! `[toric]` sections: bundle data over a product of projective spaces.

use std::path::Path;

use froblab_core::toric::{Cohomology, Orientation, ToricBundleData};
use froblab_core::RatFunc;

use crate::config::{coeffs_in, registry, Document};
use crate::CliError;

pub const TORIC_KEYS: &[&str] = &["p", "m", "lambda", "l", "lambda_prime", "orientation", "cone", "relations"];

/// Reads and validates a toric config file.
pub fn load_toric_config(path: &Path) -> Result<ToricBundleData, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    let doc = Document::parse(&src)?;
    toric_from_document(&doc)
}

pub fn toric_from_document(doc: &Document) -> Result<ToricBundleData, CliError> {
    let sec = doc.section("toric")?;
    sec.only(TORIC_KEYS)?;
    let reg = registry(doc, &[])?;
    let pf = sec.req("p")?;
    let p_names: Vec<String> = pf.list().iter().map(|s| s.to_string()).collect();
    if p_names.is_empty() {
        return Err(pf.err("need at least one class").into());
    }
    if let Some(n) = p_names.iter().find(|n| reg.index(n).is_some()) {
        return Err(pf.err(format!("`{}` is also an equivariant symbol", n)).into());
    }
    let r = p_names.len();
    let lambda = sec.req("lambda")?.ratfuncs(&reg)?;
    let lf = sec.req("m")?;
    let m = lf.int_matrix(Some(lambda.len()))?;
    if m.len() != r {
        return Err(lf.err(format!("expected {} rows (one per class), got {}", r, m.len())).into());
    }
    let lpf = sec.req("lambda_prime")?;
    let lambda_v = lpf.ratfuncs(&reg)?;
    let lf = sec.req("l")?;
    let l = lf.int_matrix(Some(lambda_v.len()))?;
    if l.len() != r {
        return Err(lf.err(format!("expected {} rows (one per class), got {}", r, l.len())).into());
    }
    let orientation = match sec.get("orientation") {
        None => Orientation::Concave,
        Some(f) => match f.str() {
            "concave" => Orientation::Concave,
            "convex" => Orientation::Convex,
            other => return Err(f.err(format!("expected concave or convex, got `{}`", other)).into()),
        },
    };
    let cf = sec.req("cone")?;
    let cone = cf.int_matrix(Some(r))?;
    let coh = match sec.get("relations") {
        None => None,
        Some(f) => {
            let exprs = f.list();
            if exprs.len() != r {
                return Err(f.err(format!("expected {} relations, got {}", r, exprs.len())).into());
            }
            let mut names: Vec<&str> = reg.names().iter().map(String::as_str).collect();
            names.extend(p_names.iter().map(String::as_str));
            let full = froblab_core::Registry::new(&names);
            let mut rels: Vec<Vec<RatFunc>> = Vec::new();
            for (i, e) in exprs.iter().enumerate() {
                let g = froblab_core::parse::parse_ratfunc(e, &full).map_err(|x| f.err(x.to_string()))?;
                let cs = coeffs_in(&g, &full, &p_names[i], &reg).map_err(|x| f.err(x))?;
                // the relation must involve only its own class
                let others: Vec<&str> = p_names.iter().filter(|n| *n != &p_names[i]).map(String::as_str).collect();
                if others.iter().any(|o| g.numer().degree_in(full.index(o).expect("registered")) > 0) {
                    return Err(f.err(format!("relation {} mixes classes", i + 1)).into());
                }
                rels.push(cs);
            }
            Some(Cohomology::projective_product(&p_names, &rels)?)
        }
    };
    Ok(ToricBundleData::new(reg, p_names, m, lambda, l, lambda_v, orientation, cone, coh)?)
}

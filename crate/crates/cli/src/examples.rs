//! Registered examples and the pipelines behind each config kind.

use std::sync::Arc;

use froblab_core::dmflow::{dm_potentials, DescendantSeries};
use froblab_core::elliptic::{closedness_check, elliptic_dg_conformal, elliptic_dg_equivariant, homogeneity_check, EllipticForm};
use froblab_core::exact::{rat, RatFunc, Rational, Registry};
use froblab_core::frame::{CanonicalFrame, EigenOptions, Normalization, RLadder, ResidualReport};
use froblab_core::frobenius::{DirKind, Direction, FrobeniusData, Grading};
use froblab_core::parse::parse_ratfunc;
use froblab_core::series::matrix::SMat;
use froblab_core::singularity::{a2_frame, numeric_morse_pipeline, point_table, MorseFamily, MorseReport};
use froblab_core::toric::{hypergeom_i_concave, hypergeom_i_convex, mirror_map_extract, toric_pipeline, CohomJet, Orientation};
use froblab_core::{OneForm, QSeries, Series};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::config::{coeffs_in, registry, without, Document, Section};
use crate::report::{self, coefficients, one_form, series, SCHEMA};
use crate::toric_config::toric_from_document;
use crate::{CliError, Command, Format, RunConfig, Source, DEFAULT_ORDER};

/// Name and bundled config of every registered example.
pub const EXAMPLES: &[(&str, &str)] = &[
    ("cp1", include_str!("../../../configs/cp1.cfg")),
    ("cp1-equivariant", include_str!("../../../configs/cp1-equivariant.cfg")),
    ("a2", include_str!("../../../configs/a2.cfg")),
    ("a3-numeric", include_str!("../../../configs/a3-numeric.cfg")),
    ("conifold", include_str!("../../../configs/conifold.cfg")),
    ("dm-flow-demo", include_str!("../../../configs/dm-flow-demo.cfg")),
];

pub fn bundled(name: &str) -> Result<&'static str, CliError> {
    EXAMPLES.iter().find(|e| e.0 == name).map(|e| e.1).ok_or_else(|| CliError::UnknownExample(name.into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into() }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub kind: String,
    pub order: i64,
    pub checks: Vec<Check>,
    pub results: Value,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_value(&self) -> Value {
        let checks: Vec<Value> =
            self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect();
        json!({
            "schema": SCHEMA,
            "example": self.name,
            "kind": self.kind,
            "order": self.order,
            "ok": self.ok(),
            "checks": checks,
            "results": self.results,
        })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => report::to_json(&self.to_value()),
            Format::Text => report::to_text(&self.to_value()),
        }
    }
}

/// Runs the example or config named in `cfg`.
pub fn run_example(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let src = match &cfg.command {
        Command::Run(Source::Example(name)) => bundled(name)?.to_string(),
        Command::Run(Source::Config(path)) => {
            std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?
        }
        Command::Suite => return Err(CliError::InvalidConfig("the suite is not an example".into())),
    };
    run_source(&src, cfg)
}

/// Runs a config given as text.
pub fn run_source(src: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let doc = Document::parse(src)?;
    let ex = doc.section("example")?;
    ex.only(&["name", "kind", "order", "description"])?;
    let name = ex.req("name")?.str().to_string();
    let kf = ex.req("kind")?;
    let order = match (cfg.order, ex.get("order")) {
        (Some(o), _) => o,
        (None, Some(f)) => {
            let o = f.int()?;
            if o <= 0 {
                return Err(f.err("order must be positive").into());
            }
            o
        }
        (None, None) => DEFAULT_ORDER,
    };
    let (checks, results) = match kf.str() {
        "frobenius" => frobenius_example(&doc, order, cfg)?,
        "toric" => toric_example(&doc, order, cfg)?,
        "a2" => a2_example(&doc)?,
        "morse" => morse_example(&doc)?,
        "dmflow" => dmflow_example(&doc, order, cfg)?,
        other => return Err(kf.err(format!("unknown kind `{}`", other)).into()),
    };
    Ok(Outcome { name, kind: kf.str().into(), order, checks, results })
}

fn ro(o: i64) -> Rational {
    Rational::from_integer(o.into())
}

fn agree(a: &Series, b: &Series, o: i64) -> bool {
    a.truncate_q(&ro(o)) == b.truncate_q(&ro(o))
}

fn forms_agree(a: &OneForm<RatFunc>, b: &OneForm<RatFunc>, o: i64) -> bool {
    a.truncate_q(&ro(o)) == b.truncate_q(&ro(o))
}

const Q: &[&str] = &["q"];

// ---------------------------------------------------------------------------------------
// Frobenius data

/// Frobenius data from `[algebra]`, either a monic relation or explicit product matrices.
pub fn frobenius_from_document(doc: &Document, order: i64) -> Result<(FrobeniusData<RatFunc>, Arc<Registry>), CliError> {
    let alg = doc.section("algebra")?;
    let reg = registry(doc, &[])?;
    let withq = registry(doc, &["q"])?;
    let data = if let Some(rf) = alg.get("relation") {
        alg.only(&["symbol", "relation", "eta"])?;
        let sym = alg.req("symbol")?;
        let full = registry(doc, &[sym.str(), "q"])?;
        let f = rf.ratfunc(&full)?;
        let cs = coeffs_in(&f, &full, sym.str(), &withq).map_err(|e| rf.err(e))?;
        let n = cs.len() - 1;
        if n == 0 || !cs[n].is_one() {
            return Err(rf.err(format!("relation must be monic of positive degree in `{}`", sym.str())).into());
        }
        let mut low = Vec::with_capacity(n);
        for c in &cs[..n] {
            let s = Series::from_ratfunc(c, Q, order).map_err(|e| rf.err(e.to_string()))?;
            low.push(without(&s, &withq, Q));
        }
        let eta = alg.req("eta")?.ratfunc_matrix(&reg, n)?;
        FrobeniusData::from_relation(sym.str(), &low, eta)?
    } else {
        let bf = alg.req("basis")?;
        let labels: Vec<String> = bf.list().iter().map(|s| s.to_string()).collect();
        let n = labels.len();
        let mut keys: Vec<String> = ["basis", "eta", "unit", "log_q"].iter().map(|s| s.to_string()).collect();
        keys.extend(labels.iter().map(|l| format!("mult.{}", l)));
        let refs: Vec<&str> = keys.iter().map(String::as_str).collect();
        alg.only(&refs)?;
        let eta = alg.req("eta")?.ratfunc_matrix(&reg, n)?;
        let vector = |key: &str| -> Result<Vec<RatFunc>, CliError> {
            let f = alg.req(key)?;
            let v = f.ratfuncs(&reg)?;
            if v.len() != n {
                return Err(f.err(format!("expected {} entries, got {}", n, v.len())).into());
            }
            Ok(v)
        };
        let unit = vector("unit")?;
        let logq = vector("log_q")?;
        let mut mult = Vec::with_capacity(n);
        for l in &labels {
            let f = alg.req(&format!("mult.{}", l))?;
            let rows = f.rows();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(f.err(format!("expected a {} x {} matrix", n, n)).into());
            }
            let mut m: SMat<RatFunc> = Vec::with_capacity(n);
            for r in rows {
                let mut row = Vec::with_capacity(n);
                for x in r {
                    let e = parse_ratfunc(x, &withq).map_err(|e| f.err(e.to_string()))?;
                    let s = Series::from_ratfunc(&e, Q, order).map_err(|e| f.err(e.to_string()))?;
                    row.push(without(&s, &withq, Q));
                }
                m.push(row);
            }
            mult.push(m);
        }
        let directions = vec![
            Direction { name: "t0".into(), kind: DirKind::T0, class: unit.clone() },
            Direction { name: "log q".into(), kind: DirKind::LogQ(0), class: logq },
        ];
        FrobeniusData::new(labels, eta, mult, unit, directions, 1)?
    };
    let data = match doc.optional("grading") {
        None => data,
        Some(g) => { let n = data.rank(); data.with_grading(grading(g, n)?) },
    };
    Ok((data, reg))
}

fn grading(g: &Section, n: usize) -> Result<Grading, CliError> {
    g.only(&["q_degree", "basis_degrees", "weights"])?;
    let q_degrees = g.req("q_degree")?.rationals()?;
    let bf = g.req("basis_degrees")?;
    let basis_degrees = bf.rationals()?;
    if basis_degrees.len() != n {
        return Err(bf.err(format!("expected {} degrees", n)).into());
    }
    let mut symbol_weights = std::collections::BTreeMap::new();
    if let Some(w) = g.get("weights") {
        for (k, v) in w.keyed()? {
            let r = froblab_core::parse::parse_rational(v).map_err(|e| w.err(e.to_string()))?;
            symbol_weights.insert(k.to_string(), r);
        }
    }
    Ok(Grading { q_degrees, basis_degrees, symbol_weights })
}

/// Frame, ladder and elliptic form of a Frobenius config.
pub struct FrameRun {
    pub data: FrobeniusData<RatFunc>,
    pub reg: Arc<Registry>,
    pub frame: CanonicalFrame<RatFunc>,
    pub ladder: RLadder<RatFunc>,
    pub residual: ResidualReport,
    pub c_minus1: Option<Vec<RatFunc>>,
    pub dg: EllipticForm<RatFunc>,
}

pub fn frame_run(doc: &Document, order: i64, levels: usize, max_lattice: u32) -> Result<FrameRun, CliError> {
    let (data, reg) = frobenius_from_document(doc, order + 2)?;
    let fr = doc.section("frame")?;
    fr.only(&["normalization", "form", "c_minus1"])?;
    let rule = match fr.get("normalization") {
        None => Normalization::Conformal,
        Some(f) => match f.str() {
            "conformal" => Normalization::Conformal,
            "mod-q" => Normalization::ModQ,
            other => return Err(f.err(format!("expected conformal or mod-q, got `{}`", other)).into()),
        },
    };
    let frame = CanonicalFrame::build(&data, order + 2, &EigenOptions { max_lattice, pilot: None })?;
    let ladder = frame.r_ladder(levels, &rule)?;
    let residual = frame.assemble_and_verify(&ladder)?;
    let form = fr.get("form");
    let (dg, c_minus1) = match form.as_ref().map(|f| f.str()) {
        None | Some("conformal") => (elliptic_dg_conformal(&frame, &ladder.levels[0])?, None),
        Some("equivariant") => {
            let cf = fr.req("c_minus1")?;
            let table: Vec<(RatFunc, RatFunc)> = cf
                .keyed()?
                .into_iter()
                .map(|(k, v)| Ok((parse_ratfunc(k, &reg).map_err(|e| cf.err(e.to_string()))?, parse_ratfunc(v, &reg).map_err(|e| cf.err(e.to_string()))?)))
                .collect::<Result<_, CliError>>()?;
            let dir = data.directions.iter().position(|d| matches!(d.kind, DirKind::LogQ(0))).unwrap_or(0);
            let mut cs = Vec::new();
            for a in 0..frame.rank() {
                let xi0 = frame.split.eigenvalues[a][dir].constant_term();
                let c = table
                    .iter()
                    .find(|(k, _)| *k == xi0)
                    .ok_or_else(|| cf.err(format!("no entry for the branch with leading eigenvalue {}", xi0)))?;
                cs.push(c.1.clone());
            }
            (elliptic_dg_equivariant(&frame, &ladder.levels[0], &cs)?, Some(cs))
        }
        Some(other) => return Err(form.expect("present").err(format!("expected conformal or equivariant, got `{}`", other)).into()),
    };
    Ok(FrameRun { data, reg, frame, ladder, residual, c_minus1, dg })
}

fn expected_form(doc: &Document, order: i64, nvars: usize) -> Result<Option<OneForm<RatFunc>>, CliError> {
    let Some(ex) = doc.optional("expect") else { return Ok(None) };
    let Some(f) = ex.get("dg") else { return Ok(None) };
    let withq = registry(doc, &["q"])?;
    let comps = f.series_list(&withq, "q", order, ';')?;
    if comps.len() != nvars + 1 {
        return Err(f.err(format!("expected {} components (dt0; dlog q)", nvars + 1)).into());
    }
    Ok(Some(OneForm::new(comps)))
}

fn mat_json(m: &SMat<RatFunc>, o: i64) -> Value {
    Value::Array(m.iter().map(|r| Value::Array(r.iter().map(|s| series(&s.truncate_q(&ro(o)), Q)).collect())).collect())
}

fn frobenius_example(doc: &Document, order: i64, cfg: &RunConfig) -> Result<(Vec<Check>, Value), CliError> {
    let levels = cfg.hbar_window.map_or(2, |(_, b)| b.max(1) as usize);
    let run = frame_run(doc, order, levels, cfg.max_lattice)?;
    let FrameRun { data, frame, ladder, residual, c_minus1, dg, .. } = &run;
    let o = ro(order);
    let mut checks = Vec::new();
    let w = data.wdvv_check(order);
    checks.push(check("wdvv", w.is_ok(), w.err().map(|x| format!("{:?}", x)).unwrap_or_default()));
    checks.push(check(
        "ladder-residual",
        residual.first_nonzero.is_none(),
        format!("checked through hbar^{}", residual.checked_through),
    ));
    let sym = frame.symmetry_check(&ladder.levels[0]);
    checks.push(check("r0-symmetric", sym.is_ok(), sym.err().map(|x| format!("{:?}", x)).unwrap_or_default()));
    let dr = frame.dr_from_hessians()?;
    let dr_ok = dr.iter().zip(&ladder.diagonal_forms[0]).all(|(a, b)| forms_agree(a, b, order));
    checks.push(check("dr-from-hessians", dr_ok, "diagonal of R(0) against the Hessian formula"));
    let closed = closedness_check(&dg.total);
    checks.push(check("dg-closed", closed.is_ok(), closed.err().map(|x| format!("{:?}", x)).unwrap_or_default()));
    if let Some(e) = expected_form(doc, order, frame.nvars)? {
        checks.push(check("dg-expected", forms_agree(&dg.total, &e, order), e.truncate_q(&o).to_text(Q)));
    }
    if let Some(g) = &data.grading {
        let h = homogeneity_check(&dg.total.truncate_q(&o), g);
        checks.push(check("dg-homogeneous", h.is_ok(), h.err().map(|x| format!("{:?}", x)).unwrap_or_default()));
    }
    let mut branches = Vec::new();
    for a in 0..frame.rank() {
        let eig: Map<String, Value> = frame
            .direction_names
            .iter()
            .zip(&frame.split.eigenvalues[a])
            .map(|(n, s)| (n.clone(), series(&s.truncate_q(&o), Q)))
            .collect();
        branches.push(json!({
            "eigenvalues": eig,
            "hessian": series(&frame.delta[a].truncate_q(&o), Q),
            "e": frame.e[a].to_string(),
            "du": one_form(&frame.du[a].truncate_q(&o), Q),
            "c_minus1": c_minus1.as_ref().map(|c| c[a].to_string()),
        }));
    }
    let total = dg.total.truncate_q(&o);
    let results = json!({
        "basis": data.labels,
        "lattice": frame.split.lattice,
        "branches": branches,
        "psi": mat_json(&frame.psi, order),
        "normalization": ladder.rule,
        "r0": mat_json(&ladder.levels[0], order),
        "ladder_levels": ladder.levels.len(),
        "residual": {
            "checked_through": residual.checked_through,
            "first_nonzero": residual.first_nonzero.as_ref().map(|w| format!("{} hbar^{} ({}, {}) = {}", w.direction, w.hbar_power, w.row, w.col, w.value)),
        },
        "dg": {
            "total": one_form(&total, Q),
            "hessian_term": one_form(&dg.hessian_term.truncate_q(&o), Q),
            "c_term": one_form(&dg.c_term.truncate_q(&o), Q),
            "r_term": one_form(&dg.r_term.truncate_q(&o), Q),
            "dlog_q_coefficients": coefficients(total.dlogq(0), order),
        },
    });
    Ok((checks, results))
}

// ---------------------------------------------------------------------------------------
// Toric

/// `c * log(expr)` as a series.
fn log_form(f: &crate::config::Field<'_>, reg: &Arc<Registry>, order: i64) -> Result<Series, CliError> {
    let v = f.str();
    let (c, rest) = v.split_once("log(").ok_or_else(|| f.err("expected `c * log(expr)`"))?;
    let c = c.trim().trim_end_matches('*').trim();
    let c = if c.is_empty() { Rational::one() } else { froblab_core::parse::parse_rational(c).map_err(|e| f.err(e.to_string()))? };
    let inner = rest.trim().strip_suffix(')').ok_or_else(|| f.err("unbalanced parentheses"))?;
    let e = parse_ratfunc(inner, reg).map_err(|e| f.err(e.to_string()))?;
    let s = without(&Series::from_ratfunc(&e, Q, order).map_err(|e| f.err(e.to_string()))?, reg, Q);
    Ok(s.log().map_err(|e| f.err(e.to_string()))?.scale(&RatFunc::constant(c)))
}

fn i_series_json(i: &CohomJet, labels: &[String], order: i64) -> Value {
    let (lo, hi) = i.window();
    let mut degrees = Vec::new();
    for d in 0..order {
        let mut terms = Map::new();
        for k in (lo..=hi).rev() {
            let comps: Vec<Value> = i.coeff(k).iter().map(|s| Value::String(s.coeff(&[d]).to_string())).collect();
            if comps.iter().any(|c| c != "0") {
                terms.insert(format!("hbar^{}", k), Value::Array(comps));
            }
        }
        degrees.push(json!({"degree": d, "terms": terms}));
    }
    json!({"basis": labels, "window": [lo, hi], "degrees": degrees})
}

fn toric_example(doc: &Document, order: i64, cfg: &RunConfig) -> Result<(Vec<Check>, Value), CliError> {
    doc.only(&["example", "symbols", "toric", "expect"])?;
    let data = toric_from_document(doc)?;
    let o = ro(order);
    let rep = toric_pipeline(&data, order)?;
    let i = match cfg.hbar_window {
        None => rep.i_series.clone(),
        Some((a, _)) => match data.orientation {
            Orientation::Concave => hypergeom_i_concave(&data, order, (a, 0))?,
            Orientation::Convex => hypergeom_i_convex(&data, order, (a, 0))?,
        },
    };
    let (mm, _) = mirror_map_extract(&rep.i_series, &data.coh)?;
    let mut checks = vec![
        check("relation-holds", rep.relation.holds, "divisor operators against phi(+-q) times the classical product"),
        check("ladder-residual", rep.residual.first_nonzero.is_none(), format!("checked through hbar^{}", rep.residual.checked_through)),
    ];
    let closed = closedness_check(&rep.dg.total);
    checks.push(check("dg-closed", closed.is_ok(), closed.err().map(|x| format!("{:?}", x)).unwrap_or_default()));
    let lprod: i64 = data.l[0].iter().filter(|&&x| x != 0).product();
    let cinv = RatFunc::from_int(lprod).recip()?;
    let pp = rep.relation.product[0].scale(&cinv);
    let ex = doc.optional("expect");
    if let Some(ex) = ex {
        ex.only(&["dg", "relation", "genus1"])?;
        let withq = registry(doc, &["q"])?;
        if let Some(f) = ex.get("relation") {
            let e = f.series_list(&withq, "q", order, ';')?;
            let pass = e.len() == 1 && agree(&pp, &e[0], order) && rep.relation.product[1].is_zero();
            checks.push(check("relation-expected", pass, format!("p*p = {}", e[0].truncate_q(&o).to_text(Q))));
        }
        if let Some(f) = ex.get("genus1") {
            let e = log_form(&f, &withq, order)?;
            checks.push(check("genus1-expected", agree(&rep.genus1, &e, order), e.truncate_q(&o).to_text(Q)));
        }
    }
    if let Some(e) = expected_form(doc, order, 1)? {
        checks.push(check("dg-expected", forms_agree(&rep.dg.total, &e, order), e.truncate_q(&o).to_text(Q)));
    }
    let total = rep.dg.total.truncate_q(&o);
    let results = json!({
        "i_series": i_series_json(&i, &data.coh.labels, order),
        "mirror_map": {
            "identity": mm.is_identity(),
            "phi": series(&mm.phi, Q),
            "t0_shift": series(&mm.t0_shift, Q),
            "log_q_shifts": mm.f.iter().map(|s| series(s, Q)).collect::<Vec<_>>(),
        },
        "relation": {
            "p*p": series(&pp.truncate_q(&o), Q),
            "phi_signed": series(&rep.relation.phi, Q),
            "holds": rep.relation.holds,
        },
        "pairing": data.localization_pairing()?.iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "c_minus1": rep.c_minus1.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "hessians": rep.frame.delta.iter().map(|d| series(&d.truncate_q(&o), Q)).collect::<Vec<_>>(),
        "r0": mat_json(&rep.ladder.levels[0], order),
        "dg": {
            "total": one_form(&total, Q),
            "dlog_q_coefficients": coefficients(total.dlogq(0), order),
        },
        "genus1": series(&rep.genus1.truncate_q(&o), Q),
    });
    Ok((checks, results))
}

// ---------------------------------------------------------------------------------------
// Singularities

fn morse_family(doc: &Document) -> Result<(MorseFamily, Vec<usize>, f64), CliError> {
    let m = doc.section("morse")?;
    m.only(&["base", "monomials", "params", "directions", "tolerance"])?;
    let base = m.req("base")?.rationals()?;
    let mf = m.req("monomials")?;
    let mut monomials = Vec::new();
    for row in mf.rows() {
        let r: Result<Vec<Rational>, _> =
            row.iter().map(|x| froblab_core::parse::parse_rational(x).map_err(|e| mf.err(e.to_string()))).collect();
        monomials.push(r?);
    }
    let pf = m.req("params")?;
    let params = pf.floats()?;
    if params.len() != monomials.len() {
        return Err(pf.err(format!("expected {} parameters (one per monomial)", monomials.len())).into());
    }
    let df = m.req("directions")?;
    let directions: Vec<usize> = df
        .ints()?
        .into_iter()
        .map(|k| usize::try_from(k).ok().filter(|&k| k < params.len()).ok_or_else(|| df.err(format!("direction {} out of range", k))))
        .collect::<Result<_, _>>()?;
    let tol = m.get("tolerance").map(|f| f.float()).transpose()?.unwrap_or(1e-8);
    Ok((MorseFamily::new(base, monomials, params), directions, tol))
}

fn morse_json(r: &MorseReport) -> Value {
    json!({
        "points": point_table(&r.points),
        "dg": r.dg.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
        "residual": r.residual,
    })
}

fn a2_example(doc: &Document) -> Result<(Vec<Check>, Value), CliError> {
    doc.only(&["example", "a2", "morse"])?;
    let a = doc.section("a2")?;
    a.only(&["t0", "t1", "tolerance"])?;
    let t0 = a.req("t0")?.rationals()?.pop().unwrap_or_else(Rational::zero);
    let t1 = a.req("t1")?.rationals()?.pop().unwrap_or_else(Rational::zero);
    let f = a2_frame(&t0, &t1)?;
    let mut checks = vec![check("dg-zero", f.dg_du.is_zero(), format!("dG/du = {}", f.dg_du))];
    let r_expected = RatFunc::from_int(-1) / (RatFunc::from_int(36) * f.u_diff.clone());
    checks.push(check("r-closed-form", f.r[0] == r_expected && f.r[1] == -r_expected.clone(), format!("R = {}", f.r[0])));
    // Delta = 6 (-u/4)^{1/3}
    let cube = f.delta[0].clone() * f.delta[0].clone() * f.delta[0].clone();
    let target = RatFunc::from_int(216) * (-f.u_diff.clone() / RatFunc::from_int(4));
    checks.push(check("hessian-cube-root", cube == target, format!("Delta^3 = {}", cube)));
    let (fam, dirs, tol) = morse_family(doc)?;
    let num = numeric_morse_pipeline(&fam, &dirs)?;
    checks.push(check("numeric-dg", num.residual < tol, format!("max |dG| = {:e}", num.residual)));
    if f.exact {
        // match numeric points to the symbolic ones by position
        let mut worst: f64 = 0.0;
        for (x, r) in f.x.iter().zip(&f.r) {
            let (xv, rv) = (x.constant_value(), r.constant_value());
            if let (Some(xv), Some(rv)) = (xv, rv) {
                let xf = num_traits::ToPrimitive::to_f64(&xv).unwrap_or(f64::NAN);
                let rf = num_traits::ToPrimitive::to_f64(&rv).unwrap_or(f64::NAN);
                let p = num.points.iter().min_by(|a, b| (a.z.re - xf).abs().total_cmp(&(b.z.re - xf).abs()));
                worst = worst.max(p.map_or(f64::INFINITY, |p| (p.r.re - rf).abs() + p.r.im.abs()));
            }
        }
        checks.push(check("numeric-matches-symbolic", worst < tol, format!("max |R_num - R| = {:e}", worst)));
    }
    let results = json!({
        "symbolic": {
            "exact": f.exact,
            "x": [f.x[0].to_string(), f.x[1].to_string()],
            "u": [f.u[0].to_string(), f.u[1].to_string()],
            "delta": [f.delta[0].to_string(), f.delta[1].to_string()],
            "r": [f.r[0].to_string(), f.r[1].to_string()],
            "u_diff": f.u_diff.to_string(),
            "dg_du": f.dg_du.to_string(),
        },
        "numeric": morse_json(&num),
    });
    Ok((checks, results))
}

fn morse_example(doc: &Document) -> Result<(Vec<Check>, Value), CliError> {
    doc.only(&["example", "morse", "sampling"])?;
    let (fam, dirs, tol) = morse_family(doc)?;
    let base = numeric_morse_pipeline(&fam, &dirs)?;
    let mut checks = vec![check("base-point", base.residual < tol, format!("max |dG| = {:e}", base.residual))];
    let mut samples = Vec::new();
    if let Some(s) = doc.optional("sampling") {
        s.only(&["points", "seed", "ranges"])?;
        let n = s.req("points")?.int()?;
        let seed = s.req("seed")?.int()?;
        let rf = s.req("ranges")?;
        let ranges: Vec<(f64, f64)> = rf
            .list()
            .iter()
            .map(|r| {
                let (a, b) = r.split_once(':').ok_or_else(|| rf.err("expected a:b"))?;
                let a: f64 = a.trim().parse().map_err(|_| rf.err(format!("bad bound `{}`", a)))?;
                let b: f64 = b.trim().parse().map_err(|_| rf.err(format!("bad bound `{}`", b)))?;
                if a > b { Err(rf.err("empty range")) } else { Ok((a, b)) }
            })
            .collect::<Result<_, _>>()?;
        if ranges.len() != fam.params.len() {
            return Err(rf.err(format!("expected {} ranges", fam.params.len())).into());
        }
        for (params, r) in sample_points(&fam, &dirs, &ranges, n as usize, seed as u64) {
            checks.push(check(&format!("sample-{}", samples.len()), r.residual < tol, format!("max |dG| = {:e}", r.residual)));
            samples.push(json!({"params": params, "residual": r.residual, "dg": r.dg.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()}));
        }
        if samples.len() < n as usize {
            checks.push(check("samples", false, format!("only {} of {} admissible points", samples.len(), n)));
        }
    }
    let results = json!({
        "params": fam.params,
        "directions": dirs,
        "base": morse_json(&base),
        "samples": samples,
    });
    Ok((checks, results))
}

/// Seeded parameter points, skipping ill-conditioned ones (bounded attempts).
pub fn sample_points(
    fam: &MorseFamily,
    dirs: &[usize],
    ranges: &[(f64, f64)],
    n: usize,
    seed: u64,
) -> Vec<(Vec<f64>, MorseReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..20 * n {
        if out.len() == n {
            break;
        }
        let p: Vec<f64> = ranges.iter().map(|&(a, b)| if a == b { a } else { rng.gen_range(a..b) }).collect();
        if let Ok(r) = numeric_morse_pipeline(&fam.with_params(p.clone()), dirs) {
            out.push((p, r));
        }
    }
    out
}

// ---------------------------------------------------------------------------------------
// DM flow

fn dmflow_example(doc: &Document, order: i64, cfg: &RunConfig) -> Result<(Vec<Check>, Value), CliError> {
    doc.only(&["example", "dmflow"])?;
    let s = doc.section("dmflow")?;
    s.only(&["t", "window"])?;
    let tf = s.req("t")?;
    let withq = Registry::new(&["q"]);
    let ts = tf.series_list(&withq, "q", order, ';')?;
    let ts: Vec<QSeries> = ts
        .iter()
        .map(|x| x.try_map_coeffs(|c| c.constant_value().ok_or_else(|| tf.err("coefficients must be rational"))))
        .collect::<Result<_, _>>()?;
    let t = DescendantSeries::new(ts);
    if !t.support_ok() {
        return Err(tf.err("outside the supported regime: need t_i in (q) for i > 0 or t_0 in (q), and t_1(0) != 1").into());
    }
    let lo = match cfg.hbar_window {
        Some((a, _)) => a,
        None => s.get("window").map(|f| f.int()).transpose()?.unwrap_or(-3),
    };
    if lo > -1 {
        return Err(CliError::InvalidConfig("the DM window needs at least one negative power".into()));
    }
    let p = dm_potentials(&t, order, lo)?;
    let o = ro(order);
    let eq = |a: &QSeries, b: &QSeries| a.truncate_q(&o) == b.truncate_q(&o);
    let mut checks = vec![
        check("mu", eq(&p.mu, &p.u.scale(&rat(1, 24))), "mu = u/24"),
        check("nu", eq(&p.nu, &p.delta.log()?.scale(&rat(1, 24))), "nu = log(delta)/24"),
    ];
    let defect = p.v_identity_defect()?;
    let worst = defect.coeffs.iter().find(|(_, s)| !s.truncate_q(&o).is_zero()).map(|(k, _)| *k);
    checks.push(check("v-identity", worst.is_none(), worst.map(|(a, b)| format!("x^{} y^{}", a, b)).unwrap_or_default()));
    checks.push(check("string-flow", p.flowed.coeff(0).is_zero(), "t_0 vanishes after the flow"));
    let jet: Map<String, Value> = p.s.coeffs().map(|(k, v)| (format!("hbar^{}", k), series(&v.truncate_q(&o), Q))).collect();
    let v: Map<String, Value> = p
        .v
        .window(lo)
        .coeffs
        .iter()
        .map(|((a, b), s)| (format!("x^{} y^{}", a, b), series(&s.truncate_q(&o), Q)))
        .collect();
    let results = json!({
        "tau_star": series(&p.tau_star.truncate_q(&o), Q),
        "u": series(&p.u.truncate_q(&o), Q),
        "delta": series(&p.delta.truncate_q(&o), Q),
        "mu": series(&p.mu.truncate_q(&o), Q),
        "nu": series(&p.nu.truncate_q(&o), Q),
        "s": jet,
        "v": v,
        "window": lo,
    });
    Ok((checks, results))
}

//! Regression suite: one entry per acceptance criterion.
//!
//! Criteria run on scoped threads; results are collected in criterion order.

use std::collections::BTreeMap;

use froblab_core::dmflow::{dm_potentials, string_flow, DescendantSeries};
use froblab_core::exact::{rat, RatFunc, Rational};
use froblab_core::frame::{CanonicalFrame, EigenOptions};
use froblab_core::frobenius::FrobeniusData;
use froblab_core::series::matrix::SMat;
use froblab_core::singularity::{a2_frame, numeric_morse_pipeline, stationary_phase_r, Jet4, MorseFamily};
use froblab_core::toric::{hypergeom_i_concave, quantum_relation_extract, toric_pipeline, yukawa_assembly, ToricBundleData};
use froblab_core::{OneForm, QSeries, Series, EXACT};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::Document;
use crate::examples::{bundled, frame_run, sample_points, FrameRun};
use crate::toric_config::toric_from_document;
use crate::CliError;

/// Test hook: corrupts one intermediate quantity so that the dependent criteria fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Perturbation {
    #[default]
    None,
    /// Adds 1 to `R(0)_{00}` of both CP^1 frames (criteria 1, 2, 8).
    R0Diagonal,
    /// Adds `q^2` to the extracted conifold relation (criteria 5, 6).
    ConifoldRelation,
    /// Drops the last multiple cover from the Yukawa assembly (criterion 7).
    Yukawa,
}

impl Perturbation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Perturbation::None),
            "r0-diagonal" => Some(Perturbation::R0Diagonal),
            "conifold-relation" => Some(Perturbation::ConifoldRelation),
            "yukawa" => Some(Perturbation::Yukawa),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteSummary {
    pub order: Option<i64>,
    pub results: Vec<CriterionResult>,
}

impl SuiteSummary {
    pub fn ok(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn to_value(&self) -> Value {
        json!({
            "schema": crate::report::SCHEMA,
            "suite": "acceptance",
            "order": self.order,
            "ok": self.ok(),
            "criteria": self.results.iter().map(|r| json!({"id": r.id, "title": r.title, "pass": r.pass, "detail": r.detail})).collect::<Vec<_>>(),
        })
    }

    /// One line per criterion.
    pub fn lines(&self) -> String {
        self.results
            .iter()
            .map(|r| format!("criterion {:>2} {} {}: {}\n", r.id, if r.pass { "PASS" } else { "FAIL" }, r.title, r.detail))
            .collect()
    }
}

type Outcome = Result<(bool, String), CliError>;

pub const TITLES: [&str; 10] = [
    "CP1 elliptic form",
    "equivariant CP1",
    "A2",
    "A3 numeric",
    "conifold genus 0",
    "conifold genus 1",
    "Yukawa identity",
    "ladder identities",
    "DM potentials",
    "oracle agreement",
];

/// Runs criterion `id` (1-based). `order` overrides the stated truncation orders.
pub fn criterion(id: usize, order: Option<i64>, perturb: Perturbation) -> CriterionResult {
    let o6 = order.unwrap_or(6);
    let o8 = order.unwrap_or(8);
    let r: Outcome = match id {
        1 => c1_cp1(o6, perturb),
        2 => c2_equivariant(o6, perturb),
        3 => c3_a2(),
        4 => c4_a3(),
        5 => c5_conifold_genus0(o8, perturb),
        6 => c6_conifold_genus1(o8, perturb),
        7 => c7_yukawa(o8, perturb),
        8 => c8_ladders(o6, perturb),
        9 => c9_dm(o6),
        10 => c10_oracles(o6),
        _ => Ok((false, format!("no criterion {}", id))),
    };
    let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {}", e)));
    CriterionResult { id, title: TITLES.get(id - 1).copied().unwrap_or("?"), pass, detail }
}

/// Runs all criteria; the summary lists them in order.
pub fn regression_suite(order: Option<i64>, perturb: Perturbation) -> SuiteSummary {
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = (1..=10).map(|id| s.spawn(move || criterion(id, order, perturb))).collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(i, h)| {
                h.join().unwrap_or_else(|_| CriterionResult {
                    id: i + 1,
                    title: TITLES[i],
                    pass: false,
                    detail: "panicked".into(),
                })
            })
            .collect()
    });
    SuiteSummary { order, results }
}

// ---------------------------------------------------------------------------------------

fn ro(o: i64) -> Rational {
    Rational::from_integer(o.into())
}

fn same(a: &Series, b: &Series, o: i64) -> bool {
    a.truncate_q(&ro(o)) == b.truncate_q(&ro(o))
}

/// Collects failed sub-checks.
struct Tally(Vec<String>, usize);

impl Tally {
    fn new() -> Self {
        Tally(Vec::new(), 0)
    }
    fn expect(&mut self, ok: bool, what: &str) {
        self.1 += 1;
        if !ok {
            self.0.push(what.to_string());
        }
    }
    fn finish(self) -> Outcome {
        if self.0.is_empty() {
            Ok((true, format!("{} checks", self.1)))
        } else {
            Ok((false, format!("failed: {}", self.0.join("; "))))
        }
    }
}

fn cp1_run(name: &str, order: i64, levels: usize, perturb: Perturbation) -> Result<FrameRun, CliError> {
    let doc = Document::parse(bundled(name)?)?;
    let mut run = frame_run(&doc, order, levels, 6)?;
    if perturb == Perturbation::R0Diagonal {
        let r = &mut run.ladder.levels[0][0][0];
        *r = r.try_add(&Series::one(1))?;
        run.dg = match &run.c_minus1 {
            None => froblab_core::elliptic::elliptic_dg_conformal(&run.frame, &run.ladder.levels[0])?,
            Some(c) => froblab_core::elliptic::elliptic_dg_equivariant(&run.frame, &run.ladder.levels[0], c)?,
        };
    }
    Ok(run)
}

fn dlogq_only(c: Rational) -> OneForm<RatFunc> {
    OneForm::new(vec![Series::zero(1, EXACT), Series::constant(1, RatFunc::constant(c))])
}

fn half_power(k: i64, c: Rational) -> Series {
    Series::monomial(1, 2, vec![k], RatFunc::constant(c), EXACT)
}

fn c1_cp1(order: i64, perturb: Perturbation) -> Outcome {
    let run = cp1_run("cp1", order, 1, perturb)?;
    let f = &run.frame;
    let o = ro(order);
    let mut t = Tally::new();
    t.expect(run.dg.total.truncate_q(&o) == dlogq_only(rat(-1, 24)).truncate_q(&o), "dG = -(1/24) dlog q");
    t.expect(f.split.lattice == 2, "lattice 2");
    let plus = (0..2).find(|&a| f.e[a] == RatFunc::from_int(2)).unwrap_or(0);
    let minus = 1 - plus;
    t.expect(same(&f.delta[plus], &half_power(1, rat(2, 1)), order), "Delta_+ = 2 q^(1/2)");
    t.expect(same(&f.delta[minus], &half_power(1, rat(-2, 1)), order), "Delta_- = -2 q^(1/2)");
    let r = &run.ladder.levels[0];
    t.expect(same(&r[plus][minus], &half_power(-1, rat(1, 8)), order), "R_{+-} = q^(-1/2)/8");
    t.finish()
}

/// `Psi` in the fixed-point basis `phi_pm = (l +- p)/(2l)` against `z = (1 + q/l^2)^{1/4}`.
fn psi_in_fixed_point_basis(psi: &SMat<RatFunc>, l: &RatFunc) -> Result<SMat<RatFunc>, CliError> {
    let mut out = Vec::new();
    for sign in [1, -1] {
        let mut row = Vec::new();
        for a in 0..2 {
            let v = psi[0][a].try_add(&psi[1][a].scale(&l.scale(&rat(sign, 1))))?;
            row.push(v);
        }
        out.push(row);
    }
    Ok(out)
}

fn c2_equivariant(order: i64, perturb: Perturbation) -> Outcome {
    let run = cp1_run("cp1-equivariant", order, 1, perturb)?;
    let f = &run.frame;
    let l = RatFunc::var(&run.reg, "l")?;
    let o = ro(order);
    let mut t = Tally::new();
    let plus = (0..2).find(|&a| f.split.eigenvalues[a][1].constant_term() == l).unwrap_or(0);
    let minus = 1 - plus;
    // z = (1 + q/l^2)^{1/4}
    let big = order + 2;
    let base = Series::one(1).try_add(&Series::q(1, 0).scale(&(&l * &l).recip()?))?.truncate(big);
    let z = base.pow(&rat(1, 4))?;
    let zi = z.inv()?;
    let half = RatFunc::constant(rat(1, 2));
    let expect_plus = [z.try_add(&zi)?.scale(&half), z.try_sub(&zi)?.scale(&half)];
    let expect_minus = [zi.try_sub(&z)?.scale(&half), (-&z).try_sub(&zi)?.scale(&half)];
    let pf = psi_in_fixed_point_basis(&f.psi, &l)?;
    let col = |a: usize| [pf[0][a].clone(), pf[1][a].clone()];
    let up_to_sign = |got: [Series; 2], want: &[Series; 2]| {
        let direct = (0..2).all(|k| same(&got[k], &want[k], order));
        let flipped = (0..2).all(|k| same(&-&got[k], &want[k], order));
        direct || flipped
    };
    t.expect(up_to_sign(col(plus), &expect_plus), "Psi column + in terms of z");
    t.expect(up_to_sign(col(minus), &expect_minus), "Psi column - in terms of z");
    // R_{++} = -1/(16 P) + l^2/(48 P^3) + 1/(24 l), P = (l^2 + q)^{1/2}
    let p = Series::constant(1, &l * &l).try_add(&Series::q(1, 0))?.truncate(big).sqrt()?;
    let pinv = p.inv()?;
    let rpp = pinv
        .scale(&RatFunc::constant(rat(-1, 16)))
        .try_add(&pinv.powi(3)?.scale(&(&l * &l).scale(&rat(1, 48))))?
        .try_add(&Series::constant(1, l.recip()?.scale(&rat(1, 24))))?;
    let r = &run.ladder.levels[0];
    t.expect(same(&r[plus][plus], &rpp, order), "R_{++} closed form");
    t.expect(same(&r[minus][minus], &-&rpp, order), "R_{--} = -R_{++}");
    t.expect(r[plus][plus].constant_term().is_zero(), "R_{++}(q = 0) = 0");
    t.expect(run.dg.total.truncate_q(&o) == dlogq_only(rat(-1, 24)).truncate_q(&o), "dG = -(1/24) dlog q");
    t.finish()
}

fn c3_a2() -> Outcome {
    let mut t = Tally::new();
    for (t0, t1) in [(rat(0, 1), rat(3, 1)), (rat(5, 1), rat(1, 1)), (rat(-2, 3), rat(12, 1))] {
        let f = a2_frame(&t0, &t1)?;
        let tag = format!("(t0, t1) = ({}, {})", t0, t1);
        let cube = f.delta[0].clone() * f.delta[0].clone() * f.delta[0].clone();
        let minus_u_over_4 = -f.u_diff.clone() / RatFunc::from_int(4);
        // Delta = 6 (-u/4)^{1/3}
        t.expect(cube == RatFunc::from_int(216) * minus_u_over_4, &format!("Delta^3 at {}", tag));
        let r = RatFunc::from_int(-1) / (RatFunc::from_int(36) * f.u_diff.clone());
        t.expect(f.r[0] == r, &format!("R = -1/(36u) at {}", tag));
        t.expect(f.dg_du.is_zero(), &format!("dG = 0 at {}", tag));
    }
    let num = numeric_morse_pipeline(&MorseFamily::a2(0.0, 3.0), &[0, 1])?;
    t.expect(num.residual < 1e-9, &format!("numeric |dG| = {:e} at t1 = 3", num.residual));
    t.finish()
}

fn c4_a3() -> Outcome {
    let fam = MorseFamily::a3(-2.0, 0.3);
    let pts = sample_points(&fam, &[0, 1, 2], &[(0.0, 0.0), (-1.0, 1.0), (-3.0, 3.0)], 5, 41);
    let mut t = Tally::new();
    t.expect(pts.len() == 5, "5 admissible points");
    let worst = pts.iter().map(|(_, r)| r.residual).fold(0.0, f64::max);
    for (p, r) in &pts {
        t.expect(r.residual < 1e-8, &format!("|dG| = {:e} at {:?}", r.residual, p));
    }
    let (ok, d) = t.finish()?;
    Ok((ok, format!("{}, max |dG| = {:e}", d, worst)))
}

/// Independent expansion of `prod_{m<d} (p + m h)^2 / prod_{m=1..d} (p - l + m h)(p + l + m h)`
/// in `H = Q(l)[p]/(p^2 - l^2)`, as coefficients of `h^k` for `k` from `0` down to `lo`.
fn conifold_term_oracle(d: i64, l: &RatFunc, lo: i64) -> BTreeMap<i64, [RatFunc; 2]> {
    // elements a + b p; series in 1/h as maps k -> element
    type E = [RatFunc; 2];
    let l2 = l * l;
    let mul = |x: &E, y: &E| -> E { [&x[0] * &y[0] + &(&x[1] * &y[1]) * &l2, &x[0] * &y[1] + &x[1] * &y[0]] };
    let zero = || [RatFunc::zero(), RatFunc::zero()];
    let mul_series = |a: &BTreeMap<i64, E>, b: &BTreeMap<i64, E>| {
        let mut out: BTreeMap<i64, E> = BTreeMap::new();
        for (i, x) in a {
            for (j, y) in b {
                if i + j < lo {
                    continue;
                }
                let e = out.entry(i + j).or_insert_with(zero);
                let m = mul(x, y);
                *e = [&e[0] + &m[0], &e[1] + &m[1]];
            }
        }
        out
    };
    let mut acc: BTreeMap<i64, E> = BTreeMap::from([(0, [RatFunc::one(), RatFunc::zero()])]);
    for m in 0..d {
        // (p + m h)^2 = p^2 + 2 m p h + m^2 h^2; here h^1 entries are allowed transiently
        let mut f: BTreeMap<i64, E> = BTreeMap::new();
        f.insert(0, [l2.clone(), RatFunc::zero()]);
        if m > 0 {
            f.insert(1, [RatFunc::zero(), RatFunc::from_int(2 * m)]);
            f.insert(2, [RatFunc::from_int(m * m), RatFunc::zero()]);
        }
        acc = mul_series(&acc, &f);
    }
    for m in 1..=d {
        for s in [-1, 1] {
            // 1/(a + m h) = sum_k (-a)^k / (m h)^{k+1}, a = p + s l
            let a: E = [l.scale(&rat(s, 1)), RatFunc::one()];
            let mut g: BTreeMap<i64, E> = BTreeMap::new();
            let mut pw: E = [RatFunc::one(), RatFunc::zero()];
            let mi = RatFunc::from_int(m).recip().expect("nonzero");
            let mut c = mi.clone();
            for k in 0..(-lo + 2 * d + 4) {
                g.insert(-k - 1, [&pw[0] * &c, &pw[1] * &c]);
                pw = mul(&pw, &[-a[0].clone(), -a[1].clone()]);
                c = &c * &mi;
            }
            acc = mul_series(&acc, &g);
        }
    }
    acc.into_iter().filter(|(k, _)| *k <= 0 && *k >= lo).collect()
}

fn conifold_data() -> Result<ToricBundleData, CliError> {
    toric_from_document(&Document::parse(bundled("conifold")?)?)
}

fn c5_conifold_genus0(order: i64, perturb: Perturbation) -> Outcome {
    let data = conifold_data()?;
    let l = RatFunc::var(&data.reg, "l")?;
    let lo = -4;
    let i = hypergeom_i_concave(&data, order, (lo, 0))?;
    let mut t = Tally::new();
    for d in 1..=5.min(order - 1) {
        let want = conifold_term_oracle(d, &l, lo);
        let ok = (lo..=0).all(|k| {
            let got = i.coeff(k);
            let w = want.get(&k).cloned().unwrap_or_else(|| [RatFunc::zero(), RatFunc::zero()]);
            got[0].coeff(&[d]) == w[0] && got[1].coeff(&[d]) == w[1]
        });
        t.expect(ok, &format!("I term d = {}", d));
    }
    let rel = quantum_relation_extract(&i, &data, &[0, 1], order)?;
    let mut pp = rel.product[0].clone();
    if perturb == Perturbation::ConifoldRelation {
        pp = pp.try_add(&Series::monomial(1, 1, vec![2], RatFunc::one(), EXACT))?;
    }
    let o = ro(order);
    let one_minus_q = (Series::one(1) - Series::q(1, 0)).truncate_q(&o);
    let want = one_minus_q.inv()?.scale(&(&l * &l));
    t.expect(same(&pp, &want, order), "p^2 = l^2/(1 - q)");
    t.expect(rel.product[1].is_zero(), "no p-component");
    t.finish()
}

fn c6_conifold_genus1(order: i64, perturb: Perturbation) -> Outcome {
    let data = conifold_data()?;
    let mut rep = toric_pipeline(&data, order)?;
    if perturb == Perturbation::ConifoldRelation {
        // rebuild the frame from the perturbed relation
        let pp = rep.relation.product[0].try_add(&Series::monomial(1, 1, vec![2], RatFunc::one(), EXACT))?;
        let fd = FrobeniusData::from_relation("p", &[-&pp, Series::zero(1, EXACT)], data.localization_pairing()?)?;
        let frame = CanonicalFrame::build(&fd, order + 2, &EigenOptions::default())?;
        let lad = frame.r_ladder(1, &froblab_core::frame::Normalization::ModQ)?;
        rep.dg = froblab_core::elliptic::elliptic_dg_equivariant(&frame, &lad.levels[0], &rep.c_minus1)?;
    }
    let o = ro(order);
    let mut t = Tally::new();
    t.expect(rep.dg.total.truncate_q(&o) == rep.expected_dg.truncate_q(&o), "dG = (1/8 + q/(12(1-q))) dlog q");
    let coeffs: Vec<RatFunc> = (0..order).map(|k| rep.dg.total.dlogq(0).coeff(&[k])).collect();
    let want: Vec<RatFunc> =
        (0..order).map(|k| RatFunc::constant(if k == 0 { rat(1, 8) } else { rat(1, 12) })).collect();
    t.expect(coeffs == want, "coefficients 1/8, 1/12, 1/12, ...");
    // integral of the d >= 1 part
    let tail = OneForm::new(vec![
        rep.dg.total.dt0().clone(),
        rep.dg.total.dlogq(0).try_sub(&Series::constant(1, RatFunc::constant(rat(1, 8))))?,
    ]);
    let g = tail.integrate()?.series().clone();
    t.expect(same(&g, &rep.expected_genus1, order), "integral = -(1/12) log(1 - q)");
    t.expect(rep.residual.first_nonzero.is_none(), "ladder residual");
    t.finish()
}

fn c7_yukawa(order: i64, perturb: Perturbation) -> Outcome {
    let o = ro(order);
    let q = QSeries::q(1, 0);
    let mut t = Tally::new();
    for big_d in 1..=3i64 {
        let mut y = yukawa_assembly(big_d, order);
        if perturb == Perturbation::Yukawa {
            let last = (order - 1) / big_d * big_d;
            y = y.try_sub(&QSeries::monomial(1, 1, vec![last], y.coeff(&[last]), EXACT))?;
        }
        // D^3 Q^D / (1 - Q^D)
        let qd = QSeries::monomial(1, 1, vec![big_d], Rational::one(), EXACT);
        let closed = qd.scale(&rat(big_d.pow(3), 1)).try_mul(&(QSeries::one(1) - qd.clone()).truncate_q(&o).inv()?)?;
        t.expect(y.truncate_q(&o) == closed.truncate_q(&o), &format!("D^3 Q^D/(1 - Q^D) for D = {}", big_d));
        // theta^3 of the multiple-cover primitive sum_k Q^{kD}/k^3
        let mut prim = QSeries::zero(1, order);
        let mut k = 1;
        while k * big_d < order {
            prim = prim.try_add(&QSeries::monomial(1, 1, vec![k * big_d], rat(1, k.pow(3)), EXACT))?;
            k += 1;
        }
        let th3 = prim.theta(0).theta(0).theta(0);
        t.expect(y.truncate_q(&o) == th3.truncate_q(&o), &format!("theta^3 of the cover primitive for D = {}", big_d));
    }
    // for D = 1: sum_d q^d = theta(-log(1 - q)) and theta^3 of it is sum_d d^3 q^d
    let y1 = yukawa_assembly(1, order);
    let mlog = (QSeries::one(1) - q).truncate_q(&o).log()?.scale(&rat(-1, 1));
    t.expect(y1.truncate_q(&o) == mlog.theta(0).truncate_q(&o), "theta(-log(1 - q))");
    let cubes = QSeries::from_coeffs((0..order).map(|d| rat(d.pow(3), 1)), order);
    t.expect(y1.theta(0).theta(0).theta(0).truncate_q(&o) == cubes, "sum d^3 q^d");
    t.finish()
}

fn c8_ladders(order: i64, perturb: Perturbation) -> Outcome {
    let mut t = Tally::new();
    for name in ["cp1", "cp1-equivariant"] {
        let run = cp1_run(name, order, 2, perturb)?;
        let f = &run.frame;
        let rep = f.assemble_and_verify(&run.ladder)?;
        t.expect(rep.first_nonzero.is_none() && rep.checked_through >= 1, &format!("{}: residual through hbar^1", name));
        t.expect(f.symmetry_check(&run.ladder.levels[0]).is_ok(), &format!("{}: R(0) symmetric", name));
        let dr = f.dr_from_hessians()?;
        let ok = dr.iter().zip(&run.ladder.diagonal_forms[0]).all(|(a, b)| a.truncate_q(&ro(order)) == b.truncate_q(&ro(order)));
        t.expect(ok, &format!("{}: dR from Hessians", name));
        // the diagonal forms must integrate to the diagonal of R(0) up to its constant
        let ok = (0..f.rank()).all(|a| {
            let d = run.ladder.levels[0][a][a].clone();
            let from = OneForm::new(vec![Series::zero(1, EXACT), d.theta(0)]);
            from.truncate_q(&ro(order)) == dr[a].truncate_q(&ro(order))
        });
        t.expect(ok, &format!("{}: d R(0)_aa equals the Hessian 1-form", name));
    }
    t.finish()
}

fn random_descendant(rng: &mut ChaCha8Rng, n: usize, len: usize) -> DescendantSeries<Rational> {
    let t = (0..n)
        .map(|_| {
            let cs: Vec<Rational> =
                std::iter::once(Rational::zero()).chain((0..len).map(|_| rat(rng.gen_range(-4..5), 2))).collect();
            QSeries::from_coeffs(cs, EXACT)
        })
        .collect();
    DescendantSeries::new(t)
}

fn c9_dm(order: i64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let o = ro(order);
    let mut t = Tally::new();
    for case in 0..20 {
        let n = rng.gen_range(1..5);
        let ts = random_descendant(&mut rng, n, order as usize);
        let p = dm_potentials(&ts, order, -3)?;
        t.expect(p.mu.truncate_q(&o) == p.u.scale(&rat(1, 24)).truncate_q(&o), &format!("case {}: mu", case));
        t.expect(p.nu.truncate_q(&o) == p.delta.log()?.scale(&rat(1, 24)).truncate_q(&o), &format!("case {}: nu", case));
        let defect = p.v_identity_defect()?;
        t.expect(defect.coeffs.values().all(|s| s.truncate_q(&o).is_zero()), &format!("case {}: (x+y) v", case));
        let (again, _) = string_flow(&p.flowed, order)?;
        t.expect(again.is_zero(), &format!("case {}: flow fixed point", case));
    }
    t.finish()
}

/// Gaussian moments: expand `exp(cubic + quartic)` times the amplitude and integrate term by term.
pub fn gaussian_oracle(j: &Jet4<Rational>) -> Rational {
    type P = BTreeMap<(u32, i32), Rational>;
    let mul = |a: &P, b: &P| {
        let mut out = P::new();
        for ((za, ha), ca) in a {
            for ((zb, hb), cb) in b {
                *out.entry((za + zb, ha + hb)).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        out
    };
    let mut g = P::new();
    g.insert((3, -1), &j.f3 / rat(6, 1));
    g.insert((4, -1), &j.f4 / rat(24, 1));
    let amp = P::from([((0, 0), j.w0.clone()), ((1, 0), j.w1.clone()), ((2, 0), &j.w2 / rat(2, 1))]);
    let mut series = amp.clone();
    let mut gp = P::from([((0, 0), Rational::one())]);
    let mut fact = Rational::one();
    for n in 1..=4 {
        gp = mul(&gp, &g);
        fact *= rat(n, 1);
        for (k, c) in mul(&gp, &amp) {
            *series.entry(k).or_insert_with(Rational::zero) += c / &fact;
        }
    }
    // <z^{2k}> = (2k-1)!! (-hbar/f2)^k
    let s = -(Rational::one() / &j.f2);
    let mut acc = Rational::zero();
    for ((z, h), c) in series {
        if z % 2 == 1 || h + (z / 2) as i32 != 1 {
            continue;
        }
        let k = (z / 2) as i64;
        let dfact = (1..=k).fold(Rational::one(), |a, i| a * rat(2 * i - 1, 1));
        acc += c * dfact * (0..k).fold(Rational::one(), |a, _| a * &s);
    }
    acc / &j.w0
}

fn cp_n(n: usize) -> Result<FrobeniusData<Rational>, CliError> {
    let mut rel = vec![QSeries::zero(1, EXACT); n + 1];
    rel[0] = -QSeries::q(1, 0);
    let eta: Vec<Vec<Rational>> =
        (0..=n).map(|i| (0..=n).map(|j| if i + j == n { Rational::one() } else { Rational::zero() }).collect()).collect();
    Ok(FrobeniusData::from_relation("p", &rel, eta)?)
}

fn c10_oracles(order: i64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut t = Tally::new();
    let mut r = |lo: i64, hi: i64| rat(rng.gen_range(lo..hi), rng.gen_range(1..9));
    let mut agree = 0;
    for _ in 0..100 {
        let mut nz = || loop {
            let x = r(-40, 40);
            if !x.is_zero() {
                break x;
            }
        };
        let (f2, w0) = (nz(), nz());
        let j = Jet4 { u: Rational::zero(), f2, f3: r(-40, 40), f4: r(-40, 40), w0, w1: r(-40, 40), w2: r(-40, 40) };
        if stationary_phase_r(&j)? == gaussian_oracle(&j) {
            agree += 1;
        }
    }
    t.expect(agree == 100, &format!("stationary phase vs Gaussian moments: {}/100", agree));
    let cp1 = cp_n(1)?;
    let cp2 = cp_n(2)?;
    t.expect(cp1.wdvv_check(order).is_ok(), "WDVV on CP1");
    t.expect(cp2.wdvv_check(order).is_ok(), "WDVV on CP2");
    // perturb one structure constant: p * p gains a q-multiple of p
    let mut bad = cp2.clone();
    let z = QSeries::q(1, 0);
    bad.mult[1][1][1] = bad.mult[1][1][1].try_add(&z)?;
    match bad.wdvv_check(order) {
        Ok(()) => t.expect(false, "perturbed tensor rejected"),
        Err(w) => {
            // re-derive the failure for the reported triple
            let idx = |s: &str| bad.labels.iter().position(|l| l == s);
            let (a, b, c) = (idx(&w.triple.0), idx(&w.triple.1), idx(&w.triple.2));
            let ok = match (a, b, c) {
                (Some(a), Some(b), Some(c)) => {
                    let e = |k: usize| -> Vec<QSeries> {
                        (0..3).map(|i| if i == k { QSeries::one(1) } else { QSeries::zero(1, EXACT) }).collect()
                    };
                    let lhs = bad.quantum_product(&bad.quantum_product(&e(a), &e(b))?, &e(c))?;
                    let rhs = bad.quantum_product(&e(a), &bad.quantum_product(&e(b), &e(c))?)?;
                    let o = ro(order);
                    lhs.iter().zip(&rhs).any(|(x, y)| x.truncate_q(&o) != y.truncate_q(&o))
                }
                _ => false,
            };
            t.expect(ok, &format!("witness ({}, {}, {}) is a real associativity failure", w.triple.0, w.triple.1, w.triple.2));
        }
    }
    t.finish()
}

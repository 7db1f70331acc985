use pqcartan::cocycles::{identity_suites, Functional};
use pqcartan::counting::{
    ball_values, comparison_by_shell, cone_samples, curve_from_values, default_functional,
    default_window, equidistribution_experiment, estimate_exponent, gromov_comparison, ratio_trend,
    sandwich, uniform_grid, weyl_subset, window_sensitivity, CountCurve, Statistic,
};
use pqcartan::flags::{o_generic, Flag};
use pqcartan::freegroup::{
    anosov_gap_check, sample_limit_set, Certificate, LimitSetReport, Rejection, Representation,
    Word,
};
use pqcartan::jsonmat::{self, Scalar};
use pqcartan::numerics::{Element, ScaledMatrix};
use pqcartan::pq_cartan::{pq_project, PqError};
use pqcartan::projections::{cartan, jordan};
use pqcartan::weyl::ChamberA;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Lengths, RunConfig};
use crate::error::{CliError, Exit};
use crate::output::{header, num, nums, Output};

pub struct Ctx {
    pub config: RunConfig,
    pub seed: u64,
    pub cap: u64,
    pub out: Output,
}

pub struct Rep {
    pub rep: Representation,
    pub certificate: Result<Certificate, Rejection>,
}

impl Ctx {
    fn build(&self) -> Result<Rep, CliError> {
        let mut rc = self.config.rep.clone();
        rc.seed = self.seed;
        let built = rc.build()?;
        match &self.config.form {
            None => Ok(Rep {
                rep: built.rep,
                certificate: built.certificate,
            }),
            Some(spec) => {
                let rep = built.rep.with_form(spec.form()?)?;
                let certificate = pqcartan::freegroup::certify(&rep);
                Ok(Rep { rep, certificate })
            }
        }
    }

    /// Representation that must be certified unless the config opts out.
    fn certified(&self) -> Result<Rep, CliError> {
        let r = self.build()?;
        if let Err(rej) = &r.certificate {
            if !self.config.allow_uncertified {
                return Err(
                    CliError::new(Exit::Certification, "representation is not certified")
                        .with_detail(json!(rej.failures)),
                );
            }
        }
        Ok(r)
    }

    fn limit(&self, rep: &Representation) -> LimitSetReport {
        sample_limit_set(
            rep,
            self.config.limit.len,
            self.config.limit.count,
            self.seed,
        )
    }

    fn functional(&self, rep: &Representation) -> Result<Functional, CliError> {
        match self.config.functional(rep.dim())? {
            Some(f) => Ok(f),
            None => Ok(default_functional(rep, 6, self.cap)?),
        }
    }

    fn cylinders(&self, rep: &Representation) -> Result<(Vec<u8>, Vec<u8>), CliError> {
        let (a, b) = self.config.cylinder_letters()?;
        let max = 2 * rep.rank() as u8;
        if a.iter().chain(&b).any(|&l| l >= max) {
            return Err(CliError::config("cylinder uses a letter outside the rank"));
        }
        Ok((a, b))
    }
}

fn signs(s: &[i8]) -> String {
    s.iter().map(|&x| if x > 0 { '+' } else { '-' }).collect()
}

fn certificate_json(c: &Result<Certificate, Rejection>) -> Value {
    match c {
        Ok(c) => json!({ "certified": true, "certificate": c }),
        Err(r) => json!({ "certified": false, "rejection": r.failures }),
    }
}

fn finite_rows(m: &ScaledMatrix, field: pqcartan::numerics::Field) -> Value {
    let full = m.to_matrix();
    if full.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        json!(jsonmat::to_rows(&full, field))
    } else {
        json!({ "log_scale": m.log_scale(), "entries": jsonmat::to_rows(m.entries(), field) })
    }
}

pub fn rep_build(ctx: &Ctx) -> Result<(), CliError> {
    let r = ctx.build()?;
    let rep = &r.rep;
    let limit = ctx.limit(rep);
    let gens: Vec<Value> = rep
        .generator_matrices()
        .iter()
        .map(|m| finite_rows(m, rep.field()))
        .collect();
    let body = json!({
        "representation": {
            "field": rep.field(),
            "d": rep.dim(),
            "signature": rep.form().signature(),
            "rank": rep.rank(),
            "gram": jsonmat::to_rows(rep.form().gram(), rep.field()),
            "generators": gens,
            "meta": rep.meta,
        },
        "certification": certificate_json(&r.certificate),
        "limit_set": {
            "signatures": limit.signatures,
            "non_generic": limit.non_generic,
            "failures": limit.failures,
        },
        "note": "certification at finite word length tests necessary conditions of the Anosov property only",
    });
    ctx.out.json("rep.json", body)?;
    if let Err(rej) = &r.certificate {
        return Err(
            CliError::new(Exit::Certification, rej.to_string()).with_detail(json!(rej.failures))
        );
    }
    Ok(())
}

fn pq_columns(
    o: &pqcartan::forms::Form,
    e: &Element,
    d: usize,
) -> (Vec<String>, String, String, bool) {
    match pq_project(o, e) {
        Ok(r) => (
            nums(&r.b_o.coords),
            signs(&r.eigen_signs),
            "ok".into(),
            false,
        ),
        Err(PqError::NearDegenerate(r)) => (
            nums(&r.b_o.coords),
            signs(&r.eigen_signs),
            "near-degenerate".into(),
            true,
        ),
        Err(PqError::NotInBoG(why)) => (
            vec![String::new(); d],
            String::new(),
            format!("not-in-BoG: {why}"),
            false,
        ),
        Err(e) => (
            vec![String::new(); d],
            String::new(),
            format!("error: {e}"),
            false,
        ),
    }
}

pub fn enumerate(ctx: &Ctx) -> Result<(), CliError> {
    let r = ctx.build()?;
    let rep = &r.rep;
    let d = rep.dim();
    let l = ctx.config.lengths(Lengths { min: 0, max: 6 })?;
    let o = rep.form();
    let rows = rep.fold_ball(
        l.min,
        l.max,
        ctx.cap,
        Vec::new,
        |acc: &mut Vec<Vec<String>>, w, e| {
            let mut row = vec![Word::reduce(w).to_string(), w.len().to_string()];
            row.extend(nums(&cartan(e).coords));
            let (b, s, status, _) = pq_columns(o, e, d);
            row.extend(b);
            row.push(s);
            row.push(status);
            acc.push(row);
        },
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    )?;
    let excluded = rows
        .iter()
        .filter(|r| r[r.len() - 1].starts_with("not-in"))
        .count();
    let degenerate = rows
        .iter()
        .filter(|r| r[r.len() - 1] == "near-degenerate")
        .count();
    let mut h = header(&["word", "length"], "a", d);
    h.extend((1..=d).map(|i| format!("b{i}")));
    h.push("eigen_signs".into());
    h.push("status".into());
    let n = rows.len();
    ctx.out.csv("enumerate.csv", &h, rows)?;
    ctx.out.json(
        "enumerate.json",
        json!({ "lengths": [l.min, l.max], "words": n, "not_in_BoG": excluded, "near_degenerate": degenerate, "certification": certificate_json(&r.certificate) }),
    )
}

pub fn project(ctx: &Ctx) -> Result<(), CliError> {
    let r = ctx.build()?;
    let rep = &r.rep;
    let o = rep.form();
    let d = rep.dim();
    let field = rep.field();
    let mut inputs: Vec<(String, Element)> = Vec::new();
    for (i, m) in ctx.config.matrices.iter().enumerate() {
        let cm = jsonmat::from_rows(m, field)
            .map_err(|e| CliError::config(format!("matrix {i}: {e}")))?;
        if cm.nrows() != d || cm.ncols() != d {
            return Err(CliError::config(format!("matrix {i} is not {d}x{d}")));
        }
        inputs.push((format!("matrix:{i}"), Element::from_complex(cm, field)?));
    }
    for w in &ctx.config.words {
        let word = Word::parse(w).map_err(|e| CliError::config(format!("word {w:?}: {e}")))?;
        if word
            .max_letter()
            .is_some_and(|l| l as usize >= 2 * rep.rank())
        {
            return Err(CliError::config(format!(
                "word {w:?} uses a letter outside the rank"
            )));
        }
        inputs.push((format!("word:{word}"), rep.image(&word)));
    }
    let mut rows = Vec::new();
    let mut results = Vec::new();
    let mut degenerate = 0;
    for (label, e) in &inputs {
        let a = cartan(e);
        let lambda = jordan(e).ok();
        let (b, s, status, deg) = pq_columns(o, e, d);
        degenerate += usize::from(deg);
        let mut row = vec![label.clone()];
        row.extend(nums(&a.coords));
        row.extend(match &lambda {
            Some(l) => nums(&l.coords),
            None => vec![String::new(); d],
        });
        row.extend(b.clone());
        row.push(s.clone());
        row.push(status.clone());
        rows.push(row);
        results.push(json!({
            "input": label,
            "cartan": a.coords,
            "jordan": lambda.map(|l| l.coords),
            "pq_cartan": if b[0].is_empty() { Value::Null } else { json!(b.iter().map(|x| x.parse::<f64>().unwrap_or(f64::NAN)).collect::<Vec<_>>()) },
            "eigen_signs": s,
            "status": status,
        }));
    }
    let mut h = header(&["input"], "a", d);
    h.extend((1..=d).map(|i| format!("lambda{i}")));
    h.extend((1..=d).map(|i| format!("b{i}")));
    h.push("eigen_signs".into());
    h.push("status".into());
    ctx.out.csv("project.csv", &h, rows)?;
    let mut flags = Vec::new();
    let mut flag_rows = Vec::new();
    for (i, cols) in ctx.config.flags.iter().enumerate() {
        let f =
            flag_from(cols, field, d).map_err(|m| CliError::config(format!("flag {i}: {m}")))?;
        let g = o_generic(o, &f);
        let sig = g
            .signature
            .as_ref()
            .map(|s| s.pattern())
            .unwrap_or_default();
        flag_rows.push(vec![
            i.to_string(),
            g.generic.to_string(),
            num(g.margin),
            g.worst_level.to_string(),
            sig.clone(),
        ]);
        flags.push(json!({ "index": i, "generic": g.generic, "margin": g.margin, "worst_level": g.worst_level, "signature": sig }));
    }
    if !flags.is_empty() {
        let h: Vec<String> = ["index", "generic", "margin", "worst_level", "signature"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        ctx.out.csv("flags.csv", &h, flag_rows)?;
    }
    ctx.out.json(
        "project.json",
        json!({ "elements": results, "flags": flags }),
    )?;
    if degenerate > 0 {
        return Err(CliError::new(
            Exit::Numerical,
            format!("{degenerate} input(s) lie near the degenerate locus"),
        ));
    }
    Ok(())
}

fn flag_from(
    cols: &[Vec<Scalar>],
    field: pqcartan::numerics::Field,
    d: usize,
) -> Result<Flag, String> {
    if cols.len() != d || cols.iter().any(|c| c.len() != d) {
        return Err(format!("expected {d} columns of length {d}"));
    }
    Flag::from_columns_json(cols, field).map_err(|e| e.to_string())
}

pub fn cocycle_check(ctx: &Ctx) -> Result<(), CliError> {
    let r = ctx.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let report = identity_suites(r.rep.form(), &mut rng, ctx.config.samples);
    let h: Vec<String> = [
        "identity",
        "samples",
        "skipped",
        "max_deviation",
        "tolerance",
        "pass",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows = report.results.iter().map(|x| {
        vec![
            x.name.clone(),
            x.samples.to_string(),
            x.skipped.to_string(),
            num(x.max_deviation),
            num(x.tolerance),
            x.pass.to_string(),
        ]
    });
    ctx.out.csv("cocycle_check.csv", &h, rows)?;
    ctx.out
        .json("cocycle_check.json", json!({ "report": report }))?;
    if !report.pass {
        let failed: Vec<&str> = report
            .results
            .iter()
            .filter(|x| !x.pass)
            .map(|x| x.name.as_str())
            .collect();
        return Err(CliError::new(
            Exit::Certification,
            format!("identities failed: {}", failed.join(", ")),
        ));
    }
    Ok(())
}

fn fit_summary(curve: &CountCurve, window: (f64, f64)) -> Value {
    let fit = estimate_exponent(curve, window);
    let shifted = (window.0 - 0.5, window.1 - 0.5);
    let sens = window_sensitivity(curve, window, &[-0.5, 0.5]);
    let s0 = sandwich(curve, window).ok();
    let s1 = sandwich(curve, shifted).ok();
    let ratio_change = match (&s0, &s1) {
        (Some(a), Some(b)) => Some((b.ratio - a.ratio).abs() / a.ratio),
        _ => None,
    };
    json!({
        "label": curve.label,
        "window": [window.0, window.1],
        "fit": fit.as_ref().ok(),
        "fit_error": fit.as_ref().err().map(|e| e.to_string()),
        "window_sensitivity": sens.iter().map(|r| r.as_ref().ok().map(|f| f.slope)).collect::<Vec<_>>(),
        "sandwich": s0,
        "sandwich_shifted": s1,
        "sandwich_ratio_change": ratio_change,
        "excluded": curve.excluded,
        "degenerate": curve.degenerate,
        "exact_up_to": curve.exact_up_to,
        "max_len": curve.max_len,
    })
}

pub fn count(ctx: &Ctx) -> Result<(), CliError> {
    let r = ctx.certified()?;
    let rep = &r.rep;
    let l = ctx.config.lengths(Lengths { min: 0, max: 8 })?;
    let names = ctx
        .config
        .statistics
        .clone()
        .unwrap_or_else(|| vec!["norm-cartan".into(), "norm-pq".into()]);
    let needs_phi = names.iter().any(|n| n == "phi-pq") || ctx.config.trend;
    let limit = needs_phi.then(|| ctx.limit(rep));
    let phi = if needs_phi {
        Some(ctx.functional(rep)?)
    } else {
        None
    };
    let mut stats = Vec::new();
    for n in &names {
        stats.push(match n.as_str() {
            "norm-cartan" => Statistic::NormCartan,
            "norm-pq" => Statistic::NormPq,
            "phi-pq" => Statistic::PhiPq {
                phi: phi.clone().expect("functional"),
            },
            other => return Err(CliError::config(format!("unknown statistic {other:?}"))),
        });
    }
    let reference = match &limit {
        Some(lim) => weyl_subset(lim)?.reference,
        // only read by phi-pq
        None => {
            let (p, q) = rep.form().signature();
            let pattern: Vec<i8> = std::iter::repeat_n(1, p)
                .chain(std::iter::repeat_n(-1, q))
                .collect();
            ChamberA::from_pattern(&pattern)
        }
    };
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let points = ctx.config.grid.points.unwrap_or(200).max(2);
    for stat in &stats {
        let v = ball_values(rep, stat, &reference, l.max, ctx.cap)?;
        let top = if v.outer_min.is_finite() {
            v.outer_min
        } else {
            v.values.last().copied().unwrap_or(0.0)
        };
        let grid = uniform_grid(
            ctx.config.grid.start.unwrap_or(0.0),
            ctx.config.grid.stop.unwrap_or(top),
            points,
        );
        let curve = curve_from_values(&stat.label(), &v, grid);
        let window = ctx
            .config
            .window
            .map(|w| (w[0], w[1]))
            .unwrap_or_else(|| default_window(&curve));
        for (t, c) in curve.thresholds.iter().zip(&curve.counts) {
            rows.push(vec![curve.label.clone(), num(*t), c.to_string()]);
        }
        summaries.push(fit_summary(&curve, window));
    }
    ctx.out.csv(
        "counts.csv",
        &["statistic".into(), "threshold".into(), "count".into()],
        rows,
    )?;
    let mut body = json!({ "lengths": [0, l.max], "curves": summaries, "functional": phi.as_ref().map(|f| &f.weights) });
    if ctx.config.trend {
        let lim = limit.as_ref().expect("limit");
        let tr = ratio_trend(
            rep,
            lim,
            phi.as_ref().expect("functional"),
            l.max,
            points,
            ctx.cap,
        )?;
        let rows = tr
            .ratio_thresholds
            .iter()
            .zip(&tr.ratios)
            .map(|(t, x)| vec![num(*t), num(*x)]);
        ctx.out
            .csv("ratios.csv", &["threshold".into(), "ratio".into()], rows)?;
        body["trend"] = json!({
            "entropy": tr.entropy.h,
            "entropy_stderr": tr.entropy.stderr,
            "entropy_window": tr.entropy.window,
            "slope": tr.slope,
            "relative_slope_gap": tr.relative_slope_gap,
            "final_window_variation": tr.final_window_variation,
            "hypotheses": tr.hypotheses,
        });
    }
    ctx.out.json("count.json", body)
}

pub fn cone(ctx: &Ctx) -> Result<(), CliError> {
    let r = ctx.certified()?;
    let rep = &r.rep;
    let d = rep.dim();
    let l = ctx.config.lengths(Lengths { min: 6, max: 8 })?;
    let limit = ctx.limit(rep);
    let report = cone_samples(rep, &limit, l.min, l.max, ctx.cap)?;
    let s = &report.samples;
    let mut rows = Vec::with_capacity(2 * s.words.len());
    for (i, w) in s.words.iter().enumerate() {
        let mut a = vec!["cartan".to_string(), w.clone()];
        a.extend(nums(&s.cartan[i]));
        a.push(String::new());
        rows.push(a);
        let mut b = vec!["pq".to_string(), w.clone()];
        b.extend(nums(&s.pq[i]));
        b.push(s.pq_pattern[i].clone());
        rows.push(b);
    }
    let mut h = header(&["source", "word"], "x", d);
    h.push("signature".into());
    ctx.out.csv("cone.csv", &h, rows)?;
    let cmp = comparison_by_shell(rep, l.min, l.max, ctx.cap)?;
    let rows = cmp.iter().map(|c| {
        vec![
            c.length.to_string(),
            c.words.to_string(),
            num(c.max_deviation),
            c.witness.clone(),
            c.skipped.to_string(),
        ]
    });
    ctx.out.csv(
        "comparison.csv",
        &[
            "length".into(),
            "words".into(),
            "max_deviation".into(),
            "witness".into(),
            "skipped".into(),
        ],
        rows,
    )?;
    ctx.out.json(
        "cone.json",
        json!({
            "lengths": [l.min, l.max],
            "weyl_subset": report.weyl.elements.iter().map(|w| w.one_based()).collect::<Vec<_>>(),
            "reference_chamber": report.weyl.reference,
            "chambers": report.weyl.chambers,
            "limit_signatures": limit.signatures,
            "hausdorff": report.hausdorff,
            "points": s.words.len(),
            "not_in_BoG": report.excluded,
            "comparison": cmp,
        }),
    )
}

pub fn equidistribute(ctx: &Ctx) -> Result<(), CliError> {
    let r = ctx.certified()?;
    let rep = &r.rep;
    let l = ctx.config.lengths(Lengths { min: 2, max: 8 })?;
    let limit = ctx.limit(rep);
    let phi = ctx.functional(rep)?;
    let (a, b) = ctx.cylinders(rep)?;
    let eq =
        equidistribution_experiment(rep, &limit, &phi, l.max, ctx.config.depth, None, ctx.cap)?;
    let mut rows = Vec::new();
    for (k, t) in eq.thresholds.iter().enumerate() {
        for (i, ci) in eq.cylinders.iter().enumerate() {
            for (j, cj) in eq.cylinders.iter().enumerate() {
                rows.push(vec![
                    num(*t),
                    ci.clone(),
                    cj.clone(),
                    num(eq.masses[k][i][j]),
                ]);
            }
        }
    }
    ctx.out.csv(
        "masses.csv",
        &[
            "threshold".into(),
            "minus_cylinder".into(),
            "plus_cylinder".into(),
            "mass".into(),
        ],
        rows,
    )?;
    let g = gromov_comparison(
        rep,
        &limit,
        &phi,
        &a,
        &b,
        ctx.config.endpoints,
        l.min.max(1),
        l.max,
        ctx.cap,
    )?;
    let rows = g.iter().map(|s| {
        vec![
            s.length.to_string(),
            s.words.to_string(),
            num(s.max_deviation),
            num(s.mean_deviation),
            s.witness.clone(),
        ]
    });
    ctx.out.csv(
        "gromov.csv",
        &[
            "length".into(),
            "words".into(),
            "max_deviation".into(),
            "mean_deviation".into(),
            "witness".into(),
        ],
        rows,
    )?;
    ctx.out.json(
        "equidistribute.json",
        json!({
            "functional": phi.weights,
            "entropy": eq.entropy,
            "thresholds": eq.thresholds,
            "cylinders": eq.cylinders,
            "product_defect": eq.product_defect,
            "total_mass": eq.total_mass,
            "skipped": eq.skipped,
            "gromov": { "cylinders": [ctx.config.cylinders.a, ctx.config.cylinders.b], "endpoints": ctx.config.endpoints, "shells": g },
        }),
    )
}

pub fn gap_check(ctx: &Ctx) -> Result<(), CliError> {
    let r = ctx.build()?;
    let l = ctx.config.lengths(Lengths { min: 1, max: 10 })?;
    let g = anosov_gap_check(&r.rep, l.max, ctx.cap)?;
    let rows = g
        .shells
        .iter()
        .map(|s| vec![s.length.to_string(), num(s.min_root), s.witness.clone()]);
    ctx.out.csv(
        "gap_check.csv",
        &["length".into(), "min_root".into(), "witness".into()],
        rows,
    )?;
    ctx.out.json(
        "gap_check.json",
        json!({ "gap_check": g, "certification": certificate_json(&r.certificate) }),
    )?;
    if !g.pass {
        return Err(CliError::new(
            Exit::Certification,
            format!("no linear gap growth (fitted slope {})", g.c),
        ));
    }
    Ok(())
}

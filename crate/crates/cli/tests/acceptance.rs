//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pqcartan::cocycles::identity_suites;
use pqcartan::counting::{
    ball_values, comparison_by_shell, cone_samples, curve_from_values, default_functional,
    default_window, estimate_exponent, gromov_comparison, ratio_trend, sandwich, uniform_grid,
    CountCurve, EndpointFlags, Statistic,
};
use pqcartan::forms::Form;
use pqcartan::freegroup::{
    anosov_gap_check, sample_limit_set, RepConfig, Representation, DEFAULT_WORD_CAP,
};
use pqcartan::numerics::{CMat, Element, Field, ScaledMatrix, C64};
use pqcartan::pq_cartan::{membership, pq_project, NotInBoG, PqError};
use pqcartan::weyl::{ChamberA, WeylElement};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn reference(name: &str) -> Representation {
    let text = std::fs::read_to_string(configs_dir().join(format!("{name}.json"))).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rc: RepConfig = serde_json::from_value(v["rep"].clone()).unwrap();
    let built = rc.build().unwrap();
    assert!(
        built.certificate.is_ok() || name == "rotation_control",
        "{name} must certify"
    );
    built.rep
}

fn standard_chamber(rep: &Representation) -> ChamberA {
    let (p, q) = rep.form().signature();
    let pattern: Vec<i8> = std::iter::repeat_n(1, p)
        .chain(std::iter::repeat_n(-1, q))
        .collect();
    ChamberA::from_pattern(&pattern)
}

/// `exp(Y)` with `Y` uniform in radius in the Frobenius ball of radius
/// `ISOMETRY_RADIUS` of the isometry algebra.
fn bounded_isometry(rng: &mut ChaCha8Rng, o: &Form) -> ScaledMatrix {
    let y = o.sample_algebra(rng, 1.0);
    let y = y.clone() * C64::new(rng.random_range(0.0..ISOMETRY_RADIUS) / y.norm(), 0.0);
    let h = y.exp();
    let h = if o.field() == Field::Real {
        h.map(|z| C64::new(z.re, 0.0))
    } else {
        h
    };
    ScaledMatrix::new(h, o.field()).unwrap()
}

// Recovery accuracy degrades like cond(h)^2 cond(h')^2; radius 3 keeps the
// condition numbers below about 70.
const ISOMETRY_RADIUS: f64 = 3.0;

/// `h w exp(x) h'` with `x` in the closed positive chamber of the slot frame.
fn sample_decomposition(rng: &mut ChaCha8Rng, o: &Form) -> (ScaledMatrix, Vec<f64>) {
    let (p, _) = o.signature();
    let d = o.dim();
    let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = x.iter().sum::<f64>() / d as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = rng.random_range(0.0..5.0);
    x.iter_mut().for_each(|v| *v *= r / n);
    x[..p].sort_by(|a, b| b.total_cmp(a));
    x[p..].sort_by(|a, b| b.total_cmp(a));
    let ws = WeylElement::all(d);
    let w = &ws[rng.random_range(0..ws.len())];
    let h = bounded_isometry(rng, o);
    let h2 = bounded_isometry(rng, o);
    let e = ScaledMatrix::new(
        CMat::from_fn(d, d, |i, k| {
            if i == k {
                C64::new(x[i].exp(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        o.field(),
    )
    .unwrap();
    let wl = ScaledMatrix::new(w.lift(), o.field()).unwrap();
    let g = h
        .multiply(&wl)
        .unwrap()
        .multiply(&e)
        .unwrap()
        .multiply(&h2)
        .unwrap();
    (g, x)
}

fn forms() -> Vec<Form> {
    vec![
        Form::standard(2, 1, Field::Real),
        Form::standard(2, 1, Field::Complex),
        Form::standard(2, 2, Field::Real),
        Form::standard(3, 1, Field::Complex),
        Form::standard(3, 2, Field::Real),
    ]
}

fn c1_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut n = 0;
    for o in forms() {
        for _ in 0..1000 {
            let (g, x) = sample_decomposition(&mut rng, &o);
            let e = Element::from_matrix(&g).unwrap();
            let b = match pq_project(&o, &e) {
                Ok(r) => r.b_o.coords,
                Err(PqError::NearDegenerate(r)) => r.b_o.coords,
                Err(e) => {
                    return Outcome {
                        pass: false,
                        detail: format!("projection failed: {e}"),
                    }
                }
            };
            let err = b
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(err);
            n += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("{n} samples at d = 3, 4, 5, max error {worst:.2e}"),
    }
}

fn c2_membership() -> Outcome {
    let o = Form::standard(2, 1, Field::Real);
    let mut rejected = 0;
    let mut total = 0;
    for i in 0..=400 {
        let two_theta = 0.1 + (std::f64::consts::PI - 0.2) * (i as f64 + 0.5) / 401.0;
        let t = two_theta / 2.0;
        let k = CMat::from_row_slice(
            3,
            3,
            &[t.cos(), 0.0, t.sin(), 0.0, 1.0, 0.0, -t.sin(), 0.0, t.cos()]
                .map(|v| C64::new(v, 0.0)),
        );
        total += 1;
        if matches!(
            membership(&o, &Element::from_complex(k, Field::Real).unwrap()),
            Err(PqError::NotInBoG(NotInBoG::ComplexSpectrum { .. }))
        ) {
            rejected += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut accepted = 0;
    let mut samples = 0;
    for o in forms() {
        for _ in 0..200 {
            let (g, _) = sample_decomposition(&mut rng, &o);
            samples += 1;
            if matches!(
                membership(&o, &Element::from_matrix(&g).unwrap()),
                Ok(()) | Err(PqError::NearDegenerate(_))
            ) {
                accepted += 1;
            }
        }
    }
    Outcome {
        pass: rejected == total && accepted == samples,
        detail: format!("rotations rejected {rejected}/{total}, decomposed samples accepted {accepted}/{samples}"),
    }
}

fn c3_identities() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let required = [
        "cocycle_o",
        "duality",
        "coboundary",
        "gromov_transformation",
        "cross_ratio_gromov",
        "projection_equivariance",
    ];
    for (k, o) in [
        Form::standard(2, 1, Field::Real),
        Form::standard(2, 1, Field::Complex),
    ]
    .iter()
    .enumerate()
    {
        let mut rng = ChaCha8Rng::seed_from_u64(13 + k as u64);
        let report = identity_suites(o, &mut rng, 320);
        let mut worst = 0.0f64;
        for r in &report.results {
            let valid = r.samples - r.skipped;
            if required.contains(&r.name.as_str()) {
                pass &= r.max_deviation <= 1e-8 && valid >= 300;
            }
            pass &= r.pass;
            worst = worst.max(r.max_deviation);
        }
        parts.push(format!(
            "{:?}: {} families, worst {worst:.2e}",
            o.field(),
            report.results.len()
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn c4_comparison(single: &Representation) -> Outcome {
    let shells = comparison_by_shell(single, 4, 12, DEFAULT_WORD_CAP).unwrap();
    let early = shells
        .iter()
        .filter(|s| s.length <= 8)
        .map(|s| s.max_deviation)
        .fold(0.0, f64::max);
    let last = shells.last().unwrap().max_deviation;
    let skipped: u64 = shells.iter().map(|s| s.skipped).sum();
    let words: u64 = shells.iter().map(|s| s.words).sum();
    Outcome {
        pass: last <= 1.1 * early && skipped == 0,
        detail: format!("{words} words, max over shells 4..8 = {early:.4}, shell 12 = {last:.4}, skipped {skipped}"),
    }
}

struct Curves {
    name: &'static str,
    cartan: CountCurve,
    pq: CountCurve,
}

fn curves(name: &'static str, rep: &Representation, len: usize) -> Curves {
    let reference = standard_chamber(rep);
    let make = |stat: Statistic| {
        let v = ball_values(rep, &stat, &reference, len, DEFAULT_WORD_CAP).unwrap();
        curve_from_values(&stat.label(), &v, uniform_grid(0.0, v.outer_min, 400))
    };
    Curves {
        name,
        cartan: make(Statistic::NormCartan),
        pq: make(Statistic::NormPq),
    }
}

fn c5_exponents(all: &[Curves]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in all {
        let a = estimate_exponent(&c.cartan, default_window(&c.cartan)).unwrap();
        let b = estimate_exponent(&c.pq, default_window(&c.pq)).unwrap();
        let gap = (a.slope - b.slope).abs();
        pass &= gap <= 0.05 && c.pq.excluded == 0;
        parts.push(format!("{}: {:.4} vs {:.4}", c.name, a.slope, b.slope));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn c6_sandwich(all: &[Curves]) -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    for c in all {
        for curve in [&c.cartan, &c.pq] {
            let w = default_window(curve);
            let s0 = sandwich(curve, w).unwrap();
            let s1 = sandwich(curve, (w.0 - 0.5, w.1 - 0.5)).unwrap();
            let change = (s1.ratio - s0.ratio).abs() / s0.ratio;
            pass &= s0.ratio.is_finite() && change <= 0.25;
            worst = worst.max(change);
        }
    }
    Outcome {
        pass,
        detail: format!("largest relative change of C2/C1 under a 0.5 shift: {worst:.4}"),
    }
}

fn c7_cone(single: &Representation, two: &Representation) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, rep, expected) in [("single-orbit", single, 1usize), ("two-orbit", two, 2)] {
        let limit = sample_limit_set(rep, 30, 200, 1);
        let report = cone_samples(rep, &limit, 11, 12, DEFAULT_WORD_CAP).unwrap();
        let w = report.weyl.elements.len();
        let has_identity = report.weyl.elements.iter().any(|e| e.is_identity());
        pass &= w == expected && has_identity && report.hausdorff <= 0.05;
        parts.push(format!(
            "{name}: |W| = {w}, Hausdorff {:.4}",
            report.hausdorff
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn c8_gromov(single: &Representation) -> Outcome {
    let limit = sample_limit_set(single, 30, 200, 1);
    let phi = default_functional(single, 6, DEFAULT_WORD_CAP).unwrap();
    let shells = gromov_comparison(
        single,
        &limit,
        &phi,
        &[0],
        &[2],
        EndpointFlags::Cartan,
        6,
        12,
        DEFAULT_WORD_CAP,
    )
    .unwrap();
    // rounding noise allowance for the monotonicity comparison
    let slack = 1e-9;
    let monotone = shells
        .windows(2)
        .all(|w| w[1].max_deviation <= w[0].max_deviation + slack);
    let last = shells.last().unwrap().max_deviation;
    let devs: Vec<String> = shells
        .iter()
        .map(|s| format!("{:.1e}", s.max_deviation))
        .collect();
    Outcome {
        pass: monotone && last <= 0.05,
        detail: format!("shells 6..12 max deviation [{}]", devs.join(", ")),
    }
}

fn c9_trend(single: &Representation) -> Outcome {
    let limit = sample_limit_set(single, 30, 200, 1);
    let phi = default_functional(single, 6, DEFAULT_WORD_CAP).unwrap();
    let tr = ratio_trend(single, &limit, &phi, 14, 400, DEFAULT_WORD_CAP).unwrap();
    Outcome {
        pass: tr.relative_slope_gap <= 0.05 && tr.final_window_variation <= 0.2,
        detail: format!(
            "L = 14: entropy {:.4}, slope {:.4} (relative gap {:.3}), ratio variation {:.3}",
            tr.entropy.h, tr.slope.slope, tr.relative_slope_gap, tr.final_window_variation
        ),
    }
}

fn c10_gap(reps: &[(&str, &Representation)], control: &Representation) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, rep) in reps {
        let g = anosov_gap_check(rep, 10, DEFAULT_WORD_CAP).unwrap();
        pass &= g.pass && g.c > 0.0;
        parts.push(format!("{name} c = {:.3}", g.c));
    }
    let g = anosov_gap_check(control, 10, DEFAULT_WORD_CAP).unwrap();
    pass &= g.c <= 0.0 && !g.pass;
    parts.push(format!("rotation control c = {:.3}", g.c));
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        out.insert(
            e.file_name().to_string_lossy().into_owned(),
            std::fs::read(e.path()).unwrap(),
        );
    }
    out
}

fn c11_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_pqc");
    let tmp = tempfile::tempdir().unwrap();
    let commands: [&[&str]; 8] = [
        &["rep", "build"],
        &["enumerate"],
        &["project"],
        &["cocycle-check"],
        &["count"],
        &["cone"],
        &["equidistribute"],
        &["gap-check"],
    ];
    let mut runs = 0;
    let mut mismatches = Vec::new();
    for cfg in ["single_orbit", "two_orbit", "reducible", "rotation_control"] {
        let path = configs_dir().join(format!("{cfg}.json"));
        for cmd in commands {
            let mut results = Vec::new();
            for threads in ["1", "8"] {
                let out = tmp
                    .path()
                    .join(format!("{cfg}-{}-{threads}", cmd.join("-")));
                let status = Command::new(bin)
                    .args(cmd)
                    .args([
                        "--config",
                        path.to_str().unwrap(),
                        "--threads",
                        threads,
                        "--out",
                        out.to_str().unwrap(),
                        "--json-errors",
                    ])
                    .output()
                    .unwrap();
                results.push((status.status.code(), status.stdout, read_tree(&out)));
                runs += 1;
            }
            if results[0] != results[1] {
                mismatches.push(format!("{cfg}/{}", cmd.join(" ")));
            }
        }
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            format!("{runs} runs, artifacts identical for 1 and 8 workers")
        } else {
            format!("differences in {}", mismatches.join(", "))
        },
    }
}

fn report(
    n: usize,
    name: &str,
    budget: Option<Duration>,
    f: impl FnOnce() -> Outcome,
    failures: &mut usize,
) {
    let t = Instant::now();
    let o = f();
    let dt = t.elapsed();
    let over = budget.is_some_and(|b| dt > b);
    let pass = o.pass && !over;
    if !pass {
        *failures += 1;
    }
    let budget = budget
        .map(|b| format!(", budget {}s", b.as_secs()))
        .unwrap_or_default();
    println!(
        "criterion {n:>2} {name}: {} ({}; {:.1}s{budget})",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        dt.as_secs_f64()
    );
}

fn main() {
    let mut failures = 0;
    let single = reference("single_orbit");
    let two = reference("two_orbit");
    let reducible = reference("reducible");
    let control = reference("rotation_control");
    report(
        1,
        "decomposition recovery",
        Some(Duration::from_secs(30)),
        c1_recovery,
        &mut failures,
    );
    report(
        2,
        "membership dichotomy",
        Some(Duration::from_secs(5)),
        c2_membership,
        &mut failures,
    );
    report(
        3,
        "identity suites",
        Some(Duration::from_secs(60)),
        c3_identities,
        &mut failures,
    );
    report(
        4,
        "comparison boundedness",
        Some(Duration::from_secs(300)),
        || c4_comparison(&single),
        &mut failures,
    );
    let t = Instant::now();
    let all = vec![
        curves("single-orbit", &single, 12),
        curves("two-orbit", &two, 12),
    ];
    let shared = t.elapsed();
    report(
        5,
        "exponent equality",
        Some(Duration::from_secs(600).saturating_sub(shared)),
        || c5_exponents(&all),
        &mut failures,
    );
    report(
        6,
        "sandwich bounds",
        None,
        || c6_sandwich(&all),
        &mut failures,
    );
    report(
        7,
        "cone structure",
        None,
        || c7_cone(&single, &two),
        &mut failures,
    );
    report(
        8,
        "Gromov comparison",
        None,
        || c8_gromov(&single),
        &mut failures,
    );
    report(
        9,
        "ratio trend",
        Some(Duration::from_secs(900)),
        || c9_trend(&single),
        &mut failures,
    );
    report(
        10,
        "Anosov gap",
        None,
        || {
            c10_gap(
                &[
                    ("single-orbit", &single),
                    ("two-orbit", &two),
                    ("reducible", &reducible),
                ],
                &control,
            )
        },
        &mut failures,
    );
    report(11, "determinism", None, c11_determinism, &mut failures);
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all 11 criteria passed");
}

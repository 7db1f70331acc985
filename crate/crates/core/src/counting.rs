//! Orbit counting: counting functions over word balls, exponent fits,
//! entropy of a linear functional, asymptotic cones, the Gromov product
//! comparison, the ratio trend of the directional count and box masses of
//! fixed points.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cocycles::{gromov_product, CocycleError, Functional};
use crate::flags::OrbitSignature;
use crate::freegroup::{
    conjugacy_reps, endpoint_cylinders, sphere_size, Letter, LimitSetReport, Representation,
    ResourceCapError, Word,
};
use crate::numerics::Element;
use crate::pq_cartan::{pq_project, PqError};
use crate::projections::{
    attracting_flag, cartan, cartan_attractor, cartan_repellor, jordan, repelling_flag,
};
use crate::weyl::{ChamberA, WeylElement};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CountingError {
    #[error(transparent)]
    Cap(#[from] ResourceCapError),
    #[error("no thresholds with positive counts in the window [{0}, {1}]")]
    EmptyWindow(f64, f64),
    #[error("functional is not positive on the period of {word} (value {value:.6e})")]
    NotPositive { word: String, value: f64 },
    #[error("the limit set meets {0} open orbits; a single one is required")]
    NotSingleOrbit(usize),
    #[error("no sampled limit flag is generic")]
    NoSignature,
}

/// What is counted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Statistic {
    /// Norm of the Cartan projection.
    NormCartan,
    /// Norm of the (p,q)-Cartan projection.
    NormPq,
    /// Functional applied to the (p,q)-Cartan projection read in the
    /// reference chamber.
    PhiPq { phi: Functional },
}

impl Statistic {
    pub fn label(&self) -> String {
        match self {
            Statistic::NormCartan => "norm-cartan".into(),
            Statistic::NormPq => "norm-pq".into(),
            Statistic::PhiPq { .. } => "phi-pq".into(),
        }
    }
}

/// Counts at increasing thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountCurve {
    pub label: String,
    pub thresholds: Vec<f64>,
    pub counts: Vec<u64>,
    /// Words left out because their image has no (p,q)-Cartan decomposition.
    pub excluded: u64,
    /// Words close to the degenerate locus (counted).
    pub degenerate: u64,
    /// Radius of the word ball.
    pub max_len: usize,
    /// Smallest value on the outer shell; counts are complete below it when
    /// values grow along the word tree.
    pub exact_up_to: f64,
}

/// Sorted values of a statistic over a word ball.
#[derive(Clone, Debug, PartialEq)]
pub struct BallValues {
    pub values: Vec<f64>,
    pub excluded: u64,
    pub degenerate: u64,
    pub outer_min: f64,
    pub max_len: usize,
}

#[derive(Default)]
struct Acc {
    values: Vec<f64>,
    excluded: u64,
    degenerate: u64,
    outer_min: f64,
}

fn eval_stat(
    rep: &Representation,
    stat: &Statistic,
    reference: &ChamberA,
    e: &Element,
) -> (Option<f64>, bool) {
    match stat {
        Statistic::NormCartan => (Some(cartan(e).norm()), false),
        Statistic::NormPq | Statistic::PhiPq { .. } => {
            let (r, degenerate) = match pq_project(rep.form(), e) {
                Ok(r) => (r, false),
                Err(PqError::NearDegenerate(r)) => (*r, true),
                Err(_) => return (None, false),
            };
            let v = match stat {
                Statistic::PhiPq { phi } => phi.apply(&reference.unplace(&r.b_o.coords)),
                _ => r.distance(),
            };
            (Some(v), degenerate)
        }
    }
}

/// Values of the statistic on every word of length at most `max_len`.
pub fn ball_values(
    rep: &Representation,
    stat: &Statistic,
    reference: &ChamberA,
    max_len: usize,
    cap: u64,
) -> Result<BallValues, CountingError> {
    let acc = rep.fold_ball(
        0,
        max_len,
        cap,
        || Acc {
            outer_min: f64::INFINITY,
            ..Acc::default()
        },
        |acc, w, e| {
            let (v, degenerate) = eval_stat(rep, stat, reference, e);
            match v {
                Some(v) => {
                    acc.values.push(v);
                    if w.len() == max_len {
                        acc.outer_min = acc.outer_min.min(v);
                    }
                }
                None => acc.excluded += 1,
            }
            acc.degenerate += u64::from(degenerate);
        },
        |mut a, mut b| {
            a.values.append(&mut b.values);
            a.excluded += b.excluded;
            a.degenerate += b.degenerate;
            a.outer_min = a.outer_min.min(b.outer_min);
            a
        },
    )?;
    let mut values = acc.values;
    values.sort_by(f64::total_cmp);
    Ok(BallValues {
        values,
        excluded: acc.excluded,
        degenerate: acc.degenerate,
        outer_min: acc.outer_min,
        max_len,
    })
}

/// Number of values `<= t` for each threshold.
pub fn counts_at(sorted: &[f64], thresholds: &[f64]) -> Vec<u64> {
    thresholds
        .iter()
        .map(|&t| sorted.partition_point(|&v| v <= t) as u64)
        .collect()
}

/// `n` evenly spaced thresholds on `[start, stop]`.
pub fn uniform_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![stop];
    }
    (0..n)
        .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn curve_from_values(label: &str, v: &BallValues, thresholds: Vec<f64>) -> CountCurve {
    CountCurve {
        label: label.into(),
        counts: counts_at(&v.values, &thresholds),
        thresholds,
        excluded: v.excluded,
        degenerate: v.degenerate,
        max_len: v.max_len,
        exact_up_to: v.outer_min,
    }
}

/// Counting function of the statistic over the ball; without a grid the
/// thresholds are `points` values up to `exact_up_to`.
pub fn count_curve(
    rep: &Representation,
    stat: &Statistic,
    reference: &ChamberA,
    max_len: usize,
    grid: Option<Vec<f64>>,
    points: usize,
    cap: u64,
) -> Result<CountCurve, CountingError> {
    let v = ball_values(rep, stat, reference, max_len, cap)?;
    let top = if v.outer_min.is_finite() {
        v.outer_min
    } else {
        v.values.last().copied().unwrap_or(0.0)
    };
    let thresholds = grid.unwrap_or_else(|| uniform_grid(0.0, top, points));
    Ok(curve_from_values(&stat.label(), &v, thresholds))
}

/// Least squares line through `(t, log N(t))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub points: usize,
}

fn linear_fit(pts: &[(f64, f64)], window: (f64, f64)) -> Result<ExponentFit, CountingError> {
    if pts.len() < 3 {
        return Err(CountingError::EmptyWindow(window.0, window.1));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(CountingError::EmptyWindow(window.0, window.1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        stderr,
        intercept,
        window,
        points: pts.len(),
    })
}

/// Slope of `log N(t)` over the thresholds inside `window`.
pub fn estimate_exponent(
    curve: &CountCurve,
    window: (f64, f64),
) -> Result<ExponentFit, CountingError> {
    let pts: Vec<(f64, f64)> = curve
        .thresholds
        .iter()
        .zip(&curve.counts)
        .filter(|(t, c)| **t >= window.0 && **t <= window.1 && **c > 0)
        .map(|(t, c)| (*t, (*c as f64).ln()))
        .collect();
    linear_fit(&pts, window)
}

/// Default fitting window: the upper half of the exact range.
pub fn default_window(curve: &CountCurve) -> (f64, f64) {
    let top = curve
        .exact_up_to
        .min(curve.thresholds.last().copied().unwrap_or(0.0));
    (top / 2.0, top)
}

/// Fits over the window shifted by each offset.
pub fn window_sensitivity(
    curve: &CountCurve,
    window: (f64, f64),
    shifts: &[f64],
) -> Vec<Result<ExponentFit, CountingError>> {
    shifts
        .iter()
        .map(|s| estimate_exponent(curve, (window.0 + s, window.1 + s)))
        .collect()
}

/// Constants with `c1 e^(delta t) <= N(t) <= c2 e^(delta t)` on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
    pub ratio: f64,
    pub window: (f64, f64),
}

pub fn sandwich(curve: &CountCurve, window: (f64, f64)) -> Result<Sandwich, CountingError> {
    let fit = estimate_exponent(curve, window)?;
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for (t, c) in curve.thresholds.iter().zip(&curve.counts) {
        if *t >= window.0 && *t <= window.1 && *c > 0 {
            let r = (*c as f64).ln() - fit.slope * t;
            c1 = c1.min(r);
            c2 = c2.max(r);
        }
    }
    let (c1, c2) = (c1.exp(), c2.exp());
    Ok(Sandwich {
        delta: fit.slope,
        c1,
        c2,
        ratio: c2 / c1,
        window,
    })
}

/// Periods of the functional on conjugacy classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Fitted slope of `log(t N(t))`, the prime orbit normalization.
    pub h: f64,
    pub stderr: f64,
    pub curve: CountCurve,
    pub window: (f64, f64),
    /// Classes whose image is not loxodromic (left out).
    pub skipped: u64,
}

/// Values of `phi(lambda)` over the conjugacy class representatives of
/// length at most `max_len`, in representative order.
pub fn class_periods(
    rep: &Representation,
    phi: &Functional,
    max_len: usize,
    cap: u64,
) -> Result<(Vec<(Word, f64)>, u64), CountingError> {
    let reps = conjugacy_reps(rep.rank(), max_len, cap)?;
    let eval = |w: &Word| jordan(&rep.image(w)).ok().map(|l| phi.apply(&l.coords));
    #[cfg(feature = "parallel")]
    let values: Vec<Option<f64>> = {
        use rayon::prelude::*;
        reps.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Option<f64>> = reps.iter().map(eval).collect();
    let mut out = Vec::with_capacity(reps.len());
    let mut skipped = 0;
    for (w, v) in reps.into_iter().zip(values) {
        match v {
            Some(v) if v > 0.0 => out.push((w, v)),
            Some(v) => {
                return Err(CountingError::NotPositive {
                    word: w.to_string(),
                    value: v,
                })
            }
            None => skipped += 1,
        }
    }
    Ok((out, skipped))
}

/// Entropy of the functional from the growth of periods of conjugacy
/// classes.  The number of classes with period at most `t` behaves like
/// `e^(h t) / (h t)`, so the slope of `log(t N(t))` is fitted.
pub fn phi_entropy(
    rep: &Representation,
    phi: &Functional,
    max_len: usize,
    points: usize,
    cap: u64,
) -> Result<EntropyEstimate, CountingError> {
    let (periods, skipped) = class_periods(rep, phi, max_len, cap)?;
    let outer = periods
        .iter()
        .filter(|(w, _)| w.len() == max_len)
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let mut values: Vec<f64> = periods.iter().map(|p| p.1).collect();
    values.sort_by(f64::total_cmp);
    let thresholds = uniform_grid(0.0, outer, points);
    let curve = CountCurve {
        label: "phi-jordan-classes".into(),
        counts: counts_at(&values, &thresholds),
        thresholds,
        excluded: skipped,
        degenerate: 0,
        max_len,
        exact_up_to: outer,
    };
    let window = (outer / 2.0, outer);
    let pts: Vec<(f64, f64)> = curve
        .thresholds
        .iter()
        .zip(&curve.counts)
        .filter(|(t, c)| **t >= window.0 && **t <= window.1 && **c > 0)
        .map(|(t, c)| (*t, (*t * *c as f64).ln()))
        .collect();
    let fit = linear_fit(&pts, window)?;
    Ok(EntropyEstimate {
        h: fit.slope,
        stderr: fit.stderr,
        curve,
        window,
        skipped,
    })
}

/// `<., u>` with `u` the normalized mean of the Jordan directions of the
/// conjugacy classes up to `len`, projected to sum zero.
pub fn default_functional(
    rep: &Representation,
    len: usize,
    cap: u64,
) -> Result<Functional, CountingError> {
    let reps = conjugacy_reps(rep.rank(), len, cap)?;
    let d = rep.dim();
    let mut u = vec![0.0; d];
    for w in &reps {
        if let Ok(l) = jordan(&rep.image(w)) {
            let n = l.norm();
            if n > 0.0 {
                for (a, b) in u.iter_mut().zip(&l.coords) {
                    *a += b / n;
                }
            }
        }
    }
    let mean = u.iter().sum::<f64>() / d as f64;
    let u: Vec<f64> = u.iter().map(|x| x - mean).collect();
    let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(Functional::new(u.iter().map(|x| x / n).collect()))
}

/// Chamber expected to contain the (p,q)-Cartan projections of elements
/// whose Cartan repellor has the given signature.
pub fn chamber_of_signature(s: &OrbitSignature) -> ChamberA {
    ChamberA::from_pattern(&s.reversed().signs)
}

/// The reference chamber (from the most frequent signature) and the Weyl
/// elements of all observed chambers relative to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylSubset {
    pub reference: ChamberA,
    pub chambers: Vec<ChamberA>,
    pub elements: Vec<WeylElement>,
    pub signatures: Vec<String>,
}

pub fn weyl_subset(limit: &LimitSetReport) -> Result<WeylSubset, CountingError> {
    let reference = chamber_of_signature(&limit.dominant().ok_or(CountingError::NoSignature)?);
    let sigs = limit.signature_list();
    let chambers: Vec<ChamberA> = sigs
        .iter()
        .map(chamber_of_signature)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let ref_inv = reference.placement().inverse();
    let elements = chambers
        .iter()
        .map(|c| c.placement().compose(&ref_inv))
        .collect();
    Ok(WeylSubset {
        reference,
        chambers,
        elements,
        signatures: sigs.iter().map(|s| s.pattern()).collect(),
    })
}

/// Unit direction clouds of the two projections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSample {
    /// Unit Cartan directions, sorted frame.
    pub cartan: Vec<Vec<f64>>,
    /// Unit (p,q)-Cartan directions, slot frame.
    pub pq: Vec<Vec<f64>>,
    /// Chamber pattern of each (p,q) point (signs in chamber order).
    pub pq_pattern: Vec<String>,
    pub words: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub weyl: WeylSubset,
    pub samples: ConeSample,
    /// Hausdorff distance between the (p,q) cloud and the union of Weyl
    /// translates of the Cartan cloud.
    pub hausdorff: f64,
    /// Largest distance from a (p,q) direction to its own element's
    /// translated Cartan direction set.
    pub excluded: u64,
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0).then(|| v.iter().map(|x| x / n).collect())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Hausdorff distance between finite point sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let one_sided = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Every `stride`-th point, keeping at most `max` points.
fn thin<T: Clone>(v: &[T], max: usize) -> Vec<T> {
    if v.len() <= max {
        return v.to_vec();
    }
    let stride = v.len().div_ceil(max);
    v.iter().step_by(stride).cloned().collect()
}

/// Largest number of points per cloud entering the Hausdorff computation.
pub const HAUSDORFF_POINTS: usize = 3000;

pub fn cone_samples(
    rep: &Representation,
    limit: &LimitSetReport,
    min_len: usize,
    max_len: usize,
    cap: u64,
) -> Result<ConeReport, CountingError> {
    let weyl = weyl_subset(limit)?;
    type Row = (Vec<Letter>, Vec<f64>, Vec<f64>, String);
    let rows = rep.fold_ball(
        min_len,
        max_len,
        cap,
        || (Vec::<Row>::new(), 0u64),
        |acc, w, e| {
            let a = cartan(e);
            match pq_project(rep.form(), e) {
                Ok(r) => {
                    if let (Some(ua), Some(ub)) = (unit(&a.coords), unit(&r.b_o.coords)) {
                        let pattern: String = r
                            .eigen_signs
                            .iter()
                            .map(|&s| if s > 0 { '+' } else { '-' })
                            .collect();
                        acc.0.push((w.to_vec(), ua, ub, pattern));
                    }
                }
                Err(_) => acc.1 += 1,
            }
        },
        |mut a, mut b| {
            a.0.append(&mut b.0);
            a.1 += b.1;
            a
        },
    )?;
    let (rows, excluded) = rows;
    let samples = ConeSample {
        words: rows
            .iter()
            .map(|r| Word::reduce(&r.0).to_string())
            .collect(),
        cartan: rows.iter().map(|r| r.1.clone()).collect(),
        pq: rows.iter().map(|r| r.2.clone()).collect(),
        pq_pattern: rows.iter().map(|r| r.3.clone()).collect(),
    };
    let cartan_thin = thin(&samples.cartan, HAUSDORFF_POINTS);
    let union: Vec<Vec<f64>> = weyl
        .chambers
        .iter()
        .flat_map(|c| cartan_thin.iter().map(move |x| c.place(x)))
        .collect();
    let pq_thin = thin(&samples.pq, HAUSDORFF_POINTS);
    let h = hausdorff(&pq_thin, &union);
    Ok(ConeReport {
        weyl,
        samples,
        hausdorff: h,
        excluded,
    })
}

/// Comparison between the (p,q)-Cartan projection and the Cartan
/// projection translated by the predicted Weyl element, per shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonShell {
    pub length: usize,
    pub words: u64,
    pub max_deviation: f64,
    pub witness: String,
    /// Words without a prediction (no gap or non generic attractor).
    pub skipped: u64,
}

/// `max |b(g) - w_g a(g)|` per shell with `w_g` predicted from the open
/// orbit of the Cartan repellor.
pub fn comparison_by_shell(
    rep: &Representation,
    min_len: usize,
    max_len: usize,
    cap: u64,
) -> Result<Vec<ComparisonShell>, CountingError> {
    let init = || vec![(0u64, 0.0f64, Vec::<Letter>::new(), 0u64); max_len + 1];
    let acc = rep.fold_ball(
        min_len,
        max_len,
        cap,
        init,
        |acc, w, e| {
            let slot = &mut acc[w.len()];
            let pred = crate::pq_cartan::weyl_chamber_of(rep.form(), e);
            let r = pq_project(rep.form(), e);
            match (pred, r) {
                (Ok(pred), Ok(r)) => {
                    let a = cartan(e);
                    let dev = dist(&r.b_o.coords, &pred.w_gamma.act(&a.coords));
                    slot.0 += 1;
                    if dev > slot.1 {
                        slot.1 = dev;
                        slot.2 = w.to_vec();
                    }
                }
                _ => slot.3 += 1,
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                x.0 += y.0;
                x.3 += y.3;
                if y.1 > x.1 {
                    x.1 = y.1;
                    x.2 = y.2;
                }
            }
            a
        },
    )?;
    Ok((min_len..=max_len)
        .map(|l| ComparisonShell {
            length: l,
            words: acc[l].0,
            max_deviation: acc[l].1,
            witness: Word::reduce(&acc[l].2).to_string(),
            skipped: acc[l].3,
        })
        .collect())
}

fn require_single_orbit(limit: &LimitSetReport) -> Result<(), CountingError> {
    match limit.signatures.len() {
        1 => Ok(()),
        0 => Err(CountingError::NoSignature),
        n => Err(CountingError::NotSingleOrbit(n)),
    }
}

/// Per shell deviation `|phi(b(g)) - phi(lambda(g)) + [g_-, g_+]_phi|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GromovShell {
    pub length: usize,
    pub words: u64,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub witness: String,
    pub skipped: u64,
}

/// How the endpoints entering the bracket are approximated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointFlags {
    /// Cartan attractors of the element and of its inverse; the error decays
    /// with the word length.
    #[default]
    Cartan,
    /// Attracting and repelling fixed flags, for which the relation is exact.
    Fixed,
}

/// Deviation for one element.
pub fn gromov_deviation(
    rep: &Representation,
    phi: &Functional,
    reference: &ChamberA,
    g: &Element,
    endpoints: EndpointFlags,
) -> Result<f64, GromovFailure> {
    let o = rep.form();
    let r = pq_project(o, g).map_err(|_| GromovFailure)?;
    let lambda = jordan(g).map_err(|_| GromovFailure)?;
    let (plus, minus) = match endpoints {
        EndpointFlags::Fixed => (attracting_flag(g), repelling_flag(g)),
        EndpointFlags::Cartan => (cartan_attractor(g), cartan_repellor(g)),
    };
    let (plus, minus) = (
        plus.map_err(|_| GromovFailure)?,
        minus.map_err(|_| GromovFailure)?,
    );
    let bracket = gromov_product(o, &minus, &plus).map_err(|_: CocycleError| GromovFailure)?;
    let b = phi.apply(&reference.unplace(&r.b_o.coords));
    Ok((b - phi.apply(&lambda.coords) + phi.apply(&bracket.coords.coords)).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GromovFailure;

/// Gromov comparison over cyclically reduced words whose repelling end lies
/// in the cylinder `a` and attracting end in the cylinder `b`.
pub fn gromov_comparison(
    rep: &Representation,
    limit: &LimitSetReport,
    phi: &Functional,
    a: &[Letter],
    b: &[Letter],
    endpoints: EndpointFlags,
    min_len: usize,
    max_len: usize,
    cap: u64,
) -> Result<Vec<GromovShell>, CountingError> {
    require_single_orbit(limit)?;
    let reference = weyl_subset(limit)?.reference;
    let depth = a.len().max(b.len());
    let init = || vec![(0u64, 0.0f64, 0.0f64, Vec::<Letter>::new(), 0u64); max_len + 1];
    let acc = rep.fold_ball(
        min_len,
        max_len,
        cap,
        init,
        |acc, w, e| {
            let word = Word::reduce(w);
            if !word.is_cyclically_reduced() || word.is_empty() {
                return;
            }
            let Some((minus, plus)) = endpoint_cylinders(&word, depth) else {
                return;
            };
            if !minus.starts_with(a) || !plus.starts_with(b) {
                return;
            }
            let slot = &mut acc[w.len()];
            match gromov_deviation(rep, phi, &reference, e, endpoints) {
                Ok(dev) => {
                    slot.0 += 1;
                    slot.2 += dev;
                    if dev > slot.1 {
                        slot.1 = dev;
                        slot.3 = w.to_vec();
                    }
                }
                Err(_) => slot.4 += 1,
            }
        },
        |mut x, y| {
            for (p, q) in x.iter_mut().zip(y) {
                p.0 += q.0;
                p.2 += q.2;
                p.4 += q.4;
                if q.1 > p.1 {
                    p.1 = q.1;
                    p.3 = q.3;
                }
            }
            x
        },
    )?;
    Ok((min_len..=max_len)
        .map(|l| {
            let s = &acc[l];
            GromovShell {
                length: l,
                words: s.0,
                max_deviation: s.1,
                mean_deviation: if s.0 > 0 { s.2 / s.0 as f64 } else { 0.0 },
                witness: Word::reduce(&s.3).to_string(),
                skipped: s.4,
            }
        })
        .collect())
}

/// Ratio trend of the directional count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub entropy: EntropyEstimate,
    pub curve: CountCurve,
    /// Slope of `log N_phi(t)` over the upper half of the exact range.
    pub slope: ExponentFit,
    /// `|slope - h| / h`.
    pub relative_slope_gap: f64,
    pub ratio_thresholds: Vec<f64>,
    /// `e^(-h t) N_phi(t)`.
    pub ratios: Vec<f64>,
    /// `(max - min) / mean` of the ratio over the final unit window.
    pub final_window_variation: f64,
    pub hypotheses: Vec<String>,
}

pub fn ratio_trend(
    rep: &Representation,
    limit: &LimitSetReport,
    phi: &Functional,
    max_len: usize,
    points: usize,
    cap: u64,
) -> Result<TrendReport, CountingError> {
    require_single_orbit(limit)?;
    let reference = weyl_subset(limit)?.reference;
    let entropy = phi_entropy(rep, phi, max_len, points, cap)?;
    let stat = Statistic::PhiPq { phi: phi.clone() };
    let v = ball_values(rep, &stat, &reference, max_len, cap)?;
    let top = v.outer_min;
    let curve = curve_from_values("phi-pq", &v, uniform_grid(0.0, top, points));
    let slope = estimate_exponent(&curve, (top / 2.0, top))?;
    let h = entropy.h;
    let ratio_thresholds = uniform_grid(top - 1.0, top, 101);
    let counts = counts_at(&v.values, &ratio_thresholds);
    let ratios: Vec<f64> = ratio_thresholds
        .iter()
        .zip(&counts)
        .map(|(t, c)| *c as f64 * (-h * t).exp())
        .collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(TrendReport {
        relative_slope_gap: (slope.slope - h).abs() / h,
        entropy,
        curve,
        slope,
        ratio_thresholds,
        ratios,
        final_window_variation: (max - min) / mean,
        hypotheses: vec![format!("Zariski density: {}", rep.meta.zariski_dense)],
    })
}

/// Masses of fixed point pairs in products of cylinders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistributionReport {
    pub entropy: f64,
    /// Cylinder labels (prefix words).
    pub cylinders: Vec<String>,
    pub thresholds: Vec<f64>,
    /// `masses[t][i][j]`: normalized count of classes with period at most
    /// `t`, repelling end in cylinder `i` and attracting end in cylinder `j`.
    pub masses: Vec<Vec<Vec<f64>>>,
    /// Largest entry of `|M - r c^T|` for the masses reweighted by
    /// `e^(h [g_-, g_+])` and normalized to total one.
    pub product_defect: Vec<f64>,
    /// Total mass `e^(-h t) N(t)` per threshold.
    pub total_mass: Vec<f64>,
    pub skipped: u64,
}

pub fn equidistribution_experiment(
    rep: &Representation,
    limit: &LimitSetReport,
    phi: &Functional,
    max_len: usize,
    depth: usize,
    thresholds: Option<Vec<f64>>,
    cap: u64,
) -> Result<EquidistributionReport, CountingError> {
    require_single_orbit(limit)?;
    let entropy = phi_entropy(rep, phi, max_len, 200, cap)?;
    let h = entropy.h;
    let (periods, _) = class_periods(rep, phi, max_len, cap)?;
    let cylinders: Vec<Vec<Letter>> = crate::freegroup::sphere_words(rep.rank(), depth, cap)?
        .into_iter()
        .map(|w| w.letters().to_vec())
        .collect();
    let index = |c: &[Letter]| cylinders.iter().position(|x| x.as_slice() == c);
    let o = rep.form();
    let mut items = Vec::with_capacity(periods.len());
    let mut skipped = 0;
    for (w, period) in &periods {
        let g = rep.image(w);
        let (Some((m, p)), Ok(plus), Ok(minus)) = (
            endpoint_cylinders(w, depth),
            attracting_flag(&g),
            repelling_flag(&g),
        ) else {
            skipped += 1;
            continue;
        };
        let bracket = match gromov_product(o, &minus, &plus) {
            Ok(b) => phi.apply(&b.coords.coords),
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        match (index(&m), index(&p)) {
            (Some(i), Some(j)) => items.push((*period, i, j, bracket)),
            _ => skipped += 1,
        }
    }
    let top = entropy.curve.exact_up_to;
    let thresholds = thresholds.unwrap_or_else(|| uniform_grid(top / 2.0, top, 6));
    let n = cylinders.len();
    let mut masses = Vec::with_capacity(thresholds.len());
    let mut product_defect = Vec::with_capacity(thresholds.len());
    let mut total_mass = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let norm = (-h * t).exp();
        let mut m = vec![vec![0.0; n]; n];
        let mut rw = vec![vec![0.0; n]; n];
        let mut total = 0.0;
        for &(period, i, j, bracket) in &items {
            if period <= t {
                m[i][j] += norm;
                rw[i][j] += (h * bracket).exp();
                total += norm;
            }
        }
        let s: f64 = rw.iter().flatten().sum();
        let defect = if s > 0.0 {
            let r: Vec<f64> = rw.iter().map(|row| row.iter().sum::<f64>() / s).collect();
            let c: Vec<f64> = (0..n)
                .map(|j| rw.iter().map(|row| row[j]).sum::<f64>() / s)
                .collect();
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (rw[i][j] / s - r[i] * c[j]).abs())
                .fold(0.0, f64::max)
        } else {
            0.0
        };
        masses.push(m);
        product_defect.push(defect);
        total_mass.push(total);
    }
    Ok(EquidistributionReport {
        entropy: h,
        cylinders: cylinders
            .iter()
            .map(|c| Word::reduce(c).to_string())
            .collect(),
        thresholds,
        masses,
        product_defect,
        total_mass,
        skipped,
    })
}

/// Number of words in the ball of radius `len` (for reports).
pub fn ball_word_count(rank: usize, len: usize) -> u128 {
    (0..=len).map(|l| sphere_size(rank, l)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(h: f64, c: f64, top: f64) -> CountCurve {
        let thresholds = uniform_grid(0.0, top, 400);
        let counts = thresholds
            .iter()
            .map(|t| (c * (h * t).exp()).ceil() as u64)
            .collect();
        CountCurve {
            label: "synthetic".into(),
            thresholds,
            counts,
            excluded: 0,
            degenerate: 0,
            max_len: 0,
            exact_up_to: top,
        }
    }

    #[test]
    fn synthetic_exponent() {
        let c = synthetic(2.0, 1.0, 8.0);
        let fit = estimate_exponent(&c, (4.0, 8.0)).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.01);
    }

    #[test]
    fn constant_curve_has_zero_slope() {
        let mut c = synthetic(2.0, 1.0, 8.0);
        c.counts.iter_mut().for_each(|x| *x = 5);
        assert!(estimate_exponent(&c, (1.0, 8.0)).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn empty_window_is_an_error() {
        let c = synthetic(2.0, 1.0, 8.0);
        assert!(matches!(
            estimate_exponent(&c, (20.0, 30.0)),
            Err(CountingError::EmptyWindow(..))
        ));
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let b = vec![vec![0.0, 0.0]];
        assert_eq!(hausdorff(&a, &a), 0.0);
        assert_eq!(hausdorff(&a, &b), 1.0);
    }
}

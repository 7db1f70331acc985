//! Busemann cocycles for the Euclidean structure and for the form, the
//! potential relating them, the duality involution, the Gromov product of
//! the form and the vector valued cross-ratio.
//!
//! Every quantity is computed level by level from exterior powers: the
//! value at level `j` is the `chi_j` entry of a [`CocycleValue`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::flags::{flag_perp, o_lines, project_to_so, transversality_margin, Flag, FlagError};
use crate::forms::{Form, FormError};
use crate::numerics::{
    condition_number, gaussian_matrix, wedge_pairing, CMat, CVec, Element, Field, NumericsError,
};
use crate::projections::{
    attracting_flag, coords_from_prefix, CartanVector, Frame, ProjectionError,
};
use crate::tol;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CocycleError {
    #[error("flag is not generic for the form at level {level} (margin {margin:.3e})")]
    NotGeneric { level: usize, margin: f64 },
    #[error("flags {0} and {1} are not transverse (margin {2:.3e})")]
    NotTransverse(usize, usize, f64),
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Level values `chi_1 .. chi_(d-1)` (determinant part removed) and the
/// coordinates whose prefix sums they are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocycleValue {
    pub chi: Vec<f64>,
    pub coords: CartanVector,
}

impl CocycleValue {
    /// From raw level values and the top level value `chi_d`.
    pub fn from_levels(chi: &[f64], chi_d: f64) -> Self {
        let d = chi.len() + 1;
        let coords = coords_from_prefix(chi, chi_d);
        let chi = chi
            .iter()
            .enumerate()
            .map(|(i, c)| c - (i + 1) as f64 * chi_d / d as f64)
            .collect();
        Self {
            chi,
            coords: CartanVector {
                coords,
                frame: Frame::Lines,
            },
        }
    }

    pub fn from_coords(coords: Vec<f64>) -> Self {
        let mut chi = Vec::with_capacity(coords.len().saturating_sub(1));
        let mut acc = 0.0;
        for x in &coords[..coords.len().saturating_sub(1)] {
            acc += x;
            chi.push(acc);
        }
        Self {
            chi,
            coords: CartanVector {
                coords,
                frame: Frame::Lines,
            },
        }
    }

    /// Opposition involution `x -> -(x_d, .., x_1)`.
    pub fn iota(&self) -> Self {
        Self::from_coords(self.coords.coords.iter().rev().map(|x| -x).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_coords(
            self.coords
                .coords
                .iter()
                .zip(&other.coords.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_coords(
            self.coords
                .coords
                .iter()
                .zip(&other.coords.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_coords(self.coords.coords.iter().map(|a| a * s).collect())
    }

    /// Largest coordinate difference.
    pub fn deviation(&self, other: &Self) -> f64 {
        self.coords
            .coords
            .iter()
            .zip(&other.coords.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }
}

/// `log |<v, v>_j|` after checking that `v` is not isotropic.
fn log_o_norm(o: &Form, j: usize, v: &CVec) -> Result<f64, CocycleError> {
    let n = o.induced_norm2(j, v);
    let scale = v.norm_squared() * o.induced_form(j).gram.norm().max(1.0);
    let margin = n.abs() / scale;
    if !(margin > tol::DEGENERATE_RESTRICTION) {
        return Err(CocycleError::NotGeneric { level: j, margin });
    }
    Ok(n.abs().ln())
}

/// `Lambda^j g v` as normalized vector plus log scale.
fn apply_level(g: &Element, j: usize, v: &CVec) -> (CVec, f64) {
    let a = g.level(j);
    (a.entries() * v, a.log_scale())
}

/// Busemann cocycle of the Euclidean (Hermitian) structure.
pub fn busemann_tau(g: &Element, xi: &Flag) -> CocycleValue {
    let d = g.dim();
    let chi: Vec<f64> = (1..d)
        .map(|j| {
            let v = xi.wedge(j);
            let (w, s) = apply_level(g, j, &v);
            s + w.norm().ln() - v.norm().ln()
        })
        .collect();
    CocycleValue::from_levels(&chi, g.log_abs_det())
}

/// Busemann cocycle of the form; needs `xi` and `g xi` generic.
pub fn busemann_o(o: &Form, g: &Element, xi: &Flag) -> Result<CocycleValue, CocycleError> {
    let d = g.dim();
    let mut chi = Vec::with_capacity(d - 1);
    for j in 1..d {
        let v = xi.wedge(j);
        let (w, s) = apply_level(g, j, &v);
        chi.push(0.5 * (log_o_norm(o, j, &w)? - log_o_norm(o, j, &v)?) + s);
    }
    Ok(CocycleValue::from_levels(&chi, g.log_abs_det()))
}

/// Potential `V` with `V(g xi) - V(xi)` the difference of the two
/// Busemann cocycles.
pub fn potential_v(o: &Form, xi: &Flag) -> Result<CocycleValue, CocycleError> {
    let d = o.dim();
    let mut chi = Vec::with_capacity(d - 1);
    for j in 1..d {
        let v = xi.wedge(j);
        chi.push(0.5 * (log_o_norm(o, j, &v)? - v.norm_squared().ln()));
    }
    let chi_d = 0.5 * o.gram().determinant().norm().ln();
    Ok(CocycleValue::from_levels(&chi, chi_d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityCheck {
    /// Cocycle of `sigma(g)` at the orthogonal flag.
    pub lhs: CocycleValue,
    /// Opposition involution applied to the cocycle of `g` at the flag.
    pub rhs: CocycleValue,
    pub deviation: f64,
}

pub fn dual_busemann(o: &Form, g: &Element, xi: &Flag) -> Result<DualityCheck, CocycleError> {
    let lhs = busemann_o(o, &o.sigma_element(g), &flag_perp(o, xi))?;
    let rhs = busemann_o(o, g, xi)?.iota();
    let deviation = lhs.deviation(&rhs);
    Ok(DualityCheck {
        lhs,
        rhs,
        deviation,
    })
}

fn check_transverse(pairs: &[(usize, &Flag, usize, &Flag)]) -> Result<(), CocycleError> {
    for &(a, x, b, y) in pairs {
        let m = transversality_margin(x, y);
        if !(m > tol::TRANSVERSE) {
            return Err(CocycleError::NotTransverse(a, b, m));
        }
    }
    Ok(())
}

/// Gromov product of the form.
pub fn gromov_product(o: &Form, xi: &Flag, eta: &Flag) -> Result<CocycleValue, CocycleError> {
    check_transverse(&[(1, xi, 2, eta)])?;
    let d = o.dim();
    let perp = flag_perp(o, xi);
    let mut chi = Vec::with_capacity(d - 1);
    for j in 1..d {
        let v = perp.wedge(j);
        let w = eta.wedge(j);
        let pairing = o.induced_inner(j, &v, &w).norm();
        if !(pairing > 0.0) {
            return Err(CocycleError::NotTransverse(1, 2, 0.0));
        }
        chi.push(pairing.ln() - 0.5 * (log_o_norm(o, j, &v)? + log_o_norm(o, j, &w)?));
    }
    Ok(CocycleValue::from_levels(&chi, 0.0))
}

/// Vector valued cross-ratio of four flags; pairs (1,2), (1,4), (2,3) and
/// (3,4) must be transverse.
pub fn cross_ratio(
    x1: &Flag,
    x2: &Flag,
    x3: &Flag,
    x4: &Flag,
) -> Result<CocycleValue, CocycleError> {
    check_transverse(&[
        (1, x1, 2, x2),
        (1, x1, 4, x4),
        (2, x2, 3, x3),
        (3, x3, 4, x4),
    ])?;
    let d = x1.dim();
    let mut chi = Vec::with_capacity(d - 1);
    for j in 1..d {
        let theta1 = x1.wedge(d - j);
        let theta3 = x3.wedge(d - j);
        let v2 = x2.wedge(j);
        let v4 = x4.wedge(j);
        let t = |v: &CVec, th: &CVec| wedge_pairing(d, j, v, th).norm().ln();
        chi.push(t(&v4, &theta1) + t(&v2, &theta3) - t(&v2, &theta1) - t(&v4, &theta3));
    }
    Ok(CocycleValue::from_levels(&chi, 0.0))
}

/// Busemann cocycle of the form computed from the projections of `xi` to
/// the spaces of adapted inner products of `g^-1 o` and of `o`.
pub fn busemann_via_projections(
    o: &Form,
    g: &Element,
    xi: &Flag,
) -> Result<CocycleValue, CocycleError> {
    let m = g.matrix().entries();
    let pulled = Form::new(m.adjoint() * o.gram() * m, o.field())?;
    let g1 = o_lines(&pulled, xi)?;
    let g2 = o_lines(o, xi)?;
    let inv = |a: CMat| -> Result<Element, CocycleError> {
        let i = a.try_inverse().ok_or(NumericsError::Singular)?;
        Ok(Element::from_complex(i, o.field())?)
    };
    Ok(busemann_tau(&inv(g1)?, xi).sub(&busemann_tau(&inv(g2)?, xi)))
}

/// Linear functional on Cartan vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub weights: Vec<f64>,
}

impl Functional {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    /// `x -> x_1`.
    pub fn first_coordinate(d: usize) -> Self {
        let mut weights = vec![0.0; d];
        weights[0] = 1.0;
        Self { weights }
    }

    /// `x -> x_1 - x_d`, positive on the interior of the chamber.
    pub fn first_minus_last(d: usize) -> Self {
        let mut weights = vec![0.0; d];
        weights[0] = 1.0;
        weights[d - 1] -= 1.0;
        Self { weights }
    }

    pub fn apply(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }

    /// The functional composed with the opposition involution.
    pub fn dual(&self) -> Self {
        Self {
            weights: self.weights.iter().rev().map(|w| -w).collect(),
        }
    }
}

/// Values of the two scalar cocycles `phi o beta` and `phi o iota o beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiCocycleValues {
    pub c: f64,
    pub c_bar: f64,
}

pub fn phi_cocycles(
    o: &Form,
    phi: &Functional,
    g: &Element,
    xi: &Flag,
) -> Result<PhiCocycleValues, CocycleError> {
    let b = busemann_o(o, g, xi)?;
    Ok(PhiCocycleValues {
        c: phi.apply(&b.coords.coords),
        c_bar: phi.apply(&b.iota().coords.coords),
    })
}

/// Period of the cocycle: its value at the attracting flag.
pub fn period(o: &Form, phi: &Functional, g: &Element) -> Result<f64, CocycleError> {
    Ok(phi_cocycles(o, phi, g, &attracting_flag(g)?)?.c)
}

/// Period of the dual cocycle.
pub fn dual_period(o: &Form, phi: &Functional, g: &Element) -> Result<f64, CocycleError> {
    Ok(phi_cocycles(o, phi, g, &attracting_flag(g)?)?.c_bar)
}

/// Maximal deviation of one identity family over random samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub samples: usize,
    /// Samples rejected by the genericity or transversality prechecks.
    pub skipped: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub results: Vec<IdentityResult>,
    pub pass: bool,
}

/// Random element with condition number below `1e3`.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, d: usize, field: Field) -> Element {
    loop {
        let m = gaussian_matrix(rng, d, field);
        if condition_number(&m) < 1e3 {
            return Element::from_complex(m, field).expect("well conditioned");
        }
    }
}

struct Tracker {
    name: &'static str,
    tolerance: f64,
    samples: usize,
    skipped: usize,
    max: f64,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            samples: 0,
            skipped: 0,
            max: 0.0,
        }
    }

    fn record(&mut self, dev: Result<f64, CocycleError>) {
        match dev {
            Ok(v) => {
                self.samples += 1;
                self.max = if v.is_nan() {
                    f64::INFINITY
                } else {
                    self.max.max(v)
                };
            }
            Err(_) => self.skipped += 1,
        }
    }

    fn finish(self) -> IdentityResult {
        let pass = self.samples > 0 && self.max <= self.tolerance;
        IdentityResult {
            name: self.name.to_string(),
            samples: self.samples,
            skipped: self.skipped,
            max_deviation: self.max,
            tolerance: self.tolerance,
            pass,
        }
    }
}

/// Runs the cocycle, coboundary, duality, Gromov transformation,
/// cross-ratio and projection identities on `n` random inputs each.
pub fn identity_suites<R: Rng + ?Sized>(o: &Form, rng: &mut R, n: usize) -> IdentityReport {
    let d = o.dim();
    let f = o.field();
    let mut cocycle_tau = Tracker::new("cocycle_tau", 1e-9);
    let mut cocycle_o = Tracker::new("cocycle_o", 1e-9);
    let mut coboundary = Tracker::new("coboundary", 1e-8);
    let mut duality = Tracker::new("duality", 1e-8);
    let mut gromov = Tracker::new("gromov_transformation", 1e-8);
    let mut cross = Tracker::new("cross_ratio_gromov", 1e-8);
    let mut invariance = Tracker::new("cross_ratio_invariance", 1e-8);
    let mut projection = Tracker::new("busemann_projection", 1e-8);
    let mut equivariance = Tracker::new("projection_equivariance", 1e-8);
    for _ in 0..n {
        let g1 = random_element(rng, d, f);
        let g2 = random_element(rng, d, f);
        let xi = Flag::random(rng, d, f);
        let eta = Flag::random(rng, d, f);
        let g12 = &g1 * &g2;
        let xi2 = xi.apply(g2.matrix());

        let lhs = busemann_tau(&g12, &xi);
        let rhs = busemann_tau(&g1, &xi2).add(&busemann_tau(&g2, &xi));
        cocycle_tau.record(Ok(lhs.deviation(&rhs)));

        cocycle_o.record((|| {
            let lhs = busemann_o(o, &g12, &xi)?;
            let rhs = busemann_o(o, &g1, &xi2)?.add(&busemann_o(o, &g2, &xi)?);
            Ok(lhs.deviation(&rhs))
        })());

        coboundary.record((|| {
            let lhs = potential_v(o, &xi2)?.sub(&potential_v(o, &xi)?);
            let rhs = busemann_o(o, &g2, &xi)?.sub(&busemann_tau(&g2, &xi));
            Ok(lhs.deviation(&rhs))
        })());

        duality.record(dual_busemann(o, &g1, &xi).map(|c| c.deviation));

        gromov.record((|| {
            let before = gromov_product(o, &xi, &eta)?;
            let after = gromov_product(o, &xi.apply(g1.matrix()), &eta.apply(g1.matrix()))?;
            let expected = busemann_o(o, &g1, &xi)?
                .iota()
                .add(&busemann_o(o, &g1, &eta)?)
                .scale(-1.0);
            Ok(after.sub(&before).deviation(&expected))
        })());

        cross.record((|| {
            let gp = gromov_product(o, &xi, &eta)?;
            let b = cross_ratio(&flag_perp(o, &eta), &flag_perp(o, &xi), &xi, &eta)?;
            Ok(gp.deviation(&b.scale(-0.5)))
        })());

        invariance.record((|| {
            let x3 = Flag::random(rng, d, f);
            let x4 = Flag::random(rng, d, f);
            let a = cross_ratio(&xi, &eta, &x3, &x4)?;
            let m = g1.matrix();
            let b = cross_ratio(&xi.apply(m), &eta.apply(m), &x3.apply(m), &x4.apply(m))?;
            Ok(a.deviation(&b))
        })());

        projection.record((|| {
            let direct = busemann_o(o, &g1, &xi)?;
            Ok(direct.deviation(&busemann_via_projections(o, &g1, &xi)?))
        })());

        // Pi^(g o)(g xi) = g^-* Pi^o(xi) g^-1, with (g o) the pushed form
        equivariance.record((|| {
            let g = g1.matrix().entries();
            let gi = g
                .clone()
                .try_inverse()
                .ok_or(CocycleError::Numerics(NumericsError::Singular))?;
            let gram = gi.adjoint() * o.gram() * &gi;
            let pushed = Form::new((&gram + gram.adjoint()).scale(0.5), f)?;
            let t = project_to_so(o, &xi)?;
            let lhs = project_to_so(&pushed, &xi.apply(g1.matrix()))?;
            let rhs = gi.adjoint() * t * &gi;
            Ok((lhs - &rhs).norm() / rhs.norm())
        })());
    }
    let results: Vec<IdentityResult> = [
        cocycle_tau,
        cocycle_o,
        coboundary,
        duality,
        gromov,
        cross,
        invariance,
        projection,
        equivariance,
    ]
    .into_iter()
    .map(Tracker::finish)
    .collect();
    let pass = results.iter().all(|r| r.pass);
    IdentityReport { results, pass }
}

//! The `(p,q)`-Cartan projection `b°`: membership in the set of elements
//! admitting a `(p,q)`-Cartan decomposition, the slot vector, the Weyl
//! coordinate `w_g`, and the prediction of the chamber from the Cartan
//! attractor and repellor.

use serde::{Deserialize, Serialize};

use crate::flags::{o_generic, OrbitSignature};
use crate::forms::Form;
use crate::numerics::{eigen, Element, NumericsError, ScaledMatrix, C64};
use crate::projections::{
    cartan_attractor, cartan_repellor, has_gap, CartanVector, Frame, ProjectionError,
};
use crate::tol;
use crate::weyl::{embed_compatible, ChamberA, WeylElement};

/// Below this log gap between the two largest moduli of some exterior power
/// the slower single-level path is used.
const FAST_PATH_LOG_GAP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NotInBoG {
    ComplexSpectrum { phase: f64 },
    NonDiagonalizable { condition: f64 },
    IsotropicEigenline { margin: f64 },
}

impl std::fmt::Display for NotInBoG {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NotInBoG::ComplexSpectrum { phase } => {
                write!(f, "complex spectrum (phase {phase:.3e})")
            }
            NotInBoG::NonDiagonalizable { condition } => {
                write!(f, "not diagonalizable (condition {condition:.3e})")
            }
            NotInBoG::IsotropicEigenline { margin } => {
                write!(f, "isotropic eigenline (margin {margin:.3e})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PqError {
    #[error("element has no (p,q)-Cartan decomposition: {0}")]
    NotInBoG(NotInBoG),
    #[error("result near the degenerate locus (isotropy margin {:.3e})", .0.margins.isotropy)]
    NearDegenerate(Box<PqCartanResult>),
    #[error("attractor or repellor is not generic")]
    NonGeneric,
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// Smallest log gap between distinct moduli of the self adjoint factor
    /// (infinite when there is a single modulus).
    pub modulus_gap: f64,
    /// Smallest `|<v,v>_o| / |v|^2` over the eigenlines used.
    pub isotropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PqCartanResult {
    /// `b°(g)` in the slot frame.
    pub b_o: CartanVector,
    /// Sends sorted position `k` of `half_jordan` to its slot.
    pub w_g: WeylElement,
    /// Signs of the eigenlines of the self adjoint factor, in decreasing
    /// modulus order.
    pub eigen_signs: Vec<i8>,
    /// Half the Jordan projection of the self adjoint factor, sorted.
    pub half_jordan: Vec<f64>,
    pub margins: Margins,
    pub degenerate: bool,
}

impl PqCartanResult {
    pub fn distance(&self) -> f64 {
        self.b_o.norm()
    }
}

struct SortedLines {
    values: Vec<f64>,
    signs: Vec<i8>,
    margins: Margins,
}

/// Top eigenline data of every exterior power of the self adjoint factor.
/// Returns `None` when some level has no clear top eigenvalue.
fn fast_path(o: &Form, s: &Element) -> Result<Option<SortedLines>, PqError> {
    let d = s.dim();
    let mut chi = Vec::with_capacity(d);
    let mut level_signs = vec![1.0f64];
    let mut isotropy = f64::INFINITY;
    let mut modulus_gap = f64::INFINITY;
    for j in 1..d {
        let a = s.level(j);
        let e = eigen(a)?;
        if e.log_moduli.len() > 1 {
            let gap = e.log_moduli[0] - e.log_moduli[1];
            if !(gap > FAST_PATH_LOG_GAP) {
                return Ok(None);
            }
            modulus_gap = modulus_gap.min(gap / 2.0);
        }
        let phase = real_phase_defect(e.values[0]);
        if phase > tol::REAL_PHASE {
            return Err(PqError::NotInBoG(NotInBoG::ComplexSpectrum { phase }));
        }
        let v = e.vectors.column(0).into_owned();
        let n = o.induced_norm2(j, &v);
        let scale = o.induced_gram(j).norm().max(1.0);
        isotropy = isotropy.min(n.abs() / scale);
        level_signs.push(n.signum());
        chi.push(0.5 * e.log_moduli[0]);
    }
    let chi_d = 0.5 * s.log_abs_det();
    let values = crate::projections::coords_from_prefix(&chi, chi_d);
    let mut signs: Vec<i8> = (1..d)
        .map(|j| (level_signs[j] * level_signs[j - 1]) as i8)
        .collect();
    let total: i8 = signs.iter().product();
    let det_sign: i8 = if o.q().is_multiple_of(2) { 1 } else { -1 };
    signs.push(total * det_sign);
    Ok(Some(SortedLines {
        values,
        signs,
        margins: Margins {
            modulus_gap,
            isotropy,
        },
    }))
}

/// Distance of the argument of `z` to `{0, pi}`.
fn real_phase_defect(z: C64) -> f64 {
    let a = z.arg().abs();
    a.min(std::f64::consts::PI - a)
}

/// Single level path: full eigen decomposition of the self adjoint factor,
/// eigenvalues grouped by modulus; each group is split by the signature of
/// the form on the sum of the `+r` and `-r` eigenspaces.
fn cluster_path(o: &Form, s: &Element) -> Result<SortedLines, PqError> {
    let d = s.dim();
    let m = s.matrix();
    let e = eigen(m)?;
    for z in &e.values {
        let phase = real_phase_defect(*z);
        if phase > tol::REAL_PHASE {
            return Err(PqError::NotInBoG(NotInBoG::ComplexSpectrum { phase }));
        }
    }
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for k in 1..=d {
        if k == d || e.log_moduli[start] - e.log_moduli[k] > tol::CLUSTER_LOG_GAP {
            clusters.push((start, k));
            start = k;
        }
    }
    let mut modulus_gap = f64::INFINITY;
    for w in clusters.windows(2) {
        modulus_gap = modulus_gap.min(0.5 * (e.log_moduli[w[0].0] - e.log_moduli[w[1].0]));
    }
    if !e.diagonalizable {
        return Err(PqError::NotInBoG(NotInBoG::NonDiagonalizable {
            condition: e.condition,
        }));
    }
    let mut log_values = Vec::with_capacity(d);
    let mut signs = Vec::with_capacity(d);
    let mut isotropy = f64::INFINITY;
    for &(a, b) in &clusters {
        let mult = b - a;
        // eigenvectors of +r and -r together span an o-nondegenerate subspace
        let space = e.vectors.columns(a, mult).into_owned();
        let gram = space.adjoint() * o.gram() * &space;
        let (vals, _) = crate::numerics::hermitian_eigen(&gram);
        let max = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let min = vals.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        let margin = if max > 0.0 { min / max } else { 0.0 };
        isotropy = isotropy.min(margin);
        if margin < tol::DEGENERATE_RESTRICTION {
            return Err(PqError::NotInBoG(NotInBoG::IsotropicEigenline { margin }));
        }
        let pos = vals.iter().filter(|&&v| v > 0.0).count();
        for i in 0..mult {
            signs.push(if i < pos { 1 } else { -1 });
            log_values.push(e.log_moduli[a]);
        }
    }
    let chi_d = 0.5 * s.log_abs_det();
    let shift = chi_d / d as f64;
    let values = log_values.iter().map(|l| 0.5 * l - shift).collect();
    Ok(SortedLines {
        values,
        signs,
        margins: Margins {
            modulus_gap,
            isotropy,
        },
    })
}

fn sorted_lines(o: &Form, g: &Element) -> Result<SortedLines, PqError> {
    let s = o.self_adjoint_part(g);
    match fast_path(o, &s)? {
        Some(lines) => Ok(lines),
        None => cluster_path(o, &s),
    }
}

/// `Ok(())` exactly when `g` admits a `(p,q)`-Cartan decomposition.
pub fn membership(o: &Form, g: &Element) -> Result<(), PqError> {
    match sorted_lines(o, g) {
        Ok(_) => Ok(()),
        Err(e) => Err(e),
    }
}

/// `b°(g)` and its Weyl coordinate.
pub fn pq_project(o: &Form, g: &Element) -> Result<PqCartanResult, PqError> {
    let lines = sorted_lines(o, g)?;
    let (p, q) = o.signature();
    let plus = lines.signs.iter().filter(|&&s| s > 0).count();
    if plus != p {
        return Err(PqError::NotInBoG(NotInBoG::IsotropicEigenline {
            margin: lines.margins.isotropy,
        }));
    }
    let w_g = embed_compatible(&lines.signs, p).expect("sign count checked");
    let b = w_g.act(&lines.values);
    let degenerate = lines.margins.isotropy < tol::DEGENERATE_RESTRICTION;
    let result = PqCartanResult {
        b_o: CartanVector {
            coords: b,
            frame: Frame::Slots { p, q },
        },
        w_g,
        eigen_signs: lines.signs,
        half_jordan: lines.values,
        margins: lines.margins,
        degenerate,
    };
    if degenerate {
        return Err(PqError::NearDegenerate(Box::new(result)));
    }
    Ok(result)
}

pub fn pq_project_matrix(o: &Form, g: &ScaledMatrix) -> Result<PqCartanResult, PqError> {
    pq_project(o, &Element::from_matrix(g)?)
}

/// Distance between the fixed set of the involution and its image under `g`.
pub fn distance_so(o: &Form, g: &Element) -> Result<f64, PqError> {
    pq_project(o, g).map(|r| r.distance())
}

/// Chamber and Weyl coordinates predicted from the open orbits of the
/// Cartan attractor and repellor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChamberPrediction {
    pub attractor_signature: OrbitSignature,
    pub repellor_signature: OrbitSignature,
    /// Compatible chamber expected to contain `b°(g)`.
    pub chamber: ChamberA,
    /// Sends sorted position `k` of the Cartan projection to its slot.
    pub w_gamma: WeylElement,
    /// Weyl element taking the chamber of `iota(xi_s)` to that of `xi_u`.
    pub w: WeylElement,
}

pub fn weyl_chamber_of(o: &Form, g: &Element) -> Result<ChamberPrediction, PqError> {
    let gap = has_gap(g);
    if !gap.holds {
        return Err(ProjectionError::NoGap(gap.margin).into());
    }
    let u = cartan_attractor(g)?;
    let s = cartan_repellor(g)?;
    let su = o_generic(o, &u).signature.ok_or(PqError::NonGeneric)?;
    let ss = o_generic(o, &s).signature.ok_or(PqError::NonGeneric)?;
    let chamber = ChamberA::from_pattern(&ss.reversed().signs);
    let xi_u = ChamberA::from_pattern(&su.signs);
    let mut perm = vec![0; o.dim()];
    for k in 0..o.dim() {
        perm[chamber.line_order[k]] = xi_u.line_order[k];
    }
    let w = WeylElement::new(perm).expect("permutation");
    Ok(ChamberPrediction {
        attractor_signature: su,
        repellor_signature: ss,
        w_gamma: chamber.placement(),
        chamber,
        w,
    })
}

/// Fast `|b°(g)|` and the eigen signs, used inside enumeration loops.
pub fn pq_norm(o: &Form, g: &Element) -> Result<f64, PqError> {
    sorted_lines(o, g).map(|l| l.values.iter().map(|v| v * v).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Field;
    use nalgebra::{DMatrix, DVector};

    fn s1() -> Form {
        Form::standard(2, 1, Field::Real)
    }

    fn diag(v: &[f64]) -> Element {
        Element::from_real(&DMatrix::from_diagonal(&DVector::from_row_slice(v))).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn diagonal_examples() {
        let e = 1f64.exp();
        let r = pq_project(&s1(), &diag(&[e, 1.0, 1.0 / e])).unwrap();
        assert!(close(&r.b_o.coords, &[1.0, 0.0, -1.0], 1e-12));
        assert!(r.w_g.is_identity());
        assert!((r.distance() - 2f64.sqrt()).abs() < 1e-12);
        let r = pq_project(&s1(), &diag(&[1.0 / e, 1.0, e])).unwrap();
        assert!(close(&r.b_o.coords, &[0.0, -1.0, 1.0], 1e-12));
    }

    #[test]
    fn identity_is_member() {
        let r = pq_project(&s1(), &Element::identity(3, Field::Real)).unwrap();
        assert!(r.b_o.norm() < 1e-12);
    }

    #[test]
    fn rotation_mixing_signs_is_not_member() {
        let t = std::f64::consts::PI / 6.0;
        let k = DMatrix::from_row_slice(
            3,
            3,
            &[t.cos(), 0.0, t.sin(), 0.0, 1.0, 0.0, -t.sin(), 0.0, t.cos()],
        );
        let err = membership(&s1(), &Element::from_real(&k).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            PqError::NotInBoG(NotInBoG::ComplexSpectrum { .. })
        ));
    }

    #[test]
    fn prediction_for_diagonal() {
        let e = 1f64.exp();
        let g = diag(&[1.0 / e, 1.0, e]);
        let pred = weyl_chamber_of(&s1(), &g).unwrap();
        let r = pq_project(&s1(), &g).unwrap();
        assert_eq!(pred.chamber.pattern(2), r.eigen_signs);
        assert_eq!(pred.w_gamma, r.w_g);
    }

    #[test]
    fn construct_then_recover() {
        use rand::SeedableRng;
        let o = s1();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x: [f64; 3] = [1.3, 0.2, -1.5];
        for w in WeylElement::all(3) {
            for _ in 0..10 {
                let h = o.sample_isometry(&mut rng, 1.0);
                let h2 = o.sample_isometry(&mut rng, 1.0);
                let e = ScaledMatrix::from_real(&DMatrix::from_diagonal(&DVector::from_iterator(
                    3,
                    x.iter().map(|v| v.exp()),
                )))
                .unwrap();
                let wl = ScaledMatrix::new(w.lift(), Field::Real).unwrap();
                let g = h
                    .multiply(&wl)
                    .unwrap()
                    .multiply(&e)
                    .unwrap()
                    .multiply(&h2)
                    .unwrap();
                let r = pq_project_matrix(&o, &g).unwrap();
                assert!(
                    close(&r.b_o.coords, &x, 1e-8),
                    "{:?} vs {:?}",
                    r.b_o.coords,
                    x
                );
                let ginv = Element::from_matrix(&g).unwrap().inverse();
                let d1 = r.distance();
                let d2 = distance_so(&o, &ginv).unwrap();
                assert!((d1 - d2).abs() < 1e-8);
            }
        }
    }
}

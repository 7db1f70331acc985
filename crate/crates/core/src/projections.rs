//! Cartan and Jordan projections, gaps and loxodromy, Cartan attractors and
//! the attracting flags adapted to a form.

use serde::{Deserialize, Serialize};

use crate::flags::Flag;
use crate::forms::Form;

use crate::numerics::{
    self, eigen, subspace_of_wedge, wedge_pairing, CMat, CVec, Element, NumericsError,
    ScaledMatrix, C64,
};
use crate::tol;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ProjectionError {
    #[error("element has no gap (margin {0:.3e})")]
    NoGap(f64),
    #[error("element is not loxodromic (margin {0:.3e})")]
    NotLoxodromic(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Coordinate convention of a [`CartanVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Descending order.
    Sorted,
    /// Slots of the standard model: positive slots `0..p`, then negative
    /// slots.
    Slots { p: usize, q: usize },
    /// Indexed by the successive lines of a flag (cocycle values).
    Lines,
}

/// Real vector with zero sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanVector {
    pub coords: Vec<f64>,
    pub frame: Frame,
}

impl CartanVector {
    pub fn sorted(coords: Vec<f64>) -> Self {
        Self {
            coords,
            frame: Frame::Sorted,
        }
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        self.coords
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Consecutive differences `x_j - x_(j+1)` (the simple roots).
    pub fn simple_roots(&self) -> Vec<f64> {
        self.coords.windows(2).map(|w| w[0] - w[1]).collect()
    }
}

/// Coordinates from prefix sums: `x_j = chi_j - chi_(j-1) - chi_d / d`,
/// where `chi` holds `chi_1 .. chi_(d-1)`.
pub fn coords_from_prefix(chi: &[f64], chi_d: f64) -> Vec<f64> {
    let d = chi.len() + 1;
    let shift = chi_d / d as f64;
    let mut out = Vec::with_capacity(d);
    let mut prev = 0.0;
    for &c in chi.iter().chain(std::iter::once(&chi_d)) {
        out.push(c - prev - shift);
        prev = c;
    }
    out
}

/// Log singular values, recentered and sorted.  Level `j` contributes the
/// log operator norm of `Lambda^j g`, i.e. the sum of the top `j`.
pub fn cartan(g: &Element) -> CartanVector {
    let chi: Vec<f64> = g.levels().iter().map(|l| l.log_norm()).collect();
    CartanVector::sorted(coords_from_prefix(&chi, g.log_abs_det()))
}

/// Log spectral radius of a scaled matrix.
pub fn log_spectral_radius(a: &ScaledMatrix) -> Result<f64, NumericsError> {
    let m = a.entries();
    let r = if m.nrows() == 1 {
        m[(0, 0)].norm()
    } else {
        let schur = nalgebra::Schur::try_new(m.clone(), 1e-15, 10_000)
            .ok_or(NumericsError::NoConvergence)?;
        let t = schur.unpack().1;
        (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0, f64::max)
    };
    Ok(r.ln() + a.log_scale())
}

/// Log eigenvalue moduli, recentered and sorted.
pub fn jordan(g: &Element) -> Result<CartanVector, ProjectionError> {
    let chi = g
        .levels()
        .iter()
        .map(log_spectral_radius)
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(CartanVector::sorted(coords_from_prefix(
        &chi,
        g.log_abs_det(),
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub holds: bool,
    /// Smallest simple root.
    pub margin: f64,
}

fn gap_report(v: &CartanVector, tol: f64) -> GapReport {
    let margin = v.simple_roots().into_iter().fold(f64::INFINITY, f64::min);
    GapReport {
        holds: margin > tol,
        margin,
    }
}

pub fn has_gap(g: &Element) -> GapReport {
    gap_report(&cartan(g), tol::GAP)
}

pub fn is_loxodromic(g: &Element) -> Result<GapReport, ProjectionError> {
    Ok(gap_report(&jordan(g)?, tol::GAP))
}

/// Flag whose `j`-th subspace is represented by the unit `j`-vector
/// `wedges[j-1]`, `j = 1..d-1`.
pub fn flag_from_wedges(d: usize, wedges: &[CVec]) -> Flag {
    let mut basis = CMat::zeros(d, d);
    for j in 1..d {
        let w = subspace_of_wedge(d, j, &wedges[j - 1]);
        // component of the j-th subspace orthogonal to the previous columns
        let prev = basis.columns(0, j - 1).into_owned();
        let resid = &w - &prev * (prev.adjoint() * &w);
        basis.set_column(j - 1, &numerics::svd(&resid).u.column(0));
    }
    // last column: orthogonal complement of the hyperplane
    let prev = basis.columns(0, d - 1).into_owned();
    let comp = numerics::null_space(&prev.adjoint(), 1e-8);
    basis.set_column(d - 1, &comp.column(0));
    Flag::from_basis_unchecked(&basis)
}

fn top_left_singular(a: &ScaledMatrix) -> CVec {
    numerics::svd(a.entries()).u.column(0).into_owned()
}

/// Left singular flag of `g` (Cartan attractor).
pub fn cartan_attractor(g: &Element) -> Result<Flag, ProjectionError> {
    let gap = has_gap(g);
    if !gap.holds {
        return Err(ProjectionError::NoGap(gap.margin));
    }
    let wedges: Vec<CVec> = g.levels().iter().map(top_left_singular).collect();
    Ok(flag_from_wedges(g.dim(), &wedges))
}

/// Cartan attractor of the inverse.
pub fn cartan_repellor(g: &Element) -> Result<Flag, ProjectionError> {
    cartan_attractor(&g.inverse())
}

/// Eigenvalue of largest modulus (of the normalized entries) and a unit
/// eigenvector.
pub fn top_eigen(a: &ScaledMatrix) -> Result<(C64, CVec), NumericsError> {
    if a.dim() == 1 {
        return Ok((
            a.entries()[(0, 0)],
            CVec::from_element(1, C64::new(1.0, 0.0)),
        ));
    }
    let e = eigen(a)?;
    Ok((e.values[0], e.vectors.column(0).into_owned()))
}

/// Attracting fixed flag of a loxodromic element.
pub fn attracting_flag(g: &Element) -> Result<Flag, ProjectionError> {
    let lox = is_loxodromic(g)?;
    if !lox.holds {
        return Err(ProjectionError::NotLoxodromic(lox.margin));
    }
    let wedges = g
        .levels()
        .iter()
        .map(|l| top_eigen(l).map(|(_, v)| v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(flag_from_wedges(g.dim(), &wedges))
}

/// Repelling fixed flag: attracting flag of the inverse.
pub fn repelling_flag(g: &Element) -> Result<Flag, ProjectionError> {
    attracting_flag(&g.inverse())
}

/// Attracting flag of `g sigma(g^-1)`.
pub fn o_attractor(o: &Form, g: &Element) -> Result<Flag, ProjectionError> {
    attracting_flag(&(g * &o.star_element(g)))
}

/// `o_attractor(g^-1)`, the repelling flag of `sigma(g^-1) g`.
pub fn o_repellor(o: &Form, g: &Element) -> Result<Flag, ProjectionError> {
    o_attractor(o, &g.inverse())
}

/// Quantities behind the `(r, eps)`-loxodromy test on one exterior power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelLoxodromy {
    pub level: usize,
    /// Distance between the attracting line and the repelling hyperplane.
    pub separation: f64,
    /// Norm of `Lambda^j g` on the repelling hyperplane divided by the top
    /// eigenvalue modulus.
    pub contraction_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoxodromyCheck {
    pub holds: bool,
    pub levels: Vec<LevelLoxodromy>,
}

/// Per level separation and contraction data of a loxodromic element.
pub fn loxodromy_levels(g: &Element) -> Result<Vec<LevelLoxodromy>, ProjectionError> {
    let plus = attracting_flag(g)?;
    let minus = repelling_flag(g)?;
    let d = g.dim();
    let mut out = Vec::with_capacity(d - 1);
    for j in 1..d {
        let a = g.level(j);
        let (mu, _) = top_eigen(a)?;
        let omega_minus = minus.wedge(d - j);
        let e_plus = plus.wedge(j);
        let separation = wedge_pairing(d, j, &e_plus, &omega_minus).norm();
        // hyperplane = kernel of v -> v ^ omega_minus
        let n = e_plus.len();
        let functional = CMat::from_fn(1, n, |_, k| {
            let mut unit = CVec::zeros(n);
            unit[k] = C64::new(1.0, 0.0);
            wedge_pairing(d, j, &unit, &omega_minus)
        });
        let hyper = numerics::null_space(&functional, 1e-10);
        let restricted = a.entries() * hyper;
        let norm = numerics::top_singular_value(&restricted);
        out.push(LevelLoxodromy {
            level: j,
            separation,
            contraction_ratio: norm / mu.norm(),
        });
    }
    Ok(out)
}

/// Sufficient test for `(r, eps)`-loxodromy: on every level the attracting
/// line is `2r` away from the repelling hyperplane, and the operator bound
/// `ratio <= eps^2 / (1 + eps)` guarantees that lines `eps` away from the
/// hyperplane are mapped into the `eps`-ball around the attracting line.
pub fn check_r_eps_loxodromic(
    g: &Element,
    r: f64,
    eps: f64,
) -> Result<LoxodromyCheck, ProjectionError> {
    let levels = loxodromy_levels(g)?;
    let bound = eps * eps / (1.0 + eps);
    let holds = levels
        .iter()
        .all(|l| l.separation >= 2.0 * r && l.contraction_ratio <= bound);
    Ok(LoxodromyCheck { holds, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn diag(v: &[f64]) -> Element {
        Element::from_real(&DMatrix::from_diagonal(&DVector::from_row_slice(v))).unwrap()
    }

    #[test]
    fn cartan_of_diagonal() {
        let a = cartan(&diag(&[2.0, 1.0, 0.5]));
        let l2 = 2f64.ln();
        for (x, y) in a.coords.iter().zip([l2, 0.0, -l2]) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(cartan(&Element::identity(3, numerics::Field::Real)).norm() < 1e-14);
    }

    #[test]
    fn jordan_of_triangular_and_unipotent() {
        let g = Element::from_real(&DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 5.0, 1.0, 0.0, 1.0, 7.0, 0.0, 0.0, 0.5],
        ))
        .unwrap();
        let l = jordan(&g).unwrap();
        assert!((l.coords[0] - 2f64.ln()).abs() < 1e-10);
        let u = Element::from_real(&DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 3.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        assert!(jordan(&u).unwrap().norm() < 1e-6);
    }

    #[test]
    fn rotation_is_not_loxodromic() {
        let t: f64 = 0.4;
        let g = Element::from_real(&DMatrix::from_row_slice(
            3,
            3,
            &[t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        assert!(!is_loxodromic(&g).unwrap().holds);
        assert!(has_gap(&diag(&[4.0, 2.0, 1.0])).holds);
    }

    #[test]
    fn attractor_of_diagonal_is_standard() {
        let u = cartan_attractor(&diag(&[4.0, 2.0, 1.0])).unwrap();
        assert!(u.distance(&Flag::standard(3)) < 1e-12);
    }

    #[test]
    fn r_eps_loxodromy_of_diagonal() {
        let e5 = 5f64.exp();
        let g = diag(&[e5, 1.0, 1.0 / e5]);
        assert!(check_r_eps_loxodromic(&g, 0.1, 0.1).unwrap().holds);
    }

    #[test]
    fn r_eps_fails_when_attractor_near_repelling_hyperplane() {
        // eigenvector e1 + 0.01 e2 nearly inside span(e2, e3)
        let p = DMatrix::from_row_slice(3, 3, &[0.01, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let e5 = 5f64.exp();
        let d = DMatrix::from_diagonal(&DVector::from_row_slice(&[e5, 1.0, 1.0 / e5]));
        let g = &p * d * p.clone().try_inverse().unwrap();
        assert!(
            !check_r_eps_loxodromic(&Element::from_real(&g).unwrap(), 0.1, 0.1)
                .unwrap()
                .holds
        );
    }
}

//! Forms of signature `(p,q)`, the adjoint and involution they define,
//! induced forms on exterior powers and orthogonal complements.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::jsonmat::{self, MatrixJsonError, Scalar};
use crate::numerics::{
    self, compound_plain, hermitian_eigen, CMat, CVec, Element, Field, ScaledMatrix, C64,
};
use crate::tol;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FormError {
    #[error("gram matrix is not square")]
    NotSquare,
    #[error("dimension {0} is outside the supported range 2..=8")]
    Dimension(usize),
    #[error("gram matrix is not self adjoint (defect {0:.3e})")]
    NotSelfAdjoint(f64),
    #[error("gram matrix is singular")]
    Singular,
    #[error("complex entries in a real form")]
    NotReal,
    #[error("subspace basis is rank deficient")]
    RankDeficient,
    #[error("subspace is degenerate for the form (margin {0:.3e})")]
    Degenerate(f64),
    #[error("invalid matrix: {0}")]
    Matrix(#[from] MatrixJsonError),
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
}

/// Induced form on `Lambda^j V`: the `j`-th compound of the gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedForm {
    pub level: usize,
    pub gram: CMat,
}

impl InducedForm {
    pub fn inner(&self, u: &CVec, v: &CVec) -> C64 {
        (u.adjoint() * &self.gram * v)[(0, 0)]
    }

    pub fn norm2(&self, v: &CVec) -> f64 {
        self.inner(v, v).re
    }
}

/// A nondegenerate symmetric or Hermitian form.
#[derive(Clone, Debug)]
pub struct Form {
    gram: CMat,
    gram_inv: CMat,
    field: Field,
    p: usize,
    q: usize,
    // compounds of the gram matrix and of its inverse, levels 0..=d
    induced: Vec<CMat>,
    induced_inv: Vec<CMat>,
    // sign vectors when every induced gram is a diagonal sign matrix
    signed_diagonal: Option<Vec<Vec<f64>>>,
}

impl PartialEq for Form {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.gram == other.gram
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormJson {
    pub field: Field,
    pub gram: Vec<Vec<Scalar>>,
}

impl Form {
    pub fn new(gram: CMat, field: Field) -> Result<Self, FormError> {
        let (n, m) = gram.shape();
        if n != m {
            return Err(FormError::NotSquare);
        }
        if !(2..=tol::MAX_DIM).contains(&n) {
            return Err(FormError::Dimension(n));
        }
        if field == Field::Real && gram.iter().any(|z| z.im != 0.0) {
            return Err(FormError::NotReal);
        }
        let scale = gram.norm();
        let defect = (&gram - gram.adjoint()).norm();
        if defect > tol::HERMITIAN * scale.max(1.0) {
            return Err(FormError::NotSelfAdjoint(defect));
        }
        let gram = (&gram + gram.adjoint()).scale(0.5);
        let (vals, _) = hermitian_eigen(&gram);
        let max = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if max == 0.0 || vals.iter().any(|v| v.abs() < 1e-12 * max) {
            return Err(FormError::Singular);
        }
        let p = vals.iter().filter(|&&v| v > 0.0).count();
        let q = n - p;
        let gram_inv = gram.clone().try_inverse().ok_or(FormError::Singular)?;
        let induced: Vec<CMat> = (0..=n).map(|j| compound_plain(&gram, j)).collect();
        let induced_inv: Vec<CMat> = (0..=n).map(|j| compound_plain(&gram_inv, j)).collect();
        let signed_diagonal = signed_diagonals(&induced);
        Ok(Self {
            gram,
            gram_inv,
            field,
            p,
            q,
            induced,
            induced_inv,
            signed_diagonal,
        })
    }

    pub fn from_real(gram: &DMatrix<f64>) -> Result<Self, FormError> {
        Self::new(numerics::real_matrix(gram), Field::Real)
    }

    /// `diag(I_p, -I_q)`.
    pub fn standard(p: usize, q: usize, field: Field) -> Self {
        let d = p + q;
        let gram = CMat::from_fn(d, d, |i, k| {
            if i != k {
                C64::new(0.0, 0.0)
            } else if i < p {
                C64::new(1.0, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            }
        });
        Self::new(gram, field).expect("standard form")
    }

    pub fn from_json(j: &FormJson) -> Result<Self, FormError> {
        let gram = jsonmat::from_rows(&j.gram, j.field)?;
        Self::new(gram, j.field)
    }

    pub fn to_json(&self) -> FormJson {
        FormJson {
            field: self.field,
            gram: jsonmat::to_rows(&self.gram, self.field),
        }
    }

    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    pub fn gram_inv(&self) -> &CMat {
        &self.gram_inv
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// True when the gram matrix is `diag(I_p, -I_q)`.
    pub fn is_standard(&self) -> bool {
        *self == Self::standard(self.p, self.q, self.field)
    }

    /// Matrix `P` with `P* J P = diag(I_p, -I_q)`; its columns are the
    /// reference lines and the inner product making them orthonormal is the
    /// point of the symmetric space attached to this form.
    pub fn standardizer(&self) -> CMat {
        let (vals, vecs) = hermitian_eigen(&self.gram);
        let d = self.dim();
        CMat::from_fn(d, d, |i, k| vecs[(i, k)] / vals[k].abs().sqrt())
    }

    pub fn inner(&self, u: &CVec, v: &CVec) -> C64 {
        (u.adjoint() * &self.gram * v)[(0, 0)]
    }

    pub fn induced_form(&self, j: usize) -> InducedForm {
        InducedForm {
            level: j,
            gram: self.induced[j].clone(),
        }
    }

    pub(crate) fn induced_gram(&self, j: usize) -> &CMat {
        &self.induced[j]
    }

    /// `<v, v>` for the form induced on `Lambda^j V`.
    pub fn induced_norm2(&self, j: usize, v: &CVec) -> f64 {
        match &self.signed_diagonal {
            Some(signs) => v.iter().zip(&signs[j]).map(|(z, s)| s * z.norm_sqr()).sum(),
            None => (v.adjoint() * &self.induced[j] * v)[(0, 0)].re,
        }
    }

    /// `<u, v>` for the form induced on `Lambda^j V`.
    pub fn induced_inner(&self, j: usize, u: &CVec, v: &CVec) -> C64 {
        match &self.signed_diagonal {
            Some(signs) => u
                .iter()
                .zip(v.iter())
                .zip(&signs[j])
                .map(|((a, b), s)| a.conj() * b * *s)
                .sum(),
            None => (u.adjoint() * &self.induced[j] * v)[(0, 0)],
        }
    }

    /// `J^-1 g* J`, the adjoint of `g` for this form.
    pub fn o_adjoint(&self, g: &ScaledMatrix) -> ScaledMatrix {
        let m = &self.gram_inv * g.entries().adjoint() * &self.gram;
        ScaledMatrix::from_parts(m, g.log_scale(), g.field())
    }

    /// `sigma(g) = star(g^-1)`.
    pub fn sigma(&self, g: &ScaledMatrix) -> Result<ScaledMatrix, FormError> {
        Ok(self.o_adjoint(&g.inverse()?))
    }

    /// Level `j` of the adjoint: `J_j^-1 A* J_j` for `A = Lambda^j g`.
    pub(crate) fn star_level(&self, j: usize, a: &ScaledMatrix) -> ScaledMatrix {
        let m = match &self.signed_diagonal {
            Some(signs) => {
                let s = &signs[j];
                let e = a.entries();
                CMat::from_fn(e.nrows(), e.ncols(), |r, c| {
                    e[(c, r)].conj() * (s[r] * s[c])
                })
            }
            None => &self.induced_inv[j] * a.entries().adjoint() * &self.induced[j],
        };
        ScaledMatrix::from_parts(m, a.log_scale(), a.field())
    }

    /// Adjoint of an element, level by level.
    pub fn star_element(&self, g: &Element) -> Element {
        let d = g.dim();
        let levels = (1..d).map(|j| self.star_level(j, g.level(j))).collect();
        Element::from_levels(levels, g.log_abs_det())
    }

    /// `sigma(g)` as an element, without inverting any matrix.
    pub fn sigma_element(&self, g: &Element) -> Element {
        self.star_element(&g.inverse())
    }

    /// Self adjoint factor `star(g) g = sigma(g^-1) g`.
    pub fn self_adjoint_part(&self, g: &Element) -> Element {
        &self.star_element(g) * g
    }

    /// Basis of the orthogonal complement of the span of `basis`.
    pub fn perp(&self, basis: &CMat) -> Result<CMat, FormError> {
        let d = self.dim();
        if basis.nrows() != d {
            return Err(FormError::RankDeficient);
        }
        let k = basis.ncols();
        if k == 0 {
            return Ok(CMat::identity(d, d));
        }
        let sv = numerics::singular_values(basis);
        if sv[sv.len() - 1] < 1e-12 * sv[0] {
            return Err(FormError::RankDeficient);
        }
        let constraints = basis.adjoint() * &self.gram;
        let null = numerics::null_space(&constraints, 1e-10);
        if null.ncols() != d - k {
            return Err(FormError::RankDeficient);
        }
        Ok(null)
    }

    /// Signature of the form restricted to the span of `basis`.
    pub fn restricted_signature(&self, basis: &CMat) -> Result<(usize, usize), FormError> {
        let g = basis.adjoint() * &self.gram * basis;
        let (vals, _) = hermitian_eigen(&g);
        let max = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let min = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        if max == 0.0 || min < tol::DEGENERATE_RESTRICTION * max {
            return Err(FormError::Degenerate(if max == 0.0 {
                0.0
            } else {
                min / max
            }));
        }
        let pos = vals.iter().filter(|&&v| v > 0.0).count();
        Ok((pos, vals.len() - pos))
    }

    /// Random element of the Lie algebra `{X : star(X) = -X}` with Gaussian
    /// coordinates of standard deviation `scale`.
    pub fn sample_algebra<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> CMat {
        let d = self.dim();
        let mut a = CMat::zeros(d, d);
        for i in 0..d {
            for k in i..d {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = if self.field == Field::Complex {
                    rng.sample(StandardNormal)
                } else {
                    0.0
                };
                let z = C64::new(re, im) * scale;
                if i == k {
                    a[(i, i)] = C64::new(0.0, z.im);
                } else {
                    a[(i, k)] = z;
                    a[(k, i)] = -z.conj();
                }
            }
        }
        // J X is anti-Hermitian exactly when star(X) = -X
        &self.gram_inv * a
    }

    /// Random isometry `exp(X)` of the form.
    pub fn sample_isometry<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> ScaledMatrix {
        let x = self.sample_algebra(rng, scale);
        let h = x.exp();
        let h = if self.field == Field::Real {
            h.map(|z| C64::new(z.re, 0.0))
        } else {
            h
        };
        ScaledMatrix::from_parts(h, 0.0, self.field)
    }
}

fn signed_diagonals(induced: &[CMat]) -> Option<Vec<Vec<f64>>> {
    induced
        .iter()
        .map(|m| {
            let n = m.nrows();
            let mut s = Vec::with_capacity(n);
            for i in 0..n {
                for k in 0..n {
                    let z = m[(i, k)];
                    if i == k {
                        if z.im != 0.0 || (z.re != 1.0 && z.re != -1.0) {
                            return None;
                        }
                    } else if z.re != 0.0 || z.im != 0.0 {
                        return None;
                    }
                }
                s.push(m[(i, i)].re);
            }
            Some(s)
        })
        .collect()
}

//! Full flags, transversality, genericity with respect to a form, open
//! orbit signatures, orthogonal flags and the projection to the space of
//! inner products adapted to the form.

use serde::{Deserialize, Serialize};

use crate::forms::Form;
use crate::jsonmat::{self, MatrixJsonError, Scalar};
use crate::numerics::{
    self, condition_number, hermitian_eigen, wedge, CMat, CVec, Field, ScaledMatrix, C64,
};
use crate::tol;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FlagError {
    #[error("flag basis is not square")]
    NotSquare,
    #[error("flag basis is ill conditioned (condition {0:.3e})")]
    IllConditioned(f64),
    #[error("flag is not generic for the form (margin {margin:.3e} at level {level})")]
    NotGeneric { level: usize, margin: f64 },
    #[error("dimension mismatch")]
    Dimension,
    #[error("invalid matrix: {0}")]
    Matrix(#[from] MatrixJsonError),
}

/// Full flag; `basis` is unitary and its first `j` columns span the `j`-th
/// subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Flag {
    basis: CMat,
}

impl Flag {
    /// Flag spanned by the leading columns of an invertible basis.
    pub fn new(basis: &CMat) -> Result<Self, FlagError> {
        if basis.nrows() != basis.ncols() || basis.nrows() == 0 {
            return Err(FlagError::NotSquare);
        }
        let normalized = CMat::from_fn(basis.nrows(), basis.ncols(), |i, k| {
            basis[(i, k)] / basis.column(k).norm()
        });
        let cond = condition_number(&normalized);
        if !(cond <= tol::CONDITION_CAP) {
            return Err(FlagError::IllConditioned(cond));
        }
        Ok(Self::from_basis_unchecked(&normalized))
    }

    pub(crate) fn from_basis_unchecked(basis: &CMat) -> Self {
        Self {
            basis: numerics::orthonormalize(basis),
        }
    }

    /// Flag spanned by the columns of a Gaussian matrix.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R, d: usize, field: Field) -> Self {
        Self::from_basis_unchecked(&numerics::gaussian_matrix(rng, d, field))
    }

    /// The coordinate flag `<e_1> < <e_1,e_2> < ...`.
    pub fn standard(d: usize) -> Self {
        Self {
            basis: CMat::identity(d, d),
        }
    }

    pub fn from_columns_json(cols: &[Vec<Scalar>], field: Field) -> Result<Self, FlagError> {
        Self::new(&jsonmat::from_columns(cols, field)?)
    }

    pub fn to_columns_json(&self, field: Field) -> Vec<Vec<Scalar>> {
        jsonmat::to_columns(&self.basis, field)
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Unitary basis adapted to the flag.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// Orthonormal basis of the `j`-th subspace.
    pub fn subspace(&self, j: usize) -> CMat {
        self.basis.columns(0, j).into_owned()
    }

    /// Unit Plucker vector of the `j`-th subspace.
    pub fn wedge(&self, j: usize) -> CVec {
        wedge(&self.subspace(j))
    }

    /// Image under a linear map.
    pub fn apply(&self, g: &ScaledMatrix) -> Self {
        Self::from_basis_unchecked(&(g.entries() * &self.basis))
    }

    /// Largest over levels of the sine of the angle between the `j`-th
    /// exterior powers.
    pub fn distance(&self, other: &Self) -> f64 {
        (1..self.dim())
            .map(|j| {
                let m = self.subspace(j).adjoint() * other.subspace(j);
                let c = m.determinant().norm().min(1.0);
                (1.0 - c * c).max(0.0).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Smallest singular value of `[x^j | y^(d-j)]` over all levels.
pub fn transversality_margin(x: &Flag, y: &Flag) -> f64 {
    let d = x.dim();
    (1..d)
        .map(|j| {
            let mut m = CMat::zeros(d, d);
            m.columns_mut(0, j).copy_from(&x.basis.columns(0, j));
            m.columns_mut(j, d - j)
                .copy_from(&y.basis.columns(0, d - j));
            numerics::singular_values(&m).last().copied().unwrap_or(0.0)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn transverse(x: &Flag, y: &Flag) -> bool {
    x.dim() == y.dim() && transversality_margin(x, y) > tol::TRANSVERSE
}

/// Signs of the form on the orthogonal lines of a generic flag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrbitSignature {
    pub signs: Vec<i8>,
    pub prefix_signatures: Vec<(usize, usize)>,
}

impl OrbitSignature {
    pub fn from_signs(signs: Vec<i8>) -> Self {
        let mut pos = 0;
        let mut neg = 0;
        let prefix_signatures = signs
            .iter()
            .map(|&s| {
                if s > 0 {
                    pos += 1
                } else {
                    neg += 1
                }
                (pos, neg)
            })
            .collect();
        Self {
            signs,
            prefix_signatures,
        }
    }

    /// Compact text such as `++-`.
    pub fn pattern(&self) -> String {
        self.signs
            .iter()
            .map(|&s| if s > 0 { '+' } else { '-' })
            .collect()
    }

    pub fn reversed(&self) -> Self {
        Self::from_signs(self.signs.iter().rev().copied().collect())
    }
}

impl std::fmt::Display for OrbitSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.pattern())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Genericity {
    pub generic: bool,
    /// Smallest ratio `min |eig| / max |eig|` of the restricted Gram
    /// matrices.
    pub margin: f64,
    pub worst_level: usize,
    pub signature: Option<OrbitSignature>,
}

/// Genericity of a flag for the form: every subspace must be nondegenerate.
pub fn o_generic(o: &Form, x: &Flag) -> Genericity {
    let d = x.dim();
    let mut margin = f64::INFINITY;
    let mut worst_level = 0;
    let mut prefix = Vec::with_capacity(d);
    for j in 1..=d {
        let b = x.subspace(j);
        let g = b.adjoint() * o.gram() * &b;
        let (vals, _) = hermitian_eigen(&g);
        let max = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let min = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if ratio < margin {
            margin = ratio;
            worst_level = j;
        }
        let pos = vals.iter().filter(|&&v| v > 0.0).count();
        prefix.push((pos, j - pos));
    }
    let generic = margin >= tol::DEGENERATE_RESTRICTION;
    let signature = if generic {
        let mut signs = Vec::with_capacity(d);
        let mut prev = (0usize, 0usize);
        let mut consistent = true;
        for &(p, n) in &prefix {
            if p == prev.0 + 1 && n == prev.1 {
                signs.push(1);
            } else if n == prev.1 + 1 && p == prev.0 {
                signs.push(-1);
            } else {
                consistent = false;
            }
            prev = (p, n);
        }
        consistent.then(|| OrbitSignature::from_signs(signs))
    } else {
        None
    };
    Genericity {
        generic: signature.is_some(),
        margin,
        worst_level,
        signature,
    }
}

pub fn signature_of(o: &Form, x: &Flag) -> Result<OrbitSignature, FlagError> {
    let g = o_generic(o, x);
    g.signature.ok_or(FlagError::NotGeneric {
        level: g.worst_level,
        margin: g.margin,
    })
}

pub fn orbit_equal(o: &Form, x: &Flag, y: &Flag) -> Result<bool, FlagError> {
    Ok(signature_of(o, x)? == signature_of(o, y)?)
}

/// The flag `(xi^(d-j))^perp`, `j = 1..d`.
pub fn flag_perp(o: &Form, x: &Flag) -> Flag {
    // columns J^-1 q_k satisfy <q_i, J^-1 q_k>_o = delta_ik for unitary q
    let d = x.dim();
    let y = o.gram_inv() * &x.basis;
    let reversed = CMat::from_fn(d, d, |i, k| y[(i, d - 1 - k)]);
    Flag::from_basis_unchecked(&reversed)
}

/// Form-orthogonal lines of a generic flag, normalized so that
/// `|<l, l>_o| = 1`, by signed Gram-Schmidt.
pub fn o_lines(o: &Form, x: &Flag) -> Result<CMat, FlagError> {
    let gen = o_generic(o, x);
    if !gen.generic {
        return Err(FlagError::NotGeneric {
            level: gen.worst_level,
            margin: gen.margin,
        });
    }
    let d = x.dim();
    let mut lines = CMat::zeros(d, d);
    let mut norms = Vec::with_capacity(d);
    for k in 0..d {
        let mut v: CVec = x.basis.column(k).into_owned();
        for i in 0..k {
            let l = lines.column(i).into_owned();
            let coef: C64 = o.inner(&l, &v) / norms[i];
            v -= l * coef;
        }
        let n = o.inner(&v, &v).re;
        let scale = n.abs().sqrt();
        if !(scale > 0.0) {
            return Err(FlagError::NotGeneric {
                level: k + 1,
                margin: 0.0,
            });
        }
        let v = v.unscale(scale);
        norms.push(n.signum());
        lines.set_column(k, &v);
    }
    Ok(lines)
}

/// Gram matrix of the inner product for which the normalized orthogonal
/// lines of the flag are orthonormal.
pub fn project_to_so(o: &Form, x: &Flag) -> Result<CMat, FlagError> {
    let l = o_lines(o, x)?;
    let inv = l
        .try_inverse()
        .ok_or(FlagError::IllConditioned(f64::INFINITY))?;
    let t = inv.adjoint() * inv;
    Ok((&t + t.adjoint()).scale(0.5))
}

/// Distance between the spans of two bases of equal dimension (sine of the
/// largest principal angle).
pub fn span_distance(a: &CMat, b: &CMat) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let m = qa.adjoint() * qb;
    let smin = numerics::singular_values(&m)
        .last()
        .copied()
        .unwrap_or(0.0)
        .min(1.0);
    (1.0 - smin * smin).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn s1() -> Form {
        Form::standard(2, 1, Field::Real)
    }

    fn flag(cols: &[f64]) -> Flag {
        let m = DMatrix::from_column_slice(3, 3, cols);
        Flag::new(&numerics::real_matrix(&m)).unwrap()
    }

    #[test]
    fn transversality_of_standard_and_reversed() {
        let x = Flag::standard(3);
        let y = flag(&[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(transverse(&x, &y));
        assert!(!transverse(&x, &x));
    }

    #[test]
    fn signatures_in_s1() {
        let std = o_generic(&s1(), &Flag::standard(3));
        assert_eq!(std.signature.unwrap().pattern(), "++-");
        let iso = flag(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(!o_generic(&s1(), &iso).generic);
        let other = flag(&[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(o_generic(&s1(), &other).signature.unwrap().pattern(), "-++");
    }

    #[test]
    fn perp_of_standard_flag() {
        let p = flag_perp(&s1(), &Flag::standard(3));
        let expected = flag(&[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(p.distance(&expected) < 1e-12);
    }

    #[test]
    fn projection_of_standard_flag_is_identity() {
        let t = project_to_so(&s1(), &Flag::standard(3)).unwrap();
        assert!((t - CMat::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn ill_conditioned_basis_rejected() {
        let m = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 1e-12]);
        assert!(matches!(
            Flag::new(&numerics::real_matrix(&m)),
            Err(FlagError::IllConditioned(_))
        ));
    }
}

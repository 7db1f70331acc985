//! Scaled complex matrices, exterior powers and eigen data.
//!
//! Every group element is stored as a complex matrix of Frobenius norm one
//! together with the logarithm of the factor that was divided out.  Real matrices carry a field tag and keep zero imaginary parts, so a
//! single code path serves both fields.

use std::ops::Mul;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::tol;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Ground field of the vector space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "R")]
    Real,
    #[serde(rename = "C")]
    Complex,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("field mismatch")]
    FieldMismatch,
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("zero matrix")]
    Zero,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension {0} is outside the supported range 1..=8")]
    UnsupportedDimension(usize),
    #[error("level {level} outside 0..={max}")]
    Level { level: usize, max: usize },
    #[error("eigen solver did not converge")]
    NoConvergence,
    #[error("non-finite entries")]
    NonFinite,
    #[error("complex entries in a real matrix")]
    NotReal,
}

pub type Result<T> = std::result::Result<T, NumericsError>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_matrix(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Square matrix `exp(log_scale) * entries` with entries of Frobenius norm one.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledMatrix {
    entries: CMat,
    log_scale: f64,
    field: Field,
}

impl ScaledMatrix {
    pub fn new(entries: CMat, field: Field) -> Result<Self> {
        let (r, cols) = entries.shape();
        if r != cols {
            return Err(NumericsError::NotSquare(r, cols));
        }
        if r == 0 || r > tol::MAX_DIM {
            return Err(NumericsError::UnsupportedDimension(r));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(NumericsError::NonFinite);
        }
        let mut entries = entries;
        if field == Field::Real {
            let m = max_abs(&entries);
            if entries.iter().any(|z| z.im.abs() > 1e-14 * m) {
                return Err(NumericsError::NotReal);
            }
            entries.iter_mut().for_each(|z| z.im = 0.0);
        }
        Self::normalized(entries, 0.0, field)
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(real_matrix(m), Field::Real)
    }

    pub fn identity(d: usize, field: Field) -> Self {
        Self {
            entries: CMat::identity(d, d),
            log_scale: 0.0,
            field,
        }
    }

    fn normalized(mut entries: CMat, log_scale: f64, field: Field) -> Result<Self> {
        // divide by the largest modulus first so the norm cannot overflow
        let m = max_abs(&entries);
        if m == 0.0 {
            return Err(NumericsError::Zero);
        }
        if !m.is_finite() {
            return Err(NumericsError::NonFinite);
        }
        entries.unscale_mut(m);
        let n = entries.norm();
        entries.unscale_mut(n);
        Ok(Self {
            entries,
            log_scale: log_scale + m.ln() + n.ln(),
            field,
        })
    }

    /// Build from raw parts; used internally where the product is known to
    /// be nonzero.
    pub(crate) fn from_parts(entries: CMat, log_scale: f64, field: Field) -> Self {
        Self::normalized(entries, log_scale, field).expect("nonzero matrix")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Same matrix with the scale factor multiplied by `exp(shift)`.
    pub fn rescaled(&self, shift: f64) -> Self {
        Self {
            entries: self.entries.clone(),
            log_scale: self.log_scale + shift,
            field: self.field,
        }
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(NumericsError::DimensionMismatch(self.dim(), other.dim()));
        }
        if self.field != other.field {
            return Err(NumericsError::FieldMismatch);
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let prod = &self.entries * &other.entries;
        Self::normalized(prod, self.log_scale + other.log_scale, self.field).unwrap_or_else(|_| {
            Self {
                entries: CMat::zeros(self.dim(), self.dim()),
                log_scale: f64::NEG_INFINITY,
                field: self.field,
            }
        })
    }

    /// Ratio of smallest to largest singular value of the entries.
    pub fn inverse_condition(&self) -> f64 {
        let sv = singular_values(&self.entries);
        let max = sv[0];
        if max == 0.0 {
            0.0
        } else {
            sv[sv.len() - 1] / max
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.inverse_condition() < 1e-15 {
            return Err(NumericsError::Singular);
        }
        let inv = self
            .entries
            .clone()
            .try_inverse()
            .ok_or(NumericsError::Singular)?;
        Self::normalized(inv, -self.log_scale, self.field)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            log_scale: self.log_scale,
            field: self.field,
        }
    }

    /// Unscaled matrix; overflows for very large scales.
    pub fn to_matrix(&self) -> CMat {
        self.entries.scale(self.log_scale.exp())
    }

    /// Logarithm of the operator norm.
    pub fn log_norm(&self) -> f64 {
        top_singular_value(&self.entries).ln() + self.log_scale
    }

    /// Logarithm of `|det|`.
    pub fn log_abs_det(&self) -> f64 {
        self.entries.clone().determinant().norm().ln() + self.dim() as f64 * self.log_scale
    }
}

pub(crate) fn top_singular_value(m: &CMat) -> f64 {
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    singular_values(m)[0]
}

struct SubsetTable {
    // per level j: subsets as bit masks in lexicographic order
    by_level: Vec<Vec<u16>>,
    // mask -> position inside its level
    index: Vec<usize>,
}

fn tables() -> &'static Vec<SubsetTable> {
    static TABLES: OnceLock<Vec<SubsetTable>> = OnceLock::new();
    TABLES.get_or_init(|| {
        (0..=tol::MAX_DIM)
            .map(|d| {
                let mut by_level = vec![Vec::new(); d + 1];
                let mut index = vec![0usize; 1 << d];
                for j in 0..=d {
                    let mut list = Vec::new();
                    let mut cur = Vec::new();
                    lex_subsets(d, j, 0, &mut cur, &mut list);
                    for (i, &m) in list.iter().enumerate() {
                        index[m as usize] = i;
                    }
                    by_level[j] = list;
                }
                SubsetTable { by_level, index }
            })
            .collect()
    })
}

fn lex_subsets(d: usize, j: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<u16>) {
    if cur.len() == j {
        out.push(cur.iter().fold(0u16, |m, &i| m | (1 << i)));
        return;
    }
    for i in start..d {
        if d - i < j - cur.len() {
            break;
        }
        cur.push(i);
        lex_subsets(d, j, i + 1, cur, out);
        cur.pop();
    }
}

/// `j`-subsets of `{0..d}` as bit masks, in lexicographic order.
pub fn subsets(d: usize, j: usize) -> &'static [u16] {
    &tables()[d].by_level[j]
}

/// Position of a subset (bit mask) inside the lexicographic list of its size.
pub fn subset_index(d: usize, mask: u16) -> usize {
    tables()[d].index[mask as usize]
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn mask_members(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| mask & (1 << i) != 0)
}

fn small_det(m: &CMat) -> C64 {
    match m.nrows() {
        0 => C64::new(1.0, 0.0),
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().determinant(),
    }
}

/// Minor of `m` on the given row and column masks.
fn minor(m: &CMat, rows: u16, cols: u16) -> C64 {
    let r: Vec<usize> = mask_members(rows).collect();
    let cl: Vec<usize> = mask_members(cols).collect();
    let sub = CMat::from_fn(r.len(), cl.len(), |i, k| m[(r[i], cl[k])]);
    small_det(&sub)
}

/// `j`-th exterior power of a linear map, in the lexicographic basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CompoundMatrix {
    pub level: usize,
    pub matrix: ScaledMatrix,
}

/// Matrix of `j x j` minors of `g` (rows and columns in lexicographic
/// order), with the log scale multiplied by `j`.
pub fn compound(g: &ScaledMatrix, j: usize) -> Result<CompoundMatrix> {
    let d = g.dim();
    if j > d {
        return Err(NumericsError::Level { level: j, max: d });
    }
    let subs = subsets(d, j);
    let n = subs.len();
    let e = g.entries();
    let m = CMat::from_fn(n, n, |a, b| minor(e, subs[a], subs[b]));
    let matrix = ScaledMatrix::normalized(m, j as f64 * g.log_scale(), g.field())?;
    Ok(CompoundMatrix { level: j, matrix })
}

/// Compound of an unscaled matrix (used for Gram matrices of forms).
pub fn compound_plain(m: &CMat, j: usize) -> CMat {
    let d = m.nrows();
    let subs = subsets(d, j);
    let n = subs.len();
    CMat::from_fn(n, n, |a, b| minor(m, subs[a], subs[b]))
}

/// Plucker coordinates of the span of the columns of `x` (a `d x j`
/// matrix), i.e. the maximal minors in lexicographic row order.
pub fn wedge(x: &CMat) -> CVec {
    let d = x.nrows();
    let j = x.ncols();
    let all_cols: u16 = ((1u32 << j) - 1) as u16;
    CVec::from_iterator(
        binomial(d, j),
        subsets(d, j).iter().map(|&r| minor(x, r, all_cols)),
    )
}

/// Value of `v ^ w` in `Lambda^d V`, for `v` in `Lambda^j` and `w` in
/// `Lambda^(d-j)`, both in lexicographic bases.
pub fn wedge_pairing(d: usize, j: usize, v: &CVec, w: &CVec) -> C64 {
    let full: u16 = ((1u32 << d) - 1) as u16;
    let mut acc = C64::new(0.0, 0.0);
    for (a, &mask) in subsets(d, j).iter().enumerate() {
        let comp = full & !mask;
        let b = subset_index(d, comp);
        acc += v[a] * w[b] * shuffle_sign(mask, comp);
    }
    acc
}

/// Sign of the permutation sorting the concatenation `mask ++ comp`.
fn shuffle_sign(mask: u16, comp: u16) -> f64 {
    let mut inversions = 0u32;
    for i in mask_members(mask) {
        for k in mask_members(comp) {
            if k < i {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Orthonormal basis of the subspace represented by a decomposable
/// `j`-vector.  Contractions of `omega` with `(j-1)`-subsets span the
/// subspace; the top `j` left singular vectors of that spanning set are
/// returned.
pub fn subspace_of_wedge(d: usize, j: usize, omega: &CVec) -> CMat {
    if j == 0 {
        return CMat::zeros(d, 0);
    }
    let lower = subsets(d, j - 1);
    let mut span = CMat::zeros(d, lower.len());
    for (col, &k) in lower.iter().enumerate() {
        for i in 0..d {
            if k & (1 << i) != 0 {
                continue;
            }
            let mask = k | (1 << i);
            // sign of inserting i into k
            let before = mask_members(k).filter(|&t| t < i).count();
            let s = if before % 2 == 0 { 1.0 } else { -1.0 };
            span[(i, col)] = omega[subset_index(d, mask)] * s;
        }
    }
    svd(&span).u.columns(0, j).into_owned()
}

fn descending_order(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| {
        vals[b]
            .partial_cmp(&vals[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

/// A group element stored through all of its exterior powers
/// `Lambda^1 .. Lambda^(d-1)` plus `log |det|`.  Products are formed level by
/// level, so each level keeps full relative precision on its top singular
/// and eigen data even when the element is very far from the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    levels: Vec<ScaledMatrix>,
    log_abs_det: f64,
    dim: usize,
}

impl Element {
    pub fn from_matrix(g: &ScaledMatrix) -> Result<Self> {
        let d = g.dim();
        if d < 2 {
            return Err(NumericsError::UnsupportedDimension(d));
        }
        if g.inverse_condition() < 1e-15 {
            return Err(NumericsError::Singular);
        }
        let levels = (1..d)
            .map(|j| compound(g, j).map(|c| c.matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            levels,
            log_abs_det: g.log_abs_det(),
            dim: d,
        })
    }

    pub fn from_complex(m: CMat, field: Field) -> Result<Self> {
        Self::from_matrix(&ScaledMatrix::new(m, field)?)
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(&ScaledMatrix::from_real(m)?)
    }

    pub fn identity(d: usize, field: Field) -> Self {
        let levels = (1..d)
            .map(|j| ScaledMatrix::identity(binomial(d, j), field))
            .collect();
        Self {
            levels,
            log_abs_det: 0.0,
            dim: d,
        }
    }

    pub(crate) fn from_levels(levels: Vec<ScaledMatrix>, log_abs_det: f64) -> Self {
        let dim = levels.len() + 1;
        Self {
            levels,
            log_abs_det,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.levels[0].field()
    }

    /// `Lambda^j g` for `1 <= j <= d-1`.
    pub fn level(&self, j: usize) -> &ScaledMatrix {
        &self.levels[j - 1]
    }

    pub fn levels(&self) -> &[ScaledMatrix] {
        &self.levels
    }

    pub fn matrix(&self) -> &ScaledMatrix {
        &self.levels[0]
    }

    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(NumericsError::DimensionMismatch(self.dim, other.dim));
        }
        if self.field() != other.field() {
            return Err(NumericsError::FieldMismatch);
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.mul_unchecked(b))
            .collect();
        Self {
            levels,
            log_abs_det: self.log_abs_det + other.log_abs_det,
            dim: self.dim,
        }
    }

    /// Inverse through complementary minors: the `j`-th level of `g^-1` is a
    /// signed transpose of the `(d-j)`-th level of `g` divided by `det g`.
    /// No matrix is inverted, so the precision of each level is kept.  The
    /// phase of `det g` is dropped; levels are only used projectively.
    pub fn inverse(&self) -> Self {
        let d = self.dim;
        let full: u16 = ((1u32 << d) - 1) as u16;
        let levels = (1..d)
            .map(|j| {
                let src = &self.levels[d - j - 1];
                let subs = subsets(d, j);
                let n = subs.len();
                let parity = |m: u16| mask_members(m).sum::<usize>() % 2;
                let m = CMat::from_fn(n, n, |a, b| {
                    let ia = subs[a];
                    let kb = subs[b];
                    let row = subset_index(d, full & !kb);
                    let col = subset_index(d, full & !ia);
                    let v = src.entries()[(row, col)];
                    if (parity(ia) + parity(kb)) % 2 == 0 {
                        v
                    } else {
                        -v
                    }
                });
                ScaledMatrix::from_parts(m, src.log_scale() - self.log_abs_det, src.field())
            })
            .collect();
        Self {
            levels,
            log_abs_det: -self.log_abs_det,
            dim: d,
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::identity(self.dim, self.field());
        for _ in 0..n {
            acc = acc.mul_unchecked(self);
        }
        acc
    }

    /// Each level multiplied by a scalar `exp(shift)`: the element `exp(shift) g`.
    pub fn rescaled(&self, shift: f64) -> Self {
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| l.rescaled((i + 1) as f64 * shift))
            .collect();
        Self {
            levels,
            log_abs_det: self.log_abs_det + self.dim as f64 * shift,
            dim: self.dim,
        }
    }
}

impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

/// Eigen decomposition sorted by decreasing modulus.
#[derive(Clone, Debug)]
pub struct EigenData {
    /// Eigenvalues of the normalized entries.
    pub values: Vec<C64>,
    /// `log |mu|` including the scale of the matrix.
    pub log_moduli: Vec<f64>,
    pub phases: Vec<f64>,
    /// Unit eigenvectors as columns, same order as `values`.
    pub vectors: CMat,
    /// Condition number of the eigenvector matrix.
    pub condition: f64,
    pub diagonalizable: bool,
}

/// Eigenvalues and eigenvectors through a complex Schur form followed by
/// back substitution.
pub fn eigen(g: &ScaledMatrix) -> Result<EigenData> {
    let m = g.entries();
    let n = m.nrows();
    let schur =
        nalgebra::Schur::try_new(m.clone(), 1e-15, 10_000).ok_or(NumericsError::NoConvergence)?;
    let (q, t) = schur.unpack();
    let tnorm = t.norm().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut vecs = CMat::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let lam = t[(k, k)];
        vals.push(lam);
        let mut y = CVec::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in (i + 1)..=k {
                s += t[(i, l)] * y[l];
            }
            let mut den = t[(i, i)] - lam;
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            y[i] = -s / den;
        }
        let v = &q * y;
        let nv = v.norm();
        vecs.set_column(k, &v.unscale(nv));
    }
    let moduli: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
    let order = descending_order(&moduli);
    let values: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, col| vecs[(r, order[col])]);
    let condition = condition_number(&vectors);
    let mut residual_ok = true;
    let mnorm = m.norm();
    for (k, lam) in values.iter().enumerate() {
        let v = vectors.column(k);
        let r = (m * v - v * *lam).norm();
        if r > tol::EIGEN_RESIDUAL * mnorm {
            residual_ok = false;
        }
    }
    if values
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(NumericsError::NoConvergence);
    }
    Ok(EigenData {
        log_moduli: values
            .iter()
            .map(|z| z.norm().ln() + g.log_scale())
            .collect(),
        phases: values.iter().map(|z| z.arg()).collect(),
        values,
        vectors,
        condition,
        diagonalizable: residual_ok && condition <= tol::CONDITION_CAP,
    })
}

/// Eigen decomposition of a Hermitian matrix, sorted by decreasing value.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()).scale(0.5);
    let n = h.nrows();
    let e = SymmetricEigen::new(h);
    let vals: Vec<f64> = e.eigenvalues.iter().copied().collect();
    let order = descending_order(&vals);
    let sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, col| e.eigenvectors[(r, order[col])]);
    (sorted, vecs)
}

/// Thin singular value decomposition `m = u diag(s) v^*`, singular values in
/// decreasing order.  One-sided Jacobi: slower than bidiagonalization but
/// accurate for the rank deficient matrices met with flags and wedges.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint());
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = CMat::identity(n, n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let rot = |x: &mut CMat| {
                    for i in 0..x.nrows() {
                        let xp = x[(i, p)];
                        let xq = x[(i, q)] * phase.conj();
                        x[(i, p)] = xp * c - xq * s;
                        x[(i, q)] = xp * s + xq * c;
                    }
                };
                rot(&mut a);
                rot(&mut v);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    let order = descending_order(&norms);
    let s: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let v = CMat::from_fn(n, n, |r, c| v[(r, order[c])]);
    let top = s.first().copied().unwrap_or(0.0);
    let mut u = CMat::zeros(rows, n);
    let mut filled = 0;
    for (c, &k) in order.iter().enumerate() {
        if s[c] > top * f64::EPSILON * rows as f64 && s[c] > 0.0 {
            u.set_column(c, &a.column(k).unscale(s[c]));
            filled = c + 1;
        } else {
            break;
        }
    }
    // complete with unit vectors orthogonal to the previous columns
    let mut e = 0;
    while filled < n && e < rows {
        let mut x = CVec::zeros(rows);
        x[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for c in 0..filled {
                let proj = u.column(c).dotc(&x);
                x -= u.column(c) * proj;
            }
        }
        let nx = x.norm();
        if nx > 0.5 {
            u.set_column(filled, &x.unscale(nx));
            filled += 1;
        }
        e += 1;
    }
    Svd { u, s, v }
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    svd(m).s
}

/// Orthonormal basis of the right null space of `m` (columns), using the
/// singular values below `rel * max`.
pub fn null_space(m: &CMat, rel: f64) -> CMat {
    let n = m.ncols();
    // pad to square so that all right singular vectors are returned
    let rows = m.nrows().max(n);
    let mut padded = CMat::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let Svd { s: sv, v, .. } = svd(&padded);
    let max = sv[0].max(f64::MIN_POSITIVE);
    let idx: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= rel * max).collect();
    CMat::from_fn(n, idx.len(), |r, col| v[(r, idx[col])])
}

/// Householder QR of a full rank `d x d` basis, returning a unitary matrix
/// spanning the same nested subspaces.
pub fn orthonormalize(x: &CMat) -> CMat {
    let qr = x.clone().qr();
    qr.q()
}

/// Condition number (2-norm) of a square matrix.
pub fn condition_number(x: &CMat) -> f64 {
    let sv = singular_values(x);
    let min = sv[sv.len() - 1];
    if min == 0.0 {
        f64::INFINITY
    } else {
        sv[0] / min
    }
}

/// Matrix with independent standard Gaussian entries (complex Gaussian for
/// `Field::Complex`).
pub fn gaussian_matrix<R: rand::Rng + ?Sized>(rng: &mut R, d: usize, field: Field) -> CMat {
    use rand_distr::StandardNormal;
    CMat::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if field == Field::Complex {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        C64::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(v: &[f64]) -> ScaledMatrix {
        ScaledMatrix::from_real(&DMatrix::from_diagonal(&DVector::from_row_slice(v))).unwrap()
    }

    #[test]
    fn product_of_diagonal_scales_adds_logs() {
        let a = diag(&[1e200, 1.0, 1.0]);
        let p = a.multiply(&a).unwrap();
        assert_relative_eq!(p.log_scale(), 2.0 * 200.0 * 10f64.ln(), epsilon = 1e-9);
        assert_relative_eq!(p.entries()[(0, 0)].re, 1.0);
        assert_relative_eq!(p.entries().norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn field_and_dimension_mismatch() {
        let a = ScaledMatrix::identity(3, Field::Real);
        let b = ScaledMatrix::identity(3, Field::Complex);
        assert_eq!(a.multiply(&b), Err(NumericsError::FieldMismatch));
        let e = ScaledMatrix::identity(4, Field::Real);
        assert!(matches!(
            a.multiply(&e),
            Err(NumericsError::DimensionMismatch(3, 4))
        ));
    }

    #[test]
    fn compound_of_diagonal() {
        let g = diag(&[2.0, 3.0, 5.0]);
        let c = compound(&g, 2).unwrap();
        let m = c.matrix.to_matrix();
        assert_relative_eq!(m[(0, 0)].re, 6.0, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 1)].re, 10.0, epsilon = 1e-12);
        assert_relative_eq!(m[(2, 2)].re, 15.0, epsilon = 1e-12);
        assert!(compound(&g, 4).is_err());
    }

    #[test]
    fn compound_rejects_large_dimension() {
        let m = CMat::identity(9, 9);
        assert!(matches!(
            ScaledMatrix::new(m, Field::Real),
            Err(NumericsError::UnsupportedDimension(9))
        ));
    }

    #[test]
    fn jordan_block_is_not_diagonalizable() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let e = eigen(&ScaledMatrix::from_real(&m).unwrap()).unwrap();
        assert!(!e.diagonalizable);
        assert_relative_eq!(e.log_moduli[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_has_unimodular_eigenvalues() {
        let t: f64 = 0.7;
        let m = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let e = eigen(&ScaledMatrix::from_real(&m).unwrap()).unwrap();
        assert!(e.diagonalizable);
        for (lm, ph) in e.log_moduli.iter().zip(&e.phases) {
            assert!(lm.abs() < 1e-12);
            assert_relative_eq!(ph.abs(), 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(3, 2), &[0b011, 0b101, 0b110]);
        assert_eq!(subset_index(4, 0b1010), 4);
        assert_eq!(binomial(8, 4), 70);
    }

    #[test]
    fn wedge_pairing_is_determinant() {
        let x = real_matrix(&DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 2.0, 0.5, 0.0, 1.0, 3.0, 2.0, 1.0, 1.0],
        ));
        let v = wedge(&x.columns(0, 1).into_owned());
        let w = wedge(&x.columns(1, 2).into_owned());
        let det = x.clone().determinant();
        assert_relative_eq!(
            (wedge_pairing(3, 1, &v, &w) - det).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn subspace_recovered_from_wedge() {
        let x = real_matrix(&DMatrix::from_row_slice(
            4,
            2,
            &[1.0, 0.0, 2.0, 1.0, 0.0, 3.0, 1.0, 1.0],
        ));
        let basis = subspace_of_wedge(4, 2, &wedge(&x));
        // x lies in the span of the basis
        let proj = &basis * (basis.adjoint() * &x);
        assert!((proj - &x).norm() < 1e-12);
    }
}

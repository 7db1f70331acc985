//! Weyl group of type `A_(d-1)` as permutations, Weyl chambers as orders of
//! the reference lines, chambers compatible with the slot chamber `b+`, and
//! opposition involutions.

use serde::{Deserialize, Serialize};

use crate::flags::Flag;
use crate::numerics::{CMat, C64};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum WeylError {
    #[error("not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("expected {expected} plus signs, found {found}")]
    SignCount { expected: usize, found: usize },
    #[error("flag is not a coordinate flag")]
    NotCoordinateFlag,
    #[error("dimension mismatch")]
    Dimension,
}

/// Permutation `i -> perm[i]` of the reference lines (0-based).  It acts on
/// coordinate vectors by `(w x)[perm[i]] = x[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WeylElement {
    perm: Vec<usize>,
}

impl WeylElement {
    pub fn identity(d: usize) -> Self {
        Self {
            perm: (0..d).collect(),
        }
    }

    pub fn new(perm: Vec<usize>) -> Result<Self, WeylError> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &i in &perm {
            if i >= d || seen[i] {
                return Err(WeylError::NotPermutation(d));
            }
            seen[i] = true;
        }
        Ok(Self { perm })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// One-based image list, for reports.
    pub fn one_based(&self) -> Vec<usize> {
        self.perm.iter().map(|i| i + 1).collect()
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `self o other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            perm: other.perm.iter().map(|&i| self.perm[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self { perm: inv }
    }

    pub fn sign(&self) -> i32 {
        let mut inversions = 0;
        for i in 0..self.perm.len() {
            for k in (i + 1)..self.perm.len() {
                if self.perm[i] > self.perm[k] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Signed permutation matrix with `e_i -> +-e_perm[i]`, determinant one.
    pub fn lift(&self) -> CMat {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for (i, &p) in self.perm.iter().enumerate() {
            m[(p, i)] = C64::new(1.0, 0.0);
        }
        if self.sign() < 0 {
            m.row_mut(0).neg_mut();
        }
        m
    }

    pub fn act(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = x[i];
        }
        out
    }

    pub fn act_chamber(&self, c: &ChamberA) -> ChamberA {
        ChamberA {
            line_order: c.line_order.iter().map(|&l| self.perm[l]).collect(),
        }
    }

    pub fn act_flag(&self, x: &Flag) -> Flag {
        Flag::from_basis_unchecked(&(self.lift() * x.basis()))
    }

    /// All permutations of `0..d` in lexicographic order.
    pub fn all(d: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(d);
        let mut used = vec![false; d];
        fn rec(d: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<WeylElement>) {
            if cur.len() == d {
                out.push(WeylElement { perm: cur.clone() });
                return;
            }
            for i in 0..d {
                if !used[i] {
                    used[i] = true;
                    cur.push(i);
                    rec(d, cur, used, out);
                    cur.pop();
                    used[i] = false;
                }
            }
        }
        rec(d, &mut cur, &mut used, &mut out);
        out
    }
}

impl std::fmt::Display for WeylElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Weyl chamber `{x : x[l_1] >= x[l_2] >= ... }` given by the order of the
/// reference lines.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChamberA {
    pub line_order: Vec<usize>,
}

impl ChamberA {
    pub fn standard(d: usize) -> Self {
        Self {
            line_order: (0..d).collect(),
        }
    }

    pub fn new(line_order: Vec<usize>) -> Result<Self, WeylError> {
        WeylElement::new(line_order.clone())?;
        Ok(Self { line_order })
    }

    pub fn dim(&self) -> usize {
        self.line_order.len()
    }

    /// Signs of the lines in chamber order (lines `0..p` are positive).
    pub fn pattern(&self, p: usize) -> Vec<i8> {
        self.line_order
            .iter()
            .map(|&l| if l < p { 1 } else { -1 })
            .collect()
    }

    pub fn is_compatible(&self, p: usize) -> bool {
        let pos: Vec<usize> = self.line_order.iter().copied().filter(|&l| l < p).collect();
        let neg: Vec<usize> = self
            .line_order
            .iter()
            .copied()
            .filter(|&l| l >= p)
            .collect();
        pos.windows(2).all(|w| w[0] < w[1]) && neg.windows(2).all(|w| w[0] < w[1])
    }

    /// Compatible chamber whose lines have the given signs in order.
    pub fn from_pattern(signs: &[i8]) -> Self {
        let p = signs.iter().filter(|&&s| s > 0).count();
        let (mut next_pos, mut next_neg) = (0, p);
        let line_order = signs
            .iter()
            .map(|&s| {
                if s > 0 {
                    next_pos += 1;
                    next_pos - 1
                } else {
                    next_neg += 1;
                    next_neg - 1
                }
            })
            .collect();
        Self { line_order }
    }

    /// Weyl element sending sorted position `k` to line `line_order[k]`;
    /// it maps the standard chamber to this one.
    pub fn placement(&self) -> WeylElement {
        WeylElement {
            perm: self.line_order.clone(),
        }
    }

    /// Place a descending sorted vector into this chamber.
    pub fn place(&self, sorted: &[f64]) -> Vec<f64> {
        self.placement().act(sorted)
    }

    /// Read a vector of this chamber back in chamber order.
    pub fn unplace(&self, x: &[f64]) -> Vec<f64> {
        self.line_order.iter().map(|&l| x[l]).collect()
    }

    /// Coordinate flag `<e_l1> < <e_l1, e_l2> < ...`.
    pub fn flag(&self) -> Flag {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for (k, &l) in self.line_order.iter().enumerate() {
            m[(l, k)] = C64::new(1.0, 0.0);
        }
        Flag::from_basis_unchecked(&m)
    }

    /// Opposition element exchanging the `k`-th and `(d-1-k)`-th lines.
    pub fn opposition(&self) -> WeylElement {
        let d = self.dim();
        let mut perm = vec![0; d];
        for k in 0..d {
            perm[self.line_order[k]] = self.line_order[d - 1 - k];
        }
        WeylElement { perm }
    }

    /// `-w x` with `w` the opposition element.
    pub fn iota(&self, x: &[f64]) -> Vec<f64> {
        self.opposition().act(x).iter().map(|v| -v).collect()
    }
}

/// Chamber of a coordinate flag.
pub fn flag_chamber(x: &Flag) -> Result<ChamberA, WeylError> {
    let d = x.dim();
    let b = x.basis();
    let mut order = Vec::with_capacity(d);
    let mut used = vec![false; d];
    for k in 0..d {
        // column k of a coordinate flag's unitary basis is a unit multiple
        // of a coordinate vector not used before
        let mut found = None;
        for i in 0..d {
            let v = b[(i, k)].norm();
            if (v - 1.0).abs() < 1e-9 {
                found = Some(i);
            } else if v > 1e-9 {
                return Err(WeylError::NotCoordinateFlag);
            }
        }
        match found {
            Some(i) if !used[i] => {
                used[i] = true;
                order.push(i)
            }
            _ => return Err(WeylError::NotCoordinateFlag),
        }
    }
    Ok(ChamberA { line_order: order })
}

/// All chambers contained in `b+`, i.e. shuffles of the positive and the
/// negative lines, ordered by their sign patterns with `+` first.
pub fn compatible_chambers(p: usize, q: usize) -> Vec<ChamberA> {
    sign_patterns(p, q)
        .iter()
        .map(|s| ChamberA::from_pattern(s))
        .collect()
}

/// Sign sequences with `p` pluses and `q` minuses, `+` before `-`.
pub fn sign_patterns(p: usize, q: usize) -> Vec<Vec<i8>> {
    fn rec(p: usize, q: usize, cur: &mut Vec<i8>, out: &mut Vec<Vec<i8>>) {
        if p == 0 && q == 0 {
            out.push(cur.clone());
            return;
        }
        if p > 0 {
            cur.push(1);
            rec(p - 1, q, cur, out);
            cur.pop();
        }
        if q > 0 {
            cur.push(-1);
            rec(p, q - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(p, q, &mut Vec::new(), &mut out);
    out
}

/// Sign preserving shuffle sending position `k` (with sign `signs[k]`) to
/// its slot: the `i`-th plus goes to slot `i`, the `i`-th minus to slot
/// `p + i`.
pub fn embed_compatible(signs: &[i8], p: usize) -> Result<WeylElement, WeylError> {
    let found = signs.iter().filter(|&&s| s > 0).count();
    if found != p {
        return Err(WeylError::SignCount { expected: p, found });
    }
    Ok(ChamberA::from_pattern(signs).placement())
}

/// Opposition element of `b+`: reverses the positive slots and the negative
/// slots separately.
pub fn opposition_b(p: usize, q: usize) -> WeylElement {
    let perm = (0..p)
        .map(|i| p - 1 - i)
        .chain((0..q).map(|i| p + q - 1 - i))
        .collect();
    WeylElement { perm }
}

/// `iota_b(x) = -w_b x`.
pub fn iota_b(p: usize, q: usize, x: &[f64]) -> Vec<f64> {
    opposition_b(p, q).act(x).iter().map(|v| -v).collect()
}

/// Whether a slot vector lies in `b+` (descending within each sign group).
pub fn in_b_plus(p: usize, x: &[f64], tol: f64) -> bool {
    x[..p].windows(2).all(|w| w[0] >= w[1] - tol) && x[p..].windows(2).all(|w| w[0] >= w[1] - tol)
}

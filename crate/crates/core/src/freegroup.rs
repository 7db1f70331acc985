//! Reduced words in free groups, deterministic ball enumeration,
//! representations of free groups with Schottky certification, the gap
//! check for the Anosov property and sampling of the limit set.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::flags::{o_generic, transversality_margin, Flag, OrbitSignature};
use crate::forms::{Form, FormError};
use crate::jsonmat::{self, MatrixJsonError, Scalar};
use crate::numerics::{wedge_pairing, CMat, Element, Field, NumericsError, ScaledMatrix, C64};
use crate::projections::{
    attracting_flag, cartan, cartan_attractor, is_loxodromic, loxodromy_levels,
};
use crate::tol;
use crate::weyl::embed_compatible;

/// Letter `2i` is the generator `a_i`, letter `2i + 1` its inverse.
pub type Letter = u8;

/// Default bound on the number of words visited in one run.
pub const DEFAULT_WORD_CAP: u64 = 50_000_000;

pub fn inverse_letter(l: Letter) -> Letter {
    l ^ 1
}

fn letter_char(l: Letter) -> char {
    let c = (b'a' + l / 2) as char;
    if l.is_multiple_of(2) {
        c
    } else {
        c.to_ascii_uppercase()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum WordError {
    #[error("invalid letter {0:?}")]
    InvalidLetter(char),
    #[error("word is not reduced at position {0}")]
    NotReduced(usize),
    #[error("letter outside the rank {0}")]
    Rank(usize),
}

/// Reduced word; displayed with `a, b, ..` for generators and `A, B, ..`
/// for their inverses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(letters: Vec<Letter>) -> Result<Self, WordError> {
        for i in 1..letters.len() {
            if letters[i] == inverse_letter(letters[i - 1]) {
                return Err(WordError::NotReduced(i));
            }
        }
        Ok(Self { letters })
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn reduce(letters: &[Letter]) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
        for &l in letters {
            if out.last() == Some(&inverse_letter(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Self { letters: out }
    }

    pub fn parse(s: &str) -> Result<Self, WordError> {
        let mut letters = Vec::with_capacity(s.len());
        for ch in s.chars() {
            if ch == '1' && s.len() == 1 {
                continue;
            }
            if !ch.is_ascii_alphabetic() {
                return Err(WordError::InvalidLetter(ch));
            }
            let base = ch.to_ascii_lowercase() as u8 - b'a';
            letters.push(2 * base + u8::from(ch.is_ascii_uppercase()));
        }
        Self::new(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|&l| inverse_letter(l))
                .collect(),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut all = self.letters.clone();
        all.extend_from_slice(&other.letters);
        Self::reduce(&all)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => self.letters.len() == 1 || f != inverse_letter(l),
            _ => true,
        }
    }

    /// Cyclically reduced core, conjugate to the word.
    pub fn cyclic_reduction(&self) -> Self {
        let l = &self.letters;
        let (mut i, mut j) = (0, l.len());
        while j - i >= 2 && l[i] == inverse_letter(l[j - 1]) {
            i += 1;
            j -= 1;
        }
        Self {
            letters: l[i..j].to_vec(),
        }
    }

    /// Lexicographically smallest cyclic rotation.
    pub fn min_rotation(&self) -> Self {
        let n = self.letters.len();
        let best = (0..n)
            .min_by(|&a, &b| rotation_cmp(&self.letters, a, b))
            .unwrap_or(0);
        Self {
            letters: (0..n).map(|i| self.letters[(best + i) % n]).collect(),
        }
    }

    /// Whether the word is the lexicographically smallest of its rotations.
    pub fn is_min_rotation(&self) -> bool {
        is_min_rotation(&self.letters)
    }

    pub fn max_letter(&self) -> Option<Letter> {
        self.letters.iter().copied().max()
    }
}

fn rotation_cmp(l: &[Letter], a: usize, b: usize) -> std::cmp::Ordering {
    let n = l.len();
    for i in 0..n {
        let c = l[(a + i) % n].cmp(&l[(b + i) % n]);
        if c != std::cmp::Ordering::Equal {
            return c;
        }
    }
    std::cmp::Ordering::Equal
}

fn is_min_rotation(l: &[Letter]) -> bool {
    (1..l.len()).all(|r| rotation_cmp(l, 0, r) != std::cmp::Ordering::Greater)
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for &l in &self.letters {
            write!(f, "{}", letter_char(l))?;
        }
        Ok(())
    }
}

/// Number of reduced words of length exactly `len` in the free group of
/// rank `k`.
pub fn sphere_size(k: usize, len: usize) -> u128 {
    if len == 0 {
        return 1;
    }
    let k = k as u128;
    (2 * k) * (2 * k - 1).saturating_pow(len as u32 - 1)
}

pub fn ball_size(k: usize, len: usize) -> u128 {
    (0..=len)
        .map(|l| sphere_size(k, l))
        .fold(0u128, |a, b| a.saturating_add(b))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("run needs {needed} words but the cap is {cap}")]
pub struct ResourceCapError {
    pub needed: u128,
    pub cap: u64,
}

/// Words visited by an enumeration of lengths `min_len..=max_len`.
pub fn shell_range_size(k: usize, min_len: usize, max_len: usize) -> u128 {
    (min_len..=max_len)
        .map(|l| sphere_size(k, l))
        .fold(0u128, |a, b| a.saturating_add(b))
}

fn check_cap(needed: u128, cap: u64) -> Result<(), ResourceCapError> {
    if needed > cap as u128 {
        Err(ResourceCapError { needed, cap })
    } else {
        Ok(())
    }
}

/// Reduced words of length exactly `len`, in lexicographic letter order.
pub fn sphere_words(k: usize, len: usize, cap: u64) -> Result<Vec<Word>, ResourceCapError> {
    check_cap(sphere_size(k, len), cap)?;
    let mut out = Vec::with_capacity(sphere_size(k, len) as usize);
    let mut buf = Vec::with_capacity(len);
    fn rec(k: usize, len: usize, buf: &mut Vec<Letter>, out: &mut Vec<Word>) {
        if buf.len() == len {
            out.push(Word {
                letters: buf.clone(),
            });
            return;
        }
        for l in 0..(2 * k) as Letter {
            if buf.last() == Some(&inverse_letter(l)) {
                continue;
            }
            buf.push(l);
            rec(k, len, buf, out);
            buf.pop();
        }
    }
    rec(k, len, &mut buf, &mut out);
    Ok(out)
}

/// One representative (the smallest rotation) of every cyclic class of
/// nontrivial cyclically reduced words of length at most `max_len`, ordered
/// by length then lexicographically.  A word and its inverse are distinct
/// classes.
pub fn conjugacy_reps(k: usize, max_len: usize, cap: u64) -> Result<Vec<Word>, ResourceCapError> {
    check_cap(shell_range_size(k, 1, max_len), cap)?;
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut buf = Vec::with_capacity(len);
        fn rec(k: usize, len: usize, buf: &mut Vec<Letter>, out: &mut Vec<Word>) {
            if buf.len() == len {
                if (len == 1 || buf[0] != inverse_letter(buf[len - 1])) && is_min_rotation(buf) {
                    out.push(Word {
                        letters: buf.clone(),
                    });
                }
                return;
            }
            for l in 0..(2 * k) as Letter {
                if buf.last() == Some(&inverse_letter(l)) {
                    continue;
                }
                // a rotation starting with a smaller letter exists
                if !buf.is_empty() && l < buf[0] {
                    continue;
                }
                buf.push(l);
                rec(k, len, buf, out);
                buf.pop();
            }
        }
        rec(k, len, &mut buf, &mut out);
    }
    Ok(out)
}

/// Uniform random reduced word of the given length.
pub fn random_word<R: Rng + ?Sized>(rng: &mut R, k: usize, len: usize) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = rng.random_range(0..2 * k) as Letter;
        if letters.last() != Some(&inverse_letter(l)) {
            letters.push(l);
        }
    }
    Word { letters }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RepError {
    #[error("representation needs at least one generator")]
    NoGenerators,
    #[error("generator {0} has the wrong dimension or field")]
    Mismatch(usize),
    #[error("form dimension does not match the generators")]
    FormDimension,
    #[error("p and q must have different parity for the reducible example")]
    Parity,
    #[error("unknown recipe parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Matrix(#[from] MatrixJsonError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepMeta {
    pub recipe: String,
    pub power: u32,
    /// `"unchecked"` for generic constructions, `"no"` for reducible ones.
    pub zariski_dense: String,
    pub notes: Vec<String>,
}

/// Representation of a free group: images of the generators (already
/// raised to the configured power) with their inverses, and the form.
#[derive(Clone, Debug)]
pub struct Representation {
    images: Vec<Element>,
    form: Form,
    pub meta: RepMeta,
}

impl Representation {
    pub fn new(generators: &[ScaledMatrix], form: Form, meta: RepMeta) -> Result<Self, RepError> {
        let first = generators.first().ok_or(RepError::NoGenerators)?;
        let (d, field) = (first.dim(), first.field());
        if form.dim() != d {
            return Err(RepError::FormDimension);
        }
        let mut images = Vec::with_capacity(2 * generators.len());
        for (i, g) in generators.iter().enumerate() {
            if g.dim() != d || g.field() != field {
                return Err(RepError::Mismatch(i));
            }
            let e = Element::from_matrix(g)?;
            let e = if meta.power > 1 { e.pow(meta.power) } else { e };
            images.push(e.inverse());
            images.push(e);
            let n = images.len();
            images.swap(n - 2, n - 1);
        }
        Ok(Self { images, form, meta })
    }

    /// The same images with another form.
    pub fn with_form(&self, form: Form) -> Result<Self, RepError> {
        if form.dim() != self.dim() {
            return Err(RepError::FormDimension);
        }
        Ok(Self {
            images: self.images.clone(),
            form,
            meta: self.meta.clone(),
        })
    }

    /// Images conjugated by `h`: `h rho h^-1`.
    pub fn conjugated(&self, h: &Element) -> Self {
        let hi = h.inverse();
        let images = self.images.iter().map(|g| &(h * g) * &hi).collect();
        Self {
            images,
            form: self.form.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn rank(&self) -> usize {
        self.images.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    pub fn field(&self) -> Field {
        self.form.field()
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn letter(&self, l: Letter) -> &Element {
        &self.images[l as usize]
    }

    pub fn image(&self, w: &Word) -> Element {
        let mut acc = Element::identity(self.dim(), self.field());
        for &l in w.letters() {
            acc = &acc * self.letter(l);
        }
        acc
    }

    /// Generator images (after the power) as plain matrices.
    pub fn generator_matrices(&self) -> Vec<ScaledMatrix> {
        (0..self.rank())
            .map(|i| self.images[2 * i].matrix().clone())
            .collect()
    }

    /// Visits every word of length in `min_len..=max_len` with its image and
    /// folds the results.  Work is split by the length-two prefix; partial
    /// results are merged in prefix order, so the result does not depend on
    /// the number of threads.
    pub fn fold_ball<T, I, V, M>(
        &self,
        min_len: usize,
        max_len: usize,
        cap: u64,
        init: I,
        visit: V,
        merge: M,
    ) -> Result<T, ResourceCapError>
    where
        T: Send,
        I: Fn() -> T + Sync,
        V: Fn(&mut T, &[Letter], &Element) + Sync,
        M: Fn(T, T) -> T,
    {
        check_cap(shell_range_size(self.rank(), min_len, max_len), cap)?;
        let k = self.rank();
        let split = max_len.min(2);
        let mut head = init();
        // words shorter than the split length
        let mut stack_words: Vec<(Vec<Letter>, Element)> =
            vec![(Vec::new(), Element::identity(self.dim(), self.field()))];
        let mut roots = Vec::new();
        while let Some((w, e)) = stack_words.pop() {
            if w.len() == split {
                roots.push((w, e));
                continue;
            }
            if w.len() >= min_len {
                visit(&mut head, &w, &e);
            }
            for l in (0..2 * k as Letter).rev() {
                if w.last() == Some(&inverse_letter(l)) {
                    continue;
                }
                let mut nw = w.clone();
                nw.push(l);
                let ne = &e * self.letter(l);
                stack_words.push((nw, ne));
            }
        }
        roots.sort_by(|a, b| a.0.cmp(&b.0));
        let run = |(w, e): &(Vec<Letter>, Element)| {
            let mut acc = init();
            let mut buf = w.clone();
            self.dfs(&mut buf, e, min_len, max_len, &mut acc, &visit);
            acc
        };
        #[cfg(feature = "parallel")]
        let parts: Vec<T> = {
            use rayon::prelude::*;
            roots.par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<T> = roots.iter().map(run).collect();
        Ok(parts.into_iter().fold(head, merge))
    }

    fn dfs<T, V>(
        &self,
        buf: &mut Vec<Letter>,
        e: &Element,
        min_len: usize,
        max_len: usize,
        acc: &mut T,
        visit: &V,
    ) where
        V: Fn(&mut T, &[Letter], &Element),
    {
        if buf.len() >= min_len {
            visit(acc, buf, e);
        }
        if buf.len() == max_len {
            return;
        }
        let last = buf.last().copied();
        for l in 0..2 * self.rank() as Letter {
            if last == Some(inverse_letter(l)) {
                continue;
            }
            let ne = e * self.letter(l);
            buf.push(l);
            self.dfs(buf, &ne, min_len, max_len, acc, visit);
            buf.pop();
        }
    }

    /// Words of length exactly `len` with their images.
    pub fn sphere(&self, len: usize, cap: u64) -> Result<Vec<(Word, Element)>, ResourceCapError> {
        self.fold_ball(
            len,
            len,
            cap,
            Vec::new,
            |acc, w, e| {
                acc.push((
                    Word {
                        letters: w.to_vec(),
                    },
                    e.clone(),
                ))
            },
            |mut a, mut b| {
                a.append(&mut b);
                a
            },
        )
    }
}

/// Symmetric power `Sym^n` of a `2 x 2` matrix in the monomial basis
/// `x^(n-i) y^i`.
pub fn sym_power(a: &CMat, n: usize) -> CMat {
    let (a11, a21, a12, a22) = (a[(0, 0)], a[(1, 0)], a[(0, 1)], a[(1, 1)]);
    let mul = |p: &[C64], q: &[C64]| {
        let mut r = vec![C64::new(0.0, 0.0); p.len() + q.len() - 1];
        for (i, x) in p.iter().enumerate() {
            for (j, y) in q.iter().enumerate() {
                r[i + j] += x * y;
            }
        }
        r
    };
    // images of x and y as coefficient lists in (x, y)
    let x_img = [a11, a21];
    let y_img = [a12, a22];
    let mut m = CMat::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut poly = vec![C64::new(1.0, 0.0)];
        for _ in 0..n - i {
            poly = mul(&poly, &x_img);
        }
        for _ in 0..i {
            poly = mul(&poly, &y_img);
        }
        for (r, c) in poly.into_iter().enumerate() {
            m[(r, i)] = c;
        }
    }
    m
}

/// Per level data of a ping-pong certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCertificate {
    pub level: usize,
    /// Smallest distance between an attracting point and a repelling
    /// hyperplane over all compatible letter pairs.
    pub min_separation: f64,
    /// Largest contraction ratio on repelling hyperplanes.
    pub max_contraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub r: f64,
    pub eps: f64,
    pub contraction_bound: f64,
    pub min_transversality: f64,
    pub levels: Vec<LevelCertificate>,
    /// Orbit signature of the attracting flag of each letter.
    pub attractor_signatures: Vec<(String, String)>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum RejectionClause {
    NotLoxodromic {
        letter: String,
        margin: f64,
    },
    NotGeneric {
        letter: String,
        margin: f64,
    },
    NotTransverse {
        first: String,
        second: String,
        margin: f64,
    },
    PingPong {
        letter: String,
        level: usize,
        ratio: f64,
        bound: f64,
    },
    Separation {
        level: usize,
        separation: f64,
    },
    Numerical {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("Schottky certification failed: {}", serde_json::to_string(&self.failures).unwrap_or_default())]
pub struct Rejection {
    pub failures: Vec<RejectionClause>,
}

fn letter_name(l: Letter) -> String {
    letter_char(l).to_string()
}

/// Numerical ping-pong certificate for the representation.
///
/// With `A_s` the attracting flag of letter `s`, the flags `A_s` must be
/// generic and pairwise transverse.  On every exterior power the attracting
/// points are separated from the repelling hyperplanes of all letters other
/// than the inverse by at least `6 eps`, and each image maps the lines that
/// are `eps` away from its repelling hyperplane into the `eps` ball around
/// its attracting point.
pub fn certify(rep: &Representation) -> Result<Certificate, Rejection> {
    let d = rep.dim();
    let n = 2 * rep.rank();
    let o = rep.form();
    let mut failures = Vec::new();
    let numerical = |e: &dyn fmt::Display| RejectionClause::Numerical {
        message: e.to_string(),
    };
    let mut attractors = Vec::with_capacity(n);
    let mut signatures = Vec::with_capacity(n);
    for l in 0..n as Letter {
        let g = rep.letter(l);
        match is_loxodromic(g) {
            Ok(r) if r.holds => {}
            Ok(r) => {
                failures.push(RejectionClause::NotLoxodromic {
                    letter: letter_name(l),
                    margin: r.margin,
                });
                continue;
            }
            Err(e) => {
                failures.push(numerical(&e));
                continue;
            }
        }
        match attracting_flag(g) {
            Ok(f) => {
                let gen = o_generic(o, &f);
                match &gen.signature {
                    Some(s) => signatures.push((letter_name(l), s.pattern())),
                    None => failures.push(RejectionClause::NotGeneric {
                        letter: letter_name(l),
                        margin: gen.margin,
                    }),
                }
                attractors.push((l, f));
            }
            Err(e) => failures.push(numerical(&e)),
        }
    }
    if !failures.is_empty() {
        return Err(Rejection { failures });
    }
    let mut min_transversality = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let m = transversality_margin(&attractors[a].1, &attractors[b].1);
            min_transversality = min_transversality.min(m);
            if !(m > tol::TRANSVERSE) {
                failures.push(RejectionClause::NotTransverse {
                    first: letter_name(a as Letter),
                    second: letter_name(b as Letter),
                    margin: m,
                });
            }
        }
    }
    if !failures.is_empty() {
        return Err(Rejection { failures });
    }
    let mut levels = Vec::with_capacity(d - 1);
    let mut self_sep = f64::INFINITY;
    for j in 1..d {
        let mut sep = f64::INFINITY;
        for s in 0..n {
            // repelling hyperplane of s comes from the attracting flag of s^-1
            let omega = attractors[inverse_letter(s as Letter) as usize]
                .1
                .wedge(d - j);
            for t in 0..n {
                if t == inverse_letter(s as Letter) as usize {
                    continue;
                }
                let v = attractors[t].1.wedge(j);
                let dist = wedge_pairing(d, j, &v, &omega).norm();
                sep = sep.min(dist);
                if t == s {
                    self_sep = self_sep.min(dist);
                }
            }
        }
        levels.push(LevelCertificate {
            level: j,
            min_separation: sep,
            max_contraction: 0.0,
        });
    }
    let eps = levels
        .iter()
        .map(|l| l.min_separation)
        .fold(f64::INFINITY, f64::min)
        / 6.0;
    let bound = eps * eps / (1.0 + eps);
    if !(eps > 0.0) {
        failures.push(RejectionClause::Separation {
            level: 0,
            separation: 6.0 * eps,
        });
    }
    for l in 0..n as Letter {
        match loxodromy_levels(rep.letter(l)) {
            Ok(lv) => {
                for x in lv {
                    let entry = &mut levels[x.level - 1];
                    entry.max_contraction = entry.max_contraction.max(x.contraction_ratio);
                    if !(x.contraction_ratio <= bound) {
                        failures.push(RejectionClause::PingPong {
                            letter: letter_name(l),
                            level: x.level,
                            ratio: x.contraction_ratio,
                            bound,
                        });
                    }
                }
            }
            Err(e) => failures.push(numerical(&e)),
        }
    }
    if !failures.is_empty() {
        return Err(Rejection { failures });
    }
    Ok(Certificate {
        r: self_sep / 2.0,
        eps,
        contraction_bound: bound,
        min_transversality,
        levels,
        attractor_signatures: signatures,
        note: "finite certificate of the ping-pong configuration; the Anosov property is asymptotic and is only tested \
               through necessary conditions at finite length"
            .into(),
    })
}

/// Builds the representation from generator matrices, raises them to
/// `power` and certifies ping-pong.
pub fn build_schottky(
    generators: &[ScaledMatrix],
    o: Form,
    power: u32,
) -> Result<(Representation, Certificate), SchottkyError> {
    let meta = RepMeta {
        recipe: "explicit".into(),
        power,
        zariski_dense: "unchecked".into(),
        notes: Vec::new(),
    };
    let rep = Representation::new(generators, o, meta)?;
    let cert = certify(&rep)?;
    Ok((rep, cert))
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SchottkyError {
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Rejected(#[from] Rejection),
}

/// `Sym^(p-1) + Sym^(q-1)` of an `SL_2` Schottky group, with the form
/// positive on the first block and negative on the second.
pub fn build_reducible_example(
    p: usize,
    q: usize,
    sl2: &[CMat],
    field: Field,
    power: u32,
) -> Result<(Representation, Certificate), SchottkyError> {
    if p % 2 == q % 2 || p == 0 || q == 0 {
        return Err(RepError::Parity.into());
    }
    let gens = reducible_generators(p, q, sl2, field)?;
    let o = Form::standard(p, q, field);
    let meta = RepMeta {
        recipe: "reducible".into(),
        power,
        zariski_dense: "no".into(),
        notes: vec![format!(
            "reducible: Sym^{} + Sym^{} of an SL_2 Schottky group",
            p - 1,
            q - 1
        )],
    };
    let rep = Representation::new(&gens, o, meta)?;
    let cert = certify(&rep)?;
    Ok((rep, cert))
}

fn reducible_generators(
    p: usize,
    q: usize,
    sl2: &[CMat],
    field: Field,
) -> Result<Vec<ScaledMatrix>, RepError> {
    let d = p + q;
    sl2.iter()
        .map(|a| {
            let mut m = CMat::zeros(d, d);
            m.view_mut((0, 0), (p, p)).copy_from(&sym_power(a, p - 1));
            m.view_mut((p, p), (q, q)).copy_from(&sym_power(a, q - 1));
            Ok(ScaledMatrix::new(m, field)?)
        })
        .collect()
}

/// Minimum over one shell of the smallest simple root of the Cartan
/// projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellGap {
    pub length: usize,
    pub min_root: f64,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCheck {
    pub shells: Vec<ShellGap>,
    /// Slope of the linear lower envelope `min_root >= c l - c'`.
    pub c: f64,
    pub c_prime: f64,
    pub pass: bool,
    pub note: String,
}

/// Smallest admissible slope for the gap check to pass.
pub const GAP_SLOPE_MARGIN: f64 = 1e-3;

pub fn anosov_gap_check(
    rep: &Representation,
    max_len: usize,
    cap: u64,
) -> Result<GapCheck, ResourceCapError> {
    let init = || vec![(f64::INFINITY, Vec::<Letter>::new()); max_len + 1];
    let minima = rep.fold_ball(
        1,
        max_len,
        cap,
        init,
        |acc, w, e| {
            let root = cartan(e)
                .simple_roots()
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let slot = &mut acc[w.len()];
            if root < slot.0 {
                *slot = (root, w.to_vec());
            }
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                if y.0 < x.0 {
                    *x = y;
                }
            }
            a
        },
    )?;
    let shells: Vec<ShellGap> = (1..=max_len)
        .map(|l| ShellGap {
            length: l,
            min_root: minima[l].0,
            witness: Word {
                letters: minima[l].1.clone(),
            }
            .to_string(),
        })
        .collect();
    let (c, c_prime) = lower_envelope(&shells);
    Ok(GapCheck {
        pass: c > GAP_SLOPE_MARGIN,
        shells,
        c,
        c_prime,
        note: "finite length check: a positive slope is necessary for the Anosov property, not sufficient".into(),
    })
}

/// Least squares slope through the shell minima (values below the gap
/// tolerance count as zero) and the smallest intercept shift that makes the
/// line a lower bound.
fn lower_envelope(shells: &[ShellGap]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = shells
        .iter()
        .map(|s| {
            (
                s.length as f64,
                if s.min_root < tol::GAP {
                    0.0
                } else {
                    s.min_root
                },
            )
        })
        .collect();
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let c = sxy / sxx;
    let c_prime = pts
        .iter()
        .map(|p| c * p.0 - p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    (c, c_prime)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub word: String,
    pub signature: Option<String>,
    pub genericity_margin: f64,
    /// Distance from the Cartan attractor to the attracting fixed flag of
    /// the cyclic reduction of the word.
    pub fixed_flag_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSetReport {
    pub samples: Vec<LimitSample>,
    /// Signature pattern and number of samples.
    pub signatures: BTreeMap<String, usize>,
    pub non_generic: usize,
    pub failures: usize,
}

impl LimitSetReport {
    pub fn signature_list(&self) -> Vec<OrbitSignature> {
        self.signatures
            .keys()
            .map(|p| {
                OrbitSignature::from_signs(
                    p.chars().map(|c| if c == '+' { 1 } else { -1 }).collect(),
                )
            })
            .collect()
    }

    /// Most frequent signature (ties broken by pattern order).
    pub fn dominant(&self) -> Option<OrbitSignature> {
        let best = self
            .signatures
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))?;
        Some(OrbitSignature::from_signs(
            best.0
                .chars()
                .map(|c| if c == '+' { 1 } else { -1 })
                .collect(),
        ))
    }
}

/// Cartan attractors of `count` random words of length `len`, classified by
/// their open orbit, plus the attracting flags of the generators and their
/// inverses.
pub fn sample_limit_set(
    rep: &Representation,
    len: usize,
    count: usize,
    seed: u64,
) -> LimitSetReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rep.rank();
    let mut words: Vec<Word> = (0..2 * k as Letter)
        .map(|l| Word { letters: vec![l] })
        .collect();
    words.extend((0..count).map(|_| random_word(&mut rng, k, len)));
    let mut samples = Vec::with_capacity(words.len());
    let mut signatures = BTreeMap::new();
    let mut non_generic = 0;
    let mut failures = 0;
    for w in words {
        let g = rep.image(&w);
        let flag = if w.len() == 1 {
            attracting_flag(&g)
        } else {
            cartan_attractor(&g)
        };
        let flag: Flag = match flag {
            Ok(f) => f,
            Err(_) => {
                failures += 1;
                samples.push(LimitSample {
                    word: w.to_string(),
                    signature: None,
                    genericity_margin: 0.0,
                    fixed_flag_distance: None,
                });
                continue;
            }
        };
        let gen = o_generic(rep.form(), &flag);
        let fixed = w.cyclic_reduction();
        let fixed_flag_distance = attracting_flag(&rep.image(&fixed))
            .ok()
            .map(|f| f.distance(&flag));
        match &gen.signature {
            Some(s) => *signatures.entry(s.pattern()).or_insert(0) += 1,
            None => non_generic += 1,
        }
        samples.push(LimitSample {
            word: w.to_string(),
            signature: gen.signature.map(|s| s.pattern()),
            genericity_margin: gen.margin,
            fixed_flag_distance,
        });
    }
    LimitSetReport {
        samples,
        signatures,
        non_generic,
        failures,
    }
}

/// Construction recipe of a representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Recipe {
    /// Explicit generator matrices (row-major).
    Explicit { generators: Vec<Vec<Vec<Scalar>>> },
    /// Conjugates by random isometries of the form of diagonal matrices
    /// whose attracting and repelling flags share one open orbit.
    SingleOrbit {
        #[serde(default = "default_rank")]
        rank: usize,
        /// Log gap between consecutive eigenvalues.
        gap: f64,
        /// Size of the random isometries.
        spread: f64,
    },
    /// Like `single-orbit`, alternating between an attracting flag in one
    /// open orbit and its repelling flag in another.
    TwoOrbit {
        #[serde(default = "default_rank")]
        rank: usize,
        gap: f64,
        spread: f64,
    },
    /// `Sym^(p-1) + Sym^(q-1)` of hyperbolic `SL_2` matrices with the given
    /// translation lengths and axis angles.
    Reducible { translation: f64, angles: Vec<f64> },
    /// Rotations (a group that is not Anosov); never certified.
    RotationControl { angles: Vec<f64> },
}

fn default_rank() -> usize {
    2
}

/// Representation configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepConfig {
    pub field: Field,
    pub d: usize,
    pub p: usize,
    pub q: usize,
    /// Explicit generator matrices (row-major); alternative to `recipe`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<Vec<Scalar>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default = "default_power")]
    pub power: u32,
    #[serde(default)]
    pub seed: u64,
    /// Optional Gram matrix of the form; defaults to the standard one.
    #[serde(default)]
    pub gram: Option<Vec<Vec<Scalar>>>,
}

fn default_power() -> u32 {
    1
}

/// Outcome of building a configured representation.
pub struct Built {
    pub rep: Representation,
    pub certificate: Result<Certificate, Rejection>,
}

impl RepConfig {
    pub fn form(&self) -> Result<Form, RepError> {
        if self.p + self.q != self.d || self.d < 2 || self.d > tol::MAX_DIM {
            return Err(RepError::Parameter(format!(
                "signature ({}, {}) does not fit d = {}",
                self.p, self.q, self.d
            )));
        }
        let form = match &self.gram {
            Some(rows) => Form::new(jsonmat::from_rows(rows, self.field)?, self.field)?,
            None => Form::standard(self.p, self.q, self.field),
        };
        if form.signature() != (self.p, self.q) || form.dim() != self.d {
            return Err(RepError::Parameter(
                "gram matrix does not have the declared signature".into(),
            ));
        }
        Ok(form)
    }

    /// The recipe named in the config, with its parameters.
    pub fn recipe(&self) -> Result<Recipe, RepError> {
        match (&self.generators, self.recipe.as_deref()) {
            (Some(g), None | Some("explicit")) => Ok(Recipe::Explicit {
                generators: g.clone(),
            }),
            (Some(_), Some(_)) => Err(RepError::Parameter(
                "both generators and a recipe given".into(),
            )),
            (None, None) => Err(RepError::Parameter(
                "neither generators nor a recipe given".into(),
            )),
            (None, Some(name)) => {
                let mut obj = match &self.params {
                    serde_json::Value::Object(m) => m.clone(),
                    serde_json::Value::Null => serde_json::Map::new(),
                    _ => return Err(RepError::Parameter("params must be an object".into())),
                };
                obj.insert("recipe".into(), serde_json::Value::String(name.into()));
                serde_json::from_value(serde_json::Value::Object(obj))
                    .map_err(|e| RepError::Parameter(e.to_string()))
            }
        }
    }

    pub fn build(&self) -> Result<Built, RepError> {
        let form = self.form()?;
        let recipe = self.recipe()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let meta = |name: &str, dense: &str| RepMeta {
            recipe: name.into(),
            power: self.power,
            zariski_dense: dense.into(),
            notes: Vec::new(),
        };
        let d = self.d;
        let rep = match &recipe {
            Recipe::Explicit { generators } => {
                let gens = generators
                    .iter()
                    .map(|rows| {
                        Ok(ScaledMatrix::new(
                            jsonmat::from_rows(rows, self.field)?,
                            self.field,
                        )?)
                    })
                    .collect::<Result<Vec<_>, RepError>>()?;
                Representation::new(&gens, form, meta("explicit", "unchecked"))?
            }
            Recipe::SingleOrbit { rank, gap, spread } | Recipe::TwoOrbit { rank, gap, spread } => {
                let single = matches!(recipe, Recipe::SingleOrbit { .. });
                let base = if single {
                    palindromic_pattern(self.p, self.q).ok_or_else(|| {
                        RepError::Parameter(
                            "no palindromic sign pattern: p and q are both odd".into(),
                        )
                    })?
                } else {
                    let mut s = vec![1i8; self.p];
                    s.extend(vec![-1i8; self.q]);
                    s
                };
                let standardizer = form.standardizer();
                let st_inv = standardizer
                    .clone()
                    .try_inverse()
                    .ok_or(NumericsError::Singular)?;
                let model = Form::standard(self.p, self.q, self.field);
                let mut gens = Vec::with_capacity(*rank);
                for i in 0..*rank {
                    let pattern: Vec<i8> = if single || i % 2 == 0 {
                        base.clone()
                    } else {
                        base.iter().rev().copied().collect()
                    };
                    let diag = diagonal_for_pattern(&pattern, self.p, *gap);
                    let h = model.sample_isometry(&mut rng, *spread);
                    let hi = h.inverse().map_err(RepError::from)?;
                    let g = h.entries() * diag * hi.entries();
                    // back to the coordinates of the configured form
                    let g = &standardizer * g * &st_inv;
                    gens.push(ScaledMatrix::new(g, self.field)?);
                }
                let name = if single { "single-orbit" } else { "two-orbit" };
                Representation::new(&gens, form, meta(name, "unchecked"))?
            }
            Recipe::Reducible {
                translation,
                angles,
            } => {
                if self.p % 2 == self.q % 2 {
                    return Err(RepError::Parity);
                }
                if self.gram.is_some() {
                    return Err(RepError::Parameter(
                        "the reducible recipe uses the standard form".into(),
                    ));
                }
                let sl2: Vec<CMat> = angles
                    .iter()
                    .map(|&t| hyperbolic_sl2(*translation, t))
                    .collect();
                let gens = reducible_generators(self.p, self.q, &sl2, self.field)?;
                let mut m = meta("reducible", "no");
                m.notes.push(format!(
                    "Sym^{} + Sym^{} of an SL_2 Schottky group",
                    self.p - 1,
                    self.q - 1
                ));
                Representation::new(&gens, form, m)?
            }
            Recipe::RotationControl { angles } => {
                let gens = angles
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        let (a, b) = if i % 2 == 0 { (0, d - 1) } else { (0, 1) };
                        let mut m = CMat::identity(d, d);
                        m[(a, a)] = C64::new(t.cos(), 0.0);
                        m[(b, b)] = C64::new(t.cos(), 0.0);
                        m[(a, b)] = C64::new(-t.sin(), 0.0);
                        m[(b, a)] = C64::new(t.sin(), 0.0);
                        ScaledMatrix::new(m, self.field)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut m = meta("rotation-control", "unchecked");
                m.notes.push("compact generators: not Anosov".into());
                Representation::new(&gens, form, m)?
            }
        };
        let certificate = certify(&rep);
        Ok(Built { rep, certificate })
    }
}

/// A sign pattern with `p` pluses and `q` minuses equal to its reverse.
pub fn palindromic_pattern(p: usize, q: usize) -> Option<Vec<i8>> {
    let d = p + q;
    if p % 2 == 1 && q % 2 == 1 {
        return None;
    }
    let mut s = vec![0i8; d];
    let (mut pp, mut qq) = (p, q);
    // fill from both ends, alternating signs; the middle entry (odd d)
    // takes the sign with odd count
    let (mut i, mut j) = (0usize, d);
    let mut toggle = true;
    while j - i >= 2 {
        let sign = if (toggle && pp >= 2) || qq < 2 { 1 } else { -1 };
        if sign == 1 {
            pp -= 2;
        } else {
            qq -= 2;
        }
        s[i] = sign;
        s[j - 1] = sign;
        i += 1;
        j -= 1;
        toggle = !toggle;
    }
    if j - i == 1 {
        s[i] = if pp == 1 { 1 } else { -1 };
    }
    Some(s)
}

/// Diagonal matrix (slot coordinates) whose eigenvalues, in decreasing
/// order, sit on lines with the given signs; consecutive log gaps equal
/// `gap`.
pub fn diagonal_for_pattern(pattern: &[i8], p: usize, gap: f64) -> CMat {
    let d = pattern.len();
    let sorted: Vec<f64> = (0..d)
        .map(|i| gap * ((d as f64 - 1.0) / 2.0 - i as f64))
        .collect();
    let w = embed_compatible(pattern, p).expect("pattern with p pluses");
    let slots = w.act(&sorted);
    CMat::from_fn(d, d, |i, k| {
        if i == k {
            C64::new(slots[i].exp(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `R_t diag(e^(l/2), e^(-l/2)) R_t^-1`.
pub fn hyperbolic_sl2(translation: f64, angle: f64) -> CMat {
    let (c, s) = (angle.cos(), angle.sin());
    let r = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ],
    );
    let e = (translation / 2.0).exp();
    let dm = CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(e, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0 / e, 0.0),
        ],
    );
    &r * dm * r.transpose()
}

/// Cylinder of boundary points starting with the given prefix.
pub fn cylinder_of(word: &Word, depth: usize) -> Option<Vec<Letter>> {
    (word.len() >= depth).then(|| word.letters()[..depth].to_vec())
}

/// Attracting and repelling cylinders `(gamma_-, gamma_+)` of a word: the
/// prefixes of the cyclic reductions of `gamma^-1` and `gamma`.
pub fn endpoint_cylinders(word: &Word, depth: usize) -> Option<(Vec<Letter>, Vec<Letter>)> {
    let c = word.cyclic_reduction();
    if c.is_empty() {
        return None;
    }
    // powers extend short cyclic words so that every depth is available
    let mut long = c.clone();
    while long.len() < depth {
        long = Word {
            letters: [long.letters(), c.letters()].concat(),
        };
    }
    let inv = long.inverse();
    Some((cylinder_of(&inv, depth)?, cylinder_of(&long, depth)?))
}

pub fn word_from_letters(letters: &[Letter]) -> Word {
    Word::reduce(letters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_sizes() {
        assert_eq!(sphere_size(2, 1), 4);
        assert_eq!(sphere_size(2, 3), 36);
        assert_eq!(sphere_words(2, 3, DEFAULT_WORD_CAP).unwrap().len(), 36);
        assert!(sphere_words(2, 10, 100).is_err());
    }

    #[test]
    fn parse_and_display() {
        let w = Word::parse("abAB").unwrap();
        assert_eq!(w.to_string(), "abAB");
        assert_eq!(w.inverse().to_string(), "baBA");
        assert!(Word::parse("aA").is_err());
        assert_eq!(
            Word::parse("abA").unwrap().cyclic_reduction().to_string(),
            "b"
        );
    }

    #[test]
    fn rotations() {
        assert_eq!(
            Word::parse("ba").unwrap().min_rotation(),
            Word::parse("ab").unwrap()
        );
        let reps = conjugacy_reps(2, 1, DEFAULT_WORD_CAP).unwrap();
        assert_eq!(reps.len(), 4);
        let reps = conjugacy_reps(2, 2, DEFAULT_WORD_CAP).unwrap();
        assert!(reps.contains(&Word::parse("ab").unwrap()));
        assert!(!reps.contains(&Word::parse("ba").unwrap()));
    }

    #[test]
    fn palindromes() {
        assert_eq!(palindromic_pattern(2, 1), Some(vec![1, -1, 1]));
        assert_eq!(palindromic_pattern(1, 1), None);
        for (p, q) in [(2, 2), (3, 2), (4, 1), (2, 3)] {
            let s = palindromic_pattern(p, q).unwrap();
            assert_eq!(s.iter().filter(|&&x| x > 0).count(), p);
            assert!(s.iter().eq(s.iter().rev()));
        }
    }

    #[test]
    fn sym_power_is_multiplicative() {
        let a = hyperbolic_sl2(1.0, 0.3);
        let b = hyperbolic_sl2(0.7, 1.2);
        let lhs = sym_power(&(&a * &b), 3);
        let rhs = sym_power(&a, 3) * sym_power(&b, 3);
        assert!((lhs - rhs).norm() < 1e-12);
    }
}

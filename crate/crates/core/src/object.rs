//! Objects of the base dg-category and of its additive hull.
//!
//! A base object is a word of letters tensored together, together with an
//! integer weight. A letter is a generator complex dualized `level` times.
//! Realizing a word gives a [`ZComplex`] whose basis is lexicographically
//! ordered tuples of letter basis elements, which makes tensor products of
//! words strictly associative and the dual of a word a plain relabeling.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::complex::{odd, GradedMap, TensorBasis, ZComplex};
use crate::error::{Error, Result};
use crate::zmodule::IntMatrix;

/// A named generating complex.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub name: String,
    pub complex: ZComplex,
}

impl Generator {
    pub fn new(name: impl Into<String>, complex: ZComplex) -> Arc<Self> {
        Arc::new(Generator { name: name.into(), complex })
    }
}

#[derive(Clone, Debug)]
pub struct Letter {
    pub generator: Arc<Generator>,
    pub level: u32,
    complex: Arc<ZComplex>,
}

impl PartialEq for Letter {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && (Arc::ptr_eq(&self.generator, &other.generator) || self.generator == other.generator)
    }
}

impl Eq for Letter {}

impl Letter {
    pub fn new(generator: Arc<Generator>, level: u32) -> Self {
        let mut c = generator.complex.clone();
        for _ in 0..level {
            c = c.dual();
        }
        Letter { generator, level, complex: Arc::new(c) }
    }

    pub fn complex(&self) -> &Arc<ZComplex> {
        &self.complex
    }

    pub fn dual(&self) -> Letter {
        Letter::new(self.generator.clone(), self.level + 1)
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.generator.name)?;
        for _ in 0..self.level {
            write!(f, "^v")?;
        }
        Ok(())
    }
}

/// Position key used to order summands inside a term: a sequence of
/// `(term index, position)` pairs, one per original factor.
pub type Tag = Vec<(i64, u32)>;

/// A base object: a word with a weight, plus its ordering tag.
#[derive(Clone)]
pub struct Summand {
    pub word: Vec<Letter>,
    pub weight: i64,
    pub tag: Tag,
    real: Arc<TensorBasis>,
}

impl fmt::Debug for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Summand({} tag={:?})", self, self.tag)
    }
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            write!(f, "1")?;
        } else {
            let parts: Vec<String> = self.word.iter().map(ToString::to_string).collect();
            write!(f, "{}", parts.join("*"))?;
        }
        if self.weight != 0 {
            write!(f, "({})", self.weight)?;
        }
        Ok(())
    }
}

impl PartialEq for Summand {
    fn eq(&self, other: &Self) -> bool {
        self.word == other.word && self.weight == other.weight && self.tag == other.tag
    }
}

impl Eq for Summand {}

impl Summand {
    pub fn new(word: Vec<Letter>, weight: i64, tag: Tag) -> Self {
        let real = Arc::new(TensorBasis::new(word.iter().map(|l| (**l.complex()).clone()).collect()));
        Summand { word, weight, tag, real }
    }

    /// A single-letter summand on a generator.
    pub fn generator(g: &Arc<Generator>, tag: Tag) -> Self {
        Self::new(vec![Letter::new(g.clone(), 0)], 0, tag)
    }

    /// The empty word of the given weight (the tensor unit when the weight is 0).
    pub fn unit(weight: i64) -> Self {
        Self::new(vec![], weight, vec![])
    }

    pub fn complex(&self) -> &ZComplex {
        &self.real.complex
    }

    pub fn realization(&self) -> &TensorBasis {
        &self.real
    }

    /// Label ignoring the tag; equal labels mean equal base objects.
    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn same_object(&self, other: &Summand) -> bool {
        self.word == other.word && self.weight == other.weight
    }

    pub fn with_tag(&self, tag: Tag) -> Summand {
        Summand { word: self.word.clone(), weight: self.weight, tag, real: self.real.clone() }
    }

    pub fn tensor(&self, other: &Summand) -> Summand {
        let word = self.word.iter().chain(&other.word).cloned().collect();
        let tag = self.tag.iter().chain(&other.tag).copied().collect();
        Summand::new(word, self.weight + other.weight, tag)
    }

    pub fn dual(&self) -> Summand {
        let word = self.word.iter().rev().map(Letter::dual).collect();
        let tag = self.tag.iter().rev().map(|&(i, p)| (-i, p)).collect();
        Summand::new(word, -self.weight, tag)
    }
}

/// `f ⊗ g` between word realizations, `(f⊗g)(x⊗y) = (-1)^{|g||x|} f(x) ⊗ g(y)`.
/// The source and target words are the concatenations of the factor words.
#[allow(clippy::too_many_arguments)]
pub fn tensor_maps(
    f: &GradedMap,
    fs: &Summand,
    ft: &Summand,
    g: &GradedMap,
    gs: &Summand,
    gt: &Summand,
    source: &Summand,
    target: &Summand,
) -> GradedMap {
    let (rs, rt) = (source.realization(), target.realization());
    let split_s = fs.word.len();
    let split_t = ft.word.len();
    debug_assert_eq!(split_s + gs.word.len(), rs.len());
    debug_assert_eq!(split_t + gt.word.len(), rt.len());
    let deg = f.degree + g.degree;
    let mut blocks: BTreeMap<i64, IntMatrix> = BTreeMap::new();
    for n in rs.complex.degrees() {
        let rows = rt.complex.rank(n + deg);
        if rows == 0 {
            continue;
        }
        let mut m = IntMatrix::zeros(rows, rs.complex.rank(n));
        for (col, t) in rs.basis(n).iter().enumerate() {
            let (x, y) = t.split_at(split_s);
            let (px, ix) = fs.realization().index_of(x).expect("tuple of the first factor");
            let (py, iy) = gs.realization().index_of(y).expect("tuple of the second factor");
            let (Some(fm), Some(gm)) = (f.block_ref(px), g.block_ref(py)) else { continue };
            let negate = odd(g.degree * px);
            let tx = ft.realization().basis(px + f.degree);
            let ty = gt.realization().basis(py + g.degree);
            for (r1, a) in (0..fm.rows()).map(|r| (r, &fm[(r, ix)])) {
                if a.is_zero() {
                    continue;
                }
                for (r2, b) in (0..gm.rows()).map(|r| (r, &gm[(r, iy)])) {
                    if b.is_zero() {
                        continue;
                    }
                    let mut tup = tx[r1].clone();
                    tup.extend_from_slice(&ty[r2]);
                    let (_, row) = rt.index_of(&tup).expect("tuple of the target word");
                    let v: BigInt = a * b;
                    if negate {
                        m[(row, col)] -= v;
                    } else {
                        m[(row, col)] += v;
                    }
                }
            }
        }
        if !m.is_zero() {
            blocks.insert(n, m);
        }
    }
    GradedMap::new(Arc::new(rs.complex.clone()), Arc::new(rt.complex.clone()), deg, blocks)
        .expect("tensor map shapes")
}

/// Dual of a map `f: S -> S'` as a map `S'^∨ -> S^∨` of word realizations:
/// the Koszul transpose `φ ↦ (-1)^{|f||φ|} φ ∘ f` transported along the
/// identification of `real(S)^∨` with `real(S^∨)` that sends the dual basis
/// vector of a tuple to the reversed tuple with negated degrees.
pub fn dual_map(f: &GradedMap, s: &Summand, t: &Summand, s_dual: &Summand, t_dual: &Summand) -> GradedMap {
    let k = f.degree;
    let (src, tgt) = (t_dual.realization(), s_dual.realization());
    let mut blocks = BTreeMap::new();
    for m in src.complex.degrees() {
        let rows = tgt.complex.rank(m + k);
        if rows == 0 {
            continue;
        }
        // φ_{x'} with x' in real(t) of degree -m; φ∘f lives on real(s) degree -m-k
        let Some(fm) = f.block_ref(-m - k) else { continue };
        let mut out = IntMatrix::zeros(rows, src.complex.rank(m));
        let negate = odd(k * m);
        for (col, y) in src.basis(m).iter().enumerate() {
            let xp = reverse_tuple(y);
            let (_, ixp) = t.realization().index_of(&xp).expect("tuple of the target word");
            for (ix, x) in s.realization().basis(-m - k).iter().enumerate() {
                let v = &fm[(ixp, ix)];
                if v.is_zero() {
                    continue;
                }
                let (_, row) = tgt.index_of(&reverse_tuple(x)).expect("tuple of the dual word");
                if negate {
                    out[(row, col)] -= v;
                } else {
                    out[(row, col)] += v;
                }
            }
        }
        if !out.is_zero() {
            blocks.insert(m, out);
        }
    }
    GradedMap::new(Arc::new(src.complex.clone()), Arc::new(tgt.complex.clone()), k, blocks).expect("dual map shapes")
}

fn reverse_tuple(t: &[(i64, usize)]) -> Vec<(i64, usize)> {
    t.iter().rev().map(|&(d, i)| (-d, i)).collect()
}

/// A formal direct sum of base objects with its realization.
#[derive(Clone)]
pub struct Term {
    pub summands: Vec<Summand>,
    complex: Arc<ZComplex>,
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.summands.iter().map(ToString::to_string).collect();
        write!(f, "Term[{}]", parts.join(" + "))
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.summands == other.summands
    }
}

impl Eq for Term {}

impl Term {
    pub fn new(summands: Vec<Summand>) -> Self {
        let parts: Vec<&ZComplex> = summands.iter().map(Summand::complex).collect();
        let complex = Arc::new(ZComplex::direct_sum(&parts));
        Term { summands, complex }
    }

    pub fn complex(&self) -> &Arc<ZComplex> {
        &self.complex
    }

    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summands.is_empty()
    }

    /// Offset of summand `alpha` inside degree `d` of the realization.
    pub fn offset(&self, alpha: usize, d: i64) -> usize {
        self.summands[..alpha].iter().map(|s| s.complex().rank(d)).sum()
    }

    /// Concatenation of two terms.
    pub fn concat(&self, other: &Term) -> Term {
        Term::new(self.summands.iter().chain(&other.summands).cloned().collect())
    }

    /// Re-tags the summands as leaves `(index, position)`.
    pub fn retagged(&self, index: i64) -> Term {
        Term::new(
            self.summands
                .iter()
                .enumerate()
                .map(|(p, s)| s.with_tag(vec![(index, p as u32)]))
                .collect(),
        )
    }
}

/// Extracts the `(alpha -> beta)` component of a map between terms.
pub fn extract_block(map: &GradedMap, src: &Term, alpha: usize, tgt: &Term, beta: usize) -> GradedMap {
    let (s, t) = (&src.summands[alpha], &tgt.summands[beta]);
    let k = map.degree;
    let mut blocks = BTreeMap::new();
    for d in s.complex().degrees() {
        let (r, c) = (t.complex().rank(d + k), s.complex().rank(d));
        if r * c == 0 {
            continue;
        }
        if let Some(m) = map.block_ref(d) {
            let b = m.block(tgt.offset(beta, d + k), src.offset(alpha, d), r, c);
            if !b.is_zero() {
                blocks.insert(d, b);
            }
        }
    }
    GradedMap::new(Arc::new(s.complex().clone()), Arc::new(t.complex().clone()), k, blocks).expect("block shapes")
}

/// Accumulates summand-level components into a map between terms.
pub struct TermMapBuilder<'a> {
    src: &'a Term,
    tgt: &'a Term,
    degree: i64,
    blocks: BTreeMap<i64, IntMatrix>,
}

impl<'a> TermMapBuilder<'a> {
    pub fn new(src: &'a Term, tgt: &'a Term, degree: i64) -> Self {
        TermMapBuilder { src, tgt, degree, blocks: BTreeMap::new() }
    }

    pub fn add(&mut self, alpha: usize, beta: usize, f: &GradedMap, negate: bool) -> Result<()> {
        if f.degree != self.degree {
            return Err(Error::Shape(format!("component of degree {} in a map of degree {}", f.degree, self.degree)));
        }
        let k = self.degree;
        for (&d, m) in f.blocks() {
            if m.is_zero() {
                continue;
            }
            let shape = (self.tgt.complex.rank(d + k), self.src.complex.rank(d));
            let e = self.blocks.entry(d).or_insert_with(|| IntMatrix::zeros(shape.0, shape.1));
            e.add_block(self.tgt.offset(beta, d + k), self.src.offset(alpha, d), m, negate);
        }
        Ok(())
    }

    pub fn finish(self) -> GradedMap {
        let blocks = self.blocks.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        GradedMap::new(self.src.complex.clone(), self.tgt.complex.clone(), self.degree, blocks).expect("term map shapes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::HomComplex;

    fn gens() -> (Arc<Generator>, Arc<Generator>) {
        let x = Generator::new("X", ZComplex::two_term(0, IntMatrix::from_rows(&[[2], [1]])));
        let y = Generator::new("Y", ZComplex::two_term(-1, IntMatrix::from_rows(&[[1, 3]])));
        (x, y)
    }

    #[test]
    fn two_letter_word_is_tensor_complex() {
        let (x, y) = gens();
        let w = Summand::new(vec![Letter::new(x.clone(), 0), Letter::new(y.clone(), 0)], 0, vec![]);
        assert_eq!(*w.complex(), x.complex.tensor(&y.complex));
        assert!(w.complex().is_valid());
    }

    #[test]
    fn word_tensor_is_associative() {
        let (x, y) = gens();
        let a = Summand::generator(&x, vec![(0, 0)]);
        let b = Summand::generator(&y, vec![(1, 0)]);
        let c = Summand::generator(&x, vec![(2, 0)]).dual();
        assert_eq!(a.tensor(&b).tensor(&c), a.tensor(&b.tensor(&c)));
        assert_eq!(a.tensor(&b).tensor(&c).complex(), a.tensor(&b.tensor(&c)).complex());
        assert_eq!(a.tensor(&Summand::unit(0)), a);
    }

    #[test]
    fn dual_word_matches_dual_of_realization() {
        let (x, y) = gens();
        let w = Summand::generator(&x, vec![(0, 0)]).tensor(&Summand::generator(&y, vec![(0, 1)]));
        let d = w.dual();
        // identity on real(w) dualizes to the identity on real(w^∨)
        let id = GradedMap::identity(Arc::new(w.complex().clone()));
        let did = dual_map(&id, &w, &w, &d, &d);
        assert_eq!(did, GradedMap::identity(Arc::new(d.complex().clone())));
        assert_eq!(d.complex().ranks(), w.complex().dual().ranks());
        assert_eq!(d.dual().dual().dual(), d.dual().dual().dual());
        assert_eq!(d.dual().word.iter().map(|l| l.level).collect::<Vec<_>>(), vec![2, 2]);
    }

    #[test]
    fn dual_map_commutes_with_differential() {
        let (x, y) = gens();
        let s = Summand::generator(&x, vec![]);
        let t = Summand::generator(&y, vec![]).tensor(&Summand::generator(&x, vec![]));
        let h = HomComplex::new(Arc::new(s.complex().clone()), Arc::new(t.complex().clone()));
        let (sd, td) = (s.dual(), t.dual());
        for (&n, &dim) in &h.layout.dims {
            for k in 0..dim {
                let mut v = vec![BigInt::zero(); dim];
                v[k] = BigInt::from(1 + k as i64);
                let f = h.element(n, &v);
                let lhs = dual_map(&f.differential(), &s, &t, &sd, &td);
                let rhs = dual_map(&f, &s, &t, &sd, &td).differential();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn tensor_maps_satisfy_leibniz() {
        let (x, y) = gens();
        let s1 = Summand::generator(&x, vec![]);
        let s2 = Summand::generator(&y, vec![]);
        let hs = HomComplex::new(Arc::new(s1.complex().clone()), Arc::new(s1.complex().clone()));
        let ht = HomComplex::new(Arc::new(s2.complex().clone()), Arc::new(s2.complex().clone()));
        let src = s1.tensor(&s2);
        for (&n1, &d1) in &hs.layout.dims {
            for (&n2, &d2) in &ht.layout.dims {
                let f = hs.element(n1, &(0..d1).map(|i| BigInt::from(i as i64 + 1)).collect::<Vec<_>>());
                let g = ht.element(n2, &(0..d2).map(|i| BigInt::from(2 - i as i64)).collect::<Vec<_>>());
                let fg = tensor_maps(&f, &s1, &s1, &g, &s2, &s2, &src, &src);
                // d(f⊗g) = df⊗g + (-1)^{|f|} f⊗dg
                let lhs = fg.differential();
                let a = tensor_maps(&f.differential(), &s1, &s1, &g, &s2, &s2, &src, &src);
                let b = tensor_maps(&f, &s1, &s1, &g.differential(), &s2, &s2, &src, &src);
                assert_eq!(lhs, a.add(&b.signed(odd(n1))));
            }
        }
    }

    #[test]
    fn term_blocks_round_trip() {
        let (x, y) = gens();
        let t = Term::new(vec![Summand::generator(&x, vec![(0, 0)]), Summand::generator(&y, vec![(0, 1)])]);
        let id_y = GradedMap::identity(Arc::new(y.complex.clone()));
        let mut b = TermMapBuilder::new(&t, &t, 0);
        b.add(1, 1, &id_y, false).unwrap();
        let m = b.finish();
        assert_eq!(extract_block(&m, &t, 1, &t, 1), id_y);
        assert!(extract_block(&m, &t, 0, &t, 0).is_zero());
    }
}

//! The homotopy category `Tr`: `H⁰` Hom groups, shift, cone, standard triangles
//! and the decidable checks built on integer linear algebra.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::complex::{induced_map, is_group_iso, odd, GradedMap, HomologyPresentation, ZComplex};
use crate::dgcat::DgInstance;
use crate::error::{Error, Result};
use crate::object::{extract_block, Term, TermMapBuilder};
use crate::pretr::{compose_pretr, identity_pretr, Choice, PreTrElement, PreTrHom, TwistedComplex};
use crate::zmodule::{solve, FgAbGroup, IntMatrix};

/// `Hom_Tr(A, B) = H⁰(Hom_PreTr(A, B), D)` with cocycle representatives.
#[derive(Clone, Debug)]
pub struct TrHom {
    pub hom: PreTrHom,
    pub presentation: HomologyPresentation,
    pub group: FgAbGroup,
    /// Degree-0 cocycles, one per canonical generator (torsion first).
    pub generators: Vec<PreTrElement>,
}

impl TrHom {
    /// Canonical coordinates of the class of a degree-0 cocycle.
    pub fn class_of(&self, u: &PreTrElement) -> Result<Vec<BigInt>> {
        let v = self.hom.vectorize(u)?;
        let x = self
            .hom
            .sub_coordinates(0, &v)
            .ok_or_else(|| Error::Undefined("element lies outside the chosen subcomplexes".into()))?;
        self.presentation.class_of(&x)
    }

    pub fn is_zero_class(&self, u: &PreTrElement) -> Result<bool> {
        Ok(self.presentation.is_zero_class(&self.class_of(u)?))
    }
}

pub fn tr_hom(a: &TwistedComplex, b: &TwistedComplex) -> Result<TrHom> {
    tr_hom_with(a, b, &DgInstance::Total, &Choice::new())
}

pub fn tr_hom_with(a: &TwistedComplex, b: &TwistedComplex, inst: &DgInstance, choice: &Choice) -> Result<TrHom> {
    tr_hom_of(PreTrHom::with_choice(a, b, inst, choice)?)
}

pub fn tr_hom_of(hom: PreTrHom) -> Result<TrHom> {
    let presentation = HomologyPresentation::new(&hom.complex, 0)?;
    let generators = (0..presentation.orders.len())
        .map(|k| hom.element_from_sub(0, &presentation.generator(k)))
        .collect();
    Ok(TrHom { group: presentation.group.clone(), hom, presentation, generators })
}

/// `h` with `D(h) = u`, if one exists.
pub fn is_null_homotopic(hom: &PreTrHom, u: &PreTrElement) -> Result<Option<PreTrElement>> {
    let n = u.degree;
    let Some(x) = hom.sub_coordinates(n, &hom.vectorize(u)?) else {
        return Err(Error::Undefined("element lies outside the chosen subcomplexes".into()));
    };
    if x.iter().all(Zero::is_zero) {
        return Ok(Some(PreTrElement::zero(n - 1)));
    }
    let d = hom.complex.d(n - 1);
    Ok(solve(&d, &x)?.map(|h| hom.element_from_sub(n - 1, &h)))
}

pub fn is_cocycle(hom: &PreTrHom, u: &PreTrElement) -> Result<bool> {
    Ok(hom.apply_d(u)?.is_zero())
}

fn shift_once(a: &TwistedComplex, up: bool) -> TwistedComplex {
    let s = if up { 1 } else { -1 };
    let terms = a.terms().iter().map(|(&i, t)| (i - s, t.clone())).collect();
    let q = a.twists().iter().map(|(&(i, j), m)| ((i - s, j - s), m.signed(!odd(i + j)))).collect();
    TwistedComplex::new(terms, q).expect("shift shapes")
}

/// `A[k]` with `A[1]^i = A^{i+1}` and `q[1]_{i,j} = (-1)^{i+j+1} q_{i+1,j+1}`.
pub fn shift_twisted(a: &TwistedComplex, k: i64) -> TwistedComplex {
    let mut out = a.clone();
    for _ in 0..k.unsigned_abs() {
        out = shift_once(&out, k > 0);
    }
    out
}

/// `u[k]` with `(u[1])^{i,j} = (-1)^{i+j} u^{i+1,j+1}`.
pub fn shift_element(u: &PreTrElement, k: i64) -> PreTrElement {
    let s = k.signum();
    let mut out = u.clone();
    for _ in 0..k.unsigned_abs() {
        out = PreTrElement {
            degree: out.degree,
            blocks: out.blocks.iter().map(|(&(i, j), m)| ((i - s, j - s), m.signed(odd(i + j)))).collect(),
        };
    }
    out
}

fn embed(b: &mut TermMapBuilder, f: &GradedMap, s: &Term, s0: usize, t: &Term, t0: usize, negate: bool) {
    for al in 0..s.len() {
        for be in 0..t.len() {
            b.add(s0 + al, t0 + be, &extract_block(f, s, al, t, be), negate).expect("block degree");
        }
    }
}

/// A standard triangle `A -u-> B -α-> C -β-> A[1]`.
#[derive(Clone, Debug)]
pub struct Triangle {
    pub a: TwistedComplex,
    pub b: TwistedComplex,
    pub u: PreTrElement,
    pub cone: TwistedComplex,
    pub alpha: PreTrElement,
    pub beta: PreTrElement,
    pub shifted: TwistedComplex,
}

/// A cohomologous cocycle with `u^{a,b} = 0` for `a > b`, when one exists.
pub fn upper_representative(hom: &PreTrHom, u: &PreTrElement) -> Result<Option<PreTrElement>> {
    if u.is_upper() {
        return Ok(Some(u.clone()));
    }
    let lower: Vec<usize> =
        hom.blocks(0).iter().filter(|b| b.i > b.j).flat_map(|b| b.offset..b.offset + b.size).collect();
    let d = hom.ambient.d(-1).select_rows(&lower);
    let v = hom.vectorize(u)?;
    let rhs: Vec<BigInt> = lower.iter().map(|&r| -v[r].clone()).collect();
    let Some(h) = solve(&d, &rhs)? else { return Ok(None) };
    let dh = hom.ambient.d(-1).mul_vec(&h);
    let w: Vec<BigInt> = v.iter().zip(&dh).map(|(x, y)| x + y).collect();
    Ok(Some(hom.element(0, &w)))
}

/// Cone with `C^i = A^{i+1} ⊕ B^i` and
/// `t_{i,j} = [[(-1)^{i+j+1} q_{i+1,j+1}, 0], [u^{i+1,j}, (-1)^{i+j} r_{i,j}]]`.
pub fn cone_twisted(a: &TwistedComplex, b: &TwistedComplex, u: &PreTrElement) -> Result<Triangle> {
    if u.degree != 0 {
        return Err(Error::Input(format!("a morphism has degree 0, got {}", u.degree)));
    }
    let hom = PreTrHom::new(a, b);
    if !is_cocycle(&hom, u)? {
        return Err(Error::NotCocycle("D(u) != 0".into()));
    }
    let u = upper_representative(&hom, u)?
        .ok_or_else(|| Error::Input("no cohomologous representative with u^{a,b} = 0 for a > b".into()))?;
    let shifted = shift_twisted(a, 1);
    let idx: BTreeSet<i64> = shifted.terms().keys().chain(b.terms().keys()).copied().collect();
    let empty = Term::new(vec![]);
    let at = |i: i64| a.term(i + 1).unwrap_or(&empty);
    let bt = |i: i64| b.term(i).unwrap_or(&empty);
    let terms: BTreeMap<i64, Term> = idx.iter().map(|&i| (i, at(i).concat(bt(i)))).collect();
    let mut q = BTreeMap::new();
    for &i in &idx {
        for &j in idx.iter().filter(|&&j| j > i) {
            let mut m = TermMapBuilder::new(&terms[&i], &terms[&j], i - j + 1);
            let (na, ma) = (at(i).len(), at(j).len());
            if let Some(x) = a.q_ref(i + 1, j + 1) {
                embed(&mut m, x, at(i), 0, at(j), 0, !odd(i + j));
            }
            if let Some(x) = u.block(i + 1, j) {
                embed(&mut m, x, at(i), 0, bt(j), ma, false);
            }
            if let Some(x) = b.q_ref(i, j) {
                embed(&mut m, x, bt(i), na, bt(j), ma, odd(i + j));
            }
            let m = m.finish();
            if !m.is_zero() {
                q.insert((i, j), m);
            }
        }
    }
    let cone = TwistedComplex::new(terms, q)?;
    let mut alpha = PreTrElement::zero(0);
    let mut beta = PreTrElement::zero(0);
    for &i in &idx {
        let c = &cone.terms()[&i];
        if !bt(i).is_empty() {
            let mut m = TermMapBuilder::new(bt(i), c, 0);
            embed(&mut m, &GradedMap::identity(bt(i).complex().clone()), bt(i), 0, bt(i), at(i).len(), odd(i));
            alpha.blocks.insert((i, i), m.finish());
        }
        if !at(i).is_empty() {
            let mut m = TermMapBuilder::new(c, at(i), 0);
            embed(&mut m, &GradedMap::identity(at(i).complex().clone()), at(i), 0, at(i), 0, false);
            beta.blocks.insert((i, i), m.finish());
        }
    }
    Ok(Triangle { a: a.clone(), b: b.clone(), u, cone, alpha: alpha.normalized(), beta: beta.normalized(), shifted })
}

/// Outcome of the triangle checks; each entry names the identity checked.
#[derive(Clone, Debug, Default)]
pub struct TriangleReport {
    pub checks: Vec<(String, bool)>,
    pub fill_in: Option<PreTrElement>,
}

impl TriangleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    fn push(&mut self, name: &str, ok: bool) {
        self.checks.push((name.to_string(), ok));
    }
}

fn null(src: &TwistedComplex, tgt: &TwistedComplex, u: &PreTrElement) -> Result<bool> {
    Ok(is_null_homotopic(&PreTrHom::new(src, tgt), u)?.is_some())
}

/// Cocycle conditions, `β∘α ≃ 0`, and the rotated sequence
/// `B -α-> C -β-> A[1] -(-u[1])-> B[1] -α[1]-> C[1]` with null-homotopic composites.
pub fn triangle_checks(t: &Triangle) -> Result<TriangleReport> {
    let mut r = TriangleReport::default();
    let (b, c, a1) = (&t.b, &t.cone, &t.shifted);
    let b1 = shift_twisted(b, 1);
    let c1 = shift_twisted(c, 1);
    r.push("cone satisfies Maurer-Cartan", c.is_valid());
    r.push("D(alpha) = 0", is_cocycle(&PreTrHom::new(b, c), &t.alpha)?);
    r.push("D(beta) = 0", is_cocycle(&PreTrHom::new(c, a1), &t.beta)?);
    let ba = compose_pretr(&t.beta, &t.alpha);
    r.push("beta . alpha = 0 in Tr", null(b, a1, &ba)?);
    let u1 = shift_element(&t.u, 1).neg();
    r.push("D(-u[1]) = 0", is_cocycle(&PreTrHom::new(a1, &b1), &u1)?);
    r.push("-u[1] . beta = 0 in Tr", null(c, &b1, &compose_pretr(&u1, &t.beta))?);
    let al1 = shift_element(&t.alpha, 1);
    r.push("D(alpha[1]) = 0", is_cocycle(&PreTrHom::new(&b1, &c1), &al1)?);
    r.push("alpha[1] . -u[1] = 0 in Tr", null(a1, &c1, &compose_pretr(&al1, &u1))?);
    Ok(r)
}

/// Searches `w: C -> C'` with `D(w) = 0`, `w∘α ≃ α'∘g` and `β'∘w ≃ f[1]∘β`, given a
/// square `g∘u ≃ u'∘f` between two standard triangles.
pub fn fill_in(t: &Triangle, t2: &Triangle, f: &PreTrElement, g: &PreTrElement) -> Result<Option<PreTrElement>> {
    let (c, c2) = (&t.cone, &t2.cone);
    let h_cc = PreTrHom::new(c, c2);
    let h_bc = PreTrHom::new(&t.b, c2);
    let h_ca = PreTrHom::new(c, &t2.shifted);
    let (nw, ns1, ns2) = (h_cc.dim(0), h_bc.dim(-1), h_ca.dim(-1));
    let rows = [h_cc.dim(1), h_bc.dim(0), h_ca.dim(0)];
    let ncols = nw + ns1 + ns2;
    let mut m = IntMatrix::zeros(rows.iter().sum(), ncols);
    let d0 = h_cc.ambient.d(0);
    m.set_block(0, 0, &d0.block(0, 0, rows[0], nw));
    for k in 0..nw {
        let w = h_cc.basis_element(0, k);
        let x = h_bc.vectorize(&compose_pretr(&w, &t.alpha))?;
        let y = h_ca.vectorize(&compose_pretr(&t2.beta, &w))?;
        for (r, v) in x.into_iter().enumerate() {
            m[(rows[0] + r, k)] = v;
        }
        for (r, v) in y.into_iter().enumerate() {
            m[(rows[0] + rows[1] + r, k)] = v;
        }
    }
    m.add_block(rows[0], nw, &h_bc.ambient.d(-1).block(0, 0, rows[1], ns1), true);
    m.add_block(rows[0] + rows[1], nw + ns1, &h_ca.ambient.d(-1).block(0, 0, rows[2], ns2), true);
    let mut rhs = vec![BigInt::zero(); rows[0]];
    rhs.extend(h_bc.vectorize(&compose_pretr(&t2.alpha, g))?);
    rhs.extend(h_ca.vectorize(&compose_pretr(&shift_element(f, 1), &t.beta))?);
    Ok(solve(&m, &rhs)?.map(|x| h_cc.element(0, &x[..nw])))
}

/// Whether `g∘u - u'∘f` is null-homotopic.
pub fn square_commutes(t: &Triangle, t2: &Triangle, f: &PreTrElement, g: &PreTrElement) -> Result<bool> {
    let diff = compose_pretr(g, &t.u).sub(&compose_pretr(&t2.u, f));
    null(&t.a, &t2.b, &diff)
}

/// Inclusion of one choice into a larger one (same objects), as a chain map.
pub fn sub_inclusion(small: &PreTrHom, big: &PreTrHom) -> Result<GradedMap> {
    let mut blocks = BTreeMap::new();
    for n in small.degrees().collect::<Vec<_>>() {
        let inc = small.inclusion_matrix(n);
        let mut m = IntMatrix::zeros(big.sub_dim(n), small.sub_dim(n));
        for c in 0..inc.cols() {
            let x = big
                .sub_coordinates(n, &inc.column(c))
                .ok_or_else(|| Error::Input(format!("choice is not contained in the larger one in degree {n}")))?;
            for (r, v) in x.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        blocks.insert(n, m);
    }
    GradedMap::new(Arc::new(small.complex.clone()), Arc::new(big.complex.clone()), 0, blocks)
}

/// `H⁰` under several choices and whether each inclusion induces an isomorphism.
#[derive(Clone, Debug)]
pub struct ChoiceReport {
    pub groups: Vec<FgAbGroup>,
    pub isomorphisms: Vec<(String, bool)>,
}

impl ChoiceReport {
    pub fn passed(&self) -> bool {
        self.isomorphisms.iter().all(|(_, ok)| *ok) && self.groups.windows(2).all(|w| w[0] == w[1])
    }
}

fn iso_on_h0(f: &GradedMap) -> Result<bool> {
    let (hs, ht, m) = induced_map(f, 0)?;
    Ok(is_group_iso(&hs.orders, &ht.orders, &m))
}

/// Compares two choices through their meet: `T ⊃ M ⊂ T'`, each also included in the ambient complex.
pub fn choice_independence(
    a: &TwistedComplex,
    b: &TwistedComplex,
    inst: &DgInstance,
    first: &Choice,
    second: &Choice,
    meet: &Choice,
) -> Result<ChoiceReport> {
    let h1 = PreTrHom::with_choice(a, b, inst, first)?;
    let h2 = PreTrHom::with_choice(a, b, inst, second)?;
    let hm = PreTrHom::with_choice(a, b, inst, meet)?;
    let mut isomorphisms = Vec::new();
    isomorphisms.push(("meet -> first".to_string(), iso_on_h0(&sub_inclusion(&hm, &h1)?)?));
    isomorphisms.push(("meet -> second".to_string(), iso_on_h0(&sub_inclusion(&hm, &h2)?)?));
    for (name, h) in [("first", &h1), ("second", &h2), ("meet", &hm)] {
        isomorphisms.push((format!("{name} -> total"), iso_on_h0(&h.inclusion())?));
    }
    let groups = [&h1, &h2, &hm].iter().map(|h| h.complex.homology(0)).collect::<Result<Vec<_>>>()?;
    Ok(ChoiceReport { groups, isomorphisms })
}

/// Whether the inclusion of a choice into the ambient complex is a quasi-isomorphism.
pub fn choice_is_quasi_iso(h: &PreTrHom) -> Result<bool> {
    crate::complex::is_quasi_iso(&h.inclusion())
}

/// The identity class of `A` vanishes in `Tr`: a homotopy `h` with `D(h) = id`.
pub fn contracting_homotopy(a: &TwistedComplex) -> Result<Option<PreTrElement>> {
    is_null_homotopic(&PreTrHom::new(a, a), &identity_pretr(a))
}

/// `Hom_Tr(A, B)` for a single complex on each side, for quick checks.
pub fn base_tr_hom(a: &ZComplex, b: &ZComplex) -> Result<FgAbGroup> {
    let ta = crate::random::as_twisted("A", a.clone(), 0);
    let tb = crate::random::as_twisted("B", b.clone(), 0);
    Ok(tr_hom(&ta, &tb)?.group)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::object::{Generator, Summand};
    use crate::random::{as_twisted, random_pretr_cocycle, random_twisted, Rng, TwistedConfig};

    fn z() -> TwistedComplex {
        as_twisted("Z", ZComplex::concentrated(0, 1), 0)
    }

    fn scalar(a: &TwistedComplex, b: &TwistedComplex, k: i64) -> PreTrElement {
        let m = GradedMap::new(a.term_complex(0), b.term_complex(0), 0, [(0, IntMatrix::from_rows(&[[k]]))].into())
            .unwrap();
        PreTrElement { degree: 0, blocks: [((0, 0), m)].into() }
    }

    #[test]
    fn basic_hom_groups() {
        let h = tr_hom(&z(), &z()).unwrap();
        assert_eq!(h.group, FgAbGroup::free(1));
        assert_eq!(h.class_of(&identity_pretr(&z())).unwrap(), vec![BigInt::from(1)]);
        assert!(tr_hom(&z(), &TwistedComplex::zero()).unwrap().group.is_zero());
        let res = as_twisted("R", ZComplex::two_term(-1, IntMatrix::from_rows(&[[2]])), 0);
        assert_eq!(tr_hom(&z(), &res).unwrap().group, FgAbGroup::cyclic(2));
    }

    #[test]
    fn cone_of_identity_is_contractible() {
        let t = cone_twisted(&z(), &z(), &identity_pretr(&z())).unwrap();
        assert_eq!(t.cone.indices(), vec![-1, 0]);
        assert!(t.cone.is_valid());
        assert!(contracting_homotopy(&t.cone).unwrap().is_some());
        assert!(tr_hom(&z(), &t.cone).unwrap().group.is_zero());
        assert!(triangle_checks(&t).unwrap().passed());
    }

    #[test]
    fn cone_of_two_and_zero() {
        let t = cone_twisted(&z(), &z(), &scalar(&z(), &z(), 2)).unwrap();
        assert_eq!(tr_hom(&z(), &t.cone).unwrap().group, FgAbGroup::cyclic(2));
        let gen = &tr_hom(&z(), &t.cone).unwrap().generators[0];
        assert!(is_null_homotopic(&PreTrHom::new(&z(), &t.cone), gen).unwrap().is_none());
        let t0 = cone_twisted(&z(), &z(), &PreTrElement::zero(0)).unwrap();
        assert_eq!(t0.cone, shift_twisted(&z(), 1).direct_sum(&z()));
        assert!(triangle_checks(&t0).unwrap().passed());
    }

    #[test]
    fn shift_round_trip_and_cocycles() {
        let mut rng = Rng::seed(2);
        let cfg = TwistedConfig::default();
        for _ in 0..10 {
            let a = random_twisted(&mut rng, &cfg, "a");
            let b = random_twisted(&mut rng, &cfg, "b");
            let a1 = shift_twisted(&a, 1);
            assert!(a1.is_valid());
            assert_eq!(shift_twisted(&a1, -1), a);
            let u = random_pretr_cocycle(&mut rng, &PreTrHom::new(&a, &b), 0, false, 2);
            let u1 = shift_element(&u, 1);
            assert!(is_cocycle(&PreTrHom::new(&a1, &shift_twisted(&b, 1)), &u1).unwrap());
            assert_eq!(shift_element(&u1, -1), u);
            assert_eq!(shift_element(&identity_pretr(&a), 1), identity_pretr(&a1));
        }
    }

    #[test]
    fn random_triangles_and_fill_in() {
        let mut rng = Rng::seed(12);
        let cfg = TwistedConfig { max_terms: 2, ..Default::default() };
        for _ in 0..5 {
            let a = random_twisted(&mut rng, &cfg, "a");
            let b = random_twisted(&mut rng, &cfg, "b");
            let b2 = random_twisted(&mut rng, &cfg, "c");
            let u = random_pretr_cocycle(&mut rng, &PreTrHom::new(&a, &b), 0, true, 2);
            let g = random_pretr_cocycle(&mut rng, &PreTrHom::new(&b, &b2), 0, true, 2);
            let t = cone_twisted(&a, &b, &u).unwrap();
            assert!(triangle_checks(&t).unwrap().passed());
            let t2 = cone_twisted(&a, &b2, &compose_pretr(&g, &u)).unwrap();
            let f = identity_pretr(&a);
            assert!(square_commutes(&t, &t2, &f, &g).unwrap());
            assert!(fill_in(&t, &t2, &f, &g).unwrap().is_some());
        }
    }

    #[test]
    fn composition_of_classes() {
        let mut rng = Rng::seed(13);
        let cfg = TwistedConfig::default();
        for _ in 0..6 {
            let a = random_twisted(&mut rng, &cfg, "a");
            let b = random_twisted(&mut rng, &cfg, "b");
            let c = random_twisted(&mut rng, &cfg, "c");
            let (hab, hbc) = (PreTrHom::new(&a, &b), PreTrHom::new(&b, &c));
            let f = random_pretr_cocycle(&mut rng, &hab, 0, false, 2);
            let g = random_pretr_cocycle(&mut rng, &hbc, 0, false, 2);
            let hac = PreTrHom::new(&a, &c);
            assert!(is_cocycle(&hac, &compose_pretr(&g, &f)).unwrap());
            let s = crate::random::random_pretr_element(&mut rng, &hbc, -1, 2);
            let bd = hbc.apply_d(&s).unwrap();
            assert!(is_null_homotopic(&hac, &compose_pretr(&bd, &f)).unwrap().is_some());
        }
    }

    #[test]
    fn single_summand_term_helpers() {
        let g = Generator::new("X", ZComplex::concentrated(0, 2));
        let t = Term::new(vec![Summand::generator(&g, vec![(0, 0)])]);
        let a = TwistedComplex::single(t, 0);
        assert_eq!(tr_hom(&a, &a).unwrap().group, FgAbGroup::free(4));
    }

    #[test]
    fn restricted_choices_agree() {
        let mut rng = Rng::seed(21);
        let cfg = TwistedConfig { max_terms: 2, ..Default::default() };
        for _ in 0..5 {
            let ci = crate::random::random_choice_instance(&mut rng, &cfg);
            let r = choice_independence(&ci.a, &ci.b, &ci.instance, &ci.first, &ci.second, &ci.meet).unwrap();
            assert!(r.passed(), "{r:?}");
            assert!(matches!(
                PreTrHom::with_choice(&ci.a, &ci.b, &ci.instance, &Choice::new()),
                Err(Error::Undefined(_))
            ));
        }
    }
}

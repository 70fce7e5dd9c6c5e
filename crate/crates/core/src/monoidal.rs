//! Tensor product, dual, internal hom, unit and Tate twists of twisted
//! complexes, with the structure-identity audit.

use std::collections::BTreeMap;
use std::sync::Arc;


use crate::complex::{odd, GradedMap, ZComplex};
use crate::error::Result;
use crate::object::{dual_map, extract_block, tensor_maps, Summand, Term, TermMapBuilder};
use crate::pretr::{compose_pretr, identity_pretr, PreTrElement, PreTrHom, TwistedComplex};
use crate::tr::tr_hom;

/// The tensor unit: the empty word of weight 0 at index 0.
pub fn unit() -> TwistedComplex {
    TwistedComplex::single(Term::new(vec![Summand::unit(0)]), 0)
}

/// The Tate object: the empty word of weight `n` placed at index `2n`.
pub fn tate_object(n: i64) -> TwistedComplex {
    TwistedComplex::single(Term::new(vec![Summand::unit(n)]), 2 * n)
}

/// `A(n)` with `A(n)_i = A_{i+2n} ⊗ (weight n)` and `q(n)_{i,j} = q_{i+2n,j+2n} ⊗ 1`.
pub fn tate_twist(a: &TwistedComplex, n: i64) -> TwistedComplex {
    if n == 0 {
        return a.clone();
    }
    tensor_twisted(a, &TwistedComplex::single(Term::new(vec![Summand::unit(n)]), -2 * n))
}

/// Reorders every term by tag (stable), carrying the twists along.
pub fn normal_form(a: &TwistedComplex) -> TwistedComplex {
    let perms: BTreeMap<i64, Vec<usize>> = a
        .terms()
        .iter()
        .map(|(&i, t)| {
            let mut p: Vec<usize> = (0..t.len()).collect();
            p.sort_by(|&x, &y| t.summands[x].tag.cmp(&t.summands[y].tag));
            (i, p)
        })
        .collect();
    let terms: BTreeMap<i64, Term> = a
        .terms()
        .iter()
        .map(|(&i, t)| (i, Term::new(perms[&i].iter().map(|&k| t.summands[k].clone()).collect())))
        .collect();
    let mut q = BTreeMap::new();
    for (&(i, j), m) in a.twists() {
        let (s, t) = (&a.terms()[&i], &a.terms()[&j]);
        let mut b = TermMapBuilder::new(&terms[&i], &terms[&j], m.degree);
        for (ni, &al) in perms[&i].iter().enumerate() {
            for (nj, &be) in perms[&j].iter().enumerate() {
                b.add(ni, nj, &extract_block(m, s, al, t, be), false).expect("degree");
            }
        }
        q.insert((i, j), b.finish());
    }
    TwistedComplex::new(terms, q).expect("normal form shapes")
}

/// Twist components `(source summand, target summand, map, negate)` per index pair.
type Components = BTreeMap<(i64, i64), Vec<(usize, usize, GradedMap, bool)>>;

/// Summands of a term list sorted by tag, remembering their origin.
fn sorted_terms<K: Clone>(entries: BTreeMap<i64, Vec<(K, Summand)>>) -> (BTreeMap<i64, Term>, BTreeMap<i64, Vec<K>>) {
    let mut terms = BTreeMap::new();
    let mut keys = BTreeMap::new();
    for (i, mut list) in entries {
        list.sort_by(|x, y| x.1.tag.cmp(&y.1.tag));
        keys.insert(i, list.iter().map(|(k, _)| k.clone()).collect());
        terms.insert(i, Term::new(list.into_iter().map(|(_, s)| s).collect()));
    }
    (terms, keys)
}

/// `M_i = ⊕_{i₁+i₂=i} A_{i₁} ⊗ A'_{i₂}` with twists `(-1)^{i₂(j₁-i₁-1)} q ⊗ 1`
/// and `(-1)^{i₁} 1 ⊗ q'`; summands in tag order.
pub fn tensor_twisted(a: &TwistedComplex, b: &TwistedComplex) -> TwistedComplex {
    type Key = (i64, usize, i64, usize);
    let mut entries: BTreeMap<i64, Vec<(Key, Summand)>> = BTreeMap::new();
    for (i1, al, s) in a.summands() {
        for (i2, be, t) in b.summands() {
            entries.entry(i1 + i2).or_default().push(((i1, al, i2, be), s.tensor(t)));
        }
    }
    let (terms, keys) = sorted_terms(entries);
    let pos: BTreeMap<Key, usize> =
        keys.values().flat_map(|list| list.iter().enumerate().map(|(p, k)| (*k, p))).collect();
    let mut comps: Components = BTreeMap::new();
    for (&(i1, j1), q) in a.twists() {
        let (sa, ta) = (&a.terms()[&i1], &a.terms()[&j1]);
        for (i2, be, y) in b.summands() {
            let id = GradedMap::identity(Arc::new(y.complex().clone()));
            for al in 0..sa.len() {
                for al2 in 0..ta.len() {
                    let f = extract_block(q, sa, al, ta, al2);
                    if f.is_zero() {
                        continue;
                    }
                    let (x, x2) = (&sa.summands[al], &ta.summands[al2]);
                    let m = tensor_maps(&f, x, x2, &id, y, y, &x.tensor(y), &x2.tensor(y));
                    let (p, p2) = (pos[&(i1, al, i2, be)], pos[&(j1, al2, i2, be)]);
                    comps.entry((i1 + i2, j1 + i2)).or_default().push((p, p2, m, odd(i2 * (j1 - i1 - 1))));
                }
            }
        }
    }
    for (&(i2, j2), q) in b.twists() {
        let (sb, tb) = (&b.terms()[&i2], &b.terms()[&j2]);
        for (i1, al, x) in a.summands() {
            let id = GradedMap::identity(Arc::new(x.complex().clone()));
            for be in 0..sb.len() {
                for be2 in 0..tb.len() {
                    let g = extract_block(q, sb, be, tb, be2);
                    if g.is_zero() {
                        continue;
                    }
                    let (y, y2) = (&sb.summands[be], &tb.summands[be2]);
                    let m = tensor_maps(&id, x, x, &g, y, y2, &x.tensor(y), &x.tensor(y2));
                    let (p, p2) = (pos[&(i1, al, i2, be)], pos[&(i1, al, j2, be2)]);
                    comps.entry((i1 + i2, i1 + j2)).or_default().push((p, p2, m, odd(i1)));
                }
            }
        }
    }
    assemble(terms, comps)
}

fn assemble(
    terms: BTreeMap<i64, Term>,
    comps: Components,
) -> TwistedComplex {
    let mut q = BTreeMap::new();
    for ((i, j), list) in comps {
        let mut bld = TermMapBuilder::new(&terms[&i], &terms[&j], i - j + 1);
        for (p, p2, m, neg) in &list {
            bld.add(*p, *p2, m, *neg).expect("twist degree");
        }
        q.insert((i, j), bld.finish());
    }
    TwistedComplex::new(terms, q).expect("assembled shapes")
}

/// Sign exponent `c_ij·ij + c_i·i + c_j·j + c (mod 2)` for the dual twists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DualExponent {
    pub ij: bool,
    pub i: bool,
    pub j: bool,
    pub constant: bool,
}

impl DualExponent {
    /// `ij - j + 1`.
    pub const STANDARD: DualExponent = DualExponent { ij: true, i: false, j: true, constant: true };
    /// `ij - j`, kept as a negative control.
    pub const CORRUPTED: DualExponent = DualExponent { ij: true, i: false, j: true, constant: false };

    pub fn negates(self, i: i64, j: i64) -> bool {
        (self.ij && odd(i * j)) ^ (self.i && odd(i)) ^ (self.j && odd(j)) ^ self.constant
    }

    pub fn all() -> impl Iterator<Item = DualExponent> {
        (0..16u8).map(|b| DualExponent { ij: b & 8 != 0, i: b & 4 != 0, j: b & 2 != 0, constant: b & 1 != 0 })
    }

    pub fn describe(self) -> String {
        let mut parts = Vec::new();
        if self.ij {
            parts.push("ij");
        }
        if self.i {
            parts.push("i");
        }
        if self.j {
            parts.push("j");
        }
        if self.constant {
            parts.push("1");
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// `(A^∨)_i = (A_{-i})^∨` with `(q^∨)_{i,j} = (-1)^{ij-j+1} ᵗq_{-j,-i}`.
pub fn dual_twisted(a: &TwistedComplex) -> TwistedComplex {
    dual_twisted_with(a, DualExponent::STANDARD)
}

pub fn dual_twisted_with(a: &TwistedComplex, e: DualExponent) -> TwistedComplex {
    let mut entries: BTreeMap<i64, Vec<(usize, Summand)>> = BTreeMap::new();
    for (i, al, s) in a.summands() {
        entries.entry(-i).or_default().push((al, s.dual()));
    }
    let (terms, keys) = sorted_terms(entries);
    let pos: BTreeMap<(i64, usize), usize> = keys
        .iter()
        .flat_map(|(&i, list)| list.iter().enumerate().map(move |(p, &k)| ((i, k), p)))
        .collect();
    let mut comps: Components = BTreeMap::new();
    for (&(k, l), q) in a.twists() {
        // q_{-j,-i} with -j = k, -i = l
        let (i, j) = (-l, -k);
        let (sk, sl) = (&a.terms()[&k], &a.terms()[&l]);
        for al in 0..sk.len() {
            for be in 0..sl.len() {
                let f = extract_block(q, sk, al, sl, be);
                if f.is_zero() {
                    continue;
                }
                let (x, y) = (&sk.summands[al], &sl.summands[be]);
                let m = dual_map(&f, x, y, &x.dual(), &y.dual());
                comps.entry((i, j)).or_default().push((pos[&(i, be)], pos[&(j, al)], m, e.negates(i, j)));
            }
        }
    }
    assemble(terms, comps)
}

/// `Hom(A, B) = A^∨ ⊗ B`.
pub fn internal_hom(a: &TwistedComplex, b: &TwistedComplex) -> TwistedComplex {
    tensor_twisted(&dual_twisted(a), b)
}

/// Degreewise `(-1)^n` from a realization to that of its double dual.
fn comparison(s: &Summand, t: &Summand, sign: bool) -> GradedMap {
    let (src, tgt) = (Arc::new(s.complex().clone()), Arc::new(t.complex().clone()));
    let blocks = src
        .ranks()
        .into_iter()
        .map(|(n, r)| {
            let v = if odd(n) ^ sign { -1 } else { 1 };
            (n, crate::zmodule::IntMatrix::scalar(r, v))
        })
        .collect();
    GradedMap::new(src, tgt, 0, blocks).expect("comparison shapes")
}

/// `i_A: A -> A^∨∨` with components `(-1)^i` on `A_i` (composed with the base
/// comparison), and its inverse. `A` is taken in normal form.
pub fn reflexivity(a: &TwistedComplex) -> (TwistedComplex, PreTrElement, PreTrElement) {
    let dd = dual_twisted(&dual_twisted(a));
    let mut fwd = PreTrElement::zero(0);
    let mut back = PreTrElement::zero(0);
    for (&i, t) in a.terms() {
        let t2 = &dd.terms()[&i];
        let mut f = TermMapBuilder::new(t, t2, 0);
        let mut g = TermMapBuilder::new(t2, t, 0);
        for (p, s) in t.summands.iter().enumerate() {
            let s2 = &t2.summands[p];
            f.add(p, p, &comparison(s, s2, odd(i)), false).expect("degree");
            g.add(p, p, &comparison(s2, s, odd(i)), false).expect("degree");
        }
        fwd.blocks.insert((i, i), f.finish());
        back.blocks.insert((i, i), g.finish());
    }
    (dd, fwd, back)
}

/// One sample for the audit.
#[derive(Clone, Debug)]
pub struct MonoidalSample {
    pub a: TwistedComplex,
    pub b: TwistedComplex,
    pub c: TwistedComplex,
}

/// Outcome of the structure-identity audit.
#[derive(Clone, Debug, Default)]
pub struct MonoidalReport {
    pub samples: usize,
    /// `(identity, failures)`.
    pub checks: Vec<(String, usize)>,
    pub first_failure: Option<(usize, String)>,
    /// Samples (plus the fixed control) on which the corrupted dual exponent breaks Maurer–Cartan.
    pub corrupted_failures: usize,
    /// Dual exponents keeping Maurer–Cartan and the identities on every sample.
    pub passing_exponents: Vec<DualExponent>,
}

impl MonoidalReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, f)| *f == 0)
    }
}

pub const IDENTITIES: [&str; 8] = [
    "tensor satisfies Maurer-Cartan",
    "dual satisfies Maurer-Cartan",
    "(A*B)*C = A*(B*C)",
    "1*A = A = A*1",
    "(A*B)^v = B^v*A^v",
    "i_A: A -> A^vv is a cocycle",
    "i_A is invertible",
    "Hom_Tr(C, A^v*B) = Hom_Tr(C*A, B)",
];

/// Checks every identity on one sample; entries follow [`IDENTITIES`].
pub fn sample_checks(s: &MonoidalSample) -> Result<[bool; 8]> {
    let (a, b, c) = (normal_form(&s.a), normal_form(&s.b), normal_form(&s.c));
    let ab = tensor_twisted(&a, &b);
    let mc_tensor = ab.is_valid() && tensor_twisted(&b, &c).is_valid();
    let mc_dual = dual_twisted(&a).is_valid() && dual_twisted(&ab).is_valid();
    let assoc = tensor_twisted(&ab, &c) == tensor_twisted(&a, &tensor_twisted(&b, &c));
    let e = unit();
    let unit_ok = tensor_twisted(&e, &a) == a && tensor_twisted(&a, &e) == a;
    let dual_ok = dual_twisted(&ab) == tensor_twisted(&dual_twisted(&b), &dual_twisted(&a));
    let (dd, fwd, back) = reflexivity(&a);
    let cocycle = PreTrHom::new(&a, &dd).apply_d(&fwd)?.is_zero() && PreTrHom::new(&dd, &a).apply_d(&back)?.is_zero();
    let inverse = compose_pretr(&back, &fwd) == identity_pretr(&a) && compose_pretr(&fwd, &back) == identity_pretr(&dd);
    let adj = tr_hom(&c, &internal_hom(&a, &b))?.group == tr_hom(&tensor_twisted(&c, &a), &b)?.group;
    Ok([mc_tensor, mc_dual, assoc, unit_ok, dual_ok, cocycle, inverse, adj])
}

/// Whether the dual built with exponent `e` satisfies Maurer–Cartan and the dual identity.
pub fn exponent_passes(s: &MonoidalSample, e: DualExponent) -> bool {
    let (a, b) = (normal_form(&s.a), normal_form(&s.b));
    let ab = tensor_twisted(&a, &b);
    let d = |x: &TwistedComplex| dual_twisted_with(x, e);
    d(&a).is_valid() && d(&ab).is_valid() && d(&ab) == tensor_twisted(&d(&b), &d(&a))
}

/// `X -1-> X -1-> X` with `X = (Z -1-> Z)` and the homotopy `q_{0,2}` solving
/// Maurer–Cartan; its twists compose nontrivially, so a uniform sign flip of
/// the dual twists is detected.
pub fn control_sample() -> TwistedComplex {
    use crate::complex::HomComplex;
    use crate::object::Generator;
    use crate::zmodule::{solve, IntMatrix};
    let x = Generator::new("X", ZComplex::two_term(-1, IntMatrix::from_rows(&[[1]])));
    let terms: BTreeMap<i64, Term> =
        (0..3).map(|i| (i, Term::new(vec![Summand::generator(&x, vec![(i, 0)])]))).collect();
    let c = terms[&0].complex().clone();
    let id = GradedMap::identity(c.clone());
    let hom = HomComplex::new(c.clone(), c);
    let h = solve(&hom.complex.d(-1), &hom.vectorize(&id.neg())).ok().flatten().expect("contractible");
    let q = [((0, 1), id.clone()), ((1, 2), id), ((0, 2), hom.element(-1, &h))].into();
    TwistedComplex::new(terms, q).expect("control shapes")
}

pub fn monoidal_audit(samples: &[MonoidalSample]) -> Result<MonoidalReport> {
    use rayon::prelude::*;
    let results: Vec<[bool; 8]> = samples.par_iter().map(sample_checks).collect::<Result<Vec<_>>>()?;
    let mut report = MonoidalReport { samples: samples.len(), ..Default::default() };
    for (k, name) in IDENTITIES.iter().enumerate() {
        let fails = results.iter().filter(|r| !r[k]).count();
        report.checks.push((name.to_string(), fails));
    }
    report.first_failure = results
        .iter()
        .enumerate()
        .find_map(|(n, r)| r.iter().position(|ok| !ok).map(|k| (n, IDENTITIES[k].to_string())));
    let control = MonoidalSample { a: control_sample(), b: unit(), c: unit() };
    let with_control: Vec<&MonoidalSample> = samples.iter().chain(std::iter::once(&control)).collect();
    report.corrupted_failures = with_control
        .par_iter()
        .filter(|s| !dual_twisted_with(&normal_form(&s.a), DualExponent::CORRUPTED).is_valid())
        .count();
    report.passing_exponents =
        DualExponent::all().filter(|&e| with_control.iter().all(|s| exponent_passes(s, e))).collect();
    Ok(report)
}

/// The single-complex case: `A ⊗ B` for single terms at index 0 is the base tensor.
pub fn base_tensor(a: &ZComplex, b: &ZComplex) -> ZComplex {
    a.tensor(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{as_twisted, random_twisted, Rng, TwistedConfig};
    use crate::zmodule::IntMatrix;

    fn samples(seed: u64, n: usize) -> Vec<MonoidalSample> {
        let mut rng = Rng::seed(seed);
        let cfg = TwistedConfig { max_terms: 3, ..Default::default() };
        let small = TwistedConfig { max_terms: 2, ..Default::default() };
        (0..n)
            .map(|_| MonoidalSample {
                a: random_twisted(&mut rng, &cfg, "a"),
                b: random_twisted(&mut rng, &small, "b"),
                c: random_twisted(&mut rng, &small, "c"),
            })
            .collect()
    }

    #[test]
    fn single_terms() {
        let x = ZComplex::two_term(0, IntMatrix::from_rows(&[[2]]));
        let y = ZComplex::two_term(-1, IntMatrix::from_rows(&[[1], [3]]));
        let t = tensor_twisted(&as_twisted("X", x.clone(), 0), &as_twisted("Y", y.clone(), 0));
        assert_eq!(*t.term_complex(0), x.tensor(&y));
        assert_eq!(dual_twisted(&unit()), unit());
        let d = dual_twisted(&as_twisted("X", x.clone(), 1));
        assert_eq!(d.indices(), vec![-1]);
        assert_eq!(*d.term_complex(-1), x.dual());
    }

    #[test]
    fn tate_twists() {
        let mut rng = Rng::seed(1);
        let a = random_twisted(&mut rng, &TwistedConfig::default(), "a");
        assert_eq!(tate_twist(&a, 0), a);
        assert_eq!(tate_twist(&tate_twist(&unit(), 3), -3), unit());
        assert_eq!(tate_twist(&tate_twist(&a, 2), -1), tate_twist(&a, 1));
        let t = tensor_twisted(&tate_object(2), &tate_object(-1));
        assert_eq!(t.summands().next().unwrap().2.weight, 1);
        let shifted = tate_twist(&a, 1);
        assert_eq!(shifted.indices(), a.indices().iter().map(|i| i - 2).collect::<Vec<_>>());
    }

    #[test]
    fn identities_hold_on_random_samples() {
        let s = samples(31, 10);
        let report = monoidal_audit(&s).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.corrupted_failures > 0, "negative control must fail somewhere");
        assert!(report.passing_exponents.contains(&DualExponent::STANDARD));
        assert!(!report.passing_exponents.contains(&DualExponent::CORRUPTED));
    }

    #[test]
    fn internal_hom_units() {
        let mut rng = Rng::seed(2);
        let b = random_twisted(&mut rng, &TwistedConfig::default(), "b");
        assert_eq!(internal_hom(&unit(), &b), b);
        assert_eq!(internal_hom(&b, &unit()), dual_twisted(&b));
    }
}

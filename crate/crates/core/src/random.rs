//! Seeded generators for complexes, twisted complexes and cocycles.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ccomplex::{CComplex, Chirality};
use crate::complex::{GradedMap, HomComplex, ZComplex};
use crate::dgcat::{unit_pivots, DgInstance, DistinguishedFamily, RestrictedInstance};
use crate::object::{Generator, Summand, Term};
use crate::pretr::{AuditSample, Choice, PreTrElement, PreTrHom, TwistedComplex};
use crate::zmodule::{kernel_basis, solve, IntMatrix};

/// Deterministic generator with a counter for fresh names.
pub struct Rng {
    inner: ChaCha8Rng,
    counter: u64,
}

impl Rng {
    pub fn seed(seed: u64) -> Self {
        Rng { inner: ChaCha8Rng::seed_from_u64(seed), counter: 0 }
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        self.inner.gen_range(lo..=hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.inner.gen_bool(p)
    }

    pub fn fresh(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}{}", self.counter)
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.inner
    }
}

#[derive(Clone, Debug)]
pub struct ComplexConfig {
    /// Range for the lowest degree.
    pub lo: (i64, i64),
    pub max_len: usize,
    pub max_rank: usize,
    /// Coefficients are drawn from `-coeff..=coeff`.
    pub coeff: i64,
}

impl Default for ComplexConfig {
    fn default() -> Self {
        ComplexConfig { lo: (-1, 0), max_len: 2, max_rank: 2, coeff: 2 }
    }
}

/// A random bounded complex of free groups with at least one nonzero rank.
pub fn random_complex(rng: &mut Rng, cfg: &ComplexConfig) -> ZComplex {
    let lo = rng.range(cfg.lo.0, cfg.lo.1);
    let len = 1 + rng.index(cfg.max_len.max(1));
    let mut ranks: Vec<usize> = (0..len).map(|_| rng.index(cfg.max_rank + 1)).collect();
    if ranks.iter().all(|&r| r == 0) {
        let k = rng.index(len);
        ranks[k] = 1;
    }
    let mut d: Vec<IntMatrix> = Vec::new();
    for k in 0..len.saturating_sub(1) {
        // rows of d^k must annihilate the image of d^{k-1}
        let allowed = match d.last() {
            Some(prev) => kernel_basis(&prev.transpose()),
            None => IntMatrix::identity(ranks[k]),
        };
        let r = random_matrix(rng, ranks[k + 1], allowed.cols(), cfg.coeff);
        d.push(r.mul(&allowed.transpose()));
    }
    ZComplex::new(lo, ranks, d).expect("random complex shapes")
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize, coeff: i64) -> IntMatrix {
    let data = (0..rows * cols).map(|_| BigInt::from(rng.range(-coeff, coeff))).collect();
    IntMatrix::from_vec(rows, cols, data).expect("shape")
}

fn random_vector(rng: &mut Rng, len: usize, coeff: i64) -> Vec<BigInt> {
    (0..len).map(|_| BigInt::from(rng.range(-coeff, coeff))).collect()
}

/// A random element of `Hom^n(A, B)`.
pub fn random_hom_element(rng: &mut Rng, hom: &HomComplex, n: i64, coeff: i64) -> GradedMap {
    let v = random_vector(rng, hom.complex.rank(n), coeff);
    hom.element(n, &v)
}

/// A random cocycle in `Hom^n(A, B)`, a combination of a kernel basis.
pub fn random_cocycle(rng: &mut Rng, hom: &HomComplex, n: i64, coeff: i64) -> GradedMap {
    let k = kernel_basis(&hom.complex.d(n));
    let c = random_vector(rng, k.cols(), coeff);
    hom.element(n, &k.mul_vec(&c))
}

#[derive(Clone, Debug)]
pub struct TwistedConfig {
    /// Range for the lowest index.
    pub first_index: (i64, i64),
    pub max_terms: usize,
    pub max_summands: usize,
    pub complex: ComplexConfig,
    pub coeff: i64,
}

impl Default for TwistedConfig {
    fn default() -> Self {
        TwistedConfig { first_index: (-1, 1), max_terms: 3, max_summands: 1, complex: ComplexConfig::default(), coeff: 1 }
    }
}

/// A random one-sided twisted complex satisfying Maurer–Cartan. Neighbouring
/// twists are random chain maps and longer twists solve the MC equation with
/// a random cocycle added; draws without a solution are discarded.
pub fn random_twisted(rng: &mut Rng, cfg: &TwistedConfig, prefix: &str) -> TwistedComplex {
    let first = rng.range(cfg.first_index.0, cfg.first_index.1);
    let count = 1 + rng.index(cfg.max_terms.max(1));
    let mut terms = BTreeMap::new();
    for i in first..first + count as i64 {
        let k = 1 + rng.index(cfg.max_summands.max(1));
        let summands = (0..k)
            .map(|pos| {
                let g = Generator::new(rng.fresh(prefix), random_complex(rng, &cfg.complex));
                Summand::generator(&g, vec![(i, pos as u32)])
            })
            .collect();
        terms.insert(i, Term::new(summands));
    }
    for _ in 0..64 {
        if let Some(q) = random_twists(rng, &terms, cfg.coeff) {
            return TwistedComplex::new(terms, q).expect("random twist shapes");
        }
    }
    TwistedComplex::new(terms, BTreeMap::new()).expect("untwisted")
}

fn random_twists(
    rng: &mut Rng,
    terms: &BTreeMap<i64, Term>,
    coeff: i64,
) -> Option<BTreeMap<(i64, i64), GradedMap>> {
    let idx: Vec<i64> = terms.keys().copied().collect();
    let mut q: BTreeMap<(i64, i64), GradedMap> = BTreeMap::new();
    for gap in 1..idx.len() {
        for s in 0..idx.len() - gap {
            let (i, j) = (idx[s], idx[s + gap]);
            let hom = HomComplex::new(terms[&i].complex().clone(), terms[&j].complex().clone());
            let e = i - j + 1;
            let base = if gap == 1 {
                GradedMap::zero(hom.source.clone(), hom.target.clone(), e)
            } else {
                // (-1)^j d(x) = -Σ q_kj q_ik
                let mut rhs = GradedMap::zero(hom.source.clone(), hom.target.clone(), e + 1);
                for &k in idx.iter().filter(|&&k| i < k && k < j) {
                    if let (Some(a), Some(b)) = (q.get(&(i, k)), q.get(&(k, j))) {
                        rhs = rhs.add(&b.compose(a));
                    }
                }
                if rhs.is_zero() {
                    GradedMap::zero(hom.source.clone(), hom.target.clone(), e)
                } else {
                    let target = rhs.signed(j % 2 == 0);
                    let x = solve(&hom.complex.d(e), &hom.vectorize(&target)).ok()??;
                    hom.element(e, &x)
                }
            };
            let m = base.add(&random_cocycle(rng, &hom, e, coeff));
            if !m.is_zero() {
                q.insert((i, j), m);
            }
        }
    }
    Some(q)
}

/// A random element of `Hom_PreTr^n(A, B)` in ambient coordinates.
pub fn random_pretr_element(rng: &mut Rng, hom: &PreTrHom, n: i64, coeff: i64) -> PreTrElement {
    let v = random_vector(rng, hom.dim(n), coeff);
    hom.element(n, &v)
}

/// A random `D`-cocycle of degree `n`; with `upper`, only components with `i <= j`.
pub fn random_pretr_cocycle(rng: &mut Rng, hom: &PreTrHom, n: i64, upper: bool, coeff: i64) -> PreTrElement {
    let dim = hom.dim(n);
    let keep: Vec<usize> = hom
        .blocks(n)
        .iter()
        .filter(|b| !upper || b.i <= b.j)
        .flat_map(|b| b.offset..b.offset + b.size)
        .collect();
    let d = hom.ambient.d(n).select_columns(&keep);
    let k = kernel_basis(&d);
    let c = random_vector(rng, k.cols(), coeff);
    let x = k.mul_vec(&c);
    let mut v = vec![BigInt::zero(); dim];
    for (p, &col) in keep.iter().enumerate() {
        v[col] = x[p].clone();
    }
    hom.element(n, &v)
}

fn random_degree(rng: &mut Rng, hom: &PreTrHom) -> i64 {
    let degs: Vec<i64> = hom.degrees().filter(|&n| hom.dim(n) > 0).collect();
    if degs.is_empty() {
        0
    } else {
        degs[rng.index(degs.len())]
    }
}

/// Composable pairs `f: A -> B`, `g: B -> C` of random degrees for the sign audit.
pub fn audit_suite(seed: u64, count: usize, cfg: &TwistedConfig) -> Vec<AuditSample> {
    let mut rng = Rng::seed(seed);
    (0..count)
        .map(|_| {
            let a = random_twisted(&mut rng, cfg, "a");
            let b = random_twisted(&mut rng, cfg, "b");
            let c = random_twisted(&mut rng, cfg, "c");
            let hab = PreTrHom::new(&a, &b);
            let hbc = PreTrHom::new(&b, &c);
            let (m, n) = (random_degree(&mut rng, &hab), random_degree(&mut rng, &hbc));
            let f = random_pretr_element(&mut rng, &hab, m, 2);
            let g = random_pretr_element(&mut rng, &hbc, n, 2);
            AuditSample { a, b, c, f, g }
        })
        .collect()
}

/// A random valid C-complex with up to `max_cols` adjacent columns. Adjacent maps
/// are random chain maps; longer maps solve the coherence identity.
pub fn random_ccomplex(rng: &mut Rng, chirality: Chirality, max_cols: usize) -> CComplex {
    let cfg = ComplexConfig { lo: (-2, 1), max_len: 3, max_rank: 3, coeff: 2 };
    loop {
        let p0 = rng.range(-2, 2);
        let count = 1 + rng.index(max_cols.max(1));
        let cols: BTreeMap<i64, Arc<ZComplex>> =
            (p0..p0 + count as i64).map(|m| (m, Arc::new(random_complex(rng, &cfg)))).collect();
        if let Some(higher) = random_higher(rng, &cols, chirality) {
            let plain = cols.into_iter().map(|(m, c)| (m, (*c).clone())).collect();
            return CComplex::new(chirality, plain, higher).expect("random C-complex shapes");
        }
    }
}

fn random_higher(
    rng: &mut Rng,
    cols: &BTreeMap<i64, Arc<ZComplex>>,
    chirality: Chirality,
) -> Option<BTreeMap<(i64, i64), GradedMap>> {
    let idx: Vec<i64> = cols.keys().copied().collect();
    let mut f: BTreeMap<(i64, i64), GradedMap> = BTreeMap::new();
    for gap in 1..idx.len() {
        for s in 0..idx.len() - gap {
            let (m, n) = (idx[s], idx[s + gap]);
            let hom = HomComplex::new(cols[&m].clone(), cols[&n].clone());
            let e = m - n + 1;
            // (-1)^n δ(F) = -Σ c_l F_{l,n} F_{m,l}
            let mut rhs = GradedMap::zero(hom.source.clone(), hom.target.clone(), e + 1);
            for &l in idx.iter().filter(|&&l| m < l && l < n) {
                if let (Some(a), Some(b)) = (f.get(&(m, l)), f.get(&(l, n))) {
                    let neg = chirality == Chirality::Right && (l + 1) % 2 != 0;
                    rhs = rhs.add(&b.compose(a).signed(neg));
                }
            }
            let base = if rhs.is_zero() {
                GradedMap::zero(hom.source.clone(), hom.target.clone(), e)
            } else {
                let target = rhs.signed(n % 2 == 0);
                let x = solve(&hom.complex.d(e), &hom.vectorize(&target)).ok()??;
                hom.element(e, &x)
            };
            let map = base.add(&random_cocycle(rng, &hom, e, 1));
            if !map.is_zero() {
                f.insert((m, n), map);
            }
        }
    }
    Some(f)
}

/// A restricted instance with two sufficient choices and their meet.
#[derive(Clone, Debug)]
pub struct ChoiceInstance {
    pub a: TwistedComplex,
    pub b: TwistedComplex,
    pub instance: DgInstance,
    pub first: Choice,
    pub second: Choice,
    pub meet: Choice,
}

/// Draws a pair whose block `(max index of A, min index of B)` carries unit pivots and
/// restricts it by a cut family: `T = {0}`, `T' = {1}`, `M = {0, 1}` (or `{}`, `{0}`, `{0}`
/// with a single pivot). Other summand pairs stay total.
pub fn random_choice_instance(rng: &mut Rng, cfg: &TwistedConfig) -> ChoiceInstance {
    loop {
        let a = random_twisted(rng, cfg, "a");
        let b = random_twisted(rng, cfg, "b");
        let (Some(&i), Some(&j)) = (a.terms().keys().last(), b.terms().keys().next()) else { continue };
        let (s, t) = (&a.terms()[&i].summands[0], &b.terms()[&j].summands[0]);
        let hom = HomComplex::new(arc(s.complex().clone()), arc(t.complex().clone()));
        let Some((n, piv)) =
            hom.complex.degrees().map(|n| (n, unit_pivots(&hom, n))).find(|(_, p)| !p.is_empty())
        else {
            continue;
        };
        let sets: Vec<(String, BTreeSet<usize>)> = if piv.len() >= 2 {
            vec![("T".into(), [0].into()), ("T'".into(), [1].into()), ("M".into(), [0, 1].into())]
        } else {
            vec![("T".into(), BTreeSet::new()), ("T'".into(), [0].into()), ("M".into(), [0].into())]
        };
        let fam = DistinguishedFamily::from_cuts(s.clone(), t.clone(), n, &sets).expect("unit pivots");
        let instance = DgInstance::Restricted(RestrictedInstance::new(vec![fam]));
        let pick = |id: &str| -> Choice { [((i, 0, j, 0), id.to_string())].into() };
        return ChoiceInstance { a, b, instance, first: pick("T"), second: pick("T'"), meet: pick("M") };
    }
}

/// Wraps a complex as a single-term twisted complex.
pub fn as_twisted(name: &str, c: ZComplex, index: i64) -> TwistedComplex {
    let g = Generator::new(name, c);
    TwistedComplex::single(Term::new(vec![Summand::generator(&g, vec![(index, 0)])]), index)
}

pub fn arc(c: ZComplex) -> Arc<ZComplex> {
    Arc::new(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_complexes_are_valid() {
        let mut rng = Rng::seed(1);
        let cfg = ComplexConfig { max_len: 4, max_rank: 3, ..Default::default() };
        for _ in 0..50 {
            let c = random_complex(&mut rng, &cfg);
            assert!(c.is_valid());
            assert!(c.total_rank() > 0);
        }
    }

    #[test]
    fn random_twisted_are_valid_and_seeded() {
        let cfg = TwistedConfig { max_terms: 4, ..Default::default() };
        let mut r1 = Rng::seed(9);
        let mut r2 = Rng::seed(9);
        let mut longer = 0;
        for _ in 0..30 {
            let a = random_twisted(&mut r1, &cfg, "x");
            assert!(a.is_valid());
            assert_eq!(a, random_twisted(&mut r2, &cfg, "x"));
            longer += a.twists().keys().filter(|(i, j)| j - i >= 2).count();
        }
        assert!(longer > 0, "some higher twists occur");
    }
}

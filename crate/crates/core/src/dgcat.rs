//! The partial dg-category layer: a total instance in which every composition
//! is defined, and a restricted instance whose compositions are only defined on
//! explicitly listed quasi-isomorphic subcomplexes of the Hom-complexes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use crate::complex::{is_quasi_iso, GradedMap, HomComplex, ZComplex};
use crate::error::{Error, Result};
use crate::object::Summand;
use crate::zmodule::{snf, IntMatrix, Solver};

/// Result of a composition in a partial dg-category.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Composite {
    Defined(GradedMap),
    Undefined(String),
}

impl Composite {
    pub fn is_defined(&self) -> bool {
        matches!(self, Composite::Defined(_))
    }

    pub fn defined(self) -> Option<GradedMap> {
        match self {
            Composite::Defined(g) => Some(g),
            Composite::Undefined(_) => None,
        }
    }
}

/// A subcomplex of a Hom-complex given by a saturated basis in each degree.
#[derive(Clone, Debug)]
pub struct Member {
    pub id: String,
    /// Cut indices this member was built from.
    pub cuts: BTreeSet<usize>,
    /// Columns spanning the subgroup of `Hom^n`, in the Hom-complex coordinates.
    pub basis: BTreeMap<i64, IntMatrix>,
    solvers: BTreeMap<i64, Solver>,
}

impl Member {
    pub fn new(id: impl Into<String>, cuts: BTreeSet<usize>, basis: BTreeMap<i64, IntMatrix>) -> Self {
        let solvers = basis.iter().map(|(&n, b)| (n, Solver::new(b))).collect();
        Member { id: id.into(), cuts, basis, solvers }
    }

    /// Coordinates of `v ∈ Hom^n` in the member basis, if it lies in the member.
    pub fn coordinates(&self, n: i64, v: &[BigInt]) -> Option<Vec<BigInt>> {
        match self.solvers.get(&n) {
            Some(s) => s.solve(v).ok().flatten(),
            None => Some(v.to_vec()),
        }
    }

    pub fn contains_vector(&self, n: i64, v: &[BigInt]) -> bool {
        self.coordinates(n, v).is_some()
    }

    pub fn dim(&self, n: i64, ambient: usize) -> usize {
        self.basis.get(&n).map_or(ambient, IntMatrix::cols)
    }

    /// Basis of degree `n`, identity where the member is the whole group.
    pub fn basis_or_identity(&self, n: i64, ambient: usize) -> IntMatrix {
        self.basis.get(&n).cloned().unwrap_or_else(|| IntMatrix::identity(ambient))
    }
}

/// Distinguished subcomplexes of `Hom(A, B)` for one pair of base objects,
/// with the meets that are listed for them.
#[derive(Clone, Debug)]
pub struct DistinguishedFamily {
    pub source: Summand,
    pub target: Summand,
    pub hom: Arc<HomComplex>,
    pub members: Vec<Member>,
    /// Listed common lower bounds, keyed by unordered member id pairs.
    pub meets: BTreeMap<(String, String), String>,
}

/// Unit pivots of `d^{n-1}` in the Hom-complex, usable as cuts at degree `n`.
pub fn unit_pivots(hom: &HomComplex, n: i64) -> Vec<usize> {
    let Some(d) = hom.complex.d_ref(n - 1) else { return vec![] };
    let s = snf(d);
    s.diagonal().iter().take_while(|x| x.is_one()).enumerate().map(|(k, _)| k).collect()
}

/// Subcomplex obtained by removing the acyclic pieces `w_k -> d w_k` for `k ∈ cuts`
/// (unit pivots of `d^{n-1}`). Degree `n` keeps the columns of `U^{-1}` outside
/// the cut, degree `n-1` keeps the columns of `V` outside the cut.
pub fn cut_subcomplex(hom: &HomComplex, n: i64, cuts: &BTreeSet<usize>) -> Result<BTreeMap<i64, IntMatrix>> {
    let d = hom
        .complex
        .d_ref(n - 1)
        .ok_or_else(|| Error::Input(format!("no differential into degree {n}")))?;
    let s = snf(d);
    let units = s.diagonal().iter().take_while(|x| x.is_one()).count();
    if let Some(&bad) = cuts.iter().find(|&&k| k >= units) {
        return Err(Error::Input(format!("cut {bad} is not a unit pivot")));
    }
    let keep_n: Vec<usize> = (0..s.u_inv.cols()).filter(|k| !cuts.contains(k)).collect();
    let keep_m: Vec<usize> = (0..s.v.cols()).filter(|k| !cuts.contains(k)).collect();
    let mut basis = BTreeMap::new();
    basis.insert(n, s.u_inv.select_columns(&keep_n));
    basis.insert(n - 1, s.v.select_columns(&keep_m));
    Ok(basis)
}

impl DistinguishedFamily {
    /// Family of cut subcomplexes at degree `n`, one member per cut set. The meet
    /// of two members is listed whenever the union of their cut sets is a member.
    pub fn from_cuts(
        source: Summand,
        target: Summand,
        n: i64,
        cut_sets: &[(String, BTreeSet<usize>)],
    ) -> Result<Self> {
        let hom = Arc::new(HomComplex::new(
            Arc::new(source.complex().clone()),
            Arc::new(target.complex().clone()),
        ));
        let mut members = Vec::new();
        for (id, cuts) in cut_sets {
            let basis = cut_subcomplex(&hom, n, cuts)?;
            members.push(Member::new(id.clone(), cuts.clone(), basis));
        }
        let mut meets = BTreeMap::new();
        for a in &members {
            for b in &members {
                if a.id >= b.id {
                    continue;
                }
                let union: BTreeSet<usize> = a.cuts.union(&b.cuts).copied().collect();
                if let Some(m) = members.iter().find(|m| m.cuts == union) {
                    meets.insert((a.id.clone(), b.id.clone()), m.id.clone());
                }
            }
        }
        Ok(DistinguishedFamily { source, target, hom, members, meets })
    }

    pub fn member(&self, id: &str) -> Result<&Member> {
        self.members
            .iter()
            .find(|m| m.id == id)
            .ok_or_else(|| Error::Input(format!("no member {id:?} in the family for {} -> {}", self.source, self.target)))
    }

    pub fn listed_meet(&self, a: &str, b: &str) -> Option<&str> {
        if a == b {
            return self.members.iter().find(|m| m.id == a).map(|m| m.id.as_str());
        }
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.meets.get(&key).map(String::as_str)
    }

    /// Differential of the member as a complex in its own coordinates.
    pub fn member_complex(&self, m: &Member) -> Result<ZComplex> {
        let mut ranks = BTreeMap::new();
        let mut d = BTreeMap::new();
        for (&n, &dim) in &self.hom.layout.dims {
            ranks.insert(n, m.dim(n, dim));
        }
        for (&n, &dim) in &self.hom.layout.dims {
            let next = self.hom.layout.dim(n + 1);
            if next == 0 {
                continue;
            }
            let b = m.basis_or_identity(n, dim);
            let img = self.hom.complex.d(n).mul(&b);
            let mut out = IntMatrix::zeros(m.dim(n + 1, next), b.cols());
            for c in 0..img.cols() {
                let coords = m
                    .coordinates(n + 1, &img.column(c))
                    .ok_or_else(|| Error::InvalidComplex(format!("member {} not closed under d", m.id)))?;
                for (r, x) in coords.into_iter().enumerate() {
                    out[(r, c)] = x;
                }
            }
            d.insert(n, out);
        }
        ZComplex::from_maps(&ranks, &d)
    }

    /// Inclusion of a member into the ambient Hom-complex.
    pub fn inclusion(&self, m: &Member) -> Result<GradedMap> {
        let sub = Arc::new(self.member_complex(m)?);
        let blocks = self
            .hom
            .layout
            .dims
            .iter()
            .map(|(&n, &dim)| (n, m.basis_or_identity(n, dim)))
            .collect();
        GradedMap::new(sub, Arc::new(self.hom.complex.clone()), 0, blocks)
    }

    /// Certifies that every member's inclusion is a quasi-isomorphism and that
    /// every listed meet lies in both members.
    pub fn certify(&self) -> Result<()> {
        for m in &self.members {
            let inc = self.inclusion(m)?;
            if !is_quasi_iso(&inc)? {
                return Err(Error::Input(format!("member {} is not quasi-isomorphic to the Hom-complex", m.id)));
            }
        }
        for ((a, b), c) in &self.meets {
            let meet = self.member(c)?;
            for other in [self.member(a)?, self.member(b)?] {
                for (&n, basis) in &meet.basis {
                    for col in 0..basis.cols() {
                        if !other.contains_vector(n, &basis.column(col)) {
                            return Err(Error::NotDirected(format!("listed meet {c} is not inside {}", other.id)));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, id: &str, f: &GradedMap) -> Result<bool> {
        let m = self.member(id)?;
        Ok(m.contains_vector(f.degree, &self.hom.vectorize(f)))
    }

    /// Ids of the members containing `f`.
    pub fn members_containing(&self, f: &GradedMap) -> Vec<&str> {
        let v = self.hom.vectorize(f);
        self.members.iter().filter(|m| m.contains_vector(f.degree, &v)).map(|m| m.id.as_str()).collect()
    }
}

/// Common lower bound of the constrained members, by iterated listed meets.
pub fn refine<'a>(fam: &'a DistinguishedFamily, constraints: &[&str]) -> Result<&'a Member> {
    let Some((first, rest)) = constraints.split_first() else {
        return Err(Error::Input("refine needs at least one constraint".into()));
    };
    let mut cur = fam.member(first)?.id.as_str();
    for c in rest {
        fam.member(c)?;
        cur = fam
            .listed_meet(cur, c)
            .ok_or_else(|| Error::NotDirected(format!("no listed meet of {cur} and {c}")))?;
    }
    fam.member(cur)
}

/// Restricted instance: pairs with a family compose only inside listed members;
/// pairs without a family are total.
#[derive(Clone, Debug, Default)]
pub struct RestrictedInstance {
    families: BTreeMap<(String, String), Arc<DistinguishedFamily>>,
}

impl RestrictedInstance {
    pub fn new(families: Vec<DistinguishedFamily>) -> Self {
        let families = families
            .into_iter()
            .map(|f| ((f.source.label(), f.target.label()), Arc::new(f)))
            .collect();
        RestrictedInstance { families }
    }

    pub fn families(&self) -> impl Iterator<Item = &Arc<DistinguishedFamily>> {
        self.families.values()
    }
}

#[derive(Clone, Debug, Default)]
pub enum DgInstance {
    #[default]
    Total,
    Restricted(RestrictedInstance),
}

impl DgInstance {
    pub fn family(&self, a: &Summand, b: &Summand) -> Option<&Arc<DistinguishedFamily>> {
        match self {
            DgInstance::Total => None,
            DgInstance::Restricted(r) => r.families.get(&(a.label(), b.label())),
        }
    }

    /// The ambient Hom-complex; the family, if any, is available from [`DgInstance::family`].
    pub fn hom(&self, a: &Summand, b: &Summand) -> HomComplex {
        match self.family(a, b) {
            Some(f) => (*f.hom).clone(),
            None => HomComplex::new(Arc::new(a.complex().clone()), Arc::new(b.complex().clone())),
        }
    }

    pub fn unit(&self, a: &Summand) -> GradedMap {
        GradedMap::identity(Arc::new(a.complex().clone()))
    }

    /// `g ∘ f` for `f: a -> b`, `g: b -> c`. On the restricted instance the
    /// composite is defined when `f` and `g` lie in listed members of their
    /// families and, if a target member is requested, the composite lies in it.
    pub fn compose(
        &self,
        g: &GradedMap,
        f: &GradedMap,
        objects: (&Summand, &Summand, &Summand),
        target_member: Option<&str>,
    ) -> Result<Composite> {
        let (a, b, c) = objects;
        if *f.source != *a.complex() || *f.target != *b.complex() || *g.source != *b.complex() || *g.target != *c.complex()
        {
            return Err(Error::ObjectMismatch("maps do not match the given objects".into()));
        }
        if let Some(fam) = self.family(a, b) {
            if fam.members_containing(f).is_empty() {
                return Ok(Composite::Undefined(format!("f lies in no distinguished subcomplex of Hom({a}, {b})")));
            }
        }
        if let Some(fam) = self.family(b, c) {
            if fam.members_containing(g).is_empty() {
                return Ok(Composite::Undefined(format!("g lies in no distinguished subcomplex of Hom({b}, {c})")));
            }
        }
        let gf = g.compose(f);
        if let Some(id) = target_member {
            let fam = self
                .family(a, c)
                .ok_or_else(|| Error::Input(format!("no family for Hom({a}, {c})")))?;
            if !fam.contains(id, &gf)? {
                return Ok(Composite::Undefined(format!("composite not inside member {id}")));
            }
        }
        Ok(Composite::Defined(gf))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::is_quasi_iso;
    use crate::object::Generator;

    fn pair() -> (Summand, Summand) {
        let x = Generator::new("X", ZComplex::new(0, vec![2, 2], vec![IntMatrix::from_rows(&[[1, 0], [0, 1]])]).unwrap());
        let y = Generator::new("Y", ZComplex::concentrated(0, 2));
        (Summand::generator(&x, vec![]), Summand::generator(&y, vec![]))
    }

    fn family() -> DistinguishedFamily {
        let (a, b) = pair();
        // Hom(X, Y): X is contractible, so Hom^{-1} -> Hom^0 has unit pivots
        let hom = HomComplex::new(Arc::new(a.complex().clone()), Arc::new(b.complex().clone()));
        let piv = unit_pivots(&hom, 0);
        assert!(piv.len() >= 2, "{piv:?}");
        let sets = vec![
            ("m0".to_string(), BTreeSet::from([0])),
            ("m1".to_string(), BTreeSet::from([1])),
            ("m01".to_string(), BTreeSet::from([0, 1])),
        ];
        DistinguishedFamily::from_cuts(a, b, 0, &sets).unwrap()
    }

    #[test]
    fn members_are_quasi_isomorphic() {
        let fam = family();
        fam.certify().unwrap();
        for m in &fam.members {
            assert!(is_quasi_iso(&fam.inclusion(m).unwrap()).unwrap());
        }
    }

    #[test]
    fn refine_examples() {
        let fam = family();
        assert_eq!(refine(&fam, &["m0"]).unwrap().id, "m0");
        assert_eq!(refine(&fam, &["m0", "m1"]).unwrap().id, "m01");
        assert_eq!(refine(&fam, &["m0", "m1", "m01"]).unwrap().id, "m01");
        let meet = refine(&fam, &["m1", "m0", "m1"]).unwrap();
        assert!(is_quasi_iso(&fam.inclusion(meet).unwrap()).unwrap());
        assert!(refine(&fam, &["nope"]).is_err());
    }

    #[test]
    fn unlisted_meet_is_an_error() {
        let (a, b) = pair();
        let sets = vec![("m0".to_string(), BTreeSet::from([0])), ("m1".to_string(), BTreeSet::from([1]))];
        let fam = DistinguishedFamily::from_cuts(a, b, 0, &sets).unwrap();
        assert!(matches!(refine(&fam, &["m0", "m1"]), Err(Error::NotDirected(_))));
    }

    #[test]
    fn restricted_composition_partiality() {
        let fam = family();
        let (a, b) = pair();
        let inst = DgInstance::Restricted(RestrictedInstance::new(vec![fam.clone()]));
        let unit_b = inst.unit(&b);
        // a generic degree-0 map outside every member
        let m = fam.member("m0").unwrap();
        let dim = fam.hom.layout.dim(0);
        let outside = (1..1u32 << dim).find_map(|mask| {
            let v: Vec<BigInt> = (0..dim).map(|k| BigInt::from((mask >> k) & 1)).collect();
            let f = fam.hom.element(0, &v);
            fam.members_containing(&f).is_empty().then_some(f)
        });
        let f_out = outside.expect("some basis vector avoids all members");
        let r = inst.compose(&unit_b, &f_out, (&a, &b, &b), None).unwrap();
        assert!(!r.is_defined());

        let inside = fam.hom.element(0, &m.basis[&0].column(0));
        let r = inst.compose(&unit_b, &inside, (&a, &b, &b), None).unwrap();
        assert_eq!(r.defined().unwrap(), inside);
        // composing with the unit on the other side
        let r = inst.compose(&inside, &inst.unit(&a), (&a, &a, &b), None).unwrap();
        assert_eq!(r.defined().unwrap(), inside);
    }

    #[test]
    fn total_instance_always_composes() {
        let (a, b) = pair();
        let inst = DgInstance::Total;
        let h = inst.hom(&a, &b);
        let f = h.element(0, &vec![BigInt::from(3); h.layout.dim(0)]);
        let g = inst.unit(&b);
        assert_eq!(inst.compose(&g, &f, (&a, &b, &b), None).unwrap().defined().unwrap(), f);
        assert!(inst.unit(&a).is_cocycle());
        let u = inst.unit(&a);
        assert_eq!(u.compose(&u), u);
    }
}

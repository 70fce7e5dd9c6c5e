//! Left and right C-complexes, their total complexes, the reconstruction of
//! `Hom_PreTr` as iterated totals, and the E₁ page.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::complex::{
    add_left_mul, add_right_mul, induced_map, odd, GradedMap, HomComplex, HomLayout, HomologyPresentation, ZComplex,
};
use crate::error::{Error, Result};
use crate::pretr::{PairReport, PreTrHom, TwistedComplex};
use crate::zmodule::{kernel_basis, kernel_mod_p, rank_mod_p, small_primes_dividing, FgAbGroup, IntMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    Left,
    Right,
}

/// A labelled piece of a graded group: `size` coordinates starting at `offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub label: Vec<i64>,
    pub offset: usize,
    pub size: usize,
}

/// A complex whose graded pieces carry block labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelledComplex {
    pub complex: ZComplex,
    pub pieces: BTreeMap<i64, Vec<Piece>>,
}

impl LabelledComplex {
    /// One piece per degree labelled `[prefix.., n]`.
    pub fn plain(complex: ZComplex, prefix: &[i64]) -> Self {
        let pieces = complex
            .ranks()
            .into_iter()
            .map(|(n, r)| {
                let mut label = prefix.to_vec();
                label.push(n);
                (n, vec![Piece { label, offset: 0, size: r }])
            })
            .collect();
        LabelledComplex { complex, pieces }
    }

    pub fn from_pretr(h: &PreTrHom) -> Self {
        let pieces = h
            .degrees()
            .map(|n| (n, h.labels(n).into_iter().map(|(label, offset, size)| Piece { label, offset, size }).collect()))
            .collect();
        LabelledComplex { complex: h.complex.clone(), pieces }
    }

    fn piece_map(&self, n: i64) -> BTreeMap<&[i64], (usize, usize)> {
        self.pieces
            .get(&n)
            .into_iter()
            .flatten()
            .filter(|p| p.size > 0)
            .map(|p| (p.label.as_slice(), (p.offset, p.size)))
            .collect()
    }

    /// Coordinates of `self` in the order of `other`, when the labels agree.
    fn permutation_to(&self, other: &LabelledComplex, n: i64) -> std::result::Result<Vec<usize>, String> {
        let (a, b) = (self.piece_map(n), other.piece_map(n));
        if a.len() != b.len() || a.iter().zip(&b).any(|((la, (_, sa)), (lb, (_, sb)))| la != lb || sa != sb) {
            return Err(format!("degree {n}: block structure differs ({:?} vs {:?})", a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>()));
        }
        let mut perm = vec![0; other.complex.rank(n)];
        for (label, (ob, size)) in &b {
            let (oa, _) = a[label];
            for k in 0..*size {
                perm[ob + k] = oa + k;
            }
        }
        Ok(perm)
    }

    /// Entrywise comparison through the block labels; `Err` names the first difference.
    pub fn compare(&self, other: &LabelledComplex) -> std::result::Result<(), String> {
        let degrees: BTreeSet<i64> = self
            .complex
            .ranks()
            .into_iter()
            .chain(other.complex.ranks())
            .filter(|(_, r)| *r > 0)
            .map(|(n, _)| n)
            .collect();
        for &n in &degrees {
            if self.complex.rank(n) != other.complex.rank(n) {
                return Err(format!("degree {n}: ranks {} vs {}", self.complex.rank(n), other.complex.rank(n)));
            }
        }
        for &n in &degrees {
            let ps = self.permutation_to(other, n)?;
            let pt = self.permutation_to(other, n + 1)?;
            let (da, db) = (self.complex.d(n), other.complex.d(n));
            for r in 0..db.rows() {
                for c in 0..db.cols() {
                    if da[(pt[r], ps[c])] != db[(r, c)] {
                        return Err(format!("degree {n}: differential differs at ({r},{c})"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Columns `A_m` with maps `F_{m,n}` (left) or `E_{m,n}` (right) of degree `m-n+1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CComplex {
    pub chirality: Chirality,
    columns: BTreeMap<i64, Arc<ZComplex>>,
    labels: BTreeMap<i64, BTreeMap<i64, Vec<Piece>>>,
    higher: BTreeMap<(i64, i64), GradedMap>,
}

fn d_map(c: &Arc<ZComplex>) -> GradedMap {
    let blocks = c.differentials();
    GradedMap::new(c.clone(), c.clone(), 1, blocks).expect("differential shapes")
}

impl CComplex {
    pub fn new(
        chirality: Chirality,
        columns: BTreeMap<i64, ZComplex>,
        higher: BTreeMap<(i64, i64), GradedMap>,
    ) -> Result<Self> {
        let columns: BTreeMap<i64, Arc<ZComplex>> =
            columns.into_iter().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (m, Arc::new(c))).collect();
        let mut out = CComplex { chirality, columns, labels: BTreeMap::new(), higher: BTreeMap::new() };
        for ((m, n), f) in higher {
            if m >= n {
                return Err(Error::Input(format!("higher map ({m},{n}) must have m < n")));
            }
            if f.degree != m - n + 1 {
                return Err(Error::Shape(format!("map ({m},{n}) has degree {}, expected {}", f.degree, m - n + 1)));
            }
            let (s, t) = (out.column(m), out.column(n));
            if *f.source != *s || *f.target != *t {
                return Err(Error::Shape(format!("map ({m},{n}) does not go from column {m} to column {n}")));
            }
            if !f.is_zero() {
                out.higher.insert((m, n), f.retarget(s, t)?);
            }
        }
        Ok(out)
    }

    fn with_labels(mut self, labels: BTreeMap<i64, BTreeMap<i64, Vec<Piece>>>) -> Self {
        self.labels = labels;
        self
    }

    pub fn column(&self, m: i64) -> Arc<ZComplex> {
        self.columns.get(&m).cloned().unwrap_or_else(|| Arc::new(ZComplex::zero()))
    }

    pub fn columns(&self) -> &BTreeMap<i64, Arc<ZComplex>> {
        &self.columns
    }

    pub fn higher(&self) -> &BTreeMap<(i64, i64), GradedMap> {
        &self.higher
    }

    pub fn map(&self, m: i64, n: i64) -> GradedMap {
        self.higher.get(&(m, n)).cloned().unwrap_or_else(|| GradedMap::zero(self.column(m), self.column(n), m - n + 1))
    }

    /// Left side of the coherence identity at `(m, n)`.
    pub fn residual(&self, m: i64, n: i64) -> GradedMap {
        let f = self.map(m, n);
        let (dm, dn) = (d_map(&self.column(m)), d_map(&self.column(n)));
        let mut acc = f.compose(&dm).signed(odd(m)).add(&dn.compose(&f).signed(odd(n)));
        for &l in self.columns.keys().filter(|&&l| m < l && l < n) {
            if let (Some(a), Some(b)) = (self.higher.get(&(m, l)), self.higher.get(&(l, n))) {
                let sign = self.chirality == Chirality::Right && odd(l + 1);
                acc = acc.add(&b.compose(a).signed(sign));
            }
        }
        acc
    }

    pub fn validate(&self) -> PairReport {
        let idx: Vec<i64> = self.columns.keys().copied().collect();
        for (a, &m) in idx.iter().enumerate() {
            for &n in &idx[a + 1..] {
                if !self.residual(m, n).is_zero() {
                    return PairReport { valid: false, first_failure: Some((m, n)) };
                }
            }
        }
        PairReport { valid: true, first_failure: None }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().valid
    }

    /// `Tot^p = ⊕_{m+i=p} A^i_m` with `d^L` or `d^R`; columns in increasing `m`.
    pub fn tot(&self) -> LabelledComplex {
        let mut degrees = BTreeSet::new();
        for (&m, c) in &self.columns {
            for i in c.degrees() {
                degrees.insert(m + i);
            }
        }
        let offsets = |p: i64| -> (BTreeMap<i64, usize>, usize) {
            let mut out = BTreeMap::new();
            let mut off = 0;
            for (&m, c) in &self.columns {
                out.insert(m, off);
                off += c.rank(p - m);
            }
            (out, off)
        };
        let mut ranks = BTreeMap::new();
        let mut dmap = BTreeMap::new();
        let mut pieces = BTreeMap::new();
        for &p in &degrees {
            let (src, dim) = offsets(p);
            let (tgt, out_dim) = offsets(p + 1);
            ranks.insert(p, dim);
            let mut list = Vec::new();
            for (&m, c) in &self.columns {
                let i = p - m;
                if c.rank(i) == 0 {
                    continue;
                }
                match self.labels.get(&m).and_then(|l| l.get(&i)) {
                    Some(ps) => list.extend(ps.iter().map(|q| Piece { offset: q.offset + src[&m], ..q.clone() })),
                    None => list.push(Piece { label: vec![m, i], offset: src[&m], size: c.rank(i) }),
                }
            }
            pieces.insert(p, list);
            if out_dim == 0 || dim == 0 {
                continue;
            }
            let mut d = IntMatrix::zeros(out_dim, dim);
            for (&m, c) in &self.columns {
                if let Some(dm) = c.d_ref(p - m) {
                    d.add_block(tgt[&m], src[&m], dm, odd(m));
                }
            }
            for (&(m, n), f) in &self.higher {
                if let Some(b) = f.block_ref(p - m) {
                    let sign = self.chirality == Chirality::Right && odd(n + 1);
                    d.add_block(tgt[&n], src[&m], b, sign);
                }
            }
            dmap.insert(p, d);
        }
        let complex = ZComplex::from_maps(&ranks, &dmap).expect("total complex shapes");
        LabelledComplex { complex, pieces }
    }
}

/// `out[..] ±= q ∘ f` for `f` ranging over `Hom^l(A, B)` (source layout) into `Hom^{l+k}(A, C)`.
fn post_compose(out: &mut IntMatrix, src: &HomLayout, tgt: &HomLayout, q: &GradedMap, l: i64, offs: (usize, usize), negate: bool) {
    let k = q.degree;
    for hb in src.index.get(&l).into_iter().flatten() {
        let s = hb.source_degree;
        let (Some(qb), Some(ob)) = (q.block_ref(s + l), tgt.block(l + k, s)) else { continue };
        add_left_mul(out, qb, hb.cols, offs.0 + hb.offset, offs.1 + ob.offset, negate);
    }
}

/// `out[..] ±= f ∘ p` for `f` over `Hom^l(A, B)` into `Hom^{l+k}(A', B)` with `p: A' -> A`.
fn pre_compose(out: &mut IntMatrix, src: &HomLayout, tgt: &HomLayout, p: &GradedMap, l: i64, offs: (usize, usize), negate: bool) {
    let k = p.degree;
    for hb in src.index.get(&l).into_iter().flatten() {
        let s = hb.source_degree;
        let (Some(pb), Some(ob)) = (p.block_ref(s - k), tgt.block(l + k, s - k)) else { continue };
        add_right_mul(out, pb, hb.rows, offs.0 + hb.offset, offs.1 + ob.offset, negate);
    }
}

fn hom_maps_from_fn(
    src: Arc<ZComplex>,
    tgt: Arc<ZComplex>,
    degree: i64,
    degrees: impl Iterator<Item = i64>,
    mut fill: impl FnMut(i64, &mut IntMatrix),
) -> GradedMap {
    let mut blocks = BTreeMap::new();
    for l in degrees {
        let (r, c) = (tgt.rank(l + degree), src.rank(l));
        if r == 0 || c == 0 {
            continue;
        }
        let mut m = IntMatrix::zeros(r, c);
        fill(l, &mut m);
        blocks.insert(l, m);
    }
    GradedMap::new(src, tgt, degree, blocks).expect("column map shapes")
}

/// Left C-complex `L(A', B)` at index `a`: columns `Hom(A', B^m)` with `F_{m,n} = (-1)^{m+n} q_{m,n} ∘ -`.
fn left_of(ap: &Arc<ZComplex>, a: i64, b: &TwistedComplex) -> (CComplex, BTreeMap<i64, HomLayout>) {
    let homs: BTreeMap<i64, HomComplex> =
        b.terms().keys().map(|&m| (m, HomComplex::new(ap.clone(), b.term_complex(m)))).collect();
    let columns: BTreeMap<i64, ZComplex> = homs.iter().map(|(&m, h)| (m, h.complex.clone())).collect();
    let labels = homs
        .iter()
        .map(|(&m, h)| (m, h.complex.ranks().into_iter().map(|(l, r)| (l, vec![Piece { label: vec![a, m, l], offset: 0, size: r }])).collect()))
        .collect();
    let mut higher = BTreeMap::new();
    for (&(m, n), q) in b.twists() {
        let (s, t) = (Arc::new(homs[&m].complex.clone()), Arc::new(homs[&n].complex.clone()));
        let f = hom_maps_from_fn(s.clone(), t, m - n + 1, s.degrees(), |l, out| {
            post_compose(out, &homs[&m].layout, &homs[&n].layout, q, l, (0, 0), odd(m + n));
        });
        higher.insert((m, n), f);
    }
    let cc = CComplex::new(Chirality::Left, columns, higher).expect("row shapes").with_labels(labels);
    (cc, homs.into_iter().map(|(m, h)| (m, h.layout)).collect())
}

fn single_term(a: &TwistedComplex, what: &str) -> Result<Arc<ZComplex>> {
    match a.indices().as_slice() {
        [0] => Ok(a.term_complex(0)),
        [] => Ok(Arc::new(ZComplex::zero())),
        _ => Err(Error::Input(format!("{what} must be a single term at index 0"))),
    }
}

/// Left C-complex with `Tot = Hom_PreTr(A', B)` for a single term `A'` at index 0.
pub fn row_ccomplex(a_single: &TwistedComplex, b: &TwistedComplex) -> Result<CComplex> {
    let ap = single_term(a_single, "source")?;
    Ok(left_of(&ap, 0, b).0)
}

/// Right C-complex with `Tot = Hom_PreTr(A, B')` for a single term `B'` at index 0:
/// `B_m = (Hom(A^{-m}, B'), (-1)^m d)` and `E_{m,n}(f) = (-1)^{deg f} f ∘ p_{-n,-m}`.
pub fn col_ccomplex(a: &TwistedComplex, b_single: &TwistedComplex) -> Result<CComplex> {
    let bp = single_term(b_single, "target")?;
    let homs: BTreeMap<i64, HomComplex> =
        a.terms().keys().map(|&i| (-i, HomComplex::new(a.term_complex(i), bp.clone()))).collect();
    let columns = homs
        .iter()
        .map(|(&m, h)| (m, if odd(m) { h.complex.negated() } else { h.complex.clone() }))
        .collect();
    let labels = homs
        .iter()
        .map(|(&m, h)| (m, h.complex.ranks().into_iter().map(|(l, r)| (l, vec![Piece { label: vec![-m, 0, l], offset: 0, size: r }])).collect()))
        .collect();
    let cols: BTreeMap<i64, Arc<ZComplex>> = homs.iter().map(|(&m, h)| (m, Arc::new(h.complex.clone()))).collect();
    let mut higher = BTreeMap::new();
    for (&(k, i), p) in a.twists() {
        let (m, n) = (-i, -k);
        let e = hom_maps_from_fn(cols[&m].clone(), cols[&n].clone(), m - n + 1, cols[&m].degrees(), |l, out| {
            pre_compose(out, &homs[&m].layout, &homs[&n].layout, p, l, (0, 0), odd(l));
        });
        higher.insert((m, n), e);
    }
    let mut cc = CComplex::new(Chirality::Right, columns, BTreeMap::new())?.with_labels(labels);
    for ((m, n), e) in higher {
        cc.higher.insert((m, n), e.retarget(cc.column(m), cc.column(n))?);
    }
    cc.higher.retain(|_, e| !e.is_zero());
    Ok(cc)
}

/// Right C-complex `RL(A, B)`: columns `T_m = (Tot L(A^{-m}, B), (-1)^m d^L)` and
/// `E_{m,n}(f) = (-1)^{deg f} f ∘ p_{-n,-m}` with `deg f` the degree in `T_m`.
pub fn rl_ccomplex(a: &TwistedComplex, b: &TwistedComplex) -> Result<CComplex> {
    let mut totals: BTreeMap<i64, (LabelledComplex, BTreeMap<i64, HomLayout>)> = BTreeMap::new();
    for &i in a.terms().keys() {
        let (l, lays) = left_of(&a.term_complex(i), i, b);
        totals.insert(-i, (l.tot(), lays));
    }
    let columns = totals
        .iter()
        .map(|(&m, (t, _))| (m, if odd(m) { t.complex.negated() } else { t.complex.clone() }))
        .collect();
    let labels = totals.iter().map(|(&m, (t, _))| (m, t.pieces.clone())).collect();
    let mut cc = CComplex::new(Chirality::Right, columns, BTreeMap::new())?.with_labels(labels);
    for (&(k, i), p) in a.twists() {
        let (m, n) = (-i, -k);
        let ((tm, lm), (tn, ln)) = (&totals[&m], &totals[&n]);
        let e = hom_maps_from_fn(cc.column(m), cc.column(n), m - n + 1, tm.complex.degrees(), |t, out| {
            for piece in tm.pieces.get(&t).into_iter().flatten() {
                let (j, l) = (piece.label[1], piece.label[2]);
                let target = tn.pieces.get(&(t + p.degree)).into_iter().flatten().find(|q| q.label[1] == j);
                let Some(target) = target else { continue };
                pre_compose(out, &lm[&j], &ln[&j], p, l, (piece.offset, target.offset), odd(t));
            }
        });
        if !e.is_zero() {
            cc.higher.insert((m, n), e);
        }
    }
    Ok(cc)
}

/// Total complex of `RL(A, B)`, to be compared with `Hom_PreTr(A, B)`.
pub fn rl_assemble(a: &TwistedComplex, b: &TwistedComplex) -> Result<LabelledComplex> {
    Ok(rl_ccomplex(a, b)?.tot())
}

/// Reconstruction report for one pair: each route compared with `hom_pretr`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructionReport {
    pub row: Option<std::result::Result<(), String>>,
    pub col: Option<std::result::Result<(), String>>,
    pub rl: std::result::Result<(), String>,
}

impl ReconstructionReport {
    pub fn passed(&self) -> bool {
        self.rl.is_ok() && !matches!(self.row, Some(Err(_))) && !matches!(self.col, Some(Err(_)))
    }
}

/// Compares the row, column (when applicable) and RL assemblies with `Hom_PreTr(A, B)`.
pub fn reconstruction_check(a: &TwistedComplex, b: &TwistedComplex) -> Result<ReconstructionReport> {
    let h = LabelledComplex::from_pretr(&PreTrHom::new(a, b));
    let row = match a.indices().as_slice() {
        [0] => Some(row_ccomplex(a, b)?.tot().compare(&h)),
        _ => None,
    };
    let col = match b.indices().as_slice() {
        [0] => Some(col_ccomplex(a, b)?.tot().compare(&h)),
        _ => None,
    };
    Ok(ReconstructionReport { row, col, rl: rl_assemble(a, b)?.compare(&h) })
}

/// `E₁^{p,q} = H^q(A_p)` with `d₁` induced by `F_{p,p+1}` or `(-1)^p E_{p,p+1}`.
#[derive(Clone, Debug)]
pub struct E1Page {
    pub entries: BTreeMap<(i64, i64), FgAbGroup>,
    /// `d₁: E₁^{p,q} -> E₁^{p+1,q}` in the canonical generators of each entry.
    pub d1: BTreeMap<(i64, i64), IntMatrix>,
    pub d1_squared_zero: bool,
}

pub fn e1_page(c: &CComplex) -> Result<E1Page> {
    let report = c.validate();
    if !report.valid {
        return Err(Error::InvalidComplex(format!("coherence identity fails at {:?}", report.first_failure)));
    }
    let mut entries = BTreeMap::new();
    for (&p, col) in &c.columns {
        for (q, g) in col.homology_all()? {
            if !g.is_zero() {
                entries.insert((p, q), g);
            }
        }
    }
    let mut d1 = BTreeMap::new();
    let mut presentations: BTreeMap<(i64, i64), HomologyPresentation> = BTreeMap::new();
    for (&p, col) in &c.columns {
        let f = match c.chirality {
            Chirality::Left => c.map(p, p + 1),
            Chirality::Right => c.map(p, p + 1).signed(odd(p)),
        };
        for q in col.degrees() {
            let (hs, ht, m) = induced_map(&f, q)?;
            presentations.entry((p, q)).or_insert(hs);
            presentations.entry((p + 1, q)).or_insert(ht);
            if m.rows() > 0 && m.cols() > 0 {
                d1.insert((p, q), m);
            }
        }
    }
    let mut squared_zero = true;
    for (&(p, q), m1) in &d1 {
        if let Some(m2) = d1.get(&(p + 1, q)) {
            let comp = m2.mul(m1);
            let tgt = &presentations[&(p + 2, q)];
            for k in 0..comp.cols() {
                if !tgt.is_zero_class(&comp.column(k)) {
                    squared_zero = false;
                }
            }
        }
    }
    Ok(E1Page { entries, d1, d1_squared_zero: squared_zero })
}

impl E1Page {
    /// `Σ (-1)^{p+q} rank E₁^{p,q}`.
    pub fn euler_characteristic(&self) -> i64 {
        self.entries.iter().map(|(&(p, q), g)| if odd(p + q) { -(g.free as i64) } else { g.free as i64 }).sum()
    }
}

/// A field of coefficients: `None` for the rationals, `Some(p)` for `F_p`.
pub type Field = Option<u64>;

fn rank_over(m: &IntMatrix, k: Field) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    match k {
        None => m.rank(),
        Some(p) => rank_mod_p(m, p),
    }
}

fn kernel_over(m: &IntMatrix, k: Field) -> IntMatrix {
    match k {
        None => kernel_basis(m),
        Some(p) => kernel_mod_p(m, p),
    }
}

/// `dim H^n(C; k)`.
pub fn betti(c: &ZComplex, n: i64, k: Field) -> usize {
    c.rank(n) - rank_over(&c.d(n), k) - rank_over(&c.d(n - 1), k)
}

/// Rank over `k` of the map induced on `H^n` by a chain map.
pub fn induced_rank(f: &GradedMap, n: i64, k: Field) -> usize {
    let z = kernel_over(&f.source.d(n), k);
    let b = f.target.d(n - 1);
    let fz = f.block(n).mul(&z);
    let joint = if b.cols() == 0 { fz } else { fz.hstack(&b) };
    rank_over(&joint, k) - rank_over(&b, k)
}

/// Long exact sequence accounting for a two-column C-complex with columns at `p0`, `p0+1`:
/// `dim H^n(Tot) = dim coker f^{n-p0-1} + dim ker f^{n-p0}` over `Q` and over `F_p`.
#[derive(Clone, Debug)]
pub struct LesReport {
    pub fields: Vec<Field>,
    pub first_failure: Option<(Field, i64)>,
}

impl LesReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

pub fn les_check(c: &CComplex) -> Result<LesReport> {
    let idx: Vec<i64> = c.columns.keys().copied().collect();
    let p0 = match idx.as_slice() {
        [p] => *p,
        [p, q] if q - p == 1 => *p,
        [] => 0,
        _ => return Err(Error::Input("LES check needs two adjacent columns".into())),
    };
    let f = c.map(p0, p0 + 1);
    let tot = c.tot().complex;
    let mut torsion = Vec::new();
    for col in [c.column(p0), c.column(p0 + 1)] {
        for g in col.homology_all()?.values() {
            torsion.extend(g.torsion.iter().cloned());
        }
    }
    for g in tot.homology_all()?.values() {
        torsion.extend(g.torsion.iter().cloned());
    }
    let mut primes: BTreeSet<u64> = [2, 3, 5, 7].into();
    primes.extend(small_primes_dividing(&torsion));
    let fields: Vec<Field> = std::iter::once(None).chain(primes.into_iter().map(Some)).collect();
    let (a0, a1) = (c.column(p0), c.column(p0 + 1));
    let mut degrees: BTreeSet<i64> = tot.degrees().collect();
    degrees.extend(a0.degrees().map(|q| q + p0));
    degrees.extend(a1.degrees().map(|q| q + p0 + 1));
    for &k in &fields {
        for &n in &degrees {
            let coker = {
                let q = n - p0 - 1;
                betti(&a1, q, k) - induced_rank(&f, q, k)
            };
            let ker = {
                let q = n - p0;
                betti(&a0, q, k) - induced_rank(&f, q, k)
            };
            if betti(&tot, n, k) != coker + ker {
                return Ok(LesReport { fields, first_failure: Some((k, n)) });
            }
        }
    }
    Ok(LesReport { fields, first_failure: None })
}

/// `Σ(-1)^{p+q} rank E₁^{p,q} = Σ(-1)^n rank H^n(Tot)`.
pub fn euler_check(c: &CComplex) -> Result<(i64, i64)> {
    let e1 = e1_page(c)?;
    let tot = c.tot().complex;
    let h: i64 = tot
        .homology_all()?
        .iter()
        .map(|(&n, g)| if odd(n) { -(g.free as i64) } else { g.free as i64 })
        .sum();
    Ok((e1.euler_characteristic(), h))
}

/// Whether `d ∘ d = 0` on the total complex.
pub fn tot_squares_to_zero(c: &CComplex) -> bool {
    let t = c.tot().complex;
    t.degrees().all(|n| match (t.d_ref(n), t.d_ref(n + 1)) {
        (Some(a), Some(b)) => b.mul(a).is_zero(),
        _ => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use crate::random::{random_ccomplex, random_twisted, Rng, TwistedConfig};

    fn col(c: ZComplex) -> BTreeMap<i64, ZComplex> {
        [(0, c)].into()
    }

    #[test]
    fn single_column_totals() {
        let c = ZComplex::two_term(0, IntMatrix::from_rows(&[[2]]));
        let cc = CComplex::new(Chirality::Left, col(c.clone()), BTreeMap::new()).unwrap();
        assert!(cc.is_valid());
        assert_eq!(cc.tot().complex, c);
        let cc = CComplex::new(Chirality::Right, [(1, c.clone())].into(), BTreeMap::new()).unwrap();
        assert_eq!(cc.tot().complex, ZComplex::two_term(1, IntMatrix::from_rows(&[[-2]])));
    }

    #[test]
    fn three_columns_need_homotopy() {
        let x = Arc::new(ZComplex::two_term(-1, IntMatrix::from_rows(&[[1]])));
        let id = GradedMap::identity(x.clone());
        let cols: BTreeMap<i64, ZComplex> = (0..3).map(|m| (m, (*x).clone())).collect();
        let bad = CComplex::new(Chirality::Left, cols.clone(), [((0, 1), id.clone()), ((1, 2), id.clone())].into()).unwrap();
        assert_eq!(bad.validate().first_failure, Some((0, 2)));
        // (-1)^2 δ(h) = -id
        let hom = HomComplex::new(x.clone(), x.clone());
        let h = crate::zmodule::solve(&hom.complex.d(-1), &hom.vectorize(&id.neg())).unwrap().unwrap();
        let good = CComplex::new(
            Chirality::Left,
            cols,
            [((0, 1), id.clone()), ((1, 2), id), ((0, 2), hom.element(-1, &h))].into(),
        )
        .unwrap();
        assert!(good.is_valid());
        assert!(tot_squares_to_zero(&good));
    }

    #[test]
    fn random_totals_square_to_zero() {
        let mut rng = Rng::seed(4);
        for chir in [Chirality::Left, Chirality::Right] {
            for _ in 0..20 {
                let c = random_ccomplex(&mut rng, chir, 4);
                assert!(c.is_valid());
                assert!(tot_squares_to_zero(&c));
            }
        }
    }

    #[test]
    fn reconstruction_on_random_pairs() {
        let mut rng = Rng::seed(8);
        let cfg = TwistedConfig::default();
        let single = TwistedConfig { max_terms: 1, first_index: (0, 0), ..cfg.clone() };
        for _ in 0..10 {
            let a = random_twisted(&mut rng, &cfg, "a");
            let b = random_twisted(&mut rng, &cfg, "b");
            let s = random_twisted(&mut rng, &single, "s");
            let r = reconstruction_check(&a, &b).unwrap();
            assert!(r.passed(), "{r:?}");
            let r = reconstruction_check(&s, &b).unwrap();
            assert_eq!(r.row, Some(Ok(())));
            let r = reconstruction_check(&a, &s).unwrap();
            assert_eq!(r.col, Some(Ok(())));
            assert!(row_ccomplex(&s, &b).unwrap().is_valid());
            assert!(col_ccomplex(&a, &s).unwrap().is_valid());
            assert!(rl_ccomplex(&a, &b).unwrap().is_valid());
        }
    }

    #[test]
    fn e1_single_column_and_two_columns() {
        let c = ZComplex::two_term(0, IntMatrix::from_rows(&[[2]]));
        let cc = CComplex::new(Chirality::Left, col(c), BTreeMap::new()).unwrap();
        let e1 = e1_page(&cc).unwrap();
        assert_eq!(e1.entries, [((0, 1), FgAbGroup::cyclic(2))].into());
        assert!(e1.d1.values().all(IntMatrix::is_zero));
        // multiplication by 2 on Z[0]
        let z = Arc::new(ZComplex::concentrated(0, 1));
        let two = GradedMap::scalar(z.clone(), &BigInt::from(2));
        let cc = CComplex::new(Chirality::Left, [(0, (*z).clone()), (1, (*z).clone())].into(), [((0, 1), two)].into())
            .unwrap();
        assert!(les_check(&cc).unwrap().passed());
        assert_eq!(cc.tot().complex.homology(1).unwrap(), FgAbGroup::cyclic(2));
        let (a, b) = euler_check(&cc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_les_and_euler() {
        let mut rng = Rng::seed(6);
        for chir in [Chirality::Left, Chirality::Right] {
            for _ in 0..20 {
                let c = random_ccomplex(&mut rng, chir, 2);
                assert!(les_check(&c).unwrap().passed());
                let (a, b) = euler_check(&c).unwrap();
                assert_eq!(a, b);
                assert!(e1_page(&c).unwrap().d1_squared_zero);
            }
        }
    }
}

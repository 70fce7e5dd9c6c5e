//! Bounded cochain complexes of free abelian groups, graded maps between
//! them, Hom-complexes, homology, and the basic constructors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::zmodule::{kernel_basis, snf, FgAbGroup, IntMatrix, Solver};

pub(crate) fn odd(n: i64) -> bool {
    n.rem_euclid(2) == 1
}

/// `(-1)^n` as a `BigInt`.
pub fn sign(n: i64) -> BigInt {
    if odd(n) {
        -BigInt::one()
    } else {
        BigInt::one()
    }
}

/// Bounded cochain complex. `d(n)` maps degree `n` to degree `n + 1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ZComplex {
    lo: i64,
    ranks: Vec<usize>,
    /// `d[k]` is the differential from degree `lo + k` to `lo + k + 1`.
    d: Vec<IntMatrix>,
}

impl fmt::Debug for ZComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ZComplex(lo={}, ranks={:?}", self.lo, self.ranks)?;
        for (k, m) in self.d.iter().enumerate() {
            if !m.is_zero() {
                write!(f, ", d{}={:?}", self.lo + k as i64, m)?;
            }
        }
        write!(f, ")")
    }
}

/// Outcome of a validity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validation {
    pub valid: bool,
    /// Human readable description of the first violation.
    pub violation: Option<String>,
    /// Degree (or index) of the first violation.
    pub at: Option<i64>,
}

impl Validation {
    pub fn ok() -> Self {
        Validation { valid: true, violation: None, at: None }
    }

    pub fn fail(at: i64, msg: impl Into<String>) -> Self {
        Validation { valid: false, violation: Some(msg.into()), at: Some(at) }
    }
}

impl ZComplex {
    pub fn zero() -> Self {
        ZComplex { lo: 0, ranks: vec![], d: vec![] }
    }

    /// `Z^rank` concentrated in one degree.
    pub fn concentrated(degree: i64, rank: usize) -> Self {
        Self::new(degree, vec![rank], vec![]).expect("no differentials")
    }

    /// Two-term complex `Z^cols -> Z^rows` with the source in `degree`.
    pub fn two_term(degree: i64, d: IntMatrix) -> Self {
        let (r, c) = d.shape();
        Self::new(degree, vec![c, r], vec![d]).expect("shape from matrix")
    }

    /// Builds a complex from consecutive ranks starting at `lo` and the
    /// differentials between consecutive degrees. Shapes are checked; d² is not.
    pub fn new(lo: i64, ranks: Vec<usize>, d: Vec<IntMatrix>) -> Result<Self> {
        let expected = ranks.len().saturating_sub(1);
        let mut d = d;
        if d.len() > expected {
            if d[expected..].iter().all(|m| m.is_zero() && m.rows() == 0) {
                d.truncate(expected);
            } else {
                return Err(Error::Shape(format!("{} differentials for {} degrees", d.len(), ranks.len())));
            }
        }
        while d.len() < expected {
            let k = d.len();
            d.push(IntMatrix::zeros(ranks[k + 1], ranks[k]));
        }
        for (k, m) in d.iter().enumerate() {
            if m.shape() != (ranks[k + 1], ranks[k]) {
                return Err(Error::Shape(format!(
                    "d at degree {} has shape {:?}, expected {:?}",
                    lo + k as i64,
                    m.shape(),
                    (ranks[k + 1], ranks[k])
                )));
            }
        }
        let mut c = ZComplex { lo, ranks, d };
        c.trim();
        Ok(c)
    }

    /// Builds from sparse degree maps; absent degrees have rank 0 and absent
    /// differentials are zero.
    pub fn from_maps(ranks: &BTreeMap<i64, usize>, d: &BTreeMap<i64, IntMatrix>) -> Result<Self> {
        let degs: Vec<i64> = ranks
            .iter()
            .filter(|(_, &r)| r > 0)
            .map(|(&n, _)| n)
            .chain(d.iter().filter(|(_, m)| !m.is_empty()).flat_map(|(&n, _)| [n, n + 1]))
            .collect();
        let (Some(&lo), Some(&hi)) = (degs.iter().min(), degs.iter().max()) else {
            for (n, m) in d {
                if !m.is_empty() {
                    return Err(Error::Shape(format!("differential at degree {n} between zero groups")));
                }
            }
            return Ok(Self::zero());
        };
        let rk: Vec<usize> = (lo..=hi).map(|n| ranks.get(&n).copied().unwrap_or(0)).collect();
        let mut ds = Vec::new();
        for n in lo..hi {
            let shape = (rk[(n + 1 - lo) as usize], rk[(n - lo) as usize]);
            match d.get(&n) {
                Some(m) => {
                    if m.shape() != shape && !(m.is_empty() && shape.0 * shape.1 == 0) {
                        return Err(Error::Shape(format!(
                            "d at degree {n} has shape {:?}, expected {:?}",
                            m.shape(),
                            shape
                        )));
                    }
                    ds.push(if m.shape() == shape { m.clone() } else { IntMatrix::zeros(shape.0, shape.1) });
                }
                None => ds.push(IntMatrix::zeros(shape.0, shape.1)),
            }
        }
        for (&n, m) in d {
            if (n < lo || n >= hi) && !m.is_empty() && !m.is_zero() {
                return Err(Error::Shape(format!("differential at degree {n} outside the support")));
            }
        }
        Self::new(lo, rk, ds)
    }

    fn trim(&mut self) {
        while let Some(&0) = self.ranks.last() {
            self.ranks.pop();
            self.d.pop();
        }
        let lead = self.ranks.iter().take_while(|&&r| r == 0).count();
        if lead > 0 {
            self.ranks.drain(..lead);
            let dl = lead.min(self.d.len());
            self.d.drain(..dl);
            self.lo += lead as i64;
        }
        if self.ranks.is_empty() {
            self.lo = 0;
            self.d.clear();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Smallest and largest degree with nonzero rank.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.ranks.is_empty() {
            None
        } else {
            Some((self.lo, self.lo + self.ranks.len() as i64 - 1))
        }
    }

    pub fn degrees(&self) -> std::ops::Range<i64> {
        self.lo..self.lo + self.ranks.len() as i64
    }

    pub fn rank(&self, n: i64) -> usize {
        if n < self.lo {
            return 0;
        }
        self.ranks.get((n - self.lo) as usize).copied().unwrap_or(0)
    }

    pub fn total_rank(&self) -> usize {
        self.ranks.iter().sum()
    }

    /// Differential out of degree `n`, if it is stored (both ends in the support).
    pub fn d_ref(&self, n: i64) -> Option<&IntMatrix> {
        if n < self.lo {
            return None;
        }
        self.d.get((n - self.lo) as usize)
    }

    /// Differential out of degree `n`, zero-filled outside the support.
    pub fn d(&self, n: i64) -> IntMatrix {
        self.d_ref(n).cloned().unwrap_or_else(|| IntMatrix::zeros(self.rank(n + 1), self.rank(n)))
    }

    pub fn ranks(&self) -> BTreeMap<i64, usize> {
        self.degrees().map(|n| (n, self.rank(n))).collect()
    }

    pub fn differentials(&self) -> BTreeMap<i64, IntMatrix> {
        self.degrees()
            .filter_map(|n| self.d_ref(n).filter(|m| !m.is_zero()).map(|m| (n, m.clone())))
            .collect()
    }

    /// Exact check of d(n+1)·d(n) = 0 in every degree.
    pub fn validate(&self) -> Validation {
        for n in self.degrees() {
            if let (Some(a), Some(b)) = (self.d_ref(n), self.d_ref(n + 1)) {
                if !b.mul(a).is_zero() {
                    return Validation::fail(n, format!("d({})·d({}) != 0", n + 1, n));
                }
            }
        }
        Validation::ok()
    }

    pub fn is_valid(&self) -> bool {
        self.validate().valid
    }

    fn require_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.valid {
            Ok(())
        } else {
            Err(Error::InvalidComplex(v.violation.unwrap_or_default()))
        }
    }

    /// H^n = ker d(n) / im d(n-1).
    pub fn homology(&self, n: i64) -> Result<FgAbGroup> {
        self.require_valid()?;
        Ok(self.homology_unchecked(n))
    }

    pub(crate) fn homology_unchecked(&self, n: i64) -> FgAbGroup {
        let r = self.rank(n);
        if r == 0 {
            return FgAbGroup::zero();
        }
        let rank_out = self.d_ref(n).map_or(0, |m| snf(m).rank());
        let (rank_in, torsion) = match self.d_ref(n - 1) {
            Some(m) => {
                let s = snf(m);
                let diag = s.diagonal();
                let rk = s.rank();
                (rk, diag.into_iter().take(rk).filter(|x| !x.is_one()).collect())
            }
            None => (0, vec![]),
        };
        FgAbGroup { free: r - rank_out - rank_in, torsion }
    }

    /// Homology in every degree of the support (zero groups included).
    pub fn homology_all(&self) -> Result<BTreeMap<i64, FgAbGroup>> {
        self.require_valid()?;
        Ok(self.degrees().map(|n| (n, self.homology_unchecked(n))).collect())
    }

    pub fn is_acyclic(&self) -> Result<bool> {
        Ok(self.homology_all()?.values().all(FgAbGroup::is_zero))
    }

    /// Euler characteristic of the free ranks.
    pub fn euler_characteristic(&self) -> i64 {
        self.degrees().map(|n| if odd(n) { -(self.rank(n) as i64) } else { self.rank(n) as i64 }).sum()
    }

    /// `A[k]^n = A^{n+k}` with differential `(-1)^k d`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        ZComplex {
            lo: self.lo - k,
            ranks: self.ranks.clone(),
            d: self.d.iter().map(|m| m.signed(odd(k))).collect(),
        }
    }

    /// Same groups with the differential negated.
    pub fn negated(&self) -> Self {
        ZComplex { lo: self.lo, ranks: self.ranks.clone(), d: self.d.iter().map(IntMatrix::neg).collect() }
    }

    /// Degreewise direct sum, summands stacked in the given order.
    pub fn direct_sum(parts: &[&ZComplex]) -> Self {
        let live: Vec<&&ZComplex> = parts.iter().filter(|c| !c.is_zero()).collect();
        if live.is_empty() {
            return Self::zero();
        }
        let lo = live.iter().map(|c| c.lo).min().unwrap();
        let hi = live.iter().map(|c| c.support().unwrap().1).max().unwrap();
        let ranks: Vec<usize> = (lo..=hi).map(|n| parts.iter().map(|c| c.rank(n)).sum()).collect();
        let mut d = Vec::new();
        for n in lo..hi {
            let mut m = IntMatrix::zeros(ranks[(n + 1 - lo) as usize], ranks[(n - lo) as usize]);
            let (mut r0, mut c0) = (0, 0);
            for c in parts {
                if let Some(dm) = c.d_ref(n) {
                    m.set_block(r0, c0, dm);
                }
                r0 += c.rank(n + 1);
                c0 += c.rank(n);
            }
            d.push(m);
        }
        Self::new(lo, ranks, d).expect("direct sum shapes")
    }

    /// `(A^∨)^n = Hom(A^{-n}, Z)` with `d^n = -(-1)^n (d_A^{-n-1})^T`.
    pub fn dual(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let (lo, hi) = self.support().unwrap();
        let ranks: Vec<usize> = (-hi..=-lo).map(|n| self.rank(-n)).collect();
        let d = (-hi..-lo).map(|n| self.d(-n - 1).transpose().signed(!odd(n))).collect();
        Self::new(-hi, ranks, d).expect("dual shapes")
    }

    pub fn tensor(&self, other: &ZComplex) -> Self {
        TensorBasis::new(vec![self.clone(), other.clone()]).complex
    }
}

/// Tensor product of several complexes with basis the tuples
/// `((deg_1, idx_1), ..., (deg_k, idx_k))`, ordered lexicographically within each
/// total degree. The differential is `Σ_s (-1)^{deg x_1 + ... + deg x_{s-1}} x_1 ⊗ .. d x_s .. ⊗ x_k`.
#[derive(Clone, Debug)]
pub struct TensorBasis {
    pub factors: Vec<ZComplex>,
    pub complex: ZComplex,
    basis: BTreeMap<i64, Vec<Vec<(i64, usize)>>>,
    index: HashMap<Vec<(i64, usize)>, (i64, usize)>,
}

impl TensorBasis {
    pub fn new(factors: Vec<ZComplex>) -> Self {
        let mut tuples: Vec<Vec<(i64, usize)>> = vec![vec![]];
        for f in &factors {
            let letter: Vec<(i64, usize)> = f.degrees().flat_map(|n| (0..f.rank(n)).map(move |i| (n, i))).collect();
            let mut next = Vec::with_capacity(tuples.len() * letter.len());
            for t in &tuples {
                for x in &letter {
                    let mut t2 = t.clone();
                    t2.push(*x);
                    next.push(t2);
                }
            }
            tuples = next;
        }
        let mut basis: BTreeMap<i64, Vec<Vec<(i64, usize)>>> = BTreeMap::new();
        for t in tuples {
            let deg = t.iter().map(|x| x.0).sum();
            basis.entry(deg).or_default().push(t);
        }
        let mut index = HashMap::new();
        for (&n, ts) in &basis {
            for (i, t) in ts.iter().enumerate() {
                index.insert(t.clone(), (n, i));
            }
        }
        let mut ranks = BTreeMap::new();
        for (&n, ts) in &basis {
            ranks.insert(n, ts.len());
        }
        let mut d = BTreeMap::new();
        for (&n, ts) in &basis {
            let Some(targets) = basis.get(&(n + 1)) else { continue };
            let mut m = IntMatrix::zeros(targets.len(), ts.len());
            for (col, t) in ts.iter().enumerate() {
                let mut prefix = 0i64;
                for (s, &(deg, idx)) in t.iter().enumerate() {
                    if let Some(ds) = factors[s].d_ref(deg) {
                        for r in 0..ds.rows() {
                            let v = &ds[(r, idx)];
                            if v.is_zero() {
                                continue;
                            }
                            let mut t2 = t.clone();
                            t2[s] = (deg + 1, r);
                            let (_, row) = index[&t2];
                            if odd(prefix) {
                                m[(row, col)] -= v;
                            } else {
                                m[(row, col)] += v;
                            }
                        }
                    }
                    prefix += deg;
                }
            }
            d.insert(n, m);
        }
        let complex = ZComplex::from_maps(&ranks, &d).expect("tensor shapes");
        TensorBasis { factors, complex, basis, index }
    }

    pub fn basis(&self, n: i64) -> &[Vec<(i64, usize)>] {
        self.basis.get(&n).map_or(&[], Vec::as_slice)
    }

    pub fn index_of(&self, t: &[(i64, usize)]) -> Option<(i64, usize)> {
        self.index.get(t).copied()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Degree-`n` family of matrices `A^d -> B^{d+n}`; missing blocks are zero.
#[derive(Clone)]
pub struct GradedMap {
    pub source: Arc<ZComplex>,
    pub target: Arc<ZComplex>,
    pub degree: i64,
    blocks: BTreeMap<i64, IntMatrix>,
}

impl fmt::Debug for GradedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GradedMap(deg {}", self.degree)?;
        for (d, m) in &self.blocks {
            if !m.is_zero() {
                write!(f, ", {d}: {m:?}")?;
            }
        }
        write!(f, ")")
    }
}

impl PartialEq for GradedMap {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && (Arc::ptr_eq(&self.source, &other.source) || self.source == other.source)
            && (Arc::ptr_eq(&self.target, &other.target) || self.target == other.target)
            && self.nonzero_blocks() == other.nonzero_blocks()
    }
}

impl Eq for GradedMap {}

impl GradedMap {
    pub fn zero(source: Arc<ZComplex>, target: Arc<ZComplex>, degree: i64) -> Self {
        GradedMap { source, target, degree, blocks: BTreeMap::new() }
    }

    pub fn identity(a: Arc<ZComplex>) -> Self {
        let blocks = a.degrees().map(|n| (n, IntMatrix::identity(a.rank(n)))).collect();
        GradedMap { source: a.clone(), target: a, degree: 0, blocks }
    }

    pub fn scalar(a: Arc<ZComplex>, s: &BigInt) -> Self {
        let blocks = a.degrees().map(|n| (n, IntMatrix::identity(a.rank(n)).scaled(s))).collect();
        GradedMap { source: a.clone(), target: a, degree: 0, blocks }
    }

    /// Builds a map from blocks keyed by source degree; shapes are checked.
    pub fn new(
        source: Arc<ZComplex>,
        target: Arc<ZComplex>,
        degree: i64,
        blocks: BTreeMap<i64, IntMatrix>,
    ) -> Result<Self> {
        let mut out = GradedMap::zero(source, target, degree);
        for (d, m) in blocks {
            out.set_block(d, m)?;
        }
        Ok(out)
    }

    pub fn block_shape(&self, d: i64) -> (usize, usize) {
        (self.target.rank(d + self.degree), self.source.rank(d))
    }

    pub fn set_block(&mut self, d: i64, m: IntMatrix) -> Result<()> {
        let shape = self.block_shape(d);
        if m.shape() != shape {
            if m.is_zero() && shape.0 * shape.1 == 0 {
                return Ok(());
            }
            return Err(Error::Shape(format!(
                "block at source degree {d} has shape {:?}, expected {:?}",
                m.shape(),
                shape
            )));
        }
        if shape.0 * shape.1 == 0 {
            return Ok(());
        }
        self.blocks.insert(d, m);
        Ok(())
    }

    pub fn block_ref(&self, d: i64) -> Option<&IntMatrix> {
        self.blocks.get(&d)
    }

    /// Block at source degree `d`, zero-filled.
    pub fn block(&self, d: i64) -> IntMatrix {
        self.blocks.get(&d).cloned().unwrap_or_else(|| {
            let (r, c) = self.block_shape(d);
            IntMatrix::zeros(r, c)
        })
    }

    pub fn blocks(&self) -> &BTreeMap<i64, IntMatrix> {
        &self.blocks
    }

    pub fn nonzero_blocks(&self) -> BTreeMap<i64, &IntMatrix> {
        self.blocks.iter().filter(|(_, m)| !m.is_zero()).map(|(&d, m)| (d, m)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(IntMatrix::is_zero)
    }

    fn same_objects(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.source, &other.source) || self.source == other.source)
            && (Arc::ptr_eq(&self.target, &other.target) || self.target == other.target)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.degree != other.degree || !self.same_objects(other) {
            return Err(Error::ObjectMismatch("adding graded maps with different signatures".into()));
        }
        let mut out = self.clone();
        for (d, m) in &other.blocks {
            match out.blocks.get_mut(d) {
                Some(x) => x.add_assign(m),
                None => {
                    out.blocks.insert(*d, m.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("graded maps must share signature")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_blocks(|m| m.neg())
    }

    pub fn scaled(&self, s: &BigInt) -> Self {
        self.map_blocks(|m| m.scaled(s))
    }

    pub fn signed(&self, odd_sign: bool) -> Self {
        if odd_sign {
            self.neg()
        } else {
            self.clone()
        }
    }

    fn map_blocks(&self, f: impl Fn(&IntMatrix) -> IntMatrix) -> Self {
        GradedMap {
            source: self.source.clone(),
            target: self.target.clone(),
            degree: self.degree,
            blocks: self.blocks.iter().map(|(&d, m)| (d, f(m))).collect(),
        }
    }

    /// `g ∘ f` (here `self = g`).
    pub fn try_compose(&self, f: &GradedMap) -> Result<GradedMap> {
        if !(Arc::ptr_eq(&f.target, &self.source) || *f.target == *self.source) {
            return Err(Error::ObjectMismatch("target of f differs from source of g".into()));
        }
        let mut out = GradedMap::zero(f.source.clone(), self.target.clone(), f.degree + self.degree);
        for (&d, fm) in &f.blocks {
            if let Some(gm) = self.blocks.get(&(d + f.degree)) {
                let m = gm.mul(fm);
                if !m.is_zero() {
                    out.blocks.insert(d, m);
                }
            }
        }
        Ok(out)
    }

    pub fn compose(&self, f: &GradedMap) -> GradedMap {
        self.try_compose(f).expect("composable graded maps")
    }

    /// Hom-complex differential `d(f) = d_B ∘ f - (-1)^{|f|} f ∘ d_A`.
    pub fn differential(&self) -> GradedMap {
        let n = self.degree;
        let mut out = GradedMap::zero(self.source.clone(), self.target.clone(), n + 1);
        for (&d, f) in &self.blocks {
            if let Some(db) = self.target.d_ref(d + n) {
                let m = db.mul(f);
                out.accumulate(d, &m, false);
            }
            if let Some(da) = self.source.d_ref(d - 1) {
                let m = f.mul(da);
                out.accumulate(d - 1, &m, !odd(n));
            }
        }
        out
    }

    fn accumulate(&mut self, d: i64, m: &IntMatrix, negate: bool) {
        if m.is_zero() {
            return;
        }
        match self.blocks.get_mut(&d) {
            Some(x) => x.add_block(0, 0, m, negate),
            None => {
                self.blocks.insert(d, m.signed(negate));
            }
        }
    }

    pub fn is_cocycle(&self) -> bool {
        self.differential().is_zero()
    }

    /// Koszul transpose `φ ↦ (-1)^{|f||φ|} φ ∘ f`, a map `B^∨ -> A^∨`.
    pub fn koszul_transpose(&self) -> GradedMap {
        let k = self.degree;
        let src = Arc::new(self.target.dual());
        let tgt = Arc::new(self.source.dual());
        let mut out = GradedMap::zero(src, tgt, k);
        for (&d, f) in &self.blocks {
            // f: A^d -> B^{d+k}; transpose sits at source degree m = -(d+k)
            let m = -(d + k);
            out.blocks.insert(m, f.transpose().signed(odd(k * m)));
        }
        out
    }

    /// The same matrices regarded as a map between other complexes of identical ranks.
    pub fn retarget(&self, source: Arc<ZComplex>, target: Arc<ZComplex>) -> Result<GradedMap> {
        GradedMap::new(source, target, self.degree, self.blocks.clone())
    }

    pub fn is_chain_map(&self) -> bool {
        self.degree == 0 && self.is_cocycle()
    }
}

/// A summand `Hom(A^d, B^{d+n})` of `Hom^n`, flattened row-major at `offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HomBlock {
    pub source_degree: i64,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Degreewise block layout of `Hom(A, B)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomLayout {
    pub index: BTreeMap<i64, Vec<HomBlock>>,
    pub dims: BTreeMap<i64, usize>,
}

impl HomLayout {
    pub fn new(a: &ZComplex, b: &ZComplex) -> Self {
        let mut index: BTreeMap<i64, Vec<HomBlock>> = BTreeMap::new();
        let mut dims = BTreeMap::new();
        if let (Some((alo, ahi)), Some((blo, bhi))) = (a.support(), b.support()) {
            for n in (blo - ahi)..=(bhi - alo) {
                let mut off = 0;
                let mut blocks = Vec::new();
                for d in alo..=ahi {
                    let (rows, cols) = (b.rank(d + n), a.rank(d));
                    if rows * cols == 0 {
                        continue;
                    }
                    blocks.push(HomBlock { source_degree: d, offset: off, rows, cols });
                    off += rows * cols;
                }
                if off > 0 {
                    dims.insert(n, off);
                    index.insert(n, blocks);
                }
            }
        }
        HomLayout { index, dims }
    }

    pub fn dim(&self, n: i64) -> usize {
        self.dims.get(&n).copied().unwrap_or(0)
    }

    pub fn block(&self, n: i64, source_degree: i64) -> Option<HomBlock> {
        self.index.get(&n)?.iter().find(|b| b.source_degree == source_degree).copied()
    }

    pub fn vectorize(&self, f: &GradedMap) -> Vec<BigInt> {
        let n = f.degree;
        let mut v = vec![BigInt::zero(); self.dim(n)];
        for b in self.index.get(&n).into_iter().flatten() {
            if let Some(m) = f.block_ref(b.source_degree) {
                for (k, x) in m.entries().iter().enumerate() {
                    v[b.offset + k] = x.clone();
                }
            }
        }
        v
    }

    pub fn element(&self, source: Arc<ZComplex>, target: Arc<ZComplex>, n: i64, v: &[BigInt]) -> GradedMap {
        assert_eq!(v.len(), self.dim(n), "coordinate vector length");
        let mut f = GradedMap::zero(source, target, n);
        for b in self.index.get(&n).into_iter().flatten() {
            let m = IntMatrix::from_vec(b.rows, b.cols, v[b.offset..b.offset + b.rows * b.cols].to_vec())
                .expect("block size");
            if !m.is_zero() {
                f.blocks.insert(b.source_degree, m);
            }
        }
        f
    }
}

/// out[block_out] ±= M · X where X is the input block (`rows_in x cols`) and
/// M is `rows_out x rows_in`; recorded as entries of the linear map matrix.
pub(crate) fn add_left_mul(
    out: &mut IntMatrix,
    m: &IntMatrix,
    cols: usize,
    in_off: usize,
    out_off: usize,
    negate: bool,
) {
    for r2 in 0..m.rows() {
        for r in 0..m.cols() {
            let v = &m[(r2, r)];
            if v.is_zero() {
                continue;
            }
            for c in 0..cols {
                let (row, col) = (out_off + r2 * cols + c, in_off + r * cols + c);
                if negate {
                    out[(row, col)] -= v;
                } else {
                    out[(row, col)] += v;
                }
            }
        }
    }
}

/// out[block_out] ±= X · P where X is `rows x in_cols` and P is `in_cols x out_cols`.
pub(crate) fn add_right_mul(
    out: &mut IntMatrix,
    p: &IntMatrix,
    rows: usize,
    in_off: usize,
    out_off: usize,
    negate: bool,
) {
    let (in_cols, out_cols) = p.shape();
    for c in 0..in_cols {
        for c2 in 0..out_cols {
            let v = &p[(c, c2)];
            if v.is_zero() {
                continue;
            }
            for r in 0..rows {
                let (row, col) = (out_off + r * out_cols + c2, in_off + r * in_cols + c);
                if negate {
                    out[(row, col)] -= v;
                } else {
                    out[(row, col)] += v;
                }
            }
        }
    }
}

/// `Hom(A, B)` with `Hom^n = ⊕_d Hom(A^d, B^{d+n})`.
#[derive(Clone, Debug)]
pub struct HomComplex {
    pub source: Arc<ZComplex>,
    pub target: Arc<ZComplex>,
    pub layout: HomLayout,
    pub complex: ZComplex,
}

impl HomComplex {
    pub fn new(a: Arc<ZComplex>, b: Arc<ZComplex>) -> Self {
        let layout = HomLayout::new(&a, &b);
        let mut d = BTreeMap::new();
        for (&n, blocks) in &layout.index {
            let dim_out = layout.dim(n + 1);
            if dim_out == 0 {
                continue;
            }
            let mut m = IntMatrix::zeros(dim_out, layout.dim(n));
            for blk in blocks {
                let s = blk.source_degree;
                // d_B ∘ f lands in the block with the same source degree
                if let (Some(db), Some(ob)) = (b.d_ref(s + n), layout.block(n + 1, s)) {
                    add_left_mul(&mut m, db, blk.cols, blk.offset, ob.offset, false);
                }
                // -(-1)^n f ∘ d_A lands at source degree s - 1
                if let (Some(da), Some(ob)) = (a.d_ref(s - 1), layout.block(n + 1, s - 1)) {
                    add_right_mul(&mut m, da, blk.rows, blk.offset, ob.offset, !odd(n));
                }
            }
            d.insert(n, m);
        }
        let complex = ZComplex::from_maps(&layout.dims.clone(), &d).expect("hom complex shapes");
        HomComplex { source: a, target: b, layout, complex }
    }

    pub fn vectorize(&self, f: &GradedMap) -> Vec<BigInt> {
        self.layout.vectorize(f)
    }

    pub fn element(&self, n: i64, v: &[BigInt]) -> GradedMap {
        self.layout.element(self.source.clone(), self.target.clone(), n, v)
    }
}

pub fn hom_complex(a: &ZComplex, b: &ZComplex) -> HomComplex {
    HomComplex::new(Arc::new(a.clone()), Arc::new(b.clone()))
}

pub fn compose_graded(g: &GradedMap, f: &GradedMap) -> Result<GradedMap> {
    g.try_compose(f)
}

/// Mapping cone: `cone(f)^n = A^{n+1} ⊕ B^n` with differential `[[-d_A, 0], [f, d_B]]`.
pub fn cone_of_map(f: &GradedMap) -> Result<ZComplex> {
    if f.degree != 0 || !f.is_cocycle() {
        return Err(Error::NotChainMap("cone requires a degree-0 chain map".into()));
    }
    let (a, b) = (&*f.source, &*f.target);
    let a1 = a.shift(1);
    let mut ranks = BTreeMap::new();
    let mut d = BTreeMap::new();
    let degs: Vec<i64> = a1.degrees().chain(b.degrees()).collect();
    let (Some(&lo), Some(&hi)) = (degs.iter().min(), degs.iter().max()) else {
        return Ok(ZComplex::zero());
    };
    for n in lo..=hi {
        ranks.insert(n, a.rank(n + 1) + b.rank(n));
    }
    for n in lo..hi {
        let (ra, rb) = (a.rank(n + 1), b.rank(n));
        let (ra2, rb2) = (a.rank(n + 2), b.rank(n + 1));
        let mut m = IntMatrix::zeros(ra2 + rb2, ra + rb);
        if let Some(da) = a.d_ref(n + 1) {
            m.add_block(0, 0, da, true);
        }
        if let Some(fm) = f.block_ref(n + 1) {
            m.add_block(ra2, 0, fm, false);
        }
        if let Some(db) = b.d_ref(n) {
            m.add_block(ra2, ra, db, false);
        }
        d.insert(n, m);
    }
    ZComplex::from_maps(&ranks, &d)
}

pub fn is_quasi_iso(f: &GradedMap) -> Result<bool> {
    cone_of_map(f)?.is_acyclic()
}

/// Homology in one degree together with cycle representatives of the
/// canonical generators (torsion generators first, then free ones).
#[derive(Clone, Debug)]
pub struct HomologyPresentation {
    pub degree: i64,
    pub group: FgAbGroup,
    /// Cycle representatives, one column per canonical generator.
    pub generators: IntMatrix,
    /// Order of each generator (0 for free generators).
    pub orders: Vec<BigInt>,
    cycles: Solver,
    u: IntMatrix,
    keep: Vec<usize>,
}

impl HomologyPresentation {
    pub fn new(c: &ZComplex, n: i64) -> Result<Self> {
        c.require_valid()?;
        let rank = c.rank(n);
        let z = match c.d_ref(n) {
            Some(m) => kernel_basis(m),
            None => IntMatrix::identity(rank),
        };
        let cycles = Solver::new(&z);
        let b = c.d(n - 1);
        let rel = cycles
            .solve_matrix(&b)?
            .ok_or_else(|| Error::InvalidComplex(format!("image of d({}) not inside the cycles", n - 1)))?;
        let s = snf(&rel);
        let diag = s.diagonal();
        let k = z.cols();
        let mut keep = Vec::new();
        let mut orders = Vec::new();
        for i in 0..k {
            let di = diag.get(i).cloned().unwrap_or_else(BigInt::zero);
            if !di.is_one() {
                keep.push(i);
                orders.push(di);
            }
        }
        // torsion first, then free (SNF puts nonzero entries first already)
        let gens_all = z.mul(&s.u_inv);
        let generators = gens_all.select_columns(&keep);
        let group = FgAbGroup {
            free: orders.iter().filter(|o| o.is_zero()).count(),
            torsion: orders.iter().filter(|o| !o.is_zero()).cloned().collect(),
        };
        Ok(HomologyPresentation { degree: n, group, generators, orders, cycles, u: s.u, keep })
    }

    /// Canonical coordinates of the class of the cycle `z` (torsion coordinates
    /// reduced into `0..order`).
    pub fn class_of(&self, z: &[BigInt]) -> Result<Vec<BigInt>> {
        let x = self
            .cycles
            .solve(z)?
            .ok_or_else(|| Error::Input("vector is not a cycle".into()))?;
        let y = self.u.mul_vec(&x);
        Ok(self
            .keep
            .iter()
            .zip(&self.orders)
            .map(|(&i, o)| if o.is_zero() { y[i].clone() } else { y[i].mod_floor(o) })
            .collect())
    }

    pub fn is_zero_class(&self, coords: &[BigInt]) -> bool {
        coords.iter().zip(&self.orders).all(|(c, o)| if o.is_zero() { c.is_zero() } else { c.mod_floor(o).is_zero() })
    }

    pub fn generator(&self, k: usize) -> Vec<BigInt> {
        self.generators.column(k)
    }
}

/// Matrix (in canonical generator coordinates) of the map induced on `H^n`
/// by a chain map. Column `k` is the image of source generator `k`.
pub fn induced_map(f: &GradedMap, n: i64) -> Result<(HomologyPresentation, HomologyPresentation, IntMatrix)> {
    if !f.is_cocycle() {
        return Err(Error::NotChainMap("induced map needs a cocycle".into()));
    }
    let hs = HomologyPresentation::new(&f.source, n)?;
    let ht = HomologyPresentation::new(&f.target, n + f.degree)?;
    let fm = f.block(n);
    let mut m = IntMatrix::zeros(ht.orders.len(), hs.orders.len());
    for k in 0..hs.orders.len() {
        let img = fm.mul_vec(&hs.generator(k));
        let c = ht.class_of(&img)?;
        for (r, v) in c.into_iter().enumerate() {
            m[(r, k)] = v;
        }
    }
    Ok((hs, ht, m))
}

/// Whether a presented homomorphism between finitely generated abelian groups is
/// an isomorphism. Source and target are given by their generator orders.
pub fn is_group_iso(src_orders: &[BigInt], tgt_orders: &[BigInt], m: &IntMatrix) -> bool {
    // Target presentation: Z^t / diag(orders); the map is iso iff the block
    // matrix [M | R_t] has cokernel 0 and the kernel of Z^s ⊕ Z^t -> Z^t
    // projects onto the relations of the source.
    let t = tgt_orders.len();
    let s = src_orders.len();
    let rt = IntMatrix::diagonal(t, t, tgt_orders);
    let big = m.hstack(&rt);
    if !crate::zmodule::cokernel_invariants(&big).is_zero() {
        return false;
    }
    let rs = IntMatrix::diagonal(s, s, src_orders);
    // kernel of the induced map on Z^s: x with M x ∈ im R_t
    let k = kernel_basis(&big);
    let ker = k.block(0, 0, s, k.cols());
    // injective iff ker ⊂ im R_s, i.e. every column solvable against R_s
    let solver = Solver::new(&rs);
    (0..ker.cols()).all(|c| solver.contains(&ker.column(c)))
}

/// Convenience: lift small integer degree-indexed ranks into a complex with zero differential.
pub fn graded_free(ranks: &[(i64, usize)]) -> ZComplex {
    let r: BTreeMap<i64, usize> = ranks.iter().copied().collect();
    ZComplex::from_maps(&r, &BTreeMap::new()).expect("no differentials")
}

pub fn is_sign_negative(x: &BigInt) -> bool {
    x.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2_resolution(lo: i64) -> ZComplex {
        ZComplex::two_term(lo, IntMatrix::from_rows(&[[2]]))
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn validate_examples() {
        assert!(ZComplex::concentrated(0, 1).validate().valid);
        assert!(z2_resolution(0).validate().valid);
        let bad = ZComplex::new(
            0,
            vec![1, 1, 1],
            vec![IntMatrix::from_rows(&[[1]]), IntMatrix::from_rows(&[[1]])],
        )
        .unwrap();
        let v = bad.validate();
        assert!(!v.valid);
        assert_eq!(v.at, Some(0));
    }

    #[test]
    fn homology_examples() {
        assert_eq!(ZComplex::concentrated(0, 1).homology(0).unwrap(), FgAbGroup::free(1));
        assert_eq!(z2_resolution(0).homology(1).unwrap(), FgAbGroup::cyclic(2));
        let c = ZComplex::two_term(0, IntMatrix::from_rows(&[[2, 0], [0, 3]]));
        assert_eq!(c.homology(1).unwrap(), FgAbGroup::cyclic(6));
        assert!(c.homology(0).unwrap().is_zero());
    }

    #[test]
    fn hom_complex_examples() {
        let z = ZComplex::concentrated(0, 1);
        let h = hom_complex(&z, &z);
        assert_eq!(h.complex, ZComplex::concentrated(0, 1));

        let b = z2_resolution(-1);
        let h = hom_complex(&z, &b);
        assert_eq!(h.complex.rank(-1), 1);
        assert_eq!(h.complex.rank(0), 1);
        assert_eq!(h.complex.d(-1).entries()[0].abs(), BigInt::from(2));
        assert_eq!(h.complex.homology(0).unwrap(), FgAbGroup::cyclic(2));

        // Hom((Z -2-> Z), Z): degree-0 maps are maps A^0 -> Z, degree -1 maps are A^1 -> Z
        let a = z2_resolution(0);
        let h = hom_complex(&a, &z);
        assert_eq!(h.complex.rank(-1), 1);
        assert_eq!(h.complex.rank(0), 1);
        // brute force: a degree-0 map φ: A^0 -> Z is a cocycle iff φ∘d_A^{-1} = 0 (vacuous),
        // and boundaries are ψ∘d_A with ψ: A^1 -> Z, so H^0 = Z/2, H^{-1} = 0
        let mut coboundaries = Vec::new();
        for psi in -3i64..=3 {
            let f = h.element(-1, &big(&[psi]));
            coboundaries.push(h.vectorize(&f.differential())[0].clone());
        }
        assert!(coboundaries.iter().all(|x| x.is_multiple_of(&BigInt::from(2))));
        assert!(coboundaries.contains(&BigInt::from(2)) || coboundaries.contains(&BigInt::from(-2)));
        assert_eq!(h.complex.homology(0).unwrap(), FgAbGroup::cyclic(2));
        assert!(h.complex.homology(-1).unwrap().is_zero());
    }

    #[test]
    fn hom_matrix_matches_map_differential() {
        let a = Arc::new(ZComplex::two_term(0, IntMatrix::from_rows(&[[1, 2], [0, 3]])));
        let b = Arc::new(ZComplex::two_term(-1, IntMatrix::from_rows(&[[2, -1]])));
        let h = HomComplex::new(a.clone(), b.clone());
        for (&n, &dim) in &h.layout.dims {
            for k in 0..dim {
                let mut v = vec![BigInt::zero(); dim];
                v[k] = BigInt::one();
                let f = h.element(n, &v);
                let lhs = h.layout.vectorize(&f.differential());
                let rhs = h.complex.d(n).mul_vec(&v);
                assert_eq!(lhs, rhs);
            }
        }
        assert!(h.complex.is_valid());
    }

    #[test]
    fn identity_laws() {
        let a = Arc::new(z2_resolution(0));
        let b = Arc::new(ZComplex::concentrated(0, 2));
        let f = GradedMap::new(a.clone(), b.clone(), 0, [(0, IntMatrix::from_rows(&[[1], [5]]))].into()).unwrap();
        assert_eq!(GradedMap::identity(b.clone()).compose(&f), f);
        assert_eq!(f.compose(&GradedMap::identity(a.clone())), f);
        assert!(GradedMap::identity(a).is_cocycle());
    }

    #[test]
    fn cone_examples() {
        let z = Arc::new(ZComplex::concentrated(0, 1));
        let id = GradedMap::identity(z.clone());
        assert!(cone_of_map(&id).unwrap().is_acyclic().unwrap());
        assert!(is_quasi_iso(&id).unwrap());

        let zero = GradedMap::zero(z.clone(), z.clone(), 0);
        let c = cone_of_map(&zero).unwrap();
        assert_eq!(c.homology(-1).unwrap(), FgAbGroup::free(1));
        assert_eq!(c.homology(0).unwrap(), FgAbGroup::free(1));
        assert!(!is_quasi_iso(&zero).unwrap());

        let two = GradedMap::scalar(z, &BigInt::from(2));
        let c = cone_of_map(&two).unwrap();
        assert_eq!(c.homology(0).unwrap(), FgAbGroup::cyclic(2));
        assert!(c.homology(-1).unwrap().is_zero());
        assert!(!is_quasi_iso(&two).unwrap());

        let a = Arc::new(z2_resolution(0));
        let not_chain = GradedMap::new(a.clone(), a, 0, [(0, IntMatrix::from_rows(&[[1]]))].into()).unwrap();
        assert!(matches!(cone_of_map(&not_chain), Err(Error::NotChainMap(_))));
    }

    #[test]
    fn shift_examples() {
        let a = z2_resolution(0);
        assert_eq!(a.shift(0), a);
        assert_eq!(ZComplex::concentrated(0, 1).shift(1), ZComplex::concentrated(-1, 1));
        assert_eq!(a.shift(1).shift(1), a.shift(2));
        assert_eq!(a.shift(1).d(-1), IntMatrix::from_rows(&[[-2]]));
    }

    #[test]
    fn tensor_examples() {
        let z = ZComplex::concentrated(0, 1);
        let b = ZComplex::two_term(-1, IntMatrix::from_rows(&[[3], [1]]));
        assert_eq!(z.tensor(&b), b);
        assert_eq!(b.tensor(&z), b);
        assert!(b.tensor(&ZComplex::zero()).is_zero());

        let a = z2_resolution(0);
        let t = a.tensor(&a);
        assert_eq!((t.rank(0), t.rank(1), t.rank(2)), (1, 2, 1));
        assert!(t.is_valid());
        assert_eq!(t.homology(2).unwrap(), FgAbGroup::cyclic(2));
        assert_eq!(t.homology(1).unwrap(), FgAbGroup::cyclic(2));
        assert!(t.homology(0).unwrap().is_zero());
        // explicit matrices: d0 = [2; 2], d1 = [-2, 2] in basis (x0⊗y1, x1⊗y0)
        assert_eq!(t.d(0), IntMatrix::from_rows(&[[2], [2]]));
        assert_eq!(t.d(1), IntMatrix::from_rows(&[[2, -2]]));
    }

    #[test]
    fn dual_examples() {
        assert_eq!(ZComplex::concentrated(0, 1).dual(), ZComplex::concentrated(0, 1));
        assert_eq!(ZComplex::concentrated(1, 1).dual(), ZComplex::concentrated(-1, 1));
        let d = z2_resolution(0).dual();
        assert_eq!(d.support(), Some((-1, 0)));
        assert_eq!(d.d(-1).entries()[0].abs(), BigInt::from(2));
        assert_eq!(d.homology(0).unwrap(), FgAbGroup::cyclic(2));
    }

    #[test]
    fn double_dual_comparison() {
        let a = ZComplex::new(
            -1,
            vec![1, 2, 1],
            vec![IntMatrix::from_rows(&[[1], [1]]), IntMatrix::from_rows(&[[1, -1]])],
        )
        .unwrap();
        assert!(a.is_valid());
        let dd = a.dual().dual();
        assert_eq!(dd.ranks(), a.ranks());
        let c = GradedMap::new(
            Arc::new(a.clone()),
            Arc::new(dd),
            0,
            a.degrees().map(|n| (n, IntMatrix::identity(a.rank(n)).signed(odd(n)))).collect(),
        )
        .unwrap();
        assert!(c.is_chain_map());
        assert!(is_quasi_iso(&c).unwrap());
    }

    #[test]
    fn evaluation_pairing_is_chain_map() {
        let a = ZComplex::new(
            0,
            vec![2, 1],
            vec![IntMatrix::from_rows(&[[1, 2]])],
        )
        .unwrap();
        let tb = TensorBasis::new(vec![a.dual(), a.clone()]);
        let unit = Arc::new(ZComplex::concentrated(0, 1));
        let t = Arc::new(tb.complex.clone());
        let mut ev = IntMatrix::zeros(1, t.rank(0));
        for (k, tup) in tb.basis(0).iter().enumerate() {
            let ((p, i), (q, j)) = (tup[0], tup[1]);
            if p == -q && i == j {
                ev[(0, k)] = BigInt::one();
            }
        }
        let e = GradedMap::new(t, unit, 0, [(0, ev)].into()).unwrap();
        assert!(e.is_chain_map());
    }

    #[test]
    fn koszul_transpose_commutes_with_d() {
        let a = Arc::new(ZComplex::two_term(0, IntMatrix::from_rows(&[[1], [2]])));
        let b = Arc::new(ZComplex::two_term(-1, IntMatrix::from_rows(&[[1, -1]])));
        let h = HomComplex::new(a, b);
        for (&n, &dim) in &h.layout.dims {
            for k in 0..dim {
                let mut v = vec![BigInt::zero(); dim];
                v[k] = BigInt::from(k as i64 + 1);
                let f = h.element(n, &v);
                assert_eq!(f.differential().koszul_transpose(), f.koszul_transpose().differential());
            }
        }
    }

    #[test]
    fn presentation_and_induced_maps() {
        let c = ZComplex::two_term(0, IntMatrix::from_rows(&[[2, 0], [0, 3]]));
        let p = HomologyPresentation::new(&c, 1).unwrap();
        assert_eq!(p.group, FgAbGroup::cyclic(6));
        let g = p.generator(0);
        let cl = p.class_of(&g).unwrap();
        assert_eq!(cl, big(&[1]));
        let two_g: Vec<BigInt> = g.iter().map(|x| x * 6).collect();
        assert!(p.is_zero_class(&p.class_of(&two_g).unwrap()));

        let z = Arc::new(ZComplex::concentrated(0, 1));
        let three = GradedMap::scalar(z, &BigInt::from(3));
        let (hs, ht, m) = induced_map(&three, 0).unwrap();
        assert!(!is_group_iso(&hs.orders, &ht.orders, &m));
        assert!(is_group_iso(&big(&[0]), &big(&[0]), &IntMatrix::from_rows(&[[-1]])));
        assert!(is_group_iso(&big(&[5]), &big(&[5]), &IntMatrix::from_rows(&[[2]])));
        assert!(!is_group_iso(&big(&[4]), &big(&[4]), &IntMatrix::from_rows(&[[2]])));
    }
}

//! Exact integer linear algebra: dense integer matrices, Smith normal form,
//! kernels, cokernels and integral linear solves.
//!
//! Everything here is exact; entries are arbitrary precision [`BigInt`]s.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix({}x{}) [", self.rows, self.cols)?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self[(r, c)])?;
            }
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigInt {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn scalar(n: usize, s: impl Into<BigInt>) -> Self {
        let s = s.into();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s.clone();
        }
        m
    }

    pub fn diagonal(rows: usize, cols: usize, diag: &[BigInt]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = d.clone();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    /// Builds a matrix from small integer rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nr * nc);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), nc, "ragged rows");
            data.extend(r.iter().map(|&x| BigInt::from(x)));
        }
        IntMatrix { rows: nr, cols: nc, data }
    }

    /// Triplet (row, col, value) encoding; repeated positions accumulate.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, BigInt)]) -> Result<Self> {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in triplets {
            if *r >= rows || *c >= cols {
                return Err(Error::Shape(format!("triplet ({r},{c}) outside {rows}x{cols}")));
            }
            m[(*r, *c)] += v;
        }
        Ok(m)
    }

    pub fn column_vector(v: &[BigInt]) -> Self {
        IntMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<BigInt> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    /// Nonzero entries as (row, col, value).
    pub fn triplets(&self) -> Vec<(usize, usize, BigInt)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = &self[(r, c)];
                if !v.is_zero() {
                    out.push((r, c, v.clone()));
                }
            }
        }
        out
    }

    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|r| self.row(r).iter().map(|x| x.to_i64()).collect::<Option<Vec<_>>>())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].clone();
            }
        }
        t
    }

    pub fn neg(&self) -> Self {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| -x).collect() }
    }

    pub fn scaled(&self, s: &BigInt) -> Self {
        IntMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// `self * sign` where `sign` is ±1 given as a parity bit (odd = negate).
    pub fn signed(&self, odd: bool) -> Self {
        if odd {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!("add {:?} + {:?}", self.shape(), other.shape())));
        }
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("matrix shapes must agree")
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "matrix shapes must agree");
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "matrix shapes must agree");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if !b.is_zero() {
                *a += b;
            }
        }
    }

    /// Adds `sign * other` into the block whose top-left corner is `(r0, c0)`.
    pub fn add_block(&mut self, r0: usize, c0: usize, other: &Self, negate: bool) {
        assert!(r0 + other.rows <= self.rows && c0 + other.cols <= self.cols, "block out of range");
        for r in 0..other.rows {
            for c in 0..other.cols {
                let v = &other[(r, c)];
                if v.is_zero() {
                    continue;
                }
                if negate {
                    self[(r0 + r, c0 + c)] -= v;
                } else {
                    self[(r0 + r, c0 + c)] += v;
                }
            }
        }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, other: &Self) {
        assert!(r0 + other.rows <= self.rows && c0 + other.cols <= self.cols, "block out of range");
        for r in 0..other.rows {
            for c in 0..other.cols {
                self[(r0 + r, c0 + c)] = other[(r, c)].clone();
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let mut out = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                out[(r, c)] = self[(r0 + r, c0 + c)].clone();
            }
        }
        out
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!("mul {:?} * {:?}", self.shape(), other.shape())));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                let orow = other.row(k);
                let base = r * out.cols;
                for (c, b) in orow.iter().enumerate() {
                    if !b.is_zero() {
                        out.data[base + c] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("matrix shapes must agree")
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "vector length must match columns");
        let mut out = vec![BigInt::zero(); self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            for (a, b) in self.row(r).iter().zip(v) {
                if !a.is_zero() && !b.is_zero() {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack needs equal row counts");
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(0, self.cols, other);
        out
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "vstack needs equal column counts");
        let mut out = Self::zeros(self.rows + other.rows, self.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, 0, other);
        out
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, self.cols, other);
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for (j, &c) in cols.iter().enumerate() {
            for r in 0..self.rows {
                out[(r, j)] = self[(r, c)].clone();
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), self.cols);
        for (i, &r) in rows.iter().enumerate() {
            for c in 0..self.cols {
                out[(i, c)] = self[(r, c)].clone();
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        snf(self).rank()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn row_axpy(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let v = &self.data[src * self.cols + c];
            if !v.is_zero() {
                let add = v * k;
                self.data[dst * self.cols + c] += add;
            }
        }
    }

    /// col[dst] += k * col[src]
    fn col_axpy(&mut self, dst: usize, src: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let v = &self.data[r * self.cols + src];
            if !v.is_zero() {
                let add = v * k;
                self.data[r * self.cols + dst] += add;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = &mut self.data[r * self.cols + c];
            *v = -&*v;
        }
    }
}

/// Smith normal form `U · M · V = D` together with the inverses of `U` and `V`.
#[derive(Clone, Debug)]
pub struct SnfResult {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub u_inv: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SnfResult {
    /// Diagonal entries `d_1 | d_2 | ...` up to `min(rows, cols)`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols())).map(|i| self.d[(i, i)].clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().take_while(|x| !x.is_zero()).count()
    }
}

/// Smith normal form with minimal-absolute-value pivoting.
pub fn snf(m: &IntMatrix) -> SnfResult {
    let (nr, nc) = m.shape();
    let mut a = m.clone();
    let mut u = IntMatrix::identity(nr);
    let mut u_inv = IntMatrix::identity(nr);
    let mut v = IntMatrix::identity(nc);
    let mut v_inv = IntMatrix::identity(nc);

    // Row operations act on (a, u) from the left and on u_inv from the right
    // by the inverse; column operations symmetrically.
    macro_rules! swap_rows {
        ($i:expr, $j:expr) => {{
            a.swap_rows($i, $j);
            u.swap_rows($i, $j);
            u_inv.swap_cols($i, $j);
        }};
    }
    macro_rules! swap_cols {
        ($i:expr, $j:expr) => {{
            a.swap_cols($i, $j);
            v.swap_cols($i, $j);
            v_inv.swap_rows($i, $j);
        }};
    }
    // row[dst] += k row[src]
    macro_rules! row_axpy {
        ($dst:expr, $src:expr, $k:expr) => {{
            let k: &BigInt = $k;
            a.row_axpy($dst, $src, k);
            u.row_axpy($dst, $src, k);
            u_inv.col_axpy($src, $dst, &-k);
        }};
    }
    // col[dst] += k col[src]
    macro_rules! col_axpy {
        ($dst:expr, $src:expr, $k:expr) => {{
            let k: &BigInt = $k;
            a.col_axpy($dst, $src, k);
            v.col_axpy($dst, $src, k);
            v_inv.row_axpy($src, $dst, &-k);
        }};
    }

    let steps = nr.min(nc);
    for t in 0..steps {
        // global minimal pivot in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for r in t..nr {
            for c in t..nc {
                let x = &a[(r, c)];
                if x.is_zero() {
                    continue;
                }
                if best.is_none_or(|(br, bc)| x.abs() < a[(br, bc)].abs()) {
                    best = Some((r, c));
                }
            }
        }
        let Some((pr, pc)) = best else { break };
        swap_rows!(t, pr);
        swap_cols!(t, pc);

        loop {
            // clear column t below and row t to the right
            let mut dirty = false;
            for r in t + 1..nr {
                if a[(r, t)].is_zero() {
                    continue;
                }
                let q = a[(r, t)].div_floor(&a[(t, t)]);
                row_axpy!(r, t, &-q);
                if !a[(r, t)].is_zero() {
                    dirty = true;
                }
            }
            for c in t + 1..nc {
                if a[(t, c)].is_zero() {
                    continue;
                }
                let q = a[(t, c)].div_floor(&a[(t, t)]);
                col_axpy!(c, t, &-q);
                if !a[(t, c)].is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                // bring the smallest remainder in row/column t to the pivot
                let mut best = (t, t);
                for r in t + 1..nr {
                    let x = &a[(r, t)];
                    if !x.is_zero() && x.abs() < a[best].abs() {
                        best = (r, t);
                    }
                }
                for c in t + 1..nc {
                    let x = &a[(t, c)];
                    if !x.is_zero() && x.abs() < a[best].abs() {
                        best = (t, c);
                    }
                }
                if best.0 != t {
                    swap_rows!(t, best.0);
                } else if best.1 != t {
                    swap_cols!(t, best.1);
                }
                continue;
            }
            // divisibility of the trailing block by the pivot
            let mut offender = None;
            'scan: for r in t + 1..nr {
                for c in t + 1..nc {
                    if !a[(r, c)].is_multiple_of(&a[(t, t)]) {
                        offender = Some(r);
                        break 'scan;
                    }
                }
            }
            match offender {
                Some(r) => row_axpy!(t, r, &BigInt::one()),
                None => break,
            }
        }
        if a[(t, t)].is_negative() {
            a.negate_row(t);
            u.negate_row(t);
            // inverse of a row negation is the same negation on the column
            for r in 0..nr {
                let x = &mut u_inv[(r, t)];
                *x = -&*x;
            }
        }
    }
    SnfResult { u, d: a, v, u_inv, v_inv }
}

/// Finitely generated abelian group `Z^free ⊕ Z/t_1 ⊕ ... ⊕ Z/t_k`, with
/// `t_1 | t_2 | ... | t_k` and every `t_i >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FgAbGroup {
    pub free: usize,
    #[serde(with = "crate::document::bigint_vec")]
    pub torsion: Vec<BigInt>,
}

impl FgAbGroup {
    pub fn zero() -> Self {
        FgAbGroup::default()
    }

    pub fn free(rank: usize) -> Self {
        FgAbGroup { free: rank, torsion: vec![] }
    }

    pub fn cyclic(order: u64) -> Self {
        Self::from_factors(0, &[BigInt::from(order)])
    }

    /// Canonicalises an arbitrary list of cyclic orders (0 means `Z`, 1 is dropped).
    pub fn from_factors(free: usize, factors: &[BigInt]) -> Self {
        let mut free = free;
        let mut diag = Vec::new();
        for f in factors {
            let f = f.abs();
            if f.is_zero() {
                free += 1;
            } else if !f.is_one() {
                diag.push(f);
            }
        }
        let n = diag.len();
        let m = IntMatrix::diagonal(n, n, &diag);
        let torsion = snf(&m).diagonal().into_iter().filter(|x| !x.is_one()).collect();
        FgAbGroup { free, torsion }
    }

    pub fn is_zero(&self) -> bool {
        self.free == 0 && self.torsion.is_empty()
    }

    /// Number of cyclic summands in the canonical decomposition.
    pub fn generator_count(&self) -> usize {
        self.free + self.torsion.len()
    }

    pub fn torsion_order(&self) -> BigInt {
        self.torsion.iter().fold(BigInt::one(), |acc, t| acc * t)
    }

    /// Checks the canonical-form invariants.
    pub fn is_canonical(&self) -> bool {
        self.torsion.iter().all(|t| *t >= BigInt::from(2))
            && self.torsion.windows(2).all(|w| w[1].is_multiple_of(&w[0]))
    }
}

impl fmt::Display for FgAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.free {
            0 => {}
            1 => parts.push("Z".to_string()),
            n => parts.push(format!("Z^{n}")),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Cokernel of `m : Z^cols -> Z^rows`.
pub fn cokernel_invariants(m: &IntMatrix) -> FgAbGroup {
    let s = snf(m);
    let diag = s.diagonal();
    let rank = diag.iter().take_while(|x| !x.is_zero()).count();
    FgAbGroup {
        free: m.rows() - rank,
        torsion: diag.into_iter().take(rank).filter(|x| !x.is_one()).collect(),
    }
}

/// A Smith decomposition kept around to answer many right-hand sides.
#[derive(Clone, Debug)]
pub struct Solver {
    snf: SnfResult,
    rank: usize,
}

impl Solver {
    pub fn new(m: &IntMatrix) -> Self {
        let snf = snf(m);
        let rank = snf.rank();
        Solver { snf, rank }
    }

    pub fn rows(&self) -> usize {
        self.snf.d.rows()
    }

    pub fn cols(&self) -> usize {
        self.snf.d.cols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn snf(&self) -> &SnfResult {
        &self.snf
    }

    /// Integer solution of `M x = b`, if one exists.
    pub fn solve(&self, b: &[BigInt]) -> Result<Option<Vec<BigInt>>> {
        if b.len() != self.rows() {
            return Err(Error::Shape(format!(
                "right-hand side of length {} for a system with {} rows",
                b.len(),
                self.rows()
            )));
        }
        let ub = self.snf.u.mul_vec(b);
        let mut y = vec![BigInt::zero(); self.cols()];
        for (i, c) in ub.iter().enumerate() {
            if i < self.rank {
                let d = &self.snf.d[(i, i)];
                let (q, r) = c.div_rem(d);
                if !r.is_zero() {
                    return Ok(None);
                }
                y[i] = q;
            } else if !c.is_zero() {
                return Ok(None);
            }
        }
        Ok(Some(self.snf.v.mul_vec(&y)))
    }

    /// Solves `M X = B` column by column.
    pub fn solve_matrix(&self, b: &IntMatrix) -> Result<Option<IntMatrix>> {
        let mut out = IntMatrix::zeros(self.cols(), b.cols());
        for c in 0..b.cols() {
            match self.solve(&b.column(c))? {
                Some(x) => {
                    for (r, v) in x.into_iter().enumerate() {
                        out[(r, c)] = v;
                    }
                }
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    /// Whether `b` lies in the integer column span of `M`.
    pub fn contains(&self, b: &[BigInt]) -> bool {
        matches!(self.solve(b), Ok(Some(_)))
    }

    pub fn kernel_basis(&self) -> IntMatrix {
        let cols: Vec<usize> = (self.rank..self.cols()).collect();
        self.snf.v.select_columns(&cols)
    }
}

/// Integer solution of `M x = b`, if any. Any returned `x` satisfies `M x = b` exactly.
pub fn solve(m: &IntMatrix, b: &[BigInt]) -> Result<Option<Vec<BigInt>>> {
    Solver::new(m).solve(b)
}

/// Basis (as columns) of the saturated lattice `ker M ⊂ Z^cols`.
pub fn kernel_basis(m: &IntMatrix) -> IntMatrix {
    Solver::new(m).kernel_basis()
}

pub fn rank(m: &IntMatrix) -> usize {
    m.rank()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMatrix) -> BigInt {
    assert_eq!(m.rows(), m.cols(), "determinant of a non-square matrix");
    let n = m.rows();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = false;
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[(k, k)].is_zero() {
            match (k + 1..n).find(|&r| !a[(r, k)].is_zero()) {
                Some(r) => {
                    a.swap_rows(k, r);
                    sign = !sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)]) / &prev;
                a[(i, j)] = v;
            }
        }
        prev = a[(k, k)].clone();
    }
    let d = a[(n - 1, n - 1)].clone();
    if sign {
        -d
    } else {
        d
    }
}

/// Rank over the prime field `F_p`.
pub fn rank_mod_p(m: &IntMatrix, p: u64) -> usize {
    let mut rows = to_mod_p(m, p);
    let ncols = m.cols();
    let mut rank = 0;
    for c in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else { continue };
        rows.swap(rank, piv);
        let inv = inv_mod(rows[rank][c], p);
        for x in rows[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0 {
                let f = rows[r][c];
                let pivot = rows[rank].clone();
                for (x, &y) in rows[r].iter_mut().zip(&pivot) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Basis (as columns, entries in `0..p`) of the kernel of `m` over `F_p`.
pub fn kernel_mod_p(m: &IntMatrix, p: u64) -> IntMatrix {
    let mut rows = to_mod_p(m, p);
    let ncols = m.cols();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else { continue };
        rows.swap(rank, piv);
        let inv = inv_mod(rows[rank][c], p);
        for x in rows[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0 {
                let f = rows[r][c];
                let pivot = rows[rank].clone();
                for (x, &y) in rows[r].iter_mut().zip(&pivot) {
                    *x = (*x + p - f * y % p) % p;
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let mut out = IntMatrix::zeros(ncols, free.len());
    for (k, &fc) in free.iter().enumerate() {
        out[(fc, k)] = BigInt::one();
        for (r, &pc) in pivots.iter().enumerate() {
            let v = (p - rows[r][fc]) % p;
            out[(pc, k)] = BigInt::from(v);
        }
    }
    out
}

fn to_mod_p(m: &IntMatrix, p: u64) -> Vec<Vec<u64>> {
    let bp = BigInt::from(p);
    (0..m.rows())
        .map(|r| {
            m.row(r)
                .iter()
                .map(|x| x.mod_floor(&bp).to_u64().expect("residue fits in u64"))
                .collect()
        })
        .collect()
}

fn inv_mod(a: u64, p: u64) -> u64 {
    // p is prime
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    result
}

pub fn small_primes_dividing(values: &[BigInt]) -> Vec<u64> {
    let mut primes = Vec::new();
    for v in values {
        let mut n = v.abs();
        let mut p = 2u64;
        while !n.is_one() && !n.is_zero() && p < 10_000 {
            let bp = BigInt::from(p);
            if n.is_multiple_of(&bp) {
                if !primes.contains(&p) {
                    primes.push(p);
                }
                while n.is_multiple_of(&bp) {
                    n /= &bp;
                }
            }
            p += 1;
        }
    }
    primes.sort_unstable();
    primes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn check_snf(m: &IntMatrix) -> SnfResult {
        let s = snf(m);
        assert_eq!(s.u.mul(m).mul(&s.v), s.d, "U M V = D for {m:?}");
        assert_eq!(s.u.mul(&s.u_inv), IntMatrix::identity(m.rows()));
        assert_eq!(s.v.mul(&s.v_inv), IntMatrix::identity(m.cols()));
        for r in 0..s.d.rows() {
            for c in 0..s.d.cols() {
                if r != c {
                    assert!(s.d[(r, c)].is_zero());
                }
            }
        }
        let diag = s.diagonal();
        let rank = s.rank();
        assert!(diag[rank..].iter().all(Zero::is_zero));
        assert!(diag[..rank].iter().all(|x| x.is_positive()));
        for w in diag[..rank].windows(2) {
            assert!(w[1].is_multiple_of(&w[0]));
        }
        s
    }

    #[test]
    fn snf_zero_one_by_one() {
        let s = check_snf(&IntMatrix::from_rows(&[[0]]));
        assert_eq!(s.d, IntMatrix::from_rows(&[[0]]));
        assert_eq!(s.u, IntMatrix::identity(1));
        assert_eq!(s.v, IntMatrix::identity(1));
    }

    #[test]
    fn snf_identity() {
        let s = check_snf(&IntMatrix::identity(2));
        assert_eq!(s.diagonal(), big(&[1, 1]));
    }

    #[test]
    fn snf_two_four_six_eight() {
        let s = check_snf(&IntMatrix::from_rows(&[[2, 4], [6, 8]]));
        assert_eq!(s.diagonal(), big(&[2, 4]));
    }

    #[test]
    fn snf_empty_shapes() {
        for (r, c) in [(0, 0), (0, 3), (3, 0)] {
            let s = check_snf(&IntMatrix::zeros(r, c));
            assert_eq!(s.rank(), 0);
        }
    }

    #[test]
    fn snf_needs_divisibility_fix() {
        // diag(2,3) is already diagonal but not in Smith form
        let s = check_snf(&IntMatrix::from_rows(&[[2, 0], [0, 3]]));
        assert_eq!(s.diagonal(), big(&[1, 6]));
    }

    #[test]
    fn cokernels() {
        assert_eq!(cokernel_invariants(&IntMatrix::from_rows(&[[2]])), FgAbGroup::cyclic(2));
        assert_eq!(cokernel_invariants(&IntMatrix::zeros(3, 0)), FgAbGroup::free(3));
        assert_eq!(cokernel_invariants(&IntMatrix::from_rows(&[[2, 0], [0, 3]])), FgAbGroup::cyclic(6));
    }

    #[test]
    fn solve_examples() {
        let m = IntMatrix::from_rows(&[[2]]);
        assert_eq!(solve(&m, &big(&[4])).unwrap(), Some(big(&[2])));
        assert_eq!(solve(&m, &big(&[3])).unwrap(), None);
        let m = IntMatrix::from_rows(&[[1, 2], [3, 4]]);
        assert_eq!(solve(&m, &big(&[1, 1])).unwrap(), Some(big(&[-1, 1])));
        assert!(matches!(solve(&m, &big(&[1])), Err(Error::Shape(_))));
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_basis(&IntMatrix::from_rows(&[[1]])).cols(), 0);
        assert_eq!(kernel_basis(&IntMatrix::from_rows(&[[0]])), IntMatrix::from_rows(&[[1]]));
        let k = kernel_basis(&IntMatrix::from_rows(&[[3, 2]]));
        assert_eq!(k.cols(), 1);
        let col = k.column(0);
        assert!(col == big(&[2, -3]) || col == big(&[-2, 3]), "{col:?}");
    }

    #[test]
    fn group_canonical_form() {
        let g = FgAbGroup::from_factors(1, &big(&[4, 1, 6, 0]));
        assert_eq!(g.free, 2);
        assert_eq!(g.torsion, big(&[2, 12]));
        assert!(g.is_canonical());
        assert_eq!(g.to_string(), "Z^2 + Z/2 + Z/12");
    }

    #[test]
    fn determinant_matches_small_cases() {
        assert_eq!(determinant(&IntMatrix::from_rows(&[[1, 2], [3, 4]])), BigInt::from(-2));
        assert_eq!(determinant(&IntMatrix::from_rows(&[[0, 1, 0], [1, 0, 0], [0, 0, 5]])), BigInt::from(-5));
    }

    #[test]
    fn mod_p_rank_and_kernel() {
        let m = IntMatrix::from_rows(&[[2, 4], [1, 2]]);
        assert_eq!(rank_mod_p(&m, 2), 1);
        assert_eq!(rank_mod_p(&m, 3), 1);
        let k = kernel_mod_p(&m, 3);
        assert_eq!(k.cols(), 1);
        let prod = m.mul(&k);
        assert!(prod.entries().iter().all(|x| x.mod_floor(&BigInt::from(3)).is_zero()));
        assert_eq!(rank_mod_p(&IntMatrix::from_rows(&[[2, 0], [0, 3]]), 2), 1);
    }
}

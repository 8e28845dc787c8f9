//! Exact scalars and sparse linear algebra.
//!
//! Two ground fields are supported behind one scalar type: the prime field
//! `F_p` (default `p = 32003`, large enough to avoid accidental collisions in
//! small examples while fitting comfortably in machine words) and
//! arbitrary-precision rationals for characteristic-0 cross-checks.  All
//! arithmetic is exact; there is deliberately no floating-point anywhere.
//!
//! The matrix type is sparse and row-oriented.  Rank and kernel are computed
//! by Gaussian elimination with a Markowitz-style pivot choice (minimize
//! fill-in estimate `(row_nnz − 1)·(col_nnz − 1)`), which keeps the
//! enumerative cohomology computations elsewhere in the crate tractable.
//!
//! [`ComplexWindow::cohomology`] computes `dim H^d = dim ker d^d − rank
//! d^{d−1}` per degree of a finite window, refusing to proceed when the
//! composite of consecutive differentials is nonzero, and flagging the window
//! edges as boundary-unreliable (a kernel at the top edge and an image at the
//! bottom edge cannot be certified from inside the window).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Errors produced by scalar construction and linear algebra.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LinalgError {
    /// The requested prime-field characteristic is not a prime in range.
    #[error("characteristic {0} is not a supported prime (need a prime 2 ≤ p < 2^31)")]
    NotPrime(u64),
    /// Matrix shapes do not allow the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// The composite of two consecutive differentials is nonzero.
    #[error("d∘d ≠ 0 between degrees {degree} and {degree_plus_two}: entry ({row},{col}) = {value}")]
    DifferentialSquareNonzero {
        degree: i64,
        degree_plus_two: i64,
        row: usize,
        col: usize,
        value: String,
    },
    /// A degree required by the window is missing.
    #[error("window is missing data for degree {0}")]
    MissingDegree(i64),
}

// ---------------------------------------------------------------------------
// Fields and scalars
// ---------------------------------------------------------------------------

/// A choice of exact ground field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldSpec {
    /// The prime field `F_p`.
    Prime(u64),
    /// Arbitrary-precision rational numbers.
    Rationals,
}

/// The default prime characteristic used when nothing else is requested.
pub const DEFAULT_PRIME: u64 = 32003;

impl FieldSpec {
    /// A validated prime field; rejects non-primes and primes ≥ 2^31.
    pub fn prime(p: u64) -> Result<FieldSpec, LinalgError> {
        if !(2..(1 << 31)).contains(&p) || !is_prime(p) {
            return Err(LinalgError::NotPrime(p));
        }
        Ok(FieldSpec::Prime(p))
    }

    /// The default field `F_32003`.
    pub fn default_prime() -> FieldSpec {
        FieldSpec::Prime(DEFAULT_PRIME)
    }

    /// The additive unit of the field.
    pub fn zero(&self) -> Scalar {
        match self {
            FieldSpec::Prime(p) => Scalar::Fp { v: 0, p: *p },
            FieldSpec::Rationals => Scalar::Rat(BigRational::zero()),
        }
    }

    /// The multiplicative unit of the field.
    pub fn one(&self) -> Scalar {
        self.from_i64(1)
    }

    /// The canonical image of an integer.
    pub fn from_i64(&self, n: i64) -> Scalar {
        match self {
            FieldSpec::Prime(p) => {
                let r = n.rem_euclid(*p as i64) as u64;
                Scalar::Fp { v: r, p: *p }
            }
            FieldSpec::Rationals => Scalar::Rat(BigRational::from(BigInt::from(n))),
        }
    }

    /// The fraction `num/den`; `den` must be invertible in the field.
    pub fn from_ratio(&self, num: i64, den: i64) -> Scalar {
        assert!(den != 0, "zero denominator");
        let d = self.from_i64(den);
        assert!(!d.is_zero(), "denominator {den} vanishes in {self:?}");
        self.from_i64(num).mul(&d.inv())
    }

    /// The characteristic of the field (0 for rationals).
    pub fn characteristic(&self) -> u64 {
        match self {
            FieldSpec::Prime(p) => *p,
            FieldSpec::Rationals => 0,
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Prime(p) => write!(f, "F_{p}"),
            FieldSpec::Rationals => write!(f, "Q"),
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An exact field element.  Elements of distinct fields never mix; combining
/// them is an internal logic error and panics.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    /// An element of `F_p`, stored as its canonical representative in `0..p`.
    Fp { v: u64, p: u64 },
    /// A rational number in lowest terms.
    Rat(BigRational),
}

impl Scalar {
    /// The field this element belongs to.
    pub fn field(&self) -> FieldSpec {
        match self {
            Scalar::Fp { p, .. } => FieldSpec::Prime(*p),
            Scalar::Rat(_) => FieldSpec::Rationals,
        }
    }

    /// Is this the additive unit?
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Fp { v, .. } => *v == 0,
            Scalar::Rat(r) => r.is_zero(),
        }
    }

    /// Is this the multiplicative unit?
    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Fp { v, .. } => *v == 1,
            Scalar::Rat(r) => r.is_one(),
        }
    }

    /// Addition.
    pub fn add(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Fp { v: a, p }, Scalar::Fp { v: b, p: q }) => {
                assert_eq!(p, q, "mixed prime fields");
                Scalar::Fp { v: (a + b) % p, p: *p }
            }
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            _ => panic!("mixed scalar kinds"),
        }
    }

    /// Additive inverse.
    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Fp { v, p } => Scalar::Fp { v: if *v == 0 { 0 } else { p - v }, p: *p },
            Scalar::Rat(r) => Scalar::Rat(-r),
        }
    }

    /// Subtraction.
    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    /// Multiplication.
    pub fn mul(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Fp { v: a, p }, Scalar::Fp { v: b, p: q }) => {
                assert_eq!(p, q, "mixed prime fields");
                let prod = (*a as u128 * *b as u128 % *p as u128) as u64;
                Scalar::Fp { v: prod, p: *p }
            }
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a * b),
            _ => panic!("mixed scalar kinds"),
        }
    }

    /// Multiplicative inverse; panics on zero (callers must check).
    pub fn inv(&self) -> Scalar {
        match self {
            Scalar::Fp { v, p } => {
                assert!(*v != 0, "inverse of zero");
                // Fermat: v^(p-2) mod p.
                let mut base = *v as u128;
                let mut exp = p - 2;
                let m = *p as u128;
                let mut acc: u128 = 1;
                while exp > 0 {
                    if exp & 1 == 1 {
                        acc = acc * base % m;
                    }
                    base = base * base % m;
                    exp >>= 1;
                }
                Scalar::Fp { v: acc as u64, p: *p }
            }
            Scalar::Rat(r) => {
                assert!(!r.is_zero(), "inverse of zero");
                Scalar::Rat(r.recip())
            }
        }
    }

    /// `self * (-1)^sign_exponent`.
    pub fn with_sign(&self, sign_exponent: i64) -> Scalar {
        if sign_exponent.rem_euclid(2) == 0 {
            self.clone()
        } else {
            self.neg()
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Fp { v, .. } => write!(f, "{v}"),
            Scalar::Rat(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else if r.is_negative() {
                    write!(f, "-{}/{}", r.numer().magnitude(), r.denom())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Sparse matrices
// ---------------------------------------------------------------------------

/// A sparse matrix over a fixed field, row-oriented.  Rows index the target
/// basis and columns the source basis, so the matrix of a linear map sends
/// column vectors to column vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    /// Per row: strictly increasing column indices with nonzero entries.
    data: Vec<BTreeMap<usize, Scalar>>,
}

impl SparseMatrix {
    /// The zero matrix of the given shape.
    pub fn zero(field: FieldSpec, rows: usize, cols: usize) -> SparseMatrix {
        SparseMatrix { field, rows, cols, data: vec![BTreeMap::new(); rows] }
    }

    /// The identity matrix.
    pub fn identity(field: FieldSpec, n: usize) -> SparseMatrix {
        let mut m = SparseMatrix::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The underlying field.
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Overwrite one entry (removing it when zero).
    pub fn set(&mut self, row: usize, col: usize, value: Scalar) {
        assert!(row < self.rows && col < self.cols, "index out of range");
        debug_assert_eq!(value.field(), self.field, "scalar from wrong field");
        if value.is_zero() {
            self.data[row].remove(&col);
        } else {
            self.data[row].insert(col, value);
        }
    }

    /// Add `value` into one entry.
    pub fn add_to(&mut self, row: usize, col: usize, value: Scalar) {
        assert!(row < self.rows && col < self.cols, "index out of range");
        if value.is_zero() {
            return;
        }
        let cur = self.data[row].get(&col).cloned().unwrap_or_else(|| self.field.zero());
        self.set(row, col, cur.add(&value));
    }

    /// Read one entry (zero when absent).
    pub fn get(&self, row: usize, col: usize) -> Scalar {
        self.data[row].get(&col).cloned().unwrap_or_else(|| self.field.zero())
    }

    /// Iterate over nonzero entries as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Scalar)> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, v)))
    }

    /// Number of structurally nonzero entries.
    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    /// Is every entry zero?
    pub fn is_zero(&self) -> bool {
        self.nnz() == 0
    }

    /// Matrix product `self · other` (as linear maps: apply `other` first).
    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} · {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        assert_eq!(self.field, other.field, "mixed fields");
        let mut out = SparseMatrix::zero(self.field, self.rows, other.cols);
        for (r, row) in self.data.iter().enumerate() {
            for (k, a) in row {
                for (c, b) in &other.data[*k] {
                    out.add_to(r, *c, a.mul(b));
                }
            }
        }
        Ok(out)
    }

    /// Apply to a sparse column vector given as a map `index → value`.
    pub fn apply(&self, v: &BTreeMap<usize, Scalar>) -> BTreeMap<usize, Scalar> {
        let mut out: BTreeMap<usize, Scalar> = BTreeMap::new();
        for (r, row) in self.data.iter().enumerate() {
            let mut acc = self.field.zero();
            for (c, a) in row {
                if let Some(x) = v.get(c) {
                    acc = acc.add(&a.mul(x));
                }
            }
            if !acc.is_zero() {
                out.insert(r, acc);
            }
        }
        out
    }

    /// The exact rank, by sparse column reduction: each column is reduced
    /// from its bottom-most nonzero row upward against previously finished
    /// columns, and every distinct final low row contributes one pivot.
    /// Unlike [`SparseMatrix::eliminate`] this never rescans the whole
    /// matrix, so it stays usable at tens of thousands of columns.
    pub fn rank(&self) -> usize {
        let mut cols: Vec<Vec<(usize, Scalar)>> = vec![Vec::new(); self.cols];
        for (r, row) in self.data.iter().enumerate() {
            for (c, v) in row {
                cols[*c].push((r, v.clone()));
            }
        }
        let mut owner_of_low: Vec<Option<usize>> = vec![None; self.rows];
        let mut reduced: Vec<Vec<(usize, Scalar)>> = Vec::new();
        let mut rank = 0;
        for mut col in cols {
            while let Some((low, low_val)) = col.last().cloned() {
                match owner_of_low[low] {
                    None => {
                        // Normalize the low entry to 1 and keep the column.
                        let inv = low_val.inv();
                        for (_, v) in &mut col {
                            *v = v.mul(&inv);
                        }
                        owner_of_low[low] = Some(reduced.len());
                        reduced.push(col);
                        rank += 1;
                        break;
                    }
                    Some(idx) => {
                        col = sub_scaled(&col, &reduced[idx], &low_val);
                    }
                }
            }
        }
        rank
    }

    /// A basis of the kernel, each vector a sparse map `col → value`.
    pub fn kernel_basis(&self) -> Vec<BTreeMap<usize, Scalar>> {
        let ech = self.eliminate();
        // Reduced row echelon: eliminate above each pivot.
        let mut rows = ech.rows;
        let pivots = ech.pivots; // (row index in `rows`, pivot col), rows sorted
        for i in (0..pivots.len()).rev() {
            let (ri, pc) = pivots[i];
            let pivot_row = rows[ri].clone();
            for &(rj, _) in &pivots[..i] {
                if let Some(c) = rows[rj].get(&pc).cloned() {
                    let row_j = &mut rows[rj];
                    for (cc, vv) in &pivot_row {
                        let cur = row_j.get(cc).cloned().unwrap_or_else(|| self.field.zero());
                        let nv = cur.sub(&c.mul(vv));
                        if nv.is_zero() {
                            row_j.remove(cc);
                        } else {
                            row_j.insert(*cc, nv);
                        }
                    }
                }
            }
        }
        let pivot_cols: BTreeMap<usize, usize> =
            pivots.iter().map(|(ri, pc)| (*pc, *ri)).collect();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_cols.contains_key(&free) {
                continue;
            }
            let mut v: BTreeMap<usize, Scalar> = BTreeMap::new();
            v.insert(free, self.field.one());
            for (pc, ri) in &pivot_cols {
                if let Some(coef) = rows[*ri].get(&free) {
                    // pivot entry is 1, so x_pc = −coef · x_free.
                    v.insert(*pc, coef.neg());
                }
            }
            basis.push(v);
        }
        basis
    }

    /// Gaussian elimination with Markowitz-style pivoting.  Returns the
    /// echelon rows (pivot entries normalized to 1) and the pivot positions.
    fn eliminate(&self) -> Echelon {
        let mut active: Vec<BTreeMap<usize, Scalar>> =
            self.data.iter().filter(|r| !r.is_empty()).cloned().collect();
        let mut done: Vec<BTreeMap<usize, Scalar>> = Vec::new();
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut used_cols: Vec<bool> = vec![false; self.cols];

        while !active.is_empty() {
            // Column occupancy among active rows, for the fill-in estimate.
            let mut col_count: BTreeMap<usize, usize> = BTreeMap::new();
            for row in &active {
                for c in row.keys() {
                    *col_count.entry(*c).or_insert(0) += 1;
                }
            }
            // Markowitz: minimize (nnz(row)−1)·(nnz(col)−1).
            let mut best: Option<(usize, usize, usize)> = None; // (score, row, col)
            for (ri, row) in active.iter().enumerate() {
                for c in row.keys() {
                    debug_assert!(!used_cols[*c], "used pivot column still active");
                    let score = (row.len() - 1) * (col_count[c] - 1);
                    if best.is_none_or(|(s, _, _)| score < s) {
                        best = Some((score, ri, *c));
                    }
                }
            }
            let (_, ri, pc) = best.expect("nonempty active rows must yield a pivot");
            let mut pivot_row = active.swap_remove(ri);
            let inv = pivot_row[&pc].inv();
            for v in pivot_row.values_mut() {
                *v = v.mul(&inv);
            }
            for row in &mut active {
                if let Some(c) = row.get(&pc).cloned() {
                    for (cc, vv) in &pivot_row {
                        let cur = row.get(cc).cloned().unwrap_or_else(|| self.field.zero());
                        let nv = cur.sub(&c.mul(vv));
                        if nv.is_zero() {
                            row.remove(cc);
                        } else {
                            row.insert(*cc, nv);
                        }
                    }
                }
            }
            active.retain(|r| !r.is_empty());
            used_cols[pc] = true;
            pivots.push((done.len(), pc));
            done.push(pivot_row);
        }
        Echelon { rows: done, pivots }
    }
}

struct Echelon {
    rows: Vec<BTreeMap<usize, Scalar>>,
    /// `(index into rows, pivot column)` in elimination order.
    pivots: Vec<(usize, usize)>,
}

/// `a − factor·b` for sparse columns sorted by row index.
fn sub_scaled(
    a: &[(usize, Scalar)],
    b: &[(usize, Scalar)],
    factor: &Scalar,
) -> Vec<(usize, Scalar)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(ra, _)), Some(&(rb, _))) if ra == rb => {
                let v = a[i].1.sub(&factor.mul(&b[j].1));
                if !v.is_zero() {
                    out.push((ra, v));
                }
                i += 1;
                j += 1;
            }
            (Some(&(ra, _)), Some(&(rb, _))) if ra < rb => {
                out.push(a[i].clone());
                i += 1;
            }
            (None, Some(_)) | (Some(_), Some(_)) => {
                out.push((b[j].0, factor.mul(&b[j].1).neg()));
                j += 1;
            }
            (Some(_), None) => {
                out.push(a[i].clone());
                i += 1;
            }
            (None, None) => unreachable!("loop condition guarantees a side remains"),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Cohomology of a finite window
// ---------------------------------------------------------------------------

/// A finite window `[lo, hi]` of a cochain complex: dimensions per degree and
/// the differentials `d^d: C^d → C^{d+1}` for `lo ≤ d < hi`.
#[derive(Clone, Debug)]
pub struct ComplexWindow {
    pub lo: i64,
    pub hi: i64,
    pub dims: BTreeMap<i64, usize>,
    pub diffs: BTreeMap<i64, SparseMatrix>,
}

/// Cohomology data for one degree of a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeReport {
    /// Dimension of the degree-`d` piece.
    pub dim: usize,
    /// Rank of the outgoing differential `d^d` (0 at the top edge).
    pub rank_out: usize,
    /// Rank of the incoming differential `d^{d−1}` (0 at the bottom edge).
    pub rank_in: usize,
    /// `dim ker d^d − rank d^{d−1}`.
    pub h_dim: usize,
    /// True on window edges, where the kernel (top) or image (bottom) could
    /// change if the window were enlarged.
    pub boundary_unreliable: bool,
}

impl ComplexWindow {
    /// Validate shapes and `d∘d = 0`, then compute cohomology per degree.
    pub fn cohomology(&self) -> Result<BTreeMap<i64, DegreeReport>, LinalgError> {
        for d in self.lo..=self.hi {
            if !self.dims.contains_key(&d) {
                return Err(LinalgError::MissingDegree(d));
            }
        }
        for d in self.lo..self.hi {
            let m = self.diffs.get(&d).ok_or(LinalgError::MissingDegree(d))?;
            if m.cols() != self.dims[&d] || m.rows() != self.dims[&(d + 1)] {
                return Err(LinalgError::DimensionMismatch(format!(
                    "differential at degree {d} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    self.dims[&(d + 1)],
                    self.dims[&d]
                )));
            }
        }
        for d in self.lo..self.hi.saturating_sub(1) {
            let a = &self.diffs[&d];
            let b = &self.diffs[&(d + 1)];
            let sq = b.mul(a)?;
            let witness = sq.entries().next().map(|(r, c, v)| (r, c, v.to_string()));
            if let Some((r, c, v)) = witness {
                return Err(LinalgError::DifferentialSquareNonzero {
                    degree: d,
                    degree_plus_two: d + 2,
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
        let mut ranks: BTreeMap<i64, usize> = BTreeMap::new();
        for d in self.lo..self.hi {
            ranks.insert(d, self.diffs[&d].rank());
        }
        let mut out = BTreeMap::new();
        for d in self.lo..=self.hi {
            let dim = self.dims[&d];
            let rank_out = if d < self.hi { ranks[&d] } else { 0 };
            let rank_in = if d > self.lo { ranks[&(d - 1)] } else { 0 };
            let ker = dim - rank_out;
            assert!(
                ker >= rank_in,
                "image exceeds kernel at degree {d} despite d∘d = 0 check"
            );
            out.insert(
                d,
                DegreeReport {
                    dim,
                    rank_out,
                    rank_in,
                    h_dim: ker - rank_in,
                    boundary_unreliable: d == self.lo || d == self.hi,
                },
            );
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> FieldSpec {
        FieldSpec::prime(7).expect("7 is prime")
    }

    #[test]
    fn prime_validation() {
        assert!(FieldSpec::prime(32003).is_ok());
        assert_eq!(FieldSpec::prime(32001), Err(LinalgError::NotPrime(32001)));
        assert_eq!(FieldSpec::prime(1), Err(LinalgError::NotPrime(1)));
        assert!(FieldSpec::prime(2).is_ok());
    }

    #[test]
    fn field_axioms_spot_checks() {
        for field in [f7(), FieldSpec::default_prime(), FieldSpec::Rationals] {
            let a = field.from_i64(5);
            let b = field.from_i64(-3);
            assert!(a.add(&a.neg()).is_zero());
            assert!(a.mul(&a.inv()).is_one());
            assert_eq!(a.add(&b), field.from_i64(2));
            assert_eq!(a.mul(&b), field.from_i64(-15));
        }
        // 1/2 = 4 in F_7.
        assert_eq!(f7().from_ratio(1, 2), f7().from_i64(4));
        assert_eq!(FieldSpec::Rationals.from_ratio(2, 4).to_string(), "1/2");
        assert_eq!(FieldSpec::Rationals.from_ratio(-1, 2).to_string(), "-1/2");
    }

    fn from_dense(field: FieldSpec, rows: &[&[i64]]) -> SparseMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = SparseMatrix::zero(field, r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, field.from_i64(*v));
            }
        }
        m
    }

    #[test]
    fn rank_and_kernel_frozen() {
        // Row 3 = row 1 + row 2, so rank 2 and kernel dimension 2.
        let field = FieldSpec::default_prime();
        let m = from_dense(field, &[&[1, 2, 0, 1], &[0, 1, 1, -1], &[1, 3, 1, 0]]);
        assert_eq!(m.rank(), 2);
        let ker = m.kernel_basis();
        assert_eq!(ker.len(), 2);
        for v in &ker {
            assert!(m.apply(v).is_empty(), "kernel vector not annihilated");
        }
    }

    #[test]
    fn rank_depends_on_characteristic() {
        // det = 7: invertible over Q, rank drops to 2 over F_7.
        let rows: &[&[i64]] = &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 7]];
        assert_eq!(from_dense(FieldSpec::Rationals, rows).rank(), 3);
        assert_eq!(from_dense(f7(), rows).rank(), 2);
    }

    #[test]
    fn rational_elimination_with_denominators() {
        let field = FieldSpec::Rationals;
        let mut m = SparseMatrix::zero(field, 2, 2);
        m.set(0, 0, field.from_ratio(1, 2));
        m.set(0, 1, field.from_ratio(1, 3));
        m.set(1, 0, field.from_ratio(1, 4));
        m.set(1, 1, field.from_ratio(1, 6));
        // Second row is half the first: rank 1.
        assert_eq!(m.rank(), 1);
        let ker = m.kernel_basis();
        assert_eq!(ker.len(), 1);
        assert!(m.apply(&ker[0]).is_empty());
    }

    #[test]
    fn matrix_product_and_apply_agree() {
        let field = f7();
        let a = from_dense(field, &[&[1, 2], &[3, 4]]);
        let b = from_dense(field, &[&[0, 1], &[1, 1]]);
        let ab = a.mul(&b).expect("shapes match");
        let mut e1 = BTreeMap::new();
        e1.insert(1usize, field.one());
        assert_eq!(ab.apply(&e1), a.apply(&b.apply(&e1)));
    }

    #[test]
    fn cohomology_of_identity_complex_vanishes() {
        let field = FieldSpec::default_prime();
        let mut dims = BTreeMap::new();
        dims.insert(0, 1);
        dims.insert(1, 1);
        let mut diffs = BTreeMap::new();
        diffs.insert(0, SparseMatrix::identity(field, 1));
        let win = ComplexWindow { lo: 0, hi: 1, dims, diffs };
        let h = win.cohomology().expect("valid complex");
        assert_eq!(h[&0].h_dim, 0);
        assert_eq!(h[&1].h_dim, 0);
        assert!(h[&0].boundary_unreliable && h[&1].boundary_unreliable);
    }

    #[test]
    fn cohomology_interior_degree_reliable() {
        // 0 → k → 0 padded with zero outer terms: interior degree is exact.
        let field = FieldSpec::default_prime();
        let mut dims = BTreeMap::new();
        dims.insert(-1, 0);
        dims.insert(0, 2);
        dims.insert(1, 0);
        let mut diffs = BTreeMap::new();
        diffs.insert(-1, SparseMatrix::zero(field, 2, 0));
        diffs.insert(0, SparseMatrix::zero(field, 0, 2));
        let win = ComplexWindow { lo: -1, hi: 1, dims, diffs };
        let h = win.cohomology().expect("valid complex");
        assert_eq!(h[&0].h_dim, 2);
        assert!(!h[&0].boundary_unreliable);
    }

    #[test]
    fn differential_square_nonzero_is_rejected() {
        let field = FieldSpec::default_prime();
        let mut dims = BTreeMap::new();
        dims.insert(0, 1);
        dims.insert(1, 1);
        dims.insert(2, 1);
        let mut diffs = BTreeMap::new();
        diffs.insert(0, SparseMatrix::identity(field, 1));
        diffs.insert(1, SparseMatrix::identity(field, 1));
        let win = ComplexWindow { lo: 0, hi: 2, dims, diffs };
        match win.cohomology() {
            Err(LinalgError::DifferentialSquareNonzero { degree: 0, .. }) => {}
            other => panic!("expected square-nonzero error, got {other:?}"),
        }
    }

    #[test]
    fn markowitz_handles_wide_sparse_matrix() {
        // Block of disjoint 2-cycles: rank equals number of blocks.
        let field = FieldSpec::default_prime();
        let n = 50;
        let mut m = SparseMatrix::zero(field, n, 2 * n);
        for i in 0..n {
            m.set(i, 2 * i, field.one());
            m.set(i, 2 * i + 1, field.from_i64(-1));
        }
        assert_eq!(m.rank(), n);
        assert_eq!(m.kernel_basis().len(), n);
    }
}

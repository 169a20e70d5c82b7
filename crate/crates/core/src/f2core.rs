//! Sparse vectors and matrices over GF(2).
//!
//! Rows are stored as strictly increasing column lists. Elimination packs rows
//! into 64-bit words when the matrix has fewer than [`DENSE_COLUMN_LIMIT`]
//! columns and works on sorted lists otherwise. Both paths produce the unique
//! reduced row echelon form, so results never depend on the path taken.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Column count below which elimination runs on packed words.
pub const DENSE_COLUMN_LIMIT: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum F2Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("support is not strictly increasing")]
    Unsorted,
}

pub type F2Result<T> = Result<T, F2Error>;

fn check_support(len: usize, support: &[usize]) -> F2Result<()> {
    for w in support.windows(2) {
        if w[0] >= w[1] {
            return Err(F2Error::Unsorted);
        }
    }
    if let Some(&last) = support.last() {
        if last >= len {
            return Err(F2Error::IndexOutOfRange { index: last, len });
        }
    }
    Ok(())
}

/// Symmetric difference of two sorted lists.
pub(crate) fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Parity of the intersection of two sorted lists.
pub(crate) fn overlap_parity(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j, mut odd) = (0, 0, false);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                odd = !odd;
                i += 1;
                j += 1;
            }
        }
    }
    odd
}

/// Sorts indices and cancels repeated entries in pairs.
fn collapse_parity(mut idx: Vec<usize>) -> Vec<usize> {
    idx.sort_unstable();
    let mut out: Vec<usize> = Vec::with_capacity(idx.len());
    for i in idx {
        if out.last() == Some(&i) {
            out.pop();
        } else {
            out.push(i);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitVector {
    len: usize,
    support: Vec<usize>,
}

impl BitVector {
    pub fn new(len: usize, support: Vec<usize>) -> F2Result<Self> {
        check_support(len, &support)?;
        Ok(Self { len, support })
    }

    pub fn zeros(len: usize) -> Self {
        Self { len, support: Vec::new() }
    }

    pub fn ones(len: usize) -> Self {
        Self { len, support: (0..len).collect() }
    }

    pub fn unit(len: usize, i: usize) -> Self {
        assert!(i < len, "unit index {i} out of range for length {len}");
        Self { len, support: vec![i] }
    }

    /// Builds a vector from arbitrary indices; repeated indices cancel.
    ///
    /// # Panics
    /// If any index is `>= len`.
    pub fn from_indices(len: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let support = collapse_parity(idx.into_iter().collect());
        if let Some(&last) = support.last() {
            assert!(last < len, "index {last} out of range for length {len}");
        }
        Self { len, support }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Self {
            len: bits.len(),
            support: bits.iter().enumerate().filter(|(_, &b)| b & 1 == 1).map(|(i, _)| i).collect(),
        }
    }

    pub fn to_bits(&self) -> Vec<u8> {
        let mut bits = vec![0u8; self.len];
        for &i in &self.support {
            bits[i] = 1;
        }
        bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn into_support(self) -> Vec<usize> {
        self.support
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    /// # Panics
    /// On length mismatch.
    #[must_use]
    pub fn add(&self, other: &BitVector) -> BitVector {
        assert_eq!(self.len, other.len, "vector length mismatch");
        BitVector { len: self.len, support: xor_sorted(&self.support, &other.support) }
    }

    /// # Panics
    /// On length mismatch.
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "vector length mismatch");
        overlap_parity(&self.support, &other.support)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<usize>>,
}

/// Reduced row echelon form: `rows[i]` has its leading one at `pivots[i]` and
/// zeros in every other pivot column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    pub n_cols: usize,
    pub rows: Vec<Vec<usize>>,
    pub pivots: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Reduces `v` against the echelon rows; returns the residual support.
    pub fn reduce(&self, v: &[usize]) -> Vec<usize> {
        let mut cur = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if cur.binary_search(&p).is_ok() {
                cur = xor_sorted(&cur, row);
            }
        }
        cur
    }

    /// Free-column kernel basis, ordered by free column.
    pub fn kernel_rows(&self) -> Vec<Vec<usize>> {
        let mut is_pivot = vec![usize::MAX; self.n_cols];
        for (i, &p) in self.pivots.iter().enumerate() {
            is_pivot[p] = i;
        }
        // column -> pivot rows containing it
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); self.n_cols];
        for (i, row) in self.rows.iter().enumerate() {
            for &c in row {
                if is_pivot[c] == usize::MAX {
                    col_rows[c].push(i);
                }
            }
        }
        let mut out = Vec::with_capacity(self.n_cols - self.pivots.len());
        for f in 0..self.n_cols {
            if is_pivot[f] != usize::MAX {
                continue;
            }
            let mut v: Vec<usize> = col_rows[f].iter().map(|&i| self.pivots[i]).collect();
            v.push(f);
            v.sort_unstable();
            out.push(v);
        }
        out
    }
}

struct Packed {
    words: usize,
    data: Vec<u64>,
}

impl Packed {
    fn from_rows(n_cols: usize, rows: &[Vec<usize>]) -> Self {
        let words = n_cols.div_ceil(64).max(1);
        let mut data = vec![0u64; words * rows.len()];
        for (i, row) in rows.iter().enumerate() {
            for &c in row {
                data[i * words + c / 64] |= 1u64 << (c % 64);
            }
        }
        Self { words, data }
    }

    #[inline]
    fn bit(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.words + c / 64] >> (c % 64)) & 1 == 1
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let w = self.words;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (left, right) = self.data.split_at_mut(hi * w);
        left[lo * w..lo * w + w].swap_with_slice(&mut right[..w]);
    }

    fn xor_into(&mut self, dst: usize, src: usize) {
        let w = self.words;
        for k in 0..w {
            let s = self.data[src * w + k];
            self.data[dst * w + k] ^= s;
        }
    }

    fn row_support(&self, r: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for k in 0..self.words {
            let mut word = self.data[r * self.words + k];
            while word != 0 {
                let t = word.trailing_zeros() as usize;
                out.push(k * 64 + t);
                word &= word - 1;
            }
        }
        out
    }
}

fn echelon_dense(n_cols: usize, rows: &[Vec<usize>]) -> Echelon {
    let n_rows = rows.len();
    let mut p = Packed::from_rows(n_cols, rows);
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..n_cols {
        if rank == n_rows {
            break;
        }
        let Some(r) = (rank..n_rows).find(|&r| p.bit(r, c)) else { continue };
        p.swap_rows(rank, r);
        for other in 0..n_rows {
            if other != rank && p.bit(other, c) {
                p.xor_into(other, rank);
            }
        }
        pivots.push(c);
        rank += 1;
    }
    let rows = (0..rank).map(|r| p.row_support(r)).collect();
    Echelon { n_cols, rows, pivots }
}

fn echelon_sparse(n_cols: usize, rows: &[Vec<usize>]) -> Echelon {
    use std::collections::BTreeMap;
    let mut basis: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for row in rows {
        let mut cur = row.clone();
        let mut idx = 0;
        while idx < cur.len() {
            match basis.get(&cur[idx]) {
                Some(b) => cur = xor_sorted(&cur, b),
                None => idx += 1,
            }
        }
        if let Some(&lead) = cur.first() {
            basis.insert(lead, cur);
        }
    }
    // back-substitute from the rightmost pivot so every row is fully reduced
    let leads: Vec<usize> = basis.keys().copied().collect();
    for &lead in leads.iter().rev() {
        let row = basis[&lead].clone();
        let mut cur = row.clone();
        for &c in &row[1..] {
            if c != lead && basis.contains_key(&c) && cur.binary_search(&c).is_ok() {
                cur = xor_sorted(&cur, &basis[&c]);
            }
        }
        basis.insert(lead, cur);
    }
    let pivots = leads;
    let rows = pivots.iter().map(|p| basis[p].clone()).collect();
    Echelon { n_cols, rows, pivots }
}

impl BitMatrix {
    pub fn new(n_rows: usize, n_cols: usize, rows: Vec<Vec<usize>>) -> F2Result<Self> {
        if rows.len() != n_rows {
            return Err(F2Error::DimensionMismatch(format!("declared {n_rows} rows, got {}", rows.len())));
        }
        for r in &rows {
            check_support(n_cols, r)?;
        }
        Ok(Self { n_rows, n_cols, rows })
    }

    /// Rows from arbitrary index lists; repeated indices cancel.
    ///
    /// # Panics
    /// If any index is `>= n_cols`.
    pub fn from_index_rows<I, R>(n_cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = usize>,
    {
        let rows: Vec<Vec<usize>> =
            rows.into_iter().map(|r| BitVector::from_indices(n_cols, r).into_support()).collect();
        Self { n_rows: rows.len(), n_cols, rows }
    }

    pub fn from_vectors(n_cols: usize, vs: &[BitVector]) -> Self {
        let rows = vs
            .iter()
            .map(|v| {
                assert_eq!(v.len(), n_cols, "vector length mismatch");
                v.support().to_vec()
            })
            .collect::<Vec<_>>();
        Self { n_rows: rows.len(), n_cols, rows }
    }

    /// Dense 0/1 rows; every row must have the same length.
    ///
    /// # Panics
    /// On ragged input.
    pub fn from_dense<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let rows: Vec<Vec<usize>> = rows
            .iter()
            .map(|r| {
                let r = r.as_ref();
                assert_eq!(r.len(), n_cols, "ragged dense matrix");
                BitVector::from_bits(r).into_support()
            })
            .collect();
        Self { n_rows: rows.len(), n_cols, rows }
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0u8; self.n_cols];
                for &c in r {
                    d[c] = 1;
                }
                d
            })
            .collect()
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, rows: vec![Vec::new(); n_rows] }
    }

    pub fn identity(n: usize) -> Self {
        Self { n_rows: n, n_cols: n, rows: (0..n).map(|i| vec![i]).collect() }
    }

    /// Independent Bernoulli(`density`) entries.
    pub fn random<R: Rng + ?Sized>(n_rows: usize, n_cols: usize, density: f64, rng: &mut R) -> Self {
        let rows = (0..n_rows).map(|_| (0..n_cols).filter(|_| rng.gen_bool(density)).collect()).collect();
        Self { n_rows, n_cols, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn row_vector(&self, i: usize) -> BitVector {
        BitVector { len: self.n_cols, support: self.rows[i].clone() }
    }

    pub fn row_vectors(&self) -> Vec<BitVector> {
        (0..self.n_rows).map(|i| self.row_vector(i)).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.n_cols];
        for r in &self.rows {
            for &c in r {
                w[c] += 1;
            }
        }
        w
    }

    pub fn max_row_weight(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_column_weight(&self) -> usize {
        self.column_weights().into_iter().max().unwrap_or(0)
    }

    #[must_use]
    pub fn transpose(&self) -> BitMatrix {
        let mut rows = vec![Vec::new(); self.n_cols];
        for (i, r) in self.rows.iter().enumerate() {
            for &c in r {
                rows[c].push(i);
            }
        }
        BitMatrix { n_rows: self.n_cols, n_cols: self.n_rows, rows }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &BitMatrix) -> F2Result<BitMatrix> {
        if self.n_cols != other.n_rows {
            return Err(F2Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let words = other.n_cols.div_ceil(64).max(1);
        let mut acc = vec![0u64; words];
        let rows = self
            .rows
            .iter()
            .map(|r| {
                acc.iter_mut().for_each(|w| *w = 0);
                for &j in r {
                    for &c in &other.rows[j] {
                        acc[c / 64] ^= 1u64 << (c % 64);
                    }
                }
                let mut out = Vec::new();
                for (k, &word) in acc.iter().enumerate() {
                    let mut word = word;
                    while word != 0 {
                        out.push(k * 64 + word.trailing_zeros() as usize);
                        word &= word - 1;
                    }
                }
                out
            })
            .collect();
        Ok(BitMatrix { n_rows: self.n_rows, n_cols: other.n_cols, rows })
    }

    /// `self · v` for a column vector `v`.
    pub fn mul_vec(&self, v: &BitVector) -> F2Result<BitVector> {
        if v.len() != self.n_cols {
            return Err(F2Error::DimensionMismatch(format!(
                "matrix with {} columns times vector of length {}",
                self.n_cols,
                v.len()
            )));
        }
        let support = (0..self.n_rows).filter(|&i| overlap_parity(&self.rows[i], v.support())).collect();
        Ok(BitVector { len: self.n_rows, support })
    }

    pub fn add(&self, other: &BitMatrix) -> F2Result<BitMatrix> {
        if self.shape() != other.shape() {
            return Err(F2Error::DimensionMismatch(format!("sum of {:?} and {:?}", self.shape(), other.shape())));
        }
        let rows = self.rows.iter().zip(&other.rows).map(|(a, b)| xor_sorted(a, b)).collect();
        Ok(BitMatrix { n_rows: self.n_rows, n_cols: self.n_cols, rows })
    }

    /// Stacks blocks vertically; all blocks need the same column count.
    pub fn vstack(blocks: &[&BitMatrix]) -> F2Result<BitMatrix> {
        let n_cols = blocks.first().map_or(0, |b| b.n_cols);
        let mut rows = Vec::new();
        for b in blocks {
            if b.n_cols != n_cols {
                return Err(F2Error::DimensionMismatch(format!("vstack of {} and {} columns", n_cols, b.n_cols)));
            }
            rows.extend(b.rows.iter().cloned());
        }
        Ok(BitMatrix { n_rows: rows.len(), n_cols, rows })
    }

    /// Concatenates blocks horizontally; all blocks need the same row count.
    pub fn hstack(blocks: &[&BitMatrix]) -> F2Result<BitMatrix> {
        let n_rows = blocks.first().map_or(0, |b| b.n_rows);
        let mut rows = vec![Vec::new(); n_rows];
        let mut offset = 0;
        for b in blocks {
            if b.n_rows != n_rows {
                return Err(F2Error::DimensionMismatch(format!("hstack of {} and {} rows", n_rows, b.n_rows)));
            }
            for (dst, src) in rows.iter_mut().zip(&b.rows) {
                dst.extend(src.iter().map(|&c| c + offset));
            }
            offset += b.n_cols;
        }
        Ok(BitMatrix { n_rows, n_cols: offset, rows })
    }

    #[must_use]
    pub fn with_row(&self, v: &BitVector) -> BitMatrix {
        assert_eq!(v.len(), self.n_cols, "row length mismatch");
        let mut out = self.clone();
        out.rows.push(v.support().to_vec());
        out.n_rows += 1;
        out
    }

    #[must_use]
    pub fn select_rows(&self, idx: &[usize]) -> BitMatrix {
        let rows = idx.iter().map(|&i| self.rows[i].clone()).collect();
        BitMatrix { n_rows: idx.len(), n_cols: self.n_cols, rows }
    }

    /// Keeps columns `idx` (in that order) as the new columns `0..idx.len()`.
    #[must_use]
    pub fn select_columns(&self, idx: &[usize]) -> BitMatrix {
        let mut map = vec![usize::MAX; self.n_cols];
        for (new, &old) in idx.iter().enumerate() {
            map[old] = new;
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut v: Vec<usize> = r.iter().map(|&c| map[c]).filter(|&c| c != usize::MAX).collect();
                v.sort_unstable();
                v
            })
            .collect();
        BitMatrix { n_rows: self.n_rows, n_cols: idx.len(), rows }
    }

    /// Places old column `c` at `c + offset` in a matrix with `n_cols` columns.
    #[must_use]
    pub fn embed_columns(&self, n_cols: usize, offset: usize) -> BitMatrix {
        assert!(offset + self.n_cols <= n_cols, "embedding does not fit");
        let rows = self.rows.iter().map(|r| r.iter().map(|&c| c + offset).collect()).collect();
        BitMatrix { n_rows: self.n_rows, n_cols, rows }
    }

    pub fn echelon(&self) -> Echelon {
        if self.n_cols < DENSE_COLUMN_LIMIT {
            echelon_dense(self.n_cols, &self.rows)
        } else {
            echelon_sparse(self.n_cols, &self.rows)
        }
    }

    pub fn rank(&self) -> usize {
        self.echelon().rank()
    }

    /// Basis of `{x : self·x = 0}`, one row per free column.
    pub fn kernel_basis(&self) -> BitMatrix {
        let rows = self.echelon().kernel_rows();
        BitMatrix { n_rows: rows.len(), n_cols: self.n_cols, rows }
    }

    /// Nonzero rows of the reduced echelon form: an independent spanning set.
    pub fn rowspace_basis(&self) -> BitMatrix {
        let e = self.echelon();
        BitMatrix { n_rows: e.rows.len(), n_cols: self.n_cols, rows: e.rows }
    }

    /// Some `x` with `self·x = b`, or `None` when `b` is outside the column space.
    pub fn solve(&self, b: &BitVector) -> F2Result<Option<BitVector>> {
        if b.len() != self.n_rows {
            return Err(F2Error::DimensionMismatch(format!(
                "right-hand side of length {} for {} rows",
                b.len(),
                self.n_rows
            )));
        }
        let aug_col = self.n_cols;
        let rows: Vec<Vec<usize>> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut r = r.clone();
                if b.get(i) {
                    r.push(aug_col);
                }
                r
            })
            .collect();
        let e = if aug_col + 1 < DENSE_COLUMN_LIMIT {
            echelon_dense(aug_col + 1, &rows)
        } else {
            echelon_sparse(aug_col + 1, &rows)
        };
        if e.pivots.last() == Some(&aug_col) {
            return Ok(None);
        }
        let support: Vec<usize> =
            e.rows.iter().zip(&e.pivots).filter(|(r, _)| r.last() == Some(&aug_col)).map(|(_, &p)| p).collect();
        Ok(Some(BitVector { len: self.n_cols, support }))
    }

    /// Kronecker product; entry `(i·p + r, j·q + s)` is `a[i,j]·b[r,s]`.
    #[must_use]
    pub fn kron(&self, b: &BitMatrix) -> BitMatrix {
        let (p, q) = b.shape();
        let mut rows = Vec::with_capacity(self.n_rows * p);
        for ra in &self.rows {
            for rb in &b.rows {
                let mut row = Vec::with_capacity(ra.len() * rb.len());
                for &j in ra {
                    row.extend(rb.iter().map(|&s| j * q + s));
                }
                rows.push(row);
            }
        }
        BitMatrix { n_rows: self.n_rows * p, n_cols: self.n_cols * q, rows }
    }

    /// Whether `v` is a combination of the rows of `self`.
    pub fn in_rowspace(&self, v: &BitVector) -> F2Result<bool> {
        if v.len() != self.n_cols {
            return Err(F2Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.n_cols
            )));
        }
        Ok(self.echelon().reduce(v.support()).is_empty())
    }
}

/// Row-space membership oracle reused across many queries.
pub struct RowSpace {
    echelon: Echelon,
}

impl RowSpace {
    pub fn new(m: &BitMatrix) -> Self {
        Self { echelon: m.echelon() }
    }

    pub fn dim(&self) -> usize {
        self.echelon.rank()
    }

    pub fn contains(&self, v: &[usize]) -> bool {
        self.echelon.reduce(v).is_empty()
    }

    pub fn reduce(&self, v: &[usize]) -> Vec<usize> {
        self.echelon.reduce(v)
    }
}

/// Growing basis of bit-packed vectors of a fixed length.
#[derive(Clone, Debug)]
pub struct IncrementalBasis {
    words: usize,
    /// Reduced vectors keyed by their lowest set bit.
    rows: Vec<(usize, Vec<u64>)>,
}

impl IncrementalBasis {
    pub fn new(len: usize) -> Self {
        Self { words: len.div_ceil(64), rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn pack(&self, support: &[usize]) -> Vec<u64> {
        let mut v = vec![0u64; self.words];
        support.iter().for_each(|&i| v[i / 64] ^= 1 << (i % 64));
        v
    }

    fn reduce_packed(&self, mut v: Vec<u64>) -> Vec<u64> {
        for (p, r) in &self.rows {
            if v[p / 64] >> (p % 64) & 1 == 1 {
                v.iter_mut().zip(r).for_each(|(a, b)| *a ^= b);
            }
        }
        v
    }

    pub fn contains(&self, support: &[usize]) -> bool {
        self.reduce_packed(self.pack(support)).iter().all(|&w| w == 0)
    }

    /// Adds `support`; returns whether the dimension grew.
    pub fn insert(&mut self, support: &[usize]) -> bool {
        let v = self.reduce_packed(self.pack(support));
        let Some(w) = v.iter().position(|&w| w != 0) else {
            return false;
        };
        let p = w * 64 + v[w].trailing_zeros() as usize;
        // keep rows fully reduced on each other's pivots
        for (_, r) in self.rows.iter_mut() {
            if r[p / 64] >> (p % 64) & 1 == 1 {
                r.iter_mut().zip(&v).for_each(|(a, b)| *a ^= b);
            }
        }
        self.rows.push((p, v));
        true
    }
}

/// Inverse of a square invertible matrix, or `None` when singular.
pub fn inverse(m: &BitMatrix) -> Option<BitMatrix> {
    let n = m.n_rows();
    if m.n_cols() != n {
        return None;
    }
    let aug = BitMatrix::hstack(&[m, &BitMatrix::identity(n)]).ok()?;
    let e = aug.echelon();
    if e.rank() < n || e.pivots[n - 1] >= n {
        return None;
    }
    let rows = e.rows.iter().map(|r| r.iter().filter(|&&c| c >= n).map(|&c| c - n).collect()).collect();
    Some(BitMatrix { n_rows: n, n_cols: n, rows })
}

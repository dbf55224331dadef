//! Exact linear algebra over the rationals.
//!
//! [`QMatrix`] is a small dense matrix used for automorphisms, Gram matrices
//! and tangent-space subspace arithmetic. [`SparseMatrix`] holds operator
//! matrices (column-major, one ordered map per column) and carries the rank
//! computations used for cohomology.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, Integer, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

#[derive(Clone, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl fmt::Debug for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self[(r, c)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Scalar;
    fn index(&self, (r, c): (usize, usize)) -> &Scalar {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Scalar {
        &mut self.data[r * self.cols + c]
    }
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch { expected: c, got: bad.len() });
        }
        Ok(Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(n_rows: usize, cols: &[Vec<Scalar>]) -> Self {
        let mut m = Self::zeros(n_rows, cols.len());
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                m[(r, c)] = v.clone();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Scalar] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Scalar> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
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

    pub fn mul(&self, other: &QMatrix) -> Result<QMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = &other[(k, c)];
                    if !b.is_zero() {
                        out[(r, c)] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(Scalar::zero(), |acc, (a, b)| acc + a * b))
            .collect())
    }

    pub fn scale(&self, s: &Scalar) -> QMatrix {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn sub(&self, other: &QMatrix) -> Result<QMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs(&self) -> Scalar {
        scalar::max_abs(&self.data)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == Self::identity(self.rows)
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead_row = 0;
        for c in 0..m.cols {
            if lead_row == m.rows {
                break;
            }
            let Some(p) = (lead_row..m.rows).find(|&r| !m[(r, c)].is_zero()) else { continue };
            if p != lead_row {
                for k in 0..m.cols {
                    m.data.swap(p * m.cols + k, lead_row * m.cols + k);
                }
            }
            let inv = m[(lead_row, c)].recip();
            for k in 0..m.cols {
                let v = &m[(lead_row, k)] * &inv;
                m[(lead_row, k)] = v;
            }
            for r in 0..m.rows {
                if r == lead_row || m[(r, c)].is_zero() {
                    continue;
                }
                let f = m[(r, c)].clone();
                for k in 0..m.cols {
                    let v = &m[(lead_row, k)] * &f;
                    if !v.is_zero() {
                        m[(r, k)] -= v;
                    }
                }
            }
            pivots.push(c);
            lead_row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space, one vector per free column.
    pub fn nullspace(&self) -> Vec<Vec<Scalar>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Scalar::zero(); self.cols];
                v[f] = Scalar::one();
                for (row, &p) in pivots.iter().enumerate() {
                    v[p] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Result<QMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, got: self.cols });
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug[(r, c)] = self[(r, c)].clone();
            }
            aug[(r, n + r)] = Scalar::one();
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        let mut inv = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv[(r, c)] = red[(r, n + c)].clone();
            }
        }
        Ok(inv)
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let mut s = SparseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                s.set(r, c, self[(r, c)].clone());
            }
        }
        s
    }
}

/// Canonical basis of the row span: the nonzero rows of the RREF.
pub fn canonical_basis(vectors: &[Vec<Scalar>], dim: usize) -> Vec<Vec<Scalar>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = QMatrix::from_rows(vectors.to_vec()).expect("rectangular input");
    debug_assert_eq!(m.cols(), dim);
    let (r, pivots) = m.rref();
    (0..pivots.len()).map(|i| r.row(i).to_vec()).collect()
}

pub fn span_dim(vectors: &[Vec<Scalar>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    QMatrix::from_rows(vectors.to_vec()).expect("rectangular input").rank()
}

/// Basis of the intersection of two subspaces given by spanning vectors.
///
/// Solves `sum a_i u_i = sum b_j w_j`; each null vector yields `sum a_i u_i`.
pub fn intersection(u: &[Vec<Scalar>], w: &[Vec<Scalar>], dim: usize) -> Vec<Vec<Scalar>> {
    if u.is_empty() || w.is_empty() {
        return Vec::new();
    }
    let mut cols: Vec<Vec<Scalar>> = u.to_vec();
    cols.extend(w.iter().map(|v| v.iter().map(|x| -x).collect::<Vec<_>>()));
    let system = QMatrix::from_columns(dim, &cols);
    let vecs: Vec<Vec<Scalar>> = system
        .nullspace()
        .into_iter()
        .map(|coef| {
            let mut out = vec![Scalar::zero(); dim];
            for (a, ui) in coef.iter().zip(u) {
                for (o, x) in out.iter_mut().zip(ui) {
                    *o += a * x;
                }
            }
            out
        })
        .collect();
    canonical_basis(&vecs, dim)
}

/// Sparse exact matrix stored column by column.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    columns: Vec<BTreeMap<usize, Scalar>>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, columns: vec![BTreeMap::new(); cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_columns(rows: usize, columns: Vec<BTreeMap<usize, Scalar>>) -> Self {
        let mut m = Self { rows, cols: columns.len(), columns };
        for col in &mut m.columns {
            col.retain(|_, v| !v.is_zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Scalar {
        self.columns[c].get(&r).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        if v.is_zero() {
            self.columns[c].remove(&r);
        } else {
            self.columns[c].insert(r, v);
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: &Scalar) {
        if v.is_zero() {
            return;
        }
        let col = &mut self.columns[c];
        let e = col.entry(r).or_insert_with(Scalar::zero);
        *e += v;
        if e.is_zero() {
            col.remove(&r);
        }
    }

    pub fn column(&self, c: usize) -> &BTreeMap<usize, Scalar> {
        &self.columns[c]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(BTreeMap::is_empty)
    }

    /// Entries as `(row, col, value)` in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Scalar)> {
        self.columns.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |(&r, v)| (r, c, v)))
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let columns = other
            .columns
            .iter()
            .map(|bcol| {
                let mut acc: BTreeMap<usize, Scalar> = BTreeMap::new();
                for (k, b) in bcol {
                    for (r, a) in &self.columns[*k] {
                        *acc.entry(*r).or_insert_with(Scalar::zero) += a * b;
                    }
                }
                acc
            })
            .collect();
        Ok(SparseMatrix::from_columns(self.rows, columns))
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        let mut out = vec![Scalar::zero(); self.rows];
        for (c, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (r, a) in &self.columns[c] {
                out[*r] += a * x;
            }
        }
        Ok(out)
    }

    pub fn linear_combination(&self, a: &Scalar, other: &SparseMatrix, b: &Scalar) -> Result<SparseMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, got: other.rows * other.cols });
        }
        let mut out = self.scale(a);
        for (r, c, v) in other.entries() {
            out.add_to(r, c, &(v * b));
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.linear_combination(&Scalar::one(), other, &-Scalar::one())
    }

    pub fn scale(&self, s: &Scalar) -> SparseMatrix {
        if s.is_zero() {
            return Self::zeros(self.rows, self.cols);
        }
        let columns = self.columns.iter().map(|col| col.iter().map(|(r, v)| (*r, v * s)).collect()).collect();
        Self { rows: self.rows, cols: self.cols, columns }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for (r, c, v) in self.entries() {
            t.set(c, r, v.clone());
        }
        t
    }

    pub fn max_abs(&self) -> Scalar {
        self.entries().map(|(_, _, v)| v.abs()).max().unwrap_or_else(Scalar::zero)
    }

    /// Position and value of the entry of largest magnitude (first in
    /// column-major order among ties).
    pub fn argmax_abs(&self) -> Option<(usize, usize, Scalar)> {
        let mut best: Option<(usize, usize, Scalar)> = None;
        for (r, c, v) in self.entries() {
            if best.as_ref().is_none_or(|(_, _, b)| v.abs() > *b) {
                best = Some((r, c, v.abs()));
            }
        }
        best
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn insert_block(&mut self, r0: usize, c0: usize, block: &SparseMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block out of bounds");
        for (r, c, v) in block.entries() {
            self.add_to(r0 + r, c0 + c, v);
        }
    }

    /// Kronecker product `self ⊗ other`, row index `r * other.rows + r'`.
    pub fn kron(&self, other: &SparseMatrix) -> SparseMatrix {
        let mut out = SparseMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for (r, c, v) in self.entries() {
            for (r2, c2, w) in other.entries() {
                out.set(r * other.rows + r2, c * other.cols + c2, v * w);
            }
        }
        out
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> SparseMatrix {
        let columns = (c0..c0 + cols)
            .map(|c| self.columns[c].range(r0..r0 + rows).map(|(r, v)| (r - r0, v.clone())).collect())
            .collect();
        SparseMatrix { rows, cols, columns }
    }

    pub fn to_dense(&self) -> QMatrix {
        let mut m = QMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v.clone();
        }
        m
    }

    fn row_maps(&self) -> Vec<BTreeMap<usize, Scalar>> {
        let mut rows = vec![BTreeMap::new(); self.rows];
        for (r, c, v) in self.entries() {
            rows[r].insert(c, v.clone());
        }
        rows
    }

    /// Rank by incremental Gaussian elimination over the rationals.
    pub fn rank(&self) -> usize {
        let mut pivots: BTreeMap<usize, BTreeMap<usize, Scalar>> = BTreeMap::new();
        for mut row in self.row_maps() {
            let mut cursor = 0;
            loop {
                let Some((&col, coef)) = row.range(cursor..).next() else { break };
                let coef = coef.clone();
                match pivots.get(&col) {
                    Some(prow) => {
                        // pivot rows are normalised to a leading 1
                        for (c, v) in prow {
                            let e = row.entry(*c).or_insert_with(Scalar::zero);
                            *e -= v * &coef;
                            if e.is_zero() {
                                row.remove(c);
                            }
                        }
                        cursor = col + 1;
                    }
                    None => {
                        let inv = coef.recip();
                        let normalised = row.range(col..).map(|(c, v)| (*c, v * &inv)).collect();
                        pivots.insert(col, normalised);
                        break;
                    }
                }
            }
        }
        pivots.len()
    }

    /// Rank by fraction-free elimination over the integers.
    ///
    /// Rows are cleared of denominators and reduced with integer row
    /// operations, dividing out the content after every step. Shares no code
    /// with [`SparseMatrix::rank`].
    pub fn rank_fraction_free(&self) -> usize {
        let mut pivots: BTreeMap<usize, BTreeMap<usize, BigInt>> = BTreeMap::new();
        for row in self.row_maps() {
            if row.is_empty() {
                continue;
            }
            let lcm = row.values().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            let mut irow: BTreeMap<usize, BigInt> =
                row.iter().map(|(c, v)| (*c, v.numer() * (&lcm / v.denom()))).collect();
            loop {
                let Some((&lead, _)) = irow.iter().find(|(c, _)| pivots.contains_key(c)) else {
                    break;
                };
                let prow = &pivots[&lead];
                let p = prow[&lead].clone();
                let a = irow[&lead].clone();
                let g = p.gcd(&a);
                let (pm, am) = (&p / &g, &a / &g);
                let mut next: BTreeMap<usize, BigInt> = BTreeMap::new();
                for (c, v) in &irow {
                    next.insert(*c, v * &pm);
                }
                for (c, v) in prow {
                    let e = next.entry(*c).or_insert_with(BigInt::zero);
                    *e -= v * &am;
                }
                next.retain(|_, v| !v.is_zero());
                let content = next.values().fold(BigInt::zero(), |acc, v| acc.gcd(v));
                if content > BigInt::one() {
                    for v in next.values_mut() {
                        *v /= &content;
                    }
                }
                irow = next;
            }
            if let Some((&lead, _)) = irow.iter().next() {
                pivots.insert(lead, irow);
            }
        }
        pivots.len()
    }

    /// Floating-point rank with partial pivoting and relative tolerance.
    pub fn rank_float(&self, tol: f64) -> usize {
        let (n, m) = (self.rows, self.cols);
        let mut a = vec![vec![0.0f64; m]; n];
        for (r, c, v) in self.entries() {
            a[r][c] = scalar::to_f64(v);
        }
        let scale = a.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
        let mut rank = 0;
        for c in 0..m {
            if rank == n {
                break;
            }
            let (p, best) = (rank..n).map(|r| (r, a[r][c].abs())).fold((rank, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= tol * scale {
                continue;
            }
            a.swap(rank, p);
            for r in rank + 1..n {
                let f = a[r][c] / a[rank][c];
                if f != 0.0 {
                    for k in c..m {
                        a[r][k] -= f * a[rank][k];
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// True if `v` lies in the column span.
    pub fn column_span_contains(&self, v: &[Scalar]) -> Result<bool> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, got: v.len() });
        }
        let mut ext = self.clone();
        ext.cols += 1;
        ext.columns.push(v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(r, x)| (r, x.clone())).collect());
        Ok(ext.rank() == self.rank())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    fn q(rows: &[&[i64]]) -> QMatrix {
        QMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn inverse_round_trip() {
        let a = q(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).unwrap().is_identity());
        assert_eq!(q(&[&[1, 2], &[2, 4]]).inverse(), Err(Error::Singular));
    }

    #[test]
    fn nullspace_of_functional() {
        let f = q(&[&[0, 0, 0, 0, 1]]);
        let ns = f.nullspace();
        assert_eq!(ns.len(), 4);
        for v in &ns {
            assert!(v[4].is_zero());
        }
    }

    #[test]
    fn intersection_of_planes() {
        // span{e1,e2} and span{e2,e3} meet in span{e2}
        let e = |i: usize| (0..3).map(|k| if k == i { int(1) } else { int(0) }).collect::<Vec<_>>();
        let inter = intersection(&[e(0), e(1)], &[e(1), e(2)], 3);
        assert_eq!(inter, vec![e(1)]);
    }

    #[test]
    fn ranks_agree_on_small_example() {
        let m = q(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1], &[0, 2, 2]]).to_sparse();
        assert_eq!(m.rank(), 2);
        assert_eq!(m.rank_fraction_free(), 2);
        assert_eq!(m.rank_float(1e-10), 2);
        assert_eq!(m.to_dense().rank(), 2);
    }

    #[test]
    fn fractional_entries_rank() {
        let mut m = SparseMatrix::zeros(2, 2);
        m.set(0, 0, ratio(1, 2));
        m.set(0, 1, ratio(1, 3));
        m.set(1, 0, ratio(3, 2));
        m.set(1, 1, int(1));
        assert_eq!(m.rank(), 1);
        assert_eq!(m.rank_fraction_free(), 1);
    }

    #[test]
    fn sparse_product_matches_dense() {
        let a = q(&[&[1, 0, 2], &[0, -1, 1]]);
        let b = q(&[&[1, 1], &[2, 0], &[0, 3]]);
        let dense = a.mul(&b).unwrap();
        let sparse = a.to_sparse().mul(&b.to_sparse()).unwrap();
        assert_eq!(sparse.to_dense(), dense);
    }

    #[test]
    fn kronecker_matches_dense_formula() {
        let a = q(&[&[1, 2], &[0, 3]]).to_sparse();
        let b = q(&[&[0, 1, 0], &[5, 0, -1]]).to_sparse();
        let k = a.kron(&b);
        assert_eq!((k.rows(), k.cols()), (4, 6));
        for r in 0..4 {
            for c in 0..6 {
                assert_eq!(k.get(r, c), a.get(r / 2, c / 3) * b.get(r % 2, c % 3));
            }
        }
    }

    #[test]
    fn span_membership() {
        let m = q(&[&[1, 0], &[0, 0], &[0, 1]]).to_sparse();
        assert!(m.column_span_contains(&[int(2), int(0), int(5)]).unwrap());
        assert!(!m.column_span_contains(&[int(0), int(1), int(0)]).unwrap());
    }
}

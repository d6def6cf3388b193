//! Dense integer matrices with arbitrary-precision entries.
//!
//! Everything here works over ℤ exactly: products, Hermite normal form,
//! integer kernels, and a small GF(2) layer for mod-2 arguments. Sizes stay
//! tiny (lattice ranks ≤ 12 in the built-in catalog), so no effort is spent
//! on sparsity or pivoting strategy beyond correctness.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Row-major integer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMat {
    pub fn new(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::new(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IntMat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        IntMat::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> IntMat {
        let mut t = IntMat::new(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matrix product");
        let mut out = IntMat::new(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in matrix-vector product");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && *self == IntMat::identity(self.rows)
    }

    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in 0..i {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    /// Canonical row-style Hermite normal form with zero rows dropped.
    ///
    /// Two generating sets span the same sublattice of ℤⁿ iff their HNFs agree,
    /// which is how sublattice equality is decided elsewhere.
    pub fn hermite_normal_form(&self) -> IntMat {
        let mut m: Vec<Vec<BigInt>> = (0..self.rows).map(|i| self.row(i).to_vec()).collect();
        let rows = self.rows;
        let cols = self.cols;
        let mut pivot_row = 0;
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        for col in 0..cols {
            if pivot_row == rows {
                break;
            }
            // euclidean elimination below pivot_row in this column
            loop {
                let mut best: Option<usize> = None;
                for r in pivot_row..rows {
                    if !m[r][col].is_zero() {
                        best = match best {
                            None => Some(r),
                            Some(b) if m[r][col].abs() < m[b][col].abs() => Some(r),
                            keep => keep,
                        };
                    }
                }
                let Some(b) = best else { break };
                m.swap(pivot_row, b);
                let mut done = true;
                for r in pivot_row + 1..rows {
                    if m[r][col].is_zero() {
                        continue;
                    }
                    let q = m[r][col].div_floor(&m[pivot_row][col]);
                    if !q.is_zero() {
                        for c in 0..cols {
                            let sub = &q * &m[pivot_row][c];
                            m[r][c] -= sub;
                        }
                    }
                    if !m[r][col].is_zero() {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
            if !m[pivot_row][col].is_zero() {
                if m[pivot_row][col].is_negative() {
                    for c in 0..cols {
                        let neg = -m[pivot_row][c].clone();
                        m[pivot_row][c] = neg;
                    }
                }
                pivots.push((pivot_row, col));
                pivot_row += 1;
            }
        }
        // reduce entries above each pivot into [0, pivot)
        for &(pr, pc) in pivots.iter() {
            for r in 0..pr {
                let q = m[r][pc].div_floor(&m[pr][pc]);
                if !q.is_zero() {
                    for c in 0..cols {
                        let sub = &q * &m[pr][c];
                        m[r][c] -= sub;
                    }
                }
            }
        }
        m.truncate(pivot_row);
        IntMat::from_rows(if m.is_empty() { vec![Vec::new()] } else { m })
    }

    /// Basis of the right kernel {x ∈ ℤᶜ : A·x = 0}, obtained by unimodular
    /// column reduction. Kernels of integer matrices are saturated, so the
    /// returned basis generates the full kernel sublattice.
    pub fn kernel_basis(&self) -> Vec<Vec<BigInt>> {
        let rows = self.rows;
        let cols = self.cols;
        let mut a: Vec<Vec<BigInt>> = (0..rows).map(|i| self.row(i).to_vec()).collect();
        let mut v: Vec<Vec<BigInt>> = (0..cols)
            .map(|j| (0..cols).map(|k| if j == k { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        // v[j] is the j-th column of the accumulated unimodular transform
        let mut used = 0usize;
        for r in 0..rows {
            if used == cols {
                break;
            }
            loop {
                let mut best: Option<usize> = None;
                for j in used..cols {
                    if !a[r][j].is_zero() {
                        best = match best {
                            None => Some(j),
                            Some(b) if a[r][j].abs() < a[r][b].abs() => Some(j),
                            keep => keep,
                        };
                    }
                }
                let Some(b) = best else { break };
                for row in a.iter_mut() {
                    row.swap(used, b);
                }
                v.swap(used, b);
                let mut done = true;
                for j in used + 1..cols {
                    if a[r][j].is_zero() {
                        continue;
                    }
                    let q = a[r][j].div_floor(&a[r][used]);
                    if !q.is_zero() {
                        for row in a.iter_mut() {
                            let sub = &q * &row[used];
                            row[j] -= sub;
                        }
                        for k in 0..cols {
                            let sub = &q * &v[used][k];
                            v[j][k] -= sub;
                        }
                    }
                    if !a[r][j].is_zero() {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
            if !a[r][used].is_zero() {
                used += 1;
            }
        }
        (used..cols).map(|j| v[j].clone()).collect()
    }

    /// Whether `v` lies in the sublattice generated by the rows.
    pub fn rowspan_contains(&self, v: &[BigInt]) -> bool {
        assert_eq!(v.len(), self.cols);
        let h = self.hermite_normal_form();
        let mut w = v.to_vec();
        let mut r = 0;
        for col in 0..self.cols {
            if r >= h.rows() {
                break;
            }
            if h[(r, col)].is_zero() {
                continue;
            }
            if !w[col].is_zero() {
                let (q, rem) = w[col].div_rem(&h[(r, col)]);
                if !rem.is_zero() {
                    return false;
                }
                for c in 0..self.cols {
                    let sub = &q * &h[(r, c)];
                    w[c] -= sub;
                }
            }
            r += 1;
        }
        w.iter().all(|x| x.is_zero())
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// `true` iff the rows of `a` and `b` generate the same sublattice of ℤⁿ.
pub fn same_rowspan(a: &IntMat, b: &IntMat) -> bool {
    a.hermite_normal_form() == b.hermite_normal_form()
}

/// GF(2) matrix, one bitmask per row. Supports at most 64 columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Mat {
    pub cols: usize,
    pub rows: Vec<u64>,
}

impl Gf2Mat {
    pub fn new(cols: usize) -> Self {
        assert!(cols <= 64);
        Gf2Mat { cols, rows: Vec::new() }
    }

    pub fn push_row(&mut self, bits: u64) {
        self.rows.push(bits & mask(self.cols));
    }

    pub fn from_int_mat_mod2(m: &IntMat) -> Self {
        let mut g = Gf2Mat::new(m.cols());
        for i in 0..m.rows() {
            let mut bits = 0u64;
            for j in 0..m.cols() {
                if m[(i, j)].is_odd() {
                    bits |= 1 << j;
                }
            }
            g.push_row(bits);
        }
        g
    }

    /// Reduced row echelon form; canonical per subspace.
    pub fn rref(&self) -> Gf2Mat {
        let mut rows = self.rows.clone();
        let mut out: Vec<u64> = Vec::new();
        for col in 0..self.cols {
            let bit = 1u64 << col;
            let Some(pos) = rows.iter().position(|r| r & bit != 0) else { continue };
            let pivot = rows.swap_remove(pos);
            for r in rows.iter_mut() {
                if *r & bit != 0 {
                    *r ^= pivot;
                }
            }
            for r in out.iter_mut() {
                if *r & bit != 0 {
                    *r ^= pivot;
                }
            }
            out.push(pivot);
        }
        Gf2Mat { cols: self.cols, rows: out }
    }

    pub fn rank(&self) -> usize {
        self.rref().rows.len()
    }

    /// Basis of {x : A·x = 0} over GF(2), vectors as bitmasks.
    pub fn kernel_basis(&self) -> Vec<u64> {
        let r = self.rref();
        let mut pivot_col_of_row: Vec<usize> = Vec::new();
        let mut is_pivot = vec![false; self.cols];
        for &row in &r.rows {
            let col = row.trailing_zeros() as usize;
            pivot_col_of_row.push(col);
            is_pivot[col] = true;
        }
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut x = 1u64 << free;
            for (ri, &row) in r.rows.iter().enumerate() {
                if row & (1 << free) != 0 {
                    x |= 1 << pivot_col_of_row[ri];
                }
            }
            basis.push(x);
        }
        basis
    }

    /// Row space equality (as subspaces of GF(2)ᶜ).
    pub fn same_rowspace(&self, other: &Gf2Mat) -> bool {
        assert_eq!(self.cols, other.cols);
        self.rref() == other.rref()
    }
}

fn mask(cols: usize) -> u64 {
    if cols == 64 {
        !0
    } else {
        (1u64 << cols) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<i64>]) -> IntMat {
        IntMat::from_i64_rows(rows)
    }

    #[test]
    fn hnf_canonical() {
        let a = m(&[vec![2, 4], vec![1, 3]]);
        let b = m(&[vec![1, 3], vec![0, 2]]);
        assert!(same_rowspan(&a, &b));
        assert_eq!(a.hermite_normal_form(), b.hermite_normal_form());
        let c = m(&[vec![1, 0], vec![0, 1]]);
        assert!(!same_rowspan(&a, &c));
    }

    #[test]
    fn kernel_of_projection() {
        let a = m(&[vec![1, 0, -1], vec![0, 1, -1]]);
        let k = a.kernel_basis();
        assert_eq!(k.len(), 1);
        let v = &k[0];
        assert_eq!(v[0], v[2]);
        assert_eq!(v[1], v[2]);
        assert_eq!(v[0].abs(), BigInt::from(1));
    }

    #[test]
    fn kernel_is_saturated() {
        // rows kill (2, -1); kernel must be generated by (1, 2), not (2, 4)
        let a = m(&[vec![2, -1]]);
        let k = a.kernel_basis();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0][0].abs(), BigInt::from(1));
    }

    #[test]
    fn rowspan_membership() {
        let a = m(&[vec![2, 0], vec![0, 3]]);
        assert!(a.rowspan_contains(&[BigInt::from(4), BigInt::from(-3)]));
        assert!(!a.rowspan_contains(&[BigInt::from(1), BigInt::from(0)]));
    }

    #[test]
    fn gf2_kernel_and_rowspace() {
        let mut g = Gf2Mat::new(3);
        g.push_row(0b011);
        g.push_row(0b110);
        let k = g.kernel_basis();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], 0b111);
        let mut h = Gf2Mat::new(3);
        h.push_row(0b110);
        h.push_row(0b101);
        assert!(g.same_rowspace(&h));
    }
}

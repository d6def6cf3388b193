//! Exact binomial machinery shared by the recursion formulas: the binomial
//! coefficient with the truncated convention, the telescoping integer
//! sequence behind the surgery sum rule, and the explicit inverse of the
//! triangular relation matrix.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::matrix::IntMat;

/// Binomial coefficient with binom(n, k) = 0 whenever k < 0 or n < 0.
///
/// The n < 0 branch is a convention the relation coefficients rely on
/// (binom(-1, 0) = 0), not the generalized binomial series.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// u_i = Σ_{k+2l=i} (-1)^l 2^k binom(k+l, k), evaluated from the definition.
///
/// Pascal's rule collapses it to u_{i+2} = 2u_{i+1} - u_i with u_0 = 1 and
/// u_1 = 2, hence u_i = i + 1; tests pin that identity.
pub fn u_sequence(i: u32) -> BigInt {
    let i = i as i64;
    let mut acc = BigInt::zero();
    for l in 0..=(i / 2) {
        let k = i - 2 * l;
        let term = BigInt::from(2).pow(k as u32) * binomial(k + l, k);
        if l % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Coefficient of the forward relation: binom(m + 2k, k) on the k-th term,
/// where 2m is the pairing of the class with the relative sphere.
pub fn forward_coefficient(m: i64, k: i64) -> BigInt {
    binomial(m + 2 * k, k)
}

/// Coefficient of the inverted relation:
/// (-1)^k (binom(m+k, m) + binom(m+k-1, m)), with binom(-1, 0) = 0.
pub fn reduction_coefficient(m: i64, k: i64) -> BigInt {
    let unsigned = binomial(m + k, m) + binomial(m + k - 1, m);
    if k % 2 == 0 {
        unsigned
    } else {
        -unsigned
    }
}

/// The K×K matrix M with M[i][j] = binom(m + 2(j-1), j-i) (1-indexed).
pub fn relation_matrix(m: i64, k: usize) -> IntMat {
    let mut out = IntMat::new(k, k);
    for i in 1..=k {
        for j in 1..=k {
            out[(i - 1, j - 1)] = binomial(m + 2 * (j as i64 - 1), j as i64 - i as i64);
        }
    }
    out
}

/// The claimed inverse: entries (-1)^{i+j} (binom(m+i+j-2, m+2i-2) + binom(m+i+j-3, m+2i-2)).
pub fn relation_matrix_inverse(m: i64, k: usize) -> IntMat {
    let mut out = IntMat::new(k, k);
    for i in 1..=k {
        for j in 1..=k {
            let (i64i, i64j) = (i as i64, j as i64);
            let unsigned = binomial(m + i64i + i64j - 2, m + 2 * i64i - 2)
                + binomial(m + i64i + i64j - 3, m + 2 * i64i - 2);
            out[(i - 1, j - 1)] = if (i + j) % 2 == 0 { unsigned } else { -unsigned };
        }
    }
    out
}

/// Multiply the relation matrix by its claimed inverse exactly and compare
/// with the identity.
pub fn verify_inverse_matrix(m: i64, k: usize) -> bool {
    assert!(k >= 1);
    relation_matrix(m, k).mul(&relation_matrix_inverse(m, k)).is_identity()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_conventions() {
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(0, 0), BigInt::from(1));
        assert_eq!(binomial(-1, 0), BigInt::from(0));
        assert_eq!(binomial(3, -1), BigInt::from(0));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        assert_eq!(binomial(24, 12), BigInt::from(2704156u64));
    }

    #[test]
    fn u_values() {
        assert_eq!(u_sequence(0), BigInt::from(1));
        assert_eq!(u_sequence(1), BigInt::from(2));
        assert_eq!(u_sequence(2), BigInt::from(3));
        for i in 0..=30u32 {
            assert_eq!(u_sequence(i), BigInt::from(i + 1), "u_{i}");
        }
        // second-order recurrence, exactly
        for i in 0..=28u32 {
            assert_eq!(u_sequence(i + 2), BigInt::from(2) * u_sequence(i + 1) - u_sequence(i));
        }
    }

    #[test]
    fn reduction_coefficients() {
        // k = 0 column collapses to 1 for every m
        for m in 0..6 {
            assert_eq!(reduction_coefficient(m, 0), BigInt::from(1));
        }
        assert_eq!(reduction_coefficient(0, 1), BigInt::from(-2));
        assert_eq!(forward_coefficient(1, 1), BigInt::from(3));
        assert_eq!(forward_coefficient(0, 0), BigInt::from(1));
    }

    #[test]
    fn small_inverse_matrices() {
        let m = relation_matrix(0, 2);
        assert_eq!(m[(0, 0)], BigInt::from(1));
        assert_eq!(m[(0, 1)], BigInt::from(2));
        assert_eq!(m[(1, 0)], BigInt::from(0));
        assert_eq!(m[(1, 1)], BigInt::from(1));
        let inv = relation_matrix_inverse(0, 2);
        assert_eq!(inv[(0, 1)], BigInt::from(-2));
        assert!(verify_inverse_matrix(0, 1));
        assert!(verify_inverse_matrix(0, 2));
    }

    #[test]
    fn surgery_coefficients_telescope() {
        // composing the surgery-relation coefficients 2^k with the inverted
        // relation reproduces the total weights 1, 2, 2, 2, ...
        for i in 0..=12i64 {
            let mut total = BigInt::zero();
            let mut l = 0;
            while 2 * l <= i {
                let k = i - 2 * l;
                total += BigInt::from(2).pow(k as u32) * reduction_coefficient(k, l);
                l += 1;
            }
            let expected = if i == 0 { BigInt::from(1) } else { BigInt::from(2) };
            assert_eq!(total, expected, "total coefficient at depth {i}");
            assert_eq!(
                u_sequence(i as u32)
                    - if i >= 2 { u_sequence(i as u32 - 2) } else { BigInt::zero() },
                expected
            );
        }
    }
}

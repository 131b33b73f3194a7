//! Exact linear solvers: fraction-free (Bareiss) elimination for integer
//! systems and plain Gaussian elimination over rationals for small ones.
//!
//! The fraction-free updates keep every intermediate entry an exact integer
//! minor, so no gcd reduction happens in the elimination hot loop; divisions
//! by the previous pivot are exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::GasketError;

/// Threshold above which elimination row updates run in parallel.
const PAR_THRESHOLD: usize = 64;

/// Division step of the fraction-free updates; always exact by the Bareiss
/// identity, checked under debug assertions.
#[inline]
fn exact_div(numerator: BigInt, divisor: &BigInt) -> BigInt {
    if cfg!(debug_assertions) {
        let (q, r) = num_integer::Integer::div_rem(&numerator, divisor);
        assert!(
            r.is_zero(),
            "fraction-free elimination produced a non-exact division"
        );
        q
    } else {
        numerator / divisor
    }
}

/// Solves `A x = b` for a square integer matrix by fraction-free forward
/// elimination followed by rational back substitution.
pub fn solve_integer_system(
    mut a: Vec<Vec<BigInt>>,
    rhs: &[BigInt],
) -> Result<Vec<BigRational>, GasketError> {
    let n = a.len();
    assert_eq!(rhs.len(), n);
    for (row, b) in a.iter_mut().zip(rhs) {
        assert_eq!(row.len(), n);
        row.push(b.clone());
    }
    let m = n + 1;
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            let swap = (k + 1..n)
                .find(|&r| !a[r][k].is_zero())
                .ok_or(GasketError::SingularSystem(k))?;
            a.swap(k, swap);
        }
        let pivot = a[k][k].clone();
        let pivot_row = a[k].clone();
        let update = |row: &mut Vec<BigInt>| {
            let lead = std::mem::replace(&mut row[k], BigInt::zero());
            for j in k + 1..m {
                let t = &pivot * &row[j] - &lead * &pivot_row[j];
                row[j] = exact_div(t, &prev);
            }
        };
        if n - k > PAR_THRESHOLD {
            a[k + 1..].par_iter_mut().for_each(update);
        } else {
            a[k + 1..].iter_mut().for_each(update);
        }
        prev = pivot;
    }
    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        if a[i][i].is_zero() {
            return Err(GasketError::SingularSystem(i));
        }
        let mut acc = BigRational::from(a[i][n].clone());
        for j in i + 1..n {
            if !a[i][j].is_zero() && !x[j].is_zero() {
                acc -= BigRational::from(a[i][j].clone()) * &x[j];
            }
        }
        x[i] = acc / BigRational::from(a[i][i].clone());
    }
    Ok(x)
}

/// Fraction-free Gauss-Jordan (Montante) inversion of an integer matrix
/// that needs no row pivoting (e.g. strictly diagonally dominant).
///
/// Returns per-row scaled inverse rows and per-row denominators:
/// `A^{-1}[i][j] = rows[i][j] / denoms[i]`.
pub fn invert_integer_matrix(
    a: Vec<Vec<BigInt>>,
) -> Result<(Vec<Vec<BigInt>>, Vec<BigInt>), GasketError> {
    let n = a.len();
    let mut m: Vec<Vec<BigInt>> = a
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            assert_eq!(row.len(), n);
            row.extend((0..n).map(|j| {
                if i == j {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }));
            row
        })
        .collect();
    let w = 2 * n;
    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = m[k][k].clone();
        if pivot.is_zero() {
            return Err(GasketError::SingularSystem(k));
        }
        let pivot_row = m[k].clone();
        let update = |(i, row): (usize, &mut Vec<BigInt>)| {
            if i == k {
                return;
            }
            let lead = std::mem::replace(&mut row[k], BigInt::zero());
            for j in 0..w {
                if j == k {
                    continue;
                }
                let t = &pivot * &row[j] - &lead * &pivot_row[j];
                row[j] = exact_div(t, &prev);
            }
        };
        if n > PAR_THRESHOLD {
            m.par_iter_mut().enumerate().for_each(update);
        } else {
            m.iter_mut().enumerate().for_each(update);
        }
        prev = pivot;
    }
    let mut denoms = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for (i, row) in m.into_iter().enumerate() {
        let mut row = row;
        let tail = row.split_off(n);
        denoms.push(row[i].clone());
        rows.push(tail);
    }
    Ok((rows, denoms))
}

/// Plain Gaussian elimination with partial pivoting over exact rationals;
/// intended for small dense systems.
pub fn solve_rational_system(
    mut a: Vec<Vec<BigRational>>,
    mut b: Vec<BigRational>,
) -> Result<Vec<BigRational>, GasketError> {
    let n = a.len();
    assert_eq!(b.len(), n);
    for k in 0..n {
        let pivot_row = (k..n)
            .max_by_key(|&r| a[r][k].abs())
            .filter(|&r| !a[r][k].is_zero())
            .ok_or(GasketError::SingularSystem(k))?;
        a.swap(k, pivot_row);
        b.swap(k, pivot_row);
        let pivot = a[k][k].clone();
        let lead_row = a[k].clone();
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let factor = &a[i][k] / &pivot;
            for (entry, lead) in a[i][k..].iter_mut().zip(&lead_row[k..]) {
                let t = &factor * lead;
                *entry -= t;
            }
            let t = &factor * &b[k];
            b[i] -= t;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        if a[i][i].is_zero() {
            return Err(GasketError::SingularSystem(i));
        }
        let mut acc = b[i].clone();
        for j in i + 1..n {
            acc -= &a[i][j] * &x[j];
        }
        x[i] = acc / &a[i][i];
    }
    Ok(x)
}

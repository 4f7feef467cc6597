use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Rational;
use crate::error::{Error, Result};

pub type RatMatrix = Vec<Vec<Rational>>;

fn width(m: &[Vec<Rational>]) -> Result<usize> {
    let Some(first) = m.first() else {
        return Err(Error::InvalidArgument("empty matrix".into()));
    };
    let w = first.len();
    for (row, r) in m.iter().enumerate() {
        if r.len() != w {
            return Err(Error::RaggedMatrix { row, found: r.len(), expected: w });
        }
    }
    Ok(w)
}

/// Scales a rational row by the lcm of its denominators.
fn integer_row(row: &[Rational]) -> Vec<BigInt> {
    let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
}

/// Fraction-free (Bareiss) row echelon form. Returns the pivot columns; the
/// first `pivots.len()` rows of `m` hold the echelon rows afterwards.
fn bareiss_echelon(m: &mut [Vec<BigInt>], cols: usize) -> Vec<usize> {
    let rows = m.len();
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let (top, rest) = m.split_at_mut(r + 1);
        let pivot_row = &top[r];
        let piv = pivot_row[c].clone();
        for row in rest.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for j in c + 1..cols {
                let v = (&piv * &row[j] - &lead * &pivot_row[j]) / &prev;
                row[j] = v;
            }
        }
        // rows above the new pivot row are untouched; rows below are now
        // zero in column c
        prev = piv;
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Exact rank by fraction-free elimination.
pub fn rank(m: &[Vec<Rational>]) -> Result<usize> {
    let cols = width(m)?;
    let mut ints: Vec<Vec<BigInt>> = m.iter().map(|r| integer_row(r)).collect();
    Ok(bareiss_echelon(&mut ints, cols).len())
}

/// A basis of `{ v : M v = 0 }` with `cols - rank` vectors.
pub fn kernel_basis(m: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let cols = width(m)?;
    let mut ints: Vec<Vec<BigInt>> = m.iter().map(|r| integer_row(r)).collect();
    let pivots = bareiss_echelon(&mut ints, cols);
    let echelon: Vec<Vec<Rational>> = ints[..pivots.len()]
        .iter()
        .map(|r| r.iter().cloned().map(Rational::from_integer).collect())
        .collect();

    let mut is_pivot = vec![false; cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::with_capacity(cols - pivots.len());
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Rational::zero(); cols];
        v[free] = Rational::one();
        for (r, &pc) in pivots.iter().enumerate().rev() {
            let row = &echelon[r];
            let s = (pc + 1..cols).fold(Rational::zero(), |acc, j| acc + &row[j] * &v[j]);
            v[pc] = -s / &row[pc];
        }
        basis.push(normalize_direction(v));
    }
    Ok(basis)
}

/// Rescales a nonzero vector to coprime integer entries with a positive
/// leading nonzero entry.
fn normalize_direction(v: Vec<Rational>) -> Vec<Rational> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    let mut g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v;
    }
    if ints.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        g = -g;
    }
    ints.into_iter().map(|x| Rational::from_integer(x / &g)).collect()
}

pub fn mat_vec(m: &[Vec<Rational>], v: &[Rational]) -> Vec<Rational> {
    m.iter().map(|row| super::dot(row, v)).collect()
}

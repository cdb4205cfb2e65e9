//! Binomials, convolutions and the size-weighted Shapley sum.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::rational::{signed, Rational};

pub type CountVector = Vec<BigUint>;

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// C(n, 0), ..., C(n, n).
pub fn binomial_row(n: usize) -> CountVector {
    let mut row = vec![BigUint::one()];
    for k in 1..=n {
        let next = &row[k - 1] * (n - k + 1) / k;
        row.push(next);
    }
    row
}

pub fn convolve(a: &[BigUint], b: &[BigUint]) -> CountVector {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Σ_s s!(n-1-s)!/n! · diff[s], the Shapley weight of coalitions of size s.
pub fn shapley_from_diffs(n: usize, diffs: &[BigInt]) -> Rational {
    assert!(n >= 1 && diffs.len() <= n);
    let mut total = BigInt::zero();
    for (s, d) in diffs.iter().enumerate() {
        if d.is_zero() {
            continue;
        }
        total += d * signed(&(factorial(s) * factorial(n - 1 - s)));
    }
    Rational::new(total, signed(&factorial(n)))
}

/// Shapley value from the k-subset counts of the two derived databases.
pub fn shapley_from_counts(n: usize, with_f: &[BigUint], without_f: &[BigUint]) -> Rational {
    let diffs: Vec<BigInt> = (0..n)
        .map(|k| {
            let a = with_f.get(k).map(signed).unwrap_or_default();
            let b = without_f.get(k).map(signed).unwrap_or_default();
            a - b
        })
        .collect();
    shapley_from_diffs(n, &diffs)
}

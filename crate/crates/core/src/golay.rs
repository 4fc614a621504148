//! Binary Golay spreading sequences and the block spreading matrix built from
//! a permutation set.
//!
//! For a permutation `π` the `2^m` sequences `f_π^(c) = Q_π + L_c`
//! (`c = 0..2^m-1`, `L_c(x) = Σ v_r x_r` with `c = Σ v_r 2^(r-1)`) form one
//! coset of the orthogonal subcode and, after modulation, an orthogonal
//! `M × M` block `Φ_k = diag(p_k) · H`. Stacking `L` blocks and scaling by
//! `1/√M` gives the spreading matrix.

use std::ops::{Add, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gf2::{quadratic_matrix, truth_table, BinarySequence, Permutation};
use crate::matrix::{Family, Provenance, SpreadingMatrix};

/// Largest `m` for which dense spreading matrices are built.
pub const MAX_DENSE_M: usize = 16;

/// Truth table of `Q_π(x) + L_c(x)`.
pub fn golay_sequence(pi: &Permutation, c: usize) -> Result<BinarySequence> {
    let m = pi.m();
    if m > 30 || c >> m != 0 {
        return Err(Error::OutOfRange(format!("c = {c} outside 0..2^{m}")));
    }
    truth_table(&quadratic_matrix(pi), c as u64, false)
}

/// Entry `(i, c)` of the Walsh-Hadamard matrix whose column `c` is `ψ(L_c)`.
#[inline]
pub fn hadamard_entry(i: usize, c: usize) -> i8 {
    if (i & c).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

/// `2^m × 2^m` Walsh-Hadamard matrix, column-major, column `c` = `ψ(L_c)`.
pub fn walsh_hadamard(m: usize) -> Vec<i8> {
    let n = 1usize << m;
    let mut h = Vec::with_capacity(n * n);
    for c in 0..n {
        for i in 0..n {
            h.push(hadamard_entry(i, c));
        }
    }
    h
}

/// `diag(ψ(q_π)) · H` as a column-major `±1` matrix.
pub fn block_matrix(pi: &Permutation) -> Result<Vec<i8>> {
    let m = pi.m();
    if m > MAX_DENSE_M {
        return Err(Error::OutOfRange(format!(
            "m = {m} exceeds dense limit {MAX_DENSE_M}"
        )));
    }
    let p = truth_table(&quadratic_matrix(pi), 0, false)?.modulate();
    let n = p.len();
    let mut out = Vec::with_capacity(n * n);
    for c in 0..n {
        out.extend(
            p.iter()
                .enumerate()
                .map(|(i, &pi)| pi * hadamard_entry(i, c)),
        );
    }
    Ok(out)
}

/// In-place unnormalized fast Walsh-Hadamard transform:
/// `y_c = Σ_i x_i (-1)^{popcount(i & c)}`.
pub fn fwht_in_place<T>(data: &mut [T])
where
    T: Copy + Add<Output = T> + Sub<Output = T>,
{
    let n = data.len();
    assert!(n.is_power_of_two(), "FWHT length must be a power of two");
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h <<= 1;
    }
}

fn check_set(gamma: &[Permutation]) -> Result<usize> {
    let first = gamma
        .first()
        .ok_or_else(|| Error::Config("permutation set is empty".into()))?;
    let m = first.m();
    let forms: Vec<_> = gamma.iter().map(quadratic_matrix).collect();
    for (k, p) in gamma.iter().enumerate() {
        if p.m() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: p.m(),
            });
        }
        if let Some(prev) = forms[..k].iter().position(|q| *q == forms[k]) {
            return Err(Error::DuplicatePermutation(prev, k));
        }
    }
    Ok(m)
}

/// `(1/√M)[Φ_1 … Φ_L]`, truncated to the first `n` columns (all `L·M` when
/// `n` is `None`).
pub fn spreading_matrix(gamma: &[Permutation], n: Option<usize>) -> Result<SpreadingMatrix> {
    let m = check_set(gamma)?;
    if m > MAX_DENSE_M {
        return Err(Error::OutOfRange(format!(
            "m = {m} exceeds dense limit {MAX_DENSE_M}"
        )));
    }
    let rows = 1usize << m;
    let full = rows * gamma.len();
    let cols = n.unwrap_or(full);
    if cols == 0 || cols > full {
        return Err(Error::OutOfRange(format!("N = {cols} outside 1..={full}")));
    }
    let scale = 1.0 / (rows as f64).sqrt();
    let mut data = Vec::with_capacity(rows * cols);
    'blocks: for pi in gamma {
        let p = truth_table(&quadratic_matrix(pi), 0, false)?.modulate();
        for c in 0..rows {
            if data.len() == rows * cols {
                break 'blocks;
            }
            data.extend(
                p.iter().enumerate().map(|(i, &s)| {
                    Complex64::new(f64::from(s * hadamard_entry(i, c)) * scale, 0.0)
                }),
            );
        }
    }
    SpreadingMatrix::from_columns(
        rows,
        cols,
        data,
        Family::Golay,
        Provenance::Golay {
            permutations: gamma.to_vec(),
        },
    )
}

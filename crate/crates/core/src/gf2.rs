//! Boolean functions over GF(2): permutation-defined quadratic forms, their
//! quadratic/symplectic matrices, and truth tables.
//!
//! Truth-table indexing is fixed: entry `i` evaluates the function at
//! `(x_1, ..., x_m)` where `x_1` is the least-significant bit of `i`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest supported `m`. Gf2Matrix rows are single `u64` masks.
pub const MAX_M: usize = 64;

/// An ordering `(π(1), ..., π(m))` of `{1..m}`.
///
/// Reversal yields the same quadratic form; the canonical representative has
/// `π(1) < π(m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    entries: Vec<usize>,
}

impl Permutation {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        let m = entries.len();
        if m < 2 {
            return Err(Error::InvalidPermutation(format!(
                "need at least 2 entries, got {m}"
            )));
        }
        if m > MAX_M {
            return Err(Error::InvalidPermutation(format!(
                "m = {m} exceeds the supported maximum {MAX_M}"
            )));
        }
        let mut seen = vec![false; m + 1];
        for &e in &entries {
            if e == 0 || e > m {
                return Err(Error::InvalidPermutation(format!(
                    "entry {e} outside 1..={m}"
                )));
            }
            if seen[e] {
                return Err(Error::InvalidPermutation(format!("entry {e} repeated")));
            }
            seen[e] = true;
        }
        Ok(Self { entries })
    }

    /// The identity ordering `(1, 2, ..., m)`.
    pub fn identity(m: usize) -> Result<Self> {
        Self::new((1..=m).collect())
    }

    pub fn m(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn is_canonical(&self) -> bool {
        self.entries[0] < self.entries[self.m() - 1]
    }

    pub fn canonical(&self) -> Self {
        if self.is_canonical() {
            self.clone()
        } else {
            let mut entries = self.entries.clone();
            entries.reverse();
            Self { entries }
        }
    }

    /// Uniform draw over the `m!/2` canonical permutations.
    ///
    /// A uniform shuffle followed by reversal when `π(1) > π(m)` maps exactly
    /// two shuffles onto each canonical representative, so the result is uniform.
    pub fn random_canonical<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Self> {
        let mut p = Self::identity(m)?;
        p.entries.shuffle(rng);
        if !p.is_canonical() {
            p.entries.reverse();
        }
        Ok(p)
    }

    /// Number of canonical permutations, `m!/2`, or `None` on overflow.
    pub fn canonical_count(m: usize) -> Option<u128> {
        (1..=m as u128)
            .try_fold(1u128, |acc, k| acc.checked_mul(k))
            .map(|f| f / 2)
    }

    /// All canonical permutations of `{1..m}` in lexicographic order.
    pub fn all_canonical(m: usize) -> Result<Vec<Self>> {
        if !(2..=10).contains(&m) {
            return Err(Error::OutOfRange(format!(
                "exhaustive enumeration supports 2 <= m <= 10, got {m}"
            )));
        }
        let mut out = Vec::new();
        let mut current: Vec<usize> = (1..=m).collect();
        loop {
            if current[0] < current[m - 1] {
                out.push(Self {
                    entries: current.clone(),
                });
            }
            if !next_lexicographic(&mut current) {
                break;
            }
        }
        Ok(out)
    }
}

fn next_lexicographic(v: &mut [usize]) -> bool {
    let n = v.len();
    let Some(i) = (0..n - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..n).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses the comma-separated text form, e.g. `"5,4,3,2,1"`. Surrounding
    /// parentheses and whitespace are tolerated.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let entries = trimmed
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidPermutation(format!("cannot parse {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

impl serde::Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Permutation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse the permutation text format: one permutation per line. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_permutation_list(text: &str) -> Result<Vec<Permutation>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(Permutation::from_str)
        .collect()
}

pub fn format_permutation_list(perms: &[Permutation]) -> String {
    let mut out = String::new();
    for p in perms {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out
}

/// Dense binary matrix with each row packed into a `u64` (bit `j` is column `j`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    bits: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if cols > 64 {
            return Err(Error::Shape(format!(
                "at most 64 columns supported, got {cols}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            bits: vec![0; rows],
        })
    }

    /// Builds a matrix from row-major 0/1 entries.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut mat = Self::zeros(rows.len(), cols)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Shape("ragged rows".into()));
            }
            for (j, &b) in row.iter().enumerate() {
                match b {
                    0 => {}
                    1 => mat.bits[i] |= 1 << j,
                    _ => return Err(Error::Shape(format!("entry {b} is not a bit"))),
                }
            }
        }
        Ok(mat)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row `i` as a bit mask.
    pub fn row_mask(&self, i: usize) -> u64 {
        self.bits[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(i < self.rows && j < self.cols);
        self.bits[i] >> j & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols);
        if value {
            self.bits[i] |= 1 << j;
        } else {
            self.bits[i] &= !(1 << j);
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&r| r == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self {
            rows: self.cols,
            cols: self.rows,
            bits: vec![0; self.cols],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.bits[j] |= 1 << i;
                }
            }
        }
        t
    }

    /// Entry-wise sum modulo 2.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn is_strictly_upper_triangular(&self) -> bool {
        self.rows == self.cols
            && self
                .bits
                .iter()
                .enumerate()
                .all(|(i, &r)| r & low_mask(i + 1) == 0)
    }

    /// Symmetric with zero diagonal.
    pub fn is_symplectic(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| !self.get(i, i))
            && *self == self.transpose()
    }

    /// Rank over GF(2) by Gaussian elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut rows = self.bits.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let bit = 1u64 << col;
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let p = rows[rank];
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && *row & bit != 0 {
                    *row ^= p;
                }
            }
            rank += 1;
        }
        rank
    }
}

fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Quadratic matrix of `Σ_{r=1}^{m-1} x_{π(r)} x_{π(r+1)}`: a 1 at
/// `(min, max)` of every adjacent pair (0-based in storage).
pub fn quadratic_matrix(pi: &Permutation) -> Gf2Matrix {
    let m = pi.m();
    let mut q = Gf2Matrix::zeros(m, m).expect("m <= 64 by construction");
    for pair in pi.entries().windows(2) {
        let (a, b) = (pair[0].min(pair[1]) - 1, pair[0].max(pair[1]) - 1);
        q.set(a, b, true);
    }
    q
}

/// `B = (Q1 + Q2) + (Q1 + Q2)^T` for the two permutations' quadratic forms.
pub fn symplectic_matrix(pi1: &Permutation, pi2: &Permutation) -> Result<Gf2Matrix> {
    if pi1.m() != pi2.m() {
        return Err(Error::DimensionMismatch {
            expected: pi1.m(),
            got: pi2.m(),
        });
    }
    let q = quadratic_matrix(pi1).add(&quadratic_matrix(pi2))?;
    q.add(&q.transpose())
}

/// GF(2) rank of the symplectic matrix of a permutation pair. Always even.
pub fn symplectic_rank(pi1: &Permutation, pi2: &Permutation) -> Result<usize> {
    Ok(symplectic_matrix(pi1, pi2)?.rank())
}

/// Truth table of length `2^m` packed into 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinarySequence {
    len: usize,
    words: Vec<u64>,
}

impl BinarySequence {
    pub fn zeros(m: usize) -> Self {
        let len = 1usize << m;
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if !bits.len().is_power_of_two() {
            return Err(Error::Shape(format!(
                "sequence length {} is not a power of two",
                bits.len()
            )));
        }
        let mut seq = Self::zeros(bits.len().trailing_zeros() as usize);
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => seq.words[i / 64] |= 1 << (i % 64),
                _ => return Err(Error::Shape(format!("entry {b} is not a bit"))),
            }
        }
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn m(&self) -> usize {
        self.len.trailing_zeros() as usize
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        Ok(Self {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// `ψ(a)`: `b_i = (-1)^{a_i}`.
    pub fn modulate(&self) -> Vec<i8> {
        (0..self.len)
            .map(|i| if self.get(i) { -1 } else { 1 })
            .collect()
    }

    /// `⟨ψ(a), ψ(b)⟩ = 2^m - 2·wt(a + b)`, computed on packed words.
    pub fn modulated_inner_product(&self, other: &Self) -> Result<i64> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        let dist: u64 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum();
        Ok(self.len as i64 - 2 * dist as i64)
    }
}

/// Truth table of `f(x) = x Q x^T + v·x^T + e` with `x_1` the least-significant
/// index bit. `v` is a bit mask with bit `r-1` holding `v_r`.
pub fn truth_table(q: &Gf2Matrix, v: u64, e: bool) -> Result<BinarySequence> {
    let m = q.rows();
    if q.cols() != m {
        return Err(Error::Shape(format!(
            "quadratic matrix must be square, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    if !q.is_strictly_upper_triangular() {
        return Err(Error::Shape(
            "quadratic matrix must be strictly upper triangular".into(),
        ));
    }
    if m >= usize::BITS as usize - 1 || m > 30 {
        return Err(Error::OutOfRange(format!(
            "m = {m} too large for a truth table"
        )));
    }
    if v & !low_mask(m) != 0 {
        return Err(Error::OutOfRange(format!(
            "linear mask {v:#b} has bits beyond m = {m}"
        )));
    }
    let mut seq = BinarySequence::zeros(m);
    for i in 0..seq.len {
        let x = i as u64;
        let mut acc = (v & x).count_ones() + e as u32;
        let mut rows = x;
        while rows != 0 {
            let r = rows.trailing_zeros() as usize;
            acc += (q.row_mask(r) & x).count_ones();
            rows &= rows - 1;
        }
        if acc & 1 == 1 {
            seq.words[i / 64] |= 1 << (i % 64);
        }
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn perm(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    /// Rank as the log2 of the size of the row space, found by enumerating
    /// every GF(2) combination of rows.
    fn brute_force_rank(mat: &Gf2Matrix) -> usize {
        let n = mat.rows();
        let mut span = std::collections::HashSet::new();
        for combo in 0u64..(1 << n) {
            let mut acc = 0u64;
            for r in 0..n {
                if combo >> r & 1 == 1 {
                    acc ^= mat.row_mask(r);
                }
            }
            span.insert(acc);
        }
        span.len().trailing_zeros() as usize
    }

    #[test]
    fn quadratic_matrix_table_one_example() {
        let q = quadratic_matrix(&perm("2,1,3"));
        assert!(q.get(0, 1));
        assert!(q.get(0, 2));
        assert_eq!(q.count_ones(), 2);
        assert!(q.is_strictly_upper_triangular());
    }

    #[test]
    fn quadratic_matrix_small_cases() {
        let q = quadratic_matrix(&perm("1,2"));
        assert!(q.get(0, 1));
        assert_eq!(q.count_ones(), 1);

        let q = quadratic_matrix(&perm("5,4,3,2,1"));
        for (a, b) in [(3, 4), (2, 3), (1, 2), (0, 1)] {
            assert!(q.get(a, b));
        }
        assert_eq!(q.count_ones(), 4);
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![1, 1, 2]).is_err());
        assert!(Permutation::new(vec![1, 4, 2]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1]).is_err());
        assert!("1,2,x".parse::<Permutation>().is_err());
    }

    #[test]
    fn reversal_gives_same_quadratic_form() {
        let p = perm("3,4,2,5,1");
        let r = perm("1,5,2,4,3");
        assert_eq!(quadratic_matrix(&p), quadratic_matrix(&r));
        assert_eq!(p.canonical(), r);
        assert!(r.is_canonical());
    }

    #[test]
    fn canonical_enumeration_counts() {
        for m in 2..=7 {
            let all = Permutation::all_canonical(m).unwrap();
            assert_eq!(all.len() as u128, Permutation::canonical_count(m).unwrap());
            let forms: std::collections::HashSet<_> = all.iter().map(quadratic_matrix).collect();
            assert_eq!(
                forms.len(),
                all.len(),
                "distinct canonical perms give distinct forms"
            );
        }
    }

    #[test]
    fn symplectic_rank_examples() {
        let a = perm("1,2,3");
        assert_eq!(symplectic_rank(&a, &a).unwrap(), 0);
        assert_eq!(symplectic_rank(&a, &perm("2,1,3")).unwrap(), 2);
        let b = symplectic_matrix(&a, &perm("2,1,3")).unwrap();
        assert!(b.is_symplectic());
        assert_eq!(brute_force_rank(&b), 2);
        assert!(symplectic_rank(&a, &perm("1,2")).is_err());
    }

    #[test]
    fn m3_all_distinct_pairs_have_rank_two() {
        let all = Permutation::all_canonical(3).unwrap();
        assert_eq!(all.len(), 3);
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(symplectic_rank(&all[i], &all[j]).unwrap(), 2);
            }
        }
    }

    #[test]
    fn elimination_rank_matches_brute_force_exhaustively() {
        for m in 2..=5 {
            let all = Permutation::all_canonical(m).unwrap();
            for a in &all {
                for b in &all {
                    let mat = symplectic_matrix(a, b).unwrap();
                    let r = mat.rank();
                    assert_eq!(r, brute_force_rank(&mat));
                    assert_eq!(r % 2, 0);
                    assert!(r <= m);
                    assert_eq!(r, symplectic_rank(b, a).unwrap());
                }
            }
        }
    }

    #[test]
    fn truth_table_examples() {
        let q = quadratic_matrix(&perm("2,1,3"));
        // v = (0,1,1) -> mask 0b110
        let f = truth_table(&q, 0b110, false).unwrap();
        assert_eq!(f.to_bits(), vec![0, 0, 1, 0, 1, 0, 0, 0]);

        let zero = Gf2Matrix::zeros(3, 3).unwrap();
        assert_eq!(truth_table(&zero, 0, false).unwrap().to_bits(), vec![0; 8]);
        assert_eq!(
            truth_table(&zero, 0b001, false).unwrap().to_bits(),
            vec![0, 1, 0, 1, 0, 1, 0, 1]
        );
        assert_eq!(truth_table(&zero, 0, true).unwrap().to_bits(), vec![1; 8]);
    }

    #[test]
    fn truth_table_rejects_bad_shapes() {
        let mut q = Gf2Matrix::zeros(3, 3).unwrap();
        q.set(1, 0, true);
        assert!(truth_table(&q, 0, false).is_err());
        assert!(truth_table(&Gf2Matrix::zeros(3, 2).unwrap(), 0, false).is_err());
        assert!(truth_table(&Gf2Matrix::zeros(3, 3).unwrap(), 0b1000, false).is_err());
    }

    /// Möbius transform: algebraic normal form coefficients of a truth table.
    fn anf(bits: &[u8]) -> Vec<u8> {
        let mut a = bits.to_vec();
        let n = a.len();
        let mut h = 1;
        while h < n {
            for i in 0..n {
                if i & h != 0 {
                    a[i] ^= a[i ^ h];
                }
            }
            h <<= 1;
        }
        a
    }

    #[test]
    fn linear_part_is_a_first_order_rm_codeword() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 2..=7 {
            for _ in 0..20 {
                let p = Permutation::random_canonical(m, &mut rng).unwrap();
                let q = quadratic_matrix(&p);
                let v = rng.random_range(0..1u64 << m);
                let e = rng.random_bool(0.5);
                let base = truth_table(&q, 0, false).unwrap();
                let diff = truth_table(&q, v, e).unwrap().xor(&base).unwrap();
                let coeffs = anf(&diff.to_bits());
                for (i, c) in coeffs.iter().enumerate() {
                    if *c == 1 {
                        assert!(i.count_ones() <= 1, "degree > 1 term at monomial {i:#b}");
                    }
                }
            }
        }
    }

    #[test]
    fn random_canonical_is_canonical_and_covers_m3() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..200 {
            let p = Permutation::random_canonical(3, &mut rng).unwrap();
            assert!(p.is_canonical());
            seen.insert(p);
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn permutation_text_format() {
        let text = "5,4,3,2,1\n\n# comment\n(3, 4, 2, 5, 1)\n";
        let perms = parse_permutation_list(text).unwrap();
        assert_eq!(perms.len(), 2);
        assert_eq!(format_permutation_list(&perms), "5,4,3,2,1\n3,4,2,5,1\n");
    }

    #[test]
    fn modulated_inner_product_matches_dense() {
        let a = BinarySequence::from_bits(&[0, 1, 1, 0, 1, 0, 0, 0]).unwrap();
        let b = BinarySequence::from_bits(&[1, 1, 0, 0, 1, 0, 1, 0]).unwrap();
        let dense: i64 = a
            .modulate()
            .iter()
            .zip(b.modulate())
            .map(|(x, y)| (*x as i64) * (y as i64))
            .sum();
        assert_eq!(a.modulated_inner_product(&b).unwrap(), dense);
    }
}

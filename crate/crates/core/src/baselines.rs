//! Comparison spreading matrices: Zadoff-Chu with all cyclic shifts, random
//! bipolar and random Gaussian.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Family, Provenance, SpreadingMatrix};
use crate::rng::substream;

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime closest to `n`; ties go to the smaller prime.
pub fn nearest_prime(n: usize) -> usize {
    if n <= 2 {
        return 2;
    }
    for delta in 0.. {
        if is_prime(n - delta) {
            return n - delta;
        }
        if is_prime(n + delta) {
            return n + delta;
        }
    }
    unreachable!()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZcConfig {
    /// Odd prime sequence length `M_zc`.
    pub length: usize,
    pub roots: Vec<usize>,
    /// Seed the roots were drawn with, if they were drawn.
    pub seed: Option<u64>,
}

impl ZcConfig {
    /// `count` distinct roots drawn uniformly from `1..length`.
    pub fn random(length: usize, count: usize, seed: u64) -> Result<Self> {
        if !is_prime(length) {
            return Err(Error::NotPrime(length));
        }
        if count == 0 || count > length - 1 {
            return Err(Error::OutOfRange(format!(
                "cannot draw {count} distinct roots from 1..{length}"
            )));
        }
        let mut rng = substream(seed, &[]);
        let roots = sample(&mut rng, length - 1, count)
            .into_iter()
            .map(|r| r + 1)
            .collect();
        Ok(Self {
            length,
            roots,
            seed: Some(seed),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.length) || self.length == 2 {
            return Err(Error::NotPrime(self.length));
        }
        if self.roots.is_empty() {
            return Err(Error::Config("at least one root required".into()));
        }
        for (k, &r) in self.roots.iter().enumerate() {
            if r == 0 || r >= self.length {
                return Err(Error::OutOfRange(format!(
                    "root {r} outside 1..{}",
                    self.length
                )));
            }
            if self.roots[..k].contains(&r) {
                return Err(Error::DuplicateRoot(r));
            }
        }
        Ok(())
    }
}

/// `s_q[n] = exp(-jπ q n(n+1)/M_zc)` for odd `M_zc`.
pub fn zc_sequence(root: usize, length: usize) -> Vec<Complex64> {
    (0..length)
        .map(|n| {
            // n(n+1) mod 2·M_zc keeps the phase argument small and exact.
            let k = (n * (n + 1)) % (2 * length);
            let k = (root * k) % (2 * length);
            Complex64::from_polar(1.0, -PI * k as f64 / length as f64)
        })
        .collect()
}

/// Columns `k·M_zc + d` hold root `k`'s sequence cyclically shifted by `d`,
/// scaled to unit norm.
pub fn zc_matrix(cfg: &ZcConfig) -> Result<SpreadingMatrix> {
    cfg.validate()?;
    let len = cfg.length;
    let scale = 1.0 / (len as f64).sqrt();
    let mut data = Vec::with_capacity(len * len * cfg.roots.len());
    for &q in &cfg.roots {
        let base = zc_sequence(q, len);
        for d in 0..len {
            data.extend((0..len).map(|n| base[(n + d) % len] * scale));
        }
    }
    SpreadingMatrix::from_columns(
        len,
        len * cfg.roots.len(),
        data,
        Family::Zc,
        Provenance::Zc {
            length: len,
            roots: cfg.roots.clone(),
        },
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomKind {
    Bipolar,
    Gaussian,
}

/// I.i.d. random spreading matrix, filled column by column from
/// `substream(seed, [])`.
///
/// Bipolar entries are `±1/√M`; Gaussian entries are real `N(0, 1/M)` drawn
/// with `rand_distr::StandardNormal` (ziggurat, platform independent).
/// Gaussian columns are not renormalized.
pub fn random_matrix(kind: RandomKind, m: usize, n: usize, seed: u64) -> Result<SpreadingMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::OutOfRange(format!("M = {m}, N = {n} must be >= 1")));
    }
    let mut rng = substream(seed, &[]);
    let scale = 1.0 / (m as f64).sqrt();
    let data: Vec<Complex64> = match kind {
        RandomKind::Bipolar => (0..m * n)
            .map(|_| Complex64::new(if rng.random::<bool>() { scale } else { -scale }, 0.0))
            .collect(),
        RandomKind::Gaussian => (0..m * n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                Complex64::new(z * scale, 0.0)
            })
            .collect(),
    };
    let family = match kind {
        RandomKind::Bipolar => Family::Bipolar,
        RandomKind::Gaussian => Family::Gaussian,
    };
    SpreadingMatrix::from_columns(m, n, data, family, Provenance::Random { seed })
}

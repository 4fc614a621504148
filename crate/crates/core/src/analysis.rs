//! Coherence (exhaustive and rank-based), oversampled-DFT PAPR and
//! coherence-driven recovery bounds.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{symplectic_rank, Permutation};
use crate::matrix::{Family, SpreadingMatrix};

pub const DEFAULT_OVERSAMPLE: usize = 4;

/// Float ties closer than this are broken toward the lexicographically
/// smallest column pair.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub mu: f64,
    /// Minimum pairwise symplectic rank (Golay family only; `None` for a
    /// single orthogonal block).
    pub r_min: Option<usize>,
    /// Column pair attaining `mu` (exhaustive path only).
    pub argmax: Option<(usize, usize)>,
    /// Permutation pair attaining `r_min` (rank path only).
    pub block_pair: Option<(usize, usize)>,
}

/// Maximum normalized inner-product magnitude over all distinct column pairs.
///
/// `±1/√M` families use exact integer inner products on packed sign bits; the
/// rest use floating point with [`TIE_TOLERANCE`].
pub fn coherence_exact(phi: &SpreadingMatrix) -> Result<CoherenceReport> {
    let n = phi.cols();
    if n < 2 {
        return Err(Error::Shape(format!("coherence needs N >= 2, got {n}")));
    }
    if phi.family().is_binary() {
        coherence_binary(phi)
    } else {
        coherence_float(phi)
    }
}

fn coherence_binary(phi: &SpreadingMatrix) -> Result<CoherenceReport> {
    let (m, n) = (phi.rows(), phi.cols());
    let signs: Vec<Vec<u64>> = (0..n).map(|j| phi.sign_bits(j).unwrap()).collect();
    // (|ip|, j1, j2) per row, strict > keeps the smallest j2 on ties.
    let rows: Vec<(u64, usize, usize)> = (0..n - 1)
        .into_par_iter()
        .map(|j1| {
            let a = &signs[j1];
            let mut best = (0u64, j1, j1 + 1);
            for (j2, b) in signs.iter().enumerate().skip(j1 + 1) {
                let dist: u64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| u64::from((x ^ y).count_ones()))
                    .sum();
                let ip = (m as i64 - 2 * dist as i64).unsigned_abs();
                if ip > best.0 {
                    best = (ip, j1, j2);
                }
            }
            best
        })
        .collect();
    let mut best = rows[0];
    for r in &rows[1..] {
        if r.0 > best.0 {
            best = *r;
        }
    }
    let mu = best.0 as f64 / m as f64;
    let r_min = if phi.family() == Family::Golay && best.0 > 0 {
        // |ip| = 2^{m-h} with rank 2h, so M/|ip| = 2^h.
        let ratio = m as u64 / best.0;
        if ratio.is_power_of_two() && ratio * best.0 == m as u64 {
            Some(2 * ratio.trailing_zeros() as usize)
        } else {
            None
        }
    } else {
        None
    };
    Ok(CoherenceReport {
        mu,
        r_min,
        argmax: Some((best.1, best.2)),
        block_pair: None,
    })
}

fn coherence_float(phi: &SpreadingMatrix) -> Result<CoherenceReport> {
    let n = phi.cols();
    let norms: Vec<f64> = (0..n).map(|j| phi.column_norm(j)).collect();
    if let Some(j) = norms.iter().position(|&x| x == 0.0) {
        return Err(Error::Shape(format!("column {j} is zero")));
    }
    let rows: Vec<(f64, usize, usize)> = (0..n - 1)
        .into_par_iter()
        .map(|j1| {
            let a = phi.column(j1);
            let mut best = (f64::NEG_INFINITY, j1, j1 + 1);
            for j2 in j1 + 1..n {
                let ip: Complex64 = a
                    .iter()
                    .zip(phi.column(j2))
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let v = ip.norm() / (norms[j1] * norms[j2]);
                if v > best.0 + TIE_TOLERANCE {
                    best = (v, j1, j2);
                }
            }
            best
        })
        .collect();
    let mut best = rows[0];
    for r in &rows[1..] {
        if r.0 > best.0 + TIE_TOLERANCE {
            best = *r;
        }
    }
    Ok(CoherenceReport {
        mu: best.0.min(1.0),
        r_min: None,
        argmax: Some((best.1, best.2)),
        block_pair: None,
    })
}

/// Coherence of the Golay spreading matrix of `gamma` from the minimum
/// pairwise symplectic rank: `μ = 2^{-r_min/2}`. Independent of `M`.
pub fn coherence_by_rank(gamma: &[Permutation]) -> Result<CoherenceReport> {
    if let Some(first) = gamma.first() {
        for p in gamma {
            if p.m() != first.m() {
                return Err(Error::DimensionMismatch {
                    expected: first.m(),
                    got: p.m(),
                });
            }
        }
    }
    if gamma.len() < 2 {
        return Ok(CoherenceReport {
            mu: 0.0,
            r_min: None,
            argmax: None,
            block_pair: None,
        });
    }
    let mut best: Option<(usize, usize, usize)> = None;
    for k1 in 0..gamma.len() {
        for k2 in k1 + 1..gamma.len() {
            let r = symplectic_rank(&gamma[k1], &gamma[k2])?;
            if best.is_none_or(|(b, _, _)| r < b) {
                best = Some((r, k1, k2));
            }
        }
    }
    let (r_min, k1, k2) = best.unwrap();
    Ok(CoherenceReport {
        mu: coherence_from_rank(r_min),
        r_min: Some(r_min),
        argmax: None,
        block_pair: Some((k1, k2)),
    })
}

/// `2^{-r/2}`, exact for even `r`.
pub fn coherence_from_rank(r: usize) -> f64 {
    if r.is_multiple_of(2) {
        0.5f64.powi((r / 2) as i32)
    } else {
        2f64.powf(-(r as f64) / 2.0)
    }
}

/// Lower bound on Golay-matrix coherence: `√(2/M)` for odd `m`, `√(1/M)` for even.
pub fn coherence_floor(m: usize) -> f64 {
    coherence_from_rank(max_symplectic_rank(m))
}

/// Largest even rank an `m × m` symplectic matrix can have.
pub fn max_symplectic_rank(m: usize) -> usize {
    m - m % 2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaprReport {
    pub papr_linear: f64,
    pub papr_db: f64,
    pub oversample: usize,
}

/// Reusable oversampled-DFT PAPR evaluator for sequences of one length.
pub struct PaprMeter {
    len: usize,
    oversample: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl PaprMeter {
    pub fn new(len: usize, oversample: usize) -> Result<Self> {
        if oversample < 1 {
            return Err(Error::OutOfRange("oversample must be >= 1".into()));
        }
        if len == 0 {
            return Err(Error::Shape("empty sequence".into()));
        }
        let fft = FftPlanner::new().plan_fft_inverse(len * oversample);
        Ok(Self {
            len,
            oversample,
            fft,
        })
    }

    /// Peak of `|Σ b_i e^{j2π i t}|²` over `t = k/(oversample·M)`, divided by
    /// the mean power `Σ|b_i|²` (equal to `M` for unit-modulus entries).
    pub fn measure(&self, b: &[Complex64]) -> Result<PaprReport> {
        if b.len() != self.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                got: b.len(),
            });
        }
        let energy: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        if energy == 0.0 {
            return Err(Error::Shape("zero-energy sequence".into()));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len * self.oversample];
        buf[..self.len].copy_from_slice(b);
        self.fft.process(&mut buf);
        let peak = buf.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        let papr_linear = peak / energy;
        Ok(PaprReport {
            papr_linear,
            papr_db: 10.0 * papr_linear.log10(),
            oversample: self.oversample,
        })
    }
}

pub fn papr(b: &[Complex64], oversample: usize) -> Result<PaprReport> {
    PaprMeter::new(b.len(), oversample)?.measure(b)
}

/// PAPR of a `±1` sequence.
pub fn papr_bipolar(b: &[i8], oversample: usize) -> Result<PaprReport> {
    let z: Vec<Complex64> = b
        .iter()
        .map(|&x| Complex64::new(f64::from(x), 0.0))
        .collect();
    papr(&z, oversample)
}

/// Largest column PAPR of a spreading matrix and the column attaining it
/// (lowest index on ties).
pub fn max_papr(phi: &SpreadingMatrix, oversample: usize) -> Result<(PaprReport, usize)> {
    let meter = PaprMeter::new(phi.rows(), oversample)?;
    let reports = (0..phi.cols())
        .into_par_iter()
        .map(|j| meter.measure(phi.column(j)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (j, r) in reports.iter().enumerate() {
        if r.papr_linear > reports[best].papr_linear {
            best = j;
        }
    }
    reports
        .get(best)
        .map(|r| (*r, best))
        .ok_or_else(|| Error::Shape("matrix has no columns".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RecoveryBounds {
    /// `μ = 0`: the columns are orthogonal, so uniqueness is limited only by `K ≤ M`.
    Orthogonal,
    Coherent {
        /// `1 + 1/μ`.
        spark_lb: f64,
        /// Smallest integer spark consistent with `spark ≥ 1 + 1/μ`.
        spark_min: usize,
        /// Largest `K` with `K < spark_min / 2`.
        k_max_smv: usize,
        /// Largest `K` with `K < (spark_min - 1 + rank(X)) / 2`.
        k_max_mmv: usize,
        derivation: String,
    },
}

/// Integer uniqueness guarantees implied by the coherence.
///
/// Uses the integer form `spark ≥ ⌈1 + 1/μ⌉`; the integer bounds are the
/// largest `K` strictly below each half-spark quantity.
pub fn recovery_bounds(mu: f64, rank_x: usize) -> Result<RecoveryBounds> {
    if !(0.0..=1.0).contains(&mu) || mu.is_nan() {
        return Err(Error::OutOfRange(format!("mu = {mu} outside [0, 1]")));
    }
    if rank_x == 0 {
        return Err(Error::OutOfRange("rank(X) must be >= 1".into()));
    }
    if mu == 0.0 {
        return Ok(RecoveryBounds::Orthogonal);
    }
    let spark_lb = 1.0 + 1.0 / mu;
    // Absorb rounding in 1/μ when it should be an integer (μ = 2^{-h}).
    let spark_min = (spark_lb - 1e-9).ceil() as usize;
    // largest integer K < n/2 is floor((n - 1)/2)
    let below_half = |n: usize| n.saturating_sub(1) / 2;
    let k_max_smv = below_half(spark_min);
    let k_max_mmv = below_half(spark_min - 1 + rank_x);
    let derivation = format!(
        "spark >= 1 + 1/mu = {spark_lb:.6} => spark >= {spark_min}; \
         SMV: K < {spark_min}/2 => K <= {k_max_smv}; \
         MMV: K < ({spark_min} - 1 + {rank_x})/2 => K <= {k_max_mmv}"
    );
    Ok(RecoveryBounds::Coherent {
        spark_lb,
        spark_min,
        k_max_smv,
        k_max_mmv,
        derivation,
    })
}

//! Randomized permutation-set search and the rank statistics behind it.
//!
//! Trial `i` of any randomized routine here draws from
//! `substream(seed, [i])`, so outputs are identical for any worker count.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{coherence_from_rank, max_symplectic_rank};
use crate::error::{Error, Result};
use crate::gf2::{symplectic_rank, Permutation};
use crate::rng::substream;

/// Probability mass function of the symplectic rank of a random pair of
/// distinct canonical permutations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankPmf {
    pub m: usize,
    /// Number of pairs tallied (0 when built from given probabilities).
    pub trials: u64,
    pub seed: Option<u64>,
    /// Raw tallies per observed rank, including any rank-0 violations.
    pub counts: BTreeMap<usize, u64>,
    pub p: BTreeMap<usize, f64>,
}

impl RankPmf {
    /// Wraps published or externally computed probabilities.
    pub fn from_probabilities(m: usize, probs: &[(usize, f64)]) -> Result<Self> {
        let mut p = BTreeMap::new();
        for &(r, pr) in probs {
            check_rank(m, r)?;
            if !(0.0..=1.0).contains(&pr) {
                return Err(Error::OutOfRange(format!("p_{r} = {pr}")));
            }
            p.insert(r, pr);
        }
        Ok(Self {
            m,
            trials: 0,
            seed: None,
            counts: BTreeMap::new(),
            p,
        })
    }

    fn from_counts(m: usize, trials: u64, seed: Option<u64>, counts: BTreeMap<usize, u64>) -> Self {
        let p = counts
            .iter()
            .map(|(&r, &c)| (r, c as f64 / trials as f64))
            .collect();
        Self {
            m,
            trials,
            seed,
            counts,
            p,
        }
    }

    pub fn prob(&self, r: usize) -> f64 {
        self.p.get(&r).copied().unwrap_or(0.0)
    }

    /// Pairs that landed on rank 0 (identical quadratic forms).
    pub fn rank_zero_violations(&self) -> u64 {
        self.counts.get(&0).copied().unwrap_or(0)
    }

    /// `Pr[rank ≥ r] = Σ_{h = r/2}^{⌊m/2⌋} p_{2h}`.
    pub fn tail(&self, r: usize) -> f64 {
        self.p.range(r..).map(|(_, &v)| v).sum()
    }

    /// Most probable rank (smallest on ties).
    pub fn mode(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (&r, &v) in &self.p {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((r, v));
            }
        }
        best.map(|(r, _)| r)
    }
}

fn check_rank(m: usize, r: usize) -> Result<()> {
    if r % 2 == 1 || r > max_symplectic_rank(m) {
        return Err(Error::OutOfRange(format!(
            "rank {r} is not an even value in 0..={}",
            max_symplectic_rank(m)
        )));
    }
    Ok(())
}

/// Two distinct canonical permutations drawn uniformly.
pub fn random_pair<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<(Permutation, Permutation)> {
    let a = Permutation::random_canonical(m, rng)?;
    loop {
        let b = Permutation::random_canonical(m, rng)?;
        if b != a {
            return Ok((a, b));
        }
    }
}

/// Tallies the symplectic rank of `trials` independent random pairs.
pub fn estimate_rank_pmf(m: usize, trials: u64, seed: u64) -> Result<RankPmf> {
    if m < 3 {
        // m = 2 has a single canonical permutation, so no distinct pair exists.
        return Err(Error::OutOfRange(format!("m = {m} must be >= 3")));
    }
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be >= 1".into()));
    }
    let max_rank = max_symplectic_rank(m);
    let tallies = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; max_rank + 1],
            |mut acc, i| {
                let mut rng = substream(seed, &[i]);
                let (a, b) = random_pair(m, &mut rng).expect("m validated");
                acc[symplectic_rank(&a, &b).expect("same m")] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; max_rank + 1],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    let counts = tallies
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect();
    Ok(RankPmf::from_counts(m, trials, Some(seed), counts))
}

/// Exact pmf over all unordered pairs of distinct canonical permutations.
pub fn exact_rank_pmf(m: usize) -> Result<RankPmf> {
    if !(3..=7).contains(&m) {
        return Err(Error::OutOfRange(format!(
            "exhaustive pmf supports 3 <= m <= 7, got {m}"
        )));
    }
    let all = Permutation::all_canonical(m)?;
    let tallies = (0..all.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0u64; m + 1];
            for j in i + 1..all.len() {
                acc[symplectic_rank(&all[i], &all[j]).expect("same m")] += 1;
            }
            acc
        })
        .reduce(
            || vec![0u64; m + 1],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    let total: u64 = tallies.iter().sum();
    let counts = tallies
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .collect();
    Ok(RankPmf::from_counts(m, total, None, counts))
}

/// Probability that `L` random permutations give `r_min = r`, treating the
/// `L(L-1)/2` pairwise ranks as independent:
/// `tail(r)^τ - tail(r+2)^τ`.
pub fn coherence_probability(pmf: &RankPmf, l: usize, r: usize) -> Result<f64> {
    if r < 2 {
        return Err(Error::OutOfRange(format!("rank {r} must be >= 2")));
    }
    check_rank(pmf.m, r)?;
    if l < 2 {
        return Err(Error::OutOfRange(format!("L = {l} must be >= 2")));
    }
    let tau = (l * (l - 1) / 2) as i32;
    Ok(pmf.tail(r).powi(tau) - pmf.tail(r + 2).powi(tau))
}

/// `⌈log ε / log(1 - P)⌉`: trials needed to hit an event of per-trial
/// probability `P` at least once with probability `≥ 1 - ε`.
pub fn min_trials(p: f64, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfRange(format!("eps = {eps} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("P = {p} outside [0, 1]")));
    }
    if p == 1.0 {
        return Ok(0);
    }
    if p == 0.0 {
        return Err(Error::Infeasible("event has probability 0".into()));
    }
    let t = eps.ln() / (-p).ln_1p();
    Ok(t.ceil() as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub m: usize,
    pub gamma: Vec<Permutation>,
    pub target_r: usize,
    pub achieved_r_min: usize,
    pub coherence: f64,
    /// Whether `achieved_r_min >= target_r`.
    pub achieved: bool,
    /// Index of the accepted trial plus one, or `max_trials` when exhausted.
    pub trials_used: u64,
    pub seed: u64,
}

/// `L` distinct canonical permutations drawn uniformly.
pub fn random_set<R: Rng + ?Sized>(m: usize, l: usize, rng: &mut R) -> Result<Vec<Permutation>> {
    let mut gamma: Vec<Permutation> = Vec::with_capacity(l);
    while gamma.len() < l {
        let p = Permutation::random_canonical(m, rng)?;
        if !gamma.contains(&p) {
            gamma.push(p);
        }
    }
    Ok(gamma)
}

/// Minimum pairwise symplectic rank of a set (`None` when `|Γ| < 2`).
pub fn min_pairwise_rank(gamma: &[Permutation]) -> Result<Option<usize>> {
    let mut best: Option<usize> = None;
    for i in 0..gamma.len() {
        for j in i + 1..gamma.len() {
            let r = symplectic_rank(&gamma[i], &gamma[j])?;
            best = Some(best.map_or(r, |b| b.min(r)));
            if r == 0 {
                return Ok(best);
            }
        }
    }
    Ok(best)
}

const SEARCH_BATCH: u64 = 1024;

/// Draws whole sets until one has `r_min >= target_r`. The lowest accepted
/// trial index wins; when the budget runs out the best set seen (highest
/// `r_min`, then lowest index) is returned with `achieved = false`.
pub fn search_permutation_set(
    m: usize,
    l: usize,
    target_r: usize,
    max_trials: u64,
    seed: u64,
) -> Result<SearchOutcome> {
    if target_r % 2 == 1 {
        return Err(Error::OutOfRange(format!(
            "target rank {target_r} must be even"
        )));
    }
    if m < 3 {
        return Err(Error::OutOfRange(format!("m = {m} must be >= 3")));
    }
    let ceiling = max_symplectic_rank(m);
    if target_r > ceiling {
        return Err(Error::Infeasible(format!(
            "target rank {target_r} exceeds the maximum {ceiling} for m = {m}"
        )));
    }
    if l < 2 {
        return Err(Error::OutOfRange(format!("L = {l} must be >= 2")));
    }
    if Permutation::canonical_count(m).is_some_and(|n| (l as u128) > n) {
        return Err(Error::Infeasible(format!(
            "L = {l} exceeds the number of distinct quadratic forms for m = {m}"
        )));
    }
    if max_trials == 0 {
        return Err(Error::OutOfRange("max_trials must be >= 1".into()));
    }

    let mut best: Option<(usize, u64, Vec<Permutation>)> = None;
    let mut start = 0;
    while start < max_trials {
        let end = (start + SEARCH_BATCH).min(max_trials);
        let batch: Vec<(u64, usize, Vec<Permutation>)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, &[i]);
                let gamma = random_set(m, l, &mut rng).expect("validated");
                let r = min_pairwise_rank(&gamma).expect("same m").unwrap_or(0);
                (i, r, gamma)
            })
            .collect();
        for (i, r, gamma) in batch {
            if best.as_ref().is_none_or(|(b, _, _)| r > *b) {
                best = Some((r, i, gamma));
            }
            if r >= target_r {
                let (r, i, gamma) = best.unwrap();
                return Ok(SearchOutcome {
                    m,
                    gamma,
                    target_r,
                    achieved_r_min: r,
                    coherence: coherence_from_rank(r),
                    achieved: true,
                    trials_used: i + 1,
                    seed,
                });
            }
        }
        start = end;
    }
    let (r, _, gamma) = best.expect("at least one trial ran");
    Ok(SearchOutcome {
        m,
        gamma,
        target_r,
        achieved_r_min: r,
        coherence: coherence_from_rank(r),
        achieved: false,
        trials_used: max_trials,
        seed,
    })
}

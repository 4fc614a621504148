//! Sparsity-blind SOMP and oracle least squares, followed by channel
//! estimation and symbol detection on the recovered rows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot_conj, ComplexMatrix, IncrementalQr};
use crate::matrix::SpreadingMatrix;
use crate::sim::scenario::{qpsk_slice, StoppingRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Threshold,
    MaxIter,
    Degenerate,
    /// Oracle fits do not iterate.
    Oracle,
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    /// Estimated support in selection order.
    pub support: Vec<usize>,
    /// `|Ŝ| × J` least-squares coefficients, rows aligned with `support`.
    pub x_hat: ComplexMatrix,
    /// Channel estimates: first column of `x_hat`.
    pub h_hat: Vec<Complex64>,
    /// QPSK indices for slots `2..J`, one vector per recovered device.
    pub symbols: Vec<Vec<u8>>,
    pub iterations: usize,
    pub degenerate: bool,
    pub stop: StopReason,
    /// Residual Frobenius norm before the first and after every iteration.
    pub residual_trace: Vec<f64>,
}

impl RecoveryResult {
    fn finish(
        support: Vec<usize>,
        x_hat: ComplexMatrix,
        iterations: usize,
        stop: StopReason,
        trace: Vec<f64>,
    ) -> Self {
        let j = x_hat.cols();
        let h_hat: Vec<Complex64> = (0..support.len()).map(|k| x_hat.get(k, 0)).collect();
        let symbols = h_hat
            .iter()
            .enumerate()
            .map(|(k, h)| (1..j).map(|t| qpsk_slice(x_hat.get(k, t) / h)).collect())
            .collect();
        Self {
            support,
            x_hat,
            h_hat,
            symbols,
            iterations,
            degenerate: stop == StopReason::Degenerate,
            stop,
            residual_trace: trace,
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Residual threshold for the chosen stopping statistic.
pub fn stopping_threshold(rule: StoppingRule, sigma_n2: f64, m: usize, j: usize) -> f64 {
    match rule {
        StoppingRule::RowMax => (3.0 * sigma_n2 * j as f64).sqrt(),
        StoppingRule::Frobenius => (3.0 * sigma_n2 * j as f64 * m as f64).sqrt(),
    }
}

pub fn stopping_statistic(rule: StoppingRule, residual: &ComplexMatrix) -> f64 {
    match rule {
        StoppingRule::RowMax => residual.max_row_norm(),
        StoppingRule::Frobenius => residual.frobenius_norm_sqr().sqrt(),
    }
}

fn check_y(s: &SpreadingMatrix, y: &ComplexMatrix) -> Result<()> {
    if y.rows() != s.rows() {
        return Err(Error::DimensionMismatch {
            expected: s.rows(),
            got: y.rows(),
        });
    }
    if y.cols() == 0 {
        return Err(Error::Shape("Y has no columns".into()));
    }
    Ok(())
}

/// Simultaneous OMP with a residual-threshold stop.
///
/// Correlations `Sᴴ R` are kept up to date by rank-one corrections through
/// the orthonormal basis of the selected columns, so each iteration costs one
/// pass over `S`.
pub fn somp_recover(
    s: &SpreadingMatrix,
    y: &ComplexMatrix,
    sigma_n2: f64,
    max_iter: usize,
    rule: StoppingRule,
) -> Result<RecoveryResult> {
    check_y(s, y)?;
    let (m, n, j) = (s.rows(), s.cols(), y.cols());
    let max_iter = max_iter.min(m).min(n);
    let threshold = stopping_threshold(rule, sigma_n2, m, j);
    let inv_norms: Vec<f64> = (0..n)
        .map(|d| {
            let c = s.column_norm(d);
            if c > 0.0 {
                1.0 / c
            } else {
                0.0
            }
        })
        .collect();

    let mut corr = ComplexMatrix::zeros(n, j);
    for t in 0..j {
        let yt = y.column(t);
        for (d, c) in corr.column_mut(t).iter_mut().enumerate() {
            *c = dot_conj(s.column(d), yt);
        }
    }
    let mut residual = y.clone();
    let mut selected = vec![false; n];
    let mut support = Vec::new();
    let mut qr = IncrementalQr::new(m);
    let mut trace = vec![residual.frobenius_norm_sqr().sqrt()];
    let mut stop = StopReason::MaxIter;

    loop {
        if stopping_statistic(rule, &residual) < threshold {
            stop = StopReason::Threshold;
            break;
        }
        if support.len() >= max_iter {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for d in (0..n).filter(|&d| !selected[d]) {
            let score = (0..j).map(|t| corr.get(d, t).norm()).sum::<f64>() * inv_norms[d];
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((d, score));
            }
        }
        let Some((d, _)) = best else { break };
        if qr.push(s.column(d)).is_err() {
            stop = StopReason::Degenerate;
            break;
        }
        selected[d] = true;
        support.push(d);
        let q = qr.basis(qr.rank() - 1);
        let w: Vec<Complex64> = (0..j).map(|t| dot_conj(q, residual.column(t))).collect();
        for (t, wt) in w.iter().enumerate() {
            residual
                .column_mut(t)
                .iter_mut()
                .zip(q)
                .for_each(|(r, qi)| *r -= qi * wt);
        }
        for e in 0..n {
            let sq = dot_conj(s.column(e), q);
            for (t, wt) in w.iter().enumerate() {
                let c = corr.get(e, t) - sq * wt;
                corr.set(e, t, c);
            }
        }
        trace.push(residual.frobenius_norm_sqr().sqrt());
    }
    let x_hat = qr.solve(y)?;
    let iterations = support.len();
    Ok(RecoveryResult::finish(
        support, x_hat, iterations, stop, trace,
    ))
}

/// Least-squares fit of `Y` onto the true support's columns.
pub fn oracle_ls(
    s: &SpreadingMatrix,
    y: &ComplexMatrix,
    support: &[usize],
) -> Result<RecoveryResult> {
    check_y(s, y)?;
    if support.len() > s.rows() {
        return Err(Error::RankDeficient(format!(
            "support of {} exceeds {} rows",
            support.len(),
            s.rows()
        )));
    }
    let mut qr = IncrementalQr::new(s.rows());
    for &d in support {
        if d >= s.cols() {
            return Err(Error::OutOfRange(format!("device {d} of {}", s.cols())));
        }
        qr.push(s.column(d))?;
    }
    let x_hat = qr.solve(y)?;
    Ok(RecoveryResult::finish(
        support.to_vec(),
        x_hat,
        0,
        StopReason::Oracle,
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Family;
    use crate::sim::scenario::{build_matrix, generate_frame, qpsk_symbol, ScenarioConfig};

    fn golay(m: usize, l: usize) -> SpreadingMatrix {
        build_matrix(&ScenarioConfig::new(Family::Golay, m, l, 0.1, 10.0, 1, 0)).unwrap()
    }

    fn synth(s: &SpreadingMatrix, devs: &[(usize, Complex64)], j: usize) -> ComplexMatrix {
        let mut y = ComplexMatrix::zeros(s.rows(), j);
        for t in 0..j {
            for &(d, h) in devs {
                let u = if t == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    qpsk_symbol(((d + t) % 4) as u8)
                };
                for i in 0..s.rows() {
                    let v = y.get(i, t) + s.get(i, d) * h * u;
                    y.set(i, t, v);
                }
            }
        }
        y
    }

    #[test]
    fn zero_observation_gives_empty_support() {
        let s = golay(32, 2);
        let y = ComplexMatrix::zeros(32, 7);
        let r = somp_recover(&s, &y, 0.1, 16, StoppingRule::RowMax).unwrap();
        assert!(r.is_empty());
        assert_eq!(r.iterations, 0);
        assert_eq!(r.stop, StopReason::Threshold);
    }

    #[test]
    fn single_device_recovered_in_one_step() {
        for family in [Family::Golay, Family::Zc, Family::Bipolar, Family::Gaussian] {
            let s = build_matrix(&ScenarioConfig::new(family, 64, 2, 0.1, 10.0, 1, 3)).unwrap();
            let h = Complex64::new(0.3, -1.1);
            let y = synth(&s, &[(17, h)], 7);
            let r = somp_recover(&s, &y, 1e-12, 32, StoppingRule::RowMax).unwrap();
            assert_eq!(r.support, vec![17], "{family}");
            assert!((r.h_hat[0] - h).norm() < 1e-9);
            for t in 1..7 {
                assert_eq!(r.symbols[0][t - 1], ((17 + t) % 4) as u8);
            }
        }
    }

    #[test]
    fn oracle_noiseless_is_exact() {
        let s = golay(64, 4);
        let devs = [
            (3, Complex64::new(1.0, 0.5)),
            (100, Complex64::new(-0.2, 0.9)),
            (201, Complex64::new(0.4, -0.4)),
        ];
        let y = synth(&s, &devs, 5);
        let r = oracle_ls(&s, &y, &[3, 100, 201]).unwrap();
        for (k, &(d, h)) in devs.iter().enumerate() {
            assert!((r.h_hat[k] - h).norm() < 1e-10);
            for t in 1..5 {
                assert_eq!(r.symbols[k][t - 1], ((d + t) % 4) as u8);
            }
        }
        assert!(oracle_ls(&s, &y, &[]).unwrap().is_empty());
        assert!(oracle_ls(&s, &y, &(0..65).collect::<Vec<_>>()).is_err());
    }

    #[test]
    fn somp_properties_on_noisy_frames() {
        let cfg = ScenarioConfig::new(Family::Golay, 64, 4, 0.1, 10.0, 1, 11);
        let s = build_matrix(&cfg).unwrap();
        for i in 0..20 {
            let f = generate_frame(&cfg, &s, i).unwrap();
            let r = somp_recover(&s, &f.y, f.sigma_n2, cfg.max_iterations(), cfg.stopping).unwrap();
            let mut sorted = r.support.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), r.support.len());
            assert!(r.support.len() <= cfg.max_iterations());
            assert!(r
                .residual_trace
                .windows(2)
                .all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn frobenius_rule_is_less_strict() {
        let mut residual = ComplexMatrix::zeros(4, 2);
        residual.set(0, 0, Complex64::new(2.0, 0.0));
        assert_eq!(stopping_statistic(StoppingRule::RowMax, &residual), 2.0);
        assert!(
            stopping_threshold(StoppingRule::Frobenius, 1.0, 4, 2)
                > stopping_threshold(StoppingRule::RowMax, 1.0, 4, 2)
        );
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = golay(16, 1);
        assert!(somp_recover(
            &s,
            &ComplexMatrix::zeros(8, 2),
            1.0,
            4,
            StoppingRule::RowMax
        )
        .is_err());
    }
}

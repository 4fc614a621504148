//! Per-frame error metrics and their aggregation over frames.

use std::collections::HashMap;

use serde::Serialize;

use crate::sim::recovery::RecoveryResult;
use crate::sim::scenario::{qpsk_slice, FrameScenario};

/// Metrics of one frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameMetrics {
    pub n: usize,
    pub k: usize,
    pub undetected: usize,
    pub false_alarms: usize,
    pub symbol_errors: usize,
    /// `(|S \ Ŝ| + |Ŝ \ S|) / N`.
    pub aer: f64,
    /// Undefined without active devices.
    pub nmse: Option<f64>,
    pub ser: Option<f64>,
    pub iterations: usize,
    pub degenerate: bool,
}

/// Scores a recovery against the frame's ground truth. Undetected devices
/// contribute `ĥ = 0` to the NMSE and `J - 1` symbol errors each; false alarms
/// only enter the AER.
pub fn evaluate_metrics(truth: &FrameScenario, result: &RecoveryResult) -> FrameMetrics {
    let n = truth.h.len();
    let j = truth.u.cols();
    let k = truth.k();
    let found: HashMap<usize, usize> = result
        .support
        .iter()
        .enumerate()
        .map(|(i, &d)| (d, i))
        .collect();
    let false_alarms = result
        .support
        .iter()
        .filter(|d| truth.active.binary_search(d).is_err())
        .count();

    let mut undetected = 0;
    let mut symbol_errors = 0;
    let mut err = 0.0;
    let mut energy = 0.0;
    for &d in &truth.active {
        let h = truth.h[d];
        energy += h.norm_sqr();
        match found.get(&d) {
            Some(&row) => {
                err += (h - result.h_hat[row]).norm_sqr();
                symbol_errors += (1..j)
                    .filter(|&t| result.symbols[row][t - 1] != qpsk_slice(truth.u.get(d, t)))
                    .count();
            }
            None => {
                undetected += 1;
                err += h.norm_sqr();
                symbol_errors += j - 1;
            }
        }
    }
    let (nmse, ser) = if k == 0 {
        (None, None)
    } else {
        (
            Some(if energy > 0.0 { err / energy } else { 0.0 }),
            Some(symbol_errors as f64 / (k * (j - 1)) as f64),
        )
    };
    FrameMetrics {
        n,
        k,
        undetected,
        false_alarms,
        symbol_errors,
        aer: (undetected + false_alarms) as f64 / n as f64,
        nmse,
        ser,
        iterations: result.iterations,
        degenerate: result.degenerate,
    }
}

/// Sum with pairwise (cascade) splitting; the result depends only on the
/// order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error of the mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        let std_err = if xs.len() > 1 {
            let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
            (pairwise_sum(&dev) / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Some(Self {
            mean,
            std_err,
            samples: xs.len(),
        })
    }
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Frame-averaged metrics of one recovery method at one operating point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub frames: usize,
    pub aer: Estimate,
    /// Linear NMSE, averaged over frames with at least one active device.
    pub nmse: Option<Estimate>,
    pub ser: Option<Estimate>,
    pub undetected: u64,
    pub false_alarms: u64,
    pub symbol_errors: u64,
    pub active_devices: u64,
    pub mean_iterations: f64,
    pub degenerate_frames: u64,
}

impl MetricsRecord {
    /// Aggregates frames in the given order.
    pub fn aggregate(frames: &[FrameMetrics]) -> Self {
        let aer: Vec<f64> = frames.iter().map(|f| f.aer).collect();
        let nmse: Vec<f64> = frames.iter().filter_map(|f| f.nmse).collect();
        let ser: Vec<f64> = frames.iter().filter_map(|f| f.ser).collect();
        let iters: Vec<f64> = frames.iter().map(|f| f.iterations as f64).collect();
        let total = |g: fn(&FrameMetrics) -> usize| frames.iter().map(|f| g(f) as u64).sum::<u64>();
        Self {
            frames: frames.len(),
            aer: Estimate::from_samples(&aer).unwrap_or_default(),
            nmse: Estimate::from_samples(&nmse),
            ser: Estimate::from_samples(&ser),
            undetected: total(|f| f.undetected),
            false_alarms: total(|f| f.false_alarms),
            symbol_errors: total(|f| f.symbol_errors),
            active_devices: total(|f| f.k),
            mean_iterations: if frames.is_empty() {
                0.0
            } else {
                pairwise_sum(&iters) / frames.len() as f64
            },
            degenerate_frames: frames.iter().filter(|f| f.degenerate).count() as u64,
        }
    }

    pub fn nmse_db(&self) -> Option<f64> {
        self.nmse.map(|e| to_db(e.mean))
    }
}

//! Scenario configuration, spreading-matrix selection and per-frame ground truth.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::max_symplectic_rank;
use crate::baselines::{nearest_prime, random_matrix, zc_matrix, RandomKind, ZcConfig};
use crate::error::{Error, Result};
use crate::gf2::Permutation;
use crate::golay::spreading_matrix;
use crate::linalg::ComplexMatrix;
use crate::matrix::{Family, SpreadingMatrix};
use crate::rng::{derive_seed, substream, SimRng};
use crate::search::search_permutation_set;
use crate::tables::{permutation_set_for, PERMUTATION_SETS};

/// Stream labels keep matrix and frame randomness disjoint.
const MATRIX_STREAM: u64 = 0x4d41_5452;
const FRAME_STREAM: u64 = 0x4652_414d;

/// Trial budget when a Golay permutation set has to be searched for.
pub const DEFAULT_SEARCH_TRIALS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingRule {
    /// Largest row norm of the residual (across slots) below `√(3σ²J)`.
    #[default]
    RowMax,
    /// Frobenius norm of the residual below `√(3σ²JM)`.
    Frobenius,
}

/// One simulation point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Nominal sequence length; ZC uses the nearest prime instead.
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "J", default = "default_slots")]
    pub j: usize,
    pub p_a: f64,
    pub snr_db: f64,
    pub frames: usize,
    pub family: Family,
    pub seed: u64,
    /// Golay permutation set; defaults to the built-in reference set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<Vec<Permutation>>,
    /// ZC roots; drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zc_roots: Option<Vec<usize>>,
    #[serde(default)]
    pub stopping: StoppingRule,
    /// SOMP iteration cap; `⌊M/2⌋` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Keep frames with no active device instead of redrawing them.
    #[serde(default)]
    pub allow_empty: bool,
}

fn default_slots() -> usize {
    7
}

impl ScenarioConfig {
    pub fn new(
        family: Family,
        m: usize,
        l: usize,
        p_a: f64,
        snr_db: f64,
        frames: usize,
        seed: u64,
    ) -> Self {
        Self {
            m,
            l,
            j: default_slots(),
            p_a,
            snr_db,
            frames,
            family,
            seed,
            permutations: None,
            zc_roots: None,
            stopping: StoppingRule::default(),
            max_iter: None,
            allow_empty: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_a) {
            return Err(Error::Config(format!("p_a = {} outside [0, 1]", self.p_a)));
        }
        if self.j < 2 {
            return Err(Error::Config(format!("J = {} must be >= 2", self.j)));
        }
        if self.l == 0 || self.m < 2 {
            return Err(Error::Config(format!(
                "invalid M = {}, L = {}",
                self.m, self.l
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if self.family == Family::Golay && !self.m.is_power_of_two() {
            return Err(Error::Config(format!(
                "golay needs M = 2^m, got {}",
                self.m
            )));
        }
        Ok(())
    }

    /// Sequence length actually simulated.
    pub fn rows(&self) -> usize {
        match self.family {
            Family::Zc => nearest_prime(self.m),
            _ => self.m,
        }
    }

    /// Number of devices `N`.
    pub fn devices(&self) -> usize {
        self.rows() * self.l
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iter.unwrap_or(self.rows() / 2).min(self.rows())
    }

    /// Seed for the spreading matrix: depends on family, `M` and `L` only, so
    /// every SNR / activity point of a campaign shares one matrix.
    pub fn matrix_seed(&self) -> u64 {
        derive_seed(
            self.seed,
            &[
                MATRIX_STREAM,
                u64::from(self.family.tag()),
                self.m as u64,
                self.l as u64,
            ],
        )
    }

    /// Frame randomness is keyed by `(L, p_a, frame, redraw)` and not by
    /// family or SNR, so competing families and SNR points see the same
    /// activity, channels, symbols and unit-variance noise draws.
    fn frame_rng(&self, frame_index: u64, redraw: u64) -> SimRng {
        substream(
            self.seed,
            &[
                FRAME_STREAM,
                self.l as u64,
                self.p_a.to_bits(),
                frame_index,
                redraw,
            ],
        )
    }
}

/// Golay permutation set used when a scenario does not name one: the
/// reference set for `(m, L)` when it exists, otherwise the best set found by
/// a seeded search targeting the maximal rank.
pub fn default_permutations(m: usize, l: usize, seed: u64) -> Result<Vec<Permutation>> {
    if l == 1 {
        if let Some(set) = PERMUTATION_SETS.iter().find(|s| s.m == m) {
            return Ok(set.parse()[..1].to_vec());
        }
        return Ok(vec![Permutation::identity(m)?]);
    }
    if let Some(set) = permutation_set_for(m, l) {
        return Ok(set.parse()[..l].to_vec());
    }
    let out = search_permutation_set(m, l, max_symplectic_rank(m), DEFAULT_SEARCH_TRIALS, seed)?;
    Ok(out.gamma)
}

/// Spreading matrix for a scenario's family.
pub fn build_matrix(cfg: &ScenarioConfig) -> Result<SpreadingMatrix> {
    cfg.validate()?;
    let seed = cfg.matrix_seed();
    match cfg.family {
        Family::Golay => {
            let m = cfg.m.trailing_zeros() as usize;
            let gamma = match &cfg.permutations {
                Some(g) => {
                    if g.len() != cfg.l {
                        return Err(Error::Config(format!(
                            "{} permutations given for L = {}",
                            g.len(),
                            cfg.l
                        )));
                    }
                    g.clone()
                }
                None => default_permutations(m, cfg.l, seed)?,
            };
            spreading_matrix(&gamma, None)
        }
        Family::Zc => {
            let length = cfg.rows();
            let zc = match &cfg.zc_roots {
                Some(roots) => ZcConfig {
                    length,
                    roots: roots.clone(),
                    seed: None,
                },
                None => ZcConfig::random(length, cfg.l, seed)?,
            };
            if zc.roots.len() != cfg.l {
                return Err(Error::Config(format!(
                    "{} ZC roots given for L = {}",
                    zc.roots.len(),
                    cfg.l
                )));
            }
            zc_matrix(&zc)
        }
        Family::Bipolar => random_matrix(RandomKind::Bipolar, cfg.m, cfg.m * cfg.l, seed),
        Family::Gaussian => random_matrix(RandomKind::Gaussian, cfg.m, cfg.m * cfg.l, seed),
    }
}

/// Gray-mapped QPSK symbol for a 2-bit index: bit 0 selects the sign of the
/// real part, bit 1 the imaginary part.
pub fn qpsk_symbol(index: u8) -> Complex64 {
    let re = if index & 1 == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    let im = if index & 2 == 0 {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    Complex64::new(re, im)
}

/// Nearest QPSK index (quadrant decision). Non-finite input maps to index 0.
pub fn qpsk_slice(z: Complex64) -> u8 {
    if !z.re.is_finite() || !z.im.is_finite() {
        return 0;
    }
    u8::from(z.re < 0.0) | (u8::from(z.im < 0.0) << 1)
}

fn complex_normal(rng: &mut SimRng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// One frame's ground truth and observation.
#[derive(Clone, Debug)]
pub struct FrameScenario {
    /// Active devices, ascending.
    pub active: Vec<usize>,
    /// Channel gains for all `N` devices.
    pub h: Vec<Complex64>,
    /// `N × J` symbols; column 0 carries pilots (1 on the active set).
    pub u: ComplexMatrix,
    /// `M × J` received signal.
    pub y: ComplexMatrix,
    pub sigma_n2: f64,
    /// Noiseless received energy `Σ_t ‖S diag(h) u_t‖²`.
    pub signal_energy: f64,
    /// How many empty-activity draws were discarded before this frame.
    pub redraws: u64,
}

impl FrameScenario {
    pub fn k(&self) -> usize {
        self.active.len()
    }

    /// `(1/K) Σ_t ‖y_t‖² / (J M σ²)` measured on the noisy observation.
    pub fn empirical_snr(&self) -> Option<f64> {
        if self.active.is_empty() || self.sigma_n2 == 0.0 {
            return None;
        }
        let (m, j) = (self.y.rows() as f64, self.y.cols() as f64);
        Some(self.y.frobenius_norm_sqr() / (j * m * self.sigma_n2) / self.k() as f64)
    }
}

/// Draws activity, channels, symbols and noise for one frame.
///
/// `σ²` is set from the noiseless received energy so that the per-device SNR
/// `(1/K)·Σ_t‖S diag(h) u_t‖² / (J M σ²)` equals the target. With no active
/// device (only possible when `allow_empty` is set) the nominal
/// `σ² = 1/(M·snr)` of a unit-energy device is used.
pub fn generate_frame(
    cfg: &ScenarioConfig,
    s: &SpreadingMatrix,
    frame_index: u64,
) -> Result<FrameScenario> {
    cfg.validate()?;
    let (m, n, j) = (s.rows(), s.cols(), cfg.j);
    let mut redraw = 0;
    loop {
        let mut rng = cfg.frame_rng(frame_index, redraw);
        let active: Vec<usize> = (0..n).filter(|_| rng.random_bool(cfg.p_a)).collect();
        if active.is_empty() && !cfg.allow_empty && cfg.p_a > 0.0 {
            redraw += 1;
            continue;
        }
        if active.is_empty() && !cfg.allow_empty {
            return Err(Error::Config(
                "p_a = 0 yields no active devices; set allow_empty".into(),
            ));
        }
        let h: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let mut u = ComplexMatrix::zeros(n, j);
        for &d in &active {
            u.set(d, 0, Complex64::new(1.0, 0.0));
            for t in 1..j {
                u.set(d, t, qpsk_symbol(rng.random_range(0..4u8)));
            }
        }
        let mut y = ComplexMatrix::zeros(m, j);
        for t in 0..j {
            let col = y.column_mut(t);
            for &d in &active {
                let coef = h[d] * u.get(d, t);
                col.iter_mut()
                    .zip(s.column(d))
                    .for_each(|(y, s)| *y += s * coef);
            }
        }
        let signal_energy = y.frobenius_norm_sqr();
        let snr = cfg.snr_linear();
        let sigma_n2 = if active.is_empty() {
            1.0 / (m as f64 * snr)
        } else {
            signal_energy / (j as f64 * m as f64 * active.len() as f64 * snr)
        };
        for t in 0..j {
            for yi in y.column_mut(t) {
                *yi += complex_normal(&mut rng, sigma_n2);
            }
        }
        return Ok(FrameScenario {
            active,
            h,
            u,
            y,
            sigma_n2,
            signal_energy,
            redraws: redraw,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_slice_inverts_symbol() {
        for k in 0..4 {
            assert_eq!(qpsk_slice(qpsk_symbol(k)), k);
            assert!((qpsk_symbol(k).norm() - 1.0).abs() < 1e-15);
        }
        assert_eq!(qpsk_slice(Complex64::new(f64::NAN, 1.0)), 0);
    }

    #[test]
    fn frame_structure_and_joint_sparsity() {
        let cfg = ScenarioConfig::new(Family::Golay, 32, 2, 0.1, 10.0, 1, 5);
        let s = build_matrix(&cfg).unwrap();
        let f = generate_frame(&cfg, &s, 0).unwrap();
        assert!(f.k() > 0);
        for d in 0..s.cols() {
            let active = f.active.binary_search(&d).is_ok();
            for t in 0..cfg.j {
                assert_eq!(f.u.get(d, t) != Complex64::new(0.0, 0.0), active);
            }
            if active {
                assert_eq!(f.u.get(d, 0), Complex64::new(1.0, 0.0));
            }
        }
        assert_eq!((f.y.rows(), f.y.cols()), (32, 7));
    }

    #[test]
    fn frame_is_deterministic() {
        let cfg = ScenarioConfig::new(Family::Bipolar, 32, 2, 0.2, 10.0, 1, 9);
        let s = build_matrix(&cfg).unwrap();
        let a = generate_frame(&cfg, &s, 3).unwrap();
        let b = generate_frame(&cfg, &s, 3).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.active, b.active);
        let c = generate_frame(&cfg, &s, 4).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn single_device_noiseless_observation() {
        let mut cfg = ScenarioConfig::new(Family::Golay, 16, 2, 1.0 / 32.0, 300.0, 1, 1);
        cfg.seed = 2;
        let s = build_matrix(&cfg).unwrap();
        // find a frame with exactly one active device
        let f = (0..200)
            .map(|i| generate_frame(&cfg, &s, i).unwrap())
            .find(|f| f.k() == 1)
            .expect("a single-device frame");
        let d = f.active[0];
        for i in 0..16 {
            let want = f.h[d] * s.get(i, d);
            assert!((f.y.get(i, 0) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_frames_redrawn_or_allowed() {
        let mut cfg = ScenarioConfig::new(Family::Bipolar, 8, 1, 0.0, 10.0, 1, 1);
        assert!(generate_frame(&cfg, &build_matrix(&cfg).unwrap(), 0).is_err());
        cfg.allow_empty = true;
        let s = build_matrix(&cfg).unwrap();
        let f = generate_frame(&cfg, &s, 0).unwrap();
        assert_eq!(f.k(), 0);
        assert_eq!(f.signal_energy, 0.0);

        let cfg = ScenarioConfig::new(Family::Bipolar, 8, 1, 0.01, 10.0, 1, 1);
        let s = build_matrix(&cfg).unwrap();
        let f = generate_frame(&cfg, &s, 0).unwrap();
        assert!(f.k() > 0);
        assert!(f.redraws > 0);
    }

    #[test]
    fn per_device_snr_is_calibrated() {
        let cfg = ScenarioConfig::new(Family::Golay, 64, 2, 0.1, 12.0, 1, 4);
        let s = build_matrix(&cfg).unwrap();
        let f = generate_frame(&cfg, &s, 0).unwrap();
        let noiseless = f.signal_energy / (cfg.j as f64 * 64.0 * f.sigma_n2) / f.k() as f64;
        assert!((10.0 * noiseless.log10() - 12.0).abs() < 1e-9);
    }

    #[test]
    fn matrix_dimensions_per_family() {
        for (family, rows) in [
            (Family::Golay, 128),
            (Family::Zc, 127),
            (Family::Bipolar, 128),
            (Family::Gaussian, 128),
        ] {
            let cfg = ScenarioConfig::new(family, 128, 4, 0.1, 15.0, 1, 0);
            let s = build_matrix(&cfg).unwrap();
            assert_eq!((s.rows(), s.cols()), (rows, rows * 4));
            assert_eq!(cfg.devices(), rows * 4);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ScenarioConfig::new(Family::Golay, 100, 2, 0.1, 10.0, 1, 0);
        assert!(build_matrix(&cfg).is_err());
        cfg.m = 64;
        cfg.p_a = 1.5;
        assert!(cfg.validate().is_err());
        cfg.p_a = 0.1;
        cfg.j = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let ok =
            r#"{"M":64,"L":2,"J":7,"p_a":0.1,"snr_db":10,"frames":5,"family":"golay","seed":1}"#;
        let cfg: ScenarioConfig = serde_json::from_str(ok).unwrap();
        assert_eq!(cfg.m, 64);
        let bad = r#"{"M":64,"L":2,"p_a":0.1,"snr_db":10,"frames":5,"family":"golay","seed":1,"bogus":3}"#;
        assert!(serde_json::from_str::<ScenarioConfig>(bad).is_err());
    }
}

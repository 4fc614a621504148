//! Golay complementary spreading sequences for grant-free NOMA: GF(2)
//! quadratic forms, sequence and matrix construction, baseline families,
//! coherence and PAPR analysis, permutation-set search, and a link-level
//! simulator with SOMP multiuser detection.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod gf2;
pub mod golay;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod search;
pub mod sim;
pub mod tables;

pub use error::{Error, Result};
pub use gf2::{BinarySequence, Gf2Matrix, Permutation};
pub use matrix::{Family, SpreadingMatrix};

//! Violation estimate from test runs and its delta-method standard error.

use serde::{Deserialize, Serialize};

use crate::qsim::{functional_weight, InstrumentalDistribution, RunRecord, Setting};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationEstimate {
    pub i_star: f64,
    pub delta_prime: f64,
    /// Test runs per setting.
    pub counts: [u64; 3],
}

/// Outcome counts `n(a, b | x)` of the test runs.
pub fn outcome_counts(records: &[RunRecord]) -> [[[u64; 2]; 2]; 3] {
    let mut c = [[[0u64; 2]; 2]; 3];
    for r in records.iter().filter(|r| r.is_test()) {
        c[r.x.index()][r.a as usize][r.b as usize] += 1;
    }
    c
}

/// Empirical distribution from counts; every setting needs a run.
pub fn empirical_distribution(counts: &[[[u64; 2]; 2]; 3]) -> Result<InstrumentalDistribution> {
    let mut p = [[[0.0; 2]; 2]; 3];
    for x in Setting::ALL {
        let block = &counts[x.index()];
        let total: u64 = block.iter().flatten().sum();
        if total == 0 {
            return Err(Error::InsufficientData(format!("no test run with x = {}", x.get())));
        }
        for a in 0..2 {
            for b in 0..2 {
                p[x.index()][a][b] = block[a][b] as f64 / total as f64;
            }
        }
    }
    InstrumentalDistribution::new(p)
}

/// `I*` of the empirical test-run statistics with `δ′` from the
/// multinomial variance of each setting's weighted sum.
pub fn estimate_from_counts(counts: &[[[u64; 2]; 2]; 3]) -> Result<ViolationEstimate> {
    let dist = empirical_distribution(counts)?;
    let mut i_star = 0.0;
    let mut variance = 0.0;
    let mut per_setting = [0u64; 3];
    for x in Setting::ALL {
        let n: u64 = counts[x.index()].iter().flatten().sum();
        per_setting[x.index()] = n;
        let (mut mean, mut second) = (0.0, 0.0);
        for a in 0..2u8 {
            for b in 0..2u8 {
                let w = functional_weight(x, a, b);
                let p = dist.get(x, a, b);
                mean += w * p;
                second += w * w * p;
            }
        }
        i_star += mean;
        variance += (second - mean * mean).max(0.0) / n as f64;
    }
    Ok(ViolationEstimate { i_star, delta_prime: variance.sqrt(), counts: per_setting })
}

pub fn estimate_violation(records: &[RunRecord]) -> Result<ViolationEstimate> {
    estimate_from_counts(&outcome_counts(records))
}

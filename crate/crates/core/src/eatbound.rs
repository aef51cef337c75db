//! Entropy-accumulation bound on the smooth min-entropy of a session.
//!
//! The per-block rate is
//!
//! ```text
//! η(I*, I*_t) = f_min(I*, I*_t)
//!             − 2 √(s′/n) (log₂(1 + 2·6^{s_max}) + 4 |g′(I*_t)|) √(1 − 2 log₂(ε ε_EA))
//! ```
//!
//! maximised over the cut point `I*_t`, and evaluated at
//! `I*_eval = I_exp (1 − (1−γ)^{s_max}) / 3 − κ δ′`, where `κ` is the
//! configurable margin multiplier ([`EATParams::eval_margin`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tradeoff::{self, expected_block_length, BlockParams, TradeoffParams};
use crate::{Error, Result, QUANTUM_MAX};

/// Number of coarse grid points over the cut-point interval.
pub const CUT_GRID: usize = 1000;
/// Golden-section stopping width on the cut point.
pub const CUT_TOL: f64 = 1e-9;
const DENSE_GRID: usize = 200_000;

fn default_margin() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EATParams {
    /// Number of runs.
    pub n: u64,
    /// Smoothing parameter.
    pub eps: f64,
    /// Entropy-accumulation error probability.
    pub eps_ea: f64,
    /// Uncertainty on the estimated violation.
    pub delta_prime: f64,
    /// Expected violation of an honest implementation (normalized units).
    pub i_exp: f64,
    /// Multiplier `κ` of `δ′` subtracted at the evaluation point.
    #[serde(default = "default_margin")]
    pub eval_margin: f64,
    #[serde(default)]
    pub block: BlockParams,
    #[serde(default)]
    pub tradeoff: TradeoffParams,
}

impl EATParams {
    /// Parameters of the reported photonic session.
    pub fn reported_session() -> Self {
        EATParams {
            n: 172_095,
            eps: 0.1,
            eps_ea: 0.1,
            delta_prime: 0.011,
            i_exp: 3.5,
            eval_margin: default_margin(),
            block: BlockParams::default(),
            tradeoff: TradeoffParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        for (name, v) in [("eps", self.eps), ("eps_ea", self.eps_ea)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::domain(format!("{name} = {v} outside (0, 1)")));
            }
        }
        if !(self.delta_prime >= 0.0 && self.delta_prime.is_finite()) {
            return Err(Error::domain(format!("delta_prime = {} must be >= 0", self.delta_prime)));
        }
        if !(self.eval_margin >= 0.0 && self.eval_margin.is_finite()) {
            return Err(Error::domain("eval_margin must be >= 0"));
        }
        if !(self.i_exp >= 0.0 && self.i_exp <= QUANTUM_MAX) {
            return Err(Error::domain(format!("i_exp = {} outside [0, 1+2√2]", self.i_exp)));
        }
        self.block.validate()?;
        self.tradeoff.validate()
    }

    /// `I*` at which the bound is evaluated.
    pub fn eval_point(&self) -> f64 {
        self.block.denormalize(self.i_exp) - self.eval_margin * self.delta_prime
    }

    /// Largest admissible `I*` (maximal violation in joint units).
    pub fn i_star_max(&self) -> f64 {
        self.block.denormalize(QUANTUM_MAX)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// Certified bits per run, floored at zero.
    pub rate: f64,
    /// Certified smooth min-entropy of the whole session, in bits.
    pub total_bits: f64,
    /// Maximising cut point `I*_t`.
    pub optimal_cut: f64,
    /// Evaluation point `I*_eval`.
    pub eval_point: f64,
    /// Optimal per-block value before flooring.
    pub eta_opt: f64,
    pub aborted: bool,
}

impl BoundResult {
    fn abort(eval_point: f64, eta_opt: f64, optimal_cut: f64) -> Self {
        BoundResult { rate: 0.0, total_bits: 0.0, optimal_cut, eval_point, eta_opt, aborted: true }
    }
}

/// Second-order penalty `2 √(s′/n) (log₂(1+2·6^{s_max}) + 4|g′|) √(1 − 2 log₂(ε ε_EA))`.
fn penalty(slope: f64, p: &EATParams) -> f64 {
    let s = expected_block_length(&p.block);
    let s_max = p.block.effective_s_max() as f64;
    let alphabet = if s_max * 6f64.log2() < 1000.0 {
        (1.0 + 2.0 * 6f64.powf(s_max)).log2()
    } else {
        1.0 + s_max * 6f64.log2()
    };
    let confidence = (1.0 - 2.0 * (p.eps * p.eps_ea).log2()).sqrt();
    (s / p.n as f64).sqrt() * 2.0 * (alphabet + 4.0 * slope.abs()) * confidence
}

pub fn eta(i_star: f64, i_star_t: f64, p: &EATParams) -> Result<f64> {
    let fm = tradeoff::f_min(i_star, i_star_t, &p.block, &p.tradeoff)?;
    let slope = tradeoff::g_derivative(i_star_t, &p.block, &p.tradeoff)?;
    Ok(fm - penalty(slope, p))
}

/// Maximises [`eta`] over the cut point: dense grid, then golden-section
/// refinement around the best grid point.
pub fn eta_opt(p: &EATParams) -> Result<BoundResult> {
    p.validate()?;
    let at = p.eval_point();
    let hi = p.i_star_max() * (1.0 - 1e-12);
    if !(at >= 0.0 && at <= p.i_star_max()) {
        return Ok(BoundResult::abort(at, f64::NEG_INFINITY, f64::NAN));
    }
    let objective = |cut: f64| eta(at, cut, p).unwrap_or(f64::NEG_INFINITY);

    let (grid_cut, grid_best) = grid_max(&objective, 0.0, hi, CUT_GRID);
    let step = hi / (CUT_GRID - 1) as f64;
    let lo_b = (grid_cut - step).max(0.0);
    let hi_b = (grid_cut + step).min(hi);
    let (mut cut, mut best) = golden_section_max(&objective, lo_b, hi_b, CUT_TOL);
    if grid_best > best {
        cut = grid_cut;
        best = grid_best;
    }
    if !locally_concave(&objective, cut, lo_b.min(cut), hi_b.max(cut)) {
        let (dense_cut, dense_best) = grid_max(&objective, 0.0, hi, DENSE_GRID);
        if dense_best > best {
            cut = dense_cut;
            best = dense_best;
        }
    }

    if !(best > 0.0) {
        return Ok(BoundResult::abort(at, best, cut));
    }
    let s = expected_block_length(&p.block);
    let rate = best / s;
    Ok(BoundResult {
        rate,
        total_bits: p.n as f64 * rate,
        optimal_cut: cut,
        eval_point: at,
        eta_opt: best,
        aborted: false,
    })
}

/// Certified smooth min-entropy `(n/s′) η_opt`.
pub fn certified_min_entropy(p: &EATParams) -> Result<BoundResult> {
    eta_opt(p)
}

fn grid_max(f: &(impl Fn(f64) -> f64 + Sync), lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let step = (hi - lo) / (points - 1) as f64;
    let values: Vec<f64> = (0..points).into_par_iter().map(|i| f(lo + step * i as f64)).collect();
    let mut best = (lo, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (lo + step * i as f64, v);
        }
    }
    best
}

/// Golden-section search for a maximum of a unimodal function on `[lo, hi]`.
pub fn golden_section_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    [(c, fc), (d, fd), (mid, fm)]
        .into_iter()
        .fold((mid, f64::NEG_INFINITY), |acc, cand| if cand.1 > acc.1 { cand } else { acc })
}

fn locally_concave(f: &impl Fn(f64) -> f64, at: f64, lo: f64, hi: f64) -> bool {
    let h = ((hi - lo) / 4.0).max(1e-7);
    let (l, r) = (at - h, at + h);
    if l < 0.0 {
        return true;
    }
    let d2 = f(r) - 2.0 * f(at) + f(l);
    !d2.is_finite() || d2 <= 1e-6
}

/// `ε_s = ε_EA + m ε_ext + ε/2`.
pub fn soundness(p: &EATParams, m: u64, eps_ext: f64) -> f64 {
    p.eps_ea + m as f64 * eps_ext + p.eps / 2.0
}

/// Hoeffding bound `exp(−2 n δ′²)` on the honest abort probability.
pub fn completeness(n: u64, delta_prime: f64) -> f64 {
    (-2.0 * n as f64 * delta_prime * delta_prime).exp()
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Input randomness charged per run: `h(γ) + γ log₂3`.
pub fn invested_bits(p: &EATParams) -> f64 {
    let gamma = p.block.gamma;
    p.n as f64 * (binary_entropy(gamma) + gamma * 3f64.log2())
}

/// Net randomness `m − n (h(γ) + γ log₂3)`.
pub fn randomness_gain(p: &EATParams, m: u64) -> f64 {
    m as f64 - invested_bits(p)
}

/// Net randomness against a measured input-bit count.
pub fn randomness_gain_measured(m: u64, consumed_bits: u64) -> f64 {
    m as f64 - consumed_bits as f64
}

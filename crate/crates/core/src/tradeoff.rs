//! Fitted per-setting min-entropy bounds and the min-tradeoff function.
//!
//! All entropies are in bits. Violations come in two units: the
//! normalized violation `Ī` of the conditional test-run statistics, and
//! `I* = Ī · (1 − (1−γ)^{s_max}) / 3` of the joint statistics that include
//! the test flag. Functions below take `I*` unless named otherwise.

use serde::{Deserialize, Serialize};

use crate::qsim::Setting;
use crate::{Error, Result, QUANTUM_MAX};

/// Coefficients of `u − w·I − z·√(1+2√2 − I)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConstants {
    pub u: f64,
    pub w: f64,
    pub z: f64,
}

impl FitConstants {
    pub fn eval(&self, i: f64) -> f64 {
        self.u - self.w * i - self.z * (QUANTUM_MAX - i).sqrt()
    }

    /// `d/dI` of [`FitConstants::eval`]; infinite at `I = 1+2√2`.
    pub fn derivative(&self, i: f64) -> f64 {
        -self.w + self.z / (2.0 * (QUANTUM_MAX - i).sqrt())
    }
}

/// Best-fit constants before lowering, setting 1.
pub const UNLOWERED_FIT_1: FitConstants = FitConstants { u: 3.067, w: 0.542, z: 1.579 };
/// Best-fit constants before lowering, settings 2 and 3.
pub const UNLOWERED_FIT_23: FitConstants = FitConstants { u: 3.740, w: 0.657, z: 1.942 };
/// Lowered constants used for certification, setting 1.
pub const LOWERED_FIT_1: FitConstants = FitConstants { u: 3.062, w: 0.542, z: 1.579 };
/// Lowered constants used for certification, settings 2 and 3.
pub const LOWERED_FIT_23: FitConstants = FitConstants { u: 3.735, w: 0.657, z: 1.942 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffParams {
    pub fit1: FitConstants,
    pub fit23: FitConstants,
}

impl Default for TradeoffParams {
    fn default() -> Self {
        TradeoffParams { fit1: LOWERED_FIT_1, fit23: LOWERED_FIT_23 }
    }
}

impl TradeoffParams {
    pub fn unlowered() -> Self {
        TradeoffParams { fit1: UNLOWERED_FIT_1, fit23: UNLOWERED_FIT_23 }
    }

    pub fn validate(&self) -> Result<()> {
        for fit in [self.fit1, self.fit23] {
            if !(fit.w > 0.0 && fit.z > 0.0 && fit.u.is_finite()) {
                return Err(Error::domain(format!("fit constants {fit:?} need w, z > 0")));
            }
        }
        Ok(())
    }

    pub fn for_setting(&self, x: Setting) -> FitConstants {
        if x.get() == 1 {
            self.fit1
        } else {
            self.fit23
        }
    }
}

/// Test-run probability `γ` and the maximal number of consecutive
/// accumulation runs per block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub gamma: f64,
    pub s_max: u32,
}

impl Default for BlockParams {
    fn default() -> Self {
        BlockParams { gamma: 1.0, s_max: 1 }
    }
}

impl BlockParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::domain(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if self.s_max == 0 {
            return Err(Error::domain("s_max must be positive"));
        }
        Ok(())
    }

    /// With `γ = 1` every block ends at its first run.
    pub fn effective_s_max(&self) -> u32 {
        if self.gamma >= 1.0 {
            1
        } else {
            self.s_max
        }
    }

    /// Probability that a block contains a test run, `1 − (1−γ)^{s_max}`.
    pub fn test_fraction(&self) -> f64 {
        1.0 - (1.0 - self.gamma).powi(self.effective_s_max() as i32)
    }

    /// Converts a joint violation `I*` into the normalized violation `Ī`.
    pub fn normalize(&self, i_star: f64) -> f64 {
        3.0 * i_star / self.test_fraction()
    }

    /// Inverse of [`BlockParams::normalize`].
    pub fn denormalize(&self, i_bar: f64) -> f64 {
        i_bar * self.test_fraction() / 3.0
    }
}

/// Expected block length `s′ = (1 − (1−γ)^{s_max}) / γ`.
pub fn expected_block_length(bp: &BlockParams) -> f64 {
    bp.test_fraction() / bp.gamma
}

fn check_violation(i_bar: f64) -> Result<()> {
    if !(0.0..=QUANTUM_MAX).contains(&i_bar) {
        return Err(Error::domain(format!("violation {i_bar} outside [0, 1+2√2]")));
    }
    Ok(())
}

/// `Ī` for a joint violation, absorbing rounding just above the maximum.
fn normalized(i_star: f64, bp: &BlockParams) -> Result<f64> {
    let i_bar = bp.normalize(i_star);
    let i_bar = if i_bar > QUANTUM_MAX && i_bar <= QUANTUM_MAX * (1.0 + 1e-12) { QUANTUM_MAX } else { i_bar };
    check_violation(i_bar)?;
    Ok(i_bar)
}

/// Per-setting min-entropy lower bound, floored at zero.
pub fn f_x(i: f64, x: Setting, tp: &TradeoffParams) -> Result<f64> {
    check_violation(i)?;
    Ok(tp.for_setting(x).eval(i).max(0.0))
}

/// Per-block entropy bound `g(I*) = f₁(Ī) + (s′−1)·f₂₃(Ī)` (unclamped).
pub fn g(i_star: f64, bp: &BlockParams, tp: &TradeoffParams) -> Result<f64> {
    let i_bar = normalized(i_star, bp)?;
    let s = expected_block_length(bp);
    let u = tp.fit1.u + (s - 1.0) * tp.fit23.u;
    let w = tp.fit1.w + (s - 1.0) * tp.fit23.w;
    let z = tp.fit1.z + (s - 1.0) * tp.fit23.z;
    Ok(u - w * i_bar - z * (QUANTUM_MAX - i_bar).sqrt())
}

/// `dg/dI*`, including the `3 / (1 − (1−γ)^{s_max})` chain factor.
pub fn g_derivative(i_star: f64, bp: &BlockParams, tp: &TradeoffParams) -> Result<f64> {
    let i_bar = normalized(i_star, bp)?;
    if QUANTUM_MAX - i_bar <= 0.0 {
        return Err(Error::Singularity(i_bar));
    }
    let s = expected_block_length(bp);
    let d_bar = tp.fit1.derivative(i_bar) + (s - 1.0) * tp.fit23.derivative(i_bar);
    Ok(d_bar * 3.0 / bp.test_fraction())
}

/// Min-tradeoff function: `g` below the cut `I*_t`, its tangent at the cut
/// above.
pub fn f_min(i_star: f64, i_star_t: f64, bp: &BlockParams, tp: &TradeoffParams) -> Result<f64> {
    let slope = g_derivative(i_star_t, bp, tp)?;
    let at_cut = g(i_star_t, bp, tp)?;
    if i_star < i_star_t {
        g(i_star, bp, tp)
    } else {
        normalized(i_star, bp)?;
        Ok(slope * (i_star - i_star_t) + at_cut)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const ONE: BlockParams = BlockParams { gamma: 1.0, s_max: 1 };

    fn x(v: u8) -> Setting {
        Setting::new(v).unwrap()
    }

    #[test]
    fn fitted_bound_values() {
        let tp = TradeoffParams::default();
        assert_abs_diff_eq!(f_x(QUANTUM_MAX, x(1), &tp).unwrap(), 0.9869924983875644, epsilon = 1e-12);
        // 3.062 − 0.542·3.5 − 1.579·√(0.328427…)
        assert_abs_diff_eq!(f_x(3.5, x(1), &tp).unwrap(), 0.260097810296982, epsilon = 1e-12);
        assert_eq!(f_x(3.0, x(1), &tp).unwrap(), 0.0);
        assert!(tp.fit1.eval(3.0) < 0.0);
        assert!(f_x(4.0, x(2), &tp).is_err());
        assert!(f_x(-0.1, x(3), &tp).is_err());
        assert_eq!(f_x(3.6, x(2), &tp).unwrap(), f_x(3.6, x(3), &tp).unwrap());
    }

    #[test]
    fn block_length() {
        assert_eq!(expected_block_length(&BlockParams { gamma: 1.0, s_max: 7 }), 1.0);
        assert_abs_diff_eq!(
            expected_block_length(&BlockParams { gamma: 0.5, s_max: 2 }),
            1.5,
            epsilon = 1e-15
        );
        let s = expected_block_length(&BlockParams { gamma: 1e-9, s_max: 40 });
        assert_relative_eq!(s, 40.0, max_relative = 1e-6);
    }

    #[test]
    fn g_reduces_to_f1_when_every_run_tests() {
        let tp = TradeoffParams::default();
        assert_abs_diff_eq!(g(QUANTUM_MAX / 3.0, &ONE, &tp).unwrap(), 0.9869924983875644, epsilon = 1e-12);
        assert_abs_diff_eq!(g(3.5 / 3.0, &ONE, &tp).unwrap(), 0.260097810296982, epsilon = 1e-12);
        for gamma in [1.0, 0.5, 0.1] {
            let bp = BlockParams { gamma, s_max: 5 };
            assert!(g(bp.denormalize(3.0), &bp, &tp).unwrap() <= 0.0);
        }
        assert!(g(1.5, &ONE, &tp).is_err());
    }

    #[test]
    fn derivative_values() {
        let tp = TradeoffParams::default();
        // 3·(−0.542 + 1.579 / (2√0.628427))
        let want = 3.0 * (-0.542 + 1.579 / (2.0 * (QUANTUM_MAX - 3.2).sqrt()));
        assert_abs_diff_eq!(want, 1.3615, epsilon = 1e-3);
        assert_abs_diff_eq!(g_derivative(3.2 / 3.0, &ONE, &tp).unwrap(), want, epsilon = 1e-12);
        assert!(matches!(
            g_derivative(QUANTUM_MAX / 3.0, &ONE, &tp),
            Err(Error::Singularity(_))
        ));
        let h = 1e-6;
        let at = 3.5 / 3.0;
        let fd = (g(at + h, &ONE, &tp).unwrap() - g(at - h, &ONE, &tp).unwrap()) / (2.0 * h);
        assert_relative_eq!(g_derivative(at, &ONE, &tp).unwrap(), fd, max_relative = 1e-5);
    }

    #[test]
    fn derivative_positive_and_increasing_above_classical() {
        let tp = TradeoffParams::default();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..1000 {
            let i_bar = 3.0 + (QUANTUM_MAX - 3.0) * (i as f64 + 0.5) / 1000.0;
            let d = g_derivative(i_bar / 3.0, &ONE, &tp).unwrap();
            assert!(d > 0.0 && d > prev);
            prev = d;
        }
    }

    #[test]
    fn tangent_extension() {
        let tp = TradeoffParams::default();
        let cut = 3.2 / 3.0;
        let below = 3.1 / 3.0;
        assert_eq!(f_min(below, cut, &ONE, &tp).unwrap(), g(below, &ONE, &tp).unwrap());
        assert_abs_diff_eq!(
            f_min(cut, cut, &ONE, &tp).unwrap(),
            g(cut, &ONE, &tp).unwrap(),
            epsilon = 1e-15
        );
        // Tangent at Ī=3.2 evaluated at Ī=3.456, with slope in Ī units.
        let g_cut = LOWERED_FIT_1.eval(3.2);
        let slope = LOWERED_FIT_1.derivative(3.2);
        assert_abs_diff_eq!(g_cut, 0.07587308372420276, epsilon = 1e-12);
        assert_abs_diff_eq!(slope, 0.45392050293925945, epsilon = 1e-12);
        let want = g_cut + slope * (3.456 - 3.2);
        assert_abs_diff_eq!(f_min(3.456 / 3.0, cut, &ONE, &tp).unwrap(), want, epsilon = 1e-12);
        assert_abs_diff_eq!(want, 0.1920767324766532, epsilon = 1e-12);
    }

    #[test]
    fn shapes_of_the_fits() {
        let tp = TradeoffParams::default();
        let n = 2000;
        let step = (QUANTUM_MAX - 3.0) / n as f64;
        let grid: Vec<f64> = (0..=n).map(|i| 3.0 + step * i as f64).collect();
        for xs in Setting::ALL {
            let vals: Vec<f64> = grid.iter().map(|&i| f_x(i, xs, &tp).unwrap()).collect();
            for w in vals.windows(3) {
                assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-9);
                assert!(w[1] >= w[0]);
            }
        }
        // the curves cross just above the classical bound
        for &i in grid.iter().filter(|&&i| i >= 3.03) {
            assert!(f_x(i, x(2), &tp).unwrap() >= f_x(i, x(1), &tp).unwrap());
        }
    }

    proptest! {
        #[test]
        fn tangent_underestimates_g(
            gamma in 0.05f64..=1.0,
            s_max in 1u32..6,
            cut_bar in 0.5f64..3.8,
            at_bar in 0.0f64..QUANTUM_MAX,
        ) {
            let bp = BlockParams { gamma, s_max };
            let tp = TradeoffParams::default();
            let cut = bp.denormalize(cut_bar);
            let at = bp.denormalize(at_bar);
            let fm = f_min(at, cut, &bp, &tp).unwrap();
            let gv = g(at, &bp, &tp).unwrap();
            prop_assert!(fm <= gv + 1e-12);
        }

        #[test]
        fn derivative_matches_finite_differences(
            gamma in 0.05f64..=1.0,
            s_max in 1u32..6,
            at_bar in 0.2f64..3.75,
        ) {
            let bp = BlockParams { gamma, s_max };
            let tp = TradeoffParams::default();
            let at = bp.denormalize(at_bar);
            let h = 1e-6 * at.max(1e-3);
            let fd = (g(at + h, &bp, &tp).unwrap() - g(at - h, &bp, &tp).unwrap()) / (2.0 * h);
            let an = g_derivative(at, &bp, &tp).unwrap();
            prop_assert!((an - fd).abs() <= 1e-5 * an.abs().max(1e-3), "{} vs {}", an, fd);
        }
    }
}

//! Born-rule statistics of the instrumental scenario.
//!
//! Alice measures one of three dichotomic observables selected by the
//! instrument `x ∈ {1, 2, 3}`; Bob's choice of observable equals Alice's
//! outcome bit. Outcome bit 0 corresponds to eigenvalue +1 and bit 1 to
//! eigenvalue −1, so that `⟨AB⟩_x = Σ (−1)^{a+b} p(a,b|x)`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-10;
const NORMALIZATION_TOL: f64 = 1e-12;
const NEGATIVE_TOL: f64 = 1e-14;

/// Runs per independently seeded chunk in [`sample_runs`].
pub const SAMPLE_CHUNK: usize = 4096;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn pauli_z() -> Matrix2<C64> {
    Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

fn max_hermitian_defect<const N: usize>(
    m: &nalgebra::SMatrix<C64, N, N>,
) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..N {
        for col in 0..N {
            worst = worst.max((m[(r, col)] - m[(col, r)].conj()).norm());
        }
    }
    worst
}

/// Setting of Alice's instrument, `x ∈ {1, 2, 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Setting(u8);

impl Setting {
    pub const ALL: [Setting; 3] = [Setting(1), Setting(2), Setting(3)];

    pub fn new(x: u8) -> Result<Self> {
        if (1..=3).contains(&x) {
            Ok(Setting(x))
        } else {
            Err(Error::domain(format!("setting {x} is not in {{1, 2, 3}}")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub(crate) fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl TryFrom<u8> for Setting {
    type Error = Error;
    fn try_from(x: u8) -> Result<Self> {
        Setting::new(x)
    }
}

impl From<Setting> for u8 {
    fn from(s: Setting) -> u8 {
        s.0
    }
}

/// Two-qubit density operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "json::StateJson", into = "json::StateJson")]
pub struct TwoQubitState {
    rho: Matrix4<C64>,
}

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(rho: Matrix4<C64>) -> Result<Self> {
        let defect = max_hermitian_defect(&rho);
        if defect > HERMITIAN_TOL {
            return Err(Error::domain(format!("density matrix not Hermitian (defect {defect:e})")));
        }
        let trace = rho.trace();
        if (trace - c(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::domain(format!("density matrix trace {trace} is not 1")));
        }
        let state = TwoQubitState { rho };
        let min_eig = state.eigenvalues()[0];
        if min_eig < -PSD_TOL {
            return Err(Error::domain(format!(
                "density matrix not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(state)
    }

    pub fn rho(&self) -> &Matrix4<C64> {
        &self.rho
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = self.rho.symmetric_eigenvalues();
        let mut out = [eig[0], eig[1], eig[2], eig[3]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }
}

/// `v |ψ⁻⟩⟨ψ⁻| + (1 − v) I/4` with `|ψ⁻⟩ = (|01⟩ − |10⟩)/√2`.
pub fn noisy_singlet(v: f64) -> Result<TwoQubitState> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::domain(format!("visibility {v} outside [0, 1]")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = nalgebra::Vector4::new(c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0));
    let singlet = psi * psi.adjoint();
    let rho = singlet * c(v, 0.0) + Matrix4::identity() * c((1.0 - v) / 4.0, 0.0);
    TwoQubitState::new(rho)
}

/// Dichotomic (±1-valued) qubit observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "json::MatrixJson2", into = "json::MatrixJson2")]
pub struct Observable {
    op: Matrix2<C64>,
}

impl Observable {
    pub fn new(op: Matrix2<C64>) -> Result<Self> {
        let defect = max_hermitian_defect(&op);
        if defect > EIGEN_TOL {
            return Err(Error::domain(format!("observable not Hermitian (defect {defect:e})")));
        }
        // Hermitian 2×2: eigenvalues tr/2 ± sqrt((tr/2)² − det).
        let half_tr = op.trace().re / 2.0;
        let det = op.determinant().re;
        let disc = (half_tr * half_tr - det).max(0.0).sqrt();
        let (lo, hi) = (half_tr - disc, half_tr + disc);
        if (lo + 1.0).abs() > EIGEN_TOL || (hi - 1.0).abs() > EIGEN_TOL {
            return Err(Error::domain(format!(
                "observable eigenvalues ({lo}, {hi}) are not {{-1, +1}}"
            )));
        }
        Ok(Observable { op })
    }

    /// Observable `cos θ σ_z + sin θ (cos φ σ_x + sin φ σ_y)`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let op = Matrix2::new(
            c(ct, 0.0),
            c(st * cp, -st * sp),
            c(st * cp, st * sp),
            c(-ct, 0.0),
        );
        Observable { op }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.op
    }

    /// `(I + (−1)^bit O) / 2`.
    pub fn projector(&self, bit: u8) -> Matrix2<C64> {
        let sign = if bit == 0 { 1.0 } else { -1.0 };
        (Matrix2::identity() + self.op * c(sign, 0.0)) * c(0.5, 0.0)
    }
}

/// Alice's three observables and Bob's two, indexed by Alice's outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstrumentalStrategy {
    pub alice: [Observable; 3],
    pub bob: [Observable; 2],
}

impl InstrumentalStrategy {
    pub fn alice(&self, x: Setting) -> &Observable {
        &self.alice[x.index()]
    }

    /// Bob's observable when Alice reported outcome bit `a`.
    pub fn bob(&self, a: u8) -> &Observable {
        &self.bob[a as usize]
    }
}

/// The operators that reach `1 + 2√2` on the singlet.
pub fn canonical_strategy() -> InstrumentalStrategy {
    let sx = pauli_x();
    let sz = pauli_z();
    let r = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let obs = |m: Matrix2<C64>| Observable { op: m };
    InstrumentalStrategy {
        alice: [obs(-(sz - sx) * r), obs(-sx), obs(sz)],
        bob: [obs((sx - sz) * r), obs(-(sx + sz) * r)],
    }
}

/// Conditional distribution `p(a, b | x)`, stored as `p[x-1][a][b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstrumentalDistribution {
    p: [[[f64; 2]; 2]; 3],
}

impl InstrumentalDistribution {
    /// Validates normalisation per setting; entries down to `-1e-14` are
    /// clamped to zero.
    pub fn new(mut p: [[[f64; 2]; 2]; 3]) -> Result<Self> {
        for (xi, block) in p.iter_mut().enumerate() {
            let mut total = 0.0;
            for v in block.iter_mut().flatten() {
                if !v.is_finite() || *v < -NEGATIVE_TOL {
                    return Err(Error::domain(format!("invalid probability {v} for x = {}", xi + 1)));
                }
                *v = v.max(0.0);
                total += *v;
            }
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::domain(format!(
                    "p(·,·|x={}) sums to {total}, not 1",
                    xi + 1
                )));
            }
        }
        Ok(InstrumentalDistribution { p })
    }

    pub fn uniform() -> Self {
        InstrumentalDistribution { p: [[[0.25; 2]; 2]; 3] }
    }

    pub fn get(&self, x: Setting, a: u8, b: u8) -> f64 {
        self.p[x.index()][a as usize][b as usize]
    }

    pub fn table(&self) -> &[[[f64; 2]; 2]; 3] {
        &self.p
    }

    /// `⟨A⟩_x`.
    pub fn alice_correlator(&self, x: Setting) -> f64 {
        self.correlator(x, |a, _| sign(a))
    }

    /// `⟨B⟩_x`.
    pub fn bob_correlator(&self, x: Setting) -> f64 {
        self.correlator(x, |_, b| sign(b))
    }

    /// `⟨AB⟩_x`.
    pub fn joint_correlator(&self, x: Setting) -> f64 {
        self.correlator(x, |a, b| sign(a) * sign(b))
    }

    fn correlator(&self, x: Setting, f: impl Fn(u8, u8) -> f64) -> f64 {
        let mut acc = 0.0;
        for a in 0..2u8 {
            for b in 0..2u8 {
                acc += f(a, b) * self.get(x, a, b);
            }
        }
        acc
    }
}

fn sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `p(a,b|x) = Tr[(Π_{a|x} ⊗ Π_{b|y=a}) ρ]`.
pub fn born_probabilities(
    state: &TwoQubitState,
    strategy: &InstrumentalStrategy,
) -> Result<InstrumentalDistribution> {
    let mut p = [[[0.0; 2]; 2]; 3];
    for x in Setting::ALL {
        for a in 0..2u8 {
            let pa = strategy.alice(x).projector(a);
            for b in 0..2u8 {
                let pb = strategy.bob(a).projector(b);
                p[x.index()][a as usize][b as usize] = (kron(&pa, &pb) * state.rho()).trace().re;
            }
        }
    }
    InstrumentalDistribution::new(p)
}

/// Alice's marginal `Tr[(Π_{a|x} ⊗ I) ρ]`, computed without Bob.
pub fn alice_marginal(state: &TwoQubitState, strategy: &InstrumentalStrategy, x: Setting, a: u8) -> f64 {
    let pa = strategy.alice(x).projector(a);
    (kron(&pa, &Matrix2::identity()) * state.rho()).trace().re
}

/// `I = ⟨A⟩₁ − ⟨B⟩₁ + 2⟨B⟩₂ − ⟨AB⟩₁ + 2⟨AB⟩₃`.
pub fn instrumental_value(dist: &InstrumentalDistribution) -> f64 {
    let [x1, x2, x3] = Setting::ALL;
    dist.alice_correlator(x1) - dist.bob_correlator(x1) + 2.0 * dist.bob_correlator(x2)
        - dist.joint_correlator(x1)
        + 2.0 * dist.joint_correlator(x3)
}

/// Weight of `p(a,b|x)` in the instrumental functional, so that
/// `I = Σ_{x,a,b} w(x,a,b) p(a,b|x)`.
pub fn functional_weight(x: Setting, a: u8, b: u8) -> f64 {
    let (sa, sb) = (sign(a), sign(b));
    match x.get() {
        1 => sa - sb - sa * sb,
        2 => 2.0 * sb,
        _ => 2.0 * sa * sb,
    }
}

/// Local deterministic strategy: `a = alice[x-1]`, `b = bob[a]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub alice: [u8; 3],
    pub bob: [u8; 2],
}

impl DeterministicStrategy {
    pub fn distribution(&self) -> InstrumentalDistribution {
        let mut p = [[[0.0; 2]; 2]; 3];
        for (xi, &a) in self.alice.iter().enumerate() {
            p[xi][a as usize][self.bob[a as usize] as usize] = 1.0;
        }
        InstrumentalDistribution { p }
    }

    /// All 32 strategies, in lexicographic order of `(alice, bob)`.
    pub fn all() -> impl Iterator<Item = DeterministicStrategy> {
        (0u8..32).map(|code| DeterministicStrategy {
            alice: [(code >> 4) & 1, (code >> 3) & 1, (code >> 2) & 1],
            bob: [(code >> 1) & 1, code & 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMax {
    pub value: f64,
    pub maximizers: Vec<DeterministicStrategy>,
}

/// Enumerates every deterministic strategy and returns the best value of
/// the functional together with all strategies attaining it.
pub fn classical_max() -> ClassicalMax {
    let scored: Vec<_> = DeterministicStrategy::all()
        .map(|s| (s, instrumental_value(&s.distribution())))
        .collect();
    // Deterministic values are small integers, so exact comparison is safe.
    let value = scored.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let maximizers = scored.into_iter().filter(|&(_, v)| v == value).map(|(s, _)| s).collect();
    ClassicalMax { value, maximizers }
}

/// One run of the protocol: setting, outcomes and test flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunRecord {
    pub x: Setting,
    pub a: u8,
    pub b: u8,
    pub t: u8,
}

impl RunRecord {
    pub fn new(x: Setting, a: u8, b: u8, t: u8) -> Result<Self> {
        if a > 1 || b > 1 || t > 1 {
            return Err(Error::domain(format!("record bits out of range: a={a} b={b} t={t}")));
        }
        Ok(RunRecord { x, a, b, t })
    }

    pub fn is_test(&self) -> bool {
        self.t == 1
    }
}

/// Draws `(a, b) ~ p(·,·|x)` for every `(x, t)` in `settings`.
///
/// Seed schema: runs are split into chunks of [`SAMPLE_CHUNK`]; chunk `c`
/// uses `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, drawing one `f64`
/// per run, and the outcome is chosen by inverse CDF over
/// `(0,0), (0,1), (1,0), (1,1)`. Chunks are sampled in parallel; the output
/// does not depend on scheduling.
pub fn sample_runs(dist: &InstrumentalDistribution, settings: &[(Setting, u8)], seed: u64) -> Vec<RunRecord> {
    settings
        .par_chunks(SAMPLE_CHUNK)
        .enumerate()
        .flat_map_iter(|(chunk, part)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            part.iter()
                .map(|&(x, t)| {
                    let u: f64 = rng.random();
                    let (a, b) = inverse_cdf(&dist.p[x.index()], u);
                    RunRecord { x, a, b, t: t.min(1) }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn inverse_cdf(block: &[[f64; 2]; 2], u: f64) -> (u8, u8) {
    let mut acc = 0.0;
    let mut last = (0u8, 0u8);
    for a in 0..2u8 {
        for b in 0..2u8 {
            let p = block[a as usize][b as usize];
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = (a, b);
            if u < acc {
                return (a, b);
            }
        }
    }
    last
}

mod json {
    //! Complex matrices as row-major nested `[re, im]` pairs.

    use super::*;

    #[derive(Serialize, Deserialize)]
    pub struct StateJson {
        rho: Vec<Vec<[f64; 2]>>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(transparent)]
    pub struct MatrixJson2(Vec<Vec<[f64; 2]>>);

    fn rows<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> Vec<Vec<[f64; 2]>> {
        (0..N).map(|r| (0..N).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect()).collect()
    }

    fn parse<const N: usize>(rows: &[Vec<[f64; 2]>]) -> Result<nalgebra::SMatrix<C64, N, N>> {
        if rows.len() != N || rows.iter().any(|r| r.len() != N) {
            return Err(Error::Format(format!("expected a {N}x{N} complex matrix")));
        }
        Ok(nalgebra::SMatrix::from_fn(|r, col| {
            let [re, im] = rows[r][col];
            c(re, im)
        }))
    }

    impl TryFrom<StateJson> for TwoQubitState {
        type Error = Error;
        fn try_from(j: StateJson) -> Result<Self> {
            TwoQubitState::new(parse::<4>(&j.rho)?)
        }
    }

    impl From<TwoQubitState> for StateJson {
        fn from(s: TwoQubitState) -> Self {
            StateJson { rho: rows(&s.rho) }
        }
    }

    impl TryFrom<MatrixJson2> for Observable {
        type Error = Error;
        fn try_from(j: MatrixJson2) -> Result<Self> {
            Observable::new(parse::<2>(&j.0)?)
        }
    }

    impl From<Observable> for MatrixJson2 {
        fn from(o: Observable) -> Self {
            MatrixJson2(rows(&o.op))
        }
    }
}

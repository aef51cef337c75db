//! Session orchestration: run scheduling, violation estimation, the
//! threshold test, the entropy bound and extraction.

pub mod estimate;
pub mod records;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::eatbound::{self, BoundResult, EATParams};
use crate::qsim::{self, InstrumentalStrategy, RunRecord, Setting, TwoQubitState};
use crate::seedsource::{self, BeaconClient, BeaconConfig, BitStream};
use crate::trevisan::{self, DesignKind, ExtractorParams};
use crate::{Error, Result};

pub use estimate::{estimate_violation, ViolationEstimate};
pub use records::{read_records, write_records, RecordSidecar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SeedPolicy {
    /// Raw bit files read back to back.
    File { paths: Vec<PathBuf> },
    /// Beacon pulses; unset fields fall back to the environment.
    Beacon {
        #[serde(default)]
        base_url: Option<String>,
        #[serde(default)]
        cache_dir: Option<PathBuf>,
        #[serde(default)]
        offline: bool,
        /// First pulse, in seconds since the epoch.
        #[serde(default)]
        start_time: Option<i64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Backend {
    /// Born-rule sampling. The state is the noisy singlet at `visibility`
    /// unless given explicitly; the strategy defaults to the canonical one.
    Simulate {
        #[serde(default)]
        visibility: Option<f64>,
        #[serde(default)]
        state: Option<TwoQubitState>,
        #[serde(default)]
        strategy: Option<InstrumentalStrategy>,
        rng_seed: u64,
    },
    /// Previously recorded runs.
    Ingest { records: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub eat: EATParams,
    pub eps_ext: f64,
    #[serde(default)]
    pub design: DesignKind,
    pub seed: SeedPolicy,
    pub backend: Backend,
}

impl SessionConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<()> {
        self.eat.validate()?;
        if !(self.eps_ext > 0.0 && self.eps_ext < 1.0) {
            return Err(Error::domain(format!("eps_ext = {} outside (0, 1)", self.eps_ext)));
        }
        Ok(())
    }

    pub fn open_seed_stream(&self) -> Result<BitStream> {
        match &self.seed {
            SeedPolicy::File { paths } => seedsource::file_sources(paths),
            SeedPolicy::Beacon { base_url, cache_dir, offline, start_time } => {
                let mut cfg = BeaconConfig::from_env();
                if let Some(url) = base_url {
                    cfg.base_url = url.clone();
                }
                if let Some(dir) = cache_dir {
                    cfg.cache_dir = dir.clone();
                }
                cfg.offline = *offline;
                Ok(BeaconClient::new(cfg).stream(*start_time))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub n: u64,
    pub test_runs: u64,
    pub observed_i: f64,
    pub delta_prime_observed: f64,
    /// `I_exp − δ′`.
    pub threshold: f64,
    pub bound: Option<BoundResult>,
    pub extractor: Option<ExtractorParams>,
    pub extracted: BitString,
    pub soundness: f64,
    pub completeness: f64,
    /// Bits spent on run settings.
    pub setting_bits: u64,
    /// Bits spent on the extractor seed.
    pub seed_bits: u64,
    /// Total bits drawn from the input source.
    pub consumed_input_bits: u64,
    pub randomness_gain: f64,
    pub randomness_gain_measured: f64,
    pub aborted: bool,
    /// Why the session aborted or produced no output.
    pub reason: Option<String>,
}

/// Draws `T` for every run and, for test runs, `x` from a uniform trit;
/// accumulation runs use `x = 2`.
pub fn draw_settings(n: u64, gamma: f64, s: &mut BitStream) -> Result<Vec<(Setting, u8)>> {
    let gamma = seedsource::exact_ratio(gamma)?;
    let accumulate = Setting::new(2)?;
    (0..n)
        .map(|_| {
            let t = seedsource::bernoulli_sample(gamma, s)?;
            let x = if t == 1 { Setting::new(seedsource::next_trit(s)?)? } else { accumulate };
            Ok((x, t))
        })
        .collect()
}

/// Runs of the session: fresh settings and simulated outcomes, or the
/// ingested records.
pub fn acquire_runs(cfg: &SessionConfig, s: &mut BitStream) -> Result<Vec<RunRecord>> {
    match &cfg.backend {
        Backend::Simulate { visibility, state, strategy, rng_seed } => {
            let state = match (state, visibility) {
                (Some(st), _) => st.clone(),
                (None, Some(v)) => qsim::noisy_singlet(*v)?,
                (None, None) => return Err(Error::Session("simulation needs a state or a visibility".into())),
            };
            let strategy = strategy.clone().unwrap_or_else(qsim::canonical_strategy);
            let dist = qsim::born_probabilities(&state, &strategy)?;
            let settings = draw_settings(cfg.eat.n, cfg.eat.block.gamma, s).map_err(session_error)?;
            Ok(qsim::sample_runs(&dist, &settings, *rng_seed))
        }
        Backend::Ingest { records } => {
            let (runs, _) = read_records(records)?;
            if runs.len() as u64 != cfg.eat.n {
                return Err(Error::Session(format!(
                    "record file holds {} runs, configuration expects {}",
                    runs.len(),
                    cfg.eat.n
                )));
            }
            Ok(runs)
        }
    }
}

fn session_error(e: Error) -> Error {
    match e {
        Error::Session(_) => e,
        other => Error::Session(other.to_string()),
    }
}

/// Raw source: `(a, b)` of every run in run order.
pub fn raw_source(runs: &[RunRecord]) -> BitString {
    runs.iter().flat_map(|r| [r.a, r.b]).collect()
}

pub fn run_session(cfg: &SessionConfig) -> Result<SessionResult> {
    cfg.validate()?;
    let mut stream = cfg.open_seed_stream().map_err(session_error)?;
    run_session_with_stream(cfg, &mut stream)
}

pub fn run_session_with_stream(cfg: &SessionConfig, stream: &mut BitStream) -> Result<SessionResult> {
    cfg.validate()?;
    let p = &cfg.eat;
    let runs = acquire_runs(cfg, stream)?;
    let setting_bits = stream.consumed();
    let test_runs = runs.iter().filter(|r| r.is_test()).count() as u64;
    let est = estimate_violation(&runs).map_err(session_error)?;
    let threshold = p.i_exp - p.delta_prime;

    let mut result = SessionResult {
        n: runs.len() as u64,
        test_runs,
        observed_i: est.i_star,
        delta_prime_observed: est.delta_prime,
        threshold,
        bound: None,
        extractor: None,
        extracted: BitString::new(),
        soundness: eatbound::soundness(p, 0, cfg.eps_ext),
        completeness: eatbound::completeness(p.n, p.delta_prime),
        setting_bits,
        seed_bits: 0,
        consumed_input_bits: setting_bits,
        randomness_gain: eatbound::randomness_gain(p, 0),
        randomness_gain_measured: eatbound::randomness_gain_measured(0, setting_bits),
        aborted: false,
        reason: None,
    };

    if est.i_star < threshold {
        result.aborted = true;
        result.reason = Some(format!(
            "observed violation {:.6} below threshold {:.6}",
            est.i_star, threshold
        ));
        return Ok(result);
    }

    let bound = eatbound::certified_min_entropy(p)?;
    result.bound = Some(bound);
    if bound.aborted {
        result.reason = Some(format!("entropy bound is not positive (η_opt = {})", bound.eta_opt));
        return Ok(result);
    }

    let source = raw_source(&runs);
    let params = match trevisan::compute_params(source.len() as u64, bound.total_bits, cfg.eps_ext, cfg.design) {
        Ok(params) => params,
        Err(Error::InsufficientEntropy { k }) => {
            result.reason = Some(format!("min-entropy {k} too small for any output bit"));
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    let seed = stream.take(params.d as usize).map_err(session_error)?;
    let extracted = trevisan::extract(&source, &seed, &params)?;

    result.seed_bits = params.d;
    result.consumed_input_bits = stream.consumed();
    result.soundness = eatbound::soundness(p, params.m, cfg.eps_ext);
    result.randomness_gain = eatbound::randomness_gain(p, params.m);
    result.randomness_gain_measured = eatbound::randomness_gain_measured(params.m, setting_bits);
    result.extractor = Some(params);
    result.extracted = extracted;
    Ok(result)
}

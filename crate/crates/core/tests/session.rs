use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dirng_core::bits::BitString;
use dirng_core::eatbound::{self, EATParams};
use dirng_core::protocol::{self, Backend, SeedPolicy, SessionConfig};
use dirng_core::trevisan::DesignKind;

fn seed_file(dir: &Path, bits: usize) -> std::path::PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s: BitString = (0..bits).map(|_| rng.random::<bool>() as u8).collect();
    let path = dir.join("seed.bin");
    s.write_file(&path).unwrap();
    path
}

fn config(n: u64, v: f64, seed: &Path) -> SessionConfig {
    SessionConfig {
        eat: EATParams { n, ..EATParams::reported_session() },
        eps_ext: 1e-6,
        design: DesignKind::Block,
        seed: SeedPolicy::File { paths: vec![seed.to_owned()] },
        backend: Backend::Simulate { visibility: Some(v), state: None, strategy: None, rng_seed: 5 },
    }
}

#[test]
fn reported_scale_session_extracts() {
    let dir = tempfile::tempdir().unwrap();
    let seed = seed_file(dir.path(), 2_000_000);
    let cfg = config(172_095, 0.95, &seed);
    let r = protocol::run_session(&cfg).unwrap();
    assert!(!r.aborted);
    let bound = r.bound.unwrap();
    let params = r.extractor.clone().unwrap();
    assert_eq!(params.k, bound.total_bits.floor() as u64);
    assert_eq!(r.extracted.len() as u64, params.m);
    assert!(params.m > 5000);
    assert_eq!(r.soundness, eatbound::soundness(&cfg.eat, params.m, cfg.eps_ext));
    assert_eq!(r.consumed_input_bits, r.setting_bits + params.d);
    assert!(r.randomness_gain < 0.0);
    // every run is a test run when γ = 1
    assert_eq!(r.test_runs, 172_095);
}

#[test]
fn short_session_passes_threshold_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let seed = seed_file(dir.path(), 1_000_000);
    let r = protocol::run_session(&config(100_000, 0.95, &seed)).unwrap();
    assert!(!r.aborted);
    assert!(r.extracted.is_empty());
    assert!(r.reason.unwrap().contains("not positive"));
}

#[test]
fn session_result_round_trips_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let seed = seed_file(dir.path(), 2_000_000);
    let r = protocol::run_session(&config(150_000, 0.97, &seed)).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: protocol::SessionResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}

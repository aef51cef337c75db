//! Randomness-beacon client (pulse format of the public v2 API) with an
//! on-disk pulse cache and an offline mode.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::BitStream;
use crate::bits::BitString;
use crate::{Error, Result};

pub const DEFAULT_BEACON_URL: &str = "https://beacon.nist.gov/beacon/2.0";
pub const PULSE_BITS: usize = 512;
/// Spacing of consecutive pulses, in seconds.
pub const PULSE_PERIOD: i64 = 60;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeaconRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub output: [u8; PULSE_BITS / 8],
    pub uri: String,
}

impl BeaconRecord {
    pub fn bits(&self) -> BitString {
        BitString::from_bytes(self.output.to_vec(), PULSE_BITS).expect("64 bytes hold 512 bits")
    }

    /// Parses a pulse document `{"pulse": {"timeStamp", "outputValue", "uri"}}`.
    pub fn parse(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            pulse: Pulse,
        }
        #[derive(Deserialize)]
        #[serde(rename_all = "camelCase")]
        struct Pulse {
            time_stamp: String,
            output_value: String,
            #[serde(default)]
            uri: String,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Format(format!("beacon pulse: {e}")))?;
        let p = doc.pulse;
        let timestamp = chrono::DateTime::parse_from_rfc3339(&p.time_stamp)
            .map_err(|e| Error::Format(format!("beacon timestamp '{}': {e}", p.time_stamp)))?
            .timestamp();
        let raw = hex::decode(p.output_value.trim()).map_err(|e| Error::Format(format!("beacon output: {e}")))?;
        let output: [u8; PULSE_BITS / 8] = raw.try_into().map_err(|v: Vec<u8>| {
            Error::Format(format!("beacon output has {} bits, expected {PULSE_BITS}", v.len() * 8))
        })?;
        Ok(BeaconRecord { timestamp, output, uri: p.uri })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconConfig {
    pub base_url: String,
    pub cache_dir: PathBuf,
    #[serde(default)]
    pub offline: bool,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    20
}

impl BeaconConfig {
    /// Reads `BEACON_URL` and `BEACON_CACHE_DIR`, falling back to the
    /// public endpoint and `./beacon-cache`.
    pub fn from_env() -> Self {
        BeaconConfig {
            base_url: std::env::var("BEACON_URL").unwrap_or_else(|_| DEFAULT_BEACON_URL.to_owned()),
            cache_dir: std::env::var_os("BEACON_CACHE_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("beacon-cache")),
            offline: false,
            timeout_secs: default_timeout(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BeaconClient {
    config: BeaconConfig,
    agent: ureq::Agent,
}

impl BeaconClient {
    pub fn new(config: BeaconConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .new_agent();
        BeaconClient { config, agent }
    }

    pub fn config(&self) -> &BeaconConfig {
        &self.config
    }

    fn cache_path(&self, key: i64) -> PathBuf {
        self.config.cache_dir.join(format!("pulse-{key}.json"))
    }

    fn cached_keys(&self) -> Vec<i64> {
        let Ok(entries) = fs::read_dir(&self.config.cache_dir) else {
            return Vec::new();
        };
        let mut keys: Vec<i64> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_prefix("pulse-")?.strip_suffix(".json")?.parse().ok()
            })
            .collect();
        keys.sort_unstable();
        keys
    }

    fn read_cached(&self, path: &Path) -> Result<BeaconRecord> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        BeaconRecord::parse(&text)
    }

    fn download(&self, url: &str) -> Result<String> {
        self.agent
            .get(url)
            .call()
            .and_then(|mut r| r.body_mut().read_to_string())
            .map_err(|e| Error::Unavailable(format!("{url}: {e}")))
    }

    fn store(&self, key: i64, text: &str) -> Result<()> {
        let dir = &self.config.cache_dir;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = self.cache_path(key);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// The pulse for `time` (seconds since the epoch), or the latest pulse.
    /// Cached pulses are served without network access; the cache key is the
    /// requested time, or the pulse's own time for latest-pulse requests.
    pub fn fetch(&self, time: Option<i64>) -> Result<BeaconRecord> {
        if let Some(t) = time {
            let path = self.cache_path(t);
            if path.exists() {
                return self.read_cached(&path);
            }
        }
        let latest_cached = || -> Result<BeaconRecord> {
            match self.cached_keys().last() {
                Some(&k) => self.read_cached(&self.cache_path(k)),
                None => Err(Error::Unavailable("no cached pulse".into())),
            }
        };
        if self.config.offline {
            return match time {
                Some(t) => Err(Error::Unavailable(format!("offline and pulse {t} is not cached"))),
                None => latest_cached(),
            };
        }
        let base = self.config.base_url.trim_end_matches('/');
        let url = match time {
            Some(t) => format!("{base}/pulse/time/{}", t * 1000),
            None => format!("{base}/pulse/last"),
        };
        let text = match self.download(&url) {
            Ok(text) => text,
            Err(e) if time.is_none() => return latest_cached().map_err(|_| e),
            Err(e) => return Err(e),
        };
        let record = BeaconRecord::parse(&text)?;
        self.store(time.unwrap_or(record.timestamp), &text)?;
        Ok(record)
    }

    /// Bits of consecutive pulses. From a start time the stream walks forward
    /// one pulse period at a time; without one it starts at the latest pulse
    /// and walks backward.
    pub fn stream(self, start: Option<i64>) -> BitStream {
        let mut next = start;
        let mut step = PULSE_PERIOD;
        BitStream::with_refill(move || {
            let record = self.fetch(next)?;
            if next.is_none() {
                step = -PULSE_PERIOD;
            }
            next = Some(next.unwrap_or(record.timestamp) + step);
            Ok(Some(record.bits()))
        })
    }
}

//! Session record files: one byte per run, `x` in bits 7–6, `a` in bit 5,
//! `b` in bit 4 and `t` in bit 3, plus a `<path>.json` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::qsim::{RunRecord, Setting};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSidecar {
    pub n: u64,
    /// SHA-256 of the generating configuration, hex encoded.
    pub config_hash: String,
}

pub fn encode_record(r: &RunRecord) -> u8 {
    (r.x.get() << 6) | (r.a << 5) | (r.b << 4) | (r.t << 3)
}

pub fn decode_record(byte: u8) -> Result<RunRecord> {
    if byte & 0x07 != 0 {
        return Err(Error::Format(format!("record byte {byte:#04x} has reserved bits set")));
    }
    let x = Setting::new(byte >> 6).map_err(|_| Error::Format(format!("record byte {byte:#04x} has no valid setting")))?;
    RunRecord::new(x, (byte >> 5) & 1, (byte >> 4) & 1, (byte >> 3) & 1)
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_records(path: &Path, records: &[RunRecord], config_hash: &str) -> Result<()> {
    let bytes: Vec<u8> = records.iter().map(encode_record).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let meta = RecordSidecar { n: records.len() as u64, config_hash: config_hash.to_owned() };
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&side, e))
}

pub fn read_records(path: &Path) -> Result<(Vec<RunRecord>, RecordSidecar)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let meta: RecordSidecar = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        serde_json::from_str(&text)?
    } else {
        RecordSidecar { n: bytes.len() as u64, config_hash: String::new() }
    };
    if meta.n != bytes.len() as u64 {
        return Err(Error::Format(format!("sidecar announces {} records, file holds {}", meta.n, bytes.len())));
    }
    let records = bytes.into_iter().map(decode_record).collect::<Result<_>>()?;
    Ok((records, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_layout() {
        let r = RunRecord::new(Setting::new(3).unwrap(), 1, 0, 1).unwrap();
        assert_eq!(encode_record(&r), 0b1110_1000);
        assert!(decode_record(0b0010_0000).is_err());
        assert!(decode_record(0b0100_0001).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.bin");
        let records: Vec<RunRecord> = Setting::ALL
            .iter()
            .flat_map(|&x| (0..8u8).map(move |k| RunRecord::new(x, k & 1, (k >> 1) & 1, k >> 2).unwrap()))
            .collect();
        write_records(&path, &records, "abc").unwrap();
        let (back, meta) = read_records(&path).unwrap();
        assert_eq!(back, records);
        assert_eq!(meta, RecordSidecar { n: 24, config_hash: "abc".into() });

        std::fs::write(&path, [0x48]).unwrap();
        assert!(matches!(read_records(&path), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn encode_decode(x in 1u8..=3, a in 0u8..2, b in 0u8..2, t in 0u8..2) {
            let r = RunRecord::new(Setting::new(x).unwrap(), a, b, t).unwrap();
            prop_assert_eq!(decode_record(encode_record(&r)).unwrap(), r);
        }
    }
}

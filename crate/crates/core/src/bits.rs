//! Packed bit strings, most-significant bit first within each byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BitsJson", into = "BitsJson")]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

/// JSON sidecar carrying the exact bit length of a raw bit file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitSidecar {
    pub bits: u64,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        BitString { bytes: vec![0; len.div_ceil(8)], len }
    }

    /// Takes the first `len` bits of `bytes`; trailing bits are cleared.
    pub fn from_bytes(mut bytes: Vec<u8>, len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::Format(format!("{len} bits requested from {} bytes", bytes.len())));
        }
        bytes.truncate(len.div_ceil(8));
        if !len.is_multiple_of(8) {
            let last = bytes.len() - 1;
            bytes[last] &= 0xFFu8 << (8 - len % 8);
        }
        Ok(BitString { bytes, len })
    }

    pub fn from_bits(bits: impl IntoIterator<Item = u8>) -> Self {
        let mut out = BitString::new();
        for b in bits {
            out.push(b);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        debug_assert!(i < self.len);
        (self.bytes[i / 8] >> (7 - i % 8)) & 1
    }

    pub fn push(&mut self, bit: u8) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit & 1 == 1 {
            self.bytes[self.len / 8] |= 1 << (7 - self.len % 8);
        }
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    /// Bits `start..start+width` as an unsigned integer, first bit most
    /// significant. `width` is at most 128.
    pub fn read_uint(&self, start: usize, width: usize) -> u128 {
        debug_assert!(width <= 128);
        let mut v = 0u128;
        for i in start..start + width {
            let bit = if i < self.len { self.get(i) } else { 0 };
            v = (v << 1) | bit as u128;
        }
        v
    }

    /// Bits at the given positions, in order.
    pub fn select(&self, positions: impl IntoIterator<Item = usize>) -> BitString {
        BitString::from_bits(positions.into_iter().map(|p| self.get(p)))
    }

    pub fn count_ones(&self) -> u64 {
        self.bytes.iter().map(|b| b.count_ones() as u64).sum()
    }

    fn sidecar_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".json");
        PathBuf::from(name)
    }

    /// Reads a raw bit file. The length comes from `<path>.json` when it
    /// exists, otherwise from the file size.
    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let sidecar = Self::sidecar_path(path);
        let len = if sidecar.exists() {
            let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            let meta: BitSidecar = serde_json::from_str(&text)?;
            meta.bits as usize
        } else {
            bytes.len() * 8
        };
        BitString::from_bytes(bytes, len)
    }

    /// Writes the packed bytes and a `<path>.json` sidecar with the length.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        fs::write(path, &self.bytes).map_err(|e| Error::io(path, e))?;
        let sidecar = Self::sidecar_path(path);
        let meta = serde_json::to_string(&BitSidecar { bits: self.len as u64 })?;
        fs::write(&sidecar, meta).map_err(|e| Error::io(&sidecar, e))
    }
}

/// JSON form: bit length plus the packed bytes in hex.
#[derive(Serialize, Deserialize)]
struct BitsJson {
    bits: u64,
    hex: String,
}

impl TryFrom<BitsJson> for BitString {
    type Error = Error;

    fn try_from(j: BitsJson) -> Result<Self> {
        let bytes = hex::decode(&j.hex).map_err(|e| Error::Format(e.to_string()))?;
        BitString::from_bytes(bytes, j.bits as usize)
    }
}

impl From<BitString> for BitsJson {
    fn from(s: BitString) -> Self {
        BitsJson { bits: s.len as u64, hex: hex::encode(&s.bytes) }
    }
}

impl FromIterator<u8> for BitString {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        BitString::from_bits(iter)
    }
}

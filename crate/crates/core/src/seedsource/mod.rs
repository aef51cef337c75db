//! Public input randomness: bit streams from files or the randomness
//! beacon, and their conversion to uniform trits and Bernoulli samples.

pub mod beacon;

use std::path::Path;

use num_rational::Ratio;

use crate::bits::BitString;
use crate::{Error, Result};

pub use beacon::{BeaconClient, BeaconConfig, BeaconRecord};

type Refill = Box<dyn FnMut() -> Result<Option<BitString>> + Send>;

/// Single-consumer bit supply. Bits are handed out once, in order; an
/// optional refill callback appends new blocks when the buffer runs dry.
pub struct BitStream {
    buf: BitString,
    pos: usize,
    consumed: u64,
    refill: Option<Refill>,
}

impl std::fmt::Debug for BitStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BitStream")
            .field("buffered", &(self.buf.len() - self.pos))
            .field("consumed", &self.consumed)
            .field("refillable", &self.refill.is_some())
            .finish()
    }
}

impl BitStream {
    pub fn from_bits(bits: BitString) -> Self {
        BitStream { buf: bits, pos: 0, consumed: 0, refill: None }
    }

    /// A stream that calls `refill` for more bits; `Ok(None)` ends it.
    pub fn with_refill(refill: impl FnMut() -> Result<Option<BitString>> + Send + 'static) -> Self {
        BitStream { buf: BitString::new(), pos: 0, consumed: 0, refill: Some(Box::new(refill)) }
    }

    /// Total bits handed out so far.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn next_bit(&mut self) -> Result<u8> {
        while self.pos == self.buf.len() {
            let more = match self.refill.as_mut() {
                Some(refill) => refill()?,
                None => None,
            };
            match more {
                Some(block) => {
                    self.buf = block;
                    self.pos = 0;
                }
                None => {
                    self.refill = None;
                    return Err(Error::Exhausted { consumed: self.consumed });
                }
            }
        }
        let bit = self.buf.get(self.pos);
        self.pos += 1;
        self.consumed += 1;
        Ok(bit)
    }

    pub fn take(&mut self, n: usize) -> Result<BitString> {
        let mut out = BitString::new();
        for _ in 0..n {
            out.push(self.next_bit()?);
        }
        Ok(out)
    }
}

/// Streams the bits of the given raw bit files back to back.
pub fn file_sources<P: AsRef<Path>>(paths: &[P]) -> Result<BitStream> {
    let mut blocks = paths
        .iter()
        .map(|p| BitString::read_file(p.as_ref()))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    Ok(BitStream::with_refill(move || Ok(blocks.next())))
}

pub fn file_source(path: impl AsRef<Path>) -> Result<BitStream> {
    file_sources(&[path])
}

/// Uniform trit in `{1, 2, 3}` by two-bit rejection: `00→1, 01→2, 10→3`,
/// `11` is discarded.
pub fn next_trit(s: &mut BitStream) -> Result<u8> {
    loop {
        let pair = (s.next_bit()? << 1) | s.next_bit()?;
        if pair != 3 {
            return Ok(pair + 1);
        }
    }
}

pub fn bits_to_trits(s: &mut BitStream, count: usize) -> Result<Vec<u8>> {
    (0..count).map(|_| next_trit(s)).collect()
}

/// Exact rational value of a finite `f64` in `[0, 1]`.
pub fn exact_ratio(x: f64) -> Result<Ratio<u128>> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("{x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(Ratio::from_integer(0));
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let (mant, exp) = if exp == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    let shift = mant.trailing_zeros() as i32;
    let (mant, exp) = (mant >> shift, exp + shift);
    if exp >= 0 {
        return Ok(Ratio::from_integer((mant as u128) << exp));
    }
    if -exp > 126 {
        return Err(Error::domain(format!("{x} is too small to represent exactly")));
    }
    Ok(Ratio::new(mant as u128, 1u128 << -exp))
}

/// Draws `T ∈ {0, 1}` with `P(T = 1) = γ` by the interval algorithm:
/// stream bits form the binary expansion of `U ∈ [0, 1)`, compared digit by
/// digit with `θ = 1 − γ`; the output is `1` iff `U ≥ θ`. Only as many bits
/// as needed to decide are consumed, so `γ = 1` uses none and `γ = 1/2`
/// returns the next bit.
pub fn bernoulli_sample(gamma: Ratio<u128>, s: &mut BitStream) -> Result<u8> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    if gamma <= zero || gamma > one {
        return Err(Error::domain(format!("gamma {gamma} outside (0, 1]")));
    }
    let theta = one - gamma;
    let den = *theta.denom();
    let mut rem = *theta.numer();
    loop {
        if rem == 0 {
            // remaining digits of θ are zero and U agrees so far
            return Ok(1);
        }
        // next binary digit of θ
        let digit = if rem >= den - rem {
            rem -= den - rem;
            1
        } else {
            rem *= 2;
            0
        };
        let u = s.next_bit()?;
        if u != digit {
            return Ok(u);
        }
    }
}

//! Binary extension fields `GF(2^h)` for `1 ≤ h ≤ 127`.
//!
//! Elements are `u128` polynomials over GF(2), bit `i` holding the
//! coefficient of `x^i`. Each degree uses a fixed low-weight irreducible
//! modulus: the trinomial `x^h + x^k + 1` with the smallest `k` when one
//! exists, otherwise the pentanomial `x^h + x^a + x^b + x^c + 1` with the
//! lexicographically smallest `(a, b, c)`.

use crate::{Error, Result};

pub const MAX_DEGREE: u32 = 127;

/// Middle exponents of the modulus for each degree (the `x^h` and `1`
/// terms are implicit). Index 0 is unused.
pub(crate) const LOW_TERMS: [&[u8]; 128] = [
    &[], // unused
    &[], &[1], &[1], &[1], &[2], &[1], &[1], &[4, 3, 1],
    &[1], &[3], &[2], &[3], &[4, 3, 1], &[5], &[1], &[5, 3, 1],
    &[3], &[3], &[5, 2, 1], &[3], &[2], &[1], &[5], &[4, 3, 1],
    &[3], &[4, 3, 1], &[5, 2, 1], &[1], &[2], &[1], &[3], &[7, 3, 2],
    &[10], &[7], &[2], &[9], &[6, 4, 1], &[6, 5, 1], &[4], &[5, 4, 3],
    &[3], &[7], &[6, 4, 3], &[5], &[4, 3, 1], &[1], &[5], &[5, 3, 2],
    &[9], &[4, 3, 2], &[6, 3, 1], &[3], &[6, 2, 1], &[9], &[7], &[7, 4, 2],
    &[4], &[19], &[7, 4, 2], &[1], &[5, 2, 1], &[29], &[1], &[4, 3, 1],
    &[18], &[3], &[5, 2, 1], &[9], &[6, 5, 2], &[5, 3, 1], &[6], &[10, 9, 3],
    &[25], &[35], &[6, 3, 1], &[21], &[6, 5, 2], &[6, 5, 3], &[9], &[9, 4, 2],
    &[4], &[8, 3, 1], &[7, 4, 2], &[5], &[8, 2, 1], &[21], &[13], &[7, 6, 2],
    &[38], &[27], &[8, 5, 1], &[21], &[2], &[21], &[11], &[10, 9, 6],
    &[6], &[11], &[6, 3, 1], &[15], &[7, 6, 1], &[29], &[9], &[4, 3, 1],
    &[4], &[15], &[9, 7, 4], &[17], &[5, 4, 2], &[33], &[10], &[5, 4, 3],
    &[9], &[5, 3, 2], &[8, 7, 5], &[4, 2, 1], &[5, 2, 1], &[33], &[8], &[4, 3, 1],
    &[18], &[6, 2, 1], &[2], &[19], &[7, 6, 5], &[21], &[1],
];

/// Carry-less product of two 64-bit polynomials.
#[inline]
pub fn clmul64(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: the required CPU feature was detected at runtime.
            return unsafe { clmul64_pclmul(a, b) };
        }
    }
    clmul64_portable(a, b)
}

/// Table-driven carry-less multiplication, four bits of `b` at a time.
pub fn clmul64_portable(a: u64, b: u64) -> u128 {
    let mut table = [0u128; 16];
    let a = a as u128;
    for i in 1..16 {
        table[i] = if i & 1 == 1 { table[i ^ 1] ^ a } else { table[i >> 1] << 1 };
    }
    let mut acc = 0u128;
    for nibble in (0..16).rev() {
        acc = (acc << 4) ^ table[((b >> (4 * nibble)) & 0xF) as usize];
    }
    acc
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq", enable = "sse2")]
unsafe fn clmul64_pclmul(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::*;
    let va = _mm_set_epi64x(0, a as i64);
    let vb = _mm_set_epi64x(0, b as i64);
    let p = _mm_clmulepi64_si128(va, vb, 0x00);
    let lo = _mm_cvtsi128_si64(p) as u64;
    let hi = _mm_cvtsi128_si64(_mm_unpackhi_epi64(p, p)) as u64;
    ((hi as u128) << 64) | lo as u128
}

/// Carry-less product of two 128-bit polynomials as `(high, low)` halves.
#[inline]
pub fn clmul128(a: u128, b: u128) -> (u128, u128) {
    let (a0, a1) = (a as u64, (a >> 64) as u64);
    let (b0, b1) = (b as u64, (b >> 64) as u64);
    let lo = clmul64(a0, b0);
    let hi = clmul64(a1, b1);
    let mid = clmul64(a0 ^ a1, b0 ^ b1) ^ lo ^ hi;
    (hi ^ (mid >> 64), lo ^ (mid << 64))
}

#[inline]
fn shl256(x: u128, s: u32) -> (u128, u128) {
    match s {
        0 => (0, x),
        1..=127 => (x >> (128 - s), x << s),
        _ => (x << (s - 128), 0),
    }
}

#[inline]
fn shr256(hi: u128, lo: u128, s: u32) -> u128 {
    match s {
        0 => lo,
        1..=127 => (lo >> s) | (hi << (128 - s)),
        _ => hi >> (s - 128),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryField {
    degree: u32,
    low_terms: &'static [u8],
    mask: u128,
}

impl BinaryField {
    pub fn new(degree: u32) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::domain(format!(
                "field degree {degree} outside [1, {MAX_DEGREE}]"
            )));
        }
        Ok(BinaryField {
            degree,
            low_terms: LOW_TERMS[degree as usize],
            mask: (1u128 << degree) - 1,
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Modulus without its leading `x^h` term.
    pub fn modulus_low(&self) -> u128 {
        self.low_terms.iter().fold(1u128, |acc, &e| acc | (1u128 << e))
    }

    #[inline]
    pub fn mul(&self, a: u128, b: u128) -> u128 {
        if self.degree <= 64 {
            self.reduce_narrow(clmul64(a as u64, b as u64))
        } else {
            let (hi, lo) = clmul128(a, b);
            self.reduce_wide(hi, lo)
        }
    }

    /// Folds `top · x^h ≡ top · (x^a + … + 1)` until the degree drops below `h`.
    #[inline]
    fn reduce_narrow(&self, mut p: u128) -> u128 {
        let h = self.degree;
        loop {
            let top = p >> h;
            if top == 0 {
                return p;
            }
            p &= self.mask;
            p ^= top;
            for &e in self.low_terms {
                p ^= top << e;
            }
        }
    }

    fn reduce_wide(&self, mut hi: u128, mut lo: u128) -> u128 {
        let h = self.degree;
        loop {
            let top = shr256(hi, lo, h);
            if top == 0 {
                return lo;
            }
            hi = 0;
            lo &= self.mask;
            lo ^= top;
            for &e in self.low_terms {
                let (sh, sl) = shl256(top, e as u32);
                hi ^= sh;
                lo ^= sl;
            }
        }
    }

    pub fn pow(&self, mut base: u128, mut exp: u128) -> u128 {
        let mut acc = 1u128;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Horner evaluation of `Σ coeffs[i] · z^i`.
    #[inline]
    pub fn eval_poly(&self, coeffs: &[u128], z: u128) -> u128 {
        coeffs.iter().rev().fold(0u128, |acc, &c| self.mul(acc, z) ^ c)
    }
}

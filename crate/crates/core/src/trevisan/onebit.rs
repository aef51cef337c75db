//! One-bit extractor: Reed–Solomon code over `GF(2^h)` concatenated with
//! the Hadamard code.

use super::gf2::BinaryField;
use crate::bits::BitString;
use crate::{Error, Result};

/// The source, parsed once into polynomial coefficients.
#[derive(Clone, Debug)]
pub struct RsHadamard {
    field: BinaryField,
    coeffs: Vec<u128>,
}

impl RsHadamard {
    /// Splits `source` into `h`-bit blocks (most significant bit first,
    /// zero-padded); block `i` is the coefficient of `z^i`.
    pub fn new(source: &BitString, h: u32) -> Result<Self> {
        let field = BinaryField::new(h)?;
        let h = h as usize;
        let count = source.len().div_ceil(h).max(1);
        if h < 127 && count as u128 > 1u128 << h {
            return Err(Error::domain(format!(
                "{count} coefficients do not fit in GF(2^{h})"
            )));
        }
        let coeffs = (0..count).map(|i| source.read_uint(i * h, h)).collect();
        Ok(RsHadamard { field, coeffs })
    }

    pub fn field_degree(&self) -> u32 {
        self.field.degree()
    }

    /// Seed bits consumed per output bit.
    pub fn seed_len(&self) -> usize {
        2 * self.field.degree() as usize
    }

    pub fn coefficients(&self) -> &[u128] {
        &self.coeffs
    }

    /// `⟨p(α), β⟩` for `α, β` packed as field elements.
    #[inline]
    pub fn eval(&self, alpha: u128, beta: u128) -> u8 {
        let y = self.field.eval_poly(&self.coeffs, alpha);
        ((y & beta).count_ones() & 1) as u8
    }

    /// `subseed` holds `α` then `β`, `h` bits each.
    pub fn extract_bit(&self, subseed: impl IntoIterator<Item = u8>) -> u8 {
        let h = self.field.degree() as usize;
        let mut alpha = 0u128;
        let mut beta = 0u128;
        for (i, b) in subseed.into_iter().take(2 * h).enumerate() {
            if i < h {
                alpha = (alpha << 1) | b as u128;
            } else {
                beta = (beta << 1) | b as u128;
            }
        }
        self.eval(alpha, beta)
    }
}

/// Single output bit of the one-bit extractor for a `2h`-bit subseed.
pub fn one_bit_extract(source: &BitString, subseed: &BitString) -> Result<u8> {
    if !subseed.len().is_multiple_of(2) || subseed.is_empty() {
        return Err(Error::domain("subseed must have positive even length"));
    }
    let ext = RsHadamard::new(source, subseed.len() as u32 / 2)?;
    Ok(ext.extract_bit(subseed.iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
        (0..n).map(|_| rng.random::<bool>() as u8).collect()
    }

    #[test]
    fn zero_source_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let source = BitString::zeros(500);
        for _ in 0..50 {
            let seed = random_bits(&mut rng, 24);
            assert_eq!(one_bit_extract(&source, &seed).unwrap(), 0);
        }
    }

    #[test]
    fn zero_beta_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ext = RsHadamard::new(&random_bits(&mut rng, 300), 10).unwrap();
        for alpha in 0..64 {
            assert_eq!(ext.eval(alpha, 0), 0);
        }
    }

    #[test]
    fn single_block_is_hadamard() {
        // one coefficient: p(α) = c for every α
        let source = BitString::from_bits([1, 0, 1, 1, 0, 1]);
        let c = 0b101101u128;
        let ext = RsHadamard::new(&source, 6).unwrap();
        assert_eq!(ext.coefficients(), &[c]);
        for beta in 0..64u128 {
            assert_eq!(ext.eval(17, beta) as u32, (c & beta).count_ones() % 2);
        }
    }

    #[test]
    fn coefficient_layout() {
        let source = BitString::from_bits([1, 1, 0, 0, 1]);
        let ext = RsHadamard::new(&source, 2).unwrap();
        assert_eq!(ext.coefficients(), &[0b11, 0b00, 0b10]);
        // p(1) = 3 ^ 0 ^ 2 = 1
        assert_eq!(ext.field.eval_poly(ext.coefficients(), 1), 1);
    }

    #[test]
    fn too_many_coefficients() {
        assert!(RsHadamard::new(&BitString::zeros(20), 2).is_err());
    }

    #[test]
    fn output_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let source = random_bits(&mut rng, 2000);
        let ext = RsHadamard::new(&source, 16).unwrap();
        let n = 100_000;
        let ones: u32 = (0..n)
            .map(|_| ext.eval(rng.random::<u16>() as u128, rng.random::<u16>() as u128) as u32)
            .sum();
        let z = (ones as f64 - n as f64 / 2.0) / (n as f64 / 4.0).sqrt();
        assert!(z.abs() < 4.5, "z = {z}");
    }
}

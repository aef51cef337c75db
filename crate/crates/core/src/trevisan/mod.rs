//! Trevisan's extractor with RS∘Hadamard one-bit extractors and either the
//! polynomial (standard) or the block weak design.

pub mod design;
pub mod gf2;
pub mod onebit;

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::{Error, Result};
pub use design::{
    block_depth, block_schedule, block_weak_design, next_prime, standard_weak_design,
    verify_weak_design, DesignReport, WeakDesign, STANDARD_OVERLAP,
};
pub use onebit::{one_bit_extract, RsHadamard};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    #[default]
    Block,
    Standard,
}

impl DesignKind {
    /// Overlap parameter `r` of the design family.
    pub fn overlap(self) -> f64 {
        match self {
            DesignKind::Block => 1.0,
            DesignKind::Standard => STANDARD_OVERLAP,
        }
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(DesignKind::Block),
            "standard" => Ok(DesignKind::Standard),
            other => Err(Error::domain(format!("unknown design '{other}'"))),
        }
    }
}

impl std::fmt::Display for DesignKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DesignKind::Block => "block",
            DesignKind::Standard => "standard",
        })
    }
}

/// A weak source together with the min-entropy it is claimed to carry.
#[derive(Clone, Debug)]
pub struct BitSource {
    pub bits: BitString,
    pub claimed_min_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractorParams {
    pub n_in: u64,
    /// Min-entropy after flooring.
    pub k: u64,
    pub eps_ext: f64,
    pub design: DesignKind,
    /// Subseed length before field adjustment.
    pub raw_t: u32,
    /// Subseed length actually used; `t/2` is the RS field degree.
    pub t: u32,
    /// Prime field size of the polynomial design; sets have `t′` elements.
    pub t_prime: u32,
    /// Block depth (1 for the standard design).
    pub l: u32,
    /// Seed length.
    pub d: u64,
    /// Output length.
    pub m: u64,
    pub r: f64,
}

impl ExtractorParams {
    pub fn field_degree(&self) -> u32 {
        self.t / 2
    }
}

pub fn compute_params(n_in: u64, k: f64, eps_ext: f64, design: DesignKind) -> Result<ExtractorParams> {
    if n_in < 2 {
        return Err(Error::domain("source must have at least 2 bits"));
    }
    if !(eps_ext > 0.0 && eps_ext < 1.0) {
        return Err(Error::domain(format!("eps_ext = {eps_ext} outside (0, 1)")));
    }
    if !(k > 0.0 && k <= n_in as f64) {
        return Err(Error::domain(format!("min-entropy {k} outside (0, {n_in}]")));
    }
    let log_inv_eps = (1.0 / eps_ext).log2();
    let raw_half = ((n_in as f64).log2() + 2.0 * (2.0 / eps_ext).log2()).ceil() as u32;
    let raw_t = 2 * raw_half;

    let mut h = raw_half.max(1);
    while h < gf2::MAX_DEGREE && (n_in.div_ceil(h as u64) as u128) > (1u128 << h) {
        h += 1;
    }
    if h > gf2::MAX_DEGREE {
        return Err(Error::Capacity(format!("field degree {h} exceeds {}", gf2::MAX_DEGREE)));
    }
    let t = 2 * h;
    let t_prime = next_prime(t);

    let k = k.floor() as u64;
    let r = design.overlap();
    let m_real = ((k as f64) - 4.0 * log_inv_eps - 6.0) / r;
    let m = if m_real < 1.0 { 0 } else { m_real.floor() as u64 };
    if m < 1 {
        return Err(Error::InsufficientEntropy { k });
    }
    let l = match design {
        DesignKind::Block => block_depth(m as usize, t),
        DesignKind::Standard => 1,
    };
    let segment = (t_prime as u64).pow(2);
    let d = match design {
        DesignKind::Block => (l as u64 + 1) * segment,
        DesignKind::Standard => segment,
    };
    Ok(ExtractorParams { n_in, k, eps_ext, design, raw_t, t, t_prime, l, d, m, r })
}

pub fn build_design(params: &ExtractorParams) -> Result<WeakDesign> {
    let m = params.m as usize;
    match params.design {
        DesignKind::Block => block_weak_design(m, params.t_prime, params.l),
        DesignKind::Standard => standard_weak_design(m, params.t_prime),
    }
}

/// Runs the extractor with a prebuilt design. Output bit `i` is the
/// one-bit extractor applied to the first `t` seed bits indexed by `S_i`.
pub fn extract_with_design(
    source: &BitString,
    seed: &BitString,
    params: &ExtractorParams,
    design: &WeakDesign,
) -> Result<BitString> {
    if source.len() as u64 != params.n_in {
        return Err(Error::domain(format!(
            "source has {} bits, parameters expect {}",
            source.len(),
            params.n_in
        )));
    }
    if (seed.len() as u64) < params.d {
        return Err(Error::domain(format!("seed has {} bits, need {}", seed.len(), params.d)));
    }
    if design.len() as u64 != params.m || design.set_size() < params.t as usize {
        return Err(Error::domain("design does not match the extractor parameters"));
    }
    let ext = RsHadamard::new(source, params.field_degree())?;
    let t = params.t as usize;
    let bits: Vec<u8> = (0..design.len())
        .into_par_iter()
        .map(|i| ext.extract_bit(design.set(i)[..t].iter().map(|&p| seed.get(p as usize))))
        .collect();
    Ok(BitString::from_bits(bits))
}

pub fn extract(source: &BitString, seed: &BitString, params: &ExtractorParams) -> Result<BitString> {
    let design = build_design(params)?;
    extract_with_design(source, seed, params, &design)
}

/// Parameters derived from a source's length and claimed min-entropy.
pub fn extract_source(source: &BitSource, seed: &BitString, eps_ext: f64, design: DesignKind) -> Result<BitString> {
    let params = compute_params(source.bits.len() as u64, source.claimed_min_entropy, eps_ext, design)?;
    extract(&source.bits, seed, &params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulationRow {
    pub n_in: u64,
    pub eps_ext: f64,
    pub alpha: f64,
    pub t: u32,
    pub l: u32,
    pub d: u64,
    pub m: u64,
}

/// Parameter table over a grid; `alpha` is the min-entropy rate `k/n_in`.
/// Grid points without output are skipped.
pub fn tabulate_params(n_ins: &[u64], eps_exts: &[f64], alphas: &[f64], design: DesignKind) -> Result<Vec<TabulationRow>> {
    if n_ins.is_empty() || eps_exts.is_empty() || alphas.is_empty() {
        return Err(Error::domain("tabulation grids must be nonempty"));
    }
    let mut rows = Vec::new();
    for &n_in in n_ins {
        for &eps_ext in eps_exts {
            for &alpha in alphas {
                match compute_params(n_in, alpha * n_in as f64, eps_ext, design) {
                    Ok(p) => rows.push(TabulationRow { n_in, eps_ext, alpha, t: p.t, l: p.l, d: p.d, m: p.m }),
                    Err(Error::InsufficientEntropy { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_tabulation_csv(rows: &[TabulationRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_in", "eps_ext", "alpha", "t", "l", "d", "m"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for r in rows {
        w.write_record([
            r.n_in.to_string(),
            r.eps_ext.to_string(),
            r.alpha.to_string(),
            r.t.to_string(),
            r.l.to_string(),
            r.d.to_string(),
            r.m.to_string(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

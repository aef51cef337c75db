//! Weak designs: families of `t`-subsets of `[d]` with bounded cumulative
//! overlap `Σ_{j<i} 2^{|S_j ∩ S_i|} ≤ r·m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Overlap `r′ = 2e` of the polynomial design.
pub const STANDARD_OVERLAP: f64 = 2.0 * std::f64::consts::E;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakDesign {
    set_size: usize,
    seed_len: u64,
    indices: Vec<u32>,
}

impl WeakDesign {
    /// Builds a design from explicit sets over `[0, seed_len)`.
    pub fn from_sets(sets: &[Vec<u32>], seed_len: u64) -> Result<Self> {
        let set_size = sets.first().map_or(0, Vec::len);
        let mut indices = Vec::with_capacity(sets.len() * set_size);
        for s in sets {
            if s.len() != set_size {
                return Err(Error::domain("all sets of a design must have the same size"));
            }
            if let Some(&bad) = s.iter().find(|&&e| e as u64 >= seed_len) {
                return Err(Error::domain(format!("index {bad} outside seed of length {seed_len}")));
            }
            indices.extend_from_slice(s);
        }
        Ok(WeakDesign { set_size, seed_len, indices })
    }

    pub fn len(&self) -> usize {
        if self.set_size == 0 {
            0
        } else {
            self.indices.len() / self.set_size
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn set_size(&self) -> usize {
        self.set_size
    }

    pub fn seed_len(&self) -> u64 {
        self.seed_len
    }

    pub fn set(&self, i: usize) -> &[u32] {
        &self.indices[i * self.set_size..(i + 1) * self.set_size]
    }

    pub fn sets(&self) -> impl Iterator<Item = &[u32]> {
        self.indices.chunks(self.set_size.max(1))
    }
}

/// Smallest prime `≥ n` (and `≥ 2`).
pub fn next_prime(n: u32) -> u32 {
    let is_prime = |p: u32| p >= 2 && (2..).take_while(|q| q * q <= p).all(|q| !p.is_multiple_of(q));
    (n.max(2)..).find(|&p| is_prime(p)).expect("primes are unbounded")
}

/// Number of polynomial coefficients needed to index `m` sets over `GF(q)`.
fn coefficient_count(m: usize, q: u32) -> usize {
    let mut c = 1;
    let mut capacity = q as u128;
    while capacity < m as u128 {
        c += 1;
        capacity = capacity.saturating_mul(q as u128);
    }
    c
}

/// Appends the graph `{(a, p_i(a)) : a ∈ GF(q)}` of the `i`-th polynomial,
/// flattened to `offset + a·q + p_i(a)`. Coefficients are the base-`q`
/// digits of `i`, constant term first.
fn push_polynomial_set(out: &mut Vec<u32>, i: usize, q: u32, degree_bound: usize, offset: u64) {
    let q64 = q as u64;
    let mut coeffs = Vec::with_capacity(degree_bound);
    let mut rest = i as u64;
    for _ in 0..degree_bound {
        coeffs.push(rest % q64);
        rest /= q64;
    }
    for a in 0..q64 {
        let value = coeffs.iter().rev().fold(0u64, |acc, &c| (acc * a + c) % q64);
        out.push((offset + a * q64 + value) as u32);
    }
}

/// Polynomial weak design with `m` sets of size `q` over `[q²]`, `q` prime.
pub fn standard_weak_design(m: usize, t_prime: u32) -> Result<WeakDesign> {
    check_prime(t_prime)?;
    let mut indices = Vec::with_capacity(m * t_prime as usize);
    standard_into(&mut indices, m, t_prime, 0)?;
    Ok(WeakDesign { set_size: t_prime as usize, seed_len: (t_prime as u64).pow(2), indices })
}

fn standard_into(out: &mut Vec<u32>, m: usize, q: u32, offset: u64) -> Result<()> {
    if m == 0 {
        return Ok(());
    }
    let degree_bound = coefficient_count(m, q);
    if degree_bound > q as usize {
        return Err(Error::Capacity(format!("{m} sets exceed q^q for q = {q}")));
    }
    for i in 0..m {
        push_polynomial_set(out, i, q, degree_bound, offset);
    }
    Ok(())
}

fn check_prime(q: u32) -> Result<()> {
    if next_prime(q) != q {
        return Err(Error::domain(format!("design field size {q} is not prime")));
    }
    if (q as u64).pow(2) > u32::MAX as u64 / 64 {
        return Err(Error::Capacity(format!("field size {q} too large for 32-bit seed indices")));
    }
    Ok(())
}

/// Depth `l = max{1, ⌈(log(m−r′) − log(t−r′)) / (log r′ − log(r′−1))⌉}`.
pub fn block_depth(m: usize, t: u32) -> u32 {
    let r = STANDARD_OVERLAP;
    let (m, t) = (m as f64, t as f64);
    if m <= t || t <= r {
        return 1;
    }
    let l = ((m - r).log2() - (t - r).log2()) / (r.log2() - (r - 1.0).log2());
    (l.ceil() as u32).max(1)
}

/// Sets per segment: each of the first `l` segments takes `⌈rest / r′⌉` of
/// the remaining sets until the remainder fits into pairwise disjoint sets
/// (at most `q`), which then fill the next segment.
pub fn block_schedule(m: usize, t_prime: u32, depth: u32) -> Vec<usize> {
    let mut rest = m;
    let mut shares = Vec::with_capacity(depth as usize + 1);
    for _ in 0..depth {
        if rest <= t_prime as usize {
            break;
        }
        let share = (rest as f64 / STANDARD_OVERLAP).ceil() as usize;
        shares.push(share);
        rest -= share;
    }
    shares.push(rest);
    shares.resize(depth as usize + 1, 0);
    shares
}

/// Block weak design with overall overlap 1: `depth + 1` polynomial designs
/// on disjoint seed segments of length `q²`.
pub fn block_weak_design(m: usize, t_prime: u32, depth: u32) -> Result<WeakDesign> {
    check_prime(t_prime)?;
    let segment = (t_prime as u64).pow(2);
    let seed_len = segment * (depth as u64 + 1);
    if seed_len > u32::MAX as u64 {
        return Err(Error::Capacity(format!("seed length {seed_len} exceeds 32-bit indices")));
    }
    let mut indices = Vec::with_capacity(m * t_prime as usize);
    for (b, &share) in block_schedule(m, t_prime, depth).iter().enumerate() {
        standard_into(&mut indices, share, t_prime, b as u64 * segment)?;
    }
    Ok(WeakDesign { set_size: t_prime as usize, seed_len, indices })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub passed: bool,
    pub sizes_ok: bool,
    /// Index of the set with the largest overlap sum.
    pub worst_index: usize,
    pub worst_sum: f64,
    /// `r · m`.
    pub bound: f64,
}

/// Exhaustively checks both weak-design conditions.
pub fn verify_weak_design(design: &WeakDesign, r: f64) -> DesignReport {
    let m = design.len();
    let bound = r * m as f64;
    let sizes_ok = design.set_size > 0 && design.indices.len() == m * design.set_size;
    if m == 0 {
        return DesignReport { passed: sizes_ok, sizes_ok, worst_index: 0, worst_sum: 0.0, bound };
    }

    // Inverted index: seed position -> sets containing it, in increasing order.
    let d = design.seed_len as usize;
    let mut starts = vec![0u32; d + 1];
    for &e in &design.indices {
        starts[e as usize + 1] += 1;
    }
    for i in 0..d {
        starts[i + 1] += starts[i];
    }
    let mut fill = starts.clone();
    let mut owners = vec![0u32; design.indices.len()];
    for (i, s) in design.sets().enumerate() {
        for &e in s {
            owners[fill[e as usize] as usize] = i as u32;
            fill[e as usize] += 1;
        }
    }

    let sums: Vec<f64> = (0..m)
        .into_par_iter()
        .map_init(
            || (vec![0u32; m], Vec::<u32>::new()),
            |(counts, touched), i| {
                for &e in design.set(i) {
                    let range = starts[e as usize] as usize..starts[e as usize + 1] as usize;
                    for &j in owners[range].iter().take_while(|&&j| (j as usize) < i) {
                        if counts[j as usize] == 0 {
                            touched.push(j);
                        }
                        counts[j as usize] += 1;
                    }
                }
                let disjoint = (i - touched.len()) as f64;
                let mut sum = disjoint;
                for &j in touched.iter() {
                    sum += 2f64.powi(counts[j as usize] as i32);
                    counts[j as usize] = 0;
                }
                touched.clear();
                sum
            },
        )
        .collect();

    let (worst_index, worst_sum) = sums
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    DesignReport { passed: sizes_ok && worst_sum <= bound, sizes_ok, worst_index, worst_sum, bound }
}

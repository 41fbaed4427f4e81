//! Constant-composition distribution matcher.
//!
//! Maps fixed-length bit strings to amplitude-index sequences with an exactly
//! prescribed composition (occurrence count per level) and back. The mapping
//! is arithmetic coding over the multiset of sequences: the integer interval
//! `[0, multinomial(composition))` is subdivided at every position in
//! proportion to the remaining counts, with exact big-integer arithmetic so
//! encode/decode are exact inverses for any block length.

use crate::{Error, Result};
use num_bigint::BigUint;

/// Occurrence counts per amplitude level for one CCDM block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    counts: Vec<u32>,
    block_length: u32,
}

impl Composition {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Ccdm("composition needs at least one level".into()));
        }
        let block_length = counts.iter().sum();
        if block_length == 0 {
            return Err(Error::Ccdm("composition is empty".into()));
        }
        Ok(Self {
            counts,
            block_length,
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn block_length(&self) -> usize {
        self.block_length as usize
    }

    pub fn levels(&self) -> usize {
        self.counts.len()
    }

    /// Number of distinct sequences with this composition,
    /// `n! / prod(counts!)`.
    pub fn sequence_count(&self) -> BigUint {
        let mut total = BigUint::from(1u32);
        let mut remaining = self.block_length;
        for &c in &self.counts {
            // multiply by C(remaining, c)
            for i in 0..c {
                total *= BigUint::from((remaining - i) as u64);
                total /= BigUint::from((i + 1) as u64);
            }
            remaining -= c;
        }
        total
    }

    /// Input length of the matcher: floor(log2(sequence_count())).
    pub fn input_bits(&self) -> usize {
        (self.sequence_count().bits() - 1) as usize
    }

    /// Matching rate in bits per amplitude.
    pub fn rate(&self) -> f64 {
        self.input_bits() as f64 / self.block_length() as f64
    }

    /// Entropy in bits of the empirical distribution counts/n.
    pub fn empirical_entropy(&self) -> f64 {
        let n = self.block_length as f64;
        crate::constellation::entropy_bits(
            &self.counts.iter().map(|&c| c as f64 / n).collect::<Vec<_>>(),
        )
    }

    /// Checks that `seq` has exactly this composition.
    pub fn matches(&self, seq: &[usize]) -> bool {
        if seq.len() != self.block_length() {
            return false;
        }
        let mut seen = vec![0u32; self.counts.len()];
        for &s in seq {
            if s >= self.counts.len() {
                return false;
            }
            seen[s] += 1;
        }
        seen == self.counts
    }
}

/// The n-type composition closest in KL divergence to `target` at block
/// length `n`. Greedy increments on the separable convex objective
/// `sum_a c_a ln(c_a / (n p_a))` are globally optimal; ties go to the higher
/// level index, which keeps the count vector lexicographically smallest.
pub fn composition_for(target: &[f64], n: usize) -> Result<Composition> {
    if target.is_empty() || n == 0 {
        return Err(Error::Ccdm("empty target or zero block length".into()));
    }
    let s: f64 = target.iter().sum();
    if !(s.is_finite() && (s - 1.0).abs() < 1e-9) || target.iter().any(|&p| p < 0.0) {
        return Err(Error::Ccdm("target is not a probability vector".into()));
    }
    let nf = n as f64;
    let mut counts = vec![0u32; target.len()];
    // marginal cost of raising level a from c to c+1:
    //   f(c+1) - f(c) with f(c) = c ln(c / (n p_a))
    let marginal = |a: usize, c: u32| -> f64 {
        let p = target[a];
        if p <= 0.0 {
            return f64::INFINITY;
        }
        let c1 = (c + 1) as f64;
        let f1 = c1 * (c1 / (nf * p)).ln();
        let f0 = if c == 0 {
            0.0
        } else {
            let cf = c as f64;
            cf * (cf / (nf * p)).ln()
        };
        f1 - f0
    };
    for _ in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for a in 0..target.len() {
            let m = marginal(a, counts[a]);
            match best {
                None => best = Some((m, a)),
                Some((bm, _)) if m <= bm => best = Some((m, a)),
                _ => {}
            }
        }
        let (m, a) = best.unwrap();
        if !m.is_finite() {
            return Err(Error::Ccdm("target has no level with positive mass".into()));
        }
        counts[a] += 1;
    }
    Composition::new(counts)
}

/// Encodes `bits` (MSB first, length exactly `composition.input_bits()`)
/// into the amplitude-index sequence of that composition.
pub fn ccdm_encode(bits: &[u8], composition: &Composition) -> Result<Vec<usize>> {
    let k = composition.input_bits();
    if bits.len() != k {
        return Err(Error::Ccdm(format!(
            "input length {} != matcher input length {}",
            bits.len(),
            k
        )));
    }
    let mut index = BigUint::from(0u32);
    for &b in bits {
        index <<= 1;
        if b & 1 == 1 {
            index += 1u32;
        }
    }
    let mut remaining = composition.counts().to_vec();
    let mut n_rem = composition.block_length() as u64;
    let mut interval = composition.sequence_count();
    let mut out = Vec::with_capacity(composition.block_length());
    for _ in 0..composition.block_length() {
        let mut cum = BigUint::from(0u32);
        let mut chosen = None;
        for (a, &c) in remaining.iter().enumerate() {
            if c == 0 {
                continue;
            }
            // Sequences starting with level a: interval * c / n_rem (exact).
            let sub = &interval * BigUint::from(c as u64) / BigUint::from(n_rem);
            let next = &cum + &sub;
            if index < next {
                chosen = Some((a, sub));
                break;
            }
            cum = next;
        }
        let (a, sub) = chosen.expect("index within interval by construction");
        index -= cum;
        interval = sub;
        remaining[a] -= 1;
        n_rem -= 1;
        out.push(a);
    }
    Ok(out)
}

/// Decodes an amplitude-index sequence back to the bit string; exact inverse
/// of [`ccdm_encode`]. Rejects sequences whose composition does not match or
/// that are outside the matcher image (rank >= 2^input_bits).
pub fn ccdm_decode(seq: &[usize], composition: &Composition) -> Result<Vec<u8>> {
    if !composition.matches(seq) {
        return Err(Error::Ccdm("sequence composition mismatch".into()));
    }
    let mut remaining = composition.counts().to_vec();
    let mut n_rem = composition.block_length() as u64;
    let mut interval = composition.sequence_count();
    let mut index = BigUint::from(0u32);
    for &sym in seq {
        let mut cum = BigUint::from(0u32);
        for (a, &c) in remaining.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sub = &interval * BigUint::from(c as u64) / BigUint::from(n_rem);
            if a == sym {
                interval = sub;
                break;
            }
            cum += sub;
        }
        index += cum;
        remaining[sym] -= 1;
        n_rem -= 1;
    }
    let k = composition.input_bits();
    if index.bits() > k as u64 {
        return Err(Error::Ccdm(
            "sequence rank outside the matcher image".into(),
        ));
    }
    let mut bits = vec![0u8; k];
    for (i, bit) in bits.iter_mut().enumerate() {
        *bit = index.bit((k - 1 - i) as u64) as u8;
    }
    Ok(bits)
}

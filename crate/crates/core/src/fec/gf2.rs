//! Bit-packed GF(2) vectors and polynomials for the quasi-cyclic encoder.
//!
//! Blocks of the codeword are length-M bit vectors; circulant permutations
//! act as multiplication by x^s modulo x^M - 1. The accumulator inversion
//! needs one polynomial inverse modulo x^M - 1, computed with the extended
//! Euclidean algorithm.

/// Fixed-length bit vector over GF(2), packed into u64 words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBlock {
    words: Vec<u64>,
    len: usize,
}

impl BitBlock {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0u64; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut b = Self::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            if v & 1 == 1 {
                b.set(i, true);
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn xor_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    /// Cyclic rotation by `s`: out[i] = self[(i - s) mod len].
    pub fn rotate(&self, s: usize) -> Self {
        let n = self.len;
        let s = s % n.max(1);
        let mut out = Self::zeros(n);
        if n % 64 == 0 {
            let w = n / 64;
            let word_shift = s / 64;
            let bit_shift = s % 64;
            for i in 0..w {
                let src = (i + w - word_shift) % w;
                let prev = (src + w - 1) % w;
                out.words[i] = if bit_shift == 0 {
                    self.words[src]
                } else {
                    (self.words[src] << bit_shift) | (self.words[prev] >> (64 - bit_shift))
                };
            }
        } else {
            for i in 0..n {
                if self.get((i + n - s) % n) {
                    out.set(i, true);
                }
            }
        }
        out
    }

    /// XORs `other` rotated by `s` into `self`.
    pub fn xor_rotated(&mut self, other: &Self, s: usize) {
        let r = other.rotate(s);
        self.xor_assign(&r);
    }
}

/// Polynomial over GF(2) as a bit vector, coefficient i at bit i.
/// Trailing zero words are representationally insignificant.
#[derive(Debug, Clone)]
pub struct Gf2Poly {
    words: Vec<u64>,
}

impl PartialEq for Gf2Poly {
    fn eq(&self, other: &Self) -> bool {
        let trim = |w: &[u64]| {
            let mut n = w.len();
            while n > 0 && w[n - 1] == 0 {
                n -= 1;
            }
            n
        };
        let (a, b) = (trim(&self.words), trim(&other.words));
        a == b && self.words[..a] == other.words[..b]
    }
}

impl Eq for Gf2Poly {}

impl Gf2Poly {
    pub fn zero() -> Self {
        Self { words: vec![] }
    }

    pub fn one() -> Self {
        Self { words: vec![1] }
    }

    /// x^n
    pub fn monomial(n: usize) -> Self {
        let mut words = vec![0u64; n / 64 + 1];
        words[n / 64] = 1u64 << (n % 64);
        Self { words }
    }

    pub fn from_coeffs(coeffs: &[usize]) -> Self {
        let max = coeffs.iter().copied().max().unwrap_or(0);
        let mut words = vec![0u64; max / 64 + 1];
        for &c in coeffs {
            words[c / 64] ^= 1u64 << (c % 64);
        }
        Self { words }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        for (i, &w) in self.words.iter().enumerate().rev() {
            if w != 0 {
                return Some(i * 64 + 63 - w.leading_zeros() as usize);
            }
        }
        None
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .map_or(false, |w| (w >> (i % 64)) & 1 == 1)
    }

    fn xor_shifted(&mut self, other: &Self, shift: usize) {
        let word_shift = shift / 64;
        let bit_shift = shift % 64;
        let needed = other.words.len() + word_shift + 1;
        if self.words.len() < needed {
            self.words.resize(needed, 0);
        }
        for (i, &w) in other.words.iter().enumerate() {
            if w == 0 {
                continue;
            }
            self.words[i + word_shift] ^= w << bit_shift;
            if bit_shift != 0 {
                self.words[i + word_shift + 1] ^= w >> (64 - bit_shift);
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.xor_shifted(other, 0);
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Gf2Poly::zero();
        let Some(deg) = self.degree() else {
            return out;
        };
        for i in 0..=deg {
            if self.coeff(i) {
                out.xor_shifted(other, i);
            }
        }
        out
    }

    /// Remainder of self modulo `modulus` (modulus nonzero).
    pub fn rem(&self, modulus: &Self) -> Self {
        let md = modulus.degree().expect("nonzero modulus");
        let mut r = self.clone();
        while let Some(d) = r.degree() {
            if d < md {
                break;
            }
            r.xor_shifted(modulus, d - md);
        }
        r
    }


    /// Inverse of self modulo x^m - 1, if it exists.
    pub fn inverse_mod_cyclic(&self, m: usize) -> Option<Self> {
        // Extended Euclid on (x^m + 1, self).
        let modulus = {
            let mut p = Gf2Poly::monomial(m);
            p.add_assign(&Gf2Poly::one());
            p
        };
        let mut r0 = modulus.clone();
        let mut r1 = self.rem(&modulus);
        let mut t0 = Gf2Poly::zero();
        let mut t1 = Gf2Poly::one();
        while !r1.is_zero() {
            // divide r0 by r1
            let d1 = r1.degree().unwrap();
            let mut q = Gf2Poly::zero();
            let mut r = r0.clone();
            while let Some(d0) = r.degree() {
                if d0 < d1 {
                    break;
                }
                q.add_assign(&Gf2Poly::monomial(d0 - d1));
                r.xor_shifted(&r1, d0 - d1);
            }
            let t2 = {
                let mut t = t0.clone();
                t.add_assign(&q.mul(&t1));
                t
            };
            r0 = r1;
            r1 = r;
            t0 = t1;
            t1 = t2;
        }
        if r0.degree() == Some(0) {
            Some(t0.rem(&modulus))
        } else {
            None
        }
    }

    /// Nonzero coefficient exponents.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(d) = self.degree() {
            for i in 0..=d {
                if self.coeff(i) {
                    out.push(i);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotate_matches_naive() {
        let bits: Vec<u8> = (0..200).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
        let b = BitBlock::from_bits(&bits);
        for s in [0usize, 1, 63, 64, 65, 150, 199] {
            let r = b.rotate(s);
            for i in 0..bits.len() {
                assert_eq!(
                    r.get(i),
                    bits[(i + bits.len() - s) % bits.len()] == 1,
                    "s={s} i={i}"
                );
            }
        }
        // word-aligned length
        let bits: Vec<u8> = (0..256).map(|i| ((i * 11 + 1) % 3 == 0) as u8).collect();
        let b = BitBlock::from_bits(&bits);
        for s in [0usize, 1, 64, 100, 255] {
            let r = b.rotate(s);
            for i in 0..bits.len() {
                assert_eq!(r.get(i), bits[(i + bits.len() - s) % bits.len()] == 1);
            }
        }
    }

    #[test]
    fn poly_inverse_round_trip() {
        let m = 128;
        // odd-weight polynomial is invertible mod x^m - 1 for m a power of two
        let a = Gf2Poly::from_coeffs(&[0, 3, 17, 44, 90]);
        let inv = a.inverse_mod_cyclic(m).expect("invertible");
        let prod = a.mul(&inv);
        let modulus = {
            let mut p = Gf2Poly::monomial(m);
            p.add_assign(&Gf2Poly::one());
            p
        };
        assert_eq!(prod.rem(&modulus), Gf2Poly::one());
    }

    #[test]
    fn even_weight_not_invertible() {
        let a = Gf2Poly::from_coeffs(&[1, 5]);
        assert!(a.inverse_mod_cyclic(64).is_none());
    }
}

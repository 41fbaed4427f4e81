//! Small numeric helpers shared across the crate: dB conversions, FFT
//! wrappers, and deterministic per-purpose RNG stream derivation.

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rustfft::FftPlanner;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0; // m/s
pub const PLANCK: f64 = 6.626_070_15e-34; // J s

#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * db_to_lin(dbm)
}

/// In-place forward FFT (unnormalized, rustfft convention).
pub fn fft_in_place(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// In-place inverse FFT, normalized by 1/N so that `ifft(fft(x)) == x`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Baseband frequency of FFT bin `k` for length `n` at `sample_rate`, in Hz.
/// Bins above n/2 map to negative frequencies.
#[inline]
pub fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    let k = k as i64;
    let n = n as i64;
    let signed = if k <= (n - 1) / 2 { k } else { k - n };
    signed as f64 * sample_rate / n as f64
}

/// Smallest integer >= `n` whose prime factors are all in {2, 3, 5}.
/// Used to pad FFT records to lengths rustfft handles with fast kernels.
pub fn next_smooth(n: usize) -> usize {
    fn is_smooth(mut v: usize) -> bool {
        for p in [2usize, 3, 5] {
            while v % p == 0 {
                v /= p;
            }
        }
        v == 1
    }
    let mut v = n.max(1);
    while !is_smooth(v) {
        v += 1;
    }
    v
}

/// Mean power (|.|^2 averaged) of a complex sequence.
pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Derives an independent RNG stream from a master seed and a purpose label.
///
/// Streams for (seed, label, index) tuples are independent ChaCha streams, so
/// Monte Carlo workers can draw noise concurrently while staying bit-identical
/// to a single-threaded run.
pub fn seeded_rng(master_seed: u64, label: &str, index: u64) -> ChaCha12Rng {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha12Rng::from_seed(key)
}

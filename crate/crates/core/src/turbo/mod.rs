//! Adaptive turbo equalization: soft mapping of decoder extrinsics, RLS
//! tracking of the linear interference matrix, LMMSE soft-interference
//! cancellation and bit-metric LLR generation with shaped priors.
//!
//! The receiver model after EDC/DBP is r_i = H_i s_i + n_i over a sliding
//! window of N symbols on both polarizations (vectors of length 2N). Each
//! equalized output is reduced to the scalar equivalent channel
//! shat = m s + eta with real m and Gaussian eta, whose posterior combines
//! the Gaussian likelihood with the constellation prior before bit-metric
//! marginalization.

mod lmmse;
mod rls;
mod runner;

pub use lmmse::{lmmse_equalize, EquivalentModel, LmmseOutput};
pub use rls::{rls_update, ChannelEstimate};
pub use runner::{turbo_run, IterationStats, TurboLayout, TurboReference, TurboReport};

use crate::constellation::ShapedConstellation;
use crate::{Error, Result};
use num_complex::Complex64;

/// Turbo-equalizer knobs.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TurboConfig {
    /// Equalizer memory N in symbols (odd, window centered).
    pub taps: usize,
    /// Maximum turbo iterations (equalize + decode passes).
    pub max_iters: usize,
    /// RLS exponential forgetting factor.
    pub rls_lambda: f64,
    /// RLS P initialization: P = I / delta.
    pub rls_delta: f64,
    /// Noise variance fed to the first LMMSE pass; estimated from pilots
    /// when absent, re-estimated from pilot innovations every iteration.
    pub noise_var_init: Option<f64>,
    /// Belief-propagation iterations per turbo pass.
    pub bp_iters: usize,
    /// Recompute the LMMSE solve every `stride` symbols (1 = every symbol).
    pub stride: usize,
}

impl Default for TurboConfig {
    fn default() -> Self {
        Self {
            taps: 21,
            max_iters: 10,
            rls_lambda: 0.999,
            rls_delta: 0.01,
            noise_var_init: None,
            bp_iters: 50,
            stride: 1,
        }
    }
}

impl TurboConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps % 2 == 0 || self.taps == 0 {
            return Err(Error::Config(format!("taps {} must be odd", self.taps)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.rls_lambda > 0.0 && self.rls_lambda <= 1.0) {
            return Err(Error::Config(format!(
                "forgetting factor {} outside (0, 1]",
                self.rls_lambda
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-symbol soft estimates of one polarization's sequence.
#[derive(Debug, Clone)]
pub struct SoftSymbols {
    pub mean: Vec<Complex64>,
    pub var: Vec<f64>,
}

impl SoftSymbols {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Precomputed per-quadrature tables for soft mapping and bit-metric
/// demapping on square QAM with a product prior.
#[derive(Debug, Clone)]
pub struct SoftMapper {
    /// PAM amplitudes, level index order.
    levels: Vec<f64>,
    /// ln prior per PAM level.
    ln_prior: Vec<f64>,
    /// Gray bits per PAM level (q bits, MSB first).
    level_bits: Vec<Vec<u8>>,
    bits_per_symbol: usize,
    prior_var: f64,
}

impl SoftMapper {
    /// Builds the factorized tables; fails if the constellation prior does
    /// not factor into independent per-quadrature PAM priors.
    pub fn new(c: &ShapedConstellation) -> Result<Self> {
        let l = c.pam_levels();
        let pam = c.pam_marginal();
        for li in 0..l {
            for lq in 0..l {
                let joint = c.prior[li * l + lq];
                if (joint - pam[li] * pam[lq]).abs() > 1e-10 {
                    return Err(Error::Config(
                        "prior does not factorize per quadrature".into(),
                    ));
                }
            }
        }
        let q = c.bits_per_symbol() / 2;
        let mut levels = Vec::with_capacity(l);
        let mut level_bits = Vec::with_capacity(l);
        for li in 0..l {
            // amplitude of PAM level li: I-part of point (li, lq=any)
            let point = c.points[li * l + l / 2];
            levels.push(point.re);
            level_bits.push(c.labels[li * l][..q].to_vec());
        }
        let ln_prior = pam
            .iter()
            .map(|&p| if p > 0.0 { p.ln() } else { -1e30 })
            .collect();
        Ok(Self {
            levels,
            ln_prior,
            level_bits,
            bits_per_symbol: c.bits_per_symbol(),
            prior_var: c.mean_energy(),
        })
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Average symbol energy under the prior (the "no information" variance).
    pub fn prior_var(&self) -> f64 {
        self.prior_var
    }

    /// Prior mean (zero for the sign-symmetric priors used here).
    pub fn prior_mean(&self) -> Complex64 {
        let m: f64 = self
            .levels
            .iter()
            .zip(&self.ln_prior)
            .map(|(&a, &lp)| a * lp.exp())
            .sum();
        Complex64::new(m, m)
    }

    /// Soft symbol from per-bit extrinsic LLRs (positive = bit 0), combining
    /// the bit information with the constellation prior.
    pub fn soft_symbol(&self, llrs: &[f64]) -> (Complex64, f64) {
        let q = self.bits_per_symbol / 2;
        debug_assert_eq!(llrs.len(), self.bits_per_symbol);
        let (mi, vi) = self.soft_quadrature(&llrs[..q]);
        let (mq, vq) = self.soft_quadrature(&llrs[q..]);
        (Complex64::new(mi, mq), vi + vq)
    }

    fn soft_quadrature(&self, llrs: &[f64]) -> (f64, f64) {
        let mut w = [0.0f64; 64];
        let n = self.levels.len();
        let mut wmax = f64::MIN;
        for li in 0..n {
            let mut lw = self.ln_prior[li];
            for (b, &bit) in self.level_bits[li].iter().enumerate() {
                lw += ln_sigmoid(if bit == 0 { llrs[b] } else { -llrs[b] });
            }
            w[li] = lw;
            wmax = wmax.max(lw);
        }
        let mut z = 0.0;
        let mut m = 0.0;
        let mut e2 = 0.0;
        for li in 0..n {
            let p = (w[li] - wmax).exp();
            z += p;
            m += p * self.levels[li];
            e2 += p * self.levels[li] * self.levels[li];
        }
        m /= z;
        e2 /= z;
        (m, (e2 - m * m).max(0.0))
    }

    /// Bit-metric LLRs for one equalized symbol under the scalar equivalent
    /// channel shat = m s + eta: posterior(s) ∝ exp(-|shat - m s|^2 /
    /// eta_var) prior(s), marginalized per label bit in the log domain.
    pub fn posterior_llrs(&self, shat: Complex64, m: f64, eta_var: f64) -> Result<Vec<f64>> {
        if !(eta_var > 0.0) {
            return Err(Error::Numerical(format!(
                "equivalent-channel noise variance {eta_var} must be positive"
            )));
        }
        let q = self.bits_per_symbol / 2;
        let mut out = Vec::with_capacity(self.bits_per_symbol);
        self.demap_quadrature(shat.re, m, eta_var, q, &mut out);
        self.demap_quadrature(shat.im, m, eta_var, q, &mut out);
        Ok(out)
    }

    fn demap_quadrature(&self, r: f64, m: f64, eta_var: f64, q: usize, out: &mut Vec<f64>) {
        let n = self.levels.len();
        let mut metric = [0.0f64; 64];
        for li in 0..n {
            let e = r - m * self.levels[li];
            metric[li] = self.ln_prior[li] - e * e / eta_var;
        }
        for b in 0..q {
            let mut max0 = f64::NEG_INFINITY;
            let mut max1 = f64::NEG_INFINITY;
            for li in 0..n {
                if self.level_bits[li][b] == 0 {
                    max0 = max0.max(metric[li]);
                } else {
                    max1 = max1.max(metric[li]);
                }
            }
            let mut sum0 = 0.0f64;
            let mut sum1 = 0.0f64;
            for li in 0..n {
                if self.level_bits[li][b] == 0 {
                    sum0 += (metric[li] - max0).exp();
                } else {
                    sum1 += (metric[li] - max1).exp();
                }
            }
            let llr = (max0 + sum0.ln()) - (max1 + sum1.ln());
            out.push(llr.clamp(-LLR_CLAMP, LLR_CLAMP));
        }
    }
}

/// Demapped LLRs are clamped here; the decoder's check update saturates well
/// below this anyway.
pub const LLR_CLAMP: f64 = 60.0;

#[inline]
fn ln_sigmoid(x: f64) -> f64 {
    // ln(1/(1+e^-x)) = -softplus(-x), stable for large |x|
    if x > 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

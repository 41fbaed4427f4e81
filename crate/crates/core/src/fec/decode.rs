//! Flooding sum-product decoder.
//!
//! Check updates use the self-inverse map phi(x) = -ln tanh(x/2) so the full
//! tanh rule stays finite for any finite input. LLR convention throughout:
//! positive means bit 0 is more likely.

use super::LdpcCode;
use crate::{Error, Result};

/// Output of one belief-propagation run over the full variable set.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// Posterior LLR per variable node.
    pub posterior_llrs: Vec<f64>,
    /// Posterior minus channel input per variable node.
    pub extrinsic_llrs: Vec<f64>,
    /// Hard decisions (1 where posterior < 0).
    pub hard_bits: Vec<u8>,
    /// All parity checks satisfied.
    pub converged: bool,
    /// Iterations actually executed.
    pub iterations_used: usize,
}

impl DecodeResult {
    /// Hard decisions on the information bits.
    pub fn info_bits(&self, k: usize) -> &[u8] {
        &self.hard_bits[..k]
    }
}

const PHI_MIN: f64 = 1e-12;
const PHI_MAX: f64 = 44.0;

#[inline]
fn phi(x: f64) -> f64 {
    // -ln(tanh(x/2)) = ln((1 + e^-x) / (1 - e^-x)) for x > 0, clamped to
    // keep everything finite.
    let x = x.clamp(PHI_MIN, PHI_MAX);
    let e = (-x).exp();
    ((1.0 + e) / (1.0 - e)).ln()
}

/// Sum-product decoding with a flooding schedule and early stop once the
/// hard decisions satisfy every check. Punctured positions must carry LLR 0.
pub fn decode_bp(code: &LdpcCode, channel_llrs: &[f64], max_iters: usize) -> Result<DecodeResult> {
    if channel_llrs.len() != code.n_vars {
        return Err(Error::Dimension(format!(
            "expected {} channel LLRs (full variable set), got {}",
            code.n_vars,
            channel_llrs.len()
        )));
    }
    if channel_llrs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("channel LLRs must be finite".into()));
    }
    let n_edges = code.n_edges();
    let check_ptr = code.check_ptr();
    let check_var = code.check_var();

    // var -> check messages, indexed like check_var (grouped by check)
    let mut v2c: Vec<f64> = check_var
        .iter()
        .map(|&v| channel_llrs[v as usize])
        .collect();
    let mut c2v = vec![0.0f64; n_edges];
    let mut phis = vec![0.0f64; n_edges];
    let mut posterior: Vec<f64> = channel_llrs.to_vec();
    let mut iterations_used = 0usize;
    let mut converged = syndrome_clean(code, &posterior);

    for _ in 0..max_iters {
        if converged {
            break;
        }
        iterations_used += 1;
        // check pass
        for c in 0..code.n_checks {
            let lo = check_ptr[c] as usize;
            let hi = check_ptr[c + 1] as usize;
            let mut sign = 1.0f64;
            let mut sum = 0.0f64;
            for e in lo..hi {
                let m = v2c[e];
                if m < 0.0 {
                    sign = -sign;
                }
                let p = phi(m.abs());
                phis[e] = p;
                sum += p;
            }
            for e in lo..hi {
                let m = v2c[e];
                let s = if m < 0.0 { -sign } else { sign };
                c2v[e] = s * phi(sum - phis[e]);
            }
        }
        // variable pass
        for v in 0..code.n_vars {
            let mut total = channel_llrs[v];
            for &e in code.var_edges(v) {
                total += c2v[e as usize];
            }
            posterior[v] = total;
            for &e in code.var_edges(v) {
                v2c[e as usize] = total - c2v[e as usize];
            }
        }
        converged = syndrome_clean(code, &posterior);
    }

    let extrinsic_llrs: Vec<f64> = posterior
        .iter()
        .zip(channel_llrs)
        .map(|(p, c)| p - c)
        .collect();
    let hard_bits: Vec<u8> = posterior.iter().map(|&l| (l < 0.0) as u8).collect();
    Ok(DecodeResult {
        posterior_llrs: posterior,
        extrinsic_llrs,
        hard_bits,
        converged,
        iterations_used,
    })
}

fn syndrome_clean(code: &LdpcCode, llrs: &[f64]) -> bool {
    let check_ptr = code.check_ptr();
    let check_var = code.check_var();
    (0..code.n_checks).all(|c| {
        let lo = check_ptr[c] as usize;
        let hi = check_ptr[c + 1] as usize;
        check_var[lo..hi]
            .iter()
            .fold(false, |acc, &v| acc ^ (llrs[v as usize] < 0.0))
            == false
    })
}

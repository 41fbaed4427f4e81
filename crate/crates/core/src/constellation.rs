//! Gray-labeled square QAM constellations with configurable symbol priors.
//!
//! A [`ShapedConstellation`] carries the complex points, their bit labels and
//! a prior probability per point. Uniform priors come from [`build_qam`];
//! Maxwell-Boltzmann priors hitting a target entropy come from [`mb_prior`].
//! Points are always normalized to unit average power *under the prior in
//! use*, so SNR definitions stay comparable between shaped and uniform runs.

use crate::{Error, Result};
use num_complex::Complex64;
use std::io::{BufRead, Write};

/// Square QAM constellation with Gray labels and a per-point prior.
#[derive(Debug, Clone)]
pub struct ShapedConstellation {
    /// Constellation order M (a power of 4).
    pub order: usize,
    /// Complex points, unit average power under `prior`.
    pub points: Vec<Complex64>,
    /// Bit labels, `log2(order)` bits per point, MSB first.
    /// Layout: I-quadrature bits then Q-quadrature bits; within a quadrature
    /// the first bit is the sign bit and the rest select the amplitude level.
    pub labels: Vec<Vec<u8>>,
    /// Prior probability per point; sums to one.
    pub prior: Vec<f64>,
}

impl ShapedConstellation {
    /// Bits per symbol, log2(M).
    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    /// PAM levels per quadrature (sqrt(M)).
    pub fn pam_levels(&self) -> usize {
        (self.order as f64).sqrt().round() as usize
    }

    /// Distinct amplitude magnitudes per quadrature (sqrt(M)/2).
    pub fn amplitude_levels(&self) -> usize {
        self.pam_levels() / 2
    }

    /// Entropy of the prior in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.prior)
    }

    /// Average symbol energy under the prior.
    pub fn mean_energy(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.prior)
            .map(|(x, p)| p * x.norm_sqr())
            .sum()
    }

    /// Prior mean (zero for sign-symmetric priors).
    pub fn mean(&self) -> Complex64 {
        self.points
            .iter()
            .zip(&self.prior)
            .map(|(x, p)| x * *p)
            .sum()
    }

    /// Point index whose label equals `bits`.
    pub fn index_of_label(&self, bits: &[u8]) -> Option<usize> {
        let m = self.bits_per_symbol();
        if bits.len() != m {
            return None;
        }
        let mut v = 0usize;
        for &b in bits {
            v = (v << 1) | (b as usize & 1);
        }
        self.label_index_cache().get(v).copied().flatten()
    }

    fn label_index_cache(&self) -> Vec<Option<usize>> {
        let m = self.bits_per_symbol();
        let mut cache = vec![None; 1 << m];
        for (i, label) in self.labels.iter().enumerate() {
            let mut v = 0usize;
            for &b in label {
                v = (v << 1) | (b as usize & 1);
            }
            cache[v] = Some(i);
        }
        cache
    }

    /// Positive amplitude magnitude of quadrature amplitude index `a`
    /// (0 = innermost level), in the constellation's normalized units.
    pub fn amplitude_value(&self, a: usize) -> f64 {
        self.grid_scale() * (2 * a + 1) as f64
    }

    /// Scale factor mapping odd-integer grid coordinates to normalized points.
    pub fn grid_scale(&self) -> f64 {
        // Innermost point sits at (scale, scale) on the diagonal.
        let l = self.pam_levels();
        let idx_inner = (l / 2) * l + l / 2; // I level index L/2 (smallest positive), Q same
        self.points[idx_inner].re
    }

    /// Marginal prior over the per-quadrature amplitude magnitudes
    /// (index 0 = innermost level). Both quadratures share this marginal for
    /// the priors built in this module.
    pub fn amplitude_marginal(&self) -> Vec<f64> {
        let half = self.amplitude_levels();
        let l = self.pam_levels();
        let mut marg = vec![0.0; half];
        for (i, p) in self.prior.iter().enumerate() {
            let li = i / l; // I-quadrature level index
            let a = amp_index(li, l);
            marg[a] += p;
        }
        marg
    }

    /// Per-quadrature PAM prior over the signed levels, lowest level first.
    pub fn pam_marginal(&self) -> Vec<f64> {
        let l = self.pam_levels();
        let mut marg = vec![0.0; l];
        for (i, p) in self.prior.iter().enumerate() {
            marg[i / l] += p;
        }
        marg
    }

    /// Writes one row per point: `I Q label prior`.
    pub fn export<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# order {}", self.order)?;
        writeln!(w, "# columns: I Q label prior")?;
        for ((x, label), p) in self.points.iter().zip(&self.labels).zip(&self.prior) {
            let bits: String = label.iter().map(|b| char::from(b'0' + b)).collect();
            writeln!(w, "{:.17e} {:.17e} {} {:.17e}", x.re, x.im, bits, p)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`export`](Self::export).
    pub fn import<R: BufRead>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut prior = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (i, q, bits, p) = (
                it.next().ok_or_else(|| Error::Config("bad constellation row".into()))?,
                it.next().ok_or_else(|| Error::Config("bad constellation row".into()))?,
                it.next().ok_or_else(|| Error::Config("bad constellation row".into()))?,
                it.next().ok_or_else(|| Error::Config("bad constellation row".into()))?,
            );
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad float {s:?}: {e}")))
            };
            points.push(Complex64::new(parse(i)?, parse(q)?));
            labels.push(bits.bytes().map(|b| b - b'0').collect());
            prior.push(parse(p)?);
        }
        let order = points.len();
        if !order.is_power_of_two() || order.trailing_zeros() % 2 != 0 || order < 4 {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(Self {
            order,
            points,
            labels,
            prior,
        })
    }
}

/// Entropy in bits of a probability vector; zero entries contribute nothing.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>()
}

/// Quadrature amplitude index (0 = innermost) of PAM level index `li`.
#[inline]
pub fn amp_index(li: usize, l: usize) -> usize {
    let a = 2 * li as i64 - (l as i64 - 1); // odd signed amplitude
    ((a.abs() - 1) / 2) as usize
}

/// Binary-reflected Gray code of `v` over `bits` bits, MSB first.
fn gray_bits(v: usize, bits: usize) -> Vec<u8> {
    let g = v ^ (v >> 1);
    (0..bits).rev().map(|k| ((g >> k) & 1) as u8).collect()
}

/// Builds a uniform-prior Gray-labeled square QAM constellation.
///
/// Per quadrature the binary-reflected Gray label has the sign in its first
/// bit and the amplitude in the rest, with amplitude bits equal for +a and -a.
/// That structure is what lets probabilistic amplitude shaping ride the sign
/// bits on FEC parity.
pub fn build_qam(order: usize) -> Result<ShapedConstellation> {
    if !matches!(order, 4 | 16 | 64 | 256 | 1024) {
        return Err(Error::UnsupportedOrder(order));
    }
    let m = order.trailing_zeros() as usize;
    let q = m / 2;
    let l = 1usize << q; // PAM levels per quadrature
    let mut points = Vec::with_capacity(order);
    let mut labels = Vec::with_capacity(order);
    for li in 0..l {
        let ai = (2 * li as i64 - (l as i64 - 1)) as f64;
        for lq in 0..l {
            let aq = (2 * lq as i64 - (l as i64 - 1)) as f64;
            points.push(Complex64::new(ai, aq));
            let mut label = gray_bits(li, q);
            label.extend(gray_bits(lq, q));
            labels.push(label);
        }
    }
    let prior = vec![1.0 / order as f64; order];
    let mut c = ShapedConstellation {
        order,
        points,
        labels,
        prior,
    };
    renormalize(&mut c);
    Ok(c)
}

fn renormalize(c: &mut ShapedConstellation) {
    let e = c.mean_energy();
    let scale = 1.0 / e.sqrt();
    for x in c.points.iter_mut() {
        *x *= scale;
    }
}

/// Replaces the prior with the Maxwell-Boltzmann family member
/// `p_i ∝ exp(-nu |x_i|^2)` whose entropy equals `target_entropy` bits,
/// then renormalizes the points to unit average power under the new prior.
///
/// `nu` is found by bisection on the strictly monotone map nu -> entropy.
pub fn mb_prior(c: &ShapedConstellation, target_entropy: f64) -> Result<ShapedConstellation> {
    let m = c.bits_per_symbol() as f64;
    if target_entropy <= 0.0 {
        return Err(Error::InfeasibleEntropy(format!(
            "target entropy {target_entropy} must be positive"
        )));
    }
    if target_entropy > m + 1e-12 {
        return Err(Error::InfeasibleEntropy(format!(
            "target entropy {target_entropy} exceeds log2(M) = {m}"
        )));
    }
    // Energies on the current grid; the MB family is invariant to an overall
    // scale of the points (nu absorbs it).
    let energies: Vec<f64> = c.points.iter().map(|x| x.norm_sqr()).collect();
    let emin = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let n_min = energies.iter().filter(|&&e| e <= emin * (1.0 + 1e-12)).count();
    let floor_entropy = (n_min as f64).log2();
    if target_entropy < floor_entropy - 1e-12 {
        return Err(Error::InfeasibleEntropy(format!(
            "target entropy {target_entropy} below the nu->inf limit {floor_entropy}"
        )));
    }

    let prior_at = |nu: f64| -> Vec<f64> {
        // Subtract emin before exponentiating to keep the weights finite.
        let mut w: Vec<f64> = energies.iter().map(|&e| (-(e - emin) * nu).exp()).collect();
        let z: f64 = w.iter().sum();
        for v in w.iter_mut() {
            *v /= z;
        }
        w
    };
    let entropy_at = |nu: f64| entropy_bits(&prior_at(nu));

    const TOL: f64 = 1e-9;
    let mut lo = 0.0f64;
    let nu = if (entropy_at(0.0) - target_entropy).abs() <= TOL {
        0.0
    } else {
        let mut hi = 1.0f64;
        while entropy_at(hi) > target_entropy {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::InfeasibleEntropy(format!(
                    "bisection failed to bracket entropy {target_entropy}"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if entropy_at(mid) > target_entropy {
                lo = mid;
            } else {
                hi = mid;
            }
            if (entropy_at(0.5 * (lo + hi)) - target_entropy).abs() <= TOL * 0.5 {
                break;
            }
        }
        0.5 * (lo + hi)
    };

    let prior = prior_at(nu);
    let got = entropy_bits(&prior);
    if (got - target_entropy).abs() > TOL {
        return Err(Error::InfeasibleEntropy(format!(
            "bisection converged to entropy {got}, target {target_entropy}"
        )));
    }
    let mut out = ShapedConstellation {
        order: c.order,
        points: c.points.clone(),
        labels: c.labels.clone(),
        prior,
    };
    renormalize(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_invariants(c: &ShapedConstellation) {
        let sum: f64 = c.prior.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "prior sum {sum}");
        assert!(c.prior.iter().all(|&p| p >= 0.0));
        assert!((c.mean_energy() - 1.0).abs() < 1e-12);
        // Gray property: grid neighbors differ in exactly one label bit.
        let l = c.pam_levels();
        for li in 0..l {
            for lq in 0..l {
                let i = li * l + lq;
                for (ni, nq) in [(li + 1, lq), (li, lq + 1)] {
                    if ni >= l || nq >= l {
                        continue;
                    }
                    let j = ni * l + nq;
                    let diff: usize = c.labels[i]
                        .iter()
                        .zip(&c.labels[j])
                        .filter(|(a, b)| a != b)
                        .count();
                    assert_eq!(diff, 1, "neighbors {i},{j} differ in {diff} bits");
                }
            }
        }
        // Sign-flip symmetry of the prior (PAS needs independent sign bits).
        for li in 0..l {
            for lq in 0..l {
                let i = li * l + lq;
                let flip_i = (l - 1 - li) * l + lq;
                let flip_q = li * l + (l - 1 - lq);
                assert!((c.prior[i] - c.prior[flip_i]).abs() < 1e-12);
                assert!((c.prior[i] - c.prior[flip_q]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qpsk_points_and_entropy() {
        let c = build_qam(4).unwrap();
        check_invariants(&c);
        let s = 1.0 / 2f64.sqrt();
        let mut got: Vec<(i64, i64)> = c
            .points
            .iter()
            .map(|p| ((p.re / s).round() as i64, (p.im / s).round() as i64))
            .collect();
        got.sort_unstable();
        assert_eq!(got, vec![(-1, -1), (-1, 1), (1, -1), (1, 1)]);
        assert!(c.prior.iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!((c.entropy() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_entropies_match_table() {
        assert!((build_qam(256).unwrap().entropy() - 8.0).abs() < 1e-12);
        assert!((build_qam(1024).unwrap().entropy() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unsupported_order() {
        assert!(build_qam(32).is_err());
        assert!(build_qam(0).is_err());
    }

    #[test]
    fn label_sign_and_amplitude_structure() {
        // First bit of each quadrature's label group flags the sign; the
        // remaining bits are shared between +a and -a.
        let c = build_qam(64).unwrap();
        let q = 3;
        let l = 8;
        for li in 0..l {
            for lq in 0..l {
                let i = li * l + lq;
                let label = &c.labels[i];
                let p = c.points[i];
                assert_eq!(label[0] == 1, p.re > 0.0);
                assert_eq!(label[q] == 1, p.im > 0.0);
                let mirror = (l - 1 - li) * l + lq;
                assert_eq!(&label[1..q], &c.labels[mirror][1..q]);
            }
        }
    }

    #[test]
    fn mb_prior_nu_zero_is_uniform() {
        let c = build_qam(1024).unwrap();
        let shaped = mb_prior(&c, 10.0).unwrap();
        check_invariants(&shaped);
        for &p in &shaped.prior {
            assert!((p - 1.0 / 1024.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mb_prior_hits_target_entropy_1024() {
        let c = build_qam(1024).unwrap();
        let shaped = mb_prior(&c, 8.5).unwrap();
        check_invariants(&shaped);
        // Independent direct summation of -sum p log2 p.
        let h: f64 = -shaped
            .prior
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>();
        assert!((h - 8.5).abs() < 1e-9, "entropy {h}");
        // Strictly decreasing in |x|^2.
        let mut pairs: Vec<(f64, f64)> = shaped
            .points
            .iter()
            .zip(&shaped.prior)
            .map(|(x, &p)| (x.norm_sqr(), p))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            if w[1].0 > w[0].0 + 1e-12 {
                assert!(w[1].1 < w[0].1 + 1e-15);
            } else {
                assert!((w[1].1 - w[0].1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mb_prior_16qam_entropy_3_by_bisection_oracle() {
        let c = build_qam(16).unwrap();
        let shaped = mb_prior(&c, 3.0).unwrap();
        check_invariants(&shaped);
        let h = entropy_bits(&shaped.prior);
        assert!((h - 3.0).abs() < 1e-9);
        // Deterministic: same inputs give bit-identical priors.
        let again = mb_prior(&c, 3.0).unwrap();
        assert_eq!(shaped.prior, again.prior);
        assert_eq!(
            shaped.points.iter().map(|p| p.re.to_bits()).collect::<Vec<_>>(),
            again.points.iter().map(|p| p.re.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn mb_prior_infeasible_targets() {
        let c = build_qam(16).unwrap();
        assert!(mb_prior(&c, 4.5).is_err());
        assert!(mb_prior(&c, 1.5).is_err()); // below the 4-point nu->inf floor
    }

    #[test]
    fn mb_prior_factorizes_per_quadrature() {
        // The 2-D MB prior equals the product of two identical 1-D PAM priors.
        let c = build_qam(1024).unwrap();
        let shaped = mb_prior(&c, 8.5).unwrap();
        let l = shaped.pam_levels();
        let pam = shaped.pam_marginal();
        for li in 0..l {
            for lq in 0..l {
                let joint = shaped.prior[li * l + lq];
                assert!((joint - pam[li] * pam[lq]).abs() < 1e-12);
            }
        }
        let h1 = entropy_bits(&pam);
        assert!((2.0 * h1 - 8.5).abs() < 1e-9);
    }

    #[test]
    fn export_import_round_trip() {
        let c = mb_prior(&build_qam(64).unwrap(), 5.0).unwrap();
        let mut buf = Vec::new();
        c.export(&mut buf).unwrap();
        let back = ShapedConstellation::import(&buf[..]).unwrap();
        assert_eq!(back.order, 64);
        for i in 0..64 {
            assert!((back.points[i] - c.points[i]).norm() < 1e-15);
            assert_eq!(back.labels[i], c.labels[i]);
            assert!((back.prior[i] - c.prior[i]).abs() < 1e-15);
        }
    }
}

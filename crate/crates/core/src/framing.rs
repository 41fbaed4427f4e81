//! Bit plumbing between source bits, the LDPC codeword and QAM symbols.
//!
//! Uniform mapping sends the transmitted codeword straight through the Gray
//! labels, m bits per symbol. Probabilistic amplitude shaping routes CCDM
//! output through the systematic part of the encoder and rides sign bits on
//! parity: per block of S symbols the systematic input is
//!
//! ```text
//!   [ S*(m-2) amplitude-label bits | 2S - parity uniform sign-info bits ]
//! ```
//!
//! and the 2S sign bits are those uniform bits followed by the parity bits.
//! This is the arrangement under which the net rate works out to
//! H - (1-R) log2 M bits per symbol. It requires R >= (m-2)/m.

use crate::ccdm::{ccdm_decode, ccdm_encode, composition_for, Composition};
use crate::constellation::ShapedConstellation;
use crate::fec::LdpcCode;
use crate::{Error, Result};
use num_complex::Complex64;

/// Shaping-specific framing state.
#[derive(Debug, Clone)]
pub struct PasFormat {
    /// Per-quadrature amplitude composition of one CCDM frame.
    pub composition: Composition,
    /// CCDM frames per quadrature per LDPC block.
    pub frames_per_quadrature: usize,
    /// Source bits absorbed by each CCDM frame.
    pub bits_per_frame: usize,
    /// Uniform source bits riding on sign positions per block.
    pub extra_sign_info: usize,
    /// amplitude index -> the q-1 amplitude label bits.
    amp_bits: Vec<Vec<u8>>,
}

/// Fixed mapping between one LDPC block and its S QAM symbols.
#[derive(Debug, Clone)]
pub struct FrameFormat {
    pub constellation: ShapedConstellation,
    pub code: LdpcCode,
    pub shaping: Option<PasFormat>,
    pub symbols_per_block: usize,
    /// (symbol j, label bit b) -> transmitted codeword position.
    bit_map: Vec<u32>,
    /// Gray label (packed MSB-first) -> point index.
    label_lut: Vec<u32>,
}

impl FrameFormat {
    /// Uniform signaling: codeword bits map directly onto Gray labels.
    pub fn uniform(constellation: ShapedConstellation, code: LdpcCode) -> Result<Self> {
        let m = constellation.bits_per_symbol();
        let n_tx = code.n_transmitted();
        if n_tx % m != 0 {
            return Err(Error::Config(format!(
                "transmitted length {n_tx} is not a multiple of {m} bits/symbol"
            )));
        }
        let s = n_tx / m;
        let bit_map = (0..(s * m) as u32).collect();
        let label_lut = build_label_lut(&constellation);
        Ok(Self {
            constellation,
            code,
            shaping: None,
            symbols_per_block: s,
            bit_map,
            label_lut,
        })
    }

    /// Probabilistic amplitude shaping with one or more CCDM frames per
    /// quadrature per block. `ccdm_block` defaults to the full S when None.
    pub fn shaped(
        constellation: ShapedConstellation,
        code: LdpcCode,
        ccdm_block: Option<usize>,
    ) -> Result<Self> {
        let m = constellation.bits_per_symbol();
        let q = m / 2;
        let n_tx = code.n_transmitted();
        if n_tx % m != 0 {
            return Err(Error::Config(format!(
                "transmitted length {n_tx} is not a multiple of {m} bits/symbol"
            )));
        }
        let s = n_tx / m;
        let parity = n_tx - code.k;
        if parity > 2 * s {
            return Err(Error::Config(format!(
                "rate {:.4} below (m-2)/m = {:.4}: parity does not fit on sign bits",
                code.rate(),
                (m - 2) as f64 / m as f64
            )));
        }
        let extra_sign_info = 2 * s - parity;
        let n_ccdm = ccdm_block.unwrap_or(s);
        if n_ccdm == 0 || s % n_ccdm != 0 {
            return Err(Error::Config(format!(
                "CCDM block {n_ccdm} does not divide the {s} symbols per LDPC block"
            )));
        }
        let composition = composition_for(&constellation.amplitude_marginal(), n_ccdm)?;
        let bits_per_frame = composition.input_bits();
        let amp_bits = amp_bit_table(&constellation);
        let shaping = PasFormat {
            composition,
            frames_per_quadrature: s / n_ccdm,
            bits_per_frame,
            extra_sign_info,
            amp_bits,
        };
        // Systematic layout: amplitude bits first, then the uniform sign-info
        // bits; parity fills the remaining signs in transmitted order.
        let amp_region = s * (m - 2);
        debug_assert_eq!(amp_region + extra_sign_info, code.k);
        let mut bit_map = vec![0u32; s * m];
        for j in 0..s {
            for quad in 0..2 {
                let sign_idx = 2 * j + quad;
                let sign_tx = if sign_idx < extra_sign_info {
                    amp_region + sign_idx
                } else {
                    code.k + (sign_idx - extra_sign_info)
                };
                bit_map[j * m + quad * q] = sign_tx as u32;
                for a in 0..q - 1 {
                    bit_map[j * m + quad * q + 1 + a] =
                        (j * (m - 2) + quad * (q - 1) + a) as u32;
                }
            }
        }
        let label_lut = build_label_lut(&constellation);
        Ok(Self {
            constellation,
            code,
            shaping: Some(shaping),
            symbols_per_block: s,
            bit_map,
            label_lut,
        })
    }

    /// Source bits consumed per block.
    pub fn source_bits_per_block(&self) -> usize {
        match &self.shaping {
            None => self.code.k,
            Some(p) => 2 * p.frames_per_quadrature * p.bits_per_frame + p.extra_sign_info,
        }
    }

    /// Net information rate actually carried, bits per symbol (pilots not
    /// included).
    pub fn net_rate(&self) -> f64 {
        self.source_bits_per_block() as f64 / self.symbols_per_block as f64
    }

    /// Position of label bit `b` of symbol `j` in the transmitted codeword.
    pub fn tx_position(&self, j: usize, b: usize) -> usize {
        self.bit_map[j * self.constellation.bits_per_symbol() + b] as usize
    }

    /// Encodes one block of source bits into transmitted codeword bits and
    /// the corresponding symbols (block order, before interleaving).
    pub fn encode_block(&self, source: &[u8]) -> Result<BlockTx> {
        if source.len() != self.source_bits_per_block() {
            return Err(Error::Dimension(format!(
                "expected {} source bits, got {}",
                self.source_bits_per_block(),
                source.len()
            )));
        }
        let info = match &self.shaping {
            None => source.to_vec(),
            Some(p) => {
                let m = self.constellation.bits_per_symbol();
                let s = self.symbols_per_block;
                let q = m / 2;
                let n_ccdm = p.composition.block_length();
                let mut info = vec![0u8; self.code.k];
                let mut src = source;
                for quad in 0..2 {
                    for f in 0..p.frames_per_quadrature {
                        let (bits, rest) = src.split_at(p.bits_per_frame);
                        src = rest;
                        let amps = ccdm_encode(bits, &p.composition)?;
                        for (i, &a) in amps.iter().enumerate() {
                            let j = f * n_ccdm + i;
                            for (b, &bit) in p.amp_bits[a].iter().enumerate() {
                                info[j * (m - 2) + quad * (q - 1) + b] = bit;
                            }
                        }
                    }
                }
                info[s * (m - 2)..].copy_from_slice(src);
                info
            }
        };
        let tx_bits = self.code.encode(&info)?;
        let symbols = self.map_symbols(&tx_bits)?;
        Ok(BlockTx { tx_bits, symbols })
    }

    /// Maps transmitted codeword bits to the block's symbols.
    pub fn map_symbols(&self, tx_bits: &[u8]) -> Result<Vec<Complex64>> {
        if tx_bits.len() != self.code.n_transmitted() {
            return Err(Error::Dimension(format!(
                "expected {} transmitted bits, got {}",
                self.code.n_transmitted(),
                tx_bits.len()
            )));
        }
        let m = self.constellation.bits_per_symbol();
        let mut out = Vec::with_capacity(self.symbols_per_block);
        for j in 0..self.symbols_per_block {
            let mut key = 0usize;
            for b in 0..m {
                key = (key << 1) | tx_bits[self.bit_map[j * m + b] as usize] as usize;
            }
            out.push(self.constellation.points[self.label_lut[key] as usize]);
        }
        Ok(out)
    }

    /// Scatters per-symbol label-bit LLRs (block order) into a full-length
    /// channel LLR vector for the decoder, zeros at punctured positions.
    pub fn llrs_to_codeword(&self, symbol_llrs: &[Vec<f64>]) -> Result<Vec<f64>> {
        let m = self.constellation.bits_per_symbol();
        if symbol_llrs.len() != self.symbols_per_block {
            return Err(Error::Dimension(format!(
                "expected {} symbols of LLRs, got {}",
                self.symbols_per_block,
                symbol_llrs.len()
            )));
        }
        let mut tx = vec![0.0f64; self.code.n_transmitted()];
        for (j, llrs) in symbol_llrs.iter().enumerate() {
            if llrs.len() != m {
                return Err(Error::Dimension(format!(
                    "symbol {j}: expected {m} LLRs, got {}",
                    llrs.len()
                )));
            }
            for b in 0..m {
                tx[self.bit_map[j * m + b] as usize] = llrs[b];
            }
        }
        self.code.scatter(&tx, 0.0)
    }

    /// Gathers per-symbol LLRs (block order) out of a full-length decoder
    /// LLR vector (extrinsic or posterior).
    pub fn codeword_to_llrs(&self, full: &[f64]) -> Result<Vec<Vec<f64>>> {
        let tx = self.code.gather(full)?;
        let m = self.constellation.bits_per_symbol();
        Ok((0..self.symbols_per_block)
            .map(|j| (0..m).map(|b| tx[self.bit_map[j * m + b] as usize]).collect())
            .collect())
    }

    /// Recovers the source bits from decoded hard decisions over the full
    /// variable set. For shaped frames this runs the CCDM inverse; a
    /// composition mismatch is reported as an error.
    pub fn recover_source(&self, hard_bits_full: &[u8]) -> Result<Vec<u8>> {
        if hard_bits_full.len() != self.code.n_vars {
            return Err(Error::Dimension("expected full variable set".into()));
        }
        let info = &hard_bits_full[..self.code.k];
        match &self.shaping {
            None => Ok(info.to_vec()),
            Some(p) => {
                let m = self.constellation.bits_per_symbol();
                let q = m / 2;
                let s = self.symbols_per_block;
                let n_ccdm = p.composition.block_length();
                let mut out = Vec::with_capacity(self.source_bits_per_block());
                for quad in 0..2 {
                    for f in 0..p.frames_per_quadrature {
                        let mut amps = Vec::with_capacity(n_ccdm);
                        for i in 0..n_ccdm {
                            let j = f * n_ccdm + i;
                            let bits: Vec<u8> = (0..q - 1)
                                .map(|b| info[j * (m - 2) + quad * (q - 1) + b])
                                .collect();
                            let a = p
                                .amp_bits
                                .iter()
                                .position(|x| x == &bits)
                                .ok_or_else(|| Error::Ccdm("unknown amplitude label".into()))?;
                            amps.push(a);
                        }
                        out.extend(ccdm_decode(&amps, &p.composition)?);
                    }
                }
                out.extend_from_slice(&info[s * (m - 2)..]);
                Ok(out)
            }
        }
    }
}

/// One encoded block: transmitted bits and their symbols in block order.
#[derive(Debug, Clone)]
pub struct BlockTx {
    pub tx_bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

fn build_label_lut(c: &ShapedConstellation) -> Vec<u32> {
    let m = c.bits_per_symbol();
    let mut lut = vec![u32::MAX; 1 << m];
    for (i, label) in c.labels.iter().enumerate() {
        let mut key = 0usize;
        for &b in label {
            key = (key << 1) | b as usize;
        }
        lut[key] = i as u32;
    }
    lut
}

/// amplitude index (0 = innermost) -> the q-1 amplitude label bits shared by
/// the +a and -a PAM levels.
fn amp_bit_table(c: &ShapedConstellation) -> Vec<Vec<u8>> {
    let m = c.bits_per_symbol();
    let q = m / 2;
    let l = c.pam_levels();
    let mut table = vec![Vec::new(); l / 2];
    // positive levels: PAM index l/2 + a has amplitude index a
    for a in 0..l / 2 {
        let li = l / 2 + a;
        let point_idx = li * l; // any Q level; take the first
        let label = &c.labels[point_idx];
        table[a] = label[1..q].to_vec();
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{build_qam, mb_prior};
    use crate::fec::{self, FamilyRate};
    use rand::Rng;

    fn toy_shaped_format() -> FrameFormat {
        toy_shaped_format_lift(16)
    }

    fn toy_shaped_format_lift(m: usize) -> FrameFormat {
        // 16QAM PAS at rate 1/2: m = 4, (m-2)/m = 0.5, so parity exactly
        // fills the signs. S = n_tx/4 with n_tx = 4M.
        let code = fec::build_code(FamilyRate::Half, m, 11).unwrap();
        let constellation = mb_prior(&build_qam(16).unwrap(), 3.2).unwrap();
        FrameFormat::shaped(constellation, code, None).unwrap()
    }

    fn perfect_llrs(f: &FrameFormat, tx: &BlockTx) -> Vec<Vec<f64>> {
        let m = f.constellation.bits_per_symbol();
        (0..f.symbols_per_block)
            .map(|j| {
                (0..m)
                    .map(|b| {
                        if tx.tx_bits[f.tx_position(j, b)] == 0 {
                            9.0
                        } else {
                            -9.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn uniform_round_trip() {
        let code = fec::build_code(FamilyRate::FourFifths, 16, 11).unwrap();
        let constellation = build_qam(16).unwrap();
        let f = FrameFormat::uniform(constellation, code).unwrap();
        let mut rng = crate::util::seeded_rng(1, "framing-u", 0);
        let source: Vec<u8> = (0..f.source_bits_per_block())
            .map(|_| rng.gen_range(0..2))
            .collect();
        let tx = f.encode_block(&source).unwrap();
        assert_eq!(tx.symbols.len(), f.symbols_per_block);
        let full = f.llrs_to_codeword(&perfect_llrs(&f, &tx)).unwrap();
        let r = fec::decode_bp(&f.code, &full, 50).unwrap();
        assert!(r.converged);
        assert_eq!(f.recover_source(&r.hard_bits).unwrap(), source);
    }

    #[test]
    fn shaped_round_trip_and_amplitude_composition() {
        let f = toy_shaped_format();
        let p = f.shaping.as_ref().unwrap();
        assert_eq!(p.extra_sign_info, 0, "rate 1/2 16QAM PAS has no extra bits");
        let mut rng = crate::util::seeded_rng(2, "framing-s", 0);
        let source: Vec<u8> = (0..f.source_bits_per_block())
            .map(|_| rng.gen_range(0..2))
            .collect();
        let tx = f.encode_block(&source).unwrap();

        // Per-quadrature amplitude composition is exact.
        let half = f.constellation.amplitude_levels();
        let mut counts_i = vec![0u32; half];
        let mut counts_q = vec![0u32; half];
        let scale = f.constellation.grid_scale();
        for s in &tx.symbols {
            let ai = ((s.re.abs() / scale - 1.0) / 2.0).round() as usize;
            let aq = ((s.im.abs() / scale - 1.0) / 2.0).round() as usize;
            counts_i[ai] += 1;
            counts_q[aq] += 1;
        }
        assert_eq!(counts_i, p.composition.counts());
        assert_eq!(counts_q, p.composition.counts());

        // noiseless recovery
        let full = f.llrs_to_codeword(&perfect_llrs(&f, &tx)).unwrap();
        let r = fec::decode_bp(&f.code, &full, 50).unwrap();
        assert!(r.converged);
        assert_eq!(f.recover_source(&r.hard_bits).unwrap(), source);
    }

    #[test]
    fn shaped_symbol_distribution_tracks_prior() {
        // Empirical symbol histogram of a long PAS stream against the MB
        // prior. Amplitude marginals are exact by construction; the joint
        // and the signs fluctuate at the sampling-noise level.
        let f = toy_shaped_format_lift(512);
        let mut rng = crate::util::seeded_rng(3, "framing-tv", 0);
        let mut hist = vec![0usize; f.constellation.order];
        let mut total = 0usize;
        let m = f.constellation.bits_per_symbol();
        let lut = build_label_lut(&f.constellation);
        for _ in 0..40 {
            let source: Vec<u8> = (0..f.source_bits_per_block())
                .map(|_| rng.gen_range(0..2))
                .collect();
            let tx = f.encode_block(&source).unwrap();
            for j in 0..f.symbols_per_block {
                let mut key = 0usize;
                for b in 0..m {
                    key = (key << 1) | tx.tx_bits[f.tx_position(j, b)] as usize;
                }
                hist[lut[key] as usize] += 1;
                total += 1;
            }
        }
        let tv: f64 = hist
            .iter()
            .zip(&f.constellation.prior)
            .map(|(&h, &p)| (h as f64 / total as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation {tv} vs prior");
    }

    #[test]
    fn net_rate_matches_rate_formula_closely() {
        // net_rate counts the actual CCDM bits, which sit slightly below the
        // idealized H - (1-R) log2 M because of the finite-length rate loss.
        let f = toy_shaped_format_lift(512);
        let h = f.constellation.entropy();
        let m = f.constellation.bits_per_symbol() as f64;
        let ideal = h - (1.0 - f.code.rate()) * m;
        let got = f.net_rate();
        assert!(got <= ideal + 1e-9);
        assert!(ideal - got < 0.1, "ideal {ideal} vs got {got}");
    }

    #[test]
    fn shaped_rejects_low_rate_codes() {
        // 64QAM PAS needs R >= 2/3; a rate-1/2 code cannot fit its parity
        // on the sign bits.
        let code = fec::build_code(FamilyRate::Half, 24, 11).unwrap();
        let c64 = mb_prior(&build_qam(64).unwrap(), 5.0).unwrap();
        assert!(FrameFormat::shaped(c64, code, None).is_err());
    }
}

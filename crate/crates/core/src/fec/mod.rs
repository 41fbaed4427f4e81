//! Protograph LDPC codes with puncturing, systematic encoding and
//! belief-propagation decoding.
//!
//! Codes are built from the AR4JA-style family in [`protograph`]: rates 1/2,
//! 2/3 and 4/5 with k = 2M, 4M, 8M information bits for lift size M. The
//! highest-index block column is never transmitted; further puncturing for
//! rate adaptation spreads deterministically over the remaining parity
//! columns. Encoding runs in linear time through the accumulator structure.

pub mod alist;
mod decode;
mod gf2;
pub mod protograph;

pub use decode::{decode_bp, DecodeResult};
pub use protograph::FamilyRate;

use crate::{Error, Result};
use gf2::{BitBlock, Gf2Poly};
use protograph::{lift_protograph, LiftedProtograph, CHECK_ROWS};

/// Default seed for the circulant lifting; recorded in exported metadata so
/// any matrix can be reproduced from (family, lift, seed).
pub const DEFAULT_LIFT_SEED: u64 = 0x4152_344a;

/// A lifted, optionally punctured LDPC code.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    /// Construction metadata when built from the protograph family.
    pub family: Option<FamilyRate>,
    pub lift: usize,
    pub seed: u64,
    /// Information bits.
    pub k: usize,
    /// Total variable nodes (transmitted + punctured).
    pub n_vars: usize,
    pub n_checks: usize,
    /// true = variable node is not transmitted.
    pub puncture_mask: Vec<bool>,
    /// Transmitted variable indices, ascending.
    tx_positions: Vec<u32>,
    // Sparse H in CSR form, by check and by variable.
    check_ptr: Vec<u32>,
    check_var: Vec<u32>,
    var_ptr: Vec<u32>,
    var_edge: Vec<u32>,
    enc: Option<Encoder>,
}

#[derive(Debug, Clone)]
struct Encoder {
    proto: LiftedProtograph,
    /// Support of the inverse of the accumulator polynomial mod x^M - 1.
    inv_acc_support: Vec<usize>,
}

impl LdpcCode {
    pub fn n_transmitted(&self) -> usize {
        self.tx_positions.len()
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n_transmitted() as f64
    }

    pub fn n_edges(&self) -> usize {
        self.check_var.len()
    }

    pub fn tx_positions(&self) -> &[u32] {
        &self.tx_positions
    }

    pub(crate) fn check_row(&self, c: usize) -> &[u32] {
        &self.check_var[self.check_ptr[c] as usize..self.check_ptr[c + 1] as usize]
    }

    pub(crate) fn var_edges(&self, v: usize) -> &[u32] {
        &self.var_edge[self.var_ptr[v] as usize..self.var_ptr[v + 1] as usize]
    }

    pub(crate) fn check_ptr(&self) -> &[u32] {
        &self.check_ptr
    }

    pub(crate) fn check_var(&self) -> &[u32] {
        &self.check_var
    }

    /// Is codeword `bits` (full variable set) a valid codeword?
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        if bits.len() != self.n_vars {
            return false;
        }
        (0..self.n_checks).all(|c| {
            self.check_row(c)
                .iter()
                .fold(0u8, |acc, &v| acc ^ (bits[v as usize] & 1))
                == 0
        })
    }

    /// Expands transmitted-position values into a full-length vector with
    /// `fill` at punctured positions (LLR 0 for the decoder).
    pub fn scatter<T: Copy>(&self, tx_values: &[T], fill: T) -> Result<Vec<T>> {
        if tx_values.len() != self.n_transmitted() {
            return Err(Error::Dimension(format!(
                "expected {} transmitted values, got {}",
                self.n_transmitted(),
                tx_values.len()
            )));
        }
        let mut full = vec![fill; self.n_vars];
        for (&pos, &v) in self.tx_positions.iter().zip(tx_values) {
            full[pos as usize] = v;
        }
        Ok(full)
    }

    /// Gathers the transmitted positions out of a full-length vector.
    pub fn gather<T: Copy>(&self, full: &[T]) -> Result<Vec<T>> {
        if full.len() != self.n_vars {
            return Err(Error::Dimension(format!(
                "expected {} variables, got {}",
                self.n_vars,
                full.len()
            )));
        }
        Ok(self
            .tx_positions
            .iter()
            .map(|&p| full[p as usize])
            .collect())
    }

    /// Systematic encode: returns the transmitted codeword bits.
    /// Information bits occupy the transmitted systematic positions verbatim.
    pub fn encode(&self, info_bits: &[u8]) -> Result<Vec<u8>> {
        Ok(self.gather(&self.encode_full(info_bits)?)?)
    }

    /// Systematic encode returning all variable nodes including punctured.
    pub fn encode_full(&self, info_bits: &[u8]) -> Result<Vec<u8>> {
        let enc = self.enc.as_ref().ok_or_else(|| {
            Error::Ldpc("code imported from alist has no encoder structure".into())
        })?;
        if info_bits.len() != self.k {
            return Err(Error::Dimension(format!(
                "expected {} information bits, got {}",
                self.k,
                info_bits.len()
            )));
        }
        let m = self.lift;
        let cells = &enc.proto.cells;
        let n_info_cols = enc.proto.rate.info_columns();
        let info_blocks: Vec<BitBlock> = (0..n_info_cols)
            .map(|c| BitBlock::from_bits(&info_bits[c * m..(c + 1) * m]))
            .collect();
        // Row sums over the information columns (row 0 never touches them).
        let mut b1 = BitBlock::zeros(m);
        let mut b2 = BitBlock::zeros(m);
        for (c, block) in info_blocks.iter().enumerate() {
            for &s in &cells[c][1] {
                b1.xor_rotated(block, s as usize);
            }
            for &s in &cells[c][2] {
                b2.xor_rotated(block, s as usize);
            }
        }
        let c3_row2 = &cells[n_info_cols + 1][2]; // accumulator feedback taps
        let c4_row1 = &cells[n_info_cols + 2][1];
        let c4_row0 = &cells[n_info_cols + 2][0];
        // rhs = b2 + P(c3_row2) * b1 ; solve (I + P(c3_row2) P(c4_row1)) c4 = rhs
        let mut rhs = b2.clone();
        for &s in c3_row2.iter() {
            rhs.xor_rotated(&b1, s as usize);
        }
        let mut c4 = BitBlock::zeros(m);
        for &e in &enc.inv_acc_support {
            c4.xor_rotated(&rhs, e);
        }
        // c3 = b1 + P(c4_row1) c4
        let mut c3 = b1.clone();
        for &s in c4_row1.iter() {
            c3.xor_rotated(&c4, s as usize);
        }
        // c2 = P(c4_row0) c4   (row 0 has no information-column edges)
        let mut c2 = BitBlock::zeros(m);
        for &s in c4_row0.iter() {
            c2.xor_rotated(&c4, s as usize);
        }
        let mut out = Vec::with_capacity(self.n_vars);
        for block in info_blocks.iter().chain([&c2, &c3, &c4]) {
            out.extend(block.to_bits());
        }
        Ok(out)
    }
}

/// Builds a code from the protograph family at the given lift size.
///
/// For power-of-two lifts the accumulator is always invertible; for other
/// lifts the shift selection deterministically retries with derived seeds
/// until it is, so a (family, lift, seed) triple stays reproducible.
pub fn build_code(family: FamilyRate, lift: usize, seed: u64) -> Result<LdpcCode> {
    let mut last_err = None;
    for attempt in 0..64u64 {
        let proto = lift_protograph(family, lift, seed.wrapping_add(attempt << 32))?;
        match code_from_proto(proto) {
            Ok(code) => return Ok(code),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Ldpc("lift failed".into())))
}

/// Builds the family member with `k` information bits.
pub fn build_code_k(family: FamilyRate, k: usize, seed: u64) -> Result<LdpcCode> {
    let cols = family.info_columns();
    if k == 0 || k % cols != 0 {
        return Err(Error::Ldpc(format!(
            "k = {k} is not a multiple of the {cols} information columns"
        )));
    }
    build_code(family, k / cols, seed)
}

fn code_from_proto(proto: LiftedProtograph) -> Result<LdpcCode> {
    let m = proto.lift;
    let cols = proto.columns();
    let n_vars = cols * m;
    let n_checks = CHECK_ROWS * m;
    let k = proto.rate.info_columns() * m;

    // Accumulator invertibility: a(x) = 1 + q(x) with q of even weight, so
    // a has odd weight and is invertible mod x^M - 1. Verify anyway.
    let n_info = proto.rate.info_columns();
    let q = {
        let p78 = Gf2Poly::from_coeffs(
            &proto.cells[n_info + 1][2]
                .iter()
                .map(|&s| s as usize)
                .collect::<Vec<_>>(),
        );
        let p234 = Gf2Poly::from_coeffs(
            &proto.cells[n_info + 2][1]
                .iter()
                .map(|&s| s as usize)
                .collect::<Vec<_>>(),
        );
        p78.mul(&p234)
    };
    let mut a = q.rem(&{
        let mut p = Gf2Poly::monomial(m);
        p.add_assign(&Gf2Poly::one());
        p
    });
    a.add_assign(&Gf2Poly::one());
    let inv = a
        .inverse_mod_cyclic(m)
        .ok_or_else(|| Error::Ldpc("accumulator polynomial not invertible".into()))?;
    let enc = Encoder {
        proto: proto.clone(),
        inv_acc_support: inv.support(),
    };

    // Sparse H: check c in row block r at offset i connects variable
    // j = (i - s) mod m of column block col.
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n_checks];
    for (col, colcells) in proto.cells.iter().enumerate() {
        for (r, shifts) in colcells.iter().enumerate() {
            for &s in shifts {
                for i in 0..m {
                    let j = (i + m - s as usize) % m;
                    rows[r * m + i].push((col * m + j) as u32);
                }
            }
        }
    }
    let (check_ptr, check_var, var_ptr, var_edge) = build_csr(rows, n_vars);

    // The highest block column is never transmitted.
    let mut puncture_mask = vec![false; n_vars];
    for p in puncture_mask.iter_mut().skip((cols - 1) * m) {
        *p = true;
    }
    let tx_positions = positions_from_mask(&puncture_mask);

    Ok(LdpcCode {
        family: Some(proto.rate),
        lift: m,
        seed: proto.seed,
        k,
        n_vars,
        n_checks,
        puncture_mask,
        tx_positions,
        check_ptr,
        check_var,
        var_ptr,
        var_edge,
        enc: Some(enc),
    })
}

fn build_csr(
    rows: Vec<Vec<u32>>,
    n_vars: usize,
) -> (Vec<u32>, Vec<u32>, Vec<u32>, Vec<u32>) {
    let mut check_ptr = Vec::with_capacity(rows.len() + 1);
    let mut check_var = Vec::new();
    check_ptr.push(0u32);
    for row in &rows {
        let mut r = row.clone();
        r.sort_unstable();
        check_var.extend_from_slice(&r);
        check_ptr.push(check_var.len() as u32);
    }
    let mut var_deg = vec![0u32; n_vars];
    for &v in &check_var {
        var_deg[v as usize] += 1;
    }
    let mut var_ptr = vec![0u32; n_vars + 1];
    for i in 0..n_vars {
        var_ptr[i + 1] = var_ptr[i] + var_deg[i];
    }
    let mut cursor = var_ptr.clone();
    let mut var_edge = vec![0u32; check_var.len()];
    for (e, &v) in check_var.iter().enumerate() {
        var_edge[cursor[v as usize] as usize] = e as u32;
        cursor[v as usize] += 1;
    }
    (check_ptr, check_var, var_ptr, var_edge)
}

fn positions_from_mask(mask: &[bool]) -> Vec<u32> {
    mask.iter()
        .enumerate()
        .filter(|(_, &p)| !p)
        .map(|(i, _)| i as u32)
        .collect()
}

/// Returns a copy of `code` punctured down to `n_target` transmitted bits.
///
/// Extra punctures spread evenly over the accumulator parity column first,
/// then over the degree-1 parity column, in deterministic order.
pub fn puncture(code: &LdpcCode, n_target: usize) -> Result<LdpcCode> {
    if n_target > code.n_transmitted() {
        return Err(Error::Ldpc(format!(
            "n_target {} exceeds transmitted length {}",
            n_target,
            code.n_transmitted()
        )));
    }
    if n_target < code.k {
        return Err(Error::Ldpc(format!(
            "n_target {} below k {} would give rate > 1",
            n_target, code.k
        )));
    }
    let family = code
        .family
        .ok_or_else(|| Error::Ldpc("cannot puncture an imported code".into()))?;
    let m = code.lift;
    let extra = code.n_transmitted() - n_target;
    let mut mask = code.puncture_mask.clone();
    // parity block columns: degree-1 at info_cols, accumulator at info_cols+1
    let c2_base = family.info_columns() * m;
    let c3_base = c2_base + m;
    let in_c3 = extra.min(m);
    for i in 0..in_c3 {
        mask[c3_base + i * m / in_c3] = true;
    }
    let in_c2 = extra - in_c3;
    if in_c2 > m {
        return Err(Error::Ldpc("puncturing request exceeds parity bits".into()));
    }
    for i in 0..in_c2 {
        mask[c2_base + i * m / in_c2] = true;
    }
    let mut out = code.clone();
    out.puncture_mask = mask;
    out.tx_positions = positions_from_mask(&out.puncture_mask);
    if out.n_transmitted() != n_target {
        return Err(Error::Ldpc(
            "puncture pattern collided with existing punctures; puncture from the base code".into(),
        ));
    }
    Ok(out)
}

/// Plans (family, lift, n_target) for a k-bit code punctured to n_target:
/// the highest family rate whose unpunctured length reaches n_target.
pub fn plan_code(k: usize, n_target: usize, seed: u64) -> Result<LdpcCode> {
    for family in [
        FamilyRate::FourFifths,
        FamilyRate::TwoThirds,
        FamilyRate::Half,
    ] {
        if k % family.info_columns() != 0 {
            continue;
        }
        let m = k / family.info_columns();
        let base_tx = (family.columns() - 1) * m;
        if base_tx >= n_target {
            let code = build_code(family, m, seed)?;
            return puncture(&code, n_target);
        }
    }
    Err(Error::Ldpc(format!(
        "no family rate supports k={k}, n={n_target}"
    )))
}

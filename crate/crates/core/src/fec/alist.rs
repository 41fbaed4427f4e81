//! Parity-check import/export in the sparse "alist" text format.
//!
//! The format carries only the H matrix. Codes read back from alist decode
//! and export bit-exactly; they carry no protograph metadata, so systematic
//! encoding and puncturing stay with codes built from the family.

use super::{build_csr, positions_from_mask, LdpcCode};
use crate::{Error, Result};
use std::io::{BufRead, Write};

/// Writes `code`'s parity-check matrix as alist.
pub fn export_alist<W: Write>(code: &LdpcCode, mut w: W) -> Result<()> {
    let n = code.n_vars;
    let m = code.n_checks;
    let var_degs: Vec<usize> = (0..n).map(|v| code.var_edges(v).len()).collect();
    let check_degs: Vec<usize> = (0..m).map(|c| code.check_row(c).len()).collect();
    writeln!(w, "{} {}", n, m)?;
    writeln!(
        w,
        "{} {}",
        var_degs.iter().max().unwrap_or(&0),
        check_degs.iter().max().unwrap_or(&0)
    )?;
    let join = |v: &[usize]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(w, "{}", join(&var_degs))?;
    writeln!(w, "{}", join(&check_degs))?;
    for v in 0..n {
        // 1-based check indices per variable
        let mut checks: Vec<usize> = code
            .var_edges(v)
            .iter()
            .map(|&e| edge_check(code, e as usize) + 1)
            .collect();
        checks.sort_unstable();
        writeln!(w, "{}", join(&checks))?;
    }
    for c in 0..m {
        let vars: Vec<usize> = code.check_row(c).iter().map(|&v| v as usize + 1).collect();
        writeln!(w, "{}", join(&vars))?;
    }
    Ok(())
}

fn edge_check(code: &LdpcCode, e: usize) -> usize {
    // binary search over the check pointer array
    let ptr = code.check_ptr();
    match ptr.binary_search(&(e as u32)) {
        Ok(i) => {
            // first check whose range starts at e
            let mut i = i;
            while i + 1 < ptr.len() && ptr[i + 1] == e as u32 {
                i += 1;
            }
            i
        }
        Err(i) => i - 1,
    }
}

/// Reads an alist matrix into a decode-capable [`LdpcCode`].
///
/// k is taken as n - m (full-rank assumption) and no positions are punctured.
pub fn import_alist<R: BufRead>(r: R) -> Result<LdpcCode> {
    let mut tokens = Vec::new();
    for line in r.lines() {
        let line = line?;
        for t in line.split_whitespace() {
            tokens.push(
                t.parse::<usize>()
                    .map_err(|e| Error::Ldpc(format!("bad alist token {t:?}: {e}")))?,
            );
        }
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| {
        it.next()
            .ok_or_else(|| Error::Ldpc(format!("alist truncated at {what}")))
    };
    let n = next("n")?;
    let m = next("m")?;
    let _max_col = next("max col degree")?;
    let _max_row = next("max row degree")?;
    let col_degs: Vec<usize> = (0..n).map(|_| next("column degree")).collect::<Result<_>>()?;
    let row_degs: Vec<usize> = (0..m).map(|_| next("row degree")).collect::<Result<_>>()?;
    // per-variable check lists (skipped entries may be zero-padded)
    let mut var_checks: Vec<Vec<u32>> = Vec::with_capacity(n);
    for &d in &col_degs {
        let mut list = Vec::with_capacity(d);
        for _ in 0..d {
            let c = next("check index")?;
            if c == 0 || c > m {
                return Err(Error::Ldpc(format!("check index {c} out of range")));
            }
            list.push((c - 1) as u32);
        }
        var_checks.push(list);
    }
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(m);
    for &d in &row_degs {
        let mut list = Vec::with_capacity(d);
        for _ in 0..d {
            let v = next("variable index")?;
            if v == 0 || v > n {
                return Err(Error::Ldpc(format!("variable index {v} out of range")));
            }
            list.push((v - 1) as u32);
        }
        rows.push(list);
    }
    // cross-check the two adjacency descriptions
    let mut from_cols: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (v, checks) in var_checks.iter().enumerate() {
        for &c in checks {
            from_cols[c as usize].push(v as u32);
        }
    }
    for (a, b) in rows.iter().zip(&from_cols) {
        let mut a = a.clone();
        let mut b = b.clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(Error::Ldpc("alist row/column adjacency mismatch".into()));
        }
    }
    if n <= m {
        return Err(Error::Ldpc(format!("alist with n={n} <= m={m} rows")));
    }
    let (check_ptr, check_var, var_ptr, var_edge) = build_csr(rows, n);
    let puncture_mask = vec![false; n];
    let tx_positions = positions_from_mask(&puncture_mask);
    Ok(LdpcCode {
        family: None,
        lift: 0,
        seed: 0,
        k: n - m,
        n_vars: n,
        n_checks: m,
        puncture_mask,
        tx_positions,
        check_ptr,
        check_var,
        var_ptr,
        var_edge,
        enc: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::{build_code, decode_bp, FamilyRate};

    #[test]
    fn export_import_round_trip_preserves_h() {
        let code = build_code(FamilyRate::TwoThirds, 12, 9).unwrap();
        let mut buf = Vec::new();
        export_alist(&code, &mut buf).unwrap();
        let back = import_alist(&buf[..]).unwrap();
        assert_eq!(back.n_vars, code.n_vars);
        assert_eq!(back.n_checks, code.n_checks);
        for c in 0..code.n_checks {
            let mut a: Vec<u32> = code.check_row(c).to_vec();
            let mut b: Vec<u32> = back.check_row(c).to_vec();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b, "check {c}");
        }
        // second export is byte-identical (bit-exact swap guarantee)
        let mut buf2 = Vec::new();
        export_alist(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn imported_code_decodes_codewords_of_the_original() {
        let code = build_code(FamilyRate::Half, 16, 9).unwrap();
        let info: Vec<u8> = (0..code.k).map(|i| (i % 3 == 0) as u8).collect();
        let full = code.encode_full(&info).unwrap();
        let mut buf = Vec::new();
        export_alist(&code, &mut buf).unwrap();
        let back = import_alist(&buf[..]).unwrap();
        let llrs: Vec<f64> = full.iter().map(|&b| if b == 0 { 9.0 } else { -9.0 }).collect();
        let r = decode_bp(&back, &llrs, 10).unwrap();
        assert!(r.converged);
        assert_eq!(r.hard_bits, full);
        assert!(back.encode(&info).is_err(), "imported codes have no encoder");
    }
}

//! AR4JA protograph family and deterministic circulant lifting.
//!
//! The three family rates share one parity structure: the last three block
//! columns are (in order) a degree-1 column, a jagged-accumulator column and
//! the always-punctured degree-6 column, which gives every rate the same
//! linear-time encoder. Higher rates prepend degree-4 information columns.
//!
//! Lifting assigns one circulant shift per protograph edge. Shifts are chosen
//! greedily from a seeded stream, rejecting 4-cycles outright and preferring
//! candidates that add the fewest 6-cycles, so a (family, lift, seed) triple
//! always reproduces the same parity-check matrix.

use crate::{Error, Result};
use rand::seq::SliceRandom;

pub const CHECK_ROWS: usize = 3;

/// Supported family rates k/n of the unpunctured transmitted code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FamilyRate {
    Half,
    TwoThirds,
    FourFifths,
}

impl FamilyRate {
    /// Block columns in the protograph.
    pub fn columns(self) -> usize {
        match self {
            FamilyRate::Half => 5,
            FamilyRate::TwoThirds => 7,
            FamilyRate::FourFifths => 11,
        }
    }

    /// Information block columns (k = info_columns * lift).
    pub fn info_columns(self) -> usize {
        self.columns() - 3
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyRate::Half => "1/2",
            FamilyRate::TwoThirds => "2/3",
            FamilyRate::FourFifths => "4/5",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1/2" => Ok(FamilyRate::Half),
            "2/3" => Ok(FamilyRate::TwoThirds),
            "4/5" => Ok(FamilyRate::FourFifths),
            other => Err(Error::Ldpc(format!(
                "unknown family rate {other:?}; expected 1/2, 2/3 or 4/5"
            ))),
        }
    }
}

/// One protograph cell: which shifts are pinned to the identity and how many
/// free circulants the lifter must place.
#[derive(Debug, Clone, Copy, Default)]
pub struct CellTemplate {
    pub pinned_identity: usize,
    pub free: usize,
}

impl CellTemplate {
    const fn empty() -> Self {
        Self {
            pinned_identity: 0,
            free: 0,
        }
    }
    const fn i() -> Self {
        Self {
            pinned_identity: 1,
            free: 0,
        }
    }
    const fn f(n: usize) -> Self {
        Self {
            pinned_identity: 0,
            free: n,
        }
    }
    const fn i_plus(n: usize) -> Self {
        Self {
            pinned_identity: 1,
            free: n,
        }
    }
    pub fn multiplicity(&self) -> usize {
        self.pinned_identity + self.free
    }
}

/// Protograph template: 3 rows of `columns()` cells.
pub fn base_template(rate: FamilyRate) -> Vec<[CellTemplate; CHECK_ROWS]> {
    use CellTemplate as C;
    // Core rate-1/2 columns: two information columns, then the degree-1,
    // accumulator and punctured columns.
    let core = [
        [C::empty(), C::i(), C::i()],        // info c0
        [C::empty(), C::i(), C::f(2)],       // info c1
        [C::i(), C::empty(), C::empty()],    // parity c2 (degree 1)
        [C::empty(), C::i(), C::f(2)],       // parity c3
        [C::i_plus(1), C::f(3), C::i()],     // parity c4 (degree 6, punctured)
    ];
    // Degree-4 information columns prepended for the higher rates, in
    // alternating orientation.
    let ext_a = [C::empty(), C::f(3), C::i()];
    let ext_b = [C::empty(), C::i(), C::f(3)];
    let mut cols: Vec<[CellTemplate; CHECK_ROWS]> = Vec::new();
    let prepended = rate.columns() - 5;
    for i in 0..prepended {
        cols.push(if i % 2 == 0 { ext_a } else { ext_b });
    }
    cols.extend_from_slice(&core);
    cols
}

/// A lifted protograph: per cell, the list of circulant shifts.
/// Shift `s` stands for the M x M circulant with `H[i][j] = 1` iff
/// `j = (i - s) mod M`, i.e. variable `j` participates in check `j + s`.
#[derive(Debug, Clone)]
pub struct LiftedProtograph {
    pub rate: FamilyRate,
    pub lift: usize,
    pub seed: u64,
    /// cells[col][row] = sorted shifts.
    pub cells: Vec<[Vec<u32>; CHECK_ROWS]>,
}

impl LiftedProtograph {
    pub fn columns(&self) -> usize {
        self.cells.len()
    }
}

struct PlacedEdges {
    // (row, col) -> shifts placed so far
    cells: Vec<[Vec<u32>; CHECK_ROWS]>,
    m: u64,
}

impl PlacedEdges {
    /// Counts 4-cycles a new shift `s` at (row, col) would close.
    fn four_cycles_added(&self, row: usize, col: usize, s: u32) -> usize {
        let m = self.m;
        let mut count = 0usize;
        for other_row in 0..CHECK_ROWS {
            if other_row == row {
                continue;
            }
            let b_set = &self.cells[col][other_row];
            if b_set.is_empty() {
                continue;
            }
            for (cb, colcells) in self.cells.iter().enumerate() {
                let c_set = &colcells[row];
                let d_set = &colcells[other_row];
                for &c in c_set {
                    for (&b, &d) in b_set.iter().flat_map(|b| d_set.iter().map(move |d| (b, d))) {
                        if cb == col {
                            // same column: distinct variable requires a != c
                            if s == c {
                                continue;
                            }
                        }
                        // cycle condition: a - b - c + d = 0 (mod m) with a = s
                        let lhs = (s as u64 + m - b as u64 + m - c as u64 + d as u64) % m;
                        if lhs % m == 0 {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    /// Counts the distinct-row-triple 6-cycles a new shift would close.
    /// This is a scoring heuristic, not an exhaustive girth computation.
    fn six_cycles_added(&self, row: usize, col: usize, s: u32) -> usize {
        let m = self.m as i64;
        let ncols = self.cells.len();
        let rows: [usize; CHECK_ROWS] = [0, 1, 2];
        let mut count = 0usize;
        // Cycle: u(ca) -m1(r1)- v(cb) -m2(r2)- w(cc) -m3(r3)- u, condition
        // (b1-a1) + (c2-b2) + (a3-c3) = 0 mod m. Place the candidate as a1.
        for &r2 in &rows {
            if r2 == row {
                continue;
            }
            let r3 = 3 - row - r2; // the remaining row
            for cb in 0..ncols {
                for cc in 0..ncols {
                    let b1s = &self.cells[cb][row];
                    let b2s = &self.cells[cb][r2];
                    let c2s = &self.cells[cc][r2];
                    let c3s = &self.cells[cc][r3];
                    let a3s = &self.cells[col][r3];
                    if b1s.is_empty() || b2s.is_empty() || c2s.is_empty() || c3s.is_empty() || a3s.is_empty() {
                        continue;
                    }
                    for &b1 in b1s {
                        for &b2 in b2s {
                            for &c2 in c2s {
                                for &c3 in c3s {
                                    for &a3 in a3s {
                                        let v = (b1 as i64 - s as i64) + (c2 as i64 - b2 as i64)
                                            + (a3 as i64 - c3 as i64);
                                        if v.rem_euclid(m) == 0 {
                                            count += 1;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        count
    }
}

/// Lifts the protograph with seeded greedy shift selection.
pub fn lift_protograph(rate: FamilyRate, lift: usize, seed: u64) -> Result<LiftedProtograph> {
    if lift < 4 {
        return Err(Error::Ldpc(format!("lift size {lift} too small")));
    }
    let template = base_template(rate);
    let mut placed = PlacedEdges {
        cells: template
            .iter()
            .map(|col| {
                [
                    if col[0].pinned_identity > 0 { vec![0] } else { vec![] },
                    if col[1].pinned_identity > 0 { vec![0] } else { vec![] },
                    if col[2].pinned_identity > 0 { vec![0] } else { vec![] },
                ]
            })
            .collect(),
        m: lift as u64,
    };
    let mut rng = crate::util::seeded_rng(seed, "ar4ja-lift", lift as u64);
    const CANDIDATE_POOL: usize = 48;
    for col in 0..template.len() {
        for row in 0..CHECK_ROWS {
            for _slot in 0..template[col][row].free {
                let mut candidates: Vec<u32> = (1..lift as u32).collect();
                candidates.shuffle(&mut rng);
                let mut best: Option<(usize, usize, u32)> = None;
                let mut clean_seen = 0usize;
                for &s in &candidates {
                    if placed.cells[col][row].contains(&s) {
                        continue;
                    }
                    let c4 = placed.four_cycles_added(row, col, s);
                    let c6 = if c4 == 0 {
                        placed.six_cycles_added(row, col, s)
                    } else {
                        usize::MAX
                    };
                    let key = (c4, c6, s);
                    if best.map_or(true, |b| (key.0, key.1) < (b.0, b.1)) {
                        best = Some(key);
                    }
                    if c4 == 0 {
                        clean_seen += 1;
                        if c6 == 0 || clean_seen >= CANDIDATE_POOL {
                            break;
                        }
                    }
                }
                let (_, _, s) = best.ok_or_else(|| {
                    Error::Ldpc(format!("no circulant shift available at lift {lift}"))
                })?;
                placed.cells[col][row].push(s);
                placed.cells[col][row].sort_unstable();
            }
        }
    }
    Ok(LiftedProtograph {
        rate,
        lift,
        seed,
        cells: placed.cells,
    })
}

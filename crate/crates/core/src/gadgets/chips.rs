//! Chip catalogue: each chip is one operation with a fixed cell footprint,
//! an optional custom gate and a set of per-replica lookups.

use std::sync::Arc;

use crate::field::Fe;
use crate::ir::Expression;

/// Largest clamp or lookup-shifted domain a chip may use.
pub const MAX_TABLE_DOMAIN: i64 = 1 << 16;
/// Bytes packed into one field element.
pub const PACK_BYTES: usize = 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuotientCheck {
    /// The quotient is constrained elsewhere (typically by a following clamp).
    Unchecked,
    /// `q - min` must lie in `[0, 2^bits)`.
    Bits { bits: u32, min: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChipKey {
    /// 31 freshly introduced byte cells, each range-checked, packed into `e`.
    PackEntry,
    /// Packs 31 copies of already-constrained byte cells into `e`.
    Pack,
    Range { bits: u32 },
    /// `y = sum(coeffs[i] * x[i]) + offset`, coefficients hard-coded.
    Dot { coeffs: Vec<i64>, offset: i64 },
    /// `c = q * divisor + r`, `0 <= r < divisor`.
    Div { divisor: u64, quotient: QuotientCheck },
    /// `y = min(max(x, 0), 255)` for `x` in `[lo, hi]`.
    Clamp { lo: i64, hi: i64 },
    /// `y = table[x]` for `x` in `[0, 255]`.
    Map { table: Arc<[u8; 256]> },
}

/// A fixed lookup table, shared by every lookup naming the same key.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableKey {
    /// `{0, .., n-1}`; `n = 2^bits` doubles as the range table.
    Below(u64),
    /// Pairs `(i, clamp(lo + i))` for `i` in `0..=hi-lo`.
    Clamp { lo: i64, hi: i64 },
    Map(Arc<[u8; 256]>),
}

impl TableKey {
    pub fn arity(&self) -> usize {
        match self {
            TableKey::Below(_) => 1,
            TableKey::Clamp { .. } | TableKey::Map(_) => 2,
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            TableKey::Below(n) => *n,
            TableKey::Clamp { lo, hi } => (hi - lo + 1) as u64,
            TableKey::Map(_) => 256,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, i: u64) -> Vec<Fe> {
        match self {
            TableKey::Below(_) => vec![Fe::from_u64(i)],
            TableKey::Clamp { lo, .. } => vec![Fe::from_u64(i), Fe::from_i64(clamp_u8(lo + i as i64))],
            TableKey::Map(t) => vec![Fe::from_u64(i), Fe::from_u64(t[i as usize] as u64)],
        }
    }
}

pub fn clamp_u8(x: i64) -> i64 {
    x.clamp(0, 255)
}

/// A per-replica lookup: inputs as offsets into the replica's cells.
pub(crate) struct LookupSpec {
    pub name: &'static str,
    pub inputs: Vec<Expression>,
    pub table: TableKey,
}

impl ChipKey {
    pub fn name(&self) -> &'static str {
        match self {
            ChipKey::PackEntry => "pack_entry",
            ChipKey::Pack => "pack",
            ChipKey::Range { .. } => "range",
            ChipKey::Dot { .. } => "dot",
            ChipKey::Div { .. } => "div",
            ChipKey::Clamp { .. } => "clamp",
            ChipKey::Map { .. } => "map",
        }
    }

    /// Advice cells per operation.
    pub fn footprint(&self) -> usize {
        match self {
            ChipKey::PackEntry | ChipKey::Pack => PACK_BYTES + 1,
            ChipKey::Range { .. } => 1,
            ChipKey::Dot { coeffs, .. } => coeffs.len() + 1,
            ChipKey::Div { .. } => 3,
            ChipKey::Clamp { .. } | ChipKey::Map { .. } => 2,
        }
    }

    pub fn has_gate(&self) -> bool {
        matches!(self, ChipKey::PackEntry | ChipKey::Pack | ChipKey::Dot { .. } | ChipKey::Div { .. })
    }

    pub fn lookups_per_op(&self) -> usize {
        match self {
            ChipKey::PackEntry => PACK_BYTES,
            ChipKey::Pack | ChipKey::Dot { .. } => 0,
            ChipKey::Range { .. } | ChipKey::Clamp { .. } | ChipKey::Map { .. } => 1,
            ChipKey::Div { quotient: QuotientCheck::Unchecked, .. } => 1,
            ChipKey::Div { .. } => 2,
        }
    }

    pub fn tables(&self) -> Vec<TableKey> {
        match self {
            ChipKey::PackEntry => vec![TableKey::Below(256)],
            ChipKey::Pack | ChipKey::Dot { .. } => vec![],
            ChipKey::Range { bits } => vec![TableKey::Below(1 << bits)],
            ChipKey::Div { divisor, quotient } => {
                let mut t = vec![TableKey::Below(*divisor)];
                if let QuotientCheck::Bits { bits, .. } = quotient {
                    t.push(TableKey::Below(1 << bits));
                }
                t
            }
            ChipKey::Clamp { lo, hi } => vec![TableKey::Clamp { lo: *lo, hi: *hi }],
            ChipKey::Map { table } => vec![TableKey::Map(table.clone())],
        }
    }

    /// Gate polynomials for one replica whose cells start at advice column `o`.
    pub(crate) fn gate_polys(&self, col: &dyn Fn(usize) -> u32) -> Vec<Expression> {
        let q = |i: usize| Expression::cur(col(i));
        match self {
            ChipKey::PackEntry | ChipKey::Pack => {
                let mut weight = Fe::ONE;
                let mut terms = Vec::with_capacity(PACK_BYTES);
                for i in 0..PACK_BYTES {
                    terms.push(q(i) * weight);
                    weight *= Fe::from_u64(256);
                }
                vec![q(PACK_BYTES) - Expression::sum_of(terms)]
            }
            ChipKey::Dot { coeffs, offset } => {
                let terms: Vec<Expression> = coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, k)| **k != 0)
                    .map(|(i, k)| if *k == 1 { q(i) } else { q(i) * Fe::from_i64(*k) })
                    .collect();
                let n = coeffs.len();
                vec![q(n) - Expression::sum_of(terms) - Expression::Constant(Fe::from_i64(*offset))]
            }
            ChipKey::Div { divisor, .. } => {
                vec![q(0) - q(1) * Fe::from_u64(*divisor) - q(2)]
            }
            _ => vec![],
        }
    }

    pub(crate) fn lookup_specs(&self, col: &dyn Fn(usize) -> u32) -> Vec<LookupSpec> {
        let q = |i: usize| Expression::cur(col(i));
        match self {
            ChipKey::PackEntry => (0..PACK_BYTES)
                .map(|i| LookupSpec { name: "byte", inputs: vec![q(i)], table: TableKey::Below(256) })
                .collect(),
            ChipKey::Range { bits } => {
                vec![LookupSpec { name: "range", inputs: vec![q(0)], table: TableKey::Below(1 << bits) }]
            }
            ChipKey::Div { divisor, quotient } => {
                let mut v = vec![LookupSpec { name: "remainder", inputs: vec![q(2)], table: TableKey::Below(*divisor) }];
                if let QuotientCheck::Bits { bits, min } = quotient {
                    v.push(LookupSpec {
                        name: "quotient",
                        inputs: vec![q(1) - Expression::Constant(Fe::from_i64(*min))],
                        table: TableKey::Below(1 << bits),
                    });
                }
                v
            }
            ChipKey::Clamp { lo, hi } => vec![LookupSpec {
                name: "clamp",
                inputs: vec![q(0) - Expression::Constant(Fe::from_i64(*lo)), q(1)],
                table: TableKey::Clamp { lo: *lo, hi: *hi },
            }],
            ChipKey::Map { table } => vec![LookupSpec {
                name: "map",
                inputs: vec![q(0), q(1)],
                table: TableKey::Map(table.clone()),
            }],
            ChipKey::Pack | ChipKey::Dot { .. } => vec![],
        }
    }

    /// Cell values for an operation that only fills an unused slot.
    pub(crate) fn filler(&self) -> Vec<Fe> {
        let mut v = vec![Fe::ZERO; self.footprint()];
        match self {
            ChipKey::Dot { coeffs, offset } => v[coeffs.len()] = Fe::from_i64(*offset),
            ChipKey::Div { divisor, quotient: QuotientCheck::Bits { min, .. } } => {
                v[0] = Fe::from_i128(*min as i128 * *divisor as i128);
                v[1] = Fe::from_i64(*min);
            }
            ChipKey::Clamp { lo, .. } => {
                v[0] = Fe::from_i64(*lo);
                v[1] = Fe::from_i64(clamp_u8(*lo));
            }
            ChipKey::Map { table } => v[1] = Fe::from_u64(table[0] as u64),
            _ => {}
        }
        v
    }
}

/// Chips a region uses and how many operations of each one unit needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionShape {
    pub name: String,
    pub units: usize,
    pub chips: Vec<(ChipKey, usize)>,
}

impl RegionShape {
    /// Advice cells one unit occupies across all chips.
    pub fn footprint(&self) -> usize {
        self.chips.iter().map(|(c, m)| c.footprint() * m).sum()
    }

    pub fn height(&self, k: usize) -> u64 {
        self.units.div_ceil(k.max(1)) as u64
    }

    pub fn width(&self, k: usize) -> usize {
        self.footprint() * k
    }
}

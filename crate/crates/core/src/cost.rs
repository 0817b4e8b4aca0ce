//! Static cost model for segment circuits and the row-packing optimizer.
//!
//! The estimate mirrors how [`crate::gadgets::Synthesizer`] allocates columns,
//! selectors and tables, so for a given packing it equals the statistics of
//! the synthesized layout.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{PipelineError, TransformError};
use crate::gadgets::{ChipKey, RegionShape, TableKey, PACK_BYTES};
use crate::ir::{padded_rows, DEFAULT_BLINDING_ROWS};
use crate::poseidon::{hash_region_rows, HASH_GATES};
use crate::transforms::TransformSpec;

const HASH_COLUMNS: usize = 5;
/// Largest advice width the optimizer will consider.
const MAX_ADVICE: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CostConfig {
    pub blinding_rows: u32,
    /// Bytes per field element.
    pub bytes_per_cell: u64,
    /// Prover overhead multiplier applied on top of `bytes_per_cell`.
    pub overhead: u64,
}

impl Default for CostConfig {
    fn default() -> CostConfig {
        CostConfig { blinding_rows: DEFAULT_BLINDING_ROWS, bytes_per_cell: 32, overhead: 4 }
    }
}

/// Which images a segment commits to with an in-circuit hash.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CommitModes {
    pub hash_input: bool,
    pub hash_output: bool,
}

impl CommitModes {
    pub const BOTH: CommitModes = CommitModes { hash_input: true, hash_output: true };
    pub const NONE: CommitModes = CommitModes { hash_input: false, hash_output: false };
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegionPlan {
    /// Chip region; its packing factor is chosen by the optimizer.
    Chips(RegionShape),
    /// Poseidon region over this many field elements.
    Hash(usize),
}

impl RegionPlan {
    pub fn rows(&self, k: usize) -> u64 {
        match self {
            RegionPlan::Chips(s) => s.height(effective_k(s, k)),
            RegionPlan::Hash(n) => hash_region_rows(*n),
        }
    }

    pub fn width(&self, k: usize) -> usize {
        match self {
            RegionPlan::Chips(s) => s.width(effective_k(s, k)),
            RegionPlan::Hash(_) => HASH_COLUMNS,
        }
    }
}

/// The packing factor the synthesizer actually uses.
pub fn effective_k(shape: &RegionShape, k: usize) -> usize {
    k.clamp(1, shape.units.max(1))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostEstimate {
    pub useful_rows: u64,
    pub hash_rows: u64,
    pub transform_rows: u64,
    /// Longest lookup table plus blinding rows.
    pub table_rows: u64,
    pub padded_rows: u32,
    pub advice_columns: usize,
    /// Constant and table columns plus one selector per gate and per lookup.
    pub fixed_columns: usize,
    pub selector_columns: usize,
    pub instance_columns: usize,
    pub gate_count: usize,
    pub lookup_count: usize,
    /// Gates and lookups added by the transforms, excluding image entry and
    /// commitment regions.
    pub transform_gates: usize,
    pub transform_lookups: usize,
    pub table_count: usize,
    pub estimated_cells: u64,
    pub estimated_peak_memory: u64,
}

impl CostEstimate {
    pub fn total_columns(&self) -> usize {
        self.advice_columns + self.fixed_columns + self.instance_columns
    }
}

/// Bytes an image of `dims` occupies as packed field elements.
pub fn packed_len(dims: (u32, u32)) -> usize {
    (dims.0 as usize * dims.1 as usize * 3).div_ceil(PACK_BYTES)
}

pub(crate) fn entry_shape(dims: (u32, u32)) -> RegionShape {
    RegionShape { name: "input".into(), units: packed_len(dims), chips: vec![(ChipKey::PackEntry, 1)] }
}

pub(crate) fn exit_shape(dims: (u32, u32)) -> RegionShape {
    RegionShape { name: "output".into(), units: packed_len(dims), chips: vec![(ChipKey::Pack, 1)] }
}

/// The ordered regions of one segment circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentShape {
    pub in_dims: (u32, u32),
    pub out_dims: (u32, u32),
    pub modes: CommitModes,
    pub regions: Vec<RegionPlan>,
    /// Index of the first region of each transform (and one past the last).
    pub transform_regions: Vec<usize>,
}

impl SegmentShape {
    pub fn new(transforms: &[TransformSpec], in_dims: (u32, u32), modes: CommitModes) -> Result<SegmentShape, TransformError> {
        let mut regions = vec![RegionPlan::Chips(entry_shape(in_dims))];
        if modes.hash_input {
            regions.push(RegionPlan::Hash(packed_len(in_dims)));
        }
        let mut dims = in_dims;
        let mut transform_regions = Vec::with_capacity(transforms.len() + 1);
        for t in transforms {
            transform_regions.push(regions.len());
            regions.extend(t.shapes(dims)?.into_iter().map(RegionPlan::Chips));
            dims = t.output_dims(dims)?;
        }
        transform_regions.push(regions.len());
        if modes.hash_output {
            regions.push(RegionPlan::Chips(exit_shape(dims)));
            regions.push(RegionPlan::Hash(packed_len(dims)));
        }
        Ok(SegmentShape { in_dims, out_dims: dims, modes, regions, transform_regions })
    }

    pub fn baseline_ks(&self) -> Vec<usize> {
        vec![1; self.regions.len()]
    }

    /// Cost of the layout with region `i` packed `ks[i]` units per row.
    pub fn estimate(&self, ks: &[usize], cfg: &CostConfig) -> CostEstimate {
        let k = |i: usize| ks.get(i).copied().unwrap_or(1);
        let mut e = CostEstimate::default();
        let mut chips: BTreeSet<(ChipKey, usize, usize)> = BTreeSet::new();
        let mut tables: BTreeMap<TableKey, ()> = BTreeMap::new();
        let mut constants: BTreeSet<usize> = BTreeSet::from([0]);
        let mut any_hash = false;
        let mut rows = 0u64;
        for (i, r) in self.regions.iter().enumerate() {
            let h = r.rows(k(i));
            rows += h;
            e.advice_columns = e.advice_columns.max(r.width(k(i)));
            match r {
                RegionPlan::Hash(n) => {
                    any_hash = true;
                    constants.insert(*n);
                    e.hash_rows += h;
                }
                RegionPlan::Chips(s) => {
                    let kk = effective_k(s, k(i));
                    let mut offset = 0;
                    for (key, m) in &s.chips {
                        let reps = kk * m;
                        for t in key.tables() {
                            tables.insert(t, ());
                        }
                        chips.insert((key.clone(), offset, reps));
                        offset += reps * key.footprint();
                    }
                    if self.transform_regions.first().is_some_and(|a| i >= *a)
                        && self.transform_regions.last().is_some_and(|b| i < *b)
                    {
                        e.transform_rows += h;
                    }
                }
            }
        }
        for (key, _, reps) in &chips {
            e.gate_count += key.has_gate() as usize;
            e.lookup_count += reps * key.lookups_per_op();
            if !matches!(key, ChipKey::PackEntry | ChipKey::Pack) {
                e.transform_gates += key.has_gate() as usize;
                e.transform_lookups += reps * key.lookups_per_op();
            }
        }
        if any_hash {
            e.gate_count += HASH_GATES;
        }
        let exposed = self.modes.hash_input as u64 + self.modes.hash_output as u64;
        e.instance_columns = (exposed > 0) as usize;
        e.useful_rows = rows.max(constants.len() as u64).max(exposed);
        let max_table = tables.keys().map(|t| t.len()).max();
        e.table_rows = max_table.map_or(0, |l| l + cfg.blinding_rows as u64);
        e.table_count = tables.len();
        e.padded_rows = padded_rows(e.useful_rows.max(max_table.unwrap_or(0)), e.table_rows);
        e.selector_columns = e.gate_count + e.lookup_count;
        e.fixed_columns = 1 + tables.keys().map(|t| t.arity()).sum::<usize>() + e.selector_columns;
        e.estimated_cells = e.padded_rows as u64 * e.total_columns() as u64;
        e.estimated_peak_memory = e.estimated_cells.saturating_mul(cfg.bytes_per_cell * cfg.overhead);
        e
    }

    /// Picks per-region packing factors minimizing estimated cells.
    ///
    /// Each candidate advice budget `w` packs every chip region as wide as
    /// fits (`k = w / footprint`); the one-operation-per-row layout is always
    /// a candidate, so the result is never worse than it.
    pub fn optimize(&self, cfg: &CostConfig) -> (Vec<usize>, CostEstimate) {
        let base = self.baseline_ks();
        let mut best = (base.clone(), self.estimate(&base, cfg));
        let mut budgets = BTreeSet::new();
        for r in &self.regions {
            if let RegionPlan::Chips(s) = r {
                let fp = s.footprint().max(1);
                let mut w = fp;
                while w <= MAX_ADVICE {
                    budgets.insert(w);
                    w *= 2;
                }
            }
        }
        for w in budgets {
            let ks: Vec<usize> = self
                .regions
                .iter()
                .map(|r| match r {
                    RegionPlan::Chips(s) => effective_k(s, (w / s.footprint().max(1)).max(1)),
                    RegionPlan::Hash(_) => 1,
                })
                .collect();
            let e = self.estimate(&ks, cfg);
            if e.estimated_cells < best.1.estimated_cells {
                best = (ks, e);
            }
        }
        best
    }
}

/// Optimized cost of running `transforms` on an `in_dims` input as one segment.
pub fn estimate_cost(
    transforms: &[TransformSpec],
    in_dims: (u32, u32),
    modes: CommitModes,
    cfg: &CostConfig,
) -> Result<CostEstimate, PipelineError> {
    Ok(SegmentShape::new(transforms, in_dims, modes)?.optimize(cfg).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_adds_exact_rows() {
        let t = [TransformSpec::Contrast { factor: 1.5 }];
        let cfg = CostConfig::default();
        let s0 = SegmentShape::new(&t, (16, 8), CommitModes::NONE).unwrap();
        let s1 = SegmentShape::new(&t, (16, 8), CommitModes { hash_input: true, hash_output: false }).unwrap();
        let e0 = s0.estimate(&s0.baseline_ks(), &cfg);
        let e1 = s1.estimate(&s1.baseline_ks(), &cfg);
        assert_eq!(e1.useful_rows - e0.useful_rows, hash_region_rows(packed_len((16, 8))));
        assert_eq!(e0.hash_rows, 0);
        assert_eq!(e0.transform_rows, 128);
    }

    #[test]
    fn copy_only_segment_is_table_bound() {
        let t = [TransformSpec::Crop { x: 0, y: 0, w: 4, h: 4 }];
        let s = SegmentShape::new(&t, (8, 8), CommitModes::NONE).unwrap();
        let e = s.estimate(&s.baseline_ks(), &CostConfig::default());
        // 192 bytes in 7 packed rows; the byte table (256 + 6) sets the height.
        assert_eq!(e.useful_rows, 7);
        assert_eq!(e.padded_rows, 512);
        assert_eq!(e.gate_count, 1);
        assert_eq!(e.lookup_count, PACK_BYTES);
    }

    #[test]
    fn optimizer_never_loses() {
        let cfg = CostConfig::default();
        for t in [TransformSpec::Blur, TransformSpec::Rgb2YCbCr, TransformSpec::Contrast { factor: 2.0 }] {
            let s = SegmentShape::new(std::slice::from_ref(&t), (64, 48), CommitModes::NONE).unwrap();
            let (_, opt) = s.optimize(&cfg);
            let base = s.estimate(&s.baseline_ks(), &cfg);
            assert!(opt.estimated_cells <= base.estimated_cells, "{t}");
        }
    }
}

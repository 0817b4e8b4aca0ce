use std::collections::HashMap;

use super::chips::{clamp_u8, ChipKey, QuotientCheck, RegionShape, TableKey, MAX_TABLE_DOMAIN, PACK_BYTES};
use crate::error::GadgetError;
use crate::field::Fe;
use crate::ir::{
    CellRef, CircuitBuilder, CircuitLayout, Column, GateId, LookupId, WitnessGrid, DEFAULT_BLINDING_ROWS,
    DEFAULT_MAX_DEGREE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthConfig {
    pub max_degree: u32,
    pub blinding_rows: u32,
}

impl Default for SynthConfig {
    fn default() -> SynthConfig {
        SynthConfig { max_degree: DEFAULT_MAX_DEGREE, blinding_rows: DEFAULT_BLINDING_ROWS }
    }
}

/// A compiled circuit together with one satisfying (or not) execution.
pub struct Synthesized {
    pub layout: CircuitLayout,
    pub witness: WitnessGrid,
    pub instance: Vec<Fe>,
}

struct ChipIds {
    gate: Option<GateId>,
    lookups: Vec<LookupId>,
}

struct Slot {
    key: ChipKey,
    offset: usize,
    reps: usize,
    used: usize,
}

struct OpenRegion {
    name: String,
    base: u32,
    height: u32,
    slots: Vec<Slot>,
}

/// Lays gadgets out in vertically stacked regions over a shared pool of
/// advice columns, generating the witness as it goes.
///
/// Inside a region every chip gets `k * m` side-by-side replicas, where `m` is
/// the chip's operations per unit; operation `j` of a chip lands on row
/// `base + j / reps`. Gates and lookups are cached by chip, column offset and
/// replica count so regions with the same placement share selectors.
pub struct Synthesizer {
    pub(crate) b: CircuitBuilder,
    pool: Vec<Column>,
    constants: Column,
    const_cells: HashMap<Fe, CellRef>,
    instance: Option<Column>,
    instance_values: Vec<Fe>,
    pub(crate) cursor: u32,
    chip_ids: HashMap<(ChipKey, usize, usize), ChipIds>,
    tables: HashMap<TableKey, Vec<Column>>,
    pub(crate) hash_gates: Option<Vec<GateId>>,
    region: Option<OpenRegion>,
}

impl Synthesizer {
    pub fn new(config: SynthConfig) -> Result<Synthesizer, GadgetError> {
        let mut b = CircuitBuilder::new(config.max_degree)?.with_blinding_rows(config.blinding_rows);
        let constants = b.fixed_column();
        let zero = CellRef::new(0, constants);
        b.assign_fixed(zero, Fe::ZERO)?;
        Ok(Synthesizer {
            b,
            pool: Vec::new(),
            constants,
            const_cells: HashMap::from([(Fe::ZERO, zero)]),
            instance: None,
            instance_values: Vec::new(),
            cursor: 0,
            chip_ids: HashMap::new(),
            tables: HashMap::new(),
            hash_gates: None,
            region: None,
        })
    }

    pub fn builder(&self) -> &CircuitBuilder {
        &self.b
    }

    pub fn value(&self, cell: CellRef) -> Fe {
        self.b.value(cell)
    }

    pub fn rows_used(&self) -> u32 {
        self.cursor
    }

    pub fn advice_width(&self) -> usize {
        self.pool.len()
    }

    /// The public constant-zero cell.
    pub fn zero(&self) -> CellRef {
        self.const_cells[&Fe::ZERO]
    }

    pub fn constant(&mut self, v: Fe) -> Result<CellRef, GadgetError> {
        if let Some(c) = self.const_cells.get(&v) {
            return Ok(*c);
        }
        let cell = CellRef::new(self.const_cells.len() as u32, self.constants);
        self.b.assign_fixed(cell, v)?;
        self.const_cells.insert(v, cell);
        Ok(cell)
    }

    pub(crate) fn advice(&mut self, i: usize) -> Column {
        while self.pool.len() <= i {
            let c = self.b.advice_column();
            self.pool.push(c);
        }
        self.pool[i]
    }

    pub(crate) fn assign(&mut self, cell: CellRef, v: Fe) -> Result<(), GadgetError> {
        Ok(self.b.assign_advice(cell, v)?)
    }

    pub(crate) fn copy(&mut self, a: CellRef, b: CellRef) -> Result<(), GadgetError> {
        Ok(self.b.add_copy(a, b)?)
    }

    /// Publishes `cell` as the next instance value.
    pub fn expose(&mut self, cell: CellRef) -> Result<usize, GadgetError> {
        let col = match self.instance {
            Some(c) => c,
            None => {
                let c = self.b.instance_column();
                self.instance = Some(c);
                c
            }
        };
        let slot = self.b.expose_instance(col)?;
        self.b.add_copy(cell, slot)?;
        self.instance_values.push(self.b.value(cell));
        Ok(self.instance_values.len() - 1)
    }

    /// An unconstrained advice cell on a fresh row.
    pub fn free_cell(&mut self, v: Fe) -> Result<CellRef, GadgetError> {
        self.ensure_closed()?;
        let cell = CellRef::new(self.cursor, self.advice(0));
        self.assign(cell, v)?;
        self.cursor += 1;
        Ok(cell)
    }

    pub(crate) fn ensure_closed(&self) -> Result<(), GadgetError> {
        match &self.region {
            Some(r) => Err(GadgetError::Region(format!("region `{}` is still open", r.name))),
            None => Ok(()),
        }
    }

    pub(crate) fn table(&mut self, key: &TableKey) -> Result<Vec<Column>, GadgetError> {
        if let Some(t) = self.tables.get(key) {
            return Ok(t.clone());
        }
        let cols: Vec<Column> = (0..key.arity()).map(|_| self.b.fixed_column()).collect();
        for i in 0..key.len() {
            for (c, v) in cols.iter().zip(key.entry(i)) {
                self.b.assign_fixed(CellRef::new(i as u32, *c), v)?;
            }
        }
        self.tables.insert(key.clone(), cols.clone());
        Ok(cols)
    }

    fn chip_ids(&mut self, key: &ChipKey, offset: usize, reps: usize) -> Result<(), GadgetError> {
        let cache_key = (key.clone(), offset, reps);
        if self.chip_ids.contains_key(&cache_key) {
            return Ok(());
        }
        let fp = key.footprint();
        let cols: Vec<u32> = (0..offset + reps * fp).map(|i| self.advice(i).index).collect();
        let mut polys = Vec::new();
        let mut lookups = Vec::new();
        for r in 0..reps {
            let base = offset + r * fp;
            let col = |i: usize| cols[base + i];
            polys.extend(key.gate_polys(&col));
            for spec in key.lookup_specs(&col) {
                let table = self.table(&spec.table)?;
                let name = format!("{}/{}@{}", key.name(), spec.name, base);
                lookups.push(self.b.add_lookup(name, spec.inputs, &table)?);
            }
        }
        let gate = if polys.is_empty() {
            None
        } else {
            Some(self.b.add_gate(format!("{}@{}x{}", key.name(), offset, reps), polys)?)
        };
        self.chip_ids.insert(cache_key, ChipIds { gate, lookups });
        Ok(())
    }

    /// Opens a region for `shape.units` units packed `k` per row.
    pub fn open_region(&mut self, shape: &RegionShape, k: usize) -> Result<(), GadgetError> {
        self.ensure_closed()?;
        let k = k.clamp(1, shape.units.max(1));
        for (key, _) in &shape.chips {
            validate_chip(key)?;
        }
        let height = shape.height(k) as u32;
        let mut offset = 0;
        let mut slots = Vec::with_capacity(shape.chips.len());
        for (key, m) in &shape.chips {
            let reps = k * m;
            self.chip_ids(key, offset, reps)?;
            slots.push(Slot { key: key.clone(), offset, reps, used: 0 });
            offset += reps * key.footprint();
        }
        let base = self.cursor;
        for s in &slots {
            let ids = &self.chip_ids[&(s.key.clone(), s.offset, s.reps)];
            let rows = base..base + height;
            if let Some(g) = ids.gate {
                self.b.enable_gate_rows(g, rows.clone())?;
            }
            for l in ids.lookups.clone() {
                self.b.enable_lookup_rows(l, rows.clone())?;
            }
        }
        self.region = Some(OpenRegion { name: shape.name.clone(), base, height, slots });
        Ok(())
    }

    /// Closes the open region, filling unused operation slots.
    pub fn close_region(&mut self) -> Result<(), GadgetError> {
        let r = self
            .region
            .take()
            .ok_or_else(|| GadgetError::Region("no region is open".into()))?;
        for s in &r.slots {
            let capacity = r.height as usize * s.reps;
            let filler = s.key.filler();
            for j in s.used..capacity {
                let (row, base) = (r.base + (j / s.reps) as u32, s.offset + (j % s.reps) * s.key.footprint());
                for (i, v) in filler.iter().enumerate() {
                    let cell = CellRef::new(row, self.advice(base + i));
                    self.assign(cell, *v)?;
                }
            }
        }
        self.cursor = r.base + r.height;
        Ok(())
    }

    /// Next free operation of chip `chip`; returns the cells it owns.
    fn place(&mut self, chip: usize, want: &str) -> Result<(ChipKey, Vec<CellRef>), GadgetError> {
        let r = self
            .region
            .as_mut()
            .ok_or_else(|| GadgetError::Region("operation outside a region".into()))?;
        let s = r
            .slots
            .get_mut(chip)
            .ok_or_else(|| GadgetError::Region(format!("region `{}` has no chip {chip}", r.name)))?;
        if s.key.name() != want {
            return Err(GadgetError::Region(format!("chip {chip} is `{}`, not `{want}`", s.key.name())));
        }
        let capacity = r.height as usize * s.reps;
        if s.used >= capacity {
            return Err(GadgetError::Region(format!("region `{}` chip {chip} is full", r.name)));
        }
        let j = s.used;
        s.used += 1;
        let row = r.base + (j / s.reps) as u32;
        let base = s.offset + (j % s.reps) * s.key.footprint();
        let key = s.key.clone();
        let cells = (0..key.footprint()).map(|i| CellRef::new(row, self.advice(base + i))).collect();
        Ok((key, cells))
    }

    fn copy_in(&mut self, src: CellRef, dst: CellRef) -> Result<Fe, GadgetError> {
        let v = self.b.value(src);
        self.assign(dst, v)?;
        self.copy(src, dst)?;
        Ok(v)
    }

    /// Introduces up to 31 private bytes, range-checks them and packs them.
    pub fn op_pack_entry(&mut self, chip: usize, bytes: &[u8]) -> Result<(Vec<CellRef>, CellRef), GadgetError> {
        if bytes.len() > PACK_BYTES {
            return Err(GadgetError::TooManyBytes(bytes.len()));
        }
        let (_, cells) = self.place(chip, "pack_entry")?;
        let zero = self.zero();
        for i in 0..PACK_BYTES {
            let v = bytes.get(i).copied().unwrap_or(0);
            self.assign(cells[i], Fe::from_u64(v as u64))?;
            if i >= bytes.len() {
                self.copy(zero, cells[i])?;
            }
        }
        let e = cells[PACK_BYTES];
        self.assign(e, pack_value(bytes))?;
        Ok((cells[..bytes.len()].to_vec(), e))
    }

    /// Packs up to 31 already-constrained byte cells.
    pub fn op_pack(&mut self, chip: usize, bytes: &[CellRef]) -> Result<CellRef, GadgetError> {
        if bytes.len() > PACK_BYTES {
            return Err(GadgetError::TooManyBytes(bytes.len()));
        }
        let (_, cells) = self.place(chip, "pack")?;
        let zero = self.zero();
        let mut raw = Vec::with_capacity(bytes.len());
        for i in 0..PACK_BYTES {
            let src = bytes.get(i).copied().unwrap_or(zero);
            let v = self.copy_in(src, cells[i])?;
            if i < bytes.len() {
                raw.push(v);
            }
        }
        let e = cells[PACK_BYTES];
        self.assign(e, pack_fe(&raw))?;
        Ok(e)
    }

    pub fn op_range(&mut self, chip: usize, x: CellRef) -> Result<CellRef, GadgetError> {
        let (_, cells) = self.place(chip, "range")?;
        self.copy_in(x, cells[0])?;
        Ok(cells[0])
    }

    pub fn op_dot(&mut self, chip: usize, inputs: &[CellRef]) -> Result<CellRef, GadgetError> {
        let (key, cells) = self.place(chip, "dot")?;
        let ChipKey::Dot { coeffs, offset } = key else { unreachable!() };
        if inputs.len() != coeffs.len() {
            return Err(GadgetError::LengthMismatch { inputs: inputs.len(), coeffs: coeffs.len() });
        }
        let mut acc = Fe::from_i64(offset);
        for (i, (src, k)) in inputs.iter().zip(&coeffs).enumerate() {
            let v = self.copy_in(*src, cells[i])?;
            acc += v * Fe::from_i64(*k);
        }
        let y = cells[coeffs.len()];
        self.assign(y, acc)?;
        Ok(y)
    }

    /// Returns `(quotient, remainder)` of floor division by the chip's divisor.
    pub fn op_div(&mut self, chip: usize, c: CellRef) -> Result<(CellRef, CellRef), GadgetError> {
        let (key, cells) = self.place(chip, "div")?;
        let ChipKey::Div { divisor, .. } = key else { unreachable!() };
        let v = self.copy_in(c, cells[0])?;
        let n = v.to_i64().ok_or_else(|| GadgetError::OutOfRange { what: "dividend", value: v.to_hex() })?;
        let d = divisor as i64;
        self.assign(cells[1], Fe::from_i64(n.div_euclid(d)))?;
        self.assign(cells[2], Fe::from_i64(n.rem_euclid(d)))?;
        Ok((cells[1], cells[2]))
    }

    pub fn op_clamp(&mut self, chip: usize, x: CellRef) -> Result<CellRef, GadgetError> {
        let (key, cells) = self.place(chip, "clamp")?;
        let ChipKey::Clamp { lo, hi } = key else { unreachable!() };
        let v = self.copy_in(x, cells[0])?;
        let n = v.to_i64().unwrap_or(i64::MAX);
        if n < lo || n > hi {
            return Err(GadgetError::OutOfRange { what: "clamp input", value: format!("{n}") });
        }
        self.assign(cells[1], Fe::from_i64(clamp_u8(n)))?;
        Ok(cells[1])
    }

    pub fn op_map(&mut self, chip: usize, x: CellRef) -> Result<CellRef, GadgetError> {
        let (key, cells) = self.place(chip, "map")?;
        let ChipKey::Map { table } = key else { unreachable!() };
        let v = self.copy_in(x, cells[0])?;
        let n = v.to_u64().filter(|n| *n < 256).ok_or_else(|| GadgetError::OutOfRange { what: "map input", value: v.to_hex() })?;
        self.assign(cells[1], Fe::from_u64(table[n as usize] as u64))?;
        Ok(cells[1])
    }

    fn single<T>(
        &mut self,
        name: &str,
        key: ChipKey,
        f: impl FnOnce(&mut Synthesizer) -> Result<T, GadgetError>,
    ) -> Result<T, GadgetError> {
        let shape = RegionShape { name: name.into(), units: 1, chips: vec![(key, 1)] };
        self.open_region(&shape, 1)?;
        let out = f(self)?;
        self.close_region()?;
        Ok(out)
    }

    /// Constrains `cell` to `[0, 2^bits)`; one table per width is shared.
    pub fn range_check(&mut self, cell: CellRef, bits: u32) -> Result<(), GadgetError> {
        if bits != 8 && bits != 16 {
            return Err(GadgetError::UnsupportedWidth(bits));
        }
        self.single("range_check", ChipKey::Range { bits }, |s| s.op_range(0, cell)).map(|_| ())
    }

    /// Floor division of a nonnegative `c` by the constant `a`, with the
    /// quotient range-checked to `quotient_bits`.
    pub fn div_const(&mut self, c: CellRef, a: u64, quotient_bits: u32) -> Result<(CellRef, CellRef), GadgetError> {
        if a == 0 {
            return Err(GadgetError::ZeroDivisor);
        }
        if quotient_bits != 8 && quotient_bits != 16 {
            return Err(GadgetError::UnsupportedWidth(quotient_bits));
        }
        let key = ChipKey::Div { divisor: a, quotient: QuotientCheck::Bits { bits: quotient_bits, min: 0 } };
        self.single("div_const", key, |s| s.op_div(0, c))
    }

    pub fn dot_const(&mut self, inputs: &[CellRef], coeffs: &[i64], offset: i64) -> Result<CellRef, GadgetError> {
        if inputs.len() != coeffs.len() || inputs.is_empty() {
            return Err(GadgetError::LengthMismatch { inputs: inputs.len(), coeffs: coeffs.len() });
        }
        let key = ChipKey::Dot { coeffs: coeffs.to_vec(), offset };
        self.single("dot_const", key, |s| s.op_dot(0, inputs))
    }

    pub fn clamp(&mut self, cell: CellRef, lo: i64, hi: i64) -> Result<CellRef, GadgetError> {
        let key = ChipKey::Clamp { lo, hi };
        validate_chip(&key)?;
        self.single("clamp", key, |s| s.op_clamp(0, cell))
    }

    pub fn pack_bytes(&mut self, cells: &[CellRef]) -> Result<CellRef, GadgetError> {
        if cells.len() > PACK_BYTES {
            return Err(GadgetError::TooManyBytes(cells.len()));
        }
        self.single("pack_bytes", ChipKey::Pack, |s| s.op_pack(0, cells))
    }

    pub fn finish(self) -> Result<Synthesized, GadgetError> {
        self.ensure_closed()?;
        let (layout, witness) = self.b.finalize_with_witness();
        Ok(Synthesized { layout, witness, instance: self.instance_values })
    }
}

pub(crate) fn validate_chip(key: &ChipKey) -> Result<(), GadgetError> {
    match key {
        ChipKey::Clamp { lo, hi } if hi < lo || hi - lo + 1 > MAX_TABLE_DOMAIN => {
            Err(GadgetError::BoundTooWide { lo: *lo, hi: *hi })
        }
        ChipKey::Div { divisor: 0, .. } => Err(GadgetError::ZeroDivisor),
        ChipKey::Div { divisor, .. } if *divisor as i64 > MAX_TABLE_DOMAIN => {
            Err(GadgetError::BoundTooWide { lo: 0, hi: *divisor as i64 - 1 })
        }
        ChipKey::Div { quotient: QuotientCheck::Bits { bits, .. }, .. } | ChipKey::Range { bits }
            if *bits != 8 && *bits != 16 =>
        {
            Err(GadgetError::UnsupportedWidth(*bits))
        }
        ChipKey::Dot { coeffs, .. } if coeffs.is_empty() => Err(GadgetError::LengthMismatch { inputs: 0, coeffs: 0 }),
        _ => Ok(()),
    }
}

/// Little-endian packing: `sum(bytes[i] * 256^i)`.
pub fn pack_value(bytes: &[u8]) -> Fe {
    let mut le = [0u8; 32];
    le[..bytes.len()].copy_from_slice(bytes);
    Fe::from_bytes(&le).expect("31 bytes are below the modulus")
}

fn pack_fe(bytes: &[Fe]) -> Fe {
    let mut acc = Fe::ZERO;
    for b in bytes.iter().rev() {
        acc = acc * Fe::from_u64(256) + *b;
    }
    acc
}

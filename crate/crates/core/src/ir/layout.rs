use std::fmt::Write as _;

use bitvec::prelude::*;
use serde::Serialize;

use super::builder::CellUnion;
use super::column::{CellRef, Column, ColumnKind, PagedColumn};
use super::expression::{Expression, Query};
use crate::codec::{Reader, Writer};
use crate::error::CodecError;
use crate::field::Fe;

pub const LAYOUT_MAGIC: &[u8; 4] = b"ZKLY";
pub const LAYOUT_VERSION: u16 = 1;
const MAX_EXPR_DEPTH: usize = 512;

fn selector_runs(s: &BitSlice<u64, Lsb0>) -> Vec<(u32, u32)> {
    let mut runs: Vec<(u32, u32)> = Vec::new();
    for r in s.iter_ones() {
        match runs.last_mut() {
            Some((start, len)) if *start + *len == r as u32 => *len += 1,
            _ => runs.push((r as u32, 1)),
        }
    }
    runs
}

/// Smallest power of two covering both the used rows and the longest
/// lookup table including its blinding rows. Never below one row.
pub fn padded_rows(used_rows: u64, max_table_with_blinding: u64) -> u32 {
    let need = used_rows.max(max_table_with_blinding).max(1);
    need.next_power_of_two() as u32
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CustomGate {
    pub name: String,
    pub polys: Vec<Expression>,
    pub selector: Column,
}

impl CustomGate {
    /// Degree including the implicit selector factor.
    pub fn degree(&self) -> u32 {
        self.polys.iter().map(|p| p.degree()).max().unwrap_or(0) + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LookupArgument {
    pub name: String,
    pub inputs: Vec<Expression>,
    pub table: Vec<Column>,
    /// Number of table rows holding entries (the blinding rows follow).
    pub table_len: u32,
    pub selector: Column,
    pub blinding_rows: u32,
}

/// Copy constraints collapsed into equality classes (each with >= 2 cells).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CopyConstraintSet {
    classes: Vec<Vec<CellRef>>,
}

impl CopyConstraintSet {
    pub fn from_pairs(pairs: &[(CellRef, CellRef)]) -> CopyConstraintSet {
        let mut u = CellUnion::new();
        for (a, b) in pairs {
            u.union(*a, *b);
        }
        CopyConstraintSet { classes: u.classes() }
    }

    pub fn classes(&self) -> &[Vec<CellRef>] {
        &self.classes
    }

    pub fn class_of(&self, cell: CellRef) -> Option<&[CellRef]> {
        self.classes.iter().find(|c| c.binary_search(&cell).is_ok()).map(|c| c.as_slice())
    }

    pub fn num_cells(&self) -> usize {
        self.classes.iter().map(|c| c.len()).sum()
    }
}

/// Field values for every advice column of one circuit execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessGrid {
    rows: u32,
    columns: Vec<PagedColumn>,
}

impl WitnessGrid {
    pub fn new(rows: u32, num_advice: usize) -> WitnessGrid {
        WitnessGrid { rows, columns: vec![PagedColumn::new(); num_advice] }
    }

    pub(crate) fn from_columns(rows: u32, columns: Vec<PagedColumn>) -> WitnessGrid {
        WitnessGrid { rows, columns }
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Value at `row` of the `advice`-th advice column.
    pub fn get(&self, advice: usize, row: usize) -> Fe {
        self.columns[advice].get(row)
    }

    pub fn set(&mut self, advice: usize, row: usize, v: Fe) {
        self.columns[advice].set(row, v);
    }

    pub(crate) fn column(&self, advice: usize) -> &PagedColumn {
        &self.columns[advice]
    }

    pub fn allocated_bytes(&self) -> usize {
        self.columns.iter().map(|c| c.allocated_bytes()).sum()
    }
}

pub(crate) struct LayoutParts {
    pub rows: u32,
    pub max_degree: u32,
    pub blinding_rows: u32,
    pub columns: Vec<Column>,
    pub gates: Vec<CustomGate>,
    pub lookups: Vec<LookupArgument>,
    pub copies: CopyConstraintSet,
    pub fixed: Vec<PagedColumn>,
    pub selectors: Vec<BitVec<u64, Lsb0>>,
    pub instance_slots: Vec<CellRef>,
}

/// Immutable description of a compiled circuit. Its serialized form is what a
/// verifier would hold as the verification key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitLayout {
    rows: u32,
    max_degree: u32,
    blinding_rows: u32,
    columns: Vec<Column>,
    local: Vec<u32>,
    gates: Vec<CustomGate>,
    lookups: Vec<LookupArgument>,
    copies: CopyConstraintSet,
    fixed: Vec<PagedColumn>,
    selectors: Vec<BitVec<u64, Lsb0>>,
    instance_slots: Vec<CellRef>,
}

/// Summary counts for a layout.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LayoutStats {
    pub rows: u32,
    pub used_rows: u64,
    pub advice_columns: usize,
    pub fixed_columns: usize,
    pub selector_columns: usize,
    pub instance_columns: usize,
    pub gates: usize,
    pub lookups: usize,
    pub tables: usize,
    pub max_table_len: u32,
    pub copy_classes: usize,
    pub copy_cells: usize,
}

impl LayoutStats {
    /// Fixed columns including selectors.
    pub fn fixed_with_selectors(&self) -> usize {
        self.fixed_columns + self.selector_columns
    }

    pub fn total_columns(&self) -> usize {
        self.advice_columns + self.fixed_columns + self.selector_columns + self.instance_columns
    }

    pub fn cells(&self) -> u64 {
        self.rows as u64 * self.total_columns() as u64
    }
}

fn local_indices(columns: &[Column]) -> Vec<u32> {
    let mut counts = [0u32; 4];
    columns
        .iter()
        .map(|c| {
            let t = c.kind.tag() as usize;
            counts[t] += 1;
            counts[t] - 1
        })
        .collect()
}

impl CircuitLayout {
    pub(crate) fn from_parts(p: LayoutParts) -> CircuitLayout {
        let local = local_indices(&p.columns);
        CircuitLayout {
            rows: p.rows,
            max_degree: p.max_degree,
            blinding_rows: p.blinding_rows,
            columns: p.columns,
            local,
            gates: p.gates,
            lookups: p.lookups,
            copies: p.copies,
            fixed: p.fixed,
            selectors: p.selectors,
            instance_slots: p.instance_slots,
        }
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn blinding_rows(&self) -> u32 {
        self.blinding_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn gates(&self) -> &[CustomGate] {
        &self.gates
    }

    pub fn lookups(&self) -> &[LookupArgument] {
        &self.lookups
    }

    pub fn copies(&self) -> &CopyConstraintSet {
        &self.copies
    }

    pub fn instance_slots(&self) -> &[CellRef] {
        &self.instance_slots
    }

    pub fn local_index(&self, column: u32) -> usize {
        self.local[column as usize] as usize
    }

    pub fn num_advice(&self) -> usize {
        self.columns.iter().filter(|c| c.kind == ColumnKind::Advice).count()
    }

    pub fn fixed_value(&self, cell: CellRef) -> Fe {
        self.fixed[self.local_index(cell.column)].get(cell.row as usize)
    }

    pub fn selector_enabled(&self, selector: Column, row: u32) -> bool {
        self.selectors[self.local_index(selector.index)]
            .get(row as usize)
            .map(|b| *b)
            .unwrap_or(false)
    }

    pub fn enabled_rows(&self, selector: Column) -> impl Iterator<Item = u32> + '_ {
        self.selectors[self.local_index(selector.index)].iter_ones().map(|r| r as u32)
    }

    pub fn count_enabled(&self, selector: Column) -> usize {
        self.selectors[self.local_index(selector.index)].count_ones()
    }

    /// Rows that carry any assignment, enabled selector or constrained cell.
    pub fn used_rows(&self) -> u64 {
        let mut used = 0u64;
        for s in &self.selectors {
            if let Some(last) = s.last_one() {
                used = used.max(last as u64 + 1);
            }
        }
        for (g, gate) in self.gates.iter().enumerate() {
            let reach = gate.polys.iter().flat_map(|p| p.queries()).map(|q| q.rotation).max().unwrap_or(0);
            if let Some(last) = self.selectors[self.local_index(self.gates[g].selector.index)].last_one() {
                used = used.max(last as u64 + 1 + reach.max(0) as u64);
            }
        }
        for f in &self.fixed {
            used = used.max(f.len() as u64);
        }
        for c in self.copies.classes.iter().flatten() {
            used = used.max(c.row as u64 + 1);
        }
        for c in &self.instance_slots {
            used = used.max(c.row as u64 + 1);
        }
        used
    }

    pub fn stats(&self) -> LayoutStats {
        let count = |k| self.columns.iter().filter(|c| c.kind == k).count();
        let mut tables: Vec<Vec<u32>> = self.lookups.iter().map(|l| l.table.iter().map(|c| c.index).collect()).collect();
        tables.sort();
        tables.dedup();
        // Lookup-only tables are columns referenced by a lookup; table columns
        // are counted within fixed_columns.
        LayoutStats {
            rows: self.rows,
            used_rows: self.used_rows(),
            advice_columns: count(ColumnKind::Advice),
            fixed_columns: count(ColumnKind::Fixed),
            selector_columns: count(ColumnKind::Selector),
            instance_columns: count(ColumnKind::Instance),
            gates: self.gates.len(),
            lookups: self.lookups.len(),
            tables: tables.len(),
            max_table_len: self.lookups.iter().map(|l| l.table_len).max().unwrap_or(0),
            copy_classes: self.copies.classes.len(),
            copy_cells: self.copies.num_cells(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(LAYOUT_MAGIC);
        w.u16(LAYOUT_VERSION);
        w.u32(self.rows);
        w.u32(self.max_degree);
        w.u32(self.blinding_rows);
        w.u32(self.columns.len() as u32);
        for c in &self.columns {
            w.u8(c.kind.tag());
        }
        w.u32(self.gates.len() as u32);
        for g in &self.gates {
            w.str(&g.name);
            w.u32(g.selector.index);
            w.u32(g.polys.len() as u32);
            for p in &g.polys {
                write_expr(&mut w, p);
            }
        }
        w.u32(self.lookups.len() as u32);
        for l in &self.lookups {
            w.str(&l.name);
            w.u32(l.selector.index);
            w.u32(l.table_len);
            w.u32(l.blinding_rows);
            w.u32(l.table.len() as u32);
            for c in &l.table {
                w.u32(c.index);
            }
            w.u32(l.inputs.len() as u32);
            for e in &l.inputs {
                write_expr(&mut w, e);
            }
        }
        w.u32(self.copies.classes.len() as u32);
        for class in &self.copies.classes {
            w.u32(class.len() as u32);
            for c in class {
                w.u32(c.row);
                w.u32(c.column);
            }
        }
        for f in &self.fixed {
            w.u64(f.len() as u64);
            for r in 0..f.len() {
                w.fe(&f.get(r));
            }
        }
        // Selectors as runs of enabled rows.
        for s in &self.selectors {
            let runs = selector_runs(s);
            w.u32(runs.len() as u32);
            for (start, len) in runs {
                w.u32(start);
                w.u32(len);
            }
        }
        w.u32(self.instance_slots.len() as u32);
        for c in &self.instance_slots {
            w.u32(c.row);
            w.u32(c.column);
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<CircuitLayout, CodecError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != LAYOUT_MAGIC {
            return Err(CodecError::BadMagic);
        }
        let version = r.u16()?;
        if version != LAYOUT_VERSION {
            return Err(CodecError::UnsupportedVersion(version));
        }
        let rows = r.u32()?;
        if !rows.is_power_of_two() {
            return Err(CodecError::Malformed(format!("row count {rows} is not a power of two")));
        }
        let max_degree = r.u32()?;
        let blinding_rows = r.u32()?;
        let ncols = r.count(1)?;
        let mut columns = Vec::with_capacity(ncols);
        for index in 0..ncols {
            let kind = ColumnKind::from_tag(r.u8()?)
                .ok_or_else(|| CodecError::Malformed("unknown column kind".into()))?;
            columns.push(Column { index: index as u32, kind });
        }
        let column_of = |i: u32, want: Option<ColumnKind>| -> Result<Column, CodecError> {
            let c = columns
                .get(i as usize)
                .copied()
                .ok_or_else(|| CodecError::Malformed(format!("column {i} out of range")))?;
            if let Some(k) = want {
                if c.kind != k {
                    return Err(CodecError::Malformed(format!("column {i} has kind {:?}", c.kind)));
                }
            }
            Ok(c)
        };
        let ngates = r.count(12)?;
        let mut gates = Vec::with_capacity(ngates);
        for _ in 0..ngates {
            let name = r.str()?;
            let selector = column_of(r.u32()?, Some(ColumnKind::Selector))?;
            let np = r.count(1)?;
            let mut polys = Vec::with_capacity(np);
            for _ in 0..np {
                polys.push(read_expr(&mut r, ncols as u32, 0)?);
            }
            gates.push(CustomGate { name, polys, selector });
        }
        let nlookups = r.count(24)?;
        let mut lookups = Vec::with_capacity(nlookups);
        for _ in 0..nlookups {
            let name = r.str()?;
            let selector = column_of(r.u32()?, Some(ColumnKind::Selector))?;
            let table_len = r.u32()?;
            let blinding = r.u32()?;
            let nt = r.count(4)?;
            let mut table = Vec::with_capacity(nt);
            for _ in 0..nt {
                table.push(column_of(r.u32()?, Some(ColumnKind::Fixed))?);
            }
            let ni = r.count(1)?;
            let mut inputs = Vec::with_capacity(ni);
            for _ in 0..ni {
                inputs.push(read_expr(&mut r, ncols as u32, 0)?);
            }
            if inputs.len() != table.len() || inputs.is_empty() {
                return Err(CodecError::Malformed(format!("lookup `{name}` arity mismatch")));
            }
            lookups.push(LookupArgument { name, inputs, table, table_len, selector, blinding_rows: blinding });
        }
        let nclasses = r.count(4)?;
        let mut classes = Vec::with_capacity(nclasses);
        for _ in 0..nclasses {
            let n = r.count(8)?;
            let mut class = Vec::with_capacity(n);
            for _ in 0..n {
                let row = r.u32()?;
                let column = r.u32()?;
                column_of(column, None)?;
                if row >= rows {
                    return Err(CodecError::Malformed(format!("copy cell row {row} outside grid")));
                }
                class.push(CellRef { row, column });
            }
            classes.push(class);
        }
        let mut fixed = Vec::new();
        let mut selectors = Vec::new();
        for c in &columns {
            if c.kind == ColumnKind::Fixed {
                let n = r.u64()? as usize;
                if n > rows as usize || n.saturating_mul(32) > r.remaining() {
                    return Err(CodecError::Truncated);
                }
                let mut col = PagedColumn::new();
                for i in 0..n {
                    col.set(i, r.fe()?);
                }
                fixed.push(col);
            }
        }
        for c in &columns {
            if c.kind == ColumnKind::Selector {
                let nruns = r.count(8)?;
                let mut bv = BitVec::<u64, Lsb0>::repeat(false, rows as usize);
                let mut end = 0u64;
                for _ in 0..nruns {
                    let (start, len) = (r.u32()? as u64, r.u32()? as u64);
                    if len == 0 || start < end || start + len > rows as u64 {
                        return Err(CodecError::Malformed("selector runs out of order or outside the grid".into()));
                    }
                    bv[start as usize..(start + len) as usize].fill(true);
                    end = start + len;
                }
                selectors.push(bv);
            }
        }
        let nslots = r.count(8)?;
        let mut instance_slots = Vec::with_capacity(nslots);
        for _ in 0..nslots {
            let row = r.u32()?;
            let col = column_of(r.u32()?, Some(ColumnKind::Instance))?;
            if row >= rows {
                return Err(CodecError::Malformed("instance slot outside grid".into()));
            }
            instance_slots.push(CellRef::new(row, col));
        }
        r.finish()?;
        // Gate rotations must stay in the grid on every enabled row.
        let local = local_indices(&columns);
        for g in &gates {
            let rots: Vec<i32> = g.polys.iter().flat_map(|p| p.queries()).map(|q| q.rotation).collect();
            let (lo, hi) = (rots.iter().copied().min().unwrap_or(0), rots.iter().copied().max().unwrap_or(0));
            let sel = &selectors[local[g.selector.index as usize] as usize];
            if let (Some(first), Some(last)) = (sel.first_one(), sel.last_one()) {
                if (first as i64) + (lo as i64) < 0 || (last as i64) + (hi as i64) >= rows as i64 {
                    return Err(CodecError::Malformed(format!("gate `{}` rotates outside the grid", g.name)));
                }
            }
        }
        Ok(CircuitLayout {
            rows,
            max_degree,
            blinding_rows,
            columns,
            local,
            gates,
            lookups,
            copies: CopyConstraintSet { classes },
            fixed,
            selectors,
            instance_slots,
        })
    }

    /// Human-readable dump of the whole layout. Tables and fixed columns are
    /// truncated to their first `max_rows` entries.
    pub fn debug_dump(&self, max_rows: usize) -> String {
        let mut s = String::new();
        let st = self.stats();
        let _ = writeln!(s, "rows {} (used {}), max degree {}, blinding rows {}", self.rows, st.used_rows, self.max_degree, self.blinding_rows);
        let _ = writeln!(
            s,
            "columns: {} advice, {} fixed, {} selector, {} instance",
            st.advice_columns, st.fixed_columns, st.selector_columns, st.instance_columns
        );
        for c in &self.columns {
            let _ = writeln!(s, "  c{} {:?}", c.index, c.kind);
        }
        let _ = writeln!(s, "gates ({}):", self.gates.len());
        for (i, g) in self.gates.iter().enumerate() {
            let _ = writeln!(
                s,
                "  [{i}] {} selector c{} degree {} enabled on {} rows",
                g.name,
                g.selector.index,
                g.degree(),
                self.count_enabled(g.selector)
            );
            for p in &g.polys {
                let _ = writeln!(s, "      {p} = 0");
            }
        }
        let _ = writeln!(s, "lookups ({}):", self.lookups.len());
        for (i, l) in self.lookups.iter().enumerate() {
            let ins: Vec<String> = l.inputs.iter().map(|e| e.to_string()).collect();
            let tab: Vec<String> = l.table.iter().map(|c| format!("c{}", c.index)).collect();
            let _ = writeln!(
                s,
                "  [{i}] {} selector c{}: ({}) in ({}) len {} + {} blinding",
                l.name,
                l.selector.index,
                ins.join(", "),
                tab.join(", "),
                l.table_len,
                l.blinding_rows
            );
        }
        let _ = writeln!(s, "copy classes ({}):", self.copies.classes.len());
        for class in self.copies.classes.iter().take(max_rows) {
            let cells: Vec<String> = class.iter().map(|c| format!("c{}[{}]", c.column, c.row)).collect();
            let _ = writeln!(s, "  {{{}}}", cells.join(", "));
        }
        if self.copies.classes.len() > max_rows {
            let _ = writeln!(s, "  ... {} more", self.copies.classes.len() - max_rows);
        }
        let _ = writeln!(s, "fixed assignments:");
        for c in self.columns.iter().filter(|c| c.kind == ColumnKind::Fixed) {
            let col = &self.fixed[self.local_index(c.index)];
            let vals: Vec<String> = (0..col.len().min(max_rows))
                .map(|r| match col.get(r).to_i64() {
                    Some(v) => v.to_string(),
                    None => col.get(r).to_string(),
                })
                .collect();
            let more = if col.len() > max_rows { format!(", ... ({} total)", col.len()) } else { String::new() };
            let _ = writeln!(s, "  c{}: [{}{}]", c.index, vals.join(", "), more);
        }
        let slots: Vec<String> = self.instance_slots.iter().map(|c| format!("c{}[{}]", c.column, c.row)).collect();
        let _ = writeln!(s, "instance slots: [{}]", slots.join(", "));
        s
    }
}

fn write_expr(w: &mut Writer, e: &Expression) {
    match e {
        Expression::Constant(c) => {
            w.u8(0);
            w.fe(c);
        }
        Expression::Query(q) => {
            w.u8(1);
            w.u32(q.column);
            w.i32(q.rotation);
        }
        Expression::Neg(a) => {
            w.u8(2);
            write_expr(w, a);
        }
        Expression::Sum(a, b) => {
            w.u8(3);
            write_expr(w, a);
            write_expr(w, b);
        }
        Expression::Product(a, b) => {
            w.u8(4);
            write_expr(w, a);
            write_expr(w, b);
        }
        Expression::Scaled(a, k) => {
            w.u8(5);
            w.fe(k);
            write_expr(w, a);
        }
        Expression::Pow(a, k) => {
            w.u8(6);
            w.u32(*k);
            write_expr(w, a);
        }
    }
}

fn read_expr(r: &mut Reader<'_>, ncols: u32, depth: usize) -> Result<Expression, CodecError> {
    if depth > MAX_EXPR_DEPTH {
        return Err(CodecError::Malformed("expression nesting too deep".into()));
    }
    let d = depth + 1;
    Ok(match r.u8()? {
        0 => Expression::Constant(r.fe()?),
        1 => {
            let column = r.u32()?;
            if column >= ncols {
                return Err(CodecError::Malformed(format!("query of missing column {column}")));
            }
            Expression::Query(Query { column, rotation: r.i32()? })
        }
        2 => Expression::Neg(Box::new(read_expr(r, ncols, d)?)),
        3 => {
            let a = read_expr(r, ncols, d)?;
            Expression::Sum(Box::new(a), Box::new(read_expr(r, ncols, d)?))
        }
        4 => {
            let a = read_expr(r, ncols, d)?;
            Expression::Product(Box::new(a), Box::new(read_expr(r, ncols, d)?))
        }
        5 => {
            let k = r.fe()?;
            Expression::Scaled(Box::new(read_expr(r, ncols, d)?), k)
        }
        6 => {
            let k = r.u32()?;
            if k > 64 {
                return Err(CodecError::Malformed("exponent too large".into()));
            }
            Expression::Pow(Box::new(read_expr(r, ncols, d)?), k)
        }
        t => return Err(CodecError::Malformed(format!("unknown expression tag {t}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_rule_examples() {
        for k in 0..20u32 {
            assert_eq!(padded_rows((1u64 << k) + 1, 0), 1u32 << (k + 1));
            assert_eq!(padded_rows(1u64 << k, 0), 1u32 << k);
        }
        assert_eq!(padded_rows(7, 4 + 6), 16);
        assert_eq!(padded_rows(0, 0), 1);
        // A 2^24-entry table needs 2^24 + t rows, forcing 2^25.
        assert_eq!(padded_rows(10, (1 << 24) + 6), 1 << 25);
    }
}
